//! Discrete-time simulator for intersection auctions, with experiment drivers
//! and CSV output on top of `intersection-core`.

pub mod bench;
pub mod config;
pub mod engine;
pub mod error;
pub mod noise;
pub mod output;
pub mod stats;
pub mod world;

pub use config::{BidPolicy, FileConfig, Mechanism, SimConfig, SweepProtocol, SweepSpec};
pub use engine::{misreport_sweep, run, simulate, Mechanic, RunOutput, SweepOutput};
pub use error::SimError;
pub use noise::LaneNoise;
pub use stats::{
    bin_stats, misreport_grid, paired_bids, paired_grid, BinRow, BinnedStats, HeatCell, Heatmap, UserRecord,
};
pub use world::{Occupant, StepEvents, World};
