use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use intersection_core::lane_chain::lane_states;
use intersection_core::pricing::{static_quote, Pricer, WaitModel};
use intersection_core::queue_chain::queue_states;
use intersection_core::{bid_from_hourly_rate, BidDistribution, IntersectionParams, PricingSnapshot};
use intersection_sim::config::parse_prob;
use intersection_sim::output::{self, RuntimeRow};
use intersection_sim::{
    bench, misreport_sweep, run, FileConfig, Mechanism, SimConfig, SimError, SweepProtocol, SweepSpec,
};

#[derive(Parser)]
#[command(name = "intersection", version, about = "Online pricing for single-server intersection auctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one user and print the quote as CSV.
    Price(PriceArgs),
    /// Simulate truthful users and write users.csv and bins.csv.
    Simulate(SimArgs),
    /// Misreport experiment; writes heatmap.csv and one grid per lane.
    Sweep(SweepArgs),
    /// Print the state counts of both chains.
    States {
        #[arg(long)]
        lanes: usize,
    },
    /// Time pricing on random snapshots and write runtime.csv.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Market {
    #[arg(long)]
    lanes: Option<usize>,
    /// Arrival probability per lane, or one value for all lanes; fractions like 1/3 are accepted.
    #[arg(long = "arrival-prob", value_parser = parse_prob)]
    arrival_probs: Vec<f64>,
    /// Lower bound of the value of time, per hour.
    #[arg(long, default_value_t = 5.0)]
    value_low: f64,
    /// Upper bound of the value of time, per hour.
    #[arg(long, default_value_t = 10.0)]
    value_high: f64,
    #[arg(long, default_value_t = 1.0)]
    step_seconds: f64,
}

impl Market {
    fn params(&self, default_lanes: usize, default_p: f64) -> Result<IntersectionParams, SimError> {
        let lanes = self.lanes.unwrap_or(default_lanes);
        let probs = match self.arrival_probs.len() {
            0 => vec![default_p; lanes],
            1 => vec![self.arrival_probs[0]; lanes],
            n if n == lanes => self.arrival_probs.clone(),
            n => return Err(SimError::Config(format!("{n} arrival probabilities given for {lanes} lanes"))),
        };
        let dist = BidDistribution::uniform_hourly(self.value_low, self.value_high, self.step_seconds)?;
        Ok(IntersectionParams::new(lanes, self.step_seconds, probs, dist)?)
    }
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    market: Market,
    #[arg(long, value_enum, default_value_t = Mechanism::Queue)]
    mechanism: Mechanism,
    /// Occupied lane and its declared rate per hour, as LANE=RATE.
    #[arg(long = "occupant", value_parser = parse_occupant)]
    occupants: Vec<(usize, f64)>,
    #[arg(long, default_value_t = 0)]
    focal_lane: usize,
    /// Declared value of time per hour.
    #[arg(long)]
    declared_rate: f64,
    /// True value of time per hour; defaults to the declared rate.
    #[arg(long)]
    true_rate: Option<f64>,
}

fn parse_occupant(s: &str) -> Result<(usize, f64), String> {
    let (lane, rate) = s.split_once('=').ok_or_else(|| format!("expected LANE=RATE, got {s:?}"))?;
    let lane = lane.trim().parse().map_err(|_| format!("invalid lane in {s:?}"))?;
    let rate = rate.trim().parse().map_err(|_| format!("invalid rate in {s:?}"))?;
    Ok((lane, rate))
}

#[derive(Args)]
struct SimArgs {
    /// JSON configuration; other flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    market: Market,
    #[arg(long)]
    mechanism: Option<String>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    true_bins: Option<usize>,
    #[arg(long)]
    declared_bins: Option<usize>,
    /// Estimator for the grid.
    #[arg(long, value_enum)]
    protocol: Option<SweepProtocol>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 3)]
    min_lanes: usize,
    #[arg(long, default_value_t = 8)]
    max_lanes: usize,
    /// Largest lane count for the lane-based mechanism.
    #[arg(long, default_value_t = 5)]
    lane_max_lanes: usize,
    #[arg(long, default_value_t = 100)]
    snapshots: usize,
    #[arg(long, value_parser = parse_prob, default_value = "0.25")]
    arrival_prob: f64,
    #[arg(long = "mechanism", value_enum)]
    mechanisms: Vec<Mechanism>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runtime.csv")]
    out: PathBuf,
}

fn sim_config(args: &SimArgs) -> Result<SimConfig, SimError> {
    let mut config = match &args.config {
        Some(path) => FileConfig::load(path)?.into_sim()?,
        None => SimConfig {
            params: args.market.params(4, 0.25)?,
            mechanism: Mechanism::Queue,
            users: 10_000,
            seed: 0,
            bins: 30,
            sweep: None,
        },
    };
    let m = &args.market;
    if args.config.is_some() && (m.lanes.is_some() || !m.arrival_probs.is_empty()) {
        // Lane and probability flags override the file; the value range stays as configured.
        let lanes = m.lanes.unwrap_or(config.params.lanes);
        let probs = match m.arrival_probs.len() {
            0 => vec![config.params.mean_arrival_prob(); lanes],
            1 => vec![m.arrival_probs[0]; lanes],
            _ => m.arrival_probs.clone(),
        };
        config.params = IntersectionParams::new(lanes, config.params.step_cost, probs, config.params.dist)?;
    }
    if let Some(name) = &args.mechanism {
        config.mechanism = name.parse()?;
    }
    config.users = args.users.unwrap_or(config.users);
    config.seed = args.seed.unwrap_or(config.seed);
    config.bins = args.bins.unwrap_or(config.bins);
    config.validate()?;
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<File>, SimError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_price(args: &PriceArgs) -> Result<(), SimError> {
    let params = args.market.params(3, 1.0 / 3.0)?;
    let step = params.step_cost;
    let declared = bid_from_hourly_rate(args.declared_rate, step)?;
    let true_value = bid_from_hourly_rate(args.true_rate.unwrap_or(args.declared_rate), step)?;
    let occupants = args
        .occupants
        .iter()
        .map(|&(lane, rate)| Ok((lane, bid_from_hourly_rate(rate, step)?)))
        .collect::<Result<Vec<_>, SimError>>()?;
    let snap = PricingSnapshot::new(params.lanes, args.focal_lane, declared, occupants)?;
    let quote = match args.mechanism {
        Mechanism::Static => static_quote(&snap, declared, true_value, &params)?,
        Mechanism::Queue => {
            Pricer::new(&WaitModel::queue_mean(&params), &params)?.quote(&snap, declared, true_value)?
        }
        Mechanism::Lane => {
            Pricer::new(&WaitModel::lane_for(&params, args.focal_lane), &params)?.quote(&snap, declared, true_value)?
        }
    };
    output::write_quote(std::io::stdout().lock(), &quote)
}

fn cmd_simulate(args: &SimArgs) -> Result<(), SimError> {
    let config = sim_config(args)?;
    std::fs::create_dir_all(&args.out)?;
    let out = run(&config)?;
    output::write_users(create(&args.out.join("users.csv"))?, &out.records)?;
    output::write_bins(create(&args.out.join("bins.csv"))?, &out.stats, config.step_seconds())?;
    let n = out.records.len() as f64;
    let gap = out.records.iter().map(|r| r.experienced_wait - r.expected_wait).sum::<f64>() / n;
    let pay = out.records.iter().map(|r| r.payment).sum::<f64>() / n;
    println!(
        "mechanism={} serviced={} arrivals={} queued={} periods={} mean_wait_gap_s={:.4} mean_payment_cents={:.4}",
        config.mechanism.name(),
        out.records.len(),
        out.arrivals,
        out.queued,
        out.periods,
        gap,
        pay * 100.0
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), SimError> {
    let mut config = sim_config(&args.sim)?;
    let mut spec = config.sweep.unwrap_or_default();
    spec = SweepSpec {
        true_bins: args.true_bins.unwrap_or(spec.true_bins),
        declared_bins: args.declared_bins.unwrap_or(spec.declared_bins),
        protocol: args.protocol.unwrap_or(spec.protocol),
    };
    config.sweep = Some(spec);
    config.validate()?;
    std::fs::create_dir_all(&args.sim.out)?;
    let out = misreport_sweep(&config)?;
    let step = config.step_seconds();
    output::write_heatmap(create(&args.sim.out.join("heatmap.csv"))?, &out.all, step)?;
    for (j, map) in out.lanes.iter().enumerate() {
        output::write_heatmap(create(&args.sim.out.join(format!("heatmap_lane{j}.csv")))?, map, step)?;
    }
    let worst = out.all.min_off_diagonal().map_or(f64::NAN, |c| c.relative_pct);
    println!(
        "mechanism={} protocol={} serviced={} grid={}x{} min_relative_cost_pct={:.4}",
        config.mechanism.name(),
        spec.protocol.name(),
        out.run.records.len(),
        spec.true_bins,
        spec.declared_bins,
        worst
    );
    Ok(())
}

fn cmd_states(lanes: usize) -> Result<(), SimError> {
    let q = queue_states(lanes)?.len();
    let z = lane_states(lanes)?.len();
    println!("lanes,queue_states,lane_states");
    println!("{lanes},{q},{z}");
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), SimError> {
    let mechanisms = if args.mechanisms.is_empty() {
        vec![Mechanism::Static, Mechanism::Queue, Mechanism::Lane]
    } else {
        args.mechanisms.clone()
    };
    let mut rows: Vec<RuntimeRow> = Vec::new();
    for lanes in args.min_lanes.max(2)..=args.max_lanes {
        for &m in &mechanisms {
            if m == Mechanism::Lane && lanes > args.lane_max_lanes {
                continue;
            }
            let row = bench::time_mechanism(m, lanes, args.arrival_prob, args.snapshots, args.seed)?;
            log::info!("{} lanes={} mean={:.3e}s", row.mechanism, row.lanes, row.mean_s);
            rows.push(row);
        }
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    output::write_runtime(create(&args.out)?, &rows)?;
    output::write_runtime(std::io::stdout().lock(), &rows)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Price(a) => cmd_price(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::States { lanes } => cmd_states(*lanes),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
