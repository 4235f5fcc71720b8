use crate::error::{domain, Error, Result};

/// Subintervals used by [`integrate_segment`].
pub const SEGMENT_INTERVALS: usize = 32;

/// Largest tolerated gap between the 32- and 64-subinterval estimates.
pub const REFINEMENT_TOLERANCE: f64 = 1e-8;

/// Composite Simpson rule with `intervals` (even) subintervals.
pub fn simpson<F>(mut f: F, a: f64, b: f64, intervals: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_bounds(a, b)?;
    if intervals == 0 || intervals % 2 != 0 {
        return Err(domain("Simpson's rule needs a positive even number of subintervals"));
    }
    if a == b {
        return Ok(0.0);
    }
    let h = (b - a) / intervals as f64;
    let mut acc = 0.0;
    for i in 0..=intervals {
        let x = if i == intervals { b } else { a + i as f64 * h };
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * sample(&mut f, x)?;
    }
    Ok(acc * h / 3.0)
}

/// Integrates a smooth function over one bid segment.
///
/// Returns the 32-subinterval composite Simpson estimate. The 64-subinterval
/// estimate is built from the same samples plus the midpoints, and a warning
/// is logged when the two disagree by more than [`REFINEMENT_TOLERANCE`].
pub fn integrate_segment<F>(mut f: F, a: f64, b: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_bounds(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    let fine = 2 * SEGMENT_INTERVALS;
    let h = (b - a) / fine as f64;
    let mut coarse_acc = 0.0;
    let mut fine_acc = 0.0;
    for i in 0..=fine {
        let x = if i == fine { b } else { a + i as f64 * h };
        let y = sample(&mut f, x)?;
        let end = i == 0 || i == fine;
        fine_acc += y * if end {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        if i % 2 == 0 {
            let j = i / 2;
            coarse_acc += y * if end {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
        }
    }
    let coarse = coarse_acc * 2.0 * h / 3.0;
    let refined = fine_acc * h / 3.0;
    if (coarse - refined).abs() > REFINEMENT_TOLERANCE {
        log::warn!(
            "segment quadrature on [{a:e}, {b:e}] differs from its refinement by {:e}",
            (coarse - refined).abs()
        );
    }
    Ok(coarse)
}

fn check_bounds(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("integration bounds".into()));
    }
    if a > b {
        return Err(domain("integration bounds must satisfy a <= b"));
    }
    Ok(())
}

fn sample<F: FnMut(f64) -> Result<f64>>(f: &mut F, x: f64) -> Result<f64> {
    let y = f(x)?;
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite(alloc::format!("integrand at {x:e}")))
    }
}
