use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;

/// Minimum number of grid cells across one horseshoe band.
pub const MIN_BAND_CELLS: usize = 10;

/// Cell fraction above which a cell counts as meeting the set.
const OCCUPIED: f64 = 1e-9;

/// Measure of `T_n = {x : f^k(x) lies in the bands for 0 <= k < n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappedMeasure {
    pub n: usize,
    /// Grid estimate (cell-averaged transfer of the indicator).
    pub estimate: f64,
    /// Total length of grid cells meeting `T_n` in more than rounding noise.
    pub outer: f64,
    /// `(2 / mu)^n`.
    pub exact: f64,
    /// One grid-cell layer on each side.
    pub tolerance: f64,
}

impl TrappedMeasure {
    pub fn within_tolerance(&self) -> bool {
        (self.estimate - self.exact).abs() <= self.tolerance
    }
}

/// The vertical factor of the affine horseshoe is one at finite time, so
/// `T_n` is a product of a horizontal set with `[0, 1]` and only the
/// horizontal factor is tracked, on cells of width `h`.
///
/// Each step replaces the cell densities `u` by
/// `u'(x) = 1_bands(x) u(branch(x))`, averaged over every cell exactly
/// through the prefix integral of `u`.
pub fn trapped_measure_decay(mu: f64, n_max: usize, h: f64, exec: Exec) -> Result<Vec<TrappedMeasure>> {
    if !(mu > 2.0 && mu.is_finite()) {
        return Err(invalid(format!("horseshoe needs mu > 2, got {mu}")));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(invalid(format!("grid resolution must lie in (0, 1), got {h}")));
    }
    let cells = {
        let r = 1.0 / h;
        if (r - r.round()).abs() < 1e-9 * r { r.round() } else { r.ceil() }
    } as usize;
    let dx = 1.0 / cells as f64;
    let band = 1.0 / mu;
    if band < MIN_BAND_CELLS as f64 * dx {
        return Err(Error::ResolutionTooCoarse {
            h,
            band,
            min_cells: MIN_BAND_CELLS,
        });
    }
    let branches = [(0.0, band, 0.0), (1.0 - band, 1.0, mu - 1.0)];

    let mut u = vec![1.0f64; cells];
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let estimate = u.iter().sum::<f64>() * dx;
        let outer = u.iter().filter(|&&v| v > OCCUPIED).count() as f64 * dx;
        out.push(TrappedMeasure {
            n,
            estimate,
            outer,
            exact: (2.0 / mu).powi(n as i32),
            tolerance: 2.0 * dx,
        });
        if n == n_max {
            break;
        }
        let mut prefix = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for v in &u {
            acc += v * dx;
            prefix.push(acc);
        }
        let integral = |y: f64| {
            let y = y.clamp(0.0, 1.0);
            let i = ((y / dx) as usize).min(cells - 1);
            prefix[i] + u[i] * (y - i as f64 * dx)
        };
        u = exec.map_range(cells, |c| {
            let (a, b) = (c as f64 * dx, (c + 1) as f64 * dx);
            let mass: f64 = branches
                .iter()
                .map(|&(lo, hi, offset)| {
                    let (l, r) = (a.max(lo), b.min(hi));
                    if r > l {
                        (integral(mu * r - offset) - integral(mu * l - offset)) / mu
                    } else {
                        0.0
                    }
                })
                .sum();
            (mass / dx).clamp(0.0, 1.0)
        });
    }
    Ok(out)
}

pub fn horseshoe_trapped_measure(mu: f64, n: usize, h: f64) -> Result<TrappedMeasure> {
    Ok(*trapped_measure_decay(mu, n, h, Exec::default())?.last().unwrap())
}

/// CSV with columns `n,estimate,exact,outer`.
pub fn decay_to_csv(rows: &[TrappedMeasure]) -> String {
    crate::io::csv_table(
        &["n", "estimate", "exact", "outer"],
        rows.iter().map(|r| vec![r.n as f64, r.estimate, r.exact, r.outer]),
    )
}
