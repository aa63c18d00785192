use serde::{Deserialize, Serialize};

use super::intervals::IntervalList;
use crate::error::{invalid, Result};

/// Largest supported number of stages (`2^stages` kept intervals).
pub const MAX_STAGES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemovalSchedule {
    /// Smith–Volterra–Cantor: at stage `k` remove the middle `L / 4^k` of
    /// every kept interval.
    Svc,
    /// Removes nothing; the whole host is kept.
    Nothing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatCantorSet {
    pub host: (f64, f64),
    pub schedule: RemovalSchedule,
    pub stages: usize,
    pub kept: IntervalList,
    pub measure: f64,
}

pub fn build_fat_cantor(host_length: f64, stages: usize, schedule: RemovalSchedule) -> Result<FatCantorSet> {
    if !(host_length > 0.0 && host_length.is_finite()) {
        return Err(invalid("host length must be positive"));
    }
    if stages == 0 || stages > MAX_STAGES {
        return Err(invalid(format!("stages must lie in 1..={MAX_STAGES}, got {stages}")));
    }
    let mut kept = vec![(0.0, host_length)];
    if schedule == RemovalSchedule::Svc {
        let mut gap = host_length;
        for _ in 0..stages {
            gap /= 4.0;
            kept = kept
                .into_iter()
                .flat_map(|(a, b)| {
                    let c = 0.5 * (a + b);
                    [(a, c - gap / 2.0), (c + gap / 2.0, b)]
                })
                .collect();
        }
    }
    let kept = IntervalList::new(kept)?;
    let measure = kept.measure();
    Ok(FatCantorSet {
        host: (0.0, host_length),
        schedule,
        stages,
        kept,
        measure,
    })
}
