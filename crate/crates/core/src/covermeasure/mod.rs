//! Measure-theoretic side: interval arithmetic, fat Cantor sets, the greedy
//! maximal selection of pre-balls, density of pushed-forward sets, and the
//! decay of finite-time horseshoe trapped sets.

mod cantor;
mod density;
mod intervals;
mod trapped;
mod vitali;

pub use cantor::{build_fat_cantor, FatCantorSet, RemovalSchedule, MAX_STAGES};
pub use density::{
    density_experiment, hausdorff, stratified_centers, BallRecord, DensityConfig, DensityReport,
    DensityStep, EpsilonWitness,
};
pub use intervals::{relative_measure_in_window, IntervalList};
pub use trapped::{
    decay_to_csv, horseshoe_trapped_measure, trapped_measure_decay, TrappedMeasure,
    MIN_BAND_CELLS,
};
pub use vitali::{vitali_select, CoverSelection, CoverWindow};
