//! Timing of tree rebuild-and-query against batched network evaluation,
//! level-set slices and near-surface accuracy against the exact oracle.

mod accuracy;
mod slice;
mod timing;

pub use accuracy::{evaluate_accuracy, near_surface_points, AccuracyReport, Prediction};
pub use slice::{levelset_slice, pgm_byte, SliceGrid, SlicePlane};
pub use timing::{
    crossover, loglog_slope, records_from_csv, records_to_csv, run_benchmark, BenchConfig, BenchMethod, BenchPose,
    BenchRecord, BenchReport, FemPoseSource, OwnedPose, PoseSource, SkinPoseSource,
};
