//! Evaluation protocol: rank correlation, Fisher averaging, repeated
//! cross-validation, category-constrained feature selection and the
//! operations-per-pixel cost model.

mod correlation;
mod cost;
mod cv;
mod select;

pub use correlation::{average_ranks, fisher_average, pearson, srocc};
pub use cost::{expected_speedup, ops_per_pixel, vmaf_reference_cost, CostReport, VMAF_VIF_TAPS};
pub use cv::{cross_validate, split_indices, CvOptions, CvResult};
pub use select::{exhaustive_select, Candidate, Category, SelectionSpace, SubsetScore};
