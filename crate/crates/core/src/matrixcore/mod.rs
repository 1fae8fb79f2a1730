//! Dense linear algebra used throughout the crate.

pub mod eigen;
pub mod lu;
mod mat;
pub mod structured;
pub mod svd;

pub use mat::{dot, max_abs_vec, norm2, Mat};
pub use svd::{kernel_left, kernel_right, pinv, proj_col, proj_row, rank, svd_with_tol, SvdFactors, TolPolicy};
