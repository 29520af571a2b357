// Range checks are written as `!(x >= lo)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmatrix;
pub mod error;
pub mod gfield;
pub mod par;
pub mod perturb;
pub mod shots;
pub mod mub;
pub mod oiscan;
pub mod success;
