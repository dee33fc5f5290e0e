//! Special functions, distribution primitives and scalar root finding.
//!
//! Everything here is a pure function of its arguments and safe to call
//! from any number of threads.

mod beta;
mod gamma;
mod normal;
mod root;

pub use beta::{beta_cdf, beta_pdf, beta_quantile, ln_beta};
pub use gamma::{digamma, log_gamma};
pub use normal::{normal_cdf, normal_quantile};
pub use root::{find_root, find_root_with, Bracket, DEFAULT_MAX_ITER, DEFAULT_TOL};
