//! Exact amplitudes for a free electron exchanging quanta with a single
//! cavity photon mode, a brute-force reference to check them against, and
//! the fiber-mode calculation that supplies the coupling constant.

// `!(x > 0.0)` is how domain checks reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fiber;
pub mod interactions;
pub mod kinematics;
pub mod oracle;
pub mod special;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64;
