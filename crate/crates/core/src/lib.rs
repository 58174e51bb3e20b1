//! Chernoff product approximations of matrix semigroups over non-uniform
//! time partitions.
//!
//! * [`partitions`]: weight rows `(a_{n,i})`, their metrics and generators.
//! * [`linalg`]: dense complex matrices, `e^{tA}`, norms, eigensolver.
//! * [`engine`]: Chernoff families, ordered products, convergence sweeps and
//!   diagnostics.
//! * [`quantum`]: the Gaussian continuous-measurement channel on density
//!   matrices.
//! * [`clt`]: weighted central limit theorem via density-grid convolution.
//! * [`cli`]: batch front-end behind the `chernoff` binary.

pub mod cli;
pub mod clt;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod output;
pub mod partitions;
pub mod quadrature;
pub mod quantum;

pub use error::{Error, Result};
