//! Validation of computer models against noisy field data with the Fourier
//! maximum modulus test, together with a Monte Carlo harness, an
//! order-selection baseline and a bundled shear-layer case study.

pub mod baselines;
pub mod basis;
pub mod case_study;
pub mod data;
pub mod density;
pub mod domain;
pub mod error;
pub mod kernel;
pub mod krr;
pub mod quadrature;
mod serde_float;
pub mod sim;
pub mod special;
pub mod validation;

pub use data::{load_dataset, parse_dataset, Dataset};
pub use domain::Domain;
pub use error::{FmmtError, Result};
pub use kernel::MaternParams;
pub use validation::{
    global_and_subdomain_tests, global_test, subdomain_tests, SubdomainReport, TestConfig,
    TestReport,
};
