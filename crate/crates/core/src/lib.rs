//! Frequentist weight-of-evidence estimation for rare haplotype matches.
//!
//! Two estimators of the likelihood ratio for a profile never seen in the
//! reference database are provided:
//!
//! * [`mixture::woe_dl`] fits a discrete Laplace mixture to the database
//!   and plugs the fitted profile probability into `log10(1 / f_x)`.
//! * [`good_turing::woe_gg`] keeps only the singleton and doubleton counts
//!   and estimates `log10(theta_1 / theta_2)`.
//!
//! [`simulator`] measures the error of each against a fully known population.

pub mod disclap;
pub mod estimate;
pub mod good_turing;
pub mod haplotype;
pub mod mixture;
pub mod simulator;

pub use estimate::{Diagnostics, EstimatorError, Method, WoeEstimate};
pub use haplotype::{frequency_spectrum, parse_database, relative_frequency, DataError, Database, FrequencySpectrum, Haplotype};
