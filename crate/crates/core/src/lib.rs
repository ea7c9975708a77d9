//! Binary regression with log-concave inverse links.
//!
//! * [`data`]: validated data sets, group means, the extended design matrix.
//! * [`links`]: inverse links and a numeric log-concavity check.
//! * [`overlap`]: whether a finite, unique MLE exists (scalar rule and cone LP).
//! * [`mle`]: damped Newton fitting with divergence detection.
//! * [`verify`]: checks relating the fitted slope to the group mean difference,
//!   a brute-force grid oracle, and seeded data generators.

pub mod data;
pub mod error;
pub mod links;
pub mod mle;
pub mod overlap;
pub mod simplex;
pub mod verify;

pub use data::{extended_design, group_stats, Dataset, DesignMatrix, GroupStats};
pub use error::{Error, Result};
pub use links::{certify_log_concavity, GridSpec, InverseLink, Link};
pub use mle::{fit, FitOptions, FitResult, FitStatus, Parameters};
pub use overlap::{cone_overlap, scalar_overlap, OverlapReport, OverlapVerdict};
