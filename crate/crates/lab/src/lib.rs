//! Scenario runner, file formats and report emission for `povmwalk`.
//!
//! * [`scenario`]: joint-measurement experiments on lists of input states,
//!   exact or finite-shot, analytic or via compiled walks.
//! * [`sampling`]: multinomial detection counts and Monte-Carlo error bars.
//! * [`external`]: re-analysis of measured data files.
//! * [`formats`]: JSON documents for programs, POVMs and compilations.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod external;
pub mod formats;
pub mod sampling;
pub mod scenario;

pub use error::{LabError, Result};
pub use external::{verify_external, ExternalReport};
pub use sampling::{monte_carlo_errorbars, sample_counts, Counts};
pub use scenario::{run_scenario, Backend, ExperimentReport, NamedState, ScenarioConfig, ScenarioKind};
