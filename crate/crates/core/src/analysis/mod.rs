//! Measured-data side of the toolkit: trace ingestion, shot-noise
//! normalization, model fitting and device comparison tables.

pub mod fit;
pub mod normalize;
pub mod report;
pub mod trace;

pub use fit::{
    fit_model, fit_theta, fit_theta_with, synthesize, Estimate, FitResult, FreeParam, Observation,
    ResidualMode,
};
pub use normalize::{denormalize, normalize, NormalizedPoint};
pub use report::{render_report, report_row, report_table, ReportInput, ReportRow};
pub use trace::{load_trace, SpectrumTrace, TracePoint};
