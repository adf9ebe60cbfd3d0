//! Experiment runner: trace and scenario files, benchmark sweeps, noise
//! calibration and CSV reports.

pub mod calibrate;
pub mod error;
pub mod report;
pub mod scenario;
pub mod simulate;
pub mod stats;
pub mod sweep;
pub mod trace;

pub use calibrate::{calibrate, CalibrationOptions};
pub use error::{HarnessError, Result};
pub use report::{CellStatus, ExperimentReport, ReportCell};
pub use scenario::Scenario;
pub use simulate::GestureRequest;
pub use sweep::{
    run_direction_sweep, run_registration_sweep, run_resolution_sweep, run_sweep, DirectionAxis,
    RegistrationSweepOptions, ResolutionOptions, SweepOptions, SweepRequest,
};
pub use trace::{Trace, TraceRow};
