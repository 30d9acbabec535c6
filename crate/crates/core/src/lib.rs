//! Steady-state leak localization in networks of parallel pipes.
//!
//! Two junctions are joined by `n` pipes, one of which leaks. Heads and
//! flows are measured only at the junctions. The crate simulates such
//! networks, computes the leak position each pipe would need to explain a
//! measurement, and decides from several measurements which pipe leaks or
//! reports why that cannot be decided.
//!
//! Pipe indices are zero-based throughout the API.

pub mod error;
pub mod exec;
pub mod headloss;
pub mod hydraulics;
pub mod isolation;
pub mod localization;
pub mod roots;
pub mod sensitivity;

pub use error::{Error, Result};
pub use exec::Execution;
pub use headloss::{HeadLoss, PipeSet};
pub use hydraulics::{
    solve_leaky_state, sweep, sweep_with, DataPoint, HydraulicState, LeakFn, LeakSpec, Sweep,
};
pub use isolation::{
    apparent_leak_flow, apparent_leak_head, fit_leak_function, isolate_by_consistency,
    isolate_by_leak_fit, IsolationVerdict, LeakFitResult, PipeFit, Verdict,
};
pub use localization::{
    all_candidates, candidate_position, complete_data_point, estimate_outflow, residual,
    residual_bar, LeakCandidate, PartialDataPoint, Sensor,
};
pub use sensitivity::{
    confusion_flow_curve, confusion_flow_curve_from_nominal, detect_inherent_ambiguity,
    residual_differential, section_resistances, zero_dh_sensitivity, ConfusionFlowCurve,
    ResidualDifferential, SectionResistances,
};
