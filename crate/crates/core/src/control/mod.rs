//! HUM controls, the Lebeau–Robbiano driver and observability constants.

mod driver;
mod gramian;
mod necessity;
mod observability;
mod schedule;

pub use driver::{
    lr_control, partial_control, ControlSignal, LrOptions, LrOutcome, LrReport, PartialControl, WindowControl,
    WindowReport,
};
pub use gramian::{exp_integral, fit_observability, observability_constant, window_gramian, ObservabilityConstant, ObservabilityFit};
pub use necessity::{necessity_experiment, NecessityCurve, NecessityPoint};
pub use observability::{observed_energy, relaxed_observability_check, relaxed_observability_check_with, RelaxedReport};
pub use schedule::{c_rho, lr_schedule, rho_for_epsilon, CaseDiagnostics, ControlPlan, CostRegime, Window};
