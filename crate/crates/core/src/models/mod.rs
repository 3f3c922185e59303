//! Target dynamics and sensing models.

mod field;
mod observation;
mod range_bearing;
mod relative;
mod target;

pub use field::{FieldGrid, FieldInterpolation, FieldObservation};
pub use observation::{
    observe_linear, FixedLinearObservation, LinearGaussian, Measurement, ObservationModel,
};
pub use range_bearing::{
    linearize_range_bearing, observe_range_bearing, range_bearing_mean, wrap_angle,
    RangeBearingParams,
};
pub use relative::{sample_relative, sample_round, RelativeMeasurement, RelativeRound};
pub use target::{double_integrator, step_target, TargetModel};
