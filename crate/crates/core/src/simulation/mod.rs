//! Scenario engine that closes the control cascade around the gimbal model.

pub mod bundled;
mod design;
mod engine;
mod profiles;
mod scenario;
mod telemetry;

pub use design::{
    design_controllers, joint_inertia, stabilization_plant, tracking_plant, AxisDesign, Channel, ControllerDesign,
};
pub use engine::{run_scenario, run_scenario_partial, RunOutcome};
pub use profiles::{
    offset_direction, Axis, BaseMotion, BaseMotionProfile, RecordedMotion, SineComponent, TargetProfile,
};
pub use scenario::{
    bench_friction, AxisControllers, BodiesConfig, ControllersConfig, DesignSpecs, InertiaConfig, InitialConfig, JointPair, LoopMode,
    ProfilesConfig, RunConfig, Scenario, SensorsConfig,
};
pub use telemetry::{Signal, TelemetryLog, TelemetryRow, CSV_COLUMNS, CSV_VERSION_LINE};
