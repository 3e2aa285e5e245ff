//! Classical loop design and the discrete controllers that run it.

mod cascade;
mod design;
mod discrete;
mod freq;
mod tf;

pub use cascade::{cascade_update, AxisCascade, CascadeOutput};
pub use design::{controller_tf, design_loop, ControllerForm, LoopDesign, LoopSpec, BANDWIDTH_TOLERANCE};
pub use discrete::{tustin_discretize, DiscreteCoefficients, DiscreteController};
pub use freq::{
    analyze_loop, bandwidth, frequency_response, hz_to_rad, is_stable, log_space, margins, poly_roots,
    resonance_peak_db, FreqPoint, LoopAnalysis, Margins,
};
pub use tf::{poly_add, poly_mul, TransferFunction};
