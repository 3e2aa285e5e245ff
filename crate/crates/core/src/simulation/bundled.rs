//! Scenario files shipped with the crate, one per bench experiment.

use crate::error::{IspError, Result};

use super::scenario::Scenario;

pub const NAMES: [&str; 6] = [
    "step_yaw",
    "step_pitch",
    "bmi_worstcase",
    "static_jitter",
    "dynamic_jitter",
    "moon_track",
];

pub fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "step_yaw" => include_str!("../../scenarios/step_yaw.toml"),
        "step_pitch" => include_str!("../../scenarios/step_pitch.toml"),
        "bmi_worstcase" => include_str!("../../scenarios/bmi_worstcase.toml"),
        "static_jitter" => include_str!("../../scenarios/static_jitter.toml"),
        "dynamic_jitter" => include_str!("../../scenarios/dynamic_jitter.toml"),
        "moon_track" => include_str!("../../scenarios/moon_track.toml"),
        _ => return None,
    })
}

pub fn load(name: &str) -> Result<Scenario> {
    let text = source(name).ok_or_else(|| {
        IspError::config("scenario", format!("no bundled scenario `{name}` (known: {})", NAMES.join(", ")))
    })?;
    Scenario::from_toml_str(text)
}
