//! Scenario file loading.
//!
//! Scenarios are TOML documents describing one scene:
//!
//! ```toml
//! [circuit]
//! resistance = 1.0        # ohm
//! resonance_hz = 125e6
//! # frequency_hz = 125e6  # optional, defaults to resonance
//! # inductance_henry = 2e-7
//! load = "matched"        # or a fixed resistance in ohms
//!
//! [coupling]
//! f_factor = 15.0         # or mbar_henry = ...
//! distance_m = 0.4
//!
//! # transmitter_rotation = [1.0, 0.0, 0.0, 0.0]  # quaternion (w, x, y, z)
//!
//! [[receivers]]
//! angle_deg = 0.0         # or position = [x, y, z] at the common distance
//! axis = [0.0, 0.0, 1.0]  # normalized on load
//! priority = 1.0
//! # load = 15.03          # optional per-receiver override
//! ```
//!
//! Unknown fields are rejected.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::circuit::{CircuitParams, LoadPolicy, DEFAULT_INDUCTANCE};
use crate::geometry::{Constellation, Receiver, Rotation, Vec3};

use super::ExperimentError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    circuit: CircuitSection,
    coupling: CouplingSection,
    #[serde(default)]
    transmitter_rotation: Option<[f64; 4]>,
    #[serde(default)]
    receivers: Vec<ReceiverSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitSection {
    resistance: f64,
    resonance_hz: f64,
    #[serde(default)]
    frequency_hz: Option<f64>,
    #[serde(default)]
    inductance_henry: Option<f64>,
    load: LoadField,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LoadField {
    Ohms(f64),
    Named(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingSection {
    #[serde(default)]
    f_factor: Option<f64>,
    #[serde(default)]
    mbar_henry: Option<f64>,
    distance_m: f64,
}

fn default_priority() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReceiverSection {
    #[serde(default)]
    angle_deg: Option<f64>,
    #[serde(default)]
    position: Option<[f64; 3]>,
    axis: [f64; 3],
    #[serde(default = "default_priority")]
    priority: f64,
    #[serde(default)]
    load: Option<f64>,
}

/// A fully validated scene plus its electrical parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: CircuitParams,
    pub constellation: Constellation,
    pub load_policy: LoadPolicy,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ExperimentError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: origin.clone(),
        source,
    })?;
    parse_scenario(&text, &origin)
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, ExperimentError> {
    let parse_err = |message: String| ExperimentError::Parse {
        path: origin.to_string(),
        message,
    };

    let file: ScenarioFile = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;

    let load_policy = match &file.circuit.load {
        LoadField::Ohms(ohms) => LoadPolicy::Fixed(*ohms),
        LoadField::Named(name) if name == "matched" => LoadPolicy::Matched,
        LoadField::Named(name) => {
            return Err(parse_err(format!(
                "circuit.load must be \"matched\" or a resistance in ohms, got \"{name}\""
            )))
        }
    };

    let params = CircuitParams::from_resonance(
        file.circuit.resistance,
        file.circuit.resonance_hz,
        file.circuit.inductance_henry.unwrap_or(DEFAULT_INDUCTANCE),
        file.circuit.frequency_hz,
    )?;

    let distance = file.coupling.distance_m;
    let f_factor = match (file.coupling.f_factor, file.coupling.mbar_henry) {
        (Some(f), None) => f,
        (None, Some(mbar)) => 2.0 * PI * params.frequency() * mbar / params.resistance(),
        (Some(_), Some(_)) => {
            return Err(parse_err(
                "coupling.f_factor and coupling.mbar_henry are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(parse_err(
                "coupling needs either f_factor or mbar_henry".into(),
            ))
        }
    };

    let rotation = match file.transmitter_rotation {
        Some([w, x, y, z]) => {
            if (w * w + x * x + y * y + z * z).sqrt() < 1e-9 {
                return Err(parse_err("transmitter_rotation quaternion is zero".into()));
            }
            Rotation::from_quaternion(w, x, y, z)
        }
        None => Rotation::identity(),
    };
    let tx_basis = [
        rotation.apply(Vec3::X),
        rotation.apply(Vec3::Y),
        rotation.apply(Vec3::Z),
    ];

    let default_load = load_policy.load_ohms(&params, f_factor);
    let mut receivers = Vec::with_capacity(file.receivers.len());
    for (i, r) in file.receivers.iter().enumerate() {
        let axis = Vec3::new(r.axis[0], r.axis[1], r.axis[2]);
        if !(axis.norm() > 0.0 && axis.is_finite()) {
            return Err(parse_err(format!("receivers[{i}].axis must be nonzero")));
        }
        let axis = axis.normalized();
        let position = match (r.angle_deg, r.position) {
            (Some(deg), None) => {
                let rad = deg.to_radians();
                Vec3::new(distance * rad.cos(), distance * rad.sin(), 0.0)
            }
            (None, Some([x, y, z])) => Vec3::new(x, y, z),
            (Some(_), Some(_)) => {
                return Err(parse_err(format!(
                    "receivers[{i}]: angle_deg and position are mutually exclusive"
                )))
            }
            (None, None) => {
                return Err(parse_err(format!(
                    "receivers[{i}] needs either angle_deg or position"
                )))
            }
        };
        let load = r.load.unwrap_or(default_load);
        receivers.push(Receiver::new(position, axis, r.priority, load));
    }

    let constellation = Constellation::new(tx_basis, receivers, distance, f_factor, &params)?;
    Ok(Scenario {
        params,
        constellation,
        load_policy,
    })
}
