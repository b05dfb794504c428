//! Flat, human-editable scenario description.
//!
//! Every key has a default and unknown keys are rejected, so a typo in a gain
//! name is an error rather than a silently ignored line. The same structure
//! deserializes from TOML (command line) and JSON (browser demo).

use serde::{Deserialize, Serialize};

use crate::control::{forward_mount, ControlGains, DofMask};
use crate::dynamics::CameraPose;
use crate::geometry::line_from_point_direction;
use crate::observer::{GainRule, ObserverGains};
use crate::sim::{LineModel, ScenarioConfig};
use crate::{LineError, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mount {
    #[default]
    Identity,
    /// Forward-looking camera on a ground platform.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainRuleName {
    #[default]
    CriticallyDamped,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub seed: u64,
    pub scenario: LineModel,
    pub cube_side: f64,
    pub duration: f64,
    pub dt: f64,
    pub alpha: f64,
    pub gain_rule: GainRuleName,
    /// Diagonal of `H_S` when `gain_rule = "fixed"`.
    pub fixed_gain: [f64; 2],
    pub k1: f64,
    pub k2: f64,
    pub sigma_des_sq: [f64; 2],
    pub active_control: bool,
    /// Actuated platform axes, any subset of "xyz".
    pub linear_axes: String,
    pub angular_axes: String,
    pub mount: Mount,
    pub mount_offset: [f64; 3],
    pub eta_init_range: f64,
    pub exact_init: bool,
    pub meas_noise_std: f64,
    pub nu_init: [f64; 3],
    pub omega_init: [f64; 3],
    pub line_point: Option<[f64; 3]>,
    pub line_direction: Option<[f64; 3]>,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            seed: 0,
            scenario: LineModel::Cube,
            cube_side: 4.0,
            duration: 3.0,
            dt: 1e-3,
            alpha: 2000.0,
            gain_rule: GainRuleName::CriticallyDamped,
            fixed_gain: [10.0, 10.0],
            k1: 1.0,
            k2: 1.0,
            sigma_des_sq: [0.08, 0.18],
            active_control: true,
            linear_axes: "xyz".into(),
            angular_axes: "xyz".into(),
            mount: Mount::Identity,
            mount_offset: [0.0; 3],
            eta_init_range: 1.0,
            exact_init: false,
            meas_noise_std: 0.0,
            nu_init: [0.05, 0.05, 0.05],
            omega_init: [0.0; 3],
            line_point: None,
            line_direction: None,
        }
    }
}

fn parse_axes(key: &str, axes: &str) -> Result<[bool; 3]> {
    let mut out = [false; 3];
    for c in axes.chars() {
        let i = match c {
            'x' => 0,
            'y' => 1,
            'z' => 2,
            _ => {
                return Err(LineError::InvalidParameter(format!(
                    "{key}: unknown axis '{c}' (expected a subset of \"xyz\")"
                )))
            }
        };
        out[i] = true;
    }
    Ok(out)
}

impl ScenarioFile {
    /// Ground-robot preset: near-vertical line, planar base, `σ²_des = [0.2, 0.2]`.
    pub fn planar_robot() -> Self {
        Self {
            scenario: LineModel::NearVertical,
            sigma_des_sq: [0.2, 0.2],
            linear_axes: "xy".into(),
            angular_axes: "z".into(),
            mount: Mount::Forward,
            mount_offset: [0.2, 0.0, 0.8],
            ..Self::default()
        }
    }

    pub fn to_config(&self) -> Result<ScenarioConfig> {
        let gain_rule = match self.gain_rule {
            GainRuleName::CriticallyDamped => GainRule::CriticallyDamped,
            GainRuleName::Fixed => GainRule::Fixed {
                theta: self.fixed_gain[0],
                phi: self.fixed_gain[1],
            },
        };
        let offset = Vec3::from(self.mount_offset);
        let mount = match self.mount {
            Mount::Identity => CameraPose {
                translation: offset,
                ..CameraPose::identity()
            },
            Mount::Forward => forward_mount(offset),
        };
        let line_override = match (self.line_point, self.line_direction) {
            (Some(p), Some(d)) => Some(line_from_point_direction(Vec3::from(p), Vec3::from(d))?),
            (None, None) => None,
            _ => {
                return Err(LineError::InvalidParameter(
                    "line_point and line_direction must be given together".into(),
                ))
            }
        };
        let cfg = ScenarioConfig {
            seed: self.seed,
            line_model: self.scenario,
            cube_side: self.cube_side,
            duration: self.duration,
            dt: self.dt,
            observer: ObserverGains::new(self.alpha, gain_rule)?,
            control: ControlGains::new(self.k1, self.k2, self.sigma_des_sq)?,
            active_control: self.active_control,
            dof_mask: DofMask {
                linear: parse_axes("linear_axes", &self.linear_axes)?,
                angular: parse_axes("angular_axes", &self.angular_axes)?,
            },
            mount,
            eta_init_range: self.eta_init_range,
            exact_init: self.exact_init,
            meas_noise_std: self.meas_noise_std,
            nu_init: Vec3::from(self.nu_init),
            omega_init: Vec3::from(self.omega_init),
            line_override,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
