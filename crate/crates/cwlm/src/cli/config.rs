//! Declarative scenario configuration.
//!
//! Configs are TOML (or JSON) files; every physical quantity carries an
//! explicit unit suffix in its key (`_us`, `_per_us`, `_rad_per_us`) so that
//! files remain unambiguous when parameters are quoted in mixed units.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CwlmError, Result};
use crate::generator::{
    build_experimental, build_ideal, build_nondemolition, build_two_detector, JointLiouvillian,
    Liouvillian,
};
use crate::linalg::{c, ket_x_minus, ket_x_plus, ket_z_minus, ket_z_plus, Ket, Mat2};
use crate::model::{
    make_post_selector, DetectorParams, ObservableSpec, PostSelection, PostSelector, QubitParams,
    QubitState, ValidationReport,
};
use crate::statistics::{ChiGridSpec, OutputAxis};
use crate::trajectories::TrajectoryModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ideal,
    Experimental,
    Nondemolition,
    TwoDetector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    #[serde(default)]
    pub omega_rad_per_us: f64,
    #[serde(default)]
    pub delta_rad_per_us: f64,
    #[serde(default)]
    pub gamma_d_per_us: f64,
    #[serde(default)]
    pub gamma_up_per_us: f64,
    #[serde(default)]
    pub gamma_down_per_us: f64,
}

/// Either the (t_a, K) closure or the raw correlator constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_a_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_qq_per_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_vv_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_qv: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_vq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_qv: Option<f64>,
}

impl DetectorConfig {
    pub fn from_acquisition_time(t_a_us: f64, quality_k: f64) -> Self {
        Self {
            t_a_us: Some(t_a_us),
            quality_k: Some(quality_k),
            s_qq_per_us: None,
            s_vv_us: None,
            s_qv: None,
            a_vq: None,
            a_qv: None,
        }
    }

    pub fn build(&self) -> Result<DetectorParams> {
        match (self.t_a_us, self.quality_k) {
            (Some(t_a), Some(k)) => {
                if self.s_qq_per_us.is_some() || self.s_vv_us.is_some() {
                    return Err(CwlmError::InvalidParameter(
                        "detector: give either (t_a_us, quality_k) or the raw correlators, not both"
                            .into(),
                    ));
                }
                DetectorParams::from_acquisition_time(t_a, k)
            }
            (None, None) => DetectorParams::new(
                self.s_qq_per_us.ok_or_else(|| miss("detector.s_qq_per_us"))?,
                self.s_vv_us.ok_or_else(|| miss("detector.s_vv_us"))?,
                self.s_qv.unwrap_or(0.0),
                self.a_vq.unwrap_or(1.0),
                self.a_qv.unwrap_or(0.0),
            ),
            _ => Err(CwlmError::InvalidParameter(
                "detector: t_a_us and quality_k must be given together".into(),
            )),
        }
    }
}

fn miss(field: &str) -> CwlmError {
    CwlmError::InvalidParameter(format!("missing required field {field}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    ZPlus,
    ZMinus,
    XPlus,
    XMinus,
    YPlus,
    YMinus,
    MaximallyMixed,
}

impl StateKind {
    pub fn ket(&self) -> Option<Ket> {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            StateKind::ZPlus => Some(ket_z_plus()),
            StateKind::ZMinus => Some(ket_z_minus()),
            StateKind::XPlus => Some(ket_x_plus()),
            StateKind::XMinus => Some(ket_x_minus()),
            StateKind::YPlus => Some(Ket::new(c(inv), crate::linalg::I * c(inv))),
            StateKind::YMinus => Some(Ket::new(c(inv), -crate::linalg::I * c(inv))),
            StateKind::MaximallyMixed => None,
        }
    }

    pub fn state(&self) -> QubitState {
        match self.ket() {
            Some(k) => QubitState::from_ket(&k).expect("built-in kets are normalized"),
            None => QubitState::maximally_mixed(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StateKind::ZPlus => "z_plus",
            StateKind::ZMinus => "z_minus",
            StateKind::XPlus => "x_plus",
            StateKind::XMinus => "x_minus",
            StateKind::YPlus => "y_plus",
            StateKind::YMinus => "y_minus",
            StateKind::MaximallyMixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PostSelectorConfig {
    Identity,
    State { state: StateKind },
    Faulty { state: StateKind, error_probability: f64 },
}

impl PostSelectorConfig {
    pub fn build(&self) -> Result<PostSelector> {
        match self {
            PostSelectorConfig::Identity => Ok(PostSelector::identity()),
            PostSelectorConfig::State { state } => {
                let ket = state.ket().ok_or_else(|| {
                    CwlmError::InvalidParameter("cannot post-select on a mixed state".into())
                })?;
                PostSelector::pure(&ket)
            }
            PostSelectorConfig::Faulty { state, error_probability } => {
                let psi1 = state.ket().ok_or_else(|| {
                    CwlmError::InvalidParameter("cannot post-select on a mixed state".into())
                })?;
                // The erroneous outcome is the orthogonal state.
                let psi2 = Ket::new(-psi1[1].conj(), psi1[0].conj());
                make_post_selector(&PostSelection::Faulty { psi1, psi2, p_e: *error_probability })
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            PostSelectorConfig::Identity => "unconditioned".into(),
            PostSelectorConfig::State { state } => state.label().into(),
            PostSelectorConfig::Faulty { state, .. } => format!("faulty_{}", state.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    SigmaX,
    SigmaY,
    SigmaZ,
}

impl ObservableKind {
    pub fn build(&self) -> ObservableSpec {
        match self {
            ObservableKind::SigmaX => ObservableSpec::sigma_x(),
            ObservableKind::SigmaY => ObservableSpec::sigma_y(),
            ObservableKind::SigmaZ => ObservableSpec::sigma_z(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub observable: ObservableKind,
    pub t_values_us: Vec<f64>,
    #[serde(default)]
    pub frame_rotation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryOptions {
    pub n_traj: usize,
    pub dt_us: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_axis() -> OutputAxis {
    OutputAxis::RescaledO
}

/// Top-level scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit: Option<QubitConfig>,
    pub detector: DetectorConfig,
    /// Second detector of the two-detector model (measures sigma_y).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_y: Option<DetectorConfig>,
    /// Dephasing rate of the nondemolition model; defaults to the detector
    /// back-action rate K / t_a.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondemolition_gamma_per_us: Option<f64>,
    pub initial_state: StateKind,
    pub post_selectors: Vec<PostSelectorConfig>,
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub grid: ChiGridSpec,
    #[serde(default = "default_axis")]
    pub output_axis: OutputAxis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectoryOptions>,
}

/// A validated, fully constructed scenario.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub detector: DetectorParams,
    pub detector_y: Option<DetectorParams>,
    pub qubit: QubitParams,
    pub observable: ObservableSpec,
    pub rho0: QubitState,
    pub selectors: Vec<(String, PostSelector)>,
    pub t_values: Vec<f64>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<Scenario> {
        let detector = self.detector.build()?;
        let detector_y = match (&self.detector_y, self.model) {
            (Some(d), ModelKind::TwoDetector) => Some(d.build()?),
            (Some(_), _) => {
                return Err(CwlmError::InvalidParameter(
                    "detector_y is only meaningful for the two_detector model".into(),
                ))
            }
            (None, ModelKind::TwoDetector) => Some(detector),
            (None, _) => None,
        };
        let qubit = match (&self.qubit, self.model) {
            (Some(q), _) => QubitParams::new(
                q.omega_rad_per_us,
                q.delta_rad_per_us,
                q.gamma_d_per_us,
                q.gamma_up_per_us,
                q.gamma_down_per_us,
            )?,
            (None, ModelKind::Nondemolition) => QubitParams::hamiltonian_only(0.0, 0.0),
            (None, _) => {
                return Err(CwlmError::InvalidParameter(
                    "this model requires a [qubit] section".into(),
                ))
            }
        };
        if self.measurement.t_values_us.is_empty() {
            return Err(CwlmError::InvalidParameter("measurement.t_values_us is empty".into()));
        }
        for &t in &self.measurement.t_values_us {
            if !(t > 0.0) || !t.is_finite() {
                return Err(CwlmError::InvalidParameter(format!("invalid t value {t}")));
            }
        }
        if self.post_selectors.is_empty() {
            return Err(CwlmError::InvalidParameter(
                "at least one post_selector is required (use kind = \"identity\" for none)".into(),
            ));
        }
        let selectors: Result<Vec<(String, PostSelector)>> = self
            .post_selectors
            .iter()
            .map(|p| Ok((p.label(), p.build()?)))
            .collect();
        Ok(Scenario {
            config: self.clone(),
            detector,
            detector_y,
            qubit,
            observable: self.measurement.observable.build(),
            rho0: self.initial_state.state(),
            selectors: selectors?,
            t_values: self.measurement.t_values_us.clone(),
        })
    }

    /// Load from TOML or JSON. JSON sidecars produced by this tool keep the
    /// configuration under a top-level "config" key; that shape is accepted
    /// too, so any sidecar is a valid re-runnable config.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CwlmError::InvalidParameter(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json")
            || text.trim_start().starts_with('{');
        if is_json {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CwlmError::InvalidParameter(format!("{}: {e}", path.display())))?;
            let node = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(node)
                .map_err(|e| CwlmError::InvalidParameter(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text)
                .map_err(|e| CwlmError::InvalidParameter(format!("{}: {e}", path.display())))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

impl Scenario {
    pub fn hamiltonian(&self) -> Mat2 {
        self.qubit.hamiltonian()
    }

    pub fn nondemolition_gamma(&self) -> f64 {
        self.config.nondemolition_gamma_per_us.unwrap_or_else(|| self.detector.gamma())
    }

    pub fn liouvillian(&self) -> Liouvillian {
        match self.config.model {
            ModelKind::Ideal => build_ideal(&self.observable, &self.detector, &self.hamiltonian()),
            ModelKind::Experimental => {
                build_experimental(&self.observable, &self.qubit, &self.detector)
            }
            ModelKind::Nondemolition => {
                build_nondemolition(&self.observable, &self.detector, self.nondemolition_gamma())
            }
            ModelKind::TwoDetector => self
                .joint_liouvillian()
                .expect("two_detector scenario")
                .fix_y(0.0),
        }
    }

    pub fn joint_liouvillian(&self) -> Option<JointLiouvillian> {
        if self.config.model != ModelKind::TwoDetector {
            return None;
        }
        let dy = self.detector_y.as_ref().unwrap_or(&self.detector);
        Some(build_two_detector(&self.qubit, &self.detector, dy, self.qubit_is_bare()))
    }

    fn qubit_is_bare(&self) -> bool {
        self.qubit.gamma_d == 0.0 && self.qubit.gamma_up == 0.0 && self.qubit.gamma_down == 0.0
    }

    pub fn trajectory_model(&self) -> Result<TrajectoryModel> {
        match self.config.model {
            ModelKind::Ideal => {
                TrajectoryModel::ideal(&self.observable, &self.detector, &self.hamiltonian())
            }
            ModelKind::Experimental => {
                TrajectoryModel::experimental(&self.observable, &self.qubit, &self.detector)
            }
            ModelKind::Nondemolition => TrajectoryModel::nondemolition(
                &self.observable,
                &self.detector,
                self.nondemolition_gamma(),
            ),
            ModelKind::TwoDetector => Err(CwlmError::InvalidParameter(
                "trajectory simulation of the two-detector model is not supported".into(),
            )),
        }
    }

    pub fn validation_report(&self) -> Result<ValidationReport> {
        match self.config.model {
            ModelKind::Experimental => {
                crate::model::validate_experimental(&self.qubit, &[&self.detector])
            }
            ModelKind::TwoDetector => {
                let dy = self.detector_y.as_ref().unwrap_or(&self.detector);
                crate::model::validate_experimental(&self.qubit, &[&self.detector, dy])
            }
            _ => crate::model::validate_single_detector(&self.detector),
        }
    }

    /// Post-selector for the given index, optionally rotated into the frame
    /// of the bare qubit Hamiltonian at time t.
    pub fn selector_at(&self, idx: usize, t: f64) -> PostSelector {
        let (_, p) = &self.selectors[idx];
        if self.config.measurement.frame_rotation {
            crate::propagate::rotate_post_selector(p, &self.hamiltonian(), t)
        } else {
            *p
        }
    }
}
