//! Domain types, unit conventions and parameter validation.
//!
//! Units: hbar = 1 internally; all rates and times in one user-declared time
//! unit (microseconds in the presets). The output axis is by default rescaled
//! to O = V / a_VQ so that results are portable across gain conventions.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CwlmError, Result};
use crate::linalg::{c, dagger, Ket, Mat2, C64, ONE, ZERO};

/// Correlator-level detector constants.
///
/// `s_qq` is the input (back-action) noise, `s_vv` the output noise, `s_qv`
/// the cross noise, `a_vq` the forward gain and `a_qv` the reverse gain
/// (assumed negligible by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub s_qq: f64,
    pub s_vv: f64,
    pub s_qv: f64,
    pub a_vq: f64,
    pub a_qv: f64,
}

impl DetectorParams {
    pub fn new(s_qq: f64, s_vv: f64, s_qv: f64, a_vq: f64, a_qv: f64) -> Result<Self> {
        let d = Self { s_qq, s_vv, s_qv, a_vq, a_qv };
        d.check_finite()?;
        if s_qq < 0.0 || s_vv <= 0.0 {
            return Err(CwlmError::InvalidParameter(
                "noise spectral densities must be nonnegative (s_vv > 0)".into(),
            ));
        }
        if a_vq == 0.0 {
            return Err(CwlmError::InvalidParameter("forward gain a_vq must be nonzero".into()));
        }
        Ok(d)
    }

    /// Default closure used by the experimental presets: the detector is
    /// specified only through its acquisition time and quality factor, with
    /// a_VQ = 1, S_QV = 0, a_QV = 0 and S_VV = t_a a_VQ^2 / 4.
    pub fn from_acquisition_time(t_a: f64, k: f64) -> Result<Self> {
        if t_a <= 0.0 || k <= 0.0 {
            return Err(CwlmError::InvalidParameter("t_a and K must be positive".into()));
        }
        Self::new(k / t_a, t_a / 4.0, 0.0, 1.0, 0.0)
    }

    /// Quantum-limited detector with unit acquisition time.
    pub fn ideal() -> Self {
        Self::from_acquisition_time(1.0, 1.0).unwrap()
    }

    fn check_finite(&self) -> Result<()> {
        for (name, v) in [
            ("s_qq", self.s_qq),
            ("s_vv", self.s_vv),
            ("s_qv", self.s_qv),
            ("a_vq", self.a_vq),
            ("a_qv", self.a_qv),
        ] {
            if !v.is_finite() {
                return Err(CwlmError::NonFiniteParameter(name.into()));
            }
        }
        Ok(())
    }

    /// Measurement-induced dephasing rate gamma = S_QQ / hbar^2.
    pub fn gamma(&self) -> f64 {
        self.s_qq
    }

    /// Acquisition time t_a = 4 S_VV / a_VQ^2.
    pub fn t_a(&self) -> f64 {
        4.0 * self.s_vv / (self.a_vq * self.a_vq)
    }

    /// Detector quality K = gamma t_a; K = 1 is the quantum limit.
    pub fn quality_k(&self) -> f64 {
        self.gamma() * self.t_a()
    }

    /// Gaussian width of the rescaled output for a window of duration `t`:
    /// sigma^2 = t_a / 4 t.
    pub fn sigma(&self, t: f64) -> f64 {
        (self.t_a() / (4.0 * t)).sqrt()
    }
}

/// Drive, detuning and dissipation rates of the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// Rabi frequency (rad / time unit).
    pub omega: f64,
    /// Drive detuning (rad / time unit).
    pub delta: f64,
    /// Pure dephasing rate gamma_d.
    pub gamma_d: f64,
    /// Excitation rate gamma_up.
    pub gamma_up: f64,
    /// Relaxation rate gamma_down.
    pub gamma_down: f64,
}

impl QubitParams {
    pub fn new(omega: f64, delta: f64, gamma_d: f64, gamma_up: f64, gamma_down: f64) -> Result<Self> {
        for (name, v) in [
            ("omega", omega),
            ("delta", delta),
            ("gamma_d", gamma_d),
            ("gamma_up", gamma_up),
            ("gamma_down", gamma_down),
        ] {
            if !v.is_finite() {
                return Err(CwlmError::NonFiniteParameter(name.into()));
            }
        }
        if gamma_d < 0.0 || gamma_up < 0.0 || gamma_down < 0.0 {
            return Err(CwlmError::InvalidParameter("dissipation rates must be nonnegative".into()));
        }
        Ok(Self { omega, delta, gamma_d, gamma_up, gamma_down })
    }

    /// Drive-only qubit (no dissipation).
    pub fn hamiltonian_only(omega: f64, delta: f64) -> Self {
        Self { omega, delta, gamma_d: 0.0, gamma_up: 0.0, gamma_down: 0.0 }
    }

    /// H_q = (hbar/2) Omega sigma_x + (hbar/2) Delta sigma_z.
    pub fn hamiltonian(&self) -> Mat2 {
        crate::linalg::sigma_x() * c(self.omega / 2.0) + crate::linalg::sigma_z() * c(self.delta / 2.0)
    }
}

/// A Hermitian qubit observable with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct ObservableSpec {
    pub matrix: Mat2,
    /// Eigenvalues in descending order.
    pub eigenvalues: [f64; 2],
    /// Orthonormal eigenvectors matching `eigenvalues`.
    pub eigenvectors: [Ket; 2],
}

impl ObservableSpec {
    pub fn new(matrix: Mat2) -> Result<Self> {
        let asym = (matrix - dagger(&matrix)).norm();
        if asym > 1e-12 {
            return Err(CwlmError::InvalidParameter(format!(
                "observable is not Hermitian (asymmetry {asym:e})"
            )));
        }
        let a = matrix[(0, 0)].re;
        let d = matrix[(1, 1)].re;
        let b = matrix[(0, 1)];
        let half_diff = (a - d) / 2.0;
        let disc = (half_diff * half_diff + b.norm_sqr()).sqrt();
        let mean = (a + d) / 2.0;
        let eigenvalues = [mean + disc, mean - disc];

        let eigenvectors = if b.norm() > 1e-14 {
            let mk = |lam: f64| {
                let v = Ket::new(b, c(lam - a));
                v / c(v.norm())
            };
            [mk(eigenvalues[0]), mk(eigenvalues[1])]
        } else if a >= d {
            [Ket::new(ONE, ZERO), Ket::new(ZERO, ONE)]
        } else {
            [Ket::new(ZERO, ONE), Ket::new(ONE, ZERO)]
        };

        let spec = Self { matrix, eigenvalues, eigenvectors };
        let recon = spec.reconstruct();
        if (recon - matrix).norm() > 1e-12 {
            return Err(CwlmError::InvalidParameter("eigendecomposition failed to reconstruct".into()));
        }
        Ok(spec)
    }

    pub fn sigma_x() -> Self {
        Self::new(crate::linalg::sigma_x()).unwrap()
    }

    pub fn sigma_y() -> Self {
        Self::new(crate::linalg::sigma_y()).unwrap()
    }

    pub fn sigma_z() -> Self {
        Self::new(crate::linalg::sigma_z()).unwrap()
    }

    /// Sum_i O_i |i><i|.
    pub fn reconstruct(&self) -> Mat2 {
        let mut m = Mat2::zeros();
        for (lam, v) in self.eigenvalues.iter().zip(self.eigenvectors.iter()) {
            m += (v * v.adjoint()) * c(*lam);
        }
        m
    }
}

/// A density matrix, or a quasi-density matrix produced by chi != 0 evolution.
#[derive(Debug, Clone, Copy)]
pub struct QubitState {
    pub rho: Mat2,
    /// Set when the matrix came out of counting-field evolution and is
    /// exempt from Hermiticity/positivity.
    pub quasi: bool,
}

impl QubitState {
    /// Physical constructor: Hermitian, PSD, unit trace within 1e-12.
    pub fn physical(rho: Mat2) -> Result<Self> {
        let herm = (rho - dagger(&rho)).norm();
        if herm > 1e-12 {
            return Err(CwlmError::InvalidParameter(format!("state not Hermitian ({herm:e})")));
        }
        let tr = (rho[(0, 0)] + rho[(1, 1)]).re;
        if (tr - 1.0).abs() > 1e-12 {
            return Err(CwlmError::InvalidParameter(format!("state trace {tr} != 1")));
        }
        let det = (rho[(0, 0)] * rho[(1, 1)] - rho[(0, 1)] * rho[(1, 0)]).re;
        if rho[(0, 0)].re < -1e-12 || rho[(1, 1)].re < -1e-12 || det < -1e-12 {
            return Err(CwlmError::InvalidParameter("state not positive semidefinite".into()));
        }
        Ok(Self { rho, quasi: false })
    }

    pub fn from_ket(psi: &Ket) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(CwlmError::NotNormalized(norm));
        }
        Self::physical(psi * psi.adjoint())
    }

    pub fn quasi(rho: Mat2) -> Self {
        Self { rho, quasi: true }
    }

    pub fn maximally_mixed() -> Self {
        Self { rho: Mat2::identity() * c(0.5), quasi: false }
    }

    pub fn trace(&self) -> C64 {
        self.rho[(0, 0)] + self.rho[(1, 1)]
    }

    pub fn expect(&self, obs: &Mat2) -> C64 {
        let m = obs * self.rho;
        m[(0, 0)] + m[(1, 1)]
    }
}

/// Final-state filter: a projector, or a faulty-measurement mixture.
#[derive(Debug, Clone, Copy)]
pub struct PostSelector {
    pub op: Mat2,
}

/// Input to [`make_post_selector`].
#[derive(Debug, Clone)]
pub enum PostSelection {
    Pure(Ket),
    Faulty { psi1: Ket, psi2: Ket, p_e: f64 },
}

/// Build a post-selection operator: |Psi><Psi| for an ideal projective
/// readout, or (1 - p_e)|Psi1><Psi1| + p_e|Psi2><Psi2| for a readout that
/// errs with probability p_e.
pub fn make_post_selector(sel: &PostSelection) -> Result<PostSelector> {
    match sel {
        PostSelection::Pure(psi) => {
            let norm = psi.norm();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(CwlmError::NotNormalized(norm));
            }
            Ok(PostSelector { op: psi * psi.adjoint() })
        }
        PostSelection::Faulty { psi1, psi2, p_e } => {
            for psi in [psi1, psi2] {
                let norm = psi.norm();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(CwlmError::NotNormalized(norm));
                }
            }
            if !(0.0..=1.0).contains(p_e) {
                return Err(CwlmError::ProbabilityOutOfRange(*p_e));
            }
            let overlap = psi1.adjoint() * psi2;
            if overlap[0].norm() > 1e-10 {
                return Err(CwlmError::NotOrthogonal(overlap[0].norm()));
            }
            let op = (psi1 * psi1.adjoint()) * c(1.0 - p_e) + (psi2 * psi2.adjoint()) * c(*p_e);
            Ok(PostSelector { op })
        }
    }
}

impl PostSelector {
    pub fn pure(psi: &Ket) -> Result<Self> {
        make_post_selector(&PostSelection::Pure(*psi))
    }

    /// Identity operator: no post-selection.
    pub fn identity() -> Self {
        Self { op: Mat2::identity() }
    }

    pub fn z_plus() -> Self {
        Self::pure(&crate::linalg::ket_z_plus()).unwrap()
    }

    pub fn z_minus() -> Self {
        Self::pure(&crate::linalg::ket_z_minus()).unwrap()
    }
}

/// One inequality (or derived-quantity) check inside a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationCheck {
    pub name: String,
    pub margin: f64,
    pub pass: bool,
}

/// Outcome of the Cauchy-Schwartz parameter validation.
///
/// Validation is advisory by default; callers running in strict mode turn a
/// failed report into an error. The analytic limits (e.g. dissipation-free
/// sudden-jump forms) intentionally sit outside the physical bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
    pub gamma: f64,
    pub t_a: f64,
    pub quality_k: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn into_strict(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            let failed: Vec<_> =
                self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
            Err(CwlmError::ValidationFailed(failed.join(", ")))
        }
    }
}

/// Single-detector Cauchy-Schwartz bound:
/// S_QQ S_VV - |S_QV|^2 >= (hbar^2/4) |a_VQ - a_QV|^2.
pub fn validate_single_detector(d: &DetectorParams) -> Result<ValidationReport> {
    d.check_finite()?;
    let lhs = d.s_qq * d.s_vv - d.s_qv * d.s_qv;
    let rhs = 0.25 * (d.a_vq - d.a_qv).powi(2);
    let margin = lhs - rhs;
    let mut checks = vec![ValidationCheck {
        name: "cauchy_schwartz_single".into(),
        margin,
        pass: margin >= -1e-12 * rhs.max(1.0),
    }];
    if d.s_qv == 0.0 && d.a_qv == 0.0 {
        let k = d.quality_k();
        checks.push(ValidationCheck {
            name: "quality_k_ge_1".into(),
            margin: k - 1.0,
            pass: k >= 1.0 - 1e-12,
        });
    }
    Ok(ValidationReport { checks, gamma: d.gamma(), t_a: d.t_a(), quality_k: d.quality_k() })
}

/// Experimental-model bound for one detector channel:
/// (1/4)(gamma_up + gamma_down) S_VV - |S_QV|^2 >= (hbar^2/4) |a_VQ|^2.
pub fn validate_experimental(q: &QubitParams, detectors: &[&DetectorParams]) -> Result<ValidationReport> {
    for (name, v) in [("gamma_up", q.gamma_up), ("gamma_down", q.gamma_down)] {
        if !v.is_finite() {
            return Err(CwlmError::NonFiniteParameter(name.into()));
        }
    }
    let mut checks = Vec::new();
    for (i, d) in detectors.iter().enumerate() {
        d.check_finite()?;
        let lhs = 0.25 * (q.gamma_up + q.gamma_down) * d.s_vv - d.s_qv * d.s_qv;
        let rhs = 0.25 * d.a_vq * d.a_vq;
        let margin = lhs - rhs;
        checks.push(ValidationCheck {
            name: format!("cauchy_schwartz_experimental_ch{i}"),
            margin,
            pass: margin >= -1e-12 * rhs.max(1.0),
        });
    }
    let d0 = detectors[0];
    Ok(ValidationReport { checks, gamma: d0.gamma(), t_a: d0.t_a(), quality_k: d0.quality_k() })
}

/// A single measurement window.
#[derive(Debug, Clone)]
pub struct MeasurementConfig {
    pub t_total: f64,
    pub observable: ObservableSpec,
    /// Rotate post-selectors by exp(-i H_q T) to cancel trivial Rabi phases.
    pub frame_rotation: bool,
    pub chi_grid: crate::statistics::ChiGridSpec,
}

impl MeasurementConfig {
    pub fn new(
        t_total: f64,
        observable: ObservableSpec,
        frame_rotation: bool,
        chi_grid: crate::statistics::ChiGridSpec,
    ) -> Result<Self> {
        if !(t_total > 0.0) {
            return Err(CwlmError::InvalidParameter("t_total must be positive".into()));
        }
        Ok(Self { t_total, observable, frame_rotation, chi_grid })
    }
}

pub type ComplexMatrix = Matrix2<Complex64>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ket_z_minus, ket_z_plus};
    use approx::assert_relative_eq;

    #[test]
    fn ideal_detector_sits_on_the_bound() {
        // s_qq = 0.25, s_vv = 1, a_vq = 1: K = 1 exactly.
        let d = DetectorParams::new(0.25, 1.0, 0.0, 1.0, 0.0).unwrap();
        let rep = validate_single_detector(&d).unwrap();
        assert!(rep.passed());
        assert_relative_eq!(rep.quality_k, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sub_quantum_limit_detector_fails() {
        let d = DetectorParams::new(0.1, 1.0, 0.0, 1.0, 0.0).unwrap();
        let rep = validate_single_detector(&d).unwrap();
        assert!(!rep.passed());
        assert_relative_eq!(rep.quality_k, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn experimental_parameter_set_k_near_12() {
        // t_a = 184 us, gamma_d = (15.6 us)^-1.
        let d = DetectorParams::from_acquisition_time(184.0, 184.0 / 15.6).unwrap();
        let rep = validate_single_detector(&d).unwrap();
        assert!(rep.passed());
        assert!((rep.quality_k - 11.79).abs() < 0.02, "K = {}", rep.quality_k);
    }

    #[test]
    fn experimental_inequality_arithmetic() {
        let q = QubitParams::new(0.0, 0.0, 0.0, 2.0, 2.0).unwrap();
        let d = DetectorParams::new(0.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        let rep = validate_experimental(&q, &[&d]).unwrap();
        assert!(rep.passed());
        assert_relative_eq!(rep.checks[0].margin, 0.75, epsilon = 1e-15);

        let q_slow = QubitParams::new(0.0, 0.0, 0.0, 0.1, 0.1).unwrap();
        let rep = validate_experimental(&q_slow, &[&d]).unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn paper_rates_pass_experimental_inequality() {
        // Section-IV rates with the default detector closure at t_a = 184 us:
        // S_VV = 46, a_VQ = 1, S_QV = 0. Then (1/4)(1/56 + 1/22.5) * 46 = 0.716 >= 0.25.
        let q = QubitParams::new(200.0 / 184.0, 0.0, 1.0 / 15.6, 1.0 / 56.0, 1.0 / 22.5).unwrap();
        let d = DetectorParams::from_acquisition_time(184.0, 184.0 / 15.6).unwrap();
        let rep = validate_experimental(&q, &[&d]).unwrap();
        assert!(rep.passed(), "margin {}", rep.checks[0].margin);
    }

    #[test]
    fn post_selector_constructors() {
        let p = make_post_selector(&PostSelection::Pure(ket_z_plus())).unwrap();
        assert_relative_eq!(p.op[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.op[(1, 1)].re, 0.0, epsilon = 1e-15);

        let p = make_post_selector(&PostSelection::Faulty {
            psi1: ket_z_plus(),
            psi2: ket_z_minus(),
            p_e: 0.0,
        })
        .unwrap();
        assert_relative_eq!(p.op[(0, 0)].re, 1.0, epsilon = 1e-15);

        let p = make_post_selector(&PostSelection::Faulty {
            psi1: ket_z_plus(),
            psi2: ket_z_minus(),
            p_e: 0.1,
        })
        .unwrap();
        assert_relative_eq!(p.op[(0, 0)].re, 0.9, epsilon = 1e-15);
        assert_relative_eq!(p.op[(1, 1)].re, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn post_selector_rejects_bad_input() {
        let unnorm = Ket::new(c(2.0), ZERO);
        assert!(matches!(
            make_post_selector(&PostSelection::Pure(unnorm)),
            Err(CwlmError::NotNormalized(_))
        ));
        assert!(matches!(
            make_post_selector(&PostSelection::Faulty {
                psi1: ket_z_plus(),
                psi2: ket_z_plus(),
                p_e: 0.1
            }),
            Err(CwlmError::NotOrthogonal(_))
        ));
        assert!(matches!(
            make_post_selector(&PostSelection::Faulty {
                psi1: ket_z_plus(),
                psi2: ket_z_minus(),
                p_e: 1.5
            }),
            Err(CwlmError::ProbabilityOutOfRange(_))
        ));
    }

    #[test]
    fn observable_roundtrip() {
        let obs = ObservableSpec::sigma_y();
        assert_relative_eq!(obs.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(obs.eigenvalues[1], -1.0, epsilon = 1e-14);
        assert!((obs.reconstruct() - obs.matrix).norm() < 1e-12);
    }

    #[test]
    fn nonfinite_inputs_rejected() {
        assert!(matches!(
            DetectorParams::new(f64::NAN, 1.0, 0.0, 1.0, 0.0),
            Err(CwlmError::NonFiniteParameter(_))
        ));
        assert!(matches!(
            QubitParams::new(1.0, f64::INFINITY, 0.0, 0.0, 0.0),
            Err(CwlmError::NonFiniteParameter(_))
        ));
    }
}
