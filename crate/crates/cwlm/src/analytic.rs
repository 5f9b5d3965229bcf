//! Closed-form limits used as cross-checks for the numerical pipeline:
//! half-quantized Gaussian superpositions, the zero-overlap anomaly, the
//! sudden-jump generating function and its regularization, the long-time
//! shifted-Gaussian model, and Rabi kinematics.

use crate::error::{CwlmError, Result};
use crate::linalg::{C64, Ket, Mat2};
use crate::model::{DetectorParams, ObservableSpec, QubitState};
use crate::statistics::{Distribution, OutputAxis};

/// Normal density with standard deviation `sigma`.
pub fn gaussian(x: f64, sigma: f64) -> f64 {
    let z = x / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Uniform output grid helper for the analytic distributions.
pub fn uniform_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    let h = (max - min) / (n - 1) as f64;
    (0..n).map(|i| min + i as f64 * h).collect()
}

/// Decomposition weights of the conditioned distribution over shifted
/// Gaussians centred at eigenvalues and their half-sums.
///
/// `w[i][j]` multiplies the Gaussian at (O_i + O_j)/2; the diagonal entries
/// are the classical passage probabilities, the off-diagonal (generally
/// complex, pairwise conjugate) entries carry the interference of the
/// measurement outcomes.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticWeights {
    pub w: [[C64; 2]; 2],
    /// Dimensionless dephasing gamma * T used in the regularization.
    pub gamma_t: f64,
}

impl AnalyticWeights {
    /// Re(W_01 + W_10): the weight of the central half-sum Gaussian.
    pub fn central_weight(&self) -> f64 {
        (self.w[0][1] + self.w[1][0]).re
    }

    pub fn total(&self) -> C64 {
        self.w[0][0] + self.w[0][1] + self.w[1][0] + self.w[1][1]
    }
}

/// Weights W_ij = psi_j psi_i^* rho_ij e^{-gamma T (O_i - O_j)^2 / 2} / W,
/// with W the sum over all ij, in the eigenbasis of `obs`.
///
/// `gamma_t = 0` gives the dephasing-free weights, which require a nonzero
/// overlap between the post-selected state and the evolved density matrix.
pub fn half_sum_weights(
    rho0: &QubitState,
    psi: &Ket,
    obs: &ObservableSpec,
    gamma_t: f64,
) -> Result<AnalyticWeights> {
    if gamma_t < 0.0 {
        return Err(CwlmError::InvalidParameter("gamma_t must be nonnegative".into()));
    }
    // Components in the observable eigenbasis.
    let comp = |i: usize| (obs.eigenvectors[i].adjoint() * psi)[0];
    let rho_el =
        |i: usize, j: usize| (obs.eigenvectors[i].adjoint() * rho0.rho * obs.eigenvectors[j])[0];

    let mut num = [[C64::new(0.0, 0.0); 2]; 2];
    let mut total = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            let gap = obs.eigenvalues[i] - obs.eigenvalues[j];
            let damp = (-gamma_t * gap * gap / 2.0).exp();
            num[i][j] = comp(j) * comp(i).conj() * rho_el(i, j) * damp;
            total += num[i][j];
        }
    }
    if total.norm() <= 1e-14 {
        return Err(CwlmError::ZeroOverlapDenominator(total.norm()));
    }
    let mut w = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            w[i][j] = num[i][j] / total;
        }
    }
    Ok(AnalyticWeights { w, gamma_t })
}

/// P(O) = sum_ij W_ij g(O - (O_i + O_j)/2; sigma).
///
/// Negative central weights produce genuinely negative densities for small
/// sigma; the result is flagged nonphysical rather than clipped.
pub fn half_sum_distribution(
    w: &AnalyticWeights,
    obs: &ObservableSpec,
    sigma: f64,
    grid: &[f64],
) -> Result<Distribution> {
    if !(sigma > 0.0) {
        return Err(CwlmError::InvalidParameter("sigma must be positive".into()));
    }
    let density: Vec<f64> = grid
        .iter()
        .map(|&o| {
            let mut p = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let center = 0.5 * (obs.eigenvalues[i] + obs.eigenvalues[j]);
                    p += w.w[i][j].re * gaussian(o - center, sigma);
                }
            }
            p
        })
        .collect();
    let mut dist = Distribution::from_values(grid.to_vec(), density, OutputAxis::RescaledO);
    dist.nonphysical = dist.density.iter().any(|&p| p < -1e-12);
    Ok(dist)
}

/// Zero-overlap conditioned distribution,
/// P(O) = (1 + ((O/sigma)^2 - 1)/K) g(O; sigma).
///
/// Normalized for any K; nonnegative only for K >= 1, and exactly zero at
/// O = 0 for the ideal detector K = 1.
pub fn zero_overlap_distribution(k: f64, sigma: f64, grid: &[f64]) -> Result<Distribution> {
    if !(k >= 1.0) {
        return Err(CwlmError::InvalidK(k));
    }
    if !(sigma > 0.0) {
        return Err(CwlmError::InvalidParameter("sigma must be positive".into()));
    }
    let density: Vec<f64> = grid
        .iter()
        .map(|&o| {
            let z = o / sigma;
            (1.0 + (z * z - 1.0) / k) * gaussian(o, sigma)
        })
        .collect();
    Ok(Distribution::from_values(grid.to_vec(), density, OutputAxis::RescaledO))
}

/// Sudden-jump conditioned CF for the resonant-drive case,
/// C(chi) = (1 - i chi a_VQ / Omega)^2 e^{-chi^2 T S_VV / 2}.
pub fn sudden_jump_cf(chi: f64, t: f64, d: &DetectorParams, omega: f64) -> Result<C64> {
    if omega == 0.0 {
        return Err(CwlmError::InvalidParameter("sudden-jump CF needs omega != 0".into()));
    }
    let z = C64::new(1.0, -chi * d.a_vq / omega);
    Ok(z * z * C64::new((-d.s_vv * chi * chi * t / 2.0).exp(), 0.0))
}

/// General short-time sudden-jump CF for an arbitrary drive Hamiltonian,
/// measured observable, pure initial state and orthogonal post-selection:
///
/// C(chi) = <psi|H^-|i><i|H^+|psi> / |<psi|H|i>|^2 * e^{-chi^2 T S_VV / 2},
/// H^{+-} = H +- (chi a_VQ / 2) O.
pub fn sudden_jump_cf_general(
    chi: f64,
    t: f64,
    d: &DetectorParams,
    h: &Mat2,
    obs: &ObservableSpec,
    initial: &Ket,
    psi: &Ket,
) -> Result<C64> {
    let overlap = (psi.adjoint() * initial)[0];
    if overlap.norm() > 1e-10 {
        return Err(CwlmError::NonzeroOverlap(overlap.norm()));
    }
    let denom = (psi.adjoint() * h * initial)[0].norm_sqr();
    if denom <= 1e-14 {
        return Err(CwlmError::ZeroOverlapDenominator(denom));
    }
    // H^- = H - (chi a/2) O governs the ket side, H^+ the bra side.
    let h_minus = h - obs.matrix * C64::new(chi * d.a_vq / 2.0, 0.0);
    let h_plus = h + obs.matrix * C64::new(chi * d.a_vq / 2.0, 0.0);
    let num = (psi.adjoint() * h_minus * initial)[0] * (initial.adjoint() * h_plus * psi)[0];
    Ok(num / C64::new(denom, 0.0) * C64::new((-d.s_vv * chi * chi * t / 2.0).exp(), 0.0))
}

/// Cumulants of the sudden-jump CF (drive part only; the Gaussian detector
/// noise adds S_VV T to the second cumulant):
/// kappa_n = -2 (a_VQ / Omega)^n (n-1)!.
pub fn sudden_jump_cumulants(n: usize, a_vq: f64, omega: f64) -> Result<f64> {
    if n == 0 {
        return Err(CwlmError::InvalidParameter("cumulant order must be >= 1".into()));
    }
    if omega == 0.0 {
        return Err(CwlmError::InvalidParameter("omega must be nonzero".into()));
    }
    let factorial: f64 = (1..n).map(|m| m as f64).product();
    Ok(-2.0 * (a_vq / omega).powi(n as i32) * factorial)
}

/// Dephasing-regularized jump CF,
/// C(chi) = (4 gamma + T (Omega - i a_VQ chi)^2) / (4 gamma + T Omega^2)
///          * e^{-chi^2 T S_VV / 2}.
pub fn regularized_jump_cf(chi: f64, t: f64, gamma: f64, omega: f64, d: &DetectorParams) -> C64 {
    let z = C64::new(omega, -d.a_vq * chi);
    let num = C64::new(4.0 * gamma, 0.0) + z * z * C64::new(t, 0.0);
    let den = C64::new(4.0 * gamma + t * omega * omega, 0.0);
    num / den * C64::new((-d.s_vv * chi * chi * t / 2.0).exp(), 0.0)
}

/// Mean rescaled output of the regularized jump, -2 Omega / (4 gamma + T Omega^2).
pub fn regularized_jump_mean(t: f64, gamma: f64, omega: f64) -> f64 {
    -2.0 * omega / (4.0 * gamma + t * omega * omega)
}

/// Regularized-jump distribution on the rescaled axis,
/// P(O) = [K - 1 + (T / 4 t_a)(Omega t_a - 4 O)^2] / [K + T t_a Omega^2 / 4]
///        * g(O; sigma),   sigma^2 = t_a / 4T.
///
/// Here the regularizing dephasing is the detector back-action itself,
/// gamma = S_QQ, so K = gamma t_a >= 1 is required for positivity.
pub fn regularized_jump_distribution(
    t: f64,
    omega: f64,
    d: &DetectorParams,
    grid: &[f64],
) -> Result<Distribution> {
    let k = d.quality_k();
    if !(k >= 1.0) {
        return Err(CwlmError::InvalidK(k));
    }
    let t_a = d.t_a();
    let sigma = d.sigma(t);
    let den = k + t * t_a * omega * omega / 4.0;
    let density: Vec<f64> = grid
        .iter()
        .map(|&o| {
            let lin = omega * t_a - 4.0 * o;
            ((k - 1.0 + t / (4.0 * t_a) * lin * lin) / den) * gaussian(o, sigma)
        })
        .collect();
    Ok(Distribution::from_values(grid.to_vec(), density, OutputAxis::RescaledO))
}

/// Long-time shifted-Gaussian model of the conditioned comparison:
/// difference (S/2)(x / sigma sqrt(2 pi)) e^{-x^2 / 2 sigma^2} and
/// certainty tanh(4 S x), x = O - mean_o.
pub fn long_time_model(
    o_grid: &[f64],
    s: f64,
    mean_o: f64,
    sigma: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(sigma > 0.0) {
        return Err(CwlmError::InvalidParameter("sigma must be positive".into()));
    }
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
    let difference = o_grid
        .iter()
        .map(|&o| {
            let x = o - mean_o;
            0.5 * s * x / (sigma * sqrt_2pi) * (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let certainty = o_grid.iter().map(|&o| (4.0 * s * (o - mean_o)).tanh()).collect();
    Ok((difference, certainty))
}

/// Unconditioned Rabi kinematics at detuning delta:
/// time-averaged <sigma_y> and the probability to end in the flipped state,
/// for a qubit starting in Z+ under H = (Omega/2) sx + (delta/2) sz.
pub fn rabi_kinematics(t: f64, omega: f64, delta: f64) -> Result<(f64, f64)> {
    if omega == 0.0 {
        return Err(CwlmError::InvalidParameter("rabi kinematics need omega != 0".into()));
    }
    let wr = (omega * omega + delta * delta).sqrt();
    let y_avg = if t == 0.0 {
        0.0
    } else {
        -(omega / wr) * (1.0 - (wr * t).cos()) / (wr * t)
    };
    let frac = omega * omega / (wr * wr);
    let p_minus = frac * (wr * t / 2.0).sin().powi(2);
    Ok((y_avg, p_minus))
}
