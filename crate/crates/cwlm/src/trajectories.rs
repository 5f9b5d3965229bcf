//! Stochastic-trajectory Monte Carlo oracle.
//!
//! The continuous measurement record is unraveled diffusively: the monitored
//! channel c = k O with k = a_VQ / (2 sqrt(S_VV)) carries the detector
//! efficiency 1/K, the remaining decoherence is decomposed into unmonitored
//! Lindblad channels so that the ensemble average reproduces the
//! counting-field master equation exactly. States are advanced with the
//! positivity-preserving scheme of Rouchon and Ralph.

use nalgebra::Matrix3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{CwlmError, Result};
use crate::linalg::{c, dagger, sigma_x, sigma_y, sigma_z, C64, Mat2, I};
use crate::model::{DetectorParams, ObservableSpec, PostSelector, QubitParams, QubitState};
use crate::statistics::{Distribution, OutputAxis};

/// Integration and ensemble controls.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub n_traj: usize,
    pub seed: u64,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, n_traj: usize, seed: u64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(CwlmError::InvalidParameter("dt must be positive".into()));
        }
        if n_traj == 0 {
            return Err(CwlmError::InvalidParameter("n_traj must be positive".into()));
        }
        Ok(Self { dt, n_traj, seed })
    }
}

/// Unraveled model: Hamiltonian, one monitored channel, residual channels.
#[derive(Debug, Clone)]
pub struct TrajectoryModel {
    pub h: Mat2,
    /// Measured observable (sets the record).
    pub obs: Mat2,
    /// Monitoring strength k = a_VQ / (2 sqrt(S_VV)); channel c = k O.
    pub k: f64,
    /// Unmonitored Lindblad channels (rates absorbed into the operators).
    pub residual: Vec<Mat2>,
    pub svv: f64,
    pub a_vq: f64,
}

impl TrajectoryModel {
    /// Non-demolition model: dephasing through the measured operator at
    /// total rate `gamma`; the unmonitored remainder has rate gamma - 1/t_a.
    pub fn nondemolition(obs: &ObservableSpec, d: &DetectorParams, gamma: f64) -> Result<Self> {
        Self::with_obs_dephasing(obs, d, gamma, Mat2::zeros())
    }

    /// Ideal single-coupling model: back-action dephasing at rate S_QQ plus
    /// a drive Hamiltonian.
    pub fn ideal(obs: &ObservableSpec, d: &DetectorParams, h: &Mat2) -> Result<Self> {
        Self::with_obs_dephasing(obs, d, d.s_qq, *h)
    }

    fn with_obs_dephasing(
        obs: &ObservableSpec,
        d: &DetectorParams,
        gamma: f64,
        h: Mat2,
    ) -> Result<Self> {
        let k = d.a_vq / (2.0 * d.s_vv.sqrt());
        let extra = gamma - k * k;
        if extra < -1e-12 {
            return Err(CwlmError::InvalidParameter(format!(
                "dephasing rate {gamma} below the information rate 1/t_a = {}; the record \
                 cannot be unraveled (efficiency would exceed one)",
                k * k
            )));
        }
        let mut residual = Vec::new();
        if extra > 1e-14 {
            residual.push(obs.matrix * c(extra.sqrt()));
        }
        Ok(Self { h, obs: obs.matrix, k, residual, svv: d.s_vv, a_vq: d.a_vq })
    }

    /// Experimental model: intrinsic dephasing, excitation and relaxation.
    /// The monitored channel is carved out of the 3x3 Kossakowski matrix of
    /// the intrinsic noise; the positive remainder becomes unmonitored
    /// channels.
    pub fn experimental(obs: &ObservableSpec, q: &QubitParams, d: &DetectorParams) -> Result<Self> {
        let k = d.a_vq / (2.0 * d.s_vv.sqrt());

        // Kossakowski matrix over the Pauli basis (sx, sy, sz).
        let g1 = q.gamma_up + q.gamma_down;
        let mut kmat = Matrix3::<C64>::zeros();
        kmat[(0, 0)] = c(g1 / 4.0);
        kmat[(1, 1)] = c(g1 / 4.0);
        kmat[(0, 1)] = I * c((q.gamma_down - q.gamma_up) / 4.0);
        kmat[(1, 0)] = -I * c((q.gamma_down - q.gamma_up) / 4.0);
        kmat[(2, 2)] = c(q.gamma_d);

        // Pauli components of the traceless part of O.
        let comp = |s: Mat2| {
            let m = obs.matrix * s;
            (m[(0, 0)] + m[(1, 1)]) * c(0.5)
        };
        let n = [comp(sigma_x()), comp(sigma_y()), comp(sigma_z())];
        for i in 0..3 {
            for j in 0..3 {
                kmat[(i, j)] -= n[i] * n[j].conj() * c(k * k);
            }
        }

        let eig = nalgebra::SymmetricEigen::new(kmat);
        let scale = g1.max(q.gamma_d).max(1e-300);
        let mut residual = Vec::new();
        for m in 0..3 {
            let lam = eig.eigenvalues[m];
            if lam < -1e-10 * scale {
                return Err(CwlmError::InvalidParameter(format!(
                    "monitored channel exceeds the intrinsic noise (Kossakowski eigenvalue \
                     {lam:e}); the record is not unravelable at this efficiency"
                )));
            }
            if lam > 1e-14 * scale {
                let u = eig.eigenvectors.column(m);
                let op = sigma_x() * u[0] + sigma_y() * u[1] + sigma_z() * u[2];
                residual.push(op * c(lam.sqrt()));
            }
        }
        Ok(Self {
            h: q.hamiltonian(),
            obs: obs.matrix,
            k,
            residual,
            svv: d.s_vv,
            a_vq: d.a_vq,
        })
    }

    /// Step bound keeping the scheme well inside its stability region.
    pub fn suggest_dt(&self) -> f64 {
        let h_scale = self.h.norm();
        let mut rate = self.k * self.k * self.obs.norm_squared();
        for l in &self.residual {
            rate += l.norm_squared();
        }
        0.01 / (h_scale + rate + 1.0)
    }
}

/// One simulated record.
#[derive(Debug, Clone)]
pub struct TrajectoryRun {
    /// Time-averaged rescaled output O = (1/ a_VQ T) integral V dt.
    pub o_rescaled: f64,
    /// Terminal post-selection probability Tr(P rho_T).
    pub weight: f64,
    pub accepted: bool,
    pub rho_final: Mat2,
}

/// Simulate one trajectory; `index` selects a dedicated RNG stream so that
/// runs are reproducible and independent regardless of scheduling.
pub fn simulate_run(
    model: &TrajectoryModel,
    rho0: &QubitState,
    p: &PostSelector,
    t: f64,
    cfg: &TrajectoryConfig,
    index: u64,
) -> Result<TrajectoryRun> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);

    let n_steps = (t / cfg.dt).ceil().max(1.0) as usize;
    let dt = t / n_steps as f64;
    let sqrt_dt = dt.sqrt();

    let cop = model.obs * c(model.k);
    let c2 = cop * cop;
    let mut damp = c2; // sum of L^dag L over every channel
    for l in &model.residual {
        damp += dagger(l) * l;
    }
    let m_const =
        Mat2::identity() + (model.h * (-I) - damp * c(0.5)) * c(dt);

    let mut rho = rho0.rho;
    let mut y_total = 0.0;
    for _ in 0..n_steps {
        let mean_o = {
            let m = model.obs * rho;
            (m[(0, 0)] + m[(1, 1)]).re
        };
        let dw: f64 = rng.sample::<f64, _>(StandardNormal) * sqrt_dt;
        let dy = 2.0 * model.k * mean_o * dt + dw;
        y_total += dy;

        let m_step = m_const + cop * c(dy) + c2 * c((dy * dy - dt) / 2.0);
        let mut next = m_step * rho * dagger(&m_step);
        for l in &model.residual {
            next += l * rho * dagger(l) * c(dt);
        }
        let tr = (next[(0, 0)] + next[(1, 1)]).re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(CwlmError::StateBlowup(tr));
        }
        rho = next / c(tr);
    }

    let weight = {
        let m = p.op * rho;
        (m[(0, 0)] + m[(1, 1)]).re.clamp(0.0, 1.0)
    };
    let accepted = rng.random::<f64>() < weight;
    // Integrated record: V dt = sqrt(S_VV) dy.
    let o_rescaled = model.svv.sqrt() * y_total / (model.a_vq * t);
    Ok(TrajectoryRun { o_rescaled, weight, accepted, rho_final: rho })
}

/// Conditioned ensemble of trajectory outputs.
#[derive(Debug, Clone)]
pub struct Ensemble {
    /// Rescaled outputs of the accepted runs.
    pub outputs: Vec<f64>,
    /// Rescaled outputs of every run (unconditioned statistics).
    pub all_outputs: Vec<f64>,
    pub n_total: usize,
    pub n_accepted: usize,
}

impl Ensemble {
    pub fn acceptance(&self) -> f64 {
        self.n_accepted as f64 / self.n_total as f64
    }
}

/// Simulate `cfg.n_traj` trajectories in parallel and keep the accepted ones.
pub fn simulate_ensemble(
    model: &TrajectoryModel,
    rho0: &QubitState,
    p: &PostSelector,
    t: f64,
    cfg: &TrajectoryConfig,
) -> Result<Ensemble> {
    let runs: Result<Vec<TrajectoryRun>> = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|i| simulate_run(model, rho0, p, t, cfg, i))
        .collect();
    let runs = runs?;
    let all_outputs: Vec<f64> = runs.iter().map(|r| r.o_rescaled).collect();
    let outputs: Vec<f64> =
        runs.iter().filter(|r| r.accepted).map(|r| r.o_rescaled).collect();
    if outputs.is_empty() {
        return Err(CwlmError::EmptyEnsemble);
    }
    let n_accepted = outputs.len();
    Ok(Ensemble { outputs, all_outputs, n_total: cfg.n_traj, n_accepted })
}

/// Normalized histogram on bin centres, comparable to inverted distributions.
pub fn ensemble_histogram(samples: &[f64], min: f64, max: f64, n_bins: usize) -> Result<Distribution> {
    if samples.is_empty() {
        return Err(CwlmError::EmptyEnsemble);
    }
    if !(max > min) || n_bins == 0 {
        return Err(CwlmError::InvalidParameter("histogram range must be nonempty".into()));
    }
    let width = (max - min) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut inside = 0usize;
    for &x in samples {
        if x >= min && x < max {
            counts[((x - min) / width) as usize] += 1;
            inside += 1;
        }
    }
    if inside == 0 {
        return Err(CwlmError::EmptyEnsemble);
    }
    let grid: Vec<f64> = (0..n_bins).map(|i| min + (i as f64 + 0.5) * width).collect();
    let density: Vec<f64> =
        counts.iter().map(|&n| n as f64 / (samples.len() as f64 * width)).collect();
    Ok(Distribution::from_values(grid, density, OutputAxis::RescaledO))
}

/// Kolmogorov-Smirnov distance between an empirical sample and a model
/// density (integrated to a CDF on its grid).
pub fn ks_distance(samples: &[f64], model: &Distribution) -> Result<f64> {
    if samples.is_empty() {
        return Err(CwlmError::EmptyEnsemble);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);

    // Cumulative trapezoid of the model, normalized to end at one.
    let h = model.step();
    let mut cdf = Vec::with_capacity(model.grid.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 1..model.grid.len() {
        acc += 0.5 * (model.density[i - 1] + model.density[i]) * h;
        cdf.push(acc);
    }
    let total = *cdf.last().unwrap();
    if !(total > 0.0) {
        return Err(CwlmError::InvalidParameter("model density integrates to zero".into()));
    }
    let model_cdf = |x: f64| -> f64 {
        if x <= model.grid[0] {
            return 0.0;
        }
        if x >= *model.grid.last().unwrap() {
            return 1.0;
        }
        let idx = ((x - model.grid[0]) / h) as usize;
        let frac = (x - model.grid[idx]) / h;
        ((cdf[idx] + frac * (cdf[idx + 1] - cdf[idx])) / total).clamp(0.0, 1.0)
    };

    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = model_cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(CwlmError::EmptyEnsemble);
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < sa.len() && j < sb.len() {
        // Consume every sample at the smallest outstanding value from both
        // sides before comparing the ECDFs, so ties do not inflate D.
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{gaussian, uniform_grid};
    use crate::generator::{build_experimental, dissipator};
    use crate::linalg::{ket_x_plus, ket_z_plus, spost, spre};
    use crate::statistics::conditioned_cumulants;
    use approx::assert_relative_eq;

    #[test]
    fn reproducible_streams() {
        let d = DetectorParams::from_acquisition_time(1.0, 2.0).unwrap();
        let model = TrajectoryModel::nondemolition(&ObservableSpec::sigma_x(), &d, d.gamma()).unwrap();
        let rho0 = QubitState::from_ket(&ket_z_plus()).unwrap();
        let cfg = TrajectoryConfig::new(1e-3, 1, 7).unwrap();
        let a = simulate_run(&model, &rho0, &PostSelector::identity(), 0.5, &cfg, 3).unwrap();
        let b = simulate_run(&model, &rho0, &PostSelector::identity(), 0.5, &cfg, 3).unwrap();
        assert_eq!(a.o_rescaled.to_bits(), b.o_rescaled.to_bits());
        let c = simulate_run(&model, &rho0, &PostSelector::identity(), 0.5, &cfg, 4).unwrap();
        assert_ne!(a.o_rescaled.to_bits(), c.o_rescaled.to_bits());
    }

    #[test]
    fn eigenstate_record_statistics() {
        // O-eigenstate input, QND monitoring: outputs are N(O_i, t_a/4T).
        let t_a = 1.0;
        let t = 2.0;
        let d = DetectorParams::from_acquisition_time(t_a, 1.0).unwrap();
        let obs = ObservableSpec::sigma_x();
        let model = TrajectoryModel::nondemolition(&obs, &d, d.gamma()).unwrap();
        assert!(model.residual.is_empty(), "K = 1 leaves no residual channel");
        let rho0 = QubitState::from_ket(&ket_x_plus()).unwrap();
        let cfg = TrajectoryConfig::new(2e-3, 600, 11).unwrap();
        let ens = simulate_ensemble(&model, &rho0, &PostSelector::identity(), t, &cfg).unwrap();
        let n = ens.all_outputs.len() as f64;
        let mean: f64 = ens.all_outputs.iter().sum::<f64>() / n;
        let var: f64 =
            ens.all_outputs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let sigma2 = t_a / (4.0 * t);
        assert!((mean - 1.0).abs() < 4.0 * (sigma2 / n).sqrt(), "mean {mean}");
        assert!((var / sigma2 - 1.0).abs() < 0.25, "var {var} vs {sigma2}");
    }

    #[test]
    fn acceptance_probability_half() {
        let d = DetectorParams::from_acquisition_time(1.0, 1.0).unwrap();
        let obs = ObservableSpec::sigma_x();
        let model = TrajectoryModel::nondemolition(&obs, &d, d.gamma()).unwrap();
        // X+ input, Z+ selector: QND evolution keeps <Z+|rho|Z+> = 1/2 along
        // every trajectory, so each run accepts with probability exactly 1/2.
        let rho0 = QubitState::from_ket(&ket_x_plus()).unwrap();
        let cfg = TrajectoryConfig::new(5e-3, 400, 23).unwrap();
        let ens = simulate_ensemble(&model, &rho0, &PostSelector::z_plus(), 1.0, &cfg).unwrap();
        assert!((ens.acceptance() - 0.5).abs() < 0.1, "acceptance {}", ens.acceptance());
    }

    #[test]
    fn experimental_channels_rebuild_master_equation() {
        // The unraveled channels must sum back to exactly the experimental
        // Liouvillian dissipator.
        let q = QubitParams::new(1.1, 0.4, 1.0 / 15.6, 1.0 / 56.0, 1.0 / 22.5).unwrap();
        let d = DetectorParams::from_acquisition_time(184.0, 184.0 / 15.6).unwrap();
        let obs = ObservableSpec::sigma_y();
        let model = TrajectoryModel::experimental(&obs, &q, &d).unwrap();

        let mut rebuilt = (spre(&model.h) - spost(&model.h)) * (-I)
            - dissipator(&model.obs) * c(model.k * model.k);
        for l in &model.residual {
            rebuilt -= dissipator(l);
        }
        let reference = build_experimental(&obs, &q, &d).l0;
        assert!((rebuilt - reference).norm() < 1e-12, "residual {}", (rebuilt - reference).norm());
    }

    #[test]
    fn experimental_run_stays_physical() {
        let q = QubitParams::new(200.0 / 184.0, 0.0, 1.0 / 15.6, 1.0 / 56.0, 1.0 / 22.5).unwrap();
        let d = DetectorParams::from_acquisition_time(184.0, 184.0 / 15.6).unwrap();
        let model = TrajectoryModel::experimental(&ObservableSpec::sigma_y(), &q, &d).unwrap();
        let rho0 = QubitState::from_ket(&ket_z_plus()).unwrap();
        let cfg = TrajectoryConfig::new(0.05, 1, 5).unwrap();
        let run = simulate_run(&model, &rho0, &PostSelector::identity(), 40.0, &cfg, 0).unwrap();
        let rho = run.rho_final;
        let tr = (rho[(0, 0)] + rho[(1, 1)]).re;
        assert_relative_eq!(tr, 1.0, epsilon = 1e-10);
        let det = (rho[(0, 0)] * rho[(1, 1)] - rho[(0, 1)] * rho[(1, 0)]).re;
        assert!(det > -1e-9 && rho[(0, 0)].re > -1e-9, "state left physical cone");
    }

    #[test]
    fn unconditioned_mean_matches_master_equation() {
        // Driven ideal model: ensemble-averaged output against the first
        // cumulant of the chi = 0-conditioned (identity-selected) CF.
        let d = DetectorParams::from_acquisition_time(1.0, 1.0).unwrap();
        let omega = 1.0;
        let h = sigma_x() * c(omega / 2.0);
        let obs = ObservableSpec::sigma_y();
        let model = TrajectoryModel::ideal(&obs, &d, &h).unwrap();
        let rho0 = QubitState::from_ket(&ket_z_plus()).unwrap();
        let t = 2.0;

        let l = crate::generator::build_ideal(&obs, &d, &h);
        let k = conditioned_cumulants(
            &l,
            &rho0,
            &PostSelector::identity(),
            t,
            1,
            crate::statistics::default_cumulant_step(d.s_vv, t, d.a_vq, Some(omega)),
        )
        .unwrap();
        let expect = k.kappa[0] / (d.a_vq * t);

        let cfg = TrajectoryConfig::new(1e-3, 800, 31).unwrap();
        let ens = simulate_ensemble(&model, &rho0, &PostSelector::identity(), t, &cfg).unwrap();
        let mean: f64 =
            ens.all_outputs.iter().sum::<f64>() / ens.all_outputs.len() as f64;
        let se = (d.t_a() / (4.0 * t) / ens.all_outputs.len() as f64).sqrt();
        assert!((mean - expect).abs() < 5.0 * se, "mean {mean} vs {expect} (se {se})");
    }

    #[test]
    fn ks_distance_cases() {
        // Identical / disjoint two-sample cases.
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!(ks_two_sample(&a, &a).unwrap() < 1e-12);
        let b: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64).collect();
        assert_relative_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);

        // Sample-vs-model: two Gaussians shifted by sigma/10 have
        // KS = sup |Phi(x) - Phi(x - 0.1)| = 2 Phi(0.05) - 1 = 0.03988.
        let sigma = 1.0;
        let grid = uniform_grid(-8.0, 8.0, 8001);
        let model_density: Vec<f64> = grid.iter().map(|&x| gaussian(x, sigma)).collect();
        let model = Distribution::from_values(grid.clone(), model_density, OutputAxis::RescaledO);
        // Deterministic "sample": quantiles of the shifted Gaussian, dense
        // enough that the empirical CDF converges.
        let n = 100_000;
        let shifted: Vec<f64> = (0..n)
            .map(|i| {
                let q = (i as f64 + 0.5) / n as f64;
                0.1 + quantile_normal(q)
            })
            .collect();
        let d = ks_distance(&shifted, &model).unwrap();
        assert!((d - 0.03988).abs() < 0.002, "KS = {d}");
    }

    /// Inverse normal CDF (Acklam's rational approximation, ~1e-9 accurate).
    fn quantile_normal(p: f64) -> f64 {
        const A: [f64; 6] = [
            -3.969683028665376e+01,
            2.209460984245205e+02,
            -2.759285104469687e+02,
            1.383577518672690e+02,
            -3.066479806614716e+01,
            2.506628277459239e+00,
        ];
        const B: [f64; 5] = [
            -5.447609879822406e+01,
            1.615858368580409e+02,
            -1.556989798598866e+02,
            6.680131188771972e+01,
            -1.328068155288572e+01,
        ];
        const C: [f64; 6] = [
            -7.784894002430293e-03,
            -3.223964580411365e-01,
            -2.400758277161838e+00,
            -2.549732539343734e+00,
            4.374664141464968e+00,
            2.938163982698783e+00,
        ];
        const D: [f64; 4] = [
            7.784695709041462e-03,
            3.224671290700398e-01,
            2.445134137142996e+00,
            3.754408661907416e+00,
        ];
        let p_low = 0.02425;
        if p < p_low {
            let q = (-2.0 * p.ln()).sqrt();
            (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
                / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
        } else if p <= 1.0 - p_low {
            let q = p - 0.5;
            let r = q * q;
            (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
                / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
        } else {
            -quantile_normal(1.0 - p)
        }
    }
}
