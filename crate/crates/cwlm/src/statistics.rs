//! Generating-function sampling, Fourier inversion, cumulants and
//! conditioned-comparison observables.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{CwlmError, Result};
use crate::generator::{JointLiouvillian, Liouvillian};
use crate::linalg::C64;
use crate::model::{PostSelector, QubitState};
use crate::propagate::evolve;

/// Counting-field grid request.
///
/// `Auto` sizes the grid from the analytically known Gaussian envelope
/// e^{-S_VV chi^2 T / 2} that every generator carries: chi_max is chosen so
/// the envelope falls below 1e-12, enlarged if needed so the output
/// resolution is at least sigma/20, and n is the smallest power of two whose
/// output span covers `max_abs_o`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ChiGridSpec {
    Fixed { n_points: usize, chi_max: f64 },
    Auto { max_abs_o: f64 },
}

impl Default for ChiGridSpec {
    fn default() -> Self {
        ChiGridSpec::Auto { max_abs_o: 4.0 }
    }
}

/// A concrete symmetric uniform chi grid: chi_j = -chi_max + j dchi.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedChiGrid {
    pub n_points: usize,
    pub chi_max: f64,
}

impl ResolvedChiGrid {
    pub fn dchi(&self) -> f64 {
        2.0 * self.chi_max / self.n_points as f64
    }

    pub fn chi(&self, j: usize) -> f64 {
        -self.chi_max + j as f64 * self.dchi()
    }
}

impl ChiGridSpec {
    pub fn resolve(&self, svv: f64, a_vq: f64, t: f64) -> Result<ResolvedChiGrid> {
        match *self {
            ChiGridSpec::Fixed { n_points, chi_max } => {
                if n_points < 64 || n_points % 2 != 0 {
                    return Err(CwlmError::InvalidParameter(
                        "chi grid needs an even n_points >= 64".into(),
                    ));
                }
                if !(chi_max > 0.0) {
                    return Err(CwlmError::InvalidParameter("chi_max must be positive".into()));
                }
                Ok(ResolvedChiGrid { n_points, chi_max })
            }
            ChiGridSpec::Auto { max_abs_o } => {
                if !(max_abs_o > 0.0) || !(svv > 0.0) || a_vq == 0.0 || !(t > 0.0) {
                    return Err(CwlmError::InvalidParameter(
                        "auto chi grid needs max_abs_o, svv, t > 0 and a_vq != 0".into(),
                    ));
                }
                const EPS: f64 = 1e-12;
                let chi_decay = (2.0 * (1.0 / EPS).ln() / (svv * t)).sqrt();
                let t_a = 4.0 * svv / (a_vq * a_vq);
                let sigma = (t_a / (4.0 * t)).sqrt();
                let chi_resolution = 20.0 * std::f64::consts::PI / (t * a_vq.abs() * sigma);
                let chi_max = chi_decay.max(chi_resolution);
                let d_o = std::f64::consts::PI / (t * a_vq.abs() * chi_max);
                let mut n: usize = 64;
                while (n as f64) * d_o < 2.0 * max_abs_o {
                    n *= 2;
                    if n > 1 << 24 {
                        return Err(CwlmError::InvalidParameter(
                            "auto chi grid exceeded 2^24 points".into(),
                        ));
                    }
                }
                Ok(ResolvedChiGrid { n_points: n, chi_max })
            }
        }
    }
}

/// Conditioned generating function sampled on a symmetric chi grid.
#[derive(Debug, Clone)]
pub struct GeneratingFunctionSamples {
    pub chi_values: Vec<f64>,
    pub values: Vec<C64>,
    pub t_total: f64,
    /// Denominator of the conditioning normalization, Tr(P rho(0; T)).
    pub denominator: C64,
    pub svv: f64,
    pub a_vq: f64,
}

/// Output-axis convention of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputAxis {
    /// Raw time-averaged detector output V.
    RawV,
    /// Rescaled O = V / a_VQ, aligned with the observable eigenvalues.
    RescaledO,
}

/// A probability density on a uniform output grid.
///
/// Raw inverted values are stored untouched; negative ringing is preserved
/// for diagnostics and only removed by [`Distribution::clipped_density`].
#[derive(Debug, Clone)]
pub struct Distribution {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub axis: OutputAxis,
    pub t_total: Option<f64>,
    /// max |Im| of the inverted density relative to the peak.
    pub imag_residual: f64,
    /// Trapezoidal integral minus one.
    pub norm_residual: f64,
    /// Set when the construction is known to produce a quasi-distribution
    /// (negative densities are meaningful, not ringing).
    pub nonphysical: bool,
}

impl Distribution {
    pub fn from_values(grid: Vec<f64>, density: Vec<f64>, axis: OutputAxis) -> Self {
        let mut d = Distribution {
            grid,
            density,
            axis,
            t_total: None,
            imag_residual: 0.0,
            norm_residual: 0.0,
            nonphysical: false,
        };
        d.norm_residual = d.integral() - 1.0;
        d
    }

    pub fn step(&self) -> f64 {
        if self.grid.len() < 2 {
            return 0.0;
        }
        self.grid[1] - self.grid[0]
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let h = self.step();
        if self.density.is_empty() {
            return 0.0;
        }
        let inner: f64 = self.density[1..self.density.len() - 1].iter().sum();
        h * (inner + 0.5 * (self.density[0] + self.density[self.density.len() - 1]))
    }

    pub fn mean(&self) -> f64 {
        let h = self.step();
        self.grid
            .iter()
            .zip(&self.density)
            .map(|(o, p)| o * p * h)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let h = self.step();
        self.grid
            .iter()
            .zip(&self.density)
            .map(|(o, p)| (o - m) * (o - m) * p * h)
            .sum()
    }

    /// Presentation copy with tiny negative ringing zeroed.
    pub fn clipped_density(&self) -> Vec<f64> {
        self.density
            .iter()
            .map(|&p| if p > -1e-8 && p < 0.0 { 0.0 } else { p })
            .collect()
    }

    pub fn peak(&self) -> f64 {
        self.density.iter().fold(0.0f64, |m, &p| m.max(p.abs()))
    }

    pub fn sup_distance(&self, other: &Distribution) -> f64 {
        self.density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn same_grid(&self, other: &Distribution) -> bool {
        self.grid.len() == other.grid.len()
            && self
                .grid
                .iter()
                .zip(&other.grid)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }
}

/// Sample the conditioned generating function
/// C(chi; T) = Tr(P rho(chi; T)) / Tr(P rho(0; T)).
///
/// Use `PostSelector::identity()` for unconditioned statistics (then the
/// denominator is exactly the trace, i.e. one).
pub fn sample_cf(
    l: &Liouvillian,
    rho0: &QubitState,
    p: &PostSelector,
    t: f64,
    grid: &ChiGridSpec,
    a_vq: f64,
) -> Result<GeneratingFunctionSamples> {
    let resolved = grid.resolve(l.svv, a_vq, t)?;
    sample_cf_resolved(l, rho0, p, t, &resolved, a_vq)
}

pub fn sample_cf_resolved(
    l: &Liouvillian,
    rho0: &QubitState,
    p: &PostSelector,
    t: f64,
    grid: &ResolvedChiGrid,
    a_vq: f64,
) -> Result<GeneratingFunctionSamples> {
    let denominator = projected_trace(l, rho0, p, t, 0.0)?;
    if denominator.norm() <= 1e-14 {
        return Err(CwlmError::ZeroOverlapDenominator(denominator.norm()));
    }
    let chi_values: Vec<f64> = (0..grid.n_points).map(|j| grid.chi(j)).collect();
    let values: Result<Vec<C64>> = chi_values
        .par_iter()
        .map(|&chi| Ok(projected_trace(l, rho0, p, t, chi)? / denominator))
        .collect();
    Ok(GeneratingFunctionSamples {
        chi_values,
        values: values?,
        t_total: t,
        denominator,
        svv: l.svv,
        a_vq,
    })
}

fn projected_trace(
    l: &Liouvillian,
    rho0: &QubitState,
    p: &PostSelector,
    t: f64,
    chi: f64,
) -> Result<C64> {
    let rho = evolve(l, chi, rho0, t)?.rho_final;
    let prod = p.op * rho.rho;
    Ok(prod[(0, 0)] + prod[(1, 1)])
}

/// Evaluate the conditioned CF at one chi value (used by the cumulant
/// stencils, which refine near chi = 0 rather than reusing the coarse grid).
pub fn conditioned_cf_at(
    l: &Liouvillian,
    rho0: &QubitState,
    p: &PostSelector,
    t: f64,
    chi: f64,
) -> Result<C64> {
    let den = projected_trace(l, rho0, p, t, 0.0)?;
    if den.norm() <= 1e-14 {
        return Err(CwlmError::ZeroOverlapDenominator(den.norm()));
    }
    Ok(projected_trace(l, rho0, p, t, chi)? / den)
}

/// Discrete Fourier inversion of the generating function,
/// P(V) = (T / 2 pi) integral dchi e^{-i chi V T} C(chi; T).
pub fn invert(cf: &GeneratingFunctionSamples, axis: OutputAxis) -> Result<Distribution> {
    let n = cf.chi_values.len();
    if n < 2 {
        return Err(CwlmError::InvalidParameter("CF grid too small".into()));
    }
    let dchi = cf.chi_values[1] - cf.chi_values[0];
    let chi_max = -cf.chi_values[0];
    let t = cf.t_total;

    let peak = cf.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tail = cf.values[0].norm().max(cf.values[n - 1].norm());
    if tail > 1e-10 * peak.max(1.0) {
        return Err(CwlmError::InsufficientDecay(tail));
    }

    let mut buf: Vec<Complex64> = cf
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let scale = t * dchi / (2.0 * std::f64::consts::PI);
    let mut grid_v = Vec::with_capacity(n);
    let mut density_c = Vec::with_capacity(n);
    for (k, out) in buf.iter().enumerate() {
        let v_k = 2.0 * std::f64::consts::PI * (k as f64 - n as f64 / 2.0) / (t * n as f64 * dchi);
        let phase = Complex64::from_polar(1.0, chi_max * v_k * t);
        grid_v.push(v_k);
        density_c.push(out * phase * scale);
    }

    let (grid, density_c): (Vec<f64>, Vec<Complex64>) = match axis {
        OutputAxis::RawV => (grid_v, density_c),
        OutputAxis::RescaledO => {
            let a = cf.a_vq;
            let mut pairs: Vec<(f64, Complex64)> = grid_v
                .iter()
                .zip(&density_c)
                .map(|(&v, &p)| (v / a, p * a.abs()))
                .collect();
            if a < 0.0 {
                pairs.reverse();
            }
            pairs.into_iter().unzip()
        }
    };

    let peak_re = density_c.iter().map(|p| p.re.abs()).fold(0.0, f64::max);
    let max_im = density_c.iter().map(|p| p.im.abs()).fold(0.0, f64::max);
    let density: Vec<f64> = density_c.iter().map(|p| p.re).collect();

    let mut dist = Distribution::from_values(grid, density, axis);
    dist.t_total = Some(t);
    dist.imag_residual = if peak_re > 0.0 { max_im / peak_re } else { max_im };
    Ok(dist)
}

/// Cumulants of the integrated output from derivatives of ln C at chi -> 0.
#[derive(Debug, Clone)]
pub struct CumulantVector {
    /// kappa_n for n = 1..=n_max, in units of the integrated raw output.
    pub kappa: Vec<f64>,
    /// Richardson error estimates per order.
    pub error: Vec<f64>,
    pub base_step: f64,
}

/// Central finite differences of ln C with two Richardson levels.
///
/// `cf` must return the conditioned CF; `base_step` is the coarsest chi
/// step. Fails with [`CwlmError::IllConditionedStencil`] when the error
/// estimate exceeds 1% of the cumulant.
pub fn cumulants<F>(cf: F, n_max: usize, base_step: f64) -> Result<CumulantVector>
where
    F: Fn(f64) -> Result<C64>,
{
    if n_max == 0 || n_max > 4 {
        return Err(CwlmError::InvalidParameter("cumulant order must be 1..=4".into()));
    }
    if !(base_step > 0.0) {
        return Err(CwlmError::InvalidParameter("base_step must be positive".into()));
    }

    // ln C on the union stencil m * h / 4, m in -8..=8.
    let fine = base_step / 4.0;
    let mut logs = [C64::new(0.0, 0.0); 17];
    for (idx, m) in (-8i32..=8).enumerate() {
        let z = cf(m as f64 * fine)?;
        if z.norm() == 0.0 {
            return Err(CwlmError::IllConditionedStencil { order: 0, rel_err: f64::INFINITY });
        }
        logs[idx] = z.ln();
    }
    let f = |m: i32| logs[(m + 8) as usize];

    let diff = |order: usize, stride: i32| -> C64 {
        let h = stride as f64 * fine;
        match order {
            1 => (f(stride) - f(-stride)) / C64::new(2.0 * h, 0.0),
            2 => (f(stride) - f(0) * 2.0 + f(-stride)) / C64::new(h * h, 0.0),
            3 => {
                (f(2 * stride) - f(stride) * 2.0 + f(-stride) * 2.0 - f(-2 * stride))
                    / C64::new(2.0 * h * h * h, 0.0)
            }
            4 => {
                (f(2 * stride) - f(stride) * 4.0 + f(0) * 6.0 - f(-stride) * 4.0 + f(-2 * stride))
                    / C64::new(h * h * h * h, 0.0)
            }
            _ => unreachable!(),
        }
    };

    let mut kappa = Vec::with_capacity(n_max);
    let mut error = Vec::with_capacity(n_max);
    for order in 1..=n_max {
        // Strides 4, 2, 1 realize steps h, h/2, h/4.
        let d_h = diff(order, 4);
        let d_h2 = diff(order, 2);
        let d_h4 = diff(order, 1);
        let r1_a = (d_h2 * 4.0 - d_h) / 3.0;
        let r1_b = (d_h4 * 4.0 - d_h2) / 3.0;
        let r2 = (r1_b * 16.0 - r1_a) / 15.0;
        let err = (r2 - r1_b).norm();

        let phase = C64::new(0.0, -1.0).powu(order as u32);
        let k = (phase * r2).re;
        if err > 0.01 * k.abs().max(1e-6) {
            return Err(CwlmError::IllConditionedStencil { order, rel_err: err / k.abs().max(1e-300) });
        }
        kappa.push(k);
        error.push(err);
    }
    Ok(CumulantVector { kappa, error, base_step })
}

/// Spec'd base step for conditioned cumulants: balances truncation against
/// cancellation for the jump-regime CFs.
pub fn default_cumulant_step(svv: f64, t: f64, a_vq: f64, omega: Option<f64>) -> f64 {
    let mut scale = svv * t;
    if let Some(w) = omega {
        if w != 0.0 {
            scale += (a_vq / w) * (a_vq / w);
        }
    }
    0.01 / scale.sqrt()
}

/// Cumulants of the conditioned output for a generator/state/selector triple.
pub fn conditioned_cumulants(
    l: &Liouvillian,
    rho0: &QubitState,
    p: &PostSelector,
    t: f64,
    n_max: usize,
    base_step: f64,
) -> Result<CumulantVector> {
    let den = projected_trace(l, rho0, p, t, 0.0)?;
    if den.norm() <= 1e-14 {
        return Err(CwlmError::ZeroOverlapDenominator(den.norm()));
    }
    cumulants(|chi| Ok(projected_trace(l, rho0, p, t, chi)? / den), n_max, base_step)
}

/// Pointwise comparison of the two conditioned distributions.
#[derive(Debug, Clone)]
pub struct ConditionedComparison {
    pub p_plus: Distribution,
    pub p_minus: Distribution,
    pub difference: Vec<f64>,
    pub certainty: Vec<f64>,
    /// (O, value) of the extremal difference.
    pub difference_extrema: (f64, f64),
}

/// Difference and certainty observables on a shared grid.
pub fn compare(p_plus: &Distribution, p_minus: &Distribution) -> Result<ConditionedComparison> {
    if !p_plus.same_grid(p_minus) {
        return Err(CwlmError::GridMismatch);
    }
    let difference: Vec<f64> = p_plus
        .density
        .iter()
        .zip(&p_minus.density)
        .map(|(a, b)| a - b)
        .collect();
    let certainty: Vec<f64> = p_plus
        .density
        .iter()
        .zip(&p_minus.density)
        .map(|(a, b)| {
            let sum = a + b;
            if sum.abs() > 1e-300 {
                ((a - b) / sum).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let mut extrema = (p_plus.grid[0], 0.0f64);
    for (o, d) in p_plus.grid.iter().zip(&difference) {
        if d.abs() > extrema.1.abs() {
            extrema = (*o, *d);
        }
    }
    Ok(ConditionedComparison {
        p_plus: p_plus.clone(),
        p_minus: p_minus.clone(),
        difference,
        certainty,
        difference_extrema: extrema,
    })
}

/// Joint distribution of two simultaneously measured outputs.
#[derive(Debug, Clone)]
pub struct Distribution2D {
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    /// Row-major density, index [iy * nx + ix].
    pub density: Vec<f64>,
    pub axis: OutputAxis,
    pub t_total: f64,
}

impl Distribution2D {
    /// Integrate out the y axis (rectangle rule, exact for the DFT grid).
    pub fn marginal_x(&self) -> Distribution {
        let nx = self.grid_x.len();
        let ny = self.grid_y.len();
        let dy = self.grid_y[1] - self.grid_y[0];
        let mut density = vec![0.0; nx];
        for iy in 0..ny {
            for ix in 0..nx {
                density[ix] += self.density[iy * nx + ix] * dy;
            }
        }
        let mut d = Distribution::from_values(self.grid_x.clone(), density, self.axis);
        d.t_total = Some(self.t_total);
        d
    }

    pub fn marginal_y(&self) -> Distribution {
        let nx = self.grid_x.len();
        let ny = self.grid_y.len();
        let dx = self.grid_x[1] - self.grid_x[0];
        let mut density = vec![0.0; ny];
        for iy in 0..ny {
            for ix in 0..nx {
                density[iy] += self.density[iy * nx + ix] * dx;
            }
        }
        let mut d = Distribution::from_values(self.grid_y.clone(), density, self.axis);
        d.t_total = Some(self.t_total);
        d
    }
}

/// Sample and invert the two-field generating function
/// C(chi_x, chi_y; T) over the product grid.
pub fn joint_distribution(
    jl: &JointLiouvillian,
    rho0: &QubitState,
    p: &PostSelector,
    t: f64,
    grid_x: &ChiGridSpec,
    grid_y: &ChiGridSpec,
    a_vq_x: f64,
    a_vq_y: f64,
) -> Result<Distribution2D> {
    let gx = grid_x.resolve(jl.svv_x, a_vq_x, t)?;
    let gy = grid_y.resolve(jl.svv_y, a_vq_y, t)?;
    let (nx, ny) = (gx.n_points, gy.n_points);

    let den = {
        let l = jl.fix_y(0.0);
        projected_trace(&l, rho0, p, t, 0.0)?
    };
    if den.norm() <= 1e-14 {
        return Err(CwlmError::ZeroOverlapDenominator(den.norm()));
    }

    // CF on the product grid, row index = chi_y, column = chi_x.
    let rows: Result<Vec<Vec<C64>>> = (0..ny)
        .into_par_iter()
        .map(|jy| {
            let l = jl.fix_y(gy.chi(jy));
            (0..nx)
                .map(|jx| Ok(projected_trace(&l, rho0, p, t, gx.chi(jx))? / den))
                .collect()
        })
        .collect();
    let rows = rows?;

    let peak = rows
        .iter()
        .flatten()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let tail = (0..ny)
        .flat_map(|jy| [rows[jy][0], rows[jy][nx - 1]])
        .chain((0..nx).flat_map(|jx| [rows[0][jx], rows[ny - 1][jx]]))
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if tail > 1e-10 * peak.max(1.0) {
        return Err(CwlmError::InsufficientDecay(tail));
    }

    // Separable 2-D DFT with the (-1)^j centering trick on both axes.
    let mut buf: Vec<Complex64> = Vec::with_capacity(nx * ny);
    for (jy, row) in rows.iter().enumerate() {
        for (jx, v) in row.iter().enumerate() {
            let sign = if (jx + jy) % 2 == 0 { 1.0 } else { -1.0 };
            buf.push(v * sign);
        }
    }
    let mut planner = FftPlanner::new();
    let fft_x = planner.plan_fft_forward(nx);
    for row in buf.chunks_exact_mut(nx) {
        fft_x.process(row);
    }
    let fft_y = planner.plan_fft_forward(ny);
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for ix in 0..nx {
        for iy in 0..ny {
            col[iy] = buf[iy * nx + ix];
        }
        fft_y.process(&mut col);
        for iy in 0..ny {
            buf[iy * nx + ix] = col[iy];
        }
    }

    let two_pi = 2.0 * std::f64::consts::PI;
    let scale = t * t * gx.dchi() * gy.dchi() / (two_pi * two_pi);
    let vx = |k: usize| two_pi * (k as f64 - nx as f64 / 2.0) / (t * nx as f64 * gx.dchi());
    let vy = |k: usize| two_pi * (k as f64 - ny as f64 / 2.0) / (t * ny as f64 * gy.dchi());

    let mut density = vec![0.0; nx * ny];
    for ky in 0..ny {
        for kx in 0..nx {
            let phase = Complex64::from_polar(1.0, (gx.chi_max * vx(kx) + gy.chi_max * vy(ky)) * t);
            let val = buf[ky * nx + kx] * phase * scale;
            // Rescaled axis: densities pick up |a_x a_y|.
            density[ky * nx + kx] = val.re * (a_vq_x * a_vq_y).abs();
        }
    }

    let grid_x_o: Vec<f64> = (0..nx).map(|k| vx(k) / a_vq_x).collect();
    let grid_y_o: Vec<f64> = (0..ny).map(|k| vy(k) / a_vq_y).collect();
    Ok(Distribution2D {
        grid_x: grid_x_o,
        grid_y: grid_y_o,
        density,
        axis: OutputAxis::RescaledO,
        t_total: t,
    })
}

/// One long-T comparison point for the Gaussian-shift fit.
#[derive(Debug, Clone)]
pub struct ShiftFitSample {
    pub t: f64,
    pub grid: Vec<f64>,
    pub difference: Vec<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShiftFit {
    pub s: f64,
    pub mean_o: f64,
    /// Relative root-mean-square residual of the fit.
    pub residual: f64,
}

/// Least-squares fit of the long-time difference curves to the shifted
/// Gaussian model (common S and <O> across all T).
pub fn fit_shift_model(samples: &[ShiftFitSample]) -> Result<ShiftFit> {
    if samples.is_empty() {
        return Err(CwlmError::InvalidParameter("no samples to fit".into()));
    }

    let template = |o: f64, mu: f64, sigma: f64| -> f64 {
        let x = o - mu;
        0.5 * x / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            * (-x * x / (2.0 * sigma * sigma)).exp()
    };

    let eval = |mu: f64| -> (f64, f64) {
        // Linear in S at fixed mu: S = <m, d> / <m, m>.
        let mut num = 0.0;
        let mut den = 0.0;
        let mut data_sq = 0.0;
        for s in samples {
            for (o, d) in s.grid.iter().zip(&s.difference) {
                let m = template(*o, mu, s.sigma);
                num += m * d;
                den += m * m;
                data_sq += d * d;
            }
        }
        if den == 0.0 {
            return (0.0, 1.0);
        }
        let s_opt = num / den;
        let mut resid = 0.0;
        for s in samples {
            for (o, d) in s.grid.iter().zip(&s.difference) {
                let r = d - s_opt * template(*o, mu, s.sigma);
                resid += r * r;
            }
        }
        (s_opt, (resid / data_sq.max(1e-300)).sqrt())
    };

    // Coarse scan over mu then golden-section refinement.
    let (lo, hi) = (-1.0, 1.0);
    let mut best_mu = 0.0;
    let mut best = f64::INFINITY;
    for i in 0..=200 {
        let mu = lo + (hi - lo) * i as f64 / 200.0;
        let (_, r) = eval(mu);
        if r < best {
            best = r;
            best_mu = mu;
        }
    }
    let (mut a, mut b) = (best_mu - 0.02, best_mu + 0.02);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let c1 = b - phi * (b - a);
        let c2 = a + phi * (b - a);
        if eval(c1).1 < eval(c2).1 {
            b = c2;
        } else {
            a = c1;
        }
    }
    let mu = 0.5 * (a + b);
    let (s, residual) = eval(mu);
    if residual > 0.2 {
        return Err(CwlmError::PoorFit(residual));
    }
    Ok(ShiftFit { s, mean_o: mu, residual })
}
