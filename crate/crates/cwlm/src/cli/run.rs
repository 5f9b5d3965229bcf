//! Subcommand implementations shared by the binary and the integration
//! tests.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::analytic::{uniform_grid, zero_overlap_distribution};
use crate::error::{CwlmError, Result};
use crate::model::ValidationReport;
use crate::propagate::evolve;
use crate::statistics::{
    self, conditioned_cumulants, default_cumulant_step, invert, sample_cf_resolved, Distribution,
    OutputAxis,
};
use crate::trajectories::{ks_distance, simulate_ensemble, TrajectoryConfig};

use super::config::Scenario;
use super::output::{csv_path, time_tag, write_csv, DerivedParams, QualityRecord, Sidecar};
use super::presets;

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Residual threshold above which a run is marked degraded.
pub const DEGRADED_THRESHOLD: f64 = 1e-6;

fn axis_column(axis: OutputAxis) -> &'static str {
    match axis {
        OutputAxis::RawV => "V",
        OutputAxis::RescaledO => "O",
    }
}

fn derived(scenario: &Scenario) -> DerivedParams {
    DerivedParams {
        gamma_per_us: scenario.detector.gamma(),
        t_a_us: scenario.detector.t_a(),
        quality_k: scenario.detector.quality_k(),
        sigma_by_t: scenario
            .t_values
            .iter()
            .map(|&t| (t, scenario.detector.sigma(t)))
            .collect(),
    }
}

fn quality_of(t: f64, selector: &str, dist: &Distribution) -> QualityRecord {
    QualityRecord {
        t_us: t,
        selector: selector.to_string(),
        norm_residual: dist.norm_residual,
        imag_residual: dist.imag_residual,
        nonphysical: dist.nonphysical,
        degraded: dist.norm_residual.abs() > DEGRADED_THRESHOLD
            || dist.imag_residual > DEGRADED_THRESHOLD,
    }
}

/// Conditioned distributions for every selector at one window length.
pub fn distributions_at(scenario: &Scenario, t: f64) -> Result<Vec<(String, Distribution)>> {
    let l = scenario.liouvillian();
    let a_vq = scenario.detector.a_vq;
    let resolved = scenario.config.grid.resolve(l.svv, a_vq, t)?;
    let mut out = Vec::with_capacity(scenario.selectors.len());
    for (idx, (label, _)) in scenario.selectors.iter().enumerate() {
        let p = scenario.selector_at(idx, t);
        let cf = sample_cf_resolved(&l, &scenario.rho0, &p, t, &resolved, a_vq)?;
        let dist = invert(&cf, scenario.config.output_axis)?;
        out.push((label.clone(), dist));
    }
    Ok(out)
}

/// Indices of the first two non-trivial selectors (the pair whose difference
/// and certainty are tabulated).
fn comparison_pair(scenario: &Scenario) -> Option<(usize, usize)> {
    let idx: Vec<usize> = scenario
        .selectors
        .iter()
        .enumerate()
        .filter(|(_, (label, _))| label != "unconditioned")
        .map(|(i, _)| i)
        .collect();
    match idx.as_slice() {
        [a, b, ..] => Some((*a, *b)),
        _ => None,
    }
}

/// `distribution` subcommand: one CSV per window plus a JSON sidecar that
/// re-runs verbatim as a config.
pub fn run_distribution(scenario: &Scenario, out_dir: &Path) -> Result<Sidecar> {
    let mut quality = Vec::new();
    let mut files = Vec::new();
    for &t in &scenario.t_values {
        let dists = distributions_at(scenario, t)?;
        for (label, d) in &dists {
            quality.push(quality_of(t, label, d));
        }

        let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
        columns.push((
            axis_column(scenario.config.output_axis).to_string(),
            dists[0].1.grid.clone(),
        ));
        for (label, d) in &dists {
            columns.push((format!("p_{label}"), d.density.clone()));
        }
        if let Some((ia, ib)) = comparison_pair(scenario) {
            let cmp = statistics::compare(&dists[ia].1, &dists[ib].1)?;
            columns.push(("difference".to_string(), cmp.difference));
            columns.push(("certainty".to_string(), cmp.certainty));
        }

        let stem = format!("distribution_t{}us", time_tag(t));
        let path = csv_path(out_dir, &stem);
        let borrowed: Vec<(String, &[f64])> =
            columns.iter().map(|(n, v)| (n.clone(), v.as_slice())).collect();
        write_csv(&path, &borrowed)?;
        files.push(format!("{stem}.csv"));
    }

    let sidecar = Sidecar {
        config: scenario.config.clone(),
        derived: derived(scenario),
        quality,
        validation: Some(scenario.validation_report()?),
        files,
        tool_version: TOOL_VERSION.to_string(),
    };
    sidecar.write(&out_dir.join("sidecar.json"))?;
    Ok(sidecar)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepQuantity {
    Mean,
    Cumulants,
    DifferenceMax,
}

impl FromStr for SweepQuantity {
    type Err = CwlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "cumulants" => Ok(Self::Cumulants),
            "difference_max" => Ok(Self::DifferenceMax),
            other => Err(CwlmError::InvalidParameter(format!(
                "unknown sweep quantity '{other}' (mean | cumulants | difference_max)"
            ))),
        }
    }
}

impl SweepQuantity {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Cumulants => "cumulants",
            Self::DifferenceMax => "difference_max",
        }
    }
}

/// `sweep` subcommand: a quantity tabulated against the window series.
pub fn run_sweep(scenario: &Scenario, quantity: SweepQuantity, out_dir: &Path) -> Result<PathBuf> {
    if scenario.t_values.len() < 2 {
        return Err(CwlmError::InvalidParameter(
            "a sweep needs at least two entries in measurement.t_values_us".into(),
        ));
    }
    let l = scenario.liouvillian();
    let a_vq = scenario.detector.a_vq;
    let omega = scenario.config.qubit.and_then(|q| {
        if q.omega_rad_per_us != 0.0 { Some(q.omega_rad_per_us) } else { None }
    });

    let mut columns: Vec<(String, Vec<f64>)> = vec![("t_us".into(), scenario.t_values.clone())];
    match quantity {
        SweepQuantity::Mean | SweepQuantity::Cumulants => {
            let n_max = if quantity == SweepQuantity::Mean { 1 } else { 4 };
            let mut per_sel: Vec<Vec<Vec<f64>>> =
                vec![vec![Vec::new(); n_max]; scenario.selectors.len()];
            for &t in &scenario.t_values {
                let step = default_cumulant_step(l.svv, t, a_vq, omega);
                for (idx, _) in scenario.selectors.iter().enumerate() {
                    let p = scenario.selector_at(idx, t);
                    let kv = conditioned_cumulants(&l, &scenario.rho0, &p, t, n_max, step)?;
                    for (n, &k) in kv.kappa.iter().enumerate() {
                        // Mean column reports the rescaled time-averaged
                        // output; raw cumulants keep integrated units.
                        let value =
                            if quantity == SweepQuantity::Mean { k / (a_vq * t) } else { k };
                        per_sel[idx][n].push(value);
                    }
                }
            }
            for (idx, (label, _)) in scenario.selectors.iter().enumerate() {
                for n in 0..n_max {
                    let name = if quantity == SweepQuantity::Mean {
                        format!("mean_{label}")
                    } else {
                        format!("kappa{}_{label}", n + 1)
                    };
                    columns.push((name, per_sel[idx][n].clone()));
                }
            }
        }
        SweepQuantity::DifferenceMax => {
            let (ia, ib) = comparison_pair(scenario).ok_or_else(|| {
                CwlmError::InvalidParameter(
                    "difference_max needs two non-identity post-selectors".into(),
                )
            })?;
            let mut o_at = Vec::new();
            let mut dmax = Vec::new();
            for &t in &scenario.t_values {
                let dists = distributions_at(scenario, t)?;
                let cmp = statistics::compare(&dists[ia].1, &dists[ib].1)?;
                o_at.push(cmp.difference_extrema.0);
                dmax.push(cmp.difference_extrema.1);
            }
            columns.push(("o_at_max".into(), o_at));
            columns.push(("difference_max".into(), dmax));
        }
    }

    let path = csv_path(out_dir, &format!("sweep_{}", quantity.name()));
    let borrowed: Vec<(String, &[f64])> =
        columns.iter().map(|(n, v)| (n.clone(), v.as_slice())).collect();
    write_csv(&path, &borrowed)?;
    Ok(path)
}

/// `validate` subcommand: physicality checks, printed and written as JSON.
pub fn run_validate(scenario: &Scenario, out_dir: &Path) -> Result<ValidationReport> {
    let report = scenario.validation_report()?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CwlmError::InvalidParameter(format!("{}: {e}", out_dir.display())))?;
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CwlmError::InvalidParameter(e.to_string()))?;
    std::fs::write(out_dir.join("validate.json"), text)
        .map_err(|e| CwlmError::InvalidParameter(e.to_string()))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryCase {
    pub t_us: f64,
    pub selector: String,
    pub n_total: usize,
    pub n_accepted: usize,
    pub acceptance: f64,
    pub predicted_acceptance: f64,
    pub acceptance_within_3sigma: bool,
    pub ks_distance: f64,
    pub mean_mc: f64,
    pub mean_cf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub seed: u64,
    pub n_traj: usize,
    pub dt_us: f64,
    pub cases: Vec<TrajectoryCase>,
}

/// `trajectories` subcommand: Monte Carlo cross-check of the generating
/// function pipeline.
pub fn run_trajectories(
    scenario: &Scenario,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<TrajectorySummary> {
    let opts = scenario.config.trajectories.ok_or_else(|| {
        CwlmError::InvalidParameter("this run needs a [trajectories] section in the config".into())
    })?;
    let seed = seed_override.unwrap_or(opts.seed);
    let cfg = TrajectoryConfig::new(opts.dt_us, opts.n_traj, seed)?;
    let model = scenario.trajectory_model()?;
    let l = scenario.liouvillian();
    let a_vq = scenario.detector.a_vq;

    let mut cases = Vec::new();
    for &t in &scenario.t_values {
        let resolved = scenario.config.grid.resolve(l.svv, a_vq, t)?;
        for (idx, (label, _)) in scenario.selectors.iter().enumerate() {
            let p = scenario.selector_at(idx, t);
            let ensemble = simulate_ensemble(&model, &scenario.rho0, &p, t, &cfg)?;

            // Model distribution on the rescaled axis for the KS check.
            let cf = sample_cf_resolved(&l, &scenario.rho0, &p, t, &resolved, a_vq)?;
            let dist = invert(&cf, OutputAxis::RescaledO)?;
            let ks = ks_distance(&ensemble.outputs, &dist)?;

            let predicted = {
                let rho_t = evolve(&l, 0.0, &scenario.rho0, t)?.rho_final;
                let m = p.op * rho_t.rho;
                (m[(0, 0)] + m[(1, 1)]).re.clamp(0.0, 1.0)
            };
            let acc = ensemble.acceptance();
            let se = (predicted * (1.0 - predicted) / ensemble.n_total as f64).sqrt();
            let within = (acc - predicted).abs() <= 3.0 * se.max(1e-12);

            let mean_mc =
                ensemble.outputs.iter().sum::<f64>() / ensemble.outputs.len() as f64;
            let mean_cf = dist.mean();

            // Histogram over the central region of the model grid.
            let lo = dist.grid[0];
            let hi = *dist.grid.last().unwrap();
            let hist =
                crate::trajectories::ensemble_histogram(&ensemble.outputs, lo, hi, 101)?;
            let stem = format!("trajectories_t{}us_{label}", time_tag(t));
            let cols = vec![
                ("o".to_string(), hist.grid.as_slice()),
                ("density_mc".to_string(), hist.density.as_slice()),
            ];
            write_csv(&csv_path(out_dir, &stem), &cols)?;

            cases.push(TrajectoryCase {
                t_us: t,
                selector: label.clone(),
                n_total: ensemble.n_total,
                n_accepted: ensemble.n_accepted,
                acceptance: acc,
                predicted_acceptance: predicted,
                acceptance_within_3sigma: within,
                ks_distance: ks,
                mean_mc,
                mean_cf,
            });
        }
    }

    let summary = TrajectorySummary { seed, n_traj: opts.n_traj, dt_us: opts.dt_us, cases };
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| CwlmError::InvalidParameter(e.to_string()))?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CwlmError::InvalidParameter(format!("{}: {e}", out_dir.display())))?;
    std::fs::write(out_dir.join("trajectories.json"), text)
        .map_err(|e| CwlmError::InvalidParameter(e.to_string()))?;
    Ok(summary)
}

/// `preset <name>`: write the scenario config, run its distributions and any
/// extra artifacts the preset calls for.
pub fn run_preset(name: &str, out_dir: &Path, seed_override: Option<u64>) -> Result<Sidecar> {
    let (mut config, plan) = presets::preset(name)?;
    if let (Some(seed), Some(tr)) = (seed_override, config.trajectories.as_mut()) {
        tr.seed = seed;
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CwlmError::InvalidParameter(format!("{}: {e}", out_dir.display())))?;
    std::fs::write(out_dir.join(format!("{name}.toml")), config.to_toml())
        .map_err(|e| CwlmError::InvalidParameter(e.to_string()))?;

    let scenario = config.validate()?;
    let sidecar = run_distribution(&scenario, out_dir)?;

    if plan.zero_overlap_curves {
        let t = scenario.t_values[0];
        let sigma = scenario.detector.sigma(t);
        let grid = uniform_grid(-4.0, 4.0, 801);
        let mut columns: Vec<(String, Vec<f64>)> = vec![("o".into(), grid.clone())];
        for k in [1.0, 2.0, 5.0] {
            let d = zero_overlap_distribution(k, sigma, &grid)?;
            columns.push((format!("p_k{}", k as i64), d.density));
        }
        let borrowed: Vec<(String, &[f64])> =
            columns.iter().map(|(n, v)| (n.clone(), v.as_slice())).collect();
        write_csv(&csv_path(out_dir, "zero_overlap_reference"), &borrowed)?;
    }

    if let Some(t_series) = plan.mean_sweep_t_us {
        let mut sweep_config = config.clone();
        sweep_config.measurement.t_values_us = t_series;
        let sweep_scenario = sweep_config.validate()?;
        run_sweep(&sweep_scenario, SweepQuantity::Mean, out_dir)?;
    }

    Ok(sidecar)
}

#[cfg(test)]
mod tests {
    use super::super::config::ScenarioConfig;
    use super::*;

    fn fig1_scenario() -> Scenario {
        let (cfg, _) = presets::preset("fig1").unwrap();
        cfg.validate().unwrap()
    }

    fn temp_out(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("cwlm_run_{tag}"));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn distribution_run_writes_csv_and_sidecar() {
        let scenario = fig1_scenario();
        let dir = temp_out("dist");
        let sidecar = run_distribution(&scenario, &dir).unwrap();
        assert!(!sidecar.degraded(), "{:?}", sidecar.quality);
        assert_eq!(sidecar.files, vec!["distribution_t0p5us.csv"]);

        let text = std::fs::read_to_string(dir.join("distribution_t0p5us.csv")).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "O,p_z_plus,p_z_minus,difference,certainty");

        // Sidecar re-runs verbatim and reproduces the CSV byte for byte.
        let first = std::fs::read(dir.join("distribution_t0p5us.csv")).unwrap();
        let loaded = ScenarioConfig::load(&dir.join("sidecar.json")).unwrap();
        assert_eq!(loaded, scenario.config);
        let dir2 = temp_out("dist_rerun");
        run_distribution(&loaded.validate().unwrap(), &dir2).unwrap();
        let second = std::fs::read(dir2.join("distribution_t0p5us.csv")).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn sweep_rejects_single_window() {
        let scenario = fig1_scenario();
        let dir = temp_out("sweep_bad");
        assert!(run_sweep(&scenario, SweepQuantity::Mean, &dir).is_err());
    }

    #[test]
    fn sweep_mean_runs_on_series() {
        let (mut cfg, _) = presets::preset("fig1").unwrap();
        cfg.measurement.t_values_us = vec![0.25, 0.5, 1.0];
        let scenario = cfg.validate().unwrap();
        let dir = temp_out("sweep_mean");
        let path = run_sweep(&scenario, SweepQuantity::Mean, &dir).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "t_us,mean_z_plus,mean_z_minus");
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn validate_writes_report() {
        let scenario = fig1_scenario();
        let dir = temp_out("validate");
        let report = run_validate(&scenario, &dir).unwrap();
        assert!(report.passed());
        assert!(dir.join("validate.json").exists());
    }

    #[test]
    fn trajectories_smoke_run() {
        let (mut cfg, _) = presets::preset("fig1").unwrap();
        cfg.trajectories = Some(super::super::config::TrajectoryOptions {
            n_traj: 400,
            dt_us: 2e-3,
            seed: 7,
        });
        let scenario = cfg.validate().unwrap();
        let dir = temp_out("traj");
        let summary = run_trajectories(&scenario, &dir, None).unwrap();
        assert_eq!(summary.cases.len(), 2);
        for case in &summary.cases {
            assert!(case.acceptance_within_3sigma, "{case:?}");
            assert!(case.ks_distance < 0.2, "{case:?}");
        }
        assert!(dir.join("trajectories.json").exists());
    }
}
