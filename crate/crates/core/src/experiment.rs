//! Experiment orchestration and output files.
//!
//! * `run`: one trajectory, CSV of observables plus theory columns, JSON
//!   sidecar with parameters, regime report, fitted rate and equilibrium
//!   comparison.
//! * `sweep`: the same for every `(size, seed)` pair, plus a summary of
//!   the deviation from the theory curve per size.
//! * `regime`: the validity report only.
//! * `hsa-check`: Monte-Carlo verification of the averaged step quantities
//!   at the configured size and at twice that size.
//!
//! Run `k` under master seed `m` uses seed `seed::derive(m, k)` for both
//! the coupling matrix and the initial state (on separate streams).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_exponential_decay, DecayFit};
use crate::hsa::{self, HilbertAverageStats, RateTheory, RegimeReport};
use crate::model::{build_hamiltonian, initial_state, CouplingKind, ModelParams};
use crate::par::{self, Execution};
use crate::propagator::{uniform_grid, EvolveOptions, Propagator, StateStorage, Trajectory};
use crate::seed;

pub const CSV_HEADER: &str = "t,p_ex,p_gr,p_ex_theory,p_gr_theory,purity_s,purity_r,p_c,eta,norm_err";

/// Default container sizes of the sweep.
pub const DEFAULT_SIZES: [usize; 5] = [50, 100, 200, 400, 800];

/// Fit window end, in relaxation times.
pub const FIT_WINDOW: f64 = 2.0;
/// Window for the deviation from theory, in relaxation times.
pub const DEVIATION_WINDOW: f64 = 3.0;
/// Window for the late-time equilibrium average, in relaxation times.
pub const LATE_WINDOW: (f64, f64) = (3.0, 5.0);
/// Default trajectory length, in relaxation times.
pub const DEFAULT_SPAN: f64 = 5.0;

/// Everything a run, sweep, regime or averaged-quantity check needs.
///
/// Deserialization fills missing fields from [`RunConfig::default`] and
/// rejects unknown keys, so a configuration file may list only what it
/// changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_upper: usize,
    pub n_lower: usize,
    pub spacing_upper: f64,
    pub spacing_lower: f64,
    pub coupling_scale: f64,
    pub coupling_kind: CouplingKind,
    /// Master seed.
    pub seed: u64,
    pub n_seeds: usize,
    /// Trajectory length; defaults to five relaxation times.
    pub t_max: Option<f64>,
    pub n_samples: usize,
    pub out_dir: PathBuf,
    pub sizes: Vec<usize>,
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_upper: 800,
            n_lower: 400,
            spacing_upper: 0.005,
            spacing_lower: 0.01,
            coupling_scale: 0.005,
            coupling_kind: CouplingKind::Real,
            seed: 1,
            n_seeds: 4,
            t_max: None,
            n_samples: 500,
            out_dir: PathBuf::from("out"),
            sizes: DEFAULT_SIZES.to_vec(),
            execution: Execution::Parallel,
        }
    }
}

impl RunConfig {
    /// Model parameters for the configured size and the given seed.
    pub fn params(&self, seed: u64) -> ModelParams {
        ModelParams {
            n_upper: self.n_upper,
            n_lower: self.n_lower,
            spacing_upper: self.spacing_upper,
            spacing_lower: self.spacing_lower,
            coupling_scale: self.coupling_scale,
            seed,
            coupling_kind: self.coupling_kind,
        }
    }

    /// Parameters at upper-band size `n_upper`, keeping both spacings and
    /// the band-size ratio of the configuration.
    pub fn params_for_size(&self, n_upper: usize, seed: u64) -> ModelParams {
        let n_lower = (n_upper * self.n_lower) / self.n_upper.max(1);
        ModelParams {
            n_upper,
            n_lower,
            ..self.params(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params(0).validate()?;
        if let Some(t) = self.t_max {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid("t_max", format!("must be positive, got {t}")));
            }
        }
        if self.n_samples < 2 {
            return Err(Error::invalid("samples", "need at least 2"));
        }
        if self.n_seeds == 0 {
            return Err(Error::invalid("seeds", "need at least 1"));
        }
        if self.sizes.is_empty() {
            return Err(Error::invalid("sizes", "size list is empty"));
        }
        Ok(())
    }

    fn t_max_for(&self, theory: &RateTheory) -> Result<f64> {
        match self.t_max {
            Some(t) => Ok(t),
            None => {
                let t = DEFAULT_SPAN * theory.relaxation_time();
                if t.is_finite() {
                    Ok(t)
                } else {
                    Err(Error::invalid(
                        "t_max",
                        "must be given explicitly when the coupling is zero",
                    ))
                }
            }
        }
    }
}

/// Scalar results of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_index: usize,
    pub seed: u64,
    pub n_upper: usize,
    pub n_lower: usize,
    pub t_max: f64,
    pub n_samples: usize,
    /// `C (N₀ + N₁)`.
    pub theory_rate: f64,
    pub fit: Option<DecayFit>,
    pub fit_window: [f64; 2],
    pub p_gr_equilibrium: f64,
    /// Mean of `p_gr` over the late window; `None` if no sample falls in it.
    pub p_gr_late_mean: Option<f64>,
    pub late_window: [f64; 2],
    /// `max |p_gr − p_gr_theory|` over the deviation window.
    pub max_deviation: f64,
    pub deviation_window: [f64; 2],
    pub max_norm_err: f64,
    pub max_energy_drift: f64,
    /// `min(eta − bound)` over the trajectory.
    pub min_eta_margin: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub params: ModelParams,
    pub theory: RateTheory,
    pub regime: RegimeReport,
    pub trajectory: Trajectory,
    /// `(p_ex, p_gr)` from the rate equation at each sample time.
    pub theory_curve: Vec<(f64, f64)>,
    pub summary: RunSummary,
}

/// Builds the model for `params`, evolves the initial state, and compares
/// with the rate theory.
pub fn simulate(
    params: &ModelParams,
    run_index: usize,
    t_max: f64,
    n_samples: usize,
    exec: Execution,
) -> Result<RunOutcome> {
    let h = build_hamiltonian(params)?;
    let psi0 = initial_state(params, params.seed)?;
    let times = uniform_grid(t_max, n_samples)?;
    let opts = EvolveOptions {
        execution: exec,
        storage: StateStorage::None,
    };
    let trajectory = Propagator::new(&h)?.evolve(&h, &psi0, &times, &opts)?;

    let theory = hsa::rate_constant(params);
    let regime = hsa::regime_report(params);
    let p_ex0 = trajectory.records[0].p_ex;
    let theory_curve: Vec<(f64, f64)> =
        times.iter().map(|&t| hsa::rate_solution(&theory, p_ex0, t)).collect();

    let relax = theory.relaxation_time();
    let (_, p_gr_inf) = theory.equilibrium();
    let p_gr: Vec<f64> = trajectory.records.iter().map(|r| r.p_gr).collect();
    let fit_window = [0.0, FIT_WINDOW * relax];
    let fit = fit_exponential_decay(&times, &p_gr, p_gr_inf, fit_window[0], fit_window[1]);

    let late_window = [LATE_WINDOW.0 * relax, LATE_WINDOW.1 * relax];
    let late: Vec<f64> = times
        .iter()
        .zip(&p_gr)
        .filter(|(t, _)| **t >= late_window[0] && **t <= late_window[1])
        .map(|(_, p)| *p)
        .collect();
    let p_gr_late_mean = (!late.is_empty()).then(|| late.iter().sum::<f64>() / late.len() as f64);

    let deviation_window = [0.0, DEVIATION_WINDOW * relax];
    let max_deviation = times
        .iter()
        .zip(&p_gr)
        .zip(&theory_curve)
        .filter(|((t, _), _)| **t <= deviation_window[1])
        .map(|((_, p), th)| (p - th.1).abs())
        .fold(0.0, f64::max);

    let e0 = trajectory.energies[0];
    let max_energy_drift = trajectory
        .energies
        .iter()
        .map(|e| (e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let max_norm_err = trajectory.records.iter().map(|r| r.norm_err).fold(0.0, f64::max);
    let min_eta_margin = trajectory
        .records
        .iter()
        .map(|r| r.eta - (1.0 / (r.purity_s * r.purity_r) - 1.0).max(0.0))
        .fold(f64::INFINITY, f64::min);

    let summary = RunSummary {
        run_index,
        seed: params.seed,
        n_upper: params.n_upper,
        n_lower: params.n_lower,
        t_max,
        n_samples,
        theory_rate: theory.relaxation_rate(),
        fit,
        fit_window,
        p_gr_equilibrium: p_gr_inf,
        p_gr_late_mean,
        late_window,
        max_deviation,
        deviation_window,
        max_norm_err,
        max_energy_drift,
        min_eta_margin,
    };
    Ok(RunOutcome {
        params: params.clone(),
        theory,
        regime,
        trajectory,
        theory_curve,
        summary,
    })
}

fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes the observable CSV with theory columns.
pub fn write_csv<W: Write>(mut w: W, outcome: &RunOutcome) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for (r, th) in outcome.trajectory.records.iter().zip(&outcome.theory_curve) {
        let row = [
            r.t, r.p_ex, r.p_gr, th.0, th.1, r.purity_s, r.purity_r, r.p_c, r.eta, r.norm_err,
        ];
        let line: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSidecar {
    pub params: ModelParams,
    pub master_seed: u64,
    pub regime: RegimeReport,
    pub summary: RunSummary,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_outcome(dir: &Path, stem: &str, master_seed: u64, outcome: &RunOutcome) -> Result<[PathBuf; 2]> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_csv(BufWriter::new(file), outcome).map_err(|e| Error::io(&csv_path, e))?;
    let json_path = dir.join(format!("{stem}.json"));
    let sidecar = RunSidecar {
        params: outcome.params.clone(),
        master_seed,
        regime: outcome.regime,
        summary: outcome.summary.clone(),
    };
    write_json(&json_path, &sidecar)?;
    Ok([csv_path, json_path])
}

fn log_regime(regime: &RegimeReport) {
    for msg in regime.failures() {
        log::warn!("parameter regime: {msg}");
    }
}

/// One trajectory at the configured size with run index 0.
pub fn run_single(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let params = config.params(seed::derive(config.seed, 0));
    let regime = hsa::regime_report(&params);
    log_regime(&regime);
    let t_max = config.t_max_for(&hsa::rate_constant(&params))?;
    let outcome = simulate(&params, 0, t_max, config.n_samples, config.execution)?;
    ensure_dir(&config.out_dir)?;
    write_outcome(
        &config.out_dir,
        &format!("run_n1-{}_seed-0", params.n_upper),
        config.seed,
        &outcome,
    )?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n_upper: usize,
    pub n_lower: usize,
    pub theory_rate: f64,
    /// Seed-averaged `max |p_gr − p_gr_theory|` over the deviation window.
    pub mean_max_deviation: f64,
    pub max_deviations: Vec<f64>,
    pub mean_fitted_rate: Option<f64>,
    pub fitted_rates: Vec<Option<f64>>,
    pub late_means: Vec<Option<f64>>,
    pub regime: RegimeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub sizes: Vec<SizeSummary>,
    /// Adjacent size pairs (ascending) whose mean deviation increases.
    pub inversions: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Sorted by `(n_upper, run_index)`.
    pub runs: Vec<RunOutcome>,
    pub summary: SweepSummary,
}

/// Every configured size for every seed; entries run in parallel and files
/// are written per entry.
pub fn run_sweep(config: &RunConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let mut sizes = config.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let seeds: Vec<u64> = (0..config.n_seeds as u64)
        .map(|k| seed::derive(config.seed, k))
        .collect();
    let mut entries = Vec::new();
    for &n in &sizes {
        let params = config.params_for_size(n, seeds[0]);
        params.validate()?;
        log_regime(&hsa::regime_report(&params));
        let t_max = config.t_max_for(&hsa::rate_constant(&params))?;
        for (k, &s) in seeds.iter().enumerate() {
            entries.push((config.params_for_size(n, s), k, t_max));
        }
    }
    ensure_dir(&config.out_dir)?;
    let results = par::map_slice(config.execution, &entries, |(params, k, t_max)| {
        let outcome = simulate(params, *k, *t_max, config.n_samples, config.execution)?;
        write_outcome(
            &config.out_dir,
            &format!("sweep_n1-{}_seed-{}", params.n_upper, k),
            config.seed,
            &outcome,
        )?;
        Ok(outcome)
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let per_size: Vec<SizeSummary> = sizes
        .iter()
        .map(|&n| {
            let group: Vec<&RunOutcome> = runs.iter().filter(|r| r.params.n_upper == n).collect();
            let max_deviations: Vec<f64> = group.iter().map(|r| r.summary.max_deviation).collect();
            let fitted_rates: Vec<Option<f64>> =
                group.iter().map(|r| r.summary.fit.map(|f| f.rate)).collect();
            let mean_fitted_rate = fitted_rates
                .iter()
                .copied()
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / v.len() as f64);
            SizeSummary {
                n_upper: n,
                n_lower: group[0].params.n_lower,
                theory_rate: group[0].theory.relaxation_rate(),
                mean_max_deviation: max_deviations.iter().sum::<f64>() / max_deviations.len() as f64,
                max_deviations,
                mean_fitted_rate,
                fitted_rates,
                late_means: group.iter().map(|r| r.summary.p_gr_late_mean).collect(),
                regime: group[0].regime,
            }
        })
        .collect();
    let inversions = per_size
        .windows(2)
        .filter(|w| w[1].mean_max_deviation > w[0].mean_max_deviation)
        .count();
    let summary = SweepSummary {
        master_seed: config.seed,
        seeds,
        sizes: per_size,
        inversions,
    };
    write_json(&config.out_dir.join("sweep_summary.json"), &summary)?;
    Ok(SweepOutcome { runs, summary })
}

/// Validity report at the configured size.
pub fn run_regime(config: &RunConfig) -> Result<RegimeReport> {
    config.validate()?;
    Ok(hsa::regime_report(&config.params(seed::derive(config.seed, 0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsaCheckOptions {
    /// Step length as a multiple of `τ₁` (applied at both sizes).
    pub tau_over_tau1: f64,
    pub p_ex: f64,
    pub n_samples: usize,
}

impl Default for HsaCheckOptions {
    fn default() -> Self {
        HsaCheckOptions {
            tau_over_tau1: 3.0,
            p_ex: 0.5,
            n_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsaCheckReport {
    pub options: HsaCheckOptions,
    pub base_params: ModelParams,
    pub base: HilbertAverageStats,
    pub doubled: HilbertAverageStats,
    /// All four averages within three standard errors at the base size.
    pub base_agrees: bool,
    /// Relative spread of both second moments shrinks from base to doubled size.
    pub spread_shrinks: bool,
}

/// Averaged-quantity check at the configured size and at twice that size.
pub fn run_hsa_check(config: &RunConfig, opts: &HsaCheckOptions) -> Result<HsaCheckReport> {
    config.validate()?;
    let run_seed = seed::derive(config.seed, 0);
    let check = |params: &ModelParams| -> Result<HilbertAverageStats> {
        let h = build_hamiltonian(params)?;
        let tau = opts.tau_over_tau1 * hsa::rate_constant(params).tau1;
        hsa::hilbert_average_check(&h, tau, opts.p_ex, opts.n_samples, params.seed, config.execution)
    };
    let base_params = config.params(run_seed);
    let base = check(&base_params)?;
    let doubled = check(&config.params_for_size(2 * config.n_upper, run_seed))?;
    let spread_shrinks = doubled.excited_second.relative_spread() < base.excited_second.relative_spread()
        && doubled.ground_second.relative_spread() < base.ground_second.relative_spread();
    let report = HsaCheckReport {
        options: *opts,
        base_params,
        base_agrees: base.agrees_within(3.0),
        base,
        doubled,
        spread_shrinks,
    };
    ensure_dir(&config.out_dir)?;
    write_json(&config.out_dir.join("hsa_check.json"), &report)?;
    Ok(report)
}
