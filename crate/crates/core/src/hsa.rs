//! Rate theory built on Hilbert-space averages.
//!
//! Replacing the state-dependent terms of the truncated step by their
//! averages over all states with the same excitation probability turns the
//! step into a linear map on `(P_ex, P_gr)`. In the linear regime
//! `τ₁ < τ < τ₂` the traces `tr{Û₁²}` grow linearly in `τ`, which yields the
//! rate constant `C = 2πλ²/δε` and the rate equation
//! `dP_ex/dt = C N₀ P_gr − C N₁ P_ex`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hamiltonian, ModelParams, PureState};
use crate::par::{self, Execution};
use crate::propagator::build_u1;
use crate::seed::{self, Stream};

/// Pass threshold for the "much less than one" conditions.
pub const MUCH_LESS_THRESHOLD: f64 = 0.25;
/// Pass threshold for the "at least one" conditions.
pub const AT_LEAST_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTheory {
    /// Rate constant `C`.
    pub c: f64,
    pub n_upper: usize,
    pub n_lower: usize,
    /// Start of the linear regime, `4π/δε`.
    pub tau1: f64,
    /// End of the linear regime, `n_upper · tau1`.
    pub tau2: f64,
}

pub fn rate_constant(params: &ModelParams) -> RateTheory {
    let width = params.band_width();
    let tau1 = 4.0 * PI / width;
    RateTheory {
        c: 2.0 * PI * params.coupling_scale.powi(2) / width,
        n_upper: params.n_upper,
        n_lower: params.n_lower,
        tau1,
        tau2: params.n_upper as f64 * tau1,
    }
}

impl RateTheory {
    /// Relaxation rate `C (N₀ + N₁)`.
    pub fn relaxation_rate(&self) -> f64 {
        self.c * (self.n_upper + self.n_lower) as f64
    }

    /// Relaxation time `1 / (C (N₀ + N₁))`; infinite for zero coupling.
    pub fn relaxation_time(&self) -> f64 {
        1.0 / self.relaxation_rate()
    }

    pub fn equilibrium(&self) -> (f64, f64) {
        equilibrium(self.n_upper, self.n_lower)
    }

    pub fn solution(&self, p_ex0: f64, t: f64) -> (f64, f64) {
        rate_solution(self, p_ex0, t)
    }
}

/// `P_ex(t)` and `P_gr(t)` solving the rate equation from `P_ex(0) = p_ex0`.
pub fn rate_solution(theory: &RateTheory, p_ex0: f64, t: f64) -> (f64, f64) {
    let (p_inf, _) = theory.equilibrium();
    let decay = (-theory.relaxation_rate() * t).exp();
    let p_ex = p_inf + (p_ex0 - p_inf) * decay;
    (p_ex, 1.0 - p_ex)
}

/// Long-time limit `(N₀/(N₀+N₁), N₁/(N₀+N₁))`.
pub fn equilibrium(n_upper: usize, n_lower: usize) -> (f64, f64) {
    let p_ex = n_lower as f64 / (n_upper + n_lower) as f64;
    (p_ex, 1.0 - p_ex)
}

/// `f(ω) = sin²(ωτ/2)/ω²`, with `f(0) = τ²/4`.
pub fn peak_function(omega: f64, tau: f64) -> f64 {
    let x = 0.5 * omega * tau;
    if x == 0.0 {
        return 0.25 * tau * tau;
    }
    let s = x.sin() / x;
    0.25 * tau * tau * s * s
}

/// Linear-regime prediction `2πλ² N₁ N₀ τ / δε` for `tr_ex{Û₁²}` (and,
/// identically, `tr_gr{Û₁²}`).
pub fn u1_trace_prediction(params: &ModelParams, tau: f64) -> f64 {
    let theory = rate_constant(params);
    if !(tau > theory.tau1 && tau < theory.tau2) {
        log::warn!(
            "tau = {tau} outside the linear regime ({}, {})",
            theory.tau1,
            theory.tau2
        );
    }
    2.0 * PI * params.coupling_scale.powi(2) * (params.n_upper * params.n_lower) as f64 * tau
        / params.band_width()
}

/// One step of the averaged short-time map starting from `(p_ex0, p_gr0)`.
pub fn short_step_prediction(theory: &RateTheory, p_ex0: f64, p_gr0: f64, tau: f64) -> (f64, f64) {
    let ct = theory.c * tau;
    if ct * theory.n_upper.max(theory.n_lower) as f64 > 1.0 {
        log::warn!("step C·τ·max(N₀, N₁) = {} exceeds one", ct * theory.n_upper.max(theory.n_lower) as f64);
    }
    let p_ex = p_ex0 + ct * theory.n_lower as f64 * p_gr0 - ct * theory.n_upper as f64 * p_ex0;
    (p_ex, 1.0 - p_ex)
}

/// Validity numbers of the rate description and their verdicts.
///
/// Serialized keys follow the established report schema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// Second-order lower-band term at `τ₁`: `8π² (λ/Δε₀)² / N₀`, must be ≪ 1.
    #[serde(rename = "cond_330")]
    pub truncation_lower: f64,
    /// Second-order upper-band term at `τ₁`: `8π² (λ/Δε₁)² / N₁`, must be ≪ 1.
    #[serde(rename = "cond_301")]
    pub truncation_upper: f64,
    /// Lower-band term at `τ₂`: `8π² (λ/Δε₀)²`, must be ≥ 1.
    #[serde(rename = "cond_302")]
    pub window_lower: f64,
    /// Upper-band term at `τ₂`: `8π² (λ/Δε₁)²`, must be ≥ 1.
    #[serde(rename = "cond_320")]
    pub window_upper: f64,
    #[serde(rename = "pass_330")]
    pub truncation_lower_pass: bool,
    #[serde(rename = "pass_301")]
    pub truncation_upper_pass: bool,
    #[serde(rename = "pass_302")]
    pub window_lower_pass: bool,
    #[serde(rename = "pass_320")]
    pub window_upper_pass: bool,
    pub all_pass: bool,
    pub much_less_threshold: f64,
    pub at_least_threshold: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub c: f64,
}

pub fn regime_report(params: &ModelParams) -> RegimeReport {
    let theory = rate_constant(params);
    let lambda_sq = params.coupling_scale.powi(2);
    let k = 8.0 * PI * PI;
    let window_lower = k * lambda_sq / params.spacing_lower.powi(2);
    let window_upper = k * lambda_sq / params.spacing_upper.powi(2);
    let truncation_lower = window_lower / params.n_lower as f64;
    let truncation_upper = window_upper / params.n_upper as f64;
    let flags = [
        truncation_lower <= MUCH_LESS_THRESHOLD,
        truncation_upper <= MUCH_LESS_THRESHOLD,
        window_lower >= AT_LEAST_THRESHOLD,
        window_upper >= AT_LEAST_THRESHOLD,
    ];
    RegimeReport {
        truncation_lower,
        truncation_upper,
        window_lower,
        window_upper,
        truncation_lower_pass: flags[0],
        truncation_upper_pass: flags[1],
        window_lower_pass: flags[2],
        window_upper_pass: flags[3],
        all_pass: flags.iter().all(|&f| f),
        much_less_threshold: MUCH_LESS_THRESHOLD,
        at_least_threshold: AT_LEAST_THRESHOLD,
        tau1: theory.tau1,
        tau2: theory.tau2,
        c: theory.c,
    }
}

impl RegimeReport {
    /// Human-readable descriptions of the failing conditions.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let checks = [
            ("cond_330", self.truncation_lower, self.truncation_lower_pass, "<="),
            ("cond_301", self.truncation_upper, self.truncation_upper_pass, "<="),
            ("cond_302", self.window_lower, self.window_lower_pass, ">="),
            ("cond_320", self.window_upper, self.window_upper_pass, ">="),
        ];
        for (name, value, pass, op) in checks {
            if !pass {
                let limit = if op == "<=" {
                    self.much_less_threshold
                } else {
                    self.at_least_threshold
                };
                out.push(format!("{name} = {value:.4} violates {op} {limit}"));
            }
        }
        out
    }
}

/// Sample mean, spread and the value it is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
    pub predicted: f64,
}

impl Estimate {
    fn from_samples(xs: &[f64], predicted: f64) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std_dev = var.sqrt();
        Estimate {
            mean,
            std_dev,
            std_err: std_dev / n.sqrt(),
            predicted,
        }
    }

    /// Deviation from the prediction in units of the standard error.
    pub fn z_score(&self) -> f64 {
        let dev = (self.mean - self.predicted).abs();
        if dev == 0.0 {
            0.0
        } else {
            dev / self.std_err
        }
    }

    pub fn agrees_within(&self, k_sigma: f64) -> bool {
        (self.mean - self.predicted).abs() <= k_sigma * self.std_err
    }

    /// `std_dev / |mean|`.
    pub fn relative_spread(&self) -> f64 {
        self.std_dev / self.mean.abs()
    }
}

/// Monte-Carlo estimates of the averaged step quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertAverageStats {
    pub n_samples: usize,
    pub tau: f64,
    pub p_ex: f64,
    /// `tr_ex{Û₁²}` by direct summation.
    pub trace_excited: f64,
    /// `tr_gr{Û₁²}` by direct summation.
    pub trace_ground: f64,
    /// Real part of `⟨ψ^gr|Û₁|ψ^ex⟩`, predicted 0.
    pub cross_re: Estimate,
    /// Imaginary part of `⟨ψ^gr|Û₁|ψ^ex⟩`, predicted 0.
    pub cross_im: Estimate,
    /// `⟨ψ^ex|Û₁²|ψ^ex⟩`, predicted `(P_ex/N₀) tr_ex{Û₁²}`.
    pub excited_second: Estimate,
    /// `⟨ψ^gr|Û₁²|ψ^gr⟩`, predicted `(P_gr/N₁) tr_gr{Û₁²}`.
    pub ground_second: Estimate,
}

impl HilbertAverageStats {
    pub fn agrees_within(&self, k_sigma: f64) -> bool {
        [
            &self.cross_re,
            &self.cross_im,
            &self.excited_second,
            &self.ground_second,
        ]
        .iter()
        .all(|e| e.agrees_within(k_sigma))
    }
}

/// Averages the step quantities over random states with fixed sector
/// weights `(p_ex_fixed, 1 − p_ex_fixed)`, each sector uniform on its sphere.
/// Sample `k` draws from its own RNG stream, so results do not depend on the
/// execution mode.
pub fn hilbert_average_check(
    h: &Hamiltonian,
    tau: f64,
    p_ex_fixed: f64,
    n_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<HilbertAverageStats> {
    if !(0.0..=1.0).contains(&p_ex_fixed) {
        return Err(Error::invalid("p_ex", format!("must lie in [0, 1], got {p_ex_fixed}")));
    }
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", format!("need at least 2, got {n_samples}")));
    }
    let u1 = build_u1(h, tau)?;
    let (nu, nl) = (h.n_upper(), h.n_lower());
    let samples = par::map_indexed(exec, n_samples, |k| {
        let mut rng = seed::rng(seed, Stream::HaarSample(k as u64));
        let psi = PureState::random_with_excitation(nu, nl, p_ex_fixed, &mut rng);
        let z = u1.ground_excited_element(&psi);
        [
            z.re,
            z.im,
            u1.excited_second_moment(&psi),
            u1.ground_second_moment(&psi),
        ]
    });
    let column = |c: usize| samples.iter().map(|s| s[c]).collect::<Vec<_>>();
    let trace_excited = u1.trace_excited();
    let trace_ground = u1.trace_ground();
    Ok(HilbertAverageStats {
        n_samples,
        tau,
        p_ex: p_ex_fixed,
        trace_excited,
        trace_ground,
        cross_re: Estimate::from_samples(&column(0), 0.0),
        cross_im: Estimate::from_samples(&column(1), 0.0),
        excited_second: Estimate::from_samples(&column(2), p_ex_fixed / nl as f64 * trace_excited),
        ground_second: Estimate::from_samples(
            &column(3),
            (1.0 - p_ex_fixed) / nu as f64 * trace_ground,
        ),
    })
}
