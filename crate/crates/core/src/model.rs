//! The two-band system-environment model.
//!
//! A two-level "gas" with gap `ΔE` couples to a "container" whose relevant
//! spectrum consists of two bands of equal width `δε`: an upper band of
//! `n_upper` levels and a lower band of `n_lower` levels. Energy exchange
//! only connects `|0⟩⊗(upper band)` with `|1⟩⊗(lower band)`, so the dynamics
//! lives on the `n_upper + n_lower` dimensional resonant subspace.
//!
//! Ordering convention, shared by every module: amplitudes
//! `0..n_upper` form the ground sector (gas in `|0⟩`, container in upper
//! level `i`), amplitudes `n_upper..n_upper + n_lower` form the excited
//! sector (gas in `|1⟩`, container in lower level `j`). Both level ladders
//! start at offset zero; the gap only shifts both sectors equally and is
//! dropped. Units are `ħ = 1`, `ΔE = 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Relative tolerance for the equal-band-width requirement.
pub const BAND_WIDTH_RTOL: f64 = 1e-12;

/// Tolerance on `‖ψ‖ = 1` accepted by [`PureState::new`].
pub const NORM_TOL: f64 = 1e-9;

/// Distribution of the raw coupling entries before rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    /// Real Gaussian entries: `V` is real, `H` real symmetric.
    #[default]
    Real,
    /// Complex Gaussian entries (independent real and imaginary parts).
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of levels in the upper container band.
    pub n_upper: usize,
    /// Number of levels in the lower container band.
    pub n_lower: usize,
    /// Level spacing in the upper band.
    pub spacing_upper: f64,
    /// Level spacing in the lower band.
    pub spacing_lower: f64,
    /// Target RMS coupling matrix element `λ`.
    pub coupling_scale: f64,
    pub seed: u64,
    #[serde(default)]
    pub coupling_kind: CouplingKind,
}

impl ModelParams {
    /// Default parameterization of the size sweep: spacings `0.005` (upper)
    /// and `0.01` (lower), `λ` equal to the upper spacing, and
    /// `n_lower = n_upper / 2`. The rate theory curve is then the same for
    /// every `n_upper`.
    pub fn sweep_default(n_upper: usize, seed: u64) -> Self {
        let spacing_upper = 0.005;
        Self::with_equal_widths(n_upper, n_upper / 2, spacing_upper, spacing_upper, seed)
    }

    /// Builds parameters whose lower spacing is chosen so that both bands
    /// have width `n_upper * spacing_upper`.
    pub fn with_equal_widths(
        n_upper: usize,
        n_lower: usize,
        spacing_upper: f64,
        coupling_scale: f64,
        seed: u64,
    ) -> Self {
        let spacing_lower = if n_lower == 0 {
            f64::NAN
        } else {
            n_upper as f64 * spacing_upper / n_lower as f64
        };
        ModelParams {
            n_upper,
            n_lower,
            spacing_upper,
            spacing_lower,
            coupling_scale,
            seed,
            coupling_kind: CouplingKind::Real,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_upper + self.n_lower
    }

    /// Band width `δε`.
    pub fn band_width(&self) -> f64 {
        self.n_upper as f64 * self.spacing_upper
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_upper == 0 || self.n_lower == 0 {
            return Err(Error::EmptyBand {
                n_upper: self.n_upper,
                n_lower: self.n_lower,
            });
        }
        for (name, v) in [
            ("spacing_upper", self.spacing_upper),
            ("spacing_lower", self.spacing_lower),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.coupling_scale.is_finite() && self.coupling_scale >= 0.0) {
            return Err(Error::invalid(
                "coupling_scale",
                format!("must be non-negative, got {}", self.coupling_scale),
            ));
        }
        let upper_width = self.n_upper as f64 * self.spacing_upper;
        let lower_width = self.n_lower as f64 * self.spacing_lower;
        if (upper_width - lower_width).abs() > BAND_WIDTH_RTOL * upper_width.max(lower_width) {
            return Err(Error::BandWidthMismatch {
                upper_width,
                lower_width,
            });
        }
        Ok(())
    }
}

/// Hamiltonian on the resonant subspace: diagonal `H₀` plus the coupling
/// block `V` (rows: ground sector, columns: excited sector) and its adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_upper: usize,
    diag: Vec<f64>,
    coupling: DMatrix<Complex64>,
}

impl Hamiltonian {
    /// Assembles a Hamiltonian from its free spectrum and coupling block.
    pub fn from_parts(n_upper: usize, diag: Vec<f64>, coupling: DMatrix<Complex64>) -> Result<Self> {
        let n_lower = diag.len().saturating_sub(n_upper);
        if n_upper == 0 || n_lower == 0 {
            return Err(Error::EmptyBand { n_upper, n_lower });
        }
        if coupling.nrows() != n_upper || coupling.ncols() != n_lower {
            return Err(Error::DimensionMismatch {
                expected: n_upper * n_lower,
                got: coupling.len(),
            });
        }
        let finite = diag.iter().all(|e| e.is_finite())
            && coupling.iter().all(|v| v.re.is_finite() && v.im.is_finite());
        if !finite {
            return Err(Error::NonFinite);
        }
        Ok(Hamiltonian {
            n_upper,
            diag,
            coupling,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn n_upper(&self) -> usize {
        self.n_upper
    }

    pub fn n_lower(&self) -> usize {
        self.diag.len() - self.n_upper
    }

    /// Eigenvalues of `H₀` in state ordering.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// The `n_upper × n_lower` block `V`.
    pub fn coupling(&self) -> &DMatrix<Complex64> {
        &self.coupling
    }

    /// True when every coupling entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.coupling.iter().all(|v| v.im == 0.0)
    }

    /// `λ² = (1/(N₁N₀)) Σ|V_ij|²`.
    pub fn mean_square_coupling(&self) -> f64 {
        mean_square(&self.coupling)
    }

    /// Full `d × d` matrix.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let nu = self.n_upper;
        let mut h = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for (k, &e) in self.diag.iter().enumerate() {
            h[(k, k)] = Complex64::new(e, 0.0);
        }
        for j in 0..self.n_lower() {
            for i in 0..nu {
                let v = self.coupling[(i, j)];
                h[(i, nu + j)] = v;
                h[(nu + j, i)] = v.conj();
            }
        }
        h
    }

    /// Full matrix as real symmetric, if the coupling is real.
    pub fn dense_real(&self) -> Option<DMatrix<f64>> {
        if !self.is_real() {
            return None;
        }
        Some(self.dense().map(|z| z.re))
    }

    /// `H ψ` using the block structure.
    pub fn apply(&self, amplitudes: &[Complex64]) -> Vec<Complex64> {
        let nu = self.n_upper;
        let (ground, excited) = amplitudes.split_at(nu);
        let mut out: Vec<Complex64> = amplitudes
            .iter()
            .zip(&self.diag)
            .map(|(a, &e)| a * e)
            .collect();
        for j in 0..self.n_lower() {
            let col = self.coupling.column(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..nu {
                out[i] += col[i] * excited[j];
                acc += col[i].conj() * ground[i];
            }
            out[nu + j] += acc;
        }
        out
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, state: &PureState) -> f64 {
        let hpsi = self.apply(state.amplitudes());
        state
            .amplitudes()
            .iter()
            .zip(&hpsi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

fn mean_square(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>() / m.len() as f64
}

/// Builds the Hamiltonian for `params`, sampling the coupling from `params.seed`.
pub fn build_hamiltonian(params: &ModelParams) -> Result<Hamiltonian> {
    params.validate()?;
    let diag = (0..params.n_upper)
        .map(|i| i as f64 * params.spacing_upper)
        .chain((0..params.n_lower).map(|j| j as f64 * params.spacing_lower))
        .collect();
    let coupling = sample_coupling(
        params.n_upper,
        params.n_lower,
        params.coupling_scale,
        params.seed,
        params.coupling_kind,
    )?;
    Hamiltonian::from_parts(params.n_upper, diag, coupling)
}

/// Samples an `n_upper × n_lower` Gaussian coupling block, rescaled so that
/// its mean squared modulus equals `coupling_scale²` exactly. A zero scale
/// yields the zero matrix.
pub fn sample_coupling(
    n_upper: usize,
    n_lower: usize,
    coupling_scale: f64,
    seed: u64,
    kind: CouplingKind,
) -> Result<DMatrix<Complex64>> {
    if n_upper == 0 || n_lower == 0 {
        return Err(Error::EmptyBand { n_upper, n_lower });
    }
    if !(coupling_scale.is_finite() && coupling_scale >= 0.0) {
        return Err(Error::invalid(
            "coupling_scale",
            format!("must be non-negative, got {coupling_scale}"),
        ));
    }
    if coupling_scale == 0.0 {
        return Ok(DMatrix::from_element(n_upper, n_lower, Complex64::new(0.0, 0.0)));
    }
    let mut rng = seed::rng(seed, Stream::Coupling);
    let mut v = DMatrix::from_fn(n_upper, n_lower, |_, _| match kind {
        CouplingKind::Real => Complex64::new(rng.sample(StandardNormal), 0.0),
        CouplingKind::Complex => {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        }
    });
    let factor = coupling_scale / mean_square(&v).sqrt();
    v.iter_mut().for_each(|z| *z *= factor);
    Ok(v)
}

/// Pure state on the resonant subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    n_upper: usize,
}

impl PureState {
    /// Wraps `amplitudes`, checking that the norm is one to [`NORM_TOL`].
    pub fn new(amplitudes: Vec<Complex64>, n_upper: usize) -> Result<Self> {
        if n_upper > amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: n_upper,
                got: amplitudes.len(),
            });
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState {
            amplitudes,
            n_upper,
        })
    }

    /// Concatenates sector vectors and normalizes the result.
    pub fn from_sectors(ground: &[Complex64], excited: &[Complex64]) -> Result<Self> {
        let mut amplitudes: Vec<Complex64> = ground.iter().chain(excited).copied().collect();
        let n = norm(&amplitudes);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotNormalized { norm: n });
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(PureState {
            amplitudes,
            n_upper: ground.len(),
        })
    }

    /// Haar-random state on the whole resonant subspace.
    pub fn random<R: Rng + ?Sized>(n_upper: usize, n_lower: usize, rng: &mut R) -> Self {
        let amps = complex_gaussian(n_upper + n_lower, rng);
        let n = norm(&amps);
        PureState {
            amplitudes: amps.into_iter().map(|a| a / n).collect(),
            n_upper,
        }
    }

    /// Random state with `‖ψ^ex‖² = p_ex`, uniform on each sector sphere.
    pub fn random_with_excitation<R: Rng + ?Sized>(
        n_upper: usize,
        n_lower: usize,
        p_ex: f64,
        rng: &mut R,
    ) -> Self {
        let mut ground = complex_gaussian(n_upper, rng);
        let mut excited = complex_gaussian(n_lower, rng);
        scale_to(&mut ground, (1.0 - p_ex).max(0.0).sqrt());
        scale_to(&mut excited, p_ex.max(0.0).sqrt());
        ground.extend(excited);
        PureState {
            amplitudes: ground,
            n_upper,
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_upper(&self) -> usize {
        self.n_upper
    }

    pub fn n_lower(&self) -> usize {
        self.amplitudes.len() - self.n_upper
    }

    /// `|ψ^gr⟩`: gas in `|0⟩`, container in the upper band.
    pub fn ground(&self) -> &[Complex64] {
        &self.amplitudes[..self.n_upper]
    }

    /// `|ψ^ex⟩`: gas in `|1⟩`, container in the lower band.
    pub fn excited(&self) -> &[Complex64] {
        &self.amplitudes[self.n_upper..]
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub(crate) fn from_raw(amplitudes: Vec<Complex64>, n_upper: usize) -> Self {
        PureState {
            amplitudes,
            n_upper,
        }
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amplitudes)
    }
}

/// Initial state: gas in `|0⟩`, container in a Haar-random superposition of
/// upper-band levels. The excited sector is exactly zero.
pub fn initial_state(params: &ModelParams, seed: u64) -> Result<PureState> {
    params.validate()?;
    let mut rng = seed::rng(seed, Stream::InitialState);
    let mut ground = complex_gaussian(params.n_upper, &mut rng);
    scale_to(&mut ground, 1.0);
    ground.resize(params.dim(), Complex64::new(0.0, 0.0));
    Ok(PureState::from_raw(ground, params.n_upper))
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn complex_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

fn scale_to(v: &mut [Complex64], target: f64) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a *= target / n);
    }
}
