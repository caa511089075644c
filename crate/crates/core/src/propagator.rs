//! Time evolution on the resonant subspace.
//!
//! [`Propagator`] diagonalizes `H` once and evolves any state exactly by
//! phase rotation in the eigenbasis. [`DysonOperators`] holds the
//! first-order interaction-picture integral `Û₁(τ)` and evaluates the
//! second-order truncated step for the sector probabilities, with the
//! `Û₂` terms replaced by `Û₁²` terms through probability conservation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Hamiltonian, PureState};
use crate::observables::ObservableRecord;
use crate::par::{self, Execution};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
enum Eigenvectors {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// Exact propagator `exp(−iHt)` from a Hermitian eigendecomposition.
#[derive(Debug, Clone)]
pub struct Propagator {
    n_upper: usize,
    energies: Vec<f64>,
    vectors: Eigenvectors,
}

impl Propagator {
    /// Diagonalizes `h`. Real couplings use the real symmetric solver.
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        let d = h.dim();
        let max_iter = 200 * d.max(10);
        let (energies, vectors) = match h.dense_real() {
            Some(m) => {
                if m.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite);
                }
                let eig = m
                    .try_symmetric_eigen(f64::EPSILON, max_iter)
                    .ok_or(Error::EigenFailed)?;
                (eig.eigenvalues, Eigenvectors::Real(eig.eigenvectors))
            }
            None => {
                let eig = h
                    .dense()
                    .try_symmetric_eigen(f64::EPSILON, max_iter)
                    .ok_or(Error::EigenFailed)?;
                (eig.eigenvalues, Eigenvectors::Complex(eig.eigenvectors))
            }
        };
        Ok(Propagator {
            n_upper: h.n_upper(),
            energies: energies.iter().copied().collect(),
            vectors,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Coordinates of `psi` in the eigenbasis, `Q†ψ`.
    pub fn to_eigenbasis(&self, psi: &PureState) -> Result<Vec<Complex64>> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        let out = match &self.vectors {
            Eigenvectors::Real(q) => {
                let (re, im) = split(psi.amplitudes());
                join(&q.tr_mul(&re), &q.tr_mul(&im))
            }
            Eigenvectors::Complex(q) => q.ad_mul(&psi.to_dvector()).iter().copied().collect(),
        };
        Ok(out)
    }

    /// `ψ(t)` from eigenbasis coordinates of `ψ(0)`.
    pub fn state_at(&self, coords: &[Complex64], t: f64) -> PureState {
        let rotated: Vec<Complex64> = coords
            .iter()
            .zip(&self.energies)
            .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
            .collect();
        let amps = match &self.vectors {
            Eigenvectors::Real(q) => {
                let (re, im) = split(&rotated);
                join(&(q * re), &(q * im))
            }
            Eigenvectors::Complex(q) => (q * DVector::from_vec(rotated)).iter().copied().collect(),
        };
        PureState::from_raw(amps, self.n_upper)
    }

    /// `exp(−iHt) ψ`.
    pub fn propagate(&self, psi: &PureState, t: f64) -> Result<PureState> {
        Ok(self.state_at(&self.to_eigenbasis(psi)?, t))
    }

    /// Evolves `psi0` over `times`, computing observables at every sample.
    pub fn evolve(
        &self,
        h: &Hamiltonian,
        psi0: &PureState,
        times: &[f64],
        opts: &EvolveOptions,
    ) -> Result<Trajectory> {
        validate_grid(times)?;
        let coords = self.to_eigenbasis(psi0)?;
        let samples = par::map_slice(opts.execution, times, |&t| {
            let psi = if t == 0.0 {
                psi0.clone()
            } else {
                self.state_at(&coords, t)
            };
            let record = ObservableRecord::from_state(t, &psi);
            let energy = h.expectation(&psi);
            (record, energy, psi)
        });
        let mut traj = Trajectory {
            times: times.to_vec(),
            records: Vec::with_capacity(times.len()),
            energies: Vec::with_capacity(times.len()),
            states: Vec::new(),
        };
        for (k, (record, energy, psi)) in samples.into_iter().enumerate() {
            traj.records.push(record);
            traj.energies.push(energy);
            if opts.storage.keeps(k) {
                traj.states.push((k, psi));
            }
        }
        Ok(traj)
    }
}

fn split(v: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
    (
        DVector::from_iterator(v.len(), v.iter().map(|z| z.re)),
        DVector::from_iterator(v.len(), v.iter().map(|z| z.im)),
    )
}

fn join(re: &DVector<f64>, im: &DVector<f64>) -> Vec<Complex64> {
    re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
}

fn validate_grid(times: &[f64]) -> Result<()> {
    let ok = !times.is_empty()
        && times.iter().all(|t| t.is_finite())
        && times.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidTimeGrid)
    }
}

/// `n` uniformly spaced times on `[0, t_max]`, both ends included.
pub fn uniform_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::invalid("t_max", format!("must be positive, got {t_max}")));
    }
    if n < 2 {
        return Err(Error::invalid("n_samples", format!("need at least 2, got {n}")));
    }
    let dt = t_max / (n - 1) as f64;
    Ok((0..n).map(|k| k as f64 * dt).collect())
}

/// Which full states a trajectory keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateStorage {
    All,
    None,
    /// Every `k`-th sample, starting with the first.
    Every(usize),
}

impl StateStorage {
    fn keeps(self, index: usize) -> bool {
        match self {
            StateStorage::All => true,
            StateStorage::None => false,
            StateStorage::Every(k) => k > 0 && index.is_multiple_of(k),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub execution: Execution,
    pub storage: StateStorage,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            execution: Execution::Parallel,
            storage: StateStorage::All,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub records: Vec<ObservableRecord>,
    /// `⟨ψ(t)|H|ψ(t)⟩` at each sample, evaluated directly from `H`.
    pub energies: Vec<f64>,
    /// Stored states as `(sample index, state)`.
    pub states: Vec<(usize, PureState)>,
}

impl Trajectory {
    pub fn state(&self, index: usize) -> Option<&PureState> {
        self.states
            .iter()
            .find(|(k, _)| *k == index)
            .map(|(_, psi)| psi)
    }
}

/// `ψ(t) = exp(−iHt) ψ(0)` at every time in `times`, keeping every state.
pub fn evolve_exact(h: &Hamiltonian, psi0: &PureState, times: &[f64]) -> Result<Trajectory> {
    Propagator::new(h)?.evolve(h, psi0, times, &EvolveOptions::default())
}

/// `Û₁(τ) = ∫₀^τ V_I(τ') dτ'`, stored as its ground-to-excited block.
///
/// In the interaction picture `(V_I)_{ab}(t) = V_{ab} e^{i(E_a − E_b)t}`, so
/// the block entry for ground level `i` and excited level `j` is
/// `V_ij (e^{iθ} − 1)/(iθ/τ)` with `θ = (E_i − E_j)τ`, evaluated as
/// `V_ij τ e^{iθ/2} sinc(θ/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DysonOperators {
    block: DMatrix<Complex64>,
    tau: f64,
}

pub fn build_u1(h: &Hamiltonian, tau: f64) -> Result<DysonOperators> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::invalid("tau", format!("must be non-negative, got {tau}")));
    }
    let nu = h.n_upper();
    let e = h.diag();
    let block = DMatrix::from_fn(nu, h.n_lower(), |i, j| {
        let half = 0.5 * (e[i] - e[nu + j]) * tau;
        h.coupling()[(i, j)] * Complex64::from_polar(tau * sinc(half), half)
    });
    Ok(DysonOperators { block, tau })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Sector probabilities after one truncated second-order step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DysonStep {
    pub p_ex: f64,
    pub p_gr: f64,
    /// The summed first-order contribution to `P_ex`; its imaginary part
    /// vanishes identically.
    pub first_order: Complex64,
}

impl DysonOperators {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// The ground-row, excited-column block.
    pub fn block(&self) -> &DMatrix<Complex64> {
        &self.block
    }

    /// Full `d × d` Hermitian matrix.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let (nu, nl) = self.block.shape();
        let mut m = DMatrix::from_element(nu + nl, nu + nl, ZERO);
        for j in 0..nl {
            for i in 0..nu {
                m[(i, nu + j)] = self.block[(i, j)];
                m[(nu + j, i)] = self.block[(i, j)].conj();
            }
        }
        m
    }

    /// `‖Û₁|j⟩‖²` for excited-sector basis state `j`.
    pub fn excited_column_norm_sqr(&self, j: usize) -> f64 {
        self.block.column(j).iter().map(|z| z.norm_sqr()).sum()
    }

    /// `tr_ex{Û₁²} = Σ_j ‖Û₁|j⟩‖²` over the excited sector.
    pub fn trace_excited(&self) -> f64 {
        (0..self.block.ncols())
            .map(|j| self.excited_column_norm_sqr(j))
            .sum()
    }

    /// `tr_gr{Û₁²} = Σ_i ‖Û₁|i⟩‖²` over the ground sector.
    pub fn trace_ground(&self) -> f64 {
        self.block
            .row_iter()
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// `⟨ψ^gr|Û₁|ψ^ex⟩`.
    pub fn ground_excited_element(&self, psi: &PureState) -> Complex64 {
        let (ground, excited) = (psi.ground(), psi.excited());
        let mut z = ZERO;
        for (j, &b) in excited.iter().enumerate() {
            let col = self.block.column(j);
            let dot: Complex64 = ground.iter().zip(col.iter()).map(|(a, v)| a.conj() * v).sum();
            z += dot * b;
        }
        z
    }

    /// `⟨ψ^ex|Û₁²|ψ^ex⟩ = ‖Û₁ψ^ex‖²`.
    pub fn excited_second_moment(&self, psi: &PureState) -> f64 {
        let mut out = vec![ZERO; self.block.nrows()];
        for (j, &b) in psi.excited().iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.block.column(j).iter()) {
                *o += v * b;
            }
        }
        out.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨ψ^gr|Û₁²|ψ^gr⟩ = ‖Û₁ψ^gr‖²`.
    pub fn ground_second_moment(&self, psi: &PureState) -> f64 {
        let ground = psi.ground();
        (0..self.block.ncols())
            .map(|j| {
                self.block
                    .column(j)
                    .iter()
                    .zip(ground)
                    .map(|(v, a)| v.conj() * a)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum()
    }

    /// Truncated step for the probabilities starting from `psi`.
    pub fn step(&self, psi: &PureState) -> DysonStep {
        let i = Complex64::i();
        let z = self.ground_excited_element(psi);
        let first_order = i * z - i * z.conj();
        let gain = self.ground_second_moment(psi);
        let loss = self.excited_second_moment(psi);
        let p_ex0: f64 = psi.excited().iter().map(|a| a.norm_sqr()).sum();
        let p_ex = p_ex0 + first_order.re + gain - loss;
        DysonStep {
            p_ex,
            p_gr: 1.0 - p_ex,
            first_order,
        }
    }
}

pub fn dyson_step(h: &Hamiltonian, psi: &PureState, tau: f64) -> Result<DysonStep> {
    if psi.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: psi.dim(),
        });
    }
    Ok(build_u1(h, tau)?.step(psi))
}
