//! Reduced states, purities and system-environment correlation measures.
//!
//! The resonant-subspace state embeds into the full `2 ⊗ (n_upper + n_lower)`
//! product space as a `2 × M` coefficient matrix `Ψ[s, r]`: row 0 (gas in
//! `|0⟩`) carries the ground sector on the upper-band container levels, row 1
//! (gas in `|1⟩`) carries the excited sector on the lower-band levels, and
//! every other entry is zero. Container levels are ordered upper band first.
//!
//! For a pure state every quantity below is a function of the 2×2 Gram
//! matrix `G = ΨΨ†`, which is also `ρ_s`:
//!
//! * `P = Tr G`, `P_s² = P_r² = Tr G²` (the two reduced states share their
//!   nonzero spectrum),
//! * `Tr{ρ (ρ_s ⊗ ρ_r)} = ⟨ψ|ρ_s ⊗ ρ_r|ψ⟩ = Tr G³`,
//! * `P_c² = P² − 2 Tr G³ + P_s² P_r²`, which with `s = Tr G`, `q = det G`
//!   equals `s²(1−s)² + 2qs(3−2s) + 4q²`; the latter form has no
//!   cancellation near product states (`q → 0`) provided `q` itself is
//!   computed accurately, see `gram_determinant`.
//!
//! Nothing of size `d²` is ever materialized except by [`reduced_states`].

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::PureState;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One row of the observable time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub p_ex: f64,
    pub p_gr: f64,
    pub purity_s: f64,
    pub purity_r: f64,
    pub p_c: f64,
    pub eta: f64,
    pub norm_err: f64,
}

impl ObservableRecord {
    pub fn from_state(t: f64, psi: &PureState) -> Self {
        let (p_ex, p_gr) = sector_probabilities(psi);
        let c = correlation_measures(psi);
        ObservableRecord {
            t,
            p_ex,
            p_gr,
            purity_s: c.purity_s,
            purity_r: c.purity_r,
            p_c: c.p_c,
            eta: c.eta,
            norm_err: (psi.norm() - 1.0).abs(),
        }
    }
}

/// `(P_ex, P_gr)`: squared norms of the excited and ground sectors.
///
/// `P_gr` is taken as `1 − P_ex`, so the pair sums to one exactly; the
/// normalization itself is reported separately as `norm_err`.
pub fn sector_probabilities(psi: &PureState) -> (f64, f64) {
    let p_ex: f64 = psi.excited().iter().map(|a| a.norm_sqr()).sum();
    (p_ex, 1.0 - p_ex)
}

/// Raw sector norms without the sum-to-one convention.
pub fn sector_norms(psi: &PureState) -> (f64, f64) {
    let p_ex = psi.excited().iter().map(|a| a.norm_sqr()).sum();
    let p_gr = psi.ground().iter().map(|a| a.norm_sqr()).sum();
    (p_ex, p_gr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedStates {
    /// Gas state in the basis `(|0⟩, |1⟩)`.
    pub rho_s: Matrix2<Complex64>,
    /// Container state, upper-band levels first.
    pub rho_r: DMatrix<Complex64>,
}

/// Embeds the resonant-subspace state as the `2 × M` coefficient matrix.
pub fn embed(psi: &PureState) -> DMatrix<Complex64> {
    let nu = psi.n_upper();
    let m = psi.dim();
    let mut coeffs = DMatrix::from_element(2, m, ZERO);
    for (i, &a) in psi.ground().iter().enumerate() {
        coeffs[(0, i)] = a;
    }
    for (j, &b) in psi.excited().iter().enumerate() {
        coeffs[(1, nu + j)] = b;
    }
    coeffs
}

/// Both partial traces of `|ψ⟩⟨ψ|`.
pub fn reduced_states(psi: &PureState) -> ReducedStates {
    let coeffs = embed(psi);
    ReducedStates {
        rho_s: gram(&coeffs),
        rho_r: coeffs.transpose() * coeffs.map(|z| z.conj()),
    }
}

/// Purities and correlation sizes of a pure bipartite state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMeasures {
    /// `P` of the full state.
    pub purity: f64,
    pub purity_s: f64,
    pub purity_r: f64,
    /// `Tr{ρ (ρ_s ⊗ ρ_r)}`.
    pub cross: f64,
    pub p_c: f64,
    /// `P_c / (P_s P_r)`.
    pub eta: f64,
    /// `max(0, P/(P_s P_r) − 1)`, the lower bound on `eta`.
    pub bound: f64,
}

pub fn correlation_measures(psi: &PureState) -> CorrelationMeasures {
    bipartite_correlations(&embed(psi))
}

/// Correlation measures for an arbitrary pure state on `2 ⊗ M` given as a
/// `2 × M` coefficient matrix.
pub fn bipartite_correlations(coeffs: &DMatrix<Complex64>) -> CorrelationMeasures {
    assert_eq!(coeffs.nrows(), 2, "first factor must be a qubit");
    let g = gram(coeffs);
    let s = (g[(0, 0)] + g[(1, 1)]).re;
    let q = gram_determinant(coeffs);
    let tr_g2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    let cross = (g * g * g).trace().re;

    let purity = s;
    let purity_s = tr_g2.sqrt();
    let purity_r = purity_s;
    let p_c_sq = s * s * (1.0 - s) * (1.0 - s) + 2.0 * q * s * (3.0 - 2.0 * s) + 4.0 * q * q;
    let p_c = p_c_sq.max(0.0).sqrt();
    let product = purity_s * purity_r;
    CorrelationMeasures {
        purity,
        purity_s,
        purity_r,
        cross,
        p_c,
        eta: p_c / product,
        bound: (purity / product - 1.0).max(0.0),
    }
}

/// `det G = ‖u‖² ‖v − proj_u v‖²` for the rows `u`, `v` (larger norm first).
/// Unlike `G₀₀G₁₁ − |G₀₁|²` this keeps full relative accuracy when the rows
/// are nearly parallel, i.e. for almost-product states.
fn gram_determinant(coeffs: &DMatrix<Complex64>) -> f64 {
    let row_norm = |k: usize| coeffs.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>();
    let (n0, n1) = (row_norm(0), row_norm(1));
    let (u, v, nu) = if n0 >= n1 { (0, 1, n0) } else { (1, 0, n1) };
    if nu == 0.0 {
        return 0.0;
    }
    let overlap: Complex64 = coeffs
        .row(u)
        .iter()
        .zip(coeffs.row(v).iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let coef = overlap / nu;
    let residual: f64 = coeffs
        .row(u)
        .iter()
        .zip(coeffs.row(v).iter())
        .map(|(a, b)| (b - coef * a).norm_sqr())
        .sum();
    nu * residual
}

fn gram(coeffs: &DMatrix<Complex64>) -> Matrix2<Complex64> {
    let mut g = Matrix2::from_element(ZERO);
    for s in 0..2 {
        for t in s..2 {
            let v: Complex64 = coeffs
                .row(s)
                .iter()
                .zip(coeffs.row(t).iter())
                .map(|(a, b)| a * b.conj())
                .sum();
            g[(s, t)] = v;
            g[(t, s)] = v.conj();
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{self, Stream};
    use approx::assert_relative_eq;

    fn bell() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_sectors(&[Complex64::new(h, 0.0)], &[Complex64::new(h, 0.0)]).unwrap()
    }

    #[test]
    fn product_state() {
        let psi = PureState::from_sectors(
            &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
            &[ZERO, ZERO, ZERO],
        )
        .unwrap();
        let r = reduced_states(&psi);
        assert_relative_eq!(r.rho_s[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_eq!(r.rho_s[(1, 1)], ZERO);
        let c = correlation_measures(&psi);
        assert_relative_eq!(c.purity_s, 1.0, epsilon = 1e-15);
        assert_eq!(c.p_c, 0.0);
        assert_eq!(c.eta, 0.0);
    }

    #[test]
    fn bell_state() {
        let psi = bell();
        let r = reduced_states(&psi);
        assert_relative_eq!(r.rho_s[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.rho_s[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_eq!(r.rho_s[(0, 1)], ZERO);
        assert_eq!(r.rho_r.nrows(), 2);
        assert_relative_eq!(r.rho_r[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.rho_r[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_eq!(r.rho_r[(0, 1)], ZERO);

        let c = correlation_measures(&psi);
        assert_relative_eq!(c.cross, 0.25, epsilon = 1e-15);
        assert_relative_eq!(c.p_c, 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_relative_eq!(c.eta, 3f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(c.bound, 1.0, epsilon = 1e-12);
        assert!(c.eta >= c.bound);
    }

    #[test]
    fn partial_trace_axioms() {
        let mut rng = seed::rng(21, Stream::HaarSample(3));
        let psi = PureState::random(9, 6, &mut rng);
        let r = reduced_states(&psi);
        assert_relative_eq!(r.rho_s.trace().re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.rho_r.trace().re, 1.0, epsilon = 1e-12);
        let es = r.rho_s.symmetric_eigenvalues();
        let er = r.rho_r.clone().symmetric_eigenvalues();
        assert!(es.iter().chain(er.iter()).all(|&e| e > -1e-12));
        assert!(r.rho_s[(0, 1)].norm() < 1e-14);
        let (p_ex, p_gr) = sector_probabilities(&psi);
        assert_relative_eq!(r.rho_s[(0, 0)].re, p_gr, epsilon = 1e-14);
        assert_relative_eq!(r.rho_s[(1, 1)].re, p_ex, epsilon = 1e-14);
    }

    #[test]
    fn equal_amplitudes_count_levels() {
        let n0 = 5;
        let n1 = 7;
        let a = Complex64::new(1.0, 0.0);
        let psi = PureState::from_sectors(&vec![a; n1], &vec![a; n0]).unwrap();
        let (p_ex, p_gr) = sector_probabilities(&psi);
        assert_relative_eq!(p_ex, 5.0 / 12.0, epsilon = 1e-15);
        assert_relative_eq!(p_gr, 7.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn purity_bounds() {
        let mut rng = seed::rng(5, Stream::HaarSample(0));
        for _ in 0..200 {
            let psi = PureState::random(8, 4, &mut rng);
            let c = correlation_measures(&psi);
            assert!(c.purity_s >= std::f64::consts::FRAC_1_SQRT_2 - 1e-15);
            assert!(c.purity_s <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn generic_product_has_vanishing_p_c() {
        // Ψ = a bᵀ: rows are parallel, so det G is zero up to rounding.
        let a = [Complex64::new(0.3, -0.4), Complex64::new(0.5, 0.7)];
        let b = [Complex64::new(0.2, 0.1), Complex64::new(-0.6, 0.3), Complex64::new(0.1, -0.9)];
        let mut coeffs = DMatrix::from_fn(2, 3, |s, r| a[s] * b[r]);
        let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        coeffs /= Complex64::new(norm, 0.0);
        let c = bipartite_correlations(&coeffs);
        assert!(c.p_c < 1e-14, "p_c = {:e}", c.p_c);
        assert_relative_eq!(c.purity_s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn record_fields() {
        let rec = ObservableRecord::from_state(1.5, &bell());
        assert_eq!(rec.t, 1.5);
        assert_eq!(rec.p_ex + rec.p_gr, 1.0);
        assert!(rec.norm_err < 1e-15);
        assert_relative_eq!(rec.eta, 3f64.sqrt(), epsilon = 1e-12);
    }
}
