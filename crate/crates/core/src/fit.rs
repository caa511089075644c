//! Log-linear least-squares fit of an exponential approach to an asymptote.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted decay rate `k` in `y(t) − y∞ ≈ A e^{−k t}`.
    pub rate: f64,
    /// Fitted `A` (signed).
    pub amplitude: f64,
    /// Number of samples that entered the fit.
    pub points: usize,
}

/// Fits `ln|y − asymptote|` against `t` over `t ∈ [t_start, t_end]`.
///
/// Only samples whose deviation has the same sign as the first usable
/// sample are kept. Returns `None` with fewer than two usable samples or
/// a degenerate time spread.
pub fn fit_exponential_decay(
    times: &[f64],
    values: &[f64],
    asymptote: f64,
    t_start: f64,
    t_end: f64,
) -> Option<DecayFit> {
    let mut sign = 0.0;
    let mut pts = Vec::new();
    for (&t, &y) in times.iter().zip(values) {
        if t < t_start || t > t_end {
            continue;
        }
        let dev = y - asymptote;
        if dev == 0.0 || !dev.is_finite() {
            continue;
        }
        if sign == 0.0 {
            sign = dev.signum();
        }
        if dev.signum() == sign {
            pts.push((t, dev.abs().ln()));
        }
    }
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(DecayFit {
        rate: -slope,
        amplitude: sign * (my - slope * mt).exp(),
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_clean_exponential() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.0 / 3.0 + 0.25 * (-0.8 * t).exp()).collect();
        let fit = fit_exponential_decay(&t, &y, 2.0 / 3.0, 0.0, 5.0).unwrap();
        assert_relative_eq!(fit.rate, 0.8, max_relative = 1e-9);
        assert_relative_eq!(fit.amplitude, 0.25, max_relative = 1e-9);
        assert_eq!(fit.points, 51);
    }

    #[test]
    fn rising_curve() {
        let t: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.0 - (-0.05 * t).exp()).collect();
        let fit = fit_exponential_decay(&t, &y, 1.0, 0.0, 100.0).unwrap();
        assert_relative_eq!(fit.rate, 0.05, max_relative = 1e-9);
        assert_relative_eq!(fit.amplitude, -1.0, max_relative = 1e-9);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_exponential_decay(&[0.0, 1.0], &[1.0, 0.5], 0.0, 0.5, 2.0).is_none());
        assert!(fit_exponential_decay(&[0.0, 1.0], &[1.0, 1.0], 1.0, 0.0, 2.0).is_none());
    }
}
