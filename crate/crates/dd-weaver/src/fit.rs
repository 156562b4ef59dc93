//! Least-squares fit of a damped cosine to a Ramsey-style series:
//! y(k) = A cos(2 pi f k + phi) exp(-k/tau) + B.
//!
//! A coarse grid over frequency (and a log grid over the decay constant) seeds
//! alternating golden-section refinements; the amplitude, phase, and offset
//! are solved linearly at every probe.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fitted damped-cosine parameters. `freq_cycles` is in cycles per repetition
/// and non-negative; `decay_reps` is the 1/e constant in repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyFit {
    pub freq_cycles: f64,
    pub decay_reps: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("series of {0} points is too short to fit (need at least 8)")]
    TooShort(usize),
    #[error("series contains a non-finite value")]
    NonFinite,
}

const TAU_GRID: [f64; 9] = [2.0, 5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 640.0, 1e9];
const F_GRID_POINTS: usize = 1001;

/// Residual sum of squares for fixed (f, tau) with the linear parameters
/// solved exactly. Returns (rss, a, b, offset) for
/// y = a env cos + b env sin + offset.
fn rss_at(points: &[(f64, f64)], freq: f64, tau: f64) -> (f64, f64, f64, f64) {
    let omega = 2.0 * std::f64::consts::PI * freq;
    // Normal equations over the basis [env cos, env sin, 1].
    let mut m = [[0.0f64; 3]; 3];
    let mut v = [0.0f64; 3];
    for &(k, y) in points {
        let env = (-k / tau).exp();
        let basis = [env * (omega * k).cos(), env * (omega * k).sin(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            v[i] += basis[i] * y;
        }
    }
    let coeff = solve3(m, v);
    let mut rss = 0.0;
    for &(k, y) in points {
        let env = (-k / tau).exp();
        let model = coeff[0] * env * (omega * k).cos() + coeff[1] * env * (omega * k).sin() + coeff[2];
        rss += (y - model) * (y - model);
    }
    (rss, coeff[0], coeff[1], coeff[2])
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> [f64; 3] {
    // Gaussian elimination with partial pivoting; singular systems fall back
    // to zero coefficients for the dependent columns.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        v.swap(col, pivot);
        if m[col][col].abs() < 1e-30 {
            m[col][col] = 1.0;
            v[col] = 0.0;
            for j in 0..3 {
                if j != col {
                    m[col][j] = 0.0;
                }
            }
            continue;
        }
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            for j in col..3 {
                m[row][j] -= factor * m[col][j];
            }
            v[row] -= factor * v[col];
        }
    }
    let mut x = [0.0f64; 3];
    for col in (0..3).rev() {
        let mut acc = v[col];
        for j in col + 1..3 {
            acc -= m[col][j] * x[j];
        }
        x[col] = acc / m[col][col];
    }
    x
}

fn golden_min(mut lo: f64, mut hi: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Fits `points` = (k, p0) pairs. Frequencies are searched over
/// [0, 0.5] cycles per repetition.
pub fn fit_damped_cosine(points: &[(f64, f64)]) -> Result<RamseyFit, FitError> {
    if points.len() < 8 {
        return Err(FitError::TooShort(points.len()));
    }
    if points.iter().any(|&(k, y)| !k.is_finite() || !y.is_finite()) {
        return Err(FitError::NonFinite);
    }

    let n = points.len() as f64;
    let mean = points.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let ss_total: f64 = points.iter().map(|&(_, y)| (y - mean) * (y - mean)).sum();
    if ss_total < 1e-24 {
        // Constant series: zero frequency and amplitude by convention.
        return Ok(RamseyFit {
            freq_cycles: 0.0,
            decay_reps: TAU_GRID[TAU_GRID.len() - 1],
            amplitude: 0.0,
            phase: 0.0,
            offset: mean,
            residual: ss_total.sqrt(),
            converged: true,
        });
    }

    // Coarse grid search.
    let mut best = (f64::INFINITY, 0.0f64, TAU_GRID[0]);
    for gi in 0..F_GRID_POINTS {
        let freq = 0.5 * gi as f64 / (F_GRID_POINTS - 1) as f64;
        for &tau in &TAU_GRID {
            let (rss, ..) = rss_at(points, freq, tau);
            if rss < best.0 {
                best = (rss, freq, tau);
            }
        }
    }
    let (_, mut freq, mut tau) = best;
    let grid_step = 0.5 / (F_GRID_POINTS - 1) as f64;

    // Alternating golden-section refinement of frequency and log-decay.
    for _ in 0..6 {
        let lo = (freq - 2.0 * grid_step).max(0.0);
        let hi = (freq + 2.0 * grid_step).min(0.5);
        let t = tau;
        freq = golden_min(lo, hi, 48, |x| rss_at(points, x, t).0);
        let f_now = freq;
        let log_tau = golden_min(0.5f64.ln(), 1e9f64.ln(), 48, |lt| {
            rss_at(points, f_now, lt.exp()).0
        });
        tau = log_tau.exp();
    }
    let refined_rss = rss_at(points, freq, tau).0;
    let converged = refined_rss.is_finite() && refined_rss <= best.0 + 1e-12;
    if !converged {
        // Fall back to the grid optimum.
        freq = best.1;
        tau = best.2;
    }

    let (rss, a, b, offset) = rss_at(points, freq, tau);
    let amplitude = (a * a + b * b).sqrt();
    let phase = (-b).atan2(a);
    Ok(RamseyFit {
        freq_cycles: freq,
        decay_reps: tau,
        amplitude,
        phase,
        offset,
        residual: rss.sqrt(),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn synth(f: f64, tau: f64, a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
        (1..=n)
            .map(|k| {
                let k = k as f64;
                (k, b + a * (2.0 * std::f64::consts::PI * f * k).cos() * (-k / tau).exp())
            })
            .collect()
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let points = synth(0.1, 40.0, 0.4, 0.5, 50);
        let fit = fit_damped_cosine(&points).unwrap();
        assert!((fit.freq_cycles - 0.1).abs() < 1e-3, "f = {}", fit.freq_cycles);
        assert!((fit.amplitude - 0.4).abs() < 0.02);
        assert!((fit.offset - 0.5).abs() < 0.02);
        assert!(fit.residual < 1e-6);
    }

    #[test]
    fn constant_series_fits_zero_frequency() {
        let points: Vec<(f64, f64)> = (1..=20).map(|k| (k as f64, 0.75)).collect();
        let fit = fit_damped_cosine(&points).unwrap();
        assert_eq!(fit.freq_cycles, 0.0);
        assert!(fit.amplitude.abs() < 1e-9);
        assert!((fit.offset - 0.75).abs() < 1e-12);
    }

    #[test]
    fn too_short_series_rejected() {
        let points = synth(0.1, 40.0, 0.4, 0.5, 7);
        assert_eq!(fit_damped_cosine(&points).unwrap_err(), FitError::TooShort(7));
    }

    #[test]
    fn noisy_recovery_over_seeded_trials() {
        let mut max_err = 0.0f64;
        for trial in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
            let noise = Normal::new(0.0, 0.01).unwrap();
            let mut points = synth(0.1, 40.0, 0.4, 0.5, 50);
            for p in &mut points {
                p.1 += noise.sample(&mut rng);
            }
            let fit = fit_damped_cosine(&points).unwrap();
            max_err = max_err.max((fit.freq_cycles - 0.1).abs());
        }
        assert!(max_err < 2e-3, "worst frequency error {max_err}");
    }

    #[test]
    fn scale_equivariance() {
        let points = synth(0.07, 30.0, 0.3, 0.5, 40);
        let scaled: Vec<(f64, f64)> = points.iter().map(|&(k, y)| (k, 3.0 * y)).collect();
        let f1 = fit_damped_cosine(&points).unwrap();
        let f2 = fit_damped_cosine(&scaled).unwrap();
        assert!((f1.freq_cycles - f2.freq_cycles).abs() < 1e-9);
        assert!((3.0 * f1.amplitude - f2.amplitude).abs() < 1e-6);
        assert!((3.0 * f1.offset - f2.offset).abs() < 1e-6);
    }

    #[test]
    fn slow_oscillation_resolved() {
        // Under half a period across the window still pins the frequency.
        let points = synth(0.0044, 1e6, 0.5, 0.5, 50);
        let fit = fit_damped_cosine(&points).unwrap();
        assert!((fit.freq_cycles - 0.0044).abs() < 2e-4, "f = {}", fit.freq_cycles);
    }
}
