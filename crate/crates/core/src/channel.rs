//! MMSE channel-estimation statistics and small-scale channel draws.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, domain, substream};
use crate::scenario::LargeScaleModel;

/// Per-(AP, device) variance of the MMSE estimate and of its error.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationStats {
    /// `lambda[(m, k)] = K p_k beta^2 / (K p_k beta + 1)`.
    pub lambda: DMatrix<f64>,
    /// `beta - lambda`.
    pub err_var: DMatrix<f64>,
    /// Pilot powers the statistics were computed for.
    pub pilot: Vec<f64>,
}

/// One small-scale realization for every AP.
///
/// Matrices are `N x K` per AP; column `k` holds device `k`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub g: Vec<DMatrix<Complex64>>,
    pub g_hat: Vec<DMatrix<Complex64>>,
    pub g_tilde: Vec<DMatrix<Complex64>>,
    /// Receiver noise of the data phase at each AP, unit variance.
    pub noise: Vec<DVector<Complex64>>,
}

/// `K p beta^2 / (K p beta + 1)` for a single link.
pub fn mmse_variance(num_devices: usize, pilot: f64, beta: f64) -> f64 {
    let kpb = num_devices as f64 * pilot * beta;
    kpb * beta / (kpb + 1.0)
}

pub fn estimation_stats(model: &LargeScaleModel, pilot_power: &[f64]) -> Result<EstimationStats> {
    let k = model.num_devices();
    if pilot_power.len() != k {
        return Err(Error::domain(format!(
            "expected {k} pilot powers, got {}",
            pilot_power.len()
        )));
    }
    if let Some(p) = pilot_power.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::domain(format!("pilot power must be positive, got {p}")));
    }
    let lambda = DMatrix::from_fn(model.num_aps(), k, |m, j| {
        mmse_variance(k, pilot_power[j], model.beta[(m, j)])
    });
    let err_var = &model.beta - &lambda;
    Ok(EstimationStats {
        lambda,
        err_var,
        pilot: pilot_power.to_vec(),
    })
}

fn cn(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draws the true channels, the pilot observations and the resulting MMSE
/// estimates for one trial.
///
/// Each (AP, device) pair and each AP's data noise has its own substream
/// keyed by `(seed, trial, ap, device)`; `attempt` selects an independent
/// redraw of the same trial.
pub fn draw_channel(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    seed: u64,
    trial: u64,
    attempt: u32,
) -> ChannelRealization {
    let (m_count, k_count, n) = (model.num_aps(), model.num_devices(), model.antennas);
    let key = derive_seed(seed, attempt as u64);
    let per_trial = (m_count * (k_count + 1)) as u64;
    let mut g = Vec::with_capacity(m_count);
    let mut g_hat = Vec::with_capacity(m_count);
    let mut g_tilde = Vec::with_capacity(m_count);
    let mut noise = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let mut gm = DMatrix::zeros(n, k_count);
        let mut hm = DMatrix::zeros(n, k_count);
        for k in 0..k_count {
            let stream = trial * per_trial + (m * (k_count + 1) + k) as u64;
            let mut rng = substream(key, domain::CHANNEL, stream);
            let beta = model.beta[(m, k)];
            let pilot_noise_var = 1.0 / (k_count as f64 * stats.pilot[k]);
            let scale = stats.lambda[(m, k)] / beta;
            for a in 0..n {
                let true_g = cn(&mut rng, beta);
                let obs = true_g + cn(&mut rng, pilot_noise_var);
                gm[(a, k)] = true_g;
                hm[(a, k)] = obs * scale;
            }
        }
        let stream = trial * per_trial + (m * (k_count + 1) + k_count) as u64;
        let mut rng = substream(key, domain::CHANNEL, stream);
        noise.push(DVector::from_fn(n, |_, _| cn(&mut rng, 1.0)));
        g_tilde.push(&gm - &hm);
        g.push(gm);
        g_hat.push(hm);
    }
    ChannelRealization {
        g,
        g_hat,
        g_tilde,
        noise,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy_model() -> LargeScaleModel {
        let beta = DMatrix::from_row_slice(2, 3, &[1.0, 0.2, 3.0, 0.5, 2.0, 0.1]);
        LargeScaleModel::from_beta(beta, 4, 1.0).unwrap()
    }

    #[test]
    fn lambda_examples() {
        assert!((mmse_variance(10, 0.1, 1.0) - 0.5).abs() < 1e-15);
        // K p beta = 4 with beta = 0.2
        assert!((mmse_variance(10, 2.0, 0.2) - 0.16).abs() < 1e-15);
        assert!(mmse_variance(10, 1e-14, 1.0) < 1e-12);
    }

    #[test]
    fn stats_reject_bad_pilots() {
        let model = toy_model();
        assert!(estimation_stats(&model, &[1.0, 0.0, 1.0]).is_err());
        assert!(estimation_stats(&model, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn stats_bounds() {
        let model = toy_model();
        let s = estimation_stats(&model, &[0.1, 1.0, 10.0]).unwrap();
        for (l, b) in s.lambda.iter().zip(model.beta.iter()) {
            assert!(*l > 0.0 && l < b);
        }
        let big = estimation_stats(&model, &[1e9, 1e9, 1e9]).unwrap();
        for (l, b) in big.lambda.iter().zip(model.beta.iter()) {
            assert!((l - b).abs() / b < 1e-8);
        }
    }

    #[test]
    fn realization_decomposes() {
        let model = toy_model();
        let s = estimation_stats(&model, &[0.3, 0.3, 0.3]).unwrap();
        let r = draw_channel(&model, &s, 5, 0, 0);
        for m in 0..2 {
            let back = &r.g_hat[m] + &r.g_tilde[m];
            assert!((back - &r.g[m]).norm() < 1e-12);
        }
        let again = draw_channel(&model, &s, 5, 0, 0);
        assert_eq!(r.g, again.g);
        let other = draw_channel(&model, &s, 5, 1, 0);
        assert_ne!(r.g, other.g);
        let redraw = draw_channel(&model, &s, 5, 0, 1);
        assert_ne!(r.g, redraw.g);
    }

    #[test]
    fn empirical_variances_match_statistics() {
        let model = toy_model();
        let s = estimation_stats(&model, &[0.3, 0.05, 1.0]).unwrap();
        let trials = 10_000u64;
        let n = model.antennas as f64;
        let mut hat = DMatrix::<Vec<f64>>::from_element(2, 3, Vec::new());
        let mut err = DMatrix::<Vec<f64>>::from_element(2, 3, Vec::new());
        let mut cross = DMatrix::<Vec<f64>>::from_element(2, 3, Vec::new());
        let mut dev_corr = Vec::new();
        for t in 0..trials {
            let r = draw_channel(&model, &s, 99, t, 0);
            for m in 0..2 {
                for k in 0..3 {
                    let h = r.g_hat[m].column(k);
                    let e = r.g_tilde[m].column(k);
                    hat[(m, k)].push(h.norm_squared() / n);
                    err[(m, k)].push(e.norm_squared() / n);
                    cross[(m, k)].push(h.dotc(&e).re / n);
                }
                dev_corr.push(r.g[m].column(0).dotc(&r.g[m].column(1)).re / n);
            }
        }
        let mean_sd = |v: &[f64]| {
            let mu = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (mu, (var / v.len() as f64).sqrt())
        };
        for m in 0..2 {
            for k in 0..3 {
                let (mu, se) = mean_sd(&hat[(m, k)]);
                assert!((mu - s.lambda[(m, k)]).abs() <= 3.0 * se, "hat {m},{k}: {mu} vs {}", s.lambda[(m, k)]);
                let (mu, se) = mean_sd(&err[(m, k)]);
                assert!((mu - s.err_var[(m, k)]).abs() <= 3.0 * se, "err {m},{k}");
                let (mu, se) = mean_sd(&cross[(m, k)]);
                assert!(mu.abs() <= 3.0 * se, "cross {m},{k}: {mu} {se}");
            }
        }
        let (mu, se) = mean_sd(&dev_corr);
        assert!(mu.abs() <= 3.0 * se);
    }

    proptest! {
        #[test]
        fn lambda_scaling(k in 1usize..20, p in 1e-3f64..10.0, beta in 1e-3f64..1e3, c in 0.1f64..10.0) {
            // numerator scales by c^2, the K p beta term by c
            let kpb = k as f64 * p * beta;
            let expect = c * c * k as f64 * p * beta * beta / (c * kpb + 1.0);
            let got = mmse_variance(k, p, c * beta);
            prop_assert!((got - expect).abs() <= 1e-12 * expect.max(1e-300));
        }
    }
}
