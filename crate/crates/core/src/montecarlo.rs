//! Link-level simulation of MRC and FZF combining.
//!
//! Each trial draws one small-scale realization. Per device the combined
//! signal is split into the deterministic desired part, the leaked
//! (beamforming-uncertainty) part, inter-user interference and noise. The
//! per-trial SINR averages over data symbols and receiver noise only, so
//! `1 / E[1/SINR]` reproduces the closed-form lower bounds.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{draw_channel, ChannelRealization, EstimationStats};
use crate::error::{Error, Result};
use crate::fbl::{fbl_rate, FblParams};
use crate::optimizer::{Decoder, PowerAllocation};
use crate::scenario::LargeScaleModel;

/// Redraws allowed when an FZF Gram matrix is singular.
pub const MAX_REDRAWS: u32 = 3;

/// Scaling of the FZF combining vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FzfNormalization {
    /// Deterministic `sqrt((N-K) lambda)` from the mean squared norm.
    #[default]
    Analytic,
    /// Unit-norm vector per realization.
    PerRealization,
}

/// Signal-term magnitudes of one device in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSample {
    /// `|DS|^2` (deterministic).
    pub desired: f64,
    /// Raw combined gain `sum_m a_m^H g_{m,k}`; its mean is the DS amplitude.
    pub gain: Complex64,
    /// `|LS|^2` averaged over data symbols.
    pub leakage: f64,
    /// `|UI_{k,j}|^2` for every `j`; the own entry is zero.
    pub interference: Vec<f64>,
    /// `|N|^2` with the drawn noise.
    pub noise: f64,
    /// `E_n |N|^2 = sum_m ||a_m||^2`.
    pub noise_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub sinr: Vec<f64>,
    /// Clamped finite-blocklength rate in bits/s.
    pub rate: Vec<f64>,
    pub terms: Vec<TermSample>,
}

/// Closed-form expectations of the four terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TermExpectation {
    pub desired: f64,
    pub leakage: f64,
    pub interference: Vec<f64>,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicEstimate {
    /// Mean clamped rate per device, bits/s.
    pub mean: Vec<f64>,
    /// 95% normal-approximation half width.
    pub half_width: Vec<f64>,
    pub trials: usize,
    /// Trials dropped after repeated rank deficiency.
    pub failed_trials: usize,
}

impl ErgodicEstimate {
    pub fn weighted_sum(&self, weights: &[f64]) -> (f64, f64) {
        let mean = self.mean.iter().zip(weights).map(|(m, w)| m * w).sum();
        let hw = self
            .half_width
            .iter()
            .zip(weights)
            .map(|(h, w)| (h * w).powi(2))
            .sum::<f64>()
            .sqrt();
        (mean, hw)
    }
}

fn sum_lambda(model: &LargeScaleModel, stats: &EstimationStats, k: usize) -> f64 {
    model.service_sets[k].iter().map(|&m| stats.lambda[(m, k)]).sum()
}

/// `E[sum_m a_m^H g_{m,k}]`, the DS amplitude per unit payload amplitude.
pub fn desired_amplitude(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    decoder: Decoder,
    norm: FzfNormalization,
    k: usize,
) -> f64 {
    let n = model.antennas as f64;
    let kk = model.num_devices() as f64;
    let set = &model.service_sets[k];
    match (decoder, norm) {
        (Decoder::Mrc, _) => n * sum_lambda(model, stats, k),
        (Decoder::Fzf, FzfNormalization::Analytic) => {
            (n - kk).sqrt() * set.iter().map(|&m| stats.lambda[(m, k)].sqrt()).sum::<f64>()
        }
        (Decoder::Fzf, FzfNormalization::PerRealization) => {
            // 1/[W^-1]_kk ~ lambda Gamma(N-K+1, 1) for a complex Wishart W
            let shape = n - kk + 1.0;
            let ratio = (libm::lgamma(shape + 0.5) - libm::lgamma(shape)).exp();
            ratio * set.iter().map(|&m| stats.lambda[(m, k)].sqrt()).sum::<f64>()
        }
    }
}

/// Closed-form term expectations of device `k`.
pub fn expected_terms(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    power: &PowerAllocation,
    decoder: Decoder,
    k: usize,
) -> TermExpectation {
    let set = &model.service_sets[k];
    let n = model.antennas as f64;
    let kk = model.num_devices();
    let pd = &power.payload;
    let amp = desired_amplitude(model, stats, decoder, FzfNormalization::Analytic, k);
    match decoder {
        Decoder::Mrc => {
            let interference = (0..kk)
                .map(|j| {
                    if j == k {
                        return 0.0;
                    }
                    // estimate-times-channel part plus pilot-noise part
                    let known: f64 = set
                        .iter()
                        .map(|&m| stats.lambda[(m, k)].powi(2) * model.beta[(m, j)] / model.beta[(m, k)])
                        .sum();
                    let pilot_noise: f64 = set
                        .iter()
                        .map(|&m| (stats.lambda[(m, k)] / model.beta[(m, k)]).powi(2) * model.beta[(m, j)])
                        .sum();
                    pd[j] * (n * known + n / (kk as f64 * power.pilot[k]) * pilot_noise)
                })
                .collect();
            TermExpectation {
                desired: pd[k] * amp * amp,
                leakage: pd[k] * n * set.iter().map(|&m| stats.lambda[(m, k)] * model.beta[(m, k)]).sum::<f64>(),
                interference,
                noise: n * sum_lambda(model, stats, k),
            }
        }
        Decoder::Fzf => TermExpectation {
            desired: pd[k] * amp * amp,
            leakage: pd[k] * set.iter().map(|&m| stats.err_var[(m, k)]).sum::<f64>(),
            interference: (0..kk)
                .map(|j| {
                    if j == k {
                        0.0
                    } else {
                        pd[j] * set.iter().map(|&m| stats.err_var[(m, j)]).sum::<f64>()
                    }
                })
                .collect(),
            noise: set.len() as f64,
        },
    }
}

/// `G (G^H G)^-1`, or `None` when the Gram matrix is singular.
fn pseudo_inverse_columns(g_hat: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    let gram = g_hat.adjoint() * g_hat;
    let chol = gram.cholesky()?;
    let inv = chol.inverse();
    if inv.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return None;
    }
    Some(g_hat * inv)
}

/// Combining vectors `a_{m,k}` for every AP and device; `None` entries mark
/// APs whose FZF Gram matrix is singular.
fn combiners(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    real: &ChannelRealization,
    decoder: Decoder,
    norm: FzfNormalization,
) -> Option<Vec<DMatrix<Complex64>>> {
    let n = model.antennas as f64;
    let kk = model.num_devices() as f64;
    let needed: Vec<bool> = (0..model.num_aps())
        .map(|m| model.service_sets.iter().any(|s| s.contains(&m)))
        .collect();
    let mut out = Vec::with_capacity(model.num_aps());
    for (m, g_hat) in real.g_hat.iter().enumerate() {
        match decoder {
            Decoder::Mrc => out.push(g_hat.clone()),
            Decoder::Fzf => {
                if !needed[m] {
                    out.push(DMatrix::zeros(g_hat.nrows(), g_hat.ncols()));
                    continue;
                }
                let mut a = pseudo_inverse_columns(g_hat)?;
                for (k, mut col) in a.column_iter_mut().enumerate() {
                    let scale = match norm {
                        FzfNormalization::Analytic => ((n - kk) * stats.lambda[(m, k)]).sqrt(),
                        FzfNormalization::PerRealization => 1.0 / col.norm(),
                    };
                    col *= Complex64::from(scale);
                }
                out.push(a);
            }
        }
    }
    Some(out)
}

fn decode(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    power: &PowerAllocation,
    real: &ChannelRealization,
    a: &[DMatrix<Complex64>],
    decoder: Decoder,
    norm: FzfNormalization,
    k: usize,
) -> TermSample {
    let kk = model.num_devices();
    let mut gains = vec![Complex64::new(0.0, 0.0); kk];
    let mut noise = Complex64::new(0.0, 0.0);
    let mut noise_power = 0.0;
    for &m in &model.service_sets[k] {
        let col = a[m].column(k);
        let proj: DVector<Complex64> = real.g[m].adjoint() * col;
        // proj[j] = g_j^H a, so a^H g_j is its conjugate
        for (j, gain) in gains.iter_mut().enumerate() {
            *gain += proj[j].conj();
        }
        noise += col.dotc(&real.noise[m]);
        noise_power += col.norm_squared();
    }
    let amp = desired_amplitude(model, stats, decoder, norm, k);
    let pd = &power.payload;
    TermSample {
        desired: pd[k] * amp * amp,
        gain: gains[k],
        leakage: pd[k] * (gains[k] - amp).norm_sqr(),
        interference: (0..kk)
            .map(|j| if j == k { 0.0 } else { pd[j] * gains[j].norm_sqr() })
            .collect(),
        noise: noise.norm_sqr(),
        noise_power,
    }
}

/// MRC terms of device `k` for one realization.
pub fn decode_mrc(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    power: &PowerAllocation,
    real: &ChannelRealization,
    k: usize,
) -> TermSample {
    let a = combiners(model, stats, real, Decoder::Mrc, FzfNormalization::Analytic).expect("MRC never fails");
    decode(model, stats, power, real, &a, Decoder::Mrc, FzfNormalization::Analytic, k)
}

/// FZF terms of device `k` for one realization.
pub fn decode_fzf(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    power: &PowerAllocation,
    real: &ChannelRealization,
    norm: FzfNormalization,
    k: usize,
) -> Result<TermSample> {
    if model.antennas <= model.num_devices() {
        return Err(Error::domain("FZF needs more antennas per AP than devices"));
    }
    let a = combiners(model, stats, real, Decoder::Fzf, norm)
        .ok_or_else(|| Error::domain("estimated channel matrix is rank deficient"))?;
    Ok(decode(model, stats, power, real, &a, Decoder::Fzf, norm, k))
}

/// SINR from term samples, averaging over data symbols and noise.
pub fn trial_sinr(t: &TermSample) -> f64 {
    let denom = t.leakage + t.interference.iter().sum::<f64>() + t.noise_power;
    t.desired / denom
}

/// One trial for every device, redrawing on rank deficiency.
pub fn simulate_trial(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    power: &PowerAllocation,
    params: &FblParams,
    decoder: Decoder,
    norm: FzfNormalization,
    seed: u64,
    trial: u64,
) -> Option<TrialOutcome> {
    for attempt in 0..=MAX_REDRAWS {
        let real = draw_channel(model, stats, seed, trial, attempt);
        let Some(a) = combiners(model, stats, &real, decoder, norm) else {
            continue;
        };
        let terms: Vec<TermSample> = (0..model.num_devices())
            .map(|k| decode(model, stats, power, &real, &a, decoder, norm, k))
            .collect();
        let sinr: Vec<f64> = terms.iter().map(trial_sinr).collect();
        let rate = sinr
            .iter()
            .enumerate()
            .map(|(k, g)| fbl_rate(*g, params, k).max(0.0))
            .collect();
        return Some(TrialOutcome { sinr, rate, terms });
    }
    None
}

/// Runs `trials` independent trials in parallel, in trial order.
pub fn simulate(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    power: &PowerAllocation,
    params: &FblParams,
    decoder: Decoder,
    norm: FzfNormalization,
    trials: usize,
    seed: u64,
) -> Vec<Option<TrialOutcome>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| simulate_trial(model, stats, power, params, decoder, norm, seed, t))
        .collect()
}

/// Mean and standard error of a sample.
pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Ergodic finite-blocklength rate with 95% confidence half widths.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_rate(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    power: &PowerAllocation,
    params: &FblParams,
    decoder: Decoder,
    norm: FzfNormalization,
    trials: usize,
    seed: u64,
) -> Result<ErgodicEstimate> {
    if trials < 100 {
        return Err(Error::domain(format!("at least 100 trials are required, got {trials}")));
    }
    let outcomes = simulate(model, stats, power, params, decoder, norm, trials, seed);
    let ok: Vec<&TrialOutcome> = outcomes.iter().flatten().collect();
    if ok.len() < 2 {
        return Err(Error::domain("every trial was rank deficient"));
    }
    let kk = model.num_devices();
    let mut mean = Vec::with_capacity(kk);
    let mut half_width = Vec::with_capacity(kk);
    for k in 0..kk {
        let rates: Vec<f64> = ok.iter().map(|o| o.rate[k]).collect();
        let (m, se) = mean_and_se(&rates);
        mean.push(m);
        half_width.push(1.96 * se);
    }
    Ok(ErgodicEstimate {
        mean,
        half_width,
        trials: ok.len(),
        failed_trials: outcomes.len() - ok.len(),
    })
}
