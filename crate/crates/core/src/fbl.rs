//! Finite-blocklength rate mathematics and the closed-form lower-bound SINRs.
//!
//! Rates are written through `f(x) = ln(1 + 1/x) - alpha * sqrt((2x+1)/(x+1)^2)`
//! with `x = 1/SINR`. The dispersion penalty enters with a minus sign; only
//! that sign gives the normal-approximation rate and a decreasing, convex
//! `f` on `(0, g^-1(alpha)]`.

use std::f64::consts::LN_2;

use crate::channel::EstimationStats;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::optimizer::PowerAllocation;
use crate::scenario::LargeScaleModel;

/// Gaussian tail probability `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 0.5]`.
pub fn q_inverse(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::domain(format!("error probability {eps} outside (0, 0.5)")));
    }
    if eps == 0.5 {
        return Ok(0.0);
    }
    // Q is decreasing: keep a bracket and take Newton steps inside it.
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    let mut x = (-2.0 * (eps * (2.0 * std::f64::consts::PI).sqrt()).ln()).sqrt().min(hi);
    for _ in 0..200 {
        let r = q_function(x) - eps;
        if r > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut next = x + r / pdf;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Per-device finite-blocklength constants.
#[derive(Debug, Clone, PartialEq)]
pub struct FblParams {
    /// Pilot overhead `K / L`.
    pub eta: f64,
    pub blocklength: usize,
    pub bandwidth_hz: f64,
    /// `Q^-1(eps_k)`.
    pub q_inv: Vec<f64>,
    /// `Q^-1(eps_k) / sqrt(L (1 - eta))`.
    pub alpha: Vec<f64>,
    pub rate_req_bps: Vec<f64>,
    pub energy: Vec<f64>,
}

impl FblParams {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        let k = cfg.num_devices;
        let eta = cfg.eta();
        let scale = (cfg.blocklength as f64 * (1.0 - eta)).sqrt();
        let q_inv = (0..k).map(|i| q_inverse(cfg.dep.get(i))).collect::<Result<Vec<_>>>()?;
        Ok(FblParams {
            eta,
            blocklength: cfg.blocklength,
            bandwidth_hz: cfg.bandwidth_hz,
            alpha: q_inv.iter().map(|q| q / scale).collect(),
            q_inv,
            rate_req_bps: cfg.rate_req_bps.to_vec(k),
            energy: cfg.energy_budget.to_vec(k),
        })
    }

    /// Infinite-blocklength variant: no dispersion penalty.
    pub fn without_penalty(&self) -> Self {
        let mut out = self.clone();
        out.q_inv.iter_mut().for_each(|q| *q = 0.0);
        out.alpha.iter_mut().for_each(|a| *a = 0.0);
        out
    }

    pub fn num_devices(&self) -> usize {
        self.alpha.len()
    }

    /// `B (1 - eta) / ln 2`, converting `f` values into bits per second.
    pub fn rate_scale(&self) -> f64 {
        self.bandwidth_hz * (1.0 - self.eta) / LN_2
    }
}

/// `g(x) = (x + 1) ln(1 + 1/x) / sqrt(2x + 1)`, decreasing on `x > 0`.
pub fn g_function(x: f64) -> f64 {
    (x + 1.0) * (1.0 / x).ln_1p() / (2.0 * x + 1.0).sqrt()
}

/// `g^-1(alpha)`: the largest `x` for which the rate stays non-negative.
/// Infinite when `alpha = 0`.
pub fn domain_bound(alpha: f64) -> f64 {
    if alpha <= 0.0 {
        return f64::INFINITY;
    }
    // bisection on ln x
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g_function(mid.exp()) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.exp()
}

/// `G(chi) = sqrt(1 - (1 + chi)^-2)`, the square root of the dispersion.
pub fn dispersion_root(chi: f64) -> f64 {
    (1.0 - 1.0 / (1.0 + chi).powi(2)).sqrt()
}

/// Unchecked `f` for a given `alpha`.
pub fn f_value(x: f64, alpha: f64) -> f64 {
    (1.0 / x).ln_1p() - alpha * ((2.0 * x + 1.0) / (x + 1.0).powi(2)).sqrt()
}

/// `f_k(x)` on its domain `(0, g^-1(alpha_k)]`.
pub fn f_k(x: f64, params: &FblParams, k: usize) -> Result<f64> {
    let bound = domain_bound(params.alpha[k]);
    if !(x > 0.0 && x <= bound * (1.0 + 1e-12)) {
        return Err(Error::RateDomain { x, bound });
    }
    Ok(f_value(x, params.alpha[k]))
}

/// The `x` with `f_k(x) = y`, found by bisection on `ln x`.
pub fn f_k_inverse(y: f64, params: &FblParams, k: usize) -> Result<f64> {
    let alpha = params.alpha[k];
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::Infeasible(format!(
            "normalized rate target {y} is not attainable by device {k}"
        )));
    }
    if alpha == 0.0 {
        return Ok(1.0 / y.exp_m1());
    }
    let bound = domain_bound(alpha);
    let mut lo = -745.0f64;
    let mut hi = bound.ln();
    if f_value(lo.exp(), alpha) < y {
        return Err(Error::Infeasible(format!(
            "normalized rate target {y} exceeds what device {k} can reach"
        )));
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f_value(mid.exp(), alpha) > y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Normal-approximation achievable rate in bits/s. May be negative.
pub fn fbl_rate(gamma: f64, params: &FblParams, k: usize) -> f64 {
    let one_minus_eta = 1.0 - params.eta;
    let v = 1.0 - (1.0 + gamma).powi(-2);
    params.bandwidth_hz
        * (one_minus_eta * gamma.ln_1p() / LN_2
            - (one_minus_eta * v / params.blocklength as f64).sqrt() * params.q_inv[k] / LN_2)
}

/// Lower-bound rate `B (1-eta)/ln2 * f_k(1/gamma)`, floored at zero.
pub fn lb_rate(gamma_lb: f64, params: &FblParams, k: usize) -> f64 {
    if !(gamma_lb > 0.0) {
        return 0.0;
    }
    (params.rate_scale() * f_value(1.0 / gamma_lb, params.alpha[k])).max(0.0)
}

/// SINR floor `1 / f_k^-1(R_req ln2 / ((1-eta) B))` implied by a rate target.
pub fn sinr_floor(params: &FblParams, k: usize) -> Result<f64> {
    let y = params.rate_req_bps[k] / params.rate_scale();
    Ok(1.0 / f_k_inverse(y, params, k)?)
}

fn check_device(model: &LargeScaleModel, k: usize) -> Result<&[usize]> {
    let set = model
        .service_sets
        .get(k)
        .ok_or_else(|| Error::domain(format!("no device {k}")))?;
    if set.is_empty() {
        return Err(Error::domain(format!("device {k} has no serving AP")));
    }
    Ok(set)
}

/// Closed-form MRC lower-bound SINR.
pub fn lb_sinr_mrc(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    power: &PowerAllocation,
    k: usize,
) -> Result<f64> {
    let set = check_device(model, k)?;
    let n = model.antennas as f64;
    let sum_lambda: f64 = set.iter().map(|&m| stats.lambda[(m, k)]).sum();
    let interference: f64 = (0..model.num_devices())
        .map(|j| {
            power.payload[j]
                * set.iter().map(|&m| stats.lambda[(m, k)] * model.beta[(m, j)]).sum::<f64>()
        })
        .sum();
    Ok(n * power.payload[k] * sum_lambda * sum_lambda / (interference + sum_lambda))
}

/// Closed-form FZF lower-bound SINR. Needs `N > K`.
pub fn lb_sinr_fzf(
    model: &LargeScaleModel,
    stats: &EstimationStats,
    power: &PowerAllocation,
    k: usize,
) -> Result<f64> {
    let set = check_device(model, k)?;
    let (n, kk) = (model.antennas, model.num_devices());
    if n <= kk {
        return Err(Error::domain(format!(
            "FZF needs more antennas per AP ({n}) than devices ({kk})"
        )));
    }
    let sum_sqrt: f64 = set.iter().map(|&m| stats.lambda[(m, k)].sqrt()).sum();
    let leak: f64 = (0..kk)
        .map(|j| power.payload[j] * set.iter().map(|&m| stats.err_var[(m, j)]).sum::<f64>())
        .sum();
    Ok(power.payload[k] * (n - kk) as f64 * sum_sqrt * sum_sqrt / (set.len() as f64 + leak))
}

fn ln_kp(num_devices: usize, p: f64) -> f64 {
    (num_devices as f64 * p).ln()
}

/// `ln(K p beta + 1)` for each serving AP of device `owner`, evaluated for
/// the pilot of `device`.
fn ln_factors(model: &LargeScaleModel, set: &[usize], device: usize, pilot: f64) -> Vec<f64> {
    let kk = model.num_devices() as f64;
    set.iter().map(|&m| (kk * pilot * model.beta[(m, device)]).ln_1p()).collect()
}

/// Product-form pieces of the MRC bound, stored as logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrBreakdownMrc {
    pub ln_theta: f64,
    pub ln_sigma: f64,
    pub ln_xi: Vec<f64>,
}

impl SinrBreakdownMrc {
    pub fn theta(&self) -> f64 {
        self.ln_theta.exp()
    }
    pub fn sigma(&self) -> f64 {
        self.ln_sigma.exp()
    }
    pub fn xi(&self, j: usize) -> f64 {
        self.ln_xi[j].exp()
    }

    /// `N p_k theta^2 / (sigma (sum_j p_j xi_j + theta))`.
    pub fn sinr(&self, antennas: usize, power: &PowerAllocation, k: usize) -> f64 {
        let mut terms: Vec<f64> = self
            .ln_xi
            .iter()
            .zip(&power.payload)
            .map(|(x, p)| x + p.ln())
            .collect();
        terms.push(self.ln_theta);
        let ln_num = (antennas as f64).ln() + power.payload[k].ln() + 2.0 * self.ln_theta;
        (ln_num - self.ln_sigma - log_sum_exp(&terms)).exp()
    }
}

pub fn mrc_breakdown(model: &LargeScaleModel, pilot: &[f64], k: usize) -> Result<SinrBreakdownMrc> {
    let set = check_device(model, k)?;
    if !(pilot[k] > 0.0) {
        return Err(Error::domain("pilot power must be positive"));
    }
    let lf = ln_factors(model, set, k, pilot[k]);
    let ln_sigma: f64 = lf.iter().sum();
    let lkp = ln_kp(model.num_devices(), pilot[k]);
    // ln of K p beta_m^2 prod_{n != m}(K p beta_n + 1)
    let base: Vec<f64> = set
        .iter()
        .enumerate()
        .map(|(i, &m)| lkp + 2.0 * model.beta[(m, k)].ln() + ln_sigma - lf[i])
        .collect();
    let ln_theta = log_sum_exp(&base);
    let ln_xi = (0..model.num_devices())
        .map(|j| {
            let t: Vec<f64> = set
                .iter()
                .zip(&base)
                .map(|(&m, b)| b + model.beta[(m, j)].ln())
                .collect();
            log_sum_exp(&t)
        })
        .collect();
    Ok(SinrBreakdownMrc {
        ln_theta,
        ln_sigma,
        ln_xi,
    })
}

/// Product-form pieces of the FZF bound, stored as logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrBreakdownFzf {
    pub ln_varpi: f64,
    /// `ln vartheta_{k,j}` for every device `j`.
    pub ln_vartheta: Vec<f64>,
    /// `ln mu_{k,j}` for every device `j`.
    pub ln_mu: Vec<f64>,
    pub serving: usize,
}

impl SinrBreakdownFzf {
    pub fn varpi(&self) -> f64 {
        self.ln_varpi.exp()
    }
    pub fn vartheta(&self, j: usize) -> f64 {
        self.ln_vartheta[j].exp()
    }
    pub fn mu(&self, j: usize) -> f64 {
        self.ln_mu[j].exp()
    }

    /// Product-form FZF SINR, evaluated in the log domain.
    pub fn sinr(&self, antennas: usize, power: &PowerAllocation, k: usize) -> f64 {
        let kk = self.ln_vartheta.len();
        let ln_all: f64 = 2.0 * self.ln_vartheta.iter().sum::<f64>();
        let ln_num = power.payload[k].ln()
            + ((antennas - kk) as f64).ln()
            + 2.0 * self.ln_varpi
            + ln_all
            - 2.0 * self.ln_vartheta[k];
        let mut terms = vec![(self.serving as f64).ln() + ln_all];
        for j in 0..kk {
            terms.push(power.payload[j].ln() + self.ln_mu[j] + ln_all - 2.0 * self.ln_vartheta[j]);
        }
        (ln_num - log_sum_exp(&terms)).exp()
    }
}

pub fn fzf_breakdown(model: &LargeScaleModel, pilot: &[f64], k: usize) -> Result<SinrBreakdownFzf> {
    let set = check_device(model, k)?;
    if pilot.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::domain("pilot powers must be positive"));
    }
    let kk = model.num_devices();
    let own = ln_factors(model, set, k, pilot[k]);
    let own_total: f64 = own.iter().sum();
    let lkp = ln_kp(kk, pilot[k]);
    let varpi_terms: Vec<f64> = set
        .iter()
        .enumerate()
        .map(|(i, &m)| 0.5 * (lkp + 2.0 * model.beta[(m, k)].ln()) + 0.5 * (own_total - own[i]))
        .collect();
    let mut ln_vartheta = Vec::with_capacity(kk);
    let mut ln_mu = Vec::with_capacity(kk);
    for j in 0..kk {
        let lf = ln_factors(model, set, j, pilot[j]);
        let total: f64 = lf.iter().sum();
        ln_vartheta.push(0.5 * total);
        let mu_terms: Vec<f64> = set
            .iter()
            .enumerate()
            .map(|(i, &m)| model.beta[(m, j)].ln() + total - lf[i])
            .collect();
        ln_mu.push(log_sum_exp(&mu_terms));
    }
    Ok(SinrBreakdownFzf {
        ln_varpi: log_sum_exp(&varpi_terms),
        ln_vartheta,
        ln_mu,
        serving: set.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::estimation_stats;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn params_with_alpha(alpha: f64) -> FblParams {
        let cfg = SystemConfig::default();
        let mut p = FblParams::from_config(&cfg).unwrap();
        p.alpha = vec![alpha; p.alpha.len()];
        p.q_inv = p.alpha.iter().map(|a| a * (cfg.blocklength as f64 * (1.0 - p.eta)).sqrt()).collect();
        p
    }

    /// Plain bisection on Q, independent of the Newton iteration.
    fn q_inv_oracle(eps: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 20.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_function(mid) > eps {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn q_inverse_values() {
        assert_eq!(q_inverse(0.5).unwrap(), 0.0);
        let x = q_inverse(1e-5).unwrap();
        assert!((x - q_inv_oracle(1e-5)).abs() < 1e-9);
        assert!((x - 4.2649).abs() < 1e-4);
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(0.7).is_err());
    }

    #[test]
    fn q_inverse_round_trip() {
        let mut e = 1e-9;
        while e < 0.5 {
            let x = q_inverse(e).unwrap();
            assert!((q_function(x) - e).abs() <= 1e-12, "{e}");
            e *= 1.37;
        }
    }

    #[test]
    fn f_reduces_to_shannon_without_penalty() {
        let p = params_with_alpha(0.0);
        assert!((f_k(1.0, &p, 0).unwrap() - LN_2).abs() < 1e-15);
        for y in [0.01, 0.5, 2.0, 7.0] {
            let x = f_k_inverse(y, &p, 0).unwrap();
            assert!((x - 1.0 / (y.exp() - 1.0)).abs() <= 1e-12 * x);
        }
    }

    #[test]
    fn f_domain_errors_carry_bound() {
        let p = params_with_alpha(0.3);
        let bound = domain_bound(0.3);
        assert!(f_k(bound * 0.5, &p, 0).is_ok());
        match f_k(bound * 2.0, &p, 0) {
            Err(Error::RateDomain { bound: b, .. }) => assert_eq!(b, bound),
            other => panic!("{other:?}"),
        }
        assert!(f_k(0.0, &p, 0).is_err());
        assert!(f_value(bound, 0.3).abs() < 1e-12);
    }

    #[test]
    fn f_inverse_rejects_unattainable_targets() {
        let p = params_with_alpha(0.1);
        assert!(matches!(f_k_inverse(-0.1, &p, 0), Err(Error::Infeasible(_))));
        assert!(matches!(f_k_inverse(f64::INFINITY, &p, 0), Err(Error::Infeasible(_))));
        assert!(f_k_inverse(0.0, &p, 0).is_err());
    }

    #[test]
    fn fbl_rate_limits() {
        let cfg = SystemConfig::default();
        let p = FblParams::from_config(&cfg).unwrap();
        // penalty vanishes at eps = 0.5
        let mut half = cfg.clone();
        half.dep = crate::config::PerDevice::Uniform(0.5);
        let ph = FblParams::from_config(&half).unwrap();
        let g = 3.0;
        let shannon = cfg.bandwidth_hz * (1.0 - p.eta) * (1.0 + g as f64).log2();
        assert!((fbl_rate(g, &ph, 0) - shannon).abs() < 1e-6);
        // large SINR: dispersion -> 1
        let big = 1e9;
        let penalty = cfg.bandwidth_hz * (1.0 - p.eta) * (1.0 + big as f64).log2() - fbl_rate(big, &p, 0);
        let expect = cfg.bandwidth_hz * ((1.0 - p.eta) / 1000.0).sqrt() * p.q_inv[0] / LN_2;
        assert!((penalty - expect).abs() / expect < 1e-8);
    }

    #[test]
    fn sinr_floor_without_penalty() {
        let mut p = params_with_alpha(0.0);
        // R_req = B (1 - eta): y = ln 2, floor = 1
        p.rate_req_bps = vec![p.bandwidth_hz * (1.0 - p.eta); p.alpha.len()];
        assert!((sinr_floor(&p, 0).unwrap() - 1.0).abs() < 1e-12);
        // R_req = B (1 - eta) / ln 2: y = 1, floor = e - 1
        p.rate_req_bps = vec![p.rate_scale(); p.alpha.len()];
        assert!((sinr_floor(&p, 0).unwrap() - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn sinr_floor_grows_with_reliability() {
        let cfg = SystemConfig::default();
        let mut last = 0.0;
        for eps in [0.4, 0.1, 1e-2, 1e-3, 1e-5, 1e-7, 1e-9] {
            let mut c = cfg.clone();
            c.dep = crate::config::PerDevice::Uniform(eps);
            let floor = sinr_floor(&FblParams::from_config(&c).unwrap(), 0).unwrap();
            assert!(floor > last, "{eps}");
            last = floor;
        }
    }

    #[test]
    fn lb_sinr_hand_examples() {
        // MRC: M = K = 1, N = 2, p = 1, lambda = 0.5, beta = 1
        let model = LargeScaleModel::from_beta(DMatrix::from_element(1, 1, 1.0), 2, 1.0).unwrap();
        let stats = EstimationStats {
            lambda: DMatrix::from_element(1, 1, 0.5),
            err_var: DMatrix::from_element(1, 1, 0.5),
            pilot: vec![1.0],
        };
        let pw = PowerAllocation::new(vec![1.0], vec![1.0]);
        assert!((lb_sinr_mrc(&model, &stats, &pw, 0).unwrap() - 0.5).abs() < 1e-15);
        let mut model4 = model.clone();
        model4.antennas = 4;
        assert!((lb_sinr_mrc(&model4, &stats, &pw, 0).unwrap() - 1.0).abs() < 1e-15);

        // FZF: one AP, lambda = 0.5, beta = 1, N = 4, K = 2, p = 1
        let model = LargeScaleModel::from_beta(DMatrix::from_element(1, 2, 1.0), 4, 1.0).unwrap();
        let stats = EstimationStats {
            lambda: DMatrix::from_element(1, 2, 0.5),
            err_var: DMatrix::from_element(1, 2, 0.5),
            pilot: vec![1.0, 1.0],
        };
        let pw = PowerAllocation::new(vec![1.0; 2], vec![1.0; 2]);
        assert!((lb_sinr_fzf(&model, &stats, &pw, 0).unwrap() - 0.5).abs() < 1e-15);
        let mut narrow = model.clone();
        narrow.antennas = 2;
        assert!(lb_sinr_fzf(&narrow, &stats, &pw, 0).is_err());
    }

    #[test]
    fn fzf_perfect_csi_limit() {
        let beta = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 2.0]);
        let model = LargeScaleModel::from_beta(beta, 5, 1.0).unwrap();
        let stats = estimation_stats(&model, &[1e12, 1e12]).unwrap();
        let pw = PowerAllocation::new(vec![1e12; 2], vec![1.0; 2]);
        let s = lb_sinr_fzf(&model, &stats, &pw, 0).unwrap();
        let ideal = 3.0 * (1.0f64.sqrt() + 0.2f64.sqrt()).powi(2) / 2.0;
        assert!((s - ideal).abs() / ideal < 1e-9);
    }

    #[test]
    fn single_ap_breakdown() {
        let model = LargeScaleModel::from_beta(DMatrix::from_row_slice(1, 2, &[0.7, 1.3]), 4, 1.0).unwrap();
        let b = mrc_breakdown(&model, &[0.2, 0.4], 0).unwrap();
        let kp = 2.0 * 0.2;
        assert!((b.theta() - kp * 0.49).abs() < 1e-14);
        assert!((b.sigma() - (kp * 0.7 + 1.0)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn f_is_decreasing_and_convex(alpha in 0.0f64..0.8, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let bound = domain_bound(alpha).min(1e4);
            let (x1, x2) = (bound * a.min(b).max(1e-6), bound * a.max(b).max(1e-6));
            prop_assume!(x2 - x1 > 1e-9 * x2);
            prop_assert!(f_value(x1, alpha) > f_value(x2, alpha));
            let mid = f_value(0.5 * (x1 + x2), alpha);
            prop_assert!(mid <= 0.5 * (f_value(x1, alpha) + f_value(x2, alpha)) + 1e-12);
        }

        #[test]
        fn g_is_decreasing(x in 1e-6f64..1e4, r in 1.0001f64..10.0) {
            prop_assert!(g_function(x * r) < g_function(x));
        }

        #[test]
        fn rate_identity(gamma in 1e-3f64..1e5) {
            let p = FblParams::from_config(&SystemConfig::default()).unwrap();
            let via_f = p.rate_scale() * f_value(1.0 / gamma, p.alpha[0]);
            prop_assert!((fbl_rate(gamma, &p, 0) - via_f).abs() <= 1e-9 * via_f.abs().max(1.0));
        }

        #[test]
        fn f_inverse_round_trip(alpha in 0.0f64..0.5, y in 1e-3f64..20.0) {
            let p = params_with_alpha(alpha);
            let x = f_k_inverse(y, &p, 0).unwrap();
            prop_assert!((f_value(x, alpha) - y).abs() <= 1e-10 * y);
        }

        #[test]
        fn floor_increases_with_rate(r1 in 1e5f64..2e7, factor in 1.01f64..3.0) {
            let mut p = FblParams::from_config(&SystemConfig::default()).unwrap();
            p.rate_req_bps[0] = r1;
            let f1 = sinr_floor(&p, 0).unwrap();
            p.rate_req_bps[0] = r1 * factor;
            prop_assert!(sinr_floor(&p, 0).unwrap() > f1);
        }
    }
}
