//! Local bounds that turn the rate maximization into a geometric program.
//!
//! All bounds are tight at the expansion point and are expressed in
//! `ln(.)` so they combine with the monomial machinery of [`crate::gp`].

use crate::error::{Error, Result};
use crate::fbl::{dispersion_root, fzf_breakdown, mrc_breakdown};
use crate::math::log_sum_exp;
use crate::scenario::LargeScaleModel;

/// Smallest expansion point for which [`dispersion_upper`] is a valid bound.
pub fn dispersion_threshold() -> f64 {
    (17f64.sqrt() - 3.0) / 4.0
}

/// Coefficients of an affine function of `ln x`: `rho ln x + delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAffine {
    pub rho: f64,
    pub delta: f64,
}

impl LogAffine {
    pub fn eval(&self, x: f64) -> f64 {
        self.rho * x.ln() + self.delta
    }
}

/// `ln(1 + x) >= rho ln x + delta`, tight at `x_hat`.
pub fn log_lower(x_hat: f64) -> Result<LogAffine> {
    if !(x_hat > 0.0 && x_hat.is_finite()) {
        return Err(Error::domain(format!("expansion point {x_hat} must be positive")));
    }
    let rho = x_hat / (1.0 + x_hat);
    Ok(LogAffine {
        rho,
        delta: x_hat.ln_1p() - rho * x_hat.ln(),
    })
}

/// `sqrt(1 - (1+x)^-2) <= rho ln x + delta`, tight at `x_hat`.
pub fn dispersion_upper(x_hat: f64) -> Result<LogAffine> {
    if !(x_hat >= dispersion_threshold() && x_hat.is_finite()) {
        return Err(Error::domain(format!(
            "expansion point {x_hat} below {:.6}",
            dispersion_threshold()
        )));
    }
    let s = (x_hat * x_hat + 2.0 * x_hat).sqrt();
    let rho = x_hat / s - x_hat * s / (1.0 + x_hat).powi(2);
    Ok(LogAffine {
        rho,
        delta: dispersion_root(x_hat) - rho * x_hat.ln(),
    })
}

/// [`dispersion_upper`] with the expansion point raised to the threshold.
pub fn dispersion_upper_clamped(x_hat: f64) -> LogAffine {
    dispersion_upper(x_hat.max(dispersion_threshold())).expect("clamped point is valid")
}

/// Affine-in-`ln chi` lower bound of `ln(1+chi) - alpha G(chi)`.
pub fn rate_surrogate(chi_hat: f64, alpha: f64) -> Result<LogAffine> {
    let l = log_lower(chi_hat)?;
    let d = dispersion_upper_clamped(chi_hat);
    Ok(LogAffine {
        rho: l.rho - alpha * d.rho,
        delta: l.delta - alpha * d.delta,
    })
}

/// Monomial `exp(ln_coef) * prod_j p_j^exponents[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBound {
    pub ln_coef: f64,
    pub exponents: Vec<f64>,
}

impl MonomialBound {
    pub fn ln_eval(&self, p: &[f64]) -> f64 {
        self.ln_coef
            + self
                .exponents
                .iter()
                .zip(p)
                .filter(|(e, _)| **e != 0.0)
                .map(|(e, x)| e * x.ln())
                .sum::<f64>()
    }
}

fn ratios(model: &LargeScaleModel, set: &[usize], j: usize, p: f64) -> Vec<f64> {
    let kk = model.num_devices() as f64;
    set.iter()
        .map(|&m| {
            let t = kk * p * model.beta[(m, j)];
            t / (t + 1.0)
        })
        .collect()
}

/// Normalized weights from log terms.
fn softmax(ln_terms: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(ln_terms);
    ln_terms.iter().map(|t| (t - z).exp()).collect()
}

/// Monomial lower bound of the MRC `theta_k` in the pilot power of device
/// `k`, tight at `pilot_hat`.
pub fn mrc_theta_monomial(model: &LargeScaleModel, pilot_hat: &[f64], k: usize) -> Result<MonomialBound> {
    let b = mrc_breakdown(model, pilot_hat, k)?;
    let set = &model.service_sets[k];
    let kk = model.num_devices() as f64;
    let r = ratios(model, set, k, pilot_hat[k]);
    let ln_terms: Vec<f64> = set
        .iter()
        .map(|&m| {
            2.0 * model.beta[(m, k)].ln()
                + set
                    .iter()
                    .filter(|&&n| n != m)
                    .map(|&n| (kk * pilot_hat[k] * model.beta[(n, k)]).ln_1p())
                    .sum::<f64>()
        })
        .collect();
    let w = softmax(&ln_terms);
    let r_total: f64 = r.iter().sum();
    let a = 1.0 + w.iter().zip(&r).map(|(w, r)| w * (r_total - r)).sum::<f64>();
    let mut exponents = vec![0.0; model.num_devices()];
    exponents[k] = a;
    Ok(MonomialBound {
        ln_coef: b.ln_theta - a * pilot_hat[k].ln(),
        exponents,
    })
}

/// Monomial lower bound of the FZF numerator
/// `varpi_k^2 prod_{j != k} vartheta_{k,j}^2` over all pilot powers.
pub fn fzf_numerator_monomial(
    model: &LargeScaleModel,
    pilot_hat: &[f64],
    k: usize,
) -> Result<MonomialBound> {
    let b = fzf_breakdown(model, pilot_hat, k)?;
    let set = &model.service_sets[k];
    let kk = model.num_devices();
    let mut exponents = vec![0.0; kk];
    for (j, e) in exponents.iter_mut().enumerate() {
        if j != k {
            *e = ratios(model, set, j, pilot_hat[j]).iter().sum();
        }
    }
    let r = ratios(model, set, k, pilot_hat[k]);
    let ln_terms: Vec<f64> = set
        .iter()
        .map(|&m| {
            model.beta[(m, k)].ln()
                + 0.5
                    * set
                        .iter()
                        .filter(|&&n| n != m)
                        .map(|&n| (kk as f64 * pilot_hat[k] * model.beta[(n, k)]).ln_1p())
                        .sum::<f64>()
        })
        .collect();
    let w = softmax(&ln_terms);
    let r_total: f64 = r.iter().sum();
    exponents[k] = 2.0 * (0.5 + w.iter().zip(&r).map(|(w, r)| w * 0.5 * (r_total - r)).sum::<f64>());
    let ln_value = 2.0 * b.ln_varpi
        + 2.0 * (0..kk).filter(|&j| j != k).map(|j| b.ln_vartheta[j]).sum::<f64>();
    let ln_coef = ln_value
        - exponents
            .iter()
            .zip(pilot_hat)
            .map(|(e, p)| e * p.ln())
            .sum::<f64>();
    Ok(MonomialBound { ln_coef, exponents })
}
