//! Builders for the per-iteration geometric programs.

use std::collections::HashMap;

use crate::approx::{fzf_numerator_monomial, mrc_theta_monomial};
use crate::error::{Error, Result};
use crate::fbl::{fzf_breakdown, mrc_breakdown, FblParams};
use crate::gp::{ExprId, GpProblem};
use crate::scenario::LargeScaleModel;

use super::Decoder;

/// How the pilot powers enter the program.
#[derive(Debug, Clone, PartialEq)]
pub enum PilotMode {
    Variable,
    Fixed(Vec<f64>),
}

/// What the SINR variables mean in the program.
#[derive(Debug, Clone, PartialEq)]
pub enum SinrTarget {
    /// Per-device `chi_k` with floors, maximizing `prod chi_k^w_k`.
    Weighted { exponents: Vec<f64>, floors: Vec<f64> },
    /// `chi_k = phi * floor_k` with a single `phi`, maximizing `phi`.
    Scaled { floors: Vec<f64> },
}

/// Variable offsets in the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub num_devices: usize,
    pub pilot: Option<usize>,
    pub payload: usize,
    /// First `chi` variable, or the single `phi`.
    pub sinr: usize,
    pub num_vars: usize,
}

impl Layout {
    fn new(k: usize, variable_pilot: bool, scaled: bool) -> Self {
        let pilot = variable_pilot.then_some(0);
        let payload = if variable_pilot { k } else { 0 };
        let sinr = payload + k;
        Layout {
            num_devices: k,
            pilot,
            payload,
            sinr,
            num_vars: sinr + if scaled { 1 } else { k },
        }
    }

    pub fn names(&self) -> Vec<String> {
        let k = self.num_devices;
        let mut names = Vec::with_capacity(self.num_vars);
        if self.pilot.is_some() {
            names.extend((0..k).map(|i| format!("pp{i}")));
        }
        names.extend((0..k).map(|i| format!("pd{i}")));
        if self.num_vars - self.sinr == 1 {
            names.push("phi".into());
        } else {
            names.extend((0..k).map(|i| format!("chi{i}")));
        }
        names
    }

    /// Packs powers and SINR values into a variable vector.
    pub fn pack(&self, pilot: &[f64], payload: &[f64], sinr: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.num_vars);
        if self.pilot.is_some() {
            x.extend_from_slice(pilot);
        }
        x.extend_from_slice(payload);
        x.extend_from_slice(sinr);
        x
    }
}

struct Builder<'a> {
    gp: GpProblem,
    layout: Layout,
    model: &'a LargeScaleModel,
    pilot_fixed: Option<&'a [f64]>,
    factors: HashMap<(usize, usize), ExprId>,
}

impl Builder<'_> {
    fn kf(&self) -> f64 {
        self.model.num_devices() as f64
    }

    /// `K p_j beta_{m,j} + 1`.
    fn factor(&mut self, m: usize, j: usize) -> Result<ExprId> {
        if let Some(id) = self.factors.get(&(m, j)) {
            return Ok(*id);
        }
        let kb = self.kf() * self.model.beta[(m, j)];
        let id = match (self.pilot_fixed, self.layout.pilot) {
            (Some(p), _) => self.gp.arena.constant(kb * p[j] + 1.0)?,
            (None, Some(off)) => {
                let lin = self.gp.arena.monomial(kb, &[(off + j, 1.0)])?;
                let one = self.gp.arena.constant(1.0)?;
                self.gp.arena.sum(&[lin, one])?
            }
            (None, None) => unreachable!("variable pilot without pilot variables"),
        };
        self.factors.insert((m, j), id);
        Ok(id)
    }

    /// `coef * p_j^exp`, a constant when pilots are fixed.
    fn pilot_mono(&mut self, coef: f64, j: usize, exp: f64) -> Result<ExprId> {
        match (self.pilot_fixed, self.layout.pilot) {
            (Some(p), _) => self.gp.arena.constant(coef * p[j].powf(exp)),
            (None, Some(off)) => self.gp.arena.monomial(coef, &[(off + j, exp)]),
            (None, None) => unreachable!(),
        }
    }

    fn product_or(&mut self, items: Vec<ExprId>, head: ExprId) -> Result<ExprId> {
        let mut all = vec![head];
        all.extend(items);
        self.gp.arena.product(&all)
    }

    /// Factors of device `j` over `set`, excluding AP `skip`.
    fn factors_except(&mut self, set: &[usize], j: usize, skip: Option<usize>) -> Result<Vec<ExprId>> {
        set.iter()
            .filter(|&&m| Some(m) != skip)
            .map(|&m| self.factor(m, j))
            .collect()
    }

    fn payload(&mut self, j: usize) -> Result<ExprId> {
        let v = self.layout.payload + j;
        self.gp.arena.var(v)
    }

    fn sinr_expr(&mut self, target: &SinrTarget, k: usize) -> Result<ExprId> {
        match target {
            SinrTarget::Weighted { .. } => self.gp.arena.var(self.layout.sinr + k),
            SinrTarget::Scaled { floors } => self.gp.arena.monomial(floors[k], &[(self.layout.sinr, 1.0)]),
        }
    }

    fn mrc_constraint(&mut self, target: &SinrTarget, pilot_hat: &[f64], k: usize) -> Result<()> {
        let set = self.model.service_sets[k].clone();
        let kf = self.kf();
        let n = self.model.antennas as f64;
        let kk = self.model.num_devices();
        let sigma_factors = self.factors_except(&set, k, None)?;
        let sigma = match sigma_factors.len() {
            1 => sigma_factors[0],
            _ => self.gp.arena.product(&sigma_factors)?,
        };
        let mut theta_terms = Vec::new();
        let mut xi_terms: Vec<Vec<ExprId>> = vec![Vec::new(); kk];
        for &m in &set {
            let rest = self.factors_except(&set, k, Some(m))?;
            let b = self.model.beta[(m, k)];
            let head = self.pilot_mono(kf * b * b, k, 1.0)?;
            theta_terms.push(self.product_or(rest.clone(), head)?);
            for (j, terms) in xi_terms.iter_mut().enumerate() {
                let head = self.pilot_mono(kf * b * b * self.model.beta[(m, j)], k, 1.0)?;
                terms.push(self.product_or(rest.clone(), head)?);
            }
        }
        let theta = self.gp.arena.sum(&theta_terms)?;
        let mut inner = Vec::with_capacity(kk + 1);
        for (j, terms) in xi_terms.into_iter().enumerate() {
            let xi = self.gp.arena.sum(&terms)?;
            let pd = self.payload(j)?;
            inner.push(self.gp.arena.product(&[pd, xi])?);
        }
        inner.push(theta);
        let inner = self.gp.arena.sum(&inner)?;
        let chi = self.sinr_expr(target, k)?;
        let lhs = self.gp.arena.product(&[chi, sigma, inner])?;
        let pd_k = self.layout.payload + k;
        let rhs = match (self.pilot_fixed, self.layout.pilot) {
            (Some(p), _) => {
                let ln_theta = mrc_breakdown(self.model, p, k)?.ln_theta;
                self.gp.arena.monomial_ln(n.ln() + 2.0 * ln_theta, &[(pd_k, 1.0)])?
            }
            (None, Some(off)) => {
                let mono = mrc_theta_monomial(self.model, pilot_hat, k)?;
                let a = mono.exponents[k];
                self.gp
                    .arena
                    .monomial_ln(n.ln() + 2.0 * mono.ln_coef, &[(off + k, 2.0 * a), (pd_k, 1.0)])?
            }
            (None, None) => unreachable!(),
        };
        self.gp.constrain(format!("sinr{k}"), lhs, rhs)
    }

    fn fzf_constraint(&mut self, target: &SinrTarget, pilot_hat: &[f64], k: usize) -> Result<()> {
        let set = self.model.service_sets[k].clone();
        let kk = self.model.num_devices();
        let n = self.model.antennas;
        if n <= kk {
            return Err(Error::domain(format!(
                "FZF needs more antennas per AP ({n}) than devices ({kk})"
            )));
        }
        let mut vartheta = Vec::with_capacity(kk);
        let mut mu = Vec::with_capacity(kk);
        for j in 0..kk {
            let f = self.factors_except(&set, j, None)?;
            vartheta.push(if f.len() == 1 { f[0] } else { self.gp.arena.product(&f)? });
            let mut terms = Vec::with_capacity(set.len());
            for &m in &set {
                let rest = self.factors_except(&set, j, Some(m))?;
                let head = self.gp.arena.constant(self.model.beta[(m, j)])?;
                terms.push(self.product_or(rest, head)?);
            }
            mu.push(self.gp.arena.sum(&terms)?);
        }
        let count = self.gp.arena.constant(set.len() as f64)?;
        let mut terms = Vec::with_capacity(kk + 1);
        terms.push(self.product_or(vartheta.clone(), count)?);
        for j in 0..kk {
            let pd = self.payload(j)?;
            let mut items = vec![mu[j]];
            items.extend((0..kk).filter(|&i| i != j).map(|i| vartheta[i]));
            terms.push(self.product_or(items, pd)?);
        }
        let denom = self.gp.arena.sum(&terms)?;
        let chi = self.sinr_expr(target, k)?;
        let lhs = self.gp.arena.product(&[chi, denom])?;
        let pd_k = self.layout.payload + k;
        let scale = ((n - kk) as f64).ln();
        let rhs = match (self.pilot_fixed, self.layout.pilot) {
            (Some(p), _) => {
                let b = fzf_breakdown(self.model, p, k)?;
                let ln_num = 2.0 * b.ln_varpi
                    + 2.0 * (0..kk).filter(|&j| j != k).map(|j| b.ln_vartheta[j]).sum::<f64>();
                self.gp.arena.monomial_ln(scale + ln_num, &[(pd_k, 1.0)])?
            }
            (None, Some(off)) => {
                let mono = fzf_numerator_monomial(self.model, pilot_hat, k)?;
                let mut exps: Vec<(usize, f64)> =
                    mono.exponents.iter().enumerate().map(|(j, e)| (off + j, *e)).collect();
                exps.push((pd_k, 1.0));
                self.gp.arena.monomial_ln(scale + mono.ln_coef, &exps)?
            }
            (None, None) => unreachable!(),
        };
        self.gp.constrain(format!("sinr{k}"), lhs, rhs)
    }
}

/// Builds one SCA program.
///
/// `pilot_hat` is the expansion point of the monomial bounds; it is ignored
/// when pilots are fixed.
pub fn build_program(
    model: &LargeScaleModel,
    params: &FblParams,
    decoder: Decoder,
    pilot: &PilotMode,
    pilot_hat: &[f64],
    target: &SinrTarget,
) -> Result<(GpProblem, Layout)> {
    let kk = model.num_devices();
    let scaled = matches!(target, SinrTarget::Scaled { .. });
    let layout = Layout::new(kk, *pilot == PilotMode::Variable, scaled);
    let pilot_fixed = match pilot {
        PilotMode::Fixed(p) => Some(p.as_slice()),
        PilotMode::Variable => None,
    };
    let mut b = Builder {
        gp: GpProblem::new(layout.names()),
        layout,
        model,
        pilot_fixed,
        factors: HashMap::new(),
    };
    let lk = (params.blocklength - kk) as f64;
    for k in 0..kk {
        match decoder {
            Decoder::Mrc => b.mrc_constraint(target, pilot_hat, k)?,
            Decoder::Fzf => b.fzf_constraint(target, pilot_hat, k)?,
        }
        let pd = b.gp.arena.monomial(lk, &[(layout.payload + k, 1.0)])?;
        let (lhs, budget) = match pilot_fixed {
            Some(p) => (pd, params.energy[k] - kk as f64 * p[k]),
            None => {
                let pp = b.gp.arena.monomial(kk as f64, &[(layout.pilot.unwrap() + k, 1.0)])?;
                (b.gp.arena.sum(&[pp, pd])?, params.energy[k])
            }
        };
        if !(budget > 0.0) {
            return Err(Error::Infeasible(format!("fixed pilot exhausts the energy of device {k}")));
        }
        let cap = b.gp.arena.constant(budget)?;
        b.gp.constrain(format!("energy{k}"), lhs, cap)?;
    }
    match target {
        SinrTarget::Weighted { exponents, floors } => {
            for k in 0..kk {
                let floor = b.gp.arena.constant(floors[k])?;
                let chi = b.gp.arena.var(layout.sinr + k)?;
                b.gp.constrain(format!("floor{k}"), floor, chi)?;
            }
            let terms: Vec<(usize, f64)> = exponents
                .iter()
                .enumerate()
                .map(|(k, w)| (layout.sinr + k, *w))
                .collect();
            let obj = b.gp.arena.monomial(1.0, &terms)?;
            b.gp.maximize(obj)?;
        }
        SinrTarget::Scaled { .. } => {
            let phi = b.gp.arena.var(layout.sinr)?;
            b.gp.maximize(phi)?;
        }
    }
    Ok((b.gp, layout))
}
