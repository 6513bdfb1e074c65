//! Oracle suites for the closed forms, the local bounds and the GP solver.
//!
//! Each suite draws random instances from a seed and reports the worst
//! observed error against its tolerance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::approx::{
    dispersion_threshold, dispersion_upper, fzf_numerator_monomial, log_lower, mrc_theta_monomial,
};
use crate::channel::estimation_stats;
use crate::error::Result;
use crate::fbl::{dispersion_root, fzf_breakdown, lb_sinr_fzf, lb_sinr_mrc, mrc_breakdown};
use crate::gp::{solve, GpOptions, GpProblem};
use crate::optimizer::PowerAllocation;
use crate::rng::{domain, substream};
use crate::scenario::LargeScaleModel;

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl SuiteResult {
    fn new(name: &str, cases: usize, worst: f64, tolerance: f64) -> Self {
        SuiteResult {
            name: name.to_string(),
            cases,
            worst,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Random gains, service sets and powers with `N > K`.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (LargeScaleModel, PowerAllocation) {
    let m = rng.random_range(1..=6);
    let k = rng.random_range(1..=5);
    let n = k + rng.random_range(1..=10);
    let beta = DMatrix::from_fn(m, k, |_, _| log_uniform(rng, 1e-2, 1e5));
    let threshold = 0.5 + 0.5 * rng.random::<f64>();
    let model = LargeScaleModel::from_beta(beta, n, threshold).expect("valid gains");
    let pilot = (0..k).map(|_| log_uniform(rng, 1e-3, 10.0)).collect();
    let payload = (0..k).map(|_| log_uniform(rng, 1e-3, 10.0)).collect();
    (model, PowerAllocation::new(pilot, payload))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Product-form SINRs against the direct closed forms.
pub fn identity_suites(cases: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut rng = substream(seed, domain::SELFTEST, 1);
    let (mut mrc, mut fzf) = (0.0f64, 0.0f64);
    for _ in 0..cases {
        let (model, power) = random_instance(&mut rng);
        let stats = estimation_stats(&model, &power.pilot)?;
        for k in 0..model.num_devices() {
            let direct = lb_sinr_mrc(&model, &stats, &power, k)?;
            let prod = mrc_breakdown(&model, &power.pilot, k)?.sinr(model.antennas, &power, k);
            mrc = mrc.max(rel(prod, direct));
            let direct = lb_sinr_fzf(&model, &stats, &power, k)?;
            let prod = fzf_breakdown(&model, &power.pilot, k)?.sinr(model.antennas, &power, k);
            fzf = fzf.max(rel(prod, direct));
        }
    }
    Ok(vec![
        SuiteResult::new("mrc_product_form", cases, mrc, 1e-10),
        SuiteResult::new("fzf_product_form", cases, fzf, 1e-10),
    ])
}

/// Worst violation, expansion-point mismatch and tangency error of a
/// one-dimensional bound in `t = ln x`.
struct BoundErrors {
    violation: f64,
    equality: f64,
    tangency: f64,
}

impl BoundErrors {
    fn new() -> Self {
        BoundErrors {
            violation: 0.0,
            equality: 0.0,
            tangency: 0.0,
        }
    }

    fn results(&self, name: &str, cases: usize) -> Vec<SuiteResult> {
        vec![
            SuiteResult::new(&format!("{name}_bound"), cases, self.violation, 1e-9),
            SuiteResult::new(&format!("{name}_tight"), cases, self.equality, 1e-12),
            SuiteResult::new(&format!("{name}_tangent"), cases, self.tangency, 1e-6),
        ]
    }
}

const FD_STEP: f64 = 1e-5;

fn central_difference(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    (f(t + FD_STEP) - f(t - FD_STEP)) / (2.0 * FD_STEP)
}

/// Lemma-type scalar bounds: `ln(1+x)` from below and the dispersion root
/// from above.
pub fn scalar_bound_suites(cases: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut rng = substream(seed, domain::SELFTEST, 2);
    let mut lower = BoundErrors::new();
    let mut upper = BoundErrors::new();
    let f = |t: f64| t.exp().ln_1p();
    let g = |t: f64| dispersion_root(t.exp());
    for _ in 0..cases {
        let x_hat = log_uniform(&mut rng, 1e-4, 1e4);
        let x = log_uniform(&mut rng, 1e-4, 1e4);
        let b = log_lower(x_hat)?;
        lower.violation = lower.violation.max((b.eval(x) - x.ln_1p()) / x.ln_1p().abs());
        lower.equality = lower.equality.max(rel(b.eval(x_hat), x_hat.ln_1p()));
        lower.tangency = lower.tangency.max((central_difference(f, x_hat.ln()) - b.rho).abs());

        let x_hat = log_uniform(&mut rng, dispersion_threshold(), 1e4);
        let b = dispersion_upper(x_hat)?;
        // G(e^t) is concave only above the threshold
        let x = log_uniform(&mut rng, dispersion_threshold(), 1e4);
        let gx = dispersion_root(x);
        upper.violation = upper.violation.max((gx - b.eval(x)) / gx);
        upper.equality = upper.equality.max(rel(b.eval(x_hat), dispersion_root(x_hat)));
        upper.tangency = upper.tangency.max((central_difference(g, x_hat.ln()) - b.rho).abs());
    }
    let mut out = lower.results("log_lower", cases);
    out.extend(upper.results("dispersion_upper", cases));
    Ok(out)
}

/// Monomial lower bounds of the pilot-dependent MRC and FZF terms.
pub fn monomial_bound_suites(cases: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut rng = substream(seed, domain::SELFTEST, 3);
    let mut mrc = BoundErrors::new();
    let mut fzf = BoundErrors::new();
    let fzf_ln = |model: &LargeScaleModel, p: &[f64], k: usize| -> Result<f64> {
        let b = fzf_breakdown(model, p, k)?;
        let others: f64 = (0..p.len()).filter(|&j| j != k).map(|j| b.ln_vartheta[j]).sum();
        Ok(2.0 * b.ln_varpi + 2.0 * others)
    };
    for _ in 0..cases {
        let (model, hat) = random_instance(&mut rng);
        let kk = model.num_devices();
        let k = rng.random_range(0..kk);
        let p: Vec<f64> = (0..kk).map(|_| log_uniform(&mut rng, 1e-3, 10.0)).collect();

        let bound = mrc_theta_monomial(&model, &hat.pilot, k)?;
        let exact = mrc_breakdown(&model, &p, k)?.ln_theta;
        // ratios of values become differences of logarithms
        mrc.violation = mrc.violation.max(bound.ln_eval(&p) - exact);
        let at_hat = mrc_breakdown(&model, &hat.pilot, k)?.ln_theta;
        mrc.equality = mrc.equality.max((bound.ln_eval(&hat.pilot) - at_hat).abs());
        let fd = central_difference(
            |t| {
                let mut q = hat.pilot.clone();
                q[k] = t.exp();
                mrc_breakdown(&model, &q, k).map(|b| b.ln_theta).unwrap_or(f64::NAN)
            },
            hat.pilot[k].ln(),
        );
        mrc.tangency = mrc.tangency.max((fd - bound.exponents[k]).abs());

        let bound = fzf_numerator_monomial(&model, &hat.pilot, k)?;
        fzf.violation = fzf.violation.max(bound.ln_eval(&p) - fzf_ln(&model, &p, k)?);
        fzf.equality = fzf
            .equality
            .max((bound.ln_eval(&hat.pilot) - fzf_ln(&model, &hat.pilot, k)?).abs());
        for j in 0..kk {
            let fd = central_difference(
                |t| {
                    let mut q = hat.pilot.clone();
                    q[j] = t.exp();
                    fzf_ln(&model, &q, k).unwrap_or(f64::NAN)
                },
                hat.pilot[j].ln(),
            );
            fzf.tangency = fzf.tangency.max((fd - bound.exponents[j]).abs());
        }
    }
    let mut out = mrc.results("mrc_theta_monomial", cases);
    out.extend(fzf.results("fzf_numerator_monomial", cases));
    Ok(out)
}

/// `c x1^a x2^b` as per-axis factors over a log grid.
struct Term2 {
    c: f64,
    a: f64,
    b: f64,
}

/// A random coercive two-variable GP: minimize a posynomial subject to one
/// posynomial constraint and a box `e^-3 <= x_i <= e^3`.
struct RandomGp {
    objective: Vec<Term2>,
    constraint: Vec<Term2>,
}

const BOX: f64 = 3.0;

impl RandomGp {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let mut e = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        let mut objective = vec![
            Term2 { c: 1.0, a: e(0.5, 2.0), b: 0.0 },
            Term2 { c: 1.0, a: -e(0.5, 2.0), b: 0.0 },
            Term2 { c: 1.0, a: 0.0, b: e(0.5, 2.0) },
            Term2 { c: 1.0, a: 0.0, b: -e(0.5, 2.0) },
            Term2 { c: 1.0, a: e(-1.5, 1.5), b: e(-1.5, 1.5) },
        ];
        for t in &mut objective {
            t.c = (e(-2.0, 2.0)).exp();
        }
        let mut constraint = vec![
            Term2 { c: 1.0, a: e(-1.5, 1.5), b: e(-1.5, 1.5) },
            Term2 { c: 1.0, a: e(-1.5, 1.5), b: e(-1.5, 1.5) },
        ];
        // feasible with slack at a random interior point
        let (t1, t2) = (e(-2.0, 2.0), e(-2.0, 2.0));
        let mut total = 0.0;
        for t in &mut constraint {
            t.c = e(-1.0, 1.0).exp();
            total += t.c * (t.a * t1 + t.b * t2).exp();
        }
        let scale = e(0.2, 0.9) / total;
        constraint.iter_mut().for_each(|t| t.c *= scale);
        RandomGp { objective, constraint }
    }

    /// The GP in `u = x / scale`, with the objective multiplied by
    /// `objective_scale`.
    fn build(&self, objective_scale: f64, scale: [f64; 2]) -> Result<GpProblem> {
        let mut gp = GpProblem::new(["u1", "u2"]);
        let a = &mut gp.arena;
        let mono = |a: &mut crate::gp::ExprArena, t: &Term2, c: f64| {
            a.monomial(c * t.c * scale[0].powf(t.a) * scale[1].powf(t.b), &[(0, t.a), (1, t.b)])
        };
        let obj: Vec<_> = self
            .objective
            .iter()
            .map(|t| mono(a, t, objective_scale))
            .collect::<Result<_>>()?;
        let obj = a.sum(&obj)?;
        let con: Vec<_> = self.constraint.iter().map(|t| mono(a, t, 1.0)).collect::<Result<_>>()?;
        let con = a.sum(&con)?;
        let one = a.constant(1.0)?;
        let mut bounds = Vec::new();
        for (v, s) in scale.iter().enumerate() {
            let u = a.var(v)?;
            let hi = a.constant(BOX.exp() / s)?;
            let lo = a.constant((-BOX).exp() / s)?;
            bounds.push((format!("u{}_hi", v + 1), u, hi));
            bounds.push((format!("u{}_lo", v + 1), lo, u));
        }
        gp.minimize(obj)?;
        gp.constrain("posynomial", con, one)?;
        for (name, lhs, rhs) in bounds {
            gp.constrain(name, lhs, rhs)?;
        }
        Ok(gp)
    }

    /// Best feasible objective over a `side x side` grid of `ln x`.
    fn grid_min(&self, c1: f64, c2: f64, half_width: f64, side: usize) -> (f64, f64, f64) {
        let axis: Vec<f64> = (0..side)
            .map(|i| c1 - half_width + 2.0 * half_width * i as f64 / (side - 1) as f64)
            .collect();
        let axis2: Vec<f64> = (0..side)
            .map(|i| c2 - half_width + 2.0 * half_width * i as f64 / (side - 1) as f64)
            .collect();
        let table = |terms: &[Term2], ax: &[f64], first: bool| -> Vec<Vec<f64>> {
            terms
                .iter()
                .map(|t| {
                    let e = if first { t.a } else { t.b };
                    let c = if first { t.c } else { 1.0 };
                    ax.iter().map(|x| c * (e * x).exp()).collect()
                })
                .collect()
        };
        let (o1, o2) = (table(&self.objective, &axis, true), table(&self.objective, &axis2, false));
        let (g1, g2) = (table(&self.constraint, &axis, true), table(&self.constraint, &axis2, false));
        let mut best = (f64::INFINITY, c1, c2);
        for (i, &t1) in axis.iter().enumerate() {
            if t1.abs() > BOX {
                continue;
            }
            for (j, &t2) in axis2.iter().enumerate() {
                if t2.abs() > BOX {
                    continue;
                }
                let g: f64 = g1.iter().zip(&g2).map(|(u, v)| u[i] * v[j]).sum();
                if g > 1.0 {
                    continue;
                }
                let f: f64 = o1.iter().zip(&o2).map(|(u, v)| u[i] * v[j]).sum();
                if f < best.0 {
                    best = (f, t1, t2);
                }
            }
        }
        best
    }

    /// Coarse grid over the box, then a fine grid around its best point.
    fn brute_force(&self) -> f64 {
        let side = 1000;
        let (coarse, t1, t2) = self.grid_min(0.0, 0.0, BOX, side);
        let spacing = 2.0 * BOX / (side - 1) as f64;
        let (fine, _, _) = self.grid_min(t1, t2, 5.0 * spacing, side);
        coarse.min(fine)
    }
}

/// Random two-variable GPs against a log-grid brute force, plus invariance
/// under objective and variable rescaling.
pub fn gp_oracle_suites(cases: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut rng = substream(seed, domain::SELFTEST, 4);
    let mut worst_gap = 0.0f64;
    let mut worst_scale = 0.0f64;
    let opts = GpOptions::default();
    for _ in 0..cases {
        let inst = RandomGp::draw(&mut rng);
        let base = solve(&inst.build(1.0, [1.0, 1.0])?, &opts)?;
        let grid = inst.brute_force();
        let gap = if base.is_optimal() { rel(base.objective, grid) } else { f64::INFINITY };
        worst_gap = worst_gap.max(gap);

        let (obj_scale, scale) = (1e3, [1e3, 1e-2]);
        let scaled = solve(&inst.build(obj_scale, scale)?, &opts)?;
        let mut err = rel(scaled.objective / obj_scale, base.objective);
        for ((u, s), x) in scaled.x.iter().zip(scale).zip(&base.x) {
            err = err.max(rel(u * s, *x));
        }
        worst_scale = worst_scale.max(if scaled.is_optimal() { err } else { f64::INFINITY });
    }
    Ok(vec![
        SuiteResult::new("gp_grid_oracle", cases, worst_gap, 1e-3),
        SuiteResult::new("gp_scaling_invariance", cases, worst_scale, 1e-6),
    ])
}

/// Every suite at the given case counts.
pub fn run_all(identity_cases: usize, bound_cases: usize, gp_cases: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut out = identity_suites(identity_cases, seed)?;
    out.extend(scalar_bound_suites(bound_cases, seed)?);
    out.extend(monomial_bound_suites(bound_cases, seed)?);
    out.extend(gp_oracle_suites(gp_cases, seed)?);
    Ok(out)
}
