use nalgebra::{DMatrix, DVector};

use super::problem::{GpProblem, Program, Term};
use crate::error::{Error, Result};

/// Armijo sufficient-decrease parameter.
pub const ARMIJO: f64 = 0.3;
/// Backtracking shrink factor.
pub const SHRINK: f64 = 0.5;
/// Initial barrier weight.
pub const T_START: f64 = 1.0;
/// Barrier weight growth per outer iteration.
pub const T_GROWTH: f64 = 10.0;
/// Newton decrement (halved, squared) at which a centering step stops.
const NEWTON_TOL: f64 = 1e-16;
/// Newton decrement below which full steps are taken.
const QUADRATIC_REGION: f64 = 1e-3;
/// Log-variable magnitude treated as divergence.
const DIVERGENCE: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct GpOptions {
    /// Target duality gap in log-objective units.
    pub tolerance: f64,
    pub max_newton_steps: usize,
    /// Positive starting point; all ones when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for GpOptions {
    fn default() -> Self {
        GpOptions {
            tolerance: 1e-8,
            max_newton_steps: 5000,
            start: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpSolution {
    pub status: GpStatus,
    /// Variable values (positive).
    pub x: Vec<f64>,
    /// Objective in the problem's stated sense.
    pub objective: f64,
    pub kkt_residual: f64,
    pub duality_gap: f64,
    /// Newton steps across phase I and phase II.
    pub iterations: usize,
    /// Dual multipliers of the normalized constraints.
    pub duals: Vec<f64>,
    /// Objective after each centering step.
    pub outer_objectives: Vec<f64>,
}

impl GpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == GpStatus::Optimal
    }
}

struct BarrierOutcome {
    x: Vec<f64>,
    t: f64,
    status: GpStatus,
    steps: usize,
    outer: Vec<f64>,
}

fn barrier_value(vals: &[f64], t: f64) -> f64 {
    let mut phi = t * vals[0];
    for v in &vals[1..] {
        if !(*v < 0.0) {
            return f64::INFINITY;
        }
        phi -= (-v).ln();
    }
    if phi.is_finite() {
        phi
    } else {
        f64::INFINITY
    }
}

fn scatter(term: &Term, wg: f64, wh: f64, wo: f64, g: &mut DVector<f64>, h: &mut DMatrix<f64>) {
    let n = term.support.len();
    for a in 0..n {
        let ia = term.support[a];
        g[ia] += wg * term.grad[a];
        for b in 0..n {
            let ib = term.support[b];
            h[(ia, ib)] += wh * term.hess[a * n + b] + wo * term.grad[a] * term.grad[b];
        }
    }
}

/// Barrier gradient and Hessian of `t f_0 - sum ln(-f_i)`.
fn barrier_derivatives<P: Program>(p: &P, x: &[f64], t: f64) -> (Vec<Term>, DVector<f64>, DMatrix<f64>) {
    let n = p.dim();
    let terms = p.terms(x);
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    scatter(&terms[0], t, t, 0.0, &mut g, &mut h);
    for term in &terms[1..] {
        let inv = -1.0 / term.value;
        scatter(term, inv, inv, inv * inv, &mut g, &mut h);
    }
    (terms, g, h)
}

fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let n = g.len();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(1e-300, f64::max);
    let mut reg = 0.0;
    for _ in 0..40 {
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] += reg;
        }
        if let Some(ch) = m.cholesky() {
            let d = ch.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        reg = if reg == 0.0 { 1e-12 * scale.max(1.0) } else { reg * 100.0 };
    }
    None
}

/// Log-barrier interior-point method from a strictly feasible `x0`.
/// `stop` is consulted after every Newton step.
fn barrier<P: Program>(
    p: &P,
    x0: Vec<f64>,
    tol: f64,
    max_steps: usize,
    check_divergence: bool,
    mut stop: impl FnMut(&[f64]) -> bool,
) -> BarrierOutcome {
    let m = p.num_constraints() as f64;
    let mut x = x0;
    let mut t = T_START;
    let mut steps = 0;
    let mut outer = Vec::new();
    loop {
        // centering
        let mut last_decrement = f64::INFINITY;
        loop {
            if steps >= max_steps {
                return BarrierOutcome { x, t, status: GpStatus::MaxIterations, steps, outer };
            }
            let (_, g, h) = barrier_derivatives(p, &x, t);
            let Some(dx) = newton_direction(&h, &g) else {
                return BarrierOutcome { x, t, status: GpStatus::MaxIterations, steps, outer };
            };
            let slope = g.dot(&dx);
            let decrement = -slope;
            if decrement / 2.0 <= NEWTON_TOL {
                break;
            }
            let quadratic = decrement < QUADRATIC_REGION;
            if quadratic && decrement > 0.5 * last_decrement {
                // rounding floor: Newton no longer contracts
                break;
            }
            last_decrement = decrement;
            let phi0 = barrier_value(&p.values(&x), t);
            let mut step = 1.0;
            let mut accepted = None;
            while step > 1e-14 {
                let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + step * d).collect();
                let phi = barrier_value(&p.values(&trial), t);
                // near the center full steps are taken as soon as they stay
                // strictly feasible; Armijo then only tests rounding noise
                if phi.is_finite() && (quadratic || phi <= phi0 + ARMIJO * step * slope) {
                    accepted = Some(trial);
                    break;
                }
                step *= SHRINK;
            }
            steps += 1;
            match accepted {
                Some(next) if next != x => x = next,
                _ => break,
            }
            if check_divergence && x.iter().any(|v| v.abs() > DIVERGENCE) {
                return BarrierOutcome { x, t, status: GpStatus::Unbounded, steps, outer };
            }
            if stop(&x) {
                return BarrierOutcome { x, t, status: GpStatus::Optimal, steps, outer };
            }
        }
        outer.push(p.values(&x)[0]);
        if m / t < tol {
            return BarrierOutcome { x, t, status: GpStatus::Optimal, steps, outer };
        }
        t *= T_GROWTH;
    }
}

/// Auxiliary program `min s` s.t. `f_i(y) <= s`, `s >= -1`.
struct PhaseOne<'a, P: Program> {
    inner: &'a P,
}

impl<P: Program> Program for PhaseOne<'_, P> {
    fn dim(&self) -> usize {
        self.inner.dim() + 1
    }

    fn num_constraints(&self) -> usize {
        self.inner.num_constraints() + 1
    }

    fn values(&self, x: &[f64]) -> Vec<f64> {
        let n = self.inner.dim();
        let s = x[n];
        let vals = self.inner.values(&x[..n]);
        let mut out = Vec::with_capacity(vals.len() + 1);
        out.push(s);
        out.extend(vals[1..].iter().map(|v| v - s));
        out.push(-s - 1.0);
        out
    }

    fn terms(&self, x: &[f64]) -> Vec<Term> {
        let n = self.inner.dim();
        let s = x[n];
        let inner = self.inner.terms(&x[..n]);
        let mut out = Vec::with_capacity(inner.len() + 1);
        out.push(Term {
            value: s,
            support: vec![n],
            grad: vec![1.0],
            hess: vec![0.0],
        });
        for t in &inner[1..] {
            let k = t.support.len();
            let mut hess = vec![0.0; (k + 1) * (k + 1)];
            for a in 0..k {
                for b in 0..k {
                    hess[a * (k + 1) + b] = t.hess[a * k + b];
                }
            }
            let mut support = t.support.clone();
            support.push(n);
            let mut grad = t.grad.clone();
            grad.push(-1.0);
            out.push(Term {
                value: t.value - s,
                support,
                grad,
                hess,
            });
        }
        out.push(Term {
            value: -s - 1.0,
            support: vec![n],
            grad: vec![-1.0],
            hess: vec![0.0],
        });
        out
    }
}

/// Margin below zero that ends phase I early.
const PHASE_ONE_MARGIN: f64 = 1e-3;

/// Finds a strictly feasible point, or `None` when the program has none.
fn phase_one<P: Program>(p: &P, y0: &[f64], tol: f64, max_steps: usize) -> (Option<Vec<f64>>, usize) {
    let vals = p.values(y0);
    let worst = vals[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if worst < 0.0 {
        return (Some(y0.to_vec()), 0);
    }
    if !worst.is_finite() {
        return (None, 0);
    }
    let aux = PhaseOne { inner: p };
    let mut x0 = y0.to_vec();
    x0.push(worst + 1.0);
    let n = p.dim();
    let out = barrier(&aux, x0, tol, max_steps, false, |x| {
        let v = p.values(&x[..n]);
        v[1..].iter().all(|f| *f < -PHASE_ONE_MARGIN)
    });
    let y = out.x[..n].to_vec();
    let v = p.values(&y);
    if v[1..].iter().all(|f| *f < 0.0) {
        (Some(y), out.steps)
    } else {
        (None, out.steps)
    }
}

/// Solves a generic smooth convex program in standard form.
pub(crate) fn solve_program<P: Program>(p: &P, y0: Vec<f64>, opts: &GpOptions) -> (GpStatus, Vec<f64>, f64, usize, Vec<f64>) {
    let (start, steps1) = phase_one(p, &y0, opts.tolerance, opts.max_newton_steps);
    let Some(start) = start else {
        return (GpStatus::Infeasible, y0, f64::INFINITY, steps1, Vec::new());
    };
    let out = barrier(p, start, opts.tolerance, opts.max_newton_steps, true, |_| false);
    (out.status, out.x, out.t, steps1 + out.steps, out.outer)
}

fn stationarity_residual(terms: &[Term], duals: &[f64], n: usize) -> f64 {
    let mut stat = vec![0.0; n];
    for (i, g) in terms[0].support.iter().zip(&terms[0].grad) {
        stat[*i] += g;
    }
    for (c, l) in terms[1..].iter().zip(duals) {
        for (i, g) in c.support.iter().zip(&c.grad) {
            stat[*i] += l * g;
        }
    }
    stat.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Least-squares multipliers on the constraints the barrier marks active.
/// Barrier multipliers inherit the relative rounding error of `f_i`, which
/// grows as `f_i -> 0`.
fn refine_duals(terms: &[Term], duals: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = duals.iter().fold(1.0f64, |a, v| a.max(*v));
    let active: Vec<usize> = (0..duals.len()).filter(|&i| duals[i] > 1e-6 * scale).collect();
    if active.is_empty() {
        return None;
    }
    let mut jt = DMatrix::zeros(n, active.len());
    for (col, &i) in active.iter().enumerate() {
        let c = &terms[i + 1];
        for (v, g) in c.support.iter().zip(&c.grad) {
            jt[(*v, col)] = *g;
        }
    }
    let mut rhs = DVector::zeros(n);
    for (v, g) in terms[0].support.iter().zip(&terms[0].grad) {
        rhs[*v] = -g;
    }
    let lambda = jt.svd(true, true).solve(&rhs, 1e-12).ok()?;
    if lambda.iter().any(|l| !(*l >= 0.0)) {
        return None;
    }
    let mut out = vec![0.0; duals.len()];
    for (col, &i) in active.iter().enumerate() {
        out[i] = lambda[col];
    }
    Some(out)
}

/// Solves a GP with a log-barrier interior-point method.
pub fn solve(problem: &GpProblem, opts: &GpOptions) -> Result<GpSolution> {
    let form = problem.normalize()?;
    let n = problem.num_vars();
    let y0 = match &opts.start {
        Some(s) if s.len() == n && s.iter().all(|v| *v > 0.0 && v.is_finite()) => {
            s.iter().map(|v| v.ln()).collect()
        }
        Some(_) => return Err(Error::Solver("start point must be positive with one entry per variable".into())),
        None => vec![0.0; n],
    };
    let (status, y, t, iterations, outer) = solve_program(&form, y0, opts);
    let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    let m = form.num_constraints();
    let terms = form.terms(&y);
    let mut duals: Vec<f64> = if t.is_finite() {
        terms[1..].iter().map(|c| -1.0 / (t * c.value)).collect()
    } else {
        vec![0.0; m]
    };
    let mut stationarity = stationarity_residual(&terms, &duals, n);
    if t.is_finite() {
        if let Some(refined) = refine_duals(&terms, &duals, n) {
            let r = stationarity_residual(&terms, &refined, n);
            if r < stationarity {
                stationarity = r;
                duals = refined;
            }
        }
    }
    let duality_gap = m as f64 / t;
    let outer_objectives = outer
        .iter()
        .map(|v| match problem.objective() {
            Some((super::Sense::Maximize, _)) => (-v).exp(),
            _ => v.exp(),
        })
        .collect();
    Ok(GpSolution {
        status,
        objective: problem.objective_value(&x)?,
        x,
        kkt_residual: duality_gap.max(stationarity),
        duality_gap,
        iterations,
        duals,
        outer_objectives,
    })
}
