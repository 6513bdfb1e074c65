use super::expr::{ExprArena, ExprClass, ExprId, LocalEval};
use crate::error::{Error, Result};

/// Objective direction as stated by the modeler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// Minimize a generalized posynomial.
    Minimize,
    /// Maximize a monomial.
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// Normalized form, required to be `<= 1`.
    pub expr: ExprId,
    pub lhs: ExprId,
    pub rhs: ExprId,
}

/// A generalized geometric program over positive variables.
#[derive(Debug, Clone)]
pub struct GpProblem {
    pub arena: ExprArena,
    names: Vec<String>,
    objective: Option<(Sense, ExprId)>,
    constraints: Vec<Constraint>,
}

impl GpProblem {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        GpProblem {
            arena: ExprArena::new(names.len()),
            names,
            objective: None,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.names
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> Option<(Sense, ExprId)> {
        self.objective
    }

    pub fn minimize(&mut self, expr: ExprId) -> Result<()> {
        self.objective = Some((Sense::Minimize, expr));
        Ok(())
    }

    pub fn maximize(&mut self, expr: ExprId) -> Result<()> {
        if self.arena.class(expr) != ExprClass::Monomial {
            return Err(Error::Modeling("only a monomial can be maximized".into()));
        }
        self.objective = Some((Sense::Maximize, expr));
        Ok(())
    }

    /// Adds `lhs <= rhs`, with `rhs` a monomial.
    pub fn constrain(&mut self, name: impl Into<String>, lhs: ExprId, rhs: ExprId) -> Result<()> {
        let name = name.into();
        let expr = self
            .arena
            .div(lhs, rhs)
            .map_err(|e| Error::Modeling(format!("constraint {name}: {e}")))?;
        self.constraints.push(Constraint { name, expr, lhs, rhs });
        Ok(())
    }

    /// Standard convex form in `y = ln x`.
    pub fn normalize(&self) -> Result<ConvexForm<'_>> {
        let (sense, obj) = self
            .objective
            .ok_or_else(|| Error::Modeling("no objective".into()))?;
        // maximizing a monomial m is minimizing -ln m, still linear in y
        Ok(ConvexForm {
            arena: &self.arena,
            objective: obj,
            negate_objective: sense == Sense::Maximize,
            constraints: self.constraints.iter().map(|c| c.expr).collect(),
        })
    }

    /// Largest normalized violation `max(lhs/rhs) - 1` at a positive point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let mut vals = Vec::new();
        self.arena.eval_values(&y, &mut vals);
        self.constraints
            .iter()
            .map(|c| (vals[c.lhs.0] - vals[c.rhs.0]).exp() - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Objective in its stated sense at a positive point.
    pub fn objective_value(&self, x: &[f64]) -> Result<f64> {
        let (_, obj) = self
            .objective
            .ok_or_else(|| Error::Modeling("no objective".into()))?;
        Ok(self.arena.value_at(obj, x))
    }
}

/// One function value with derivatives scattered to its support.
#[derive(Debug, Clone)]
pub struct Term {
    pub value: f64,
    pub support: Vec<usize>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

/// A smooth convex program: minimize `f_0` subject to `f_i <= 0`.
pub trait Program {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    /// `[f_0, f_1, ..., f_m]`.
    fn values(&self, x: &[f64]) -> Vec<f64>;
    /// Values with local derivatives, same order as [`Program::values`].
    fn terms(&self, x: &[f64]) -> Vec<Term>;
}

/// Log-transformed GP: `ln g(e^y) <= 0`.
#[derive(Debug, Clone)]
pub struct ConvexForm<'a> {
    arena: &'a ExprArena,
    objective: ExprId,
    negate_objective: bool,
    constraints: Vec<ExprId>,
}

impl ConvexForm<'_> {
    fn term(&self, evals: &[LocalEval], id: ExprId, negate: bool) -> Term {
        let e = &evals[id.0];
        let s = if negate { -1.0 } else { 1.0 };
        Term {
            value: s * e.value,
            support: self.arena.support(id).to_vec(),
            grad: e.grad.iter().map(|g| s * g).collect(),
            hess: e.hess.iter().map(|h| s * h).collect(),
        }
    }
}

impl Program for ConvexForm<'_> {
    fn dim(&self) -> usize {
        self.arena.num_vars()
    }

    fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn values(&self, y: &[f64]) -> Vec<f64> {
        let mut vals = Vec::new();
        self.arena.eval_values(y, &mut vals);
        let s = if self.negate_objective { -1.0 } else { 1.0 };
        std::iter::once(s * vals[self.objective.0])
            .chain(self.constraints.iter().map(|c| vals[c.0]))
            .collect()
    }

    fn terms(&self, y: &[f64]) -> Vec<Term> {
        let mut evals = Vec::new();
        self.arena.eval_full(y, &mut evals);
        std::iter::once(self.term(&evals, self.objective, self.negate_objective))
            .chain(self.constraints.iter().map(|c| self.term(&evals, *c, false)))
            .collect()
    }
}
