//! Generalized-posynomial expression DAG evaluated in log variables.
//!
//! Every node stores `F(y) = ln(value(e^y))` together with its gradient and
//! Hessian restricted to the node's variable support. Sums become
//! log-sum-exp, products become sums and positive powers scale, so every
//! node stays convex in `y`.

use crate::error::{Error, Result};
use crate::math::log_sum_exp;

/// Handle to a node in an [`ExprArena`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExprId(pub(crate) usize);

/// Algebraic class of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExprClass {
    Monomial,
    Posynomial,
    Generalized,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// `exp(ln_coef) * prod x_i^a_i`; constants and variables are special cases.
    Monomial { ln_coef: f64, terms: Vec<(usize, f64)> },
    Sum(Vec<ExprId>),
    Product(Vec<ExprId>),
    Power(ExprId, f64),
}

#[derive(Debug, Clone)]
struct Meta {
    class: ExprClass,
    support: Vec<usize>,
    /// For each child, the position of each child support entry in `support`.
    maps: Vec<Vec<usize>>,
}

/// Value, gradient and Hessian of one node over its support.
#[derive(Debug, Clone, Default)]
pub struct LocalEval {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `support.len()^2`.
    pub hess: Vec<f64>,
}

/// Arena of expression nodes; children always precede parents.
#[derive(Debug, Clone, Default)]
pub struct ExprArena {
    nodes: Vec<Node>,
    meta: Vec<Meta>,
    num_vars: usize,
}

fn merge_support(children: &[&[usize]]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut support: Vec<usize> = children.iter().flat_map(|s| s.iter().copied()).collect();
    support.sort_unstable();
    support.dedup();
    let maps = children
        .iter()
        .map(|s| s.iter().map(|v| support.binary_search(v).unwrap()).collect())
        .collect();
    (support, maps)
}

impl ExprArena {
    pub fn new(num_vars: usize) -> Self {
        ExprArena {
            nodes: Vec::new(),
            meta: Vec::new(),
            num_vars,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: ExprId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn class(&self, id: ExprId) -> ExprClass {
        self.meta[id.0].class
    }

    pub fn support(&self, id: ExprId) -> &[usize] {
        &self.meta[id.0].support
    }

    fn push(&mut self, node: Node, meta: Meta) -> ExprId {
        self.nodes.push(node);
        self.meta.push(meta);
        ExprId(self.nodes.len() - 1)
    }

    fn check(&self, id: ExprId) -> Result<()> {
        if id.0 >= self.nodes.len() {
            return Err(Error::Modeling(format!("unknown expression {}", id.0)));
        }
        Ok(())
    }

    /// Monomial from a log coefficient and `(variable, exponent)` pairs.
    pub fn monomial_ln(&mut self, ln_coef: f64, terms: &[(usize, f64)]) -> Result<ExprId> {
        if !ln_coef.is_finite() {
            return Err(Error::Modeling(format!("monomial coefficient exp({ln_coef}) is not positive")));
        }
        let mut merged: Vec<(usize, f64)> = Vec::new();
        let mut sorted = terms.to_vec();
        sorted.sort_by_key(|t| t.0);
        for (v, a) in sorted {
            if v >= self.num_vars {
                return Err(Error::Modeling(format!("variable {v} out of range")));
            }
            if !a.is_finite() {
                return Err(Error::Modeling(format!("exponent {a} is not finite")));
            }
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        let support = merged.iter().map(|t| t.0).collect();
        Ok(self.push(
            Node::Monomial { ln_coef, terms: merged },
            Meta {
                class: ExprClass::Monomial,
                support,
                maps: Vec::new(),
            },
        ))
    }

    pub fn monomial(&mut self, coef: f64, terms: &[(usize, f64)]) -> Result<ExprId> {
        if !(coef > 0.0) {
            return Err(Error::Modeling(format!("coefficient {coef} must be positive")));
        }
        self.monomial_ln(coef.ln(), terms)
    }

    pub fn constant(&mut self, c: f64) -> Result<ExprId> {
        self.monomial(c, &[])
    }

    pub fn var(&mut self, v: usize) -> Result<ExprId> {
        self.monomial_ln(0.0, &[(v, 1.0)])
    }

    pub fn sum(&mut self, children: &[ExprId]) -> Result<ExprId> {
        if children.is_empty() {
            return Err(Error::Modeling("empty sum".into()));
        }
        for c in children {
            self.check(*c)?;
        }
        if children.len() == 1 {
            return Ok(children[0]);
        }
        let class = children
            .iter()
            .map(|c| self.class(*c))
            .max()
            .unwrap()
            .max(ExprClass::Posynomial);
        let supports: Vec<&[usize]> = children.iter().map(|c| self.support(*c)).collect();
        let (support, maps) = merge_support(&supports);
        Ok(self.push(Node::Sum(children.to_vec()), Meta { class, support, maps }))
    }

    pub fn product(&mut self, children: &[ExprId]) -> Result<ExprId> {
        if children.is_empty() {
            return Err(Error::Modeling("empty product".into()));
        }
        for c in children {
            self.check(*c)?;
        }
        if children.len() == 1 {
            return Ok(children[0]);
        }
        // products of monomials fold into a single monomial
        if children.iter().all(|c| self.class(*c) == ExprClass::Monomial) {
            let mut ln_coef = 0.0;
            let mut terms = Vec::new();
            for c in children {
                if let Node::Monomial { ln_coef: l, terms: t } = &self.nodes[c.0] {
                    ln_coef += l;
                    terms.extend_from_slice(t);
                }
            }
            return self.monomial_ln(ln_coef, &terms);
        }
        let class = if children.iter().filter(|c| self.class(**c) != ExprClass::Monomial).count() > 1
            || children.iter().any(|c| self.class(*c) == ExprClass::Generalized)
        {
            ExprClass::Generalized
        } else {
            ExprClass::Posynomial
        };
        let supports: Vec<&[usize]> = children.iter().map(|c| self.support(*c)).collect();
        let (support, maps) = merge_support(&supports);
        Ok(self.push(Node::Product(children.to_vec()), Meta { class, support, maps }))
    }

    /// `child^a`. Monomials accept any real exponent; other nodes need `a > 0`.
    pub fn power(&mut self, child: ExprId, a: f64) -> Result<ExprId> {
        self.check(child)?;
        if let Node::Monomial { ln_coef, terms } = &self.nodes[child.0] {
            let terms: Vec<_> = terms.iter().map(|(v, e)| (*v, e * a)).collect();
            return self.monomial_ln(ln_coef * a, &terms);
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Modeling(format!(
                "power {a} of a posynomial is not a generalized posynomial"
            )));
        }
        if a == 1.0 {
            return Ok(child);
        }
        let support = self.support(child).to_vec();
        let maps = vec![(0..support.len()).collect()];
        Ok(self.push(
            Node::Power(child, a),
            Meta {
                class: ExprClass::Generalized,
                support,
                maps,
            },
        ))
    }

    /// `num / den` where `den` must be a monomial.
    pub fn div(&mut self, num: ExprId, den: ExprId) -> Result<ExprId> {
        self.check(den)?;
        if self.class(den) != ExprClass::Monomial {
            return Err(Error::Modeling("only division by a monomial keeps a generalized posynomial".into()));
        }
        let inv = self.power(den, -1.0)?;
        self.product(&[num, inv])
    }

    /// Log value of every node at `y`.
    pub fn eval_values(&self, y: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.reserve(self.nodes.len());
        let mut scratch = Vec::new();
        for node in &self.nodes {
            let v = match node {
                Node::Monomial { ln_coef, terms } => {
                    ln_coef + terms.iter().map(|(i, a)| a * y[*i]).sum::<f64>()
                }
                Node::Sum(ch) => {
                    scratch.clear();
                    scratch.extend(ch.iter().map(|c| out[c.0]));
                    log_sum_exp(&scratch)
                }
                Node::Product(ch) => ch.iter().map(|c| out[c.0]).sum(),
                Node::Power(c, a) => a * out[c.0],
            };
            out.push(v);
        }
    }

    /// Value, gradient and Hessian of every node at `y`.
    pub fn eval_full(&self, y: &[f64], out: &mut Vec<LocalEval>) {
        out.clear();
        out.reserve(self.nodes.len());
        for (node, meta) in self.nodes.iter().zip(&self.meta) {
            let n = meta.support.len();
            let mut e = LocalEval {
                value: 0.0,
                grad: vec![0.0; n],
                hess: vec![0.0; n * n],
            };
            match node {
                Node::Monomial { ln_coef, terms } => {
                    e.value = ln_coef + terms.iter().map(|(i, a)| a * y[*i]).sum::<f64>();
                    for (pos, (_, a)) in terms.iter().enumerate() {
                        e.grad[pos] = *a;
                    }
                }
                Node::Sum(ch) => {
                    let vals: Vec<f64> = ch.iter().map(|c| out[c.0].value).collect();
                    e.value = log_sum_exp(&vals);
                    for ((c, map), v) in ch.iter().zip(&meta.maps).zip(&vals) {
                        let w = (v - e.value).exp();
                        let ce = &out[c.0];
                        let cn = map.len();
                        for a in 0..cn {
                            e.grad[map[a]] += w * ce.grad[a];
                            for b in 0..cn {
                                e.hess[map[a] * n + map[b]] +=
                                    w * (ce.hess[a * cn + b] + ce.grad[a] * ce.grad[b]);
                            }
                        }
                    }
                    for a in 0..n {
                        for b in 0..n {
                            e.hess[a * n + b] -= e.grad[a] * e.grad[b];
                        }
                    }
                }
                Node::Product(ch) => {
                    for (c, map) in ch.iter().zip(&meta.maps) {
                        let ce = &out[c.0];
                        e.value += ce.value;
                        let cn = map.len();
                        for a in 0..cn {
                            e.grad[map[a]] += ce.grad[a];
                            for b in 0..cn {
                                e.hess[map[a] * n + map[b]] += ce.hess[a * cn + b];
                            }
                        }
                    }
                }
                Node::Power(c, p) => {
                    let ce = &out[c.0];
                    e.value = p * ce.value;
                    e.grad.iter_mut().zip(&ce.grad).for_each(|(g, x)| *g = p * x);
                    e.hess.iter_mut().zip(&ce.hess).for_each(|(h, x)| *h = p * x);
                }
            }
            out.push(e);
        }
    }

    /// Value of a node at the positive point `x` (not in logs).
    pub fn value_at(&self, id: ExprId, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let mut vals = Vec::new();
        self.eval_values(&y, &mut vals);
        vals[id.0].exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eval_node(arena: &ExprArena, id: ExprId, y: &[f64]) -> f64 {
        let mut v = Vec::new();
        arena.eval_values(y, &mut v);
        v[id.0]
    }

    fn random_dag(rng: &mut ChaCha8Rng, nv: usize) -> (ExprArena, ExprId) {
        let mut a = ExprArena::new(nv);
        let mut pool = Vec::new();
        for _ in 0..6 {
            let k = rng.random_range(1..=nv);
            let terms: Vec<(usize, f64)> =
                (0..k).map(|_| (rng.random_range(0..nv), rng.random_range(-2.0..2.0))).collect();
            pool.push(a.monomial(rng.random_range(0.1..3.0), &terms).unwrap());
        }
        for _ in 0..8 {
            let i = pool[rng.random_range(0..pool.len())];
            let j = pool[rng.random_range(0..pool.len())];
            let id = match rng.random_range(0..3) {
                0 => a.sum(&[i, j]).unwrap(),
                1 => a.product(&[i, j]).unwrap(),
                _ => {
                    let s = a.sum(&[i, j]).unwrap();
                    a.power(s, rng.random_range(0.3..2.5)).unwrap()
                }
            };
            pool.push(id);
        }
        let top = a.sum(&pool[pool.len() - 3..]).unwrap();
        (a, top)
    }

    #[test]
    fn monomial_is_linear_in_logs() {
        let mut a = ExprArena::new(2);
        let m = a.monomial(3.0, &[(0, 2.0), (1, -0.5)]).unwrap();
        let y = [0.3, -1.2];
        assert!((eval_node(&a, m, &y) - (3f64.ln() + 0.6 + 0.6)).abs() < 1e-15);
        assert_eq!(a.class(m), ExprClass::Monomial);
    }

    #[test]
    fn classification() {
        let mut a = ExprArena::new(2);
        let x = a.var(0).unwrap();
        let y = a.var(1).unwrap();
        let one = a.constant(1.0).unwrap();
        let s = a.sum(&[x, one]).unwrap();
        assert_eq!(a.class(s), ExprClass::Posynomial);
        let p = a.product(&[s, y]).unwrap();
        assert_eq!(a.class(p), ExprClass::Posynomial);
        let pp = a.product(&[s, s]).unwrap();
        assert_eq!(a.class(pp), ExprClass::Generalized);
        assert!(a.power(s, -1.0).is_err());
        assert!(a.div(x, s).is_err());
        assert!(a.constant(0.0).is_err());
        assert!(a.monomial(1.0, &[(5, 1.0)]).is_err());
        let inv = a.power(x, -1.0).unwrap();
        assert_eq!(a.class(inv), ExprClass::Monomial);
    }

    #[test]
    fn x_plus_inverse_at_one() {
        let mut a = ExprArena::new(1);
        let x = a.var(0).unwrap();
        let xi = a.power(x, -1.0).unwrap();
        let s = a.sum(&[x, xi]).unwrap();
        assert!((a.value_at(s, &[1.0]) - 2.0).abs() < 1e-15);
        let mut full = Vec::new();
        a.eval_full(&[0.0], &mut full);
        assert!(full[s.0].grad[0].abs() < 1e-15);
        assert!((full[s.0].hess[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let nv = 4;
        for _ in 0..40 {
            let (a, top) = random_dag(&mut rng, nv);
            let y: Vec<f64> = (0..nv).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut full = Vec::new();
            a.eval_full(&y, &mut full);
            let h = 1e-5;
            for id in 0..a.len() {
                let sup = a.support(ExprId(id)).to_vec();
                let e = &full[id];
                assert!((e.value - eval_node(&a, ExprId(id), &y)).abs() < 1e-12);
                for (pi, &vi) in sup.iter().enumerate() {
                    let mut up = y.clone();
                    up[vi] += h;
                    let mut dn = y.clone();
                    dn[vi] -= h;
                    let fd = (eval_node(&a, ExprId(id), &up) - eval_node(&a, ExprId(id), &dn)) / (2.0 * h);
                    assert!((fd - e.grad[pi]).abs() < 1e-6 * (1.0 + fd.abs()), "grad node {id}");
                    let mut gu = Vec::new();
                    a.eval_full(&up, &mut gu);
                    let mut gd = Vec::new();
                    a.eval_full(&dn, &mut gd);
                    for pj in 0..sup.len() {
                        let fdh = (gu[id].grad[pj] - gd[id].grad[pj]) / (2.0 * h);
                        let hv = e.hess[pi * sup.len() + pj];
                        assert!((fdh - hv).abs() < 1e-5 * (1.0 + fdh.abs()), "hess node {id}");
                    }
                }
            }
            let _ = top;
        }
    }

    #[test]
    fn log_values_are_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (a, top) = random_dag(&mut rng, 3);
            let y1: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y2: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mid: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| 0.5 * (a + b)).collect();
            let f = |y: &[f64]| eval_node(&a, top, y);
            assert!(f(&mid) <= 0.5 * (f(&y1) + f(&y2)) + 1e-12);
        }
    }
}
