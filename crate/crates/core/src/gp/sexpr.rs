//! Plain-text dump of a GP.
//!
//! ```text
//! (gp
//!   (vars x0 x1)
//!   (maximize <expr>)            ; or (minimize <expr>)
//!   (constraint <name> <lhs> <rhs>))
//! <expr> := (mono <coef> (<var> <exp>)*) | (sum <expr>+) | (prod <expr>+) | (pow <expr> <a>)
//! ```
//!
//! Shared sub-expressions are printed inline at every use.

use std::fmt::Write;

use super::expr::{ExprId, Node};
use super::problem::{GpProblem, Sense};

fn expr(p: &GpProblem, id: ExprId, out: &mut String) {
    match p.arena.node(id) {
        Node::Monomial { ln_coef, terms } => {
            write!(out, "(mono {:e}", ln_coef.exp()).unwrap();
            for (v, a) in terms {
                write!(out, " ({} {})", p.var_names()[*v], a).unwrap();
            }
            out.push(')');
        }
        Node::Sum(ch) | Node::Product(ch) => {
            out.push_str(if matches!(p.arena.node(id), Node::Sum(_)) { "(sum" } else { "(prod" });
            for c in ch {
                out.push(' ');
                expr(p, *c, out);
            }
            out.push(')');
        }
        Node::Power(c, a) => {
            out.push_str("(pow ");
            expr(p, *c, out);
            write!(out, " {a})").unwrap();
        }
    }
}

pub fn to_sexpr(p: &GpProblem) -> String {
    let mut out = String::from("(gp\n  (vars");
    for n in p.var_names() {
        write!(out, " {n}").unwrap();
    }
    out.push_str(")\n");
    if let Some((sense, id)) = p.objective() {
        out.push_str(match sense {
            Sense::Maximize => "  (maximize ",
            Sense::Minimize => "  (minimize ",
        });
        expr(p, id, &mut out);
        out.push_str(")\n");
    }
    for c in p.constraints() {
        write!(out, "  (constraint {} ", c.name).unwrap();
        expr(p, c.lhs, &mut out);
        out.push(' ');
        expr(p, c.rhs, &mut out);
        out.push_str(")\n");
    }
    out.push_str(")\n");
    out
}
