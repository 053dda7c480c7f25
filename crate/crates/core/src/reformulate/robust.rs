use crate::conic_ir::{ConeProgram, LinExpr};
use crate::model::{DrccpProblem, SupportSet};
use crate::scalar::Scalar;

use super::{add_decision, affine_exprs, ensure_valid, ReformError, Reformulation};

/// Robust counterpart `f_t(x, ξ) ≥ 0` for every `ξ` in the support and every row.
pub fn build_robust_membership<T: Scalar>(problem: &DrccpProblem<T>) -> Result<Reformulation<T>, ReformError> {
    ensure_valid(problem)?;
    let mut prog = ConeProgram::new();
    let x = add_decision(&mut prog, problem)?;
    let facets = match &problem.support {
        SupportSet::FullSpace { .. } => None,
        s @ (SupportSet::Box { .. } | SupportSet::Polyhedron { .. }) => s.as_polyhedron(),
        s => {
            return Err(ReformError::Unsupported(format!(
                "robust counterpart is available for full-space, box and polyhedral supports, not {}",
                s.kind()
            )))
        }
    };
    for (t, f) in problem.constraints.iter().enumerate() {
        let (grad, free) = affine_exprs(f, &x).ok_or_else(|| {
            ReformError::Unsupported(format!("robust counterpart needs affine rows, row {t} is {}", f.family()))
        })?;
        match &facets {
            None => {
                for g in grad.into_iter().filter(|g| !(g.is_constant() && g.constant.is_zero())) {
                    prog.add_eq(g)?;
                }
                prog.add_nonneg(free)?;
            }
            Some((rows, offsets)) => {
                // min_{Pξ≤d} gᵀξ = −min {dᵀπ : π ≥ 0, Pᵀπ = −g}
                let pi = prog.add_vars(&format!("pi[{t}]"), rows.len());
                for &p in &pi {
                    prog.add_nonneg(LinExpr::var(p))?;
                }
                for (r, g) in grad.into_iter().enumerate() {
                    let mut e = g;
                    for (k, row) in rows.iter().enumerate() {
                        e.add_term(pi[k], row[r]);
                    }
                    prog.add_eq(e)?;
                }
                prog.add_nonneg(free - LinExpr::dot(&pi, offsets))?;
            }
        }
    }
    Ok(Reformulation { program: prog, x })
}
