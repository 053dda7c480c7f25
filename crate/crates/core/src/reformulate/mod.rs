//! Builders compiling a [`DrccpProblem`] into cone programs.

mod alpha;
mod binary;
mod cvar;
mod lmi;
mod robust;
mod saa;
pub mod transport;

use thiserror::Error;

use crate::conic_ir::{ConeProgram, IrError, LinExpr};
use crate::model::{validate_problem, Diagnostic, Domain, DrccpProblem, GroundNorm, ModelError, Relation};
use crate::scalar::Scalar;

pub use alpha::compute_alpha_bound;
pub use binary::{build_binary_cvar_mip, BinaryCvarCertificate, BinaryCvarLayout};
pub use cvar::{build_cvar_relaxation, CvarCertificate, CvarLayout};
pub use lmi::{lmi_epigraph_bilinear, lmi_epigraph_ellipsoidal, lmi_epigraph_polyhedral, EpigraphInputs, LmiHandles};
pub use robust::build_robust_membership;
pub use saa::{build_saa_milp, SaaLayout};
pub use transport::{build_transport_cvar_lp, build_transport_saa_milp, BudgetRows, transport_big_m, TransportLayout, TransportNetwork};

/// Lower bound replacing the strict `α > 0`.
pub const ALPHA_MIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReformError {
    #[error("invalid problem: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Ir(#[from] IrError),
}

pub(crate) fn ensure_valid<T: Scalar>(p: &DrccpProblem<T>) -> Result<(), ReformError> {
    let diags = validate_problem(p);
    if diags.is_empty() {
        Ok(())
    } else {
        Err(ReformError::Invalid(diags))
    }
}

/// A program together with the variable indices of the decision vector.
#[derive(Clone, Debug)]
pub struct Reformulation<T> {
    pub program: ConeProgram<T>,
    pub x: Vec<usize>,
}

impl<T: Scalar> Reformulation<T> {
    pub fn decision(&self, primal: &[T]) -> Vec<T> {
        self.x.iter().map(|&v| primal[v]).collect()
    }
}

/// Adds the decision variables, the objective and the deterministic domain rows.
pub(crate) fn add_decision<T: Scalar>(prog: &mut ConeProgram<T>, p: &DrccpProblem<T>) -> Result<Vec<usize>, ReformError> {
    let x = prog.add_vars("x", p.n_vars());
    prog.set_objective(LinExpr::dot(&x, &p.objective), p.sense);
    match &p.domain {
        Domain::Binary => {
            for &v in &x {
                prog.mark_binary(v)?;
            }
        }
        Domain::Box { lower, upper } => {
            for (j, &v) in x.iter().enumerate() {
                if let Some(l) = lower[j] {
                    prog.add_nonneg(LinExpr::from_terms(vec![(v, T::one())], -l))?;
                }
                if let Some(u) = upper[j] {
                    prog.add_nonneg(LinExpr::from_terms(vec![(v, -T::one())], u))?;
                }
            }
        }
        Domain::Linear { rows } => {
            for r in rows {
                let lhs = LinExpr::dot(&x, &r.coeffs) - LinExpr::constant(r.rhs);
                match r.relation {
                    Relation::Le => prog.add_nonneg(-lhs)?,
                    Relation::Ge => prog.add_nonneg(lhs)?,
                    Relation::Eq => prog.add_eq(lhs)?,
                };
            }
        }
    }
    Ok(x)
}

/// Emits `‖v‖_* ≤ bound` for the dual of `norm`; `v` rows that are identically zero are skipped.
pub(crate) fn add_dual_norm_bound<T: Scalar>(
    prog: &mut ConeProgram<T>,
    norm: GroundNorm,
    v: &[LinExpr<T>],
    bound: LinExpr<T>,
    aux_prefix: &str,
) -> Result<(), ReformError> {
    let v: Vec<LinExpr<T>> = v.iter().filter(|e| !(e.is_constant() && e.constant.is_zero())).cloned().collect();
    match norm.dual() {
        GroundNorm::L2 => {
            if v.is_empty() {
                prog.add_nonneg(bound)?;
            } else {
                prog.add_soc(bound, v)?;
            }
        }
        GroundNorm::Linf => {
            if v.is_empty() {
                prog.add_nonneg(bound)?;
            } else {
                let mut rows = Vec::with_capacity(2 * v.len());
                for e in v {
                    rows.push(bound.clone() - e.clone());
                    rows.push(bound.clone() + e);
                }
                prog.add_block(rows, crate::conic_ir::Cone::Nonnegative)?;
            }
        }
        GroundNorm::L1 => {
            let w = prog.add_vars(aux_prefix, v.len());
            let mut rows = Vec::with_capacity(2 * v.len() + 1);
            for (e, &wv) in v.into_iter().zip(&w) {
                rows.push(LinExpr::var(wv) - e.clone());
                rows.push(LinExpr::var(wv) + e);
            }
            rows.push(bound - LinExpr::sum(&w));
            prog.add_block(rows, crate::conic_ir::Cone::Nonnegative)?;
        }
    }
    Ok(())
}

/// Affine parts of an affine row as expressions in `x`: the ξ-gradient rows and the ξ-free part.
pub(crate) fn affine_exprs<T: Scalar>(
    f: &crate::model::ConstraintFunction<T>,
    x: &[usize],
) -> Option<(Vec<LinExpr<T>>, LinExpr<T>)> {
    match f {
        crate::model::ConstraintFunction::AffineBoth { xi_coupling, xi_offset, x_coeffs, constant } => {
            let grad = (0..xi_offset.len())
                .map(|r| {
                    let coefs: Vec<T> = if xi_coupling.nrows() == 0 { vec![T::zero(); x.len()] } else { xi_coupling.row(r).to_vec() };
                    LinExpr::from_terms(x.iter().copied().zip(coefs).collect(), xi_offset[r])
                })
                .collect();
            let free = LinExpr::from_terms(x.iter().copied().zip(x_coeffs.iter().copied()).collect(), *constant);
            Some((grad, free))
        }
        _ => None,
    }
}
