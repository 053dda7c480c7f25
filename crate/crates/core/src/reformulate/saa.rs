use crate::conic_ir::{ConeProgram, LinExpr};
use crate::model::{ConstraintFunction, Domain, DrccpProblem};
use crate::scalar::Scalar;

use super::{add_decision, ensure_valid, ReformError};

#[derive(Clone, Debug)]
pub struct SaaLayout {
    pub x: Vec<usize>,
    /// `s_i = 1` forces every row to hold at sample `i`.
    pub s: Vec<usize>,
}

impl SaaLayout {
    pub fn decision<T: Scalar>(&self, primal: &[T]) -> Vec<T> {
        self.x.iter().map(|&v| primal[v]).collect()
    }
}

/// Smallest value of `cᵀx + k` over a bounded box or binary domain.
fn domain_minimum<T: Scalar>(domain: &Domain<T>, coefs: &[T], constant: T) -> Option<T> {
    let mut total = constant;
    for (j, &c) in coefs.iter().enumerate() {
        let (lo, hi) = match domain {
            Domain::Binary => (T::zero(), T::one()),
            Domain::Box { lower, upper } => {
                if c.is_zero() {
                    continue;
                }
                (lower[j]?, upper[j]?)
            }
            Domain::Linear { .. } => return None,
        };
        total += (c * lo).min(c * hi);
    }
    Some(total)
}

/// Sample-average chance constraint with big-M indicators. The radius is ignored:
/// this is the empirical model.
pub fn build_saa_milp<T: Scalar>(problem: &DrccpProblem<T>) -> Result<(ConeProgram<T>, SaaLayout), ReformError> {
    ensure_valid(problem)?;
    let mut prog = ConeProgram::new();
    let x = add_decision(&mut prog, problem)?;
    let n_s = problem.n_samples();
    let s = prog.add_vars("s", n_s);
    for &v in &s {
        prog.mark_binary(v)?;
    }
    for (i, &si) in s.iter().enumerate() {
        let zeta = problem.samples().get(i);
        for (t, f) in problem.constraints.iter().enumerate() {
            let ConstraintFunction::AffineBoth { xi_coupling, xi_offset, x_coeffs, constant } = f else {
                return Err(ReformError::Unsupported(format!(
                    "the sample-average model needs affine rows, row {t} is {}",
                    f.family()
                )));
            };
            // f_t(x, ζ) = (Mᵀζ + c)ᵀx + oᵀζ + k
            let mut coefs = x_coeffs.clone();
            if xi_coupling.nrows() > 0 {
                for (cj, tj) in coefs.iter_mut().zip(xi_coupling.transpose_mul_vec(zeta)) {
                    *cj += tj;
                }
            }
            let k = crate::linalg::dot(xi_offset, zeta) + *constant;
            let lowest = domain_minimum(&problem.domain, &coefs, k).ok_or_else(|| {
                ReformError::Precondition("the sample-average big-M needs a binary or finite box domain".into())
            })?;
            let big_m = (-lowest).max(T::zero());
            // f_t(x, ζ^i) + M(1 − s_i) ≥ 0
            let mut row = LinExpr::from_terms(x.iter().copied().zip(coefs).collect(), k + big_m);
            row.add_term(si, -big_m);
            prog.add_nonneg(row)?;
        }
    }
    // Σs ≥ (1 − ε)N
    let n = T::of(n_s as f64);
    prog.add_nonneg(LinExpr::sum(&s) - LinExpr::constant((T::one() - problem.risk) * n))?;
    Ok((prog, SaaLayout { x, s }))
}
