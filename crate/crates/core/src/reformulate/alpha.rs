use crate::model::{dual_norm, ConstraintFunction, Domain, DrccpProblem, GroundNorm};
use crate::scalar::Scalar;

use super::ReformError;

/// Largest `n` for which mixed-sign rows are enumerated over `{0,1}ⁿ`.
const ENUMERATION_LIMIT: usize = 20;

/// Upper bounds on `α_t` for binary decisions: `ε / (δ γ_t)` where `γ_t` is the
/// smallest nonzero dual norm of the ξ-gradient over binary `x`.
/// `None` marks rows whose gradient vanishes for every binary `x`.
pub fn compute_alpha_bound<T: Scalar>(problem: &DrccpProblem<T>) -> Result<Vec<Option<T>>, ReformError> {
    if !matches!(problem.domain, Domain::Binary) {
        return Err(ReformError::Precondition("alpha bounds need a binary domain".into()));
    }
    let delta = problem.ball.radius;
    if delta <= T::zero() {
        return Err(ReformError::Precondition(
            "alpha bounds need a positive radius; use the sample-average model when the radius is zero".into(),
        ));
    }
    let eps = problem.risk;
    problem
        .constraints
        .iter()
        .enumerate()
        .map(|(t, f)| {
            let ConstraintFunction::AffineBoth { xi_coupling, xi_offset, .. } = f else {
                return Err(ReformError::Unsupported(format!("alpha bounds need affine rows, row {t} is {}", f.family())));
            };
            let n = problem.n_vars();
            let cols: Vec<Vec<f64>> = (0..n)
                .map(|j| (0..xi_offset.len()).map(|r| if xi_coupling.nrows() == 0 { 0.0 } else { xi_coupling.get(r, j).as_f64() }).collect())
                .collect();
            let offset: Vec<f64> = xi_offset.iter().map(|v| v.as_f64()).collect();
            let gamma = smallest_nonzero_norm(&cols, &offset, problem.ball.norm).map_err(|msg| {
                ReformError::Precondition(format!("row {t}: {msg}"))
            })?;
            Ok(gamma.map(|g| eps / (delta * T::of(g))))
        })
        .collect()
}

/// `min { ‖Σ_{j∈S} colⱼ + offset‖_* : S ⊆ [n], value ≠ 0 }`, `None` if every value is zero.
fn smallest_nonzero_norm(cols: &[Vec<f64>], offset: &[f64], norm: GroundNorm) -> Result<Option<f64>, String> {
    // rows that vanish identically do not affect the norm
    let keep: Vec<usize> = (0..offset.len())
        .filter(|&r| offset[r] != 0.0 || cols.iter().any(|c| c[r] != 0.0))
        .collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let cols: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| keep.iter().map(|&r| c[r]).collect::<Vec<f64>>())
        .filter(|c| c.iter().any(|&v| v != 0.0))
        .collect();
    let offset: Vec<f64> = keep.iter().map(|&r| offset[r]).collect();
    let entries = || cols.iter().flatten().chain(offset.iter()).copied();
    let nonneg = entries().all(|v| v >= 0.0);
    let nonpos = entries().all(|v| v <= 0.0);
    if nonneg || nonpos {
        // every entry of the sum has one sign, so adding a column never shrinks any |component|
        let has_offset = offset.iter().any(|&v| v != 0.0);
        let g = if has_offset {
            dual_norm(&offset, norm)
        } else {
            cols.iter().map(|c| dual_norm(c, norm)).fold(f64::INFINITY, f64::min)
        };
        return Ok(Some(g));
    }
    let n = cols.len();
    if n > ENUMERATION_LIMIT {
        return Err(format!(
            "gradient entries have mixed signs and {n} active decisions exceed the enumeration limit of {ENUMERATION_LIMIT}"
        ));
    }
    let scale = 1.0 + entries().map(f64::abs).fold(0.0, f64::max) * (n as f64 + 1.0);
    let zero_tol = 1e-12 * scale;
    let mut g = offset.clone();
    let mut best = f64::INFINITY;
    let consider = |g: &[f64], best: &mut f64| {
        let v = dual_norm(g, norm);
        if v > zero_tol && v < *best {
            *best = v;
        }
    };
    consider(&g, &mut best);
    let mut in_set = vec![false; n];
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let sign = if in_set[j] { -1.0 } else { 1.0 };
        in_set[j] = !in_set[j];
        for (gi, &c) in g.iter_mut().zip(&cols[j]) {
            *gi += sign * c;
        }
        if k % 4096 == 0 {
            g = offset.clone();
            for (col, _) in cols.iter().zip(&in_set).filter(|(_, on)| **on) {
                for (gi, &c) in g.iter_mut().zip(col) {
                    *gi += c;
                }
            }
        }
        consider(&g, &mut best);
    }
    Ok(if best.is_finite() { Some(best) } else { None })
}
