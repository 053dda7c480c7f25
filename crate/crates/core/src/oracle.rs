//! Exact worst-case violation probability for affine rows on full-space support.
//!
//! For a fixed decision the worst case over the Wasserstein ball is
//! `min_{λ≥0} λδ + (1/N) Σᵢ (1 − λ dᵢ)₊`, where `dᵢ` is the ground-norm distance
//! from sample `i` to the closed unsafe set. The objective is convex and
//! piecewise linear with kinks at `λ = 1/dᵢ`, so scanning zero and the kinks is exact.

use serde::Serialize;

use crate::model::{dual_norm, ConstraintFunction, DrccpProblem, GroundNorm, ModelError, SupportSet};
use crate::scalar::Scalar;

/// Absolute slack on the probability when testing membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationEstimate<T> {
    pub probability: T,
    pub lambda_star: T,
    /// Distance from each sample to the unsafe set (`+∞` when no row can be violated).
    pub distances: Vec<T>,
    /// Per sample and row, multipliers `η ≥ 0` reproducing the optimal dual:
    /// `η = λ*/‖∇ξ f‖_*` on rows the sample satisfies, zero on rows it violates
    /// or that can never be violated.
    pub eta_certificate: Option<Vec<Vec<T>>>,
}

fn require_affine_full_space<T: Scalar>(problem: &DrccpProblem<T>) -> Result<(), ModelError> {
    if !matches!(problem.support, SupportSet::FullSpace { .. }) {
        return Err(ModelError::UnsupportedSupport(format!(
            "the closed-form oracle needs full-space support, got {}",
            problem.support.kind()
        )));
    }
    Ok(())
}

fn gradient_and_value<T: Scalar>(
    f: &ConstraintFunction<T>,
    x: &[T],
    zeta: &[T],
) -> Result<(Vec<T>, T), ModelError> {
    let Some((g, c)) = f.affine_parts(x) else {
        return Err(ModelError::UnsupportedVariant(format!(
            "the closed-form oracle needs affine rows, got {}",
            f.family()
        )));
    };
    crate::model::check_len("sample", g.len(), zeta.len())?;
    let value = crate::linalg::dot(&g, zeta) + c;
    Ok((g, value))
}

/// Ground-norm distance from `zeta` to `{ξ : some row has f_t(x, ξ) ≤ 0}`.
pub fn distance_to_unsafe<T: Scalar>(
    x: &[T],
    zeta: &[T],
    constraints: &[ConstraintFunction<T>],
    norm: GroundNorm,
) -> Result<T, ModelError> {
    let mut best = T::infinity();
    for f in constraints {
        let (n, _) = f.dims();
        crate::model::check_len("decision vector", n, x.len())?;
        let (g, value) = gradient_and_value(f, x, zeta)?;
        let gn = dual_norm(&g, norm);
        let d = if value < T::zero() {
            T::zero()
        } else if gn > T::zero() {
            value / gn
        } else {
            T::infinity()
        };
        best = best.min(d);
    }
    Ok(best)
}

/// `h(λ) = λδ + (1/N) Σᵢ (1 − λdᵢ)₊`; infinite distances contribute nothing.
pub fn dual_objective<T: Scalar>(lambda: T, distances: &[T], radius: T) -> T {
    let n = T::of(distances.len() as f64);
    let mut acc = T::zero();
    for &d in distances {
        if d.is_infinite() {
            continue;
        }
        acc += (T::one() - lambda * d).max(T::zero());
    }
    lambda * radius + acc / n
}

/// Minimizes `h` over `λ ≥ 0` by scanning `λ = 0` and every kink `1/dᵢ`.
/// Returns `(min h, argmin)` with the smallest minimizing `λ`.
pub fn minimize_dual<T: Scalar>(distances: &[T], radius: T) -> (T, T) {
    let n = T::of(distances.len() as f64);
    let zeros = distances.iter().filter(|d| d.is_zero()).count();
    let mut positive: Vec<T> = distances.iter().copied().filter(|d| *d > T::zero() && d.is_finite()).collect();
    // Kinks in increasing λ order are distances in decreasing order.
    positive.sort_by(|a, b| b.partial_cmp(a).expect("distances are not NaN"));

    let finite = zeros + positive.len();
    let mut best = T::of(finite as f64) / n;
    let mut best_lambda = T::zero();

    // Ascending distances with prefix sums give h at λ = 1/d_(k) in O(1) each.
    let ascending: Vec<T> = positive.iter().rev().copied().collect();
    let mut prefix = Vec::with_capacity(ascending.len() + 1);
    prefix.push(T::zero());
    for &d in &ascending {
        let last = *prefix.last().expect("nonempty");
        prefix.push(last + d);
    }
    for (pos, &d) in positive.iter().enumerate() {
        let k = ascending.len() - 1 - pos;
        let lambda = T::one() / d;
        let below = T::of(k as f64) - prefix[k] / d;
        let h = lambda * radius + (T::of(zeros as f64) + below.max(T::zero())) / n;
        if h < best {
            best = h;
            best_lambda = lambda;
        }
    }
    (best.min(T::one()).max(T::zero()), best_lambda)
}

/// Worst-case probability over the Wasserstein ball that some row is violated.
pub fn worst_case_violation_probability<T: Scalar>(
    x: &[T],
    problem: &DrccpProblem<T>,
) -> Result<ViolationEstimate<T>, ModelError> {
    require_affine_full_space(problem)?;
    let norm = problem.ball.norm;
    let samples = problem.samples();
    let mut distances = Vec::with_capacity(samples.n_samples());
    for zeta in samples.samples() {
        distances.push(distance_to_unsafe(x, zeta, &problem.constraints, norm)?);
    }
    let (probability, lambda_star) = minimize_dual(&distances, problem.ball.radius);

    let mut eta = Vec::with_capacity(samples.n_samples());
    for zeta in samples.samples() {
        let mut row = Vec::with_capacity(problem.constraints.len());
        for f in &problem.constraints {
            let (g, value) = gradient_and_value(f, x, zeta)?;
            let gn = dual_norm(&g, norm);
            row.push(if value < T::zero() || gn.is_zero() { T::zero() } else { lambda_star / gn });
        }
        eta.push(row);
    }
    Ok(ViolationEstimate { probability, lambda_star, distances, eta_certificate: Some(eta) })
}

/// Membership in the exact feasible set: worst-case probability `≤ ε + 1e-9`.
pub fn check_zd_membership<T: Scalar>(
    x: &[T],
    problem: &DrccpProblem<T>,
) -> Result<(bool, ViolationEstimate<T>), ModelError> {
    let est = worst_case_violation_probability(x, problem)?;
    Ok((est.probability <= problem.risk + T::of(MEMBERSHIP_TOL), est))
}
