use serde::Serialize;

use crate::conic_ir::{BlockId, ConeProgram, LinExpr};
use crate::linalg::Mat;
use crate::model::{ConstraintFunction, DrccpProblem, SupportSet};
use crate::scalar::Scalar;

use super::lmi::{lmi_epigraph_bilinear, lmi_epigraph_ellipsoidal, lmi_epigraph_polyhedral, EpigraphInputs};
use super::{add_decision, add_dual_norm_bound, affine_exprs, ensure_valid, ReformError, ALPHA_MIN};

/// Values of the auxiliary variables of the worst-case CVaR program.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct CvarCertificate<T> {
    pub alpha: Vec<T>,
    /// `v[i][t]` has length `m`.
    pub v: Vec<Vec<Vec<T>>>,
    pub q: Vec<Vec<T>>,
    pub u: Vec<Vec<T>>,
    /// Dual multipliers of the inner supremum, empty when it was eliminated.
    pub nu: Vec<Vec<Vec<T>>>,
}

/// Where each certificate component lives in the program.
#[derive(Clone, Debug)]
pub struct CvarLayout<T> {
    pub x: Vec<usize>,
    pub alpha: Vec<usize>,
    pub q: Vec<Vec<usize>>,
    pub v: Vec<Vec<Vec<LinExpr<T>>>>,
    pub u: Vec<Vec<LinExpr<T>>>,
    pub nu: Vec<Vec<Vec<usize>>>,
    /// Blocks bounding the dual norm of `v` (one per `(i, t)` unless shared).
    pub norm_blocks: Vec<BlockId>,
    /// Per-sample epigraph rows, indexed `[i][t]`.
    pub epigraph_blocks: Vec<Vec<BlockId>>,
    /// PSD blocks, indexed `[i][t]`, empty when none were emitted.
    pub lmi_blocks: Vec<Vec<BlockId>>,
}

impl<T: Scalar> CvarLayout<T> {
    pub fn decision(&self, primal: &[T]) -> Vec<T> {
        self.x.iter().map(|&v| primal[v]).collect()
    }

    pub fn certificate(&self, primal: &[T]) -> CvarCertificate<T> {
        let pick = |ids: &[usize]| ids.iter().map(|&v| primal[v]).collect::<Vec<_>>();
        CvarCertificate {
            alpha: pick(&self.alpha),
            v: self.v.iter().map(|row| row.iter().map(|e| e.iter().map(|x| x.eval(primal)).collect()).collect()).collect(),
            q: self.q.iter().map(|r| pick(r)).collect(),
            u: self.u.iter().map(|row| row.iter().map(|e| e.eval(primal)).collect()).collect(),
            nu: self.nu.iter().map(|row| row.iter().map(|ids| pick(ids)).collect()).collect(),
        }
    }
}

enum Inner<T> {
    /// `v = ∇_ξ f`, no supremum left.
    Eliminated,
    Polyhedral(Vec<Vec<T>>, Vec<T>),
    Ellipsoidal(Mat<T>, Vec<T>),
}

fn unsupported<T: Scalar>(f: &ConstraintFunction<T>, s: &SupportSet<T>, needs: &str) -> ReformError {
    ReformError::Unsupported(format!("{} rows on {} support: {needs}", f.family(), s.kind()))
}

fn positive_offsets<T: Scalar>(facets: (Vec<Vec<T>>, Vec<T>)) -> Result<Inner<T>, ReformError> {
    if facets.1.iter().any(|&d| d <= T::zero()) {
        return Err(ReformError::Precondition(
            "quadratic rows need every support offset strictly positive (origin in the interior)".into(),
        ));
    }
    Ok(Inner::Polyhedral(facets.0, facets.1))
}

fn classify<T: Scalar>(f: &ConstraintFunction<T>, s: &SupportSet<T>) -> Result<Inner<T>, ReformError> {
    match (f, s) {
        (ConstraintFunction::AffineBoth { .. }, SupportSet::FullSpace { .. }) => Ok(Inner::Eliminated),
        (ConstraintFunction::AffineBoth { .. }, SupportSet::Box { .. } | SupportSet::Polyhedron { .. }) => {
            Ok(Inner::Polyhedral(s.as_polyhedron().unwrap().0, s.as_polyhedron().unwrap().1))
        }
        (ConstraintFunction::AffineBoth { .. }, SupportSet::Ellipsoid { .. }) => Err(unsupported(
            f,
            s,
            "affine rows are reformulated on full-space, box or polyhedral supports only",
        )),
        (ConstraintFunction::QuadraticXi { .. }, SupportSet::Box { .. } | SupportSet::Polyhedron { .. }) => {
            positive_offsets(s.as_polyhedron().unwrap())
        }
        (ConstraintFunction::QuadraticXi { .. }, SupportSet::Ellipsoid { shape, center }) => {
            Ok(Inner::Ellipsoidal(shape.clone(), center.clone()))
        }
        (ConstraintFunction::QuadraticXi { .. }, _) => Err(unsupported(
            f,
            s,
            "the semidefinite reformulation needs a polyhedral, box or ellipsoidal support",
        )),
        (ConstraintFunction::BilinearQuadratic { .. }, SupportSet::Ellipsoid { shape, center }) => {
            Ok(Inner::Ellipsoidal(shape.clone(), center.clone()))
        }
        (ConstraintFunction::BilinearQuadratic { .. }, _) => Err(unsupported(
            f,
            s,
            "the semidefinite reformulation of bilinear rows needs an ellipsoidal support",
        )),
    }
}

/// The ξ-free part of `f_t` as an expression in `x`.
fn free_part<T: Scalar>(f: &ConstraintFunction<T>, x: &[usize]) -> LinExpr<T> {
    match f {
        ConstraintFunction::AffineBoth { .. } => affine_exprs(f, x).unwrap().1,
        ConstraintFunction::QuadraticXi { x_coeffs, constant, .. } => {
            LinExpr::from_terms(x.iter().copied().zip(x_coeffs.iter().copied()).collect(), *constant)
        }
        ConstraintFunction::BilinearQuadratic { constants, .. } => LinExpr::dot(x, constants),
    }
}

/// Worst-case CVaR inner approximation of the joint chance constraint.
pub fn build_cvar_relaxation<T: Scalar>(problem: &DrccpProblem<T>) -> Result<(ConeProgram<T>, CvarLayout<T>), ReformError> {
    ensure_valid(problem)?;
    let inners = problem
        .constraints
        .iter()
        .map(|f| classify(f, &problem.support))
        .collect::<Result<Vec<_>, _>>()?;

    let mut prog = ConeProgram::new();
    let x = add_decision(&mut prog, problem)?;
    let n_t = problem.constraints.len();
    let n_s = problem.n_samples();
    let m = problem.xi_dim();
    let eps = problem.risk;
    let delta = problem.ball.radius;
    let inv_n = T::one() / T::of(n_s as f64);

    let bilinear = problem.constraints.iter().any(|f| matches!(f, ConstraintFunction::BilinearQuadratic { .. }));
    if bilinear && !problem.domain.implies_nonnegative(x.len()) {
        for &v in &x {
            prog.add_nonneg(LinExpr::var(v))?;
        }
    }

    let alpha = prog.add_vars("alpha", n_t);
    for &a in &alpha {
        prog.add_nonneg(LinExpr::from_terms(vec![(a, T::one())], -T::of(ALPHA_MIN)))?;
    }
    let mut q = vec![Vec::with_capacity(n_t); n_s];
    for (i, qi) in q.iter_mut().enumerate() {
        for t in 0..n_t {
            let v = prog.add_var(format!("q[{i}][{t}]"));
            prog.add_nonneg(LinExpr::var(v))?;
            qi.push(v);
        }
    }

    let x_exprs: Vec<LinExpr<T>> = x.iter().map(|&v| LinExpr::var(v)).collect();
    let mut v_exprs = vec![Vec::with_capacity(n_t); n_s];
    let mut u_exprs = vec![Vec::with_capacity(n_t); n_s];
    let mut nu = vec![Vec::with_capacity(n_t); n_s];
    let mut epigraph_blocks = vec![Vec::with_capacity(n_t); n_s];
    let mut lmi_blocks = vec![Vec::new(); n_s];

    for i in 0..n_s {
        let zeta = problem.samples().get(i);
        for (t, f) in problem.constraints.iter().enumerate() {
            let free = free_part(f, &x);
            let (v, u, multipliers) = match (&inners[t], f) {
                (Inner::Eliminated, _) => {
                    let grad = affine_exprs(f, &x).unwrap().0;
                    (grad, -free.clone(), Vec::new())
                }
                (Inner::Polyhedral(rows, offsets), ConstraintFunction::AffineBoth { .. }) => {
                    // sup_{Pξ≤d} (v − g)ᵀξ = min {dᵀπ : π ≥ 0, Pᵀπ = v − g}
                    let grad = affine_exprs(f, &x).unwrap().0;
                    let v = prog.add_vars(&format!("v[{i}][{t}]"), m);
                    let pi = prog.add_vars(&format!("pi[{i}][{t}]"), rows.len());
                    for &p in &pi {
                        prog.add_nonneg(LinExpr::var(p))?;
                    }
                    for r in 0..m {
                        let mut e = grad[r].clone() - LinExpr::var(v[r]);
                        for (k, row) in rows.iter().enumerate() {
                            e.add_term(pi[k], row[r]);
                        }
                        prog.add_eq(e)?;
                    }
                    let u = LinExpr::dot(&pi, offsets) - free.clone();
                    (v.iter().map(|&k| LinExpr::var(k)).collect(), u, pi)
                }
                (inner, f) => {
                    let v = prog.add_vars(&format!("v[{i}][{t}]"), m);
                    let u = prog.add_var(format!("u[{i}][{t}]"));
                    let inputs = EpigraphInputs {
                        u: LinExpr::var(u),
                        v: v.iter().map(|&k| LinExpr::var(k)).collect(),
                        x: x_exprs.clone(),
                    };
                    let handles = match (inner, f) {
                        (Inner::Polyhedral(rows, offsets), ConstraintFunction::QuadraticXi { curvature, .. }) => {
                            lmi_epigraph_polyhedral(&mut prog, curvature, rows, offsets, &inputs)?
                        }
                        (Inner::Ellipsoidal(shape, center), ConstraintFunction::QuadraticXi { curvature, .. }) => {
                            lmi_epigraph_ellipsoidal(&mut prog, curvature, shape, center, &inputs)?
                        }
                        (
                            Inner::Ellipsoidal(shape, center),
                            ConstraintFunction::BilinearQuadratic { curvatures, xi_coeffs, .. },
                        ) => lmi_epigraph_bilinear(&mut prog, curvatures, xi_coeffs, shape, center, &inputs)?,
                        _ => unreachable!("classified above"),
                    };
                    lmi_blocks[i].push(handles.block);
                    (inputs.v, LinExpr::var(u) - free.clone(), handles.multipliers)
                }
            };
            // u − free + α − vᵀζ − q ≤ 0
            let mut row = LinExpr::var(alpha[t]) + u.clone() - LinExpr::var(q[i][t]);
            for (e, &z) in v.iter().zip(zeta) {
                row = row - e.scaled(z);
            }
            epigraph_blocks[i].push(prog.add_nonneg(-row)?);
            v_exprs[i].push(v);
            u_exprs[i].push(u);
            nu[i].push(multipliers);
        }
    }

    let mut norm_blocks = Vec::new();
    for t in 0..n_t {
        let mut head = LinExpr::term(alpha[t], eps);
        for qi in &q {
            head.add_term(qi[t], -inv_n);
        }
        let shared = delta.is_zero() || matches!(inners[t], Inner::Eliminated);
        let owners = if shared { 1 } else { n_s };
        for i in 0..owners {
            let tail: Vec<LinExpr<T>> = if delta.is_zero() {
                Vec::new()
            } else {
                v_exprs[i][t].iter().map(|e| e.scaled(delta)).collect()
            };
            add_dual_norm_bound(&mut prog, problem.ball.norm, &tail, head.clone(), &format!("w[{i}][{t}]"))?;
            norm_blocks.push(prog.blocks.len() - 1);
        }
    }

    let layout = CvarLayout {
        x,
        alpha,
        q,
        v: v_exprs,
        u: u_exprs,
        nu,
        norm_blocks,
        epigraph_blocks,
        lmi_blocks,
    };
    Ok((prog, layout))
}
