use serde::Serialize;

use crate::conic_ir::{ConeProgram, LinExpr};
use crate::model::{ConstraintFunction, Domain, DrccpProblem, SupportSet};
use crate::scalar::Scalar;

use super::{add_decision, add_dual_norm_bound, compute_alpha_bound, ensure_valid, ReformError};

/// Values of the auxiliary variables of the binary CVaR program.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct BinaryCvarCertificate<T> {
    pub lambda: T,
    pub s: Vec<T>,
    /// Zero for rows without uncertainty.
    pub alpha: Vec<T>,
    /// `y[t][r]` stands for `α_t x_r`; empty for rows without uncertainty.
    pub y: Vec<Vec<T>>,
    pub big_m: Vec<Option<T>>,
}

#[derive(Clone, Debug)]
pub struct BinaryCvarLayout<T> {
    pub x: Vec<usize>,
    pub lambda: usize,
    pub s: Vec<usize>,
    pub alpha: Vec<Option<usize>>,
    pub y: Vec<Vec<usize>>,
    pub big_m: Vec<Option<T>>,
}

impl<T: Scalar> BinaryCvarLayout<T> {
    pub fn decision(&self, primal: &[T]) -> Vec<T> {
        self.x.iter().map(|&v| primal[v]).collect()
    }

    pub fn certificate(&self, primal: &[T]) -> BinaryCvarCertificate<T> {
        BinaryCvarCertificate {
            lambda: primal[self.lambda],
            s: self.s.iter().map(|&v| primal[v]).collect(),
            alpha: self.alpha.iter().map(|a| a.map_or(T::zero(), |v| primal[v])).collect(),
            y: self.y.iter().map(|ys| ys.iter().map(|&v| primal[v]).collect()).collect(),
            big_m: self.big_m.clone(),
        }
    }
}

/// Mixed-integer second-order cone program for binary decisions, full-space support
/// and affine rows, with the products `α_t x` linearized by McCormick boxes.
pub fn build_binary_cvar_mip<T: Scalar>(
    problem: &DrccpProblem<T>,
) -> Result<(ConeProgram<T>, BinaryCvarLayout<T>), ReformError> {
    ensure_valid(problem)?;
    if !matches!(problem.domain, Domain::Binary) {
        return Err(ReformError::Precondition("the binary model needs a binary domain".into()));
    }
    if !matches!(problem.support, SupportSet::FullSpace { .. }) {
        return Err(ReformError::Unsupported(format!(
            "the binary model needs a full-space support, found {}",
            problem.support.kind()
        )));
    }
    let big_m = compute_alpha_bound(problem)?;
    let n = problem.n_vars();
    let n_s = problem.n_samples();
    let delta = problem.ball.radius;
    let inv_n = T::one() / T::of(n_s as f64);

    let mut prog = ConeProgram::new();
    let x = add_decision(&mut prog, problem)?;
    let lambda = prog.add_var("lambda");
    prog.add_nonneg(LinExpr::var(lambda))?;
    let s = prog.add_vars("s", n_s);
    for &v in &s {
        prog.add_nonneg(LinExpr::var(v))?;
    }
    // λδ + (1/N)Σs ≤ ε
    let mut budget = LinExpr::from_terms(vec![(lambda, -delta)], problem.risk);
    for &v in &s {
        budget.add_term(v, -inv_n);
    }
    prog.add_nonneg(budget)?;

    let mut alpha = Vec::with_capacity(big_m.len());
    let mut y = Vec::with_capacity(big_m.len());
    for (t, f) in problem.constraints.iter().enumerate() {
        let ConstraintFunction::AffineBoth { xi_coupling, xi_offset, x_coeffs, constant } = f else {
            return Err(ReformError::Unsupported(format!("the binary model needs affine rows, row {t} is {}", f.family())));
        };
        let Some(mt) = big_m[t] else {
            // no uncertainty: the row must hold outright
            prog.add_nonneg(LinExpr::from_terms(x.iter().copied().zip(x_coeffs.iter().copied()).collect(), *constant))?;
            alpha.push(None);
            y.push(Vec::new());
            continue;
        };
        let a = prog.add_var(format!("alpha[{t}]"));
        let yt = prog.add_vars(&format!("y[{t}]"), n);
        prog.add_nonneg(LinExpr::var(a))?;
        prog.add_nonneg(LinExpr::from_terms(vec![(a, -T::one())], mt))?;
        for r in 0..n {
            let (yv, xv) = (yt[r], x[r]);
            prog.add_nonneg(LinExpr::var(yv))?;
            prog.add_nonneg(LinExpr::from_terms(vec![(xv, mt), (yv, -T::one())], T::zero()))?;
            prog.add_nonneg(LinExpr::from_terms(vec![(yv, T::one()), (a, -T::one()), (xv, -mt)], mt))?;
            prog.add_nonneg(LinExpr::from_terms(vec![(a, T::one()), (yv, -T::one())], T::zero()))?;
        }
        // gradient of the scaled row: M y + o α
        let grad: Vec<LinExpr<T>> = (0..xi_offset.len())
            .map(|r| {
                let mut e = LinExpr::term(a, xi_offset[r]);
                if xi_coupling.nrows() > 0 {
                    for (j, &yv) in yt.iter().enumerate() {
                        e.add_term(yv, xi_coupling.get(r, j));
                    }
                }
                e
            })
            .collect();
        let mut free = LinExpr::term(a, *constant);
        for (j, &yv) in yt.iter().enumerate() {
            free.add_term(yv, x_coeffs[j]);
        }
        for (i, &si) in s.iter().enumerate() {
            // s_i ≥ 1 − f̂(ζ^i)
            let mut row = free.clone() + LinExpr::term(si, T::one()) - LinExpr::constant(T::one());
            for (g, &z) in grad.iter().zip(problem.samples().get(i)) {
                row = row + g.scaled(z);
            }
            prog.add_nonneg(row)?;
        }
        add_dual_norm_bound(&mut prog, problem.ball.norm, &grad, LinExpr::var(lambda), &format!("w[{t}]"))?;
        alpha.push(Some(a));
        y.push(yt);
    }
    let layout = BinaryCvarLayout { x, lambda, s, alpha, y, big_m };
    Ok((prog, layout))
}
