use std::collections::BTreeSet;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{finish, SolverAdapter, StandardForm};
use crate::conic_ir::{Cone, ConeProgram, Solution, SolveStatus};

/// Sparse interior-point solver for zero, nonnegative and second-order cones.
#[derive(Clone, Debug)]
pub struct ClarabelAdapter {
    pub tolerance: f64,
    pub max_iter: u32,
}

impl Default for ClarabelAdapter {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iter: 200 }
    }
}

impl SolverAdapter for ClarabelAdapter {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn capabilities(&self) -> BTreeSet<Cone> {
        [Cone::Zero, Cone::Nonnegative, Cone::SecondOrder].into_iter().collect()
    }

    fn solve(&self, prog: &ConeProgram<f64>) -> Solution<f64> {
        let form = StandardForm::new(prog);
        if form.m == 0 {
            let bounded = form.c.iter().all(|&v| v == 0.0);
            let status = if bounded { SolveStatus::Optimal } else { SolveStatus::Unbounded };
            return finish(prog, status, vec![0.0; form.n], None, &form, 0);
        }
        let (rows, (cols, vals)): (Vec<usize>, (Vec<usize>, Vec<f64>)) =
            form.triplets.iter().map(|&(r, c, v)| (r, (c, v))).unzip();
        let a = CscMatrix::new_from_triplets(form.m, form.n, rows, cols, vals);
        let p = CscMatrix::<f64>::zeros((form.n, form.n));
        let cones: Vec<SupportedConeT<f64>> = form
            .cones
            .iter()
            .map(|&(cone, _, d)| match cone {
                Cone::Zero => SupportedConeT::ZeroConeT(d),
                Cone::Nonnegative => SupportedConeT::NonnegativeConeT(d),
                Cone::SecondOrder if d == 1 => SupportedConeT::NonnegativeConeT(1),
                Cone::SecondOrder => SupportedConeT::SecondOrderConeT(d),
                Cone::Psd => unreachable!("capabilities exclude psd"),
            })
            .collect();
        let settings = DefaultSettings::<f64> {
            verbose: false,
            max_iter: self.max_iter,
            tol_gap_abs: self.tolerance,
            tol_gap_rel: self.tolerance,
            tol_feas: self.tolerance,
            tol_ktratio: 1e-7,
            ..DefaultSettings::default()
        };
        let Ok(mut solver) = DefaultSolver::new(&p, &form.c, &a, &form.b, &cones, settings) else {
            return finish(prog, SolveStatus::NumericalFailure, vec![f64::NAN; form.n], None, &form, 0);
        };
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            _ => SolveStatus::NumericalFailure,
        };
        let x = if status == SolveStatus::Optimal { sol.x.clone() } else { vec![f64::NAN; form.n] };
        finish(prog, status, x, Some(sol.z.clone()), &form, sol.iterations as usize)
    }
}
