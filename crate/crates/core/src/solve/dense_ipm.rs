use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::ipm::cones::{ConeSlice, Kind};
use super::ipm::{self, ConicData, IpmSettings, IpmStatus};
use super::{finish, SolverAdapter, StandardForm};
use crate::conic_ir::{Cone, ConeProgram, Solution, SolveStatus};

/// Dense interior-point solver supporting every cone of the IR, PSD included.
/// Intended for programs with up to a few thousand rows.
#[derive(Clone, Debug, Default)]
pub struct DenseIpmAdapter {
    pub settings: IpmSettings,
}

impl SolverAdapter for DenseIpmAdapter {
    fn name(&self) -> &'static str {
        "dense-ipm"
    }

    fn capabilities(&self) -> BTreeSet<Cone> {
        [Cone::Zero, Cone::Nonnegative, Cone::SecondOrder, Cone::Psd].into_iter().collect()
    }

    fn solve(&self, prog: &ConeProgram<f64>) -> Solution<f64> {
        let form = StandardForm::new(prog);
        if form.m == 0 {
            let bounded = form.c.iter().all(|&v| v == 0.0);
            let status = if bounded { SolveStatus::Optimal } else { SolveStatus::Unbounded };
            return finish(prog, status, vec![0.0; form.n], None, &form, 0);
        }
        let mut a = DMatrix::zeros(form.m, form.n);
        for &(r, c, v) in &form.triplets {
            a[(r, c)] += v;
        }
        let cones = form
            .cones
            .iter()
            .map(|&(cone, start, d)| {
                let kind = match cone {
                    Cone::Zero => Kind::Zero,
                    Cone::Nonnegative => Kind::Nonneg,
                    Cone::SecondOrder if d == 1 => Kind::Nonneg,
                    Cone::SecondOrder => Kind::Soc,
                    Cone::Psd => Kind::Psd(0),
                };
                ConeSlice::new(kind, start, d)
            })
            .collect();
        let data = ConicData {
            a,
            b: DVector::from_column_slice(&form.b),
            c: DVector::from_column_slice(&form.c),
            cones,
        };
        let res = ipm::solve(&data, &self.settings);
        let status = match res.status {
            IpmStatus::Optimal => SolveStatus::Optimal,
            IpmStatus::PrimalInfeasible => SolveStatus::Infeasible,
            IpmStatus::DualInfeasible => SolveStatus::Unbounded,
            IpmStatus::Failed => SolveStatus::NumericalFailure,
        };
        let x = if status == SolveStatus::Optimal { res.x.as_slice().to_vec() } else { vec![f64::NAN; form.n] };
        finish(prog, status, x, Some(res.z.as_slice().to_vec()), &form, res.iterations)
    }
}
