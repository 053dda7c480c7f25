use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::{stream, Stream};
use super::StudyError;
use crate::linalg::Mat;
use crate::model::{
    ConstraintFunction, Domain, DrccpProblem, GroundNorm, SampleSet, Sense, SupportSet, WassersteinBall,
};
use crate::oracle::check_zd_membership;

/// Range of item values and item weights.
pub const DRAW_LOW: f64 = 1.0;
pub const DRAW_HIGH: f64 = 10.0;
/// Capacity of every knapsack.
pub const DEFAULT_CAPACITY: f64 = 50.0;
/// Largest item count accepted by [`exact_optimum`].
pub const ENUMERATION_MAX_ITEMS: usize = 20;

/// Multi-knapsack with random weights: weight of item `j` in knapsack `t` is
/// sample coordinate `t * items + j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub items: usize,
    pub knapsacks: usize,
    pub values: Vec<f64>,
    pub capacities: Vec<f64>,
    pub samples: SampleSet<f64>,
    pub seed: u64,
}

fn uniform_weights(rng: &mut impl Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(DRAW_LOW..=DRAW_HIGH)).collect()).collect()
}

pub fn generate_knapsack(seed: u64, items: usize, knapsacks: usize, n_samples: usize) -> Result<KnapsackInstance, StudyError> {
    if items == 0 || knapsacks == 0 || n_samples == 0 {
        return Err(StudyError::Config("knapsack sizes must be positive".into()));
    }
    let mut rng = stream(seed, Stream::Instance);
    let values = (0..items).map(|_| rng.random_range(DRAW_LOW..=DRAW_HIGH)).collect();
    let mut srng = stream(seed, Stream::Samples);
    let samples = SampleSet::new(uniform_weights(&mut srng, n_samples, items * knapsacks))?;
    Ok(KnapsackInstance {
        items,
        knapsacks,
        values,
        capacities: vec![DEFAULT_CAPACITY; knapsacks],
        samples,
        seed,
    })
}

impl KnapsackInstance {
    pub fn xi_dim(&self) -> usize {
        self.items * self.knapsacks
    }

    /// Row `t`: `capacity_t − Σⱼ ξ_{t·items+j} xⱼ ≥ 0`.
    pub fn constraints(&self) -> Vec<ConstraintFunction<f64>> {
        let (n, m) = (self.items, self.xi_dim());
        (0..self.knapsacks)
            .map(|t| ConstraintFunction::AffineBoth {
                xi_coupling: Mat::from_fn(m, n, |r, j| if r == t * n + j { -1.0 } else { 0.0 }),
                xi_offset: vec![0.0; m],
                x_coeffs: vec![0.0; n],
                constant: self.capacities[t],
            })
            .collect()
    }

    pub fn to_problem(&self, risk: f64, radius: f64) -> DrccpProblem<f64> {
        DrccpProblem {
            objective: self.values.clone(),
            domain: Domain::Binary,
            constraints: self.constraints(),
            risk,
            ball: WassersteinBall { radius, norm: GroundNorm::L2, center: self.samples.clone() },
            support: SupportSet::FullSpace { dim: self.xi_dim() },
            sense: Sense::Maximize,
        }
    }

    /// Fresh weights from the test stream.
    pub fn test_samples(&self, count: usize) -> Vec<Vec<f64>> {
        let mut rng = stream(self.seed, Stream::Test);
        uniform_weights(&mut rng, count, self.xi_dim())
    }

    /// Whether every knapsack holds under the weights `xi`.
    pub fn fits(&self, x: &[f64], xi: &[f64]) -> bool {
        (0..self.knapsacks).all(|t| {
            let load: f64 = (0..self.items).map(|j| xi[t * self.items + j] * x[j]).sum();
            load <= self.capacities[t]
        })
    }

    /// Fraction of `test` for which every knapsack holds.
    pub fn reliability(&self, x: &[f64], test: &[Vec<f64>]) -> f64 {
        if test.is_empty() {
            return 1.0;
        }
        test.iter().filter(|xi| self.fits(x, xi)).count() as f64 / test.len() as f64
    }
}

/// Best binary `x` whose worst-case violation probability is at most the risk level.
/// Candidates are visited in decreasing value, so the first member found is optimal.
pub fn exact_optimum(problem: &DrccpProblem<f64>) -> Result<(Vec<f64>, f64), StudyError> {
    let n = problem.n_vars();
    if n > ENUMERATION_MAX_ITEMS {
        return Err(StudyError::Config(format!(
            "exact enumeration handles at most {ENUMERATION_MAX_ITEMS} items, got {n}"
        )));
    }
    if !matches!(problem.domain, Domain::Binary) {
        return Err(StudyError::Config("exact enumeration needs a binary domain".into()));
    }
    let sign = match problem.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let to_x = |mask: u32| -> Vec<f64> { (0..n).map(|j| f64::from((mask >> j) & 1)).collect() };
    let mut order: Vec<(f64, u32)> =
        (0..(1u32 << n)).map(|mask| (sign * problem.objective_value(&to_x(mask)), mask)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, mask) in order {
        let x = to_x(mask);
        let (member, _) = check_zd_membership(&x, problem)?;
        if member {
            let value = problem.objective_value(&x);
            return Ok((x, value));
        }
    }
    Err(StudyError::Config("no binary point satisfies the chance constraint".into()))
}
