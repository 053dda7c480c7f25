use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::LinExpr;
use crate::linalg::min_sym_eigenvalue;
use crate::model::Sense;
use crate::scalar::Scalar;

/// Absolute tolerance on block residuals for a point to count as feasible.
pub const FEAS_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cone {
    Zero,
    Nonnegative,
    SecondOrder,
    Psd,
}

impl Cone {
    pub fn tag(self) -> &'static str {
        match self {
            Cone::Zero => "zero",
            Cone::Nonnegative => "nonnegative",
            Cone::SecondOrder => "second_order",
            Cone::Psd => "psd",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Cone> {
        match tag {
            "zero" => Some(Cone::Zero),
            "nonnegative" => Some(Cone::Nonnegative),
            "second_order" => Some(Cone::SecondOrder),
            "psd" => Some(Cone::Psd),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrError {
    #[error("block has no rows")]
    EmptyCone,
    #[error("row references variable {var} but the program declares {n_vars}")]
    UnknownVariable { var: usize, n_vars: usize },
    #[error("psd block length {0} is not a triangular number")]
    PsdDimension(usize),
    #[error("primal vector has length {found}, expected {expected}")]
    PrimalLength { expected: usize, found: usize },
    #[error("binary index {0} out of range")]
    BinaryIndex(usize),
    #[error("unknown cone tag {0:?}")]
    UnknownCone(String),
}

pub type BlockId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Block<T> {
    pub cone: Cone,
    pub rows: Vec<LinExpr<T>>,
}

impl<T: Scalar> Block<T> {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        self.rows.iter().map(|r| r.eval(x)).collect()
    }
}

/// Order `k` of a packed PSD vector of length `k(k+1)/2`.
pub fn psd_order(len: usize) -> Option<usize> {
    let k = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    (k * (k + 1) / 2 == len).then_some(k)
}

/// Packed position of entry `(i, j)`, either triangle.
pub fn psd_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

/// Packs a symmetric matrix (lower triangle read) with `√2` off-diagonal scaling.
pub fn psd_pack(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut out = vec![0.0; k * (k + 1) / 2];
    for i in 0..k {
        for j in 0..=i {
            let v = m[(i, j)];
            out[psd_index(i, j)] = if i == j { v } else { v * std::f64::consts::SQRT_2 };
        }
    }
    out
}

pub fn psd_unpack(v: &[f64]) -> DMatrix<f64> {
    let k = psd_order(v.len()).expect("triangular length");
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let e = v[psd_index(i, j)];
            let e = if i == j { e } else { e / std::f64::consts::SQRT_2 };
            m[(i, j)] = e;
            m[(j, i)] = e;
        }
    }
    m
}

/// A linear-objective cone program, optionally with binary variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeProgram<T> {
    pub n_vars: usize,
    pub objective: LinExpr<T>,
    pub sense: Sense,
    pub blocks: Vec<Block<T>>,
    pub integrality: BTreeSet<usize>,
    pub variable_names: BTreeMap<usize, String>,
}

impl<T: Scalar> Default for ConeProgram<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ConeProgram<T> {
    pub fn new() -> Self {
        Self {
            n_vars: 0,
            objective: LinExpr::zero(),
            sense: Sense::Minimize,
            blocks: Vec::new(),
            integrality: BTreeSet::new(),
            variable_names: BTreeMap::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        let v = self.n_vars;
        self.n_vars += 1;
        let name = name.into();
        if !name.is_empty() {
            self.variable_names.insert(v, name);
        }
        v
    }

    /// Adds `count` variables named `prefix[k]`.
    pub fn add_vars(&mut self, prefix: &str, count: usize) -> Vec<usize> {
        (0..count).map(|k| self.add_var(format!("{prefix}[{k}]"))).collect()
    }

    pub fn set_objective(&mut self, objective: LinExpr<T>, sense: Sense) {
        self.objective = objective;
        self.sense = sense;
    }

    pub fn mark_binary(&mut self, var: usize) -> Result<(), IrError> {
        if var >= self.n_vars {
            return Err(IrError::BinaryIndex(var));
        }
        self.integrality.insert(var);
        Ok(())
    }

    /// Appends the block `rows ∈ cone` and returns its index.
    pub fn add_block(&mut self, rows: Vec<LinExpr<T>>, cone: Cone) -> Result<BlockId, IrError> {
        if rows.is_empty() {
            return Err(IrError::EmptyCone);
        }
        if cone == Cone::Psd && psd_order(rows.len()).is_none() {
            return Err(IrError::PsdDimension(rows.len()));
        }
        for r in &rows {
            if let Some(v) = r.max_var() {
                if v >= self.n_vars {
                    return Err(IrError::UnknownVariable { var: v, n_vars: self.n_vars });
                }
            }
        }
        self.blocks.push(Block { cone, rows });
        Ok(self.blocks.len() - 1)
    }

    /// `expr ≥ 0`.
    pub fn add_nonneg(&mut self, expr: LinExpr<T>) -> Result<BlockId, IrError> {
        self.add_block(vec![expr], Cone::Nonnegative)
    }

    /// `expr = 0`.
    pub fn add_eq(&mut self, expr: LinExpr<T>) -> Result<BlockId, IrError> {
        self.add_block(vec![expr], Cone::Zero)
    }

    /// `lhs ≤ rhs`.
    pub fn add_le(&mut self, lhs: LinExpr<T>, rhs: LinExpr<T>) -> Result<BlockId, IrError> {
        self.add_nonneg(rhs - lhs)
    }

    /// `head ≥ ‖tail‖₂`.
    pub fn add_soc(&mut self, head: LinExpr<T>, tail: Vec<LinExpr<T>>) -> Result<BlockId, IrError> {
        let mut rows = Vec::with_capacity(tail.len() + 1);
        rows.push(head);
        rows.extend(tail);
        self.add_block(rows, Cone::SecondOrder)
    }

    /// Symmetric matrix given by its lower triangle `lower[i][j]`, `j ≤ i`, is PSD.
    pub fn add_psd(&mut self, lower: &[Vec<LinExpr<T>>]) -> Result<BlockId, IrError> {
        let k = lower.len();
        let mut rows = vec![LinExpr::zero(); k * (k + 1) / 2];
        let root2 = T::of(std::f64::consts::SQRT_2);
        for i in 0..k {
            for j in 0..=i {
                let e = lower[i][j].clone();
                rows[psd_index(i, j)] = if i == j { e } else { e * root2 };
            }
        }
        self.add_block(rows, Cone::Psd)
    }

    pub fn cones(&self) -> BTreeSet<Cone> {
        self.blocks.iter().map(|b| b.cone).collect()
    }

    pub fn name(&self, var: usize) -> Option<&str> {
        self.variable_names.get(&var).map(String::as_str)
    }

    pub fn find_var(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().find(|(_, n)| n.as_str() == name).map(|(&v, _)| v)
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.eval(x)
    }

    /// Signed residual per block; nonnegative means satisfied.
    ///
    /// Zero: `−max|eᵣ|`; nonnegative: `min eᵣ`; second-order: `e₀ − ‖e₁..‖₂`;
    /// PSD: minimum eigenvalue of the unpacked matrix.
    pub fn check_solution(&self, x: &[T]) -> Result<Vec<T>, IrError> {
        if x.len() != self.n_vars {
            return Err(IrError::PrimalLength { expected: self.n_vars, found: x.len() });
        }
        Ok(self.blocks.iter().map(|b| block_residual(b.cone, &b.eval(x))).collect())
    }

    /// Whether every block residual is at least `−tol` and binaries are within `int_tol` of {0,1}.
    pub fn is_feasible(&self, x: &[T], tol: T, int_tol: T) -> bool {
        let Ok(res) = self.check_solution(x) else { return false };
        res.iter().all(|&r| r >= -tol)
            && self.integrality.iter().all(|&v| x[v].abs() <= int_tol || (x[v] - T::one()).abs() <= int_tol)
    }

    /// Converts coefficients to another scalar type.
    pub fn cast<U: Scalar>(&self) -> ConeProgram<U> {
        ConeProgram {
            n_vars: self.n_vars,
            objective: self.objective.cast(),
            sense: self.sense,
            blocks: self
                .blocks
                .iter()
                .map(|b| Block { cone: b.cone, rows: b.rows.iter().map(LinExpr::cast).collect() })
                .collect(),
            integrality: self.integrality.clone(),
            variable_names: self.variable_names.clone(),
        }
    }

    /// Copy without integrality marks.
    pub fn relaxation(&self) -> Self {
        let mut p = self.clone();
        p.integrality.clear();
        p
    }

    pub fn n_rows(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }
}

pub(crate) fn block_residual<T: Scalar>(cone: Cone, e: &[T]) -> T {
    match cone {
        Cone::Zero => -e.iter().fold(T::zero(), |acc, v| acc.max(v.abs())),
        Cone::Nonnegative => e.iter().copied().fold(T::infinity(), T::min),
        Cone::SecondOrder => e[0] - e[1..].iter().map(|&v| v * v).sum::<T>().sqrt(),
        Cone::Psd => {
            let v: Vec<f64> = e.iter().map(|x| x.as_f64()).collect();
            T::of(min_sym_eigenvalue(&psd_unpack(&v)))
        }
    }
}
