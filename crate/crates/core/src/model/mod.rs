//! Problem records: samples, Wasserstein ball, support sets and constraint families.

mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, Mat};
use crate::scalar::Scalar;

pub use validate::{validate_problem, Diagnostic};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: String, expected: usize, found: usize },
    #[error("unsupported constraint family: {0}")]
    UnsupportedVariant(String),
    #[error("unsupported support set: {0}")]
    UnsupportedSupport(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

pub(crate) fn check_len(what: &str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch { what: what.to_string(), expected, found })
    }
}

/// Ground norm of the transport cost. The solver side always works with its dual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroundNorm {
    L1,
    L2,
    Linf,
}

impl GroundNorm {
    pub fn dual(self) -> GroundNorm {
        match self {
            GroundNorm::L1 => GroundNorm::Linf,
            GroundNorm::L2 => GroundNorm::L2,
            GroundNorm::Linf => GroundNorm::L1,
        }
    }

    pub fn eval<T: Scalar>(self, v: &[T]) -> T {
        match self {
            GroundNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            GroundNorm::L2 => v.iter().map(|&x| x * x).sum::<T>().sqrt(),
            GroundNorm::Linf => v.iter().fold(T::zero(), |acc, x| acc.max(x.abs())),
        }
    }
}

/// `‖v‖_*` for the dual of the ground norm.
pub fn dual_norm<T: Scalar>(v: &[T], norm: GroundNorm) -> T {
    norm.dual().eval(v)
}

/// The empirical points ζ¹..ζᴺ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleSetRepr<T>", into = "SampleSetRepr<T>")]
#[serde(bound = "T: Scalar")]
pub struct SampleSet<T> {
    samples: Vec<Vec<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct SampleSetRepr<T> {
    samples: Vec<Vec<T>>,
    #[serde(default)]
    n_samples: Option<usize>,
    #[serde(default)]
    dim: Option<usize>,
}

impl<T: Scalar> TryFrom<SampleSetRepr<T>> for SampleSet<T> {
    type Error = ModelError;

    fn try_from(r: SampleSetRepr<T>) -> Result<Self, ModelError> {
        let set = SampleSet::new(r.samples)?;
        if let Some(n) = r.n_samples {
            check_len("n_samples", set.n_samples(), n)?;
        }
        if let Some(m) = r.dim {
            check_len("sample dim", set.dim(), m)?;
        }
        Ok(set)
    }
}

impl<T: Scalar> From<SampleSet<T>> for SampleSetRepr<T> {
    fn from(s: SampleSet<T>) -> Self {
        let (n, m) = (s.n_samples(), s.dim());
        SampleSetRepr { samples: s.samples, n_samples: Some(n), dim: Some(m) }
    }
}

impl<T: Scalar> SampleSet<T> {
    /// Requires at least one sample and a common dimension.
    pub fn new(samples: Vec<Vec<T>>) -> Result<Self, ModelError> {
        let Some(first) = samples.first() else {
            return Err(ModelError::Invalid("sample set is empty".into()));
        };
        let m = first.len();
        for (i, s) in samples.iter().enumerate() {
            check_len(&format!("sample {i}"), m, s.len())?;
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Vec<T>] {
        &self.samples
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn get(&self, i: usize) -> &[T] {
        &self.samples[i]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WassersteinBall<T> {
    pub radius: T,
    pub norm: GroundNorm,
    pub center: SampleSet<T>,
}

/// Support of the uncertain parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum SupportSet<T> {
    FullSpace { dim: usize },
    /// `{ξ : rowsₖᵀξ ≤ offsetsₖ}`.
    Polyhedron { rows: Vec<Vec<T>>, offsets: Vec<T> },
    /// `{ξ : (ξ − center)ᵀ shape⁻¹ (ξ − center) ≤ 1}`.
    Ellipsoid { shape: Mat<T>, center: Vec<T> },
    Box { lower: Vec<T>, upper: Vec<T> },
}

impl<T: Scalar> SupportSet<T> {
    pub fn dim(&self) -> usize {
        match self {
            SupportSet::FullSpace { dim } => *dim,
            SupportSet::Polyhedron { rows, .. } => rows.first().map_or(0, Vec::len),
            SupportSet::Ellipsoid { center, .. } => center.len(),
            SupportSet::Box { lower, .. } => lower.len(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SupportSet::FullSpace { .. } => "full-space",
            SupportSet::Polyhedron { .. } => "polyhedral",
            SupportSet::Ellipsoid { .. } => "ellipsoidal",
            SupportSet::Box { .. } => "box",
        }
    }

    /// Membership with an absolute slack `tol`.
    pub fn contains(&self, xi: &[T], tol: T) -> bool {
        if xi.len() != self.dim() {
            return false;
        }
        match self {
            SupportSet::FullSpace { .. } => true,
            SupportSet::Polyhedron { rows, offsets } => {
                rows.iter().zip(offsets).all(|(a, &d)| dot(a, xi) <= d + tol)
            }
            SupportSet::Ellipsoid { shape, center } => match shape.inverse() {
                Some(winv) => {
                    let diff: Vec<T> = xi.iter().zip(center).map(|(&a, &b)| a - b).collect();
                    winv.quad_form(&diff) <= T::one() + tol
                }
                None => false,
            },
            SupportSet::Box { lower, upper } => xi
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol),
        }
    }

    /// Box supports rewritten as `±eᵣᵀξ ≤ bound` facets (finite bounds only).
    pub fn as_polyhedron(&self) -> Option<(Vec<Vec<T>>, Vec<T>)> {
        match self {
            SupportSet::Polyhedron { rows, offsets } => Some((rows.clone(), offsets.clone())),
            SupportSet::Box { lower, upper } => {
                let m = lower.len();
                let mut rows = Vec::new();
                let mut offsets = Vec::new();
                for r in 0..m {
                    let mut e = vec![T::zero(); m];
                    e[r] = T::one();
                    rows.push(e.clone());
                    offsets.push(upper[r]);
                    e[r] = -T::one();
                    rows.push(e);
                    offsets.push(-lower[r]);
                }
                Some((rows, offsets))
            }
            _ => None,
        }
    }
}

/// One uncertain row `f(x, ξ) ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum ConstraintFunction<T> {
    /// `(Mx + o)ᵀξ + cᵀx + k` with `M = xi_coupling` (m×n), `o = xi_offset`,
    /// `c = x_coeffs`, `k = constant`.
    AffineBoth { xi_coupling: Mat<T>, xi_offset: Vec<T>, x_coeffs: Vec<T>, constant: T },
    /// `ξᵀx + ξᵀQξ + cᵀx + k` with `Q = curvature ⪰ 0`; needs `m = n`.
    QuadraticXi { curvature: Mat<T>, x_coeffs: Vec<T>, constant: T },
    /// `Σⱼ xⱼ (ξᵀQⱼξ + rⱼᵀξ + kⱼ)` with `Qⱼ = curvatures[j] ⪰ 0`.
    BilinearQuadratic { curvatures: Vec<Mat<T>>, xi_coeffs: Vec<Vec<T>>, constants: Vec<T> },
}

impl<T: Scalar> ConstraintFunction<T> {
    pub fn family(&self) -> &'static str {
        match self {
            ConstraintFunction::AffineBoth { .. } => "affine",
            ConstraintFunction::QuadraticXi { .. } => "quadratic",
            ConstraintFunction::BilinearQuadratic { .. } => "bilinear-quadratic",
        }
    }

    /// `(n, m)` = (decision dim, uncertainty dim).
    pub fn dims(&self) -> (usize, usize) {
        match self {
            ConstraintFunction::AffineBoth { xi_coupling, x_coeffs, xi_offset, .. } => {
                let m = if xi_coupling.nrows() > 0 { xi_coupling.nrows() } else { xi_offset.len() };
                (x_coeffs.len(), m)
            }
            ConstraintFunction::QuadraticXi { curvature, x_coeffs, .. } => (x_coeffs.len(), curvature.nrows()),
            ConstraintFunction::BilinearQuadratic { curvatures, constants, xi_coeffs } => {
                let m = curvatures
                    .first()
                    .map(Mat::nrows)
                    .or_else(|| xi_coeffs.first().map(Vec::len))
                    .unwrap_or(0);
                (constants.len(), m)
            }
        }
    }

    /// For the affine family: the ξ-gradient `Mx + o` and the ξ-free part `cᵀx + k`.
    pub fn affine_parts(&self, x: &[T]) -> Option<(Vec<T>, T)> {
        match self {
            ConstraintFunction::AffineBoth { xi_coupling, xi_offset, x_coeffs, constant } => {
                let mut g = if xi_coupling.nrows() == 0 { vec![T::zero(); xi_offset.len()] } else { xi_coupling.mul_vec(x) };
                for (gi, &o) in g.iter_mut().zip(xi_offset) {
                    *gi += o;
                }
                Some((g, dot(x_coeffs, x) + *constant))
            }
            _ => None,
        }
    }
}

/// Evaluates `f(x, ξ)`.
pub fn evaluate_constraint<T: Scalar>(f: &ConstraintFunction<T>, x: &[T], xi: &[T]) -> Result<T, ModelError> {
    let (n, m) = f.dims();
    check_len("decision vector", n, x.len())?;
    check_len("uncertain vector", m, xi.len())?;
    Ok(match f {
        ConstraintFunction::AffineBoth { .. } => {
            let (g, c) = f.affine_parts(x).expect("affine");
            dot(&g, xi) + c
        }
        ConstraintFunction::QuadraticXi { curvature, x_coeffs, constant } => {
            dot(xi, x) + curvature.quad_form(xi) + dot(x_coeffs, x) + *constant
        }
        ConstraintFunction::BilinearQuadratic { curvatures, xi_coeffs, constants } => {
            let mut total = T::zero();
            for j in 0..n {
                if x[j].is_zero() {
                    continue;
                }
                let w = curvatures[j].quad_form(xi) + dot(&xi_coeffs[j], xi) + constants[j];
                total += x[j] * w;
            }
            total
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// Deterministic linear row `coeffsᵀx (relation) rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearRow<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// Deterministic part of the feasible region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Domain<T> {
    Binary,
    /// Bounds per coordinate; `None` means unbounded on that side.
    Box { lower: Vec<Option<T>>, upper: Vec<Option<T>> },
    Linear { rows: Vec<LinearRow<T>> },
}

impl<T: Scalar> Domain<T> {
    pub fn contains(&self, x: &[T], tol: T) -> bool {
        match self {
            Domain::Binary => x.iter().all(|&v| v.abs() <= tol || (v - T::one()).abs() <= tol),
            Domain::Box { lower, upper } => x.iter().enumerate().all(|(j, &v)| {
                lower.get(j).copied().flatten().map_or(true, |l| v >= l - tol)
                    && upper.get(j).copied().flatten().map_or(true, |u| v <= u + tol)
            }),
            Domain::Linear { rows } => rows.iter().all(|r| {
                let lhs = dot(&r.coeffs, x);
                match r.relation {
                    Relation::Le => lhs <= r.rhs + tol,
                    Relation::Ge => lhs >= r.rhs - tol,
                    Relation::Eq => (lhs - r.rhs).abs() <= tol,
                }
            }),
        }
    }

    /// True when every admissible point is componentwise nonnegative.
    pub fn implies_nonnegative(&self, n: usize) -> bool {
        match self {
            Domain::Binary => true,
            Domain::Box { lower, .. } => {
                lower.len() == n && lower.iter().all(|l| l.is_some_and(|v| v >= T::zero()))
            }
            Domain::Linear { .. } => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Joint chance-constrained program over a Wasserstein ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DrccpProblem<T> {
    pub objective: Vec<T>,
    pub domain: Domain<T>,
    pub constraints: Vec<ConstraintFunction<T>>,
    pub risk: T,
    pub ball: WassersteinBall<T>,
    pub support: SupportSet<T>,
    pub sense: Sense,
}

impl<T: Scalar> DrccpProblem<T> {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn xi_dim(&self) -> usize {
        self.ball.center.dim()
    }

    pub fn n_samples(&self) -> usize {
        self.ball.center.n_samples()
    }

    pub fn samples(&self) -> &SampleSet<T> {
        &self.ball.center
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        dot(&self.objective, x)
    }

    /// Family shared by all rows, `None` if empty or mixed.
    pub fn family(&self) -> Option<&'static str> {
        let first = self.constraints.first()?.family();
        self.constraints.iter().all(|c| c.family() == first).then_some(first)
    }

    /// Whether `x` satisfies every uncertain row at `ξ`.
    pub fn all_rows_hold(&self, x: &[T], xi: &[T]) -> Result<bool, ModelError> {
        for f in &self.constraints {
            if evaluate_constraint(f, x, xi)? < T::zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
