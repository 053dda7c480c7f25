//! Semidefinite epigraph constraints for `u ≥ sup_{ξ∈Ξ} (v − w)ᵀξ − ξᵀQξ`.

use crate::conic_ir::{BlockId, ConeProgram, LinExpr};
use crate::linalg::Mat;
use crate::scalar::Scalar;

use super::ReformError;

/// Expressions tied together by one epigraph constraint.
#[derive(Clone, Debug)]
pub struct EpigraphInputs<T> {
    /// Epigraph variable.
    pub u: LinExpr<T>,
    /// Dual vector of the sample, length `m`.
    pub v: Vec<LinExpr<T>>,
    /// Decision expressions: the linear ξ-term for the quadratic family,
    /// the weights of the bilinear family.
    pub x: Vec<LinExpr<T>>,
}

/// The PSD block and the multipliers it introduced.
#[derive(Clone, Debug)]
pub struct LmiHandles {
    pub block: BlockId,
    pub multipliers: Vec<usize>,
}

fn lower_triangle<T: Scalar>(
    quad: impl Fn(usize, usize) -> LinExpr<T>,
    linear: impl Fn(usize) -> LinExpr<T>,
    corner: LinExpr<T>,
    m: usize,
) -> Vec<Vec<LinExpr<T>>> {
    let half = T::of(-0.5);
    let mut lower = Vec::with_capacity(m + 1);
    for i in 0..m {
        lower.push((0..=i).map(|j| quad(i, j)).collect());
    }
    let mut last: Vec<LinExpr<T>> = (0..m).map(|j| linear(j).scaled(half)).collect();
    last.push(corner);
    lower.push(last);
    lower
}

fn check_inputs<T>(inputs: &EpigraphInputs<T>, m: usize, n_x: usize) -> Result<(), ReformError> {
    if inputs.v.len() != m || inputs.x.len() != n_x {
        return Err(ReformError::Precondition(format!(
            "epigraph inputs have v of length {} and x of length {}, expected {m} and {n_x}",
            inputs.v.len(),
            inputs.x.len()
        )));
    }
    Ok(())
}

/// Support `{ξ : facetsₖᵀξ ≤ offsetsₖ}` with `offsets > 0`:
/// `[[Q, −½(v − x − Σνₖfₖ)], [·, u − Σνₖdₖ]] ⪰ 0`, `ν ≥ 0`.
pub fn lmi_epigraph_polyhedral<T: Scalar>(
    prog: &mut ConeProgram<T>,
    curvature: &Mat<T>,
    facets: &[Vec<T>],
    offsets: &[T],
    inputs: &EpigraphInputs<T>,
) -> Result<LmiHandles, ReformError> {
    let m = curvature.nrows();
    check_inputs(inputs, m, m)?;
    if let Some(k) = offsets.iter().position(|&d| d <= T::zero()) {
        return Err(ReformError::Precondition(format!(
            "polyhedral support offset {k} must be strictly positive so that the origin is interior"
        )));
    }
    let nu = prog.add_vars("nu", facets.len());
    for &v in &nu {
        prog.add_nonneg(LinExpr::var(v))?;
    }
    let linear = |j: usize| {
        let mut e = inputs.v[j].clone() - inputs.x[j].clone();
        for (k, f) in facets.iter().enumerate() {
            e.add_term(nu[k], -f[j]);
        }
        e
    };
    let mut corner = inputs.u.clone();
    for (k, &d) in offsets.iter().enumerate() {
        corner.add_term(nu[k], -d);
    }
    let lower = lower_triangle(|i, j| LinExpr::constant(curvature.get(i, j)), linear, corner, m);
    let block = prog.add_psd(&lower)?;
    Ok(LmiHandles { block, multipliers: nu })
}

struct EllipsoidData<T> {
    winv: Mat<T>,
    winv_center: Vec<T>,
    center_form: T,
}

fn ellipsoid_data<T: Scalar>(shape: &Mat<T>, center: &[T]) -> Result<EllipsoidData<T>, ReformError> {
    let winv = shape
        .inverse()
        .ok_or_else(|| ReformError::Precondition("ellipsoid shape matrix is singular".into()))?;
    let winv_center = winv.mul_vec(center);
    let center_form = crate::linalg::dot(center, &winv_center);
    Ok(EllipsoidData { winv, winv_center, center_form })
}

/// Support `{ξ : (ξ − c)ᵀW⁻¹(ξ − c) ≤ 1}`:
/// `[[Q + νW⁻¹, −½(2νW⁻¹c + v − x)], [·, u + ν(cᵀW⁻¹c − 1)]] ⪰ 0`, `ν ≥ 0`.
pub fn lmi_epigraph_ellipsoidal<T: Scalar>(
    prog: &mut ConeProgram<T>,
    curvature: &Mat<T>,
    shape: &Mat<T>,
    center: &[T],
    inputs: &EpigraphInputs<T>,
) -> Result<LmiHandles, ReformError> {
    let m = curvature.nrows();
    check_inputs(inputs, m, m)?;
    let ell = ellipsoid_data(shape, center)?;
    let nu = prog.add_var("nu");
    prog.add_nonneg(LinExpr::var(nu))?;
    let two = T::of(2.0);
    let quad = |i: usize, j: usize| LinExpr::from_terms(vec![(nu, ell.winv.get(i, j))], curvature.get(i, j));
    let linear = |j: usize| {
        let mut e = inputs.v[j].clone() - inputs.x[j].clone();
        e.add_term(nu, two * ell.winv_center[j]);
        e
    };
    let mut corner = inputs.u.clone();
    corner.add_term(nu, ell.center_form - T::one());
    let lower = lower_triangle(quad, linear, corner, m);
    let block = prog.add_psd(&lower)?;
    Ok(LmiHandles { block, multipliers: vec![nu] })
}

/// Bilinear family on an ellipsoid: as [`lmi_epigraph_ellipsoidal`] with
/// `Q = Σⱼ xⱼQⱼ` and linear term `Σⱼ xⱼrⱼ`. Requires `x ≥ 0`, which the caller enforces.
pub fn lmi_epigraph_bilinear<T: Scalar>(
    prog: &mut ConeProgram<T>,
    curvatures: &[Mat<T>],
    xi_coeffs: &[Vec<T>],
    shape: &Mat<T>,
    center: &[T],
    inputs: &EpigraphInputs<T>,
) -> Result<LmiHandles, ReformError> {
    let m = center.len();
    check_inputs(inputs, m, curvatures.len())?;
    let ell = ellipsoid_data(shape, center)?;
    let nu = prog.add_var("nu");
    prog.add_nonneg(LinExpr::var(nu))?;
    let two = T::of(2.0);
    let quad = |i: usize, j: usize| {
        let mut e = LinExpr::term(nu, ell.winv.get(i, j));
        for (l, q) in curvatures.iter().enumerate() {
            e = e + inputs.x[l].scaled(q.get(i, j));
        }
        e
    };
    let linear = |j: usize| {
        let mut e = inputs.v[j].clone();
        for (l, r) in xi_coeffs.iter().enumerate() {
            e = e - inputs.x[l].scaled(r[j]);
        }
        e.add_term(nu, two * ell.winv_center[j]);
        e
    };
    let mut corner = inputs.u.clone();
    corner.add_term(nu, ell.center_form - T::one());
    let lower = lower_triangle(quad, linear, corner, m);
    let block = prog.add_psd(&lower)?;
    Ok(LmiHandles { block, multipliers: vec![nu] })
}
