use std::fmt;

use serde::Serialize;

use super::{ConstraintFunction, Domain, DrccpProblem, SupportSet};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Slack allowed on the minimum eigenvalue of curvature matrices.
pub const PSD_TOL: f64 = 1e-10;
/// Slack allowed when checking samples against the support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// A violated invariant and where it was found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub invariant: String,
    pub location: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at {})", self.invariant, self.location)
    }
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn push(&mut self, invariant: impl Into<String>, location: impl Into<String>) {
        self.0.push(Diagnostic { invariant: invariant.into(), location: location.into() });
    }

    fn shape<T: Scalar>(&mut self, m: &Mat<T>, rows: usize, cols: usize, loc: &str) -> bool {
        if m.nrows() != rows || m.ncols() != cols {
            self.push(
                format!("dimension mismatch: expected {rows}x{cols}, found {}x{}", m.nrows(), m.ncols()),
                loc,
            );
            return false;
        }
        true
    }

    fn len(&mut self, found: usize, expected: usize, loc: &str) -> bool {
        if found != expected {
            self.push(format!("dimension mismatch: expected length {expected}, found {found}"), loc);
            return false;
        }
        true
    }

    fn psd<T: Scalar>(&mut self, m: &Mat<T>, loc: &str) {
        if m.max_asymmetry() > T::of(1e-12) {
            self.push("matrix must be symmetric", loc);
        } else if m.nrows() > 0 && m.min_eigenvalue().as_f64() < -PSD_TOL {
            self.push("matrix must be positive semidefinite (min eigenvalue >= -1e-10)", loc);
        }
    }
}

/// Returns every violated invariant; empty means the problem is well formed.
pub fn validate_problem<T: Scalar>(p: &DrccpProblem<T>) -> Vec<Diagnostic> {
    let mut c = Collector(Vec::new());
    let n = p.objective.len();
    let m = p.ball.center.dim();

    if p.constraints.is_empty() {
        c.push("at least one uncertain constraint row is required", "constraints");
    }
    if !(p.risk > T::zero() && p.risk < T::one()) {
        c.push("risk level must satisfy 0 < eps < 1", "risk");
    }
    if !(p.ball.radius >= T::zero()) || !p.ball.radius.is_finite() {
        c.push("Wasserstein radius must be finite and nonnegative", "ball.radius");
    }
    if !p.constraints.is_empty() && p.family().is_none() {
        c.push("mixed constraint families are not supported; all rows must share one variant", "constraints");
    }
    if p.support.dim() != m {
        c.push(
            format!("dimension mismatch: support has dim {}, samples have dim {m}", p.support.dim()),
            "support",
        );
    }

    for (t, f) in p.constraints.iter().enumerate() {
        let loc = format!("constraints[{t}]");
        match f {
            ConstraintFunction::AffineBoth { xi_coupling, xi_offset, x_coeffs, .. } => {
                c.shape(xi_coupling, m, n, &format!("{loc}.xi_coupling"));
                c.len(xi_offset.len(), m, &format!("{loc}.xi_offset"));
                c.len(x_coeffs.len(), n, &format!("{loc}.x_coeffs"));
            }
            ConstraintFunction::QuadraticXi { curvature, x_coeffs, .. } => {
                if m != n {
                    c.push(
                        format!("quadratic rows need equal decision and uncertainty dims (n = {n}, m = {m})"),
                        &loc,
                    );
                }
                if c.shape(curvature, m, m, &format!("{loc}.curvature")) {
                    c.psd(curvature, &format!("{loc}.curvature"));
                }
                c.len(x_coeffs.len(), n, &format!("{loc}.x_coeffs"));
            }
            ConstraintFunction::BilinearQuadratic { curvatures, xi_coeffs, constants } => {
                c.len(curvatures.len(), n, &format!("{loc}.curvatures"));
                c.len(xi_coeffs.len(), n, &format!("{loc}.xi_coeffs"));
                c.len(constants.len(), n, &format!("{loc}.constants"));
                for (j, w) in curvatures.iter().enumerate() {
                    let l = format!("{loc}.curvatures[{j}]");
                    if c.shape(w, m, m, &l) {
                        c.psd(w, &l);
                    }
                }
                for (j, r) in xi_coeffs.iter().enumerate() {
                    c.len(r.len(), m, &format!("{loc}.xi_coeffs[{j}]"));
                }
            }
        }
    }

    match &p.support {
        SupportSet::FullSpace { .. } => {}
        SupportSet::Polyhedron { rows, offsets } => {
            c.len(offsets.len(), rows.len(), "support.offsets");
            if rows.is_empty() {
                c.push("polyhedral support needs at least one facet", "support.rows");
            }
            for (k, a) in rows.iter().enumerate() {
                c.len(a.len(), m, &format!("support.rows[{k}]"));
            }
            for (k, &d) in offsets.iter().enumerate() {
                if !(d > T::zero()) {
                    c.push("polyhedral support offset must be strictly positive (d_k > 0)", format!("support.offsets[{k}]"));
                }
            }
        }
        SupportSet::Ellipsoid { shape, center } => {
            if c.shape(shape, m, m, "support.shape") {
                if shape.max_asymmetry() > T::of(1e-12) || !(shape.min_eigenvalue() > T::zero()) {
                    c.push("ellipsoid shape must be symmetric positive definite", "support.shape");
                }
            }
            c.len(center.len(), m, "support.center");
        }
        SupportSet::Box { lower, upper } => {
            c.len(upper.len(), lower.len(), "support.upper");
            for (r, (&l, &u)) in lower.iter().zip(upper).enumerate() {
                if !(l <= u) {
                    c.push("box support needs lower <= upper", format!("support[{r}]"));
                }
            }
        }
    }

    if p.support.dim() == m {
        let tol = T::of(SUPPORT_TOL);
        for (i, s) in p.ball.center.samples().iter().enumerate() {
            if !p.support.contains(s, tol) {
                c.push("sample lies outside the support set", format!("ball.center.samples[{i}]"));
            }
        }
    }

    match &p.domain {
        Domain::Binary => {}
        Domain::Box { lower, upper } => {
            c.len(lower.len(), n, "domain.lower");
            c.len(upper.len(), n, "domain.upper");
            for (j, (l, u)) in lower.iter().zip(upper).enumerate() {
                if let (Some(l), Some(u)) = (l, u) {
                    if !(l <= u) {
                        c.push("domain bounds need lower <= upper", format!("domain[{j}]"));
                    }
                }
            }
        }
        Domain::Linear { rows } => {
            for (k, r) in rows.iter().enumerate() {
                c.len(r.coeffs.len(), n, &format!("domain.rows[{k}]"));
            }
        }
    }
    c.0
}
