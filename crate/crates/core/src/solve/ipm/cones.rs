//! Per-cone primitives for the interior-point method: Jordan products,
//! Nesterov–Todd scalings and step-to-boundary computations.

use nalgebra::{DMatrix, DVector};

use crate::conic_ir::{psd_order, psd_pack, psd_unpack};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Zero,
    Nonneg,
    Soc,
    Psd(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct ConeSlice {
    pub kind: Kind,
    pub start: usize,
    pub dim: usize,
}

impl ConeSlice {
    pub fn new(kind: Kind, start: usize, dim: usize) -> Self {
        let kind = match kind {
            Kind::Psd(_) => Kind::Psd(psd_order(dim).expect("triangular")),
            k => k,
        };
        Self { kind, start, dim }
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.dim
    }

    pub fn degree(&self) -> usize {
        match self.kind {
            Kind::Zero => 0,
            Kind::Nonneg => self.dim,
            Kind::Soc => 1,
            Kind::Psd(k) => k,
        }
    }

    /// Identity element of the cone's Jordan algebra.
    pub fn unit(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match self.kind {
            Kind::Zero => {}
            Kind::Nonneg => out.iter_mut().for_each(|v| *v = 1.0),
            Kind::Soc => out[0] = 1.0,
            Kind::Psd(k) => {
                for i in 0..k {
                    out[i * (i + 1) / 2 + i] = 1.0;
                }
            }
        }
    }

    /// Largest `t` with `s + t·e` on the boundary is `−margin`; positive margin means interior.
    pub fn margin(&self, s: &[f64]) -> f64 {
        match self.kind {
            Kind::Zero => f64::INFINITY,
            Kind::Nonneg => s.iter().copied().fold(f64::INFINITY, f64::min),
            Kind::Soc => s[0] - tail_norm(s),
            Kind::Psd(_) => {
                let m = psd_unpack(s);
                m.symmetric_eigenvalues().min()
            }
        }
    }

    /// Largest `α` (capped at `1e30`) with `s + α·ds` in the cone; `s` must be interior.
    pub fn max_step(&self, s: &[f64], ds: &[f64]) -> f64 {
        const CAP: f64 = 1e30;
        match self.kind {
            Kind::Zero => CAP,
            Kind::Nonneg => s
                .iter()
                .zip(ds)
                .filter(|(_, &d)| d < 0.0)
                .map(|(&v, &d)| -v / d)
                .fold(CAP, f64::min),
            Kind::Soc => soc_max_step(s, ds).min(CAP),
            Kind::Psd(_) => {
                let sm = psd_unpack(s);
                let Some(ch) = sm.cholesky() else { return 0.0 };
                let l = ch.l();
                let dm = psd_unpack(ds);
                let Some(linv) = l.clone().try_inverse() else { return 0.0 };
                let mm = &linv * dm * linv.transpose();
                let lo = mm.symmetric_eigenvalues().min();
                if lo >= 0.0 {
                    CAP
                } else {
                    (-1.0 / lo).min(CAP)
                }
            }
        }
    }

    /// `u ∘ v`.
    pub fn circ(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        match self.kind {
            Kind::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Kind::Nonneg => {
                for ((o, &a), &b) in out.iter_mut().zip(u).zip(v) {
                    *o = a * b;
                }
            }
            Kind::Soc => {
                out[0] = u.iter().zip(v).map(|(a, b)| a * b).sum();
                for k in 1..u.len() {
                    out[k] = u[0] * v[k] + v[0] * u[k];
                }
            }
            Kind::Psd(_) => {
                let um = psd_unpack(u);
                let vm = psd_unpack(v);
                let p = (&um * &vm + &vm * &um) * 0.5;
                out.copy_from_slice(&psd_pack(&p));
            }
        }
    }

    /// Solves `λ ∘ u = d` for `u`. For PSD cones `λ` must be diagonal.
    pub fn inv_circ(&self, lambda: &[f64], d: &[f64], out: &mut [f64]) {
        match self.kind {
            Kind::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Kind::Nonneg => {
                for ((o, &l), &v) in out.iter_mut().zip(lambda).zip(d) {
                    *o = v / l;
                }
            }
            Kind::Soc => {
                let l0 = lambda[0];
                let det = l0 * l0 - lambda[1..].iter().map(|v| v * v).sum::<f64>();
                let cross: f64 = lambda[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum();
                let u0 = (l0 * d[0] - cross) / det;
                out[0] = u0;
                for k in 1..d.len() {
                    out[k] = (d[k] - u0 * lambda[k]) / l0;
                }
            }
            Kind::Psd(k) => {
                let dm = psd_unpack(d);
                let lm = psd_unpack(lambda);
                let mut x = DMatrix::zeros(k, k);
                for i in 0..k {
                    for j in 0..k {
                        x[(i, j)] = 2.0 * dm[(i, j)] / (lm[(i, i)] + lm[(j, j)]);
                    }
                }
                out.copy_from_slice(&psd_pack(&x));
            }
        }
    }
}

fn tail_norm(s: &[f64]) -> f64 {
    s[1..].iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn soc_max_step(s: &[f64], ds: &[f64]) -> f64 {
    // (s0 + α d0)² − ‖s1 + α d1‖² ≥ 0 and s0 + α d0 ≥ 0.
    let jdot = |a: &[f64], b: &[f64]| a[0] * b[0] - a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>();
    let qa = jdot(ds, ds);
    let qb = 2.0 * jdot(s, ds);
    let qc = jdot(s, s).max(0.0);
    let mut alpha = f64::INFINITY;
    if ds[0] < 0.0 {
        alpha = -s[0] / ds[0];
    }
    let root = if qa.abs() < 1e-300 {
        if qb < 0.0 {
            -qc / qb
        } else {
            f64::INFINITY
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            f64::INFINITY
        } else {
            let sq = disc.sqrt();
            let r1 = (-qb - sq) / (2.0 * qa);
            let r2 = (-qb + sq) / (2.0 * qa);
            [r1, r2].into_iter().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min)
        }
    };
    alpha.min(root).max(0.0)
}

/// Nesterov–Todd scaling `W` with `W z = W⁻ᵀ s = λ`.
pub enum Scaling {
    Zero,
    Diag(Vec<f64>),
    Dense { w: DMatrix<f64>, winv: DMatrix<f64> },
}

impl Scaling {
    pub fn compute(cone: &ConeSlice, s: &[f64], z: &[f64]) -> Option<(Scaling, Vec<f64>)> {
        match cone.kind {
            Kind::Zero => Some((Scaling::Zero, vec![0.0; cone.dim])),
            Kind::Nonneg => {
                let w: Vec<f64> = s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect();
                let lam = s.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect();
                Some((Scaling::Diag(w), lam))
            }
            Kind::Soc => {
                let jn = |v: &[f64]| (v[0] * v[0] - v[1..].iter().map(|x| x * x).sum::<f64>()).max(0.0).sqrt();
                let a = jn(s);
                let b = jn(z);
                if !(a > 0.0 && b > 0.0) {
                    return None;
                }
                let sb: Vec<f64> = s.iter().map(|v| v / a).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / b).collect();
                let gamma = ((1.0 + sb.iter().zip(&zb).map(|(x, y)| x * y).sum::<f64>()) / 2.0).sqrt();
                let mut wb: Vec<f64> = sb.iter().zip(&zb).map(|(x, y)| x - y).collect();
                wb[0] = sb[0] + zb[0];
                wb.iter_mut().for_each(|v| *v /= 2.0 * gamma);
                let eta = (a / b).sqrt();
                let d = cone.dim;
                let mut w = DMatrix::zeros(d, d);
                let mut winv = DMatrix::zeros(d, d);
                w[(0, 0)] = wb[0];
                winv[(0, 0)] = wb[0];
                for k in 1..d {
                    w[(0, k)] = wb[k];
                    w[(k, 0)] = wb[k];
                    winv[(0, k)] = -wb[k];
                    winv[(k, 0)] = -wb[k];
                    for l in 1..d {
                        let v = wb[k] * wb[l] / (1.0 + wb[0]) + if k == l { 1.0 } else { 0.0 };
                        w[(k, l)] = v;
                        winv[(k, l)] = v;
                    }
                }
                let w = w * eta;
                let winv = winv / eta;
                let lam = (&w * DVector::from_column_slice(z)).as_slice().to_vec();
                Some((Scaling::Dense { w, winv }, lam))
            }
            Kind::Psd(k) => {
                let ls = psd_unpack(s).cholesky()?.l();
                let lz = psd_unpack(z).cholesky()?.l();
                let svd = (lz.transpose() * &ls).svd(true, true);
                let v = svd.v_t?.transpose();
                let sig = svd.singular_values;
                if sig.iter().any(|&x| !(x > 0.0)) {
                    return None;
                }
                let inv_sqrt = DMatrix::from_diagonal(&sig.map(|x| 1.0 / x.sqrt()));
                let r = &ls * v * inv_sqrt;
                let rinv = r.clone().try_inverse()?;
                let d = cone.dim;
                let mut w = DMatrix::zeros(d, d);
                let mut winv = DMatrix::zeros(d, d);
                let mut e = vec![0.0; d];
                for col in 0..d {
                    e.iter_mut().for_each(|x| *x = 0.0);
                    e[col] = 1.0;
                    let em = psd_unpack(&e);
                    let wcol = psd_pack(&(r.transpose() * &em * &r));
                    let icol = psd_pack(&(rinv.transpose() * &em * &rinv));
                    for row in 0..d {
                        w[(row, col)] = wcol[row];
                        winv[(row, col)] = icol[row];
                    }
                }
                let mut lam_m = DMatrix::zeros(k, k);
                for i in 0..k {
                    lam_m[(i, i)] = sig[i];
                }
                Some((Scaling::Dense { w, winv }, psd_pack(&lam_m)))
            }
        }
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64], transpose: bool, inverse: bool) {
        match self {
            Scaling::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Scaling::Diag(w) => {
                for ((o, &x), &wi) in out.iter_mut().zip(v).zip(w) {
                    *o = if inverse { x / wi } else { x * wi };
                }
            }
            Scaling::Dense { w, winv } => {
                let m = if inverse { winv } else { w };
                let x = DVector::from_column_slice(v);
                let y = if transpose { m.tr_mul(&x) } else { m * x };
                out.copy_from_slice(y.as_slice());
            }
        }
    }

    /// `WᵀW` as a dense block.
    pub fn gram(&self, dim: usize) -> DMatrix<f64> {
        match self {
            Scaling::Zero => DMatrix::zeros(dim, dim),
            Scaling::Diag(w) => DMatrix::from_diagonal(&DVector::from_iterator(dim, w.iter().map(|x| x * x))),
            Scaling::Dense { w, .. } => w.tr_mul(w),
        }
    }
}
