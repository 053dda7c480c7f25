//! Dense homogeneous self-dual interior-point method for
//! `min cᵀx  s.t.  Ax + s = b,  s ∈ K` over products of zero, nonnegative,
//! second-order and PSD cones, with Nesterov–Todd scaling and a
//! Mehrotra predictor–corrector.

pub mod cones;

use nalgebra::{DMatrix, DVector};

use cones::{ConeSlice, Kind, Scaling};

#[derive(Clone, Debug)]
pub struct IpmSettings {
    pub max_iter: usize,
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub tol_infeas: f64,
    /// Looser tolerances accepted when progress stalls.
    pub tol_reduced: f64,
    pub step_fraction: f64,
    pub regularization: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_feas: 1e-10,
            tol_gap: 1e-10,
            tol_infeas: 1e-9,
            tol_reduced: 1e-7,
            step_fraction: 0.99,
            regularization: 1e-11,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpmStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    Failed,
}

pub struct IpmResult {
    pub status: IpmStatus,
    pub x: DVector<f64>,
    pub s: DVector<f64>,
    pub z: DVector<f64>,
    pub iterations: usize,
}

pub struct ConicData {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub cones: Vec<ConeSlice>,
}

struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    exact: DMatrix<f64>,
}

impl Kkt {
    fn new(a: &DMatrix<f64>, h: &DMatrix<f64>, reg: f64) -> Option<Kkt> {
        let (m, n) = a.shape();
        let mut k = DMatrix::zeros(n + m, n + m);
        k.view_mut((0, n), (n, m)).copy_from(&a.transpose());
        k.view_mut((n, 0), (m, n)).copy_from(a);
        k.view_mut((n, n), (m, m)).copy_from(&(-h));
        let exact = k.clone();
        for i in 0..n {
            k[(i, i)] += reg;
        }
        for i in n..n + m {
            k[(i, i)] -= reg;
        }
        let lu = k.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Kkt { lu, exact })
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut x = self.lu.solve(rhs)?;
        for _ in 0..4 {
            let r = rhs - &self.exact * &x;
            if r.amax() <= 1e-14 * (1.0 + rhs.amax()) {
                break;
            }
            x += self.lu.solve(&r)?;
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

struct Direction {
    x: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Rhs<'a> {
    dx: &'a DVector<f64>,
    dz: &'a DVector<f64>,
    dtau: f64,
    ds: &'a DVector<f64>,
    dkappa: f64,
}

pub fn solve(data: &ConicData, settings: &IpmSettings) -> IpmResult {
    let (m, n) = data.a.shape();
    let a = &data.a;
    let b = &data.b;
    let c = &data.c;
    let nu: usize = data.cones.iter().map(ConeSlice::degree).sum();

    let fail = |x: DVector<f64>, s: DVector<f64>, z: DVector<f64>, it: usize| IpmResult {
        status: IpmStatus::Failed,
        x,
        s,
        z,
        iterations: it,
    };

    // Starting point from two least-squares solves.
    let Some(kkt0) = Kkt::new(a, &DMatrix::identity(m, m), settings.regularization.max(1e-10)) else {
        return fail(DVector::zeros(n), DVector::zeros(m), DVector::zeros(m), 0);
    };
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(n, m).copy_from(b);
    let Some(sol) = kkt0.solve(&rhs) else {
        return fail(DVector::zeros(n), DVector::zeros(m), DVector::zeros(m), 0);
    };
    let mut x = sol.rows(0, n).into_owned();
    let mut s = -sol.rows(n, m).into_owned();
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(-c));
    let Some(sol) = kkt0.solve(&rhs) else {
        return fail(x, s, DVector::zeros(m), 0);
    };
    let mut z = sol.rows(n, m).into_owned();
    let mut e = DVector::zeros(m);
    for cone in &data.cones {
        let r = cone.range();
        cone.unit(&mut e.as_mut_slice()[r.clone()]);
        if cone.kind == Kind::Zero {
            s.rows_mut(cone.start, cone.dim).fill(0.0);
            continue;
        }
        for v in [&mut s, &mut z] {
            let mg = cone.margin(&v.as_slice()[r.clone()]);
            if !(mg > 1e-8) || !mg.is_finite() {
                let shift = if mg.is_finite() { 1.0 - mg } else { 1.0 };
                for k in r.clone() {
                    v[k] += shift * e[k];
                }
            }
        }
    }
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let bnorm = b.amax();
    let cnorm = c.amax();
    let mut best_reduced: Option<(DVector<f64>, DVector<f64>, DVector<f64>, f64)> = None;

    for iter in 0..settings.max_iter {
        let rx = a.tr_mul(&z) + c * tau;
        let rz = a * &x + &s - b * tau;
        let rtau = c.dot(&x) + b.dot(&z) + kappa;

        let mut sz = 0.0;
        for cone in data.cones.iter().filter(|c| c.kind != Kind::Zero) {
            sz += s.rows(cone.start, cone.dim).dot(&z.rows(cone.start, cone.dim));
        }
        let mu = (sz + tau * kappa) / (nu as f64 + 1.0);

        // Termination in the original scaling.
        let pres = rz.amax() / tau / (1.0 + bnorm);
        let dres = rx.amax() / tau / (1.0 + cnorm);
        let pobj = c.dot(&x) / tau;
        let dobj = -b.dot(&z) / tau;
        let gap_abs = (pobj - dobj).abs().min(sz / (tau * tau));
        let gap_rel = gap_abs / pobj.abs().min(dobj.abs()).max(1.0);
        if pres <= settings.tol_feas && dres <= settings.tol_feas && gap_rel <= settings.tol_gap {
            return IpmResult { status: IpmStatus::Optimal, x: x / tau, s: s / tau, z: z / tau, iterations: iter };
        }
        if pres <= settings.tol_reduced && dres <= settings.tol_reduced && gap_rel <= settings.tol_reduced {
            best_reduced = Some((&x / tau, &s / tau, &z / tau, pres.max(dres).max(gap_rel)));
        }
        let btz = b.dot(&z);
        if btz < 0.0 && a.tr_mul(&z).amax() / (-btz) <= settings.tol_infeas && tau < kappa {
            return IpmResult { status: IpmStatus::PrimalInfeasible, x, s, z: z / (-btz), iterations: iter };
        }
        let ctx = c.dot(&x);
        if ctx < 0.0 && (a * &x + &s).amax() / (-ctx) <= settings.tol_infeas && tau < kappa {
            return IpmResult { status: IpmStatus::DualInfeasible, x: x / (-ctx), s, z, iterations: iter };
        }

        // Scaling and KKT factorization.
        let mut scalings = Vec::with_capacity(data.cones.len());
        let mut lambda = DVector::zeros(m);
        let mut h = DMatrix::zeros(m, m);
        let mut ok = true;
        for cone in &data.cones {
            let r = cone.range();
            match Scaling::compute(cone, &s.as_slice()[r.clone()], &z.as_slice()[r.clone()]) {
                Some((sc, lam)) => {
                    lambda.rows_mut(cone.start, cone.dim).copy_from_slice(&lam);
                    h.view_mut((cone.start, cone.start), (cone.dim, cone.dim)).copy_from(&sc.gram(cone.dim));
                    scalings.push(sc);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let Some(kkt) = Kkt::new(a, &h, settings.regularization) else { break };
        let mut rhs1 = DVector::zeros(n + m);
        rhs1.rows_mut(0, n).copy_from(&(-c));
        rhs1.rows_mut(n, m).copy_from(b);
        let Some(sol1) = kkt.solve(&rhs1) else { break };
        let x1 = sol1.rows(0, n).into_owned();
        let z1 = sol1.rows(n, m).into_owned();

        let direction = |r: &Rhs| -> Option<Direction> {
            // t = λ ⋄ d_s, then Wᵀ t per cone.
            let mut wt = DVector::zeros(m);
            let mut t = vec![0.0; m];
            for (cone, sc) in data.cones.iter().zip(&scalings) {
                let rg = cone.range();
                cone.inv_circ(&lambda.as_slice()[rg.clone()], &r.ds.as_slice()[rg.clone()], &mut t[rg.clone()]);
                let mut out = vec![0.0; cone.dim];
                sc.apply(&t[rg.clone()], &mut out, true, false);
                wt.rows_mut(cone.start, cone.dim).copy_from_slice(&out);
            }
            let mut rhs2 = DVector::zeros(n + m);
            rhs2.rows_mut(0, n).copy_from(&(-r.dx));
            rhs2.rows_mut(n, m).copy_from(&(-r.dz + &wt));
            let sol2 = kkt.solve(&rhs2)?;
            let x2 = sol2.rows(0, n).into_owned();
            let z2 = sol2.rows(n, m).into_owned();
            let denom = c.dot(&x1) + b.dot(&z1) - kappa / tau;
            let dtau = (-r.dtau + r.dkappa / tau - c.dot(&x2) - b.dot(&z2)) / denom;
            let dx = x2 + &x1 * dtau;
            let dz = z2 + &z1 * dtau;
            let mut ds = -wt - &h * &dz;
            for cone in data.cones.iter().filter(|c| c.kind == Kind::Zero) {
                ds.rows_mut(cone.start, cone.dim).fill(0.0);
            }
            let dkappa = -(r.dkappa + kappa * dtau) / tau;
            if !(dtau.is_finite() && dkappa.is_finite()) {
                return None;
            }
            Some(Direction { x: dx, z: dz, s: ds, tau: dtau, kappa: dkappa })
        };

        let step = |d: &Direction| -> f64 {
            let mut alpha: f64 = 1e30;
            for cone in data.cones.iter().filter(|c| c.kind != Kind::Zero) {
                let r = cone.range();
                alpha = alpha.min(cone.max_step(&s.as_slice()[r.clone()], &d.s.as_slice()[r.clone()]));
                alpha = alpha.min(cone.max_step(&z.as_slice()[r.clone()], &d.z.as_slice()[r.clone()]));
            }
            if d.tau < 0.0 {
                alpha = alpha.min(-tau / d.tau);
            }
            if d.kappa < 0.0 {
                alpha = alpha.min(-kappa / d.kappa);
            }
            alpha
        };

        // Predictor.
        let mut lam_sq = DVector::zeros(m);
        for cone in &data.cones {
            let r = cone.range();
            let l = &lambda.as_slice()[r.clone()];
            cone.circ(l, l, &mut lam_sq.as_mut_slice()[r]);
        }
        let Some(aff) = direction(&Rhs { dx: &rx, dz: &rz, dtau: rtau, ds: &lam_sq, dkappa: tau * kappa }) else {
            break;
        };
        let alpha_aff = step(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        // Corrector.
        let mut ds_comb = lam_sq.clone();
        let mut tmp_s = vec![0.0; m];
        let mut tmp_z = vec![0.0; m];
        let mut corr = vec![0.0; m];
        for (cone, sc) in data.cones.iter().zip(&scalings) {
            if cone.kind == Kind::Zero {
                continue;
            }
            let r = cone.range();
            sc.apply(&aff.s.as_slice()[r.clone()], &mut tmp_s[r.clone()], true, true);
            sc.apply(&aff.z.as_slice()[r.clone()], &mut tmp_z[r.clone()], false, false);
            cone.circ(&tmp_s[r.clone()], &tmp_z[r.clone()], &mut corr[r.clone()]);
            for k in r {
                ds_comb[k] += corr[k] - sigma * mu * e[k];
            }
        }
        let rxc = &rx * (1.0 - sigma);
        let rzc = &rz * (1.0 - sigma);
        let dkappa = tau * kappa + aff.tau * aff.kappa - sigma * mu;
        let Some(dir) = direction(&Rhs { dx: &rxc, dz: &rzc, dtau: (1.0 - sigma) * rtau, ds: &ds_comb, dkappa }) else {
            break;
        };
        let alpha = (settings.step_fraction * step(&dir)).min(1.0);
        if !(alpha > 1e-14) {
            break;
        }
        x += &dir.x * alpha;
        s += &dir.s * alpha;
        z += &dir.z * alpha;
        tau += alpha * dir.tau;
        kappa += alpha * dir.kappa;
        if !(tau > 0.0 && kappa > 0.0) {
            break;
        }
        // Keep the homogeneous scale bounded.
        let scale = tau.max(kappa).max(x.amax()).max(s.amax()).max(z.amax());
        if scale > 1e8 || scale < 1e-8 {
            x /= scale;
            s /= scale;
            z /= scale;
            tau /= scale;
            kappa /= scale;
        }
    }

    match best_reduced {
        Some((x, s, z, _)) => IpmResult { status: IpmStatus::Optimal, x, s, z, iterations: settings.max_iter },
        None => fail(x / tau, s / tau, z / tau, settings.max_iter),
    }
}
