#![allow(dead_code)]

use drccp_core::linalg::Mat;
use drccp_core::model::{
    ConstraintFunction, Domain, DrccpProblem, GroundNorm, SampleSet, Sense, SupportSet, WassersteinBall,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn affine(coupling: Vec<Vec<f64>>, offset: Vec<f64>, x_coeffs: Vec<f64>, constant: f64) -> ConstraintFunction<f64> {
    let n = x_coeffs.len();
    let m = offset.len();
    let xi_coupling = if coupling.is_empty() { Mat::zeros(m, n) } else { Mat::from_rows(coupling).unwrap() };
    ConstraintFunction::AffineBoth { xi_coupling, xi_offset: offset, x_coeffs, constant }
}

pub fn problem(
    objective: Vec<f64>,
    domain: Domain<f64>,
    constraints: Vec<ConstraintFunction<f64>>,
    samples: Vec<Vec<f64>>,
    risk: f64,
    radius: f64,
    norm: GroundNorm,
    support: SupportSet<f64>,
    sense: Sense,
) -> DrccpProblem<f64> {
    DrccpProblem {
        objective,
        domain,
        constraints,
        risk,
        ball: WassersteinBall { radius, norm, center: SampleSet::new(samples).unwrap() },
        support,
        sense,
    }
}

pub fn full_space(
    constraints: Vec<ConstraintFunction<f64>>,
    samples: Vec<Vec<f64>>,
    risk: f64,
    radius: f64,
    norm: GroundNorm,
) -> DrccpProblem<f64> {
    let (n, m) = constraints[0].dims();
    problem(
        vec![0.0; n],
        Domain::Box { lower: vec![None; n], upper: vec![None; n] },
        constraints,
        samples,
        risk,
        radius,
        norm,
        SupportSet::FullSpace { dim: m },
        Sense::Minimize,
    )
}

pub fn uniform_vec(r: &mut impl Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| r.random_range(lo..hi)).collect()
}

/// Random affine rows on full space together with samples.
pub fn random_affine(r: &mut impl Rng, n: usize, m: usize, t: usize, n_samples: usize) -> (Vec<ConstraintFunction<f64>>, Vec<Vec<f64>>) {
    let rows = (0..t)
        .map(|_| {
            let coupling = (0..m).map(|_| uniform_vec(r, n, -1.0, 1.0)).collect();
            affine(coupling, uniform_vec(r, m, -1.0, 1.0), uniform_vec(r, n, -1.0, 1.0), r.random_range(0.0..2.0))
        })
        .collect();
    let samples = (0..n_samples).map(|_| uniform_vec(r, m, -1.0, 1.0)).collect();
    (rows, samples)
}

/// Knapsack rows `capacity − Σⱼ ξ_{t·n+j} xⱼ ≥ 0`.
pub fn knapsack_rows(n: usize, t: usize, capacity: f64) -> Vec<ConstraintFunction<f64>> {
    (0..t)
        .map(|k| {
            let m = n * t;
            let coupling = (0..m).map(|r| (0..n).map(|j| if r == k * n + j { -1.0 } else { 0.0 }).collect()).collect();
            affine(coupling, vec![0.0; m], vec![0.0; n], capacity)
        })
        .collect()
}

pub fn random_psd(r: &mut impl Rng, m: usize, scale: f64) -> Mat<f64> {
    let g: Vec<Vec<f64>> = (0..m).map(|_| uniform_vec(r, m, -1.0, 1.0)).collect();
    Mat::from_fn(m, m, |i, j| scale * (0..m).map(|k| g[i][k] * g[j][k]).sum::<f64>())
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}

use drccp_core::conic_ir::{ConeProgram, LinExpr, SolveStatus};
use drccp_core::solve::{solve_continuous, ClarabelAdapter};

/// Ground-norm distance from `zeta` to `{ξ : gᵀξ + c ≤ 0}` by a conic projection solve.
pub fn projection_distance(g: &[f64], c: f64, zeta: &[f64], norm: GroundNorm) -> f64 {
    let m = g.len();
    let mut p = ConeProgram::<f64>::new();
    let xi = p.add_vars("xi", m);
    let t = p.add_var("t");
    p.set_objective(LinExpr::var(t), Sense::Minimize);
    p.add_nonneg(-(LinExpr::dot(&xi, g) + LinExpr::constant(c))).unwrap();
    let diff: Vec<LinExpr<f64>> = (0..m).map(|r| LinExpr::from_terms(vec![(xi[r], 1.0)], -zeta[r])).collect();
    match norm {
        GroundNorm::L2 => {
            p.add_soc(LinExpr::var(t), diff).unwrap();
        }
        GroundNorm::Linf => {
            for d in diff {
                p.add_nonneg(LinExpr::var(t) - d.clone()).unwrap();
                p.add_nonneg(LinExpr::var(t) + d).unwrap();
            }
        }
        GroundNorm::L1 => {
            let u = p.add_vars("u", m);
            for (d, &uv) in diff.into_iter().zip(&u) {
                p.add_nonneg(LinExpr::var(uv) - d.clone()).unwrap();
                p.add_nonneg(LinExpr::var(uv) + d).unwrap();
            }
            p.add_nonneg(LinExpr::var(t) - LinExpr::sum(&u)).unwrap();
        }
    }
    let s = solve_continuous(&p, &ClarabelAdapter::default()).unwrap();
    match s.status {
        SolveStatus::Optimal => s.objective_value.max(0.0),
        SolveStatus::Infeasible => f64::INFINITY,
        other => panic!("projection solve ended with {other:?}"),
    }
}

/// Worst-case violation probability from projection distances and an LP over
/// `(λ, s)`: `min λδ + (1/N)Σsᵢ`, `sᵢ ≥ 0`, `sᵢ ≥ 1 − λdᵢ`.
pub fn lp_violation_probability(x: &[f64], p: &DrccpProblem<f64>) -> f64 {
    let n_s = p.n_samples();
    let mut lp = ConeProgram::<f64>::new();
    let lambda = lp.add_var("lambda");
    let s = lp.add_vars("s", n_s);
    let mut obj = LinExpr::term(lambda, p.ball.radius);
    for &v in &s {
        obj.add_term(v, 1.0 / n_s as f64);
        lp.add_nonneg(LinExpr::var(v)).unwrap();
    }
    lp.set_objective(obj, Sense::Minimize);
    lp.add_nonneg(LinExpr::var(lambda)).unwrap();
    for (i, zeta) in p.samples().samples().iter().enumerate() {
        let mut d = f64::INFINITY;
        for f in &p.constraints {
            let (g, c) = f.affine_parts(x).unwrap();
            d = d.min(projection_distance(&g, c, zeta, p.ball.norm));
        }
        if d.is_finite() {
            lp.add_nonneg(LinExpr::from_terms(vec![(s[i], 1.0), (lambda, d)], -1.0)).unwrap();
        }
    }
    let sol = solve_continuous(&lp, &ClarabelAdapter::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    sol.objective_value
}

/// `min_{λ≥0} h(λ)` by a coarse grid over `[0, hi]` refined around the best point.
pub fn grid_minimum(distances: &[f64], radius: f64, hi: f64) -> f64 {
    let h = |l: f64| drccp_core::oracle::dual_objective(l, distances, radius);
    let steps = 10_000;
    let step = hi / steps as f64;
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    for k in 0..=steps {
        let l = k as f64 * step;
        let v = h(l);
        if v < best {
            best = v;
            arg = l;
        }
    }
    let lo = (arg - 2.0 * step).max(0.0);
    let fine = 4.0 * step / steps as f64;
    for k in 0..=steps {
        best = best.min(h(lo + k as f64 * fine));
    }
    best
}

/// Upper end of the λ range holding every breakpoint.
pub fn lambda_range(distances: &[f64]) -> f64 {
    let smallest = distances.iter().copied().filter(|d| *d > 0.0 && d.is_finite()).fold(f64::INFINITY, f64::min);
    if smallest.is_finite() { 1.5 / smallest } else { 10.0 }
}

// ---------- direct maximization of concave quadratics ----------

use drccp_core::reformulate::{EpigraphInputs, LmiHandles};
use drccp_core::solve::DenseIpmAdapter;

/// `A = R Rᵀ` with a random square factor `R`.
pub fn random_factored_psd(r: &mut impl Rng, m: usize, scale: f64) -> (Mat<f64>, Vec<Vec<f64>>) {
    let root = scale.sqrt();
    let factor: Vec<Vec<f64>> = (0..m).map(|_| uniform_vec(r, m, -root, root)).collect();
    let a = Mat::from_fn(m, m, |i, j| (0..m).map(|k| factor[i][k] * factor[j][k]).sum::<f64>());
    (a, factor)
}

/// `sup gᵀξ − ‖Rᵀξ‖²` over the set added by `add_set`, solved as an SOCP.
fn concave_max(g: &[f64], factor: &[Vec<f64>], add_set: impl FnOnce(&mut ConeProgram<f64>, &[usize])) -> f64 {
    let m = g.len();
    let mut p = ConeProgram::<f64>::new();
    let xi = p.add_vars("xi", m);
    let t = p.add_var("t");
    p.set_objective(LinExpr::dot(&xi, g) - LinExpr::var(t), Sense::Maximize);
    // (t + 1)/2 ≥ ‖((t − 1)/2, Rᵀξ)‖ ⇔ t ≥ ‖Rᵀξ‖²
    let mut tail = vec![LinExpr::from_terms(vec![(t, 0.5)], -0.5)];
    for k in 0..factor[0].len() {
        tail.push(LinExpr::from_terms((0..m).map(|i| (xi[i], factor[i][k])).collect(), 0.0));
    }
    p.add_soc(LinExpr::from_terms(vec![(t, 0.5)], 0.5), tail).unwrap();
    add_set(&mut p, &xi);
    let s = solve_continuous(&p, &ClarabelAdapter::default()).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    s.objective_value
}

/// Maximum over `{ξ : Pξ ≤ d}`.
pub fn concave_max_polyhedron(g: &[f64], factor: &[Vec<f64>], facets: &[Vec<f64>], offsets: &[f64]) -> f64 {
    concave_max(g, factor, |p, xi| {
        for (row, &d) in facets.iter().zip(offsets) {
            p.add_nonneg(LinExpr::constant(d) - LinExpr::dot(xi, row)).unwrap();
        }
    })
}

/// Maximum over `{ξ : Σ (ξᵣ − cᵣ)² / wᵣ ≤ 1}`, i.e. shape `diag(w)`.
pub fn concave_max_ellipsoid(g: &[f64], factor: &[Vec<f64>], shape_diag: &[f64], center: &[f64]) -> f64 {
    concave_max(g, factor, |p, xi| {
        let tail = xi
            .iter()
            .zip(shape_diag.iter().zip(center))
            .map(|(&v, (&w, &c))| LinExpr::from_terms(vec![(v, 1.0 / w.sqrt())], -c / w.sqrt()))
            .collect();
        p.add_soc(LinExpr::constant(1.0), tail).unwrap();
    })
}

/// Minimizes `u` subject to one epigraph block with `v` fixed to `g` and `x` fixed to `x`.
pub fn minimal_epigraph(
    build: impl FnOnce(&mut ConeProgram<f64>, &EpigraphInputs<f64>) -> LmiHandles,
    g: &[f64],
    x: &[f64],
) -> (f64, Vec<f64>) {
    let mut prog = ConeProgram::<f64>::new();
    let u = prog.add_var("u");
    prog.set_objective(LinExpr::var(u), Sense::Minimize);
    let inputs = EpigraphInputs {
        u: LinExpr::var(u),
        v: g.iter().map(|&gi| LinExpr::constant(gi)).collect(),
        x: x.iter().map(|&xi| LinExpr::constant(xi)).collect(),
    };
    let h = build(&mut prog, &inputs);
    let s = solve_continuous(&prog, &DenseIpmAdapter::default()).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    (s.primal[u], h.multipliers.iter().map(|&k| s.primal[k]).collect())
}

// ---------- single-row CVaR value at a fixed threshold ----------

/// `min cᵀx` over `x ∈ [−1, 1]ⁿ` subject to
/// `δ‖Ax + o‖₂ + (1/N)Σ (α − f(x, ζⁱ))₊ ≤ εα` for the single affine row of `p`.
/// `None` when infeasible.
pub fn fixed_threshold_value(p: &DrccpProblem<f64>, alpha: f64) -> Option<f64> {
    let ConstraintFunction::AffineBoth { xi_coupling, xi_offset, x_coeffs, constant } = &p.constraints[0] else {
        panic!("affine row expected");
    };
    let (n, m, n_s) = (x_coeffs.len(), xi_offset.len(), p.n_samples());
    let mut lp = ConeProgram::<f64>::new();
    let x = lp.add_vars("x", n);
    let q = lp.add_vars("q", n_s);
    let t = lp.add_var("t");
    lp.set_objective(LinExpr::dot(&x, &p.objective), Sense::Minimize);
    for &v in &x {
        lp.add_nonneg(LinExpr::from_terms(vec![(v, 1.0)], 1.0)).unwrap();
        lp.add_nonneg(LinExpr::from_terms(vec![(v, -1.0)], 1.0)).unwrap();
    }
    let grad: Vec<LinExpr<f64>> = (0..m).map(|r| LinExpr::dot(&x, xi_coupling.row(r)) + LinExpr::constant(xi_offset[r])).collect();
    lp.add_soc(LinExpr::var(t), grad.clone()).unwrap();
    let mut budget = LinExpr::constant(p.risk * alpha) - LinExpr::term(t, p.ball.radius);
    for (i, zeta) in p.samples().samples().iter().enumerate() {
        let mut f = LinExpr::dot(&x, x_coeffs) + LinExpr::constant(*constant);
        for r in 0..m {
            f = f + grad[r].clone() * zeta[r];
        }
        lp.add_nonneg(LinExpr::var(q[i])).unwrap();
        lp.add_nonneg(LinExpr::var(q[i]) - LinExpr::constant(alpha) + f).unwrap();
        budget = budget - LinExpr::term(q[i], 1.0 / n_s as f64);
    }
    lp.add_nonneg(budget).unwrap();
    let s = solve_continuous(&lp, &ClarabelAdapter::default()).unwrap();
    match s.status {
        SolveStatus::Optimal => Some(s.objective_value),
        SolveStatus::Infeasible => None,
        other => panic!("fixed-threshold solve ended with {other:?}"),
    }
}

/// Minimum of a convex function of one variable that may be `+∞` outside an interval:
/// a grid locates a finite point, golden-section search refines it.
pub fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let steps = 60;
    let grid: Vec<f64> = (0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&a| f(a)).collect();
    let k = (0..=steps).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    assert!(values[k].is_finite(), "no finite point on the grid");
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(steps)]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-9 * (1.0 + a.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    values[k].min(fc).min(fd)
}
