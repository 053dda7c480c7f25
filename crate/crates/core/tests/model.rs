mod common;

use common::*;
use drccp_core::experiments::generate_knapsack;
use drccp_core::linalg::Mat;
use drccp_core::model::{
    dual_norm, evaluate_constraint, validate_problem, ConstraintFunction, Domain, DrccpProblem, GroundNorm, Sense,
    SupportSet,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn knapsack_instance_is_well_formed() {
    let inst = generate_knapsack(3, 4, 2, 10).unwrap();
    assert!(validate_problem(&inst.to_problem(0.1, 0.01)).is_empty());
}

fn polyhedral(offsets: Vec<f64>) -> DrccpProblem<f64> {
    problem(
        vec![0.0, 0.0],
        Domain::Binary,
        vec![ConstraintFunction::QuadraticXi { curvature: Mat::identity(2), x_coeffs: vec![0.0; 2], constant: 1.0 }],
        vec![vec![-1.0, 0.0]],
        0.1,
        0.0,
        GroundNorm::L2,
        SupportSet::Polyhedron { rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]], offsets },
        Sense::Minimize,
    )
}

#[test]
fn zero_polyhedral_offset_is_one_diagnostic() {
    assert!(validate_problem(&polyhedral(vec![1.0, 1.0])).is_empty());
    let diags = validate_problem(&polyhedral(vec![0.0, 1.0]));
    assert_eq!(diags.len(), 1, "{diags:?}");
    assert!(diags[0].invariant.contains("strictly positive"));
    assert_eq!(diags[0].location, "support.offsets[0]");
}

#[test]
fn sample_dimension_must_match_support() {
    let mut p = full_space(vec![affine(vec![], vec![0.0; 3], vec![0.0], 1.0)], vec![vec![0.0; 3]], 0.1, 0.0, GroundNorm::L2);
    p.support = SupportSet::FullSpace { dim: 2 };
    let diags = validate_problem(&p);
    assert!(diags.iter().any(|d| d.invariant.contains("dimension mismatch") && d.location == "support"), "{diags:?}");
}

#[test]
fn structural_invariants_are_reported() {
    let base = full_space(vec![affine(vec![], vec![1.0], vec![0.0], 1.0)], vec![vec![0.5]], 0.1, 0.0, GroundNorm::L2);
    assert!(validate_problem(&base).is_empty());

    let mut p = base.clone();
    p.risk = 1.0;
    assert_eq!(validate_problem(&p)[0].location, "risk");

    let mut p = base.clone();
    p.ball.radius = -0.1;
    assert_eq!(validate_problem(&p)[0].location, "ball.radius");

    let mut p = base.clone();
    p.constraints.clear();
    assert_eq!(validate_problem(&p)[0].location, "constraints");

    let mut p = base.clone();
    p.constraints.push(ConstraintFunction::QuadraticXi { curvature: Mat::identity(1), x_coeffs: vec![0.0], constant: 0.0 });
    assert!(validate_problem(&p).iter().any(|d| d.invariant.contains("mixed")));

    let mut p = base.clone();
    p.support = SupportSet::Box { lower: vec![1.0], upper: vec![0.0] };
    let diags = validate_problem(&p);
    assert!(diags.iter().any(|d| d.invariant.contains("lower <= upper")));

    let mut p = base.clone();
    p.support = SupportSet::Box { lower: vec![0.0], upper: vec![0.25] };
    assert!(validate_problem(&p).iter().any(|d| d.invariant.contains("outside the support")));

    let mut p = base;
    p.support = SupportSet::Ellipsoid { shape: Mat::diagonal(&[0.0]), center: vec![0.0] };
    assert!(validate_problem(&p).iter().any(|d| d.invariant.contains("positive definite")));
}

#[test]
fn indefinite_curvature_is_rejected() {
    let mut p = polyhedral(vec![1.0, 1.0]);
    p.constraints[0] = ConstraintFunction::QuadraticXi { curvature: Mat::diagonal(&[1.0, -1e-6]), x_coeffs: vec![0.0; 2], constant: 0.0 };
    assert!(validate_problem(&p).iter().any(|d| d.invariant.contains("positive semidefinite")));
    // slack of 1e-10 on the smallest eigenvalue
    p.constraints[0] = ConstraintFunction::QuadraticXi { curvature: Mat::diagonal(&[1.0, -1e-11]), x_coeffs: vec![0.0; 2], constant: 0.0 };
    assert!(validate_problem(&p).is_empty());
}

#[test]
fn evaluate_constant_row() {
    let f = affine(vec![], vec![0.0, 0.0], vec![0.0, 0.0], 5.0);
    assert_eq!(evaluate_constraint(&f, &[3.0, -1.0], &[7.0, 2.0]).unwrap(), 5.0);
}

#[test]
fn evaluate_knapsack_row() {
    let f = affine(vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0; 2], vec![0.0; 2], 50.0);
    assert_eq!(evaluate_constraint(&f, &[1.0, 1.0], &[10.0, 20.0]).unwrap(), 20.0);
}

#[test]
fn evaluate_quadratic_row() {
    let f = ConstraintFunction::QuadraticXi { curvature: Mat::identity(2), x_coeffs: vec![0.0; 2], constant: 0.0 };
    assert_eq!(evaluate_constraint(&f, &[1.0, 0.0], &[2.0, 1.0]).unwrap(), 7.0);
}

#[test]
fn evaluate_rejects_wrong_lengths() {
    let f = affine(vec![], vec![0.0, 0.0], vec![0.0], 5.0);
    assert!(evaluate_constraint(&f, &[1.0, 2.0], &[0.0, 0.0]).is_err());
    assert!(evaluate_constraint(&f, &[1.0], &[0.0]).is_err());
}

#[test]
fn dual_norm_examples() {
    assert_eq!(dual_norm(&[0.0, 0.0], GroundNorm::L2), 0.0);
    assert_eq!(dual_norm(&[3.0, -4.0], GroundNorm::L1), 4.0);
    assert_eq!(dual_norm(&[3.0, 4.0], GroundNorm::L2), 5.0);
    assert_eq!(dual_norm(&[3.0, -4.0], GroundNorm::Linf), 7.0);
}

/// Support function of the ground unit ball at `v`, exact on the vertices (L1, L∞)
/// or by Monte Carlo (L2).
#[test]
fn dual_norm_is_support_function_of_unit_ball() {
    let mut r = rng(11);
    for _ in 0..20 {
        let v = uniform_vec(&mut r, 3, -2.0, 2.0);
        // L1 ball vertices ±eᵢ
        let l1 = (0..3).map(|i| v[i].abs()).fold(0.0, f64::max);
        assert_eq!(dual_norm(&v, GroundNorm::L1), l1);
        // L∞ ball vertices: all sign patterns
        let linf = (0..8)
            .map(|mask: u32| (0..3).map(|i| if mask >> i & 1 == 1 { v[i] } else { -v[i] }).sum::<f64>())
            .fold(f64::MIN, f64::max);
        assert!((dual_norm(&v, GroundNorm::Linf) - linf).abs() < 1e-12);
        let mut best = 0.0f64;
        for _ in 0..10_000 {
            let d = uniform_vec(&mut r, 3, -1.0, 1.0);
            let n = d.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 0.0 {
                best = best.max(v.iter().zip(&d).map(|(a, b)| a * b / n).sum());
            }
        }
        let exact = dual_norm(&v, GroundNorm::L2);
        assert!(best <= exact + 1e-12 && best >= 0.98 * exact, "{best} vs {exact}");
    }
}

#[test]
fn problem_round_trips_through_json() {
    let p = generate_knapsack(5, 3, 2, 4).unwrap().to_problem(0.1, 0.02);
    let text = serde_json::to_string(&p).unwrap();
    let back: DrccpProblem<f64> = serde_json::from_str(&text).unwrap();
    assert_eq!(p, back);
}

#[test]
fn ragged_samples_are_rejected() {
    assert!(drccp_core::model::SampleSet::new(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
    assert!(drccp_core::model::SampleSet::<f64>::new(vec![]).is_err());
}

fn random_family(r: &mut impl Rng, family: usize, n: usize) -> ConstraintFunction<f64> {
    match family {
        0 => affine((0..n).map(|_| uniform_vec(r, n, -1.0, 1.0)).collect(), uniform_vec(r, n, -1.0, 1.0), uniform_vec(r, n, -1.0, 1.0), 0.3),
        1 => ConstraintFunction::QuadraticXi { curvature: random_psd(r, n, 1.0), x_coeffs: uniform_vec(r, n, -1.0, 1.0), constant: -0.2 },
        _ => ConstraintFunction::BilinearQuadratic {
            curvatures: (0..n).map(|_| random_psd(r, n, 1.0)).collect(),
            xi_coeffs: (0..n).map(|_| uniform_vec(r, n, -1.0, 1.0)).collect(),
            constants: uniform_vec(r, n, -1.0, 1.0),
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rows_are_convex_in_xi(seed in any::<u64>(), family in 0usize..3, theta in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let f = random_family(&mut r, family, 3);
        // nonnegative x keeps the bilinear family convex in ξ
        let x = uniform_vec(&mut r, 3, 0.0, 2.0);
        let a = uniform_vec(&mut r, 3, -3.0, 3.0);
        let b = uniform_vec(&mut r, 3, -3.0, 3.0);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| theta * p + (1.0 - theta) * q).collect();
        let lhs = evaluate_constraint(&f, &x, &mid).unwrap();
        let rhs = theta * evaluate_constraint(&f, &x, &a).unwrap() + (1.0 - theta) * evaluate_constraint(&f, &x, &b).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn affine_rows_superpose_in_x(seed in any::<u64>(), s in -2.0f64..2.0) {
        let mut r = rng(seed);
        let f = random_family(&mut r, 0, 3);
        let xi = uniform_vec(&mut r, 3, -3.0, 3.0);
        let x1 = uniform_vec(&mut r, 3, -3.0, 3.0);
        let x2 = uniform_vec(&mut r, 3, -3.0, 3.0);
        let comb: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| s * p + (1.0 - s) * q).collect();
        let lhs = evaluate_constraint(&f, &comb, &xi).unwrap();
        let rhs = s * evaluate_constraint(&f, &x1, &xi).unwrap() + (1.0 - s) * evaluate_constraint(&f, &x2, &xi).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}
