use super::*;
use crate::example;
use crate::filter::{reconstruct_duals, run_estimate, FilterOptions};
use crate::model::{DaeSystem, UncertaintyModel};
use crate::reduction::{svd_reduce, to_canonical};
use nalgebra::DMatrix;

fn canon() -> CanonicalSystem {
    let sys = example::system();
    to_canonical(&sys, &example::weights(), &svd_reduce(&sys.f)).unwrap()
}

fn grid(n: usize) -> TimeGrid {
    TimeGrid::new(0.0, 1.0, n).unwrap()
}

fn dir(a: f64, b: f64) -> DVector<f64> {
    DVector::from_row_slice(&[a, b])
}

fn rel_l2(a: &[DVector<f64>], b: &[DVector<f64>], g: &TimeGrid) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).collect();
    let base: Vec<f64> = b.iter().map(|y| y.norm_squared()).collect();
    (trapezoid(&diff, g) / trapezoid(&base, g)).sqrt()
}

#[test]
fn zero_direction_gives_zero_minimizer() {
    let d = tikhonov_minimize(&canon(), &dir(0.0, 0.0), 1e-3, &grid(50)).unwrap();
    assert_eq!(d.tikhonov_value, 0.0);
    assert!(d.u.iter().chain(&d.z).all(|v| v.amax() == 0.0));
}

/// `dx/dt = 0`, `y = x + η`, unit weights. The minimizer solves
/// `z' = u + p`, `p' = εz`, `εu = p`, `p(0) = εz(0)`, `z(T) + p(T) = 1`,
/// so `z'' = (1 + ε)z` and `p = εz'/(1+ε)`.
#[test]
fn scalar_system_matches_hyperbolic_solution() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let sys = DaeSystem::new(one.clone(), DMatrix::zeros(1, 1), one.clone(), 0.0, 1.0);
    let w = UncertaintyModel::new(one.clone(), one.clone(), one.clone());
    let cs = to_canonical(&sys, &w, &svd_reduce(&sys.f)).unwrap();
    let eps = 0.1;
    let g = grid(2000);
    let d = tikhonov_minimize(&cs, &DVector::from_element(1, 1.0), eps, &g).unwrap();

    let a = (1.0 + eps).sqrt();
    // z = c (cosh(at) + β sinh(at)) with p(0) = εz(0) ⇒ εaβ/(1+ε) = ε ⇒ β = (1+ε)/a = a.
    let shape = |t: f64| (a * t).cosh() + a * (a * t).sinh();
    let dshape = |t: f64| a * (a * t).sinh() + a * a * (a * t).cosh();
    let c = 1.0 / (shape(1.0) + eps * dshape(1.0) / (1.0 + eps));
    for (k, t) in g.nodes().enumerate().step_by(250) {
        assert!((d.z[k][0] - c * shape(t)).abs() < 1e-5, "t={t}: {} vs {}", d.z[k][0], c * shape(t));
        // Node values of u at the ends carry a first-order boundary error.
        let tol = if k == 0 || k == g.steps() { 1e-3 } else { 1e-5 };
        let u = c * dshape(t) / (1.0 + eps);
        assert!((d.u[k][0] - u).abs() < tol, "t={t}: {} vs {u}", d.u[k][0]);
    }
}

#[test]
fn minimizer_is_strict() {
    let cs = canon();
    let g = grid(100);
    let l = dir(0.3, 1.0);
    let eps = 1e-2;
    let best = tikhonov_minimize(&cs, &l, eps, &g).unwrap();
    let mut seed = 7u64;
    let mut next = || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    for _ in 0..100 {
        let z: Vec<_> = best.z.iter().map(|v| v.map(|x| x + 1e-3 * next())).collect();
        let u: Vec<_> = best.u.iter().map(|v| v.map(|x| x + 1e-3 * next())).collect();
        let (delta, omega) = tikhonov_terms(&cs, &l, eps, &g, &u, &z, &best.d).unwrap();
        assert!(delta + eps * omega > best.tikhonov_value);
    }
}

#[test]
fn filter_duals_match_direct_minimizer() {
    let cs = canon();
    let (eps, g) = (1e-4, grid(1000));
    let l = dir(0.0, 1.0);
    let d = tikhonov_minimize(&cs, &l, eps, &g).unwrap();
    let run = run_estimate(&cs, &l, eps, &g, None, &FilterOptions::default()).unwrap();
    let duals = reconstruct_duals(&cs, &run.gains, &run.z1).unwrap();
    let stride = run.gains.grid.steps() / g.steps();
    let u: Vec<_> = (0..=g.steps()).map(|k| duals.u[k * stride].clone()).collect();
    let z: Vec<_> = (0..=g.steps()).map(|k| duals.z(k * stride)).collect();
    assert!(rel_l2(&u, &d.u, &g) < 1e-3, "{}", rel_l2(&u, &d.u, &g));
    assert!(rel_l2(&z, &d.z, &g) < 1e-3);
    let rel = (run.report.tikhonov_value - d.tikhonov_value).abs() / d.tikhonov_value;
    assert!(rel < 1e-3, "{rel}");
}

#[test]
fn worst_case_error_of_exact_weights_is_the_reduced_cost() {
    let cs = canon();
    let g = grid(1000);
    let u = example::optimal_weights(1.0, &g);
    let wce = worst_case_error(&cs, &dir(0.0, 1.0), &u, &g).unwrap();
    let z2: Vec<f64> = g.nodes().map(|t| example::dual(t, 1.0, 1.0)).collect();
    let u3: Vec<f64> = u.iter().map(|v| v[2]).collect();
    let reduced = example::reduced_cost(&z2, &u3, &g);
    assert!((wce.value - reduced).abs() < 1e-6 * reduced, "{} vs {reduced}", wce.value);
    assert!((wce.value - example::gain(1.0)).abs() < 1e-3);
}

#[test]
fn worst_case_error_of_zero_is_zero() {
    let g = grid(20);
    let u = vec![DVector::zeros(3); g.node_count()];
    assert_eq!(worst_case_error(&canon(), &dir(0.0, 0.0), &u, &g).unwrap().value, 0.0);
}

#[test]
fn non_observable_direction_has_infinite_error() {
    let g = grid(200);
    let u = example::optimal_weights(1.0, &g);
    let err = worst_case_error(&canon(), &dir(1.0, 1.0), &u, &g);
    assert!(matches!(err, Err(Error::Infinite { .. })), "{err:?}");
}

#[test]
fn support_of_unit_ball_is_the_norm() {
    let g = grid(10);
    let id = DMatrix::identity(2, 2);
    let q = MatrixEvaluator::constant(id.clone());
    let a = DVector::from_row_slice(&[1.0, 0.0]);
    let z = vec![DVector::zeros(2); g.node_count()];
    assert_eq!(ellipsoid_support(&a, &z, &id, &q, &g).unwrap(), 1.0);
    assert_eq!(ellipsoid_support(&DVector::zeros(2), &z, &id, &q, &g).unwrap(), 0.0);
}

#[test]
fn support_dominates_sampled_boundary() {
    let q0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 0.5]);
    let a = DVector::from_row_slice(&[0.7, -1.3]);
    let g = grid(2);
    let q = MatrixEvaluator::constant(DMatrix::identity(2, 2));
    let z = vec![DVector::zeros(2); 3];
    let exact = ellipsoid_support(&a, &z, &q0, &q, &g).unwrap();
    // Boundary of ⟨Q0x, x⟩ = 1 is Q0^{-½}·(unit circle).
    let root = crate::numerics::spd_sqrt_inv(&q0, "q0").unwrap();
    let best = (0..100_000)
        .map(|i| {
            let th = i as f64 * std::f64::consts::TAU / 100_000.0;
            (&root * DVector::from_row_slice(&[th.cos(), th.sin()])).dot(&a)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(best <= exact + 1e-12 && best > 0.99 * exact);
}

#[test]
#[ignore]
fn print_oracle_agreement() {
    let cs = canon();
    let l = dir(0.0, 1.0);
    for (eps, n) in [(1e-4, 1000), (1e-4, 2000), (1e-4, 4000), (1e-6, 4000)] {
        let g = grid(n);
        let d = tikhonov_minimize(&cs, &l, eps, &g).unwrap();
        let run = run_estimate(&cs, &l, eps, &g, None, &FilterOptions::default()).unwrap();
        let duals = reconstruct_duals(&cs, &run.gains, &run.z1).unwrap();
        let stride = run.gains.grid.steps() / g.steps();
        let u: Vec<_> = (0..=g.steps()).map(|k| duals.u[k * stride].clone()).collect();
        let z: Vec<_> = (0..=g.steps()).map(|k| duals.z(k * stride)).collect();
        let (de, om) = tikhonov_terms(&cs, &l, eps, &g, &u, &z, &duals.d()).unwrap();
        eprintln!(
            "eps={eps:e} N={n}: u {:.3e} z {:.3e} | T oracle {:.12e} filter {:.12e} rel {:.3e} | filter-at-oracle-functional {:.12e} | omega {:.8} cond {:.2e}",
            rel_l2(&u, &d.u, &g),
            rel_l2(&z, &d.z, &g),
            d.tikhonov_value,
            run.report.tikhonov_value,
            (run.report.tikhonov_value - d.tikhonov_value).abs() / d.tikhonov_value,
            de + eps * om,
            d.omega,
            d.condition_estimate
        );
    }
}
