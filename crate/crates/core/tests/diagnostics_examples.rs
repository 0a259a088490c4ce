use std::f64::consts::PI;

use duelgrad::diagnostics::{
    check_fkm_identity, descent_alignment, estimate_ctilde, linear_alignment_bound, linear_progress_decrement,
    roundwise_progress_check, scaled_gradient_estimate, McConfig,
};
use duelgrad::objectives::Objective;
use duelgrad::solver::{tune_linear, ProblemScale};
use duelgrad::{derived_rng, BallDomain, Quadratic, TransferFunction, Vector};
use rand::Rng;

const N: u64 = 1_000_000;

fn v(c: &[f64]) -> Vector {
    Vector::new(c.to_vec()).unwrap()
}

fn identity_2d() -> Quadratic {
    Quadratic::from_eigenvalues(&[1.0, 1.0], Vector::zeros(2), BallDomain::centered(2, 2.0).unwrap()).unwrap()
}

/// E|u₁| on the unit sphere in ℝ^d, from r(1) = 1, r(2) = 2/π and
/// r(d + 2) = r(d)·d/(d + 1) (Wallis-type ratio of Beta integrals).
fn mean_abs_coordinate(dim: usize) -> f64 {
    let mut r = if dim % 2 == 1 { 1.0 } else { 2.0 / PI };
    let mut k = if dim % 2 == 1 { 1 } else { 2 };
    while k < dim {
        r *= k as f64 / (k as f64 + 1.0);
        k += 2;
    }
    r
}

#[test]
fn recursion_oracle_matches_known_values() {
    assert_eq!(mean_abs_coordinate(1), 1.0);
    assert!((mean_abs_coordinate(2) - 2.0 / PI).abs() < 1e-15);
    assert!((mean_abs_coordinate(3) - 0.5).abs() < 1e-15);
    assert!((mean_abs_coordinate(4) - 4.0 / (3.0 * PI)).abs() < 1e-15);
}

#[test]
fn ctilde_matches_the_closed_form() {
    for (i, dim) in [1usize, 2, 3, 5, 10, 50, 200].into_iter().enumerate() {
        let report = estimate_ctilde(dim, &McConfig::new(N, 40 + i as u64)).unwrap();
        let est = report.estimate.scalar().unwrap();
        let exact = (dim as f64).sqrt() * mean_abs_coordinate(dim);
        assert!(report.passed(), "d={dim}: {report:?}");
        assert!(
            (est - exact).abs() <= 4.0 * report.std_error + 1e-12,
            "d={dim}: {est} vs {exact}"
        );
    }
}

#[test]
fn ctilde_low_dimensional_examples() {
    let c2 = estimate_ctilde(2, &McConfig::new(N, 1))
        .unwrap()
        .estimate
        .scalar()
        .unwrap();
    let c3 = estimate_ctilde(3, &McConfig::new(N, 2))
        .unwrap()
        .estimate
        .scalar()
        .unwrap();
    assert!((c2 - 0.9003).abs() < 0.002, "{c2}");
    assert!((c3 - 0.8660).abs() < 0.002, "{c3}");
}

#[test]
fn fkm_identity_for_random_vectors() {
    let mut rng = derived_rng(2024, 7);
    for dim in [2usize, 3, 10] {
        for i in 0..20 {
            let a = Vector::new((0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
            let report = check_fkm_identity(&a, &McConfig::new(200_000, 1000 * dim as u64 + i)).unwrap();
            assert!(report.passed(), "d={dim}, a={a:?}: {report:?}");
        }
    }
}

#[test]
fn fkm_examples() {
    let report = check_fkm_identity(&v(&[1.0, 2.0, 3.0]), &McConfig::new(N, 3)).unwrap();
    assert!(report.passed());
    let target = report.target.unwrap();
    assert_eq!(target.coords(), &[1.0 / 3.0, 2.0 / 3.0, 1.0]);

    let report = check_fkm_identity(&Vector::basis(2, 0), &McConfig::new(N, 4)).unwrap();
    let est = report.estimate.coords();
    assert!((est[0] - 0.5).abs() < 0.004 && est[1].abs() < 0.004, "{est:?}");
}

#[test]
fn linear_alignment_clears_the_closed_form_bound() {
    let f = identity_2d();
    let tf = TransferFunction::linear(1.0).unwrap();
    assert!((linear_alignment_bound(2, 0.1, 1.0, 0.5, 1.0) - 0.049).abs() < 1e-15);
    let report = descent_alignment(&v(&[1.0, 0.0]), &f, &tf, 0.1, &McConfig::new(N, 5)).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!((report.detail("bound").unwrap() - 0.049).abs() < 1e-12);
}

#[test]
fn sign_alignment_is_the_mean_absolute_coordinate() {
    // o = sign(u·w) exactly for the symmetric quadratic, so E[o u·w] = ‖w‖ E|u₁|.
    let f = identity_2d();
    let w = v(&[1.0, 0.0]);
    let report = descent_alignment(&w, &f, &TransferFunction::Sign, 1e-4, &McConfig::new(N, 6)).unwrap();
    let ctilde = estimate_ctilde(2, &McConfig::new(N, 7))
        .unwrap()
        .estimate
        .scalar()
        .unwrap();
    let est = report.estimate.scalar().unwrap();
    assert!(report.passed());
    assert!(
        (est - ctilde / 2f64.sqrt()).abs() < 4.0 * report.std_error + 0.003,
        "{est}"
    );
    assert!((est - 2.0 / PI).abs() < 4.0 * report.std_error, "{est}");
}

#[test]
fn alignment_is_antisymmetric_under_reflection() {
    let star = v(&[0.2, -0.1]);
    let f = Quadratic::from_eigenvalues(&[3.0, 1.0], star.clone(), BallDomain::centered(2, 2.0).unwrap()).unwrap();
    let tf = TransferFunction::sigmoid(2.0).unwrap();
    let w = v(&[0.9, 0.4]);
    let reflected = star.scale(2.0).add_scaled(-1.0, &w);
    let a = descent_alignment(&w, &f, &tf, 0.05, &McConfig::new(N, 8)).unwrap();
    let b = descent_alignment(&reflected, &f, &tf, 0.05, &McConfig::new(N, 9)).unwrap();
    let (ea, eb) = (a.estimate.scalar().unwrap(), b.estimate.scalar().unwrap());
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!(ea > 0.0);
    // Both o and w - w* flip sign, so the alignment is unchanged ...
    assert!((ea - eb).abs() <= 4.0 * se, "{ea} vs {eb}");
    // ... while E[o u] itself is negated.
    let ga = scaled_gradient_estimate(&w, &f, &tf, 0.05, &McConfig::new(N, 10)).unwrap();
    let gb = scaled_gradient_estimate(&reflected, &f, &tf, 0.05, &McConfig::new(N, 11)).unwrap();
    let band = 4.0 * (ga.std_error.powi(2) + gb.std_error.powi(2)).sqrt();
    for (x, y) in ga.estimate.coords().iter().zip(gb.estimate.coords()) {
        assert!((x + y).abs() <= band, "{x} vs {y}");
    }
}

#[test]
fn linear_progress_brackets_the_predicted_decrement() {
    let f = identity_2d();
    let tf = TransferFunction::linear(1.0).unwrap();
    let scale = ProblemScale::new(0.4, 1.0, 2, 4.0).unwrap();
    let tuning = tune_linear(&scale, 1.0).unwrap();
    assert!((tuning.gamma - 0.2f64.sqrt()).abs() < 1e-15);
    let w = v(&[1.0, 0.0]);
    let predicted = linear_progress_decrement(2, tuning.eta, tuning.gamma, 1.0, 0.5, 1.0);
    assert!(predicted > 0.0);
    let report =
        roundwise_progress_check(&w, tuning.eta, tuning.gamma, &f, &tf, f.domain(), &McConfig::new(N, 10)).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!((report.detail("predicted_decrement").unwrap() - predicted).abs() < 1e-15);
}

#[test]
fn sign_progress_is_strict_descent() {
    let f = identity_2d();
    let w = v(&[0.8, -0.6]);
    let cfg = McConfig::new(N, 11);
    let report = roundwise_progress_check(&w, 0.01, 0.01, &f, &TransferFunction::Sign, f.domain(), &cfg).unwrap();
    assert!(report.passed());
    let est = report.estimate.scalar().unwrap();
    assert!(est < 1.0 - cfg.z * report.std_error, "{est}");
}

#[test]
fn scaled_gradient_points_along_the_gradient() {
    let f = Quadratic::from_eigenvalues(&[2.0, 0.5], Vector::zeros(2), BallDomain::centered(2, 2.0).unwrap()).unwrap();
    let w = v(&[0.7, 0.9]);
    for (tf, gamma) in [
        (TransferFunction::Sign, 1e-3),
        (TransferFunction::linear(1.0).unwrap(), 0.05),
    ] {
        let report = scaled_gradient_estimate(&w, &f, &tf, gamma, &McConfig::new(N, 12)).unwrap();
        assert!(report.passed());
        let cosine = report.detail("cosine").unwrap();
        assert!(cosine >= 0.99, "{}: cosine {cosine}", tf.name());
        assert!(report.detail("magnitude_ratio").unwrap() > 0.0);
    }
}
