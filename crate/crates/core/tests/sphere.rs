use duelgrad::geometry::sample_unit_sphere;
use duelgrad::{derived_rng, BallDomain, ConvexDomain, Vector};
use proptest::prelude::*;

const N: usize = 1_000_000;

fn draws(dim: usize, seed: u64) -> Vec<Vector> {
    let mut rng = derived_rng(seed, 0);
    (0..N).map(|_| sample_unit_sphere(dim, &mut rng).unwrap()).collect()
}

#[test]
#[allow(clippy::needless_range_loop)]
fn moments_in_three_dimensions() {
    let samples = draws(3, 17);
    let n = N as f64;
    let mut mean = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    let mut abs_first = 0.0;
    for u in &samples {
        assert!((u.norm() - 1.0).abs() < 1e-12);
        for i in 0..3 {
            mean[i] += u[i] / n;
            for j in 0..3 {
                second[i][j] += u[i] * u[j] / n;
            }
        }
        abs_first += u[0].abs() / n;
    }
    // sd of u_i is 1/√3, of u_i u_j at most 1/√5
    let band = 4.0 / n.sqrt();
    for i in 0..3 {
        assert!(mean[i].abs() < band, "mean[{i}] = {}", mean[i]);
        for j in 0..3 {
            let target = if i == j { 1.0 / 3.0 } else { 0.0 };
            assert!((second[i][j] - target).abs() < band, "E[u{i}u{j}] = {}", second[i][j]);
        }
    }
    // hat-box: u_1 is uniform on [-1, 1]
    assert!((abs_first - 0.5).abs() < band);
}

#[test]
fn projections_onto_any_axis_share_a_law() {
    // For every unit v: E[(v·u)²] = 1/d, E[(v·u)⁴] = 3/(d(d+2)).
    let dim = 4;
    let samples = draws(dim, 23);
    let n = N as f64;
    let axes = [
        Vector::basis(dim, 0),
        Vector::new(vec![0.5, 0.5, 0.5, 0.5]).unwrap(),
        Vector::new(vec![0.6, 0.0, -0.8, 0.0]).unwrap(),
    ];
    for v in &axes {
        let (mut m2, mut m4) = (0.0, 0.0);
        for u in &samples {
            let x = v.dot(u);
            m2 += x * x / n;
            m4 += x.powi(4) / n;
        }
        assert!((m2 - 0.25).abs() < 4.0 * 0.2 / n.sqrt(), "second moment {m2}");
        assert!((m4 - 3.0 / 24.0).abs() < 4.0 * 0.2 / n.sqrt(), "fourth moment {m4}");
    }
}

#[test]
fn one_dimensional_sphere_is_two_points() {
    let mut rng = derived_rng(5, 0);
    let mut plus = 0usize;
    for _ in 0..10_000 {
        let u = sample_unit_sphere(1, &mut rng).unwrap();
        assert_eq!(u[0].abs(), 1.0);
        plus += (u[0] > 0.0) as usize;
    }
    assert!((4_800..5_200).contains(&plus));
}

fn point(dim: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-10.0f64..10.0, dim).prop_map(|c| Vector::new(c).unwrap())
}

proptest! {
    #[test]
    fn projection_is_idempotent(c in point(3), x in point(3), r in 0.01f64..5.0) {
        let ball = BallDomain::new(c, r).unwrap();
        let once = ball.project(&x).unwrap();
        prop_assert!(ball.contains(&once));
        prop_assert_eq!(ball.project(&once).unwrap(), once);
    }

    #[test]
    fn projection_is_nonexpansive(x in point(4), y in point(4), r in 0.01f64..5.0) {
        let ball = BallDomain::centered(4, r).unwrap();
        let (px, py) = (ball.project(&x).unwrap(), ball.project(&y).unwrap());
        prop_assert!(px.dist(&py) <= x.dist(&y) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn projection_is_the_nearest_feasible_point(x in point(2), z in point(2), r in 0.1f64..5.0) {
        let ball = BallDomain::centered(2, r).unwrap();
        let px = ball.project(&x).unwrap();
        let pz = ball.project(&z).unwrap();
        prop_assert!(px.dist(&x) <= pz.dist(&x) + 1e-9);
    }
}
