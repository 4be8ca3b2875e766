use grt_lab::kernel::{bspline, phi1d_at_integer_exact, InterpKernel};
use grt_lab::GrtError;
use nalgebra::Vector3;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = Ratio<i64>;

/// Cox-de Boor recursion in exact rationals,
/// `B_n(t) = t/n B_{n-1}(t) + (n+1-t)/n B_{n-1}(t-1)` with `B_0` the
/// indicator of `[0, 1)`.
fn cox_de_boor(n: i64, t: Q) -> Q {
    if n == 0 {
        return if t >= Q::from_integer(0) && t < Q::from_integer(1) {
            Q::from_integer(1)
        } else {
            Q::from_integer(0)
        };
    }
    let nq = Q::from_integer(n);
    t / nq * cox_de_boor(n - 1, t) + (Q::from_integer(n + 1) - t) / nq * cox_de_boor(n - 1, t - 1)
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn phi1d_oracle(t: Q) -> Q {
    let half = Q::new(1, 2);
    let one = Q::from_integer(1);
    let two = Q::from_integer(2);
    half * (cox_de_boor(3, t) + cox_de_boor(3, t - two)) + Q::from_integer(4) * cox_de_boor(3, t - one)
        - two * (cox_de_boor(4, t) + cox_de_boor(4, t - one))
}

#[test]
fn bspline_matches_cox_de_boor_in_rationals() {
    assert_eq!(cox_de_boor(3, Q::from_integer(2)), Q::new(2, 3));
    assert_eq!(cox_de_boor(4, Q::from_integer(1)), Q::new(1, 24));
    for n in 0..=4 {
        for i in -8..=48 {
            let t = Q::new(i, 8);
            let got = bspline(n as usize, to_f64(t)).unwrap();
            assert!((got - to_f64(cox_de_boor(n, t))).abs() < 1e-14, "B{n}({t})");
        }
    }
    assert_eq!(bspline(3, -0.5).unwrap(), 0.0);
    assert!(matches!(bspline(5, 1.0), Err(GrtError::InvalidArgument(_))));
}

#[test]
fn phi1d_matches_blended_oracle() {
    let k = InterpKernel::new();
    assert_eq!(phi1d_oracle(Q::from_integer(3)), Q::from_integer(1));
    assert_eq!(phi1d_oracle(Q::from_integer(2)), Q::from_integer(0));
    for j in 0..=6 {
        assert_eq!(phi1d_at_integer_exact(j), phi1d_oracle(Q::from_integer(j)));
    }
    for i in -4..=52 {
        let t = Q::new(i, 8);
        assert!((k.phi1d(to_f64(t)) - to_f64(phi1d_oracle(t))).abs() < 1e-14);
    }
    assert_eq!(k.phi1d(3.0), 1.0);
    assert_eq!(k.phi1d(2.0), 0.0);
    assert_eq!(k.phi1d(6.5), 0.0);
    assert_eq!((k.support_1d(), k.center_shift()), ((0.0, 6.0), 3.0));
}

#[test]
fn phi3d_examples() {
    let k = InterpKernel::new();
    assert_eq!(k.phi3d(&Vector3::zeros()), 1.0);
    assert_eq!(k.phi3d(&Vector3::new(1.0, 0.0, 0.0)), 0.0);
    assert_eq!(k.phi3d(&Vector3::new(0.5, 0.0, 0.0)), k.phi1d(3.5));
    assert_eq!(k.phi3d(&Vector3::new(0.2, 3.0, -0.1)), 0.0);
    assert_eq!(k.phi3d_hessian(&Vector3::zeros())[(0, 1)], 0.0);
    assert_eq!(k.phi3d_hessian(&Vector3::new(4.0, 0.0, 0.0)), nalgebra::Matrix3::zeros());
}

#[test]
fn hessian_matches_finite_differences() {
    let k = InterpKernel::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-4;
    let mut tested = 0;
    while tested < 200 {
        let u = Vector3::from_fn(|_, _| rng.random_range(-3.0..3.0));
        // second differences across a knot of phi'' are only first order
        if u.iter().any(|c: &f64| (c - c.round()).abs() < 3.0 * h) {
            continue;
        }
        tested += 1;
        let f = |v: Vector3<f64>| k.phi3d(&v);
        let e = |i: usize| Vector3::ith(i, h);
        let hess = k.phi3d_hessian(&u);
        let scale = hess.amax().max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                let fd = if i == j {
                    (f(u + e(i)) - 2.0 * f(u) + f(u - e(i))) / (h * h)
                } else {
                    (f(u + e(i) + e(j)) - f(u + e(i) - e(j)) - f(u - e(i) + e(j))
                        + f(u - e(i) - e(j)))
                        / (4.0 * h * h)
                };
                assert!((fd - hess[(i, j)]).abs() < 1e-6 * scale, "{u:?} ({i},{j})");
            }
        }
    }
}

#[test]
fn exactness_examples() {
    let k = InterpKernel::new();
    let r = |m, u: [f64; 3]| k.check_exactness(m, &Vector3::from(u)).unwrap().abs();
    assert!(r([0, 0, 0], [0.3, 0.7, 0.1]) < 1e-10);
    assert!(r([0, 0, 0], [-4.2, 7.9, 0.0]) < 1e-10);
    assert!(r([1, 0, 0], [0.3, 0.7, 0.1]) < 1e-10);
    assert!(r([2, 0, 0], [0.5, 0.5, 0.5]) < 1e-9);
    assert!(r([1, 1, 0], [0.25, 0.9, 0.4]) < 1e-9);
    assert!(k.check_exactness([3, 0, 0], &Vector3::zeros()).is_err());
}

#[test]
fn radon_profile_basics() {
    let k = InterpKernel::new();
    let x = Vector3::x();
    assert!((k.radon_kernel(&x, 0.0).unwrap() - 1.0).abs() < 1e-15);
    assert!(matches!(
        k.radon_kernel(&Vector3::zeros(), 0.0),
        Err(GrtError::InvalidArgument(_))
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let d = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let p = k.radon_profile(&d).unwrap();
        let n = d.norm();
        assert!((p.tail(-10.0 * n) - 1.0).abs() < 1e-8);
        assert_eq!(p.tail(10.0 * n), 0.0);
        assert!((p.tail(0.0) - 0.5).abs() < 1e-8);
        for i in 0..50 {
            let s = 0.1 * i as f64 * n;
            assert!((p.density(s) - p.density(-s)).abs() < 1e-9);
        }
    }
}

/// `(1/delta) int_{|d.y - s| < delta/2} phi(y) dy` by uniform sampling of
/// the support cube.
fn slab_estimate(k: &InterpKernel, d: &Vector3<f64>, s: f64, delta: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let y = Vector3::from_fn(|_, _| rng.random_range(-3.0..3.0));
        let v = if (d.dot(&y) - s).abs() < 0.5 * delta {
            216.0 * k.phi3d(&y) / delta
        } else {
            0.0
        };
        sum += v;
        sq += v * v;
    }
    let mean = sum / n as f64;
    let var = (sq / n as f64 - mean * mean) / (n as f64 - 1.0);
    (mean, var.sqrt())
}

#[test]
fn radon_profile_matches_slab_monte_carlo() {
    let k = InterpKernel::new();
    let dirs = [
        Vector3::new(-0.18164, 0.25, 0.95106),
        Vector3::new(1.0, 1.0, 0.0) / 2f64.sqrt(),
        Vector3::new(0.3, -0.5, 0.6),
    ];
    for (i, d) in dirs.iter().enumerate() {
        let p = k.radon_profile(d).unwrap();
        for (j, s) in [0.0, 0.4, 1.1].into_iter().enumerate() {
            let delta = 1e-2;
            // slab average of the profile itself; the mesh resolves delta
            let avg = (0..=100)
                .map(|q| p.density(s - 0.5 * delta + delta * q as f64 / 100.0))
                .sum::<f64>()
                / 101.0;
            let (mc, se) = slab_estimate(&k, d, s, delta, 1_000_000, (10 * i + j) as u64);
            assert!((mc - avg).abs() < 3.0 * se, "dir {i} s {s}: {mc} +- {se} vs {avg}");
        }
    }
}
