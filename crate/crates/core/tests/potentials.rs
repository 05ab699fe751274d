use dislocore::geometry::SQRT3;
use dislocore::potential::{Interlayer, Morse, PairPotential, StillingerWeber, ThreeBodyPotential};
use dislocore::{Error, Mat2, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scalar Stillinger-Weber three-body term written from the bond lengths
/// and the enclosed angle.
fn sw_scalar(lambda: f64, gamma: f64, rc: f64, r_ij: f64, r_ik: f64, cos_theta: f64) -> f64 {
    if r_ij >= rc || r_ik >= rc {
        return 0.0;
    }
    lambda * (gamma / (r_ij - rc) + gamma / (r_ik - rc)).exp() * (cos_theta + 1.0 / 3.0).powi(2)
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(a.abs()).max(b.abs())
}

fn random_bond(rng: &mut ChaCha8Rng) -> Vec2 {
    let r = rng.random_range(0.7..1.45);
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    Vec2::new(r * t.cos(), r * t.sin())
}

#[test]
fn tetrahedral_angle_gives_zero() {
    let sw = StillingerWeber::new(1.3, 0.4, 1.8).unwrap();
    let c: f64 = -1.0 / 3.0;
    let s = (1.0 - c * c).sqrt();
    for (r1, r2) in [(0.9, 1.1), (1.0, 1.0), (1.2, 0.8)] {
        let v = sw.value(Vec2::new(r1, 0.0), Vec2::new(r2 * c, r2 * s)).unwrap();
        assert!(v.abs() < 1e-15, "{v}");
    }
}

#[test]
fn sw_matches_scalar_form_at_120_degrees() {
    let sw = StillingerWeber::new(1.3, 0.4, 1.8).unwrap();
    let (r1, r2) = (0.9, 1.1);
    let t = 2.0 * std::f64::consts::PI / 3.0;
    let v = sw.value(Vec2::new(r1, 0.0), Vec2::new(r2 * t.cos(), r2 * t.sin())).unwrap();
    let oracle = sw_scalar(1.3, 0.4, 1.8, r1, r2, -0.5);
    assert!(rel(v, oracle, 0.0) < 1e-14);
    // (−1/2 + 1/3)² = 1/36.
    let closed = 1.3 * (0.4 / (r1 - 1.8) + 0.4 / (r2 - 1.8)).exp() / 36.0;
    assert!(rel(v, closed, 0.0) < 1e-14);
}

#[test]
fn sw_matches_scalar_form_on_random_bonds() {
    let sw = StillingerWeber::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (x, y) = (random_bond(&mut rng), random_bond(&mut rng));
        let c = x.dot(&y) / (x.norm() * y.norm());
        let oracle = sw_scalar(sw.lambda, sw.gamma, sw.cutoff, x.norm(), y.norm(), c);
        assert!(rel(sw.value(x, y).unwrap(), oracle, 1e-300) < 1e-13);
        assert_eq!(sw.eval(x, y).unwrap().value, sw.value(x, y).unwrap());
    }
}

#[test]
fn sw_symmetries() {
    let sw = StillingerWeber::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let (x, y) = (random_bond(&mut rng), random_bond(&mut rng));
        let v = sw.value(x, y).unwrap();
        assert!((v - sw.value(-x, -y).unwrap()).abs() <= 1e-14);
        assert!((v - sw.value(y, x).unwrap()).abs() <= 1e-14);
    }
}

#[test]
fn sw_vanishes_beyond_cutoff() {
    let sw = StillingerWeber::default();
    let e = sw.eval(Vec2::new(1.6, 0.0), Vec2::new(0.0, 1.0)).unwrap();
    assert_eq!(e.value, 0.0);
    assert_eq!(e.d20, Mat2::zeros());
    assert_eq!(sw.value(Vec2::new(0.0, 1.0), Vec2::new(0.3, 2.0)).unwrap(), 0.0);
}

#[test]
fn sw_rejects_collapsed_bonds() {
    let sw = StillingerWeber::default();
    assert!(matches!(sw.value(Vec2::new(1e-10, 0.0), Vec2::new(1.0, 0.0)), Err(Error::SingularConfiguration(_))));
    assert!(matches!(sw.eval(Vec2::new(1.0, 0.0), Vec2::zeros()), Err(Error::SingularConfiguration(_))));
    assert!(StillingerWeber::new(1.0, -1.0, 1.6).is_err());
    assert!(StillingerWeber::new(1.0, 0.2, 0.0).is_err());
}

fn grad_fd(f: impl Fn(Vec2, Vec2) -> f64, x: Vec2, y: Vec2, h: f64) -> (Vec2, Vec2) {
    let mut g1 = Vec2::zeros();
    let mut g2 = Vec2::zeros();
    for k in 0..2 {
        let mut e = Vec2::zeros();
        e[k] = h;
        g1[k] = (f(x + e, y) - f(x - e, y)) / (2.0 * h);
        g2[k] = (f(x, y + e) - f(x, y - e)) / (2.0 * h);
    }
    (g1, g2)
}

#[test]
fn sw_derivatives_match_finite_differences() {
    let sw = StillingerWeber::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let (x, y) = (random_bond(&mut rng), random_bond(&mut rng));
        let e = sw.eval(x, y).unwrap();
        let scale = e.d20.abs().max().max(e.d02.abs().max()).max(e.d1.abs().max()).max(1e-8);
        let (g1, g2) = grad_fd(|a, b| sw.value(a, b).unwrap(), x, y, h);
        for k in 0..2 {
            worst = worst.max(rel(e.d1[k], g1[k], scale)).max(rel(e.d2[k], g2[k], scale));
        }
        // Second derivatives by central differences of the analytic gradient.
        for k in 0..2 {
            let mut d = Vec2::zeros();
            d[k] = h;
            let (p, m) = (sw.eval(x + d, y).unwrap(), sw.eval(x - d, y).unwrap());
            let col20 = (p.d1 - m.d1) / (2.0 * h);
            let col11t = (p.d2 - m.d2) / (2.0 * h);
            let (p, m) = (sw.eval(x, y + d).unwrap(), sw.eval(x, y - d).unwrap());
            let col02 = (p.d2 - m.d2) / (2.0 * h);
            for i in 0..2 {
                worst = worst
                    .max(rel(e.d20[(i, k)], col20[i], scale))
                    .max(rel(e.d11[(k, i)], col11t[i], scale))
                    .max(rel(e.d02[(i, k)], col02[i], scale));
            }
        }
    }
    assert!(worst < 1e-6, "worst relative error {worst:e}");
}

fn default_morse() -> Morse {
    let r_e = 1.0 / SQRT3;
    Morse::new(1.7, 2.0, r_e, Morse::decay_radius(2.0, r_e, 1e-10)).unwrap()
}

#[test]
fn morse_minimum() {
    let m = default_morse();
    let (v, v1, v2) = m.bare(m.r_e);
    assert!((v + m.depth).abs() < 1e-15);
    assert!(v1.abs() < 1e-15);
    assert!((v2 - 2.0 * m.depth * m.width * m.width).abs() < 1e-12);
    // The shift at the cutoff is the decay tolerance times the depth.
    let (w, w1, _) = m.radial(m.r_e);
    assert!((w + m.depth).abs() <= 1.01e-10 * m.depth);
    assert_eq!(w1, v1);
}

#[test]
fn morse_truncation_is_c2() {
    let m = default_morse();
    let h = 1e-6;
    for r in [m.cutoff - m.blend, m.cutoff - 0.5 * m.blend, m.cutoff - 1e-4] {
        let (v, v1, v2) = m.radial(r);
        let fd1 = (m.radial(r + h).0 - m.radial(r - h).0) / (2.0 * h);
        let fd2 = (m.radial(r + h).1 - m.radial(r - h).1) / (2.0 * h);
        assert!((fd1 - v1).abs() < 1e-12 + 1e-6 * v1.abs(), "{r}");
        assert!((fd2 - v2).abs() < 1e-12 + 1e-6 * v2.abs(), "{r}");
        assert!(v.abs() < 1e-8);
    }
    assert_eq!(m.radial(m.cutoff), (0.0, 0.0, 0.0));
    assert_eq!(m.radial(m.cutoff + 1.0), (0.0, 0.0, 0.0));
}

#[test]
fn decay_radius_rule() {
    let r = Morse::decay_radius(2.0, 1.0 / SQRT3, 1e-10);
    assert!((2.0 * (-2.0 * (r - 1.0 / SQRT3)).exp() - 1e-10).abs() < 1e-22);
}

#[test]
fn interlayer_minimum_at_registry() {
    let m = default_morse();
    let u = Interlayer::new(m, m.r_e).unwrap();
    let (v, g, _) = u.eval(Vec2::zeros());
    assert!((v + m.depth).abs() <= 1.01e-10 * m.depth);
    assert_eq!(g, Vec2::zeros());
    let s = u.scaled(3.0);
    assert!((s.value(Vec2::new(0.2, 0.1)) - 3.0 * u.value(Vec2::new(0.2, 0.1))).abs() < 1e-14);
}

#[test]
fn interlayer_derivatives_match_finite_differences() {
    let u = Interlayer::new(default_morse(), 1.0 / SQRT3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let h = 1e-5;
    let mut pts = vec![Vec2::new(0.3, 0.1)];
    for _ in 0..100 {
        pts.push(Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)));
    }
    for xi in pts {
        let (v, g, hs) = u.eval(xi);
        let scale = hs.abs().max().max(g.abs().max()).max(1e-10);
        for k in 0..2 {
            let mut e = Vec2::zeros();
            e[k] = h;
            let fd = (u.value(xi + e) - u.value(xi - e)) / (2.0 * h);
            assert!(rel(g[k], fd, scale) < 1e-6);
            let col = (u.eval(xi + e).1 - u.eval(xi - e).1) / (2.0 * h);
            for i in 0..2 {
                assert!(rel(hs[(i, k)], col[i], scale) < 1e-6, "{xi:?}");
            }
        }
        let (vx, gx, hx) = u.eval_x(xi);
        assert!((vx - v).abs() < 1e-14);
        assert!((gx - g.x).abs() <= 1e-13 * scale);
        assert!((hx - hs[(0, 0)]).abs() <= 1e-12 * scale);
        assert!((u.value(-xi) - v).abs() < 1e-14);
    }
}

#[test]
fn pair_tail_decays_monotonically() {
    let m = default_morse();
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for k in 0..12 {
        let r = 2.0 * 1.25_f64.powi(k);
        let (v, v1, _) = m.radial(r);
        assert!(v.abs() <= prev.0 && v1.abs() <= prev.1);
        prev = (v.abs(), v1.abs());
    }
}

#[test]
fn invalid_morse_parameters() {
    assert!(Morse::new(1.0, 0.0, 0.5, 2.0).is_err());
    assert!(Morse::new(1.0, 2.0, 0.5, 0.4).is_err());
    assert!(Morse::new(f64::NAN, 2.0, 0.5, 2.0).is_err());
    assert!(Interlayer::new(default_morse(), 0.0).is_err());
}
