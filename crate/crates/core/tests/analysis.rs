mod common;

use common::*;
use dislocore::atomistic::{Constraint, DofMap};
use dislocore::banded::norm;
use dislocore::geometry::{Layer, Sublattice, SQRT3};
use dislocore::interp::{gradient_weights, linear_coefficients, square_integral, Interpolant};
use dislocore::norms::{diff, perp_pairs, x0_norm_interpolated, xeps_norm_sq, DiffVariant, XEpsGram, PERP_WEIGHT};
use dislocore::pn::{PnOptions, PnProfile, SlipLine};
use dislocore::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn differences_of_constant_and_linear_fields() {
    let lat = lattice(10.0, 2, 3.8);
    let spec = lat.spec;
    let eps = 0.1;
    let c = 1.7;
    let konst = vec![3.0; lat.len()];
    let lin: Vec<f64> = lat.atoms().iter().map(|a| c * eps * a.pos.x).collect();
    for (s, variant, shift) in [
        ((1, 0), DiffVariant::Plain, Vec2::zeros()),
        ((0, 1), DiffVariant::Plain, Vec2::zeros()),
        ((-1, 1), DiffVariant::PlusP, spec.p()),
        ((1, -1), DiffVariant::MinusP, -spec.p()),
    ] {
        let sx = (spec.cell(s.0, s.1) + shift).x;
        let d0 = diff(&lat, &konst, s, variant, eps);
        let d1 = diff(&lat, &lin, s, variant, eps);
        let mut seen = 0;
        for (id, a) in lat.atoms().iter().enumerate() {
            let applies = match variant {
                DiffVariant::Plain => true,
                DiffVariant::PlusP => a.index.species.sublattice == Sublattice::A,
                DiffVariant::MinusP => a.index.species.sublattice == Sublattice::B,
            };
            if !applies {
                assert!(d0[id].is_none());
                continue;
            }
            if a.interior {
                assert_eq!(d0[id], Some(0.0));
                assert!((d1[id].unwrap() - c * sx).abs() <= 1e-12);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }
}

#[test]
fn second_difference_of_a_quadratic() {
    let lat = lattice(10.0, 1, 3.8);
    let eps = 0.1;
    let f: Vec<f64> = lat.atoms().iter().map(|a| (eps * a.pos.x).powi(2)).collect();
    let ds: Vec<f64> = diff(&lat, &f, (1, 0), DiffVariant::Plain, eps).iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    let dd = diff(&lat, &ds, (-1, 0), DiffVariant::Plain, eps);
    for (a, v) in lat.atoms().iter().zip(dd) {
        if a.interior {
            assert!((v.unwrap() + 2.0).abs() <= 1e-10, "{v:?}");
        }
    }
}

fn odd_field(seed: u64) -> (dislocore::atomistic::AtomisticModel, Vec<f64>) {
    let model = small_model_at(0.1, 15.0, 2);
    let gs = surface_for(&model);
    let profile = PnProfile::solve(&SlipLine::new(&gs), &constants(), &PnOptions::default()).unwrap();
    let map = DofMap::new(&model, Constraint::Dislocation, &model.sample(&profile)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q: Vec<f64> = (0..map.n_dofs()).map(|_| rng.random_range(0.0..0.5)).collect();
    let u = map.expand(&q);
    (model, u)
}

#[test]
fn centred_fields_interpolate_to_zero_on_the_axis() {
    let (model, u) = odd_field(51);
    let lat = &model.lattice;
    let spec = lat.spec;
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for layer in [Layer::Upper, Layer::Lower] {
        // f = u ∓ ¼ is odd under the layer-frame mirror.
        let f: Vec<f64> = lat.atoms().iter().zip(&u).map(|(a, v)| v - 0.25 * a.index.species.layer.sign()).collect();
        let axis = if layer == Layer::Upper { 0.0 } else { spec.d().x };
        for base in [Sublattice::A, Sublattice::B] {
            let tri = lat.triangulate(layer, base).unwrap();
            let ip = Interpolant::new(&tri, &f);
            for _ in 0..100 {
                let y = rng.random_range(0.0..lat.period_height());
                let v = ip.eval(Vec2::new(axis, y)).unwrap();
                assert!(v.abs() <= 1e-12, "{layer:?} {base:?} y = {y}: {v:e}");
            }
        }
    }
}

#[test]
fn interpolation_reproduces_affine_fields() {
    let lat = lattice(10.0, 2, 3.8);
    let (a, c) = (0.37, -1.2);
    let f: Vec<f64> = lat.atoms().iter().map(|at| a * at.pos.x + c).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for layer in [Layer::Upper, Layer::Lower] {
        let tri = lat.triangulate(layer, Sublattice::A).unwrap();
        let ip = Interpolant::new(&tri, &f);
        for t in 0..tri.triangles.len() {
            assert!((ip.gradient(t) - Vec2::new(a, 0.0)).norm() <= 1e-12);
        }
        for _ in 0..200 {
            let q = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            assert!((ip.eval(q).unwrap() - (a * q.x + c)).abs() <= 1e-12);
        }
    }
}

#[test]
fn interpolation_is_linear() {
    let lat = lattice(10.0, 1, 3.8);
    let tri = lat.triangulate(Layer::Upper, Sublattice::B).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    let f: Vec<f64> = (0..lat.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g: Vec<f64> = (0..lat.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let h: Vec<f64> = f.iter().zip(&g).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
    let (fi, gi, hi) = (Interpolant::new(&tri, &f), Interpolant::new(&tri, &g), Interpolant::new(&tri, &h));
    for _ in 0..200 {
        let q = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let want = 2.0 * fi.eval(q).unwrap() - 3.0 * gi.eval(q).unwrap();
        assert!((hi.eval(q).unwrap() - want).abs() <= 1e-12);
    }
}

#[test]
fn triangle_formulas() {
    let lat = lattice(10.0, 1, 3.8);
    let tri = lat.triangulate(Layer::Upper, Sublattice::A).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for t in tri.triangles.iter().take(40) {
        let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let [a, b, c] = linear_coefficients(t, v);
        for k in 0..3 {
            assert!((a * t.pos[k].x + b * t.pos[k].y + c - v[k]).abs() <= 1e-12);
        }
        let w = gradient_weights(t);
        assert!((w[0].iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() - a).abs() <= 1e-12);
        assert!((w[1].iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() - b).abs() <= 1e-12);
        // Edge-midpoint rule, exact for quadratics.
        let mid = [(v[0] + v[1]) / 2.0, (v[1] + v[2]) / 2.0, (v[2] + v[0]) / 2.0];
        let quad = t.area() / 3.0 * mid.iter().map(|m| m * m).sum::<f64>();
        assert!((square_integral(t, v) - quad).abs() <= 1e-14);
    }
}

#[test]
fn x0_norm_closed_forms() {
    let lat = lattice(10.0, 2, 3.8);
    let ec = constants();
    let eps = 0.1;
    let up = lat.triangulate(Layer::Upper, Sublattice::A).unwrap();
    let lo = lat.triangulate(Layer::Lower, Sublattice::A).unwrap();
    let k = 1.0 / (lat.n_y as f64 * SQRT3 * eps);
    // Same ramp on both layers: no disregistry.
    let c = 0.8;
    let f: Vec<f64> = lat.atoms().iter().map(|a| c * eps * lat.spec.frame_position(&a.index).x).collect();
    let n = x0_norm_interpolated(&lat, &ec, eps, &f, &up, &lo).unwrap();
    let area = |t: &dislocore::lattice::Triangulation| t.triangles.iter().map(|t| t.area()).sum::<f64>();
    let want = k * 2.0 * ec.alpha1 * (c * eps).powi(2) * (area(&up) + area(&lo));
    assert!((n.elastic - want).abs() <= 1e-12 * want);
    assert!(n.perp.abs() <= 1e-25);
    // Constant offset of the upper layer: pure disregistry.
    let g: Vec<f64> = lat.atoms().iter().map(|a| if a.index.species.layer == Layer::Upper { 0.3 } else { 0.0 }).collect();
    let n = x0_norm_interpolated(&lat, &ec, eps, &g, &up, &lo).unwrap();
    assert!(n.elastic.abs() <= 1e-20);
    let covered: f64 = up
        .triangles
        .iter()
        .filter(|t| t.vertices.iter().all(|&v| perp_pairs(&lat).iter().any(|&(a, _)| a == v)))
        .map(|t| t.area())
        .sum();
    let want = k * eps * eps * PERP_WEIGHT * 0.09 * covered;
    assert!((n.perp - want).abs() <= 1e-12 * want);
    assert!((n.total() - n.perp).abs() <= 1e-20);
    assert!(x0_norm_interpolated(&lat, &ec, eps, &g, &lo, &up).is_err());
}

#[test]
fn riesz_representative_round_trip() {
    let model = small_model_at(0.1, 12.0, 1);
    let map = DofMap::new(&model, Constraint::Dislocation, &vec![0.0; model.n_atoms()]).unwrap();
    let gram = XEpsGram::new(&model, &map).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let q: Vec<f64> = (0..map.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = gram.gram.matvec(&q);
    let d = gram.dual_norm(&g);
    let diff: Vec<f64> = d.riesz.iter().zip(&q).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-9 * norm(&q));
    assert!(d.residual <= 1e-12);
    let nq = gram.norm_sq(&q);
    assert!((d.value * d.value - nq).abs() <= 1e-10 * nq);
    // Reduced Gram form agrees with the full-vector norm.
    let full = xeps_norm_sq(&model, &map.spread(&q)).unwrap();
    assert!((full - nq).abs() <= 1e-10 * nq);
    // Dual norm is a norm: homogeneity and the triangle inequality.
    let g2: Vec<f64> = (0..map.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sum: Vec<f64> = g.iter().zip(&g2).map(|(a, b)| a + b).collect();
    let (a, b, s) = (gram.dual_norm(&g).value, gram.dual_norm(&g2).value, gram.dual_norm(&sum).value);
    assert!(s <= a + b + 1e-12);
    let scaled: Vec<f64> = g.iter().map(|v| -3.0 * v).collect();
    assert!((gram.dual_norm(&scaled).value - 3.0 * a).abs() <= 1e-10 * a);
}

#[test]
fn discrete_and_continuum_norms_agree_on_smooth_fields() {
    let model = small_model_at(0.05, 90.0, 1);
    let lat = &model.lattice;
    let spec = lat.spec;
    let up = lat.triangulate(Layer::Upper, Sublattice::A).unwrap();
    let lo = lat.triangulate(Layer::Lower, Sublattice::A).unwrap();
    let ec = constants();
    for (su, sl) in [(1.0, 1.0), (1.0, -1.0), (1.0, 0.3)] {
        let f: Vec<f64> = lat
            .atoms()
            .iter()
            .map(|a| {
                let x = model.eps * spec.frame_position(&a.index).x;
                let s = if a.index.species.layer == Layer::Upper { su } else { sl };
                s * (-x * x).exp()
            })
            .collect();
        let xe = xeps_norm_sq(&model, &f).unwrap();
        let x0 = x0_norm_interpolated(lat, &ec, model.eps, &f, &up, &lo).unwrap().total();
        let ratio = xe / x0;
        assert!((0.8..1.25).contains(&ratio), "({su}, {sl}): {xe} vs {x0}");
    }
}
