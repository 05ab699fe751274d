mod common;

use std::sync::OnceLock;

use common::*;
use dislocore::atomistic::{AtomisticModel, Constraint, DofMap};
use dislocore::config::{RunConfig, Sweep};
use dislocore::geometry::{Layer, LatticeSpec, Sublattice};
use dislocore::interp::Interpolant;
use dislocore::lattice::Triangulation;
use dislocore::material::{GammaSurface, MisfitPart};
use dislocore::output::{read_checkpoint, read_csv, write_checkpoint, CheckpointHeader, Table};
use dislocore::potential::{Interlayer, Morse, StillingerWeber, ThreeBodyPotential};
use dislocore::terms::Selection;
use dislocore::Vec2;
use proptest::prelude::*;

fn surface() -> &'static GammaSurface {
    static S: OnceLock<GammaSurface> = OnceLock::new();
    S.get_or_init(|| {
        let m = Morse::new(1.0, WIDTH, R_E, Morse::decay_radius(WIDTH, R_E, 1e-10)).unwrap();
        GammaSurface::new(LatticeSpec::default(), Interlayer::new(m, R_E).unwrap())
    })
}

fn model() -> &'static AtomisticModel {
    static M: OnceLock<AtomisticModel> = OnceLock::new();
    M.get_or_init(|| small_model(0.5, 8.0, 2, 0.1))
}

fn triangulation() -> &'static Triangulation {
    static T: OnceLock<Triangulation> = OnceLock::new();
    T.get_or_init(|| model().lattice.triangulate(Layer::Upper, Sublattice::A).unwrap())
}

fn rotate(v: Vec2, t: f64) -> Vec2 {
    Vec2::new(t.cos() * v.x - t.sin() * v.y, t.sin() * v.x + t.cos() * v.y)
}

fn bond() -> impl Strategy<Value = Vec2> {
    (0.6..1.55_f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Vec2::new(r * t.cos(), r * t.sin()))
}

fn phi() -> impl Strategy<Value = Vec2> {
    (-3.0..3.0_f64, -3.0..3.0_f64).prop_map(|(x, y)| Vec2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sw_is_symmetric_and_isotropic(r1 in bond(), r2 in bond(), t in 0.0..std::f64::consts::TAU) {
        let sw = StillingerWeber::default();
        let v = sw.value(r1, r2).unwrap();
        let scale = v.abs().max(1e-300);
        prop_assert!((sw.value(r2, r1).unwrap() - v).abs() <= 1e-13 * scale);
        prop_assert!((sw.value(rotate(r1, t), rotate(r2, t)).unwrap() - v).abs() <= 1e-12 * scale);
        prop_assert!((sw.value(-r1, -r2).unwrap() - v).abs() <= 1e-13 * scale);
        prop_assert!(v >= 0.0);
    }

    #[test]
    fn gamma_is_periodic_and_mirror_symmetric(p in phi(), i in -3_i64..=3, j in -3_i64..=3) {
        let gs = surface();
        let spec = gs.spec;
        let g = gs.value(p);
        for part in [MisfitPart::Total, MisfitPart::A, MisfitPart::B] {
            let v = gs.value_part(p, part);
            prop_assert!((gs.value_part(p + spec.cell(i, j), part) - v).abs() <= 1e-10);
        }
        prop_assert!((gs.value(Vec2::new(-p.x, p.y)) - g).abs() <= 1e-10);
        prop_assert!(g >= -1e-12);
    }

    #[test]
    fn reduce_is_idempotent_and_shift_invariant(p in phi(), i in -5_i64..=5, j in -5_i64..=5) {
        let spec = LatticeSpec::default();
        let r = spec.reduce(p);
        prop_assert!((spec.reduce(r) - r).norm() <= 1e-12);
        prop_assert!((spec.reduce(p + spec.cell(i, j)) - r).norm() <= 1e-10);
        prop_assert!(r.norm() <= 1.0 / 3.0_f64.sqrt() + 1e-12);
        prop_assert!(spec.is_lattice_vector(p - r, 1e-9));
    }

    #[test]
    fn dof_maps_round_trip(seed in 0_u64..1000, kind in 0_usize..3) {
        use rand::{Rng, SeedableRng};
        let m = model();
        let constraint = [Constraint::Free, Constraint::PointSymmetric, Constraint::Dislocation][kind];
        let fixed = vec![0.0; m.n_atoms()];
        let map = DofMap::new(m, constraint, &fixed).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<f64> = (0..map.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = map.expand(&q);
        let back = map.restrict(&u);
        prop_assert_eq!(back.len(), q.len());
        for (a, b) in back.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
        prop_assert!(map.violation(&u) <= 1e-14);
    }

    #[test]
    fn interpolant_is_linear(seed in 0_u64..1000, a in -2.0..2.0_f64, b in -2.0..2.0_f64, x in -4.0..4.0_f64, y in 0.0..3.0_f64) {
        use rand::{Rng, SeedableRng};
        let tri = triangulation();
        let n = model().n_atoms();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = f.iter().zip(&g).map(|(u, v)| a * u + b * v).collect();
        let q = Vec2::new(x, y);
        let (ff, gg, hh) = (Interpolant::new(tri, &f), Interpolant::new(tri, &g), Interpolant::new(tri, &h));
        if let (Some(u), Some(v), Some(w)) = (ff.eval(q), gg.eval(q), hh.eval(q)) {
            prop_assert!((w - (a * u + b * v)).abs() <= 1e-12);
        }
    }

    #[test]
    fn config_json_round_trips(l in 1.0..50.0_f64, n_y in 1_usize..4, seed in any::<u64>(), eps in prop::collection::vec(0.001..0.2_f64, 1..6), nearest in any::<bool>()) {
        let cfg = RunConfig {
            l,
            n_y,
            seed,
            sweep: Sweep::Eps(eps),
            selection: if nearest { Selection::Nearest } else { Selection::All },
            ..RunConfig::default()
        };
        let back = RunConfig::from_json(&cfg.canonical_json()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.content_hash(), cfg.content_hash());
    }

    #[test]
    fn checkpoint_round_trips(dofs in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..200), eps in 0.001..0.2_f64) {
        let header = CheckpointHeader::new(&model().lattice, eps);
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &header, &dofs).unwrap();
        let (h, d) = read_checkpoint(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(h, header);
        prop_assert_eq!(d.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), dofs.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert!(read_checkpoint(&mut &bytes[..bytes.len().saturating_sub(1)]).is_err());
    }

    #[test]
    fn csv_round_trips(rows in prop::collection::vec((any::<f64>().prop_filter("finite", |v| v.is_finite()), any::<i64>(), "[a-z ,\"]{0,8}"), 0..20)) {
        let mut t = Table::new(&["x", "n", "label"]);
        for (x, n, s) in &rows {
            t.push(vec![(*x).into(), (*n).into(), s.clone().into()]);
        }
        let text = t.to_csv("config_sha256=abc command=test").unwrap();
        let (tag, header, back) = read_csv(&text).unwrap();
        prop_assert_eq!(tag, "config_sha256=abc command=test");
        prop_assert_eq!(header, vec!["x", "n", "label"]);
        prop_assert_eq!(back.len(), rows.len());
        for ((x, n, s), r) in rows.iter().zip(&back) {
            prop_assert_eq!(r[0].parse::<f64>().unwrap().to_bits(), x.to_bits());
            prop_assert_eq!(r[1].parse::<i64>().unwrap(), *n);
            prop_assert_eq!(&r[2], s);
        }
    }
}
