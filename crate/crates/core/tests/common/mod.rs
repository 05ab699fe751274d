#![allow(dead_code)]

use std::sync::Arc;

use dislocore::atomistic::AtomisticModel;
use dislocore::geometry::{AtomIndex, LatticeSpec, Layer, Species, Sublattice, SQRT3};
use dislocore::lattice::TruncatedLattice;
use dislocore::material::{depth_for_epsilon, ElasticConstants, GammaSurface};
use dislocore::potential::{Interlayer, Morse, StillingerWeber, ThreeBodyPotential};
use dislocore::Vec2;
use dislocore::terms::Selection;

pub const R_E: f64 = 1.0 / SQRT3;
/// Default Morse width.
pub const WIDTH: f64 = 1.5;

/// Morse with the default width and equilibrium distance and a short cutoff.
pub fn short_morse(depth: f64, cutoff: f64) -> Morse {
    Morse::new(depth, WIDTH, R_E, cutoff).unwrap()
}

pub fn lattice(half_width: f64, n_y: usize, cutoff: f64) -> Arc<TruncatedLattice> {
    Arc::new(TruncatedLattice::build(LatticeSpec::default(), half_width, n_y, cutoff).unwrap())
}

/// Small window with the default three-body potential and a short-range
/// inter-layer potential of the given depth.
pub fn small_model(depth: f64, half_width: f64, n_y: usize, eps: f64) -> AtomisticModel {
    let inter = Interlayer::new(short_morse(depth, 1.5), R_E).unwrap();
    AtomisticModel::new(lattice(half_width, n_y, 3.8), Arc::new(StillingerWeber::default()), inter, eps, Selection::All).unwrap()
}

/// Small window whose inter-layer depth realises `eps` for the short-range
/// Morse cutoff.
pub fn small_model_at(eps: f64, half_width: f64, n_y: usize) -> AtomisticModel {
    let spec = LatticeSpec::default();
    let ec = ElasticConstants::compute(&StillingerWeber::default(), &spec, Selection::All).unwrap();
    let unit = GammaSurface::new(spec, Interlayer::new(short_morse(1.0, 1.5), R_E).unwrap());
    small_model(depth_for_epsilon(&ec, &unit, eps), half_width, n_y, eps)
}

pub fn surface_for(model: &AtomisticModel) -> GammaSurface {
    GammaSurface::new(model.lattice.spec, model.inter)
}

pub fn constants() -> ElasticConstants {
    ElasticConstants::compute(&StillingerWeber::default(), &LatticeSpec::default(), Selection::All).unwrap()
}

/// Window energy by direct double and triple loops over the atom list,
/// with periodic images in y.
pub fn brute_force_energy(model: &AtomisticModel, u: &[f64]) -> f64 {
    let lat = &model.lattice;
    let atoms = lat.atoms();
    let h = lat.period_height();
    let rel = |from: usize, to: usize| {
        let mut v = atoms[to].pos - atoms[from].pos;
        v.y -= h * (v.y / h).round();
        v
    };
    let mut e = 0.0;
    for (c, ac) in atoms.iter().enumerate() {
        let sc = ac.index.species;
        let nbs: Vec<usize> = (0..atoms.len())
            .filter(|&j| j != c && atoms[j].index.species.layer == sc.layer && rel(c, j).norm() <= 2.0)
            .collect();
        for &j in &nbs {
            for &k in &nbs {
                if j == k {
                    continue;
                }
                let (sj, sk) = (atoms[j].index.species.sublattice, atoms[k].index.species.sublattice);
                let w = if sj == sc.sublattice && sk == sc.sublattice {
                    1.0 / 6.0
                } else if sj != sc.sublattice && sk == sc.sublattice {
                    0.5
                } else {
                    continue;
                };
                let (r1, r2) = (rel(c, j), rel(c, k));
                let d1 = r1 + Vec2::new(u[j] - u[c], 0.0);
                let d2 = r2 + Vec2::new(u[k] - u[c], 0.0);
                e += w * (model.intra.value(d1, d2).unwrap() - model.intra.value(r1, r2).unwrap());
            }
        }
    }
    for (l, al) in atoms.iter().enumerate() {
        if al.index.species.layer != Layer::Lower {
            continue;
        }
        for (m, am) in atoms.iter().enumerate() {
            if am.index.species.layer != Layer::Upper {
                continue;
            }
            let xi = rel(l, m);
            e += model.inter.value(xi + Vec2::new(u[m] - u[l], 0.0)) - model.inter.value(xi);
        }
    }
    e
}

/// Energy change per cell area of one layer under the affine map
/// `x ↦ x + (a·x, 0)`, from a brute-force enumeration of the triangles
/// centred on the two atoms of a cell.
pub fn cauchy_born(v: &StillingerWeber, grad: Vec2) -> f64 {
    let s = LatticeSpec::default();
    let deform = |x: Vec2| x + Vec2::new(grad.dot(&x), 0.0);
    let mut e = 0.0;
    for centre in [Sublattice::A, Sublattice::B] {
        let c = s.position(&AtomIndex { cell: (0, 0), species: Species::new(Layer::Upper, centre) });
        let mut nbs = Vec::new();
        for sub in [Sublattice::A, Sublattice::B] {
            for i in -5..=5 {
                for j in -5..=5 {
                    let x = s.position(&AtomIndex { cell: (i, j), species: Species::new(Layer::Upper, sub) }) - c;
                    if x.norm() > 1e-9 && x.norm() < v.cutoff() {
                        nbs.push((x, sub));
                    }
                }
            }
        }
        for (j, &(x, sj)) in nbs.iter().enumerate() {
            for (k, &(y, sk)) in nbs.iter().enumerate() {
                if j == k {
                    continue;
                }
                let w = if sj == centre && sk == centre {
                    1.0 / 6.0
                } else if sj != centre && sk == centre {
                    0.5
                } else {
                    0.0
                };
                if w > 0.0 {
                    e += w * (v.value(deform(x), deform(y)).unwrap() - v.value(x, y).unwrap());
                }
            }
        }
    }
    e / s.cell_area()
}

/// Quadratic coefficient from symmetric differences, Richardson-extrapolated.
pub fn quadratic_coefficient(v: &StillingerWeber, dir: Vec2) -> f64 {
    let at = |h: f64| (cauchy_born(v, dir * h) + cauchy_born(v, -dir * h)) / (2.0 * h * h);
    let (c1, c2) = (at(1e-3), at(5e-4));
    (4.0 * c2 - c1) / 3.0
}
