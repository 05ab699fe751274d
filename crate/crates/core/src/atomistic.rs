//! Atomistic energy of x-displacement fields on a truncated window, with
//! analytic gradient and Hessian, constraint-reduced dofs and a Newton
//! solver.
//!
//! Raw energies are in lattice units (sum over one window, increments from
//! the perfect lattice). The rescaled energy divides by `n_y √3 ε`, the
//! window height in rescaled units.

use std::sync::Arc;

use crate::banded::{dot, norm_inf, BandMatrix};
use crate::geometry::{Layer, Species, Sublattice, SQRT3};
use crate::lattice::{inter_offsets, Offset, TruncatedLattice};
use crate::pn::PnProfile;
use crate::potential::{Interlayer, ThreeBodyPotential};
use crate::terms::{triplet_terms, Selection, TripletTerm};
use crate::{Error, Result, Vec2};

/// Extra reach added to interaction lists so that bonds entering the
/// cutoff under deformation are not missed.
pub const SKIN: f64 = 0.25;

const NONE: u32 = u32::MAX;

/// Which energy contributions to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parts {
    pub three_body: bool,
    pub interlayer: bool,
    /// Restrict three-body terms to centres on one sublattice.
    pub centers: Option<Sublattice>,
}

impl Parts {
    pub const ALL: Parts = Parts {
        three_body: true,
        interlayer: true,
        centers: None,
    };
    pub const ELASTIC: Parts = Parts {
        three_body: true,
        interlayer: false,
        centers: None,
    };
    pub const MISFIT: Parts = Parts {
        three_body: false,
        interlayer: true,
        centers: None,
    };

    pub fn elastic_part(sub: Sublattice) -> Parts {
        Parts {
            three_body: true,
            interlayer: false,
            centers: Some(sub),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AtomisticModel {
    pub lattice: Arc<TruncatedLattice>,
    pub intra: Arc<dyn ThreeBodyPotential>,
    /// Physical inter-layer potential `V_d = ε² U`.
    pub inter: Interlayer,
    pub eps: f64,
    pub selection: Selection,
    terms: Vec<Vec<TripletTerm>>,
    term_ref: Vec<Vec<f64>>,
    tri_start: Vec<usize>,
    tri_nb: Vec<[u32; 2]>,
    pairs: Vec<Vec<Offset>>,
    pair_ref: Vec<Vec<f64>>,
    pair_start: Vec<usize>,
    pair_nb: Vec<u32>,
}

impl AtomisticModel {
    pub fn new(
        lattice: Arc<TruncatedLattice>,
        intra: Arc<dyn ThreeBodyPotential>,
        inter: Interlayer,
        eps: f64,
        selection: Selection,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        let spec = lattice.spec;
        let r3 = intra.cutoff() + SKIN * spec.a;
        let rp = inter.pair.cutoff + SKIN * spec.a;
        let reach = (2.0 * r3).max((rp * rp - spec.layer_gap.powi(2)).max(0.0).sqrt());
        if lattice.cutoff + 1e-12 < reach {
            return Err(Error::InvalidParameter(format!(
                "lattice cutoff {} is below the interaction reach {reach}",
                lattice.cutoff
            )));
        }
        let terms: Vec<Vec<TripletTerm>> = Species::ALL.iter().map(|&s| triplet_terms(&spec, s, r3, selection)).collect();
        let term_ref = terms
            .iter()
            .map(|ts| ts.iter().map(|t| intra.value(t.first.vec, t.second.vec)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<Vec<Offset>> = [Sublattice::A, Sublattice::B]
            .iter()
            .map(|&k| {
                let low = Species::new(Layer::Lower, k);
                [Sublattice::A, Sublattice::B]
                    .iter()
                    .flat_map(|&m| inter_offsets(&spec, low, Species::new(Layer::Upper, m), rp))
                    .collect()
            })
            .collect();
        let pair_ref: Vec<Vec<f64>> = pairs.iter().map(|ps| ps.iter().map(|o| inter.value(-o.vec)).collect()).collect();

        let atoms = lattice.atoms();
        let mut tri_start = Vec::with_capacity(atoms.len() + 1);
        let mut tri_nb = Vec::new();
        let mut pair_start = Vec::with_capacity(atoms.len() + 1);
        let mut pair_nb = Vec::new();
        for (id, atom) in atoms.iter().enumerate() {
            tri_start.push(tri_nb.len());
            for t in &terms[atom.index.species.index()] {
                let j = lattice.neighbor(id, &t.first);
                let k = lattice.neighbor(id, &t.second);
                tri_nb.push(match (j, k) {
                    (Some(j), Some(k)) => [j as u32, k as u32],
                    _ => [NONE, NONE],
                });
            }
            pair_start.push(pair_nb.len());
            if atom.index.species.layer == Layer::Lower {
                for o in &pairs[sub_index(atom.index.species.sublattice)] {
                    pair_nb.push(lattice.neighbor(id, o).map_or(NONE, |m| m as u32));
                }
            }
        }
        tri_start.push(tri_nb.len());
        pair_start.push(pair_nb.len());
        Ok(Self {
            lattice,
            intra,
            inter,
            eps,
            selection,
            terms,
            term_ref,
            tri_start,
            tri_nb,
            pairs,
            pair_ref,
            pair_start,
            pair_nb,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.lattice.len()
    }

    /// `1 / (n_y √3 ε)`: converts raw window sums to rescaled,
    /// y-averaged energies.
    pub fn norm_factor(&self) -> f64 {
        1.0 / (self.lattice.n_y as f64 * SQRT3 * self.eps)
    }

    fn a(&self) -> f64 {
        self.lattice.spec.a
    }

    /// Visits every complete three-body term as `(centre, j, k, term, reference)`.
    fn for_each_triplet<F>(&self, parts: Parts, mut f: F) -> Result<()>
    where
        F: FnMut(usize, usize, usize, &TripletTerm, f64) -> Result<()>,
    {
        if !parts.three_body {
            return Ok(());
        }
        for (c, atom) in self.lattice.atoms().iter().enumerate() {
            let sp = atom.index.species;
            if parts.centers.is_some_and(|s| s != sp.sublattice) {
                continue;
            }
            let terms = &self.terms[sp.index()];
            let refs = &self.term_ref[sp.index()];
            let nb = &self.tri_nb[self.tri_start[c]..self.tri_start[c + 1]];
            for ((t, &r), &[j, k]) in terms.iter().zip(refs).zip(nb) {
                if j == NONE {
                    continue;
                }
                f(c, j as usize, k as usize, t, r)?;
            }
        }
        Ok(())
    }

    /// Visits every complete inter-layer pair as `(lower, upper, ξ0, reference)`.
    fn for_each_pair<F>(&self, parts: Parts, mut f: F)
    where
        F: FnMut(usize, usize, Vec2, f64),
    {
        if !parts.interlayer {
            return;
        }
        for (l, atom) in self.lattice.atoms().iter().enumerate() {
            if atom.index.species.layer != Layer::Lower {
                continue;
            }
            let k = sub_index(atom.index.species.sublattice);
            let nb = &self.pair_nb[self.pair_start[l]..self.pair_start[l + 1]];
            for ((o, &r), &m) in self.pairs[k].iter().zip(&self.pair_ref[k]).zip(nb) {
                if m == NONE {
                    continue;
                }
                // Offset points from the lower atom to the upper one; U
                // takes upper minus lower.
                f(l, m as usize, o.vec, r);
            }
        }
    }

    /// Raw window energy (lattice units).
    pub fn energy_raw(&self, u: &[f64], parts: Parts) -> Result<f64> {
        let a = self.a();
        let mut e3 = 0.0;
        self.for_each_triplet(parts, |c, j, k, t, r| {
            let r1 = t.first.vec + Vec2::new(a * (u[j] - u[c]), 0.0);
            let r2 = t.second.vec + Vec2::new(a * (u[k] - u[c]), 0.0);
            e3 += t.weight * (self.intra.value(r1, r2)? - r);
            Ok(())
        })?;
        let mut e2 = 0.0;
        self.for_each_pair(parts, |l, m, xi, r| {
            let xi = xi + Vec2::new(a * (u[m] - u[l]), 0.0);
            e2 += self.inter.value(xi) - r;
        });
        let e = e3 + e2;
        if !e.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(e)
    }

    /// Raw energy and its gradient with respect to every atom.
    pub fn gradient_raw(&self, u: &[f64], parts: Parts) -> Result<(f64, Vec<f64>)> {
        let a = self.a();
        let mut g = vec![0.0; u.len()];
        let mut e3 = 0.0;
        self.for_each_triplet(parts, |c, j, k, t, r| {
            let r1 = t.first.vec + Vec2::new(a * (u[j] - u[c]), 0.0);
            let r2 = t.second.vec + Vec2::new(a * (u[k] - u[c]), 0.0);
            let ev = self.intra.eval(r1, r2)?;
            let w = t.weight;
            e3 += w * (ev.value - r);
            let (g1, g2) = (w * a * ev.d1.x, w * a * ev.d2.x);
            g[j] += g1;
            g[k] += g2;
            g[c] -= g1 + g2;
            Ok(())
        })?;
        let mut e2 = 0.0;
        self.for_each_pair(parts, |l, m, xi, r| {
            let xi = xi + Vec2::new(a * (u[m] - u[l]), 0.0);
            let (v, vx, _) = self.inter.eval_x(xi);
            e2 += v - r;
            g[m] += a * vx;
            g[l] -= a * vx;
        });
        let e = e3 + e2;
        if !e.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok((e, g))
    }

    /// Visits every Hessian contribution `(a, b, value)` over ordered atom
    /// pairs, diagonal included.
    pub fn hessian_entries<F>(&self, u: &[f64], parts: Parts, mut sink: F) -> Result<()>
    where
        F: FnMut(usize, usize, f64),
    {
        let a = self.a();
        let a2 = a * a;
        self.for_each_triplet(parts, |c, j, k, t, _| {
            let r1 = t.first.vec + Vec2::new(a * (u[j] - u[c]), 0.0);
            let r2 = t.second.vec + Vec2::new(a * (u[k] - u[c]), 0.0);
            let ev = self.intra.eval(r1, r2)?;
            let w = t.weight * a2;
            let (h11, h12, h22) = (w * ev.d20[(0, 0)], w * ev.d11[(0, 0)], w * ev.d02[(0, 0)]);
            if h11 == 0.0 && h12 == 0.0 && h22 == 0.0 {
                return Ok(());
            }
            let ids = [c, j, k];
            let hl = [
                [h11 + 2.0 * h12 + h22, -(h11 + h12), -(h12 + h22)],
                [-(h11 + h12), h11, h12],
                [-(h12 + h22), h12, h22],
            ];
            for p in 0..3 {
                for q in 0..3 {
                    sink(ids[p], ids[q], hl[p][q]);
                }
            }
            Ok(())
        })?;
        self.for_each_pair(parts, |l, m, xi, _| {
            let xi = xi + Vec2::new(a * (u[m] - u[l]), 0.0);
            let (_, _, vxx) = self.inter.eval_x(xi);
            let k = a2 * vxx;
            if k == 0.0 {
                return;
            }
            sink(l, l, k);
            sink(m, m, k);
            sink(l, m, -k);
            sink(m, l, -k);
        });
        Ok(())
    }

    /// Matrix-free raw Hessian action on a full atom vector.
    pub fn hessian_apply_raw(&self, u: &[f64], v: &[f64], parts: Parts) -> Result<Vec<f64>> {
        let mut y = vec![0.0; u.len()];
        self.hessian_entries(u, parts, |p, q, h| y[p] += h * v[q])?;
        Ok(y)
    }

    /// Visits the atom sets of all complete terms (structure only).
    fn for_each_term_atoms<F: FnMut(&[usize])>(&self, parts: Parts, mut f: F) {
        let _ = self.for_each_triplet(parts, |c, j, k, _, _| {
            f(&[c, j, k]);
            Ok(())
        });
        self.for_each_pair(parts, |l, m, _, _| f(&[l, m]));
    }

    /// Sampled continuum field `u± = ±φ(εx)/2` at the layer-frame
    /// positions.
    pub fn sample(&self, profile: &PnProfile) -> Vec<f64> {
        let spec = &self.lattice.spec;
        self.lattice
            .atoms()
            .iter()
            .map(|at| {
                let xb = self.eps * spec.frame_position(&at.index).x / self.a();
                0.5 * at.index.species.layer.sign() * profile.phi(xb)
            })
            .collect()
    }
}

fn sub_index(s: Sublattice) -> usize {
    match s {
        Sublattice::A => 0,
        Sublattice::B => 1,
    }
}

/// How the dofs of the window are constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Layer antisymmetry `u^{κ−}_s = −u^{κ+}_s`, point symmetry
    /// `u_s + u_{−s} = ±½` about the layer-frame origin, and the centring
    /// condition (atoms on `x = 0` at `±¼`), all by elimination.
    Dislocation,
    /// Point symmetry and centring in each layer separately.
    PointSymmetric,
    /// Every interior atom free.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Role {
    /// `u = base + sign · q[dof]`.
    Dof(usize, f64),
    Fixed,
}

/// Map from reduced dofs to full atom vectors.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub roles: Vec<Role>,
    /// Value of fixed atoms, and the offset of the others.
    pub base: Vec<f64>,
    /// Representative atom of each dof (moving with sign +1), in increasing `x`.
    pub dof_atoms: Vec<usize>,
    pub bandwidth: usize,
    pub constraint: Constraint,
}

impl DofMap {
    /// Builds the constraint map. Atoms outside the free set take their
    /// values from `fixed`, except the centred ones, which are pinned.
    pub fn new(model: &AtomisticModel, constraint: Constraint, fixed: &[f64]) -> Result<Self> {
        let lat = &model.lattice;
        let atoms = lat.atoms();
        let tol = 1e-9 * lat.spec.a;
        let mut roles = vec![Role::Fixed; atoms.len()];
        let mut base = fixed.to_vec();
        let mut dof_atoms = Vec::new();
        let frame_x = |id: usize| lat.spec.frame_position(&atoms[id].index).x;
        match constraint {
            Constraint::Free => {
                for (id, at) in atoms.iter().enumerate() {
                    if at.interior {
                        base[id] = 0.0;
                        roles[id] = Role::Dof(dof_atoms.len(), 1.0);
                        dof_atoms.push(id);
                    }
                }
            }
            Constraint::Dislocation | Constraint::PointSymmetric => {
                let layers: &[Layer] = if constraint == Constraint::Dislocation {
                    &[Layer::Upper]
                } else {
                    &[Layer::Upper, Layer::Lower]
                };
                for (id, at) in atoms.iter().enumerate() {
                    let sp = at.index.species;
                    if !layers.contains(&sp.layer) {
                        continue;
                    }
                    let (i, j) = at.index.cell;
                    let xf = frame_x(id);
                    let partner = match constraint {
                        Constraint::Dislocation => lat.lookup(sp.with_layer(sp.layer.other()), i, j),
                        _ => Some(id),
                    };
                    if xf.abs() <= tol {
                        base[id] = 0.25 * sp.layer.sign();
                        if let Some(b) = partner {
                            base[b] = 0.25 * atoms[b].index.species.layer.sign();
                        }
                        continue;
                    }
                    if xf < 0.0 {
                        continue;
                    }
                    let (Some(b), Some(m)) = (partner, mirror_of(lat, id)) else {
                        continue;
                    };
                    let Some(mb) = mirror_of(lat, b) else {
                        continue;
                    };
                    let orbit = [id, b, m, mb];
                    if !orbit.iter().all(|&k| atoms[k].interior) {
                        continue;
                    }
                    let d = dof_atoms.len();
                    dof_atoms.push(id);
                    for (k, &atom) in orbit.iter().enumerate() {
                        let s = atoms[atom].index.species.layer.sign() * sp.layer.sign();
                        // Mirror images carry the ±½ offset and the opposite sign.
                        let (sign, off) = if k < 2 { (s, 0.0) } else { (-s, 0.5 * atoms[atom].index.species.layer.sign()) };
                        roles[atom] = Role::Dof(d, sign);
                        base[atom] = off;
                    }
                }
                if dof_atoms.is_empty() {
                    return Err(Error::WindowTooSmall("no free atoms".into()));
                }
            }
        }
        let mut map = Self {
            roles,
            base,
            dof_atoms,
            bandwidth: 0,
            constraint,
        };
        let mut bw = 0usize;
        model.for_each_term_atoms(Parts::ALL, |ids| {
            let mut lo = usize::MAX;
            let mut hi = 0usize;
            for &a in ids {
                if let Some((d, _)) = map.dof(a) {
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
            if lo != usize::MAX {
                bw = bw.max(hi - lo);
            }
        });
        map.bandwidth = bw;
        Ok(map)
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_atoms.len()
    }

    /// Dof and sign of an atom, if it moves with a dof.
    #[inline]
    pub fn dof(&self, atom: usize) -> Option<(usize, f64)> {
        match self.roles[atom] {
            Role::Dof(d, s) => Some((d, s)),
            Role::Fixed => None,
        }
    }

    pub fn expand(&self, q: &[f64]) -> Vec<f64> {
        self.roles
            .iter()
            .zip(&self.base)
            .map(|(r, &b)| match *r {
                Role::Dof(d, s) => b + s * q[d],
                Role::Fixed => b,
            })
            .collect()
    }

    /// Reduced coordinates of a full field that satisfies the constraints
    /// (values at the representative atoms).
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.dof_atoms.iter().map(|&a| u[a] - self.base[a]).collect()
    }

    /// Tangent map `Tᵀ g`.
    pub fn fold(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (a, &v) in g.iter().enumerate() {
            if let Some((d, s)) = self.dof(a) {
                out[d] += s * v;
            }
        }
        out
    }

    /// Tangent map `T v` (fixed atoms get zero).
    pub fn spread(&self, v: &[f64]) -> Vec<f64> {
        (0..self.roles.len()).map(|a| self.dof(a).map_or(0.0, |(d, s)| s * v[d])).collect()
    }

    /// Largest violation of the constraints by a full field `u`, over the
    /// atoms that carry a dof or are pinned.
    pub fn violation(&self, u: &[f64]) -> f64 {
        let q = self.restrict(u);
        let v = self.expand(&q);
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, Role::Dof(..)))
            .map(|(a, _)| (u[a] - v[a]).abs())
            .fold(0.0, f64::max)
    }

    /// Centring rows: atoms on `x = 0` of the layer frame and straddling
    /// mirror pairs, one per species and row.
    pub fn centering_rows(&self, lat: &TruncatedLattice) -> Vec<CenteringRow> {
        let tol = 1e-9 * lat.spec.a;
        let mut rows = Vec::new();
        for sp in Species::ALL {
            for j in 0..lat.n_rows() as i64 {
                let mut best: Option<(f64, usize)> = None;
                for (id, at) in lat.atoms().iter().enumerate() {
                    let x = lat.spec.frame_position(&at.index).x;
                    if at.index.species == sp && at.index.cell.1 == j && x > -tol && best.is_none_or(|(b, _)| x < b) {
                        best = Some((x, id));
                    }
                }
                if let Some((x, id)) = best {
                    if x.abs() <= tol {
                        rows.push(CenteringRow::Pinned(id));
                    } else if let Some(m) = mirror_of(lat, id) {
                        rows.push(CenteringRow::Pair(m, id));
                    }
                }
            }
        }
        rows
    }
}

/// Centring condition of one row: a single atom on `x = 0` at `±¼`, or a
/// straddling pair with average `±¼`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenteringRow {
    Pinned(usize),
    Pair(usize, usize),
}

/// Atom of the same species and row at the mirrored layer-frame position
/// `(−x, y)`.
pub fn mirror_of(lat: &TruncatedLattice, id: usize) -> Option<usize> {
    let at = &lat.atoms()[id];
    let (i, j) = at.index.cell;
    let o = if at.index.species.sublattice == Sublattice::B { lat.spec.p().x / lat.spec.a } else { 0.0 };
    let i2 = -i - j - (2.0 * o).round() as i64;
    lat.lookup(at.index.species, i2, j)
}

/// Rescaled energy functional on reduced dofs.
#[derive(Debug, Clone)]
pub struct ReducedProblem<'a> {
    pub model: &'a AtomisticModel,
    pub map: DofMap,
    pub parts: Parts,
}

impl<'a> ReducedProblem<'a> {
    pub fn new(model: &'a AtomisticModel, map: DofMap, parts: Parts) -> Self {
        Self { model, map, parts }
    }

    pub fn energy(&self, q: &[f64]) -> Result<f64> {
        Ok(self.model.norm_factor() * self.model.energy_raw(&self.map.expand(q), self.parts)?)
    }

    pub fn gradient(&self, q: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (e, g) = self.model.gradient_raw(&self.map.expand(q), self.parts)?;
        let k = self.model.norm_factor();
        Ok((k * e, self.map.fold(&g).into_iter().map(|v| k * v).collect()))
    }

    pub fn hessian_apply(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let y = self.model.hessian_apply_raw(&self.map.expand(q), &self.map.spread(v), self.parts)?;
        let k = self.model.norm_factor();
        Ok(self.map.fold(&y).into_iter().map(|v| k * v).collect())
    }

    /// Assembled reduced Hessian `k Tᵀ H T` in band form.
    pub fn hessian(&self, q: &[f64]) -> Result<BandMatrix> {
        let u = self.map.expand(q);
        hessian_band(self.model, &self.map, &u, self.parts)
    }
}

/// Banded `k Tᵀ H(u) T` for an arbitrary full field `u`.
pub fn hessian_band(model: &AtomisticModel, map: &DofMap, u: &[f64], parts: Parts) -> Result<BandMatrix> {
    let mut h = BandMatrix::zeros(map.n_dofs(), map.bandwidth);
    let mut bad = None;
    model.hessian_entries(u, parts, |a, b, v| {
        if let (Some((i, si)), Some((j, sj))) = (map.dof(a), map.dof(b)) {
            if i >= j && h.add(i, j, si * sj * v).is_err() {
                bad = Some((i, j));
            }
        }
    })?;
    if let Some((i, j)) = bad {
        return Err(Error::InvalidParameter(format!("Hessian entry ({i}, {j}) outside the band")));
    }
    h.scale(model.norm_factor());
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop when `‖∇E‖∞` (rescaled) falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub q: Vec<f64>,
    pub energy: f64,
    /// `‖∇E‖∞` before each step and at the end.
    pub residuals: Vec<f64>,
    pub energies: Vec<f64>,
    pub steps: Vec<f64>,
}

/// Damped Newton iteration with a banded Cholesky solve and backtracking
/// line search; falls back to a shifted Hessian when it is indefinite.
pub fn newton(problem: &ReducedProblem, q0: &[f64], opts: &NewtonOptions) -> Result<NewtonReport> {
    let mut q = q0.to_vec();
    let (mut e, mut g) = problem.gradient(&q)?;
    let mut residuals = vec![norm_inf(&g)];
    let mut energies = vec![e];
    let mut steps = Vec::new();
    for it in 0..opts.max_iter {
        let r = norm_inf(&g);
        if r <= opts.tol {
            return Ok(NewtonReport {
                q,
                energy: e,
                residuals,
                energies,
                steps,
            });
        }
        let h = problem.hessian(&q)?;
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut p = match h.cholesky() {
            Ok(ch) => ch.solve(&neg),
            Err(_) => {
                let scale = h.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
                let mut shift = 1e-8 * scale;
                loop {
                    let mut hs = h.clone();
                    hs.add_diagonal(shift);
                    if let Ok(ch) = hs.cholesky() {
                        break ch.solve(&neg);
                    }
                    shift *= 10.0;
                    if shift > 1e8 * scale {
                        break neg.clone();
                    }
                }
            }
        };
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            p = neg.clone();
            slope = dot(&g, &p);
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = q.iter().zip(&p).map(|(a, b)| a + alpha * b).collect();
            if let Ok((et, gt)) = problem.gradient(&trial) {
                let armijo = et <= e + 1e-4 * alpha * slope;
                let roundoff = et <= e + 1e-12 * e.abs().max(1.0) && norm_inf(&gt) < r;
                if armijo || roundoff {
                    accepted = Some((trial, et, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((qn, en, gn)) = accepted else {
            return Err(Error::LineSearch { iteration: it, residual: r });
        };
        q = qn;
        e = en;
        g = gn;
        steps.push(alpha);
        residuals.push(norm_inf(&g));
        energies.push(e);
    }
    let r = norm_inf(&g);
    if r <= opts.tol {
        return Ok(NewtonReport {
            q,
            energy: e,
            residuals,
            energies,
            steps,
        });
    }
    Err(Error::NoConvergence {
        solver: "Newton",
        iterations: opts.max_iter,
        residual: r,
    })
}

/// Atomistic dislocation seeded from a PN profile.
#[derive(Debug, Clone)]
pub struct Dislocation {
    pub map: DofMap,
    pub sampled: Vec<f64>,
    pub field: Vec<f64>,
    pub report: NewtonReport,
}

pub fn solve_dislocation(model: &AtomisticModel, profile: &PnProfile, opts: &NewtonOptions) -> Result<Dislocation> {
    let sampled = model.sample(profile);
    let map = DofMap::new(model, Constraint::Dislocation, &sampled)?;
    let problem = ReducedProblem::new(model, map.clone(), Parts::ALL);
    let q0 = map.restrict(&sampled);
    let report = newton(&problem, &q0, opts)?;
    let field = map.expand(&report.q);
    Ok(Dislocation {
        map,
        sampled,
        field,
        report,
    })
}
