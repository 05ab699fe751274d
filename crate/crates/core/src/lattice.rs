//! Truncated, y-periodic bilayer window with neighbour offsets and the
//! two interpolation triangulations.

use std::collections::HashMap;

use crate::geometry::{AtomIndex, LatticeSpec, Layer, Species, Sublattice};
use crate::{Error, Result, Vec2};

/// Relative tolerance for "on the line" classifications.
const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub index: AtomIndex,
    pub pos: Vec2,
    /// Full neighbour shell of radius `cutoff` lies inside the window.
    pub interior: bool,
}

/// Neighbour offset from an atom of a given species to an atom of `target`,
/// `(di, dj)` in cell units, `vec` the reference in-plane vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offset {
    pub di: i64,
    pub dj: i64,
    pub target: Species,
    pub vec: Vec2,
}

#[derive(Debug, Clone)]
struct Row {
    i_min: i64,
    ids: Vec<usize>,
}

/// Neighbour offsets within the lattice cutoff, per centre species.
#[derive(Debug, Clone, Default)]
pub struct NeighborShells {
    pub same: Vec<Offset>,
    pub mixed: Vec<Offset>,
    pub inter: Vec<Offset>,
}

#[derive(Debug, Clone)]
pub struct TruncatedLattice {
    pub spec: LatticeSpec,
    pub half_width: f64,
    pub n_y: usize,
    pub cutoff: f64,
    atoms: Vec<Atom>,
    rows: Vec<Row>,
    shells: Vec<NeighborShells>,
}

impl TruncatedLattice {
    /// Stores every atom with `|x| ≤ half_width` over `n_y` minimal
    /// y-periods. Atoms are ordered by `x`, then species and row.
    pub fn build(spec: LatticeSpec, half_width: f64, n_y: usize, cutoff: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("half width must be positive, got {half_width}")));
        }
        if n_y == 0 {
            return Err(Error::InvalidParameter("n_y must be at least 1".into()));
        }
        if !(cutoff >= spec.a && cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff must be at least a, got {cutoff}")));
        }
        if half_width <= 2.0 * cutoff {
            return Err(Error::InvalidParameter(format!(
                "half width {half_width} must exceed twice the cutoff {cutoff}"
            )));
        }
        let a = spec.a;
        let n_rows = 2 * n_y;
        let tol = GEOM_TOL * a;
        let mut raw: Vec<(Atom, usize, i64)> = Vec::new();
        for species in Species::ALL {
            let ox = spec.offset(species).x;
            for j in 0..n_rows as i64 {
                let shift = 0.5 * a * j as f64 + ox;
                let i_min = ((-half_width - shift - tol) / a).ceil() as i64;
                let i_max = ((half_width - shift + tol) / a).floor() as i64;
                for i in i_min..=i_max {
                    let index = AtomIndex { cell: (i, j), species };
                    let pos = spec.position(&index);
                    let interior = pos.x.abs() <= half_width - cutoff + tol;
                    raw.push((Atom { index, pos, interior }, species.index() * n_rows + j as usize, i - i_min));
                }
            }
        }
        raw.sort_by(|(a1, r1, _), (a2, r2, _)| a1.pos.x.total_cmp(&a2.pos.x).then(r1.cmp(r2)));
        let mut rows: Vec<Row> = (0..4 * n_rows).map(|_| Row { i_min: i64::MAX, ids: Vec::new() }).collect();
        for (atom, row, _) in &raw {
            rows[*row].i_min = rows[*row].i_min.min(atom.index.cell.0);
        }
        let mut slots: Vec<Vec<(i64, usize)>> = vec![Vec::new(); 4 * n_rows];
        for (k, (_, row, off)) in raw.iter().enumerate() {
            slots[*row].push((*off, k));
        }
        for (row, mut s) in rows.iter_mut().zip(slots) {
            s.sort();
            row.ids = s.into_iter().map(|(_, k)| k).collect();
        }
        let atoms: Vec<Atom> = raw.into_iter().map(|(a, _, _)| a).collect();
        let mut lat = Self {
            spec,
            half_width,
            n_y,
            cutoff,
            atoms,
            rows,
            shells: Vec::new(),
        };
        lat.shells = Species::ALL
            .iter()
            .map(|&s| NeighborShells {
                same: lat.offsets(s, s, cutoff),
                mixed: lat.offsets(s, s.with_sublattice(s.sublattice.other()), cutoff),
                inter: [Sublattice::A, Sublattice::B]
                    .into_iter()
                    .flat_map(|k| lat.inter_offsets(s, Species::new(s.layer.other(), k), cutoff))
                    .collect(),
            })
            .collect();
        Ok(lat)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn n_rows(&self) -> usize {
        2 * self.n_y
    }

    /// Height of the periodic window.
    pub fn period_height(&self) -> f64 {
        self.n_y as f64 * self.spec.y_period()
    }

    /// Cached neighbour shells (radius `cutoff`) for a centre species.
    pub fn shells(&self, species: Species) -> &NeighborShells {
        &self.shells[species.index()]
    }

    /// Atom id of cell `(i, j)` of `species`, with `j` wrapped periodically.
    pub fn lookup(&self, species: Species, i: i64, j: i64) -> Option<usize> {
        let m = self.n_rows() as i64;
        let q = j.div_euclid(m);
        let (i, j) = (i + q * self.n_y as i64, j - q * m);
        let row = &self.rows[species.index() * self.n_rows() + j as usize];
        if row.ids.is_empty() {
            return None;
        }
        let k = i - row.i_min;
        if k < 0 {
            return None;
        }
        row.ids.get(k as usize).copied()
    }

    pub fn neighbor(&self, atom: usize, off: &Offset) -> Option<usize> {
        let (i, j) = self.atoms[atom].index.cell;
        self.lookup(off.target, i + off.di, j + off.dj)
    }

    /// See [`offsets`].
    pub fn offsets(&self, center: Species, target: Species, radius: f64) -> Vec<Offset> {
        offsets(&self.spec, center, target, radius)
    }

    /// See [`inter_offsets`].
    pub fn inter_offsets(&self, center: Species, target: Species, radius: f64) -> Vec<Offset> {
        inter_offsets(&self.spec, center, target, radius)
    }

    /// Triangulation of one layer with vertices on `base` plus the
    /// centroid atoms of the other sublattice.
    pub fn triangulate(&self, layer: Layer, base: Sublattice) -> Result<Triangulation> {
        Triangulation::build(self, layer, base)
    }
}

fn scan_offsets(spec: &LatticeSpec, center: Species, target: Species, keep: impl Fn(f64) -> bool, radius: f64) -> Vec<Offset> {
    let base = spec.offset(target) - spec.offset(center);
    let reach = (radius / spec.a).ceil() as i64 + 2;
    let mut out = Vec::new();
    for dj in -2 * reach..=2 * reach {
        for di in -3 * reach..=3 * reach {
            let vec = spec.cell(di, dj) + base;
            if keep(vec.norm()) {
                out.push(Offset { di, dj, target, vec });
            }
        }
    }
    out.sort_by(|a, b| a.vec.norm().total_cmp(&b.vec.norm()).then(a.dj.cmp(&b.dj)).then(a.di.cmp(&b.di)));
    out
}

/// All offsets from `center` to `target` atoms with in-plane length in
/// `(0, radius]`, sorted by length.
pub fn offsets(spec: &LatticeSpec, center: Species, target: Species, radius: f64) -> Vec<Offset> {
    let a = spec.a;
    scan_offsets(spec, center, target, |n| n > GEOM_TOL * a && n <= radius * (1.0 + GEOM_TOL), radius)
}

/// Inter-layer offsets with 3D distance at most `radius`.
pub fn inter_offsets(spec: &LatticeSpec, center: Species, target: Species, radius: f64) -> Vec<Offset> {
    let gap = spec.layer_gap;
    let r_plane = (radius * radius - gap * gap).max(0.0).sqrt();
    scan_offsets(spec, center, target, |n| n <= r_plane * (1.0 + GEOM_TOL), r_plane)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleKind {
    SameSublattice,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    /// Atom ids, counter-clockwise.
    pub vertices: [usize; 3],
    /// Unwrapped vertex positions.
    pub pos: [Vec2; 3],
    pub kind: TriangleKind,
}

impl Triangle {
    /// Twice the signed area.
    pub fn delta(&self) -> f64 {
        let [p1, p2, p3] = self.pos;
        (p2 - p1).perp(&(p3 - p1))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.delta().abs()
    }

    /// Barycentric coordinates of `q`.
    pub fn barycentric(&self, q: Vec2) -> [f64; 3] {
        let [p1, p2, p3] = self.pos;
        let d = self.delta();
        let l1 = (p2 - q).perp(&(p3 - q)) / d;
        let l2 = (p3 - q).perp(&(p1 - q)) / d;
        [l1, l2, 1.0 - l1 - l2]
    }
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    pub layer: Layer,
    pub base: Sublattice,
    pub triangles: Vec<Triangle>,
    /// Number of base-lattice cells (up plus down triangle pairs) covered.
    pub coarse_cells: usize,
    spec: LatticeSpec,
    period: f64,
    base_offset: Vec2,
    by_cell: HashMap<(i64, i64), Vec<usize>>,
}

impl Triangulation {
    fn build(lat: &TruncatedLattice, layer: Layer, base: Sublattice) -> Result<Self> {
        let spec = lat.spec;
        let sb = Species::new(layer, base);
        let so = Species::new(layer, base.other());
        let ob = spec.offset(sb);
        let oo = spec.offset(so);
        let n_rows = lat.n_rows() as i64;
        let reach = (lat.half_width / spec.a).ceil() as i64 + n_rows + 2;
        let mut triangles = Vec::new();
        let mut by_cell: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut coarse_cells = 0;
        let vertex = |i: i64, j: i64| -> Option<(usize, Vec2)> {
            lat.lookup(sb, i, j).map(|id| (id, spec.cell(i, j) + ob))
        };
        for j in 0..n_rows {
            for i in -reach..=reach {
                let corners = [vertex(i, j), vertex(i + 1, j), vertex(i, j + 1), vertex(i + 1, j + 1)];
                let [Some(c00), Some(c10), Some(c01), Some(c11)] = corners else {
                    continue;
                };
                coarse_cells += 1;
                for tri in [[c00, c10, c01], [c10, c11, c01]] {
                    let centroid = (tri[0].1 + tri[1].1 + tri[2].1) / 3.0;
                    let rel = centroid - oo;
                    let filled = spec.is_lattice_vector(rel, 1e-9);
                    let list = by_cell.entry((i, j)).or_default();
                    if filled {
                        let (ci, cj) = spec.to_basis(rel);
                        let (ci, cj) = (ci.round() as i64, cj.round() as i64);
                        let Some(cid) = lat.lookup(so, ci, cj) else {
                            return Err(Error::WindowTooSmall("centroid atom missing from window".into()));
                        };
                        let c = (cid, spec.cell(ci, cj) + oo);
                        for k in 0..3 {
                            let (a, b) = (tri[k], tri[(k + 1) % 3]);
                            list.push(triangles.len());
                            triangles.push(Triangle {
                                vertices: [a.0, b.0, c.0],
                                pos: [a.1, b.1, c.1],
                                kind: TriangleKind::Mixed,
                            });
                        }
                    } else {
                        list.push(triangles.len());
                        triangles.push(Triangle {
                            vertices: [tri[0].0, tri[1].0, tri[2].0],
                            pos: [tri[0].1, tri[1].1, tri[2].1],
                            kind: TriangleKind::SameSublattice,
                        });
                    }
                }
            }
        }
        if triangles.is_empty() {
            return Err(Error::WindowTooSmall("no complete triangle fits in the window".into()));
        }
        Ok(Self {
            layer,
            base,
            triangles,
            coarse_cells,
            spec,
            period: lat.period_height(),
            base_offset: ob,
            by_cell,
        })
    }

    /// Index of the triangle containing `q`; ties go to the lowest index.
    pub fn locate(&self, q: Vec2) -> Option<usize> {
        let shift = (q.y / self.period).floor();
        let q = Vec2::new(q.x, q.y - shift * self.period);
        let (alpha, beta) = self.spec.to_basis(q - self.base_offset);
        let (i0, j0) = (alpha.floor() as i64, beta.floor() as i64);
        let mut best: Option<usize> = None;
        for (di, dj) in [(0, 0), (-1, 0), (0, -1), (-1, -1), (1, -1), (-1, 1)] {
            let Some(list) = self.by_cell.get(&(i0 + di, j0 + dj)) else {
                continue;
            };
            for &t in list {
                let l = self.triangles[t].barycentric(q);
                if l.iter().all(|&v| v >= -1e-12) && best.is_none_or(|b| t < b) {
                    best = Some(t);
                }
            }
        }
        // Points in the top strip belong to triangles stored at the bottom
        // (and vice versa), shifted by one period.
        if best.is_none() {
            for s in [-1.0, 1.0] {
                let q2 = Vec2::new(q.x, q.y + s * self.period);
                let (alpha, beta) = self.spec.to_basis(q2 - self.base_offset);
                let (i0, j0) = (alpha.floor() as i64, beta.floor() as i64);
                for (di, dj) in [(0, 0), (-1, 0), (0, -1), (-1, -1), (1, -1), (-1, 1)] {
                    let Some(list) = self.by_cell.get(&(i0 + di, j0 + dj)) else {
                        continue;
                    };
                    for &t in list {
                        let l = self.triangles[t].barycentric(q2);
                        if l.iter().all(|&v| v >= -1e-12) && best.is_none_or(|b| t < b) {
                            best = Some(t);
                        }
                    }
                }
            }
        }
        best
    }

    /// Maps `q` to the copy (shifted by whole periods) used by triangle `t`.
    pub fn unwrap_for(&self, t: usize, q: Vec2) -> Vec2 {
        let c = (self.triangles[t].pos[0] + self.triangles[t].pos[1] + self.triangles[t].pos[2]) / 3.0;
        let k = ((c.y - q.y) / self.period).round();
        Vec2::new(q.x, q.y + k * self.period)
    }
}
