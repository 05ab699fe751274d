//! Bilayer AB-hexagonal geometry: basis vectors, shifts and atom indexing.

use crate::{Error, Result, Vec2};
use serde::{Deserialize, Serialize};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

impl Sublattice {
    pub fn other(self) -> Self {
        match self {
            Sublattice::A => Sublattice::B,
            Sublattice::B => Sublattice::A,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sublattice::A => "A",
            Sublattice::B => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    Upper,
    Lower,
}

impl Layer {
    pub fn other(self) -> Self {
        match self {
            Layer::Upper => Layer::Lower,
            Layer::Lower => Layer::Upper,
        }
    }

    /// `+1` for the upper layer, `-1` for the lower one.
    pub fn sign(self) -> f64 {
        match self {
            Layer::Upper => 1.0,
            Layer::Lower => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Layer::Upper => "+",
            Layer::Lower => "-",
        }
    }
}

/// One of the four simple lattices making up the bilayer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Species {
    pub layer: Layer,
    pub sublattice: Sublattice,
}

impl Species {
    pub const ALL: [Species; 4] = [
        Species::new(Layer::Upper, Sublattice::A),
        Species::new(Layer::Upper, Sublattice::B),
        Species::new(Layer::Lower, Sublattice::A),
        Species::new(Layer::Lower, Sublattice::B),
    ];

    pub const fn new(layer: Layer, sublattice: Sublattice) -> Self {
        Self { layer, sublattice }
    }

    /// Dense index in `0..4`, ordered as [`Species::ALL`].
    pub fn index(self) -> usize {
        let l = match self.layer {
            Layer::Upper => 0,
            Layer::Lower => 2,
        };
        let s = match self.sublattice {
            Sublattice::A => 0,
            Sublattice::B => 1,
        };
        l + s
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn with_sublattice(self, sublattice: Sublattice) -> Self {
        Self { sublattice, ..self }
    }

    pub fn with_layer(self, layer: Layer) -> Self {
        Self { layer, ..self }
    }
}

/// Geometry of the AB-stacked bilayer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub a: f64,
    pub layer_gap: f64,
}

impl LatticeSpec {
    pub fn new(a: f64, layer_gap: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("lattice constant must be positive, got {a}")));
        }
        if !(layer_gap > 0.0 && layer_gap.is_finite()) {
            return Err(Error::InvalidParameter(format!("layer gap must be positive, got {layer_gap}")));
        }
        Ok(Self { a, layer_gap })
    }

    pub fn e1(&self) -> Vec2 {
        Vec2::new(self.a, 0.0)
    }

    pub fn e2(&self) -> Vec2 {
        Vec2::new(0.5 * self.a, 0.5 * SQRT3 * self.a)
    }

    /// Intra-layer shift from sublattice A to sublattice B.
    pub fn p(&self) -> Vec2 {
        Vec2::new(0.5 * self.a, SQRT3 / 6.0 * self.a)
    }

    /// Shift from the upper layer to the lower layer.
    pub fn d(&self) -> Vec2 {
        Vec2::new(0.5 * self.a, -SQRT3 / 6.0 * self.a)
    }

    /// Minimal y-period of the complex lattice, `2 e2 - e1 = (0, √3 a)`.
    pub fn y_period(&self) -> f64 {
        SQRT3 * self.a
    }

    /// Area of a primitive cell.
    pub fn cell_area(&self) -> f64 {
        0.5 * SQRT3 * self.a * self.a
    }

    pub fn cell(&self, i: i64, j: i64) -> Vec2 {
        self.e1() * i as f64 + self.e2() * j as f64
    }

    /// In-plane offset of a species relative to the A⁺ atom of the same cell.
    pub fn offset(&self, species: Species) -> Vec2 {
        let mut v = Vec2::zeros();
        if species.sublattice == Sublattice::B {
            v += self.p();
        }
        if species.layer == Layer::Lower {
            v += self.d();
        }
        v
    }

    pub fn position(&self, index: &AtomIndex) -> Vec2 {
        self.cell(index.cell.0, index.cell.1) + self.offset(index.species)
    }

    /// Position within the atom's own layer, i.e. without the inter-layer
    /// shift `d`. Both layers share this parametrisation; continuum fields
    /// are sampled here.
    pub fn frame_position(&self, index: &AtomIndex) -> Vec2 {
        let mut v = self.cell(index.cell.0, index.cell.1);
        if index.species.sublattice == Sublattice::B {
            v += self.p();
        }
        v
    }

    /// Coordinates of `v` in the basis `(e1, e2)`.
    pub fn to_basis(&self, v: Vec2) -> (f64, f64) {
        let beta = v.y / (0.5 * SQRT3 * self.a);
        let alpha = v.x / self.a - 0.5 * beta;
        (alpha, beta)
    }

    /// Nearest representative of `v` modulo the Bravais lattice.
    pub fn reduce(&self, v: Vec2) -> Vec2 {
        let (alpha, beta) = self.to_basis(v);
        let base = v - self.cell(alpha.round() as i64, beta.round() as i64);
        let mut best = base;
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)] {
            let c = base - self.cell(di, dj);
            if c.norm_squared() < best.norm_squared() {
                best = c;
            }
        }
        best
    }

    /// Whether `v` is a Bravais lattice vector up to `tol` (in units of `a`).
    pub fn is_lattice_vector(&self, v: Vec2, tol: f64) -> bool {
        self.reduce(v).norm() <= tol * self.a
    }
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            a: 1.0,
            layer_gap: 1.0 / SQRT3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomIndex {
    pub cell: (i64, i64),
    pub species: Species,
}
