//! Site-energy organisation of the intra-layer three-body sum.
//!
//! Each atom carries the triangles it centres: same-sublattice pairs of
//! neighbours with weight 1/6 and (other-sublattice, same-sublattice) pairs
//! with weight 1/2. Summed over both sublattices this counts every triangle
//! of the layer with the correct multiplicity.

use serde::{Deserialize, Serialize};

use crate::geometry::{LatticeSpec, Species};
use crate::lattice::{offsets, Offset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Every triplet within the cutoff.
    #[default]
    All,
    /// Only triplets that are triangles of the interpolation triangulation:
    /// empty same-sublattice unit triangles and the three-way split of the
    /// filled ones.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletTerm {
    pub first: Offset,
    pub second: Offset,
    pub weight: f64,
}

/// Triplet terms centred on an atom of `center`, with bond vectors no
/// longer than `radius`.
pub fn triplet_terms(spec: &LatticeSpec, center: Species, radius: f64, selection: Selection) -> Vec<TripletTerm> {
    let other = center.with_sublattice(center.sublattice.other());
    let same = offsets(spec, center, center, radius);
    let mixed = offsets(spec, center, other, radius);
    let shift = spec.offset(other) - spec.offset(center);
    let a = spec.a;
    let tol = 1e-9 * a;
    let close = |x: f64, y: f64| (x - y).abs() <= tol;
    let mut out = Vec::new();
    for (i, s1) in same.iter().enumerate() {
        for (j, s2) in same.iter().enumerate() {
            if i == j {
                continue;
            }
            if selection == Selection::Nearest {
                let unit = close(s1.vec.norm(), a) && close(s2.vec.norm(), a) && close((s1.vec - s2.vec).norm(), a);
                let centroid = (s1.vec + s2.vec) / 3.0;
                if !unit || spec.is_lattice_vector(centroid - shift, 1e-9) {
                    continue;
                }
            }
            out.push(TripletTerm {
                first: *s1,
                second: *s2,
                weight: 1.0 / 6.0,
            });
        }
    }
    let short = a / crate::geometry::SQRT3;
    for s1 in &mixed {
        for s2 in &same {
            if selection == Selection::Nearest
                && !(close(s1.vec.norm(), short) && close(s2.vec.norm(), a) && close((s1.vec - s2.vec).norm(), short))
            {
                continue;
            }
            out.push(TripletTerm {
                first: *s1,
                second: *s2,
                weight: 0.5,
            });
        }
    }
    out
}
