//! Symmetry reduction of the boundary enumeration for a fixed flip site `y`.
//!
//! The free part `σ_{∂V∖y}` is acted on by the lattice symmetries fixing
//! `y` and by the global spin flip. The latter is a symmetry of the flip
//! pair: `(b⁺, b⁻) ↦ (−b⁻, −b⁺)`, and `−b⁻` again has `+` at `y`.

use serde::Serialize;

use crate::lattice::{BoundaryCondition, BoxGeometry};
use crate::{Error, Result};

/// Largest `|∂V| − 1` the enumeration accepts.
pub const MAX_FREE_BOUNDARY: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryOrbit {
    /// Canonical representative, with `σ_y = +1`.
    pub representative: BoundaryCondition,
    pub multiplicity: u64,
}

/// Which boundary conditions to visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySearch {
    /// Every orbit; certifying.
    Full,
    /// Only the constant `σ_{∂V∖y}` configurations. Exploration only.
    ExtremalOnly,
}

/// Boundary indices other than `y`, in order; bit `k` of a free pattern
/// is the spin at `others[k]`.
fn free_sites(g: &BoxGeometry, y: usize) -> Vec<usize> {
    (0..g.boundary_len()).filter(|&i| i != y).collect()
}

pub(crate) fn expand(g: &BoxGeometry, y: usize, others: &[usize], pattern: u64) -> BoundaryCondition {
    let mut b = BoundaryCondition::all_minus(g.boundary_len());
    b.set(y, 1);
    for (k, &site) in others.iter().enumerate() {
        if pattern >> k & 1 == 1 {
            b.set(site, 1);
        }
    }
    b
}

/// Orbits of `{±1}^{∂V∖y}` in ascending order of their canonical
/// (numerically smallest) pattern. With `symmetry` off every pattern is
/// its own orbit.
pub fn boundary_orbits(
    g: &BoxGeometry,
    y: usize,
    symmetry: bool,
    search: BoundarySearch,
) -> Result<Vec<BoundaryOrbit>> {
    if y >= g.boundary_len() {
        return Err(Error::NotBoundarySite(y));
    }
    let others = free_sites(g, y);
    let n = others.len();
    if n > MAX_FREE_BOUNDARY {
        return Err(Error::TooLarge {
            what: "free boundary sites",
            actual: n,
            limit: MAX_FREE_BOUNDARY,
        });
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    // Each group element as (bit permutation on free patterns, complement?).
    let mut position = vec![usize::MAX; g.boundary_len()];
    for (k, &s) in others.iter().enumerate() {
        position[s] = k;
    }
    let mut group: Vec<(Vec<usize>, bool)> = Vec::new();
    if symmetry {
        for s in g.symmetries().iter().filter(|s| s.boundary[y] == y) {
            let perm: Vec<usize> = others.iter().map(|&site| position[s.boundary[site]]).collect();
            group.push((perm.clone(), false));
            group.push((perm, true));
        }
    } else {
        group.push(((0..n).collect(), false));
    }
    let act = |p: u64, (perm, flip): &(Vec<usize>, bool)| -> u64 {
        let mut out = 0u64;
        for (k, &to) in perm.iter().enumerate() {
            out |= (p >> k & 1) << to;
        }
        if *flip {
            out ^ full
        } else {
            out
        }
    };

    let candidates: Vec<u64> = match search {
        BoundarySearch::Full => (0..=full).collect(),
        BoundarySearch::ExtremalOnly => {
            let mut v = vec![0, full];
            v.dedup();
            v
        }
    };

    let mut orbits = Vec::new();
    let mut images = Vec::with_capacity(group.len());
    for p in candidates {
        images.clear();
        images.extend(group.iter().map(|gr| act(p, gr)));
        if images.iter().any(|&q| q < p) {
            continue;
        }
        images.sort_unstable();
        images.dedup();
        orbits.push(BoundaryOrbit {
            representative: expand(g, y, &others, p),
            multiplicity: images.len() as u64,
        });
    }
    Ok(orbits)
}

/// Boundary site with the index of a symmetry mapping the class
/// representative onto it (`None` for the representative itself).
pub(crate) type ClassMember = (usize, Option<usize>);

/// Orbits of boundary sites under the box symmetries: each entry is the
/// class representative (smallest index) followed by its members, together
/// with a symmetry carrying the representative onto each member.
pub(crate) fn site_classes(g: &BoxGeometry, symmetry: bool) -> Vec<(usize, Vec<ClassMember>)> {
    let syms = g.symmetries();
    let mut assigned = vec![false; g.boundary_len()];
    let mut classes = Vec::new();
    for y in 0..g.boundary_len() {
        if assigned[y] {
            continue;
        }
        assigned[y] = true;
        let mut members = vec![(y, None)];
        if symmetry {
            for (k, s) in syms.iter().enumerate() {
                let z = s.boundary[y];
                if !assigned[z] {
                    assigned[z] = true;
                    members.push((z, Some(k)));
                }
            }
        }
        classes.push((y, members));
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_orbits() {
        let g = BoxGeometry::new(2, &[1, 1]).unwrap();
        let east = g.boundary_index(&[0, 1]).unwrap();
        let orbits = boundary_orbits(&g, east, true, BoundarySearch::Full).unwrap();
        assert!(orbits.len() <= 4);
        assert_eq!(orbits.iter().map(|o| o.multiplicity).sum::<u64>(), 8);
        assert!(orbits.iter().all(|o| o.representative.spin(east) == 1));
        let raw = boundary_orbits(&g, east, false, BoundarySearch::Full).unwrap();
        assert_eq!(raw.len(), 8);
        assert!(raw.iter().all(|o| o.multiplicity == 1));
    }

    #[test]
    fn multiplicities_partition() {
        for ext in [[2, 2], [2, 3], [3, 3], [3, 4]] {
            let g = BoxGeometry::new(2, &ext).unwrap();
            for y in 0..g.boundary_len() {
                let orbits = boundary_orbits(&g, y, true, BoundarySearch::Full).unwrap();
                let total: u64 = orbits.iter().map(|o| o.multiplicity).sum();
                assert_eq!(total, 1 << (g.boundary_len() - 1));
                // global flip alone halves the count
                assert!(orbits.len() <= 1 << (g.boundary_len() - 2));
            }
        }
    }

    #[test]
    fn extremal_search() {
        let g = BoxGeometry::new(2, &[2, 2]).unwrap();
        let o = boundary_orbits(&g, 0, true, BoundarySearch::ExtremalOnly).unwrap();
        // all-minus and all-plus rest are global-flip partners
        assert_eq!(o.len(), 1);
        let o = boundary_orbits(&g, 0, false, BoundarySearch::ExtremalOnly).unwrap();
        assert_eq!(o.len(), 2);
    }

    #[test]
    fn classes_cover_boundary() {
        let g = BoxGeometry::new(2, &[3, 3]).unwrap();
        let classes = site_classes(&g, true);
        assert_eq!(classes.len(), 2);
        assert_eq!(classes.iter().map(|c| c.1.len()).sum::<usize>(), 12);
        assert_eq!(site_classes(&g, false).len(), 12);
    }

    #[test]
    fn bad_site() {
        let g = BoxGeometry::new(2, &[1, 1]).unwrap();
        assert!(matches!(
            boundary_orbits(&g, 4, true, BoundarySearch::Full),
            Err(Error::NotBoundarySite(4))
        ));
    }
}
