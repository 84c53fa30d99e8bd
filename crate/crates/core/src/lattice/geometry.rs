use std::collections::HashMap;
use std::fmt;

use super::transfer;
use crate::{Error, Result};

/// Largest volume summed by exhaustive enumeration; configurations are
/// packed into `u32`.
pub const MAX_VOLUME: usize = 24;
/// Largest volume for which a full 2^|V| probability table is materialized.
pub const MAX_TABLE_VOLUME: usize = 20;

pub type Coord = Vec<i64>;

/// A d-dimensional rectangular box `V = [0, L_1) × … × [0, L_d)` together
/// with its outer boundary `∂V` (sites at lattice distance exactly 1).
///
/// Interior sites are indexed lexicographically with the last coordinate
/// varying fastest. Boundary sites are sorted lexicographically by
/// coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxGeometry {
    extents: Vec<usize>,
    sites: Vec<Coord>,
    boundary: Vec<Coord>,
    interior_edges: Vec<(usize, usize)>,
    crossing_edges: Vec<(usize, usize)>,
    boundary_lookup: HashMap<Coord, usize>,
}

/// A lattice symmetry of the box, acting on interior and boundary indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxSymmetry {
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

impl BoxGeometry {
    pub fn new(dim: usize, extents: &[usize]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGeometry("dimension must be positive".into()));
        }
        if extents.len() != dim {
            return Err(Error::InvalidGeometry(format!(
                "{} extents given for dimension {dim}",
                extents.len()
            )));
        }
        if extents.contains(&0) {
            return Err(Error::InvalidGeometry("extents must be positive".into()));
        }
        let volume = extents
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(l))
            .unwrap_or(usize::MAX);
        let strip = dim == 2
            && extents.iter().min().copied().unwrap_or(0) <= transfer::MAX_HEIGHT
            && extents.iter().max().copied().unwrap_or(0) <= transfer::MAX_COLUMNS;
        if volume > MAX_VOLUME && !strip {
            return Err(Error::TooLarge {
                what: "interior volume",
                actual: volume,
                limit: MAX_VOLUME,
            });
        }

        let mut sites = Vec::with_capacity(volume);
        let mut coord = vec![0i64; dim];
        for _ in 0..volume {
            sites.push(coord.clone());
            for axis in (0..dim).rev() {
                coord[axis] += 1;
                if (coord[axis] as usize) < extents[axis] {
                    break;
                }
                coord[axis] = 0;
            }
        }
        let site_lookup: HashMap<Coord, usize> =
            sites.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();

        let mut boundary: Vec<Coord> = Vec::new();
        for c in &sites {
            for axis in 0..dim {
                for step in [-1i64, 1] {
                    let mut n = c.clone();
                    n[axis] += step;
                    if !site_lookup.contains_key(&n) {
                        boundary.push(n);
                    }
                }
            }
        }
        boundary.sort();
        boundary.dedup();
        let boundary_lookup: HashMap<Coord, usize> =
            boundary.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();

        let mut interior_edges = Vec::new();
        let mut crossing_edges = Vec::new();
        for (i, c) in sites.iter().enumerate() {
            for axis in 0..dim {
                for step in [-1i64, 1] {
                    let mut n = c.clone();
                    n[axis] += step;
                    if let Some(&j) = site_lookup.get(&n) {
                        if i < j {
                            interior_edges.push((i, j));
                        }
                    } else {
                        crossing_edges.push((i, boundary_lookup[&n]));
                    }
                }
            }
        }
        interior_edges.sort_unstable();
        crossing_edges.sort_unstable();

        Ok(BoxGeometry {
            extents: extents.to_vec(),
            sites,
            boundary,
            interior_edges,
            crossing_edges,
            boundary_lookup,
        })
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn volume(&self) -> usize {
        self.sites.len()
    }

    pub fn boundary_len(&self) -> usize {
        self.boundary.len()
    }

    pub fn sites(&self) -> &[Coord] {
        &self.sites
    }

    pub fn boundary_sites(&self) -> &[Coord] {
        &self.boundary
    }

    pub fn interior_edges(&self) -> &[(usize, usize)] {
        &self.interior_edges
    }

    /// Pairs `(x, y)` with `x ∈ V`, `y ∈ ∂V` and `x ∼ y`.
    pub fn crossing_edges(&self) -> &[(usize, usize)] {
        &self.crossing_edges
    }

    pub fn boundary_index(&self, coord: &[i64]) -> Option<usize> {
        self.boundary_lookup.get(coord).copied()
    }

    /// Interior sites adjacent to boundary site `y`.
    pub fn boundary_neighbors(&self, y: usize) -> Vec<usize> {
        self.crossing_edges
            .iter()
            .filter(|&&(_, b)| b == y)
            .map(|&(x, _)| x)
            .collect()
    }

    /// Exhaustive enumeration needs `|V| ≤ 24`.
    pub fn check_naive_size(&self) -> Result<()> {
        if self.volume() > MAX_VOLUME {
            return Err(Error::TooLarge {
                what: "interior volume for enumeration",
                actual: self.volume(),
                limit: MAX_VOLUME,
            });
        }
        Ok(())
    }

    pub fn check_table_size(&self) -> Result<()> {
        if self.volume() > MAX_TABLE_VOLUME {
            return Err(Error::TooLarge {
                what: "table volume",
                actual: self.volume(),
                limit: MAX_TABLE_VOLUME,
            });
        }
        Ok(())
    }

    /// Canonical text form, e.g. `d=2;extents=3x4`.
    pub fn id(&self) -> String {
        self.to_string()
    }

    /// All lattice symmetries of the box: reflections along each axis
    /// combined with permutations of axes of equal extent.
    pub fn symmetries(&self) -> Vec<BoxSymmetry> {
        let dim = self.dim();
        let mut out = Vec::new();
        for perm in permutations(dim) {
            if (0..dim).any(|a| self.extents[perm[a]] != self.extents[a]) {
                continue;
            }
            for reflect in 0u32..(1 << dim) {
                let map = |c: &Coord| -> Coord {
                    (0..dim)
                        .map(|a| {
                            let v = c[perm[a]];
                            if reflect >> a & 1 == 1 {
                                self.extents[a] as i64 - 1 - v
                            } else {
                                v
                            }
                        })
                        .collect()
                };
                let interior = self.sites.iter().map(|c| self.site_index(&map(c))).collect();
                let boundary = self.boundary.iter().map(|c| self.boundary_lookup[&map(c)]).collect();
                out.push(BoxSymmetry { interior, boundary });
            }
        }
        out
    }

    fn site_index(&self, c: &[i64]) -> usize {
        c.iter()
            .zip(&self.extents)
            .fold(0usize, |acc, (&x, &l)| acc * l + x as usize)
    }
}

impl fmt::Display for BoxGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ext: Vec<String> = self.extents.iter().map(|l| l.to_string()).collect();
        write!(f, "d={};extents={}", self.dim(), ext.join("x"))
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Parses `3x4`, `3` or `2x2x2` into a list of extents.
pub fn parse_extents(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    if parts.is_empty() || parts.len() > 3 {
        return Err(Error::InvalidParameter(format!(
            "extents `{s}` must have 1 to 3 factors"
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("bad extent `{p}` in `{s}`")))
        })
        .collect()
}
