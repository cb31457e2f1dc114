//! Ordered list of lattice boxes met by a directed line.
//!
//! A box `C_z = z + [-1/2, 1/2]^d` is met when the slab intervals of the
//! line intersect in a chord longer than [`SLAB_TOL`]; corner and edge
//! touches have zero chord and are not counted. Boxes are ordered by the
//! parameter at which the line enters them, ties broken by the
//! lexicographic order of the sites.

use crate::lattice::{Site, SiteLookup, MAX_DIM};

use super::DirectedLine;

pub const SLAB_TOL: f64 = 1e-9;

// direction components below this are treated as parallel to the slab
const PARALLEL_EPS: f64 = 1e-15;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Traversal {
    /// Sites in visit order along the line direction.
    pub visited: Vec<Site>,
    /// Entry parameter of each visited box, nondecreasing.
    pub entry: Vec<f64>,
}

impl Traversal {
    pub fn len(&self) -> usize {
        self.visited.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visited.is_empty()
    }

    pub fn first(&self) -> Option<&Site> {
        self.visited.first()
    }

    pub fn last(&self) -> Option<&Site> {
        self.visited.last()
    }

    fn from_hits(mut hits: Vec<(f64, Site)>) -> Self {
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let (entry, visited) = hits.into_iter().unzip();
        Traversal { visited, entry }
    }
}

/// Entry and exit parameters of the line through the box of `site`, or
/// `None` if the chord is not longer than [`SLAB_TOL`].
#[inline]
pub fn box_interval(line: &DirectedLine, site: &Site) -> Option<(f64, f64)> {
    let mut enter = f64::NEG_INFINITY;
    let mut exit = f64::INFINITY;
    for axis in 0..line.dim {
        let b = line.base[axis];
        let v = line.direction[axis];
        let z = f64::from(site.coord(axis));
        if v.abs() < PARALLEL_EPS {
            if (b - z).abs() > 0.5 + SLAB_TOL {
                return None;
            }
            continue;
        }
        let t0 = (z - 0.5 - b) / v;
        let t1 = (z + 0.5 - b) / v;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        enter = enter.max(lo);
        exit = exit.min(hi);
    }
    (exit - enter > SLAB_TOL).then_some((enter, exit))
}

/// Per-site slab tests over an explicit list of sites.
pub fn traverse_sites<'a>(line: &DirectedLine, sites: impl IntoIterator<Item = &'a Site>) -> Traversal {
    let hits = sites
        .into_iter()
        .filter_map(|s| box_interval(line, s).map(|(t, _)| (t, *s)))
        .collect();
    Traversal::from_hits(hits)
}

/// Incremental grid stepping (Amanatides–Woo) through the bounding box of
/// `set`; each visited cell that belongs to the set is confirmed with the
/// slab test. Agrees with [`traverse_sites`] except on lines lying exactly
/// in a box face, which have measure zero.
pub fn traverse<L: SiteLookup + ?Sized>(line: &DirectedLine, set: &L) -> Traversal {
    let Some(bounds) = set.bounds() else {
        return Traversal::default();
    };
    let dim = line.dim;

    // clip to the union of the bounding box's cells
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for axis in 0..dim {
        let b = line.base[axis];
        let v = line.direction[axis];
        let lo = f64::from(bounds.lo[axis]) - 0.5 - SLAB_TOL;
        let hi = f64::from(bounds.hi[axis]) + 0.5 + SLAB_TOL;
        if v.abs() < PARALLEL_EPS {
            if b < lo || b > hi {
                return Traversal::default();
            }
            continue;
        }
        let t0 = (lo - b) / v;
        let t1 = (hi - b) / v;
        t_enter = t_enter.max(t0.min(t1));
        t_exit = t_exit.min(t0.max(t1));
    }
    if t_exit <= t_enter {
        return Traversal::default();
    }

    let start = line.at(t_enter);
    let mut cell = [0i32; MAX_DIM];
    let mut step = [0i32; MAX_DIM];
    let mut t_max = [f64::INFINITY; MAX_DIM];
    for axis in 0..dim {
        let c = (start[axis] + 0.5).floor() as i32;
        cell[axis] = c.clamp(bounds.lo[axis], bounds.hi[axis]);
        let v = line.direction[axis];
        if v.abs() >= PARALLEL_EPS {
            step[axis] = if v > 0.0 { 1 } else { -1 };
            t_max[axis] = next_crossing(line, axis, cell[axis], step[axis]);
        }
    }

    let mut hits = Vec::new();
    loop {
        let site = Site::from_array(cell, dim);
        if set.contains(&site) {
            if let Some((t, _)) = box_interval(line, &site) {
                hits.push((t, site));
            }
        }
        let mut axis = 0;
        for a in 1..dim {
            if t_max[a] < t_max[axis] {
                axis = a;
            }
        }
        if t_max[axis] > t_exit {
            break;
        }
        cell[axis] += step[axis];
        if cell[axis] < bounds.lo[axis] || cell[axis] > bounds.hi[axis] {
            break;
        }
        t_max[axis] = next_crossing(line, axis, cell[axis], step[axis]);
    }
    Traversal::from_hits(hits)
}

#[inline]
fn next_crossing(line: &DirectedLine, axis: usize, cell: i32, step: i32) -> f64 {
    let face = f64::from(cell) + 0.5 * f64::from(step);
    (face - line.base[axis]) / line.direction[axis]
}
