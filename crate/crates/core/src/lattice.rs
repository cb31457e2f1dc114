//! Lattice primitives: sites of Z^d, finite site sets and growing clusters
//! with an incrementally maintained outer boundary.

use std::fmt;
use std::hash::{Hash, Hasher};

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::hull;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 6;

pub fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidDimension(dim))
    }
}

/// A point of the integer lattice Z^d. Coordinates past `dim` are zero.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Site {
    coords: [i32; MAX_DIM],
    dim: u8,
}

impl Hash for Site {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for &c in self.coords() {
            state.write_i32(c);
        }
    }
}

impl Site {
    /// Panics if `coords.len()` is not a supported dimension; use
    /// [`Site::try_new`] for untrusted input.
    pub fn new(coords: &[i32]) -> Self {
        Self::try_new(coords).expect("site dimension out of range")
    }

    pub fn try_new(coords: &[i32]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Site {
            coords: c,
            dim: coords.len() as u8,
        })
    }

    pub fn origin(dim: usize) -> Self {
        Site {
            coords: [0; MAX_DIM],
            dim: dim as u8,
        }
    }

    pub(crate) fn from_array(coords: [i32; MAX_DIM], dim: usize) -> Self {
        Site {
            coords,
            dim: dim as u8,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim()]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i32 {
        self.coords[axis]
    }

    #[inline]
    pub fn norm_sq(&self) -> i64 {
        self.coords().iter().map(|&c| i64::from(c) * i64::from(c)).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn dist_sq(&self, other: &Site) -> i64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| {
                let t = i64::from(a) - i64::from(b);
                t * t
            })
            .sum()
    }

    #[inline]
    pub fn offset(&self, axis: usize, delta: i32) -> Site {
        let mut s = *self;
        s.coords[axis] += delta;
        s
    }

    /// The 2d nearest neighbors, ordered +e_1, -e_1, +e_2, -e_2, ...
    pub fn neighbors(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.dim()).flat_map(move |axis| [self.offset(axis, 1), self.offset(axis, -1)])
    }

    pub fn is_neighbor(&self, other: &Site) -> bool {
        self.dist_sq(other) == 1
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<[i32; 2]> for Site {
    fn from(c: [i32; 2]) -> Self {
        Site::new(&c)
    }
}

impl From<[i32; 3]> for Site {
    fn from(c: [i32; 3]) -> Self {
        Site::new(&c)
    }
}

// serialized as its coordinate list
impl Serialize for Site {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<i32>::deserialize(deserializer)?;
        Site::try_new(&coords).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned bounding box of a nonempty site set, inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub dim: usize,
    pub lo: [i32; MAX_DIM],
    pub hi: [i32; MAX_DIM],
}

impl Bounds {
    pub fn of_site(site: &Site) -> Self {
        Bounds {
            dim: site.dim(),
            lo: site.coords,
            hi: site.coords,
        }
    }

    /// Returns true if the box grew.
    pub fn include(&mut self, site: &Site) -> bool {
        let mut grew = false;
        for axis in 0..self.dim {
            let c = site.coords[axis];
            if c < self.lo[axis] {
                self.lo[axis] = c;
                grew = true;
            }
            if c > self.hi[axis] {
                self.hi[axis] = c;
                grew = true;
            }
        }
        grew
    }

    pub fn of_sites<'a>(sites: impl IntoIterator<Item = &'a Site>) -> Option<Self> {
        let mut it = sites.into_iter();
        let mut b = Bounds::of_site(it.next()?);
        for s in it {
            b.include(s);
        }
        Some(b)
    }

    pub fn expanded(&self, by: i32) -> Self {
        let mut b = *self;
        for axis in 0..self.dim {
            b.lo[axis] -= by;
            b.hi[axis] += by;
        }
        b
    }

    /// Twice the box midpoint, which is always integral.
    pub fn doubled_center(&self) -> [i64; MAX_DIM] {
        let mut c = [0; MAX_DIM];
        for axis in 0..self.dim {
            c[axis] = i64::from(self.lo[axis]) + i64::from(self.hi[axis]);
        }
        c
    }

    pub fn center(&self) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for (axis, v) in self.doubled_center().iter().enumerate().take(self.dim) {
            c[axis] = *v as f64 / 2.0;
        }
        c
    }
}

/// Squared distance from `2·site` to a doubled center, i.e. four times the
/// squared distance from `site` to the center.
#[inline]
pub(crate) fn doubled_dist_sq(site: &Site, doubled_center: &[i64; MAX_DIM]) -> i64 {
    site.coords()
        .iter()
        .zip(doubled_center)
        .map(|(&c, &m)| {
            let t = 2 * i64::from(c) - m;
            t * t
        })
        .sum()
}

/// Membership queries used by line traversal and random walkers.
pub trait SiteLookup {
    fn dim(&self) -> usize;
    fn contains(&self, site: &Site) -> bool;
    /// Bounding box of the set, `None` when empty.
    fn bounds(&self) -> Option<Bounds>;
}

/// A finite set of sites with its bounding box.
#[derive(Clone, Debug)]
pub struct SiteSet {
    dim: usize,
    sites: FxHashSet<Site>,
    bounds: Option<Bounds>,
}

impl SiteSet {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(SiteSet {
            dim,
            sites: FxHashSet::default(),
            bounds: None,
        })
    }

    pub fn from_sites<'a>(dim: usize, sites: impl IntoIterator<Item = &'a Site>) -> Result<Self> {
        let mut set = SiteSet::new(dim)?;
        for s in sites {
            set.insert(*s)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, site: Site) -> Result<bool> {
        if site.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                site,
                expected: self.dim,
                found: site.dim(),
            });
        }
        match &mut self.bounds {
            Some(b) => {
                b.include(&site);
            }
            None => self.bounds = Some(Bounds::of_site(&site)),
        }
        Ok(self.sites.insert(site))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter()
    }

    /// Sites in lexicographic order.
    pub fn sorted(&self) -> Vec<Site> {
        let mut v: Vec<Site> = self.sites.iter().copied().collect();
        v.sort_unstable();
        v
    }

    /// Largest Euclidean norm over the set (0 when empty).
    pub fn radius(&self) -> f64 {
        (self.sites.iter().map(Site::norm_sq).max().unwrap_or(0) as f64).sqrt()
    }
}

impl PartialEq for SiteSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.sites == other.sites
    }
}

impl SiteLookup for SiteSet {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn contains(&self, site: &Site) -> bool {
        self.sites.contains(site)
    }

    fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }
}

/// From-scratch outer boundary: every site outside `sites` with a nearest
/// neighbor inside.
pub fn outer_boundary(sites: &[Site]) -> Result<SiteSet> {
    let first = sites.first().ok_or(Error::EmptySet)?;
    let members = SiteSet::from_sites(first.dim(), sites)?;
    let mut out = SiteSet::new(first.dim())?;
    for s in sites {
        for n in s.neighbors() {
            if !members.contains(&n) {
                out.insert(n)?;
            }
        }
    }
    Ok(out)
}

/// Connectivity in the nearest-neighbor graph, by flood fill.
pub fn is_connected(sites: &[Site]) -> bool {
    let Some(start) = sites.first() else {
        return true;
    };
    let members: FxHashSet<Site> = sites.iter().copied().collect();
    let mut seen = FxHashSet::default();
    seen.insert(*start);
    let mut stack = vec![*start];
    while let Some(s) = stack.pop() {
        for n in s.neighbors() {
            if members.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == members.len()
}

/// Squared diameter (largest pairwise squared distance) of a site set.
///
/// In d = 2 the maximum is taken over convex hull vertices; otherwise over
/// all pairs, pruned by norms since `|x - y| <= |x| + |y|`.
pub fn diameter_sq(sites: &[Site]) -> i64 {
    if sites.len() < 2 {
        return 0;
    }
    if sites[0].dim() == 2 {
        let pts: Vec<[f64; 2]> = sites
            .iter()
            .map(|s| [f64::from(s.coord(0)), f64::from(s.coord(1))])
            .collect();
        let h = hull::hull2d(&pts);
        let verts: Vec<Site> = h
            .iter()
            .map(|p| Site::new(&[p[0] as i32, p[1] as i32]))
            .collect();
        return pairwise_max_sq(&verts);
    }
    let mut by_norm: Vec<(f64, &Site)> = sites.iter().map(|s| (s.norm(), s)).collect();
    by_norm.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0i64;
    for (i, (ni, si)) in by_norm.iter().enumerate() {
        // no later pair can beat the current best
        if 2.0 * ni + 1e-9 < (best as f64).sqrt() {
            break;
        }
        for (nj, sj) in &by_norm[i + 1..] {
            if ni + nj + 1e-9 < (best as f64).sqrt() {
                break;
            }
            best = best.max(si.dist_sq(sj));
        }
    }
    best
}

fn pairwise_max_sq(sites: &[Site]) -> i64 {
    let mut best = 0;
    for (i, a) in sites.iter().enumerate() {
        for b in &sites[i + 1..] {
            best = best.max(a.dist_sq(b));
        }
    }
    best
}

/// The growing aggregate.
///
/// Holds the sites in attach order, the member set, the outer boundary as a
/// hash index over a dense array (for O(1) uniform sampling), the cached
/// radius and bounding box, and the farthest boundary distance from the
/// boundary's bounding-box midpoint (for enclosing-ball line sampling).
#[derive(Clone, Debug)]
pub struct Cluster {
    dim: usize,
    order: Vec<Site>,
    members: FxHashSet<Site>,
    boundary: Vec<Site>,
    boundary_pos: FxHashMap<Site, usize>,
    radius_sq: i64,
    bounds: Bounds,
    // max over the boundary of |2y - doubled center of boundary bbox|^2
    boundary_far_sq4: i64,
}

impl Cluster {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let origin = Site::origin(dim);
        let mut c = Cluster {
            dim,
            order: vec![origin],
            members: FxHashSet::default(),
            boundary: Vec::new(),
            boundary_pos: FxHashMap::default(),
            radius_sq: 0,
            bounds: Bounds::of_site(&origin),
            boundary_far_sq4: 0,
        };
        c.members.insert(origin);
        for n in origin.neighbors() {
            c.push_boundary(n);
        }
        c.recompute_far();
        Ok(c)
    }

    /// Rebuilds a cluster by replaying an attach sequence, which must start at
    /// the origin and add only boundary sites.
    pub fn from_attach_order(dim: usize, order: &[Site]) -> Result<Self> {
        let mut c = Cluster::new(dim)?;
        match order.first() {
            None => return Err(Error::EmptySet),
            Some(s) if *s != Site::origin(dim) => {
                return Err(Error::InvalidParameter(format!(
                    "attach order must start at the origin, found {s}"
                )))
            }
            _ => {}
        }
        for s in &order[1..] {
            c.attach(*s)?;
        }
        Ok(c)
    }

    /// The cluster after its first `n` attachments.
    pub fn prefix(&self, n: usize) -> Result<Cluster> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidParameter(format!(
                "prefix length {n} outside 1..={}",
                self.len()
            )));
        }
        Cluster::from_attach_order(self.dim, &self.order[..n])
    }

    pub fn attach(&mut self, site: Site) -> Result<()> {
        if site.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                site,
                expected: self.dim,
                found: site.dim(),
            });
        }
        let Some(pos) = self.boundary_pos.remove(&site) else {
            return Err(Error::NotInBoundary(site));
        };
        self.boundary.swap_remove(pos);
        if let Some(moved) = self.boundary.get(pos) {
            self.boundary_pos.insert(*moved, pos);
        }

        self.order.push(site);
        self.members.insert(site);
        self.radius_sq = self.radius_sq.max(site.norm_sq());
        let grew = self.bounds.include(&site);

        let center = self.boundary_bounds().doubled_center();
        let stale = grew || doubled_dist_sq(&site, &center) == self.boundary_far_sq4;
        for n in site.neighbors() {
            if !self.members.contains(&n) && !self.boundary_pos.contains_key(&n) {
                self.push_boundary(n);
                if !stale {
                    self.boundary_far_sq4 = self.boundary_far_sq4.max(doubled_dist_sq(&n, &center));
                }
            }
        }
        if stale {
            self.recompute_far();
        }
        Ok(())
    }

    fn push_boundary(&mut self, site: Site) {
        self.boundary_pos.insert(site, self.boundary.len());
        self.boundary.push(site);
    }

    fn recompute_far(&mut self) {
        let center = self.boundary_bounds().doubled_center();
        self.boundary_far_sq4 = self
            .boundary
            .iter()
            .map(|s| doubled_dist_sq(s, &center))
            .max()
            .unwrap_or(0);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sites in attach order.
    pub fn sites(&self) -> &[Site] {
        &self.order
    }

    pub fn contains(&self, site: &Site) -> bool {
        self.members.contains(site)
    }

    /// Boundary sites in internal (unspecified but deterministic) order.
    pub fn boundary(&self) -> &[Site] {
        &self.boundary
    }

    pub fn boundary_contains(&self, site: &Site) -> bool {
        self.boundary_pos.contains_key(site)
    }

    pub fn boundary_set(&self) -> SiteSet {
        SiteSet::from_sites(self.dim, &self.boundary).expect("boundary sites share the cluster dimension")
    }

    pub fn member_set(&self) -> SiteSet {
        SiteSet::from_sites(self.dim, &self.order).expect("member sites share the cluster dimension")
    }

    pub fn boundary_view(&self) -> BoundaryView<'_> {
        BoundaryView(self)
    }

    pub fn radius_sq(&self) -> i64 {
        self.radius_sq
    }

    pub fn radius(&self) -> f64 {
        (self.radius_sq as f64).sqrt()
    }

    /// Largest norm over the boundary, computed on demand.
    pub fn boundary_radius_sq(&self) -> i64 {
        self.boundary.iter().map(Site::norm_sq).max().unwrap_or(0)
    }

    pub fn diameter_sq(&self) -> i64 {
        diameter_sq(&self.order)
    }

    pub fn diameter(&self) -> f64 {
        (self.diameter_sq() as f64).sqrt()
    }

    /// Bounding box of the members.
    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// Bounding box of the boundary; always the member box grown by one.
    pub fn boundary_bounds(&self) -> Bounds {
        self.bounds.expanded(1)
    }

    /// Four times the squared distance from the boundary-box midpoint to the
    /// farthest boundary site.
    pub fn boundary_far_sq4(&self) -> i64 {
        self.boundary_far_sq4
    }
}

impl PartialEq for Cluster {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.order == other.order
    }
}

/// Borrowed view of a cluster's outer boundary.
#[derive(Clone, Copy)]
pub struct BoundaryView<'a>(&'a Cluster);

impl SiteLookup for BoundaryView<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[inline]
    fn contains(&self, site: &Site) -> bool {
        self.0.boundary_pos.contains_key(site)
    }

    fn bounds(&self) -> Option<Bounds> {
        Some(self.0.boundary_bounds())
    }
}
