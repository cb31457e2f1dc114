//! Integral geometry of lines in R^d: the motion-invariant line measure,
//! isotropic random lines through unions of lattice boxes, and box
//! traversal along a directed line.

pub mod hull;
pub mod traversal;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::{check_dim, doubled_dist_sq, Bounds, Cluster, SiteLookup, SiteSet, MAX_DIM};

pub use traversal::{box_interval, traverse, traverse_sites, Traversal, SLAB_TOL};

pub type Point = [f64; MAX_DIM];

/// Default cap on consecutive rejected lines.
pub const DEFAULT_MAX_REJECTIONS: u64 = 1_000_000;

/// Volume of the unit ball in R^k, `pi^(k/2) / Gamma(k/2 + 1)`, evaluated via
/// the recurrence `kappa_k = kappa_{k-2} * 2 pi / k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(k - 2) * 2.0 * std::f64::consts::PI / k as f64,
    }
}

/// Crofton constant: the line measure of a convex body K equals
/// `alpha_d(d) * V_{d-1}(K)`.
pub fn alpha_d(d: usize) -> f64 {
    2.0 * unit_ball_volume(d - 1) / (d as f64 * unit_ball_volume(d))
}

/// An oriented line: `base + t * direction`, `direction` a unit vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectedLine {
    dim: usize,
    base: Point,
    direction: Point,
}

impl DirectedLine {
    /// Normalizes `direction`; rejects mismatched lengths or a zero vector.
    pub fn new(base: &[f64], direction: &[f64]) -> Result<Self> {
        check_dim(base.len())?;
        if direction.len() != base.len() {
            return Err(Error::InvalidParameter(
                "base and direction lengths differ".into(),
            ));
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("direction must be nonzero".into()));
        }
        let mut b = [0.0; MAX_DIM];
        let mut v = [0.0; MAX_DIM];
        b[..base.len()].copy_from_slice(base);
        for (dst, src) in v.iter_mut().zip(direction) {
            *dst = src / norm;
        }
        Ok(DirectedLine {
            dim: base.len(),
            base: b,
            direction: v,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &[f64] {
        &self.base[..self.dim]
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction[..self.dim]
    }

    pub fn at(&self, t: f64) -> Point {
        let mut p = [0.0; MAX_DIM];
        for i in 0..self.dim {
            p[i] = self.base[i] + t * self.direction[i];
        }
        p
    }

    pub fn reversed(&self) -> Self {
        let mut r = *self;
        for v in &mut r.direction[..self.dim] {
            *v = -*v;
        }
        r
    }

    /// Distance from `point` to the line.
    pub fn distance_to(&self, point: &[f64]) -> f64 {
        let mut along = 0.0;
        for i in 0..self.dim {
            along += (point[i] - self.base[i]) * self.direction[i];
        }
        let foot = self.at(along);
        (0..self.dim)
            .map(|i| (point[i] - foot[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Uniform direction on the unit sphere S^{d-1}: a standard normal vector,
/// normalized.
pub fn sample_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Point {
    loop {
        let mut v = [0.0; MAX_DIM];
        let mut norm_sq = 0.0f64;
        for x in &mut v[..dim] {
            *x = rng.sample(StandardNormal);
            norm_sq += *x * *x;
        }
        if norm_sq > 1e-200 {
            let norm = norm_sq.sqrt();
            for x in &mut v[..dim] {
                *x /= norm;
            }
            return v;
        }
    }
}

/// A ball that contains every box `C_z` of some site set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnclosingBall {
    pub dim: usize,
    pub center: Point,
    pub radius: f64,
}

impl EnclosingBall {
    fn from_far(bounds: &Bounds, far_sq4: i64) -> Self {
        let dim = bounds.dim;
        EnclosingBall {
            dim,
            center: bounds.center(),
            radius: (far_sq4 as f64).sqrt() / 2.0 + (dim as f64).sqrt() / 2.0 + 1e-9,
        }
    }

    /// Center at the bounding-box midpoint; radius is the farthest site
    /// distance plus the box half-diagonal `sqrt(d)/2` plus 1e-9.
    pub fn around(set: &SiteSet) -> Result<Self> {
        let bounds = set.bounds().ok_or(Error::EmptySet)?;
        let center = bounds.doubled_center();
        let far = set.iter().map(|s| doubled_dist_sq(s, &center)).max().unwrap_or(0);
        Ok(Self::from_far(&bounds, far))
    }

    /// The same ball for a cluster's outer boundary, from cached extents.
    pub fn around_boundary(cluster: &Cluster) -> Self {
        Self::from_far(&cluster.boundary_bounds(), cluster.boundary_far_sq4())
    }
}

/// Isotropic random line conditioned to hit the ball `B(center, radius)`.
///
/// The direction is uniform on the sphere and the foot point is uniform on
/// the (d-1)-disk of radius `radius` orthogonal to it, which is the
/// normalized invariant measure restricted to lines hitting the ball, with
/// a uniformly random orientation.
pub fn sample_line_hitting_ball<R: Rng + ?Sized>(
    dim: usize,
    center: &[f64],
    radius: f64,
    rng: &mut R,
) -> DirectedLine {
    let direction = sample_direction(dim, rng);
    // uniform direction in the orthogonal complement
    let perp = loop {
        let g = sample_direction(dim, rng);
        let dot: f64 = (0..dim).map(|i| g[i] * direction[i]).sum();
        let mut w = [0.0; MAX_DIM];
        let mut norm_sq = 0.0;
        for i in 0..dim {
            w[i] = g[i] - dot * direction[i];
            norm_sq += w[i] * w[i];
        }
        if norm_sq > 1e-20 {
            let n = norm_sq.sqrt();
            for x in &mut w[..dim] {
                *x /= n;
            }
            break w;
        }
    };
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / (dim as f64 - 1.0));
    let mut base = [0.0; MAX_DIM];
    for i in 0..dim {
        base[i] = center[i] + r * perp[i];
    }
    DirectedLine {
        dim,
        base,
        direction,
    }
}

/// A line accepted by [`sample_isotropic_line`], with its traversal.
#[derive(Clone, Debug)]
pub struct SampledLine {
    pub line: DirectedLine,
    pub traversal: Traversal,
    pub rejections: u64,
}

/// Isotropic random line through the union of boxes of `target`: lines
/// through `ball` are drawn until one meets some box. `ball` must contain
/// every box of the target.
pub fn sample_isotropic_line_in<L: SiteLookup, R: Rng + ?Sized>(
    target: &L,
    ball: &EnclosingBall,
    rng: &mut R,
    max_rejections: u64,
) -> Result<SampledLine> {
    let mut rejections = 0;
    loop {
        let line = sample_line_hitting_ball(ball.dim, &ball.center, ball.radius, rng);
        let traversal = traverse(&line, target);
        if !traversal.is_empty() {
            return Ok(SampledLine {
                line,
                traversal,
                rejections,
            });
        }
        rejections += 1;
        if rejections >= max_rejections {
            return Err(Error::SamplingFailure { rejections });
        }
    }
}

/// Isotropic random line through the union of boxes of `target`, using the
/// enclosing ball from [`EnclosingBall::around`].
pub fn sample_isotropic_line<R: Rng + ?Sized>(
    target: &SiteSet,
    rng: &mut R,
    max_rejections: u64,
) -> Result<SampledLine> {
    let ball = EnclosingBall::around(target)?;
    sample_isotropic_line_in(target, &ball, rng, max_rejections)
}
