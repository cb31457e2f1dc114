//! Step distributions of the three models on a fixed site set: exact (Eden),
//! Monte Carlo and planar quadrature (ballistic), Monte Carlo (harmonic).
//!
//! Monte Carlo estimators split their samples into a fixed number of shards
//! with independent streams and merge integer counters, so results do not
//! depend on thread count or scheduling.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    sample_isotropic_line_in, traverse, DirectedLine, EnclosingBall, Traversal, DEFAULT_MAX_REJECTIONS,
};
use crate::lattice::{Site, SiteSet, MAX_DIM};
use crate::rng;
use crate::walk::{self, Launcher, WalkParams};

const SHARDS: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Mc,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteMass {
    pub prob: f64,
    pub stderr: f64,
    /// Probability that the line meets the site's box (ballistic only).
    pub hit_prob: Option<f64>,
}

/// A probability distribution on a finite site set, with per-site standard
/// errors. Sites off the support have probability zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureEstimate {
    pub dim: usize,
    pub method: Method,
    pub samples: u64,
    masses: BTreeMap<Site, SiteMass>,
}

impl MeasureEstimate {
    pub fn support(&self) -> impl Iterator<Item = &Site> {
        self.masses.keys()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn prob(&self, site: &Site) -> f64 {
        self.masses.get(site).map_or(0.0, |m| m.prob)
    }

    pub fn get(&self, site: &Site) -> Option<&SiteMass> {
        self.masses.get(site)
    }

    /// Entries in lexicographic site order.
    pub fn iter(&self) -> impl Iterator<Item = (&Site, &SiteMass)> {
        self.masses.iter()
    }

    pub fn total(&self) -> f64 {
        self.masses.values().map(|m| m.prob).sum()
    }

    pub fn max_stderr(&self) -> f64 {
        self.masses.values().map(|m| m.stderr).fold(0.0, f64::max)
    }
}

/// Uniform distribution on the set.
pub fn eden_measure(set: &SiteSet) -> Result<MeasureEstimate> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let p = 1.0 / set.len() as f64;
    let masses = set
        .iter()
        .map(|s| {
            (
                *s,
                SiteMass {
                    prob: p,
                    stderr: 0.0,
                    hit_prob: None,
                },
            )
        })
        .collect();
    Ok(MeasureEstimate {
        dim: crate::lattice::SiteLookup::dim(set),
        method: Method::Exact,
        samples: 0,
        masses,
    })
}

/// Weight of each site for one directed line: 1 if it is the only box met,
/// 1/2 for the first and the last box when several are met, 0 otherwise.
pub fn line_outcome_weights(traversal: &Traversal) -> Result<Vec<(Site, f64)>> {
    match traversal.visited.as_slice() {
        [] => Err(Error::EmptySet),
        [only] => Ok(vec![(*only, 1.0)]),
        [first, .., last] => Ok(vec![(*first, 0.5), (*last, 0.5)]),
    }
}

/// Integer tallies per site: lines weighting it 1, lines weighting it 1/2,
/// and lines meeting its box.
#[derive(Clone, Debug, Default)]
struct Tally {
    full: Vec<u64>,
    half: Vec<u64>,
    hits: Vec<u64>,
    lines: u64,
}

impl Tally {
    fn new(n: usize) -> Self {
        Tally {
            full: vec![0; n],
            half: vec![0; n],
            hits: vec![0; n],
            lines: 0,
        }
    }

    fn record(&mut self, index: &FxHashMap<Site, usize>, t: &Traversal) {
        self.lines += 1;
        for s in &t.visited {
            self.hits[index[s]] += 1;
        }
        match t.visited.as_slice() {
            [] => {}
            [only] => self.full[index[only]] += 1,
            [first, .., last] => {
                self.half[index[first]] += 1;
                self.half[index[last]] += 1;
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.full.iter_mut().zip(other.full) {
            *a += b;
        }
        for (a, b) in self.half.iter_mut().zip(other.half) {
            *a += b;
        }
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        self.lines += other.lines;
        self
    }

    fn into_estimate(self, dim: usize, sites: &[Site], method: Method) -> MeasureEstimate {
        let n = self.lines as f64;
        let masses = sites
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (full, half) = (self.full[i] as f64, self.half[i] as f64);
                let mean = (full + half / 2.0) / n;
                let stderr = match method {
                    Method::Mc if self.lines > 1 => {
                        let second = (full + half / 4.0) / n;
                        ((second - mean * mean).max(0.0) / (n - 1.0)).sqrt()
                    }
                    _ => 0.0,
                };
                let mass = SiteMass {
                    prob: mean,
                    stderr,
                    hit_prob: Some(self.hits[i] as f64 / n),
                };
                (*s, mass)
            })
            .collect();
        MeasureEstimate {
            dim,
            method,
            samples: self.lines,
            masses,
        }
    }
}

fn site_index(sites: &[Site]) -> FxHashMap<Site, usize> {
    sites.iter().enumerate().map(|(i, s)| (*s, i)).collect()
}

fn shard_sizes(samples: u64) -> impl Iterator<Item = (u64, u64)> {
    (0..SHARDS).map(move |i| (i, samples / SHARDS + u64::from(i < samples % SHARDS)))
}

/// Monte Carlo ballistic measure: the average line weight over `samples`
/// isotropic random lines through the boxes of `set`. Also records, per
/// site, the fraction of lines meeting its box.
pub fn ballistic_measure_mc<R: Rng + ?Sized>(set: &SiteSet, samples: u64, rng: &mut R) -> Result<MeasureEstimate> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let dim = crate::lattice::SiteLookup::dim(set);
    let sites = set.sorted();
    let index = site_index(&sites);
    let ball = EnclosingBall::around(set)?;
    let base = rng.next_u64();
    let tallies: Vec<Tally> = shard_sizes(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(shard, count)| {
            let mut r = rng::stream(base, "ballistic-mc", shard);
            let mut tally = Tally::new(sites.len());
            for _ in 0..count {
                let s = sample_isotropic_line_in(set, &ball, &mut r, DEFAULT_MAX_REJECTIONS)?;
                tally.record(&index, &s.traversal);
            }
            Ok(tally)
        })
        .collect::<Result<_>>()?;
    let total = tallies
        .into_iter()
        .fold(Tally::new(sites.len()), Tally::merge);
    Ok(total.into_estimate(dim, &sites, Method::Mc))
}

/// Deterministic planar ballistic measure by midpoint quadrature of the line
/// measure `d(theta) d(p)` over `theta` in `[0, pi)` and offsets `p` across
/// the enclosing ball. Normalized by the quadrature mass of lines meeting
/// the set, so non-convex and disconnected sets are handled.
pub fn ballistic_measure_quadrature_2d(set: &SiteSet, n_theta: usize, n_offset: usize) -> Result<MeasureEstimate> {
    let dim = crate::lattice::SiteLookup::dim(set);
    if dim != 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature is only available in d = 2, got d = {dim}"
        )));
    }
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if n_theta < 16 || n_offset < 16 {
        return Err(Error::InvalidParameter(
            "quadrature needs at least 16 nodes per axis".into(),
        ));
    }
    let sites = set.sorted();
    let index = site_index(&sites);
    let ball = EnclosingBall::around(set)?;
    let (cx, cy) = (ball.center[0], ball.center[1]);
    let dp = 2.0 * ball.radius / n_offset as f64;
    let total = (0..n_theta)
        .into_par_iter()
        .map(|i| {
            let theta = (i as f64 + 0.5) * PI / n_theta as f64;
            let (sin, cos) = theta.sin_cos();
            let mut tally = Tally::new(sites.len());
            let mut hitting = 0u64;
            for j in 0..n_offset {
                let p = -ball.radius + (j as f64 + 0.5) * dp;
                let mut base = [0.0; MAX_DIM];
                base[0] = cx - p * sin;
                base[1] = cy + p * cos;
                let mut direction = [0.0; MAX_DIM];
                direction[0] = cos;
                direction[1] = sin;
                let line = DirectedLine::new(&base[..2], &direction[..2]).expect("unit direction");
                let t = traverse(&line, set);
                if !t.is_empty() {
                    hitting += 1;
                    tally.record(&index, &t);
                }
            }
            // only lines meeting the set count towards the normalizer
            tally.lines = hitting;
            tally
        })
        .reduce(|| Tally::new(sites.len()), Tally::merge);
    if total.lines == 0 {
        return Err(Error::InvalidParameter("no quadrature line met the set".into()));
    }
    let mut est = total.into_estimate(dim, &sites, Method::Quadrature);
    est.samples = (n_theta * n_offset) as u64;
    Ok(est)
}

/// Monte Carlo harmonic measure: hitting distribution of walkers launched
/// uniformly from the lattice annulus at `rad(set) + launch_margin`,
/// conditioned on hitting before `kill_factor` times the launch radius.
pub fn harmonic_measure_mc<R: Rng + ?Sized>(
    set: &SiteSet,
    samples: u64,
    launch_margin: f64,
    kill_factor: f64,
    rng: &mut R,
) -> Result<MeasureEstimate> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let params = WalkParams {
        launch_margin,
        kill_factor,
        ..WalkParams::default()
    };
    params.validate()?;
    let dim = crate::lattice::SiteLookup::dim(set);
    let sites = set.sorted();
    let index = site_index(&sites);
    let radius_sq = sites.iter().map(Site::norm_sq).max().unwrap_or(0);
    let launcher = Launcher::new(dim, (radius_sq as f64).sqrt() + launch_margin);
    let base = rng.next_u64();
    let counts: Vec<Vec<u64>> = shard_sizes(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(shard, count)| {
            let mut r = rng::stream(base, "harmonic-mc", shard);
            let mut hits = vec![0u64; sites.len()];
            for _ in 0..count {
                let a = walk::walk_to_target(set, radius_sq, &launcher, &params, &mut r)?;
                hits[index[&a.site]] += 1;
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let masses = sites
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let k: u64 = counts.iter().map(|c| c[i]).sum();
            let p = k as f64 / n;
            let stderr = (p * (1.0 - p) / n).sqrt();
            (
                *s,
                SiteMass {
                    prob: p,
                    stderr,
                    hit_prob: None,
                },
            )
        })
        .collect();
    Ok(MeasureEstimate {
        dim,
        method: Method::Mc,
        samples,
        masses,
    })
}

/// Largest mass with its site and standard error; ties go to the
/// lexicographically smallest site.
pub fn max_mass(est: &MeasureEstimate) -> Result<(Site, f64, f64)> {
    let mut best: Option<(Site, f64, f64)> = None;
    for (s, m) in est.iter() {
        if best.map_or(true, |(_, p, _)| m.prob > p) {
            best = Some((*s, m.prob, m.stderr));
        }
    }
    best.ok_or(Error::EmptySet)
}
