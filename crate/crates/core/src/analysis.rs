//! Growth records and the statistics computed from them: waiting times,
//! growth-exponent fits, the Kesten-type radius bound, scans of the
//! largest single-site step probability, and sanity audits of clusters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Cluster, Site};
use crate::measures::{self, MeasureEstimate};
use crate::models::{ModelConfig, ModelKind};

/// Minimum number of entries with `rad >= 2` for an exponent fit.
pub const MIN_FIT_ENTRIES: usize = 20;
/// Minimum number of checkpoints with `rad >= 2` for a scan.
pub const MIN_SCAN_CHECKPOINTS: usize = 5;
/// Entries with a smaller radius are ignored by the fits.
pub const MIN_FIT_RADIUS: f64 = 2.0;
const FIT_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEntry {
    pub n: u64,
    pub rad: f64,
}

/// `rad(F_n)` for consecutive cluster sizes `n = 1, 2, ...`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GrowthRecord {
    pub model: Option<ModelKind>,
    pub seed: Option<u64>,
    entries: Vec<GrowthEntry>,
}

impl GrowthRecord {
    pub fn new(model: ModelKind, seed: u64) -> Self {
        GrowthRecord {
            model: Some(model),
            seed: Some(seed),
            entries: Vec::new(),
        }
    }

    /// A record not tied to a simulation, e.g. a synthetic radius curve.
    pub fn from_entries(entries: Vec<GrowthEntry>) -> Result<Self> {
        let r = GrowthRecord {
            model: None,
            seed: None,
            entries,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn push(&mut self, n: u64, rad: f64) {
        self.entries.push(GrowthEntry { n, rad });
    }

    pub fn entries(&self) -> &[GrowthEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sizes run 1, 2, ... without gaps and radii are finite and
    /// nondecreasing.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.n != i as u64 + 1 {
                return Err(Error::InvalidParameter(format!(
                    "growth entry {i} has n = {}, expected {}",
                    e.n,
                    i + 1
                )));
            }
            if !e.rad.is_finite() || e.rad < 0.0 {
                return Err(Error::InvalidParameter(format!("invalid radius at n = {}", e.n)));
            }
            if i > 0 && e.rad < self.entries[i - 1].rad {
                return Err(Error::InvalidParameter(format!("radius decreases at n = {}", e.n)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaitingTime {
    pub r: u64,
    /// Smallest `n` with `rad(F_n) >= r`.
    pub t: u64,
}

/// `T_r = min{n : rad(F_n) >= r}` for `r = 1 ..= floor(final radius)`.
pub fn waiting_times(record: &GrowthRecord) -> Vec<WaitingTime> {
    let Some(last) = record.entries.last() else {
        return Vec::new();
    };
    let r_max = last.rad.floor() as u64;
    let mut out = Vec::with_capacity(r_max as usize);
    let mut it = record.entries.iter();
    let mut cur = it.next();
    for r in 1..=r_max {
        while let Some(e) = cur {
            if e.rad >= r as f64 {
                break;
            }
            cur = it.next();
        }
        match cur {
            Some(e) => out.push(WaitingTime { r, t: e.n }),
            None => break,
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Fitted exponent in `rad ~ n^alpha`.
    pub alpha_hat: f64,
    /// `1 / alpha_hat`.
    pub delta_hat: f64,
    pub n_min: u64,
    pub n_max: u64,
    pub points: usize,
    pub r_squared: f64,
}

/// Least-squares slope, intercept and R^2 of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Fits `ln rad` against `ln n` over the last `tail_fraction` of the
/// entries with `rad >= 2`, using about 64 entries log-spaced in `n` within
/// that window.
pub fn growth_exponent(record: &GrowthRecord, tail_fraction: f64) -> Result<ExponentFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let valid: Vec<&GrowthEntry> = record.entries.iter().filter(|e| e.rad >= MIN_FIT_RADIUS).collect();
    if valid.len() < MIN_FIT_ENTRIES {
        return Err(Error::TooFewEntries {
            found: valid.len(),
            needed: MIN_FIT_ENTRIES,
        });
    }
    let keep = ((tail_fraction * valid.len() as f64).ceil() as usize).clamp(2, valid.len());
    let window = &valid[valid.len() - keep..];
    let cut = (window[0].n as f64).ln();
    let ln_b = (window[keep - 1].n as f64).ln();

    let mut picked: Vec<&GrowthEntry> = Vec::with_capacity(FIT_POINTS);
    for k in 0..FIT_POINTS {
        let target = cut + (ln_b - cut) * k as f64 / (FIT_POINTS - 1) as f64;
        let i = window.partition_point(|e| (e.n as f64).ln() < target);
        if let Some(e) = window.get(i).or(window.last()) {
            if picked.last().map_or(true, |p| p.n != e.n) {
                picked.push(e);
            }
        }
    }
    if picked.len() < 2 {
        return Err(Error::TooFewEntries {
            found: picked.len(),
            needed: 2,
        });
    }
    let x: Vec<f64> = picked.iter().map(|e| (e.n as f64).ln()).collect();
    let y: Vec<f64> = picked.iter().map(|e| e.rad.ln()).collect();
    let (alpha, _, r2) = ols(&x, &y);
    Ok(ExponentFit {
        alpha_hat: alpha,
        delta_hat: 1.0 / alpha,
        n_min: picked[0].n,
        n_max: picked[picked.len() - 1].n,
        points: picked.len(),
        r_squared: r2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KestenCheck {
    pub q: f64,
    /// `1 / (1 + q)`.
    pub exponent: f64,
    /// `max rad(n) / n^exponent` over `n >= 10`.
    pub c_fit: f64,
    pub n_at_max: u64,
}

/// Smallest constant `c` with `rad(n) <= c n^{1/(1+q)}` for `n >= 10`.
pub fn kesten_bound_check(record: &GrowthRecord, q: f64) -> Result<KestenCheck> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    let exponent = 1.0 / (1.0 + q);
    let mut best: Option<(f64, u64)> = None;
    for e in record.entries.iter().filter(|e| e.n >= 10) {
        let c = e.rad / (e.n as f64).powf(exponent);
        if best.map_or(true, |(b, _)| c > b) {
            best = Some((c, e.n));
        }
    }
    let (c_fit, n_at_max) = best.ok_or(Error::TooFewEntries { found: 0, needed: 1 })?;
    Ok(KestenCheck {
        q,
        exponent,
        c_fit,
        n_at_max,
    })
}

/// `max / min` of `rad(n) / n^{1/(1+q)}` over `n_lo <= n <= n_hi`; close to
/// one when the bound is tight up to a constant on that range.
pub fn kesten_ratio_spread(record: &GrowthRecord, q: f64, n_lo: u64, n_hi: u64) -> Result<f64> {
    let exponent = 1.0 / (1.0 + q);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for e in record.entries.iter().filter(|e| e.n >= n_lo && e.n <= n_hi && e.rad > 0.0) {
        let c = e.rad / (e.n as f64).powf(exponent);
        lo = lo.min(c);
        hi = hi.max(c);
    }
    if hi == 0.0 {
        return Err(Error::TooFewEntries { found: 0, needed: 1 });
    }
    Ok(hi / lo)
}

/// Default exponent `q` for the step-probability bound of each model.
pub fn default_q(kind: ModelKind, dim: usize) -> f64 {
    match kind {
        ModelKind::Dla if dim == 2 => 0.5,
        _ => 1.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeurlingPoint {
    pub n: usize,
    pub rad: f64,
    pub max_mass: f64,
    pub stderr: f64,
    pub site: Site,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeurlingScan {
    pub points: Vec<BeurlingPoint>,
    /// Negative slope of `ln max_mass` against `ln rad`.
    pub q_hat: f64,
    pub r_squared: f64,
}

/// Step distribution of `kind` on the outer boundary of `cluster`.
pub fn step_measure<R: Rng + ?Sized>(
    cluster: &Cluster,
    config: &ModelConfig,
    samples: u64,
    rng: &mut R,
) -> Result<MeasureEstimate> {
    let boundary = cluster.boundary_set();
    match config.kind {
        ModelKind::Eden => measures::eden_measure(&boundary),
        ModelKind::Ballistic => measures::ballistic_measure_mc(&boundary, samples, rng),
        ModelKind::Dla => measures::harmonic_measure_mc(
            &boundary,
            samples,
            config.dla_launch_margin,
            config.dla_kill_factor,
            rng,
        ),
    }
}

/// Largest single-site step probability at each checkpoint with `rad >= 2`,
/// and the decay exponent `q_hat` in `max b ~ rad^{-q}`.
pub fn beurling_scan<R: Rng + ?Sized>(
    checkpoints: &[Cluster],
    config: &ModelConfig,
    samples: u64,
    rng: &mut R,
) -> Result<BeurlingScan> {
    let usable: Vec<&Cluster> = checkpoints.iter().filter(|c| c.radius() >= MIN_FIT_RADIUS).collect();
    if usable.len() < MIN_SCAN_CHECKPOINTS {
        return Err(Error::TooFewEntries {
            found: usable.len(),
            needed: MIN_SCAN_CHECKPOINTS,
        });
    }
    let mut points = Vec::with_capacity(usable.len());
    for c in usable {
        let est = step_measure(c, config, samples, rng)?;
        let (site, max_mass, stderr) = measures::max_mass(&est)?;
        points.push(BeurlingPoint {
            n: c.len(),
            rad: c.radius(),
            max_mass,
            stderr,
            site,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| p.rad.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.max_mass.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, _, r2) = ols(&x, &y);
    Ok(BeurlingScan {
        points,
        q_hat: -slope,
        r_squared: r2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    pub n: usize,
    pub items: Vec<AuditItem>,
}

impl BoundAudit {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }
}

/// Elementary inequalities every cluster must satisfy:
/// (a) `rad <= #F <= (2 rad + 1)^d`;
/// (b) `rad <= diam <= 2 rad`;
/// (c) `#B >= 2 (d-1) / sqrt(d) * rad(B)` whenever `rad(B) >= 2`.
/// (b) and (c) are compared in exact integer arithmetic on squares.
pub fn bound_audit(cluster: &Cluster) -> BoundAudit {
    let d = cluster.dim() as i128;
    let n = cluster.len() as i128;
    let rad_sq = i128::from(cluster.radius_sq());
    let rad = cluster.radius();
    let diam_sq = i128::from(cluster.diameter_sq());
    let b = cluster.boundary().len() as i128;
    let rb_sq = i128::from(cluster.boundary_radius_sq());

    let upper = (2.0 * rad + 1.0).powi(cluster.dim() as i32);
    let card = AuditItem {
        name: "cardinality".into(),
        pass: rad_sq <= n * n && (n as f64) <= upper,
        detail: format!("rad = {rad:.6}, #F = {n}, (2 rad + 1)^d = {upper:.6}"),
    };
    let diam = AuditItem {
        name: "radius-diameter".into(),
        pass: rad_sq <= diam_sq && diam_sq <= 4 * rad_sq,
        detail: format!("rad^2 = {rad_sq}, diam^2 = {diam_sq}"),
    };
    let boundary = if rb_sq >= 4 {
        AuditItem {
            name: "boundary-size".into(),
            pass: d * b * b >= 4 * (d - 1) * (d - 1) * rb_sq,
            detail: format!("#B = {b}, rad(B)^2 = {rb_sq}"),
        }
    } else {
        AuditItem {
            name: "boundary-size".into(),
            pass: true,
            detail: format!("not applicable: rad(B)^2 = {rb_sq} < 4"),
        }
    };
    BoundAudit {
        n: cluster.len(),
        items: vec![card, diam, boundary],
    }
}

/// Reference fractal dimensions, for annotation only.
pub fn reference_dimensions(kind: ModelKind, dim: usize) -> Vec<(&'static str, f64)> {
    let d = dim as f64;
    match kind {
        ModelKind::Dla => vec![
            ("conjectured", (d * d + 1.0) / (d + 1.0)),
            ("kesten_lower", (d + 1.0) / 2.0),
        ],
        ModelKind::Ballistic => vec![("conjectured", d)],
        ModelKind::Eden => vec![("expected", d)],
    }
}
