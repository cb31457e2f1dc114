//! The Eden, DLA and ballistic distribution families and the simulation
//! driver that grows a cluster one boundary site at a time.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::GrowthRecord;
use crate::error::{Error, Result};
use crate::geometry::{sample_isotropic_line_in, EnclosingBall, DEFAULT_MAX_REJECTIONS};
use crate::lattice::{check_dim, Cluster, Site};
use crate::rng;
use crate::walk::{self, Launcher, WalkParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Eden,
    Dla,
    Ballistic,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Eden, ModelKind::Dla, ModelKind::Ballistic];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Eden => "eden",
            ModelKind::Dla => "dla",
            ModelKind::Ballistic => "ballistic",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eden" => Ok(ModelKind::Eden),
            "dla" => Ok(ModelKind::Dla),
            "ballistic" => Ok(ModelKind::Ballistic),
            other => Err(Error::InvalidParameter(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub dla_launch_margin: f64,
    pub dla_kill_factor: f64,
    pub dla_accelerate: bool,
    pub ballistic_max_rejections: u64,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        ModelConfig {
            kind,
            dla_launch_margin: walk::DEFAULT_LAUNCH_MARGIN,
            dla_kill_factor: walk::DEFAULT_KILL_FACTOR,
            dla_accelerate: false,
            ballistic_max_rejections: DEFAULT_MAX_REJECTIONS,
        }
    }

    pub fn walk_params(&self) -> WalkParams {
        WalkParams {
            launch_margin: self.dla_launch_margin,
            kill_factor: self.dla_kill_factor,
            accelerate: self.dla_accelerate,
            relaunch_cap: walk::RELAUNCH_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.walk_params().validate()?;
        if self.ballistic_max_rejections < 1 {
            return Err(Error::InvalidParameter(
                "ballistic max rejections must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Eden: a uniformly chosen boundary site.
pub fn eden_step<R: Rng + ?Sized>(cluster: &Cluster, rng: &mut R) -> Site {
    let b = cluster.boundary();
    b[rng.random_range(0..b.len())]
}

/// DLA: the first boundary site reached by a walker launched from the
/// annulus at `rad + margin`.
pub fn dla_step<R: Rng + ?Sized>(cluster: &Cluster, rng: &mut R, config: &ModelConfig) -> Result<Site> {
    Stepper::new(config.clone())?.dla(cluster, rng)
}

/// Ballistic: an isotropic line through the boxes of the boundary; the first
/// or last boundary box along it, each with probability 1/2.
pub fn ballistic_step<R: Rng + ?Sized>(cluster: &Cluster, rng: &mut R, config: &ModelConfig) -> Result<Site> {
    Stepper::new(config.clone())?.ballistic(cluster, rng)
}

/// One model's step distribution, with reusable per-model state.
#[derive(Clone, Debug)]
pub struct Stepper {
    config: ModelConfig,
    launcher: Option<Launcher>,
}

impl Stepper {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Stepper {
            config,
            launcher: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn step<R: Rng + ?Sized>(&mut self, cluster: &Cluster, rng: &mut R) -> Result<Site> {
        match self.config.kind {
            ModelKind::Eden => Ok(eden_step(cluster, rng)),
            ModelKind::Dla => self.dla(cluster, rng),
            ModelKind::Ballistic => self.ballistic(cluster, rng),
        }
    }

    fn dla<R: Rng + ?Sized>(&mut self, cluster: &Cluster, rng: &mut R) -> Result<Site> {
        let rad = cluster.radius();
        let r_launch = rad + self.config.dla_launch_margin;
        let dim = cluster.dim();
        let launcher = match &mut self.launcher {
            Some(l) if l.matches(dim, r_launch) => l,
            slot => slot.insert(Launcher::new(dim, r_launch)),
        };
        // boundary sites lie within rad + 1 of the origin
        let reach = rad + 1.0;
        let target_radius_sq = (reach * reach).floor() as i64 + 1;
        let hit = walk::walk_to_target(
            &cluster.boundary_view(),
            target_radius_sq,
            launcher,
            &self.config.walk_params(),
            rng,
        )?;
        Ok(hit.site)
    }

    fn ballistic<R: Rng + ?Sized>(&mut self, cluster: &Cluster, rng: &mut R) -> Result<Site> {
        let ball = EnclosingBall::around_boundary(cluster);
        let sampled = sample_isotropic_line_in(
            &cluster.boundary_view(),
            &ball,
            rng,
            self.config.ballistic_max_rejections,
        )?;
        let t = &sampled.traversal;
        let site = if t.len() == 1 || rng.random::<bool>() {
            t.first()
        } else {
            t.last()
        };
        Ok(*site.expect("accepted lines meet the boundary"))
    }
}

/// A finished simulation: the final cluster, its growth record and the
/// cluster sizes at which checkpoints were taken. A checkpoint is the
/// attach-order prefix of that length.
#[derive(Clone, Debug)]
pub struct SimulationRun {
    pub config: ModelConfig,
    pub seed: u64,
    pub cluster: Cluster,
    pub growth: GrowthRecord,
    pub checkpoints: Vec<usize>,
}

impl SimulationRun {
    pub fn checkpoint_clusters(&self) -> Result<Vec<Cluster>> {
        self.checkpoints.iter().map(|&n| self.cluster.prefix(n)).collect()
    }
}

/// Grows a cluster to `particles` sites. The random stream is derived from
/// `seed` with purpose `"simulate"`, so the run is a pure function of its
/// arguments. `checkpoint_every = 0` disables checkpoints.
pub fn run_simulation(
    config: &ModelConfig,
    dim: usize,
    particles: usize,
    seed: u64,
    checkpoint_every: usize,
) -> Result<SimulationRun> {
    check_dim(dim)?;
    if particles < 1 {
        return Err(Error::InvalidParameter("particle count must be >= 1".into()));
    }
    let mut stepper = Stepper::new(config.clone())?;
    let mut rng = rng::stream(seed, "simulate", 0);
    let mut cluster = Cluster::new(dim)?;
    let mut growth = GrowthRecord::new(config.kind, seed);
    let mut checkpoints = Vec::new();
    growth.push(1, 0.0);
    if checkpoint_every == 1 {
        checkpoints.push(1);
    }
    for k in 2..=particles {
        let site = stepper.step(&cluster, &mut rng).map_err(|e| Error::Step {
            step: k,
            source: Box::new(e),
        })?;
        cluster.attach(site)?;
        growth.push(k as u64, cluster.radius());
        if checkpoint_every > 0 && k % checkpoint_every == 0 {
            checkpoints.push(k);
        }
    }
    Ok(SimulationRun {
        config: config.clone(),
        seed,
        cluster,
        growth,
        checkpoints,
    })
}
