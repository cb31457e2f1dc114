//! Simple random walkers launched from a lattice annulus, absorbed on a
//! target set and discarded beyond a kill radius.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::geometry::sample_direction;
use crate::lattice::{Site, SiteLookup, MAX_DIM};

pub const DEFAULT_LAUNCH_MARGIN: f64 = 5.0;
pub const DEFAULT_KILL_FACTOR: f64 = 50.0;
pub const RELAUNCH_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkParams {
    pub launch_margin: f64,
    pub kill_factor: f64,
    /// Far-field jumps; approximate, since lattice walks are not isotropic.
    pub accelerate: bool,
    pub relaunch_cap: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            launch_margin: DEFAULT_LAUNCH_MARGIN,
            kill_factor: DEFAULT_KILL_FACTOR,
            accelerate: false,
            relaunch_cap: RELAUNCH_CAP,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.launch_margin >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "launch margin must be >= 2, got {}",
                self.launch_margin
            )));
        }
        if !(self.kill_factor >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "kill factor must be >= 2, got {}",
                self.kill_factor
            )));
        }
        if self.relaunch_cap == 0 {
            return Err(Error::InvalidParameter("relaunch cap must be positive".into()));
        }
        Ok(())
    }
}

/// All lattice sites with norm in `[r_lo, r_hi)`, in lexicographic order.
pub fn annulus_sites(dim: usize, r_lo: f64, r_hi: f64) -> Vec<Site> {
    let lo_sq = r_lo * r_lo;
    let hi_sq = r_hi * r_hi;
    let mut out = Vec::new();
    let mut coords = [0i32; MAX_DIM];
    fill_annulus(dim, 0, 0, lo_sq, hi_sq, &mut coords, &mut out);
    out
}

fn fill_annulus(
    dim: usize,
    axis: usize,
    partial: i64,
    lo_sq: f64,
    hi_sq: f64,
    coords: &mut [i32; MAX_DIM],
    out: &mut Vec<Site>,
) {
    let room = hi_sq - partial as f64;
    if room <= 0.0 {
        return;
    }
    let reach = room.sqrt().ceil() as i32;
    for c in -reach..=reach {
        let sq = partial + i64::from(c) * i64::from(c);
        if (sq as f64) >= hi_sq {
            continue;
        }
        coords[axis] = c;
        if axis + 1 == dim {
            if (sq as f64) >= lo_sq {
                out.push(Site::from_array(*coords, dim));
            }
        } else {
            fill_annulus(dim, axis + 1, sq, lo_sq, hi_sq, coords, out);
        }
    }
    coords[axis] = 0;
}

/// Uniform launch distribution over the lattice sites of the annulus
/// `r_launch <= |x| < r_launch + 1`.
#[derive(Clone, Debug)]
pub struct Launcher {
    dim: usize,
    r_launch: f64,
    sites: Vec<Site>,
}

impl Launcher {
    pub fn new(dim: usize, r_launch: f64) -> Self {
        Launcher {
            dim,
            r_launch,
            sites: annulus_sites(dim, r_launch, r_launch + 1.0),
        }
    }

    pub fn r_launch(&self) -> f64 {
        self.r_launch
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn matches(&self, dim: usize, r_launch: f64) -> bool {
        self.dim == dim && self.r_launch.to_bits() == r_launch.to_bits()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Site {
        self.sites[rng.random_range(0..self.sites.len())]
    }
}

/// Uniform choice among the 2d unit steps, drawn from a buffered word of
/// random bits with rejection when 2d is not a power of two.
struct StepBits {
    word: u64,
    left: u32,
    width: u32,
    count: u64,
}

impl StepBits {
    fn new(dim: usize) -> Self {
        let count = 2 * dim as u64;
        StepBits {
            word: 0,
            left: 0,
            width: 64 - (count - 1).leading_zeros(),
            count,
        }
    }

    #[inline]
    fn next<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> usize {
        loop {
            if self.left < self.width {
                self.word = rng.next_u64();
                self.left = 64;
            }
            let v = self.word & ((1 << self.width) - 1);
            self.word >>= self.width;
            self.left -= self.width;
            if v < self.count {
                return v as usize;
            }
        }
    }
}

/// Outcome of one absorbed walker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Absorption {
    pub site: Site,
    /// Walkers discarded at the kill radius before this one was absorbed.
    pub relaunches: u64,
}

/// Launches walkers from `launcher` until one enters `target`, returning the
/// first target site it visits. `target_radius_sq` must bound the squared
/// norm of every target site and lie strictly inside the launch annulus.
pub fn walk_to_target<L, R>(
    target: &L,
    target_radius_sq: i64,
    launcher: &Launcher,
    params: &WalkParams,
    rng: &mut R,
) -> Result<Absorption>
where
    L: SiteLookup + ?Sized,
    R: Rng + ?Sized,
{
    let dim = target.dim();
    let r_launch = launcher.r_launch;
    let kill = params.kill_factor * r_launch;
    let kill_sq = kill * kill;
    let jump_from = r_launch + 2.0;
    let jump_from_sq = jump_from * jump_from;
    let mut bits = StepBits::new(dim);

    for relaunches in 0..params.relaunch_cap {
        let start = launcher.sample(rng);
        let mut pos = start.coords_array();
        let mut norm_sq = start.norm_sq();
        loop {
            if params.accelerate && (norm_sq as f64) > jump_from_sq {
                let rho = (norm_sq as f64).sqrt();
                let reach = (rho - r_launch - 1.0).floor();
                let u = sample_direction(dim, rng);
                norm_sq = 0;
                for axis in 0..dim {
                    pos[axis] += (reach * u[axis]).round() as i32;
                    norm_sq += i64::from(pos[axis]) * i64::from(pos[axis]);
                }
            } else {
                let k = bits.next(rng);
                let axis = k >> 1;
                let c = i64::from(pos[axis]);
                if k & 1 == 0 {
                    pos[axis] += 1;
                    norm_sq += 2 * c + 1;
                } else {
                    pos[axis] -= 1;
                    norm_sq += 1 - 2 * c;
                }
            }
            if (norm_sq as f64) > kill_sq {
                break;
            }
            if norm_sq <= target_radius_sq {
                let site = Site::from_array(pos, dim);
                if target.contains(&site) {
                    return Ok(Absorption { site, relaunches });
                }
            }
        }
    }
    Err(Error::RelaunchCapExceeded {
        cap: params.relaunch_cap,
    })
}

impl Site {
    pub(crate) fn coords_array(&self) -> [i32; MAX_DIM] {
        let mut a = [0; MAX_DIM];
        a[..self.dim()].copy_from_slice(self.coords());
        a
    }
}
