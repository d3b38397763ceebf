//! Initial conditions: particles on the lattice, velocities drawn from a
//! seeded counter-based generator.

use std::fmt;
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Snapshot};

/// Name of the generator recorded in snapshot provenance.
pub const GENERATOR: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcKind {
    /// Uniform velocities on `[-a, a]`.
    Waterbag,
    /// Normal velocities with standard deviation `sigma`.
    Gaussian,
    /// Cumulative sum of normal steps along the lattice, mean removed.
    Brownian,
}

impl IcKind {
    pub fn name(self) -> &'static str {
        match self {
            IcKind::Waterbag => "waterbag",
            IcKind::Gaussian => "gaussian",
            IcKind::Brownian => "brownian",
        }
    }
}

impl fmt::Display for IcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IcKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "waterbag" => Ok(IcKind::Waterbag),
            "gaussian" => Ok(IcKind::Gaussian),
            "brownian" => Ok(IcKind::Brownian),
            other => Err(Error::config(format!("unknown initial condition '{other}'"))),
        }
    }
}

/// Recipe for one initial condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcSpec {
    pub kind: IcKind,
    pub n_particles: usize,
    pub box_length: f64,
    /// Half-width `a` (waterbag), standard deviation (gaussian) or step
    /// scale (brownian).
    pub velocity_scale: f64,
    pub seed: u64,
}

impl IcSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::config(format!("need at least 2 particles, got {}", self.n_particles)));
        }
        if !(self.box_length > 0.0) || !self.box_length.is_finite() {
            return Err(Error::config(format!("box length must be positive, got {}", self.box_length)));
        }
        if !(self.velocity_scale >= 0.0) || !self.velocity_scale.is_finite() {
            return Err(Error::config(format!(
                "velocity parameter must be non-negative, got {}",
                self.velocity_scale
            )));
        }
        Ok(())
    }

    /// Velocity dispersion implied by the recipe (`a / sqrt(3)` for a waterbag).
    pub fn sigma_v(&self) -> f64 {
        match self.kind {
            IcKind::Waterbag => self.velocity_scale / 3f64.sqrt(),
            IcKind::Gaussian | IcKind::Brownian => self.velocity_scale,
        }
    }
}

/// Lattice site of 0-based index `k`: `(k + 1 - (N+1)/2) L / N`.
pub fn lattice(n: usize, box_length: f64) -> Vec<f64> {
    let spacing = box_length / n as f64;
    let centre = 0.5 * (n as f64 + 1.0);
    (1..=n).map(|k| (k as f64 - centre) * spacing).collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_velocities(n: usize, half_width: f64, seed: u64) -> Result<Vec<f64>> {
    if half_width == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let dist = Uniform::new_inclusive(-half_width, half_width).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = rng(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

fn normal_draws(n: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if sigma == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let dist = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = rng(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

fn brownian_velocities(n: usize, step: f64, seed: u64) -> Result<Vec<f64>> {
    let steps = normal_draws(n, step, seed)?;
    let mut walk: Vec<f64> = steps
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    // Second pass removes the rounding residue left by the first.
    for _ in 0..2 {
        let mean = walk.iter().sum::<f64>() / n as f64;
        for v in &mut walk {
            *v -= mean;
        }
    }
    Ok(walk)
}

fn check_model(spec: &IcSpec, model: &ModelParams) -> Result<()> {
    spec.validate()?;
    if model.n_particles != spec.n_particles || model.box_length != spec.box_length {
        return Err(Error::config(format!(
            "initial condition for N={} L={} does not match model N={} L={}",
            spec.n_particles, spec.box_length, model.n_particles, model.box_length
        )));
    }
    Ok(())
}

fn assemble(spec: &IcSpec, model: &ModelParams, velocities: Vec<f64>) -> Result<Snapshot> {
    let provenance = format!(
        "ic={} vparam={:e} rng={GENERATOR} seed={}",
        spec.kind, spec.velocity_scale, spec.seed
    );
    Snapshot::new(0.0, lattice(spec.n_particles, spec.box_length), velocities, *model, spec.seed, provenance)
}

pub fn waterbag(spec: &IcSpec, model: &ModelParams) -> Result<Snapshot> {
    check_model(spec, model)?;
    let v = uniform_velocities(spec.n_particles, spec.velocity_scale, spec.seed)?;
    assemble(spec, model, v)
}

pub fn gaussian(spec: &IcSpec, model: &ModelParams) -> Result<Snapshot> {
    check_model(spec, model)?;
    let v = normal_draws(spec.n_particles, spec.velocity_scale, spec.seed)?;
    assemble(spec, model, v)
}

pub fn brownian(spec: &IcSpec, model: &ModelParams) -> Result<Snapshot> {
    check_model(spec, model)?;
    let v = brownian_velocities(spec.n_particles, spec.velocity_scale, spec.seed)?;
    assemble(spec, model, v)
}

/// Dispatch on `spec.kind`.
pub fn generate(spec: &IcSpec, model: &ModelParams) -> Result<Snapshot> {
    match spec.kind {
        IcKind::Waterbag => waterbag(spec, model),
        IcKind::Gaussian => gaussian(spec, model),
        IcKind::Brownian => brownian(spec, model),
    }
}
