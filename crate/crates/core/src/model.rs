//! Model presets, dimensionless units and the snapshot data model.
//!
//! All dynamics are written in Jeans units (`omega_j = 1`). A particle of
//! rank `r` (1-based, counted from the left) obeys
//!
//! ```text
//! x'' + gamma x' - beta x = field_coeff * (N + 1 - 2 r)
//! ```
//!
//! between crossings, where `field_coeff` is half the mean lattice spacing so
//! that a uniform lattice at rest is a fixed point.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The named model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Quintic,
    RouetFeix,
    Frictionless,
    Newtonian,
    /// Hand-specified coefficients.
    Custom,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Quintic => "quintic",
            ModelKind::RouetFeix => "rf",
            ModelKind::Frictionless => "frictionless",
            ModelKind::Newtonian => "newtonian",
            ModelKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quintic" | "q" => Ok(ModelKind::Quintic),
            "rf" | "rouet-feix" => Ok(ModelKind::RouetFeix),
            "frictionless" => Ok(ModelKind::Frictionless),
            "newtonian" => Ok(ModelKind::Newtonian),
            "custom" => Ok(ModelKind::Custom),
            other => Err(Error::config(format!("unknown model '{other}'"))),
        }
    }
}

/// Coefficients and geometry of one model instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    /// Friction coefficient.
    pub gamma: f64,
    /// Background coefficient, 1 in the comoving models and 0 without expansion.
    pub beta: f64,
    pub n_particles: usize,
    /// Primitive cell length in Jeans lengths; the cell is `[-L/2, L/2)`.
    pub box_length: f64,
    /// Force per unit rank difference, `box_length / (2 n_particles)`.
    pub field_coeff: f64,
    pub periodic: bool,
}

/// Friction coefficient of the quintic model, `1/sqrt(6)`.
pub fn quintic_gamma() -> f64 {
    6f64.sqrt().recip()
}

/// Friction coefficient of the Rouet-Feix model, `1/sqrt(2)`.
pub fn rf_gamma() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

/// Build the parameters of a named model for `n` sheets in a cell of
/// `box_length` Jeans lengths.
///
/// The Newtonian preset is the isolated system (no background, no periodic
/// images); the three comoving presets are periodic.
pub fn preset(kind: ModelKind, n: usize, box_length: f64) -> Result<ModelParams> {
    let (gamma, beta, periodic) = match kind {
        ModelKind::Quintic => (quintic_gamma(), 1.0, true),
        ModelKind::RouetFeix => (rf_gamma(), 1.0, true),
        ModelKind::Frictionless => (0.0, 1.0, true),
        ModelKind::Newtonian => (0.0, 0.0, false),
        ModelKind::Custom => {
            return Err(Error::config("custom models are built with ModelParams::custom"))
        }
    };
    ModelParams::build(kind, gamma, beta, n, box_length, periodic)
}

/// Parse a model name and build its preset.
pub fn preset_by_name(name: &str, n: usize, box_length: f64) -> Result<ModelParams> {
    preset(name.parse()?, n, box_length)
}

impl ModelParams {
    pub fn custom(gamma: f64, beta: f64, n: usize, box_length: f64, periodic: bool) -> Result<Self> {
        Self::build(ModelKind::Custom, gamma, beta, n, box_length, periodic)
    }

    fn build(
        kind: ModelKind,
        gamma: f64,
        beta: f64,
        n: usize,
        box_length: f64,
        periodic: bool,
    ) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::config(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        if beta != 0.0 && beta != 1.0 {
            return Err(Error::config(format!("beta must be 0 or 1, got {beta}")));
        }
        if n < 2 {
            return Err(Error::config(format!("need at least 2 particles, got {n}")));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::config(format!("box length must be positive, got {box_length}")));
        }
        Ok(ModelParams {
            kind,
            gamma,
            beta,
            n_particles: n,
            box_length,
            field_coeff: box_length / (2.0 * n as f64),
            periodic,
        })
    }

    /// Same model with a different periodicity flag.
    pub fn with_periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    /// Roots `(lambda_plus, lambda_minus)` of `l^2 + gamma l - beta = 0`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        eigenvalues(self.kind, self.gamma, self.beta)
    }

    /// Mean lattice spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n_particles as f64
    }

    pub fn half_box(&self) -> f64 {
        0.5 * self.box_length
    }

    /// Acceleration from the sheets at a given 1-based rank.
    pub fn rank_field(&self, rank: usize) -> f64 {
        rank_field(rank, self).expect("rank within 1..=N")
    }

    /// Lattice site of a 1-based rank, `(r - (N+1)/2) L/N`.
    pub fn lattice_site(&self, rank: usize) -> f64 {
        (rank as f64 - 0.5 * (self.n_particles as f64 + 1.0)) * self.spacing()
    }
}

pub(crate) fn eigenvalues(kind: ModelKind, gamma: f64, beta: f64) -> (f64, f64) {
    // Exact forms for the presets so that the propagator and the polynomial
    // crossing solver share the same exponents bit for bit.
    match kind {
        ModelKind::Quintic => {
            let c = quintic_gamma();
            (2.0 * c, -3.0 * c)
        }
        ModelKind::RouetFeix => {
            let c = rf_gamma();
            (c, -2.0 * c)
        }
        ModelKind::Frictionless => (1.0, -1.0),
        _ => {
            let disc = (gamma * gamma + 4.0 * beta).sqrt();
            let plus = 0.5 * (disc - gamma);
            // Product of the roots is -beta; avoids cancellation in plus when beta is small.
            let minus = -0.5 * (gamma + disc);
            (plus, minus)
        }
    }
}

/// `field_coeff * (N_R - N_L)` for a 1-based rank.
pub fn rank_field(rank: usize, params: &ModelParams) -> Result<f64> {
    let n = params.n_particles;
    if rank == 0 || rank > n {
        return Err(Error::config(format!("rank {rank} outside 1..={n}")));
    }
    let diff = n as i64 + 1 - 2 * rank as i64;
    Ok(params.field_coeff * diff as f64)
}

/// Time and length scales of Jeans theory for a velocity dispersion and
/// initial epoch, `(T_j, lambda_j) = (sqrt(3/2) t0, 3/sqrt(2) sigma_v t0)`.
pub fn jeans_scales(sigma_v: f64, t0: f64) -> Result<(f64, f64)> {
    if !(sigma_v > 0.0) || !(t0 > 0.0) {
        return Err(Error::config(format!(
            "jeans scales need sigma_v > 0 and t0 > 0 (got {sigma_v}, {t0})"
        )));
    }
    Ok((1.5f64.sqrt() * t0, 3.0 / 2f64.sqrt() * sigma_v * t0))
}

/// Rank-ordered positions and velocities at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub tau: f64,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub model: ModelParams,
    pub seed: u64,
    pub provenance: String,
}

impl Snapshot {
    /// Validated constructor: positions strictly ascending, finite, inside the
    /// primitive cell when periodic, and one per particle.
    pub fn new(
        tau: f64,
        positions: Vec<f64>,
        velocities: Vec<f64>,
        model: ModelParams,
        seed: u64,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let snap = Snapshot { tau, positions, velocities, model, seed, provenance: provenance.into() };
        snap.validate()?;
        Ok(snap)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.model.n_particles;
        if self.positions.len() != n || self.velocities.len() != n {
            return Err(Error::config(format!(
                "snapshot has {} positions and {} velocities for {n} particles",
                self.positions.len(),
                self.velocities.len()
            )));
        }
        if !self.tau.is_finite() {
            return Err(Error::config("snapshot time is not finite"));
        }
        for (i, (&x, &v)) in self.positions.iter().zip(&self.velocities).enumerate() {
            if !x.is_finite() || !v.is_finite() {
                return Err(Error::config(format!("non-finite state at rank {}", i + 1)));
            }
        }
        if let Some(i) = self.positions.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::config(format!(
                "positions not strictly ascending at ranks {}..{}",
                i + 1,
                i + 2
            )));
        }
        if self.model.periodic {
            let half = self.model.half_box();
            let (lo, hi) = (self.positions[0], self.positions[n - 1]);
            if lo < -half || hi >= half {
                return Err(Error::config(format!(
                    "positions [{lo}, {hi}] outside the primitive cell [-{half}, {half})"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `(x, v)` pairs in rank order.
    pub fn phase_points(&self) -> Vec<[f64; 2]> {
        self.positions.iter().zip(&self.velocities).map(|(&x, &v)| [x, v]).collect()
    }
}
