//! Observables of a snapshot: energies, virial ratio, coarse-grained
//! entropies on a phase-space grid, stretching angle, clusters and the slope
//! of matter streams inside underdense regions.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Snapshot};

/// Energy split of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    /// `sum v^2 / 2`.
    pub kinetic: f64,
    /// `-beta sum x^2 / 2`.
    pub background: f64,
    /// `field_coeff * sum_{i<j} (x_j - x_i)`.
    pub interaction: f64,
    pub total: f64,
}

/// Energies of sorted positions; `sum_{i<j}(x_j - x_i) = sum_j x_j (2j - n + 1)`.
pub fn energy(snapshot: &Snapshot) -> Energy {
    energy_of(&snapshot.positions, &snapshot.velocities, &snapshot.model)
}

pub fn energy_of(positions: &[f64], velocities: &[f64], params: &ModelParams) -> Energy {
    let n = positions.len() as f64;
    let kinetic = 0.5 * velocities.iter().map(|v| v * v).sum::<f64>();
    let background = -0.5 * params.beta * positions.iter().map(|x| x * x).sum::<f64>();
    let pair_sum: f64 = positions
        .iter()
        .enumerate()
        .map(|(j, &x)| x * (2.0 * j as f64 - n + 1.0))
        .sum();
    let interaction = params.field_coeff * pair_sum;
    Energy { kinetic, background, interaction, total: kinetic + background + interaction }
}

/// `2 K / W` with `W` the interaction energy.
pub fn virial_ratio(snapshot: &Snapshot) -> Result<f64> {
    let e = energy(snapshot);
    if e.interaction == 0.0 {
        return Err(Error::Undefined("virial ratio with zero interaction energy".into()));
    }
    Ok(2.0 * e.kinetic / e.interaction)
}

/// Occupation of square phase-space cells `dx = dv = cell`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    cell: f64,
    /// Occupied cells as `((ix, iv), mass)` in cell-index order.
    cells: Vec<((i64, i64), f64)>,
}

impl PhaseGrid {
    /// Bin a snapshot. Positions are measured from the cell minimum
    /// (`-L/2` when periodic, the smallest position otherwise); velocities
    /// from one cell below the smallest velocity.
    pub fn from_snapshot(snapshot: &Snapshot, cell: f64) -> Result<Self> {
        if snapshot.is_empty() {
            return Err(Error::analysis("phase grid of an empty snapshot"));
        }
        let x0 = if snapshot.model.periodic {
            -snapshot.model.half_box()
        } else {
            snapshot.positions.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let v0 = snapshot.velocities.iter().copied().fold(f64::INFINITY, f64::min) - cell;
        Self::from_points(snapshot.phase_points(), [x0, v0], cell)
    }

    pub fn from_points(points: impl IntoIterator<Item = [f64; 2]>, origin: [f64; 2], cell: f64) -> Result<Self> {
        if !(cell > 0.0) {
            return Err(Error::analysis(format!("cell size must be positive, got {cell}")));
        }
        let mut counts: BTreeMap<(i64, i64), u64> = BTreeMap::new();
        let mut total = 0u64;
        for [x, v] in points {
            let key = (((x - origin[0]) / cell).floor() as i64, ((v - origin[1]) / cell).floor() as i64);
            *counts.entry(key).or_default() += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::analysis("phase grid of an empty point set"));
        }
        let cells = counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect();
        Ok(PhaseGrid { cell, cells })
    }

    /// Grid from explicit cell masses; they are renormalized to sum to one.
    pub fn from_masses(cell: f64, masses: impl IntoIterator<Item = ((i64, i64), f64)>) -> Result<Self> {
        if !(cell > 0.0) {
            return Err(Error::analysis(format!("cell size must be positive, got {cell}")));
        }
        let mut cells: Vec<_> = masses.into_iter().filter(|(_, m)| *m > 0.0).collect();
        let total: f64 = cells.iter().map(|(_, m)| m).sum();
        if cells.is_empty() || !total.is_finite() {
            return Err(Error::analysis("phase grid without mass"));
        }
        cells.sort_by_key(|(k, _)| *k);
        for (_, m) in &mut cells {
            *m /= total;
        }
        Ok(PhaseGrid { cell, cells })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn occupied(&self) -> usize {
        self.cells.len()
    }

    pub fn measures(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().map(|(_, m)| *m)
    }
}

/// Coarse-grained Tsallis entropy with density `f = mu / l^2`;
/// the Gibbs entropy `-sum mu ln(mu / l^2)` at `q = 1`.
pub fn entropy(grid: &PhaseGrid, q: f64) -> Result<f64> {
    if grid.cells.is_empty() {
        return Err(Error::analysis("entropy of an empty grid"));
    }
    let area = grid.cell * grid.cell;
    if q == 1.0 {
        return Ok(-grid.measures().map(|mu| mu * (mu / area).ln()).sum::<f64>());
    }
    let integral: f64 = grid.measures().map(|mu| (mu / area).powf(q) * area).sum();
    Ok((1.0 - integral) / (q - 1.0))
}

/// Direction of fastest separation in the phase plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchingAngle {
    pub radians: f64,
    /// Set when the friction vanishes and the limiting value is returned.
    pub degenerate: bool,
}

/// `theta = atan((1 + rho + rho_b) / gamma) / 2`, or `pi/4` at `gamma = 0`.
pub fn stretching_angle(rho: f64, rho_b: f64, gamma: f64) -> Result<StretchingAngle> {
    if !(gamma >= 0.0) {
        return Err(Error::config(format!("friction must be non-negative, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(StretchingAngle { radians: FRAC_PI_4, degenerate: true });
    }
    Ok(StretchingAngle { radians: 0.5 * ((1.0 + rho + rho_b) / gamma).atan(), degenerate: false })
}

/// Particle counts in 1D cells of width `cell` covering the primitive cell
/// (periodic) or the occupied interval.
fn line_counts(snapshot: &Snapshot, cell: f64) -> Result<(f64, Vec<u64>)> {
    if !(cell > 0.0) {
        return Err(Error::analysis(format!("cell size must be positive, got {cell}")));
    }
    if snapshot.is_empty() {
        return Err(Error::analysis("empty snapshot"));
    }
    let xs = &snapshot.positions;
    let (lo, hi) = if snapshot.model.periodic {
        (-snapshot.model.half_box(), snapshot.model.half_box())
    } else {
        (xs[0], xs[xs.len() - 1])
    };
    let bins = (((hi - lo) / cell).ceil() as usize).max(1);
    let mut counts = vec![0u64; bins];
    for &x in xs {
        let i = (((x - lo) / cell).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok((lo, counts))
}

/// Number of maximal runs of adjacent 1D cells whose density exceeds
/// `threshold` times the mean and that hold at least `min_size` particles.
/// Runs touching both ends of a periodic cell are joined.
pub fn cluster_count(snapshot: &Snapshot, cell: f64, threshold: f64, min_size: u64) -> Result<usize> {
    let (_, counts) = line_counts(snapshot, cell)?;
    let mean = snapshot.len() as f64 / counts.len() as f64;
    let dense: Vec<bool> = counts.iter().map(|&c| c as f64 > threshold * mean).collect();
    let mut runs: Vec<u64> = Vec::new();
    let mut current: Option<u64> = None;
    for (&d, &c) in dense.iter().zip(&counts) {
        match (d, current.as_mut()) {
            (true, Some(total)) => *total += c,
            (true, None) => current = Some(c),
            (false, Some(_)) => runs.extend(current.take()),
            (false, None) => {}
        }
    }
    let trailing = current.is_some();
    runs.extend(current);
    if snapshot.model.periodic && trailing && dense[0] && runs.len() > 1 {
        let last = runs.pop().unwrap_or(0);
        runs[0] += last;
    }
    Ok(runs.into_iter().filter(|&m| m >= min_size).count())
}

/// Cell selection for [`void_slope`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoidSlopeConfig {
    /// Width of the 1D cells.
    pub cell: f64,
    /// A cell is underdense below this multiple of the mean count.
    pub threshold: f64,
    /// Fewest particles for an axis fit.
    pub min_points: usize,
    /// Largest ratio of minor to major axis (standard deviations) for the
    /// cell to count as a single stream; 1 accepts every cell.
    pub max_thickness: f64,
}

impl VoidSlopeConfig {
    pub fn new(cell: f64, threshold: f64, min_points: usize) -> Self {
        VoidSlopeConfig { cell, threshold, min_points, max_thickness: 1.0 }
    }
}

/// Slope `dv/dx` of streams in underdense regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoidSlope {
    /// Median over qualifying cells of the principal-axis slope.
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub cells: usize,
}

/// Principal-axis slope of the `(x, v)` points, in the Euclidean metric of
/// the dimensionless phase plane, in every 1D cell that is underdense, holds
/// enough particles and is thin enough to be one stream.
pub fn void_slope(snapshot: &Snapshot, cfg: &VoidSlopeConfig) -> Result<VoidSlope> {
    if !(cfg.max_thickness > 0.0) {
        return Err(Error::analysis(format!("stream thickness bound must be positive, got {}", cfg.max_thickness)));
    }
    let (lo, counts) = line_counts(snapshot, cfg.cell)?;
    let mean = snapshot.len() as f64 / counts.len() as f64;
    let mut slopes = Vec::new();
    let mut start = 0;
    for (i, &c) in counts.iter().enumerate() {
        let end = start + c as usize;
        if (c as f64) < cfg.threshold * mean && c as usize >= cfg.min_points.max(2) {
            let xs = &snapshot.positions[start..end];
            let vs = &snapshot.velocities[start..end];
            if let Some((s, thickness)) = principal_axis(xs, vs) {
                if thickness <= cfg.max_thickness {
                    slopes.push(s);
                }
            }
        }
        debug_assert!(xs_in_cell(&snapshot.positions[start..end], lo + i as f64 * cfg.cell, cfg.cell, counts.len() == i + 1));
        start = end;
    }
    if slopes.is_empty() {
        return Err(Error::analysis("no underdense cell holds a qualifying stream"));
    }
    slopes.sort_by(f64::total_cmp);
    Ok(VoidSlope {
        median: quantile(&slopes, 0.5),
        lower_quartile: quantile(&slopes, 0.25),
        upper_quartile: quantile(&slopes, 0.75),
        cells: slopes.len(),
    })
}

fn xs_in_cell(xs: &[f64], lo: f64, cell: f64, last: bool) -> bool {
    let slack = 1e-9 * cell.max(lo.abs());
    xs.iter().all(|&x| x >= lo - slack && (last || x < lo + cell + slack))
}

/// Slope of the major axis of the covariance ellipse and the ratio of its
/// minor to major standard deviation.
fn principal_axis(xs: &[f64], vs: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let mv = vs.iter().sum::<f64>() / n;
    let (mut sxx, mut svv, mut sxv) = (0.0, 0.0, 0.0);
    for (&x, &v) in xs.iter().zip(vs) {
        let (dx, dv) = (x - mx, v - mv);
        sxx += dx * dx;
        svv += dv * dv;
        sxv += dx * dv;
    }
    // Major-axis angle of a symmetric 2x2 matrix: tan(2 phi) = 2 sxv / (sxx - svv).
    let phi = 0.5 * (2.0 * sxv).atan2(sxx - svv);
    let slope = phi.tan();
    let half_trace = 0.5 * (sxx + svv);
    let spread = (0.25 * (sxx - svv).powi(2) + sxv * sxv).sqrt();
    let (major, minor) = (half_trace + spread, (half_trace - spread).max(0.0));
    (slope.is_finite() && major > 0.0).then(|| (slope, (minor / major).sqrt()))
}

/// Linear-interpolated quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}
