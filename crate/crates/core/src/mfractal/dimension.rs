//! Generalized dimensions `D_q` from a ladder of grid measures.

use crate::error::{Error, Result};

use super::measure::{grid_measure_closed, scaling_ordinate, GridMeasure, PointSet};
use super::scaling::{detect_scaling_ranges, RangePolicy, ScalingConfig, ScalingFit, ScalingRange};

/// Geometric grid of cell sizes, coarse to fine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LGridConfig {
    /// Largest cell; defaults to a quarter of the point-set extent.
    pub l_max: Option<f64>,
    /// Smallest cell; defaults to twice the minimum nearest-neighbour
    /// spacing.
    pub l_min: Option<f64>,
    /// Cell sizes per factor of two.
    pub steps_per_octave: u32,
    /// Refinement stops once this fraction of points sits alone in a cell.
    pub max_singleton_fraction: f64,
    /// Refinement also stops once occupied cells hold fewer points than
    /// this on average.
    pub min_mean_occupancy: f64,
    pub max_levels: usize,
}

impl Default for LGridConfig {
    fn default() -> Self {
        LGridConfig { l_max: None, l_min: None, steps_per_octave: 4, max_singleton_fraction: 1.0, min_mean_occupancy: 1.0, max_levels: 240 }
    }
}

/// Grid measures of `points` at decreasing cell sizes.
pub fn measure_ladder(points: &PointSet, cfg: &LGridConfig) -> Result<Vec<GridMeasure>> {
    if points.is_empty() {
        return Err(Error::analysis("empty point set"));
    }
    if cfg.steps_per_octave == 0 {
        return Err(Error::config("steps_per_octave must be at least 1"));
    }
    let l_max = match cfg.l_max {
        Some(l) => l,
        None => points.extent() / 4.0,
    };
    if !(l_max > 0.0 && l_max.is_finite()) {
        return Err(Error::analysis("point set has zero extent; no cell-size grid"));
    }
    let l_min = match cfg.l_min {
        Some(l) => l,
        None => 2.0 * points.min_spacing().unwrap_or(0.0),
    };
    let extent = points.extent();
    let ratio = 2f64.powf(-1.0 / cfg.steps_per_octave as f64);
    let mut ladder: Vec<GridMeasure> = Vec::new();
    for k in 0..cfg.max_levels {
        let mut cell = l_max * ratio.powi(k as i32);
        // Snap to an exact tiling of the widest dimension so no edge cell is
        // partial there.
        if extent > 0.0 && extent / cell >= 1.0 {
            cell = extent / (extent / cell).round();
        }
        if ladder.last().is_some_and(|m| m.cell() <= cell) {
            continue;
        }
        if cell < l_min * (1.0 - 1e-12) {
            break;
        }
        let m = grid_measure_closed(points, cell)?;
        let sparse = m.total_points().is_some_and(|n| (n as f64) < cfg.min_mean_occupancy * m.occupied() as f64);
        if sparse || m.singleton_fraction().is_some_and(|f| f > cfg.max_singleton_fraction) {
            break;
        }
        ladder.push(m);
    }
    Ok(ladder)
}

/// One order of the dimension curve. A missing range leaves `dimension`,
/// `tau` and `stderr` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DqEntry {
    pub q: f64,
    pub dimension: Option<f64>,
    pub tau: Option<f64>,
    pub stderr: Option<f64>,
    pub range: Option<ScalingRange>,
    pub fit: ScalingFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqCurve {
    pub entries: Vec<DqEntry>,
}

impl DqCurve {
    pub fn entry(&self, q: f64) -> Option<&DqEntry> {
        self.entries.iter().find(|e| (e.q - q).abs() < 1e-12)
    }

    pub fn dimension(&self, q: f64) -> Option<f64> {
        self.entry(q).and_then(|e| e.dimension)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqConfig {
    pub scaling: ScalingConfig,
    pub policy: RangePolicy,
    /// Cells with fewer points are left out of the sums.
    pub min_occupancy: u64,
}

impl Default for DqConfig {
    fn default() -> Self {
        DqConfig { scaling: ScalingConfig::default(), policy: RangePolicy::Longest, min_occupancy: 1 }
    }
}

/// `D_q` as the slope of `ln C_q / (q - 1)` (or `sum mu ln mu` at `q = 1`)
/// against `ln l`, with `tau_q = (q - 1) D_q`.
pub fn dimension_curve(ladder: &[GridMeasure], qs: &[f64], cfg: &DqConfig) -> Result<DqCurve> {
    if qs.iter().any(|q| !q.is_finite()) {
        return Err(Error::config("q values must be finite"));
    }
    let measures: Vec<GridMeasure> = ladder.iter().map(|m| m.with_min_occupancy(cfg.min_occupancy)).collect();
    let measures: Vec<&GridMeasure> = measures.iter().filter(|m| m.occupied() > 0).collect();
    let ln_l: Vec<f64> = measures.iter().map(|m| m.cell().ln()).collect();
    let mut entries = Vec::with_capacity(qs.len());
    for &q in qs {
        let y: Vec<f64> = measures.iter().map(|m| scaling_ordinate(m, q)).collect();
        let fit = detect_scaling_ranges(q, &ln_l, &y, &cfg.scaling)?;
        let range = fit.select(cfg.policy);
        let dimension = range.map(|r| r.fit.slope);
        entries.push(DqEntry {
            q,
            dimension,
            tau: dimension.map(|d| (q - 1.0) * d),
            stderr: range.map(|r| r.fit.slope_stderr),
            range,
            fit,
        });
    }
    Ok(DqCurve { entries })
}

/// Evenly spaced orders from `lo` to `hi` inclusive.
pub fn q_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::config(format!("invalid q range {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// Orders -5 to 10 in steps of 0.25.
pub fn default_q_grid() -> Vec<f64> {
    (0..=60).map(|i| -5.0 + 0.25 * i as f64).collect()
}
