//! Detection of linear scaling ranges in `(ln l, y)` data.

use std::f64::consts::LN_10;

use crate::error::{Error, Result};

/// Thresholds a window of grid points must meet to count as a scaling range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConfig {
    /// Minimum span in decades of `l`.
    pub min_decades: f64,
    /// Minimum coefficient of determination.
    pub min_r2: f64,
    /// Largest residual allowed, as a fraction of the fitted rise across
    /// the window. Rejects windows that bridge a change of slope.
    pub max_residual: f64,
    /// Minimum number of grid points in a window.
    pub min_points: usize,
    /// Largest change of slope, relative to the larger of the two, between
    /// the halves of the best two-line split of a window. A bigger change
    /// that also exceeds three standard errors marks two scaling regimes,
    /// and the window is rejected. Infinity disables the test.
    pub max_slope_change: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { min_decades: 1.5, min_r2: 0.995, max_residual: 0.02, min_points: 3, max_slope_change: 0.1 }
    }
}

/// Ordinary least squares of `y` on `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_stderr: f64,
    pub max_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ssr = 0.0;
    let mut max_residual: f64 = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let r = b - (intercept + slope * a);
        ssr += r * r;
        max_residual = max_residual.max(r.abs());
    }
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let slope_stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(LineFit { slope, intercept, r2, slope_stderr, max_residual })
}

/// A contiguous window of grid points (inclusive indices) and its fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRange {
    pub first: usize,
    pub last: usize,
    pub l_lo: f64,
    pub l_hi: f64,
    pub fit: LineFit,
}

impl ScalingRange {
    pub fn decades(&self) -> f64 {
        (self.l_hi / self.l_lo).log10()
    }

    pub fn points(&self) -> usize {
        self.last - self.first + 1
    }
}

/// The data of one order `q` and every scaling range found in it, longest
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub q: f64,
    pub ln_l: Vec<f64>,
    pub y: Vec<f64>,
    pub ranges: Vec<ScalingRange>,
}

/// How one range is picked from a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangePolicy {
    /// The longest detected range.
    Longest,
    /// The detected range reaching the largest `l`.
    LargerL,
    /// A fit over the grid points with `l_lo <= l <= l_hi`, detected or not.
    Fixed { l_lo: f64, l_hi: f64 },
}

impl ScalingFit {
    pub fn select(&self, policy: RangePolicy) -> Option<ScalingRange> {
        match policy {
            RangePolicy::Longest => self.ranges.first().copied(),
            RangePolicy::LargerL => self.ranges.iter().copied().max_by(|a, b| a.l_hi.total_cmp(&b.l_hi)),
            RangePolicy::Fixed { l_lo, l_hi } => {
                let (lo, hi) = (l_lo.min(l_hi).ln(), l_lo.max(l_hi).ln());
                let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
                let inside: Vec<usize> =
                    (0..self.ln_l.len()).filter(|&i| self.ln_l[i] >= lo - slack && self.ln_l[i] <= hi + slack).collect();
                let (&first, &last) = (inside.first()?, inside.last()?);
                window(&self.ln_l, &self.y, first, last)
            }
        }
    }
}

fn window(ln_l: &[f64], y: &[f64], first: usize, last: usize) -> Option<ScalingRange> {
    let fit = fit_line(&ln_l[first..=last], &y[first..=last])?;
    let (a, b) = (ln_l[first].exp(), ln_l[last].exp());
    Some(ScalingRange { first, last, l_lo: a.min(b), l_hi: a.max(b), fit })
}

fn qualifies(range: &ScalingRange, ln_l: &[f64], sums: &PrefixSums, cfg: &ScalingConfig) -> bool {
    let fit = &range.fit;
    let span = (ln_l[range.last] - ln_l[range.first]).abs();
    let rise = fit.slope.abs() * span;
    let exact = fit.max_residual <= 1e-12 * (1.0 + fit.intercept.abs() + rise);
    exact
        || (fit.r2 >= cfg.min_r2
            && fit.max_residual <= cfg.max_residual * rise
            && !kinked(range, ln_l, sums, cfg))
}

/// Running sums for constant-time least squares over any window.
struct PrefixSums {
    x: Vec<f64>,
    y: Vec<f64>,
    xx: Vec<f64>,
    xy: Vec<f64>,
    yy: Vec<f64>,
}

/// Slope and its standard error.
struct SegmentFit {
    slope: f64,
    stderr: f64,
}

impl PrefixSums {
    fn new(x: &[f64], y: &[f64]) -> Self {
        // Centre first so the sums of squares do not cancel badly.
        let (mx, my) = (x.iter().sum::<f64>() / x.len() as f64, y.iter().sum::<f64>() / y.len() as f64);
        let scan = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
            std::iter::once(0.0)
                .chain(x.iter().zip(y).scan(0.0, |acc, (&a, &b)| {
                    *acc += f(a - mx, b - my);
                    Some(*acc)
                }))
                .collect()
        };
        PrefixSums { x: scan(&|a, _| a), y: scan(&|_, b| b), xx: scan(&|a, _| a * a), xy: scan(&|a, b| a * b), yy: scan(&|_, b| b * b) }
    }

    /// Fit over the inclusive index range `first..=last`.
    fn fit(&self, first: usize, last: usize) -> Option<SegmentFit> {
        let d = |v: &[f64]| v[last + 1] - v[first];
        let n = (last + 1 - first) as f64;
        if n < 3.0 {
            return None;
        }
        let (sx, sy) = (d(&self.x), d(&self.y));
        let sxx = d(&self.xx) - sx * sx / n;
        let sxy = d(&self.xy) - sx * sy / n;
        let syy = d(&self.yy) - sy * sy / n;
        if !(sxx > 0.0) {
            return None;
        }
        let slope = sxy / sxx;
        let ssr = (syy - slope * sxy).max(0.0);
        Some(SegmentFit { slope, stderr: (ssr / (n - 2.0) / sxx).sqrt() })
    }
}

/// Whether some two-line split of the window, with each part spanning at
/// least a third of the minimum range, changes slope by more than the
/// configured fraction and by more than three standard errors.
fn kinked(range: &ScalingRange, ln_l: &[f64], sums: &PrefixSums, cfg: &ScalingConfig) -> bool {
    if !cfg.max_slope_change.is_finite() {
        return false;
    }
    let min_part = cfg.min_decades * LN_10 / 3.0;
    (range.first + 2..range.last - 1).any(|split| {
        if (ln_l[split] - ln_l[range.first]).abs() < min_part || (ln_l[range.last] - ln_l[split + 1]).abs() < min_part {
            return false;
        }
        let (Some(a), Some(b)) = (sums.fit(range.first, split), sums.fit(split + 1, range.last)) else {
            return false;
        };
        let change = (a.slope - b.slope).abs();
        change > cfg.max_slope_change * a.slope.abs().max(b.slope.abs())
            && change > 3.0 * (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
    })
}

/// Find every maximal window meeting `cfg` and return them longest first,
/// greedily discarding any that share a grid point with a longer one.
/// `ln_l` must be strictly monotone.
pub fn detect_scaling_ranges(q: f64, ln_l: &[f64], y: &[f64], cfg: &ScalingConfig) -> Result<ScalingFit> {
    if ln_l.len() != y.len() {
        return Err(Error::analysis("scaling data columns differ in length"));
    }
    if ln_l.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::analysis("scaling data contains non-finite values"));
    }
    let increasing = ln_l.windows(2).all(|w| w[0] < w[1]);
    let decreasing = ln_l.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return Err(Error::analysis("scale grid is not strictly monotone"));
    }
    let n = ln_l.len();
    let min_span = cfg.min_decades * LN_10;
    let sums = PrefixSums::new(ln_l, y);
    let mut candidates = Vec::new();
    for first in 0..n {
        for last in first + cfg.min_points.max(2) - 1..n {
            if (ln_l[last] - ln_l[first]).abs() < min_span * (1.0 - 1e-12) {
                continue;
            }
            if let Some(range) = window(ln_l, y, first, last) {
                if qualifies(&range, ln_l, &sums, cfg) {
                    candidates.push(range);
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.points()
            .cmp(&a.points())
            .then(b.fit.r2.total_cmp(&a.fit.r2))
            .then(b.l_hi.total_cmp(&a.l_hi))
    });
    let mut taken = vec![false; n];
    let mut ranges = Vec::new();
    for c in candidates {
        if taken[c.first..=c.last].iter().any(|&t| t) {
            continue;
        }
        taken[c.first..=c.last].iter_mut().for_each(|t| *t = true);
        ranges.push(c);
    }
    Ok(ScalingFit { q, ln_l: ln_l.to_vec(), y: y.to_vec(), ranges })
}
