//! Pointwise dimension: local scaling of neighbour counts around sampled
//! centres.

use crate::diagnostics::quantile;
use crate::error::{Error, Result};

use super::scaling::fit_line;

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseConfig {
    /// Increasing radii, normally a geometric sequence.
    pub radii: Vec<f64>,
    /// Number of centres, evenly spaced in rank order.
    pub centers: usize,
    /// Box length when distances wrap periodically.
    pub periodic: Option<f64>,
}

/// `count` radii from `r_min` to `r_max` in constant ratio.
pub fn geometric_radii(r_min: f64, r_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) || count < 2 {
        return Err(Error::config(format!("invalid radius sequence {r_min}..{r_max} x{count}")));
    }
    let ratio = (r_max / r_min).ln() / (count - 1) as f64;
    Ok((0..count).map(|i| r_min * (ratio * i as f64).exp()).collect())
}

/// Distribution of local slopes over the centres that had neighbours at two
/// or more radii.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseSummary {
    pub alphas: Vec<f64>,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
}

/// Per-centre slope of `ln(neighbours within r)` against `ln r`; the
/// centre itself is not counted.
pub fn pointwise_dimension(points: &[f64], cfg: &PointwiseConfig) -> Result<PointwiseSummary> {
    if points.len() < 2 || points.iter().any(|x| !x.is_finite()) {
        return Err(Error::analysis("pointwise dimension needs at least two finite points"));
    }
    if cfg.radii.len() < 2
        || cfg.radii[0] <= 0.0
        || cfg.radii.windows(2).any(|w| !(w[1] > w[0]))
        || !cfg.radii.iter().all(|r| r.is_finite())
    {
        return Err(Error::config("radii must be positive and strictly increasing"));
    }
    if cfg.centers == 0 {
        return Err(Error::config("at least one centre is required"));
    }
    if let Some(box_length) = cfg.periodic {
        let r_top = cfg.radii[cfg.radii.len() - 1];
        if r_top > box_length / 2.0 {
            return Err(Error::config(format!("radius {r_top} exceeds half the box {box_length}")));
        }
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let centers = cfg.centers.min(n);
    let ln_r: Vec<f64> = cfg.radii.iter().map(|r| r.ln()).collect();
    let mut alphas = Vec::with_capacity(centers);
    for k in 0..centers {
        let c = sorted[((k as f64 + 0.5) * n as f64 / centers as f64) as usize];
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (i, &r) in cfg.radii.iter().enumerate() {
            let count = neighbours(&sorted, c, r, cfg.periodic);
            if count > 0 {
                xs.push(ln_r[i]);
                ys.push((count as f64).ln());
            }
        }
        if let Some(fit) = fit_line(&xs, &ys) {
            alphas.push(fit.slope);
        }
    }
    if alphas.is_empty() {
        return Err(Error::analysis("no centre has neighbours at two or more radii"));
    }
    let mut sorted_alpha = alphas.clone();
    sorted_alpha.sort_by(f64::total_cmp);
    Ok(PointwiseSummary {
        median: quantile(&sorted_alpha, 0.5),
        lower_quartile: quantile(&sorted_alpha, 0.25),
        upper_quartile: quantile(&sorted_alpha, 0.75),
        alphas,
    })
}

/// Points in `[c - r, c + r]`, less the centre. Periodic images are
/// disjoint because `r` is at most half the box.
fn neighbours(sorted: &[f64], c: f64, r: f64, periodic: Option<f64>) -> usize {
    let within = |a: f64, b: f64| sorted.partition_point(|&x| x <= b) - sorted.partition_point(|&x| x < a);
    let mut total = within(c - r, c + r);
    if let Some(l) = periodic {
        total += within(c - r + l, c + r + l) + within(c - r - l, c + r - l);
    }
    total.saturating_sub(1)
}
