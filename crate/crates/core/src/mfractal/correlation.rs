//! Two-point correlation of positions and the correlation exponent.

use crate::error::{Error, Result};

use super::scaling::{detect_scaling_ranges, RangePolicy, ScalingConfig, ScalingFit, ScalingRange};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationConfig {
    /// Linear bin width `Delta`.
    pub bin: f64,
    /// Pairs are drawn from points inside `[lo, hi)`; defaults to the
    /// central half of the box.
    pub window: Option<(f64, f64)>,
    /// Largest separation binned; defaults to a quarter of the window.
    pub r_max: Option<f64>,
    /// Logarithmic bins per decade used for the power-law fit.
    pub bins_per_decade: usize,
    pub scaling: ScalingConfig,
    pub policy: RangePolicy,
}

impl CorrelationConfig {
    pub fn new(bin: f64) -> Self {
        CorrelationConfig {
            bin,
            window: None,
            r_max: None,
            bins_per_decade: 8,
            scaling: ScalingConfig::default(),
            policy: RangePolicy::Longest,
        }
    }
}

/// One separation bin `[r_lo, r_hi)`; `c` is the excess pair density and
/// `sigma` its shot-noise error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub pairs: u64,
    pub c: f64,
    pub sigma: f64,
}

impl CorrelationBin {
    pub fn r(&self) -> f64 {
        if self.r_lo > 0.0 {
            (self.r_lo * self.r_hi).sqrt()
        } else {
            0.5 * self.r_hi
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    /// Points inside the window.
    pub points: usize,
    pub linear: Vec<CorrelationBin>,
    pub logarithmic: Vec<CorrelationBin>,
    /// Fit of `ln C` against `ln r` over logarithmic bins with `C > 0`.
    pub fit: ScalingFit,
    pub range: Option<ScalingRange>,
    /// `C(r) ~ r^-gamma`.
    pub gamma: Option<f64>,
    /// `D_2 = 1 - gamma`.
    pub correlation_dimension: Option<f64>,
}

/// Excess pair density
/// `C(r) = pairs(r, r + Delta) / Delta - n (n - 1) (W - r) / W^2`
/// over distinct pairs inside a window of width `W`, the second term being
/// the uniform expectation at bin centre.
pub fn correlation_function(positions: &[f64], box_length: f64, cfg: &CorrelationConfig) -> Result<Correlation> {
    if !(cfg.bin > 0.0) || !cfg.bin.is_finite() {
        return Err(Error::config(format!("bin width must be positive, got {}", cfg.bin)));
    }
    if cfg.bins_per_decade == 0 {
        return Err(Error::config("bins_per_decade must be at least 1"));
    }
    let (lo, hi) = cfg.window.unwrap_or((-box_length / 4.0, box_length / 4.0));
    let width = hi - lo;
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::config(format!("invalid correlation window [{lo}, {hi})")));
    }
    let r_max = cfg.r_max.unwrap_or(width / 4.0).min(width);
    let nbins = (r_max / cfg.bin).floor() as usize;
    if nbins < 2 {
        return Err(Error::config("bin width leaves fewer than two separation bins"));
    }
    if nbins > 1 << 26 {
        return Err(Error::config("bin width too small for the separation range"));
    }
    let mut inside: Vec<f64> = positions.iter().copied().filter(|&x| x >= lo && x < hi).collect();
    if inside.iter().any(|x| !x.is_finite()) {
        return Err(Error::analysis("non-finite position"));
    }
    if inside.len() < 3 {
        return Err(Error::analysis(format!("only {} points inside the correlation window", inside.len())));
    }
    inside.sort_by(f64::total_cmp);
    let reach = nbins as f64 * cfg.bin;
    let mut hist = vec![0u64; nbins];
    for (i, &a) in inside.iter().enumerate() {
        for &b in &inside[i + 1..] {
            let r = b - a;
            if r >= reach {
                break;
            }
            let k = ((r / cfg.bin) as usize).min(nbins - 1);
            hist[k] += 1;
        }
    }
    if hist.iter().sum::<u64>() == 0 {
        return Err(Error::analysis("no pairs within the separation range"));
    }
    let pair_norm = inside.len() as f64 * (inside.len() as f64 - 1.0) / (width * width);
    let make = |r_lo: f64, r_hi: f64, pairs: u64| {
        let dr = r_hi - r_lo;
        let expected = pair_norm * (width * dr - 0.5 * (r_hi * r_hi - r_lo * r_lo));
        CorrelationBin {
            r_lo,
            r_hi,
            pairs,
            c: (pairs as f64 - expected) / dr,
            sigma: (pairs as f64).max(expected).sqrt() / dr,
        }
    };
    let linear: Vec<CorrelationBin> =
        hist.iter().enumerate().map(|(k, &p)| make(k as f64 * cfg.bin, (k + 1) as f64 * cfg.bin, p)).collect();

    // Logarithmic bins built from whole linear bins, starting past the
    // first linear bin.
    let mut logarithmic = Vec::new();
    let step = 10f64.powf(1.0 / cfg.bins_per_decade as f64);
    let mut start = 1usize;
    let mut edge = 1.0f64;
    while start < nbins {
        edge *= step;
        let end = (edge.round() as usize).min(nbins);
        if end <= start {
            continue;
        }
        let pairs = hist[start..end].iter().sum();
        logarithmic.push(make(start as f64 * cfg.bin, end as f64 * cfg.bin, pairs));
        start = end;
    }
    let usable: Vec<&CorrelationBin> = logarithmic.iter().filter(|b| b.c > 0.0).collect();
    let ln_r: Vec<f64> = usable.iter().map(|b| b.r().ln()).collect();
    let ln_c: Vec<f64> = usable.iter().map(|b| b.c.ln()).collect();
    let fit = detect_scaling_ranges(2.0, &ln_r, &ln_c, &cfg.scaling)?;
    let range = fit.select(cfg.policy);
    let gamma = range.map(|r| -r.fit.slope);
    Ok(Correlation {
        points: inside.len(),
        linear,
        logarithmic,
        fit,
        range,
        gamma,
        correlation_dimension: gamma.map(|g| 1.0 - g),
    })
}
