//! Legendre transform of `tau_q` into the singularity spectrum.

use crate::error::{Error, Result};

use super::dimension::DqCurve;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub q: f64,
    pub alpha: f64,
    pub f: f64,
}

/// Largest q spacing accepted by the finite differences.
pub const MAX_Q_SPACING: f64 = 0.5;

/// `alpha = d tau / d q` by central differences (one-sided at the ends) and
/// `f = q alpha - tau`. Orders without a `tau` are skipped.
pub fn f_alpha(curve: &DqCurve) -> Result<Vec<SpectrumPoint>> {
    let mut pts: Vec<(f64, f64)> = curve.entries.iter().filter_map(|e| Some((e.q, e.tau?))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    legendre(&pts)
}

/// Same transform on raw `(q, tau_q)` pairs sorted by `q`.
pub fn legendre(pts: &[(f64, f64)]) -> Result<Vec<SpectrumPoint>> {
    if pts.len() < 3 {
        return Err(Error::analysis(format!("f(alpha) needs at least 3 orders with tau, got {}", pts.len())));
    }
    for w in pts.windows(2) {
        let dq = w[1].0 - w[0].0;
        if !(dq > 0.0) || dq > MAX_Q_SPACING + 1e-12 {
            return Err(Error::analysis(format!("q spacing {dq} outside (0, {MAX_Q_SPACING}]")));
        }
    }
    let n = pts.len();
    Ok((0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let alpha = (pts[b].1 - pts[a].1) / (pts[b].0 - pts[a].0);
            let (q, tau) = pts[i];
            SpectrumPoint { q, alpha, f: q * alpha - tau }
        })
        .collect())
}
