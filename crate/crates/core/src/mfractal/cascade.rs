//! Multiplicative binomial cascade on the unit interval and its closed-form
//! multifractal spectrum.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::measure::GridMeasure;

/// How a cascade measure is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeMode {
    /// Exact cell weights.
    Exact,
    /// `points` draws from the measure, uniform within the finest cell.
    Sampled { points: usize, seed: u64 },
}

fn check(levels: u32, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::config(format!("cascade weight must lie in (0, 1), got {p}")));
    }
    if levels == 0 || levels > 40 {
        return Err(Error::config(format!("cascade levels must lie in 1..=40, got {levels}")));
    }
    Ok(())
}

/// Weights of the `2^levels` finest cells in spatial order. A cell whose
/// index has `b` one-bits carries `p^b (1 - p)^(levels - b)`.
pub fn cascade_weights(levels: u32, p: f64) -> Result<Vec<f64>> {
    check(levels, p)?;
    let mut w = vec![1.0];
    for _ in 0..levels {
        w = w.iter().flat_map(|&m| [m * (1.0 - p), m * p]).collect();
    }
    Ok(w)
}

/// Exact measures at cell sizes `2^-j` for `j = 0..=levels`, coarse to
/// fine.
pub fn cascade_ladder(levels: u32, p: f64) -> Result<Vec<GridMeasure>> {
    let mut w = cascade_weights(levels, p)?;
    let mut ladder = Vec::with_capacity(levels as usize + 1);
    for j in (0..=levels).rev() {
        ladder.push(GridMeasure::from_weights(2f64.powi(-(j as i32)), &w)?);
        w = w.chunks(2).map(|c| c.iter().sum()).collect();
    }
    ladder.reverse();
    Ok(ladder)
}

/// Points in `[0, 1)` drawn from the cascade measure.
pub fn sample_cascade(levels: u32, p: f64, points: usize, seed: u64) -> Result<Vec<f64>> {
    check(levels, p)?;
    if points == 0 {
        return Err(Error::config("sampled cascade needs at least one point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 2f64.powi(-(levels as i32));
    Ok((0..points)
        .map(|_| {
            let index = (0..levels).fold(0u64, |acc, _| (acc << 1) | rng.random_bool(p) as u64);
            (index as f64 + rng.random::<f64>()) * scale
        })
        .collect())
}

/// Finest-level measure in the requested mode.
pub fn binomial_cascade(levels: u32, p: f64, mode: CascadeMode) -> Result<GridMeasure> {
    let cell = 2f64.powi(-(levels as i32));
    match mode {
        CascadeMode::Exact => GridMeasure::from_weights(cell, &cascade_weights(levels, p)?),
        CascadeMode::Sampled { points, seed } => {
            let mut weights = vec![0.0; 1usize << levels];
            let last = weights.len() - 1;
            for x in sample_cascade(levels, p, points, seed)? {
                weights[((x / cell) as usize).min(last)] += 1.0;
            }
            GridMeasure::from_weights(cell, &weights)
        }
    }
}

/// `tau_q = -log2(p^q + (1 - p)^q)`.
pub fn analytic_tau(p: f64, q: f64) -> f64 {
    -(p.powf(q) + (1.0 - p).powf(q)).log2()
}

/// `D_q = tau_q / (q - 1)`, with the binary entropy of `p` at `q = 1`.
pub fn analytic_dimension(p: f64, q: f64) -> f64 {
    if (q - 1.0).abs() < 1e-12 {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    } else {
        analytic_tau(p, q) / (q - 1.0)
    }
}

/// `alpha(q) = d tau / d q`.
pub fn analytic_alpha(p: f64, q: f64) -> f64 {
    let (a, b) = (p.powf(q), (1.0 - p).powf(q));
    -(a * p.ln() + b * (1.0 - p).ln()) / ((a + b) * LN_2)
}

/// `f(alpha(q)) = q alpha - tau`.
pub fn analytic_f(p: f64, q: f64) -> f64 {
    q * analytic_alpha(p, q) - analytic_tau(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfractal::measure::partition_function;

    #[test]
    fn one_level_split() {
        assert_eq!(cascade_weights(1, 0.3).unwrap(), vec![0.7, 0.3]);
        let m = binomial_cascade(1, 0.3, CascadeMode::Exact).unwrap();
        assert_eq!(m.occupied(), 2);
        assert!((m.masses()[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn symmetric_cascade_is_uniform() {
        let w = cascade_weights(9, 0.5).unwrap();
        assert!(w.iter().all(|&x| x == 2f64.powi(-9)));
    }

    #[test]
    fn partition_sum_matches_recursion() {
        let m = binomial_cascade(10, 0.3, CascadeMode::Exact).unwrap();
        let c2 = partition_function(&m, 2.0);
        let oracle = 0.58f64.powi(10);
        assert!((c2 / oracle - 1.0).abs() < 1e-12);
        assert!((oracle - 4.308e-3).abs() < 1e-6);
    }

    #[test]
    fn ladder_levels_sum_to_one() {
        let ladder = cascade_ladder(6, 0.2).unwrap();
        assert_eq!(ladder.len(), 7);
        for (j, m) in ladder.iter().enumerate() {
            assert_eq!(m.occupied(), 1 << j);
            assert!((m.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_limits() {
        assert!((analytic_dimension(0.25, 1.0) - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!((analytic_dimension(0.3, 0.0) - 1.0).abs() < 1e-15);
        let near = analytic_dimension(0.25, 1.0 + 1e-6);
        assert!((near - analytic_dimension(0.25, 1.0)).abs() < 1e-5);
        // f vanishes at the spectrum ends.
        assert!(analytic_f(0.3, 60.0).abs() < 1e-6);
        assert!((analytic_alpha(0.3, 60.0) + 0.7f64.log2()).abs() < 1e-6);
        assert!((analytic_alpha(0.3, -60.0) + 0.3f64.log2()).abs() < 1e-6);
    }

    #[test]
    fn sampling_follows_weights() {
        let xs = sample_cascade(3, 0.3, 200_000, 11).unwrap();
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
        let right = xs.iter().filter(|&&x| x >= 0.5).count() as f64 / xs.len() as f64;
        let sigma = (0.3f64 * 0.7 / xs.len() as f64).sqrt();
        assert!((right - 0.3).abs() < 5.0 * sigma);
        assert_eq!(xs, sample_cascade(3, 0.3, 200_000, 11).unwrap());
        assert!(binomial_cascade(3, 1.0, CascadeMode::Exact).is_err());
        assert!(binomial_cascade(0, 0.3, CascadeMode::Exact).is_err());
    }
}
