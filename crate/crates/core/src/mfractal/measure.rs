//! Box-counting measures and their partition sums.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Snapshot;

/// Which projection of a snapshot is analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Positions only.
    Position,
    /// The `(x, v)` plane with square cells.
    Phase,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Position => "x",
            Space::Phase => "mu",
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Space::Position),
            "mu" => Ok(Space::Phase),
            other => Err(Error::config(format!("unknown space '{other}' (expected x or mu)"))),
        }
    }
}

/// Points in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSet {
    Line(Vec<f64>),
    Plane(Vec<[f64; 2]>),
}

impl PointSet {
    pub fn from_snapshot(snapshot: &Snapshot, space: Space) -> Self {
        match space {
            Space::Position => PointSet::Line(snapshot.positions.clone()),
            Space::Phase => PointSet::Plane(snapshot.phase_points()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PointSet::Line(_) => 1,
            PointSet::Plane(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PointSet::Line(p) => p.len(),
            PointSet::Plane(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Componentwise minimum.
    pub fn origin(&self) -> [f64; 2] {
        self.bounds().0
    }

    /// Largest coordinate range over the dimensions.
    pub fn extent(&self) -> f64 {
        let span = self.bounds().1;
        span[0].max(span[1])
    }

    /// Componentwise minimum and coordinate range; the second dimension of a
    /// line is `(0, 0)`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY, 0.0];
        let mut hi = [f64::NEG_INFINITY, 0.0];
        match self {
            PointSet::Line(p) => {
                for &x in p {
                    lo[0] = lo[0].min(x);
                    hi[0] = hi[0].max(x);
                }
            }
            PointSet::Plane(p) => {
                lo[1] = f64::INFINITY;
                hi[1] = f64::NEG_INFINITY;
                for q in p {
                    for d in 0..2 {
                        lo[d] = lo[d].min(q[d]);
                        hi[d] = hi[d].max(q[d]);
                    }
                }
            }
        }
        (lo, [hi[0] - lo[0], hi[1] - lo[1]])
    }

    /// Smallest positive nearest-neighbour distance in the maximum norm,
    /// the metric of square cells.
    pub fn min_spacing(&self) -> Option<f64> {
        let best = match self {
            PointSet::Line(p) => {
                let mut xs = p.clone();
                xs.sort_by(f64::total_cmp);
                xs.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min)
            }
            PointSet::Plane(p) => {
                let mut pts = p.clone();
                pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
                let mut best = f64::INFINITY;
                for (i, a) in pts.iter().enumerate() {
                    for b in &pts[i + 1..] {
                        if b[0] - a[0] >= best {
                            break;
                        }
                        let d = (b[0] - a[0]).max((b[1] - a[1]).abs());
                        if d > 0.0 && d < best {
                            best = d;
                        }
                    }
                }
                best
            }
        };
        best.is_finite().then_some(best)
    }

    fn check(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::analysis("empty point set"));
        }
        let finite = match self {
            PointSet::Line(p) => p.iter().all(|x| x.is_finite()),
            PointSet::Plane(p) => p.iter().all(|q| q[0].is_finite() && q[1].is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::analysis("point set contains non-finite coordinates"))
        }
    }
}

/// Normalized occupation of cells of side `cell`. Only occupied cells are
/// stored, in cell-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    dim: usize,
    cell: f64,
    masses: Vec<f64>,
    /// Per-cell point counts; empty for measures given by weights.
    counts: Vec<u64>,
    total: u64,
}

/// Bin `points` into cells of side `cell` anchored at the componentwise
/// minimum.
pub fn grid_measure(points: &PointSet, cell: f64) -> Result<GridMeasure> {
    bin_points(points, cell, false)
}

/// As [`grid_measure`], but with the top edge closed: a point on the upper
/// boundary of an exact tiling joins the last cell instead of opening a
/// sliver cell of its own.
pub fn grid_measure_closed(points: &PointSet, cell: f64) -> Result<GridMeasure> {
    bin_points(points, cell, true)
}

fn bin_points(points: &PointSet, cell: f64, closed: bool) -> Result<GridMeasure> {
    if !(cell > 0.0) || !cell.is_finite() {
        return Err(Error::analysis(format!("cell size must be positive, got {cell}")));
    }
    points.check()?;
    let (origin, span) = points.bounds();
    let last = span.map(|s| if closed { ((s / cell - 1e-9).ceil() as i64 - 1).max(0) } else { i64::MAX });
    let key = |x: f64, d: usize| (((x - origin[d]) / cell).floor() as i64).min(last[d]);
    let counts = match points {
        PointSet::Line(p) => {
            let mut keys: Vec<i64> = p.iter().map(|&x| key(x, 0)).collect();
            keys.sort_unstable();
            run_lengths(&keys)
        }
        PointSet::Plane(p) => {
            let mut keys: Vec<(i64, i64)> = p.iter().map(|q| (key(q[0], 0), key(q[1], 1))).collect();
            keys.sort_unstable();
            run_lengths(&keys)
        }
    };
    let total = points.len() as u64;
    let masses = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(GridMeasure { dim: points.dim(), cell, masses, counts, total })
}

fn run_lengths<T: PartialEq>(sorted: &[T]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push((j - i) as u64);
        i = j;
    }
    out
}

impl GridMeasure {
    /// One-dimensional measure from cell weights; zero weights are dropped
    /// and the rest renormalized.
    pub fn from_weights(cell: f64, weights: &[f64]) -> Result<Self> {
        if !(cell > 0.0) {
            return Err(Error::analysis(format!("cell size must be positive, got {cell}")));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::analysis("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::analysis("weights sum to zero"));
        }
        let masses = weights.iter().filter(|&&w| w > 0.0).map(|w| w / total).collect();
        Ok(GridMeasure { dim: 1, cell, masses, counts: Vec::new(), total: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn occupied(&self) -> usize {
        self.masses.len()
    }

    /// Per-cell counts, when the measure was built from points.
    pub fn counts(&self) -> Option<&[u64]> {
        (!self.counts.is_empty()).then_some(self.counts.as_slice())
    }

    /// Number of points binned, when built from points.
    pub fn total_points(&self) -> Option<u64> {
        (self.total > 0).then_some(self.total)
    }

    /// Fraction of points that are alone in their cell.
    pub fn singleton_fraction(&self) -> Option<f64> {
        let counts = self.counts()?;
        Some(counts.iter().filter(|&&c| c == 1).count() as f64 / self.total as f64)
    }

    /// Restrict to cells holding at least `min_count` points. Masses keep
    /// their original normalization.
    pub fn with_min_occupancy(&self, min_count: u64) -> GridMeasure {
        if self.counts.is_empty() || min_count <= 1 {
            return self.clone();
        }
        let (counts, masses): (Vec<u64>, Vec<f64>) = self
            .counts
            .iter()
            .zip(&self.masses)
            .filter(|(&c, _)| c >= min_count)
            .map(|(&c, &m)| (c, m))
            .unzip();
        GridMeasure { counts, masses, ..*self }
    }
}

/// `C_q = sum mu_i^q` over occupied cells, or at `q = 1` the information
/// sum `I = -sum mu_i ln mu_i`.
pub fn partition_function(measure: &GridMeasure, q: f64) -> f64 {
    if q == 1.0 {
        -measure.masses.iter().map(|&m| m * m.ln()).sum::<f64>()
    } else if q == 0.0 {
        measure.masses.len() as f64
    } else {
        log_partition(measure, q).exp()
    }
}

/// `ln C_q` evaluated without overflow.
pub fn log_partition(measure: &GridMeasure, q: f64) -> f64 {
    if q == 0.0 {
        return (measure.masses.len() as f64).ln();
    }
    let logs = measure.masses.iter().map(|&m| q * m.ln());
    let peak = logs.clone().fold(f64::NEG_INFINITY, f64::max);
    peak + logs.map(|v| (v - peak).exp()).sum::<f64>().ln()
}

/// Quantity whose slope against `ln l` is `D_q`: `ln C_q / (q - 1)`, or
/// `sum mu ln mu` at `q = 1`.
pub fn scaling_ordinate(measure: &GridMeasure, q: f64) -> f64 {
    if q == 1.0 {
        -partition_function(measure, 1.0)
    } else {
        log_partition(measure, q) / (q - 1.0)
    }
}
