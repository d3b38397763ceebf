//! Earliest zero of `z(t)` where `z'' + gamma z' - beta z = g`.
//!
//! For `beta > 0` the trajectory is `C+ e^{l+ t} + C- e^{l- t} + K`.
//! Multiplying by `e^{-l- t}` and substituting `u = e^{c t}` turns the search
//! into the first root `u > 1` of the trinomial `C+ u^m + K u^k + C-`, with
//! `(m, k) = (5, 3)` for the quintic model, `(3, 2)` for Rouet-Feix and
//! `(2, 1)` without friction. A trinomial has at most one critical point on
//! `u > 0`, so it splits `[1, inf)` into at most two monotone pieces and each
//! piece is bracketed analytically before a safeguarded Newton iteration.

use super::kinematics::{Form, Kernel};
use crate::model::{ModelKind, ModelParams};

const MAX_ITER: usize = 200;
/// Largest exponent `m c t` allowed when bounding a root; roots further out
/// than this are reported as absent.
const MAX_GROWTH: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Strategy {
    /// Integer trinomial in `u = e^{rate t}`.
    Polynomial { m: i32, k: i32, rate: f64 },
    /// Frictionless: quadratic in `u = e^t`, closed form.
    QuadraticU,
    /// Arbitrary friction with background: real exponents, `u = e^t`.
    RealExponents { m: f64, k: f64 },
    /// No background, no friction: quadratic in `t`.
    Ballistic,
    /// No background, friction: searched directly in `t`.
    Damped { gamma: f64 },
}

/// Solver could not converge; carries the offending state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoConvergence {
    pub z0: f64,
    pub w0: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CrossingSolver {
    strategy: Strategy,
    beta: f64,
    plus: f64,
    minus: f64,
}

impl CrossingSolver {
    pub fn new(params: &ModelParams) -> Self {
        let kernel = Kernel::new(params);
        let (plus, minus) = match kernel.form {
            Form::Exponential { plus, minus } => (plus, minus),
            _ => (0.0, 0.0),
        };
        let strategy = match (params.kind, kernel.form) {
            (ModelKind::Quintic, _) => Strategy::Polynomial { m: 5, k: 3, rate: plus / 2.0 },
            (ModelKind::RouetFeix, _) => Strategy::Polynomial { m: 3, k: 2, rate: plus },
            (ModelKind::Frictionless, _) => Strategy::QuadraticU,
            (_, Form::Exponential { plus, minus }) => {
                if params.gamma == 0.0 && params.beta == 1.0 {
                    Strategy::QuadraticU
                } else {
                    Strategy::RealExponents { m: plus - minus, k: -minus }
                }
            }
            (_, Form::Ballistic) => Strategy::Ballistic,
            (_, Form::Damped { gamma }) => Strategy::Damped { gamma },
        };
        CrossingSolver { strategy, beta: params.beta, plus, minus }
    }

    /// Smallest `t > 0` with `z(t) = 0`, given `z(0) = z0 >= 0`, `z'(0) = w0`
    /// and constant forcing `g`. Returns `Some(0.0)` when `z0 = 0` and the
    /// trajectory heads into negative values immediately.
    pub fn first_zero(&self, z0: f64, w0: f64, g: f64) -> Result<Option<f64>, NoConvergence> {
        let z0 = z0.max(0.0);
        if z0 == 0.0 {
            if w0 < 0.0 || (w0 == 0.0 && g < 0.0) {
                return Ok(Some(0.0));
            }
            if w0 == 0.0 && g == 0.0 {
                return Ok(None);
            }
        }
        let fail = NoConvergence { z0, w0, g };
        match self.strategy {
            Strategy::Ballistic => Ok(ballistic_first_zero(z0, w0, g)),
            Strategy::Damped { gamma } => damped_first_zero(z0, w0, g, gamma).ok_or(fail),
            Strategy::QuadraticU => {
                let tri = self.trinomial(z0, w0, g, Powers::Int(2, 1));
                quadratic_u_first_root(&tri).map(|r| r.map(f64::ln)).ok_or(fail)
            }
            Strategy::Polynomial { m, k, rate } => {
                let tri = self.trinomial(z0, w0, g, Powers::Int(m, k));
                trinomial_first_root(&tri).map(|r| r.map(|u| u.ln() / rate)).ok_or(fail)
            }
            Strategy::RealExponents { m, k } => {
                let tri = self.trinomial(z0, w0, g, Powers::Real(m, k));
                trinomial_first_root(&tri).map(|r| r.map(f64::ln)).ok_or(fail)
            }
        }
    }

    fn trinomial(&self, z0: f64, w0: f64, g: f64, powers: Powers) -> Trinomial {
        let k_const = -g / self.beta;
        let d = z0 - k_const;
        let inv = 1.0 / (self.plus - self.minus);
        Trinomial {
            a: (w0 - self.minus * d) * inv,
            b: k_const,
            c: (self.plus * d - w0) * inv,
            powers,
            z0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Powers {
    Int(i32, i32),
    Real(f64, f64),
}

impl Powers {
    fn exponents(self) -> (f64, f64) {
        match self {
            Powers::Int(m, k) => (m as f64, k as f64),
            Powers::Real(m, k) => (m, k),
        }
    }
}

/// `a u^m + b u^k + c` with `m > k > 0`; `z0` is the exact value at `u = 1`.
#[derive(Debug, Clone, Copy)]
struct Trinomial {
    a: f64,
    b: f64,
    c: f64,
    powers: Powers,
    z0: f64,
}

impl Trinomial {
    #[inline]
    fn eval(&self, u: f64) -> (f64, f64) {
        match self.powers {
            Powers::Int(m, k) => {
                let uk1 = ipow(u, k - 1);
                let umk = ipow(u, m - k);
                let uk = uk1 * u;
                let f = (self.a * umk + self.b) * uk + self.c;
                let df = (m as f64 * self.a * umk + k as f64 * self.b) * uk1;
                (f, df)
            }
            Powers::Real(m, k) => {
                let uk = u.powf(k);
                let umk = u.powf(m - k);
                let f = (self.a * umk + self.b) * uk + self.c;
                let df = (m * self.a * umk + k * self.b) * uk / u;
                (f, df)
            }
        }
    }

    /// Interior critical point on `u > 0`, if any.
    fn critical_point(&self) -> Option<f64> {
        let (m, k) = self.powers.exponents();
        if self.a == 0.0 || self.b == 0.0 || self.a.signum() == self.b.signum() {
            return None;
        }
        let ratio = -k * self.b / (m * self.a);
        Some(root(ratio, m - k))
    }

    fn asymptotic_sign(&self) -> f64 {
        if self.a != 0.0 {
            self.a.signum()
        } else if self.b != 0.0 {
            self.b.signum()
        } else {
            self.c.signum()
        }
    }

    /// A `u >= from` where the trinomial is certainly negative, assuming a
    /// negative asymptotic sign. Uses `|a| u^m > (|b| + |c|) u^k` for `u >= 1`.
    fn negative_bound(&self, from: f64) -> f64 {
        let (m, k) = self.powers.exponents();
        let bound = if self.a != 0.0 {
            root((self.b.abs() + self.c.abs()) / self.a.abs(), m - k)
        } else {
            root(self.c.abs() / self.b.abs(), k)
        };
        bound.max(from) * (1.0 + 1e-12)
    }
}

/// `u^n` for the small non-negative exponents of the preset trinomials.
#[inline]
fn ipow(u: f64, n: i32) -> f64 {
    match n {
        0 => 1.0,
        1 => u,
        2 => u * u,
        3 => u * u * u,
        4 => {
            let u2 = u * u;
            u2 * u2
        }
        _ => u.powi(n),
    }
}

/// `x^(1/n)` with exact special cases for the common orders.
#[inline]
fn root(x: f64, n: f64) -> f64 {
    if n == 1.0 {
        x
    } else if n == 2.0 {
        x.sqrt()
    } else if n == 3.0 {
        x.cbrt()
    } else {
        x.powf(1.0 / n)
    }
}

enum Bracket {
    None,
    At(f64),
    Between { lo: f64, f_lo: f64, hi: f64 },
}

/// Locate the first root of the trinomial on `u >= 1`, splitting at the
/// critical point so that each candidate interval is monotone.
fn trinomial_bracket(tri: &Trinomial) -> Bracket {
    let (m, _) = tri.powers.exponents();
    let u_max = (MAX_GROWTH / m).exp();
    let mut lo = 1.0;
    let mut f_lo = tri.z0;
    if let Some(uc) = tri.critical_point().filter(|&uc| uc > 1.0) {
        let uc_in = uc.min(u_max);
        let (fc, _) = tri.eval(uc_in);
        if fc <= 0.0 {
            if tri.z0 > 0.0 {
                return Bracket::Between { lo: 1.0, f_lo: tri.z0, hi: uc_in };
            }
            // Started at zero and rising: fc <= 0 is rounding at a tangency.
            return Bracket::At(uc_in);
        }
        if uc >= u_max {
            return Bracket::None;
        }
        lo = uc;
        f_lo = fc;
    }
    if tri.asymptotic_sign() >= 0.0 {
        return Bracket::None;
    }
    let mut hi = tri.negative_bound(lo);
    if !(hi < u_max) {
        hi = u_max;
    }
    while tri.eval(hi).0 > 0.0 {
        if hi >= u_max {
            return Bracket::None;
        }
        hi = (hi * 2.0).min(u_max);
    }
    Bracket::Between { lo, f_lo, hi }
}

fn trinomial_first_root(tri: &Trinomial) -> Option<Option<f64>> {
    match trinomial_bracket(tri) {
        Bracket::None => Some(None),
        Bracket::At(u) => Some(Some(u)),
        Bracket::Between { lo, f_lo, hi } => newton_bisect(|u| tri.eval(u), lo, f_lo, hi).map(Some),
    }
}

/// Quadratic `a u^2 + b u + c`: the bracket picks the monotone piece and the
/// closed form supplies the root inside it.
fn quadratic_u_first_root(tri: &Trinomial) -> Option<Option<f64>> {
    let (lo, f_lo, hi) = match trinomial_bracket(tri) {
        Bracket::None => return Some(None),
        Bracket::At(u) => return Some(Some(u)),
        Bracket::Between { lo, f_lo, hi } => (lo, f_lo, hi),
    };
    let (a, b, c) = (tri.a, tri.b, tri.c);
    let candidates = if a == 0.0 {
        [-c / b, f64::NAN]
    } else {
        let disc = (b * b - 4.0 * a * c).max(0.0);
        let q = -0.5 * (b + disc.sqrt().copysign(b));
        [q / a, c / q]
    };
    let inside = candidates.into_iter().filter(|r| *r >= lo && *r <= hi).fold(None, |best: Option<f64>, r| {
        Some(best.map_or(r, |b| b.min(r)))
    });
    match inside {
        Some(u) => {
            let (f, df) = tri.eval(u);
            let polished = if df != 0.0 { u - f / df } else { u };
            Some(Some(if polished >= lo && polished <= hi { polished } else { u }))
        }
        None => newton_bisect(|u| tri.eval(u), lo, f_lo, hi).map(Some),
    }
}

/// `z0 + w0 t + g t^2 / 2`.
fn ballistic_first_zero(z0: f64, w0: f64, g: f64) -> Option<f64> {
    let a = 0.5 * g;
    if a == 0.0 {
        return (w0 < 0.0).then(|| -z0 / w0);
    }
    let disc = w0 * w0 - 4.0 * a * z0;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (w0 + if w0 >= 0.0 { sq } else { -sq });
    let mut best: Option<f64> = None;
    for r in [q / a, if q != 0.0 { z0 / q } else { f64::NAN }] {
        if r.is_finite() && r > 0.0 {
            best = Some(best.map_or(r, |b: f64| b.min(r)));
        }
    }
    best
}

/// `z0 + (g/gamma) t + (w0 - g/gamma)(1 - e^{-gamma t})/gamma`.
fn damped_first_zero(z0: f64, w0: f64, g: f64, gamma: f64) -> Option<Option<f64>> {
    let vt = g / gamma;
    let eval = |t: f64| {
        let decay = -(-gamma * t).exp_m1();
        let f = z0 + vt * t + (w0 - vt) * decay / gamma;
        let df = vt + (w0 - vt) * (1.0 - decay);
        (f, df)
    };
    let mut lo = 0.0;
    let mut f_lo = z0;
    // z' = vt + (w0 - vt) e^{-gamma t} vanishes at most once.
    let ratio = -vt / (w0 - vt);
    if ratio > 0.0 && ratio < 1.0 {
        let tc = -ratio.ln() / gamma;
        let (fc, _) = eval(tc);
        if fc <= 0.0 {
            if z0 > 0.0 {
                return newton_bisect(eval, 0.0, z0, tc).map(Some);
            }
            return Some(Some(tc));
        }
        lo = tc;
        f_lo = fc;
    }
    let limit_slope = vt;
    let limit_value = z0 + w0 / gamma;
    let mut hi = if limit_slope < 0.0 {
        lo + (f_lo + (w0 - vt).abs() / gamma) / -limit_slope + 1.0
    } else if limit_slope == 0.0 && limit_value < 0.0 {
        lo + 1.0 / gamma
    } else {
        return Some(None);
    };
    let mut f_hi = eval(hi).0;
    let mut tries = 0;
    while f_hi > 0.0 {
        tries += 1;
        if tries > 2000 {
            return Some(None);
        }
        hi = lo + 2.0 * (hi - lo);
        f_hi = eval(hi).0;
    }
    newton_bisect(eval, lo, f_lo, hi).map(Some)
}

/// Root of a function that is positive at `lo` and non-positive at `hi`,
/// monotone in between. Newton steps are kept inside the bracket; a
/// bisection step replaces any that leave it.
fn newton_bisect<F>(f: F, mut lo: f64, f_lo: f64, mut hi: f64) -> Option<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    const TOL: f64 = 1e-14;
    let mut x = lo;
    let (mut fx, mut dfx) = (f_lo, f(lo).1);
    for _ in 0..MAX_ITER {
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let (fn_, dfn) = f(next);
        if fn_ == 0.0 {
            return Some(next);
        }
        if fn_ > 0.0 {
            lo = next;
        } else {
            hi = next;
        }
        let scale = next.abs().max(1e-300);
        if (next - x).abs() <= TOL * scale || hi - lo <= TOL * hi.abs().max(1e-300) {
            return Some(if fn_ > 0.0 { next.max(lo) } else { next });
        }
        x = next;
        fx = fn_;
        dfx = dfn;
    }
    None
}
