//! Closed-form solutions of `z'' + gamma z' - beta z = g` for constant `g`.
//!
//! Every entity the engine tracks (a particle between crossings, the gap
//! between two neighbours, the distance of an extreme particle to a cell wall)
//! obeys this equation with its own constant forcing, so one propagator and
//! one root finder serve all of them.

use crate::model::ModelParams;

/// Shape of the homogeneous solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Form {
    /// `beta > 0`: exponentials with rates `plus > 0 > minus`.
    Exponential { plus: f64, minus: f64 },
    /// `beta = 0, gamma = 0`: free fall.
    Ballistic,
    /// `beta = 0, gamma > 0`: drag towards a terminal velocity.
    Damped { gamma: f64 },
}

/// Propagator for one model.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    pub(crate) form: Form,
    pub(crate) gamma: f64,
    pub(crate) beta: f64,
}

/// Response functions over a step: `z = z0 + w0 s + a0 p` and
/// `z' = w0 ds + a0 s`, where `a0 = g + beta z0` is the non-dissipative
/// acceleration at the start of the step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Response {
    s: f64,
    ds: f64,
    p: f64,
}

impl Response {
    #[inline]
    fn apply(&self, z0: f64, w0: f64, a0: f64) -> (f64, f64) {
        (z0 + w0 * self.s + a0 * self.p, w0 * self.ds + a0 * self.s)
    }
}

impl Kernel {
    pub fn new(params: &ModelParams) -> Self {
        let form = if params.beta > 0.0 {
            let (plus, minus) = params.eigenvalues();
            Form::Exponential { plus, minus }
        } else if params.gamma > 0.0 {
            Form::Damped { gamma: params.gamma }
        } else {
            Form::Ballistic
        };
        Kernel { form, gamma: params.gamma, beta: params.beta }
    }

    #[inline]
    pub(crate) fn response(&self, dt: f64) -> Response {
        match self.form {
            Form::Exponential { plus, minus } => {
                let ep = (plus * dt).exp_m1();
                let em = (minus * dt).exp_m1();
                let inv = 1.0 / (plus - minus);
                let s = (ep - em) * inv;
                let ds = 1.0 + (plus * ep - minus * em) * inv;
                // (c(t) - 1) / beta with c the unit-displacement response.
                let p = (plus * em - minus * ep) * inv / self.beta;
                Response { s, ds, p }
            }
            Form::Ballistic => Response { s: dt, ds: 1.0, p: 0.5 * dt * dt },
            Form::Damped { gamma } => {
                let decay = -(-gamma * dt).exp_m1();
                let s = decay / gamma;
                Response { s, ds: 1.0 - decay, p: (dt - s) / gamma }
            }
        }
    }

    /// Advance `(z, z')` by `dt >= 0` under constant forcing `g`.
    #[inline]
    pub fn advance(&self, z0: f64, w0: f64, g: f64, dt: f64) -> (f64, f64) {
        debug_assert!(dt >= 0.0, "negative step {dt}");
        let a0 = g + self.beta * z0;
        self.response(dt).apply(z0, w0, a0)
    }

    /// Acceleration `z''` at the given state.
    #[inline]
    pub fn acceleration(&self, z: f64, w: f64, g: f64) -> f64 {
        g + self.beta * z - self.gamma * w
    }
}
