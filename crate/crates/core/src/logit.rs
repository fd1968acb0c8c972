//! Maximum-likelihood logistic response curves, `P(canteen) = 1 / (1 + exp(-(α + β t)))`
//! with `t` in minutes after 8:00.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Action;
use crate::time::{format_clock_f64, ArrivalTime};

pub const GRADIENT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogitFit {
    pub alpha: f64,
    pub beta: f64,
    /// Standard error of `beta` from the observed information.
    pub beta_se: f64,
    /// `-alpha / beta` in minutes after 8:00; `None` when the slope is not
    /// distinguishable from zero at the 5% level.
    pub midpoint: Option<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogitFit {
    /// Midpoint as `H:MM`, rounded to the minute.
    pub fn midpoint_clock(&self) -> Option<String> {
        self.midpoint.map(format_clock_f64)
    }

    pub fn probability(&self, t: f64) -> f64 {
        1.0 / (1.0 + (-(self.alpha + self.beta * t)).exp())
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct Centered {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Centered {
    fn log_likelihood(&self, a: f64, b: f64) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(x, y)| {
                let eta = a + b * x;
                y * eta - softplus(eta)
            })
            .sum()
    }

    /// Mean gradient and mean information matrix `[[h00, h01], [h01, h11]]`.
    fn derivatives(&self, a: f64, b: f64) -> ([f64; 2], [f64; 3]) {
        let n = self.x.len() as f64;
        let (mut g, mut h) = ([0.0; 2], [0.0; 3]);
        for (x, y) in self.x.iter().zip(&self.y) {
            let p = sigmoid(a + b * x);
            let w = p * (1.0 - p);
            g[0] += y - p;
            g[1] += (y - p) * x;
            h[0] += w;
            h[1] += w * x;
            h[2] += w * x * x;
        }
        (g.map(|v| v / n), h.map(|v| v / n))
    }
}

/// Fits the canteen probability against arrival time by damped Newton
/// iterations.
///
/// Fails with [`Error::Degenerate`] for single-class data or fewer than two
/// distinct times, and with [`Error::Separation`] when some threshold splits
/// the two actions (no finite maximum exists).
pub fn fit_logit(observations: &[(ArrivalTime, Action)]) -> Result<LogitFit> {
    let times = |action: Action| {
        observations
            .iter()
            .filter(move |(_, a)| *a == action)
            .map(|(t, _)| t.minutes())
    };
    let (Some(c_min), Some(c_max)) = (times(Action::Canteen).min(), times(Action::Canteen).max())
    else {
        return Err(Error::Degenerate("no canteen observations"));
    };
    let (Some(o_min), Some(o_max)) = (times(Action::Office).min(), times(Action::Office).max())
    else {
        return Err(Error::Degenerate("no office observations"));
    };
    if c_min.min(o_min) == c_max.max(o_max) {
        return Err(Error::Degenerate("fewer than two distinct arrival times"));
    }
    if c_max <= o_min || o_max <= c_min {
        return Err(Error::Separation);
    }

    let n = observations.len() as f64;
    let mean_t = observations
        .iter()
        .map(|(t, _)| f64::from(t.minutes()))
        .sum::<f64>()
        / n;
    let data = Centered {
        x: observations
            .iter()
            .map(|(t, _)| f64::from(t.minutes()) - mean_t)
            .collect(),
        y: observations
            .iter()
            .map(|(_, a)| f64::from(u8::from(*a == Action::Canteen)))
            .collect(),
    };

    let (mut a, mut b) = (0.0, 0.0);
    let mut ll = data.log_likelihood(a, b);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        let (g, h) = data.derivatives(a, b);
        if g[0].hypot(g[1]) < GRADIENT_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let det = h[0] * h[2] - h[1] * h[1];
        if det <= 0.0 || !det.is_finite() {
            break;
        }
        let da = (h[2] * g[0] - h[1] * g[1]) / det;
        let db = (h[0] * g[1] - h[1] * g[0]) / det;
        let mut step = 1.0;
        loop {
            let (na, nb) = (a + step * da, b + step * db);
            let nll = data.log_likelihood(na, nb);
            if nll >= ll || step < 1e-10 {
                a = na;
                b = nb;
                ll = nll;
                break;
            }
            step *= 0.5;
        }
    }
    if !converged {
        let (g, _) = data.derivatives(a, b);
        converged = g[0].hypot(g[1]) < GRADIENT_TOL;
    }

    let (_, h) = data.derivatives(a, b);
    let det = h[0] * h[2] - h[1] * h[1];
    let beta_se = (h[0] / (det * n)).sqrt();
    let alpha = a - b * mean_t;
    // a NaN standard error also counts as flat
    let flat = b.abs().partial_cmp(&(1.96 * beta_se)) != Some(std::cmp::Ordering::Greater);
    Ok(LogitFit {
        alpha,
        beta: b,
        beta_se,
        midpoint: (!flat).then(|| -alpha / b),
        log_likelihood: ll,
        iterations,
        converged,
    })
}
