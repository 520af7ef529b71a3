//! Principal branch of the Lambert W function.
//!
//! `W0(x)` is the non-negative solution `w` of `w * exp(w) = x` for `x >= 0`.
//! Evaluation uses Halley's method, which converges cubically from the
//! starting points below. Arguments beyond `exp(700)` are solved in the log
//! domain (`w + ln w = ln x`) so that `exp(w)` is never formed near overflow.

use crate::error::{Error, Result};

/// Hard iteration cap. Reaching it means the starting point was outside the
/// basin of attraction, which is a bug rather than a property of the input.
const MAX_ITERATIONS: u32 = 10;

/// Above this `ln x` the residual is evaluated as `w + ln w - ln x`.
const LOG_DOMAIN_THRESHOLD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambertEval {
    pub value: f64,
    pub iterations: u32,
    /// `|w e^w - x| / x`, or 0 for `x = 0`.
    pub residual: f64,
}

/// Evaluates `W0(x)` for finite `x >= 0`.
pub fn lambert_w0(x: f64) -> Result<LambertEval> {
    if x.is_nan() || x.is_infinite() {
        return Err(Error::Domain(format!("lambert_w0 requires a finite argument, got {x}")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("lambert_w0 requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(LambertEval { value: 0.0, iterations: 0, residual: 0.0 });
    }

    let ln_x = x.ln();
    if ln_x > LOG_DOMAIN_THRESHOLD {
        return halley_log_domain(x, ln_x);
    }

    let mut w = initial_guess(x);
    for iteration in 1..=MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= f64::EPSILON * (1.0 + w.abs()) {
            return Ok(LambertEval {
                value: w,
                iterations: iteration,
                residual: ((w * w.exp() - x) / x).abs(),
            });
        }
    }
    Err(Error::numeric(format!(
        "lambert_w0({x}) did not converge in {MAX_ITERATIONS} Halley steps"
    )))
}

/// Evaluates `W0(exp(ln_x))` without forming `exp(ln_x)` when it would overflow.
pub fn lambert_w0_of_exp(ln_x: f64) -> Result<LambertEval> {
    if ln_x.is_nan() || ln_x == f64::INFINITY {
        return Err(Error::Domain(format!("lambert_w0_of_exp requires a finite log-argument, got {ln_x}")));
    }
    if ln_x > LOG_DOMAIN_THRESHOLD {
        return halley_log_domain(ln_x.exp(), ln_x);
    }
    lambert_w0(ln_x.exp())
}

/// Convenience wrapper returning only the value.
pub fn w0(x: f64) -> Result<f64> {
    lambert_w0(x).map(|e| e.value)
}

fn initial_guess(x: f64) -> f64 {
    if x < std::f64::consts::E {
        x.ln_1p()
    } else {
        let l = x.ln();
        l - l.ln()
    }
}

fn halley_log_domain(x: f64, ln_x: f64) -> Result<LambertEval> {
    let mut w = ln_x - ln_x.ln();
    for iteration in 1..=MAX_ITERATIONS {
        // f(w) = w + ln w - ln x, f' = 1 + 1/w, f'' = -1/w^2
        let f = w + w.ln() - ln_x;
        let d1 = 1.0 + 1.0 / w;
        let d2 = -1.0 / (w * w);
        let step = 2.0 * f * d1 / (2.0 * d1 * d1 - f * d2);
        w -= step;
        if step.abs() <= f64::EPSILON * (1.0 + w.abs()) {
            let residual = (w + w.ln() - ln_x).exp_m1().abs();
            return Ok(LambertEval { value: w, iterations: iteration, residual });
        }
    }
    Err(Error::numeric(format!(
        "lambert_w0({x}) did not converge in {MAX_ITERATIONS} log-domain Halley steps"
    )))
}
