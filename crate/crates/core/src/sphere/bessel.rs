//! Log-domain modified Bessel function of the first kind, `log I_ν(x)`.
//!
//! Three regimes:
//! - `x < max(ν, 20)`: ascending power series, summed with periodic
//!   rescaling so that terms never overflow even for `ν` in the thousands.
//! - otherwise, if the large-argument Hankel expansion reaches machine
//!   precision before its terms start growing, that sum is used.
//! - otherwise the Debye uniform asymptotic expansion in `ν` (terms up to
//!   `u_5`), which is accurate once both `ν` and `x` are large.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const SERIES_SWITCH: f64 = 20.0;
const RESCALE_AT: f64 = 1e250;
const MAX_SERIES_TERMS: usize = 200_000;

/// `log I_ν(x)` for `ν >= 0`, `x >= 0`.
pub fn log_bessel_i(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !(x >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "log_bessel_i requires nu >= 0 and x >= 0 (nu={nu}, x={x})"
        )));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let value = if x < nu.max(SERIES_SWITCH) {
        series(nu, x)?
    } else if let Some(v) = hankel(nu, x) {
        v
    } else {
        debye(nu, x)
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericOverflow { what: "log_bessel_i" })
    }
}

/// `I_{ν+1}(x) / I_ν(x)`, evaluated through the log-domain routine.
pub fn bessel_ratio(nu: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok((log_bessel_i(nu + 1.0, x)? - log_bessel_i(nu, x)?).exp())
}

fn series(nu: f64, x: f64) -> Result<f64> {
    let q = 0.25 * x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut log_scale = 0.0f64;
    for k in 0..MAX_SERIES_TERMS {
        let kf = k as f64;
        let ratio = q / ((kf + 1.0) * (kf + 1.0 + nu));
        term *= ratio;
        sum += term;
        if sum > RESCALE_AT {
            sum /= RESCALE_AT;
            term /= RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
        if ratio < 1.0 && term <= sum * 1e-17 {
            return Ok(nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + sum.ln() + log_scale);
        }
    }
    Err(Error::NumericOverflow {
        what: "log_bessel_i series did not converge",
    })
}

fn hankel(nu: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..500 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * x);
        if next == 0.0 {
            // Half-integer order: the expansion terminates exactly.
            term = 0.0;
            break;
        }
        if next.abs() > term.abs() {
            return None;
        }
        sum += next;
        term = next;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    if term.abs() > 1e-16 * sum.abs() || sum <= 0.0 {
        return None;
    }
    Some(x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln())
}

fn debye(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let s = (1.0 + z * z).sqrt();
    let t = 1.0 / s;
    let eta = s + (z / (1.0 + s)).ln();
    let t2 = t * t;
    let u1 = t * (3.0 - 5.0 * t2) / 24.0;
    let u2 = t2 * (81.0 + t2 * (-462.0 + t2 * 385.0)) / 1152.0;
    let u3 = t * t2
        * (30375.0 + t2 * (-369603.0 + t2 * (765765.0 - t2 * 425425.0)))
        / 414720.0;
    let u4 = t2 * t2
        * (4465125.0
            + t2 * (-94121676.0 + t2 * (349922430.0 + t2 * (-446185740.0 + t2 * 185910725.0))))
        / 39813120.0;
    let u5 = t2 * t2 * t
        * (1519035525.0
            + t2 * (-49286948607.0
                + t2 * (284499769554.0
                    + t2 * (-614135872350.0 + t2 * (566098157625.0 - t2 * 188699385875.0)))))
        / 6688604160.0;
    let inv = 1.0 / nu;
    let corr = 1.0 + inv * (u1 + inv * (u2 + inv * (u3 + inv * (u4 + inv * u5))));
    nu * eta - 0.5 * (2.0 * std::f64::consts::PI * nu).ln() - 0.5 * s.ln() + corr.ln()
}
