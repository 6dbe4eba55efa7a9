//! Log-Gamma and log-Beta.
//!
//! `ln_gamma` uses the Lanczos approximation with Pugh's g = 10.900511,
//! eleven-coefficient parameter set, which keeps the relative error near
//! machine precision over the positive axis. `log_beta` is the usual
//! three-term combination ln B(a,b) = ln Γ(a) + ln Γ(b) − ln Γ(a+b).

use crate::error::{Result, RiError};

const LANCZOS_G: f64 = 10.900511;

const LANCZOS_COEFFS: [f64; 11] = [
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];

// ln(2 * sqrt(e / pi))
const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;

/// Natural log of the Gamma function for `x > 0`.
///
/// Relative accuracy is about 1e-13 across the range used here
/// (arguments up to a few thousand); arguments below 1/2 go through the
/// reflection formula.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(RiError::Domain(format!(
            "ln_gamma requires a positive finite argument, got {x}"
        )));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    use std::f64::consts::{E, PI};
    if x < 0.5 {
        // reflection: ln Γ(x) = ln π − ln sin(πx) − ln Γ(1−x)
        let s = LANCZOS_COEFFS
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_COEFFS[0], |acc, (k, c)| acc + c / (k as f64 - x));
        PI.ln()
            - (PI * x).sin().ln()
            - s.ln()
            - LN_2_SQRT_E_OVER_PI
            - (0.5 - x) * ((0.5 - x + LANCZOS_G) / E).ln()
    } else {
        let s = LANCZOS_COEFFS
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_COEFFS[0], |acc, (k, c)| acc + c / (x + k as f64 - 1.0));
        (x - 0.5) * ((x - 0.5 + LANCZOS_G) / E).ln() + s.ln() + LN_2_SQRT_E_OVER_PI
    }
}

/// ln B(a, b) for `a, b > 0`.
///
/// Arguments are sorted before evaluation so that `log_beta(a, b)` and
/// `log_beta(b, a)` are bitwise identical.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(RiError::Domain(format!(
            "log_beta requires positive finite arguments, got ({a}, {b})"
        )));
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    Ok(ln_gamma_unchecked(lo) + ln_gamma_unchecked(hi) - ln_gamma_unchecked(lo + hi))
}

/// B(a, b) = exp(ln B(a, b)).
pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok(log_beta(a, b)?.exp())
}
