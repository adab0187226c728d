use crate::error::{Error, Result};
use crate::numeric::ceil_pow2;

/// Rounds every coefficient to the shared fixed-point grid
/// `2^(1 - bits) * S`, where `S` is the smallest power of two covering the
/// largest magnitude. Ties round away from zero.
pub fn quantize_coeffs(params: &[f64], bits: u32) -> Result<Vec<f64>> {
    if params.is_empty() {
        return Err(Error::Empty("coefficient list"));
    }
    if !(2..=52).contains(&bits) {
        return Err(Error::InvalidParameter(format!("{bits} coefficient bits")));
    }
    if !params.iter().all(|p| p.is_finite()) {
        return Err(Error::InvalidParameter("non-finite coefficient".into()));
    }
    let max = params.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    if max == 0.0 {
        return Ok(params.to_vec());
    }
    let step = coefficient_step(max, bits);
    Ok(params.iter().map(|&p| (p / step).round() * step).collect())
}

/// Grid step used by [`quantize_coeffs`] for a coefficient set whose
/// largest magnitude is `max_abs`.
pub fn coefficient_step(max_abs: f64, bits: u32) -> f64 {
    ceil_pow2(max_abs) * 2f64.powi(1 - bits as i32)
}
