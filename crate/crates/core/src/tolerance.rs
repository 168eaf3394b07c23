//! Numerical thresholds shared across the crate.
//!
//! The conditioning threshold is fixed. Verification tolerances (route
//! agreement, normalization checks) can be relaxed uniformly through the
//! `QPROB_TOLERANCE_SCALE` environment variable.

/// Conditioning on an event whose probability is at or below this value is
/// rejected with [`crate::Error::ZeroConditionEvent`].
pub const ZERO_CONDITION: f64 = 1e-14;

/// Normalization of discrete (amplitude-vector) states.
pub const DISCRETE_NORM: f64 = 1e-12;

/// Normalization of grid states under midpoint quadrature.
pub const GRID_NORM: f64 = 1e-10;

/// Agreement between the definition route and the trace route, discrete bases.
pub const DISCRETE_ROUTE: f64 = 1e-12;

/// Agreement between the definition route and the trace route, grid bases.
pub const GRID_ROUTE: f64 = 1e-10;

/// Hermiticity check on Hamiltonian matrices (scaled by the largest entry when it exceeds 1).
pub const HERMITICITY: f64 = 1e-12;

/// Unitarity of spectral propagators.
pub const UNITARITY: f64 = 1e-10;

pub const TOLERANCE_SCALE_VAR: &str = "QPROB_TOLERANCE_SCALE";

/// Parses a tolerance scale value; it must be a finite float >= 1.
pub fn parse_scale(raw: &str) -> Result<f64, String> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| format!("{TOLERANCE_SCALE_VAR}={raw:?} is not a number"))?;
    if !value.is_finite() || value < 1.0 {
        return Err(format!("{TOLERANCE_SCALE_VAR} must be a finite value >= 1, got {value}"));
    }
    Ok(value)
}

/// Reads `QPROB_TOLERANCE_SCALE`, defaulting to 1 when unset.
pub fn scale_from_env() -> Result<f64, String> {
    match std::env::var(TOLERANCE_SCALE_VAR) {
        Ok(raw) => parse_scale(&raw),
        Err(std::env::VarError::NotPresent) => Ok(1.0),
        Err(e) => Err(format!("{TOLERANCE_SCALE_VAR}: {e}")),
    }
}

/// Checks that `probability` is a usable conditioning mass.
pub(crate) fn check_condition(probability: f64) -> crate::Result<f64> {
    if probability > ZERO_CONDITION {
        Ok(probability)
    } else {
        Err(crate::Error::ZeroConditionEvent { probability, threshold: ZERO_CONDITION })
    }
}
