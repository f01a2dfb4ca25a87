use super::DiagnosticsError;
use crate::fractal::{ball_profiles, SampledMeasure};
use crate::linalg::fit_line;
use crate::scalar::Real;

/// Mean over `centers` points drawn from `mu` of the log-log slope of `rho -> mu(B(x, rho))`.
pub fn local_dimension<T: Real>(
    mu: &SampledMeasure<T>,
    radii: &[f64],
    centers: usize,
    seed: u64,
) -> Result<f64, DiagnosticsError> {
    let prof = ball_profiles(mu, radii, centers, seed)?;
    let logr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let mut total = 0.0;
    for masses in &prof.masses {
        let logm: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
        total += fit_line(&logr, &logm)
            .ok_or_else(|| DiagnosticsError::InvalidArgument("degenerate radius grid".into()))?
            .slope;
    }
    Ok(total / prof.masses.len() as f64)
}
