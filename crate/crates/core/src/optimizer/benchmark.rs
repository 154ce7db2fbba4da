use super::OptimizerError;

/// Domain half-width of the Schwefel function.
pub const SCHWEFEL_BOUND: f64 = 500.0;
/// Per-coordinate location of the Schwefel optimum.
pub const SCHWEFEL_ARGMAX: f64 = 420.9687;

const SCHWEFEL_OFFSET: f64 = 418.9829;

/// Inverted Schwefel function, `−(418.9829·d − Σ xᵢ·sin(√|xᵢ|))`.
///
/// Maximum ≈ 0 at `xᵢ ≈ 420.9687`; every component must lie in `[−500, 500]`.
pub fn schwefel(x: &[f64]) -> Result<f64, OptimizerError> {
    if let Some((index, &value)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_nan() || v.abs() > SCHWEFEL_BOUND)
    {
        return Err(OptimizerError::OutOfDomain { index, value });
    }
    let sum: f64 = x.iter().map(|v| v * v.abs().sqrt().sin()).sum();
    Ok(-(SCHWEFEL_OFFSET * x.len() as f64 - sum))
}

/// Inverted sphere, `−‖x‖²`.
pub fn sphere(x: &[f64]) -> f64 {
    -x.iter().map(|v| v * v).sum::<f64>()
}
