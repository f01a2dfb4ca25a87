use rayon::prelude::*;

use super::sampled::{MeasureMeta, SampledMeasure};
use super::FractalError;
use crate::rng::{counter_rng, index_below, streams, unit, unit_sphere};
use crate::scalar::Real;

const DRAWS_PER_POINT: u64 = 64;

/// Uniform measure on the union of balls of radius `q^(-d/s)` centered at the
/// lattice points `(1/q) Z^d ∩ [0, 1]^d` (one stage of Falconer's construction).
///
/// Every difference of two support points lies within `2 q^(-d/s)` of `(1/q) Z^d`,
/// so the difference set has gaps at scale `1/q`.
pub fn falconer_lattice_set<T: Real>(
    d: usize,
    s: f64,
    q: usize,
    n: usize,
    seed: u64,
) -> Result<SampledMeasure<T>, FractalError> {
    if d == 0 || n == 0 {
        return Err(FractalError::InvalidArgument(
            "need d >= 1 and n >= 1".into(),
        ));
    }
    if !(s > 0.0 && s < d as f64) {
        return Err(FractalError::InvalidArgument(format!(
            "lattice construction needs 0 < s < d, got s={s}, d={d}"
        )));
    }
    if q < 2 {
        return Err(FractalError::InvalidArgument("q must be >= 2".into()));
    }
    let rho = (q as f64).powf(-(d as f64) / s);
    if rho >= 0.5 / q as f64 {
        return Err(FractalError::InvalidArgument(format!(
            "balls of radius {rho:.3e} around spacing 1/{q} overlap"
        )));
    }
    let side = q + 1;
    let cells = side.pow(d as u32);
    let qf = q as f64;
    let coords: Vec<T> = (0..n as u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = counter_rng(seed, streams::LATTICE, i * DRAWS_PER_POINT);
            let mut cell = index_below(&mut rng, cells);
            let dir: Vec<f64> = unit_sphere(&mut rng, d);
            let radius = rho * unit(&mut rng).powf(1.0 / d as f64);
            let mut p = vec![T::zero(); d];
            for j in (0..d).rev() {
                let c = (cell % side) as f64 / qf;
                cell /= side;
                p[j] = T::lit(c + radius * dir[j]);
            }
            p
        })
        .collect();
    let meta = MeasureMeta::new(format!("falconer_lattice(d={d},s={s},q={q})"), seed);
    SampledMeasure::uniform_weights(d, coords, meta)?
        .with_bounds(vec![T::lit(-rho); d], vec![T::lit(1.0 + rho); d])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_near_lattice() {
        let mu: SampledMeasure<f64> = falconer_lattice_set(1, 0.5, 10, 2000, 1).unwrap();
        for &x in mu.coords() {
            let off = (x * 10.0 - (x * 10.0).round()).abs() / 10.0;
            assert!(off <= 0.01 + 1e-15, "{x}");
        }
    }

    #[test]
    fn preconditions() {
        assert!(falconer_lattice_set::<f64>(1, 2.0, 10, 10, 0).is_err());
        assert!(falconer_lattice_set::<f64>(1, 1.0, 10, 10, 0).is_err());
        // radius q^(-d/s) reaches 1/(2q) just below s = d / (1 + log_q 2)
        assert!(falconer_lattice_set::<f64>(1, 0.8, 10, 10, 0).is_err());
        assert!(falconer_lattice_set::<f64>(2, 1.0, 4, 10, 0).is_ok());
    }
}
