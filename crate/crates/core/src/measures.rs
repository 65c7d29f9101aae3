//! The two scalar measures attached to a solved oscillator: Λ, the deviation
//! of the limit cycle from rotational symmetry about the origin, and Υ, the
//! worst deviation of any Floquet mode pair from orthogonality, with its
//! per-pair angle table Θ.

use nalgebra::{DMatrix, DVector};

use crate::floquet::FloquetDecomposition;
use crate::pss::PeriodicOrbit;
use crate::{Error, Result};

/// Values below this map to the dB floor.
pub const DB_FLOOR_VALUE: f64 = 1e-20;
/// Floor used instead of −∞ in tables and plots.
pub const DB_FLOOR: f64 = -200.0;

/// Both measures plus the angle table and dB views.
#[derive(Debug, Clone)]
pub struct MeasurePair {
    /// Λ ≥ 0, dimensionless.
    pub lambda: f64,
    /// Υ ∈ [0, π/2], radians.
    pub upsilon: f64,
    /// Θ[i][j] for realized mode indices i ≠ j (diagonal fixed at 0).
    pub theta_table: DMatrix<f64>,
    pub lambda_db: f64,
    pub upsilon_db: f64,
}

impl MeasurePair {
    pub fn new(orbit: &PeriodicOrbit, dec: &FloquetDecomposition) -> Result<Self> {
        let lambda = lambda_measure(orbit)?;
        let (upsilon, theta_table) = upsilon_measure(dec)?;
        Ok(MeasurePair {
            lambda,
            upsilon,
            theta_table,
            lambda_db: to_db(lambda)?,
            upsilon_db: to_db(upsilon)?,
        })
    }
}

/// 10·log₁₀(value), floored at −200 dB for values below 1e-20.
pub fn to_db(value: f64) -> Result<f64> {
    if value < 0.0 || value.is_nan() {
        return Err(Error::Domain(format!("dB conversion needs a non-negative value, got {value}")));
    }
    if value < DB_FLOOR_VALUE {
        Ok(DB_FLOOR)
    } else {
        Ok(10.0 * value.log10())
    }
}

/// Maximum of a periodic sample sequence with a quadratic peak correction.
///
/// The correction fits a parabola through the grid argmax and its two
/// wrapped neighbours, removing the O(Δτ²) bias of a bare grid max while
/// using no data beyond the grid itself. Degenerate (non-concave) stencils
/// fall back to the plain grid value, and the correction is capped by the
/// local sample variation so noise-level sequences are never inflated.
fn refined_periodic_max(values: &[f64]) -> f64 {
    let n = values.len();
    let (mut arg, mut best) = (0usize, f64::NEG_INFINITY);
    for (i, v) in values.iter().enumerate() {
        if *v > best {
            best = *v;
            arg = i;
        }
    }
    if n < 3 {
        return best;
    }
    let ym = values[(arg + n - 1) % n];
    let yp = values[(arg + 1) % n];
    let denom = ym - 2.0 * best + yp;
    if !(denom < 0.0) {
        return best;
    }
    let peak = best - (yp - ym) * (yp - ym) / (8.0 * denom);
    let cap = best + (yp - best).abs().max((ym - best).abs());
    peak.min(cap)
}

/// Λ = |(1/2π)∫₀^{2π} (ρ(τ)/ρ_max − 1) dτ| with ρ(τ) = Σᵢ γᵢ²(τ),
/// integrated by the trapezoidal rule on the uniform periodic grid (which
/// reduces to the node mean).
pub fn lambda_measure(orbit: &PeriodicOrbit) -> Result<f64> {
    let rho: Vec<f64> = orbit.samples.iter().map(|s| s.norm_squared()).collect();
    let rho_max = refined_periodic_max(&rho);
    if !(rho_max > 0.0) {
        return Err(Error::Domain("degenerate orbit: rho_max = 0".into()));
    }
    let mean: f64 = rho.iter().map(|r| r / rho_max - 1.0).sum::<f64>() / rho.len() as f64;
    Ok(mean.abs())
}

/// Θ for one mode pair: max over the grid of ||∠{uᵢ(τ), uⱼ(τ)}| − π/2|,
/// angles folded into [0, π/2] via the absolute normalized dot product.
pub fn theta_pair(ui: &[DVector<f64>], uj: &[DVector<f64>]) -> Result<f64> {
    assert_eq!(ui.len(), uj.len(), "mode tracks must share the grid");
    let mut devs = Vec::with_capacity(ui.len());
    for (a, b) in ui.iter().zip(uj.iter()) {
        let (na, nb) = (a.norm(), b.norm());
        if na == 0.0 || nb == 0.0 {
            return Err(Error::Domain("zero-norm mode vector in angle computation".into()));
        }
        let cos = (a.dot(b).abs() / (na * nb)).clamp(0.0, 1.0);
        devs.push((cos.acos() - std::f64::consts::FRAC_PI_2).abs());
    }
    Ok(refined_periodic_max(&devs).min(std::f64::consts::FRAC_PI_2))
}

/// Υ = max over unordered realized-mode pairs i ≠ j of Θᵢⱼ, plus the full
/// symmetric angle table. The diagonal is excluded (Θᵢᵢ would be the
/// constant π/2 and carries no information).
pub fn upsilon_measure(dec: &FloquetDecomposition) -> Result<(f64, DMatrix<f64>)> {
    let n_modes = dec.multipliers.len();
    let n_nodes = dec.realized.len();
    if n_nodes == 0 {
        return Err(Error::Domain("decomposition carries no grid nodes".into()));
    }
    let mut table = DMatrix::zeros(n_modes, n_modes);
    let mut upsilon: f64 = 0.0;
    for i in 0..n_modes {
        for j in (i + 1)..n_modes {
            let ui: Vec<DVector<f64>> = (0..n_nodes).map(|k| dec.realized[k][i].clone()).collect();
            let uj: Vec<DVector<f64>> = (0..n_nodes).map(|k| dec.realized[k][j].clone()).collect();
            let theta = theta_pair(&ui, &uj)?;
            table[(i, j)] = theta;
            table[(j, i)] = theta;
            upsilon = upsilon.max(theta);
        }
    }
    Ok((upsilon, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI, TAU};

    fn circle_orbit(n_samples: usize, radius: f64) -> PeriodicOrbit {
        let samples: Vec<DVector<f64>> = (0..n_samples)
            .map(|k| {
                let tau = TAU * k as f64 / n_samples as f64;
                DVector::from_vec(vec![radius * tau.cos(), radius * tau.sin()])
            })
            .collect();
        let derivs = samples
            .iter()
            .map(|s| DVector::from_vec(vec![-s[1], s[0]]))
            .collect();
        PeriodicOrbit {
            anchor: samples[0].clone(),
            period: TAU,
            samples,
            derivs,
            residual: 0.0,
        }
    }

    fn ellipse_orbit(n_samples: usize, a: f64, b: f64) -> PeriodicOrbit {
        let samples: Vec<DVector<f64>> = (0..n_samples)
            .map(|k| {
                let tau = TAU * k as f64 / n_samples as f64;
                DVector::from_vec(vec![a * tau.cos(), b * tau.sin()])
            })
            .collect();
        let derivs = samples.iter().map(|_| DVector::zeros(2)).collect();
        PeriodicOrbit {
            anchor: samples[0].clone(),
            period: TAU,
            samples,
            derivs,
            residual: 0.0,
        }
    }

    #[test]
    fn circle_has_zero_lambda() {
        let orbit = circle_orbit(512, 1.0);
        assert!(lambda_measure(&orbit).unwrap() <= 1e-12);
    }

    #[test]
    fn ellipse_lambda_matches_the_closed_form() {
        // γ = (2cos τ, sin τ): ρ = 4cos² + sin², ρ_max = 4,
        // Λ = |mean(ρ)/4 − 1| = |(1 + 3/2)/4·... | = 3/8. Cross-checked by an
        // independent fine quadrature of the closed-form integrand.
        let orbit = ellipse_orbit(512, 2.0, 1.0);
        let lambda = lambda_measure(&orbit).unwrap();
        assert_relative_eq!(lambda, 3.0 / 8.0, epsilon = 1e-12);

        let m = 100_000;
        let quad: f64 = (0..m)
            .map(|k| {
                let tau = TAU * (k as f64 + 0.5) / m as f64;
                let rho = 4.0 * tau.cos().powi(2) + tau.sin().powi(2);
                rho / 4.0 - 1.0
            })
            .sum::<f64>()
            / m as f64;
        assert_relative_eq!(lambda, quad.abs(), epsilon = 1e-9);
    }

    #[test]
    fn degenerate_orbit_is_rejected() {
        let mut orbit = circle_orbit(16, 1.0);
        for s in &mut orbit.samples {
            s.fill(0.0);
        }
        assert!(matches!(lambda_measure(&orbit), Err(Error::Domain(_))));
    }

    #[test]
    fn theta_of_orthogonal_constant_vectors_is_zero() {
        let e1 = vec![DVector::from_vec(vec![1.0, 0.0]); 64];
        let e2 = vec![DVector::from_vec(vec![0.0, 1.0]); 64];
        assert!(theta_pair(&e1, &e2).unwrap() <= 1e-15);
    }

    #[test]
    fn theta_of_parallel_vectors_is_right_angle_deviation() {
        let e1 = vec![DVector::from_vec(vec![1.0, 0.0]); 64];
        let e1b = vec![DVector::from_vec(vec![-2.0, 0.0]); 64];
        assert_relative_eq!(theta_pair(&e1, &e1b).unwrap(), FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn theta_of_sixty_degree_vectors() {
        let a = vec![DVector::from_vec(vec![1.0, 0.0]); 64];
        let b = vec![DVector::from_vec(vec![0.5, 3.0f64.sqrt() / 2.0]); 64];
        assert_relative_eq!(theta_pair(&a, &b).unwrap(), FRAC_PI_6, epsilon = 1e-12);
    }

    #[test]
    fn theta_rejects_zero_norm_vectors() {
        let a = vec![DVector::from_vec(vec![1.0, 0.0]); 4];
        let mut b = a.clone();
        b[2] = DVector::zeros(2);
        assert!(matches!(theta_pair(&a, &b), Err(Error::Domain(_))));
    }

    #[test]
    fn db_conversion_values_and_floor() {
        assert_eq!(to_db(1.0).unwrap(), 0.0);
        assert_relative_eq!(to_db(0.001).unwrap(), -30.0, epsilon = 1e-12);
        assert_eq!(to_db(0.0).unwrap(), DB_FLOOR);
        assert!(to_db(-1.0).is_err());
    }

    #[test]
    fn lambda_is_rotation_invariant() {
        // Rigid rotations about the origin preserve ρ exactly.
        let orbit = ellipse_orbit(256, 2.0, 1.0);
        let angle: f64 = 0.7743;
        let (c, s) = (angle.cos(), angle.sin());
        let mut rotated = orbit.clone();
        for p in &mut rotated.samples {
            let (x, y) = (p[0], p[1]);
            p[0] = c * x - s * y;
            p[1] = s * x + c * y;
        }
        let l0 = lambda_measure(&orbit).unwrap();
        let l1 = lambda_measure(&rotated).unwrap();
        assert!((l0 - l1).abs() <= 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lambda_is_scale_invariant(scale in 1e-3f64..1e3, a in 0.5f64..3.0, b in 0.5f64..3.0) {
            let orbit = ellipse_orbit(128, a, b);
            let mut scaled = orbit.clone();
            for p in &mut scaled.samples {
                *p *= scale;
            }
            let l0 = lambda_measure(&orbit).unwrap();
            let l1 = lambda_measure(&scaled).unwrap();
            prop_assert!((l0 - l1).abs() <= 1e-12);
        }

        #[test]
        fn theta_is_invariant_under_per_node_rescaling(
            angle in 0.05f64..(PI - 0.05),
            scale_a in 1e-3f64..1e3,
            scale_b in 1e-3f64..1e3,
        ) {
            let a: Vec<DVector<f64>> =
                (0..32).map(|_| DVector::from_vec(vec![scale_a, 0.0])).collect();
            let b: Vec<DVector<f64>> = (0..32)
                .map(|_| DVector::from_vec(vec![scale_b * angle.cos(), scale_b * angle.sin()]))
                .collect();
            let theta = theta_pair(&a, &b).unwrap();
            let folded = if angle > FRAC_PI_2 { PI - angle } else { angle };
            prop_assert!((theta - (FRAC_PI_2 - folded).abs()).abs() < 1e-12);
        }
    }
}
