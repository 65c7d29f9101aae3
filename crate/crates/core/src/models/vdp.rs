//! Van der Pol oscillator ẋ = c₀ y, ẏ = −x + ε(1 − x²)y.
//!
//! c₀ controls the aspect ratio of the small-ε limit set (circular exactly
//! at c₀ = 1); ε controls the nonlinearity strength.

use nalgebra::{DMatrix, DVector};

use crate::ode::VectorField;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VdpParams {
    pub c0: f64,
    pub eps: f64,
}

impl Default for VdpParams {
    fn default() -> Self {
        VdpParams { c0: 1.0, eps: 0.1 }
    }
}

impl VdpParams {
    pub fn new(c0: f64, eps: f64) -> Self {
        VdpParams { c0, eps }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0) {
            return Err(Error::InvalidParam("vdp: c0 must be positive".into()));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParam("vdp: eps must be non-negative".into()));
        }
        Ok(())
    }

    pub fn param_names(&self) -> Vec<String> {
        vec!["c0".into(), "eps".into()]
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        match key {
            "c0" => Some(self.c0),
            "eps" => Some(self.eps),
            _ => None,
        }
    }

    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match key {
            "c0" => self.c0 = value,
            "eps" => self.eps = value,
            _ => return false,
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct VdpField {
    p: VdpParams,
}

impl VdpField {
    pub fn new(p: VdpParams) -> Result<Self> {
        p.validate()?;
        Ok(VdpField { p })
    }

    pub fn params(&self) -> &VdpParams {
        &self.p
    }
}

impl VectorField for VdpField {
    fn dim(&self) -> usize {
        2
    }

    fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        out[0] = self.p.c0 * x[1];
        out[1] = -x[0] + self.p.eps * (1.0 - x[0] * x[0]) * x[1];
        Ok(())
    }

    fn jacobian_into(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        out[(0, 0)] = 0.0;
        out[(0, 1)] = self.p.c0;
        out[(1, 0)] = -1.0 - 2.0 * self.p.eps * x[0] * x[1];
        out[(1, 1)] = self.p.eps * (1.0 - x[0] * x[0]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{propagate, OdeOptions};
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_case_orbits_a_circle() {
        // ε = 0, c0 = 1: a linear center, orbits preserve x² + y².
        let f = VdpField::new(VdpParams::new(1.0, 0.0)).unwrap();
        let x0 = DVector::from_vec(vec![1.3, 0.0]);
        let y = propagate(&f, &x0, (0.0, 17.0), &OdeOptions::default()).unwrap();
        assert_relative_eq!(y.norm(), x0.norm(), epsilon = 1e-8);
    }

    #[test]
    fn weakly_nonlinear_radius_approaches_two() {
        // Averaging: the ε → 0 cycle radius tends to 2.
        let f = VdpField::new(VdpParams::new(1.0, 0.1)).unwrap();
        let x0 = DVector::from_vec(vec![0.1, 0.0]);
        let y = propagate(&f, &x0, (0.0, 400.0), &OdeOptions::default()).unwrap();
        let r = y.norm();
        assert!((r - 2.0).abs() / 2.0 < 0.05, "r = {r}");
    }

    #[test]
    fn attractor_band_after_long_run() {
        let f = VdpField::new(VdpParams::new(1.0, 1.0)).unwrap();
        let x0 = DVector::from_vec(vec![2.0, 0.0]);
        let o = OdeOptions::default();
        let y = propagate(&f, &x0, (0.0, 100.0), &o).unwrap();
        // Reference at rtol 1e-12 as the oracle for the default-tolerance run.
        let mut tight = o;
        tight.tol = crate::ode::Tolerances::new(1e-12, 1e-14);
        let y_ref = propagate(&f, &x0, (0.0, 100.0), &tight).unwrap();
        assert!((&y - &y_ref).norm() < 1e-3, "drift {}", (&y - &y_ref).norm());
        assert!(y[0].abs() <= 2.1, "x = {}", y[0]);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(VdpField::new(VdpParams::new(0.0, 0.1)).is_err());
        assert!(VdpField::new(VdpParams::new(1.0, -0.1)).is_err());
    }
}
