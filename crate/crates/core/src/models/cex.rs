//! Planar field with a perfectly circular limit cycle whose Floquet frame is
//! nevertheless oblique: in polar form ṙ = μr(1 − r), φ̇ = 1 + κ(r − 1).
//!
//! For every κ the cycle is the unit circle (rotationally symmetric by
//! construction); for κ ≠ 0 the radial Floquet mode tilts into the tangent
//! direction by arctan(κ/μ), so symmetry holds without orthogonality.

use nalgebra::{DMatrix, DVector};

use crate::ode::VectorField;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CexParams {
    /// Radial contraction rate (> 0).
    pub mu: f64,
    /// Radial shear of the angular velocity.
    pub kappa: f64,
}

impl Default for CexParams {
    fn default() -> Self {
        CexParams { mu: 0.5, kappa: 0.3 }
    }
}

impl CexParams {
    pub fn new(mu: f64, kappa: f64) -> Self {
        CexParams { mu, kappa }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParam("counterexample: mu must be positive".into()));
        }
        if !self.kappa.is_finite() {
            return Err(Error::InvalidParam("counterexample: kappa must be finite".into()));
        }
        Ok(())
    }

    pub fn param_names(&self) -> Vec<String> {
        vec!["mu".into(), "kappa".into()]
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        match key {
            "mu" => Some(self.mu),
            "kappa" => Some(self.kappa),
            _ => None,
        }
    }

    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match key {
            "mu" => self.mu = value,
            "kappa" => self.kappa = value,
            _ => return false,
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct CexField {
    p: CexParams,
}

impl CexField {
    pub fn new(p: CexParams) -> Result<Self> {
        p.validate()?;
        Ok(CexField { p })
    }

    pub fn params(&self) -> &CexParams {
        &self.p
    }
}

impl VectorField for CexField {
    fn dim(&self) -> usize {
        2
    }

    fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let (y1, y2) = (x[0], x[1]);
        let r = y1.hypot(y2);
        // ṙ/r and φ̇; both stay finite as r → 0.
        let a = self.p.mu * (1.0 - r);
        let omega = 1.0 + self.p.kappa * (r - 1.0);
        out[0] = a * y1 - omega * y2;
        out[1] = a * y2 + omega * y1;
        Ok(())
    }

    fn jacobian_into(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        let (y1, y2) = (x[0], x[1]);
        let r = y1.hypot(y2);
        if r == 0.0 {
            return Err(Error::Domain(
                "counterexample: Jacobian undefined at the origin".into(),
            ));
        }
        let mu = self.p.mu;
        let kappa = self.p.kappa;
        let a = mu * (1.0 - r);
        let omega = 1.0 + kappa * (r - 1.0);
        out[(0, 0)] = a - (mu * y1 * y1 + kappa * y1 * y2) / r;
        out[(0, 1)] = -omega - (mu * y1 * y2 + kappa * y2 * y2) / r;
        out[(1, 0)] = omega + (kappa * y1 * y1 - mu * y1 * y2) / r;
        out[(1, 1)] = a + (kappa * y1 * y2 - mu * y2 * y2) / r;
        Ok(())
    }
}
