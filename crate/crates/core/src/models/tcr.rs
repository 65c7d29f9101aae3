//! Transformer-coupled resonator oscillator (normalized 3-D state).
//!
//! State x = (y, v, w): the two normalized capacitor voltages and the
//! normalized inductor current. Two trans-conductors drive the capacitor
//! nodes and a trans-impedance drives the inductor branch, all sharing the
//! polynomial drive f(x) = p − (q₁ z₀²(αy − βw)² + q₂ (v/z₀)²); f > 0 near
//! the origin pumps the oscillation, f < 0 at large amplitude limits it.

use nalgebra::{DMatrix, DVector};

use crate::ode::VectorField;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TcrParams {
    /// Upper/lower transformer turn ratios (the lower winding is phase
    /// inverted, hence the −β coupling).
    pub alpha: f64,
    pub beta: f64,
    /// Impedance normalization (Ω).
    pub z0: f64,
    /// Capacitance ratios C_a/C_s, C_b/C_s.
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// Quality factors of the two capacitor loads and the inductor branch.
    pub q_a: f64,
    pub q_b: f64,
    pub q_s: f64,
    /// Drive polynomial coefficients: p (A/V), q1 (A/V²), q2 (1/A).
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
}

impl Default for TcrParams {
    fn default() -> Self {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        TcrParams {
            alpha: inv_sqrt2,
            beta: inv_sqrt2,
            z0: 1.0,
            sigma_a: 2.0,
            sigma_b: 2.0,
            q_a: 100.0,
            q_b: 100.0,
            q_s: 100.0,
            p: 0.06,
            q1: 0.003,
            q2: 0.003,
        }
    }
}

impl TcrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_a > 0.0 && self.q_b > 0.0 && self.q_s > 0.0) {
            return Err(Error::InvalidParam("tcr: all quality factors must be positive".into()));
        }
        if !(self.sigma_a > 0.0 && self.sigma_b > 0.0) {
            return Err(Error::InvalidParam("tcr: sigma_a and sigma_b must be positive".into()));
        }
        if !(self.alpha * self.alpha + self.beta * self.beta > 0.0) {
            return Err(Error::InvalidParam("tcr: alpha and beta cannot both vanish".into()));
        }
        if !(self.z0 > 0.0) {
            return Err(Error::InvalidParam("tcr: z0 must be positive".into()));
        }
        Ok(())
    }

    pub fn param_names(&self) -> Vec<String> {
        ["alpha", "beta", "z0", "sigma_a", "sigma_b", "q_a", "q_b", "q_s", "p", "q1", "q2"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "alpha" => self.alpha,
            "beta" => self.beta,
            "z0" => self.z0,
            "sigma_a" => self.sigma_a,
            "sigma_b" => self.sigma_b,
            "q_a" => self.q_a,
            "q_b" => self.q_b,
            "q_s" => self.q_s,
            "p" => self.p,
            "q1" => self.q1,
            "q2" => self.q2,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match key {
            "alpha" => self.alpha = value,
            "beta" => self.beta = value,
            "z0" => self.z0 = value,
            "sigma_a" => self.sigma_a = value,
            "sigma_b" => self.sigma_b = value,
            "q_a" => self.q_a = value,
            "q_b" => self.q_b = value,
            "q_s" => self.q_s = value,
            "p" => self.p = value,
            "q1" => self.q1 = value,
            "q2" => self.q2 = value,
            _ => return false,
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct TcrField {
    p: TcrParams,
    /// Normalized turn ratios α/(α²+β²), β/(α²+β²).
    alpha_n: f64,
    beta_n: f64,
}

impl TcrField {
    pub fn new(p: TcrParams) -> Result<Self> {
        p.validate()?;
        let denom = p.alpha * p.alpha + p.beta * p.beta;
        Ok(TcrField { alpha_n: p.alpha / denom, beta_n: p.beta / denom, p })
    }

    pub fn params(&self) -> &TcrParams {
        &self.p
    }

    /// Drive polynomial f(x) = p − (q₁ (αz₀y − βz₀w)² + q₂ (v/z₀)²).
    pub fn drive(&self, x: &DVector<f64>) -> f64 {
        let p = &self.p;
        let g = p.alpha * p.z0 * x[0] - p.beta * p.z0 * x[2];
        p.p - (p.q1 * g * g + p.q2 * (x[1] / p.z0) * (x[1] / p.z0))
    }
}

impl VectorField for TcrField {
    fn dim(&self) -> usize {
        3
    }

    fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let p = &self.p;
        let (y, v, w) = (x[0], x[1], x[2]);
        let g = p.alpha * y - p.beta * w;
        let f = self.drive(x);
        let i_na = self.alpha_n * p.z0 * g * f;
        let i_nb = self.beta_n * p.z0 * g * f;
        let v_n = (v / p.z0) * f;
        out[0] = (-y / p.q_a - self.alpha_n * v / p.z0 + i_na) / p.sigma_a;
        out[1] = -v / p.q_s + p.z0 * g + v_n;
        out[2] = (-w / p.q_b + self.beta_n * v / p.z0 + i_nb) / p.sigma_b;
        Ok(())
    }

    fn jacobian_into(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        let p = &self.p;
        let (y, v, w) = (x[0], x[1], x[2]);
        let g = p.alpha * y - p.beta * w;
        let f = self.drive(x);
        // ∂f/∂(y, v, w)
        let df_dy = -2.0 * p.q1 * p.z0 * p.z0 * g * p.alpha;
        let df_dw = 2.0 * p.q1 * p.z0 * p.z0 * g * p.beta;
        let df_dv = -2.0 * p.q2 * v / (p.z0 * p.z0);

        out[(0, 0)] = (-1.0 / p.q_a + self.alpha_n * p.z0 * (p.alpha * f + g * df_dy)) / p.sigma_a;
        out[(0, 1)] = (-self.alpha_n / p.z0 + self.alpha_n * p.z0 * g * df_dv) / p.sigma_a;
        out[(0, 2)] = (self.alpha_n * p.z0 * (-p.beta * f + g * df_dw)) / p.sigma_a;

        out[(1, 0)] = p.z0 * p.alpha + (v / p.z0) * df_dy;
        out[(1, 1)] = -1.0 / p.q_s + f / p.z0 + (v / p.z0) * df_dv;
        out[(1, 2)] = -p.z0 * p.beta + (v / p.z0) * df_dw;

        out[(2, 0)] = (self.beta_n * p.z0 * (p.alpha * f + g * df_dy)) / p.sigma_b;
        out[(2, 1)] = (self.beta_n / p.z0 + self.beta_n * p.z0 * g * df_dv) / p.sigma_b;
        out[(2, 2)] = (-1.0 / p.q_b + self.beta_n * p.z0 * (-p.beta * f + g * df_dw)) / p.sigma_b;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn drive_at_origin_equals_p() {
        let f = TcrField::new(TcrParams::default()).unwrap();
        let x = DVector::zeros(3);
        assert_eq!(f.drive(&x), 0.06);
        assert_eq!(f.eval(&x).unwrap().norm(), 0.0);
    }

    #[test]
    fn derivative_matches_hand_evaluation() {
        // Independent symbolic evaluation of the three equations at a fixed
        // state, spelled out term by term.
        let p = TcrParams::default();
        let fld = TcrField::new(p.clone()).unwrap();
        let (y, v, w) = (0.3, -0.7, 0.2);
        let x = DVector::from_vec(vec![y, v, w]);
        let an = p.alpha / (p.alpha * p.alpha + p.beta * p.beta);
        let bn = p.beta / (p.alpha * p.alpha + p.beta * p.beta);
        let g = p.alpha * y - p.beta * w;
        let f = p.p - (p.q1 * (p.alpha * p.z0 * y - p.beta * p.z0 * w).powi(2) + p.q2 * (v / p.z0).powi(2));
        let expect = [
            (-y / p.q_a - an * v / p.z0 + an * p.z0 * g * f) / p.sigma_a,
            -v / p.q_s + p.z0 * g + (v / p.z0) * f,
            (-w / p.q_b + bn * v / p.z0 + bn * p.z0 * g * f) / p.sigma_b,
        ];
        let got = fld.eval(&x).unwrap();
        for i in 0..3 {
            assert_relative_eq!(got[i], expect[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn origin_is_an_unstable_focus_at_defaults() {
        // The oscillation condition: a complex eigenvalue pair with positive
        // real part at the origin.
        let f = TcrField::new(TcrParams::default()).unwrap();
        let j = f.jacobian(&DVector::zeros(3)).unwrap();
        let eigs = j.complex_eigenvalues();
        let unstable: Vec<_> = eigs.iter().filter(|l| l.re > 0.0).collect();
        assert_eq!(unstable.len(), 2);
        assert!(unstable.iter().all(|l| l.im.abs() > 0.1));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = TcrParams::default();
        p.q_a = 0.0;
        assert!(TcrField::new(p).is_err());
        let mut p = TcrParams::default();
        p.alpha = 0.0;
        p.beta = 0.0;
        assert!(TcrField::new(p).is_err());
    }
}
