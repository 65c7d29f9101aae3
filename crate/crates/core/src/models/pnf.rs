//! Polar normal-form oscillator in Cartesian coordinates.
//!
//! In polar/modal coordinates (φ, r, w, z) the dynamics are
//!
//! ```text
//! φ̇ = 1
//! ṙ = μ r (1 − r)
//! ẇᵢ = −βᵢ wᵢ                        i = 1..m
//! ż₂ᵢ₋₁ = −σᵢ z₂ᵢ₋₁ + νᵢ z₂ᵢ          i = 1..k
//! ż₂ᵢ   = −σᵢ z₂ᵢ   − νᵢ z₂ᵢ₋₁
//! ```
//!
//! The field is expressed here in Cartesian coordinates
//! (y₁, y₂) = (r cos φ, r sin φ) so the whole downstream pipeline works in a
//! single coordinate convention. The origin (r = 0) is excluded from the
//! domain.

use nalgebra::{DMatrix, DVector};

use crate::ode::VectorField;
use crate::{Error, Result};

/// Parameters of the polar normal-form oscillator; the state dimension is
/// n = 2 + m + 2k with m = betas.len(), k = sigmas.len() = nus.len().
#[derive(Debug, Clone, PartialEq)]
pub struct PnfParams {
    /// Radial contraction rate (> 0).
    pub mu: f64,
    /// Decay rates of the m real modes (> 0).
    pub betas: Vec<f64>,
    /// Decay rates of the k complex mode pairs (> 0).
    pub sigmas: Vec<f64>,
    /// Rotation rates of the k complex mode pairs (≠ 0).
    pub nus: Vec<f64>,
}

impl Default for PnfParams {
    fn default() -> Self {
        PnfParams { mu: 0.5, betas: vec![0.2], sigmas: vec![0.1], nus: vec![0.3] }
    }
}

impl PnfParams {
    pub fn new(mu: f64, betas: Vec<f64>, sigmas: Vec<f64>, nus: Vec<f64>) -> Self {
        PnfParams { mu, betas, sigmas, nus }
    }

    pub fn m(&self) -> usize {
        self.betas.len()
    }

    pub fn k(&self) -> usize {
        self.sigmas.len()
    }

    pub fn dim(&self) -> usize {
        2 + self.m() + 2 * self.k()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParam("pnf: mu must be positive".into()));
        }
        if self.sigmas.len() != self.nus.len() {
            return Err(Error::InvalidParam("pnf: sigmas and nus must have equal length".into()));
        }
        if self.betas.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::InvalidParam("pnf: all beta_i must be positive".into()));
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParam("pnf: all sigma_i must be positive".into()));
        }
        if self.nus.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParam("pnf: all nu_i must be nonzero".into()));
        }
        Ok(())
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["mu".to_string(), "m".to_string(), "k".to_string()];
        for i in 1..=self.m() {
            names.push(format!("beta{i}"));
        }
        for i in 1..=self.k() {
            names.push(format!("sigma{i}"));
            names.push(format!("nu{i}"));
        }
        names
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        match key {
            "mu" => Some(self.mu),
            "m" => Some(self.m() as f64),
            "k" => Some(self.k() as f64),
            _ => indexed(key, "beta", &self.betas)
                .or_else(|| indexed(key, "sigma", &self.sigmas))
                .or_else(|| indexed(key, "nu", &self.nus)),
        }
    }

    /// Returns false for unknown names. Setting `m`/`k` resizes the mode
    /// lists, filling new entries with the preset rates.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match key {
            "mu" => {
                self.mu = value;
                true
            }
            "m" => {
                self.betas.resize(value as usize, 0.2);
                true
            }
            "k" => {
                self.sigmas.resize(value as usize, 0.1);
                self.nus.resize(value as usize, 0.3);
                true
            }
            _ => {
                set_indexed(key, "beta", &mut self.betas, value)
                    || set_indexed(key, "sigma", &mut self.sigmas, value)
                    || set_indexed(key, "nu", &mut self.nus, value)
            }
        }
    }
}

fn indexed(key: &str, prefix: &str, list: &[f64]) -> Option<f64> {
    let idx: usize = key.strip_prefix(prefix)?.parse().ok()?;
    (1..=list.len()).contains(&idx).then(|| list[idx - 1])
}

fn set_indexed(key: &str, prefix: &str, list: &mut [f64], value: f64) -> bool {
    let Some(idx) = key.strip_prefix(prefix).and_then(|s| s.parse::<usize>().ok()) else {
        return false;
    };
    if (1..=list.len()).contains(&idx) {
        list[idx - 1] = value;
        true
    } else {
        false
    }
}

#[derive(Debug, Clone)]
pub struct PnfField {
    p: PnfParams,
    n: usize,
}

impl PnfField {
    pub fn new(p: PnfParams) -> Result<Self> {
        p.validate()?;
        let n = p.dim();
        Ok(PnfField { p, n })
    }

    pub fn params(&self) -> &PnfParams {
        &self.p
    }
}

impl VectorField for PnfField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let (y1, y2) = (x[0], x[1]);
        let r = y1.hypot(y2);
        if r == 0.0 {
            return Err(Error::Domain("pnf: the origin r = 0 is outside the model domain".into()));
        }
        // ẏ₁ = (ṙ/r) y₁ − y₂ φ̇, ẏ₂ = (ṙ/r) y₂ + y₁ φ̇, with ṙ/r = μ(1 − r).
        let a = self.p.mu * (1.0 - r);
        out[0] = a * y1 - y2;
        out[1] = a * y2 + y1;
        let m = self.p.m();
        for (i, beta) in self.p.betas.iter().enumerate() {
            out[2 + i] = -beta * x[2 + i];
        }
        for (i, (sig, nu)) in self.p.sigmas.iter().zip(&self.p.nus).enumerate() {
            let (z1, z2) = (x[2 + m + 2 * i], x[2 + m + 2 * i + 1]);
            out[2 + m + 2 * i] = -sig * z1 + nu * z2;
            out[2 + m + 2 * i + 1] = -sig * z2 - nu * z1;
        }
        Ok(())
    }

    fn jacobian_into(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        let (y1, y2) = (x[0], x[1]);
        let r = y1.hypot(y2);
        if r == 0.0 {
            return Err(Error::Domain("pnf: the origin r = 0 is outside the model domain".into()));
        }
        out.fill(0.0);
        let mu = self.p.mu;
        let a = mu * (1.0 - r);
        out[(0, 0)] = a - mu * y1 * y1 / r;
        out[(0, 1)] = -1.0 - mu * y1 * y2 / r;
        out[(1, 0)] = 1.0 - mu * y1 * y2 / r;
        out[(1, 1)] = a - mu * y2 * y2 / r;
        let m = self.p.m();
        for (i, beta) in self.p.betas.iter().enumerate() {
            out[(2 + i, 2 + i)] = -beta;
        }
        for (i, (sig, nu)) in self.p.sigmas.iter().zip(&self.p.nus).enumerate() {
            let a_ix = 2 + m + 2 * i;
            out[(a_ix, a_ix)] = -sig;
            out[(a_ix, a_ix + 1)] = *nu;
            out[(a_ix + 1, a_ix)] = -nu;
            out[(a_ix + 1, a_ix + 1)] = -sig;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn on_cycle_derivative_is_unit_tangent() {
        let f = PnfField::new(PnfParams::default()).unwrap();
        let mut x = DVector::zeros(f.dim());
        // On the unit circle with w = z = 0 the motion is pure rotation.
        for ang in [0.0, 0.9, 2.4, 4.4] {
            x[0] = f64::cos(ang);
            x[1] = f64::sin(ang);
            let d = f.eval(&x).unwrap();
            assert_relative_eq!(d.norm(), 1.0, epsilon = 1e-14);
            assert_relative_eq!(d[0] * x[0] + d[1] * x[1], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn radial_rate_at_r_two() {
        // ṙ = μ r (1 − r) = 0.5 · 2 · (1 − 2) = −1 at r = 2.
        let f = PnfField::new(PnfParams::default()).unwrap();
        let mut x = DVector::zeros(f.dim());
        x[0] = 2.0;
        let d = f.eval(&x).unwrap();
        let rdot = d[0] * x[0] / 2.0; // radial component of the derivative
        assert_relative_eq!(rdot, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn origin_is_rejected() {
        let f = PnfField::new(PnfParams::default()).unwrap();
        let x = DVector::zeros(f.dim());
        assert!(matches!(f.eval(&x), Err(Error::Domain(_))));
        assert!(matches!(f.jacobian(&x), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let bad = PnfParams::new(-0.5, vec![0.2], vec![0.1], vec![0.3]);
        assert!(PnfField::new(bad).is_err());
        let bad = PnfParams::new(0.5, vec![0.2], vec![0.1], vec![0.0]);
        assert!(PnfField::new(bad).is_err());
        let bad = PnfParams::new(0.5, vec![0.2], vec![0.1, 0.2], vec![0.3]);
        assert!(PnfField::new(bad).is_err());
    }

    #[test]
    fn transient_contracts_towards_the_cycle() {
        // From (r, w, z) = (1.5, 0.3, 0.2, 0) everything but the rotation decays.
        let f = PnfField::new(PnfParams::default()).unwrap();
        let x0 = DVector::from_vec(vec![1.5, 0.0, 0.3, 0.2, 0.0]);
        let o = crate::ode::OdeOptions::default();
        let y = crate::ode::propagate(&f, &x0, (0.0, 60.0), &o).unwrap();
        let r = y[0].hypot(y[1]);
        assert!((r - 1.0).abs() < 1e-9, "r = {r}");
        assert!(y[2].abs() < 1e-5 && y[3].hypot(y[4]) < 1e-2);
    }
}
