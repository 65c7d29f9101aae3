//! FET differential-pair LC oscillator (normalized 4-D state).
//!
//! State x = (q, r, s, u): the two normalized tank voltages and inductor
//! currents. The differential pair is modelled by the saturating
//! trans-conductance Θ(ζ) = I_B (2/π) arctan((π/2)(G_m/I_B) ζ) with
//! G_m = √(k_n I_B). Damping is selectable: parallel resistors (1/Q_p
//! terms on the voltages), series resistors (1/Q_s terms on the currents),
//! or both.

use nalgebra::{DMatrix, DVector};
use std::str::FromStr;

use crate::ode::VectorField;
use crate::{Error, Result};

/// Which resonator damping resistors are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Parallel,
    Series,
    Both,
}

impl FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parallel" => Ok(Topology::Parallel),
            "series" => Ok(Topology::Series),
            "both" => Ok(Topology::Both),
            other => Err(Error::InvalidParam(format!(
                "fet: unknown topology '{other}' (expected parallel|series|both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetParams {
    /// Impedance normalization (Ω).
    pub z0: f64,
    /// Capacitance ratios C₁/C_s, C₂/C_s.
    pub sigma1: f64,
    pub sigma2: f64,
    /// Inductance ratios L₁/L_p, L₂/L_p.
    pub kappa1: f64,
    pub kappa2: f64,
    /// Parallel-resistor quality factors.
    pub q_p1: f64,
    pub q_p2: f64,
    /// Series-resistor quality factors.
    pub q_s1: f64,
    pub q_s2: f64,
    /// Tail bias current (A).
    pub i_b: f64,
    /// Device constant (A/V², time-scaled).
    pub k_n: f64,
    pub topology: Topology,
}

impl Default for FetParams {
    fn default() -> Self {
        FetParams {
            z0: 1.0,
            sigma1: 2.0,
            sigma2: 2.0,
            kappa1: 2.0,
            kappa2: 2.0,
            q_p1: 100.0,
            q_p2: 100.0,
            q_s1: 100.0,
            q_s2: 100.0,
            i_b: 8e-3,
            k_n: 2.0,
            topology: Topology::Both,
        }
    }
}

impl FetParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("z0", self.z0),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("q_p1", self.q_p1),
            ("q_p2", self.q_p2),
            ("q_s1", self.q_s1),
            ("q_s2", self.q_s2),
            ("i_b", self.i_b),
            ("k_n", self.k_n),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidParam(format!("fet: {name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn param_names(&self) -> Vec<String> {
        [
            "z0", "sigma1", "sigma2", "kappa1", "kappa2", "q_p1", "q_p2", "q_s1", "q_s2", "i_b",
            "k_n", "topology",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "z0" => self.z0,
            "sigma1" => self.sigma1,
            "sigma2" => self.sigma2,
            "kappa1" => self.kappa1,
            "kappa2" => self.kappa2,
            "q_p1" => self.q_p1,
            "q_p2" => self.q_p2,
            "q_s1" => self.q_s1,
            "q_s2" => self.q_s2,
            "i_b" => self.i_b,
            "k_n" => self.k_n,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match key {
            "z0" => self.z0 = value,
            "sigma1" => self.sigma1 = value,
            "sigma2" => self.sigma2 = value,
            "kappa1" => self.kappa1 = value,
            "kappa2" => self.kappa2 = value,
            "q_p1" => self.q_p1 = value,
            "q_p2" => self.q_p2 = value,
            "q_s1" => self.q_s1 = value,
            "q_s2" => self.q_s2 = value,
            "i_b" => self.i_b = value,
            "k_n" => self.k_n = value,
            _ => return false,
        }
        true
    }

    /// Small-signal trans-conductance G_m = √(k_n I_B).
    pub fn gm(&self) -> f64 {
        (self.k_n * self.i_b).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct FetField {
    p: FetParams,
    gm: f64,
    /// Slope scale inside the arctan: (π/2)(G_m/I_B).
    c: f64,
}

impl FetField {
    pub fn new(p: FetParams) -> Result<Self> {
        p.validate()?;
        let gm = p.gm();
        let c = std::f64::consts::FRAC_PI_2 * gm / p.i_b;
        Ok(FetField { p, gm, c })
    }

    pub fn params(&self) -> &FetParams {
        &self.p
    }

    /// Saturating pair trans-conductance Θ(ζ); Θ(0) = 0, Θ(±∞) = ±I_B,
    /// Θ'(0) = G_m.
    pub fn theta(&self, zeta: f64) -> f64 {
        self.p.i_b * std::f64::consts::FRAC_2_PI * (self.c * zeta).atan()
    }

    pub fn theta_deriv(&self, zeta: f64) -> f64 {
        let cz = self.c * zeta;
        self.gm / (1.0 + cz * cz)
    }

    fn damping(&self) -> (f64, f64, f64, f64) {
        let p = &self.p;
        match p.topology {
            Topology::Parallel => (1.0 / p.q_p1, 0.0, 1.0 / p.q_p2, 0.0),
            Topology::Series => (0.0, 1.0 / p.q_s1, 0.0, 1.0 / p.q_s2),
            Topology::Both => (1.0 / p.q_p1, 1.0 / p.q_s1, 1.0 / p.q_p2, 1.0 / p.q_s2),
        }
    }
}

impl VectorField for FetField {
    fn dim(&self) -> usize {
        4
    }

    fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let p = &self.p;
        let (q, r, s, u) = (x[0], x[1], x[2], x[3]);
        let (gp1, gs1, gp2, gs2) = self.damping();
        let th = self.theta(p.z0 * (q - s));
        out[0] = (-q * gp1 - r / p.z0 + th) / p.sigma1;
        out[1] = (p.z0 * q - r * gs1) / p.kappa1;
        out[2] = (-s * gp2 - u / p.z0 - th) / p.sigma2;
        out[3] = (p.z0 * s - u * gs2) / p.kappa2;
        Ok(())
    }

    fn jacobian_into(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        let p = &self.p;
        let (q, _r, s, _u) = (x[0], x[1], x[2], x[3]);
        let (gp1, gs1, gp2, gs2) = self.damping();
        let dth = self.theta_deriv(p.z0 * (q - s)) * p.z0;
        out.fill(0.0);
        out[(0, 0)] = (-gp1 + dth) / p.sigma1;
        out[(0, 1)] = -1.0 / (p.z0 * p.sigma1);
        out[(0, 2)] = -dth / p.sigma1;
        out[(1, 0)] = p.z0 / p.kappa1;
        out[(1, 1)] = -gs1 / p.kappa1;
        out[(2, 0)] = -dth / p.sigma2;
        out[(2, 2)] = (-gp2 + dth) / p.sigma2;
        out[(2, 3)] = -1.0 / (p.z0 * p.sigma2);
        out[(3, 2)] = p.z0 / p.kappa2;
        out[(3, 3)] = -gs2 / p.kappa2;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn theta_saturates_at_the_bias_current() {
        let f = FetField::new(FetParams::default()).unwrap();
        assert_eq!(f.theta(0.0), 0.0);
        assert_relative_eq!(f.theta(1e9), f.params().i_b, max_relative = 1e-6);
        assert_relative_eq!(f.theta(-1e9), -f.params().i_b, max_relative = 1e-6);
    }

    #[test]
    fn theta_slope_at_zero_is_gm() {
        let p = FetParams::default();
        let f = FetField::new(p.clone()).unwrap();
        let gm_expected = (p.k_n * p.i_b).sqrt();
        assert_relative_eq!(f.theta_deriv(0.0), gm_expected, epsilon = 1e-15);
        // Finite-difference confirmation.
        let h = 1e-7;
        let fd = (f.theta(h) - f.theta(-h)) / (2.0 * h);
        assert_relative_eq!(fd, gm_expected, max_relative = 1e-8);
    }

    #[test]
    fn topology_switches_damping_terms() {
        let mut p = FetParams::default();
        p.topology = Topology::Parallel;
        let f = FetField::new(p.clone()).unwrap();
        let x = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]);
        let d = f.eval(&x).unwrap();
        // Series damping off: the current equations keep only the coupling.
        assert_eq!(d[1], 0.0);
        assert_eq!(d[3], 0.0);

        p.topology = Topology::Series;
        let f = FetField::new(p).unwrap();
        let d = f.eval(&x).unwrap();
        assert!(d[1] < 0.0 && d[3] < 0.0);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = FetParams::default();
        p.i_b = 0.0;
        assert!(FetField::new(p).is_err());
    }
}
