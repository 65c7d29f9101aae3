//! Bundled oscillator models: the polar normal-form oscillator, two circuit
//! oscillators (transformer-coupled resonator, FET differential pair), the
//! van der Pol oscillator, and a planar symmetric-but-oblique counterexample.
//!
//! Every model validates its parameters, exposes them by name for sweeps and
//! CLI overrides, and provides an analytic Jacobian (checked against finite
//! differences in the tests).

mod cex;
mod fet;
mod pnf;
mod tcr;
mod vdp;

pub use cex::{CexField, CexParams};
pub use fet::{FetField, FetParams, Topology};
pub use pnf::{PnfField, PnfParams};
pub use tcr::{TcrField, TcrParams};
pub use vdp::{VdpField, VdpParams};

use nalgebra::{DMatrix, DVector};

use crate::ode::VectorField;
use crate::{Error, Result};

/// A model selection plus its current parameter values. This is the unit the
/// sweep and search layers clone and mutate.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Pnf(PnfParams),
    Tcr(TcrParams),
    Fet(FetParams),
    Vdp(VdpParams),
    Counterexample(CexParams),
}

/// Concrete vector field built from a validated [`Model`].
pub enum Field {
    Pnf(PnfField),
    Tcr(TcrField),
    Fet(FetField),
    Vdp(VdpField),
    Cex(CexField),
}

impl VectorField for Field {
    fn dim(&self) -> usize {
        match self {
            Field::Pnf(f) => f.dim(),
            Field::Tcr(f) => f.dim(),
            Field::Fet(f) => f.dim(),
            Field::Vdp(f) => f.dim(),
            Field::Cex(f) => f.dim(),
        }
    }

    fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        match self {
            Field::Pnf(f) => f.eval_into(x, out),
            Field::Tcr(f) => f.eval_into(x, out),
            Field::Fet(f) => f.eval_into(x, out),
            Field::Vdp(f) => f.eval_into(x, out),
            Field::Cex(f) => f.eval_into(x, out),
        }
    }

    fn jacobian_into(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        match self {
            Field::Pnf(f) => f.jacobian_into(x, out),
            Field::Tcr(f) => f.jacobian_into(x, out),
            Field::Fet(f) => f.jacobian_into(x, out),
            Field::Vdp(f) => f.jacobian_into(x, out),
            Field::Cex(f) => f.jacobian_into(x, out),
        }
    }
}

impl Model {
    /// Look up a preset by its CLI name: `pnf`, `vdp`, `tcr`, `fet`,
    /// `counterexample`. Presets carry the reference parameter values.
    pub fn preset(name: &str) -> Result<Model> {
        match name {
            "pnf" => Ok(Model::Pnf(PnfParams::default())),
            "vdp" => Ok(Model::Vdp(VdpParams::default())),
            "tcr" => Ok(Model::Tcr(TcrParams::default())),
            "fet" => Ok(Model::Fet(FetParams::default())),
            "counterexample" => Ok(Model::Counterexample(CexParams::default())),
            other => Err(Error::InvalidParam(format!(
                "unknown model preset '{other}' (expected pnf|vdp|tcr|fet|counterexample)"
            ))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Model::Pnf(_) => "pnf",
            Model::Tcr(_) => "tcr",
            Model::Fet(_) => "fet",
            Model::Vdp(_) => "vdp",
            Model::Counterexample(_) => "counterexample",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Pnf(p) => p.dim(),
            Model::Tcr(_) => 3,
            Model::Fet(_) => 4,
            Model::Vdp(_) => 2,
            Model::Counterexample(_) => 2,
        }
    }

    /// Ordered parameter names addressable via [`Model::set`].
    pub fn param_names(&self) -> Vec<String> {
        match self {
            Model::Pnf(p) => p.param_names(),
            Model::Tcr(p) => p.param_names(),
            Model::Fet(p) => p.param_names(),
            Model::Vdp(p) => p.param_names(),
            Model::Counterexample(p) => p.param_names(),
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        match self {
            Model::Pnf(p) => p.get(key),
            Model::Tcr(p) => p.get(key),
            Model::Fet(p) => p.get(key),
            Model::Vdp(p) => p.get(key),
            Model::Counterexample(p) => p.get(key),
        }
    }

    /// Set a named parameter from its textual value. Numeric for all models;
    /// the FET `topology` additionally accepts `parallel|series|both`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Model::Fet(p) = self {
            if key == "topology" {
                p.topology = value.parse()?;
                return Ok(());
            }
        }
        let v: f64 = value.parse().map_err(|_| {
            Error::InvalidParam(format!("parameter '{key}': cannot parse '{value}' as a number"))
        })?;
        self.set_value(key, v)
    }

    /// Set a named numeric parameter (the sweep/search entry point).
    pub fn set_value(&mut self, key: &str, value: f64) -> Result<()> {
        let ok = match self {
            Model::Pnf(p) => p.set(key, value),
            Model::Tcr(p) => p.set(key, value),
            Model::Fet(p) => p.set(key, value),
            Model::Vdp(p) => p.set(key, value),
            Model::Counterexample(p) => p.set(key, value),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!(
                "model '{}' has no parameter '{key}' (known: {})",
                self.id(),
                self.param_names().join(", ")
            )))
        }
    }

    /// Validate parameters and build the vector field.
    pub fn field(&self) -> Result<Field> {
        match self {
            Model::Pnf(p) => Ok(Field::Pnf(PnfField::new(p.clone())?)),
            Model::Tcr(p) => Ok(Field::Tcr(TcrField::new(p.clone())?)),
            Model::Fet(p) => Ok(Field::Fet(FetField::new(p.clone())?)),
            Model::Vdp(p) => Ok(Field::Vdp(VdpField::new(p.clone())?)),
            Model::Counterexample(p) => Ok(Field::Cex(CexField::new(p.clone())?)),
        }
    }

    /// Start-up state used by the settle stage: a point off the attractor but
    /// well inside its basin.
    pub fn default_start(&self) -> DVector<f64> {
        match self {
            Model::Pnf(p) => {
                let n = p.dim();
                let mut x = DVector::zeros(n);
                x[0] = 1.5;
                for i in 2..n {
                    x[i] = 0.1;
                }
                x
            }
            Model::Tcr(_) => DVector::from_vec(vec![0.01, 0.0, 0.0]),
            Model::Fet(_) => DVector::from_vec(vec![0.01, 0.0, 0.0, 0.0]),
            Model::Vdp(_) => DVector::from_vec(vec![2.0, 0.0]),
            Model::Counterexample(_) => DVector::from_vec(vec![1.5, 0.0]),
        }
    }

    /// Documented validity range for a parameter, if it has one. Values
    /// outside the range are worth a warning, not an error.
    pub fn validity_range(&self, key: &str) -> Option<(f64, f64)> {
        match self {
            Model::Tcr(_) => match key {
                "alpha" | "beta" => Some((0.05, 5.0)),
                "z0" => Some((0.1, 10.0)),
                "q_a" | "q_b" | "q_s" => Some((5.0, 1000.0)),
                _ => None,
            },
            Model::Fet(_) => match key {
                "z0" => Some((0.1, 10.0)),
                "k_n" => Some((0.05, 50.0)),
                "q_p1" | "q_p2" | "q_s1" | "q_s2" => Some((5.0, 1000.0)),
                _ => None,
            },
            Model::Vdp(_) => match key {
                "c0" => Some((0.01, 100.0)),
                "eps" => Some((0.0, 10.0)),
                _ => None,
            },
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::VectorField;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_presets() -> Vec<Model> {
        ["pnf", "vdp", "tcr", "fet", "counterexample"]
            .iter()
            .map(|n| Model::preset(n).unwrap())
            .collect()
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!(Model::preset("nope").is_err());
    }

    #[test]
    fn set_and_get_round_trip() {
        let mut m = Model::preset("vdp").unwrap();
        m.set("c0", "2.5").unwrap();
        assert_eq!(m.get("c0"), Some(2.5));
        assert!(m.set("not_a_param", "1.0").is_err());
        assert!(m.set("c0", "abc").is_err());
    }

    #[test]
    fn fet_topology_flag_parses() {
        let mut m = Model::preset("fet").unwrap();
        m.set("topology", "parallel").unwrap();
        if let Model::Fet(p) = &m {
            assert_eq!(p.topology, Topology::Parallel);
        } else {
            unreachable!()
        }
        assert!(m.set("topology", "sideways").is_err());
    }

    /// Analytic Jacobians agree with central finite differences of eval at
    /// 100 random states per model.
    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for model in all_presets() {
            let field = model.field().unwrap();
            let n = field.dim();
            let mut checked = 0;
            while checked < 100 {
                let x = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
                // Keep radial models away from the excluded origin.
                if matches!(model, Model::Pnf(_) | Model::Counterexample(_))
                    && f64::sqrt(x[0] * x[0] + x[1] * x[1]) < 0.1
                {
                    continue;
                }
                checked += 1;
                let analytic = field.jacobian(&x).unwrap();
                let mut fd = DMatrix::zeros(n, n);
                // Bypass the model's own jacobian_into override.
                struct EvalOnly<'a>(&'a Field);
                impl VectorField for EvalOnly<'_> {
                    fn dim(&self) -> usize {
                        self.0.dim()
                    }
                    fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> crate::Result<()> {
                        self.0.eval_into(x, out)
                    }
                }
                EvalOnly(&field).jacobian_into(&x, &mut fd).unwrap();
                let scale = analytic.norm().max(1.0);
                assert!(
                    (&analytic - &fd).norm() / scale < 1e-5,
                    "{}: jacobian mismatch at {x:?}",
                    model.id()
                );
            }
        }
    }

    /// Circuit models have an exact fixed point at the origin.
    #[test]
    fn circuit_origin_is_a_fixed_point() {
        for name in ["tcr", "fet"] {
            let model = Model::preset(name).unwrap();
            let field = model.field().unwrap();
            let zero = DVector::zeros(field.dim());
            let f = field.eval(&zero).unwrap();
            assert_eq!(f.norm(), 0.0, "{name}: field at origin must vanish exactly");
        }
    }

    /// Rotating a PNF state in the (y1, y2) plane rotates the (y1, y2)
    /// derivative components identically and leaves the rest unchanged.
    #[test]
    fn pnf_field_is_rotation_equivariant() {
        let model = Model::preset("pnf").unwrap();
        let field = model.field().unwrap();
        let n = field.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = DVector::from_fn(n, |i, _| if i < 2 { rng.gen_range(0.2..2.0) } else { rng.gen_range(-1.0..1.0) });
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (c, s) = (ang.cos(), ang.sin());
            let mut xr = x.clone();
            xr[0] = c * x[0] - s * x[1];
            xr[1] = s * x[0] + c * x[1];
            let f = field.eval(&x).unwrap();
            let fr = field.eval(&xr).unwrap();
            assert_relative_eq!(fr[0], c * f[0] - s * f[1], epsilon = 1e-12, max_relative = 1e-12);
            assert_relative_eq!(fr[1], s * f[0] + c * f[1], epsilon = 1e-12, max_relative = 1e-12);
            for i in 2..n {
                assert_relative_eq!(fr[i], f[i], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn default_starts_are_inside_the_domain() {
        for model in all_presets() {
            let field = model.field().unwrap();
            let x = model.default_start();
            assert_eq!(x.len(), field.dim());
            let f = field.eval(&x).unwrap();
            assert!(f.norm() > 0.0, "{}: start must not be a fixed point", model.id());
        }
    }
}
