//! The composed solve: settle → detect period → shoot → monodromy →
//! decompose → propagate modes → measures.

use nalgebra::{DMatrix, DVector};
use std::time::{Duration, Instant};

use crate::floquet::{decompose, monodromy, propagate_modes, FloquetDecomposition};
use crate::measures::MeasurePair;
use crate::models::Model;
use crate::ode::{OdeOptions, Tolerances};
use crate::pss::{detect_period, settle, shoot, PeriodicOrbit, PssOptions};
use crate::Result;

/// End-to-end solver settings shared by single runs, sweeps, and searches.
#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    pub tol: Tolerances,
    /// τ-grid samples on the converged orbit.
    pub samples: usize,
    /// Transient horizon for cold starts.
    pub settle_horizon: f64,
    /// Shorter transient used when warm-starting from a nearby solution.
    pub warm_settle_horizon: f64,
    /// Longest admissible period for detection.
    pub max_period: f64,
    pub settle_gap_tol: f64,
    pub shoot_tol: f64,
    pub max_newton: usize,
    /// Wall-clock budget per solve; guards sweeps against pathological
    /// points.
    pub timeout: Option<Duration>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tol: Tolerances::default(),
            samples: 512,
            settle_horizon: 2000.0,
            warm_settle_horizon: 50.0,
            max_period: 200.0,
            settle_gap_tol: 1e-6,
            shoot_tol: 1e-10,
            max_newton: 25,
            timeout: Some(Duration::from_secs(30)),
        }
    }
}

impl PipelineConfig {
    /// Stage options with the deadline anchored at the current instant.
    pub fn pss_options(&self) -> PssOptions {
        PssOptions {
            ode: OdeOptions {
                tol: self.tol,
                deadline: self.timeout.map(|d| Instant::now() + d),
                ..OdeOptions::default()
            },
            settle_gap_tol: self.settle_gap_tol,
            event_tol: 1e-12,
            shoot_tol: self.shoot_tol,
            max_newton: self.max_newton,
            max_halvings: 4,
            samples: self.samples,
        }
    }
}

/// Everything the pipeline produces for one parameter point.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub orbit: PeriodicOrbit,
    pub monodromy: DMatrix<f64>,
    pub decomposition: FloquetDecomposition,
    pub measures: MeasurePair,
}

/// Solve the periodic orbit only (enough for Λ), optionally warm-started
/// from a state near the cycle.
pub fn solve_model_orbit(
    model: &Model,
    start: Option<&DVector<f64>>,
    cfg: &PipelineConfig,
) -> Result<PeriodicOrbit> {
    let field = model.field()?;
    let opts = cfg.pss_options();
    let (x0, horizon) = match start {
        Some(x) => (x.clone(), cfg.warm_settle_horizon),
        None => (model.default_start(), cfg.settle_horizon),
    };
    let settled = settle(&field, &x0, horizon, None, &opts)?;
    let period = detect_period(&field, &settled.point, &settled.section, cfg.max_period, &opts)?;
    shoot(&field, &settled.point, period, &opts)
}

/// Full pipeline for one model/parameter point.
pub fn analyze_from(
    model: &Model,
    start: Option<&DVector<f64>>,
    cfg: &PipelineConfig,
) -> Result<Analysis> {
    let field = model.field()?;
    let opts = cfg.pss_options();
    let (x0, horizon) = match start {
        Some(x) => (x.clone(), cfg.warm_settle_horizon),
        None => (model.default_start(), cfg.settle_horizon),
    };
    let settled = settle(&field, &x0, horizon, None, &opts)?;
    let period = detect_period(&field, &settled.point, &settled.section, cfg.max_period, &opts)?;
    let orbit = shoot(&field, &settled.point, period, &opts)?;

    let m = monodromy(&field, &orbit, &opts)?;
    let dec0 = decompose(&m, &orbit)?;
    let dec = propagate_modes(&field, &orbit, &dec0, &opts)?;
    let measures = MeasurePair::new(&orbit, &dec)?;
    Ok(Analysis { orbit, monodromy: m, decomposition: dec, measures })
}

/// Full pipeline from the model's default start state.
pub fn analyze(model: &Model, cfg: &PipelineConfig) -> Result<Analysis> {
    analyze_from(model, None, cfg)
}
