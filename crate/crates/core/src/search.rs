//! Derivative-free minimization of the symmetry measure Λ over model
//! parameters, locating candidate orthogonal-decomposition points.
//!
//! Λ only needs the periodic orbit, so every probe is a settle + shoot; Υ is
//! evaluated once, at the argmin, to classify the result. Because symmetry
//! does not imply orthogonality, a symmetry zero with large Υ is reported as
//! a false positive rather than silently accepted.

use crate::models::Model;
use crate::pipeline::{analyze_from, solve_model_orbit, PipelineConfig};
use crate::{measures, Error, Result};

/// Standard simplex coefficients: reflection, expansion, contraction,
/// shrink.
const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub pipeline: PipelineConfig,
    /// Objective-evaluation budget (each is a full orbit solve).
    pub budget: usize,
    /// Relative simplex-diameter stopping threshold.
    pub diameter_tol: f64,
    /// Initial simplex step, relative to each coordinate's magnitude.
    pub initial_step: f64,
    /// Λ below this at the argmin counts as a symmetry zero...
    pub lambda_threshold: f64,
    /// ...and Υ above this flags it as a non-orthogonal false positive.
    pub upsilon_threshold: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            pipeline: PipelineConfig::default(),
            budget: 200,
            diameter_tol: 1e-4,
            initial_step: 0.1,
            lambda_threshold: 1e-6,
            upsilon_threshold: 1e-2,
        }
    }
}

/// One simplex iteration snapshot, for streamable progress logs.
#[derive(Debug, Clone)]
pub struct SearchIteration {
    pub iteration: usize,
    pub evaluations: usize,
    pub best_lambda: f64,
    pub best_params: Vec<f64>,
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Parameter values at the best point found.
    pub params: Vec<f64>,
    pub lambda_min: f64,
    /// Υ evaluated once at the argmin.
    pub upsilon: f64,
    /// Objective evaluations spent.
    pub evaluations: usize,
    /// True when the simplex collapsed below the diameter tolerance.
    pub converged: bool,
    /// Symmetry zero whose decomposition is still oblique.
    pub false_positive: bool,
    pub history: Vec<SearchIteration>,
}

struct Objective<'a> {
    model: &'a Model,
    free: &'a [String],
    cfg: &'a SearchConfig,
    evaluations: usize,
    budget: usize,
}

impl Objective<'_> {
    /// Λ at a parameter point; failed solves rank worst.
    fn eval(&mut self, params: &[f64]) -> Option<f64> {
        if self.evaluations >= self.budget {
            return None;
        }
        self.evaluations += 1;
        let mut m = self.model.clone();
        for (name, v) in self.free.iter().zip(params) {
            if m.set_value(name, *v).is_err() {
                return Some(f64::INFINITY);
            }
        }
        match solve_model_orbit(&m, None, &self.cfg.pipeline) {
            Ok(orbit) => Some(measures::lambda_measure(&orbit).unwrap_or(f64::INFINITY)),
            Err(_) => Some(f64::INFINITY),
        }
    }
}

/// Simplex (Nelder–Mead) minimization of Λ over the named free parameters.
pub fn find_symmetry(
    model: &Model,
    free: &[String],
    start: &[f64],
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    let n = free.len();
    if n == 0 || start.len() != n {
        return Err(Error::Domain("search needs matching free-parameter and start lists".into()));
    }
    for name in free {
        model.clone().set_value(name, 1.0).map_err(|_| {
            Error::InvalidParam(format!("model '{}' has no parameter '{name}'", model.id()))
        })?;
    }
    if cfg.budget < n + 1 {
        return Err(Error::SearchFailed(format!(
            "budget {} is below the {} evaluations needed for the initial simplex",
            cfg.budget,
            n + 1
        )));
    }

    let mut obj = Objective { model, free, cfg, evaluations: 0, budget: cfg.budget };

    // Initial simplex: the start point plus one step along each coordinate.
    let mut points: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += cfg.initial_step * p[i].abs().max(1.0);
        points.push(p);
    }
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    for p in &points {
        match obj.eval(p) {
            Some(v) => values.push(v),
            None => return Err(Error::SearchFailed("budget exhausted during simplex setup".into())),
        }
    }
    if values.iter().all(|v| !v.is_finite()) {
        return Err(Error::SearchFailed("every initial evaluation failed".into()));
    }

    let mut history: Vec<SearchIteration> = Vec::new();
    let mut converged = false;
    let mut iteration = 0usize;

    loop {
        // Order the simplex: points[order[0]] is best.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|a, b| values[*a].partial_cmp(&values[*b]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let worst = order[n];

        let diameter = simplex_diameter(&points, best);
        iteration += 1;
        history.push(SearchIteration {
            iteration,
            evaluations: obj.evaluations,
            best_lambda: values[best],
            best_params: points[best].clone(),
            diameter,
        });

        if !values[best].is_finite() {
            return Err(Error::SearchFailed("simplex lost every finite evaluation".into()));
        }
        if diameter < cfg.diameter_tol {
            converged = true;
            break;
        }
        if obj.evaluations >= cfg.budget {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for d in 0..n {
                centroid[d] += points[i][d] / n as f64;
            }
        }

        let second_worst_val = values[order[n - 1]];
        let combine = |a: f64| -> Vec<f64> {
            (0..n).map(|d| centroid[d] + a * (centroid[d] - points[worst][d])).collect()
        };

        let reflected = combine(REFLECT);
        let Some(fr) = obj.eval(&reflected) else { break };

        if fr < values[best] {
            let expanded = combine(EXPAND);
            match obj.eval(&expanded) {
                Some(fe) if fe < fr => {
                    points[worst] = expanded;
                    values[worst] = fe;
                }
                Some(_) => {
                    points[worst] = reflected;
                    values[worst] = fr;
                }
                None => {
                    points[worst] = reflected;
                    values[worst] = fr;
                    break;
                }
            }
            continue;
        }
        if fr < second_worst_val {
            points[worst] = reflected;
            values[worst] = fr;
            continue;
        }

        // Contraction (outside when the reflection helped at all).
        let contracted =
            if fr < values[worst] { combine(REFLECT * CONTRACT) } else { combine(-CONTRACT) };
        let Some(fc) = obj.eval(&contracted) else { break };
        if fc < values[worst].min(fr) {
            points[worst] = contracted;
            values[worst] = fc;
            continue;
        }

        // Shrink towards the best vertex.
        let best_point = points[best].clone();
        let mut out_of_budget = false;
        for i in 0..=n {
            if i == best {
                continue;
            }
            for d in 0..n {
                points[i][d] = best_point[d] + SHRINK * (points[i][d] - best_point[d]);
            }
            match obj.eval(&points[i]) {
                Some(v) => values[i] = v,
                None => {
                    values[i] = f64::INFINITY;
                    out_of_budget = true;
                }
            }
        }
        if out_of_budget {
            break;
        }
    }

    let best = (0..=n)
        .min_by(|a, b| values[*a].partial_cmp(&values[*b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    if !values[best].is_finite() {
        return Err(Error::SearchFailed("no finite evaluation survived the search".into()));
    }
    let argmin = points[best].clone();
    let lambda_min = values[best];

    // One Υ evaluation at the argmin classifies the symmetry point.
    let mut m = model.clone();
    for (name, v) in free.iter().zip(&argmin) {
        m.set_value(name, *v)?;
    }
    let analysis = analyze_from(&m, None, &cfg.pipeline)
        .map_err(|e| Error::SearchFailed(format!("upsilon evaluation at the argmin failed: {e}")))?;
    let upsilon = analysis.measures.upsilon;
    let false_positive = lambda_min < cfg.lambda_threshold && upsilon > cfg.upsilon_threshold;

    Ok(SearchResult {
        params: argmin,
        lambda_min,
        upsilon,
        evaluations: obj.evaluations,
        converged,
        false_positive,
        history,
    })
}

fn simplex_diameter(points: &[Vec<f64>], best: usize) -> f64 {
    let scale = points[best].iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut diam: f64 = 0.0;
    for p in points {
        let d: f64 = p
            .iter()
            .zip(&points[best])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diam = diam.max(d);
    }
    diam / scale
}
