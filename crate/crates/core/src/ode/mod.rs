//! Adaptive integration of autonomous ODEs and their variational equations.
//!
//! The integrator is an embedded Dormand–Prince 5(4) pair with PI step
//! control and quartic dense output, which is what the downstream Poincaré
//! event location and uniform τ-grid sampling lean on.

mod dopri5;

pub use dopri5::{DenseSegment, Stepper};

use nalgebra::{DMatrix, DVector};
use std::time::Instant;

use crate::{Error, Result};

/// Relative/absolute error tolerances for a single integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        // Tight defaults: the measures bottom out around -100 dB and need
        // high-accuracy orbits to get there.
        Tolerances { rel: 1e-10, abs: 1e-12 }
    }
}

impl Tolerances {
    pub fn new(rel: f64, abs: f64) -> Self {
        Tolerances { rel, abs }
    }
}

/// Integration options beyond tolerances.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub tol: Tolerances,
    pub max_steps: usize,
    /// Wall-clock cutoff; integration errors out with [`Error::Timeout`] once
    /// it is passed.
    pub deadline: Option<Instant>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: Tolerances::default(), max_steps: 20_000_000, deadline: None }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: Tolerances) -> Self {
        OdeOptions { tol, ..Default::default() }
    }
}

/// An autonomous vector field `ẋ = f(x)` with an (optionally analytic)
/// Jacobian. Evaluations are pure functions of the state; fields carrying a
/// restricted domain may reject states on it.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;

    /// Write `f(x)` into `out`.
    fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()>;

    /// Write `∂f/∂x` into `out`. The default is a central finite difference
    /// with per-column step `h_j = sqrt(ε)·max(1, |x_j|)`.
    fn jacobian_into(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        let n = self.dim();
        let mut xp = x.clone();
        let mut fp = DVector::zeros(n);
        let mut fm = DVector::zeros(n);
        for j in 0..n {
            let h = f64::EPSILON.sqrt() * x[j].abs().max(1.0);
            xp[j] = x[j] + h;
            self.eval_into(&xp, &mut fp)?;
            xp[j] = x[j] - h;
            self.eval_into(&xp, &mut fm)?;
            xp[j] = x[j];
            for i in 0..n {
                out[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(())
    }

    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.dim());
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        self.jacobian_into(x, &mut out)?;
        Ok(out)
    }
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        (**self).eval_into(x, out)
    }
    fn jacobian_into(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        (**self).jacobian_into(x, out)
    }
}

/// A solution with dense output over its span.
#[derive(Debug, Clone)]
pub struct Trajectory {
    t0: f64,
    t_end: f64,
    y0: DVector<f64>,
    y_end: DVector<f64>,
    segments: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn span(&self) -> (f64, f64) {
        (self.t0, self.t_end)
    }

    /// Node times (accepted step boundaries), strictly monotone in the
    /// direction of integration.
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.segments.iter().map(|s| s.t0).collect();
        t.push(self.t_end);
        t
    }

    /// States at the node times.
    pub fn states(&self) -> Vec<DVector<f64>> {
        let mut s: Vec<DVector<f64>> = self.segments.iter().map(|seg| seg.cont[0].clone()).collect();
        s.push(self.y_end.clone());
        s
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.y0
    }

    pub fn final_state(&self) -> &DVector<f64> {
        &self.y_end
    }

    /// Dense-output evaluation anywhere inside the span. Node values are
    /// reproduced exactly.
    pub fn interpolate(&self, t: f64) -> Result<DVector<f64>> {
        let dir = if self.t_end >= self.t0 { 1.0 } else { -1.0 };
        if (t - self.t0) * dir < -1e-12 || (t - self.t_end) * dir > 1e-12 {
            return Err(Error::Domain(format!(
                "interpolation time {t} outside span [{}, {}]",
                self.t0, self.t_end
            )));
        }
        if self.segments.is_empty() {
            return Ok(self.y0.clone());
        }
        if t == self.t_end {
            return Ok(self.y_end.clone());
        }
        // Binary search for the segment containing t.
        let mut lo = 0usize;
        let mut hi = self.segments.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if (t - self.segments[mid].t0) * dir >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(self.segments[lo].eval(t))
    }
}

/// Integrate `ẋ = f(x)` over `span`, keeping dense output.
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    span: (f64, f64),
    opts: &OdeOptions,
) -> Result<Trajectory> {
    let mut stepper = Stepper::new(field, x0, span.0, span.1, opts)?;
    let mut segments = Vec::new();
    loop {
        let more = stepper.advance()?;
        if let Some(seg) = stepper.segment() {
            segments.push(seg.clone());
        }
        if !more {
            break;
        }
    }
    Ok(Trajectory {
        t0: span.0,
        t_end: span.1,
        y0: x0.clone(),
        y_end: stepper.y().clone(),
        segments,
    })
}

/// Integrate and return only the final state (no dense storage).
pub fn propagate<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    span: (f64, f64),
    opts: &OdeOptions,
) -> Result<DVector<f64>> {
    let mut stepper = Stepper::new(field, x0, span.0, span.1, opts)?;
    while stepper.advance()? {}
    Ok(stepper.y().clone())
}

/// The augmented system `(x, Φ)` with `Φ̇ = J(x)Φ`, flattened column-major.
pub struct VariationalField<'a, F: VectorField + ?Sized> {
    inner: &'a F,
    n: usize,
}

impl<'a, F: VectorField + ?Sized> VariationalField<'a, F> {
    pub fn new(inner: &'a F) -> Self {
        let n = inner.dim();
        VariationalField { inner, n }
    }

    /// Initial augmented state `(x0, I)`.
    pub fn augment(&self, x0: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut z = DVector::zeros(n + n * n);
        z.rows_mut(0, n).copy_from(x0);
        for i in 0..n {
            z[n + i * n + i] = 1.0;
        }
        z
    }

    pub fn split(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let x = DVector::from_iterator(n, z.iter().take(n).copied());
        let phi = DMatrix::from_iterator(n, n, z.iter().skip(n).copied());
        (x, phi)
    }
}

impl<F: VectorField + ?Sized> VectorField for VariationalField<'_, F> {
    fn dim(&self) -> usize {
        self.n + self.n * self.n
    }

    fn eval_into(&self, z: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let n = self.n;
        let x = z.rows(0, n).into_owned();
        let mut fx = DVector::zeros(n);
        self.inner.eval_into(&x, &mut fx)?;
        out.rows_mut(0, n).copy_from(&fx);

        let jac = self.inner.jacobian(&x)?;
        // out[n..] = vec(J * Phi), column by column.
        for col in 0..n {
            for row in 0..n {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += jac[(row, m)] * z[n + col * n + m];
                }
                out[n + col * n + row] = acc;
            }
        }
        Ok(())
    }
}

/// Joint solution of the state and its fundamental matrix.
pub struct VariationalSolution {
    traj: Trajectory,
    n: usize,
}

impl VariationalSolution {
    pub fn span(&self) -> (f64, f64) {
        self.traj.span()
    }

    pub fn state(&self, t: f64) -> Result<DVector<f64>> {
        let z = self.traj.interpolate(t)?;
        Ok(z.rows(0, self.n).into_owned())
    }

    /// Fundamental matrix Φ(t) with Φ(t₀) = I.
    pub fn transition(&self, t: f64) -> Result<DMatrix<f64>> {
        let z = self.traj.interpolate(t)?;
        Ok(DMatrix::from_iterator(self.n, self.n, z.iter().skip(self.n).copied()))
    }

    pub fn final_state(&self) -> DVector<f64> {
        self.traj.final_state().rows(0, self.n).into_owned()
    }

    /// Φ over the whole span.
    pub fn final_transition(&self) -> DMatrix<f64> {
        let z = self.traj.final_state();
        DMatrix::from_iterator(self.n, self.n, z.iter().skip(self.n).copied())
    }
}

/// Integrate the state together with its variational equation
/// `Φ̇ = J(x(t))Φ`, `Φ(τ₀) = I`, under one shared error control.
pub fn integrate_variational<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    span: (f64, f64),
    opts: &OdeOptions,
) -> Result<VariationalSolution> {
    let vf = VariationalField::new(field);
    let z0 = vf.augment(x0);
    let traj = integrate(&vf, &z0, span, opts)?;
    Ok(VariationalSolution { traj, n: field.dim() })
}

/// Central finite-difference approximation of the flow Jacobian
/// `∂φ_τ/∂x₀`, column `j` from `[φ_τ(x₀ + h e_j) − φ_τ(x₀ − h e_j)]/(2h)`.
/// Independent of the variational route; used to cross-check it.
pub fn flow_jacobian_fd<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    tau: f64,
    h: f64,
    opts: &OdeOptions,
) -> Result<DMatrix<f64>> {
    if h <= 0.0 {
        return Err(Error::Domain("perturbation size must be positive".into()));
    }
    let n = field.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x0.clone();
    for j in 0..n {
        xp[j] = x0[j] + h;
        let yp = propagate(field, &xp, (0.0, tau), opts)?;
        xp[j] = x0[j] - h;
        let ym = propagate(field, &xp, (0.0, tau), opts)?;
        xp[j] = x0[j];
        for i in 0..n {
            jac[(i, j)] = (yp[i] - ym[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}
