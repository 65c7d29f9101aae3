//! Dormand–Prince 5(4) stepper with PI step-size control and the classic
//! quartic dense-output interpolant.

use nalgebra::DVector;
use std::time::Instant;

use super::{OdeOptions, VectorField};
use crate::{Error, Result};

// Butcher tableau (Dormand & Prince 1980, as in Hairer/Nørsett/Wanner
// DOPRI5). Stage abscissae are not needed for autonomous fields.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// b - b_hat: coefficients of the embedded error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// Dense output coefficients (Hairer's CONTD5).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2; // largest shrink per step: h -> h/5
const FAC_MAX: f64 = 10.0; // largest growth per step: h -> 10 h
const BETA: f64 = 0.04; // PI stabilization
const EXPO1: f64 = 0.2 - BETA * 0.75;
const DEADLINE_CHECK_STRIDE: usize = 32;

/// One accepted step's dense-output polynomial: the state anywhere inside
/// `[t0, t0 + h]` is a quartic in the scaled offset.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    pub cont: [DVector<f64>; 5],
}

impl DenseSegment {
    /// Evaluate the interpolant at `t` (callers guarantee `t` lies in the
    /// segment up to roundoff).
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [c0, c1, c2, c3, c4] = &self.cont;
        let mut out = c3 + c4 * theta1;
        out *= theta;
        out += c2;
        out *= theta1;
        out += c1;
        out *= theta;
        out += c0;
        out
    }
}

/// Adaptive DP5(4) integrator advancing one accepted step at a time.
pub struct Stepper<'a, F: VectorField + ?Sized> {
    field: &'a F,
    t: f64,
    y: DVector<f64>,
    t_end: f64,
    dir: f64,
    h: f64,
    facold: f64,
    k: [DVector<f64>; 7],
    y_stage: DVector<f64>,
    y_next: DVector<f64>,
    rel: f64,
    abs: f64,
    max_steps: usize,
    deadline: Option<Instant>,
    steps: usize,
    segment: Option<DenseSegment>,
    done: bool,
}

impl<'a, F: VectorField + ?Sized> Stepper<'a, F> {
    pub fn new(field: &'a F, y0: &DVector<f64>, t0: f64, t_end: f64, opts: &OdeOptions) -> Result<Self> {
        let n = field.dim();
        assert_eq!(y0.len(), n, "initial state dimension mismatch");
        if !y0.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t: t0, state: y0.iter().copied().collect() });
        }
        let tol = opts.tol;
        assert!(tol.rel > 0.0 && tol.abs > 0.0, "tolerances must be positive");

        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut k: [DVector<f64>; 7] = std::array::from_fn(|_| DVector::zeros(n));
        field.eval_into(y0, &mut k[0])?;

        let mut stepper = Stepper {
            field,
            t: t0,
            y: y0.clone(),
            t_end,
            dir,
            h: 0.0,
            facold: 1e-4,
            k,
            y_stage: DVector::zeros(n),
            y_next: DVector::zeros(n),
            rel: tol.rel,
            abs: tol.abs,
            max_steps: opts.max_steps,
            deadline: opts.deadline,
            steps: 0,
            segment: None,
            done: t0 == t_end,
        };
        if !stepper.done {
            stepper.h = stepper.initial_step()?;
        }
        Ok(stepper)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn dydt(&self) -> &DVector<f64> {
        &self.k[0]
    }

    pub fn done(&self) -> bool {
        self.done
    }

    /// Dense-output polynomial of the most recent accepted step.
    pub fn segment(&self) -> Option<&DenseSegment> {
        self.segment.as_ref()
    }

    /// Hairer's starting step size: balance the scaled magnitudes of the
    /// state and its first two derivatives.
    fn initial_step(&mut self) -> Result<f64> {
        let span = (self.t_end - self.t).abs();
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..self.y.len() {
            let sc = self.abs + self.rel * self.y[i].abs();
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.k[0][i] / sc).powi(2);
        }
        let n = self.y.len() as f64;
        d0 = (d0 / n).sqrt();
        d1 = (d1 / n).sqrt();

        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span);

        // One explicit Euler probe to estimate the second derivative scale.
        self.y_stage.copy_from(&self.y);
        self.y_stage.axpy(h0 * self.dir, &self.k[0], 1.0);
        self.field.eval_into(&self.y_stage, &mut self.k[1])?;
        let mut d2: f64 = 0.0;
        for i in 0..self.y.len() {
            let sc = self.abs + self.rel * self.y[i].abs();
            d2 += (((self.k[1][i] - self.k[0][i]) / sc) / h0).powi(2);
        }
        d2 = (d2 / n).sqrt();

        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(span) * self.dir)
    }

    /// Advance by one accepted step (possibly after internal rejections).
    /// Returns `true` while the span end has not been reached.
    pub fn advance(&mut self) -> Result<bool> {
        if self.done {
            return Ok(false);
        }
        loop {
            self.steps += 1;
            if self.steps > self.max_steps {
                return Err(Error::MaxSteps { t: self.t });
            }
            if self.steps % DEADLINE_CHECK_STRIDE == 0 {
                if let Some(deadline) = self.deadline {
                    if Instant::now() > deadline {
                        return Err(Error::Timeout);
                    }
                }
            }

            let mut h = self.h;
            let mut last = false;
            // Stretch marginally short final steps instead of taking a sliver.
            if (self.t + 1.01 * h - self.t_end) * self.dir >= 0.0 {
                h = self.t_end - self.t;
                last = true;
            }
            if h.abs() <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow {
                    t: self.t,
                    h,
                    state: self.y.iter().copied().collect(),
                });
            }

            // Stages 2..7 (k[0] holds f(t, y) from FSAL or init).
            for i in 1..7 {
                self.y_stage.copy_from(&self.y);
                for j in 0..i {
                    let a = A[i][j];
                    if a != 0.0 {
                        self.y_stage.axpy(h * a, &self.k[j], 1.0);
                    }
                }
                if i == 6 {
                    // Stage 7 is evaluated at the candidate solution (FSAL).
                    self.y_next.copy_from(&self.y_stage);
                }
                let (head, tail) = self.k.split_at_mut(i);
                let _ = head;
                self.field.eval_into(&self.y_stage, &mut tail[0])?;
            }

            // Weighted RMS error norm of the embedded difference.
            let mut err: f64 = 0.0;
            for i in 0..self.y.len() {
                let mut e = 0.0;
                for (s, ks) in self.k.iter().enumerate() {
                    if E[s] != 0.0 {
                        e += E[s] * ks[i];
                    }
                }
                let sc = self.abs + self.rel * self.y[i].abs().max(self.y_next[i].abs());
                err += (h * e / sc).powi(2);
            }
            err = (err / self.y.len() as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::NonFinite { t: self.t, state: self.y_next.iter().copied().collect() });
            }

            if err <= 1.0 {
                // Accept: build the dense-output polynomial, then roll state.
                let n = self.y.len();
                let mut c4 = DVector::zeros(n);
                for (s, ks) in self.k.iter().enumerate() {
                    if D[s] != 0.0 {
                        c4.axpy(h * D[s], ks, 1.0);
                    }
                }
                let c0 = self.y.clone();
                let c1 = &self.y_next - &self.y;
                let mut c2 = self.k[0].clone() * h;
                c2 -= &c1;
                let mut c3 = c1.clone();
                c3.axpy(-h, &self.k[6], 1.0);
                c3 -= &c2;
                self.segment = Some(DenseSegment { t0: self.t, h, cont: [c0, c1, c2, c3, c4] });

                self.t += h;
                std::mem::swap(&mut self.y, &mut self.y_next);
                self.k.swap(0, 6); // FSAL

                let fac = (err.powf(EXPO1) / self.facold.powf(BETA) / SAFETY)
                    .clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                self.facold = err.max(1e-4);
                self.h = h / fac;

                if last || (self.t - self.t_end) * self.dir >= 0.0 {
                    self.t = self.t_end;
                    self.done = true;
                    return Ok(false);
                }
                return Ok(true);
            }

            // Reject: shrink and retry.
            let fac = (err.powf(EXPO1) / SAFETY).clamp(1.0, 1.0 / FAC_MIN);
            self.h = h / fac;
        }
    }
}
