//! Periodic steady state: settle onto the limit cycle, detect the period on
//! a Poincaré section, and converge the orbit by Newton shooting.

use nalgebra::{DMatrix, DVector};

use crate::ode::{integrate, propagate, OdeOptions, Stepper, VariationalField, VectorField};
use crate::{Error, Result};

/// Hyperplane through `point` with unit `normal`; crossings are counted in
/// the positive direction (g going from negative to non-negative).
#[derive(Debug, Clone)]
pub struct Section {
    pub point: DVector<f64>,
    pub normal: DVector<f64>,
}

impl Section {
    pub fn new(point: DVector<f64>, normal: DVector<f64>) -> Result<Self> {
        let norm = normal.norm();
        if norm == 0.0 {
            return Err(Error::Domain("section normal must be nonzero".into()));
        }
        Ok(Section { point, normal: normal / norm })
    }

    /// Section through `point`, normal to the local flow direction. Near the
    /// cycle this guarantees transversality.
    pub fn through_flow<F: VectorField + ?Sized>(field: &F, point: &DVector<f64>) -> Result<Self> {
        let f = field.eval(point)?;
        if f.norm() == 0.0 {
            return Err(Error::NoOscillation("flow vanishes at the section point".into()));
        }
        Section::new(point.clone(), f)
    }

    pub fn offset(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(&(x - &self.point))
    }
}

/// Tolerances and iteration limits for the solver stages.
#[derive(Debug, Clone, Copy)]
pub struct PssOptions {
    pub ode: OdeOptions,
    /// Consecutive-crossing distance that certifies settling.
    pub settle_gap_tol: f64,
    /// Bisection tolerance for event times.
    pub event_tol: f64,
    /// Convergence threshold on |φ_T(x) − x|.
    pub shoot_tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    /// Number of uniform τ-grid samples on the converged orbit.
    pub samples: usize,
}

impl Default for PssOptions {
    fn default() -> Self {
        PssOptions {
            ode: OdeOptions::default(),
            settle_gap_tol: 1e-6,
            event_tol: 1e-12,
            shoot_tol: 1e-10,
            max_newton: 25,
            max_halvings: 4,
            samples: 512,
        }
    }
}

/// Outcome of the settle stage.
#[derive(Debug, Clone)]
pub struct Settled {
    /// Last recorded section crossing.
    pub point: DVector<f64>,
    pub section: Section,
    pub crossings: usize,
    /// Distance between the last two crossings.
    pub last_gap: f64,
    /// True when `last_gap` fell below the settle tolerance.
    pub converged: bool,
}

/// Walk the flow, locating positive-direction section crossings on the dense
/// output. The callback receives (t, state) per crossing and returns whether
/// to continue.
///
/// A crossing only counts once the trajectory has moved materially below the
/// section ("armed"); this keeps roundoff-level offsets of a start point
/// sitting on the section from registering as an immediate return.
fn visit_crossings<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    span: (f64, f64),
    section: &Section,
    event_tol: f64,
    opts: &OdeOptions,
    mut on_cross: impl FnMut(f64, DVector<f64>) -> bool,
) -> Result<()> {
    let arm_tol = 1e-7 * section.point.norm().max(1.0);
    let mut stepper = Stepper::new(field, x0, span.0, span.1, opts)?;
    let mut g_prev = section.offset(x0);
    let mut t_prev = span.0;
    let mut armed = g_prev < -arm_tol;
    loop {
        let more = stepper.advance()?;
        let g_now = section.offset(stepper.y());
        if g_now < -arm_tol {
            armed = true;
        }
        if armed && g_prev < 0.0 && g_now >= 0.0 {
            let seg = stepper.segment().expect("accepted step has a segment");
            // Bisect the sign change inside the step.
            let (mut lo, mut hi) = (t_prev, stepper.t());
            while hi - lo > event_tol {
                let mid = 0.5 * (lo + hi);
                if section.offset(&seg.eval(mid)) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_cross = 0.5 * (lo + hi);
            if !on_cross(t_cross, seg.eval(t_cross)) {
                return Ok(());
            }
            armed = false;
        }
        g_prev = g_now;
        t_prev = stepper.t();
        if !more {
            return Ok(());
        }
    }
}

/// Run out the transient for `horizon` time units, then record section
/// crossings (for at most another `horizon`) until two consecutive ones are
/// closer than the settle tolerance.
///
/// Without an explicit section, one is placed through the post-transient
/// point, normal to the flow there.
pub fn settle<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    horizon: f64,
    section: Option<Section>,
    opts: &PssOptions,
) -> Result<Settled> {
    if !(horizon > 0.0) {
        return Err(Error::Domain("settle horizon must be positive".into()));
    }
    let y_t = propagate(field, x0, (0.0, horizon), &opts.ode)?;
    let f_t = field.eval(&y_t)?;
    let scale = y_t.norm().max(1.0);
    if f_t.norm() < 1e-12 * scale {
        return Err(Error::NoOscillation(
            "trajectory approached a fixed point during the transient".into(),
        ));
    }
    let section = match section {
        Some(s) => s,
        None => Section::through_flow(field, &y_t)?,
    };

    let mut last: Option<DVector<f64>> = None;
    let mut crossings = 0usize;
    let mut last_gap = f64::INFINITY;
    let gap_tol = opts.settle_gap_tol;
    visit_crossings(field, &y_t, (0.0, horizon), &section, opts.event_tol, &opts.ode, |_t, x| {
        crossings += 1;
        if let Some(prev) = &last {
            last_gap = (&x - prev).norm();
        }
        last = Some(x);
        !(last_gap < gap_tol)
    })?;

    match last {
        Some(point) => Ok(Settled {
            point,
            section,
            crossings,
            last_gap,
            converged: last_gap < gap_tol,
        }),
        None => Err(Error::NoOscillation(format!(
            "no section crossings within {horizon} time units after the transient"
        ))),
    }
}

/// First-return time of the section from a point on it: the next
/// same-direction crossing, located on the dense output.
pub fn detect_period<F: VectorField + ?Sized>(
    field: &F,
    point: &DVector<f64>,
    section: &Section,
    max_time: f64,
    opts: &PssOptions,
) -> Result<f64> {
    let mut period = None;
    visit_crossings(field, point, (0.0, max_time), section, opts.event_tol, &opts.ode, |t, _x| {
        period = Some(t);
        false
    })?;
    period.ok_or_else(|| {
        Error::NoOscillation(format!("no section return within {max_time} time units"))
    })
}

/// A converged limit cycle with a uniform normalized-time sampling.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    /// Point on the cycle satisfying the phase condition.
    pub anchor: DVector<f64>,
    /// Period in integration time (before τ-normalization).
    pub period: f64,
    /// γ(τ_k) at τ_k = 2πk/N, k = 0..N−1.
    pub samples: Vec<DVector<f64>>,
    /// f(γ(τ_k)) at the same nodes.
    pub derivs: Vec<DVector<f64>>,
    /// |φ_T(anchor) − anchor| of the final verification pass.
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }

    /// Normalized-time grid values τ_k = 2πk/N.
    pub fn taus(&self) -> Vec<f64> {
        let n = self.samples.len();
        (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect()
    }
}

/// Newton iteration on the (n+1)-unknown system
/// `[φ_T(x) − x = 0; f(x_init)·(x − x_init) = 0]` with the variational
/// matrix supplying the Jacobian, damped by step halving.
pub fn shoot<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    period_guess: f64,
    opts: &PssOptions,
) -> Result<PeriodicOrbit> {
    if !(period_guess > 0.0) {
        return Err(Error::Domain("period guess must be positive".into()));
    }
    let n = field.dim();
    let f_anchor = field.eval(x0)?;
    if f_anchor.norm() == 0.0 {
        return Err(Error::NoOscillation("phase anchor sits on a fixed point".into()));
    }

    let vf = VariationalField::new(field);
    let mut x = x0.clone();
    let mut period = period_guess;
    let mut best_residual = f64::INFINITY;

    let residual_of = |x: &DVector<f64>, t: f64| -> Result<f64> {
        let x_t = propagate(field, x, (0.0, t), &opts.ode)?;
        let orbit_res = (&x_t - x).norm();
        let phase_res = f_anchor.dot(&(x - x0));
        Ok(orbit_res.hypot(phase_res))
    };

    for _iter in 0..opts.max_newton {
        let z = propagate(&vf, &vf.augment(&x), (0.0, period), &opts.ode)?;
        let (x_t, phi) = vf.split(&z);
        let orbit_res = (&x_t - &x).norm();
        let phase_res = f_anchor.dot(&(&x - x0));
        let total = orbit_res.hypot(phase_res);
        best_residual = best_residual.min(total);

        if orbit_res <= opts.shoot_tol && phase_res.abs() <= 1e-12 * f_anchor.norm().max(1.0) {
            return finish_orbit(field, &x, period, opts);
        }

        // Assemble [Φ − I, f(x_T); f_anchorᵀ, 0] and the negated residual.
        let f_t = field.eval(&x_t)?;
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        jac.view_mut((0, 0), (n, n)).copy_from(&phi);
        for i in 0..n {
            jac[(i, i)] -= 1.0;
            jac[(i, n)] = f_t[i];
            jac[(n, i)] = f_anchor[i];
        }
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -(x_t[i] - x[i]);
        }
        rhs[n] = -phase_res;

        let lu = jac.lu();
        let Some(dz) = lu.solve(&rhs) else {
            return Err(Error::IllConditioned {
                what: "shooting Jacobian is singular (non-hyperbolic cycle?)".into(),
                cond: f64::INFINITY,
            });
        };
        if !dz.iter().all(|v| v.is_finite()) {
            return Err(Error::IllConditioned {
                what: "shooting Jacobian solve produced a non-finite step".into(),
                cond: f64::INFINITY,
            });
        }

        // Step halving: accept the first damped step that reduces the
        // residual, otherwise keep the smallest trial step.
        let mut lambda = 1.0;
        let mut fallback = None;
        let mut next = None;
        for _ in 0..=opts.max_halvings {
            let x_new = &x + dz.rows(0, n) * lambda;
            let t_new = period + lambda * dz[n];
            if t_new > 0.1 * period_guess {
                if let Ok(tot) = residual_of(&x_new, t_new) {
                    if tot < total {
                        next = Some((x_new, t_new));
                        break;
                    }
                    fallback = Some((x_new, t_new));
                }
            }
            lambda *= 0.5;
        }
        match next.or(fallback) {
            Some((x_new, t_new)) => {
                x = x_new;
                period = t_new;
            }
            None => {
                return Err(Error::NewtonDivergence { best_residual, iterations: opts.max_newton })
            }
        }
    }
    Err(Error::NewtonDivergence { best_residual, iterations: opts.max_newton })
}

/// Final verification pass over the converged cycle: re-integrate with dense
/// output, populate the uniform τ grid, and record the closure residual.
fn finish_orbit<F: VectorField + ?Sized>(
    field: &F,
    anchor: &DVector<f64>,
    period: f64,
    opts: &PssOptions,
) -> Result<PeriodicOrbit> {
    let traj = integrate(field, anchor, (0.0, period), &opts.ode)?;
    let n_samples = opts.samples.max(2);
    let mut samples = Vec::with_capacity(n_samples);
    let mut derivs = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let t = period * k as f64 / n_samples as f64;
        let s = traj.interpolate(t)?;
        derivs.push(field.eval(&s)?);
        samples.push(s);
    }
    let residual = (traj.final_state() - anchor).norm();
    Ok(PeriodicOrbit { anchor: anchor.clone(), period, samples, derivs, residual })
}

/// Settle → detect period → shoot, the standard solve sequence.
pub fn solve_orbit<F: VectorField + ?Sized>(
    field: &F,
    start: &DVector<f64>,
    settle_horizon: f64,
    max_period: f64,
    opts: &PssOptions,
) -> Result<PeriodicOrbit> {
    let settled = settle(field, start, settle_horizon, None, opts)?;
    let period = detect_period(field, &settled.point, &settled.section, max_period, opts)?;
    shoot(field, &settled.point, period, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CexField, CexParams, Model, PnfField, PnfParams, VdpField, VdpParams};
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn opts() -> PssOptions {
        PssOptions::default()
    }

    #[test]
    fn settle_lands_on_the_pnf_cycle() {
        let f = PnfField::new(PnfParams::default()).unwrap();
        let model = Model::Pnf(PnfParams::default());
        let s = settle(&f, &model.default_start(), 80.0, None, &opts()).unwrap();
        assert!(s.converged, "gap = {}", s.last_gap);
        let r = s.point[0].hypot(s.point[1]);
        assert!((r - 1.0).abs() < 1e-6, "r = {r}");
    }

    #[test]
    fn settle_radius_matches_averaging_for_weak_vdp() {
        let f = VdpField::new(VdpParams::new(1.0, 0.1)).unwrap();
        let x0 = DVector::from_vec(vec![0.1, 0.0]);
        let s = settle(&f, &x0, 400.0, None, &opts()).unwrap();
        let r = s.point.norm();
        assert!((r - 2.0).abs() / 2.0 < 0.05, "r = {r}");
    }

    #[test]
    fn settle_produces_converged_crossings_for_tcr() {
        let model = Model::preset("tcr").unwrap();
        let f = model.field().unwrap();
        let s = settle(&f, &model.default_start(), 2500.0, None, &opts()).unwrap();
        assert!(s.crossings >= 2);
        assert!(s.converged, "gap = {}", s.last_gap);
    }

    #[test]
    fn settle_reports_decay_to_fixed_point() {
        // A damped linear focus spirals into the origin.
        struct Damped;
        impl VectorField for Damped {
            fn dim(&self) -> usize {
                2
            }
            fn eval_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> crate::Result<()> {
                out[0] = -0.2 * x[0] + x[1];
                out[1] = -x[0] - 0.2 * x[1];
                Ok(())
            }
        }
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        match settle(&Damped, &x0, 300.0, None, &opts()) {
            Err(Error::NoOscillation(_)) => {}
            other => panic!("expected NoOscillation, got {other:?}"),
        }
    }

    #[test]
    fn pnf_period_is_two_pi() {
        let f = PnfField::new(PnfParams::default()).unwrap();
        let model = Model::Pnf(PnfParams::default());
        let s = settle(&f, &model.default_start(), 80.0, None, &opts()).unwrap();
        let t = detect_period(&f, &s.point, &s.section, 100.0, &opts()).unwrap();
        assert_relative_eq!(t, TAU, epsilon = 1e-8);
    }

    #[test]
    fn harmonic_oscillator_period_is_two_pi() {
        // ε = 0, c0 = 1: every orbit is periodic with period 2π.
        let f = VdpField::new(VdpParams::new(1.0, 0.0)).unwrap();
        let point = DVector::from_vec(vec![1.0, 0.0]);
        let section = Section::through_flow(&f, &point).unwrap();
        let t = detect_period(&f, &point, &section, 100.0, &opts()).unwrap();
        assert_relative_eq!(t, TAU, epsilon = 1e-9);
    }

    #[test]
    fn relaxed_vdp_period_matches_the_classical_value() {
        let f = VdpField::new(VdpParams::new(1.0, 1.0)).unwrap();
        let x0 = DVector::from_vec(vec![2.0, 0.0]);
        let s = settle(&f, &x0, 200.0, None, &opts()).unwrap();
        let t = detect_period(&f, &s.point, &s.section, 100.0, &opts()).unwrap();
        assert!((t - 6.6633).abs() < 1e-2, "T = {t}");
    }

    #[test]
    fn shoot_converges_on_the_pnf_cycle() {
        let f = PnfField::new(PnfParams::default()).unwrap();
        let model = Model::Pnf(PnfParams::default());
        let orbit = solve_orbit(&f, &model.default_start(), 80.0, 100.0, &opts()).unwrap();
        assert!((orbit.period - TAU).abs() < 1e-10, "T = {}", orbit.period);
        let r = orbit.anchor[0].hypot(orbit.anchor[1]);
        assert!((r - 1.0).abs() < 1e-10);
        assert!(orbit.residual <= 1e-9);
    }

    #[test]
    fn shoot_converges_on_the_counterexample_cycle() {
        let f = CexField::new(CexParams::new(0.5, 0.3)).unwrap();
        let x0 = DVector::from_vec(vec![1.5, 0.0]);
        let orbit = solve_orbit(&f, &x0, 60.0, 100.0, &opts()).unwrap();
        assert!((orbit.period - TAU).abs() < 1e-10, "T = {}", orbit.period);
        let r = orbit.anchor[0].hypot(orbit.anchor[1]);
        assert!((r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shoot_is_self_consistent_on_the_fet_circuit() {
        let model = Model::preset("fet").unwrap();
        let f = model.field().unwrap();
        let o = opts();
        let s = settle(&f, &model.default_start(), 2500.0, None, &o).unwrap();
        let t0 = detect_period(&f, &s.point, &s.section, 200.0, &o).unwrap();
        let orbit = shoot(&f, &s.point, t0, &o).unwrap();
        assert!(orbit.residual <= 1e-10, "residual = {}", orbit.residual);
        assert!((orbit.period - t0).abs() / t0 < 0.01);
    }

    #[test]
    fn orbit_closure_phase_anchor_and_grid_consistency() {
        // Re-integration closure, phase-condition satisfaction, and
        // agreement of finite differences over τ with (T/2π)·f(γ).
        for name in ["pnf", "vdp", "counterexample"] {
            let model = Model::preset(name).unwrap();
            let f = model.field().unwrap();
            let o = opts();
            let start = model.default_start();
            let settled = settle(&f, &start, 200.0, None, &o).unwrap();
            let t0 = detect_period(&f, &settled.point, &settled.section, 100.0, &o).unwrap();
            let orbit = shoot(&f, &settled.point, t0, &o).unwrap();

            let closure = (propagate(&f, &orbit.anchor, (0.0, orbit.period), &o.ode).unwrap()
                - &orbit.anchor)
                .norm();
            assert!(closure <= 1e-9, "{name}: closure {closure}");

            let f_init = f.eval(&settled.point).unwrap();
            let phase = f_init.dot(&(&orbit.anchor - &settled.point));
            assert!(phase.abs() <= 1e-12 * f_init.norm().max(1.0), "{name}: phase {phase}");

            // Fourth-order central differences on the periodic τ grid.
            let n = orbit.num_samples();
            let dtau = TAU / n as f64;
            let scale = orbit.period / TAU;
            let mut worst: f64 = 0.0;
            for k in 0..n {
                let m2 = &orbit.samples[(k + n - 2) % n];
                let m1 = &orbit.samples[(k + n - 1) % n];
                let p1 = &orbit.samples[(k + 1) % n];
                let p2 = &orbit.samples[(k + 2) % n];
                let fd = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * dtau);
                let expect = &orbit.derivs[k] * scale;
                worst = worst.max((&fd - &expect).norm() / expect.norm().max(1e-12));
            }
            assert!(worst < 1e-4, "{name}: grid-derivative mismatch {worst}");
        }
    }

    #[test]
    fn shoot_rejects_bad_period_guess() {
        let f = PnfField::new(PnfParams::default()).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(shoot(&f, &x0, -1.0, &opts()).is_err());
    }
}
