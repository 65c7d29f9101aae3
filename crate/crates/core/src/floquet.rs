//! Monodromy matrix, Floquet multipliers/exponents, and the mode and
//! dual-mode trajectories along the cycle.
//!
//! Duals are taken as rows of the inverse eigenvector matrix, which makes
//! bi-orthogonality exact by construction at τ = 0 and — because both sides
//! are propagated with the same fundamental matrix — preserves it at every
//! grid node up to solver roundoff.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::TAU;

use crate::linalg::{condition_1, eigen_pairs, C64};
use crate::ode::{integrate_variational, propagate, VariationalField, VectorField};
use crate::pss::{PeriodicOrbit, PssOptions};
use crate::{Error, Result};

/// Multipliers must sit within this distance of 1 for the phase mode.
const UNIT_MULTIPLIER_TOL: f64 = 1e-6;
/// Eigenvalues closer than this are treated as a degenerate cluster.
const DEGENERACY_TOL: f64 = 1e-10;
/// Fundamental matrices with a worse 1-norm condition than this abort the
/// dual propagation.
const MAX_TRANSITION_COND: f64 = 1e12;

/// How a mode index participates in the realified frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    /// Real multiplier; realized vector is the (real) mode itself.
    Real,
    /// First member of a conjugate pair; realized vector is Re u.
    PairLead,
    /// Second member of a conjugate pair; realized vector is Im u(lead).
    PairTrail,
}

/// Floquet data on the τ grid. Mode ordering: the phase mode first, then
/// descending |λ| with conjugate pairs adjacent (positive imaginary part
/// leading).
#[derive(Debug, Clone)]
pub struct FloquetDecomposition {
    pub multipliers: Vec<C64>,
    /// μᵢ = ln λᵢ / 2π in normalized time.
    pub exponents: Vec<C64>,
    pub kinds: Vec<ModeKind>,
    /// τ values of the grid nodes.
    pub taus: Vec<f64>,
    /// modes[k][i] = uᵢ(τ_k).
    pub modes: Vec<Vec<DVector<C64>>>,
    /// duals[k][i] = vᵢ(τ_k), with (vᵢ, uⱼ) = δᵢⱼ at every node.
    pub duals: Vec<Vec<DVector<C64>>>,
    /// Realified frame per node (conjugate pairs replaced by Re/Im parts).
    pub realized: Vec<Vec<DVector<f64>>>,
    /// uᵢ(2π) after exponent detrending; equals uᵢ(0) for a periodic frame.
    pub closure_modes: Vec<DVector<C64>>,
}

impl FloquetDecomposition {
    pub fn num_modes(&self) -> usize {
        self.multipliers.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.taus.len()
    }

    /// Largest bi-orthogonality defect max |(vᵢ, uⱼ) − δᵢⱼ| over all nodes.
    pub fn biorthogonality_defect(&self) -> f64 {
        let n = self.num_modes();
        let mut worst: f64 = 0.0;
        for k in 0..self.num_nodes() {
            for i in 0..n {
                for j in 0..n {
                    // Plain (unconjugated) product: duals are rows of U⁻¹.
                    let dot: C64 = self.duals[k][i].zip_fold(&self.modes[k][j], C64::new(0.0, 0.0), |acc, a, b| acc + a * b);
                    let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                    worst = worst.max((dot - target).norm());
                }
            }
        }
        worst
    }

    /// Largest periodicity defect maxᵢ |uᵢ(2π) − uᵢ(0)|.
    pub fn periodicity_defect(&self) -> f64 {
        self.closure_modes
            .iter()
            .zip(&self.modes[0])
            .map(|(end, start)| (end - start).norm())
            .fold(0.0, f64::max)
    }
}

/// Fundamental matrix over one full period, from the variational equations
/// starting at the orbit anchor.
pub fn monodromy<F: VectorField + ?Sized>(
    field: &F,
    orbit: &PeriodicOrbit,
    opts: &PssOptions,
) -> Result<DMatrix<f64>> {
    let vf = VariationalField::new(field);
    let z = propagate(&vf, &vf.augment(&orbit.anchor), (0.0, orbit.period), &opts.ode)?;
    let (_, phi) = vf.split(&z);
    Ok(phi)
}

/// Eigen-decompose the monodromy matrix at τ = 0.
///
/// The phase mode is the eigenvalue nearest 1; its eigenvector is replaced by
/// the exact cycle tangent ẋ_s(0). Remaining modes are unit length with the
/// largest-magnitude component made real-positive; duals are rows of the
/// eigenvector-matrix inverse, so (vᵢ, uⱼ) = δᵢⱼ holds by construction.
pub fn decompose(m: &DMatrix<f64>, orbit: &PeriodicOrbit) -> Result<FloquetDecomposition> {
    decompose_at(m, &orbit.derivs[0])
}

/// [`decompose`] with an explicit cycle tangent (useful for synthetic data).
pub fn decompose_at(m: &DMatrix<f64>, xdot0: &DVector<f64>) -> Result<FloquetDecomposition> {
    let n = m.nrows();
    let pairs = eigen_pairs(m)?;

    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (pairs[i].0 - pairs[j].0).norm();
            if gap < DEGENERACY_TOL {
                return Err(Error::DegenerateSpectrum(format!(
                    "multipliers {} and {} are {gap:.3e} apart",
                    pairs[i].0, pairs[j].0
                )));
            }
        }
    }

    let phase_idx = (0..n)
        .min_by(|a, b| {
            let da = (pairs[*a].0 - C64::new(1.0, 0.0)).norm();
            let db = (pairs[*b].0 - C64::new(1.0, 0.0)).norm();
            da.partial_cmp(&db).unwrap()
        })
        .expect("nonempty spectrum");
    let phase_gap = (pairs[phase_idx].0 - C64::new(1.0, 0.0)).norm();
    if phase_gap > UNIT_MULTIPLIER_TOL {
        return Err(Error::NonOscillatory(format!(
            "no unit multiplier: nearest is {} ({phase_gap:.3e} away)",
            pairs[phase_idx].0
        )));
    }
    if pairs[phase_idx].0.im != 0.0 {
        return Err(Error::NonOscillatory("the multiplier nearest 1 is complex".into()));
    }

    // Group the remaining eigenvalues: real singles and conjugate pairs
    // (positive imaginary part leading), ordered by descending magnitude.
    let mut used = vec![false; n];
    used[phase_idx] = true;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if used[i] {
            continue;
        }
        if pairs[i].0.im == 0.0 {
            used[i] = true;
            groups.push(vec![i]);
        } else if pairs[i].0.im > 0.0 {
            let conj = pairs[i].0.conj();
            let j = (0..n)
                .filter(|j| !used[*j] && *j != i)
                .min_by(|a, b| {
                    let da = (pairs[*a].0 - conj).norm();
                    let db = (pairs[*b].0 - conj).norm();
                    da.partial_cmp(&db).unwrap()
                })
                .ok_or_else(|| {
                    Error::DegenerateSpectrum("complex multiplier without a conjugate partner".into())
                })?;
            if (pairs[j].0 - conj).norm() > 1e-8 * (1.0 + conj.norm()) {
                return Err(Error::DegenerateSpectrum(format!(
                    "multiplier {} lacks a conjugate partner",
                    pairs[i].0
                )));
            }
            used[i] = true;
            used[j] = true;
            groups.push(vec![i, j]);
        }
    }
    groups.sort_by(|a, b| {
        let ka = (-pairs[a[0]].0.norm(), -pairs[a[0]].0.re);
        let kb = (-pairs[b[0]].0.norm(), -pairs[b[0]].0.re);
        ka.partial_cmp(&kb).unwrap()
    });

    let mut order: Vec<usize> = vec![phase_idx];
    let mut kinds: Vec<ModeKind> = vec![ModeKind::Real];
    for g in &groups {
        if g.len() == 1 {
            order.push(g[0]);
            kinds.push(ModeKind::Real);
        } else {
            order.push(g[0]);
            order.push(g[1]);
            kinds.push(ModeKind::PairLead);
            kinds.push(ModeKind::PairTrail);
        }
    }

    // Assemble the mode matrix with fixed normalization and phase.
    let mut modes: Vec<DVector<C64>> = Vec::with_capacity(n);
    for (slot, &idx) in order.iter().enumerate() {
        if slot == 0 {
            modes.push(xdot0.map(|v| C64::new(v, 0.0)));
            continue;
        }
        match kinds[slot] {
            ModeKind::PairTrail => {
                let lead = modes.last().expect("lead precedes trail").clone();
                modes.push(lead.map(|z| z.conj()));
            }
            _ => {
                let mut v = pairs[idx].1.clone();
                v /= C64::new(v.norm(), 0.0);
                let arg = v
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                let c = v[arg];
                if c.norm() > 0.0 {
                    v *= c.conj() / C64::new(c.norm(), 0.0);
                }
                modes.push(v);
            }
        }
    }

    let multipliers: Vec<C64> = order.iter().map(|&i| pairs[i].0).collect();
    let exponents: Vec<C64> = multipliers.iter().map(|l| l.ln() / TAU).collect();

    let mut u_mat = DMatrix::<C64>::zeros(n, n);
    for (j, u) in modes.iter().enumerate() {
        u_mat.set_column(j, u);
    }
    let v_mat = u_mat.clone().try_inverse().ok_or_else(|| Error::IllConditioned {
        what: "eigenvector matrix is singular".into(),
        cond: f64::INFINITY,
    })?;
    let duals: Vec<DVector<C64>> = (0..n).map(|i| v_mat.row(i).transpose()).collect();

    let realized = realize(&modes, &kinds);
    // Closure frame from the monodromy itself: λᵢ⁻¹ M uᵢ(0).
    let mc = m.map(|v| C64::new(v, 0.0));
    let closure_modes: Vec<DVector<C64>> = modes
        .iter()
        .zip(&multipliers)
        .map(|(u, lam)| &mc * u / *lam)
        .collect();

    Ok(FloquetDecomposition {
        multipliers,
        exponents,
        kinds,
        taus: vec![0.0],
        modes: vec![modes],
        duals: vec![duals],
        realized: vec![realized],
        closure_modes,
    })
}

fn realize(modes: &[DVector<C64>], kinds: &[ModeKind]) -> Vec<DVector<f64>> {
    modes
        .iter()
        .enumerate()
        .map(|(i, u)| match kinds[i] {
            ModeKind::Real | ModeKind::PairLead => u.map(|z| z.re),
            ModeKind::PairTrail => modes[i - 1].map(|z| z.im),
        })
        .collect()
}

/// Extend a τ = 0 decomposition over the orbit's full τ grid:
/// uᵢ(τ) = e^{−μᵢτ} Φ(t(τ)) uᵢ(0) and vᵢ(τ) = e^{+μᵢτ} Φ(t(τ))⁻ᵀ vᵢ(0),
/// with t = Tτ/2π.
pub fn propagate_modes<F: VectorField + ?Sized>(
    field: &F,
    orbit: &PeriodicOrbit,
    dec: &FloquetDecomposition,
    opts: &PssOptions,
) -> Result<FloquetDecomposition> {
    let n = orbit.dim();
    let n_nodes = orbit.num_samples();
    let sol = integrate_variational(field, &orbit.anchor, (0.0, orbit.period), &opts.ode)?;

    let taus = orbit.taus();
    let mut modes = Vec::with_capacity(n_nodes);
    let mut duals = Vec::with_capacity(n_nodes);
    let mut realized = Vec::with_capacity(n_nodes);

    for (k, &tau) in taus.iter().enumerate() {
        if k == 0 {
            modes.push(dec.modes[0].clone());
            duals.push(dec.duals[0].clone());
            realized.push(dec.realized[0].clone());
            continue;
        }
        let t = orbit.period * tau / TAU;
        let phi = sol.transition(t)?;
        let cond = condition_1(&phi);
        if !(cond < MAX_TRANSITION_COND) {
            return Err(Error::IllConditioned {
                what: format!("fundamental matrix at τ = {tau:.4}"),
                cond,
            });
        }
        let phi_t_lu = phi.transpose().lu();

        let mut node_modes = Vec::with_capacity(n);
        let mut node_duals = Vec::with_capacity(n);
        for i in 0..n {
            let mu = dec.exponents[i];
            let grow = (-mu * tau).exp();
            let u0 = &dec.modes[0][i];
            let u_re = &phi * u0.map(|z| z.re);
            let u_im = &phi * u0.map(|z| z.im);
            let u = DVector::from_fn(n, |r, _| C64::new(u_re[r], u_im[r]) * grow);
            node_modes.push(u);

            let decay = (mu * tau).exp();
            let v0 = &dec.duals[0][i];
            let v_re = phi_t_lu.solve(&v0.map(|z| z.re)).ok_or_else(|| Error::IllConditioned {
                what: format!("fundamental matrix solve at τ = {tau:.4}"),
                cond,
            })?;
            let v_im = phi_t_lu.solve(&v0.map(|z| z.im)).ok_or_else(|| Error::IllConditioned {
                what: format!("fundamental matrix solve at τ = {tau:.4}"),
                cond,
            })?;
            let v = DVector::from_fn(n, |r, _| C64::new(v_re[r], v_im[r]) * decay);
            node_duals.push(v);
        }
        realized.push(realize(&node_modes, &dec.kinds));
        modes.push(node_modes);
        duals.push(node_duals);
    }

    // Closure frame at τ = 2π from the full-period transition.
    let phi_full = sol.final_transition();
    let closure_modes: Vec<DVector<C64>> = (0..n)
        .map(|i| {
            let grow = (-dec.exponents[i] * TAU).exp();
            let u0 = &dec.modes[0][i];
            let u_re = &phi_full * u0.map(|z| z.re);
            let u_im = &phi_full * u0.map(|z| z.im);
            DVector::from_fn(n, |r, _| C64::new(u_re[r], u_im[r]) * grow)
        })
        .collect();

    Ok(FloquetDecomposition {
        multipliers: dec.multipliers.clone(),
        exponents: dec.exponents.clone(),
        kinds: dec.kinds.clone(),
        taus,
        modes,
        duals,
        realized,
        closure_modes,
    })
}

/// Abel–Liouville cross-check: det M computed against
/// exp(∫₀ᵀ tr J(x_s(t)) dt) by periodic trapezoidal quadrature on the
/// orbit's own grid. Returns (det M, trace integral exponential).
pub fn liouville_check<F: VectorField + ?Sized>(
    field: &F,
    orbit: &PeriodicOrbit,
    m: &DMatrix<f64>,
) -> Result<(f64, f64)> {
    let mut acc = 0.0;
    for s in &orbit.samples {
        acc += field.jacobian(s)?.trace();
    }
    let integral = acc * orbit.period / orbit.num_samples() as f64;
    Ok((m.determinant(), integral.exp()))
}
