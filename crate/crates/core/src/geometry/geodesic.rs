//! Hamiltonian geodesic flow of the metric:
//!
//! ```text
//! ∂tρ = −𝒦_ρΦ
//! ∂tΦ = −½(|∇Φ|²Lρ + L(|∇Φ|²ρ)) + ∇Φ·(−Δ)^{-1}(ρ∇Φ)
//! ```
//!
//! with `H = ½ g_𝒦(Φ, Φ)` conserved along exact solutions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{ddr_values, Density, Parity, RadialField, RadialGrid};
use crate::io::PathSample;
use crate::potential::{scalar_potential_values, vector_potential_values};

use super::onsager::{gauge_fix, metric_values, onsager_values};

/// Abort threshold for `∫ρ⁻ / ∫|ρ|`.
pub const MAX_NEGATIVE_MASS_FRACTION: f64 = 1e-3;

/// `(ρ, Φ)` along a geodesic. ρ may undershoot slightly below zero within
/// [`MAX_NEGATIVE_MASS_FRACTION`], so it is held as a plain EVEN field.
#[derive(Debug, Clone)]
pub struct GeodesicState {
    pub rho: RadialField,
    pub phi: RadialField,
    pub t: f64,
    pub hamiltonian_0: f64,
}

impl GeodesicState {
    /// Starts at `t = 0` with Φ gauge-fixed to ρ-weighted mean zero.
    pub fn new(rho: &Density, phi: &RadialField) -> Result<Self> {
        let grid = rho.grid();
        if !grid.matches(phi.grid()) || phi.parity() != Parity::Even {
            return Err(Error::usage("Φ must be an EVEN field on the density grid"));
        }
        let mut p = phi.values().to_vec();
        gauge_fix(grid, rho.values(), &mut p);
        let phi = RadialField::new(grid, p, Parity::Even)?;
        let h0 = hamiltonian_values(grid, rho.values(), phi.values());
        Ok(GeodesicState { rho: rho.field().clone(), phi, t: 0.0, hamiltonian_0: h0 })
    }

    pub fn hamiltonian(&self) -> f64 {
        hamiltonian_values(self.rho.grid(), self.rho.values(), self.phi.values())
    }
}

pub(crate) fn hamiltonian_values(grid: &RadialGrid, rho: &[f64], phi: &[f64]) -> f64 {
    let l = scalar_potential_values(grid, rho);
    let d = ddr_values(grid.h(), phi);
    0.5 * metric_values(grid, rho, &l, &d, &d)
}

fn rhs_values(grid: &RadialGrid, rho: &[f64], phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = rho.len();
    let l = scalar_potential_values(grid, rho);
    let u = ddr_values(grid.h(), phi);
    let drho: Vec<f64> = onsager_values(grid, rho, &l, &u).into_iter().map(|v| -v).collect();
    let u2rho: Vec<f64> = (0..n).map(|i| u[i] * u[i] * rho[i]).collect();
    let lu2 = scalar_potential_values(grid, &u2rho);
    let g: Vec<f64> = (0..n).map(|i| rho[i] * u[i]).collect();
    let v = vector_potential_values(grid, &g);
    let dphi = (0..n).map(|i| -0.5 * (u[i] * u[i] * l[i] + lu2[i]) + u[i] * v[i]).collect();
    (drho, dphi)
}

/// `(∂tρ, ∂tΦ)` at a state.
pub fn geodesic_rhs(grid: &RadialGrid, state: &GeodesicState) -> Result<(RadialField, RadialField)> {
    if !grid.matches(state.rho.grid()) || !grid.matches(state.phi.grid()) {
        return Err(Error::usage("geodesic state and grid differ"));
    }
    let (dr, dp) = rhs_values(grid, state.rho.values(), state.phi.values());
    Ok((RadialField::new(state.rho.grid(), dr, Parity::Even)?, RadialField::new(state.rho.grid(), dp, Parity::Even)?))
}

fn rk4(grid: &RadialGrid, rho: &[f64], phi: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rho.len();
    let add = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> { (0..n).map(|i| a[i] + c * k[i]).collect() };
    let (a1, b1) = rhs_values(grid, rho, phi);
    let (a2, b2) = rhs_values(grid, &add(rho, &a1, 0.5 * dt), &add(phi, &b1, 0.5 * dt));
    let (a3, b3) = rhs_values(grid, &add(rho, &a2, 0.5 * dt), &add(phi, &b2, 0.5 * dt));
    let (a4, b4) = rhs_values(grid, &add(rho, &a3, dt), &add(phi, &b3, dt));
    let comb = |y: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
        (0..n).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
    };
    (comb(rho, &a1, &a2, &a3, &a4), comb(phi, &b1, &b2, &b3, &b4))
}

#[derive(Debug, Clone)]
pub struct GeodesicRun {
    pub samples: Vec<PathSample>,
    pub final_state: GeodesicState,
    /// `max_t |H(t) − H₀| / max(|H₀|, 1e−12)`.
    pub max_relative_h_drift: f64,
    pub steps: usize,
}

/// RK4 on the coupled system with a fixed step (the last step is shortened to
/// land on `t_end`). A sample is taken at the start, every `every` steps and at the end.
pub fn geodesic_integrate(state0: &GeodesicState, t_end: f64, dt: f64, every: usize) -> Result<GeodesicRun> {
    if !(dt > 0.0) || !(t_end >= 0.0) || every == 0 {
        return Err(Error::usage("geodesic integration needs dt > 0, t_end ≥ 0 and every ≥ 1"));
    }
    let grid: Arc<RadialGrid> = Arc::clone(state0.rho.grid());
    let w = grid.weights();
    let mut rho = state0.rho.values().to_vec();
    let mut phi = state0.phi.values().to_vec();
    let h0 = state0.hamiltonian_0;
    let t0 = state0.t;
    let sample = |t: f64, r: &[f64], p: &[f64]| PathSample { t, rho: r.to_vec(), phi: p.to_vec() };
    let mut samples = vec![sample(t0, &rho, &phi)];
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut drift: f64 = 0.0;
    let mut t = t0;
    for k in 1..=steps {
        let h = if k == steps { t0 + t_end - t } else { dt };
        let (r, p) = rk4(&grid, &rho, &phi, h);
        t = if k == steps { t0 + t_end } else { t0 + k as f64 * dt };
        if !r.iter().chain(&p).all(|v| v.is_finite()) {
            return Err(Error::Numerical { step: k, t, message: "non-finite geodesic state".into() });
        }
        let (neg, tot) = (0..r.len()).fold((0.0, 0.0), |(a, b), i| (a + w[i] * (-r[i]).max(0.0), b + w[i] * r[i].abs()));
        if tot > 0.0 && neg / tot > MAX_NEGATIVE_MASS_FRACTION {
            return Err(Error::Numerical {
                step: k,
                t,
                message: format!("negative mass fraction {:.3e} exceeds {MAX_NEGATIVE_MASS_FRACTION:e}", neg / tot),
            });
        }
        rho = r;
        phi = p;
        let hk = hamiltonian_values(&grid, &rho, &phi);
        drift = drift.max((hk - h0).abs() / h0.abs().max(1e-12));
        if k % every == 0 || k == steps {
            samples.push(sample(t, &rho, &phi));
        }
    }
    let final_state = GeodesicState {
        rho: RadialField::new(&grid, rho, Parity::Even)?,
        phi: RadialField::new(&grid, phi, Parity::Even)?,
        t,
        hamiltonian_0: h0,
    };
    Ok(GeodesicRun { samples, final_state, max_relative_h_drift: drift, steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAction {
    /// `∫ g_𝒦(φ, φ) dt` by the time trapezoid rule.
    pub value: f64,
    /// Largest `‖(ρ_{k+1} − ρ_k)/Δt + ½(𝒦φ_k + 𝒦φ_{k+1})‖_{L¹}` relative to `‖𝒦φ‖_{L¹}`.
    pub continuity_defect: f64,
}

/// Relative continuity defect above which [`path_action`] warns.
pub const CONTINUITY_WARN: f64 = 1e-2;

pub fn path_action(grid: &RadialGrid, samples: &[PathSample]) -> Result<PathAction> {
    if let Some(s) = samples.iter().find(|s| s.rho.len() != grid.n() || s.phi.len() != grid.n()) {
        return Err(Error::usage(format!("path sample at t = {} does not match the grid", s.t)));
    }
    let w = grid.weights();
    let l1 = |v: &[f64]| v.iter().zip(w).map(|(a, b)| a.abs() * b).sum::<f64>();
    let metric: Vec<f64> = samples
        .iter()
        .map(|s| {
            let l = scalar_potential_values(grid, &s.rho);
            let d = ddr_values(grid.h(), &s.phi);
            metric_values(grid, &s.rho, &l, &d, &d)
        })
        .collect();
    let flows: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| onsager_values(grid, &s.rho, &scalar_potential_values(grid, &s.rho), &ddr_values(grid.h(), &s.phi)))
        .collect();
    let mut value = 0.0;
    let mut defect: f64 = 0.0;
    for k in 1..samples.len() {
        let dt = samples[k].t - samples[k - 1].t;
        if !(dt > 0.0) {
            return Err(Error::usage("path sample times must increase"));
        }
        value += 0.5 * dt * (metric[k - 1] + metric[k]);
        let res: Vec<f64> = (0..grid.n())
            .map(|i| (samples[k].rho[i] - samples[k - 1].rho[i]) / dt + 0.5 * (flows[k - 1][i] + flows[k][i]))
            .collect();
        let scale = 0.5 * (l1(&flows[k - 1]) + l1(&flows[k]));
        if scale > 0.0 {
            defect = defect.max(l1(&res) / scale);
        } else {
            defect = defect.max(l1(&res));
        }
    }
    if defect > CONTINUITY_WARN {
        eprintln!("warning: path violates the continuity equation (relative defect {defect:.2e})");
    }
    Ok(PathAction { value, continuity_defect: defect })
}
