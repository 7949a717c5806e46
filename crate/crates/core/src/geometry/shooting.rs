//! `W_K` estimate by shooting: find Φ₀ whose geodesic from ρ₀ reaches ρ₁ at
//! `t = 1`, then report `√(2H(ρ₀, Φ₀))`. Φ₀ lives on a span of twelve centered
//! Gaussians and is fitted by Levenberg–Marquardt.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{l1_distance, Density, Parity, RadialField, RadialGrid};

use super::geodesic::{geodesic_integrate, GeodesicState};

pub const BASIS_SIZE: usize = 12;
const BASIS_WIDTH_MIN: f64 = 0.3;
const BASIS_WIDTH_MAX: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub dt: f64,
    /// Convergence when `‖ρ(1) − ρ₁‖_{L¹} < rtol`.
    pub rtol: f64,
    pub max_iter: usize,
    pub exec: Exec,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions { dt: 1e-2, rtol: 1e-4, max_iter: 60, exec: Exec::auto() }
    }
}

#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub wk_estimate: f64,
    pub phi0: RadialField,
    pub coefficients: Vec<f64>,
    pub terminal_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// The JSON shooting report.
#[derive(Debug, Clone, Serialize)]
pub struct ShootingReport {
    pub wk_estimate: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ShootingResult {
    pub fn report(&self) -> ShootingReport {
        ShootingReport {
            wk_estimate: self.wk_estimate,
            residual: self.terminal_residual,
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

/// Widths `0.3 … 4.0`, geometrically spaced.
pub fn basis_widths() -> [f64; BASIS_SIZE] {
    let ratio = (BASIS_WIDTH_MAX / BASIS_WIDTH_MIN).powf(1.0 / (BASIS_SIZE - 1) as f64);
    std::array::from_fn(|k| BASIS_WIDTH_MIN * ratio.powi(k as i32))
}

pub fn basis_potential(grid: &std::sync::Arc<RadialGrid>, coefficients: &[f64]) -> RadialField {
    let widths = basis_widths();
    RadialField::from_fn(grid, Parity::Even, |r| {
        coefficients.iter().zip(&widths).map(|(c, w)| c * (-r * r / (2.0 * w * w)).exp()).sum()
    })
}

struct Problem<'a> {
    rho0: &'a Density,
    target: &'a [f64],
    sqrt_w: Vec<f64>,
    dt: f64,
}

impl Problem<'_> {
    /// Terminal density, or `None` when the geodesic leaves the admissible set.
    fn shoot(&self, c: &[f64]) -> Option<Vec<f64>> {
        let phi = basis_potential(self.rho0.grid(), c);
        let s = GeodesicState::new(self.rho0, &phi).ok()?;
        let run = geodesic_integrate(&s, 1.0, self.dt, usize::MAX).ok()?;
        Some(run.final_state.rho.into_values())
    }

    fn residual(&self, rho1: &[f64]) -> DVector<f64> {
        DVector::from_iterator(rho1.len(), (0..rho1.len()).map(|i| self.sqrt_w[i] * (rho1[i] - self.target[i])))
    }
}

pub fn wk_distance_shooting(rho0: &Density, rho1: &Density, opts: &ShootingOptions) -> Result<ShootingResult> {
    let grid = rho0.grid();
    if !grid.matches(rho1.grid()) {
        return Err(Error::usage("endpoint densities live on different grids"));
    }
    let scale = rho0.mass().abs().max(rho1.mass().abs()).max(1.0);
    if (rho0.mass() - rho1.mass()).abs() > 1e-8 * scale {
        return Err(Error::usage(format!(
            "endpoint masses differ: {} vs {}",
            rho0.mass(),
            rho1.mass()
        )));
    }
    let p = Problem {
        rho0,
        target: rho1.values(),
        sqrt_w: grid.weights().iter().map(|w| w.sqrt()).collect(),
        dt: opts.dt,
    };
    let mut c = vec![0.0; BASIS_SIZE];
    let mut end = p.shoot(&c).ok_or_else(|| Error::Numerical { step: 0, t: 0.0, message: "stationary geodesic failed".into() })?;
    let mut res = p.residual(&end);
    let mut cost = res.norm_squared();
    let mut l1 = l1_distance(grid, &end, p.target);
    let mut lambda = 1e-3;
    let mut iterations = 0;

    while l1 >= opts.rtol && iterations < opts.max_iter {
        iterations += 1;
        let cols = opts.exec.map(BASIS_SIZE, |k| {
            let step = 1e-6 * c[k].abs().max(1.0);
            let mut ck = c.clone();
            ck[k] += step;
            p.shoot(&ck).map(|e| (p.residual(&e) - &res) / step)
        });
        let Some(cols) = cols.into_iter().collect::<Option<Vec<_>>>() else { break };
        let j = DMatrix::from_columns(&cols);
        let a = j.transpose() * &j;
        let g = j.transpose() * &res;
        let mut accepted = false;
        for _ in 0..12 {
            let mut m = a.clone();
            for d in 0..BASIS_SIZE {
                m[(d, d)] += lambda * a[(d, d)].max(1e-14);
            }
            let Some(delta) = m.lu().solve(&(-&g)) else {
                lambda *= 4.0;
                continue;
            };
            let trial: Vec<f64> = c.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            if let Some(e) = p.shoot(&trial) {
                let r = p.residual(&e);
                let tc = r.norm_squared();
                if tc < cost {
                    c = trial;
                    end = e;
                    res = r;
                    cost = tc;
                    l1 = l1_distance(grid, &end, p.target);
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let phi0 = basis_potential(grid, &c);
    let state = GeodesicState::new(rho0, &phi0)?;
    let h = state.hamiltonian_0.max(0.0);
    Ok(ShootingResult {
        wk_estimate: (2.0 * h).sqrt(),
        phi0: state.phi,
        coefficients: c,
        terminal_residual: l1,
        iterations,
        converged: l1 < opts.rtol,
    })
}
