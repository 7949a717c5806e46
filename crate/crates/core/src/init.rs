//! Initial densities used by the CLI, the acceptance suite and the tests.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::config::{InitKind, InitSpec};
use crate::error::{Error, Result};
use crate::grid::{Density, Parity, RadialField, RadialGrid};

/// Isotropic Gaussian `exp(−r²/2σ²)/(2πσ²)^{3/2}` sampled at the nodes (not renormalized).
pub fn gaussian_profile(sigma: f64) -> impl Fn(f64) -> f64 {
    let c = (2.0 * PI * sigma * sigma).powf(-1.5);
    move |r| c * (-0.5 * r * r / (sigma * sigma)).exp()
}

pub fn gaussian(grid: &Arc<RadialGrid>, sigma: f64, normalize: bool) -> Result<Density> {
    if !(sigma > 0.0) {
        return Err(Error::config("init.sigma", "must be positive"));
    }
    Density::new(RadialField::from_fn(grid, Parity::Even, gaussian_profile(sigma)), normalize)
}

/// Unit-mass uniform ball. A node sitting on the jump gets half the interior
/// value, the trapezoid convention for a step.
pub fn uniform_ball(grid: &Arc<RadialGrid>, radius: f64) -> Result<Density> {
    if !(radius > 0.0) || radius > grid.r_max() {
        return Err(Error::config("init.radius", format!("must lie in (0, r_max], got {radius}")));
    }
    let tol = 1e-9 * grid.h();
    let f = RadialField::from_fn(grid, Parity::Even, |r| {
        if (r - radius).abs() <= tol {
            0.5
        } else if r < radius {
            1.0
        } else {
            0.0
        }
    });
    Density::new(f, true)
}

/// Unit-mass ball with a logistic edge of the given width: `1/(1 + e^{(r−R)/δ})`.
pub fn smoothed_ball(grid: &Arc<RadialGrid>, radius: f64, width: f64) -> Result<Density> {
    if !(radius > 0.0) || !(width > 0.0) {
        return Err(Error::config("init.radius", "radius and edge width must be positive"));
    }
    let f = RadialField::from_fn(grid, Parity::Even, |r| 1.0 / (1.0 + ((r - radius) / width).exp()));
    Density::new(f, true)
}

/// Unit-mass mixture `(1−p)·M_{σ1} + p·M_{σ2}` of two centered Gaussians.
pub fn gaussian_mixture(grid: &Arc<RadialGrid>, sigma1: f64, sigma2: f64, p: f64) -> Result<Density> {
    let (g1, g2) = (gaussian_profile(sigma1), gaussian_profile(sigma2));
    let f = RadialField::from_fn(grid, Parity::Even, |r| (1.0 - p) * g1(r) + p * g2(r));
    Density::new(f, true)
}

/// Density described by a configuration section (`init` or `distance`), on `grid`.
pub fn from_spec(grid: &Arc<RadialGrid>, spec: &InitSpec, section: &str) -> Result<Density> {
    match spec.kind {
        InitKind::Gaussian => gaussian(grid, spec.sigma, spec.normalize),
        InitKind::Ball => uniform_ball(grid, spec.radius),
        InitKind::SmoothedBall => smoothed_ball(grid, spec.radius, spec.edge),
        InitKind::File => {
            let key = format!("{section}.path");
            let path = spec.path.as_ref().ok_or_else(|| Error::config(&key, "missing"))?;
            let snap = crate::io::read_snapshot(path)?;
            if snap.n != grid.n() || snap.r_max != grid.r_max() {
                return Err(Error::config(
                    &key,
                    format!(
                        "snapshot grid (n={}, r_max={}) differs from the configured grid (n={}, r_max={})",
                        snap.n,
                        snap.r_max,
                        grid.n(),
                        grid.r_max()
                    ),
                ));
            }
            Density::new(RadialField::new(grid, snap.values, Parity::Even)?, spec.normalize)
        }
    }
}
