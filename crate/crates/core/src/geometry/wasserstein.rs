//! `W₁` between radial densities: the CDF formula and a discrete transport oracle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{Density, RadialGrid};
use crate::potential::sample_radial_cloud;

use super::transport::{transport_cost, Atom};

/// Largest per-measure lattice accepted by [`w1_lp_oracle`].
pub const MAX_LP_CLOUD: usize = 15 * 15 * 15;

/// Radial mass function `F(r_i) = 4π∫₀^{r_i} s²ρ(s) ds` by cumulative trapezoid.
pub fn radial_cdf(grid: &RadialGrid, rho: &Density) -> Vec<f64> {
    let r = grid.nodes();
    let v = rho.values();
    let h = grid.h();
    let f = |i: usize| 4.0 * std::f64::consts::PI * r[i] * r[i] * v[i];
    let mut out = vec![0.0; grid.n()];
    for i in 1..grid.n() {
        out[i] = out[i - 1] + 0.5 * h * (f(i - 1) + f(i));
    }
    out
}

/// `∫₀^{r_max} |F₀ − F₁| dr` by the trapezoid rule.
pub fn w1_from_cdfs(grid: &RadialGrid, f0: &[f64], f1: &[f64]) -> f64 {
    let d: Vec<f64> = f0.iter().zip(f1).map(|(a, b)| (a - b).abs()).collect();
    let h = grid.h();
    (1..d.len()).fold(0.0, |acc, i| acc + 0.5 * h * (d[i - 1] + d[i]))
}

fn check_pair(rho0: &Density, rho1: &Density) -> Result<()> {
    if !rho0.grid().matches(rho1.grid()) {
        return Err(Error::usage("densities live on different grids"));
    }
    let scale = rho0.mass().max(rho1.mass()).max(1.0);
    if (rho0.mass() - rho1.mass()).abs() > 1e-8 * scale {
        return Err(Error::usage(format!("masses differ: {} vs {}", rho0.mass(), rho1.mass())));
    }
    Ok(())
}

pub fn w1_radial(rho0: &Density, rho1: &Density) -> Result<f64> {
    check_pair(rho0, rho1)?;
    let g = rho0.grid();
    Ok(w1_from_cdfs(g, &radial_cdf(g, rho0), &radial_cdf(g, rho1)))
}

/// Cartesian sampling of each measure: `m³` cell centers on its own cube of
/// the given half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudSpec {
    pub m: usize,
    pub half_width0: f64,
    pub half_width1: f64,
}

fn cloud(rho: &Density, m: usize, half_width: f64) -> Vec<Atom> {
    let g = rho.grid();
    let (samples, vol) = sample_radial_cloud(m, half_width, |r| g.interpolate(rho.values(), r));
    let mut atoms: Vec<Atom> = samples.into_iter().filter(|s| s.value > 0.0).map(|s| (s.point, s.value * vol)).collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    if total > 0.0 {
        let k = rho.mass() / total;
        atoms.iter_mut().for_each(|a| a.1 *= k);
    }
    atoms
}

/// Exact transport cost between the two sampled clouds (each rescaled to the density's mass).
pub fn w1_lp_oracle(rho0: &Density, rho1: &Density, spec: &CloudSpec, exec: Exec) -> Result<f64> {
    check_pair(rho0, rho1)?;
    if spec.m.pow(3) > MAX_LP_CLOUD {
        return Err(Error::Resource(format!("transport oracle accepts at most {MAX_LP_CLOUD} points per cloud, got {}", spec.m.pow(3))));
    }
    if rho0.mass() == 0.0 {
        return Ok(0.0);
    }
    let a = cloud(rho0, spec.m, spec.half_width0);
    let b = cloud(rho1, spec.m, spec.half_width1);
    transport_cost(&a, &b, exec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    /// `W₁/W_K` per pair; 0 when both vanish.
    pub ratios: Vec<f64>,
    /// Empirical lower bound on the comparison constant.
    pub max_ratio: f64,
    pub all_finite: bool,
}

/// Pairs of `(W₁, W_K)`.
pub fn w1_wk_inequality_report(pairs: &[(f64, f64)]) -> InequalityReport {
    let ratios: Vec<f64> = pairs
        .iter()
        .map(|&(w1, wk)| if w1 == 0.0 && wk == 0.0 { 0.0 } else { w1 / wk })
        .collect();
    InequalityReport {
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        all_finite: ratios.iter().all(|r| r.is_finite()),
        ratios,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init;

    #[test]
    fn ball_pair_and_point_mass() {
        let g = RadialGrid::uniform(2049, 4.0).unwrap();
        let b1 = init::uniform_ball(&g, 1.0).unwrap();
        let b2 = init::uniform_ball(&g, 2.0).unwrap();
        assert!((w1_radial(&b1, &b2).unwrap() - 0.75).abs() < 1e-4);
        assert_eq!(w1_radial(&b1, &b1).unwrap(), 0.0);
        let point = vec![1.0; g.n()];
        for (b, r) in [(&b1, 1.0), (&b2, 2.0)] {
            let w = w1_from_cdfs(&g, &point, &radial_cdf(&g, b));
            assert!((w - 0.75 * r).abs() < 1e-4, "{w}");
        }
    }

    #[test]
    fn mass_mismatch_and_size_limit() {
        let g = RadialGrid::uniform(129, 4.0).unwrap();
        let b1 = init::uniform_ball(&g, 1.0).unwrap();
        let heavy = Density::new(b1.field().scale(2.0), false).unwrap();
        assert!(matches!(w1_radial(&b1, &heavy), Err(Error::Usage(_))));
        let spec = CloudSpec { m: 16, half_width0: 1.0, half_width1: 1.0 };
        assert!(matches!(w1_lp_oracle(&b1, &b1, &spec, Exec::Sequential), Err(Error::Resource(_))));
    }

    #[test]
    fn oracle_is_zero_on_identical_clouds() {
        let g = RadialGrid::uniform(257, 4.0).unwrap();
        let b = init::uniform_ball(&g, 1.0).unwrap();
        let spec = CloudSpec { m: 5, half_width0: 1.0, half_width1: 1.0 };
        assert!(w1_lp_oracle(&b, &b, &spec, Exec::Sequential).unwrap().abs() < 1e-12);
    }

    #[test]
    fn report_conventions() {
        let r = w1_wk_inequality_report(&[(0.0, 0.0), (0.2, 0.1)]);
        assert_eq!(r.ratios, vec![0.0, 2.0]);
        assert_eq!(r.max_ratio, 2.0);
        assert!(r.all_finite);
    }
}
