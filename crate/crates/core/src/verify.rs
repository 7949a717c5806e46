//! The identity suite behind `iso-landau verify`.
//!
//! Every threshold lives in [`TOLERANCES`]:
//!
//! | check | n | tolerance | measured quantity |
//! |---|---|---|---|
//! | `dissipation_triple` | 513 | 1e-2 | max pairwise relative gap of closed form, double integral and metric form, three densities |
//! | `gaussian_dissipation` | 513 | 1e-3 | `|D(M) − 0.08979|` |
//! | `onsager_rhs_consistency` | 2049 | 1e-3 | `‖𝒦_ρ log ρ − rhs‖∞/‖rhs‖∞`, Gaussian and smoothed ball |
//! | `hessian_vs_fd` | 513 | 1e-2 | max relative gap of Hessian formula and `d²𝓔/dt²` for `t ∈ [0.1, 1]` |
//! | `entropy_identity` | 513 | 1e-3 | max relative gap of `d𝓔/dt` and `−D` over interior rows |
//! | `mass_drift` | 513 | 1e-6 | `max |m(t) − m(0)|` |
//! | `metric_positivity` | 513 | 1e-10 | `max(0, −g(φ,φ))/scale`, 100 seeded φ on five densities |
//! | `metric_symmetry` | 513 | 1e-12 | `|g(φ,ψ) − g(ψ,φ)|/scale` |
//! | `hamiltonian_drift` | 513 | 1e-6 | relative H drift on the reference geodesic |
//! | `time_reversal` | 513 | 1e-4 | `‖ρ(0.5 → 0.5 reversed) − ρ₀‖_{L¹}` |
//! | `laplacian_commutation` | 2049 | 1e-4 | `max |∇·(−Δ)^{-1}(−∇ρ) − ρ|` |
//! | `w1_closed_form` | 2049 | 1e-4 | ball pair and point-vs-ball CDF distances |
//! | `w1_oracle` | 9³ | 5e-2 | relative gap of CDF formula and transport oracle, three pairs |
//! | `kappa_formula` | n/a | 1e-7 | `|κ(3/2) − 0.0178846|` |

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::SimConfig;
use crate::diagnostics;
use crate::error::Result;
use crate::exec::Exec;
use crate::geometry::{self, CloudSpec, GeodesicState};
use crate::grid::{ddr_values, div_values, l1_distance, Density, Parity, RadialField, RadialGrid};
use crate::init;
use crate::landau;
use crate::potential::{scalar_potential_values, vector_potential_values};

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub name: &'static str,
    pub tolerance: f64,
    pub n: usize,
}

pub const TOLERANCES: &[Tolerance] = &[
    Tolerance { name: "dissipation_triple", tolerance: 1e-2, n: 513 },
    Tolerance { name: "gaussian_dissipation", tolerance: 1e-3, n: 513 },
    Tolerance { name: "onsager_rhs_consistency", tolerance: 1e-3, n: 2049 },
    Tolerance { name: "hessian_vs_fd", tolerance: 1e-2, n: 513 },
    Tolerance { name: "entropy_identity", tolerance: 1e-3, n: 513 },
    Tolerance { name: "mass_drift", tolerance: 1e-6, n: 513 },
    Tolerance { name: "metric_positivity", tolerance: 1e-10, n: 513 },
    Tolerance { name: "metric_symmetry", tolerance: 1e-12, n: 513 },
    Tolerance { name: "hamiltonian_drift", tolerance: 1e-6, n: 513 },
    Tolerance { name: "time_reversal", tolerance: 1e-4, n: 513 },
    Tolerance { name: "laplacian_commutation", tolerance: 1e-4, n: 2049 },
    Tolerance { name: "w1_closed_form", tolerance: 1e-4, n: 2049 },
    Tolerance { name: "w1_oracle", tolerance: 5e-2, n: 9 },
    Tolerance { name: "kappa_formula", tolerance: 1e-7, n: 0 },
];

pub fn tolerance(name: &str) -> &'static Tolerance {
    TOLERANCES.iter().find(|t| t.name == name).unwrap_or_else(|| panic!("no tolerance named {name}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyEntry {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub all_passed: bool,
    pub entries: Vec<VerifyEntry>,
}

fn entry(name: &str, measured: f64) -> VerifyEntry {
    let t = tolerance(name);
    VerifyEntry { name: name.into(), passed: measured.is_finite() && measured <= t.tolerance, measured, tolerance: t.tolerance }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Three smooth positive test densities on a grid.
pub fn test_densities(grid: &Arc<RadialGrid>) -> Result<Vec<Density>> {
    Ok(vec![
        init::gaussian(grid, 1.0, true)?,
        init::gaussian_mixture(grid, 0.8, 1.6, 0.3)?,
        init::smoothed_ball(grid, 1.5, 0.4)?,
    ])
}

pub fn dissipation_triple(n: usize, exec: Exec) -> Result<f64> {
    let g = RadialGrid::uniform(n, 12.0)?;
    let mut worst: f64 = 0.0;
    for rho in test_densities(&g)? {
        let d1 = diagnostics::dissipation_closed(&g, &rho)?;
        let d2 = diagnostics::dissipation_double_oracle(&g, &rho, exec)?;
        let logr = rho.field().map(|v| v.ln());
        let d3 = geometry::metric_form(&g, &rho, &logr, &logr)?;
        worst = worst.max(rel(d1, d2)).max(rel(d1, d3)).max(rel(d2, d3));
    }
    Ok(worst)
}

/// `‖𝒦_ρ log ρ − rhs‖∞/‖rhs‖∞` for one density.
pub fn onsager_consistency(rho: &Density) -> Result<f64> {
    let g = rho.grid();
    let logr = rho.field().map(|v| v.ln());
    let a = geometry::apply_onsager(g, rho, &logr)?;
    let b = landau::landau_rhs_divform(g, rho.field())?;
    Ok(a.sub(&b)?.max_abs() / b.max_abs())
}

/// `max |∇·V(−∇ρ) − ρ|` at interior nodes for the standard Gaussian.
pub fn laplacian_commutation(n: usize) -> Result<f64> {
    let g = RadialGrid::uniform(n, 12.0)?;
    let m = init::gaussian(&g, 1.0, true)?;
    let d: Vec<f64> = ddr_values(g.h(), m.values()).into_iter().map(|v| -v).collect();
    let v = vector_potential_values(&g, &d);
    let div = div_values(g.nodes(), g.h(), &v);
    Ok((0..n - 1).map(|i| (div[i] - m.values()[i]).abs()).fold(0.0, f64::max))
}

/// The five densities and a seeded smooth even potential family for positivity checks.
pub fn random_potential(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> RadialField {
    let coef: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let width = rng.random_range(1.0..4.0);
    let rm = grid.r_max();
    RadialField::from_fn(grid, Parity::Even, |r| {
        let s: f64 = coef.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * r / rm).cos()).sum();
        s * (-r * r / (2.0 * width * width)).exp()
    })
}

pub fn positivity_densities(grid: &Arc<RadialGrid>) -> Result<Vec<Density>> {
    Ok(vec![
        init::gaussian(grid, 1.0, true)?,
        init::gaussian(grid, 0.7, true)?,
        init::gaussian(grid, 1.5, true)?,
        init::gaussian_mixture(grid, 0.8, 1.6, 0.3)?,
        init::smoothed_ball(grid, 1.5, 0.4)?,
    ])
}

/// Returns `(worst negativity, worst asymmetry)`, both relative to `∫ρLρ|∇φ|²`.
pub fn metric_positivity_symmetry(n: usize, draws: usize, seed: u64) -> Result<(f64, f64)> {
    let g = RadialGrid::uniform(n, 12.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut neg, mut asym): (f64, f64) = (0.0, 0.0);
    for rho in positivity_densities(&g)? {
        let l = scalar_potential_values(&g, rho.values());
        for _ in 0..draws {
            let phi = random_potential(&g, &mut rng);
            let psi = random_potential(&g, &mut rng);
            let d = ddr_values(g.h(), phi.values());
            let scale = g.integrate_values(&(0..n).map(|i| rho.values()[i] * l[i] * d[i] * d[i]).collect::<Vec<_>>());
            let q = geometry::metric_form(&g, &rho, &phi, &phi)?;
            neg = neg.max((-q).max(0.0) / scale);
            let a = geometry::metric_form(&g, &rho, &phi, &psi)?;
            let b = geometry::metric_form(&g, &rho, &psi, &phi)?;
            asym = asym.max((a - b).abs() / scale);
        }
    }
    Ok((neg, asym))
}

/// Reference geodesic: standard Gaussian on `n` nodes over `[0, 8]`,
/// `Φ₀ = A exp(−r²/(2w²))`.
pub fn reference_geodesic(n: usize, amplitude: f64, width: f64) -> Result<GeodesicState> {
    let g = RadialGrid::uniform(n, 8.0)?;
    let m = init::gaussian(&g, 1.0, true)?;
    let phi = RadialField::from_fn(&g, Parity::Even, |r| amplitude * (-r * r / (2.0 * width * width)).exp());
    GeodesicState::new(&m, &phi)
}

/// `(relative H drift over [0, t_end], L¹ time-reversal error at t_end/2)`.
pub fn geodesic_checks(state: &GeodesicState, t_end: f64, dt: f64) -> Result<(f64, f64)> {
    let run = geometry::geodesic_integrate(state, t_end, dt, usize::MAX)?;
    let half = geometry::geodesic_integrate(state, 0.5 * t_end, dt, usize::MAX)?;
    let mut back = half.final_state.clone();
    back.phi = back.phi.scale(-1.0);
    back.t = 0.0;
    let ret = geometry::geodesic_integrate(&back, 0.5 * t_end, dt, usize::MAX)?;
    let g = state.rho.grid();
    Ok((run.max_relative_h_drift, l1_distance(g, ret.final_state.rho.values(), state.rho.values())))
}

/// `max` error of the two closed-form `W₁` cases.
pub fn w1_closed_forms(n: usize) -> Result<f64> {
    let g = RadialGrid::uniform(n, 4.0)?;
    let b1 = init::uniform_ball(&g, 1.0)?;
    let b2 = init::uniform_ball(&g, 2.0)?;
    let e1 = (geometry::w1_radial(&b1, &b2)? - 0.75).abs();
    let point = vec![1.0; n];
    let e2 = (geometry::w1_from_cdfs(&g, &point, &geometry::radial_cdf(&g, &b2)) - 1.5).abs();
    Ok(e1.max(e2))
}

/// The three transport test pairs on a grid: ball 1 vs ball 2, ball 1 vs ball
/// 1.5, Gaussian vs wider Gaussian. Each comes with its cloud half-widths.
pub fn w1_pairs(grid: &Arc<RadialGrid>) -> Result<Vec<(Density, Density, f64, f64)>> {
    Ok(vec![
        (init::uniform_ball(grid, 1.0)?, init::uniform_ball(grid, 2.0)?, 1.0, 2.0),
        (init::uniform_ball(grid, 1.0)?, init::uniform_ball(grid, 1.5)?, 1.0, 1.5),
        (gaussian_cut(grid, 0.5)?, gaussian_cut(grid, 0.8)?, 1.5, 2.4),
    ])
}

/// Gaussian truncated at three widths and renormalized, so it fits a finite cloud.
pub fn gaussian_cut(grid: &Arc<RadialGrid>, sigma: f64) -> Result<Density> {
    let f = init::gaussian_profile(sigma);
    Density::new(RadialField::from_fn(grid, Parity::Even, |r| if r <= 3.0 * sigma { f(r) } else { 0.0 }), true)
}

pub fn w1_oracle_agreement(m: usize, exec: Exec) -> Result<f64> {
    let g = RadialGrid::uniform(2049, 4.0)?;
    let mut worst: f64 = 0.0;
    for (a, b, h0, h1) in w1_pairs(&g)? {
        let exact = geometry::w1_radial(&a, &b)?;
        let lp = geometry::w1_lp_oracle(&a, &b, &CloudSpec { m, half_width0: h0, half_width1: h1 }, exec)?;
        worst = worst.max((lp - exact).abs() / exact);
    }
    Ok(worst)
}

/// Relative gaps of the trace rows against the entropy identity and the
/// Hessian formula (the latter restricted to `t ∈ [t_lo, t_hi]`).
pub fn trace_gaps(rows: &[diagnostics::DiagnosticsRecord], t_lo: f64, t_hi: f64) -> (f64, f64) {
    let mut ident: f64 = 0.0;
    let mut hess: f64 = 0.0;
    for r in rows {
        if let Some(d) = r.dedt_fd {
            ident = ident.max((d + r.dissipation).abs() / r.dissipation.abs());
        }
        if let Some(d2) = r.d2edt2_fd {
            if r.t >= t_lo - 1e-12 && r.t <= t_hi + 1e-12 {
                hess = hess.max((r.hessian_value - d2).abs() / d2.abs());
            }
        }
    }
    (ident, hess)
}

/// Configuration of the verification flow run.
pub fn verify_run_config(n: usize) -> SimConfig {
    SimConfig { n, r_max: 12.0, t_end: 1.0, cfl_safety: 0.25, every: 10, ..SimConfig::default() }
}

pub fn run_verify(config: &SimConfig, exec: Exec) -> Result<VerifyReport> {
    let mut e = Vec::new();
    e.push(entry("dissipation_triple", dissipation_triple(tolerance("dissipation_triple").n, exec)?));
    {
        let g = RadialGrid::uniform(tolerance("gaussian_dissipation").n, 12.0)?;
        let d = diagnostics::dissipation_closed(&g, &init::gaussian(&g, 1.0, true)?)?;
        e.push(entry("gaussian_dissipation", (d - 0.08979).abs()));
    }
    {
        let g = RadialGrid::uniform(tolerance("onsager_rhs_consistency").n, 12.0)?;
        let a = onsager_consistency(&init::gaussian(&g, 1.0, true)?)?;
        let b = onsager_consistency(&init::smoothed_ball(&g, 1.5, 0.4)?)?;
        e.push(entry("onsager_rhs_consistency", a.max(b)));
    }
    {
        let out = landau::simulate(&verify_run_config(tolerance("hessian_vs_fd").n)).map_err(|f| f.error)?;
        let (ident, hess) = trace_gaps(&out.records, 0.1, 1.0);
        e.push(entry("hessian_vs_fd", hess));
        e.push(entry("entropy_identity", ident));
        e.push(entry("mass_drift", out.max_mass_drift));
    }
    let (neg, asym) = metric_positivity_symmetry(tolerance("metric_positivity").n, 20, config.seed)?;
    e.push(entry("metric_positivity", neg));
    e.push(entry("metric_symmetry", asym));
    {
        let s = reference_geodesic(tolerance("hamiltonian_drift").n, config.geodesic.amplitude, config.geodesic.width)?;
        let (drift, rev) = geodesic_checks(&s, config.geodesic.t_end, config.geodesic.dt)?;
        e.push(entry("hamiltonian_drift", drift));
        e.push(entry("time_reversal", rev));
    }
    e.push(entry("laplacian_commutation", laplacian_commutation(tolerance("laplacian_commutation").n)?));
    e.push(entry("w1_closed_form", w1_closed_forms(tolerance("w1_closed_form").n)?));
    e.push(entry("w1_oracle", w1_oracle_agreement(tolerance("w1_oracle").n, exec)?));
    e.push(entry("kappa_formula", (diagnostics::kappa(1.5) - 0.0178846).abs()));
    Ok(VerifyReport { all_passed: e.iter().all(|x| x.passed), entries: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_tolerance_is_named_once() {
        for (i, t) in TOLERANCES.iter().enumerate() {
            assert!(TOLERANCES[i + 1..].iter().all(|u| u.name != t.name));
            assert!(t.tolerance > 0.0);
        }
    }

    #[test]
    fn random_potentials_are_even_and_seeded() {
        let g = RadialGrid::uniform(65, 8.0).unwrap();
        let a = random_potential(&g, &mut ChaCha8Rng::seed_from_u64(1));
        let b = random_potential(&g, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a.values(), b.values());
        assert_eq!(a.parity(), Parity::Even);
    }
}
