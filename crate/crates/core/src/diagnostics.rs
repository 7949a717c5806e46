//! Scalar functionals monitored along the flow: entropy, dissipation by two
//! independent routes, the κ–Fisher relation, the entropy Hessian, the
//! convergence-rate condition and bound, sup-norm fits and the ε-Poincaré probe.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{ddr_values, second_derivative_values, Density, RadialField, RadialGrid};
use crate::potential::{scalar_potential_values, vector_potential_values};

/// Below this density value, quotients by ρ are dropped from integrands.
pub const RHO_FLOOR: f64 = 1e-30;

/// Largest grid accepted by [`dissipation_double_oracle`].
pub const MAX_DOUBLE_ORACLE_NODES: usize = 1025;

/// Default γ for the positivity condition and rate bound.
pub const DEFAULT_GAMMA: f64 = 0.1;

/// Slack of the rate-bound inequality.
pub const RATE_SLACK: f64 = 1e-6;

/// Relative slack of the κ–Fisher inequality.
pub const KAPPA_FISHER_REL_SLACK: f64 = 1e-6;

/// One output row of a run. Time derivatives are filled afterwards from neighbouring rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub entropy: f64,
    #[serde(rename = "dEdt_fd")]
    pub dedt_fd: Option<f64>,
    pub dissipation: f64,
    pub second_moment: f64,
    pub kappa: f64,
    pub fisher_weighted: f64,
    pub sup_rho: f64,
    #[serde(rename = "sup_Lrho")]
    pub sup_lrho: f64,
    pub hessian_value: f64,
    #[serde(rename = "d2Edt2_fd")]
    pub d2edt2_fd: Option<f64>,
    pub cube_norm: f64,
    pub eqnpos_value: f64,
    pub rate_alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mass: f64,
    pub second_moment: f64,
    pub cube_norm: f64,
    pub sup_rho: f64,
    pub sup_lrho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianTerms {
    pub total: f64,
    pub terms: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaFisher {
    pub lhs: f64,
    pub kappa: f64,
    pub fisher_weighted: f64,
    pub holds: bool,
}

fn check(grid: &RadialGrid, rho: &Density) -> Result<()> {
    if grid.matches(rho.grid()) {
        Ok(())
    } else {
        Err(Error::usage("density and grid differ"))
    }
}

fn weighted_sum(grid: &RadialGrid, f: impl Fn(usize) -> f64) -> f64 {
    grid.weights().iter().enumerate().fold(0.0, |acc, (i, w)| acc + w * f(i))
}

/// `Lρ` of a density (nonnegative already, so no clamping needed).
fn potential_of(grid: &RadialGrid, rho: &Density) -> Vec<f64> {
    scalar_potential_values(grid, rho.values())
}

/// `∫ρ log ρ` with `0 log 0 = 0`.
pub fn entropy(grid: &RadialGrid, rho: &Density) -> Result<f64> {
    check(grid, rho)?;
    let v = rho.values();
    Ok(weighted_sum(grid, |i| if v[i] > 0.0 { v[i] * v[i].ln() } else { 0.0 }))
}

/// `D = ∫ Lρ |∇ρ|²/ρ − ∫ρ²`.
pub fn dissipation_closed(grid: &RadialGrid, rho: &Density) -> Result<f64> {
    check(grid, rho)?;
    let v = rho.values();
    let l = potential_of(grid, rho);
    let d = ddr_values(grid.h(), v);
    Ok(weighted_sum(grid, |i| {
        let fisher = if v[i] >= RHO_FLOOR { d[i] * d[i] / v[i] } else { 0.0 };
        l[i] * fisher - v[i] * v[i]
    }))
}

/// Angular average of `1/|x−y|` over the relative angle, for `|x| = r`, `|y| = s`.
pub fn angular_mean_inverse_distance(r: f64, s: f64) -> f64 {
    1.0 / r.max(s)
}

/// Angular average of `cos θ/|x−y|`. Only the `ℓ = 1` Legendre mode survives.
pub fn angular_mean_cos_inverse_distance(r: f64, s: f64) -> f64 {
    let (lo, hi) = if r < s { (r, s) } else { (s, r) };
    lo / (3.0 * hi * hi)
}

/// The symmetrized double integral
/// `(1/8π)∬ ρ(x)ρ(y) |∇log ρ(x) − ∇log ρ(y)|² / |x−y|`
/// reduced to the two radii with the angular averages above. O(n²).
pub fn dissipation_double_oracle(grid: &RadialGrid, rho: &Density, exec: Exec) -> Result<f64> {
    check(grid, rho)?;
    if grid.n() > MAX_DOUBLE_ORACLE_NODES {
        return Err(Error::Resource(format!(
            "double-integral oracle accepts at most {MAX_DOUBLE_ORACLE_NODES} nodes, got {}",
            grid.n()
        )));
    }
    let v = rho.values();
    let r = grid.nodes();
    let w = grid.weights();
    let p = ddr_values(grid.h(), v);
    // ρ a² and ρ a with a = ρ'/ρ
    let q: Vec<f64> = v.iter().zip(&p).map(|(&x, &d)| if x >= RHO_FLOOR { d * d / x } else { 0.0 }).collect();
    let rows = exec.map(grid.n(), |i| {
        if w[i] == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in 1..grid.n() {
            let k0 = angular_mean_inverse_distance(r[i], r[j]);
            let k1 = angular_mean_cos_inverse_distance(r[i], r[j]);
            acc += w[j] * ((q[i] * v[j] + v[i] * q[j]) * k0 - 2.0 * p[i] * p[j] * k1);
        }
        w[i] * acc
    });
    Ok(rows.iter().sum::<f64>() / (8.0 * PI))
}

/// `κ = 1/(8π(√E + 1))`.
pub fn kappa(second_moment: f64) -> f64 {
    1.0 / (8.0 * PI * (second_moment.max(0.0).sqrt() + 1.0))
}

/// `∫ |∇√ρ|²/(1+|x|)`.
pub fn fisher_weighted(grid: &RadialGrid, rho: &Density) -> Result<f64> {
    check(grid, rho)?;
    let sq: Vec<f64> = rho.values().iter().map(|v| v.sqrt()).collect();
    let d = ddr_values(grid.h(), &sq);
    let r = grid.nodes();
    Ok(weighted_sum(grid, |i| d[i] * d[i] / (1.0 + r[i])))
}

/// `dE/dt + κ ∫|∇√ρ|²/(1+r) ≤ 0`, with relative slack on `|dE/dt|`.
pub fn kappa_fisher_check(grid: &RadialGrid, rho: &Density, dedt_fd: f64) -> Result<KappaFisher> {
    let m = moments_and_sups(grid, rho)?;
    let k = kappa(m.second_moment);
    let f = fisher_weighted(grid, rho)?;
    let lhs = dedt_fd + k * f;
    Ok(KappaFisher { lhs, kappa: k, fisher_weighted: f, holds: lhs <= KAPPA_FISHER_REL_SLACK * dedt_fd.abs() })
}

/// `Φ = −log ρ` and the nodes where it is trusted.
fn log_potential(rho: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let phi = rho.iter().map(|v| -(v.max(1e-300)).ln()).collect();
    let mask = rho.iter().map(|v| *v >= RHO_FLOOR).collect();
    (phi, mask)
}

/// The four terms of the closed-form Riemannian Hessian of the entropy at
/// `Φ = −log ρ`:
///
/// ```text
/// −(3/2)∫ρ²Lρ|∇Φ|²  +  ∫ρ²∇Φ·(−Δ)^{-1}(ρ∇Φ)  −  (1/4)∫∇ρ·∇(Lρ)²|∇Φ|²  +  ∫ρ(Lρ)²‖∇²Φ‖²
/// ```
pub fn hessian_entropy(grid: &RadialGrid, rho: &Density) -> Result<HessianTerms> {
    check(grid, rho)?;
    let v = rho.values();
    let h = grid.h();
    let r = grid.nodes();
    let l = potential_of(grid, rho);
    let drho = ddr_values(h, v);
    let (phi, mask) = log_potential(v);
    let dphi: Vec<f64> = (0..v.len()).map(|i| if mask[i] && i > 0 { -drho[i] / v[i] } else { 0.0 }).collect();
    let d2phi = second_derivative_values(h, &phi);
    let neg_drho: Vec<f64> = drho.iter().map(|d| -d).collect();
    let vpot = vector_potential_values(grid, &neg_drho);
    let l2: Vec<f64> = l.iter().map(|x| x * x).collect();
    let dl2 = ddr_values(h, &l2);

    let t1 = -1.5 * weighted_sum(grid, |i| v[i] * v[i] * l[i] * dphi[i] * dphi[i]);
    let t2 = weighted_sum(grid, |i| v[i] * v[i] * dphi[i] * vpot[i]);
    let t3 = -0.25 * weighted_sum(grid, |i| drho[i] * dl2[i] * dphi[i] * dphi[i]);
    let t4 = weighted_sum(grid, |i| {
        if !mask[i] {
            return 0.0;
        }
        let hess = if i == 0 {
            3.0 * d2phi[0] * d2phi[0]
        } else {
            d2phi[i] * d2phi[i] + 2.0 * (dphi[i] / r[i]).powi(2)
        };
        v[i] * l2[i] * hess
    });
    Ok(HessianTerms { total: t1 + t2 + t3 + t4, terms: [t1, t2, t3, t4] })
}

pub fn validate_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 / 7.0 {
        Ok(())
    } else {
        Err(Error::config("diag.gamma", format!("must lie in the open interval (0, 1/7), got {gamma}")))
    }
}

/// `∫ (2γρ − |∇ρ|²Lρ/ρ²)(ρ∇Φ·(−Δ)^{-1}(ρ∇Φ) + 3ρ²)` at `Φ = −log ρ`.
pub fn eqnpos_check(grid: &RadialGrid, rho: &Density, gamma: f64) -> Result<f64> {
    validate_gamma(gamma)?;
    check(grid, rho)?;
    let v = rho.values();
    let l = potential_of(grid, rho);
    let drho = ddr_values(grid.h(), v);
    let vpot = vector_potential_values(grid, &drho);
    Ok(weighted_sum(grid, |i| {
        let q = if v[i] >= RHO_FLOOR { drho[i] * drho[i] * l[i] / (v[i] * v[i]) } else { 0.0 };
        // ρ∇Φ = −∇ρ, and V is linear, so the product of the two signs cancels
        (2.0 * gamma * v[i] - q) * (drho[i] * vpot[i] + 3.0 * v[i] * v[i])
    }))
}

/// `α = (1 − 7γ)/2`.
pub fn rate_alpha(gamma: f64) -> f64 {
    (1.0 - 7.0 * gamma) / 2.0
}

pub fn moments_and_sups(grid: &RadialGrid, rho: &Density) -> Result<Moments> {
    check(grid, rho)?;
    let v = rho.values();
    let r = grid.nodes();
    let l = potential_of(grid, rho);
    Ok(Moments {
        mass: grid.integrate_values(v),
        second_moment: weighted_sum(grid, |i| 0.5 * r[i] * r[i] * v[i]),
        cube_norm: weighted_sum(grid, |i| v[i] * v[i] * v[i]),
        sup_rho: v.iter().fold(0.0, |m, x| m.max(*x)),
        sup_lrho: l.iter().fold(0.0, |m, x| m.max(*x)),
    })
}

/// All state-only columns of a record; the time differences stay empty.
pub fn record_state(grid: &RadialGrid, rho: &Density, t: f64, gamma: f64) -> Result<DiagnosticsRecord> {
    let m = moments_and_sups(grid, rho)?;
    Ok(DiagnosticsRecord {
        t,
        mass: m.mass,
        entropy: entropy(grid, rho)?,
        dedt_fd: None,
        dissipation: dissipation_closed(grid, rho)?,
        second_moment: m.second_moment,
        kappa: kappa(m.second_moment),
        fisher_weighted: fisher_weighted(grid, rho)?,
        sup_rho: m.sup_rho,
        sup_lrho: m.sup_lrho,
        hessian_value: hessian_entropy(grid, rho)?.total,
        d2edt2_fd: None,
        cube_norm: m.cube_norm,
        eqnpos_value: eqnpos_check(grid, rho, gamma)?,
        rate_alpha: rate_alpha(gamma),
    })
}

/// Three-point first and second differences of the entropy on the (possibly
/// nonuniform) row times. Endpoint rows keep `None`.
pub fn fill_time_derivatives(rows: &mut [DiagnosticsRecord]) {
    for i in 1..rows.len().saturating_sub(1) {
        let (a, b, c) = (&rows[i - 1], &rows[i], &rows[i + 1]);
        let h1 = b.t - a.t;
        let h2 = c.t - b.t;
        if !(h1 > 0.0 && h2 > 0.0) {
            continue;
        }
        let den = h1 * h2 * (h1 + h2);
        let d1 = (h1 * h1 * c.entropy - h2 * h2 * a.entropy + (h2 * h2 - h1 * h1) * b.entropy) / den;
        let d2 = 2.0 * (h1 * c.entropy - (h1 + h2) * b.entropy + h2 * a.entropy) / den;
        rows[i].dedt_fd = Some(d1);
        rows[i].d2edt2_fd = Some(d2);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub t: f64,
    #[serde(rename = "dEdt_fd")]
    pub dedt_fd: f64,
    pub tail_integral: f64,
    pub bound: f64,
    /// `bound − dEdt_fd`; the inequality holds when this is `≥ −slack`.
    pub margin: f64,
    pub eqnpos_value: f64,
    pub asserted: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub gamma: f64,
    pub rate_alpha: f64,
    pub slack: f64,
    pub rows: Vec<RateRow>,
    pub asserted_rows: usize,
    /// Rows where the positivity condition failed; the bound is not asserted there.
    pub assumption_violated_rows: usize,
    pub all_asserted_hold: bool,
}

/// `dE/dt ≤ −α ∫_t^{t_end} ∫ρ³` on every row with a finite difference; the
/// tail integral is the trapezoid rule over the remaining rows.
pub fn rate_bound_check(rows: &[DiagnosticsRecord], gamma: f64) -> Result<RateReport> {
    validate_gamma(gamma)?;
    let alpha = rate_alpha(gamma);
    let n = rows.len();
    let mut tail = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        tail[i] = tail[i + 1] + 0.5 * (rows[i + 1].t - rows[i].t) * (rows[i].cube_norm + rows[i + 1].cube_norm);
    }
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let Some(dedt) = row.dedt_fd else { continue };
        let bound = -alpha * tail[i];
        let margin = bound - dedt;
        let asserted = row.eqnpos_value >= 0.0;
        out.push(RateRow {
            t: row.t,
            dedt_fd: dedt,
            tail_integral: tail[i],
            bound,
            margin,
            eqnpos_value: row.eqnpos_value,
            asserted,
            holds: margin >= -RATE_SLACK,
        });
    }
    let asserted_rows = out.iter().filter(|r| r.asserted).count();
    Ok(RateReport {
        gamma,
        rate_alpha: alpha,
        slack: RATE_SLACK,
        asserted_rows,
        assumption_violated_rows: out.len() - asserted_rows,
        all_asserted_hold: out.iter().filter(|r| r.asserted).all(|r| r.holds),
        rows: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    /// Smallest `c` with `y ≤ c(1/t+1)^s` on every fitted row.
    pub constant: f64,
    /// `exp` of the least-squares intercept.
    pub constant_lsq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupNormFit {
    pub rows: usize,
    pub rho: PowerFit,
    pub lrho: PowerFit,
    pub s1_admissible: bool,
    pub s2_admissible: bool,
}

pub const MIN_FIT_ROWS: usize = 8;

fn power_fit(ts: &[f64], ys: &[f64]) -> PowerFit {
    let x: Vec<f64> = ts.iter().map(|t| (1.0 / t + 1.0).ln()).collect();
    let y: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let s = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - s * mx;
    let env = x.iter().zip(&y).map(|(a, b)| b - s * a).fold(f64::NEG_INFINITY, f64::max);
    PowerFit { exponent: s, constant: env.exp(), constant_lsq: b.exp() }
}

/// Fits `‖ρ‖∞ ≈ c₁(1/t+1)^{s₁}` and `‖Lρ‖∞ ≈ c₂(1/t+1)^{s₂}` over rows with `t > 0`.
pub fn supnorm_fit(rows: &[DiagnosticsRecord]) -> Result<SupNormFit> {
    let used: Vec<&DiagnosticsRecord> = rows.iter().filter(|r| r.t > 0.0 && r.sup_rho > 0.0 && r.sup_lrho > 0.0).collect();
    if used.len() < MIN_FIT_ROWS {
        return Err(Error::InsufficientData(format!(
            "sup-norm fit needs at least {MIN_FIT_ROWS} rows with t > 0, got {}",
            used.len()
        )));
    }
    let ts: Vec<f64> = used.iter().map(|r| r.t).collect();
    let rho = power_fit(&ts, &used.iter().map(|r| r.sup_rho).collect::<Vec<_>>());
    let lrho = power_fit(&ts, &used.iter().map(|r| r.sup_lrho).collect::<Vec<_>>());
    Ok(SupNormFit {
        rows: used.len(),
        s1_admissible: rho.exponent > 1.0,
        s2_admissible: lrho.exponent > 1.0 / 3.0,
        rho,
        lrho,
    })
}

impl PowerFit {
    pub fn bound(&self, t: f64) -> f64 {
        self.constant * (1.0 / t + 1.0).powf(self.exponent)
    }
}

/// Default probe family: twenty even Gaussian bumps over five centers and four widths.
pub fn default_probe_family(grid: &std::sync::Arc<RadialGrid>) -> Vec<RadialField> {
    let mut out = Vec::with_capacity(20);
    for c in [0.0, 0.5, 1.0, 2.0, 3.0] {
        for w in [0.25, 0.5, 1.0, 2.0] {
            out.push(RadialField::from_fn(grid, crate::grid::Parity::Even, move |r| {
                let g = |x: f64| (-x * x / (2.0 * w * w)).exp();
                if c == 0.0 {
                    g(r)
                } else {
                    g(r - c) + g(r + c)
                }
            }));
        }
    }
    out
}

/// Largest `(∫ρφ² − ε∫Lρ|∇φ|²)/∫φ²` over the family, floored at 0.
pub fn poincare_probe(grid: &RadialGrid, rho: &Density, phis: &[RadialField], eps: f64, exec: Exec) -> Result<f64> {
    check(grid, rho)?;
    if phis.is_empty() {
        return Err(Error::usage("poincare_probe needs at least one test function"));
    }
    if let Some(p) = phis.iter().find(|p| !grid.matches(p.grid()) || p.parity() != crate::grid::Parity::Even) {
        return Err(Error::usage(format!("probe functions must be EVEN fields on the density grid, got {:?}", p.parity())));
    }
    let v = rho.values();
    let l = potential_of(grid, rho);
    let ratios = exec.map(phis.len(), |k| {
        let phi = phis[k].values();
        let d = ddr_values(grid.h(), phi);
        let num = weighted_sum(grid, |i| v[i] * phi[i] * phi[i] - eps * l[i] * d[i] * d[i]);
        let den = weighted_sum(grid, |i| phi[i] * phi[i]);
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(Error::usage(format!("probe function {k} has ∫φ² = 0")))
        }
    });
    ratios.into_iter().try_fold(0.0f64, |m, r| r.map(|x| m.max(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init;
    use std::sync::Arc;

    fn std_grid(n: usize) -> Arc<RadialGrid> {
        RadialGrid::uniform(n, 12.0).unwrap()
    }

    #[test]
    fn gaussian_entropy_and_moments() {
        let g = std_grid(2049);
        let m = init::gaussian(&g, 1.0, true).unwrap();
        let e = entropy(&g, &m).unwrap();
        assert!((e + 1.5 * (2.0 * PI * std::f64::consts::E).ln()).abs() < 1e-5, "{e}");
        let mo = moments_and_sups(&g, &m).unwrap();
        assert!((mo.second_moment - 1.5).abs() < 1e-6);
        let cube = (2.0 * PI).powf(-3.0) * 3f64.powf(-1.5);
        assert!((mo.cube_norm - cube).abs() < 1e-5, "{} {cube}", mo.cube_norm);
        assert!((mo.sup_lrho - (2.0 * PI).powf(-1.5)).abs() < 1e-6);
    }

    #[test]
    fn zero_density_gives_zero_everywhere() {
        let g = std_grid(129);
        let z = Density::zero(&g);
        assert_eq!(entropy(&g, &z).unwrap(), 0.0);
        assert_eq!(dissipation_closed(&g, &z).unwrap(), 0.0);
        let h = hessian_entropy(&g, &z).unwrap();
        assert_eq!(h.terms, [0.0; 4]);
        assert_eq!(eqnpos_check(&g, &z, 0.1).unwrap(), 0.0);
        let m = moments_and_sups(&g, &z).unwrap();
        assert_eq!([m.mass, m.second_moment, m.cube_norm, m.sup_rho, m.sup_lrho], [0.0; 5]);
    }

    #[test]
    fn ball_entropy_and_moment() {
        let g = RadialGrid::uniform(4097, 4.0).unwrap();
        let b = init::uniform_ball(&g, 1.0).unwrap();
        let e = entropy(&g, &b).unwrap();
        assert!((e - (3.0 / (4.0 * PI)).ln()).abs() < 3e-3, "{e}");
        assert!((moments_and_sups(&g, &b).unwrap().second_moment - 0.3).abs() < 1e-3);
    }

    #[test]
    fn gaussian_dissipation() {
        let g = std_grid(2049);
        let m = init::gaussian(&g, 1.0, true).unwrap();
        let exact = (2.0 * PI).powf(-1.5) * 5.0 * 2f64.sqrt() / 4.0 - (4.0 * PI).powf(-1.5);
        let d = dissipation_closed(&g, &m).unwrap();
        assert!((d - exact).abs() < 1e-4, "{d} vs {exact}");
        assert!(d > 0.05);
    }

    #[test]
    fn cos_kernel_matches_elementary_antiderivative() {
        let elementary = |r: f64, s: f64| {
            let a = r * r + s * s;
            let b = 2.0 * r * s;
            let (p, m) = (r + s, (r - s).abs());
            (2.0 * a * p - 2.0 / 3.0 * p.powi(3) - 2.0 * a * m + 2.0 / 3.0 * m.powi(3)) / (2.0 * b * b)
        };
        for (r, s) in [(1.0, 0.5), (0.3, 2.0), (1.0, 1.0), (2.5, 2.4)] {
            let k = angular_mean_cos_inverse_distance(r, s);
            assert!((k - elementary(r, s)).abs() < 1e-12 * k.max(1.0), "{r} {s}");
        }
    }

    #[test]
    fn double_oracle_rejects_large_grids() {
        let g = std_grid(2049);
        let m = init::gaussian(&g, 1.0, true).unwrap();
        assert!(matches!(dissipation_double_oracle(&g, &m, Exec::Sequential), Err(Error::Resource(_))));
    }

    #[test]
    fn kappa_formula() {
        assert!((kappa(0.0) - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!((kappa(1.5) - 0.0178846).abs() < 1e-7);
    }

    #[test]
    fn gamma_domain() {
        assert!(validate_gamma(0.125).is_ok());
        assert!(matches!(validate_gamma(0.15), Err(Error::Config { .. })));
        assert!((rate_alpha(0.1) - 0.15).abs() < 1e-15);
    }

    fn synthetic(ts: &[f64], f: impl Fn(f64) -> f64) -> Vec<DiagnosticsRecord> {
        ts.iter()
            .map(|&t| DiagnosticsRecord {
                t,
                mass: 1.0,
                entropy: -t,
                dedt_fd: None,
                dissipation: 0.0,
                second_moment: 0.0,
                kappa: 0.0,
                fisher_weighted: 0.0,
                sup_rho: f(t),
                sup_lrho: f(t),
                hessian_value: 0.0,
                d2edt2_fd: None,
                cube_norm: 1.0,
                eqnpos_value: 1.0,
                rate_alpha: 0.15,
            })
            .collect()
    }

    #[test]
    fn supnorm_fit_recovers_power_laws() {
        let ts: Vec<f64> = (1..=12).map(|k| 0.25 * k as f64).collect();
        let f = supnorm_fit(&synthetic(&ts, |t| (1.0 / t + 1.0).powi(2))).unwrap();
        assert!((f.rho.exponent - 2.0).abs() < 1e-6);
        assert!((f.rho.constant - 1.0).abs() < 1e-9);
        assert!(f.rho.exponent > 1.0 && f.s1_admissible);
        let f = supnorm_fit(&synthetic(&ts, |_| 0.3)).unwrap();
        assert!(f.rho.exponent.abs() < 1e-9);
        assert!(matches!(supnorm_fit(&synthetic(&ts[..7], |_| 1.0)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn finite_differences_on_nonuniform_rows() {
        let ts = [0.0, 0.1, 0.25, 0.3, 0.5];
        let mut rows = synthetic(&ts, |_| 1.0);
        for r in rows.iter_mut() {
            r.entropy = r.t * r.t;
        }
        fill_time_derivatives(&mut rows);
        assert!(rows[0].dedt_fd.is_none() && rows[4].dedt_fd.is_none());
        for r in &rows[1..4] {
            assert!((r.dedt_fd.unwrap() - 2.0 * r.t).abs() < 1e-12);
            assert!((r.d2edt2_fd.unwrap() - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rate_bound_on_trivial_tail() {
        let mut rows = synthetic(&[0.0, 1.0], |_| 1.0);
        rows[1].dedt_fd = Some(-1e-3);
        let rep = rate_bound_check(&rows, 0.1).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.rows[0].tail_integral, 0.0);
        assert!(rep.all_asserted_hold);
        rows[1].dedt_fd = Some(1e-3);
        assert!(!rate_bound_check(&rows, 0.1).unwrap().all_asserted_hold);
        rows[1].eqnpos_value = -1.0;
        let rep = rate_bound_check(&rows, 0.1).unwrap();
        assert!(rep.all_asserted_hold && rep.assumption_violated_rows == 1);
    }

    #[test]
    fn poincare_constant_function() {
        let g = std_grid(513);
        let m = init::gaussian(&g, 1.0, true).unwrap();
        let one = RadialField::from_fn(&g, crate::grid::Parity::Even, |_| 1.0);
        let c = poincare_probe(&g, &m, &[one], 0.1, Exec::Sequential).unwrap();
        let vol: f64 = g.weights().iter().sum();
        assert!((c - m.mass() / vol).abs() < 1e-12);
        assert!(poincare_probe(&g, &m, &[], 0.1, Exec::Sequential).is_err());
        let far = RadialField::from_fn(&g, crate::grid::Parity::Even, |r| (-(r - 11.0).powi(2) * 4.0).exp());
        let c = poincare_probe(&g, &m, &[far], 0.1, Exec::Sequential).unwrap();
        assert!(c.abs() < 1e-12);
    }
}
