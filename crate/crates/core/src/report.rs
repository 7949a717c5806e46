//! Summary of a flow run (`report.json`).

use serde::Serialize;

use crate::config::SimConfig;
use crate::diagnostics::{self, DiagnosticsRecord, RateReport, SupNormFit, KAPPA_FISHER_REL_SLACK};
use crate::error::Result;
use crate::exec::Exec;
use crate::landau::SimOutput;

/// Per-step tolerance of the monotonicity verdicts.
pub const MONOTONE_STEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaFisherSummary {
    pub rows_checked: usize,
    pub all_hold: bool,
    /// Largest `lhs − slack·|dE/dt|` (≤ 0 when every row holds).
    pub worst_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqnposSummary {
    pub rows: usize,
    pub nonnegative_rows: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub rows: usize,
    pub t_end: f64,
    pub gradient_flow: bool,
    pub entropy_monotone: bool,
    pub second_moment_increasing: bool,
    pub max_step_entropy_increase: f64,
    pub max_step_moment_decrease: f64,
    pub max_mass_drift: f64,
    pub mass_drift_budget: f64,
    /// `max |dE/dt + D|/D` over rows with a finite difference.
    pub entropy_identity_max_rel_error: Option<f64>,
    /// `max |Hessian − d²E/dt²|/|d²E/dt²|` over rows with `t ∈ [0.1, 1]`.
    pub hessian_max_rel_error: Option<f64>,
    pub kappa_fisher: Option<KappaFisherSummary>,
    pub eqnpos: EqnposSummary,
    pub rate_bound: Option<RateReport>,
    pub supnorm_fit: Option<SupNormFit>,
    pub supnorm_fit_error: Option<String>,
    pub poincare_c_eps: f64,
}

pub fn kappa_fisher_rows(rows: &[DiagnosticsRecord]) -> KappaFisherSummary {
    let mut n = 0;
    let mut worst = f64::NEG_INFINITY;
    for r in rows {
        if let Some(d) = r.dedt_fd {
            n += 1;
            worst = worst.max(d + r.kappa * r.fisher_weighted - KAPPA_FISHER_REL_SLACK * d.abs());
        }
    }
    KappaFisherSummary { rows_checked: n, all_hold: worst <= 0.0, worst_excess: if n == 0 { 0.0 } else { worst } }
}

fn max_opt(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

pub fn build_report(config: &SimConfig, out: &SimOutput, exec: Exec) -> Result<RunReport> {
    let rows = &out.records;
    let gradient_flow = config.alpha == 1.0;
    let entropy_monotone = out.max_step_entropy_increase <= MONOTONE_STEP_TOL
        && rows.windows(2).all(|w| w[1].entropy <= w[0].entropy + MONOTONE_STEP_TOL);
    let second_moment_increasing = out.max_step_moment_decrease <= MONOTONE_STEP_TOL
        && rows.windows(2).all(|w| w[1].second_moment >= w[0].second_moment - MONOTONE_STEP_TOL);
    let ident = max_opt(rows.iter().filter_map(|r| r.dedt_fd.map(|d| (d + r.dissipation).abs() / r.dissipation.abs())));
    let hess = max_opt(rows.iter().filter(|r| r.t >= 0.1 - 1e-12 && r.t <= 1.0 + 1e-12).filter_map(|r| {
        r.d2edt2_fd.map(|d2| (r.hessian_value - d2).abs() / d2.abs())
    }));
    let eq: Vec<f64> = rows.iter().map(|r| r.eqnpos_value).collect();
    let (fit, fit_err) = match diagnostics::supnorm_fit(rows) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let grid = &out.grid;
    let probes = diagnostics::default_probe_family(grid);
    let c_eps = diagnostics::poincare_probe(grid, &out.final_state.rho, &probes, config.poincare_eps, exec)?;
    Ok(RunReport {
        rows: rows.len(),
        t_end: out.final_state.t,
        gradient_flow,
        entropy_monotone,
        second_moment_increasing,
        max_step_entropy_increase: out.max_step_entropy_increase,
        max_step_moment_decrease: out.max_step_moment_decrease,
        max_mass_drift: out.max_mass_drift,
        mass_drift_budget: config.mass_drift_budget,
        entropy_identity_max_rel_error: if gradient_flow { ident } else { None },
        hessian_max_rel_error: if gradient_flow { hess } else { None },
        kappa_fisher: gradient_flow.then(|| kappa_fisher_rows(rows)),
        eqnpos: EqnposSummary {
            rows: eq.len(),
            nonnegative_rows: eq.iter().filter(|v| **v >= 0.0).count(),
            min: eq.iter().copied().fold(f64::INFINITY, f64::min),
            max: eq.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
        rate_bound: if gradient_flow { Some(diagnostics::rate_bound_check(rows, config.gamma)?) } else { None },
        supnorm_fit: fit,
        supnorm_fit_error: fit_err,
        poincare_c_eps: c_eps,
    })
}
