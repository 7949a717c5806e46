//! Right-hand sides and explicit time integration of the isotropic Landau flow.

use std::sync::Arc;

use crate::config::SimConfig;
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{ddr_values, div_values, laplacian_values, Density, Parity, RadialField, RadialGrid};
use crate::init;
use crate::potential::scalar_potential_values;

/// Which form of the equation to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsForm {
    /// `∇·(Lρ∇ρ − ρ∇Lρ)`; conserves mass to rounding.
    Divergence,
    /// `Lρ Δρ + αρ²`.
    NonDivergence { alpha: f64 },
}

impl RhsForm {
    pub fn for_alpha(alpha: f64) -> Self {
        if alpha == 1.0 {
            RhsForm::Divergence
        } else {
            RhsForm::NonDivergence { alpha }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub cfl_safety: f64,
    pub dt_max: f64,
    pub rho_floor: f64,
    pub mass_drift_budget: f64,
}

impl StepControl {
    pub fn new(cfl_safety: f64, dt_max: f64, rho_floor: f64, mass_drift_budget: f64) -> Result<Self> {
        if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
            return Err(Error::config("time.cfl_safety", format!("must lie in (0, 1], got {cfl_safety}")));
        }
        if !(dt_max > 0.0) {
            return Err(Error::config("time.dt_max", "must be positive"));
        }
        if !(rho_floor >= 0.0) {
            return Err(Error::config("time.rho_floor", "must be nonnegative"));
        }
        Ok(StepControl { cfl_safety, dt_max, rho_floor, mass_drift_budget })
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub rho: Density,
    pub t: f64,
    pub step_count: usize,
    pub mass_drift: f64,
    pub initial_mass: f64,
}

impl FlowState {
    pub fn new(rho: Density) -> Self {
        FlowState { initial_mass: rho.mass(), rho, t: 0.0, step_count: 0, mass_drift: 0.0 }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::config("flow.alpha", format!("must lie in (0, 1], got {alpha}")))
    }
}

pub(crate) fn rhs_values(grid: &RadialGrid, rho: &[f64], form: RhsForm) -> Vec<f64> {
    let src: Vec<f64> = rho.iter().map(|v| v.max(0.0)).collect();
    let l = scalar_potential_values(grid, &src);
    match form {
        RhsForm::Divergence => {
            let dr = ddr_values(grid.h(), rho);
            let dl = ddr_values(grid.h(), &l);
            let mut flux: Vec<f64> = (0..rho.len()).map(|i| l[i] * dr[i] - rho[i] * dl[i]).collect();
            flux[0] = 0.0;
            div_values(grid.nodes(), grid.h(), &flux)
        }
        RhsForm::NonDivergence { alpha } => {
            let lap = laplacian_values(grid.nodes(), grid.h(), rho);
            (0..rho.len()).map(|i| l[i] * lap[i] + alpha * rho[i] * rho[i]).collect()
        }
    }
}

fn check_field(grid: &RadialGrid, rho: &RadialField) -> Result<()> {
    if !grid.matches(rho.grid()) {
        return Err(Error::usage("density and grid differ"));
    }
    if rho.parity() != Parity::Even {
        return Err(Error::usage("the Landau right-hand side expects an EVEN density"));
    }
    Ok(())
}

/// `∇·(Lρ∇ρ − ρ∇Lρ)`.
pub fn landau_rhs_divform(grid: &RadialGrid, rho: &RadialField) -> Result<RadialField> {
    check_field(grid, rho)?;
    RadialField::new(rho.grid(), rhs_values(grid, rho.values(), RhsForm::Divergence), Parity::Even)
}

/// `Lρ Δρ + αρ²`, `α ∈ (0, 1]`.
pub fn landau_rhs_nondiv(grid: &RadialGrid, rho: &RadialField, alpha: f64) -> Result<RadialField> {
    check_alpha(alpha)?;
    check_field(grid, rho)?;
    RadialField::new(rho.grid(), rhs_values(grid, rho.values(), RhsForm::NonDivergence { alpha }), Parity::Even)
}

/// `cfl_safety · h² / (2 max Lρ + ε)`, capped by `dt_max`.
pub fn cfl_dt(grid: &RadialGrid, rho: &Density, ctrl: &StepControl) -> f64 {
    let l = scalar_potential_values(grid, rho.values());
    let lmax = l.iter().fold(0.0f64, |m, v| m.max(*v));
    (ctrl.cfl_safety * grid.h() * grid.h() / (2.0 * lmax + f64::EPSILON)).min(ctrl.dt_max)
}

/// One classical RK4 step of size `dt`, then clipping, mass accounting and `t += dt`.
pub fn step_rk4(state: &FlowState, ctrl: &StepControl, form: RhsForm, dt: f64) -> Result<FlowState> {
    if let RhsForm::NonDivergence { alpha } = form {
        check_alpha(alpha)?;
    }
    let grid = Arc::clone(state.rho.grid());
    let step = state.step_count + 1;
    let y = state.rho.values();
    let n = y.len();
    let blowup = |stage: usize| Error::Numerical {
        step,
        t: state.t,
        message: format!("non-finite value in RK4 stage {stage}"),
    };
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());

    let k1 = rhs_values(&grid, y, form);
    if !finite(&k1) {
        return Err(blowup(1));
    }
    let stage = |k: &[f64], c: f64| -> Vec<f64> { (0..n).map(|i| y[i] + c * dt * k[i]).collect() };
    let k2 = rhs_values(&grid, &stage(&k1, 0.5), form);
    if !finite(&k2) {
        return Err(blowup(2));
    }
    let k3 = rhs_values(&grid, &stage(&k2, 0.5), form);
    if !finite(&k3) {
        return Err(blowup(3));
    }
    let k4 = rhs_values(&grid, &stage(&k3, 1.0), form);
    if !finite(&k4) {
        return Err(blowup(4));
    }
    let next: Vec<f64> = (0..n).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    if !finite(&next) {
        return Err(blowup(5));
    }
    let rho = Density::clipped(&grid, next, ctrl.rho_floor)?;
    let mass_drift = (rho.mass() - state.initial_mass).abs();
    if mass_drift > ctrl.mass_drift_budget {
        return Err(Error::MassDrift { step, drift: mass_drift, budget: ctrl.mass_drift_budget });
    }
    Ok(FlowState { rho, t: state.t + dt, step_count: step, mass_drift, initial_mass: state.initial_mass })
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub grid: Arc<RadialGrid>,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: FlowState,
    pub max_mass_drift: f64,
    /// Largest entropy increase over a single step (≤ 0 means monotone).
    pub max_step_entropy_increase: f64,
    /// Largest second-moment decrease over a single step.
    pub max_step_moment_decrease: f64,
}

/// A run that stopped early: the error and everything recorded up to it.
#[derive(Debug)]
pub struct SimFailure {
    pub error: Error,
    pub partial: Option<Box<SimOutput>>,
}

impl From<Error> for SimFailure {
    fn from(error: Error) -> Self {
        SimFailure { error, partial: None }
    }
}

/// Builds the initial density of a configuration.
pub fn initial_density(config: &SimConfig, grid: &Arc<RadialGrid>) -> Result<Density> {
    init::from_spec(grid, &config.init, "init")
}

/// Advances the configured initial density to `t_end`, recording a diagnostics
/// row every `every` steps, at every snapshot time and at `t_end`.
pub fn simulate(config: &SimConfig) -> std::result::Result<SimOutput, SimFailure> {
    config.validate()?;
    let grid = RadialGrid::uniform(config.n, config.r_max)?;
    let rho0 = initial_density(config, &grid)?;
    let ctrl = StepControl::new(config.cfl_safety, config.dt_max, config.rho_floor, config.mass_drift_budget)?;
    let form = RhsForm::for_alpha(config.alpha);

    let mut snap_times: Vec<f64> = config.snapshot_times.iter().copied().filter(|t| *t <= config.t_end).collect();
    snap_times.sort_by(f64::total_cmp);
    snap_times.dedup();
    let mut targets = snap_times.clone();
    targets.push(config.t_end);
    targets.retain(|t| *t > 0.0);

    let mut state = FlowState::new(rho0);
    let mut out = SimOutput {
        records: vec![diagnostics::record_state(&grid, &state.rho, 0.0, config.gamma)?],
        snapshots: Vec::new(),
        grid: Arc::clone(&grid),
        final_state: state.clone(),
        max_mass_drift: 0.0,
        max_step_entropy_increase: f64::NEG_INFINITY,
        max_step_moment_decrease: f64::NEG_INFINITY,
    };
    if snap_times.first() == Some(&0.0) {
        out.snapshots.push(Snapshot { t: 0.0, values: state.rho.values().to_vec() });
    }
    let mut entropy = out.records[0].entropy;
    let mut moment = out.records[0].second_moment;
    let mut next = 0;

    while next < targets.len() {
        let target = targets[next];
        let mut dt = cfl_dt(&grid, &state.rho, &ctrl);
        let hit = state.t + dt >= target - 1e-12 * target.max(1.0);
        if hit {
            dt = target - state.t;
        }
        let stepped = if dt > 0.0 { step_rk4(&state, &ctrl, form, dt) } else { Ok(state.clone()) };
        state = match stepped {
            Ok(s) => s,
            Err(error) => {
                diagnostics::fill_time_derivatives(&mut out.records);
                out.final_state = state;
                return Err(SimFailure { error, partial: Some(Box::new(out)) });
            }
        };
        if hit {
            state.t = target;
            next += 1;
        }
        let e = diagnostics::entropy(&grid, &state.rho)?;
        let m = diagnostics::moments_and_sups(&grid, &state.rho)?.second_moment;
        out.max_step_entropy_increase = out.max_step_entropy_increase.max(e - entropy);
        out.max_step_moment_decrease = out.max_step_moment_decrease.max(moment - m);
        out.max_mass_drift = out.max_mass_drift.max(state.mass_drift);
        entropy = e;
        moment = m;

        let at_end = hit && next == targets.len();
        if state.step_count.is_multiple_of(config.every) || (hit && snap_times.contains(&target)) || at_end {
            out.records.push(diagnostics::record_state(&grid, &state.rho, state.t, config.gamma)?);
        }
        if hit && snap_times.contains(&target) {
            out.snapshots.push(Snapshot { t: target, values: state.rho.values().to_vec() });
        }
    }
    if out.max_step_entropy_increase == f64::NEG_INFINITY {
        out.max_step_entropy_increase = 0.0;
        out.max_step_moment_decrease = 0.0;
    }
    diagnostics::fill_time_derivatives(&mut out.records);
    out.final_state = state;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ctrl() -> StepControl {
        StepControl::new(0.5, 1e-2, 0.0, 1e-6).unwrap()
    }

    #[test]
    fn zero_density_is_stationary() {
        let g = RadialGrid::uniform(65, 4.0).unwrap();
        let z = RadialField::zeros(&g, Parity::Even);
        assert!(landau_rhs_divform(&g, &z).unwrap().values().iter().all(|v| *v == 0.0));
        assert!(landau_rhs_nondiv(&g, &z, 0.5).unwrap().values().iter().all(|v| *v == 0.0));
        let s = FlowState::new(Density::zero(&g));
        assert_eq!(cfl_dt(&g, &s.rho, &ctrl()), 1e-2);
        let s2 = step_rk4(&s, &ctrl(), RhsForm::Divergence, 1e-3).unwrap();
        assert_eq!(s2.rho.values(), s.rho.values());
        assert_eq!(s2.t, 1e-3);
        assert_eq!(s2.step_count, 1);
    }

    #[test]
    fn gaussian_rhs_at_origin() {
        let g = RadialGrid::uniform(2049, 12.0).unwrap();
        let m = init::gaussian(&g, 1.0, false).unwrap();
        let exact = -2.0 * (2.0 * PI).powi(-3);
        let d = landau_rhs_divform(&g, m.field()).unwrap().values()[0];
        let nd = landau_rhs_nondiv(&g, m.field(), 1.0).unwrap().values()[0];
        assert!((d - exact).abs() < 1e-6 * 8.0, "{d}");
        assert!((nd - exact).abs() < 1e-6, "{nd}");
        let half = landau_rhs_nondiv(&g, m.field(), 0.5).unwrap().values()[0];
        assert!((half + 2.5 * (2.0 * PI).powi(-3)).abs() < 1e-6, "{half}");
    }

    #[test]
    fn alpha_outside_range_is_a_config_error() {
        let g = RadialGrid::uniform(65, 4.0).unwrap();
        let z = RadialField::zeros(&g, Parity::Even);
        assert!(matches!(landau_rhs_nondiv(&g, &z, 0.0), Err(Error::Config { .. })));
        assert!(matches!(landau_rhs_nondiv(&g, &z, 1.5), Err(Error::Config { .. })));
    }

    #[test]
    fn cfl_matches_formula_and_scales_with_h_squared() {
        let g = RadialGrid::uniform(1201, 12.0).unwrap();
        let m = init::gaussian(&g, 1.0, false).unwrap();
        let c = StepControl::new(0.5, 1.0, 0.0, 1.0).unwrap();
        let dt = cfl_dt(&g, &m, &c);
        assert!((dt - 3.937e-4).abs() < 1e-6, "{dt}");
        let g2 = RadialGrid::uniform(2401, 12.0).unwrap();
        let dt2 = cfl_dt(&g2, &init::gaussian(&g2, 1.0, false).unwrap(), &c);
        assert!((dt / dt2 - 4.0).abs() < 1e-3);
    }

    #[test]
    fn one_step_decreases_entropy() {
        let g = RadialGrid::uniform(2049, 12.0).unwrap();
        let m = init::gaussian(&g, 1.0, true).unwrap();
        let s = FlowState::new(m);
        let dt = cfl_dt(&g, &s.rho, &ctrl());
        let s2 = step_rk4(&s, &ctrl(), RhsForm::Divergence, dt).unwrap();
        let before = diagnostics::entropy(&g, &s.rho).unwrap();
        let after = diagnostics::entropy(&g, &s2.rho).unwrap();
        assert!(after <= before + 1e-10);
        assert!(s2.mass_drift < 1e-12);
    }

    #[test]
    fn non_finite_state_reports_the_step() {
        let g = RadialGrid::uniform(65, 4.0).unwrap();
        let f = RadialField::from_fn(&g, Parity::Even, |_| 1e300);
        let s = FlowState::new(Density::new(f, false).unwrap());
        match step_rk4(&s, &ctrl(), RhsForm::Divergence, 1e-3) {
            Err(Error::Numerical { step, .. }) => assert_eq!(step, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mass_drift_over_budget_aborts() {
        let g = RadialGrid::uniform(65, 4.0).unwrap();
        let m = init::gaussian(&g, 1.0, true).unwrap();
        let tight = StepControl::new(0.5, 1e-2, 0.0, 1e-30).unwrap();
        let s = FlowState::new(m);
        assert!(matches!(step_rk4(&s, &tight, RhsForm::NonDivergence { alpha: 0.5 }, 1e-3), Err(Error::MassDrift { .. })));
    }

    #[test]
    fn zero_horizon_run_has_one_row() {
        let c = crate::config::parse_config("time.t_end = 0\ngrid.n = 129\ngrid.r_max = 8").unwrap();
        let out = simulate(&c).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].t, 0.0);
    }
}
