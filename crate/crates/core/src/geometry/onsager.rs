//! The Onsager operator `𝒦_ρΦ = ∇·(ρLρ∇Φ − ρ(−Δ)^{-1}(ρ∇Φ))`, its quadratic
//! form and the linear solve `σ = −𝒦_ρΦ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{ddr_values, div_values, Density, Parity, RadialField, RadialGrid};
use crate::potential::{scalar_potential_values, vector_potential_values};

/// `𝒦_ρ` on raw nodal values. `l` is `Lρ`, `dphi` the ODD profile of `∇Φ`.
pub(crate) fn onsager_values(grid: &RadialGrid, rho: &[f64], l: &[f64], dphi: &[f64]) -> Vec<f64> {
    let n = rho.len();
    let g: Vec<f64> = (0..n).map(|i| rho[i] * dphi[i]).collect();
    let v = vector_potential_values(grid, &g);
    let mut flux: Vec<f64> = (0..n).map(|i| rho[i] * l[i] * dphi[i] - rho[i] * v[i]).collect();
    flux[0] = 0.0;
    div_values(grid.nodes(), grid.h(), &flux)
}

/// `∫ρLρ u₁u₂ − ∫(ρu₁)·V(ρu₂)` on raw values, `u = ∇Φ`.
pub(crate) fn metric_values(grid: &RadialGrid, rho: &[f64], l: &[f64], du1: &[f64], du2: &[f64]) -> f64 {
    let n = rho.len();
    let g2: Vec<f64> = (0..n).map(|i| rho[i] * du2[i]).collect();
    let v2 = vector_potential_values(grid, &g2);
    let w = grid.weights();
    (0..n).fold(0.0, |acc, i| acc + w[i] * (rho[i] * l[i] * du1[i] * du2[i] - rho[i] * du1[i] * v2[i]))
}

fn check(grid: &RadialGrid, rho: &Density, phi: &RadialField) -> Result<()> {
    if !grid.matches(rho.grid()) || !grid.matches(phi.grid()) {
        return Err(Error::usage("density, potential and grid differ"));
    }
    if phi.parity() != Parity::Even {
        return Err(Error::usage("the potential Φ must be an EVEN field"));
    }
    Ok(())
}

pub fn apply_onsager(grid: &RadialGrid, rho: &Density, phi: &RadialField) -> Result<RadialField> {
    check(grid, rho, phi)?;
    let l = scalar_potential_values(grid, rho.values());
    let dphi = ddr_values(grid.h(), phi.values());
    RadialField::new(rho.grid(), onsager_values(grid, rho.values(), &l, &dphi), Parity::Even)
}

/// `g_𝒦 = ⟨Φ₁, −𝒦Φ₂⟩` written without the divergence. Nonnegative on the
/// diagonal: the quadrature corrections of `L` and `V` cancel here, leaving a
/// kernel whose off-diagonal weight is at most a third of the diagonal one.
pub fn metric_form(grid: &RadialGrid, rho: &Density, phi1: &RadialField, phi2: &RadialField) -> Result<f64> {
    check(grid, rho, phi1)?;
    check(grid, rho, phi2)?;
    let l = scalar_potential_values(grid, rho.values());
    let d1 = ddr_values(grid.h(), phi1.values());
    let d2 = ddr_values(grid.h(), phi2.values());
    Ok(metric_values(grid, rho.values(), &l, &d1, &d2))
}

/// `H = ½ g_𝒦(Φ, Φ)`.
pub fn hamiltonian(grid: &RadialGrid, rho: &Density, phi: &RadialField) -> Result<f64> {
    Ok(0.5 * metric_form(grid, rho, phi, phi)?)
}

/// Subtracts the ρ-weighted mean (no-op for zero mass).
pub(crate) fn gauge_fix(grid: &RadialGrid, rho: &[f64], phi: &mut [f64]) {
    let w = grid.weights();
    let (num, den) = (0..rho.len()).fold((0.0, 0.0), |(a, b), i| (a + w[i] * rho[i] * phi[i], b + w[i] * rho[i]));
    if den > 0.0 {
        let mean = num / den;
        phi.iter_mut().for_each(|p| *p -= mean);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub rtol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { rtol: 1e-8, max_iter: 5000, restart: 60 }
    }
}

#[derive(Debug, Clone)]
pub struct PotentialSolve {
    pub phi: RadialField,
    pub iterations: usize,
    /// `‖𝒦φ + σ‖/‖σ‖` in the grid-weighted L² norm.
    pub relative_residual: f64,
}

/// Solves `−𝒦_ρφ = σ` for mean-zero σ with defaults; see [`solve_potential_with`].
pub fn solve_potential(grid: &RadialGrid, rho: &Density, sigma: &RadialField) -> Result<RadialField> {
    Ok(solve_potential_with(grid, rho, sigma, &SolveOptions::default())?.phi)
}

/// Restarted GMRES on `φ ↦ −𝒦_ρφ`, right-preconditioned by the inverse of its
/// local part `−∇·(ρLρ∇·)` (radial quadrature), gauge-fixed to ρ-weighted
/// mean zero after each application.
pub fn solve_potential_with(grid: &RadialGrid, rho: &Density, sigma: &RadialField, opts: &SolveOptions) -> Result<PotentialSolve> {
    check(grid, rho, sigma)?;
    if !(rho.mass() > 0.0) {
        return Err(Error::usage("solve_potential needs a density of positive mass"));
    }
    let s = sigma.values();
    let w = grid.weights();
    let abs_mass = grid.integrate_values(&s.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let net = grid.integrate_values(s);
    if net.abs() > 1e-10 * abs_mass.max(f64::MIN_POSITIVE) {
        return Err(Error::usage(format!("source must have zero integral, got {net:e}")));
    }
    let norm = |v: &[f64]| (0..v.len()).fold(0.0, |a, i| a + w[i] * v[i] * v[i]).sqrt();
    let snorm = norm(s);
    if snorm == 0.0 {
        return Ok(PotentialSolve { phi: RadialField::zeros(rho.grid(), Parity::Even), iterations: 0, relative_residual: 0.0 });
    }

    let r = rho.values();
    let l = scalar_potential_values(grid, r);
    let op = |x: &[f64]| -> Vec<f64> {
        let d = ddr_values(grid.h(), x);
        onsager_values(grid, r, &l, &d).into_iter().map(|v| -v).collect()
    };
    let prec = local_inverse(grid, r, &l);
    let apply_m = |x: &[f64]| -> Vec<f64> {
        let mut y = prec(x);
        gauge_fix(grid, r, &mut y);
        y
    };

    let n = s.len();
    // grid-weighted inner product
    let dot = |a: &[f64], b: &[f64]| (0..n).fold(0.0, |acc, i| acc + w[i] * a[i] * b[i]);
    let mut x = vec![0.0; n];
    let mut iterations = 0;
    let mut res: Vec<f64> = s.to_vec();
    while iterations < opts.max_iter {
        let beta = norm(&res);
        if beta / snorm <= opts.rtol {
            break;
        }
        let m = opts.restart.min(opts.max_iter - iterations);
        let mut basis: Vec<Vec<f64>> = vec![res.iter().map(|v| v / beta).collect()];
        let mut hmat = DMatrix::<f64>::zeros(m + 1, m);
        let mut k_used = 0;
        for k in 0..m {
            let mut z = op(&apply_m(&basis[k]));
            for (j, b) in basis.iter().enumerate() {
                let hjk = dot(&z, b);
                hmat[(j, k)] = hjk;
                z.iter_mut().zip(b).for_each(|(zi, bi)| *zi -= hjk * bi);
            }
            let hn = norm(&z);
            hmat[(k + 1, k)] = hn;
            k_used = k + 1;
            iterations += 1;
            // small least-squares problem for the current residual estimate
            let y = lsq(&hmat.view((0, 0), (k + 2, k + 1)).into_owned(), beta);
            let mut e1 = DVector::<f64>::zeros(k + 2);
            e1[0] = beta;
            let est = (&e1 - hmat.view((0, 0), (k + 2, k + 1)) * &y).norm() / snorm;
            if hn <= 1e-300 || est <= opts.rtol {
                break;
            }
            basis.push(z.iter().map(|v| v / hn).collect());
        }
        let y = lsq(&hmat.view((0, 0), (k_used + 1, k_used)).into_owned(), beta);
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            update.iter_mut().zip(&basis[j]).for_each(|(u, b)| *u += yj * b);
        }
        let dx = apply_m(&update);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        gauge_fix(grid, r, &mut x);
        let ax = op(&x);
        res = (0..n).map(|i| s[i] - ax[i]).collect();
    }
    let rel = norm(&res) / snorm;
    if rel > opts.rtol {
        return Err(Error::NonConvergence { iterations, residual: rel });
    }
    Ok(PotentialSolve { phi: RadialField::new(rho.grid(), x, Parity::Even)?, iterations, relative_residual: rel })
}

fn lsq(h: &DMatrix<f64>, beta: f64) -> DVector<f64> {
    let mut rhs = DVector::<f64>::zeros(h.nrows());
    rhs[0] = beta;
    let svd = h.clone().svd(true, true);
    svd.solve(&rhs, 1e-14).unwrap_or_else(|_| DVector::zeros(h.ncols()))
}

/// Approximate inverse of `x ↦ −∇·(ρLρ∇x)`: integrate the source radially for
/// the flux, divide by the mobility (guarded), integrate again.
fn local_inverse<'a>(grid: &'a RadialGrid, rho: &'a [f64], l: &'a [f64]) -> impl Fn(&[f64]) -> Vec<f64> + 'a {
    let mob: Vec<f64> = rho.iter().zip(l).map(|(a, b)| a * b).collect();
    let floor = 1e-10 * mob.iter().fold(0.0f64, |m, v| m.max(*v));
    move |src: &[f64]| {
        let r = grid.nodes();
        let h = grid.h();
        let n = src.len();
        let mut cum = 0.0;
        let mut q = vec![0.0; n];
        for i in 1..n {
            cum += 0.5 * h * (r[i - 1] * r[i - 1] * src[i - 1] + r[i] * r[i] * src[i]);
            // −(r²ρLφ')' = r²σ  ⇒  φ' = −(∫s²σ)/(r²ρL)
            q[i] = -cum / (r[i] * r[i] * mob[i].max(floor));
        }
        let mut phi = vec![0.0; n];
        for i in 1..n {
            phi[i] = phi[i - 1] + 0.5 * h * (q[i - 1] + q[i]);
        }
        phi
    }
}
