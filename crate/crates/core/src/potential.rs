//! Newtonian (inverse-Laplacian) potentials of radial data.
//!
//! Both solvers evaluate the free-space Green's function in its radial form
//! with prefix/suffix sums over the grid quadrature, so each is a single O(n)
//! pass. In weighted form they read
//!
//! ```text
//! Lρ(r_i)   = Σ_j w_j ρ_j / (4π max(r_i, r_j))
//! Vg(r_i)   = Σ_j w_j g_j min(r_i, r_j) / (12π max(r_i, r_j)²)
//! ```
//!
//! i.e. the trapezoid rule applied to an integrand with a kink at `s = r_i`.
//! The leading Euler–Maclaurin term of that kink is removed analytically
//! (`∓ h² f(r_i)/12`), which makes both potentials fourth-order accurate away
//! from the truncation radius. The kernels are symmetric under the grid
//! weights: `Σ w a (L b) = Σ w b (L a)` and likewise for `V`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{Parity, RadialField, RadialGrid};

/// Largest Cartesian cloud accepted by [`potential_oracle_3d`].
pub const MAX_ORACLE_POINTS: usize = 40 * 40 * 40;

#[derive(Debug, Clone)]
pub struct PotentialResult {
    pub u: RadialField,
    /// `∫ρ dx` of the (clamped) source, for far-field and leakage checks.
    pub total_mass_used: f64,
    /// Nodes where the source was negative and got clamped to zero.
    pub clamped_nodes: usize,
}

/// `Lρ = (−Δ)^{-1}ρ` for an EVEN source. Negative source values are clamped to
/// zero inside the integral; the input is not modified.
pub fn newtonian_potential(grid: &RadialGrid, rho: &RadialField) -> Result<PotentialResult> {
    check_input(grid, rho, Parity::Even, "newtonian_potential")?;
    let clamped_nodes = rho.values().iter().filter(|v| **v < 0.0).count();
    let src: Vec<f64> = rho.values().iter().map(|v| v.max(0.0)).collect();
    let u = scalar_potential_values(grid, &src);
    Ok(PotentialResult {
        total_mass_used: grid.integrate_values(&src),
        u: rho.with_values(u, Parity::Even).with_units("potential"),
        clamped_nodes,
    })
}

/// Componentwise `(−Δ)^{-1}` of the radial vector field `g(r) x/|x|`: returns the
/// ODD profile `h` solving `−(h'' + 2h'/r − 2h/r²) = g`, `h(0) = 0`.
pub fn vector_newtonian_potential(grid: &RadialGrid, g: &RadialField) -> Result<PotentialResult> {
    check_input(grid, g, Parity::Odd, "vector_newtonian_potential")?;
    let h = vector_potential_values(grid, g.values());
    let mass = grid.integrate_values(&g.values().iter().map(|v| v.abs()).collect::<Vec<_>>());
    Ok(PotentialResult { u: g.with_values(h, Parity::Odd), total_mass_used: mass, clamped_nodes: 0 })
}

fn check_input(grid: &RadialGrid, f: &RadialField, parity: Parity, op: &str) -> Result<()> {
    if !grid.matches(f.grid()) {
        return Err(Error::usage(format!("{op}: field and grid differ")));
    }
    if f.parity() != parity {
        return Err(Error::usage(format!("{op}: expected a {parity:?} field")));
    }
    Ok(())
}

/// Scalar potential of nodal source values (no clamping).
pub(crate) fn scalar_potential_values(grid: &RadialGrid, src: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    let w = grid.weights();
    let n = src.len();
    let h2 = grid.h() * grid.h();
    let a: Vec<f64> = w.iter().zip(src).map(|(w, s)| w * s / (4.0 * PI)).collect();

    // suffix[i] = Σ_{j > i} a_j / r_j
    let mut suffix = vec![0.0; n];
    for i in (0..n - 1).rev() {
        suffix[i] = suffix[i + 1] + a[i + 1] / r[i + 1];
    }
    let mut u = vec![0.0; n];
    u[0] = suffix[0] + h2 * src[0] / 12.0;
    let mut prefix = a[0];
    for i in 1..n {
        prefix += a[i];
        u[i] = prefix / r[i] + suffix[i] - h2 * src[i] / 12.0;
    }
    u
}

/// Vector potential profile of ODD nodal values.
pub(crate) fn vector_potential_values(grid: &RadialGrid, g: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    let w = grid.weights();
    let n = g.len();
    let h2 = grid.h() * grid.h();
    let b: Vec<f64> = w.iter().zip(g).map(|(w, s)| w * s / (4.0 * PI)).collect();

    let mut suffix = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let rj = r[i + 1];
        suffix[i] = suffix[i + 1] + b[i + 1] / (rj * rj);
    }
    let mut out = vec![0.0; n];
    let mut prefix = 0.0;
    for i in 1..n {
        prefix += b[i] * r[i];
        let ri = r[i];
        out[i] = prefix / (3.0 * ri * ri) + ri * suffix[i] / 3.0 - h2 * g[i] / 12.0;
    }
    out
}

/// A sample of a density on a Cartesian cloud.
#[derive(Debug, Clone, Copy)]
pub struct CloudSample {
    pub point: [f64; 3],
    pub value: f64,
}

/// Cell-centered samples of the radial profile `f(|x|)` on an `m³` lattice
/// covering `[-half_width, half_width]³`. Returns the samples and the cell volume.
pub fn sample_radial_cloud(m: usize, half_width: f64, f: impl Fn(f64) -> f64) -> (Vec<CloudSample>, f64) {
    let side = 2.0 * half_width / m as f64;
    let c = |k: usize| -half_width + (k as f64 + 0.5) * side;
    let mut samples = Vec::with_capacity(m * m * m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let p = [c(i), c(j), c(k)];
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                samples.push(CloudSample { point: p, value: f(r) });
            }
        }
    }
    (samples, side * side * side)
}

/// Brute-force `∫ρ(y)/(4π|x−y|) dy` over a cloud with cell volume `cell_volume`.
///
/// A query closer to a sample than that cell's equivalent-ball radius `a` gets
/// the potential of a uniform ball of radius `a` instead of the singular point
/// term.
pub fn potential_oracle_3d(
    samples: &[CloudSample],
    cell_volume: f64,
    queries: &[[f64; 3]],
    exec: Exec,
) -> Result<Vec<f64>> {
    if samples.len() > MAX_ORACLE_POINTS {
        return Err(Error::Resource(format!(
            "potential oracle accepts at most {MAX_ORACLE_POINTS} cloud points, got {}",
            samples.len()
        )));
    }
    let a = (3.0 * cell_volume / (4.0 * PI)).cbrt();
    let out = exec.map(queries.len(), |q| {
        let x = queries[q];
        samples.iter().fold(0.0, |acc, s| {
            let d = dist(x, s.point);
            let term = if d < a {
                s.value * (3.0 * a * a - d * d) / 6.0
            } else {
                s.value * cell_volume / (4.0 * PI * d)
            };
            acc + term
        })
    });
    Ok(out)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Density;
    use crate::init;

    #[test]
    fn zero_source_gives_zero_potential() {
        let g = RadialGrid::uniform(65, 4.0).unwrap();
        let z = RadialField::zeros(&g, Parity::Even);
        assert!(newtonian_potential(&g, &z).unwrap().u.values().iter().all(|v| *v == 0.0));
        let z = RadialField::zeros(&g, Parity::Odd);
        assert!(vector_newtonian_potential(&g, &z).unwrap().u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn uniform_ball_potential() {
        let g = RadialGrid::uniform(2049, 8.0).unwrap();
        let ball = init::uniform_ball(&g, 1.0).unwrap();
        let u = newtonian_potential(&g, ball.field()).unwrap().u;
        let at = |r: f64| g.interpolate(u.values(), r);
        assert!((at(0.0) - 3.0 / (8.0 * PI)).abs() < 1e-4);
        assert!((at(1.0) - 1.0 / (4.0 * PI)).abs() < 1e-4);
        assert!((at(2.0) - 1.0 / (8.0 * PI)).abs() < 1e-4);
        // far field m/(4πr) at the last node
        assert!((u.values()[2048] - ball.mass() / (4.0 * PI * 8.0)).abs() < 1e-9);
    }

    #[test]
    fn negative_source_is_clamped_and_counted() {
        let g = RadialGrid::uniform(65, 4.0).unwrap();
        let f = RadialField::from_fn(&g, Parity::Even, |r| if r > 3.0 { -1e-12 } else { 1.0 });
        let p = newtonian_potential(&g, &f).unwrap();
        assert!(p.clamped_nodes > 0);
        let d = Density::clipped(&g, f.values().to_vec(), 0.0).unwrap();
        let q = newtonian_potential(&g, d.field()).unwrap();
        assert_eq!(p.u.values(), q.u.values());
    }

    #[test]
    fn parity_is_checked() {
        let g = RadialGrid::uniform(65, 4.0).unwrap();
        assert!(newtonian_potential(&g, &RadialField::zeros(&g, Parity::Odd)).is_err());
        assert!(vector_newtonian_potential(&g, &RadialField::zeros(&g, Parity::Even)).is_err());
    }

    #[test]
    fn kernels_are_weight_symmetric() {
        let g = RadialGrid::uniform(129, 6.0).unwrap();
        let r = g.nodes();
        let a: Vec<f64> = r.iter().map(|&x| (-(x - 1.0).powi(2)).exp()).collect();
        let b: Vec<f64> = r.iter().map(|&x| x * (-x * x / 3.0).exp()).collect();
        let dot = |x: &[f64], y: &[f64]| g.integrate_values(&x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>());
        let la = scalar_potential_values(&g, &a);
        let lb = scalar_potential_values(&g, &b);
        let (x, y) = (dot(&a, &lb), dot(&b, &la));
        assert!((x - y).abs() < 1e-13 * x.abs(), "{x} {y}");
        let mut ao = a.clone();
        ao[0] = 0.0;
        let va = vector_potential_values(&g, &ao);
        let vb = vector_potential_values(&g, &b);
        assert!((dot(&ao, &vb) - dot(&b, &va)).abs() < 1e-14);
    }

    #[test]
    fn oracle_point_mass_and_size_limit() {
        let s = [CloudSample { point: [0.0; 3], value: 1.0 }];
        let v = potential_oracle_3d(&s, 1.0, &[[2.0, 0.0, 0.0]], Exec::Sequential).unwrap();
        assert!((v[0] - 1.0 / (8.0 * PI)).abs() < 1e-15);
        let z = [CloudSample { point: [0.0; 3], value: 0.0 }];
        assert_eq!(potential_oracle_3d(&z, 1.0, &[[0.0; 3]], Exec::Sequential).unwrap()[0], 0.0);
        let big = vec![CloudSample { point: [0.0; 3], value: 1.0 }; MAX_ORACLE_POINTS + 1];
        assert!(matches!(potential_oracle_3d(&big, 1.0, &[[1.0; 3]], Exec::Sequential), Err(Error::Resource(_))));
    }
}
