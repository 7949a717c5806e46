//! Uniform radial discretization of R³ for radially symmetric functions.
//!
//! Nodes are `r_i = i·h`, `h = r_max/(n-1)`. Quadrature weights are the
//! composite trapezoid rule applied to `4π r² f(r)`, so `w_0 = 0` and the last
//! weight is halved. Fields carry a parity tag: EVEN for scalars (`f'(0) = 0`)
//! and ODD for the radial component of a radial vector field (`g(0) = 0`).
//! Everything outside `[0, r_max]` is taken to be zero.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    r_max: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn product(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Values of a radial scalar (EVEN) or radial vector component (ODD) on a grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    parity: Parity,
    pub units: String,
}

/// Nonnegative EVEN field with its cached mass `∫ρ dx`.
#[derive(Debug, Clone)]
pub struct Density {
    field: RadialField,
    mass: f64,
}

impl RadialGrid {
    pub fn uniform(n: usize, r_max: f64) -> Result<Arc<Self>> {
        if n < MIN_NODES {
            return Err(Error::config("grid.n", format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::config("grid.r_max", format!("must be positive and finite, got {r_max}")));
        }
        let h = r_max / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        nodes[n - 1] = r_max;
        let mut weights: Vec<f64> = nodes.iter().map(|&r| 4.0 * PI * r * r * h).collect();
        weights[n - 1] *= 0.5;
        Ok(Arc::new(RadialGrid { n, r_max, h, nodes, weights }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same node set (grids are compared by value, not by address).
    pub fn matches(&self, other: &RadialGrid) -> bool {
        self.n == other.n && self.r_max == other.r_max
    }

    fn check(&self, f: &RadialField) -> Result<()> {
        if self.matches(&f.grid) {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "field lives on grid (n={}, r_max={}) but operation uses (n={}, r_max={})",
                f.grid.n, f.grid.r_max, self.n, self.r_max
            )))
        }
    }

    /// `Σ w_i f_i`, summed in ascending node order.
    pub fn integrate(&self, f: &RadialField) -> Result<f64> {
        self.check(f)?;
        if f.parity != Parity::Even {
            return Err(Error::usage("integrate expects an EVEN integrand"));
        }
        Ok(self.integrate_values(&f.values))
    }

    pub fn integrate_values(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        self.weights.iter().zip(f).fold(0.0, |acc, (w, v)| acc + w * v)
    }

    pub fn ddr(&self, f: &RadialField) -> Result<RadialField> {
        self.check(f)?;
        expect_parity(f, Parity::Even, "ddr")?;
        Ok(f.with_values(ddr_values(self.h, &f.values), Parity::Odd))
    }

    pub fn div_radial(&self, g: &RadialField) -> Result<RadialField> {
        self.check(g)?;
        expect_parity(g, Parity::Odd, "div_radial")?;
        Ok(g.with_values(div_values(&self.nodes, self.h, &g.values), Parity::Even))
    }

    pub fn laplacian_radial(&self, f: &RadialField) -> Result<RadialField> {
        self.check(f)?;
        expect_parity(f, Parity::Even, "laplacian_radial")?;
        Ok(f.with_values(laplacian_values(&self.nodes, self.h, &f.values), Parity::Even))
    }

    /// Linear interpolation of nodal values at radius `r` (zero beyond `r_max`).
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        if r >= self.r_max {
            return if r == self.r_max { values[self.n - 1] } else { 0.0 };
        }
        let s = r / self.h;
        let i = (s.floor() as usize).min(self.n - 2);
        let t = s - i as f64;
        values[i] * (1.0 - t) + values[i + 1] * t
    }
}

fn expect_parity(f: &RadialField, p: Parity, op: &str) -> Result<()> {
    if f.parity == p {
        Ok(())
    } else {
        Err(Error::usage(format!("{op} expects a {p:?} field, got {:?}", f.parity)))
    }
}

// Stencils on raw slices. Callers guarantee parity; these never fail.

/// Centered differences; `f'(0) = 0` by evenness; one-sided 2nd order at `r_max`.
pub(crate) fn ddr_values(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    let inv = 0.5 / h;
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) * inv;
    }
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv;
    d
}

/// `g' + 2g/r`; at the origin the odd extension gives `3 g'(0) = 3 g_1 / h`.
pub(crate) fn div_values(r: &[f64], h: f64, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut d = vec![0.0; n];
    let inv = 0.5 / h;
    d[0] = 3.0 * g[1] / h;
    for i in 1..n - 1 {
        d[i] = (g[i + 1] - g[i - 1]) * inv + 2.0 * g[i] / r[i];
    }
    d[n - 1] = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) * inv + 2.0 * g[n - 1] / r[n - 1];
    d
}

/// `f'' + 2f'/r`; at the origin the even extension gives `3 f''(0) = 6 (f_1 - f_0)/h²`.
pub(crate) fn laplacian_values(r: &[f64], h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    let h2 = h * h;
    d[0] = 6.0 * (f[1] - f[0]) / h2;
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2 + (f[i + 1] - f[i - 1]) / (h * r[i]);
    }
    let m = n - 1;
    d[m] = second_derivative_end(h, f) + (3.0 * f[m] - 4.0 * f[m - 1] + f[m - 2]) / (h * r[m]);
    d
}

/// Second derivative with the even extension at the origin and a one-sided
/// 2nd-order stencil at `r_max`.
pub(crate) fn second_derivative_values(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h2 = h * h;
    let mut d = vec![0.0; n];
    d[0] = 2.0 * (f[1] - f[0]) / h2;
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    }
    d[n - 1] = second_derivative_end(h, f);
    d
}

fn second_derivative_end(h: f64, f: &[f64]) -> f64 {
    let m = f.len() - 1;
    (2.0 * f[m] - 5.0 * f[m - 1] + 4.0 * f[m - 2] - f[m - 3]) / (h * h)
}

impl RadialField {
    pub fn new(grid: &Arc<RadialGrid>, values: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::usage(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.n
            )));
        }
        if parity == Parity::Odd && values[0] != 0.0 {
            return Err(Error::usage(format!("ODD field must vanish at r = 0, got {}", values[0])));
        }
        Ok(RadialField { grid: Arc::clone(grid), values, parity, units: String::new() })
    }

    /// Samples `f(r)` at the nodes. ODD fields get `values[0] = 0` forced.
    pub fn from_fn(grid: &Arc<RadialGrid>, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        let mut values: Vec<f64> = grid.nodes.iter().map(|&r| f(r)).collect();
        if parity == Parity::Odd {
            values[0] = 0.0;
        }
        RadialField { grid: Arc::clone(grid), values, parity, units: String::new() }
    }

    pub fn zeros(grid: &Arc<RadialGrid>, parity: Parity) -> Self {
        RadialField { grid: Arc::clone(grid), values: vec![0.0; grid.n], parity, units: String::new() }
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = units.into();
        self
    }

    pub(crate) fn with_values(&self, mut values: Vec<f64>, parity: Parity) -> RadialField {
        if parity == Parity::Odd {
            values[0] = 0.0;
        }
        RadialField { grid: Arc::clone(&self.grid), values, parity, units: String::new() }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RadialField {
        self.with_values(self.values.iter().map(|&v| f(v)).collect(), self.parity)
    }

    /// Pointwise product; parity follows the usual even/odd rules.
    pub fn mul(&self, other: &RadialField) -> Result<RadialField> {
        self.grid.check(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(self.with_values(values, self.parity.product(other.parity)))
    }

    pub fn add(&self, other: &RadialField) -> Result<RadialField> {
        self.same_kind(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(self.with_values(values, self.parity))
    }

    pub fn sub(&self, other: &RadialField) -> Result<RadialField> {
        self.same_kind(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(self.with_values(values, self.parity))
    }

    pub fn scale(&self, c: f64) -> RadialField {
        self.map(|v| c * v)
    }

    /// `y += c·x` on the raw values.
    pub fn axpy(&mut self, c: f64, x: &RadialField) -> Result<()> {
        self.same_kind(x)?;
        for (y, v) in self.values.iter_mut().zip(&x.values) {
            *y += c * v;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn same_kind(&self, other: &RadialField) -> Result<()> {
        self.grid.check(other)?;
        if self.parity != other.parity {
            return Err(Error::usage("cannot add fields of different parity"));
        }
        Ok(())
    }
}

impl Density {
    /// Validates nonnegativity and caches the mass. With `normalize`, rescales
    /// to unit mass (requires positive mass).
    pub fn new(field: RadialField, normalize: bool) -> Result<Self> {
        if field.parity != Parity::Even {
            return Err(Error::usage("a density must be an EVEN field"));
        }
        if let Some((i, v)) = field.values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::usage(format!("density value {v} at node {i} is negative or not finite")));
        }
        let mut d = Density { mass: field.grid.integrate_values(&field.values), field };
        if normalize {
            if !(d.mass > 0.0) || !d.mass.is_finite() {
                return Err(Error::usage(format!("cannot normalize a density of mass {}", d.mass)));
            }
            let inv = 1.0 / d.mass;
            d.field.values.iter_mut().for_each(|v| *v *= inv);
            d.mass = d.field.grid.integrate_values(&d.field.values);
        }
        Ok(d)
    }

    /// Builds a density from raw values that may carry tiny negative undershoot;
    /// values below `floor` are clipped to zero.
    pub fn clipped(grid: &Arc<RadialGrid>, mut values: Vec<f64>, floor: f64) -> Result<Self> {
        for v in values.iter_mut() {
            if *v < floor {
                *v = 0.0;
            }
        }
        Density::new(RadialField::new(grid, values, Parity::Even)?, false)
    }

    pub fn zero(grid: &Arc<RadialGrid>) -> Self {
        Density { field: RadialField::zeros(grid, Parity::Even), mass: 0.0 }
    }

    pub fn field(&self) -> &RadialField {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        &self.field.values
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.field.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `ρ_λ(x) = λ³ρ(λx)` on the grid with `r_max/λ` and the same node count:
    /// nodes map onto nodes, so no interpolation is involved.
    pub fn rescaled(&self, lambda: f64) -> Result<Density> {
        let g = RadialGrid::uniform(self.grid().n, self.grid().r_max / lambda)?;
        let l3 = lambda.powi(3);
        let values = self.values().iter().map(|v| l3 * v).collect();
        Density::new(RadialField::new(&g, values, Parity::Even)?, false)
    }
}

/// `∫ |f - g| dx` over the grid (used for L¹ residuals between densities).
pub fn l1_distance(grid: &RadialGrid, f: &[f64], g: &[f64]) -> f64 {
    grid.weights.iter().zip(f.iter().zip(g)).fold(0.0, |acc, (w, (a, b))| acc + w * (a - b).abs())
}
