use std::f64::consts::PI;

use iso_landau::potential::{newtonian_potential, potential_oracle_3d, sample_radial_cloud, vector_newtonian_potential};
use iso_landau::{init, Exec, Parity, RadialField, RadialGrid};
use proptest::prelude::*;
use statrs::function::erf::erf;

/// Newtonian potential of the standard Gaussian: erf(r/√2)/(4πr).
fn gaussian_potential(r: f64) -> f64 {
    if r == 0.0 {
        (2.0 / PI).sqrt() / (4.0 * PI)
    } else {
        erf(r / 2f64.sqrt()) / (4.0 * PI * r)
    }
}

fn cos_mass(n: usize) -> f64 {
    let g = RadialGrid::uniform(n, 3.0).unwrap();
    g.integrate(&RadialField::from_fn(&g, Parity::Even, f64::cos)).unwrap()
}

#[test]
fn quadrature_is_second_order() {
    let antider = |r: f64| 4.0 * PI * ((r * r - 2.0) * r.sin() + 2.0 * r * r.cos());
    let exact = antider(3.0) - antider(0.0);
    let e = |n| (cos_mass(n) - exact).abs();
    let (e1, e2, e3) = (e(65), e(129), e(257));
    let (q1, q2) = (e1 / e2, e2 / e3);
    assert!((q1 - 4.0).abs() < 0.1 && (q2 - 4.0).abs() < 0.1, "{q1} {q2}");
    // one Richardson step removes the h² term
    let rich = (4.0 * cos_mass(257) - cos_mass(129)) / 3.0;
    assert!((rich - exact).abs() < e3 / 100.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integration_by_parts_defect_is_second_order(a in 0.2f64..2.0, b in 0.3f64..1.5, c in -1.0f64..1.0, d in 0.0f64..1.5) {
        let defect = |n: usize| {
            let g = RadialGrid::uniform(n, 12.0).unwrap();
            let f = RadialField::from_fn(&g, Parity::Even, |r| (-a * r * r).exp() + c * (d * r).cos() * (-0.2 * r * r).exp());
            let v = RadialField::from_fn(&g, Parity::Odd, |r| r * (-b * r * r).exp());
            let lhs = g.integrate(&f.mul(&g.div_radial(&v).unwrap()).unwrap()).unwrap();
            let rhs = -g.integrate(&v.mul(&g.ddr(&f).unwrap()).unwrap()).unwrap();
            (lhs - rhs, lhs.abs().max(rhs.abs()))
        };
        let ((d1, s1), (d2, _)) = (defect(1025), defect(2049));
        prop_assert!(d1.abs() < 2e-2 * s1.max(1e-2));
        prop_assert!(d2.abs() < 1e-12 || (3.5..4.5).contains(&(d1 / d2)), "{} {}", d1, d2);
    }
}

#[test]
fn scalar_potential_matches_erf_profile() {
    let g = RadialGrid::uniform(2049, 12.0).unwrap();
    let m = init::gaussian(&g, 1.0, true).unwrap();
    let u = newtonian_potential(&g, m.field()).unwrap().u;
    let worst = g.nodes().iter().zip(u.values()).map(|(&r, v)| (v - gaussian_potential(r)).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn potential_identities() {
    let g = RadialGrid::uniform(2049, 12.0).unwrap();
    let rho = init::gaussian_mixture(&g, 0.7, 1.4, 0.4).unwrap();
    let l = newtonian_potential(&g, rho.field()).unwrap().u;

    let lap = g.laplacian_radial(&l).unwrap();
    let worst = (0..g.n() - 1).map(|i| (-lap.values()[i] - rho.values()[i]).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-5, "−ΔLρ − ρ = {worst}");

    let grad = g.ddr(rho.field()).unwrap();
    let lhs = g.integrate(&grad.mul(&g.ddr(&l).unwrap()).unwrap()).unwrap();
    let rhs = g.integrate(&rho.field().mul(rho.field()).unwrap()).unwrap();
    assert!((lhs - rhs).abs() < 1e-5 * rhs, "{lhs} vs {rhs}");

    let v = vector_newtonian_potential(&g, &grad.scale(-1.0)).unwrap().u;
    let div = g.div_radial(&v).unwrap();
    let worst = (0..g.n() - 1).map(|i| (div.values()[i] - rho.values()[i]).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn cartesian_oracle_agrees_at_unit_radius() {
    let (samples, vol) = sample_radial_cloud(32, 6.0, |r| (2.0 * PI).powf(-1.5) * (-r * r / 2.0).exp());
    let u = potential_oracle_3d(&samples, vol, &[[1.0, 0.0, 0.0]], Exec::auto()).unwrap()[0];
    let exact = gaussian_potential(1.0);
    assert!((u - exact).abs() < 2e-2 * exact, "{u} vs {exact}");
}

