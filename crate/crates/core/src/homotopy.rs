//! Pointwise geodesic homotopies between maps in the same equivariance class.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::{MapField, TensionOperator};
use crate::target::{scale, TargetSpace, Vector};

#[derive(Clone, Debug)]
pub struct Homotopy {
    pub s: Vec<f64>,
    pub slices: Vec<MapField>,
    /// `dist(u(x), v(x))` in the model cover.
    pub rho: Vec<f64>,
    pub rho_sup: f64,
    pub rho_inf: f64,
    /// `sup |tau(u_s)|` for each slice, when an operator was supplied.
    pub slice_tension_sup: Vec<f64>,
}

fn same_twists(u: &MapField, v: &MapField) -> bool {
    let (a, b) = (u.equivariance(), v.equivariance());
    if a.is_trivial() && b.is_trivial() {
        return true;
    }
    let tol = 1e-9 * a.conditioning().max(b.conditioning());
    (0..u.grid().dim()).all(|k| {
        let (x, y) = (a.twist(k), b.twist(k));
        let da = x
            .a
            .iter()
            .zip(&y.a)
            .flat_map(|(r, s)| r.iter().zip(s).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max);
        let db = x.b.iter().zip(&y.b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        da.max(db) <= tol
    })
}

fn injectivity_bound(target: &TargetSpace) -> f64 {
    match target {
        TargetSpace::Sphere { radius, .. } => (std::f64::consts::PI - 1e-6) * radius,
        _ => f64::INFINITY,
    }
}

/// `u_s(x) = exp_{u(x)}(s log_{u(x)} v(x))` for each `s` in `s_grid`.
pub fn geodesic_homotopy(
    u: &MapField,
    v: &MapField,
    s_grid: &[f64],
    op: Option<&TensionOperator>,
) -> Result<Homotopy> {
    u.grid().check_same(v.grid(), "homotopy endpoint")?;
    let target = u.target();
    if target != v.target() {
        return Err(Error::HomotopyUndefined {
            index: 0,
            reason: "endpoints map into different targets".into(),
        });
    }
    if !same_twists(u, v) {
        return Err(Error::HomotopyUndefined {
            index: 0,
            reason: "endpoints carry different equivariance data".into(),
        });
    }
    let bound = injectivity_bound(target);
    let rho: Vec<f64> = u
        .values()
        .par_iter()
        .zip(v.values().par_iter())
        .map(|(a, b)| target.dist(a, b))
        .collect();
    if let Some((index, d)) = rho.iter().enumerate().find(|(_, d)| **d > bound) {
        return Err(Error::HomotopyUndefined {
            index,
            reason: format!("distance {d} reaches the cut locus"),
        });
    }
    let logs: Vec<Vector> = u
        .values()
        .par_iter()
        .zip(v.values().par_iter())
        .map(|(a, b)| target.log_unchecked(a, b))
        .collect();
    let mut slices = Vec::with_capacity(s_grid.len());
    let mut slice_tension_sup = Vec::new();
    for &s in s_grid {
        let vals: Vec<Vector> = u
            .values()
            .par_iter()
            .zip(logs.par_iter())
            .map(|(a, l)| target.exp_unchecked(a, &scale(s, l)))
            .collect();
        let us = u.with_values(vals);
        if let Some(op) = op {
            slice_tension_sup.push(op.apply(&us)?.sup_norm(target));
        }
        slices.push(us);
    }
    Ok(Homotopy {
        s: s_grid.to_vec(),
        slices,
        rho_sup: rho.iter().cloned().fold(0.0, f64::max),
        rho_inf: rho.iter().cloned().fold(f64::INFINITY, f64::min),
        rho,
        slice_tension_sup,
    })
}

/// `k + 1` equally spaced parameters in `[0, 1]`.
pub fn uniform_parameters(k: usize) -> Vec<f64> {
    (0..=k).map(|i| i as f64 / k.max(1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::EquivarianceSpec;
    use crate::grid::DomainGrid;
    use crate::map::MapSpec;
    use std::f64::consts::PI;

    fn circle(grid: &DomainGrid, shift: f64) -> MapField {
        let u = MapSpec::Linear {
            winding: vec![vec![1.0, 0.0]],
        }
        .build(grid, &TargetSpace::circle(), &EquivarianceSpec::Auto)
        .unwrap();
        let vals = u.values().iter().map(|p| [p[0] + shift, 0.0, 0.0, 0.0]).collect();
        u.with_values(vals)
    }

    #[test]
    fn identical_endpoints_give_a_constant_family() {
        let grid = DomainGrid::torus(2, 8, 2.0 * PI).unwrap();
        let u = circle(&grid, 0.0);
        let h = geodesic_homotopy(&u, &u, &uniform_parameters(4), None).unwrap();
        assert_eq!(h.rho_sup, 0.0);
        for s in &h.slices {
            assert_eq!(s.values(), u.values());
        }
    }

    #[test]
    fn rotated_circle_maps_interpolate_by_rotation() {
        let grid = DomainGrid::torus(2, 8, 2.0 * PI).unwrap();
        let alpha = 0.7;
        let u = circle(&grid, 0.0);
        let v = circle(&grid, alpha);
        let h = geodesic_homotopy(&u, &v, &uniform_parameters(4), None).unwrap();
        assert!((h.rho_sup - alpha).abs() < 1e-14 && (h.rho_inf - alpha).abs() < 1e-14);
        for (s, slice) in h.s.iter().zip(&h.slices) {
            for (a, b) in slice.values().iter().zip(u.values()) {
                assert!((a[0] - b[0] - s * alpha).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn antipodal_sphere_maps_are_rejected() {
        let grid = DomainGrid::torus(2, 4, 1.0).unwrap();
        let t = TargetSpace::sphere(2);
        let u = MapField::constant(grid.clone(), t.clone(), [0.0, 0.0, 1.0, 0.0]).unwrap();
        let v = MapField::constant(grid, t, [0.0, 0.0, -1.0, 0.0]).unwrap();
        assert!(matches!(
            geodesic_homotopy(&u, &v, &[0.5], None),
            Err(Error::HomotopyUndefined { .. })
        ));
    }
}
