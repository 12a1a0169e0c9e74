//! Centered finite-difference stencils for scalar fields on a periodic grid.

use serde::{Deserialize, Serialize};

use crate::grid::{DVec, DomainGrid, MAX_DIM};

/// Accuracy order of the centered stencils used for scalar fields.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum StencilOrder {
    #[default]
    Second,
    Fourth,
}

impl StencilOrder {
    /// Offsets and weights of the first-derivative stencil (unit spacing).
    pub fn first_derivative(self) -> &'static [(i32, f64)] {
        match self {
            StencilOrder::Second => &[(-1, -0.5), (1, 0.5)],
            StencilOrder::Fourth => &[
                (-2, 1.0 / 12.0),
                (-1, -8.0 / 12.0),
                (1, 8.0 / 12.0),
                (2, -1.0 / 12.0),
            ],
        }
    }

    /// Offsets and weights of the pure second-derivative stencil (unit spacing).
    pub fn second_derivative(self) -> &'static [(i32, f64)] {
        match self {
            StencilOrder::Second => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
            StencilOrder::Fourth => &[
                (-2, -1.0 / 12.0),
                (-1, 16.0 / 12.0),
                (0, -30.0 / 12.0),
                (1, 16.0 / 12.0),
                (2, -1.0 / 12.0),
            ],
        }
    }
}

/// Centered derivative of `f` along `axis` at `idx`.
#[inline]
pub fn d1(grid: &DomainGrid, f: &[f64], idx: usize, axis: usize, order: StencilOrder) -> f64 {
    let mut acc = 0.0;
    for &(o, w) in order.first_derivative() {
        acc += w * f[grid.step(idx, axis, o).0];
    }
    acc / grid.spacing(axis)
}

/// Centered second derivative `d^2 f / dx^a dx^b` at `idx`.
pub fn d2(grid: &DomainGrid, f: &[f64], idx: usize, a: usize, b: usize, order: StencilOrder) -> f64 {
    if a == b {
        let mut acc = 0.0;
        for &(o, w) in order.second_derivative() {
            acc += w * f[grid.step(idx, a, o).0];
        }
        return acc / (grid.spacing(a) * grid.spacing(a));
    }
    let mut acc = 0.0;
    for &(oa, wa) in order.first_derivative() {
        for &(ob, wb) in order.first_derivative() {
            let mut off = [0; MAX_DIM];
            off[a] = oa;
            off[b] = ob;
            acc += wa * wb * f[grid.shift(idx, &off).0];
        }
    }
    acc / (grid.spacing(a) * grid.spacing(b))
}

/// Gradient of a scalar field at every grid point.
pub fn gradient(grid: &DomainGrid, f: &[f64], order: StencilOrder) -> Vec<DVec> {
    (0..grid.len())
        .map(|i| {
            let mut g = [0.0; MAX_DIM];
            for (a, ga) in g.iter_mut().enumerate().take(grid.dim()) {
                *ga = d1(grid, f, i, a, order);
            }
            g
        })
        .collect()
}

/// Extracts component `c` of a per-point array field.
pub fn component<const N: usize>(field: &[[f64; N]], c: usize) -> Vec<f64> {
    field.iter().map(|v| v[c]).collect()
}

/// Mean of a scalar field over the grid (uniform weights).
pub fn mean(f: &[f64]) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

pub fn sup_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}
