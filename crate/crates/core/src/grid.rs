//! Periodic rectangular grids on flat tori of dimension 2 to 4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported domain dimension.
pub const MAX_DIM: usize = 4;

/// Small square matrix padded to [`MAX_DIM`].
pub type Mat = [[f64; MAX_DIM]; MAX_DIM];
/// Domain vector or covector padded to [`MAX_DIM`].
pub type DVec = [f64; MAX_DIM];

pub const ZERO_MAT: Mat = [[0.0; MAX_DIM]; MAX_DIM];

pub fn identity_mat(n: usize) -> Mat {
    let mut m = ZERO_MAT;
    for (i, row) in m.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    m
}

/// A periodic grid `sizes[0] x ... x sizes[n-1]` with axis `k` covering `[0, lengths[k])`.
///
/// Flattened indices put axis 0 fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct DomainGrid {
    dim: usize,
    sizes: [usize; MAX_DIM],
    lengths: [f64; MAX_DIM],
    spacing: [f64; MAX_DIM],
    strides: [usize; MAX_DIM],
    len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub sizes: Vec<usize>,
    pub lengths: Vec<f64>,
}

impl TryFrom<GridSpec> for DomainGrid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        DomainGrid::new(&s.sizes, &s.lengths)
    }
}

impl From<DomainGrid> for GridSpec {
    fn from(g: DomainGrid) -> Self {
        GridSpec {
            sizes: g.sizes().to_vec(),
            lengths: g.lengths().to_vec(),
        }
    }
}

impl DomainGrid {
    pub fn new(sizes: &[usize], lengths: &[f64]) -> Result<Self> {
        let dim = sizes.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 2, 3 or 4 (got {dim})"
            )));
        }
        if lengths.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} sizes but {} lengths",
                dim,
                lengths.len()
            )));
        }
        if let Some(s) = sizes.iter().find(|&&s| s < 4) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least 4 points (got {s})"
            )));
        }
        if let Some(l) = lengths.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidGrid(format!("period must be positive (got {l})")));
        }
        let mut g = DomainGrid {
            dim,
            sizes: [1; MAX_DIM],
            lengths: [1.0; MAX_DIM],
            spacing: [1.0; MAX_DIM],
            strides: [0; MAX_DIM],
            len: 1,
        };
        let mut stride = 1;
        for k in 0..dim {
            g.sizes[k] = sizes[k];
            g.lengths[k] = lengths[k];
            g.spacing[k] = lengths[k] / sizes[k] as f64;
            g.strides[k] = stride;
            stride *= sizes[k];
        }
        g.len = stride;
        Ok(g)
    }

    /// Cubic torus with `size` points per axis and period `length`.
    pub fn torus(dim: usize, size: usize, length: f64) -> Result<Self> {
        Self::new(&vec![size; dim], &vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn sizes(&self) -> &[usize] {
        &self.sizes[..self.dim]
    }
    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }
    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }
    pub fn min_spacing(&self) -> f64 {
        self.spacing[..self.dim]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }
    pub fn volume(&self) -> f64 {
        self.lengths[..self.dim].iter().product()
    }

    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut m = [0; MAX_DIM];
        for k in 0..self.dim {
            m[k] = (idx / self.strides[k]) % self.sizes[k];
        }
        m
    }

    pub fn index(&self, m: &[usize; MAX_DIM]) -> usize {
        (0..self.dim).map(|k| m[k] * self.strides[k]).sum()
    }

    pub fn coords(&self, idx: usize) -> DVec {
        let m = self.multi_index(idx);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = m[k] as f64 * self.spacing[k];
        }
        x
    }

    /// Index reached by moving `delta` points along `axis`, and the number of
    /// times the move wrapped around the period (positive when crossing the
    /// upper end).
    #[inline]
    pub fn step(&self, idx: usize, axis: usize, delta: i32) -> (usize, i32) {
        let size = self.sizes[axis] as i64;
        let stride = self.strides[axis];
        let i = ((idx / stride) % self.sizes[axis]) as i64;
        let j = i + delta as i64;
        let wraps = j.div_euclid(size);
        let jj = j.rem_euclid(size);
        let base = idx - (i as usize) * stride;
        (base + jj as usize * stride, wraps as i32)
    }

    /// Multi-axis shift; returns the target index and per-axis wrap counts.
    #[inline]
    pub fn shift(&self, idx: usize, offsets: &[i32; MAX_DIM]) -> (usize, [i32; MAX_DIM]) {
        let mut out = idx;
        let mut wraps = [0; MAX_DIM];
        for k in 0..self.dim {
            if offsets[k] != 0 {
                let (j, w) = self.step(out, k, offsets[k]);
                out = j;
                wraps[k] = w;
            }
        }
        (out, wraps)
    }

    /// The same grid with every axis refined or coarsened to `size` points.
    pub fn with_size(&self, size: usize) -> Result<Self> {
        Self::new(&vec![size; self.dim], self.lengths())
    }

    pub fn check_same(&self, other: &DomainGrid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.sizes(),
                other.sizes()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_exactly() {
        let g = DomainGrid::new(&[4, 5, 6], &[1.0, 2.0, 3.0]).unwrap();
        let idx = g.index(&[3, 0, 5, 0]);
        assert_eq!(g.step(idx, 0, 1), (g.index(&[0, 0, 5, 0]), 1));
        assert_eq!(g.step(idx, 1, -1), (g.index(&[3, 4, 5, 0]), -1));
        assert_eq!(g.step(idx, 2, 1), (g.index(&[3, 0, 0, 0]), 1));
        assert_eq!(g.step(idx, 2, -6), (idx, -1));
        for i in 0..g.len() {
            assert_eq!(g.index(&g.multi_index(i)), i);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DomainGrid::new(&[8], &[1.0]).is_err());
        assert!(DomainGrid::new(&[8, 3], &[1.0, 1.0]).is_err());
        assert!(DomainGrid::new(&[8, 8], &[1.0, 0.0]).is_err());
        assert!(DomainGrid::new(&[4; 5], &[1.0; 5]).is_err());
    }

    #[test]
    fn spacing_and_volume() {
        let g = DomainGrid::torus(3, 8, 2.0).unwrap();
        assert_eq!(g.spacing(1), 0.25);
        assert!((g.cell_volume() * g.len() as f64 - 8.0).abs() < 1e-14);
    }
}
