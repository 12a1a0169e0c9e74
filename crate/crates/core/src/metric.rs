//! Riemannian metrics sampled on a periodic grid, their Levi-Civita
//! connection and Ricci curvature.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analytic::ScalarFn;
use crate::error::{Error, Result};
use crate::grid::{identity_mat, DVec, DomainGrid, Mat, MAX_DIM, ZERO_MAT};
use crate::stencil::{self, StencilOrder};

/// A symmetric positive-definite metric tensor at every grid point.
#[derive(Clone, Debug)]
pub struct MetricField {
    grid: DomainGrid,
    g: Vec<Mat>,
    inv: Vec<Mat>,
    sqrt_det: Vec<f64>,
    /// Exact first derivatives `jet[p][k][i][j] = d_k g_ij` when the metric
    /// comes from an analytic family.
    jet: Option<Vec<[Mat; MAX_DIM]>>,
    order: StencilOrder,
    diagonal: bool,
}

/// Per-point Christoffel symbols, `gamma[p][k][i][j] = Gamma^k_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChristoffelField {
    pub grid: DomainGrid,
    pub gamma: Vec<[Mat; MAX_DIM]>,
}

/// Per-point symmetric bilinear forms (Ricci tensors and the like).
pub type SymmetricFormField = Vec<Mat>;

fn symmetric_inverse(n: usize, m: &Mat, index: usize) -> Result<(Mat, f64)> {
    let a = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let chol = a.clone().cholesky().ok_or_else(|| Error::InvalidMetric {
        index,
        reason: "not positive definite".into(),
    })?;
    let l = chol.l();
    let sqrt_det: f64 = (0..n).map(|i| l[(i, i)]).product();
    let inv = chol.inverse();
    let mut out = ZERO_MAT;
    for i in 0..n {
        for j in 0..n {
            out[i][j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
        }
    }
    // inverse consistency
    let prod = &a * DMatrix::from_fn(n, n, |i, j| out[i][j]);
    let err = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (prod[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    if err > 1e-12 {
        return Err(Error::InvalidMetric {
            index,
            reason: format!("inverse residual {err:e} exceeds 1e-12"),
        });
    }
    Ok((out, sqrt_det))
}

impl MetricField {
    /// Validates and caches inverse and volume density. Components are
    /// symmetrized exactly; asymmetry above 1e-12 is rejected.
    pub fn new(grid: DomainGrid, mut values: Vec<Mat>) -> Result<Self> {
        let n = grid.dim();
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} metric values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        let mut inv = Vec::with_capacity(values.len());
        let mut sqrt_det = Vec::with_capacity(values.len());
        let mut diagonal = true;
        for (p, m) in values.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..i {
                    let scale = 1.0f64.max(m[i][j].abs());
                    if (m[i][j] - m[j][i]).abs() > 1e-12 * scale || !m[i][j].is_finite() {
                        return Err(Error::InvalidMetric {
                            index: p,
                            reason: "not symmetric".into(),
                        });
                    }
                    let s = 0.5 * (m[i][j] + m[j][i]);
                    m[i][j] = s;
                    m[j][i] = s;
                    if s != 0.0 {
                        diagonal = false;
                    }
                }
            }
            let (mi, sd) = symmetric_inverse(n, m, p)?;
            inv.push(mi);
            sqrt_det.push(sd);
        }
        Ok(MetricField {
            grid,
            g: values,
            inv,
            sqrt_det,
            jet: None,
            order: StencilOrder::Second,
            diagonal,
        })
    }

    pub fn flat(grid: DomainGrid) -> Self {
        let n = grid.dim();
        let len = grid.len();
        let mut m = Self::new(grid, vec![identity_mat(n); len]).expect("identity is a metric");
        m.jet = Some(vec![[ZERO_MAT; MAX_DIM]; len]);
        m
    }

    pub fn constant(grid: DomainGrid, value: Mat) -> Result<Self> {
        let len = grid.len();
        let mut m = Self::new(grid, vec![value; len])?;
        m.jet = Some(vec![[ZERO_MAT; MAX_DIM]; len]);
        Ok(m)
    }

    pub fn from_fn(grid: DomainGrid, f: impl Fn(&DVec) -> Mat) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid, values)
    }

    /// `g = exp(2 phi) * delta`, carrying exact derivatives.
    pub fn conformal(grid: DomainGrid, phi: &ScalarFn) -> Result<Self> {
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.len());
        let mut jet = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let x = grid.coords(p);
            let e = (2.0 * phi.value(&x)).exp();
            let dphi = phi.gradient(&x);
            let mut m = ZERO_MAT;
            let mut d = [ZERO_MAT; MAX_DIM];
            for i in 0..n {
                m[i][i] = e;
                for (k, dk) in d.iter_mut().enumerate().take(n) {
                    dk[i][i] = 2.0 * dphi[k] * e;
                }
            }
            values.push(m);
            jet.push(d);
        }
        let mut m = Self::new(grid, values)?;
        m.jet = Some(jet);
        Ok(m)
    }

    /// Conformal rescaling `exp(f) * g` (no derivative jet).
    pub fn rescaled(&self, f: &[f64]) -> Result<Self> {
        let n = self.dim();
        let values = self
            .g
            .iter()
            .zip(f)
            .map(|(m, &fi)| {
                let e = fi.exp();
                let mut out = ZERO_MAT;
                for i in 0..n {
                    for j in 0..n {
                        out[i][j] = e * m[i][j];
                    }
                }
                out
            })
            .collect();
        Ok(Self::new(self.grid.clone(), values)?.with_order(self.order))
    }

    /// Drops analytic derivatives so that every derivative is taken by finite differences.
    pub fn without_jet(mut self) -> Self {
        self.jet = None;
        self
    }

    pub fn with_order(mut self, order: StencilOrder) -> Self {
        self.order = order;
        self
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
    pub fn order(&self) -> StencilOrder {
        self.order
    }
    pub fn has_jet(&self) -> bool {
        self.jet.is_some()
    }
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }
    #[inline]
    pub fn at(&self, p: usize) -> &Mat {
        &self.g[p]
    }
    #[inline]
    pub fn inverse(&self, p: usize) -> &Mat {
        &self.inv[p]
    }
    #[inline]
    pub fn sqrt_det(&self, p: usize) -> f64 {
        self.sqrt_det[p]
    }
    pub fn values(&self) -> &[Mat] {
        &self.g
    }

    /// Smallest eigenvalue over the grid.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        self.g
            .iter()
            .map(|m| {
                let a = DMatrix::from_fn(n, n, |i, j| m[i][j]);
                a.symmetric_eigenvalues().min()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest diagonal entry of the inverse metric, used by the CFL bound.
    pub fn sup_inverse_diagonal(&self) -> f64 {
        let n = self.dim();
        self.inv
            .iter()
            .map(|m| (0..n).map(|a| m[a][a]).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// `d_k g_ij` at `p`, exact when a jet is present.
    pub fn derivative(&self, p: usize) -> [Mat; MAX_DIM] {
        if let Some(jet) = &self.jet {
            return jet[p];
        }
        let n = self.dim();
        let mut d = [ZERO_MAT; MAX_DIM];
        for (k, dk) in d.iter_mut().enumerate().take(n) {
            let h = self.grid.spacing(k);
            for &(o, w) in self.order.first_derivative() {
                let q = self.grid.step(p, k, o).0;
                for i in 0..n {
                    for j in 0..n {
                        dk[i][j] += w * self.g[q][i][j];
                    }
                }
            }
            for row in dk.iter_mut().take(n) {
                for v in row.iter_mut().take(n) {
                    *v /= h;
                }
            }
        }
        d
    }

    /// Squared norm of a covector.
    #[inline]
    pub fn covector_norm_sq(&self, p: usize, w: &DVec) -> f64 {
        let n = self.dim();
        let inv = &self.inv[p];
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += inv[i][j] * w[i] * w[j];
            }
        }
        s
    }

    #[inline]
    pub fn raise(&self, p: usize, w: &DVec) -> DVec {
        let n = self.dim();
        let inv = &self.inv[p];
        let mut out = [0.0; MAX_DIM];
        for i in 0..n {
            for j in 0..n {
                out[i] += inv[i][j] * w[j];
            }
        }
        out
    }

    /// Loads a metric from CSV: one row per grid point (flattened index order),
    /// `n*n` row-major components, with a header row.
    pub fn from_csv(grid: DomainGrid, path: &Path) -> Result<Self> {
        let n = grid.dim();
        let rows = read_csv_rows(path, n * n, grid.len())?;
        let values = rows
            .into_iter()
            .map(|r| {
                let mut m = ZERO_MAT;
                for i in 0..n {
                    for j in 0..n {
                        m[i][j] = r[i * n + j];
                    }
                }
                m
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.dim();
        let mut w = csv::Writer::from_path(path)?;
        let header: Vec<String> = (0..n)
            .flat_map(|i| (0..n).map(move |j| format!("g{i}{j}")))
            .collect();
        w.write_record(&header)?;
        for m in &self.g {
            w.write_record((0..n).flat_map(|i| (0..n).map(move |j| m[i][j].to_string())))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads `expected_rows` rows of `cols` floats from a headed CSV file.
pub fn read_csv_rows(path: &Path, cols: usize, expected_rows: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::Config(format!(
                "{}: expected {cols} columns, found {}",
                path.display(),
                rec.len()
            )));
        }
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.len() != expected_rows {
        return Err(Error::GridMismatch(format!(
            "{}: {} rows for {} grid points",
            path.display(),
            rows.len(),
            expected_rows
        )));
    }
    Ok(rows)
}

/// Levi-Civita Christoffel symbols of `g`, centered differences unless the
/// metric carries exact derivatives. Symmetric in the lower indices exactly.
pub fn domain_christoffels(g: &MetricField) -> ChristoffelField {
    let n = g.dim();
    let gamma = (0..g.grid.len())
        .map(|p| {
            let d = g.derivative(p);
            let inv = g.inverse(p);
            let mut out = [ZERO_MAT; MAX_DIM];
            for (k, gk) in out.iter_mut().enumerate().take(n) {
                for i in 0..n {
                    for j in i..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += inv[k][l] * (d[i][j][l] + d[j][i][l] - d[l][i][j]);
                        }
                        gk[i][j] = 0.5 * s;
                        gk[j][i] = 0.5 * s;
                    }
                }
            }
            out
        })
        .collect();
    ChristoffelField {
        grid: g.grid.clone(),
        gamma,
    }
}

impl ChristoffelField {
    pub fn zero(grid: DomainGrid) -> Self {
        let len = grid.len();
        ChristoffelField {
            grid,
            gamma: vec![[ZERO_MAT; MAX_DIM]; len],
        }
    }

    /// `d_l Gamma^k_ij` at `p` by centered differences: `out[l][k][i][j]`.
    fn derivative(&self, p: usize, order: StencilOrder) -> [[Mat; MAX_DIM]; MAX_DIM] {
        let n = self.grid.dim();
        let mut out = [[ZERO_MAT; MAX_DIM]; MAX_DIM];
        for (l, dl) in out.iter_mut().enumerate().take(n) {
            let h = self.grid.spacing(l);
            for &(o, w) in order.first_derivative() {
                let q = self.grid.step(p, l, o).0;
                let gq = &self.gamma[q];
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            dl[k][i][j] += w * gq[k][i][j] / h;
                        }
                    }
                }
            }
        }
        out
    }

    /// Symmetric part of the Ricci tensor of this (torsion-free) connection,
    /// `Ric_jk = d_l G^l_jk - d_k G^l_jl + G^l_lm G^m_jk - G^l_km G^m_jl`.
    pub fn ricci(&self, order: StencilOrder) -> SymmetricFormField {
        let n = self.grid.dim();
        (0..self.grid.len())
            .map(|p| {
                let dg = self.derivative(p, order);
                let gm = &self.gamma[p];
                let mut r = ZERO_MAT;
                for j in 0..n {
                    for k in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += dg[l][l][j][k] - dg[k][l][j][l];
                            for m in 0..n {
                                s += gm[l][l][m] * gm[m][j][k] - gm[l][k][m] * gm[m][j][l];
                            }
                        }
                        r[j][k] = s;
                    }
                }
                let mut sym = ZERO_MAT;
                for j in 0..n {
                    for k in 0..n {
                        sym[j][k] = 0.5 * (r[j][k] + r[k][j]);
                    }
                }
                sym
            })
            .collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.grid.dim();
        self.gamma
            .iter()
            .flat_map(|g| {
                (0..n).flat_map(move |k| {
                    (0..n).flat_map(move |i| (0..n).map(move |j| (g[k][i][j] - g[k][j][i]).abs()))
                })
            })
            .fold(0.0, f64::max)
    }

    /// Contracted symbols `g^ij Gamma^k_ij`.
    pub fn trace(&self, g: &MetricField) -> Vec<DVec> {
        let n = self.grid.dim();
        (0..self.grid.len())
            .map(|p| {
                let inv = g.inverse(p);
                let gm = &self.gamma[p];
                let mut w = [0.0; MAX_DIM];
                for (k, wk) in w.iter_mut().enumerate().take(n) {
                    for i in 0..n {
                        for j in 0..n {
                            *wk += inv[i][j] * gm[k][i][j];
                        }
                    }
                }
                w
            })
            .collect()
    }
}

/// Ricci tensor of `g` from the finite-difference Riemann tensor.
pub fn domain_ricci(g: &MetricField) -> SymmetricFormField {
    domain_christoffels(g).ricci(g.order())
}

/// `trace_g (conn) d f = g^ij (d_i d_j f - Gamma^k_ij d_k f)` for a scalar field.
pub fn connection_laplacian(g: &MetricField, conn: &ChristoffelField, f: &[f64]) -> Vec<f64> {
    let grid = g.grid();
    let n = grid.dim();
    let order = g.order();
    let trace = conn.trace(g);
    (0..grid.len())
        .map(|p| {
            let inv = g.inverse(p);
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if inv[i][j] != 0.0 {
                        s += inv[i][j] * stencil::d2(grid, f, p, i, j, order);
                    }
                }
            }
            for (k, tk) in trace[p].iter().enumerate().take(n) {
                s -= tk * stencil::d1(grid, f, p, k, order);
            }
            s
        })
        .collect()
}

/// Laplace-Beltrami operator, non-positive convention (`Delta sin = -sin`).
pub fn laplace_beltrami(g: &MetricField, f: &[f64]) -> Vec<f64> {
    connection_laplacian(g, &domain_christoffels(g), f)
}

/// Divergence `(1/sqrt g) d_i (sqrt g g^ij w_j)` of a covector field.
pub fn divergence(g: &MetricField, w: &[DVec]) -> Vec<f64> {
    let grid = g.grid();
    let n = grid.dim();
    let flux: Vec<DVec> = (0..grid.len())
        .map(|p| {
            let up = g.raise(p, &w[p]);
            let mut out = [0.0; MAX_DIM];
            for i in 0..n {
                out[i] = g.sqrt_det(p) * up[i];
            }
            out
        })
        .collect();
    let comps: Vec<Vec<f64>> = (0..n).map(|i| stencil::component(&flux, i)).collect();
    (0..grid.len())
        .map(|p| {
            let s: f64 = (0..n)
                .map(|i| stencil::d1(grid, &comps[i], p, i, g.order()))
                .sum();
            s / g.sqrt_det(p)
        })
        .collect()
}

/// Named metric families accepted by the experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Flat,
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    /// `exp(2 phi) * delta`.
    Conformal {
        phi: ScalarFn,
        #[serde(default = "default_true")]
        exact_derivatives: bool,
    },
    /// `δ + Hess Φ + Jᵀ (Hess Φ) J` on an even-dimensional torus.
    KahlerPotential {
        potential: ScalarFn,
    },
    Csv {
        path: String,
    },
}

fn default_true() -> bool {
    true
}

impl MetricSpec {
    pub fn build(&self, grid: &DomainGrid, order: StencilOrder) -> Result<MetricField> {
        let n = grid.dim();
        let m = match self {
            MetricSpec::Flat => MetricField::flat(grid.clone()),
            MetricSpec::Constant { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!("constant metric must be {n}x{n}")));
                }
                let mut m = ZERO_MAT;
                for i in 0..n {
                    for j in 0..n {
                        m[i][j] = matrix[i][j];
                    }
                }
                MetricField::constant(grid.clone(), m)?
            }
            MetricSpec::Conformal {
                phi,
                exact_derivatives,
            } => {
                let m = MetricField::conformal(grid.clone(), phi)?;
                if *exact_derivatives {
                    m
                } else {
                    m.without_jet()
                }
            }
            MetricSpec::KahlerPotential { potential } => crate::complex::kahler_from_potential(grid.clone(), potential)?,
            MetricSpec::Csv { path } => MetricField::from_csv(grid.clone(), Path::new(path))?,
        };
        Ok(m.with_order(order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn sup_diff(a: &[Mat], b: impl Fn(usize) -> Mat, n: usize) -> f64 {
        a.iter()
            .enumerate()
            .map(|(p, m)| {
                let e = b(p);
                (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| (m[i][j] - e[i][j]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Symbolic Christoffels of `exp(2 phi) delta`.
    fn conformal_gamma(dphi: &DVec, n: usize) -> [Mat; MAX_DIM] {
        let mut out = [ZERO_MAT; MAX_DIM];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let dk = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    out[k][i][j] = dphi[i] * dk(k, j) + dphi[j] * dk(k, i) - dk(i, j) * dphi[k];
                }
            }
        }
        out
    }

    #[test]
    fn flat_metric_has_vanishing_connection_and_curvature() {
        let g = MetricField::flat(DomainGrid::torus(3, 8, TAU).unwrap()).without_jet();
        let c = domain_christoffels(&g);
        assert!(c.gamma.iter().all(|x| x.iter().flatten().flatten().all(|&v| v == 0.0)));
        assert!(domain_ricci(&g).iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_indefinite_and_asymmetric_metrics() {
        let grid = DomainGrid::torus(2, 4, 1.0).unwrap();
        let mut m = identity_mat(2);
        m[1][1] = -1.0;
        assert!(matches!(
            MetricField::constant(grid.clone(), m),
            Err(Error::InvalidMetric { .. })
        ));
        let mut m = identity_mat(2);
        m[0][1] = 0.3;
        assert!(MetricField::constant(grid, m).is_err());
    }

    #[test]
    fn inverse_and_density_are_consistent() {
        let grid = DomainGrid::torus(3, 6, TAU).unwrap();
        let g = MetricField::from_fn(grid, |x| {
            let mut m = identity_mat(3);
            m[0][0] = 2.0 + x[1].sin();
            m[0][1] = 0.3 * x[2].cos();
            m[1][0] = m[0][1];
            m[2][2] = 1.5;
            m
        })
        .unwrap();
        for p in 0..g.grid().len() {
            let a = g.at(p);
            let det = a[2][2] * (a[0][0] * a[1][1] - a[0][1] * a[1][0]);
            assert!((g.sqrt_det(p) - det.sqrt()).abs() < 1e-13);
        }
        assert!(g.min_eigenvalue() > 0.0);
    }

    #[test]
    fn linear_conformal_factor_interior_christoffels() {
        // exp(2 phi) with phi linear is not periodic and not differenced exactly;
        // interior points converge at second order toward the closed form.
        let a = [0.3, -0.2, 0.1, 0.0];
        let err = |size: usize| {
            let grid = DomainGrid::torus(3, size, 1.0).unwrap();
            let g = MetricField::conformal(grid.clone(), &ScalarFn::linear(&a[..3]))
                .unwrap()
                .without_jet();
            let c = domain_christoffels(&g);
            let mut e: f64 = 0.0;
            for p in 0..grid.len() {
                let m = grid.multi_index(p);
                if m[..3].iter().any(|&i| i == 0 || i == size - 1) {
                    continue;
                }
                let ex = conformal_gamma(&a, 3);
                for k in 0..3 {
                    for i in 0..3 {
                        for j in 0..3 {
                            e = e.max((c.gamma[p][k][i][j] - ex[k][i][j]).abs());
                        }
                    }
                }
            }
            e
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 < 1e-3);
        assert!((e1 / e2 - 4.0).abs() < 0.2, "ratio {}", e1 / e2);
        // with the analytic jet the closed form is reproduced exactly
        let grid = DomainGrid::torus(3, 8, 1.0).unwrap();
        let g = MetricField::conformal(grid, &ScalarFn::linear(&a[..3])).unwrap();
        let c = domain_christoffels(&g);
        let ex = conformal_gamma(&a, 3);
        assert!(sup_diff(&c.gamma.iter().map(|x| x[0]).collect::<Vec<_>>(), |_| ex[0], 3) < 1e-14);
    }

    #[test]
    fn christoffel_refinement_is_second_order() {
        let phi = ScalarFn::sin_axis(0.5, 0, 1.0); // g = exp(2 sin x) delta ... scaled below
        let err = |size: usize| {
            let grid = DomainGrid::torus(2, size, TAU).unwrap();
            let g = MetricField::conformal(grid.clone(), &phi.clone().scaled(2.0))
                .unwrap()
                .without_jet();
            let c = domain_christoffels(&g);
            let mut e: f64 = 0.0;
            for p in 0..grid.len() {
                let ex = conformal_gamma(&phi.clone().scaled(2.0).gradient(&grid.coords(p)), 2);
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            e = e.max((c.gamma[p][k][i][j] - ex[k][i][j]).abs());
                        }
                    }
                }
            }
            e
        };
        let (e16, e32, e64) = (err(16), err(32), err(64));
        assert!((e16 / e32 - 4.0).abs() < 0.5, "{}", e16 / e32);
        assert!((e32 / e64 - 4.0).abs() < 0.3, "{}", e32 / e64);
    }

    #[test]
    fn two_dimensional_conformal_ricci() {
        // Ric = -(flat Laplacian of phi) delta for g = exp(2 phi) delta in 2D.
        let phi = ScalarFn {
            waves: vec![
                crate::analytic::Wave {
                    amplitude: 0.05,
                    wavevector: vec![1.0, -1.0],
                    phase: std::f64::consts::FRAC_PI_2,
                },
                crate::analytic::Wave {
                    amplitude: -0.05,
                    wavevector: vec![1.0, 1.0],
                    phase: std::f64::consts::FRAC_PI_2,
                },
            ],
            ..Default::default()
        }; // 0.1 sin x1 sin x2
        let err = |size: usize| {
            let grid = DomainGrid::torus(2, size, TAU).unwrap();
            let g = MetricField::conformal(grid.clone(), &phi).unwrap().without_jet();
            let ric = domain_ricci(&g);
            sup_diff(
                &ric,
                |p| {
                    let x = grid.coords(p);
                    assert!((phi.value(&x) - 0.1 * x[0].sin() * x[1].sin()).abs() < 1e-14);
                    let h = phi.hessian(&x);
                    let lap = h[0][0] + h[1][1];
                    let mut m = ZERO_MAT;
                    m[0][0] = -lap;
                    m[1][1] = -lap;
                    m
                },
                2,
            )
        };
        let (e16, e32, e64) = (err(16), err(32), err(64));
        assert!(e32 < 5e-3);
        let order = (e32 / e64).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order} ({e16} {e32} {e64})");
    }

    #[test]
    fn laplacian_sign_convention() {
        let grid = DomainGrid::torus(2, 64, TAU).unwrap();
        let g = MetricField::flat(grid.clone());
        let f: Vec<f64> = (0..grid.len()).map(|p| grid.coords(p)[0].sin()).collect();
        let lap = laplace_beltrami(&g, &f);
        for p in 0..grid.len() {
            assert!((lap[p] + f[p]).abs() < 1e-3);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let grid = DomainGrid::torus(2, 4, 1.0).unwrap();
        let g = MetricField::conformal(grid.clone(), &ScalarFn::sin_axis(0.2, 1, TAU)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        g.write_csv(&path).unwrap();
        let h = MetricField::from_csv(grid, &path).unwrap();
        assert_eq!(g.values(), h.values());
    }
}
