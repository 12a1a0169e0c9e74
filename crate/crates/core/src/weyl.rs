//! Higgs 1-forms and the Weyl connections they define: connection
//! coefficients, Ricci-Weyl curvature, cohomological classification and
//! Gauduchon gauge fixing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::ScalarFn;
use crate::error::{Error, Result};
use crate::grid::{DVec, DomainGrid, Mat, MAX_DIM, ZERO_MAT};
use crate::metric::{
    connection_laplacian, domain_christoffels, domain_ricci, laplace_beltrami, read_csv_rows,
    ChristoffelField, MetricField, SymmetricFormField,
};
use crate::stencil::{self, StencilOrder};

/// `(n - 2) / 2`, the factor relating Weyl and Levi-Civita traces.
#[inline]
pub fn weyl_coefficient(n: usize) -> f64 {
    (n as f64 - 2.0) / 2.0
}

/// A covector field together with its metric dual and squared norm.
#[derive(Clone, Debug)]
pub struct HiggsField {
    grid: DomainGrid,
    theta: Vec<DVec>,
    sharp: Vec<DVec>,
    norm_sq: Vec<f64>,
    /// Exact `d_i Theta_j` when built from analytic data.
    jet: Option<Vec<Mat>>,
    zero: bool,
}

impl HiggsField {
    pub fn new(g: &MetricField, theta: Vec<DVec>) -> Result<Self> {
        let grid = g.grid().clone();
        if theta.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} Higgs values for {} grid points",
                theta.len(),
                grid.len()
            )));
        }
        let n = grid.dim();
        let mut sharp = Vec::with_capacity(theta.len());
        let mut norm_sq = Vec::with_capacity(theta.len());
        for (p, t) in theta.iter().enumerate() {
            if t[n..].iter().any(|&x| x != 0.0) || t.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!("invalid Higgs value at point {p}")));
            }
            let s = g.raise(p, t);
            let m = g.at(p);
            for (i, ti) in t.iter().enumerate().take(n) {
                let back: f64 = (0..n).map(|j| m[i][j] * s[j]).sum();
                let scale = 1.0 + ti.abs();
                if (back - ti).abs() > 1e-12 * scale * g.at(p)[i][i].max(1.0) {
                    return Err(Error::InvalidMetric {
                        index: p,
                        reason: "ill-conditioned for raising the Higgs field".into(),
                    });
                }
            }
            norm_sq.push((0..n).map(|i| t[i] * s[i]).sum());
            sharp.push(s);
        }
        let zero = theta.iter().all(|t| t.iter().all(|&x| x == 0.0));
        Ok(HiggsField {
            grid,
            theta,
            sharp,
            norm_sq,
            jet: None,
            zero,
        })
    }

    pub fn zero(g: &MetricField) -> Self {
        let mut h = Self::new(g, vec![[0.0; MAX_DIM]; g.grid().len()]).expect("zero form");
        h.jet = Some(vec![ZERO_MAT; g.grid().len()]);
        h
    }

    pub fn constant(g: &MetricField, c: &[f64]) -> Result<Self> {
        let n = g.dim();
        if c.len() != n {
            return Err(Error::Config(format!("constant Higgs field needs {n} components")));
        }
        let mut t = [0.0; MAX_DIM];
        t[..n].copy_from_slice(c);
        let mut h = Self::new(g, vec![t; g.grid().len()])?;
        h.jet = Some(vec![ZERO_MAT; g.grid().len()]);
        Ok(h)
    }

    /// `Theta_i = f_i(x)` with exact derivatives.
    pub fn components(g: &MetricField, f: &[ScalarFn]) -> Result<Self> {
        let n = g.dim();
        if f.len() != n {
            return Err(Error::Config(format!("Higgs field needs {n} component functions")));
        }
        let grid = g.grid();
        let mut theta = Vec::with_capacity(grid.len());
        let mut jet = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let x = grid.coords(p);
            let mut t = [0.0; MAX_DIM];
            let mut d = ZERO_MAT;
            for j in 0..n {
                t[j] = f[j].value(&x);
                let gr = f[j].gradient(&x);
                for i in 0..n {
                    d[i][j] = gr[i];
                }
            }
            theta.push(t);
            jet.push(d);
        }
        let mut h = Self::new(g, theta)?;
        h.jet = Some(jet);
        Ok(h)
    }

    /// `Theta = dV` with exact derivatives.
    pub fn exact(g: &MetricField, v: &ScalarFn) -> Result<Self> {
        let grid = g.grid();
        let n = grid.dim();
        let mut theta = Vec::with_capacity(grid.len());
        let mut jet = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let x = grid.coords(p);
            let mut t = v.gradient(&x);
            t[n..].iter_mut().for_each(|z| *z = 0.0);
            let h = v.hessian(&x);
            let mut d = ZERO_MAT;
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = h[i][j];
                }
            }
            theta.push(t);
            jet.push(d);
        }
        let mut h = Self::new(g, theta)?;
        h.jet = Some(jet);
        Ok(h)
    }

    /// Same covector values re-dualized with respect to another metric on the same grid.
    pub fn with_metric(&self, g: &MetricField) -> Result<Self> {
        g.grid().check_same(&self.grid, "Higgs field")?;
        let mut h = Self::new(g, self.theta.clone())?;
        h.jet = self.jet.clone();
        Ok(h)
    }

    pub fn without_jet(mut self) -> Self {
        self.jet = None;
        self
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }
    pub fn is_zero(&self) -> bool {
        self.zero
    }
    #[inline]
    pub fn at(&self, p: usize) -> &DVec {
        &self.theta[p]
    }
    #[inline]
    pub fn sharp(&self, p: usize) -> &DVec {
        &self.sharp[p]
    }
    #[inline]
    pub fn norm_sq(&self, p: usize) -> f64 {
        self.norm_sq[p]
    }
    pub fn values(&self) -> &[DVec] {
        &self.theta
    }

    /// `d_i Theta_j` at `p`, exact when available.
    pub fn derivative(&self, p: usize, order: StencilOrder) -> Mat {
        if let Some(j) = &self.jet {
            return j[p];
        }
        let n = self.grid.dim();
        let mut d = ZERO_MAT;
        for (i, row) in d.iter_mut().enumerate().take(n) {
            let h = self.grid.spacing(i);
            for &(o, w) in order.first_derivative() {
                let q = self.grid.step(p, i, o).0;
                for j in 0..n {
                    row[j] += w * self.theta[q][j] / h;
                }
            }
        }
        d
    }

    pub fn from_csv(g: &MetricField, path: &Path) -> Result<Self> {
        let n = g.dim();
        let rows = read_csv_rows(path, n, g.grid().len())?;
        let theta = rows
            .into_iter()
            .map(|r| {
                let mut t = [0.0; MAX_DIM];
                t[..n].copy_from_slice(&r);
                t
            })
            .collect();
        Self::new(g, theta)
    }
}

/// Named Higgs families accepted by the configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum HiggsSpec {
    #[default]
    Zero,
    Constant {
        values: Vec<f64>,
    },
    /// `Theta = dV`.
    Exact {
        potential: ScalarFn,
    },
    /// Arbitrary analytic components `Theta_i = f_i(x)`.
    #[serde(alias = "nonclosed")]
    Components {
        components: Vec<ScalarFn>,
    },
    Csv {
        path: String,
    },
}

impl HiggsSpec {
    pub fn build(&self, g: &MetricField) -> Result<HiggsField> {
        match self {
            HiggsSpec::Zero => Ok(HiggsField::zero(g)),
            HiggsSpec::Constant { values } => HiggsField::constant(g, values),
            HiggsSpec::Exact { potential } => HiggsField::exact(g, potential),
            HiggsSpec::Components { components } => HiggsField::components(g, components),
            HiggsSpec::Csv { path } => HiggsField::from_csv(g, Path::new(path)),
        }
    }

    /// The potential `V` when the field is declared exact.
    pub fn potential(&self) -> Option<&ScalarFn> {
        match self {
            HiggsSpec::Exact { potential } => Some(potential),
            _ => None,
        }
    }
}

/// `Gamma^W = Gamma - 1/2 (Theta_i delta^k_j + Theta_j delta^k_i) + 1/2 g_ij Theta^k`.
pub fn weyl_connection(g: &MetricField, theta: &HiggsField) -> Result<ChristoffelField> {
    g.grid().check_same(theta.grid(), "Higgs field")?;
    let lc = domain_christoffels(g);
    if theta.is_zero() {
        return Ok(lc);
    }
    Ok(add_weyl_terms(g, theta, lc))
}

fn add_weyl_terms(g: &MetricField, theta: &HiggsField, mut conn: ChristoffelField) -> ChristoffelField {
    let n = g.dim();
    for (p, gm) in conn.gamma.iter_mut().enumerate() {
        let t = theta.at(p);
        let s = theta.sharp(p);
        let m = g.at(p);
        for (k, gk) in gm.iter_mut().enumerate().take(n) {
            for i in 0..n {
                for j in i..n {
                    let mut v = 0.5 * m[i][j] * s[k];
                    if k == j {
                        v -= 0.5 * t[i];
                    }
                    if k == i {
                        v -= 0.5 * t[j];
                    }
                    gk[i][j] += v;
                    if i != j {
                        gk[j][i] = gk[i][j];
                    }
                }
            }
        }
    }
    conn
}

/// Pointwise sup of `|nabla^W g - Theta ⊗ g|` with `d g` from the metric (exact jet or stencil).
pub fn compatibility_residual(g: &MetricField, theta: &HiggsField, conn: &ChristoffelField) -> f64 {
    let n = g.dim();
    let mut worst: f64 = 0.0;
    for p in 0..g.grid().len() {
        let dg = g.derivative(p);
        let gm = &conn.gamma[p];
        let m = g.at(p);
        let t = theta.at(p);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = dg[k][i][j];
                    for l in 0..n {
                        v -= gm[l][k][i] * m[l][j] + gm[l][k][j] * m[i][l];
                    }
                    worst = worst.max((v - t[k] * m[i][j]).abs());
                }
            }
        }
    }
    worst
}

/// Symmetrized Levi-Civita covariant derivative `(nabla Theta)_(ij)`.
pub fn covariant_derivative_sym(g: &MetricField, theta: &HiggsField, lc: &ChristoffelField, p: usize) -> Mat {
    let n = g.dim();
    let d = theta.derivative(p, g.order());
    let t = theta.at(p);
    let gm = &lc.gamma[p];
    let mut out = ZERO_MAT;
    for i in 0..n {
        for j in 0..n {
            let mut v = 0.5 * (d[i][j] + d[j][i]);
            for k in 0..n {
                v -= gm[k][i][j] * t[k];
            }
            out[i][j] = v;
        }
    }
    out
}

/// The quadratic form `(|Theta|^2 g - Theta ⊗ Theta)` at `p`.
pub fn higgs_quadratic(g: &MetricField, theta: &HiggsField, p: usize) -> Mat {
    let n = g.dim();
    let t = theta.at(p);
    let m = g.at(p);
    let ns = theta.norm_sq(p);
    let mut out = ZERO_MAT;
    for i in 0..n {
        for j in 0..n {
            out[i][j] = ns * m[i][j] - t[i] * t[j];
        }
    }
    out
}

/// Symmetric Ricci-Weyl form
/// `Ric + ((n-2)/2) nabla Theta - ((n-2)/4)(|Theta|^2 g - Theta ⊗ Theta)`.
pub fn ricci_weyl(g: &MetricField, theta: &HiggsField) -> Result<SymmetricFormField> {
    g.grid().check_same(theta.grid(), "Higgs field")?;
    let ric = domain_ricci(g);
    if theta.is_zero() {
        return Ok(ric);
    }
    let n = g.dim();
    let lc = domain_christoffels(g);
    Ok(ric
        .into_iter()
        .enumerate()
        .map(|(p, r)| {
            let dt = covariant_derivative_sym(g, theta, &lc, p);
            let q = higgs_quadratic(g, theta, p);
            ricci_weyl_point(&r, &dt, &q, n)
        })
        .collect())
}

/// Pointwise `Ric + c nabla Theta - (c/2) Q` with `Q = |Theta|^2 g - Theta ⊗ Theta`.
pub fn ricci_weyl_point(ric: &Mat, dtheta: &Mat, q: &Mat, n: usize) -> Mat {
    let c = weyl_coefficient(n);
    let mut r = *ric;
    for i in 0..n {
        for j in 0..n {
            r[i][j] += c * dtheta[i][j] - 0.5 * c * q[i][j];
        }
    }
    r
}

/// Symmetric Ricci tensor of the Weyl connection computed directly from its
/// coefficients. It differs from [`ricci_weyl`] by `1/2 (div Theta) g`.
pub fn ricci_weyl_from_connection(g: &MetricField, theta: &HiggsField) -> Result<SymmetricFormField> {
    Ok(weyl_connection(g, theta)?.ricci(g.order()))
}

/// `trace_g nabla^W d f`, assembled from the Weyl connection coefficients.
pub fn weyl_laplacian_scalar(g: &MetricField, theta: &HiggsField, f: &[f64]) -> Result<Vec<f64>> {
    let conn = weyl_connection(g, theta)?;
    Ok(connection_laplacian(g, &conn, f))
}

/// `Delta f - ((n-2)/2) Theta(grad f)`, the closed form of the Weyl Laplacian.
pub fn weyl_laplacian_closed_form(g: &MetricField, theta: &HiggsField, f: &[f64]) -> Vec<f64> {
    let grid = g.grid();
    let n = grid.dim();
    let c = weyl_coefficient(n);
    let lap = laplace_beltrami(g, f);
    lap.into_iter()
        .enumerate()
        .map(|(p, l)| {
            let s = theta.sharp(p);
            let d: f64 = (0..n).map(|k| s[k] * stencil::d1(grid, f, p, k, g.order())).sum();
            l - c * d
        })
        .collect()
}

/// Divergence of `Theta^sharp` divided into flux form.
pub fn codifferential_sup(g: &MetricField, theta: &HiggsField) -> f64 {
    stencil::sup_abs(&crate::metric::divergence(g, theta.values()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeylTag {
    Exact,
    ClosedNonexact,
    Nonclosed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylClass {
    pub tag: WeylTag,
    pub d_theta_sup: f64,
    /// `∮ Theta` along each axis cycle through the first grid point.
    pub periods: Vec<f64>,
}

pub const CLASS_TOL: f64 = 1e-8;

/// Exterior derivative `(dTheta)_ij = d_i Theta_j - d_j Theta_i` by finite differences.
pub fn exterior_derivative(theta: &HiggsField, order: StencilOrder) -> Vec<Mat> {
    let grid = theta.grid();
    let n = grid.dim();
    let comps: Vec<Vec<f64>> = (0..n).map(|j| stencil::component(theta.values(), j)).collect();
    (0..grid.len())
        .map(|p| {
            let mut d = ZERO_MAT;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        d[i][j] = stencil::d1(grid, &comps[j], p, i, order)
                            - stencil::d1(grid, &comps[i], p, j, order);
                    }
                }
            }
            d
        })
        .collect()
}

pub fn classify_higgs(theta: &HiggsField, g: &MetricField) -> Result<WeylClass> {
    g.grid().check_same(theta.grid(), "Higgs field")?;
    let grid = theta.grid();
    let n = grid.dim();
    let d_theta_sup = exterior_derivative(theta, g.order())
        .iter()
        .flat_map(|m| m.iter().flatten().copied())
        .fold(0.0, |a: f64, x: f64| a.max(x.abs()));
    let periods: Vec<f64> = (0..n)
        .map(|k| {
            let mut idx = 0usize;
            let mut s = 0.0;
            for _ in 0..grid.sizes()[k] {
                s += theta.at(idx)[k];
                idx = grid.step(idx, k, 1).0;
            }
            s * grid.spacing(k)
        })
        .collect();
    let closed = d_theta_sup < CLASS_TOL;
    let zero_periods = periods
        .iter()
        .zip(grid.lengths())
        .all(|(p, l)| p.abs() < CLASS_TOL * l);
    let tag = match (closed, zero_periods) {
        (true, true) => WeylTag::Exact,
        (true, false) => WeylTag::ClosedNonexact,
        _ => WeylTag::Nonclosed,
    };
    Ok(WeylClass {
        tag,
        d_theta_sup,
        periods,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GauduchonConfig {
    #[serde(default = "default_gauge_tol")]
    pub tolerance: f64,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_inner_tol")]
    pub inner_tolerance: f64,
    #[serde(default = "default_max_outer")]
    pub max_iterations: usize,
}

fn default_gauge_tol() -> f64 {
    1e-9
}
fn default_damping() -> f64 {
    0.5
}
fn default_inner_tol() -> f64 {
    1e-10
}
fn default_max_outer() -> usize {
    200
}

impl Default for GauduchonConfig {
    fn default() -> Self {
        GauduchonConfig {
            tolerance: default_gauge_tol(),
            damping: default_damping(),
            inner_tolerance: default_inner_tol(),
            max_iterations: default_max_outer(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GauduchonResult {
    /// Mean-zero conformal factor: the gauged metric is `exp(f) g`.
    pub f: Vec<f64>,
    /// Sup of the codifferential of the transformed Higgs field, recomputed independently.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GauduchonResult {
    /// The gauged pair `(exp(f) g, Theta + df)`.
    pub fn apply(&self, g: &MetricField, theta: &HiggsField) -> Result<(MetricField, HiggsField)> {
        let g2 = g.rescaled(&self.f)?;
        let grid = g.grid();
        let df = stencil::gradient(grid, &self.f, g.order());
        let vals: Vec<DVec> = theta
            .values()
            .iter()
            .zip(&df)
            .map(|(t, d)| {
                let mut o = *t;
                for i in 0..grid.dim() {
                    o[i] += d[i];
                }
                o
            })
            .collect();
        let t2 = HiggsField::new(&g2, vals)?;
        Ok((g2, t2))
    }
}

/// `sum_i D_i (A^ij w_j)` for a field of per-point matrices `A`.
fn flux_divergence(grid: &DomainGrid, a: &[Mat], w: &[DVec], order: StencilOrder) -> Vec<f64> {
    let n = grid.dim();
    let mut comps = vec![vec![0.0; grid.len()]; n];
    for p in 0..grid.len() {
        for i in 0..n {
            comps[i][p] = (0..n).map(|j| a[p][i][j] * w[p][j]).sum();
        }
    }
    (0..grid.len())
        .map(|p| (0..n).map(|i| stencil::d1(grid, &comps[i], p, i, order)).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients for `K f = b` with `K f = -sum_i D_i(A^ij D_j f)`.
fn solve_weighted_poisson(
    grid: &DomainGrid,
    a: &[Mat],
    b: &[f64],
    x: &mut [f64],
    order: StencilOrder,
    tol: f64,
) -> Result<usize> {
    let apply = |v: &[f64]| -> Vec<f64> {
        let dv = stencil::gradient(grid, v, order);
        flux_divergence(grid, a, &dv, order)
            .into_iter()
            .map(|z| -z)
            .collect()
    };
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let kx = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&kx).map(|(bi, ki)| bi - ki).collect();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let max_iter = 20 * grid.len().max(100);
    for it in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok(it);
        }
        let kd = apply(&d);
        let dkd = dot(&d, &kd);
        if dkd <= 0.0 {
            return Err(Error::SolverFailure {
                what: "gauge conjugate gradients".into(),
                iterations: it,
                residual: rr.sqrt() / bnorm,
            });
        }
        let alpha = rr / dkd;
        for i in 0..x.len() {
            x[i] += alpha * d[i];
            r[i] -= alpha * kd[i];
        }
        let rr2 = dot(&r, &r);
        let beta = rr2 / rr;
        rr = rr2;
        for i in 0..d.len() {
            d[i] = r[i] + beta * d[i];
        }
    }
    Err(Error::SolverFailure {
        what: "gauge conjugate gradients".into(),
        iterations: max_iter,
        residual: rr.sqrt() / bnorm,
    })
}

/// Damped Picard iteration for the Gauduchon gauge; never fails, reports convergence.
pub fn gauduchon_solve(g: &MetricField, theta: &HiggsField, cfg: &GauduchonConfig) -> Result<GauduchonResult> {
    g.grid().check_same(theta.grid(), "Higgs field")?;
    let grid = g.grid();
    let n = grid.dim();
    let order = g.order();
    let c = weyl_coefficient(n);
    let mut f = vec![0.0; grid.len()];
    let mut trial = vec![0.0; grid.len()];
    let residual_of = |f: &[f64]| -> Result<f64> {
        let r = GauduchonResult {
            f: f.to_vec(),
            residual: 0.0,
            iterations: 0,
            converged: false,
        };
        let (g2, t2) = r.apply(g, theta)?;
        Ok(codifferential_sup(&g2, &t2))
    };
    let mut residual = residual_of(&f)?;
    let mut it = 0;
    while residual >= cfg.tolerance && it < cfg.max_iterations {
        let a: Vec<Mat> = (0..grid.len())
            .map(|p| {
                let w = (c * f[p]).exp() * g.sqrt_det(p);
                let inv = g.inverse(p);
                let mut m = ZERO_MAT;
                for i in 0..n {
                    for j in 0..n {
                        m[i][j] = w * inv[i][j];
                    }
                }
                m
            })
            .collect();
        let b = flux_divergence(grid, &a, theta.values(), order);
        solve_weighted_poisson(grid, &a, &b, &mut trial, order, cfg.inner_tolerance)?;
        // the linear equation is exact in two dimensions, so no damping is needed there
        let damp = if c == 0.0 { 1.0 } else { cfg.damping };
        for (fi, ti) in f.iter_mut().zip(&trial) {
            *fi += damp * (ti - *fi);
        }
        let mean = stencil::mean(&f);
        f.iter_mut().for_each(|v| *v -= mean);
        it += 1;
        residual = residual_of(&f)?;
    }
    Ok(GauduchonResult {
        f,
        residual,
        iterations: it,
        converged: residual < cfg.tolerance,
    })
}

/// Like [`gauduchon_solve`], but non-convergence is an error.
pub fn gauduchon_fix(g: &MetricField, theta: &HiggsField, cfg: &GauduchonConfig) -> Result<GauduchonResult> {
    let r = gauduchon_solve(g, theta, cfg)?;
    if !r.converged {
        return Err(Error::SolverFailure {
            what: "gauduchon gauge".into(),
            iterations: r.iterations,
            residual: r.residual,
        });
    }
    Ok(r)
}
