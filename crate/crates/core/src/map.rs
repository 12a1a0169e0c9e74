//! Discrete maps into model targets: differentials and second fundamental
//! forms in normal coordinates of the target, tension fields, energy and rank.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::ScalarFn;
use crate::equivariance::{EquivarianceData, EquivarianceSpec, Isometry};
use crate::error::{Error, Result};
use crate::grid::{DVec, DomainGrid, Mat, MAX_DIM};
use crate::metric::{domain_christoffels, read_csv_rows, ChristoffelField, MetricField};
use crate::stencil::StencilOrder;
use crate::target::{axpy, scale, TargetSpace, Vector, MAX_AMB, ZERO};
use crate::weyl::{weyl_coefficient, HiggsField};

/// A map sampled on the grid, stored in the model cover of the target.
#[derive(Clone, Debug, PartialEq)]
pub struct MapField {
    grid: DomainGrid,
    target: TargetSpace,
    equiv: EquivarianceData,
    values: Vec<Vector>,
}

/// First and second derivatives at one grid point in normal coordinates of `u(x)`.
#[derive(Clone, Copy, Debug)]
pub struct LocalJet {
    pub du: [Vector; MAX_DIM],
    pub hess: [[Vector; MAX_DIM]; MAX_DIM],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Harmonic,
    Weyl,
    Hermitian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensionField {
    pub flavor: Flavor,
    pub values: Vec<Vector>,
}

impl TensionField {
    pub fn sup_norm(&self, target: &TargetSpace) -> f64 {
        self.values.iter().map(|v| target.norm(v)).fold(0.0, f64::max)
    }
}

pub type DifferentialField = Vec<[Vector; MAX_DIM]>;
pub type BilinearFormField = Vec<[[Vector; MAX_DIM]; MAX_DIM]>;

impl MapField {
    pub fn new(
        grid: DomainGrid,
        target: TargetSpace,
        equiv: EquivarianceData,
        values: Vec<Vector>,
    ) -> Result<Self> {
        target.validate()?;
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} map values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if equiv.dim() != grid.dim() {
            return Err(Error::InvalidEquivariance(format!(
                "{} twists for a {}-dimensional domain",
                equiv.dim(),
                grid.dim()
            )));
        }
        for p in &values {
            target.check_point(p)?;
        }
        for axis in 0..grid.dim() {
            for p in values.iter().take(4) {
                let back = equiv.apply(axis, -1, &equiv.apply(axis, 1, p));
                let d = back.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let scale = equiv.conditioning() * (1.0 + p.iter().map(|x| x.abs()).fold(0.0, f64::max));
                if d > 1e-12 * scale {
                    return Err(Error::InvalidEquivariance(format!(
                        "wrap inconsistency {d:e} on axis {axis}"
                    )));
                }
            }
        }
        Ok(MapField {
            grid,
            target,
            equiv,
            values,
        })
    }

    pub fn constant(grid: DomainGrid, target: TargetSpace, p: Vector) -> Result<Self> {
        let n = grid.dim();
        let len = grid.len();
        Self::new(grid, target, EquivarianceData::trivial(n), vec![p; len])
    }

    pub fn from_fn(
        grid: DomainGrid,
        target: TargetSpace,
        equiv: EquivarianceData,
        f: impl Fn(&DVec) -> Vector,
    ) -> Result<Self> {
        let values = (0..grid.len()).map(|p| f(&grid.coords(p))).collect();
        Self::new(grid, target, equiv, values)
    }

    /// Replaces the values, keeping grid, target and twists (values are re-projected).
    pub fn with_values(&self, values: Vec<Vector>) -> Self {
        MapField {
            grid: self.grid.clone(),
            target: self.target.clone(),
            equiv: self.equiv.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }
    pub fn target(&self) -> &TargetSpace {
        &self.target
    }
    pub fn equivariance(&self) -> &EquivarianceData {
        &self.equiv
    }
    pub fn values(&self) -> &[Vector] {
        &self.values
    }
    #[inline]
    pub fn at(&self, p: usize) -> &Vector {
        &self.values[p]
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.values
            .iter()
            .map(|p| self.target.constraint_residual(p))
            .fold(0.0, f64::max)
    }

    /// Value at the grid point displaced by `offsets`, seen through the twists.
    #[inline]
    pub fn shifted(&self, idx: usize, offsets: &[i32; MAX_DIM]) -> Vector {
        let (q, wraps) = self.grid.shift(idx, offsets);
        if self.equiv.is_trivial() {
            self.values[q]
        } else {
            self.equiv.apply_multi(&wraps, &self.values[q])
        }
    }

    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, delta: i32) -> Vector {
        let (q, w) = self.grid.step(idx, axis, delta);
        if w == 0 {
            self.values[q]
        } else {
            self.equiv.apply(axis, w, &self.values[q])
        }
    }

    #[inline]
    fn log_checked(&self, idx: usize, p0: &Vector, q: &Vector) -> Result<Vector> {
        let l = self.target.log_unchecked(p0, q);
        if let TargetSpace::Sphere { radius, .. } = self.target {
            let d = self.target.norm(&l);
            if d > 0.5 * std::f64::consts::PI * radius {
                return Err(Error::ResolutionTooCoarse {
                    index: idx,
                    reason: format!("neighbor at distance {d:.3} exceeds the stencil bound"),
                });
            }
        }
        Ok(l)
    }

    /// Normal-coordinate jet at `idx`. Mixed second derivatives are formed only when requested.
    pub fn jet(&self, idx: usize, order: StencilOrder, mixed: bool) -> Result<LocalJet> {
        let n = self.grid.dim();
        let p0 = self.values[idx];
        let mut jet = LocalJet {
            du: [ZERO; MAX_DIM],
            hess: [[ZERO; MAX_DIM]; MAX_DIM],
        };
        let d1 = order.first_derivative();
        let d2 = order.second_derivative();
        for a in 0..n {
            let h = self.grid.spacing(a);
            let mut du = ZERO;
            let mut hh = ZERO;
            for &(o, w) in d2 {
                if o == 0 {
                    continue;
                }
                let l = self.log_checked(idx, &p0, &self.neighbor(idx, a, o))?;
                hh = axpy(&hh, w, &l);
                if let Some(&(_, w1)) = d1.iter().find(|(o1, _)| *o1 == o) {
                    du = axpy(&du, w1, &l);
                }
            }
            jet.du[a] = scale(1.0 / h, &du);
            jet.hess[a][a] = scale(1.0 / (h * h), &hh);
        }
        if mixed {
            for a in 0..n {
                for b in (a + 1)..n {
                    let mut acc = ZERO;
                    for &(oa, wa) in d1 {
                        for &(ob, wb) in d1 {
                            let mut offs = [0i32; MAX_DIM];
                            offs[a] = oa;
                            offs[b] = ob;
                            let l = self.log_checked(idx, &p0, &self.shifted(idx, &offs))?;
                            acc = axpy(&acc, wa * wb, &l);
                        }
                    }
                    let v = scale(1.0 / (self.grid.spacing(a) * self.grid.spacing(b)), &acc);
                    jet.hess[a][b] = v;
                    jet.hess[b][a] = v;
                }
            }
        }
        Ok(jet)
    }

    /// Applies an isometry of the model to every value; twists are conjugated accordingly.
    pub fn compose_isometry(&self, phi: &Isometry) -> Result<Self> {
        let inv = phi.inverse()?;
        let twists = (0..self.grid.dim())
            .map(|k| phi.compose(self.equiv.twist(k)).compose(&inv))
            .collect();
        let equiv = if self.equiv.is_trivial() {
            EquivarianceData::trivial(self.grid.dim())
        } else {
            EquivarianceData::new(twists, &self.target)?
        };
        let values = self
            .values
            .iter()
            .map(|p| self.target.project(&phi.apply(p)))
            .collect();
        Self::new(self.grid.clone(), self.target.clone(), equiv, values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let m = self.target.ambient_dim();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record((0..m).map(|i| format!("u{i}")))?;
        for v in &self.values {
            w.write_record(v[..m].iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_csv(
        grid: DomainGrid,
        target: TargetSpace,
        equiv: EquivarianceData,
        path: &Path,
    ) -> Result<Self> {
        let m = target.ambient_dim();
        let rows = read_csv_rows(path, m, grid.len())?;
        let values = rows
            .into_iter()
            .map(|r| {
                let mut v = ZERO;
                v[..m].copy_from_slice(&r);
                v
            })
            .collect();
        Self::new(grid, target, equiv, values)
    }
}

pub fn differential(u: &MapField, order: StencilOrder) -> Result<DifferentialField> {
    (0..u.grid.len())
        .into_par_iter()
        .map(|p| u.jet(p, order, false).map(|j| j.du))
        .collect()
}

/// `D^2 u(e_a, e_b) = H_ab - Gamma^k_ab du_k` for the given domain connection.
pub fn second_fundamental_form(
    u: &MapField,
    conn: &ChristoffelField,
    order: StencilOrder,
) -> Result<BilinearFormField> {
    u.grid.check_same(&conn.grid, "connection")?;
    let n = u.grid.dim();
    (0..u.grid.len())
        .into_par_iter()
        .map(|p| {
            let j = u.jet(p, order, true)?;
            let gm = &conn.gamma[p];
            let mut s = j.hess;
            for a in 0..n {
                for b in 0..n {
                    for k in 0..n {
                        if gm[k][a][b] != 0.0 {
                            s[a][b] = axpy(&s[a][b], -gm[k][a][b], &j.du[k]);
                        }
                    }
                }
            }
            Ok(s)
        })
        .collect()
}

/// Precomputed coefficients of a tension operator
/// `tau = g^ab H_ab - drift^k du_k`.
#[derive(Clone, Debug)]
pub struct TensionOperator {
    grid: DomainGrid,
    order: StencilOrder,
    inv: Vec<Mat>,
    drift: Vec<DVec>,
    diagonal: bool,
    flavor: Flavor,
}

impl TensionOperator {
    fn base(g: &MetricField, flavor: Flavor) -> Self {
        let lc = domain_christoffels(g);
        let drift = lc.trace(g);
        TensionOperator {
            grid: g.grid().clone(),
            order: g.order(),
            inv: (0..g.grid().len()).map(|p| *g.inverse(p)).collect(),
            drift,
            diagonal: g.is_diagonal(),
            flavor,
        }
    }

    pub fn harmonic(g: &MetricField) -> Self {
        Self::base(g, Flavor::Harmonic)
    }

    /// `tau^W = tau - ((n-2)/2) du(Theta^sharp)`; identical to the harmonic operator
    /// when `n = 2` or `Theta = 0`.
    pub fn weyl(g: &MetricField, theta: &HiggsField) -> Result<Self> {
        g.grid().check_same(theta.grid(), "Higgs field")?;
        let mut op = Self::base(g, Flavor::Weyl);
        let c = weyl_coefficient(g.dim());
        if c != 0.0 && !theta.is_zero() {
            for (p, d) in op.drift.iter_mut().enumerate() {
                let s = theta.sharp(p);
                for k in 0..MAX_DIM {
                    d[k] += c * s[k];
                }
            }
        }
        Ok(op)
    }

    /// Adds `w^k du_k` to the operator's first-order part (used by the Hermitian flavor).
    pub(crate) fn with_extra_drift(mut self, extra: &[DVec], flavor: Flavor) -> Self {
        for (d, e) in self.drift.iter_mut().zip(extra) {
            for k in 0..MAX_DIM {
                d[k] += e[k];
            }
        }
        self.flavor = flavor;
        self
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    #[inline]
    fn contract(&self, p: usize, j: &LocalJet) -> Vector {
        let n = self.grid.dim();
        let inv = &self.inv[p];
        let mut t = ZERO;
        for a in 0..n {
            t = axpy(&t, inv[a][a], &j.hess[a][a]);
            if !self.diagonal {
                for b in 0..n {
                    if b != a {
                        t = axpy(&t, inv[a][b], &j.hess[a][b]);
                    }
                }
            }
        }
        let d = &self.drift[p];
        for k in 0..n {
            if d[k] != 0.0 {
                t = axpy(&t, -d[k], &j.du[k]);
            }
        }
        t
    }

    /// Tension and differential at one point.
    #[inline]
    pub fn eval_point(&self, u: &MapField, p: usize) -> Result<(Vector, [Vector; MAX_DIM])> {
        let j = u.jet(p, self.order, !self.diagonal)?;
        Ok((self.contract(p, &j), j.du))
    }

    pub fn apply(&self, u: &MapField) -> Result<TensionField> {
        u.grid.check_same(&self.grid, "tension operator")?;
        let values = (0..u.grid.len())
            .into_par_iter()
            .map(|p| self.eval_point(u, p).map(|r| r.0))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensionField {
            flavor: self.flavor,
            values,
        })
    }

    /// Tension together with the differential, sharing the stencil evaluations.
    pub fn apply_with_differential(&self, u: &MapField) -> Result<(Vec<Vector>, DifferentialField)> {
        u.grid.check_same(&self.grid, "tension operator")?;
        let pairs = (0..u.grid.len())
            .into_par_iter()
            .map(|p| self.eval_point(u, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairs.into_iter().unzip())
    }
}

pub fn tension(u: &MapField, g: &MetricField) -> Result<TensionField> {
    TensionOperator::harmonic(g).apply(u)
}

pub fn weyl_tension(u: &MapField, g: &MetricField, theta: &HiggsField) -> Result<TensionField> {
    TensionOperator::weyl(g, theta)?.apply(u)
}

/// `g^ab <du_a, du_b>` at a point.
#[inline]
pub fn differential_norm_sq(target: &TargetSpace, inv: &Mat, du: &[Vector; MAX_DIM], n: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            if inv[a][b] != 0.0 {
                s += inv[a][b] * target.inner(&du[a], &du[b]);
            }
        }
    }
    s
}

/// `du(X)` for a domain vector `X`.
#[inline]
pub fn push_forward(du: &[Vector; MAX_DIM], x: &DVec, n: usize) -> Vector {
    let mut v = ZERO;
    for a in 0..n {
        if x[a] != 0.0 {
            v = axpy(&v, x[a], &du[a]);
        }
    }
    v
}

/// Energy `1/2 ∫ |du|^2 dvol` and the density `1/2 |du|^2`.
pub fn energy(u: &MapField, g: &MetricField, order: StencilOrder) -> Result<(f64, Vec<f64>)> {
    let du = differential(u, order)?;
    Ok(energy_from_differential(u.target(), g, &du))
}

pub fn energy_from_differential(target: &TargetSpace, g: &MetricField, du: &[[Vector; MAX_DIM]]) -> (f64, Vec<f64>) {
    let n = g.dim();
    let density: Vec<f64> = du
        .iter()
        .enumerate()
        .map(|(p, d)| 0.5 * differential_norm_sq(target, g.inverse(p), d, n))
        .collect();
    let cell = g.grid().cell_volume();
    let e = density
        .iter()
        .enumerate()
        .map(|(p, e)| e * g.sqrt_det(p))
        .sum::<f64>()
        * cell;
    (e, density)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankProfile {
    pub ranks: Vec<usize>,
    /// `histogram[r]` counts points of rank `r`.
    pub histogram: Vec<usize>,
    pub max: usize,
}

pub const RANK_TOL: f64 = 1e-6;

/// Singular values of `du: (T_x M, g) -> (T_u N, g')` at one point, descending.
pub fn singular_values(target: &TargetSpace, g: &Mat, du: &[Vector; MAX_DIM], n: usize) -> Vec<f64> {
    use nalgebra::DMatrix;
    let gram = DMatrix::from_fn(n, n, |a, b| target.inner(&du[a], &du[b]));
    let gm = DMatrix::from_fn(n, n, |a, b| g[a][b]);
    let l = gm.cholesky().expect("metric is positive definite").l();
    let li = l.try_inverse().expect("triangular factor is invertible");
    let m = &li * gram * li.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut s: Vec<f64> = m
        .symmetric_eigenvalues()
        .iter()
        .map(|e| e.max(0.0).sqrt())
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn rank_profile(u: &MapField, g: &MetricField, tol: f64) -> Result<RankProfile> {
    let n = g.dim();
    let du = differential(u, g.order())?;
    let ranks: Vec<usize> = du
        .iter()
        .enumerate()
        .map(|(p, d)| {
            let s = singular_values(u.target(), g.at(p), d, n);
            let thr = tol * (s[0] + 1e-12);
            s.iter().filter(|&&x| x > thr).count()
        })
        .collect();
    let mut histogram = vec![0; n + 1];
    for &r in &ranks {
        histogram[r] += 1;
    }
    let max = ranks.iter().copied().max().unwrap_or(0);
    Ok(RankProfile {
        ranks,
        histogram,
        max,
    })
}

/// Initial-map families accepted by the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// A constant map; defaults to the target's base point.
    Constant {
        #[serde(default)]
        point: Vec<f64>,
    },
    /// Flat targets: `winding[i][k]` periods of target coordinate `i` per domain period `k`.
    Linear { winding: Vec<Vec<f64>> },
    /// Linear map plus analytic periodic perturbations of each target coordinate.
    PerturbedLinear {
        winding: Vec<Vec<f64>>,
        perturbation: Vec<ScalarFn>,
    },
    /// Spheres: `F / |F| * radius` for analytic ambient components `F`.
    Normalized { components: Vec<ScalarFn> },
    /// Hyperbolic targets: spatial coordinates given, time coordinate on the sheet.
    Hyperboloid { spatial: Vec<ScalarFn> },
    /// Hyperbolic targets: the geodesic through the base point in the `x1` direction,
    /// moved by `rapidities[k] x^k / L_k`, displaced by `normal(x)` along `x2`.
    HyperbolicTube {
        rapidities: Vec<f64>,
        #[serde(default)]
        normal: ScalarFn,
    },
    Csv { path: String },
}

fn flat_period(target: &TargetSpace, i: usize) -> f64 {
    match target {
        TargetSpace::Circle { radius } => std::f64::consts::TAU * radius,
        TargetSpace::FlatTorus { periods, .. } => periods[i],
        _ => 1.0,
    }
}

impl MapSpec {
    /// Twists implied by the family, used when the equivariance spec is `auto`.
    pub fn implied_equivariance(&self, grid: &DomainGrid, target: &TargetSpace) -> Result<EquivarianceData> {
        let n = grid.dim();
        match self {
            MapSpec::Linear { winding } | MapSpec::PerturbedLinear { winding, .. } => {
                let m = target.ambient_dim();
                if target.curvature() != 0.0 || winding.len() != m || winding.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!(
                        "linear maps need a flat target and a {m}x{n} winding matrix"
                    )));
                }
                let vectors: Vec<Vector> = (0..n)
                    .map(|k| {
                        let mut v = ZERO;
                        for i in 0..m {
                            v[i] = winding[i][k] * flat_period(target, i);
                        }
                        v
                    })
                    .collect();
                EquivarianceData::translations(&vectors, target)
            }
            MapSpec::HyperbolicTube { rapidities, .. } => {
                EquivarianceSpec::Boosts {
                    rapidities: rapidities.clone(),
                }
                .build(n, target)
            }
            _ => Ok(EquivarianceData::trivial(n)),
        }
    }

    pub fn build(&self, grid: &DomainGrid, target: &TargetSpace, equiv: &EquivarianceSpec) -> Result<MapField> {
        target.validate()?;
        let n = grid.dim();
        let m = target.ambient_dim();
        let eq = match equiv {
            EquivarianceSpec::Auto => self.implied_equivariance(grid, target)?,
            other => other.build(n, target)?,
        };
        let lengths = grid.lengths().to_vec();
        match self {
            MapSpec::Constant { point } => {
                let p = if point.is_empty() {
                    target.origin()
                } else {
                    if point.len() != m {
                        return Err(Error::Config(format!("constant point needs {m} coordinates")));
                    }
                    let mut v = ZERO;
                    v[..m].copy_from_slice(point);
                    v
                };
                MapField::new(grid.clone(), target.clone(), eq, vec![p; grid.len()])
            }
            MapSpec::Linear { winding } => MapSpec::PerturbedLinear {
                winding: winding.clone(),
                perturbation: vec![ScalarFn::zero(); m],
            }
            .build(grid, target, equiv),
            MapSpec::PerturbedLinear { winding, perturbation } => {
                self.implied_equivariance(grid, target)?;
                if perturbation.len() != m {
                    return Err(Error::Config(format!("perturbation needs {m} components")));
                }
                MapField::from_fn(grid.clone(), target.clone(), eq, |x| {
                    let mut v = ZERO;
                    for i in 0..m {
                        v[i] = (0..n)
                            .map(|k| winding[i][k] * flat_period(target, i) * x[k] / lengths[k])
                            .sum::<f64>()
                            + perturbation[i].value(x);
                    }
                    v
                })
            }
            MapSpec::Normalized { components } => {
                let TargetSpace::Sphere { radius, .. } = target else {
                    return Err(Error::Config("normalized maps need a sphere target".into()));
                };
                if components.len() != m {
                    return Err(Error::Config(format!("normalized map needs {m} components")));
                }
                let values = (0..grid.len())
                    .map(|p| {
                        let x = grid.coords(p);
                        let mut v = ZERO;
                        for i in 0..m {
                            v[i] = components[i].value(&x);
                        }
                        let nv = crate::target::euclid_dot(&v, &v).sqrt();
                        if !(nv > 1e-8) {
                            return Err(Error::Config(format!("normalized map degenerates at point {p}")));
                        }
                        Ok(scale(radius / nv, &v))
                    })
                    .collect::<Result<Vec<_>>>()?;
                MapField::new(grid.clone(), target.clone(), eq, values)
            }
            MapSpec::Hyperboloid { spatial } => {
                if !target.is_hyperbolic() || spatial.len() + 1 != m {
                    return Err(Error::Config(format!("hyperboloid maps need {} spatial components", m - 1)));
                }
                MapField::from_fn(grid.clone(), target.clone(), eq, |x| {
                    let mut v = ZERO;
                    for i in 1..m {
                        v[i] = spatial[i - 1].value(x);
                    }
                    v[0] = (1.0 + v[1..].iter().map(|s| s * s).sum::<f64>()).sqrt();
                    v
                })
            }
            MapSpec::HyperbolicTube { rapidities, normal } => {
                if !target.is_hyperbolic() || m < 3 || rapidities.len() != n {
                    return Err(Error::Config(
                        "hyperbolic tubes need a hyperbolic target of dimension >= 2 and one rapidity per axis".into(),
                    ));
                }
                MapField::from_fn(grid.clone(), target.clone(), eq, |x| {
                    let s: f64 = (0..n).map(|k| rapidities[k] * x[k] / lengths[k]).sum();
                    let w = normal.value(x);
                    let mut v = ZERO;
                    v[0] = s.cosh() * w.cosh();
                    v[1] = s.sinh() * w.cosh();
                    v[2] = w.sinh();
                    v
                })
            }
            MapSpec::Csv { path } => MapField::from_csv(grid.clone(), target.clone(), eq, Path::new(path)),
        }
    }
}

/// Pads a short slice into an ambient vector.
pub fn vector(v: &[f64]) -> Vector {
    let mut out = ZERO;
    out[..v.len().min(MAX_AMB)].copy_from_slice(&v[..v.len().min(MAX_AMB)]);
    out
}
