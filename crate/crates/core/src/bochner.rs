//! Bochner-type identities evaluated as pointwise residuals.
//!
//! Each identity is written as `lhs - Σ rhs_i`; a [`ResidualReport`] stores the
//! signed contribution of every term at the worst grid point, so the terms add up
//! to the residual reported there.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::grid::{DVec, Mat, MAX_DIM, ZERO_MAT};
use crate::homotopy::geodesic_homotopy;
use crate::map::{
    differential, differential_norm_sq, second_fundamental_form, BilinearFormField, DifferentialField, MapField,
    TensionOperator,
};
use crate::metric::{divergence, domain_christoffels, domain_ricci, laplace_beltrami, MetricField};
use crate::stencil::StencilOrder;
use crate::target::{axpy, scale, sub, TargetSpace, Vector, ZERO};
use crate::weyl::{
    codifferential_sup, covariant_derivative_sym, higgs_quadratic, ricci_weyl_point, weyl_coefficient,
    weyl_laplacian_scalar, HiggsField,
};

/// Above this `sup |d^*Theta|` the Gauduchon form is flagged.
pub const GAUGE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity: String,
    pub grid: Vec<usize>,
    pub spacing: f64,
    pub sup_residual: f64,
    pub l2_residual: f64,
    /// Grid index and signed residual where `|residual|` is largest.
    pub worst_index: usize,
    pub worst_residual: f64,
    /// Signed contributions at `worst_index`; they sum to `worst_residual`.
    pub terms: BTreeMap<String, f64>,
    /// Sup of the relevant tension field when the identity assumes a solution.
    pub solution_defect: Option<f64>,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ResidualReport {
    pub(crate) fn assemble(identity: &str, g: &MetricField, parts: Vec<(&str, Vec<f64>)>) -> Self {
        let grid = g.grid();
        let len = grid.len();
        let residual: Vec<f64> = (0..len).map(|p| parts.iter().map(|(_, v)| v[p]).sum()).collect();
        let (worst_index, worst_residual) = residual
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, &v)| if v.abs() > bv.abs() { (i, v) } else { (bi, bv) });
        let cell = grid.cell_volume();
        let l2 = (residual
            .iter()
            .enumerate()
            .map(|(p, r)| r * r * g.sqrt_det(p))
            .sum::<f64>()
            * cell)
            .sqrt();
        ResidualReport {
            identity: identity.to_string(),
            grid: grid.sizes().to_vec(),
            spacing: grid.min_spacing(),
            sup_residual: worst_residual.abs(),
            l2_residual: l2,
            worst_index,
            worst_residual,
            terms: parts.iter().map(|(k, v)| (k.to_string(), v[worst_index])).collect(),
            solution_defect: None,
            extras: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    /// `|worst_residual - Σ terms|`.
    pub fn breakdown_defect(&self) -> f64 {
        (self.worst_residual - self.terms.values().sum::<f64>()).abs()
    }
}

/// Orthonormal frame of `(R^n, g)` by Gram-Schmidt over the axes in `ordering`.
pub fn domain_frame(g: &Mat, n: usize, ordering: &[usize]) -> [DVec; MAX_DIM] {
    let ip = |a: &DVec, b: &DVec| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[i][j] * a[i] * b[j];
            }
        }
        s
    };
    let mut out = [[0.0; MAX_DIM]; MAX_DIM];
    for (k, &axis) in ordering.iter().take(n).enumerate() {
        let mut v = [0.0; MAX_DIM];
        v[axis] = 1.0;
        for prev in out.iter().take(k) {
            let c = ip(&v, prev);
            for i in 0..n {
                v[i] -= c * prev[i];
            }
        }
        let nv = ip(&v, &v).sqrt();
        for x in v.iter_mut().take(n) {
            *x /= nv;
        }
        out[k] = v;
    }
    out
}

/// Pointwise data entering the elliptic identities.
#[derive(Clone, Copy, Debug)]
pub struct PointData {
    pub n: usize,
    pub g: Mat,
    pub inv: Mat,
    pub point: Vector,
    pub du: [Vector; MAX_DIM],
    /// Covariant Hessian `D^2 u(∂_a, ∂_b)`.
    pub hess: [[Vector; MAX_DIM]; MAX_DIM],
    pub ricci: Mat,
    /// Symmetrized `nabla Theta`.
    pub dtheta: Mat,
    pub theta: DVec,
}

/// Right-hand side pieces of the elliptic identities at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointTerms {
    pub hessian_sq: f64,
    /// `-Σ <R'(du e_a, du e_b) du e_a, du e_b>` with the target's curvature sign.
    pub target_curvature: f64,
    /// `Σ B(X_a, X_a)` for the Ricci-type form in use.
    pub ricci: f64,
    pub higgs: f64,
}

impl PointTerms {
    pub fn total(&self) -> f64 {
        self.hessian_sq + self.target_curvature + self.ricci + self.higgs
    }
}

fn quad_sum(target: &TargetSpace, d: &PointData, form: &Mat) -> f64 {
    let n = d.n;
    let mut s = 0.0;
    for f in target.tangent_frame(&d.point) {
        let mut x = [0.0; MAX_DIM];
        for a in 0..n {
            for b in 0..n {
                x[a] += d.inv[a][b] * target.inner(&f, &d.du[b]);
            }
        }
        for a in 0..n {
            for b in 0..n {
                s += form[a][b] * x[a] * x[b];
            }
        }
    }
    s
}

fn frame_terms(target: &TargetSpace, d: &PointData, ordering: &[usize]) -> (f64, f64) {
    let n = d.n;
    let e = domain_frame(&d.g, n, ordering);
    let push = |v: &DVec| {
        let mut w = ZERO;
        for a in 0..n {
            w = axpy(&w, v[a], &d.du[a]);
        }
        w
    };
    let due: Vec<Vector> = e.iter().take(n).map(push).collect();
    let mut hsq = 0.0;
    let mut curv = 0.0;
    for al in 0..n {
        for be in 0..n {
            let mut h = ZERO;
            for a in 0..n {
                for b in 0..n {
                    h = axpy(&h, e[al][a] * e[be][b], &d.hess[a][b]);
                }
            }
            hsq += target.norm_sq(&h);
            let r = target.curvature_tensor_unchecked(&due[al], &due[be], &due[be]);
            curv -= target.inner(&r, &due[al]);
        }
    }
    (hsq, curv)
}

/// Right-hand side of the Weyl Bochner identity in Ricci form:
/// `|∇du|^2 - curvature + Σ [Ric(X,X) + c (∇_X Theta)(X)]`.
pub fn bell_point(target: &TargetSpace, d: &PointData, ordering: &[usize]) -> PointTerms {
    let (hessian_sq, target_curvature) = frame_terms(target, d, ordering);
    let c = weyl_coefficient(d.n);
    let mut ct = ZERO_MAT;
    for i in 0..d.n {
        for j in 0..d.n {
            ct[i][j] = c * d.dtheta[i][j];
        }
    }
    PointTerms {
        hessian_sq,
        target_curvature,
        ricci: quad_sum(target, d, &d.ricci),
        higgs: quad_sum(target, d, &ct),
    }
}

/// Right-hand side in Ricci-Weyl form:
/// `|∇du|^2 - curvature + Σ [Ric^W(X,X) + (c/2)(|Theta|^2|X|^2 - Theta(X)^2)]`.
pub fn blemma_point(target: &TargetSpace, d: &PointData, ordering: &[usize]) -> PointTerms {
    let (hessian_sq, target_curvature) = frame_terms(target, d, ordering);
    let n = d.n;
    let c = weyl_coefficient(n);
    let mut q = ZERO_MAT;
    let tn: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| d.inv[i][j] * d.theta[i] * d.theta[j])
        .sum();
    for i in 0..n {
        for j in 0..n {
            q[i][j] = tn * d.g[i][j] - d.theta[i] * d.theta[j];
        }
    }
    let rw = ricci_weyl_point(&d.ricci, &d.dtheta, &q, n);
    let mut hq = ZERO_MAT;
    for i in 0..n {
        for j in 0..n {
            hq[i][j] = 0.5 * c * q[i][j];
        }
    }
    PointTerms {
        hessian_sq,
        target_curvature,
        ricci: quad_sum(target, d, &rw),
        higgs: quad_sum(target, d, &hq),
    }
}

/// `∇'_a V` along `u` by central differences of transported values.
pub fn covariant_gradient(u: &MapField, v: &[Vector], order: StencilOrder) -> Vec<[Vector; MAX_DIM]> {
    let grid = u.grid();
    let n = grid.dim();
    let target = u.target();
    let equiv = u.equivariance();
    let d1 = order.first_derivative();
    (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let up = u.at(p);
            let mut out = [ZERO; MAX_DIM];
            for (a, slot) in out.iter_mut().enumerate().take(n) {
                let mut acc = ZERO;
                for &(o, w) in d1 {
                    let (q, wr) = grid.step(p, a, o);
                    let (uq, vq) = if wr == 0 {
                        (*u.at(q), v[q])
                    } else {
                        (equiv.apply(a, wr, u.at(q)), equiv.apply_vector(a, wr, &v[q]))
                    };
                    acc = axpy(&acc, w, &target.transport_unchecked(&uq, up, &vq));
                }
                *slot = scale(1.0 / grid.spacing(a), &acc);
            }
            out
        })
        .collect()
}

fn pair_trace(target: &TargetSpace, inv: &Mat, a: &[Vector; MAX_DIM], b: &[Vector; MAX_DIM], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if inv[i][j] != 0.0 {
                s += inv[i][j] * target.inner(&a[i], &b[j]);
            }
        }
    }
    s
}

struct Ingredients {
    du: DifferentialField,
    hess: BilinearFormField,
    ricci: Vec<Mat>,
    dtheta: Vec<Mat>,
    density: Vec<f64>,
}

fn ingredients(u: &MapField, g: &MetricField, theta: &HiggsField) -> Result<Ingredients> {
    g.grid().check_same(u.grid(), "map")?;
    g.grid().check_same(theta.grid(), "Higgs field")?;
    let order = g.order();
    let lc = domain_christoffels(g);
    let du = differential(u, order)?;
    let hess = second_fundamental_form(u, &lc, order)?;
    let n = g.dim();
    let density = du
        .iter()
        .enumerate()
        .map(|(p, d)| differential_norm_sq(u.target(), g.inverse(p), d, n))
        .collect();
    let dtheta = (0..g.grid().len())
        .map(|p| {
            if theta.is_zero() {
                ZERO_MAT
            } else {
                covariant_derivative_sym(g, theta, &lc, p)
            }
        })
        .collect();
    Ok(Ingredients {
        du,
        hess,
        ricci: domain_ricci(g),
        dtheta,
        density,
    })
}

fn point_data(u: &MapField, g: &MetricField, theta: &HiggsField, ing: &Ingredients, p: usize) -> PointData {
    PointData {
        n: g.dim(),
        g: *g.at(p),
        inv: *g.inverse(p),
        point: *u.at(p),
        du: ing.du[p],
        hess: ing.hess[p],
        ricci: ing.ricci[p],
        dtheta: ing.dtheta[p],
        theta: *theta.at(p),
    }
}

const IDENTITY_ORDER: [usize; MAX_DIM] = [0, 1, 2, 3];

fn rhs_parts(
    u: &MapField,
    g: &MetricField,
    theta: &HiggsField,
    ing: &Ingredients,
    eval: fn(&TargetSpace, &PointData, &[usize]) -> PointTerms,
) -> Vec<PointTerms> {
    (0..g.grid().len())
        .into_par_iter()
        .map(|p| eval(u.target(), &point_data(u, g, theta, ing, p), &IDENTITY_ORDER))
        .collect()
}

fn negated<F: Fn(&PointTerms) -> f64>(terms: &[PointTerms], f: F) -> Vec<f64> {
    terms.iter().map(|t| -f(t)).collect()
}

/// `Σ g^ab <∇'_a V, du_b>`.
fn gradient_pairing(u: &MapField, g: &MetricField, v: &[Vector], du: &DifferentialField) -> Vec<f64> {
    let grad = covariant_gradient(u, v, g.order());
    let n = g.dim();
    (0..g.grid().len())
        .map(|p| pair_trace(u.target(), g.inverse(p), &grad[p], &du[p], n))
        .collect()
}

/// `½Δ|du|^2 = |∇du|^2 - curvature + Σ Ric(X,X) + Σ <∇'_{e_a} tau, du e_a>` for any map.
pub fn bochner_general_residual(u: &MapField, g: &MetricField) -> Result<ResidualReport> {
    let theta = HiggsField::zero(g);
    let ing = ingredients(u, g, &theta)?;
    let lhs: Vec<f64> = laplace_beltrami(g, &ing.density).into_iter().map(|x| 0.5 * x).collect();
    let terms = rhs_parts(u, g, &theta, &ing, bell_point);
    let tau = TensionOperator::harmonic(g).apply(u)?;
    let tg = gradient_pairing(u, g, &tau.values, &ing.du);
    Ok(ResidualReport::assemble(
        "bochner_general",
        g,
        vec![
            ("laplacian", lhs),
            ("hessian", negated(&terms, |t| t.hessian_sq)),
            ("target_curvature", negated(&terms, |t| t.target_curvature)),
            ("domain_ricci", negated(&terms, |t| t.ricci)),
            ("tension_gradient", tg.into_iter().map(|x| -x).collect()),
        ],
    ))
}

/// The elliptic Weyl identities in Ricci form and in Ricci-Weyl form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylBochner {
    pub bell: ResidualReport,
    pub blemma: ResidualReport,
}

/// Both elliptic identities with `½Δ^W|du|^2` on the left. The defect
/// `Σ <∇' tau^W, du e_a>`, which vanishes for exact solutions, is carried as its own term.
/// The Ricci-Weyl form is exact only for a co-closed Higgs field; its report carries
/// `½ |d^*Theta| |du|^2` as `gauge_defect` and a warning above [`GAUGE_TOL`].
pub fn bochner_weyl_residual(u: &MapField, g: &MetricField, theta: &HiggsField) -> Result<WeylBochner> {
    let ing = ingredients(u, g, theta)?;
    let lhs: Vec<f64> = weyl_laplacian_scalar(g, theta, &ing.density)?
        .into_iter()
        .map(|x| 0.5 * x)
        .collect();
    let tau = TensionOperator::weyl(g, theta)?.apply(u)?;
    let defect = tau.sup_norm(u.target());
    let tg: Vec<f64> = gradient_pairing(u, g, &tau.values, &ing.du)
        .into_iter()
        .map(|x| -x)
        .collect();
    let make = |id: &str, terms: Vec<PointTerms>, ricci: &str| {
        let mut r = ResidualReport::assemble(
            id,
            g,
            vec![
                ("laplacian", lhs.clone()),
                ("hessian", negated(&terms, |t| t.hessian_sq)),
                ("target_curvature", negated(&terms, |t| t.target_curvature)),
                (ricci, negated(&terms, |t| t.ricci)),
                ("higgs", negated(&terms, |t| t.higgs)),
                ("tension_defect", tg.clone()),
            ],
        );
        r.solution_defect = Some(defect);
        r
    };
    let bell = make("bochner_weyl_ricci", rhs_parts(u, g, theta, &ing, bell_point), "domain_ricci");
    let mut blemma = make(
        "bochner_weyl_gauduchon",
        rhs_parts(u, g, theta, &ing, blemma_point),
        "ricci_weyl",
    );
    let div = divergence(g, theta.values());
    let gauge = div
        .iter()
        .zip(&ing.density)
        .map(|(d, e)| 0.5 * (d * e).abs())
        .fold(0.0, f64::max);
    let cod = codifferential_sup(g, theta);
    blemma.extras.insert("gauge_defect".into(), gauge);
    blemma.extras.insert("codifferential_sup".into(), cod);
    if cod > GAUGE_TOL {
        blemma.warnings.push(format!(
            "metric is not Gauduchon: sup |d*Theta| = {cod:e}; the Ricci-Weyl form carries a gauge defect up to {gauge:e}"
        ));
    }
    Ok(WeylBochner { bell, blemma })
}

/// The two parabolic identities along the flow, evaluated at `prev` with the
/// forward difference quotient `(· (next) - · (prev)) / dt` for time derivatives.
pub fn bochner_parabolic_residual(
    prev: &FlowState,
    next: Option<&FlowState>,
    g: &MetricField,
    theta: &HiggsField,
) -> Result<(ResidualReport, ResidualReport)> {
    let next = next.ok_or_else(|| Error::InsufficientHistory("two consecutive flow states are required".into()))?;
    if next.step != prev.step + 1 || !(next.t > prev.t) {
        return Err(Error::InsufficientHistory(format!(
            "states at steps {} and {} are not consecutive",
            prev.step, next.step
        )));
    }
    let dt = next.t - prev.t;
    let u = &prev.u;
    let target = u.target();
    let n = g.dim();
    let ing = ingredients(u, g, theta)?;
    let next_density = next.du_norm_sq(g);
    let lap = weyl_laplacian_scalar(g, theta, &ing.density)?;
    let terms = rhs_parts(u, g, theta, &ing, bell_point);
    let mut first = ResidualReport::assemble(
        "bochner_parabolic_energy",
        g,
        vec![
            ("laplacian", lap.iter().map(|x| 0.5 * x).collect()),
            (
                "time_derivative",
                next_density
                    .iter()
                    .zip(&ing.density)
                    .map(|(a, b)| -0.5 * (a - b) / dt)
                    .collect(),
            ),
            ("hessian", negated(&terms, |t| t.hessian_sq)),
            ("target_curvature", negated(&terms, |t| t.target_curvature)),
            ("domain_ricci", negated(&terms, |t| t.ricci)),
            ("higgs", negated(&terms, |t| t.higgs)),
        ],
    );
    let v = &prev.velocity;
    let v2: Vec<f64> = v.iter().map(|x| target.norm_sq(x)).collect();
    let v2_next: Vec<f64> = next.velocity.iter().map(|x| target.norm_sq(x)).collect();
    let lap_v = weyl_laplacian_scalar(g, theta, &v2)?;
    let grad_v = covariant_gradient(u, v, g.order());
    let grad_sq: Vec<f64> = (0..g.grid().len())
        .map(|p| -pair_trace(target, g.inverse(p), &grad_v[p], &grad_v[p], n))
        .collect();
    let curv: Vec<f64> = (0..g.grid().len())
        .map(|p| {
            let inv = g.inverse(p);
            let d = &ing.du[p];
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    if inv[a][b] != 0.0 {
                        let r = target.curvature_tensor_unchecked(&d[a], &v[p], &d[b]);
                        s += inv[a][b] * target.inner(&r, &v[p]);
                    }
                }
            }
            // -Σ<R'(du e, v) du e, v> with R' of opposite sign to R
            -s
        })
        .collect();
    let mut second = ResidualReport::assemble(
        "bochner_parabolic_velocity",
        g,
        vec![
            ("laplacian", lap_v.iter().map(|x| 0.5 * x).collect()),
            (
                "time_derivative",
                v2_next.iter().zip(&v2).map(|(a, b)| -0.5 * (a - b) / dt).collect(),
            ),
            ("velocity_gradient", grad_sq),
            ("target_curvature", curv),
        ],
    );
    let defect = v2.iter().cloned().fold(0.0, f64::max).sqrt();
    first.solution_defect = Some(defect);
    second.solution_defect = Some(defect);
    first.extras.insert("dt".into(), dt);
    second.extras.insert("dt".into(), dt);
    Ok((first, second))
}

/// Pointwise margin of the distance inequality
/// `Δ^W ρ^2 - 2 Σ|u_a - P v_a|^2 + 2ρ(|tau^W u| + |tau^W v|) >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyIneqReport {
    pub min_margin: f64,
    pub argmin: usize,
    pub rho_sup: f64,
    #[serde(skip)]
    pub margin: Vec<f64>,
}

pub fn syineq_check(u: &MapField, v: &MapField, g: &MetricField, theta: &HiggsField) -> Result<SyIneqReport> {
    let target = u.target();
    if target.curvature() > 0.0 {
        return Err(Error::Unsupported(
            "the distance inequality needs a target of non-positive curvature".into(),
        ));
    }
    let h = geodesic_homotopy(u, v, &[], None)?;
    let n = g.dim();
    let rho2: Vec<f64> = h.rho.iter().map(|r| r * r).collect();
    let lap = weyl_laplacian_scalar(g, theta, &rho2)?;
    let du = differential(u, g.order())?;
    let dv = differential(v, g.order())?;
    let op = TensionOperator::weyl(g, theta)?;
    let tu = op.apply(u)?;
    let tv = op.apply(v)?;
    let margin: Vec<f64> = (0..g.grid().len())
        .into_par_iter()
        .map(|p| {
            let (up, vp) = (u.at(p), v.at(p));
            let mut diff = [ZERO; MAX_DIM];
            for a in 0..n {
                diff[a] = sub(&du[p][a], &target.transport_unchecked(vp, up, &dv[p][a]));
            }
            let gap = pair_trace(target, g.inverse(p), &diff, &diff, n);
            lap[p] - 2.0 * gap + 2.0 * h.rho[p] * (target.norm(&tu.values[p]) + target.norm(&tv.values[p]))
        })
        .collect();
    let (argmin, min_margin) = margin
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &m)| if m < bv { (i, m) } else { (bi, bv) });
    Ok(SyIneqReport {
        min_margin,
        argmin,
        rho_sup: h.rho_sup,
        margin,
    })
}

/// Eigenvalues, relative to `g`, of `Ric^W(X,X) + (c/2)(|Theta|^2|X|^2 - Theta(X)^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RicciCondSpectrum {
    pub min_eigenvalue: f64,
    pub max_abs_eigenvalue: f64,
    pub rank_tolerance: f64,
    pub max_rank: usize,
    /// Number of grid points per rank.
    pub rank_histogram: Vec<usize>,
    #[serde(skip)]
    pub eigenvalues: Vec<Vec<f64>>,
    #[serde(skip)]
    pub form: Vec<Mat>,
}

pub fn ricci_cond_form(g: &MetricField, theta: &HiggsField) -> Result<Vec<Mat>> {
    g.grid().check_same(theta.grid(), "Higgs field")?;
    let n = g.dim();
    let c = weyl_coefficient(n);
    let ric = domain_ricci(g);
    let lc = domain_christoffels(g);
    Ok((0..g.grid().len())
        .map(|p| {
            if theta.is_zero() {
                return ric[p];
            }
            let dt = covariant_derivative_sym(g, theta, &lc, p);
            let q = higgs_quadratic(g, theta, p);
            let mut r = ricci_weyl_point(&ric[p], &dt, &q, n);
            for i in 0..n {
                for j in 0..n {
                    r[i][j] += 0.5 * c * q[i][j];
                }
            }
            r
        })
        .collect())
}

pub fn ricci_cond_spectrum(g: &MetricField, theta: &HiggsField, rank_tol: f64) -> Result<RicciCondSpectrum> {
    let form = ricci_cond_form(g, theta)?;
    let n = g.dim();
    let eigenvalues: Vec<Vec<f64>> = form
        .par_iter()
        .enumerate()
        .map(|(p, q)| {
            let gm = DMatrix::from_fn(n, n, |i, j| g.at(p)[i][j]);
            let qm = DMatrix::from_fn(n, n, |i, j| q[i][j]);
            let l = gm.cholesky().expect("metric is positive definite").l();
            let li = l.try_inverse().expect("triangular factor is invertible");
            let a = &li * qm * li.transpose();
            let a = (&a + a.transpose()) * 0.5;
            let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().cloned().collect();
            ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
            ev
        })
        .collect();
    let mut rank_histogram = vec![0; n + 1];
    for ev in &eigenvalues {
        rank_histogram[ev.iter().filter(|e| e.abs() > rank_tol).count()] += 1;
    }
    Ok(RicciCondSpectrum {
        min_eigenvalue: eigenvalues.iter().flatten().cloned().fold(f64::INFINITY, f64::min),
        max_abs_eigenvalue: eigenvalues.iter().flatten().fold(0.0, |m, e| m.max(e.abs())),
        rank_tolerance: rank_tol,
        max_rank: rank_histogram.iter().rposition(|&c| c > 0).unwrap_or(0),
        rank_histogram,
        eigenvalues,
        form,
    })
}
