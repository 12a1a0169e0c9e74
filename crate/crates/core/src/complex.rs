//! Complex structure on even-dimensional tori: holomorphic frames, the
//! Hermitian tension operator and the pluriharmonic residual.
//!
//! `J` pairs axes `(0,1)` and `(2,3)`: `J e_{2k} = e_{2k+1}`. The holomorphic
//! frame is `Z_a = (e_{2a} - i e_{2a+1}) / 2`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::analytic::ScalarFn;
use crate::grid::{identity_mat, DVec, DomainGrid, Mat, MAX_DIM, ZERO_MAT};
use crate::map::{second_fundamental_form, Flavor, MapField, TensionField, TensionOperator};
use crate::metric::{domain_christoffels, ChristoffelField, MetricField};
use crate::target::{TargetSpace, Vector, MAX_AMB};
use crate::weyl::{weyl_connection, HiggsField};

pub type CVector = [Complex64; MAX_AMB];
pub const CZERO: CVector = [Complex64::new(0.0, 0.0); MAX_AMB];

/// The constant complex structure as a matrix `J^k_l`.
pub fn j_matrix(n: usize) -> Mat {
    let mut j = ZERO_MAT;
    for k in 0..n / 2 {
        j[2 * k + 1][2 * k] = 1.0;
        j[2 * k][2 * k + 1] = -1.0;
    }
    j
}

/// Components of `Z_a` in the real coordinate basis.
pub fn holomorphic_frame(m: usize) -> Vec<[Complex64; MAX_DIM]> {
    (0..m)
        .map(|a| {
            let mut z = [Complex64::new(0.0, 0.0); MAX_DIM];
            z[2 * a] = Complex64::new(0.5, 0.0);
            z[2 * a + 1] = Complex64::new(0.0, -0.5);
            z
        })
        .collect()
}

pub fn conj_vec(z: &[Complex64; MAX_DIM]) -> [Complex64; MAX_DIM] {
    let mut out = *z;
    out.iter_mut().for_each(|c| *c = c.conj());
    out
}

/// `B(X, Y)` for a real bilinear form extended complex-bilinearly.
pub fn complexify_form(b: &Mat, x: &[Complex64; MAX_DIM], y: &[Complex64; MAX_DIM], n: usize) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if b[i][j] != 0.0 {
                s += x[i] * y[j] * b[i][j];
            }
        }
    }
    s
}

/// `T(X, Y)` for a real target-valued bilinear form.
pub fn complexify_vector_form(
    t: &[[Vector; MAX_DIM]; MAX_DIM],
    x: &[Complex64; MAX_DIM],
    y: &[Complex64; MAX_DIM],
    n: usize,
) -> CVector {
    let mut out = CZERO;
    for i in 0..n {
        for j in 0..n {
            let c = x[i] * y[j];
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&t[i][j]) {
                *o += c * v;
            }
        }
    }
    out
}

/// `du(X)` for a complex domain vector.
pub fn complexify_vector(du: &[Vector; MAX_DIM], x: &[Complex64; MAX_DIM], n: usize) -> CVector {
    let mut out = CZERO;
    for i in 0..n {
        if x[i].re == 0.0 && x[i].im == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(&du[i]) {
            *o += x[i] * v;
        }
    }
    out
}

/// Complex-bilinear extension of the target metric.
#[inline]
pub fn cinner(target: &TargetSpace, a: &CVector, b: &CVector) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..MAX_AMB {
        let t = a[i] * b[i];
        if i == 0 && target.is_hyperbolic() {
            s -= t;
        } else {
            s += t;
        }
    }
    s
}

pub fn cconj(a: &CVector) -> CVector {
    let mut out = *a;
    out.iter_mut().for_each(|c| *c = c.conj());
    out
}

/// An even-dimensional periodic domain with its J-invariant metric.
#[derive(Clone, Debug)]
pub struct ComplexDomain {
    metric: MetricField,
    m: usize,
    frame: Vec<[Complex64; MAX_DIM]>,
}

impl ComplexDomain {
    pub fn new(metric: MetricField) -> Result<Self> {
        let n = metric.dim();
        if n % 2 != 0 {
            return Err(Error::NotComplex(format!("domain dimension {n} is odd")));
        }
        let j = j_matrix(n);
        for p in 0..metric.grid().len() {
            let g = metric.at(p);
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        for l in 0..n {
                            s += j[k][a] * g[k][l] * j[l][b];
                        }
                    }
                    if (s - g[a][b]).abs() > 1e-12 * (1.0 + g[a][b].abs()) {
                        return Err(Error::NotComplex(format!(
                            "metric is not J-invariant at point {p}"
                        )));
                    }
                }
            }
        }
        Ok(ComplexDomain {
            m: n / 2,
            frame: holomorphic_frame(n / 2),
            metric,
        })
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    /// Complex dimension.
    pub fn complex_dim(&self) -> usize {
        self.m
    }

    pub fn frame(&self) -> &[[Complex64; MAX_DIM]] {
        &self.frame
    }

    /// `g_{a b̄} = g(Z_a, conj Z_b)`.
    pub fn hermitian_metric(&self, p: usize) -> DMatrix<Complex64> {
        let n = self.metric.dim();
        let g = self.metric.at(p);
        DMatrix::from_fn(self.m, self.m, |a, b| {
            complexify_form(g, &self.frame[a], &conj_vec(&self.frame[b]), n)
        })
    }

    /// `g^{a b̄}` with `sum_b g^{a b̄} g_{c b̄} = delta^a_c`.
    pub fn hermitian_inverse(&self, p: usize) -> DMatrix<Complex64> {
        let h = self.hermitian_metric(p);
        h.transpose()
            .try_inverse()
            .expect("hermitian form of a positive metric is invertible")
    }

    /// `(1,0)`-components `v^a` of a real vector: `v = v^a Z_a + conj`.
    pub fn holomorphic_components(&self, v: &DVec) -> Vec<Complex64> {
        (0..self.m)
            .map(|a| Complex64::new(v[2 * a], v[2 * a + 1]))
            .collect()
    }
}

/// Kähler metric `δ + Hess Φ + Jᵀ (Hess Φ) J` of a potential `Φ` on a flat complex torus.
pub fn kahler_from_potential(grid: DomainGrid, phi: &ScalarFn) -> Result<MetricField> {
    let n = grid.dim();
    if n % 2 != 0 {
        return Err(Error::NotComplex(format!("domain dimension {n} is odd")));
    }
    let j = j_matrix(n);
    MetricField::from_fn(grid, |x| {
        let h = phi.hessian(x);
        let mut g = identity_mat(n);
        for a in 0..n {
            for b in 0..n {
                let mut s = h[a][b];
                for k in 0..n {
                    for l in 0..n {
                        s += j[k][a] * h[k][l] * j[l][b];
                    }
                }
                g[a][b] += s;
            }
        }
        g
    })
}

/// `delta J = -trace_g (nabla J)` with the Levi-Civita connection.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaJ {
    pub field: Vec<DVec>,
    pub sup: f64,
    pub cosymplectic: bool,
}

pub const COSYMPLECTIC_TOL: f64 = 1e-8;

/// `(nabla_a J)^k_b = Gamma^k_{al} J^l_b - Gamma^l_{ab} J^k_l` (J has constant components).
fn nabla_j(conn: &ChristoffelField, p: usize, n: usize) -> [Mat; MAX_DIM] {
    let j = j_matrix(n);
    let gm = &conn.gamma[p];
    let mut out = [ZERO_MAT; MAX_DIM];
    for (a, oa) in out.iter_mut().enumerate().take(n) {
        for k in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += gm[k][a][l] * j[l][b] - gm[l][a][b] * j[k][l];
                }
                oa[k][b] = s;
            }
        }
    }
    out
}

pub fn delta_j(cd: &ComplexDomain) -> DeltaJ {
    let g = cd.metric();
    let n = g.dim();
    let lc = domain_christoffels(g);
    let field: Vec<DVec> = (0..g.grid().len())
        .map(|p| {
            let nj = nabla_j(&lc, p, n);
            let inv = g.inverse(p);
            let mut v = [0.0; MAX_DIM];
            for (k, vk) in v.iter_mut().enumerate().take(n) {
                for a in 0..n {
                    for b in 0..n {
                        *vk -= inv[a][b] * nj[a][k][b];
                    }
                }
            }
            v
        })
        .collect();
    let sup = field
        .iter()
        .enumerate()
        .map(|(p, v)| vector_norm(g, p, v))
        .fold(0.0, f64::max);
    DeltaJ {
        field,
        sup,
        cosymplectic: sup < COSYMPLECTIC_TOL,
    }
}

fn vector_norm(g: &MetricField, p: usize, v: &DVec) -> f64 {
    let m = g.at(p);
    let n = g.dim();
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            s += m[a][b] * v[a] * v[b];
        }
    }
    s.max(0.0).sqrt()
}

/// Sup of `|nabla J|` for an arbitrary torsion-free domain connection (Weyl connections
/// preserving J give zero).
pub fn j_compatibility_defect(conn: &ChristoffelField) -> f64 {
    let n = conn.grid.dim();
    (0..conn.grid.len())
        .map(|p| {
            nabla_j(conn, p, n)
                .iter()
                .flat_map(|m| m.iter().flatten())
                .fold(0.0, |a: f64, x| a.max(x.abs()))
        })
        .fold(0.0, f64::max)
}

/// `tau^H = tau - du(J delta J)`.
pub fn hermitian_tension(u: &MapField, cd: &ComplexDomain) -> Result<TensionField> {
    let g = cd.metric();
    let n = g.dim();
    let j = j_matrix(n);
    let dj = delta_j(cd);
    let extra: Vec<DVec> = dj
        .field
        .iter()
        .map(|v| {
            let mut w = [0.0; MAX_DIM];
            for k in 0..n {
                w[k] = (0..n).map(|l| j[k][l] * v[l]).sum();
            }
            w
        })
        .collect();
    TensionOperator::harmonic(g)
        .with_extra_drift(&extra, Flavor::Hermitian)
        .apply(u)
}

/// Pointwise norm of `W(Z_a, conj Z_c)` where `W` is the Weyl Hessian of `u`:
/// `|W|^2 = g^{a m̄} conj(g^{c n̄}) <W_{a c̄}, conj W_{m n̄}>`.
pub fn pluriharmonic_residual(u: &MapField, cd: &ComplexDomain, theta: &HiggsField) -> Result<Vec<f64>> {
    let g = cd.metric();
    let n = g.dim();
    let m = cd.complex_dim();
    let conn = weyl_connection(g, theta)?;
    let w = second_fundamental_form(u, &conn, g.order())?;
    let target = u.target();
    Ok((0..g.grid().len())
        .map(|p| {
            let ginv = cd.hermitian_inverse(p);
            let frame = cd.frame();
            let wc: Vec<Vec<CVector>> = (0..m)
                .map(|a| {
                    (0..m)
                        .map(|c| complexify_vector_form(&w[p], &frame[a], &conj_vec(&frame[c]), n))
                        .collect()
                })
                .collect();
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..m {
                for mu in 0..m {
                    for c in 0..m {
                        for nu in 0..m {
                            s += ginv[(a, mu)]
                                * ginv[(c, nu)].conj()
                                * cinner(target, &wc[a][c], &cconj(&wc[mu][nu]));
                        }
                    }
                }
            }
            s.re.max(0.0).sqrt()
        })
        .collect())
}
