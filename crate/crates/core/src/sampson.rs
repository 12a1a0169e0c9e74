//! The Sampson-type identity for maps from Hermitian-Weyl tori.
//!
//! With `ψ = e(u) g - u^*g'`, `ξ_α = g^{βγ̄} ∇_β ψ_{αγ̄}` and the Weyl Hessian `W`,
//! a Weyl-harmonic map satisfies
//!
//! ```text
//! g^{αμ̄} ∇_μ̄ ξ_α + ξ_α Θ^α
//!     = g^{αμ̄} g^{βγ̄} <W_{γ̄α}, W_{μ̄β}> + g^{αμ̄} g^{βγ̄} <R(u_μ̄, u_γ̄) u_α, u_β>
//! ```
//!
//! where `R` is the target curvature in the convention of
//! [`TargetSpace::curvature_tensor`]. Under non-positive Hermitian sectional
//! curvature both terms on the right are non-negative.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bochner::ResidualReport;
use crate::complex::{cinner, complexify_vector, complexify_vector_form, conj_vec, j_compatibility_defect, CVector, ComplexDomain, CZERO};
use crate::error::Result;
use crate::grid::{Mat, MAX_DIM, ZERO_MAT};
use crate::map::{differential, second_fundamental_form, MapField};
use crate::metric::ChristoffelField;
use crate::stencil::d1;
use crate::target::{axpy, scale, TargetSpace, ZERO};
use crate::weyl::{exterior_derivative, weyl_connection, HiggsField};

/// Above this `sup |∇J|` the Weyl connection is reported as not complex.
pub const J_DEFECT_TOL: f64 = 1e-10;
/// Above this `sup |dΘ|` the Lee form is reported as not closed.
pub const CLOSED_TOL: f64 = 1e-8;

type Frame = [Complex64; MAX_DIM];

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `R(z, w) y = k (<w, y> z - <z, y> w)`, complex-bilinear.
fn ccurvature(target: &TargetSpace, z: &CVector, w: &CVector, y: &CVector) -> CVector {
    let k = target.curvature();
    let mut out = CZERO;
    if k == 0.0 {
        return out;
    }
    let a = cinner(target, w, y) * k;
    let b = cinner(target, z, y) * k;
    for i in 0..out.len() {
        out[i] = a * z[i] - b * w[i];
    }
    out
}

fn cnorm(target: &TargetSpace, v: &CVector) -> f64 {
    let c: CVector = std::array::from_fn(|i| v[i].conj());
    cinner(target, v, &c).re.max(0.0).sqrt()
}

/// `(∇_k T)_{ab}` for a real symmetric 2-tensor field given at all points.
fn covariant_derivative_2tensor(
    field: &[Mat],
    conn: &ChristoffelField,
    p: usize,
    n: usize,
    comps: &[Vec<f64>],
    order: crate::stencil::StencilOrder,
) -> [Mat; MAX_DIM] {
    let grid = &conn.grid;
    let gm = &conn.gamma[p];
    let t = &field[p];
    let mut out = [ZERO_MAT; MAX_DIM];
    for (k, ok) in out.iter_mut().enumerate().take(n) {
        for a in 0..n {
            for b in a..n {
                let mut s = d1(grid, &comps[a * MAX_DIM + b], p, k, order);
                for c in 0..n {
                    s -= gm[c][k][a] * t[c][b] + gm[c][k][b] * t[a][c];
                }
                ok[a][b] = s;
                ok[b][a] = s;
            }
        }
    }
    out
}

/// `sup` over index triples of `|∇_μ̄ W_{γ̄α} - ∇_γ̄ W_{μ̄α} - R(u_μ̄, u_γ̄) u_α|`.
///
/// This commutation holds for every map when the Weyl connection preserves `J`
/// and its curvature has type `(1,1)`.
pub fn commutator_residual(u: &MapField, cd: &ComplexDomain, theta: &HiggsField) -> Result<Vec<f64>> {
    let g = cd.metric();
    g.grid().check_same(u.grid(), "map")?;
    let order = g.order();
    let conn = weyl_connection(g, theta)?;
    let w = second_fundamental_form(u, &conn, order)?;
    let du = differential(u, order)?;
    let grid = g.grid();
    let n = g.dim();
    let m = cd.complex_dim();
    let target = u.target();
    let equiv = u.equivariance();
    let stencil = order.first_derivative();
    let frame = cd.frame();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|p| {
            let up = u.at(p);
            // dw[k][a][b] = (∇_k W)_{ab}
            let mut dw = [[[ZERO; MAX_DIM]; MAX_DIM]; MAX_DIM];
            for (k, dk) in dw.iter_mut().enumerate().take(n) {
                for a in 0..n {
                    for b in a..n {
                        let mut acc = ZERO;
                        for &(o, c) in stencil {
                            let (q, wr) = grid.step(p, k, o);
                            let (uq, vq) = if wr == 0 {
                                (*u.at(q), w[q][a][b])
                            } else {
                                (equiv.apply(k, wr, u.at(q)), equiv.apply_vector(k, wr, &w[q][a][b]))
                            };
                            acc = axpy(&acc, c, &target.transport_unchecked(&uq, up, &vq));
                        }
                        let mut v = scale(1.0 / grid.spacing(k), &acc);
                        let gm = &conn.gamma[p];
                        for c in 0..n {
                            v = axpy(&v, -gm[c][k][a], &w[p][c][b]);
                            v = axpy(&v, -gm[c][k][b], &w[p][a][c]);
                        }
                        dk[a][b] = v;
                        dk[b][a] = v;
                    }
                }
            }
            let bar: Vec<Frame> = frame.iter().map(conj_vec).collect();
            let eval = |x: &Frame, y: &Frame, z: &Frame| -> CVector {
                let mut out = CZERO;
                for k in 0..n {
                    if x[k] == czero() {
                        continue;
                    }
                    let v = complexify_vector_form(&dw[k], y, z, n);
                    for i in 0..out.len() {
                        out[i] += x[k] * v[i];
                    }
                }
                out
            };
            let mut sup: f64 = 0.0;
            for mu in 0..m {
                for ga in 0..m {
                    for al in 0..m {
                        let a = eval(&bar[mu], &bar[ga], &frame[al]);
                        let b = eval(&bar[ga], &bar[mu], &frame[al]);
                        let r = ccurvature(
                            target,
                            &complexify_vector(&du[p], &bar[mu], n),
                            &complexify_vector(&du[p], &bar[ga], n),
                            &complexify_vector(&du[p], &frame[al], n),
                        );
                        let diff: CVector = std::array::from_fn(|i| a[i] - b[i] - r[i]);
                        sup = sup.max(cnorm(target, &diff));
                    }
                }
            }
            sup
        })
        .collect())
}

/// Evaluates the identity pointwise. `terms` holds the real parts of
/// `weyl_divergence + lee_pairing - hessian - target_curvature`; the extras record
/// the imaginary part, the two computations of `ξ`, and the commutation defect.
pub fn sampson_residual(u: &MapField, cd: &ComplexDomain, theta: &HiggsField) -> Result<ResidualReport> {
    let g = cd.metric();
    g.grid().check_same(u.grid(), "map")?;
    g.grid().check_same(theta.grid(), "Higgs field")?;
    let order = g.order();
    let grid = g.grid();
    let len = grid.len();
    let n = g.dim();
    let m = cd.complex_dim();
    let target = u.target();
    let conn = weyl_connection(g, theta)?;
    let w = second_fundamental_form(u, &conn, order)?;
    let du = differential(u, order)?;
    let frame = cd.frame();
    let bar: Vec<Frame> = frame.iter().map(conj_vec).collect();

    // ψ = e g - u^*g' as a real tensor
    let psi: Vec<Mat> = (0..len)
        .into_par_iter()
        .map(|p| {
            let gp = g.at(p);
            let inv = g.inverse(p);
            let mut pull = ZERO_MAT;
            for a in 0..n {
                for b in a..n {
                    pull[a][b] = target.inner(&du[p][a], &du[p][b]);
                    pull[b][a] = pull[a][b];
                }
            }
            let mut e = 0.0;
            for a in 0..n {
                for b in 0..n {
                    e += 0.5 * inv[a][b] * pull[a][b];
                }
            }
            let mut out = ZERO_MAT;
            for a in 0..n {
                for b in 0..n {
                    out[a][b] = e * gp[a][b] - pull[a][b];
                }
            }
            out
        })
        .collect();
    let mut psi_comps = vec![Vec::new(); MAX_DIM * MAX_DIM];
    for a in 0..n {
        for b in a..n {
            psi_comps[a * MAX_DIM + b] = psi.iter().map(|t| t[a][b]).collect();
        }
    }

    struct Local {
        ginv: nalgebra::DMatrix<Complex64>,
        w_mix: Vec<Vec<CVector>>, // w_mix[γ][α] = W(Z̄_γ, Z_α)
        xi_div: Vec<Complex64>,
        xi_r1: Vec<Complex64>,
        tension: f64,
    }
    let local: Vec<Local> = (0..len)
        .into_par_iter()
        .map(|p| {
            let ginv = cd.hermitian_inverse(p);
            let w_mix: Vec<Vec<CVector>> = (0..m)
                .map(|ga| {
                    (0..m)
                        .map(|al| complexify_vector_form(&w[p], &bar[ga], &frame[al], n))
                        .collect()
                })
                .collect();
            let dpsi = covariant_derivative_2tensor(&psi, &conn, p, n, &psi_comps, order);
            let u_hol: Vec<CVector> = (0..m).map(|b| complexify_vector(&du[p], &frame[b], n)).collect();
            let mut xi_div = vec![czero(); m];
            let mut xi_r1 = vec![czero(); m];
            for al in 0..m {
                for be in 0..m {
                    for ga in 0..m {
                        let gbg = ginv[(be, ga)];
                        let mut s = czero();
                        for k in 0..n {
                            if frame[be][k] != czero() {
                                s += frame[be][k] * crate::complex::complexify_form(&dpsi[k], &frame[al], &bar[ga], n);
                            }
                        }
                        xi_div[al] += gbg * s;
                        xi_r1[al] += gbg * cinner(target, &w_mix[ga][al], &u_hol[be]);
                    }
                }
            }
            let mut tau = CZERO;
            for al in 0..m {
                for mu in 0..m {
                    for i in 0..tau.len() {
                        tau[i] += ginv[(al, mu)] * w_mix[mu][al][i];
                    }
                }
            }
            Local {
                ginv,
                w_mix,
                xi_div,
                xi_r1,
                tension: cnorm(target, &tau),
            }
        })
        .collect();

    // Ξ in real coordinates: Ξ_{2α} = ξ_α, Ξ_{2α+1} = i ξ_α
    let xi_re: Vec<Vec<f64>> = (0..m).map(|al| local.iter().map(|l| l.xi_div[al].re).collect()).collect();
    let xi_im: Vec<Vec<f64>> = (0..m).map(|al| local.iter().map(|l| l.xi_div[al].im).collect()).collect();

    let rows: Vec<[Complex64; 4]> = (0..len)
        .into_par_iter()
        .map(|p| {
            let l = &local[p];
            let gm = &conn.gamma[p];
            let comp = |c: usize, xi: &[Complex64]| -> Complex64 {
                let z = xi[c / 2];
                if c % 2 == 0 {
                    z
                } else {
                    z * Complex64::new(0.0, 1.0)
                }
            };
            // nabla_k Ξ_a
            let mut dxi = [[czero(); MAX_DIM]; MAX_DIM];
            for (k, row) in dxi.iter_mut().enumerate().take(n) {
                let dz: Vec<Complex64> = (0..m)
                    .map(|al| {
                        Complex64::new(d1(grid, &xi_re[al], p, k, order), d1(grid, &xi_im[al], p, k, order))
                    })
                    .collect();
                for (a, slot) in row.iter_mut().enumerate().take(n) {
                    let mut s = comp(a, &dz);
                    for c in 0..n {
                        if gm[c][k][a] != 0.0 {
                            s -= comp(c, &l.xi_div) * gm[c][k][a];
                        }
                    }
                    *slot = s;
                }
            }
            let mut divergence = czero();
            for al in 0..m {
                for mu in 0..m {
                    let mut s = czero();
                    for k in 0..n {
                        for a in 0..n {
                            s += bar[mu][k] * frame[al][a] * dxi[k][a];
                        }
                    }
                    divergence += l.ginv[(al, mu)] * s;
                }
            }
            let sharp = theta.sharp(p);
            let mut lee = czero();
            for al in 0..m {
                lee += l.xi_div[al] * Complex64::new(sharp[2 * al], sharp[2 * al + 1]);
            }
            let u_hol: Vec<CVector> = (0..m).map(|b| complexify_vector(&du[p], &frame[b], n)).collect();
            let u_bar: Vec<CVector> = (0..m).map(|b| complexify_vector(&du[p], &bar[b], n)).collect();
            let mut hess = czero();
            let mut curv = czero();
            for al in 0..m {
                for mu in 0..m {
                    for be in 0..m {
                        for ga in 0..m {
                            let c = l.ginv[(al, mu)] * l.ginv[(be, ga)];
                            hess += c * cinner(target, &l.w_mix[ga][al], &l.w_mix[mu][be]);
                            if target.curvature() != 0.0 {
                                let r = ccurvature(target, &u_bar[mu], &u_bar[ga], &u_hol[al]);
                                curv += c * cinner(target, &r, &u_hol[be]);
                            }
                        }
                    }
                }
            }
            [divergence, lee, -hess, -curv]
        })
        .collect();

    let names = ["weyl_divergence", "lee_pairing", "hessian", "target_curvature"];
    let parts = names
        .iter()
        .enumerate()
        .map(|(i, k)| (*k, rows.iter().map(|r| r[i].re).collect()))
        .collect();
    let mut report = ResidualReport::assemble("sampson", g, parts);
    let imag = rows
        .iter()
        .map(|r| r.iter().map(|z| z.im).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let xi_gap = local
        .iter()
        .map(|l| l.xi_div.iter().zip(&l.xi_r1).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let xi_sup = local
        .iter()
        .map(|l| l.xi_div.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let commutator = commutator_residual(u, cd, theta)?.into_iter().fold(0.0, f64::max);
    let j_defect = j_compatibility_defect(&conn);
    let closed = if theta.is_zero() {
        0.0
    } else {
        exterior_derivative(theta, order)
            .iter()
            .flat_map(|m| m.iter().flatten())
            .fold(0.0, |a: f64, x| a.max(x.abs()))
    };
    report.solution_defect = Some(local.iter().map(|l| l.tension).fold(0.0, f64::max));
    let extras: BTreeMap<String, f64> = [
        ("imaginary_sup", imag),
        ("xi_sup", xi_sup),
        ("xi_discrepancy", xi_gap),
        ("commutator_sup", commutator),
        ("j_defect", j_defect),
        ("lee_form_dtheta_sup", closed),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    report.extras = extras;
    if j_defect > J_DEFECT_TOL {
        report
            .warnings
            .push(format!("Weyl connection does not preserve J (sup |∇J| = {j_defect:.3e})"));
    }
    if closed > CLOSED_TOL {
        report
            .warnings
            .push(format!("Lee form is not closed (sup |dΘ| = {closed:.3e})"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::ScalarFn;
    use crate::equivariance::{EquivarianceData, EquivarianceSpec};
    use crate::complex::kahler_from_potential;
    use crate::grid::DomainGrid;
    use crate::map::MapSpec;
    use crate::metric::MetricField;
    use std::f64::consts::TAU;

    /// Potential depending on three real axes, so the discrete structure is not exactly Kähler.
    fn test_potential() -> ScalarFn {
        serde_json::from_str(
            r#"{"waves":[{"amplitude":0.08,"wavevector":[1,1,1,0]},
                         {"amplitude":0.05,"wavevector":[0,1,-1,0],"phase":1.0}]}"#,
        )
        .unwrap()
    }

    fn kahler(size: usize) -> ComplexDomain {
        let grid = DomainGrid::new(&[size, size, size, 4], &[TAU; 4]).unwrap();
        ComplexDomain::new(kahler_from_potential(grid, &test_potential()).unwrap()).unwrap()
    }

    fn flat_target_map(cd: &ComplexDomain) -> MapField {
        let t = TargetSpace::FlatTorus { m: 2, periods: vec![TAU, TAU] };
        MapSpec::Linear {
            winding: vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 2.0, 0.0, -1.0]],
        }
        .build(cd.metric().grid(), &t, &EquivarianceSpec::Auto)
        .unwrap()
    }

    #[test]
    fn affine_maps_on_flat_torus_satisfy_the_identity_exactly() {
        let cd = ComplexDomain::new(MetricField::flat(DomainGrid::torus(4, 6, TAU).unwrap())).unwrap();
        let u = flat_target_map(&cd);
        let r = sampson_residual(&u, &cd, &HiggsField::zero(cd.metric())).unwrap();
        assert!(r.sup_residual < 1e-12, "{r:?}");
        assert!(r.breakdown_defect() < 1e-14);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn kahler_domain_residual_refines_at_second_order() {
        let sup = |size| {
            let cd = kahler(size);
            let u = flat_target_map(&cd);
            let r = sampson_residual(&u, &cd, &HiggsField::zero(cd.metric())).unwrap();
            assert!(r.extras["j_defect"] < 1e-12 && r.solution_defect.unwrap() < 1e-11);
            (r.sup_residual, r.extras["xi_discrepancy"])
        };
        let (a, b) = (sup(16), sup(32));
        assert!(a.0 / b.0 > 3.2 && a.0 / b.0 < 4.8, "{a:?} {b:?}");
        assert!(a.1 / b.1 > 3.2, "{a:?} {b:?}");
    }

    #[test]
    fn locally_conformally_kahler_structure() {
        // g = e^V δ with Θ = dV: the Weyl connection is the flat one
        let v = ScalarFn::sin_axis(0.2, 0, 1.0).plus(ScalarFn::cos_axis(0.1, 2, 1.0));
        let run = |size: usize| {
            let grid = DomainGrid::new(&[size, 4, size, 4], &[TAU; 4]).unwrap();
            let g = MetricField::conformal(grid, &v.clone().scaled(0.5)).unwrap().without_jet();
            let theta = HiggsField::exact(&g, &v).unwrap();
            let cd = ComplexDomain::new(g).unwrap();
            let u = flat_target_map(&cd);
            sampson_residual(&u, &cd, &theta).unwrap()
        };
        let (a, b) = (run(16), run(32));
        assert!(a.terms["lee_pairing"].abs() > 0.0);
        assert!(b.extras["lee_form_dtheta_sup"] < CLOSED_TOL);
        let ratio = a.sup_residual / b.sup_residual;
        assert!(ratio > 3.2 && ratio < 4.8, "{} {}", a.sup_residual, b.sup_residual);
        let jr = a.extras["j_defect"] / b.extras["j_defect"];
        assert!(jr > 3.2, "{jr}");
    }

    #[test]
    fn commutator_holds_for_curved_targets() {
        // an arbitrary map into the sphere: the commutation is an identity of the geometry
        let err = |size: usize| {
            let cd = ComplexDomain::new(MetricField::flat(DomainGrid::new(&[size, size, size, 4], &[TAU; 4]).unwrap()))
                .unwrap();
            let u = MapField::from_fn(cd.metric().grid().clone(), TargetSpace::sphere(2), EquivarianceData::trivial(4), |x: &crate::grid::DVec| {
                let v: [f64; 3] = [x[0].sin(), x[1].sin() + 0.5 * x[2].cos(), 8.0 + x[0].cos() + x[2].sin()];
                let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                [v[0] / r, v[1] / r, v[2] / r, 0.0]
            })
            .unwrap();
            commutator_residual(&u, &cd, &HiggsField::zero(cd.metric()))
                .unwrap()
                .into_iter()
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(16), err(32));
        assert!(a / b > 3.0, "{a} {b}");
    }

    #[test]
    fn hermitian_curvature_term_is_non_negative_for_hyperbolic_targets() {
        let cd = ComplexDomain::new(MetricField::flat(DomainGrid::torus(4, 4, TAU).unwrap())).unwrap();
        let t = TargetSpace::hyperbolic(2);
        let u = MapField::from_fn(cd.metric().grid().clone(), t.clone(), EquivarianceData::trivial(4), |x| {
            let (a, b): (f64, f64) = (0.3 * x[0].sin() + 0.2 * x[3].cos(), 0.4 * x[1].cos() + 0.1 * x[2].sin());
            let r = (a * a + b * b).sqrt();
            let s = if r > 0.0 { r.sinh() / r } else { 1.0 };
            [r.cosh(), s * a, s * b, 0.0]
        })
        .unwrap();
        let r = sampson_residual(&u, &cd, &HiggsField::zero(cd.metric())).unwrap();
        assert!(r.terms["target_curvature"] <= 1e-14, "{:?}", r.terms);
    }
}
