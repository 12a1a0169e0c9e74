//! Deck-transformation twists: one isometry of the target's model cover per
//! domain period, applied whenever a stencil wraps across that period.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;
use crate::target::{TargetSpace, Vector, MAX_AMB, ZERO};

pub type AmbMat = [[f64; MAX_AMB]; MAX_AMB];

const ISOMETRY_TOL: f64 = 1e-12;

fn identity_amb() -> AmbMat {
    let mut a = [[0.0; MAX_AMB]; MAX_AMB];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    a
}

/// Affine map `x -> A x + b` of the ambient space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub a: AmbMat,
    pub b: Vector,
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry {
            a: identity_amb(),
            b: ZERO,
        }
    }

    pub fn translation(b: Vector) -> Self {
        Isometry {
            a: identity_amb(),
            b,
        }
    }

    pub fn linear(a: AmbMat) -> Self {
        Isometry { a, b: ZERO }
    }

    /// Hyperbolic boost of rapidity `ell` in the `(x0, x_axis)` plane.
    pub fn boost(axis: usize, ell: f64) -> Self {
        let mut a = identity_amb();
        a[0][0] = ell.cosh();
        a[axis][axis] = ell.cosh();
        a[0][axis] = ell.sinh();
        a[axis][0] = ell.sinh();
        Self::linear(a)
    }

    /// Rotation by `angle` in the `(x_i, x_j)` plane.
    pub fn rotation(i: usize, j: usize, angle: f64) -> Self {
        let mut a = identity_amb();
        let (s, c) = angle.sin_cos();
        a[i][i] = c;
        a[j][j] = c;
        a[i][j] = -s;
        a[j][i] = s;
        Self::linear(a)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    #[inline]
    pub fn apply(&self, p: &Vector) -> Vector {
        let mut out = self.b;
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..MAX_AMB {
                *o += self.a[i][j] * p[j];
            }
        }
        out
    }

    /// Differential (the linear part).
    #[inline]
    pub fn apply_vector(&self, v: &Vector) -> Vector {
        let mut out = ZERO;
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..MAX_AMB {
                *o += self.a[i][j] * v[j];
            }
        }
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let mut a = [[0.0; MAX_AMB]; MAX_AMB];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..MAX_AMB).map(|k| self.a[i][k] * other.a[k][j]).sum();
            }
        }
        Isometry {
            a,
            b: self.apply(&other.b),
        }
    }

    pub fn inverse(&self) -> Result<Isometry> {
        let m = Matrix4::from_fn(|i, j| self.a[i][j]);
        let inv = m.try_inverse().ok_or_else(|| {
            Error::InvalidEquivariance("singular twist matrix".into())
        })?;
        let mut a = [[0.0; MAX_AMB]; MAX_AMB];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = inv[(i, j)];
            }
        }
        let lin = Isometry::linear(a);
        let nb = lin.apply(&self.b);
        Ok(Isometry {
            a,
            b: [-nb[0], -nb[1], -nb[2], -nb[3]],
        })
    }

    /// `max(1, max |a_ij|)^2`: rounding in products of twists scales with it.
    pub fn conditioning(&self) -> f64 {
        let m = self.a.iter().flatten().map(|x| x.abs()).fold(1.0, f64::max);
        m * m
    }

    fn max_diff(&self, other: &Isometry) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..MAX_AMB {
            for j in 0..MAX_AMB {
                d = d.max((self.a[i][j] - other.a[i][j]).abs());
            }
            d = d.max((self.b[i] - other.b[i]).abs());
        }
        d
    }

    /// Deviation of the linear part from preserving the target's ambient form,
    /// plus any offset that the curved models cannot absorb.
    pub fn isometry_defect(&self, target: &TargetSpace) -> f64 {
        let n = target.ambient_dim();
        let eta = |i: usize| {
            if target.is_hyperbolic() && i == 0 {
                -1.0
            } else {
                1.0
            }
        };
        let mut d: f64 = 0.0;
        for i in 0..MAX_AMB {
            for j in 0..MAX_AMB {
                let expect = if i == j { eta(i) } else { 0.0 };
                let got: f64 = (0..MAX_AMB).map(|k| self.a[k][i] * eta(k) * self.a[k][j]).sum();
                let expect = if i >= n || j >= n {
                    if i == j {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    expect
                };
                d = d.max((got - expect).abs() / self.conditioning());
            }
        }
        // the padding block must stay the identity
        for i in 0..MAX_AMB {
            for j in 0..MAX_AMB {
                if (i >= n || j >= n) && i != j {
                    d = d.max(self.a[i][j].abs());
                }
            }
            if i >= n {
                d = d.max(self.b[i].abs());
            }
        }
        match target {
            TargetSpace::Sphere { .. } | TargetSpace::Hyperbolic { .. } => {
                d = d.max(self.b.iter().map(|x| x.abs()).fold(0.0, f64::max));
                if target.is_hyperbolic() && self.a[0][0] <= 0.0 {
                    d = f64::INFINITY;
                }
            }
            _ => {}
        }
        d
    }
}

/// One twist per domain axis with cached inverses.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivarianceData {
    twists: Vec<Isometry>,
    inverses: Vec<Isometry>,
    trivial: bool,
}

impl EquivarianceData {
    pub fn trivial(dim: usize) -> Self {
        EquivarianceData {
            twists: vec![Isometry::identity(); dim],
            inverses: vec![Isometry::identity(); dim],
            trivial: true,
        }
    }

    /// Validates isometry and commutation; wrap consistency is checked by
    /// composing each twist with its inverse.
    pub fn new(twists: Vec<Isometry>, target: &TargetSpace) -> Result<Self> {
        if twists.is_empty() || twists.len() > MAX_DIM {
            return Err(Error::InvalidEquivariance(format!(
                "{} twists for a domain of dimension 2..=4",
                twists.len()
            )));
        }
        for (k, t) in twists.iter().enumerate() {
            let d = t.isometry_defect(target);
            if !(d <= ISOMETRY_TOL) {
                return Err(Error::InvalidEquivariance(format!(
                    "twist {k} is not an isometry (defect {d:e})"
                )));
            }
        }
        for i in 0..twists.len() {
            for j in 0..i {
                let d = twists[i].compose(&twists[j]).max_diff(&twists[j].compose(&twists[i]))
                    / (twists[i].conditioning() * twists[j].conditioning());
                if d > ISOMETRY_TOL {
                    return Err(Error::InvalidEquivariance(format!(
                        "twists {i} and {j} do not commute (defect {d:e})"
                    )));
                }
            }
        }
        let inverses = twists.iter().map(|t| t.inverse()).collect::<Result<Vec<_>>>()?;
        for (t, ti) in twists.iter().zip(&inverses) {
            let d = t.compose(ti).max_diff(&Isometry::identity()) / t.conditioning();
            if d > ISOMETRY_TOL {
                return Err(Error::InvalidEquivariance(format!(
                    "twist inverse inconsistent (defect {d:e})"
                )));
            }
        }
        let trivial = twists.iter().all(|t| t.is_identity());
        Ok(EquivarianceData {
            twists,
            inverses,
            trivial,
        })
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn dim(&self) -> usize {
        self.twists.len()
    }

    /// Largest conditioning factor among the twists.
    pub fn conditioning(&self) -> f64 {
        self.twists.iter().map(|t| t.conditioning()).fold(1.0, f64::max)
    }

    pub fn twist(&self, axis: usize) -> &Isometry {
        &self.twists[axis]
    }

    /// `gamma_axis^wraps`.
    pub fn power(&self, axis: usize, wraps: i32) -> Isometry {
        let base = if wraps >= 0 {
            &self.twists[axis]
        } else {
            &self.inverses[axis]
        };
        let mut out = Isometry::identity();
        for _ in 0..wraps.unsigned_abs() {
            out = base.compose(&out);
        }
        out
    }

    /// Value seen across `wraps` periods along `axis`.
    #[inline]
    pub fn apply(&self, axis: usize, wraps: i32, p: &Vector) -> Vector {
        match wraps {
            0 => *p,
            1 => self.twists[axis].apply(p),
            -1 => self.inverses[axis].apply(p),
            w => self.power(axis, w).apply(p),
        }
    }

    #[inline]
    pub fn apply_vector(&self, axis: usize, wraps: i32, v: &Vector) -> Vector {
        match wraps {
            0 => *v,
            1 => self.twists[axis].apply_vector(v),
            -1 => self.inverses[axis].apply_vector(v),
            w => self.power(axis, w).apply_vector(v),
        }
    }

    /// Applies the twists for a multi-axis wrap vector.
    #[inline]
    pub fn apply_multi(&self, wraps: &[i32; MAX_DIM], p: &Vector) -> Vector {
        let mut q = *p;
        for (axis, &w) in wraps.iter().enumerate().take(self.twists.len()) {
            if w != 0 {
                q = self.apply(axis, w, &q);
            }
        }
        q
    }

    /// Twists determined by the mean displacement of a flat-target map across
    /// each period: used for linear winding data.
    pub fn translations(vectors: &[Vector], target: &TargetSpace) -> Result<Self> {
        Self::new(
            vectors.iter().map(|v| Isometry::translation(*v)).collect(),
            target,
        )
    }
}

/// Equivariance choices accepted by the experiment configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EquivarianceSpec {
    /// Derived from the initial map: winding translations for flat targets, trivial otherwise.
    #[default]
    Auto,
    None,
    /// Translation of the cover per domain axis.
    Translations { vectors: Vec<Vec<f64>> },
    /// Hyperbolic boosts in the `(x0, x1)` plane, one rapidity per domain axis.
    Boosts { rapidities: Vec<f64> },
    /// Sphere rotations in the `(x0, x1)` plane, one angle per domain axis.
    Rotations { angles: Vec<f64> },
    /// Explicit ambient matrices and offsets, one per domain axis.
    Affine {
        matrices: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        offsets: Vec<Vec<f64>>,
    },
}

fn pad_vec(v: &[f64]) -> Result<Vector> {
    if v.len() > MAX_AMB {
        return Err(Error::Config(format!("vector longer than {MAX_AMB}")));
    }
    let mut out = ZERO;
    out[..v.len()].copy_from_slice(v);
    Ok(out)
}

impl EquivarianceSpec {
    /// Builds twists for an `dim`-dimensional domain; `Auto` is resolved by the caller.
    pub fn build(&self, dim: usize, target: &TargetSpace) -> Result<EquivarianceData> {
        let check_len = |k: usize| {
            if k != dim {
                Err(Error::InvalidEquivariance(format!(
                    "{k} generators for a {dim}-dimensional domain"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            EquivarianceSpec::Auto | EquivarianceSpec::None => Ok(EquivarianceData::trivial(dim)),
            EquivarianceSpec::Translations { vectors } => {
                check_len(vectors.len())?;
                let v = vectors.iter().map(|v| pad_vec(v)).collect::<Result<Vec<_>>>()?;
                EquivarianceData::translations(&v, target)
            }
            EquivarianceSpec::Boosts { rapidities } => {
                check_len(rapidities.len())?;
                if !target.is_hyperbolic() {
                    return Err(Error::InvalidEquivariance("boosts need a hyperbolic target".into()));
                }
                EquivarianceData::new(rapidities.iter().map(|&l| Isometry::boost(1, l)).collect(), target)
            }
            EquivarianceSpec::Rotations { angles } => {
                check_len(angles.len())?;
                if !matches!(target, TargetSpace::Sphere { .. }) {
                    return Err(Error::InvalidEquivariance("rotations need a sphere target".into()));
                }
                EquivarianceData::new(
                    angles.iter().map(|&a| Isometry::rotation(0, 1, a)).collect(),
                    target,
                )
            }
            EquivarianceSpec::Affine { matrices, offsets } => {
                check_len(matrices.len())?;
                if !offsets.is_empty() {
                    check_len(offsets.len())?;
                }
                let n = target.ambient_dim();
                let mut twists = Vec::with_capacity(dim);
                for (k, m) in matrices.iter().enumerate() {
                    if m.len() != n || m.iter().any(|r| r.len() != n) {
                        return Err(Error::InvalidEquivariance(format!(
                            "matrix {k} must be {n}x{n}"
                        )));
                    }
                    let mut a = identity_amb();
                    for i in 0..n {
                        for j in 0..n {
                            a[i][j] = m[i][j];
                        }
                    }
                    let b = if offsets.is_empty() {
                        ZERO
                    } else {
                        pad_vec(&offsets[k])?
                    };
                    twists.push(Isometry { a, b });
                }
                EquivarianceData::new(twists, target)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boosts_are_commuting_hyperbolic_isometries() {
        let h = TargetSpace::hyperbolic(2);
        let e = EquivarianceData::new(vec![Isometry::boost(1, 0.7), Isometry::boost(1, -1.3)], &h).unwrap();
        let p = [2f64.sqrt(), 1.0, 0.0, 0.0];
        let q = e.apply(0, 1, &p);
        assert!(h.constraint_residual(&q) < 1e-12);
        let back = e.apply(0, -1, &q);
        assert!(back.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12));
        let on_axis = [1.0, 0.0, 0.0, 0.0];
        assert!((h.dist(&on_axis, &e.apply(0, 1, &on_axis)) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_isometries_and_noncommuting_twists() {
        let s = TargetSpace::sphere(2);
        let mut bad = Isometry::identity();
        bad.a[0][0] = 1.1;
        assert!(EquivarianceData::new(vec![bad, Isometry::identity()], &s).is_err());
        let r1 = Isometry::rotation(0, 1, 0.4);
        let r2 = Isometry::rotation(1, 2, 0.4);
        assert!(EquivarianceData::new(vec![r1.clone(), r2], &s).is_err());
        assert!(EquivarianceData::new(vec![r1.clone(), r1], &s).is_ok());
        assert!(EquivarianceData::new(
            vec![Isometry::translation([1.0, 0.0, 0.0, 0.0]), Isometry::identity()],
            &s
        )
        .is_err());
    }

    #[test]
    fn powers_and_multi_wraps() {
        let c = TargetSpace::circle();
        let tau = std::f64::consts::TAU;
        let e = EquivarianceData::translations(&[[tau, 0.0, 0.0, 0.0], [0.0; 4]], &c).unwrap();
        let p = [0.5, 0.0, 0.0, 0.0];
        assert!((e.apply(0, 2, &p)[0] - (0.5 + 2.0 * tau)).abs() < 1e-12);
        assert_eq!(e.apply_multi(&[-1, 1, 0, 0], &p)[0], 0.5 - tau);
    }

    #[test]
    fn spec_parsing_rejects_unknown_kinds() {
        let ok: EquivarianceSpec = serde_json::from_str(r#"{"kind":"boosts","rapidities":[1.0,0.0,0.0]}"#).unwrap();
        assert!(ok.build(3, &TargetSpace::hyperbolic(2)).is_ok());
        assert!(serde_json::from_str::<EquivarianceSpec>(r#"{"kind":"twirl"}"#).is_err());
    }
}
