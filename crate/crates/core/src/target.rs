//! Closed-form geometry of the model targets: exponential and logarithm maps,
//! parallel transport along minimizing geodesics and constant-curvature tensors.
//!
//! Points live in an ambient vector space of dimension at most [`MAX_AMB`]:
//! the radius-`r` sphere in R^{m+1}, the upper sheet of the hyperboloid
//! `<x,x>_L = -1` in Minkowski space, and the universal cover (arclength or
//! coordinate lift) for the flat kinds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_AMB: usize = 4;
pub type Vector = [f64; MAX_AMB];
pub const ZERO: Vector = [0.0; MAX_AMB];

const CONSTRAINT_TOL: f64 = 1e-10;
const TANGENT_TOL: f64 = 1e-10;
/// Antipodal cut-locus margin for spheres, in units of the radius.
pub const CUT_LOCUS_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpace {
    Euclidean { m: usize },
    Circle { radius: f64 },
    FlatTorus { m: usize, periods: Vec<f64> },
    Sphere { m: usize, radius: f64 },
    Hyperbolic { m: usize },
}

#[inline]
pub fn add(a: &Vector, b: &Vector) -> Vector {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}
#[inline]
pub fn sub(a: &Vector, b: &Vector) -> Vector {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}
#[inline]
pub fn scale(s: f64, a: &Vector) -> Vector {
    [s * a[0], s * a[1], s * a[2], s * a[3]]
}
/// `a + s b`.
#[inline]
pub fn axpy(a: &Vector, s: f64, b: &Vector) -> Vector {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]]
}
#[inline]
pub fn euclid_dot(a: &Vector, b: &Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}
#[inline]
pub fn minkowski_dot(a: &Vector, b: &Vector) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

impl TargetSpace {
    pub fn sphere(m: usize) -> Self {
        TargetSpace::Sphere { m, radius: 1.0 }
    }
    pub fn hyperbolic(m: usize) -> Self {
        TargetSpace::Hyperbolic { m }
    }
    pub fn circle() -> Self {
        TargetSpace::Circle { radius: 1.0 }
    }
    pub fn real_line() -> Self {
        TargetSpace::Euclidean { m: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidTarget(s));
        match self {
            TargetSpace::Euclidean { m } if *m == 0 || *m > MAX_AMB => {
                bad(format!("euclidean dimension {m} outside 1..={MAX_AMB}"))
            }
            TargetSpace::Circle { radius } if !(*radius > 0.0 && radius.is_finite()) => {
                bad("circle radius must be positive".into())
            }
            TargetSpace::FlatTorus { m, periods } => {
                if *m == 0 || *m > MAX_AMB {
                    bad(format!("torus dimension {m} outside 1..={MAX_AMB}"))
                } else if periods.len() != *m || periods.iter().any(|p| !(*p > 0.0)) {
                    bad("torus needs m positive periods".into())
                } else {
                    Ok(())
                }
            }
            TargetSpace::Sphere { m, radius } => {
                if *m < 1 || *m + 1 > MAX_AMB {
                    bad(format!("sphere dimension {m} outside 1..={}", MAX_AMB - 1))
                } else if !(*radius > 0.0 && radius.is_finite()) {
                    bad("sphere radius must be positive".into())
                } else {
                    Ok(())
                }
            }
            TargetSpace::Hyperbolic { m } if *m < 1 || *m + 1 > MAX_AMB => {
                bad(format!("hyperbolic dimension {m} outside 1..={}", MAX_AMB - 1))
            }
            _ => Ok(()),
        }
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match self {
            TargetSpace::Euclidean { m }
            | TargetSpace::FlatTorus { m, .. }
            | TargetSpace::Sphere { m, .. }
            | TargetSpace::Hyperbolic { m } => *m,
            TargetSpace::Circle { .. } => 1,
        }
    }

    /// Number of stored ambient coordinates.
    pub fn ambient_dim(&self) -> usize {
        match self {
            TargetSpace::Sphere { m, .. } | TargetSpace::Hyperbolic { m } => m + 1,
            _ => self.dim(),
        }
    }

    /// Sectional curvature.
    pub fn curvature(&self) -> f64 {
        match self {
            TargetSpace::Sphere { radius, .. } => 1.0 / (radius * radius),
            TargetSpace::Hyperbolic { .. } => -1.0,
            _ => 0.0,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.curvature() == 0.0
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, TargetSpace::Hyperbolic { .. })
    }

    /// Distance beyond which `log` is undefined (infinite for non-positive curvature).
    pub fn injectivity_radius(&self) -> f64 {
        match self {
            TargetSpace::Sphere { radius, .. } => std::f64::consts::PI * radius,
            _ => f64::INFINITY,
        }
    }

    /// Metric pairing of tangent vectors.
    #[inline]
    pub fn inner(&self, a: &Vector, b: &Vector) -> f64 {
        match self {
            TargetSpace::Hyperbolic { .. } => minkowski_dot(a, b),
            _ => euclid_dot(a, b),
        }
    }

    #[inline]
    pub fn norm_sq(&self, a: &Vector) -> f64 {
        self.inner(a, a)
    }

    #[inline]
    pub fn norm(&self, a: &Vector) -> f64 {
        self.norm_sq(a).max(0.0).sqrt()
    }

    /// Violation of the ambient constraint (sphere norm, hyperboloid sheet).
    pub fn constraint_residual(&self, p: &Vector) -> f64 {
        let n = self.ambient_dim();
        if p.iter().any(|x| !x.is_finite()) || p[n..].iter().any(|&x| x != 0.0) {
            return f64::INFINITY;
        }
        match self {
            TargetSpace::Sphere { radius, .. } => (euclid_dot(p, p).sqrt() - radius).abs() / radius,
            TargetSpace::Hyperbolic { .. } => {
                if p[0] <= 0.0 {
                    f64::INFINITY
                } else {
                    (minkowski_dot(p, p) + 1.0).abs() / p[0].max(1.0)
                }
            }
            _ => 0.0,
        }
    }

    pub fn check_point(&self, p: &Vector) -> Result<()> {
        let r = self.constraint_residual(p);
        if r > CONSTRAINT_TOL {
            return Err(Error::OffTarget { residual: r });
        }
        Ok(())
    }

    /// Nearest point on the model (renormalization).
    #[inline]
    pub fn project(&self, p: &Vector) -> Vector {
        match self {
            TargetSpace::Sphere { radius, .. } => scale(radius / euclid_dot(p, p).sqrt(), p),
            TargetSpace::Hyperbolic { .. } => {
                let mut q = *p;
                let s: f64 = q[1..].iter().map(|x| x * x).sum();
                // keep the spatial part, rebuild x0 on the upper sheet, then normalize
                let l = -minkowski_dot(&q, &q);
                if l > 0.0 && q[0] > 0.0 {
                    scale(1.0 / l.sqrt(), &q)
                } else {
                    q[0] = (1.0 + s).sqrt();
                    q
                }
            }
            _ => *p,
        }
    }

    /// Normal component of `v` at `p`, scaled to be dimensionless.
    pub fn tangent_residual(&self, p: &Vector, v: &Vector) -> f64 {
        match self {
            TargetSpace::Sphere { radius, .. } => {
                euclid_dot(p, v).abs() / (radius * euclid_dot(v, v).sqrt().max(1.0))
            }
            TargetSpace::Hyperbolic { .. } => {
                minkowski_dot(p, v).abs() / euclid_dot(v, v).sqrt().max(1.0)
            }
            _ => {
                let n = self.ambient_dim();
                v[n..].iter().map(|x| x.abs()).fold(0.0, f64::max)
            }
        }
    }

    pub fn check_tangent(&self, p: &Vector, v: &Vector) -> Result<()> {
        let r = self.tangent_residual(p, v);
        if !(r <= TANGENT_TOL) {
            return Err(Error::NotTangent { residual: r });
        }
        Ok(())
    }

    /// Orthogonal projection of an ambient vector onto `T_p`.
    #[inline]
    pub fn project_tangent(&self, p: &Vector, v: &Vector) -> Vector {
        match self {
            TargetSpace::Sphere { radius, .. } => axpy(v, -euclid_dot(p, v) / (radius * radius), p),
            TargetSpace::Hyperbolic { .. } => axpy(v, minkowski_dot(p, v), p),
            _ => *v,
        }
    }

    /// Geodesic endpoint `exp_p(v)`.
    pub fn exp(&self, p: &Vector, v: &Vector) -> Result<Vector> {
        self.check_tangent(p, v)?;
        Ok(self.exp_unchecked(p, v))
    }

    #[inline]
    pub fn exp_unchecked(&self, p: &Vector, v: &Vector) -> Vector {
        match self {
            TargetSpace::Sphere { radius, .. } => {
                let nv = euclid_dot(v, v).sqrt();
                if nv == 0.0 {
                    return *p;
                }
                let t = nv / radius;
                let q = add(&scale(t.cos(), p), &scale(radius * t.sin() / nv, v));
                self.project(&q)
            }
            TargetSpace::Hyperbolic { .. } => {
                let nv = minkowski_dot(v, v).max(0.0).sqrt();
                if nv == 0.0 {
                    return *p;
                }
                let q = add(&scale(nv.cosh(), p), &scale(nv.sinh() / nv, v));
                self.project(&q)
            }
            _ => add(p, v),
        }
    }

    /// `log_p(q)`, the initial velocity of the minimizing geodesic from `p` to `q`.
    pub fn log(&self, p: &Vector, q: &Vector) -> Result<Vector> {
        if let TargetSpace::Sphere { radius, .. } = self {
            let d = self.dist_unchecked(p, q);
            if d > (std::f64::consts::PI - CUT_LOCUS_MARGIN) * radius {
                return Err(Error::CutLocus { distance: d });
            }
        }
        Ok(self.log_unchecked(p, q))
    }

    #[inline]
    pub fn log_unchecked(&self, p: &Vector, q: &Vector) -> Vector {
        match self {
            TargetSpace::Sphere { radius, .. } => {
                let r2 = radius * radius;
                let c = euclid_dot(p, q);
                let w = axpy(q, -c / r2, p);
                let nw = euclid_dot(&w, &w).sqrt();
                if nw == 0.0 {
                    return ZERO;
                }
                let theta = (nw / radius).atan2(c / r2);
                scale(radius * theta / nw, &w)
            }
            TargetSpace::Hyperbolic { .. } => {
                let c = minkowski_dot(p, q);
                let w = axpy(q, c, p);
                let nw = minkowski_dot(&w, &w).max(0.0).sqrt();
                if nw == 0.0 {
                    return ZERO;
                }
                scale(nw.asinh() / nw, &w)
            }
            _ => sub(q, p),
        }
    }

    /// Geodesic distance (in the model cover for the flat kinds).
    pub fn dist(&self, p: &Vector, q: &Vector) -> f64 {
        self.dist_unchecked(p, q)
    }

    #[inline]
    fn dist_unchecked(&self, p: &Vector, q: &Vector) -> f64 {
        match self {
            TargetSpace::Sphere { radius, .. } => {
                let r2 = radius * radius;
                let c = euclid_dot(p, q) / r2;
                let d = sub(q, p);
                let chord = euclid_dot(&d, &d).sqrt() / radius;
                // atan2 of the sine and cosine of the angle, stable at both ends
                let s = (chord * (4.0 - chord * chord).max(0.0).sqrt()) / 2.0;
                radius * s.atan2(c)
            }
            TargetSpace::Hyperbolic { .. } => {
                let d = sub(q, p);
                let l = minkowski_dot(&d, &d).max(0.0);
                // |q - p|_L = 2 sinh(d/2)
                2.0 * (0.5 * l.sqrt()).asinh()
            }
            _ => {
                let d = sub(q, p);
                euclid_dot(&d, &d).sqrt()
            }
        }
    }

    /// Parallel transport of `v` from `T_p` to `T_q` along the minimizing geodesic.
    pub fn transport(&self, p: &Vector, q: &Vector, v: &Vector) -> Result<Vector> {
        self.check_tangent(p, v)?;
        if let TargetSpace::Sphere { radius, .. } = self {
            let d = self.dist_unchecked(p, q);
            if d > (std::f64::consts::PI - CUT_LOCUS_MARGIN) * radius {
                return Err(Error::CutLocus { distance: d });
            }
        }
        Ok(self.transport_unchecked(p, q, v))
    }

    #[inline]
    pub fn transport_unchecked(&self, p: &Vector, q: &Vector, v: &Vector) -> Vector {
        match self {
            TargetSpace::Sphere { radius, .. } => {
                let s = euclid_dot(q, v) / (radius * radius + euclid_dot(p, q));
                axpy(v, -s, &add(p, q))
            }
            TargetSpace::Hyperbolic { .. } => {
                let s = minkowski_dot(q, v) / (1.0 - minkowski_dot(p, q));
                axpy(v, s, &add(p, q))
            }
            _ => *v,
        }
    }

    /// `R(X,Y)Z = k (<Y,Z> X - <X,Z> Y)`, so that `<R(X,Y)Y,X>` is the sectional curvature.
    pub fn curvature_tensor(&self, p: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Result<Vector> {
        for v in [x, y, z] {
            self.check_tangent(p, v)?;
        }
        Ok(self.curvature_tensor_unchecked(x, y, z))
    }

    #[inline]
    pub fn curvature_tensor_unchecked(&self, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let k = self.curvature();
        if k == 0.0 {
            return ZERO;
        }
        let a = self.inner(y, z);
        let b = self.inner(x, z);
        sub(&scale(k * a, x), &scale(k * b, y))
    }

    /// `<R(X,Y)Y,X>` without forming the tensor: `k (|X|^2|Y|^2 - <X,Y>^2)`.
    #[inline]
    pub fn sectional_pairing(&self, x: &Vector, y: &Vector) -> f64 {
        let k = self.curvature();
        if k == 0.0 {
            return 0.0;
        }
        let xy = self.inner(x, y);
        k * (self.norm_sq(x) * self.norm_sq(y) - xy * xy)
    }

    /// Orthonormal basis of `T_p` by Gram-Schmidt over ambient axes in order.
    pub fn tangent_frame(&self, p: &Vector) -> Vec<Vector> {
        let m = self.dim();
        let mut out: Vec<Vector> = Vec::with_capacity(m);
        for axis in 0..self.ambient_dim() {
            if out.len() == m {
                break;
            }
            let mut e = ZERO;
            e[axis] = 1.0;
            let mut v = self.project_tangent(p, &e);
            for b in &out {
                v = axpy(&v, -self.inner(b, &v), b);
            }
            let n = self.norm(&v);
            if n > 1e-3 {
                out.push(scale(1.0 / n, &v));
            }
        }
        out
    }

    /// A base point of the model.
    pub fn origin(&self) -> Vector {
        let mut p = ZERO;
        match self {
            TargetSpace::Sphere { m, radius } => p[*m] = *radius,
            TargetSpace::Hyperbolic { .. } => p[0] = 1.0,
            _ => {}
        }
        p
    }

    /// A random point: uniform on spheres, within hyperbolic distance ~2 of the origin,
    /// in a unit box for flat kinds.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Vector {
        let n = self.ambient_dim();
        let mut v = ZERO;
        match self {
            TargetSpace::Sphere { .. } => loop {
                for x in v.iter_mut().take(n) {
                    *x = rng.gen_range(-1.0..1.0);
                }
                let s = euclid_dot(&v, &v);
                if s > 1e-2 && s <= 1.0 {
                    return self.project(&v);
                }
            },
            TargetSpace::Hyperbolic { .. } => {
                for x in v.iter_mut().take(n).skip(1) {
                    *x = rng.gen_range(-2.0..2.0);
                }
                v[0] = 1.0;
                self.project(&{
                    let mut q = v;
                    q[0] = -1.0; // forces rebuilding x0 on the sheet
                    q
                })
            }
            _ => {
                for x in v.iter_mut().take(n) {
                    *x = rng.gen_range(-1.0..1.0);
                }
                v
            }
        }
    }

    /// A random tangent vector at `p` with norm at most `max_norm`.
    pub fn random_tangent<R: Rng>(&self, rng: &mut R, p: &Vector, max_norm: f64) -> Vector {
        let frame = self.tangent_frame(p);
        let mut v = ZERO;
        for e in &frame {
            v = axpy(&v, rng.gen_range(-1.0..1.0), e);
        }
        let n = self.norm(&v);
        if n == 0.0 {
            return v;
        }
        let target = max_norm * rng.gen_range(0.0..1.0f64);
        scale(target / n, &v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Vector, b: &Vector, tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn exp_closed_forms() {
        let s = TargetSpace::sphere(2);
        let q = s.exp(&[0.0, 0.0, 1.0, 0.0], &[PI, 0.0, 0.0, 0.0]).unwrap();
        assert!(close(&q, &[0.0, 0.0, -1.0, 0.0], 1e-15));
        let h = TargetSpace::hyperbolic(2);
        let q = h.exp(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(close(&q, &[1f64.cosh(), 1f64.sinh(), 0.0, 0.0], 1e-15));
        let p = s.origin();
        assert_eq!(s.exp(&p, &ZERO).unwrap(), p);
        assert!(matches!(
            s.exp(&p, &[0.0, 0.0, 0.5, 0.0]),
            Err(Error::NotTangent { .. })
        ));
    }

    #[test]
    fn distance_closed_forms() {
        let h = TargetSpace::hyperbolic(2);
        let p = [1.0, 0.0, 0.0, 0.0];
        let q = [1f64.cosh(), 1f64.sinh(), 0.0, 0.0];
        assert!((h.dist(&p, &q) - 1.0).abs() < 1e-15);
        assert!((h.dist(&p, &q) - (-minkowski_dot(&p, &q)).acosh()).abs() < 1e-12);
        let s = TargetSpace::sphere(2);
        assert!((s.dist(&[0.0, 0.0, 1.0, 0.0], &[1.0, 0.0, 0.0, 0.0]) - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(s.dist(&p, &p), 0.0);
        assert_eq!(s.log(&s.origin(), &s.origin()).unwrap(), ZERO);
        let a = [0.0, 0.0, 1.0, 0.0];
        assert!(matches!(s.log(&a, &[0.0, 0.0, -1.0, 0.0]), Err(Error::CutLocus { .. })));
    }

    #[test]
    fn sphere_transport_of_geodesic_tangent() {
        let s = TargetSpace::sphere(2);
        // quarter of the equator from (1,0,0) to (0,1,0); tangent (0,1,0) becomes (-1,0,0)
        let p = [1.0, 0.0, 0.0, 0.0];
        let q = [0.0, 1.0, 0.0, 0.0];
        let v = [0.0, 1.0, 0.0, 0.0];
        let w = s.transport(&p, &q, &v).unwrap();
        assert!(close(&w, &[-1.0, 0.0, 0.0, 0.0], 1e-15));
        let l = s.log(&q, &p).unwrap();
        assert!(close(&scale(-1.0 / FRAC_PI_2, &l), &w, 1e-15));
        // the normal to the plane of the geodesic is fixed
        let n = [0.0, 0.0, 1.0, 0.0];
        assert!(close(&s.transport(&p, &q, &n).unwrap(), &n, 1e-15));
    }

    #[test]
    fn curvature_signs() {
        let x = [1.0, 0.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0, 0.0];
        let s = TargetSpace::sphere(2);
        let p = s.origin();
        let r = s.curvature_tensor(&p, &x, &y, &y).unwrap();
        assert!((s.inner(&r, &x) - 1.0).abs() < 1e-15);
        let h = TargetSpace::hyperbolic(2);
        let p = h.origin();
        let (x, y) = ([0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]);
        let r = h.curvature_tensor(&p, &x, &y, &y).unwrap();
        assert!((h.inner(&r, &x) + 1.0).abs() < 1e-15);
        let e = TargetSpace::Euclidean { m: 2 };
        let (x, y) = ([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(e.curvature_tensor(&ZERO, &x, &y, &y).unwrap(), ZERO);
    }

    #[test]
    fn validation() {
        assert!(TargetSpace::Sphere { m: 4, radius: 1.0 }.validate().is_err());
        assert!(TargetSpace::Circle { radius: 0.0 }.validate().is_err());
        assert!(TargetSpace::FlatTorus { m: 2, periods: vec![1.0] }.validate().is_err());
        assert!(TargetSpace::hyperbolic(3).validate().is_ok());
    }

    fn kinds() -> Vec<TargetSpace> {
        vec![
            TargetSpace::Euclidean { m: 3 },
            TargetSpace::Circle { radius: 2.0 },
            TargetSpace::FlatTorus { m: 2, periods: vec![1.0, 2.0] },
            TargetSpace::Sphere { m: 2, radius: 1.0 },
            TargetSpace::Sphere { m: 3, radius: 1.7 },
            TargetSpace::hyperbolic(2),
            TargetSpace::hyperbolic(3),
        ]
    }

    #[test]
    fn frames_are_orthonormal_and_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in kinds() {
            let p = t.random_point(&mut rng);
            t.check_point(&p).unwrap();
            let f = t.tangent_frame(&p);
            assert_eq!(f.len(), t.dim());
            for (i, a) in f.iter().enumerate() {
                assert!(t.tangent_residual(&p, a) < 1e-12);
                for (j, b) in f.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((t.inner(a, b) - e).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exp_log_roundtrip_and_transport_isometry(seed in any::<u64>(), kind in 0usize..7) {
            let t = kinds()[kind].clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = t.random_point(&mut rng);
            let bound = t.injectivity_radius().min(3.0) * 0.9;
            let v = t.random_tangent(&mut rng, &p, bound);
            let q = t.exp(&p, &v).unwrap();
            prop_assert!(t.constraint_residual(&q) < 1e-12);
            let w = t.log(&p, &q).unwrap();
            prop_assert!(t.dist(&t.exp(&p, &w).unwrap(), &q) < 1e-9);
            prop_assert!((t.dist(&p, &q) - t.norm(&v)).abs() < 1e-9);
            prop_assert!((t.dist(&p, &q) - t.dist(&q, &p)).abs() < 1e-12);
            let a = t.random_tangent(&mut rng, &p, 2.0);
            let b = t.random_tangent(&mut rng, &p, 2.0);
            let ta = t.transport(&p, &q, &a).unwrap();
            let tb = t.transport(&p, &q, &b).unwrap();
            prop_assert!(t.tangent_residual(&q, &ta) < 1e-10);
            prop_assert!((t.inner(&ta, &tb) - t.inner(&a, &b)).abs() < 1e-10);
            // linearity
            let tab = t.transport(&p, &q, &axpy(&a, 2.0, &b)).unwrap();
            prop_assert!(close(&tab, &axpy(&ta, 2.0, &tb), 1e-10));
        }

        #[test]
        fn curvature_symmetries(seed in any::<u64>(), kind in 0usize..7) {
            let t = kinds()[kind].clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = t.random_point(&mut rng);
            let v: Vec<Vector> = (0..4).map(|_| t.random_tangent(&mut rng, &p, 1.0)).collect();
            let r = |a: &Vector, b: &Vector, c: &Vector, d: &Vector| {
                t.inner(&t.curvature_tensor(&p, a, b, c).unwrap(), d)
            };
            let (x, y, z, w) = (&v[0], &v[1], &v[2], &v[3]);
            prop_assert!((r(x, y, z, w) + r(y, x, z, w)).abs() < 1e-12);
            prop_assert!((r(x, y, z, w) - r(z, w, x, y)).abs() < 1e-12);
            let bianchi = add(
                &add(&t.curvature_tensor(&p, x, y, z).unwrap(), &t.curvature_tensor(&p, y, z, x).unwrap()),
                &t.curvature_tensor(&p, z, x, y).unwrap(),
            );
            prop_assert!(t.norm_sq(&bianchi).abs() < 1e-20);
        }
    }
}
