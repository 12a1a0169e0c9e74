//! Cartan decompositions of the isometry algebras of real, complex and
//! quaternionic hyperbolic spaces, bracket curvature and abelian subspaces of `𝔭^c`.
//!
//! Elements of `𝔭^c` are complex coefficient vectors over a real `B`-orthonormal
//! basis of `𝔭`, so complex conjugation is conjugation of coefficients. The trace
//! form `B = s tr(XY)` is scaled so that real planes in `𝔭` of `so(1,n)` have
//! sectional curvature `-1`, with `R'(X,Y)Z = [[X,Y],Z]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
/// Coefficients of an element of `𝔭^c` in the real basis of `𝔭`.
pub type PVec = Vec<Complex64>;

/// Membership and abelianness threshold.
pub const BRACKET_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraId {
    /// `so(1,n)`, real hyperbolic space of dimension `n`.
    So,
    /// `su(1,m)`, complex hyperbolic space of complex dimension `m`.
    Su,
    /// `sp(1,m)`, quaternionic hyperbolic space of quaternionic dimension `m`.
    Sp,
}

impl AlgebraId {
    pub fn label(self, size: usize) -> String {
        match self {
            AlgebraId::So => format!("so(1,{size})"),
            AlgebraId::Su => format!("su(1,{size})"),
            AlgebraId::Sp => format!("sp(1,{size})"),
        }
    }
}

impl std::str::FromStr for AlgebraId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "so" => Ok(AlgebraId::So),
            "su" => Ok(AlgebraId::Su),
            "sp" => Ok(AlgebraId::Sp),
            other => Err(Error::Unsupported(format!("algebra id '{other}'"))),
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bracket(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Quaternion `z + w j` as the complex 2x2 block `[[z, -conj w], [w, conj z]]`.
fn quaternion_block(unit: usize) -> [[Complex64; 2]; 2] {
    let (z, w) = match unit {
        0 => (c(1.0, 0.0), c(0.0, 0.0)),
        1 => (c(0.0, 1.0), c(0.0, 0.0)),
        2 => (c(0.0, 0.0), c(1.0, 0.0)),
        _ => (c(0.0, 0.0), c(0.0, -1.0)),
    };
    [[z, -w.conj()], [w, z.conj()]]
}

#[derive(Clone, Debug)]
pub struct CartanDecomposition {
    pub id: AlgebraId,
    pub size: usize,
    pub k_basis: Vec<CMat>,
    /// `B`-orthonormal real basis of `𝔭`.
    pub p_basis: Vec<CMat>,
    /// `B(X, Y) = scale * tr(XY)`.
    pub scale: f64,
    /// Matrix of the invariant complex structure on `𝔭` in `p_basis`, for Hermitian type.
    pub complex_structure: Option<Vec<Vec<f64>>>,
}

/// Builds the Cartan decomposition of `so(1,n)` (`n >= 2`), `su(1,m)` or `sp(1,m)` (`m >= 1`).
pub fn build_algebra(id: AlgebraId, size: usize) -> Result<CartanDecomposition> {
    match id {
        AlgebraId::So if size < 2 => return Err(Error::Unsupported("so(1,n) needs n >= 2".into())),
        AlgebraId::Su | AlgebraId::Sp if size < 1 => {
            return Err(Error::Unsupported(format!("{} needs m >= 1", id.label(size))))
        }
        _ => {}
    }
    Ok(match id {
        AlgebraId::So => build_so(size),
        AlgebraId::Su => build_su(size),
        AlgebraId::Sp => build_sp(size),
    })
}

fn unit(dim: usize, entries: &[(usize, usize, Complex64)]) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for &(i, j, v) in entries {
        m[(i, j)] += v;
    }
    m
}

fn build_so(n: usize) -> CartanDecomposition {
    let d = n + 1;
    let one = c(1.0, 0.0);
    let p_basis = (1..=n).map(|i| unit(d, &[(0, i, one), (i, 0, one)])).collect();
    let mut k_basis = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            k_basis.push(unit(d, &[(i, j, one), (j, i, -one)]));
        }
    }
    CartanDecomposition {
        id: AlgebraId::So,
        size: n,
        k_basis,
        p_basis,
        scale: 0.5,
        complex_structure: None,
    }
}

fn build_su(m: usize) -> CartanDecomposition {
    let d = m + 1;
    let (one, i) = (c(1.0, 0.0), c(0.0, 1.0));
    let mut p_basis = Vec::new();
    for k in 1..=m {
        p_basis.push(unit(d, &[(0, k, one), (k, 0, one)]));
        p_basis.push(unit(d, &[(k, 0, i), (0, k, -i)]));
    }
    let mut k_basis = Vec::new();
    for j in 1..=m {
        k_basis.push(unit(d, &[(j, j, i), (0, 0, -i)]));
    }
    for j in 1..=m {
        for l in (j + 1)..=m {
            k_basis.push(unit(d, &[(j, l, one), (l, j, -one)]));
            k_basis.push(unit(d, &[(j, l, i), (l, j, i)]));
        }
    }
    // J P(v) = P(iv): a_k -> b_k, b_k -> -a_k
    let dim = 2 * m;
    let mut j = vec![vec![0.0; dim]; dim];
    for k in 0..m {
        j[2 * k + 1][2 * k] = 1.0;
        j[2 * k][2 * k + 1] = -1.0;
    }
    CartanDecomposition {
        id: AlgebraId::Su,
        size: m,
        k_basis,
        p_basis,
        scale: 0.5,
        complex_structure: Some(j),
    }
}

fn block(r: usize, s: usize, q: &[[Complex64; 2]; 2], sign: f64, adjoint: bool, m: &mut CMat) {
    for a in 0..2 {
        for b in 0..2 {
            let v = if adjoint { q[b][a].conj() } else { q[a][b] };
            m[(2 * r + a, 2 * s + b)] += v * sign;
        }
    }
}

fn build_sp(m: usize) -> CartanDecomposition {
    let d = 2 * (m + 1);
    let mut p_basis = Vec::new();
    for k in 1..=m {
        for u in 0..4 {
            let q = quaternion_block(u);
            let mut x = CMat::zeros(d, d);
            block(k, 0, &q, 1.0, false, &mut x);
            block(0, k, &q, 1.0, true, &mut x);
            p_basis.push(x);
        }
    }
    let mut k_basis = Vec::new();
    for r in 0..=m {
        for u in 1..4 {
            let mut x = CMat::zeros(d, d);
            block(r, r, &quaternion_block(u), 1.0, false, &mut x);
            k_basis.push(x);
        }
    }
    for r in 1..=m {
        for s in (r + 1)..=m {
            for u in 0..4 {
                let q = quaternion_block(u);
                let mut x = CMat::zeros(d, d);
                block(r, s, &q, 1.0, false, &mut x);
                block(s, r, &q, -1.0, true, &mut x);
                k_basis.push(x);
            }
        }
    }
    CartanDecomposition {
        id: AlgebraId::Sp,
        size: m,
        k_basis,
        p_basis,
        scale: 0.25,
        complex_structure: None,
    }
}

/// Least-squares coefficients of `x` over the real span of `basis`, and the residual norm.
fn real_span(basis: &[CMat], x: &CMat) -> (Vec<f64>, f64) {
    let rows = 2 * x.len();
    let a = DMatrix::from_fn(rows, basis.len(), |r, k| {
        let z = basis[k][r / 2];
        if r % 2 == 0 {
            z.re
        } else {
            z.im
        }
    });
    let b = DMatrix::from_fn(rows, 1, |r, _| if r % 2 == 0 { x[r / 2].re } else { x[r / 2].im });
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-12).expect("svd solve");
    let res = (&a * &coef - &b).norm();
    (coef.iter().cloned().collect(), res)
}

impl CartanDecomposition {
    pub fn label(&self) -> String {
        self.id.label(self.size)
    }

    pub fn dim_k(&self) -> usize {
        self.k_basis.len()
    }

    /// Real dimension of `𝔭`, equal to the complex dimension of `𝔭^c`.
    pub fn dim_p(&self) -> usize {
        self.p_basis.len()
    }

    pub fn matrix_dim(&self) -> usize {
        self.p_basis[0].nrows()
    }

    /// Complex-bilinear trace form.
    pub fn form(&self, x: &CMat, y: &CMat) -> Complex64 {
        (x * y).trace() * self.scale
    }

    /// `Σ c_i p_i`.
    pub fn to_matrix(&self, v: &[Complex64]) -> CMat {
        let mut out = CMat::zeros(self.matrix_dim(), self.matrix_dim());
        for (ci, p) in v.iter().zip(&self.p_basis) {
            out += p * *ci;
        }
        out
    }

    /// Coefficients of a matrix in `𝔭^c`; errors when it has a component outside `𝔭^c`.
    pub fn coefficients(&self, x: &CMat) -> Result<PVec> {
        let v: PVec = self.p_basis.iter().map(|p| self.form(x, p)).collect();
        let defect = frob(&(x - self.to_matrix(&v)));
        if defect > BRACKET_TOL * (1.0 + frob(x)) {
            return Err(Error::Unsupported(format!(
                "matrix is not in p^c of {} (projection defect {defect:.3e})",
                self.label()
            )));
        }
        Ok(v)
    }

    /// Sup of the defects of `[k,k] ⊂ k`, `[k,p] ⊂ p`, `[p,p] ⊂ k` over basis pairs.
    pub fn cartan_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let pairs: [(&[CMat], &[CMat], &[CMat]); 3] = [
            (&self.k_basis, &self.k_basis, &self.k_basis),
            (&self.k_basis, &self.p_basis, &self.p_basis),
            (&self.p_basis, &self.p_basis, &self.k_basis),
        ];
        for (a, b, target) in pairs {
            for x in a {
                for y in b {
                    worst = worst.max(real_span(target, &bracket(x, y)).1);
                }
            }
        }
        worst
    }

    /// Largest violation of `B < 0` on `𝔨` and `B > 0` on `𝔭` (min eigenvalue signs),
    /// as `(max eigenvalue of B|k, min eigenvalue of B|p)`.
    pub fn form_signature(&self) -> (f64, f64) {
        let gram = |basis: &[CMat]| {
            DMatrix::from_fn(basis.len(), basis.len(), |i, j| self.form(&basis[i], &basis[j]).re)
        };
        let k = gram(&self.k_basis).symmetric_eigenvalues();
        let p = gram(&self.p_basis).symmetric_eigenvalues();
        (k.max(), p.min())
    }

    /// `[X, Y]` as a matrix in `𝔨^c`.
    pub fn bracket_p(&self, x: &[Complex64], y: &[Complex64]) -> CMat {
        bracket(&self.to_matrix(x), &self.to_matrix(y))
    }

    /// `B(X, Y)` on `𝔭^c` in coefficients.
    pub fn form_p(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// `(1,0)` part `X - i J X` of each real basis vector, for Hermitian type.
    pub fn holomorphic_part(&self) -> Option<Vec<PVec>> {
        let j = self.complex_structure.as_ref()?;
        let d = self.dim_p();
        let mut out = Vec::new();
        for k in (0..d).step_by(2) {
            let v: PVec = (0..d)
                .map(|r| c(if r == k { 1.0 } else { 0.0 }, -j[r][k]))
                .collect();
            out.push(v);
        }
        Some(out)
    }
}

pub fn conj(v: &[Complex64]) -> PVec {
    v.iter().map(|z| z.conj()).collect()
}

/// `R'(X,Y)Z = [[X,Y],Z]`, returned in `𝔭^c` coefficients.
pub fn curvature_bracket(cd: &CartanDecomposition, x: &[Complex64], y: &[Complex64], z: &[Complex64]) -> Result<PVec> {
    let m = bracket(&cd.bracket_p(x, y), &cd.to_matrix(z));
    cd.coefficients(&m)
}

/// `<R'(X,Y)X̄,Ȳ> = B([X,Y],[X̄,Ȳ])`.
pub fn hermitian_sectional(cd: &CartanDecomposition, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    cd.form(&cd.bracket_p(x, y), &cd.bracket_p(&conj(x), &conj(y)))
}

/// Sectional curvature of the real plane spanned by real vectors `x`, `y`.
pub fn sectional(cd: &CartanDecomposition, x: &[f64], y: &[f64]) -> f64 {
    let xc: PVec = x.iter().map(|&a| c(a, 0.0)).collect();
    let yc: PVec = y.iter().map(|&a| c(a, 0.0)).collect();
    let area = cd.form_p(&xc, &xc).re * cd.form_p(&yc, &yc).re - cd.form_p(&xc, &yc).re.powi(2);
    cd.form(&cd.bracket_p(&xc, &yc), &cd.bracket_p(&xc, &yc)).re / area
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbelianWitness {
    pub algebra: String,
    pub dim: usize,
    /// Complex rank of the basis.
    pub rank: usize,
    pub max_bracket_norm: f64,
    pub abelian: bool,
    /// Each basis vector as `[re, im]` coefficient pairs.
    pub basis: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

fn complex_rank(vs: &[PVec]) -> usize {
    if vs.is_empty() {
        return 0;
    }
    let a = DMatrix::from_fn(vs[0].len(), vs.len(), |r, k| vs[k][r]);
    let sv = a.svd(false, false).singular_values;
    let top = sv.max();
    sv.iter().filter(|s| **s > 1e-10 * top.max(1.0)).count()
}

pub fn is_abelian(cd: &CartanDecomposition, basis: &[PVec]) -> AbelianWitness {
    let mut worst: f64 = 0.0;
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            worst = worst.max(frob(&cd.bracket_p(&basis[i], &basis[j])));
        }
    }
    let rank = complex_rank(basis);
    AbelianWitness {
        algebra: cd.label(),
        dim: basis.len(),
        rank,
        max_bracket_norm: worst,
        abelian: worst < BRACKET_TOL,
        basis: basis.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect(),
        warning: (rank < basis.len()).then(|| format!("basis has complex rank {rank} < {}", basis.len())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum AbelianStrategy {
    /// Exact certificate where available, otherwise a constructive witness.
    Certified,
    /// Constructive witness plus randomized evidence only.
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SoCertificate {
    /// `{[e_i, e_j]}_{i<j}` has B-Gram matrix `-I`, so `[X,Y] = Σ (x_i y_j - x_j y_i)[e_i,e_j]`
    /// vanishes only for proportional `x, y`.
    pub bracket_gram_defect: f64,
    pub trials: usize,
    pub seed: u64,
    /// Worst relative mismatch between `|[X,Y]|_B^2` and `Σ_{i<j} |x_i y_j - x_j y_i|^2`.
    pub parametrization_defect: f64,
    /// Smallest `|[X,Y]|_B / |x ∧ y|` over trials; zero would falsify the certificate.
    pub min_bracket_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbelianResult {
    pub algebra: String,
    /// Lower bound on `ν` realized by the witness.
    pub nu: usize,
    pub certified: bool,
    pub witness: AbelianWitness,
    /// Complex dimension of `{Y ∈ 𝔭^c : [Y, 𝔞] = 0}`; equal to `nu` when the witness
    /// cannot be enlarged.
    pub centralizer_dim: usize,
    /// `½ dim 𝔭^c`, reported from the general bound without being checked.
    pub half_dim_bound: f64,
    pub certificate: Option<SoCertificate>,
}

/// Dimension of the centralizer of `a` inside `𝔭^c`.
fn centralizer_dim(cd: &CartanDecomposition, a: &[PVec]) -> usize {
    let d = cd.dim_p();
    let mats: Vec<CMat> = a.iter().map(|v| cd.to_matrix(v)).collect();
    // columns: [A_i, p_k] flattened over all i
    let len = cd.matrix_dim() * cd.matrix_dim();
    let rows = len * mats.len();
    let m = DMatrix::from_fn(rows.max(1), d, |r, k| {
        if mats.is_empty() {
            return c(0.0, 0.0);
        }
        let (i, e) = (r / len, r % len);
        bracket(&mats[i], &cd.p_basis[k])[e]
    });
    let sv = m.svd(false, false).singular_values;
    let top = sv.max().max(1.0);
    d - sv.iter().filter(|s| **s > 1e-10 * top).count()
}

fn random_pvec(rng: &mut ChaCha8Rng, d: usize) -> PVec {
    (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn so_certificate(cd: &CartanDecomposition, trials: usize, seed: u64) -> SoCertificate {
    let n = cd.dim_p();
    let mut brackets = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut ei = vec![c(0.0, 0.0); n];
            let mut ej = ei.clone();
            ei[i] = c(1.0, 0.0);
            ej[j] = c(1.0, 0.0);
            brackets.push(cd.bracket_p(&ei, &ej));
        }
    }
    let mut gram_defect: f64 = 0.0;
    for (a, x) in brackets.iter().enumerate() {
        for (b, y) in brackets.iter().enumerate() {
            let want = if a == b { -1.0 } else { 0.0 };
            gram_defect = gram_defect.max((cd.form(x, y) - c(want, 0.0)).norm());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut param: f64 = 0.0;
    let mut ratio = f64::INFINITY;
    for _ in 0..trials {
        let x = random_pvec(&mut rng, n);
        let y = random_pvec(&mut rng, n);
        let z = cd.bracket_p(&x, &y);
        // -B(Z, conj Z) is the B-norm on k^c
        let zbar = cd.bracket_p(&conj(&x), &conj(&y));
        let lhs = -cd.form(&z, &zbar).re;
        let mut wedge = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                wedge += (x[i] * y[j] - x[j] * y[i]).norm_sqr();
            }
        }
        param = param.max((lhs - wedge).abs() / wedge.max(1e-300));
        ratio = ratio.min((lhs.max(0.0) / wedge).sqrt());
    }
    SoCertificate {
        bracket_gram_defect: gram_defect,
        trials,
        seed,
        parametrization_defect: param,
        min_bracket_ratio: ratio,
    }
}

/// Lower bound for `ν`, the largest complex dimension of an abelian subspace of `𝔭^c`.
pub fn max_abelian(cd: &CartanDecomposition, strategy: AbelianStrategy, trials: usize, seed: u64) -> Result<AbelianResult> {
    let d = cd.dim_p();
    let witness_basis: Vec<PVec> = match cd.id {
        AlgebraId::So => {
            let mut e = vec![c(0.0, 0.0); d];
            e[0] = c(1.0, 0.0);
            vec![e]
        }
        AlgebraId::Su => cd.holomorphic_part().expect("su(1,m) is Hermitian"),
        AlgebraId::Sp => {
            // the p^{1,0} of the complex hyperbolic subspace: quaternion units 1 and i
            (0..cd.size)
                .map(|k| {
                    let mut v = vec![c(0.0, 0.0); d];
                    v[4 * k] = c(1.0, 0.0);
                    v[4 * k + 1] = c(0.0, -1.0);
                    v
                })
                .collect()
        }
    };
    let witness = is_abelian(cd, &witness_basis);
    if !witness.abelian {
        return Err(Error::SolverFailure {
            what: format!("constructed abelian witness for {}", cd.label()),
            iterations: 0,
            residual: witness.max_bracket_norm,
        });
    }
    let certificate = match (cd.id, strategy) {
        (AlgebraId::So, _) => Some(so_certificate(cd, trials, seed)),
        _ => None,
    };
    let certified = match (&certificate, strategy) {
        (Some(cert), AbelianStrategy::Certified) => {
            cert.bracket_gram_defect < 1e-12 && cert.parametrization_defect < 1e-10 && cert.min_bracket_ratio > 0.5
        }
        _ => false,
    };
    Ok(AbelianResult {
        algebra: cd.label(),
        nu: witness.dim,
        certified,
        centralizer_dim: centralizer_dim(cd, &witness_basis),
        half_dim_bound: d as f64 / 2.0,
        witness,
        certificate,
    })
}

/// `2 ν`, the bound on `rank(du)` for pluriharmonic maps into quotients of the space.
pub fn rank_bound(result: &AbelianResult) -> usize {
    2 * result.nu
}
