//! Smallest eigenvalue of the discrete connection Laplacian on `u*TN`.
//!
//! Sections are stored in orthonormal tangent frames. Each grid edge carries the
//! matrix of parallel transport between the frames at its ends, so
//! `Q(s) = Σ_e w_e |s_q - T_e s_p|^2` is a gauge-invariant discretization of
//! `∫ |∇s|^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;
use crate::map::MapField;
use crate::metric::MetricField;
use crate::target::{axpy, Vector, MAX_AMB, ZERO};

type Small = [[f64; MAX_AMB]; MAX_AMB];

#[derive(Clone, Debug)]
pub struct ParallelSection {
    /// `min Q(s) / ∫|s|^2`.
    pub quotient: f64,
    /// Minimizing section as ambient tangent vectors, unit `L^2` norm.
    pub section: Vec<Vector>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct DetectorConfig {
    pub shift: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub cg_tolerance: f64,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            shift: 0.1,
            max_iterations: 500,
            tolerance: 1e-12,
            cg_tolerance: 1e-13,
            seed: 0,
        }
    }
}

struct Laplacian {
    m: usize,
    n: usize,
    /// `forward[p][a]`: neighbor index and transport from `p` to it.
    forward: Vec<[(usize, Small); MAX_DIM]>,
    backward: Vec<[usize; MAX_DIM]>,
    weight: Vec<[f64; MAX_DIM]>,
    mass: Vec<f64>,
    diag: Vec<f64>,
}

fn matvec(t: &Small, x: &[f64], m: usize) -> [f64; MAX_AMB] {
    let mut y = [0.0; MAX_AMB];
    for i in 0..m {
        for j in 0..m {
            y[i] += t[i][j] * x[j];
        }
    }
    y
}

fn matvec_t(t: &Small, x: &[f64], m: usize) -> [f64; MAX_AMB] {
    let mut y = [0.0; MAX_AMB];
    for i in 0..m {
        for j in 0..m {
            y[j] += t[i][j] * x[i];
        }
    }
    y
}

impl Laplacian {
    fn build(u: &MapField, g: &MetricField) -> Result<(Self, Vec<Vec<Vector>>)> {
        let grid = u.grid();
        g.grid().check_same(grid, "map")?;
        let target = u.target();
        let m = target.dim();
        let n = grid.dim();
        let frames: Vec<Vec<Vector>> = u.values().par_iter().map(|p| target.tangent_frame(p)).collect();
        if frames.iter().any(|f| f.len() != m) {
            return Err(Error::InvalidTarget("tangent frame construction failed".into()));
        }
        let cell = grid.cell_volume();
        let forward: Vec<[(usize, Small); MAX_DIM]> = (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let mut out = [(0usize, [[0.0; MAX_AMB]; MAX_AMB]); MAX_DIM];
                for (a, slot) in out.iter_mut().enumerate().take(n) {
                    let (q, w) = grid.step(p, a, 1);
                    let up = u.at(p);
                    let uq = if w == 0 { *u.at(q) } else { u.equivariance().apply(a, w, u.at(q)) };
                    let mut t = [[0.0; MAX_AMB]; MAX_AMB];
                    for j in 0..m {
                        let moved = target.transport_unchecked(up, &uq, &frames[p][j]);
                        for i in 0..m {
                            let f = if w == 0 {
                                frames[q][i]
                            } else {
                                u.equivariance().apply_vector(a, w, &frames[q][i])
                            };
                            t[i][j] = target.inner(&f, &moved);
                        }
                    }
                    *slot = (q, t);
                }
                out
            })
            .collect();
        let backward = (0..grid.len())
            .map(|p| {
                let mut b = [0usize; MAX_DIM];
                for (a, slot) in b.iter_mut().enumerate().take(n) {
                    *slot = grid.step(p, a, -1).0;
                }
                b
            })
            .collect();
        let weight: Vec<[f64; MAX_DIM]> = (0..grid.len())
            .map(|p| {
                let mut w = [0.0; MAX_DIM];
                for (a, slot) in w.iter_mut().enumerate().take(n) {
                    let h = grid.spacing(a);
                    *slot = cell * g.sqrt_det(p) * g.inverse(p)[a][a] / (h * h);
                }
                w
            })
            .collect();
        let mass: Vec<f64> = (0..grid.len()).map(|p| cell * g.sqrt_det(p)).collect();
        let backward: Vec<[usize; MAX_DIM]> = backward;
        let diag = (0..grid.len())
            .map(|p| {
                let mut d = 0.0;
                for a in 0..n {
                    d += weight[p][a] + weight[backward[p][a]][a];
                }
                d
            })
            .collect();
        Ok((
            Laplacian {
                m,
                n,
                forward,
                backward,
                weight,
                mass,
                diag,
            },
            frames,
        ))
    }

    fn len(&self) -> usize {
        self.mass.len()
    }

    /// `y = (L + shift M) x`, gathering both edge orientations at each point.
    fn apply(&self, x: &[f64], shift: f64) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; x.len()];
        y.par_chunks_mut(m).enumerate().for_each(|(p, yp)| {
            let xp = &x[p * m..(p + 1) * m];
            for a in 0..self.n {
                let (q, ref t) = self.forward[p][a];
                let w = self.weight[p][a];
                let tx = matvec(t, xp, m);
                let mut r = [0.0; MAX_AMB];
                for i in 0..m {
                    r[i] = w * (x[q * m + i] - tx[i]);
                }
                let back = matvec_t(t, &r, m);
                for i in 0..m {
                    yp[i] -= back[i];
                }
                let b = self.backward[p][a];
                let (_, ref tb) = self.forward[b][a];
                let wb = self.weight[b][a];
                let tbx = matvec(tb, &x[b * m..(b + 1) * m], m);
                for i in 0..m {
                    yp[i] += wb * (xp[i] - tbx[i]);
                }
            }
            for i in 0..m {
                yp[i] += shift * self.mass[p] * xp[i];
            }
        });
        y
    }

    fn mass_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let m = self.m;
        a.chunks(m)
            .zip(b.chunks(m))
            .zip(&self.mass)
            .map(|((x, y), w)| w * x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for `(L + shift M) y = b`.
fn solve(l: &Laplacian, b: &[f64], x0: &[f64], shift: f64, tol: f64) -> Result<Vec<f64>> {
    let m = l.m;
    let precond: Vec<f64> = (0..b.len()).map(|k| 1.0 / (l.diag[k / m] + shift * l.mass[k / m])).collect();
    let mut x = x0.to_vec();
    let ax = l.apply(&x, shift);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(p, q)| p * q).collect();
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 20 * b.len().max(100);
    for it in 0..max_iter {
        let rn = dot(&r, &r).sqrt();
        if rn <= tol * bnorm {
            return Ok(x);
        }
        let ad = l.apply(&d, shift);
        let alpha = rz / dot(&d, &ad);
        for k in 0..x.len() {
            x[k] += alpha * d[k];
            r[k] -= alpha * ad[k];
        }
        for k in 0..z.len() {
            z[k] = r[k] * precond[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..d.len() {
            d[k] = z[k] + beta * d[k];
        }
        if !rz.is_finite() {
            return Err(Error::SolverFailure {
                what: "conjugate gradients".into(),
                iterations: it,
                residual: f64::NAN,
            });
        }
    }
    Err(Error::SolverFailure {
        what: "conjugate gradients".into(),
        iterations: max_iter,
        residual: dot(&r, &r).sqrt() / bnorm,
    })
}

/// Inverse iteration for the bottom of the spectrum of the connection Laplacian
/// on `u*TN`, with the domain metric `g` supplying the edge weights.
pub fn parallel_section_detect(u: &MapField, g: &MetricField, config: &DetectorConfig) -> Result<ParallelSection> {
    let (l, frames) = Laplacian::build(u, g)?;
    let m = l.m;
    let size = l.len() * m;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let normalize = |x: &mut Vec<f64>| {
        let nrm = l.mass_dot(x, x).sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
    };
    normalize(&mut x);
    let quotient = |x: &[f64]| dot(x, &l.apply(x, 0.0));
    let mut lambda = quotient(&x);
    let scale = l.diag.iter().zip(&l.mass).map(|(d, w)| d / w).fold(0.0, f64::max);
    for it in 1..=config.max_iterations {
        let b: Vec<f64> = x
            .chunks(m)
            .zip(&l.mass)
            .flat_map(|(c, w)| c.iter().map(move |v| v * w))
            .collect();
        let mut y = solve(&l, &b, &x, config.shift, config.cg_tolerance)?;
        normalize(&mut y);
        let next = quotient(&y);
        x = y;
        let change = (next - lambda).abs();
        lambda = next;
        if change <= config.tolerance * (lambda + 1e-6 * scale) || lambda < 1e-14 * scale {
            let section = x
                .chunks(m)
                .zip(&frames)
                .map(|(c, f)| {
                    let mut v = ZERO;
                    for (ci, fi) in c.iter().zip(f) {
                        v = axpy(&v, *ci, fi);
                    }
                    v
                })
                .collect();
            return Ok(ParallelSection {
                quotient: lambda.max(0.0),
                section,
                iterations: it,
            });
        }
    }
    Err(Error::SolverFailure {
        what: "inverse iteration for the connection Laplacian".into(),
        iterations: config.max_iterations,
        residual: lambda,
    })
}
