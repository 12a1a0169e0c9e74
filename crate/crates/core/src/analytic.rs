//! Closed-form scalar functions used to build analytic metric, Higgs and map families.

use serde::{Deserialize, Serialize};

use crate::grid::{DVec, Mat, MAX_DIM, ZERO_MAT};

/// `amplitude * sin(wavevector . x + phase)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Wave {
    pub amplitude: f64,
    pub wavevector: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

/// `constant + linear . x + sum of waves`, with exact derivatives.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScalarFn {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub linear: Vec<f64>,
    #[serde(default)]
    pub waves: Vec<Wave>,
}

fn pad(v: &[f64]) -> DVec {
    let mut out = [0.0; MAX_DIM];
    for (o, x) in out.iter_mut().zip(v) {
        *o = *x;
    }
    out
}

fn dot(a: &DVec, b: &DVec) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ScalarFn {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        ScalarFn {
            constant: c,
            ..Default::default()
        }
    }

    pub fn linear(coeffs: &[f64]) -> Self {
        ScalarFn {
            linear: coeffs.to_vec(),
            ..Default::default()
        }
    }

    /// `amp * sin(freq * x^axis)`.
    pub fn sin_axis(amp: f64, axis: usize, freq: f64) -> Self {
        let mut k = vec![0.0; axis + 1];
        k[axis] = freq;
        ScalarFn {
            waves: vec![Wave {
                amplitude: amp,
                wavevector: k,
                phase: 0.0,
            }],
            ..Default::default()
        }
    }

    /// `amp * cos(freq * x^axis)`.
    pub fn cos_axis(amp: f64, axis: usize, freq: f64) -> Self {
        let mut f = Self::sin_axis(amp, axis, freq);
        f.waves[0].phase = std::f64::consts::FRAC_PI_2;
        f
    }

    pub fn plus(mut self, other: ScalarFn) -> Self {
        self.constant += other.constant;
        let n = self.linear.len().max(other.linear.len());
        self.linear.resize(n, 0.0);
        for (a, b) in self.linear.iter_mut().zip(&other.linear) {
            *a += b;
        }
        self.waves.extend(other.waves);
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.constant *= s;
        self.linear.iter_mut().for_each(|a| *a *= s);
        self.waves.iter_mut().for_each(|w| w.amplitude *= s);
        self
    }

    pub fn value(&self, x: &DVec) -> f64 {
        let mut v = self.constant + dot(&pad(&self.linear), x);
        for w in &self.waves {
            v += w.amplitude * (dot(&pad(&w.wavevector), x) + w.phase).sin();
        }
        v
    }

    pub fn gradient(&self, x: &DVec) -> DVec {
        let mut g = pad(&self.linear);
        for w in &self.waves {
            let k = pad(&w.wavevector);
            let c = w.amplitude * (dot(&k, x) + w.phase).cos();
            for i in 0..MAX_DIM {
                g[i] += c * k[i];
            }
        }
        g
    }

    pub fn hessian(&self, x: &DVec) -> Mat {
        let mut h = ZERO_MAT;
        for w in &self.waves {
            let k = pad(&w.wavevector);
            let s = -w.amplitude * (dot(&k, x) + w.phase).sin();
            for i in 0..MAX_DIM {
                for j in 0..MAX_DIM {
                    h[i][j] += s * k[i] * k[j];
                }
            }
        }
        h
    }

    /// True when every linear coefficient vanishes, i.e. the function is periodic
    /// whenever its wavevectors are compatible with the grid periods.
    pub fn is_periodic_candidate(&self) -> bool {
        self.linear.iter().all(|&a| a == 0.0)
    }
}
