//! Convex and nonsmooth analysis on sampled functions.

mod conjugate;
mod nonsmooth;

pub use conjugate::{legendre_fenchel, legendre_fenchel_nd, Conjugate, ConjugateNd};
pub use nonsmooth::{
    clarke_gradient_1d, contingent, derivative_fan, dini_lower, subdifferential, superdifferential,
    DerivativeFan, DifferentialSet, FanConfig, StepSchedule,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance on discrete second differences.
pub const TOL_HULL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretation {
    PointwiseSamples,
    PiecewiseLinear,
}

/// Samples `w_i` of an extended-real function at strictly increasing `v_i`.
/// `+inf` ordinates are allowed; NaN is read as `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction1D {
    abscissae: Vec<f64>,
    ordinates: Vec<f64>,
    interpretation: Interpretation,
}

impl SampledFunction1D {
    pub fn new(abscissae: Vec<f64>, ordinates: Vec<f64>) -> Result<Self> {
        if abscissae.len() != ordinates.len() {
            return Err(Error::DimensionMismatch {
                expected: abscissae.len(),
                got: ordinates.len(),
            });
        }
        if let Some(i) = abscissae.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("abscissa {i} is not finite")));
        }
        if let Some(i) = abscissae.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "abscissae not strictly increasing at index {}",
                i + 1
            )));
        }
        let ordinates: Vec<f64> = ordinates
            .into_iter()
            .map(|w| {
                if w.is_nan() || w == f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    w
                }
            })
            .collect();
        if !ordinates.iter().any(|w| w.is_finite()) {
            return Err(Error::TooFewFinitePoints {
                needed: 1,
                found: 0,
            });
        }
        Ok(SampledFunction1D {
            abscissae,
            ordinates,
            interpretation: Interpretation::PointwiseSamples,
        })
    }

    /// Samples `f` at the given abscissae.
    pub fn from_fn(abscissae: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let ordinates = abscissae.iter().map(|&v| f(v)).collect();
        Self::new(abscissae, ordinates)
    }

    /// Samples `f` at `m` equispaced points of `[lo, hi]`, endpoints included.
    pub fn uniform(lo: f64, hi: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(linspace(lo, hi, m), f)
    }

    pub fn with_interpretation(mut self, interpretation: Interpretation) -> Self {
        self.interpretation = interpretation;
        self
    }

    pub fn interpretation(&self) -> Interpretation {
        self.interpretation
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    pub fn finite_count(&self) -> usize {
        self.ordinates.iter().filter(|w| w.is_finite()).count()
    }

    /// Indices of the first and last finite ordinate.
    pub fn finite_span(&self) -> (usize, usize) {
        let first = self
            .ordinates
            .iter()
            .position(|w| w.is_finite())
            .unwrap_or(0);
        let last = self
            .ordinates
            .iter()
            .rposition(|w| w.is_finite())
            .unwrap_or(0);
        (first, last)
    }

    /// Index of `v` among the abscissae, if present up to a relative 1e-12.
    pub fn index_of(&self, v: f64) -> Option<usize> {
        let tol = 1e-12 * (1.0 + v.abs());
        let k = self.abscissae.partition_point(|&a| a < v - tol);
        (k < self.len() && (self.abscissae[k] - v).abs() <= tol).then_some(k)
    }

    /// Piecewise-linear interpolant; `+inf` outside the sampled range or
    /// next to an infinite sample.
    pub fn eval(&self, v: f64) -> f64 {
        if let Some(k) = self.index_of(v) {
            return self.ordinates[k];
        }
        let n = self.len();
        if n == 0 || v < self.abscissae[0] || v > self.abscissae[n - 1] {
            return f64::INFINITY;
        }
        let k = self.abscissae.partition_point(|&a| a <= v) - 1;
        let (a0, a1) = (self.abscissae[k], self.abscissae[k + 1]);
        let (w0, w1) = (self.ordinates[k], self.ordinates[k + 1]);
        if !(w0.is_finite() && w1.is_finite()) {
            return f64::INFINITY;
        }
        let t = (v - a0) / (a1 - a0);
        w0 + t * (w1 - w0)
    }

    /// Divided second differences on the finite span (non-uniform grids
    /// allowed). Infinite neighbours give no entry.
    pub fn second_differences(&self) -> Vec<f64> {
        let (a, w) = (&self.abscissae, &self.ordinates);
        (1..self.len().saturating_sub(1))
            .filter(|&i| w[i - 1].is_finite() && w[i].is_finite() && w[i + 1].is_finite())
            .map(|i| {
                let sl = (w[i] - w[i - 1]) / (a[i] - a[i - 1]);
                let sr = (w[i + 1] - w[i]) / (a[i + 1] - a[i]);
                sr - sl
            })
            .collect()
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.second_differences().iter().all(|&d| d >= -tol)
    }
}

pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..m)
            .map(|i| {
                if i == m - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (m - 1) as f64
                }
            })
            .collect(),
    }
}

/// Lower convex envelope of the finite samples, evaluated at every
/// abscissa. Samples outside the finite span stay `+inf`; infinite samples
/// inside it receive the hull value.
pub fn lower_convex_envelope(f: &SampledFunction1D) -> Result<SampledFunction1D> {
    let pts: Vec<(f64, f64)> = f
        .abscissae
        .iter()
        .zip(&f.ordinates)
        .filter(|(_, w)| w.is_finite())
        .map(|(&v, &w)| (v, w))
        .collect();
    if pts.len() < 2 {
        return Err(Error::TooFewFinitePoints {
            needed: 2,
            found: pts.len(),
        });
    }
    let hull = lower_hull(&pts);
    let (first, last) = f.finite_span();
    let mut out = vec![f64::INFINITY; f.len()];
    let mut seg = 0;
    for (slot, &v) in out[first..=last].iter_mut().zip(&f.abscissae[first..=last]) {
        while seg + 2 < hull.len() && hull[seg + 1].0 <= v {
            seg += 1;
        }
        let (p, q) = (hull[seg], hull[seg + 1]);
        *slot = if v == p.0 {
            p.1
        } else if v == q.0 {
            q.1
        } else {
            p.1 + (v - p.0) * ((q.1 - p.1) / (q.0 - p.0))
        };
    }
    Ok(SampledFunction1D {
        abscissae: f.abscissae.clone(),
        ordinates: out,
        interpretation: Interpretation::PiecewiseLinear,
    })
}

// Monotone chain. A point is dropped only when it sits strictly above the
// chord of its neighbours by more than a rounding-scale margin, so that
// points already on the hull survive a second pass unchanged.
fn lower_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let chord = a.1 + (b.0 - a.0) * ((p.1 - a.1) / (p.0 - a.0));
            let margin = 1e-13 * (1.0 + a.1.abs().max(b.1.abs()).max(p.1.abs()));
            if b.1 - chord > margin {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Left and right derivatives at `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneSidedDerivatives {
    pub left: f64,
    pub right: f64,
    pub at: f64,
}

/// One-sided derivatives of the lower convex envelope of `f` at `at`,
/// read off the adjacent hull segments. At a sample point the two sides
/// differ; between samples both equal the segment slope.
pub fn one_sided_derivatives(f: &SampledFunction1D, at: f64) -> Result<OneSidedDerivatives> {
    let env = lower_convex_envelope(f)?;
    let (first, last) = env.finite_span();
    let a = &env.abscissae;
    let w = &env.ordinates;
    if !(at > a[first] && at < a[last]) {
        return Err(Error::PointOutsideFiniteRegion(at));
    }
    let slope = |i: usize| (w[i + 1] - w[i]) / (a[i + 1] - a[i]);
    let (left, right) = match env.index_of(at) {
        Some(k) => (slope(k - 1), slope(k)),
        None => {
            let k = a.partition_point(|&v| v <= at) - 1;
            (slope(k), slope(k))
        }
    };
    Ok(OneSidedDerivatives { left, right, at })
}
