use serde::Serialize;

use super::SampledFunction1D;
use crate::error::{Error, Result};

/// Discrete conjugate `H(p) = max_u p u - L(u)` over the finite samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conjugate {
    pub dual: Vec<f64>,
    pub values: Vec<f64>,
    /// Abscissa attaining the max at each dual point.
    pub argmax: Vec<f64>,
    /// Max attained at the first or last finite sample: the true supremum
    /// may lie off the grid.
    pub truncated: Vec<bool>,
}

impl Conjugate {
    pub fn any_truncated(&self) -> bool {
        self.truncated.iter().any(|&t| t)
    }

    pub fn as_sampled(&self) -> Result<SampledFunction1D> {
        SampledFunction1D::new(self.dual.clone(), self.values.clone())
    }
}

pub fn legendre_fenchel(f: &SampledFunction1D, dual: &[f64]) -> Result<Conjugate> {
    if dual.is_empty() {
        return Err(Error::EmptyDualGrid);
    }
    let (first, last) = f.finite_span();
    let mut out = Conjugate {
        dual: dual.to_vec(),
        values: Vec::with_capacity(dual.len()),
        argmax: Vec::with_capacity(dual.len()),
        truncated: Vec::with_capacity(dual.len()),
    };
    for &p in dual {
        let mut best = f64::NEG_INFINITY;
        let mut best_i = first;
        for i in first..=last {
            let w = f.ordinates()[i];
            if !w.is_finite() {
                continue;
            }
            let val = p * f.abscissae()[i] - w;
            if val > best {
                best = val;
                best_i = i;
            }
        }
        out.values.push(best);
        out.argmax.push(f.abscissae()[best_i]);
        out.truncated.push(best_i == first || best_i == last);
    }
    Ok(out)
}

/// Conjugate over scattered samples in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateNd {
    pub values: Vec<f64>,
    pub argmax: Vec<Vec<f64>>,
    /// Argmax has a coordinate on the bounding box of the samples.
    pub truncated: Vec<bool>,
}

pub fn legendre_fenchel_nd(samples: &[(Vec<f64>, f64)], dual: &[Vec<f64>]) -> Result<ConjugateNd> {
    if dual.is_empty() {
        return Err(Error::EmptyDualGrid);
    }
    let finite: Vec<&(Vec<f64>, f64)> = samples.iter().filter(|(_, w)| w.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::TooFewFinitePoints {
            needed: 1,
            found: 0,
        });
    }
    let dim = finite[0].0.len();
    for (u, _) in &finite {
        if u.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: u.len(),
            });
        }
    }
    let lo: Vec<f64> = (0..dim)
        .map(|k| {
            finite
                .iter()
                .map(|(u, _)| u[k])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let hi: Vec<f64> = (0..dim)
        .map(|k| {
            finite
                .iter()
                .map(|(u, _)| u[k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut out = ConjugateNd {
        values: Vec::with_capacity(dual.len()),
        argmax: Vec::with_capacity(dual.len()),
        truncated: Vec::with_capacity(dual.len()),
    };
    for p in dual {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_u = &finite[0].0;
        for (u, w) in &finite {
            let val = p.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() - w;
            if val > best {
                best = val;
                best_u = u;
            }
        }
        out.values.push(best);
        out.truncated
            .push((0..dim).any(|k| best_u[k] == lo[k] || best_u[k] == hi[k]));
        out.argmax.push(best_u.clone());
    }
    Ok(out)
}
