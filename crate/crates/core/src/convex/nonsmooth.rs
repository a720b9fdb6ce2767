//! Dini and contingent derivatives, sub/superdifferentials and the Clarke
//! gradient of pointwise evaluators. Limits are replaced by min/max over the
//! tail of a geometric step sequence.

use serde::Serialize;

use super::linspace;
use crate::error::{Error, Result};
use crate::lagrangian::direction_fan;

/// Steps `h_j = h0 * 2^-j`, `j = 0..=count`; limits are read off the last
/// `tail` of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSchedule {
    pub h0: f64,
    pub count: usize,
    pub tail: usize,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule {
            h0: 0.1,
            count: 20,
            tail: 5,
        }
    }
}

impl StepSchedule {
    pub fn new(h0: f64, count: usize, tail: usize) -> Result<Self> {
        if !(h0 > 0.0 && h0.is_finite()) || tail == 0 || tail > count + 1 {
            return Err(Error::InvalidConfig(format!(
                "step schedule h0={h0}, count={count}, tail={tail}"
            )));
        }
        Ok(StepSchedule { h0, count, tail })
    }

    /// `(j, h_j)` for the tail indices.
    pub fn tail_steps(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let start = self.count + 1 - self.tail.min(self.count + 1);
        (start..=self.count).map(move |j| (j, self.h0 * 0.5f64.powi(j as i32)))
    }

    pub fn smallest(&self) -> f64 {
        self.h0 * 0.5f64.powi(self.count as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FanConfig {
    pub steps: StepSchedule,
    /// Radius of the direction perturbation at `j = 0`; shrinks like `2^-j`.
    pub fan_width: f64,
    pub tol_fan: f64,
    pub tol_sub: f64,
    /// Candidate lattice points per axis; `None` picks 201 in 1-D, 41 in 2-D.
    pub resolution: Option<usize>,
    /// Axis intervals narrower than this (relative) are treated as a point
    /// and searched with a lattice coarse enough to isolate it.
    pub singleton_width: f64,
}

impl Default for FanConfig {
    fn default() -> Self {
        FanConfig {
            steps: StepSchedule::default(),
            fan_width: 1e-4,
            tol_fan: 1e-6,
            tol_sub: 1e-6,
            resolution: None,
            singleton_width: 1e-4,
        }
    }
}

fn base_value(phi: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    let fx = phi(x);
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(Error::EvaluatorInfinite)
    }
}

fn quotient(phi: &dyn Fn(&[f64]) -> f64, x: &[f64], fx: f64, v: &[f64], h: f64) -> f64 {
    let y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let fy = phi(&y);
    if fy.is_finite() {
        (fy - fx) / h
    } else {
        f64::INFINITY
    }
}

/// Lower Dini derivative along the fixed direction `xi`.
pub fn dini_lower(
    phi: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    xi: &[f64],
    steps: &StepSchedule,
) -> Result<f64> {
    check_dims(x, xi)?;
    let fx = base_value(phi, x)?;
    Ok(steps
        .tail_steps()
        .map(|(_, h)| quotient(phi, x, fx, xi, h))
        .fold(f64::INFINITY, f64::min))
}

/// Lower and upper contingent derivatives `(D_up, D_down)`: min and max of
/// quotients over tail steps and directions within the shrinking fan around
/// `xi`.
pub fn contingent(
    phi: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    xi: &[f64],
    steps: &StepSchedule,
    fan_width: f64,
) -> Result<(f64, f64)> {
    check_dims(x, xi)?;
    let fx = base_value(phi, x)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (j, h) in steps.tail_steps() {
        let r = fan_width * 0.5f64.powi(j as i32);
        for v in perturbed(xi, r) {
            let q = quotient(phi, x, fx, &v, h);
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    Ok((lo, hi))
}

fn perturbed(xi: &[f64], r: f64) -> Vec<Vec<f64>> {
    let mut out = vec![xi.to_vec()];
    if r > 0.0 {
        for k in 0..xi.len() {
            for s in [r, -r] {
                let mut v = xi.to_vec();
                v[k] += s;
                out.push(v);
            }
        }
    }
    out
}

fn check_dims(x: &[f64], xi: &[f64]) -> Result<()> {
    if x.len() != xi.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: xi.len(),
        });
    }
    Ok(())
}

/// Contingent and Dini derivatives over a set of directions at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeFan {
    pub base: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub steps: StepSchedule,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub dini: Vec<f64>,
}

impl DerivativeFan {
    /// `D_up - tol <= d <= D_down + tol` at every direction.
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        self.dini
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&d, (&lo, &hi))| d >= lo - tol && d <= hi + tol)
    }
}

pub fn derivative_fan(
    phi: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    directions: &[Vec<f64>],
    cfg: &FanConfig,
) -> Result<DerivativeFan> {
    if directions.is_empty() {
        return Err(Error::EmptyFan);
    }
    let mut fan = DerivativeFan {
        base: x.to_vec(),
        directions: directions.to_vec(),
        steps: cfg.steps,
        lower: Vec::with_capacity(directions.len()),
        upper: Vec::with_capacity(directions.len()),
        dini: Vec::with_capacity(directions.len()),
    };
    for xi in directions {
        let (lo, hi) = contingent(phi, x, xi, &cfg.steps, cfg.fan_width)?;
        fan.lower.push(lo);
        fan.upper.push(hi);
        fan.dini.push(dini_lower(phi, x, xi, &cfg.steps)?);
    }
    Ok(fan)
}

/// Candidate-lattice approximation of a sub- or superdifferential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferentialSet {
    pub points: Vec<Vec<f64>>,
    /// Lattice spacing per axis.
    pub lattice_step: Vec<f64>,
    pub fan: DerivativeFan,
}

impl DifferentialSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Member of least Euclidean norm; ties keep the first in lattice order.
    pub fn min_norm(&self) -> Option<&[f64]> {
        let mut best: Option<(&[f64], f64)> = None;
        for p in &self.points {
            let n = p.iter().map(|c| c * c).sum::<f64>();
            if best.is_none_or(|(_, b)| n < b) {
                best = Some((p, n));
            }
        }
        best.map(|(p, _)| p)
    }

    /// Largest Euclidean distance between members.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                d = d.max(s.sqrt());
            }
        }
        d
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Sub,
    Super,
}

/// `{p : <p,v> <= D_up(v) + tol for every fan direction v}`.
pub fn subdifferential(
    phi: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    cfg: &FanConfig,
) -> Result<DifferentialSet> {
    differential(phi, x, cfg, Side::Sub)
}

/// `{p : <p,v> >= D_down(v) - tol for every fan direction v}`.
pub fn superdifferential(
    phi: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    cfg: &FanConfig,
) -> Result<DifferentialSet> {
    differential(phi, x, cfg, Side::Super)
}

fn differential(
    phi: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    cfg: &FanConfig,
    side: Side,
) -> Result<DifferentialSet> {
    let dim = x.len();
    let resolution = match (dim, cfg.resolution) {
        (0, _) => return Err(Error::EmptyFan),
        (_, Some(r)) if r >= 2 => r,
        (1, _) => 201,
        (2, _) => 41,
        (d, _) => return Err(Error::UnsupportedDimension(d)),
    };
    let directions = direction_fan(dim);
    let fan = derivative_fan(phi, x, &directions, cfg)?;
    let bound = |k: usize, sign: f64| -> Result<f64> {
        let mut e = vec![0.0; dim];
        e[k] = sign;
        let (lo, hi) = contingent(phi, x, &e, &cfg.steps, cfg.fan_width)?;
        Ok(match side {
            Side::Sub => lo,
            Side::Super => hi,
        })
    };

    let mut axes = Vec::with_capacity(dim);
    let mut lattice_step = Vec::with_capacity(dim);
    for k in 0..dim {
        // Sub: -D_up(-e) <= p_k <= D_up(e). Super: D_down(e) <= p_k <= -D_down(-e).
        let (lo, hi) = match side {
            Side::Sub => (-bound(k, -1.0)?, bound(k, 1.0)?),
            Side::Super => (bound(k, 1.0)?, -bound(k, -1.0)?),
        };
        let (lo, hi) = clamp_axis(lo, hi);
        let mid = 0.5 * (lo + hi);
        let width = (hi - lo).abs();
        let half = if width <= cfg.singleton_width * (1.0 + mid.abs()) {
            0.5 * (resolution - 1) as f64 * 1.01 * (width + 2.0 * cfg.tol_sub)
        } else {
            0.75 * width
        }
        .max(1e-9 * (1.0 + mid.abs()));
        let axis = linspace(mid - half, mid + half, resolution);
        lattice_step.push(2.0 * half / (resolution - 1) as f64);
        axes.push(axis);
    }

    let mut points = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let p: Vec<f64> = (0..dim).map(|k| axes[k][idx[k]]).collect();
        let ok = directions.iter().enumerate().all(|(i, v)| {
            let slack = cfg.tol_sub
                + v.iter()
                    .zip(&lattice_step)
                    .map(|(c, s)| 0.5 * s * c.abs())
                    .sum::<f64>();
            let pv: f64 = p.iter().zip(v).map(|(a, b)| a * b).sum();
            match side {
                Side::Sub => pv <= fan.lower[i] + slack,
                Side::Super => pv >= fan.upper[i] - slack,
            }
        });
        if ok {
            points.push(p);
        }
        let mut k = dim;
        loop {
            if k == 0 {
                return Ok(DifferentialSet {
                    points,
                    lattice_step,
                    fan,
                });
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < resolution {
                break;
            }
            idx[k] = 0;
        }
    }
}

// Infinite axis bounds come from infinite quotients; keep the lattice finite.
fn clamp_axis(lo: f64, hi: f64) -> (f64, f64) {
    const CAP: f64 = 1e6;
    let c = |v: f64| if v.is_finite() { v } else { v.signum() * CAP };
    (c(lo), c(hi))
}

/// Clarke generalized gradient in one variable: the range of difference
/// quotients `(L(w+h) - L(w))/h`, `h -> 0+` and `h -> 0-`, at base points
/// `w = u* + k h`, `|k| <= 2`, over the tail steps.
pub fn clarke_gradient_1d(
    l: &dyn Fn(f64) -> f64,
    u_star: f64,
    steps: &StepSchedule,
) -> Result<(f64, f64)> {
    if !l(u_star).is_finite() {
        return Err(Error::EvaluatorInfinite);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, h) in steps.tail_steps() {
        for k in -2..=2 {
            let w = u_star + k as f64 * h;
            let lw = l(w);
            for s in [h, -h] {
                let lws = l(w + s);
                if !(lw.is_finite() && lws.is_finite()) {
                    return Err(Error::EvaluatorInfinite);
                }
                let q = (lws - lw) / s;
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_derivatives_agree() {
        let p = [0.3, -0.2];
        let phi = move |x: &[f64]| p[0] * x[0] + p[1] * x[1];
        let xi = [0.6, 0.8];
        let exact = p[0] * xi[0] + p[1] * xi[1];
        let s = StepSchedule::default();
        let d = dini_lower(&phi, &[0.0, 0.0], &xi, &s).unwrap();
        let (lo, hi) =
            contingent(&phi, &[0.0, 0.0], &xi, &s, FanConfig::default().fan_width).unwrap();
        for v in [d, lo, hi] {
            assert!((v - exact).abs() <= 1e-9, "{v} vs {exact}");
        }
    }

    #[test]
    fn abs_at_origin() {
        let phi = |x: &[f64]| x[0].abs();
        let s = StepSchedule::default();
        let d = dini_lower(&phi, &[0.0], &[1.0], &s).unwrap();
        let (lo, hi) = contingent(&phi, &[0.0], &[1.0], &s, 1e-4).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
        assert!((lo - 1.0).abs() < 1e-8 && (hi - 1.0).abs() < 1e-8);
    }

    #[test]
    fn infinite_base_point() {
        let phi = |_: &[f64]| f64::INFINITY;
        assert_eq!(
            dini_lower(&phi, &[0.0], &[1.0], &StepSchedule::default()).unwrap_err(),
            Error::EvaluatorInfinite
        );
    }

    #[test]
    fn oscillating_dini_oracle() {
        let phi = |x: &[f64]| {
            let t = x[0];
            if t == 0.0 {
                0.0
            } else {
                t * t * (1.0 / t).sin()
            }
        };
        let s = StepSchedule::default();
        let d = dini_lower(&phi, &[0.0], &[1.0], &s).unwrap();
        // quotient h sin(1/h): the tail minimum computed independently
        let oracle = (16..=20)
            .map(|j| {
                let h = 0.1 * 0.5f64.powi(j);
                h * (1.0 / h).sin()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((d - oracle).abs() < 1e-15);
        assert!(d.abs() <= 1e-5);
    }

    #[test]
    fn subdifferential_of_abs() {
        let phi = |x: &[f64]| x[0].abs();
        let set = subdifferential(&phi, &[0.0], &FanConfig::default()).unwrap();
        let step = set.lattice_step[0];
        assert!(set.points.iter().all(|p| p[0].abs() <= 1.0 + step));
        let inside = set.points.iter().filter(|p| p[0].abs() <= 1.0).count();
        let lattice_inside = (0..201)
            .map(|i| -1.5 + 3.0 * i as f64 / 200.0)
            .filter(|p: &f64| p.abs() <= 1.0)
            .count();
        assert_eq!(inside, lattice_inside);
        assert_eq!(set.min_norm().unwrap()[0], 0.0);
    }

    #[test]
    fn subdifferential_of_smooth_square() {
        let phi = |x: &[f64]| x[0] * x[0];
        let set = subdifferential(&phi, &[1.0], &FanConfig::default()).unwrap();
        assert!(!set.is_empty());
        assert!(set.diameter() <= 2.0 * set.lattice_step[0]);
        for p in &set.points {
            assert!((p[0] - 2.0).abs() <= set.lattice_step[0] + 1e-6);
        }
    }

    #[test]
    fn superdifferential_of_abs_is_empty() {
        let phi = |x: &[f64]| x[0].abs();
        assert!(superdifferential(&phi, &[0.0], &FanConfig::default())
            .unwrap()
            .is_empty());
        let neg = |x: &[f64]| -x[0].abs();
        assert!(!superdifferential(&neg, &[0.0], &FanConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn subdifferential_in_the_plane() {
        let phi = |x: &[f64]| x[0].abs() + x[1] * x[1];
        let set = subdifferential(&phi, &[0.0, 0.0], &FanConfig::default()).unwrap();
        assert!(!set.is_empty());
        for p in &set.points {
            assert!(p[0].abs() <= 1.0 + set.lattice_step[0]);
            assert!(p[1].abs() <= 2.0 * set.lattice_step[1] + 1e-6);
        }
    }

    #[test]
    fn clarke_gradient_of_double_well_at_bottom() {
        let l = |u: f64| (u * u - 1.0).powi(2);
        let (lo, hi) = clarke_gradient_1d(&l, 1.0, &StepSchedule::default()).unwrap();
        // limiting slope oracle: |4w(w^2-1)| <= 8|w-1| + O(h) near w = 1
        let h = 0.1 * 0.5f64.powi(16);
        assert!(lo <= 0.0 && hi >= 0.0);
        assert!(lo >= -30.0 * h && hi <= 30.0 * h);
    }

    #[test]
    fn clarke_gradient_of_abs_at_kink() {
        let (lo, hi) =
            clarke_gradient_1d(&|u: f64| u.abs(), 0.0, &StepSchedule::default()).unwrap();
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }
}
