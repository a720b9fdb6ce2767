//! Problems, Lagrangians, growth gauges and trajectories.
//!
//! A Lagrangian is any pure, pointwise-evaluable map `(x, u) -> [0, +inf]`.
//! No continuity is assumed in `x` and no convexity in `u`; discontinuous
//! integrands are evaluated exactly at the requested points.

pub mod catalog;
pub mod problem;
mod trajectory;

pub use catalog::{builtin_catalog, lagrangian, terminal_cost, CatalogEntry};
pub use problem::{load_problem, parse_problem, DataBounds, ProblemInstance, ProblemKind};
pub use trajectory::{evaluate_action, Trajectory};

use std::fmt;
use std::sync::Arc;

use crate::convex::{lower_convex_envelope, SampledFunction1D};

pub type LagrangianFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
pub type GaugeFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub type BoundFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Unit directions used to reduce a gauge to its worst radial profile.
pub fn direction_fan(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..16)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / 8.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut dirs = Vec::with_capacity(2 * dim);
            for i in 0..dim {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; dim];
                    e[i] = s;
                    dirs.push(e);
                }
            }
            dirs
        }
    }
}

/// Tabulated superlinearity certificate `rho(s) = inf { Theta(u)/|u| : |u| >= s }`
/// on a geometric grid of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub levels: Vec<f64>,
    pub rho: Vec<f64>,
}

impl Certificate {
    pub const MIN_LEVEL: f64 = 1e-3;
    pub const MAX_LEVEL: f64 = 1e4;
    pub const PER_DECADE: usize = 40;

    fn geometric_levels() -> Vec<f64> {
        let decades = (Self::MAX_LEVEL / Self::MIN_LEVEL).log10().round() as usize;
        let count = decades * Self::PER_DECADE + 1;
        (0..count)
            .map(|k| Self::MIN_LEVEL * 10f64.powf(k as f64 / Self::PER_DECADE as f64))
            .collect()
    }

    fn from_profile(profile: impl Fn(f64) -> f64) -> Self {
        let levels = Self::geometric_levels();
        let ratios: Vec<f64> = levels.iter().map(|&s| profile(s) / s).collect();
        let mut rho = vec![0.0; levels.len()];
        let mut running = f64::INFINITY;
        for k in (0..levels.len()).rev() {
            running = running.min(ratios[k]);
            rho[k] = running;
        }
        Certificate { levels, rho }
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.rho.windows(2).all(|w| w[0] <= w[1])
    }

    /// `rho(s_max) > rho(s_min)`: the tabulated proxy for superlinear growth.
    pub fn is_nontrivial(&self) -> bool {
        self.rho.last() > self.rho.first()
    }
}

/// Coercivity minorant `Theta` of a Lagrangian.
#[derive(Clone)]
pub struct GrowthGauge {
    dim: usize,
    theta: Arc<GaugeFn>,
    certificate: Certificate,
}

impl GrowthGauge {
    pub fn new(dim: usize, theta: Arc<GaugeFn>) -> Self {
        let fan = direction_fan(dim);
        let th = theta.clone();
        let certificate = Certificate::from_profile(|s| worst_radial(&*th, &fan, s));
        GrowthGauge {
            dim,
            theta,
            certificate,
        }
    }

    /// Gauge of the form `Theta(u) = profile(|u|)`.
    pub fn radial(dim: usize, profile: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(dim, Arc::new(move |u: &[f64]| profile(norm(u))))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        (self.theta)(u)
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    /// `s -> min_e Theta(s e)` over the direction fan.
    pub fn radial_profile(&self, s: f64) -> f64 {
        worst_radial(&*self.theta, &direction_fan(self.dim), s)
    }

    /// Lower convex envelope of the worst radial profile, sampled at the
    /// certificate levels (even extension through the origin).
    pub fn convexified_profile(&self) -> Vec<(f64, f64)> {
        let levels = &self.certificate.levels;
        let fan = direction_fan(self.dim);
        let mut abscissae: Vec<f64> = levels.iter().rev().map(|s| -s).collect();
        abscissae.push(0.0);
        abscissae.extend(levels.iter().copied());
        let ordinates: Vec<f64> = abscissae
            .iter()
            .map(|&s| worst_radial(&*self.theta, &fan, s.abs()))
            .collect();
        let sampled = SampledFunction1D::new(abscissae, ordinates)
            .expect("certificate levels are strictly increasing");
        let env = lower_convex_envelope(&sampled).expect("gauge profile has finite samples");
        let start = levels.len() + 1;
        levels
            .iter()
            .zip(&env.ordinates()[start..])
            .map(|(&s, &w)| (s, w))
            .collect()
    }

    /// Same gauge multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let th = self.theta.clone();
        Self::new(self.dim, Arc::new(move |u: &[f64]| factor * th(u)))
    }
}

fn worst_radial(theta: &GaugeFn, fan: &[Vec<f64>], s: f64) -> f64 {
    fan.iter()
        .map(|e| {
            let u: Vec<f64> = e.iter().map(|c| c * s).collect();
            theta(&u)
        })
        .fold(f64::INFINITY, f64::min)
}

impl fmt::Debug for GrowthGauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthGauge")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// Structural metadata of a Lagrangian, used to gate the DuBois-Reymond variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct LagrangianFlags {
    pub convex_in_u: bool,
    pub differentiable_in_u: bool,
    pub semiconvex_in_u: bool,
    pub lipschitz_in_u: bool,
    /// `L(x, u)` depends on `u` only through `|u|`.
    pub radial_in_u: bool,
    /// `L(x, u)` does not depend on `x`.
    pub state_independent: bool,
}

/// A Lagrangian with its gauge `Theta` and local bound `Psi`.
#[derive(Clone)]
pub struct LagrangianSpec {
    name: String,
    dim: usize,
    eval: Arc<LagrangianFn>,
    gauge: GrowthGauge,
    local_bound: Arc<BoundFn>,
    pub flags: LagrangianFlags,
}

impl LagrangianSpec {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: Arc<LagrangianFn>,
        gauge: GrowthGauge,
        local_bound: Arc<BoundFn>,
        flags: LagrangianFlags,
    ) -> Self {
        LagrangianSpec {
            name: name.into(),
            dim,
            eval,
            gauge,
            local_bound,
            flags,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, x: &[f64], u: &[f64]) -> f64 {
        (self.eval)(x, u)
    }

    pub fn evaluator(&self) -> Arc<LagrangianFn> {
        self.eval.clone()
    }

    pub fn gauge(&self) -> &GrowthGauge {
        &self.gauge
    }

    /// `Psi(R) >= sup { L(x,u) : |x| <= R, |u| <= R }`.
    pub fn local_bound(&self, r: f64) -> f64 {
        (self.local_bound)(r)
    }

    pub fn local_bound_fn(&self) -> Arc<BoundFn> {
        self.local_bound.clone()
    }

    pub fn with_gauge(mut self, gauge: GrowthGauge) -> Self {
        self.gauge = gauge;
        self
    }

    pub fn with_local_bound(mut self, psi: Arc<BoundFn>) -> Self {
        self.local_bound = psi;
        self
    }
}

impl fmt::Debug for LagrangianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LagrangianSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("flags", &self.flags)
            .finish_non_exhaustive()
    }
}

/// Terminal cost `phi` of a Bolza problem, with one point where it is finite.
#[derive(Clone)]
pub struct TerminalCost {
    name: String,
    eval: Arc<GaugeFn>,
    witness: Vec<f64>,
}

impl TerminalCost {
    pub fn new(name: impl Into<String>, eval: Arc<GaugeFn>, witness: Vec<f64>) -> Self {
        TerminalCost {
            name: name.into(),
            eval,
            witness,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn witness(&self) -> &[f64] {
        &self.witness
    }

    /// `phi + shift`, keeping `+inf` where `phi` is infinite.
    pub fn shifted(&self, shift: f64) -> Self {
        let inner = self.eval.clone();
        TerminalCost {
            name: format!("{}+{}", self.name, shift),
            eval: Arc::new(move |x: &[f64]| inner(x) + shift),
            witness: self.witness.clone(),
        }
    }
}

impl fmt::Debug for TerminalCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TerminalCost")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_certificate_is_identity() {
        let g = GrowthGauge::radial(1, |s| s * s);
        let c = g.certificate();
        assert!(c.is_nondecreasing());
        assert!(c.is_nontrivial());
        for (s, r) in c.levels.iter().zip(&c.rho) {
            assert!((s - r).abs() <= 1e-12 * s.max(1.0));
        }
    }

    #[test]
    fn bounded_gauge_has_trivial_certificate() {
        let g = GrowthGauge::radial(1, |s| s.min(1.0));
        assert!(!g.certificate().is_nontrivial());
    }

    #[test]
    fn convexified_profile_of_double_well_gauge() {
        let g = GrowthGauge::radial(1, |s| {
            let t = (s * s - 1.0).max(0.0);
            t * t
        });
        for (s, w) in g.convexified_profile() {
            assert!(w <= g.radial_profile(s) + 1e-12);
            assert!(w >= 0.0);
        }
    }
}
