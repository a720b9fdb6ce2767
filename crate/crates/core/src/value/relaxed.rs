//! Relaxed integrands `L+` / `L-` and the Hamiltonians built from them.
//!
//! `I(h)` is the optimal average cost of a short path of duration `h`
//! between `x - h u` and `x` (for `L+`) or `x` and `x + h u` (for `L-`). The
//! inner problem is solved on a lattice sheared along the straight segment:
//! node `(k, j)` sits at `x_start + k dt u + j sigma dt`, so `j = 0` is the
//! straight path and slopes are `u + (j' - j) sigma`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::convex::{legendre_fenchel, SampledFunction1D};
use crate::error::{Error, Result};
use crate::lagrangian::LagrangianSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxedConfig {
    pub h0: f64,
    /// Steps `h_j = h0 2^-j`, `j = 0..=count`.
    pub count: usize,
    pub tail: usize,
    /// Time steps of the inner lattice.
    pub inner_steps: usize,
    /// Lateral spacing of the inner lattice in units of `dt`.
    pub sigma: f64,
    /// Lateral half-width in lattice cells.
    pub band: usize,
    /// Second pass with spacing `sigma / refine_factor` within
    /// `refine_band` fine cells of the coarse optimum.
    pub refine: bool,
    pub refine_factor: usize,
    pub refine_band: usize,
    /// Velocity grid on which estimates are tabulated.
    pub u_step: f64,
    pub u_max: f64,
}

impl Default for RelaxedConfig {
    fn default() -> Self {
        RelaxedConfig {
            h0: 0.05,
            count: 6,
            tail: 4,
            inner_steps: 32,
            sigma: 0.5,
            band: 16,
            refine: true,
            refine_factor: 8,
            refine_band: 24,
            u_step: 0.05,
            u_max: 4.0,
        }
    }
}

impl RelaxedConfig {
    pub fn steps(&self) -> Vec<f64> {
        (0..=self.count)
            .map(|j| self.h0 * 0.5f64.powi(j as i32))
            .collect()
    }

    pub fn u_grid(&self) -> Vec<f64> {
        let n = (self.u_max / self.u_step).round() as i64;
        (-n..=n).map(|i| i as f64 * self.u_step).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.h0 > 0.0) || self.tail == 0 || self.tail > self.count + 1 {
            return Err(Error::InvalidConfig("relaxed step schedule".into()));
        }
        if self.inner_steps < 2
            || !(self.sigma > 0.0)
            || self.band == 0
            || !(self.u_step > 0.0)
            || self.refine_factor == 0
        {
            return Err(Error::InvalidConfig("relaxed inner lattice".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelaxedKind {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedIntegrandEstimate {
    pub kind: RelaxedKind,
    pub x: f64,
    pub u: f64,
    pub steps: Vec<f64>,
    /// `I(h)` for every step.
    pub inner: Vec<f64>,
    pub tail: usize,
    pub tail_min: f64,
    pub tail_max: f64,
}

impl RelaxedIntegrandEstimate {
    /// `L+` is the tail maximum, `L-` the tail minimum.
    pub fn value(&self) -> f64 {
        match self.kind {
            RelaxedKind::Plus => self.tail_max,
            RelaxedKind::Minus => self.tail_min,
        }
    }
}

fn estimate(
    l: &LagrangianSpec,
    x: f64,
    u: f64,
    cfg: &RelaxedConfig,
    kind: RelaxedKind,
) -> RelaxedIntegrandEstimate {
    let steps = cfg.steps();
    let inner: Vec<f64> = steps
        .iter()
        .map(|&h| {
            let start = match kind {
                RelaxedKind::Plus => x - h * u,
                RelaxedKind::Minus => x,
            };
            short_path_cost(l, start, u, h, cfg) / h
        })
        .collect();
    let tail = &inner[inner.len() - cfg.tail..];
    RelaxedIntegrandEstimate {
        kind,
        x,
        u,
        tail: cfg.tail,
        tail_min: tail.iter().copied().fold(f64::INFINITY, f64::min),
        tail_max: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        steps,
        inner,
    }
}

pub fn estimate_l_plus(
    l: &LagrangianSpec,
    x: f64,
    u: f64,
    cfg: &RelaxedConfig,
) -> RelaxedIntegrandEstimate {
    estimate(l, x, u, cfg, RelaxedKind::Plus)
}

pub fn estimate_l_minus(
    l: &LagrangianSpec,
    x: f64,
    u: f64,
    cfg: &RelaxedConfig,
) -> RelaxedIntegrandEstimate {
    estimate(l, x, u, cfg, RelaxedKind::Minus)
}

/// Minimal cost over sheared-lattice paths from `start` to `start + h u`.
fn short_path_cost(l: &LagrangianSpec, start: f64, u: f64, h: f64, cfg: &RelaxedConfig) -> f64 {
    let n = cfg.inner_steps;
    let dt = h / n as f64;
    let band = cfg.band as i64;
    let coarse = band_dp(l, start, u, dt, n, cfg.sigma, &vec![(-band, band); n + 1]);
    if !cfg.refine {
        return coarse.0;
    }
    let Some(path) = coarse.1 else {
        return coarse.0;
    };
    let (f, b) = (cfg.refine_factor as i64, cfg.refine_band as i64);
    let fine_sigma = cfg.sigma / f as f64;
    let ranges: Vec<(i64, i64)> = path.iter().map(|&j| (f * j - b, f * j + b)).collect();
    let fine = band_dp(l, start, u, dt, n, fine_sigma, &ranges);
    fine.0.min(coarse.0)
}

/// DP over `k = 0..=n` with lateral index range `ranges[k]`; paths start and
/// end at `j = 0`. Returns the cost and the optimal lateral indices.
fn band_dp(
    l: &LagrangianSpec,
    start: f64,
    u: f64,
    dt: f64,
    n: usize,
    sigma: f64,
    ranges: &[(i64, i64)],
) -> (f64, Option<Vec<i64>>) {
    let pos = |k: usize, j: i64| start + k as f64 * dt * u + j as f64 * sigma * dt;
    let width = |k: usize| (ranges[k].1 - ranges[k].0 + 1) as usize;
    let mut cost: Vec<f64> = vec![f64::INFINITY; width(0)];
    let origin = (0 - ranges[0].0) as usize;
    if origin >= cost.len() {
        return (f64::INFINITY, None);
    }
    cost[origin] = 0.0;
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(n);
    for k in 0..n {
        let last = k + 1 == n;
        let mut next = vec![f64::INFINITY; width(k + 1)];
        let mut arg = vec![usize::MAX; width(k + 1)];
        for (d, slot) in next.iter_mut().enumerate() {
            let jd = ranges[k + 1].0 + d as i64;
            if last && jd != 0 {
                continue;
            }
            for (s, &c) in cost.iter().enumerate() {
                if !c.is_finite() {
                    continue;
                }
                let js = ranges[k].0 + s as i64;
                // Slopes come from lattice indices, not position differences,
                // so paths with equal shape cost the same wherever they start.
                let slope = u + (jd - js) as f64 * sigma;
                let cand = c + dt * l.eval(&[pos(k, js)], &[slope]);
                if cand < *slot {
                    *slot = cand;
                    arg[d] = s;
                }
            }
        }
        back.push(arg);
        cost = next;
    }
    let end = (0 - ranges[n].0) as usize;
    if end >= cost.len() || !cost[end].is_finite() {
        return (f64::INFINITY, None);
    }
    let mut path = vec![0i64; n + 1];
    let mut idx = end;
    for k in (0..n).rev() {
        path[k + 1] = ranges[k + 1].0 + idx as i64;
        idx = back[k][idx];
    }
    path[0] = ranges[0].0 + idx as i64;
    (cost[end], Some(path))
}

/// Tabulated `(L+, L-)` on the velocity grid. State-independent
/// Lagrangians share one table; otherwise estimates are computed on demand
/// and cached per `(x, u)`.
pub struct RelaxedEstimator {
    lagrangian: LagrangianSpec,
    config: RelaxedConfig,
    u_grid: Vec<f64>,
    shared: OnceLock<Vec<(f64, f64)>>,
    cache: Mutex<HashMap<(u64, usize), (f64, f64)>>,
}

impl std::fmt::Debug for RelaxedEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RelaxedEstimator")
            .field("lagrangian", &self.lagrangian.name())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl RelaxedEstimator {
    pub fn new(lagrangian: LagrangianSpec, config: RelaxedConfig) -> Result<Self> {
        config.validate()?;
        if lagrangian.dim() != 1 {
            return Err(Error::UnsupportedDimension(lagrangian.dim()));
        }
        let u_grid = config.u_grid();
        Ok(RelaxedEstimator {
            lagrangian,
            config,
            u_grid,
            shared: OnceLock::new(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &RelaxedConfig {
        &self.config
    }

    pub fn lagrangian(&self) -> &LagrangianSpec {
        &self.lagrangian
    }

    pub fn u_grid(&self) -> &[f64] {
        &self.u_grid
    }

    /// Nearest grid index to `u`, clamped to the grid.
    pub fn u_index(&self, u: f64) -> usize {
        let i = ((u + self.config.u_max) / self.config.u_step).round();
        (i.max(0.0) as usize).min(self.u_grid.len() - 1)
    }

    fn compute(&self, x: f64, i: usize) -> (f64, f64) {
        let u = self.u_grid[i];
        (
            estimate_l_plus(&self.lagrangian, x, u, &self.config).value(),
            estimate_l_minus(&self.lagrangian, x, u, &self.config).value(),
        )
    }

    /// `(L+(x, u_i), L-(x, u_i))` at grid velocity `u_i`.
    pub fn pair(&self, x: f64, i: usize) -> (f64, f64) {
        if self.lagrangian.flags.state_independent {
            let table = self.shared.get_or_init(|| {
                (0..self.u_grid.len())
                    .into_par_iter()
                    .map(|i| self.compute(0.0, i))
                    .collect()
            });
            return table[i];
        }
        let key = (x.to_bits(), i);
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return *v;
        }
        let v = self.compute(x, i);
        self.cache.lock().expect("cache lock").insert(key, v);
        v
    }

    pub fn plus(&self, x: f64, i: usize) -> f64 {
        self.pair(x, i).0
    }

    pub fn minus(&self, x: f64, i: usize) -> f64 {
        self.pair(x, i).1
    }

    /// Index of the grid velocity maximizing `q u - L(x, u)`.
    pub fn argmax(&self, x: f64, q: f64) -> usize {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (i, &u) in self.u_grid.iter().enumerate() {
            let v = q * u - self.lagrangian.eval(&[x], &[u]);
            if v > best {
                best = v;
                arg = i;
            }
        }
        arg
    }

    /// `(H+(x, q), H-(x, q))`: maxima of `q u - L+-(x, u)` over the nine
    /// grid velocities centred at the maximizer for `L`.
    pub fn hamiltonians_at(&self, x: f64, q: f64) -> (f64, f64) {
        let center = self.argmax(x, q) as i64;
        let mut hp = f64::NEG_INFINITY;
        let mut hm = f64::NEG_INFINITY;
        for d in -4..=4 {
            let i = center + d;
            if i < 0 || i as usize >= self.u_grid.len() {
                continue;
            }
            let i = i as usize;
            let (lp, lm) = self.pair(x, i);
            let u = self.u_grid[i];
            hp = hp.max(q * u - lp);
            hm = hm.max(q * u - lm);
        }
        (hp, hm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianSamples {
    pub p: Vec<f64>,
    pub h: Vec<f64>,
    pub h_plus: Vec<f64>,
    pub h_minus: Vec<f64>,
    /// The maximizing velocity sits on the edge of the velocity grid.
    pub truncated: Vec<bool>,
}

/// `H`, `H+`, `H-` at state `x` on the dual grid `p`.
pub fn hamiltonians(est: &RelaxedEstimator, x: f64, p: &[f64]) -> Result<HamiltonianSamples> {
    let l = est.lagrangian();
    let section = SampledFunction1D::from_fn(est.u_grid().to_vec(), |u| l.eval(&[x], &[u]))?;
    let conj = legendre_fenchel(&section, p)?;
    let (h_plus, h_minus) = p.iter().map(|&q| est.hamiltonians_at(x, q)).unzip();
    Ok(HamiltonianSamples {
        p: p.to_vec(),
        h: conj.values,
        h_plus,
        h_minus,
        truncated: conj.truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::lagrangian;

    #[test]
    fn straight_path_is_optimal_for_quadratic() {
        let l = lagrangian("quadratic", 1).unwrap();
        let cfg = RelaxedConfig::default();
        for u in [-1.5, 0.0, 0.7] {
            let p = estimate_l_plus(&l, 0.3, u, &cfg);
            let m = estimate_l_minus(&l, 0.3, u, &cfg);
            assert!((p.value() - u * u).abs() < 1e-2 && (m.value() - u * u).abs() < 1e-2);
            assert_eq!(p.inner.len(), 7);
        }
    }

    #[test]
    fn rest_path_costs_nothing() {
        let l = lagrangian("quadratic", 1).unwrap();
        let e = estimate_l_minus(&l, 1.0, 0.0, &RelaxedConfig::default());
        assert!(e.inner.iter().all(|&v| v == 0.0));
        assert_eq!((e.tail_min, e.tail_max), (0.0, 0.0));
    }

    #[test]
    fn double_well_relaxes_at_rest() {
        let l = lagrangian("double_well", 1).unwrap();
        assert_eq!(l.eval(&[0.0], &[0.0]), 1.0);
        let e = estimate_l_minus(&l, 0.0, 0.0, &RelaxedConfig::default());
        assert!(e.value() <= 1e-2);
    }

    #[test]
    fn grid_indexing() {
        let est = RelaxedEstimator::new(
            lagrangian("quadratic", 1).unwrap(),
            RelaxedConfig::default(),
        )
        .unwrap();
        assert_eq!(est.u_grid().len(), 161);
        assert_eq!(est.u_grid()[est.u_index(0.74)], 0.75);
        assert_eq!(est.u_index(100.0), 160);
    }
}
