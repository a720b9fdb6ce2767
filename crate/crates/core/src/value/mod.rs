//! Bolza value function on a `(t, x)` lattice and the checks built on it.
//!
//! `V(t, x)` is the optimal cost of a path starting at `x` and running for
//! time `t`, plus the terminal cost at its end. Layer `k` holds
//! `t = k * tau`.

mod checks;
mod relaxed;

pub use checks::{
    check_initial_attainment, comparison_check, dini_monotonicity, hj_residuals, inclusion_check,
    lipschitz_estimate_v, ComparisonVerdict, DiniReport, HjConfig, HjPoint, HjResidualReport,
    InclusionConfig, InclusionNode, InclusionReport, InitialAttainmentReport, LipschitzBlock,
    LipschitzTable, Region,
};
pub use relaxed::{
    estimate_l_minus, estimate_l_plus, hamiltonians, HamiltonianSamples, RelaxedConfig,
    RelaxedEstimator, RelaxedIntegrandEstimate, RelaxedKind,
};

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::convex::linspace;
use crate::error::{Error, Result};
use crate::lagrangian::{LagrangianSpec, TerminalCost, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueConfig {
    pub horizon: f64,
    /// Number of time layers after the initial one.
    pub layers: usize,
    pub x_center: f64,
    pub x_half_width: f64,
    pub resolution: usize,
    /// A transition may span `m` layers for each `m` listed here, moving
    /// with constant velocity and costing `m * tau * L(x_start, u)`.
    /// `[1]` is the plain one-layer recursion.
    pub strides: Vec<usize>,
}

impl ValueConfig {
    pub fn new(horizon: f64, layers: usize, x_half_width: f64, resolution: usize) -> Result<Self> {
        let cfg = ValueConfig {
            horizon,
            layers,
            x_center: 0.0,
            x_half_width,
            resolution,
            strides: (1..=8).collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_strides(mut self, strides: Vec<usize>) -> Result<Self> {
        self.strides = strides;
        self.validate()?;
        Ok(self)
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.layers as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) || self.layers == 0 {
            return Err(Error::InvalidConfig(
                "horizon and layer count must be positive".into(),
            ));
        }
        if self.resolution < 3 || !(self.x_half_width > 0.0) {
            return Err(Error::InvalidConfig(
                "state lattice needs >= 3 points and positive width".into(),
            ));
        }
        if self.strides.is_empty()
            || self.strides.contains(&0)
            || self.strides.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidConfig(
                "strides must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ValueGrid {
    pub config: ValueConfig,
    pub xs: Vec<f64>,
    /// `values[k][j] = V(k tau, xs[j])`.
    pub values: Vec<Vec<f64>>,
    /// Argmin velocity; NaN on layer 0 and where `V = +inf`.
    pub slopes: Vec<Vec<f64>>,
    /// Argmin stride (0 on layer 0 and where `V = +inf`).
    pub strides: Vec<Vec<u8>>,
    /// Argmin successor state index.
    successors: Vec<Vec<u32>>,
    pub lagrangian: LagrangianSpec,
    pub terminal: TerminalCost,
}

/// Dynamic programming in the remaining horizon. Each destination takes a
/// sequential minimum over strides (ascending) then successor states
/// (ascending) with a strict comparison, so the lowest index wins ties and
/// the result does not depend on the thread schedule.
pub fn compute_value_grid(
    l: &LagrangianSpec,
    phi: &TerminalCost,
    cfg: &ValueConfig,
) -> Result<ValueGrid> {
    cfg.validate()?;
    if l.dim() != 1 {
        return Err(Error::UnsupportedDimension(l.dim()));
    }
    let xs = linspace(
        cfg.x_center - cfg.x_half_width,
        cfg.x_center + cfg.x_half_width,
        cfg.resolution,
    );
    let m = xs.len();
    let tau = cfg.tau();
    let first: Vec<f64> = xs.iter().map(|&x| phi.eval(&[x])).collect();
    if first.iter().all(|v| !v.is_finite()) {
        return Err(Error::AllInfiniteLayer(0));
    }
    let mut values = vec![first];
    let mut slopes = vec![vec![f64::NAN; m]];
    let mut strides = vec![vec![0u8; m]];
    let mut successors = vec![vec![u32::MAX; m]];
    for k in 1..=cfg.layers {
        let row: Vec<(f64, f64, u8, u32)> = (0..m)
            .into_par_iter()
            .map(|j| {
                let x = xs[j];
                let mut best = (f64::INFINITY, f64::NAN, 0u8, u32::MAX);
                for &stride in cfg.strides.iter().filter(|&&s| s <= k) {
                    let dt = stride as f64 * tau;
                    let prev = &values[k - stride];
                    for (i, &v) in prev.iter().enumerate() {
                        if !v.is_finite() {
                            continue;
                        }
                        let u = (xs[i] - x) / dt;
                        let cand = dt * l.eval(&[x], &[u]) + v;
                        if cand < best.0 {
                            best = (cand, u, stride as u8, i as u32);
                        }
                    }
                }
                best
            })
            .collect();
        if row.iter().all(|r| !r.0.is_finite()) {
            return Err(Error::AllInfiniteLayer(k));
        }
        values.push(row.iter().map(|r| r.0).collect());
        slopes.push(row.iter().map(|r| r.1).collect());
        strides.push(row.iter().map(|r| r.2).collect());
        successors.push(row.iter().map(|r| r.3).collect());
    }
    Ok(ValueGrid {
        config: cfg.clone(),
        xs,
        values,
        slopes,
        strides,
        successors,
        lagrangian: l.clone(),
        terminal: phi.clone(),
    })
}

impl ValueGrid {
    pub fn tau(&self) -> f64 {
        self.config.tau()
    }

    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn layers(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau()
    }

    /// Index of a lattice state, if `x` is one.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let j = ((x - self.xs[0]) / self.dx()).round();
        if j < 0.0 || j as usize >= self.xs.len() {
            return None;
        }
        let j = j as usize;
        ((self.xs[j] - x).abs() <= 1e-9 * self.dx()).then_some(j)
    }

    /// Bilinear interpolant in `(t, x)`; `+inf` outside the grid or when a
    /// corner with positive weight is infinite.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        bilinear(&self.values, self.tau(), self.xs[0], self.dx(), t, x)
    }

    /// Optimal path from lattice state `x` over the full horizon, on the
    /// time grid of step `tau`. Multi-layer transitions are filled in with
    /// their constant velocity.
    pub fn extract_minimizer(&self, x: f64) -> Result<Trajectory> {
        let mut j = self.index_of(x).ok_or(Error::TrajectoryOffGrid(x))?;
        let mut k = self.layers();
        if !self.values[k][j].is_finite() {
            return Err(Error::CostOverflow);
        }
        let tau = self.tau();
        let mut states = vec![vec![self.xs[j]]];
        while k > 0 {
            let stride = self.strides[k][j] as usize;
            let next = self.successors[k][j] as usize;
            let (x0, x1) = (self.xs[j], self.xs[next]);
            for s in 1..stride {
                states.push(vec![x0 + (x1 - x0) * s as f64 / stride as f64]);
            }
            states.push(vec![x1]);
            j = next;
            k -= stride;
        }
        Trajectory::new(0.0, tau, states)
    }

    /// Columns `t, x, V, u`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,V,u\n");
        for (k, row) in self.values.iter().enumerate() {
            let t = self.time(k);
            for (j, v) in row.iter().enumerate() {
                let u = self.slopes[k][j];
                writeln!(
                    out,
                    "{t:.16e},{:.16e},{},{}",
                    self.xs[j],
                    fmt_ext(*v),
                    fmt_ext(u)
                )
                .unwrap();
            }
        }
        out
    }
}

fn fmt_ext(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.16e}")
    }
}

pub(crate) fn bilinear(values: &[Vec<f64>], tau: f64, x0: f64, dx: f64, t: f64, x: f64) -> f64 {
    let kt = t / tau;
    let jx = (x - x0) / dx;
    let kmax = (values.len() - 1) as f64;
    let jmax = (values[0].len() - 1) as f64;
    let eps = 1e-9;
    if kt < -eps || kt > kmax + eps || jx < -eps || jx > jmax + eps {
        return f64::INFINITY;
    }
    let kt = kt.clamp(0.0, kmax);
    let jx = jx.clamp(0.0, jmax);
    let k0 = (kt.floor() as usize).min(values.len().saturating_sub(2));
    let j0 = (jx.floor() as usize).min(values[0].len() - 2);
    let (a, b) = (kt - k0 as f64, jx - j0 as f64);
    let k1 = (k0 + 1).min(values.len() - 1);
    let corners = [
        ((1.0 - a) * (1.0 - b), values[k0][j0]),
        ((1.0 - a) * b, values[k0][j0 + 1]),
        (a * (1.0 - b), values[k1][j0]),
        (a * b, values[k1][j0 + 1]),
    ];
    let mut acc = 0.0;
    for (w, v) in corners {
        if w > 0.0 {
            if !v.is_finite() {
                return f64::INFINITY;
            }
            acc += w * v;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{lagrangian, terminal_cost};

    #[test]
    fn zero_data_gives_zero_value() {
        let l = lagrangian("quadratic", 1).unwrap();
        let phi = terminal_cost("zero", 1).unwrap();
        let cfg = ValueConfig::new(1.0, 10, 1.0, 21).unwrap();
        let v = compute_value_grid(&l, &phi, &cfg).unwrap();
        assert!(v.values.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn bilinear_reproduces_nodes_and_blends() {
        let values = vec![vec![0.0, 1.0], vec![2.0, 3.0]];
        assert_eq!(bilinear(&values, 1.0, 0.0, 1.0, 0.0, 1.0), 1.0);
        assert_eq!(bilinear(&values, 1.0, 0.0, 1.0, 0.5, 0.5), 1.5);
        assert_eq!(bilinear(&values, 1.0, 0.0, 1.0, 1.5, 0.5), f64::INFINITY);
        let holes = vec![vec![0.0, f64::INFINITY], vec![2.0, 3.0]];
        assert_eq!(bilinear(&holes, 1.0, 0.0, 1.0, 1.0, 0.0), 2.0);
        assert_eq!(bilinear(&holes, 1.0, 0.0, 1.0, 0.5, 0.5), f64::INFINITY);
    }

    #[test]
    fn config_validation() {
        assert!(ValueConfig::new(1.0, 0, 1.0, 21).is_err());
        assert!(ValueConfig::new(1.0, 10, 1.0, 21)
            .unwrap()
            .with_strides(vec![2, 1])
            .is_err());
    }

    #[test]
    fn minimizer_extraction_reaches_terminal_layer() {
        let l = lagrangian("quadratic", 1).unwrap();
        let phi = terminal_cost("quadratic_phi", 1).unwrap();
        let cfg = ValueConfig::new(1.0, 20, 2.0, 81).unwrap();
        let v = compute_value_grid(&l, &phi, &cfg).unwrap();
        let traj = v.extract_minimizer(1.0).unwrap();
        assert_eq!(traj.intervals(), 20);
        let action = crate::lagrangian::evaluate_action(&traj, &l)
            .unwrap()
            .value();
        let end = traj.state(20)[0];
        assert!((action + end * end - v.values[20][v.index_of(1.0).unwrap()]).abs() < 1e-9);
        assert_eq!(
            v.extract_minimizer(0.01).unwrap_err(),
            Error::TrajectoryOffGrid(0.01)
        );
    }
}
