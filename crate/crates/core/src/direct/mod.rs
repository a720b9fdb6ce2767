//! Global lattice minimization of the discretized Lagrange problem.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::convex::linspace;
use crate::error::{Error, Result};
use crate::lagrangian::{
    evaluate_action, norm, LagrangianSpec, ProblemInstance, ProblemKind, Trajectory,
};

/// One axis of the state lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisGrid {
    pub center: f64,
    pub half_width: f64,
    pub resolution: usize,
}

impl AxisGrid {
    pub fn nodes(&self) -> Vec<f64> {
        linspace(
            self.center - self.half_width,
            self.center + self.half_width,
            self.resolution,
        )
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.resolution - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Among equal-cost predecessors the lowest state index wins.
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Number of time intervals `N`.
    pub steps: usize,
    pub axes: Vec<AxisGrid>,
    /// Transitions with `|u| > s_max` are skipped when set.
    pub slope_cap: Option<f64>,
    pub tie_break: TieBreak,
}

impl SolverConfig {
    pub fn new(steps: usize, axes: Vec<AxisGrid>) -> Result<Self> {
        let cfg = SolverConfig {
            steps,
            axes,
            slope_cap: None,
            tie_break: TieBreak::LowestIndex,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Lattice centred between the endpoints with half-width
    /// `max(|xb - xa|, 1)/2 + 1/2` on every axis.
    pub fn for_problem(problem: &ProblemInstance, steps: usize, resolution: usize) -> Result<Self> {
        let (xa, xb) = match &problem.kind {
            ProblemKind::Lagrange { xa, xb, .. } => (xa, xb),
            ProblemKind::Bolza { .. } => {
                return Err(Error::InvalidConfig(
                    "lattice solver needs a lagrange problem".into(),
                ))
            }
        };
        let axes = xa
            .iter()
            .zip(xb)
            .map(|(&a, &b)| AxisGrid {
                center: 0.5 * (a + b),
                half_width: 0.5 * (b - a).abs().max(1.0) + 0.5,
                resolution,
            })
            .collect();
        Self::new(steps, axes)
    }

    pub fn with_slope_cap(mut self, s_max: f64) -> Result<Self> {
        self.slope_cap = Some(s_max);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidConfig(format!(
                "need N >= 2, got {}",
                self.steps
            )));
        }
        if self.axes.is_empty() {
            return Err(Error::InvalidConfig("state lattice has no axes".into()));
        }
        for ax in &self.axes {
            if ax.resolution < 3 {
                return Err(Error::InvalidConfig(format!(
                    "resolution {} < 3",
                    ax.resolution
                )));
            }
            if !(ax.half_width > 0.0 && ax.half_width.is_finite() && ax.center.is_finite()) {
                return Err(Error::InvalidConfig(
                    "axis needs a finite positive half-width".into(),
                ));
            }
        }
        if let Some(s) = self.slope_cap {
            if !(s > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "slope cap {s} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Tensor lattice of states; node `k` has axis indices in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLattice {
    axes: Vec<Vec<f64>>,
    spacing: Vec<f64>,
}

impl StateLattice {
    pub fn new(axes: &[AxisGrid]) -> Self {
        StateLattice {
            axes: axes.iter().map(AxisGrid::nodes).collect(),
            spacing: axes.iter().map(AxisGrid::spacing).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn node(&self, mut k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for d in (0..self.dim()).rev() {
            let m = self.axes[d].len();
            x[d] = self.axes[d][k % m];
            k /= m;
        }
        x
    }

    /// Nearest node and the distance to it.
    pub fn snap(&self, x: &[f64], which: &'static str) -> Result<(usize, f64)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut k = 0;
        for (d, &c) in x.iter().enumerate() {
            let ax = &self.axes[d];
            let half = 0.5 * self.spacing[d];
            let (lo, hi) = (ax[0], ax[ax.len() - 1]);
            if c < lo - half || c > hi + half {
                let distance = (lo - c).max(c - hi);
                return Err(Error::EndpointOutsideGrid { which, distance });
            }
            let j = ax
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - c).abs().total_cmp(&(b.1 - c).abs()))
                .map(|(j, _)| j)
                .unwrap();
            k = k * ax.len() + j;
        }
        let node = self.node(k);
        let dist = norm(&node.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
        Ok((k, dist))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub trajectory: Trajectory,
    pub action: f64,
    /// The trajectory is a global minimizer over all lattice paths.
    pub grid_global: bool,
    /// Number of predecessors attaining the minimum at each path node
    /// (0 at the start node).
    pub ties: Vec<usize>,
    pub snap_distance_a: f64,
    pub snap_distance_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub action: f64,
    pub lipschitz: f64,
    pub ties: Vec<usize>,
    pub snap_distance: f64,
    pub grid_global: bool,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            action: self.action,
            lipschitz: empirical_lipschitz(&self.trajectory),
            ties: self.ties.clone(),
            snap_distance: self.snap_distance_a.max(self.snap_distance_b),
            grid_global: self.grid_global,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }
}

/// Columns `t, y_1..y_n, u_1..u_n`, one row per node. The last node repeats
/// the final slope.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.dim();
    let mut out = String::from("t");
    for k in 1..=n {
        write!(out, ",y_{k}").unwrap();
    }
    for k in 1..=n {
        write!(out, ",u_{k}").unwrap();
    }
    out.push('\n');
    for i in 0..=traj.intervals() {
        write!(out, "{:.16e}", traj.time(i)).unwrap();
        for c in traj.state(i) {
            write!(out, ",{c:.16e}").unwrap();
        }
        for c in traj.slope(i.min(traj.intervals() - 1)) {
            write!(out, ",{c:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

const MAX_TRANSITIONS: f64 = 4e9;

/// Forward dynamic programming over the state lattice. Labels accumulate
/// `h * L(y_i, u_i)` left to right, so the returned action equals
/// `evaluate_action` of the returned path exactly.
pub fn solve_lagrange_dp(problem: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult> {
    let (a, b, xa, xb) = match &problem.kind {
        ProblemKind::Lagrange { a, b, xa, xb } => (*a, *b, xa, xb),
        ProblemKind::Bolza { .. } => {
            return Err(Error::InvalidConfig(
                "lattice solver needs a lagrange problem".into(),
            ))
        }
    };
    cfg.validate()?;
    let l = &problem.lagrangian;
    if cfg.axes.len() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: cfg.axes.len(),
        });
    }
    let lattice = StateLattice::new(&cfg.axes);
    let m = lattice.len();
    if (m as f64).powi(2) * cfg.steps as f64 > MAX_TRANSITIONS {
        return Err(Error::InvalidConfig(format!(
            "lattice with {m} nodes and {} steps is too large",
            cfg.steps
        )));
    }
    let (start, snap_a) = lattice.snap(xa, "xa")?;
    let (goal, snap_b) = lattice.snap(xb, "xb")?;
    let nodes: Vec<Vec<f64>> = (0..m).map(|k| lattice.node(k)).collect();
    let h = (b - a) / cfg.steps as f64;

    let mut label = vec![f64::INFINITY; m];
    label[start] = 0.0;
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(cfg.steps);
    let mut tie_layers: Vec<Vec<u32>> = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let sources: Vec<usize> = (0..m).filter(|&s| label[s].is_finite()).collect();
        let relaxed: Vec<(f64, u32, u32)> = (0..m)
            .into_par_iter()
            .map(|d| {
                let mut best = f64::INFINITY;
                let mut arg = u32::MAX;
                let mut ties = 0u32;
                for &s in &sources {
                    let u: Vec<f64> = nodes[d]
                        .iter()
                        .zip(&nodes[s])
                        .map(|(y1, y0)| (y1 - y0) / h)
                        .collect();
                    if let Some(cap) = cfg.slope_cap {
                        if norm(&u) > cap {
                            continue;
                        }
                    }
                    let cand = label[s] + h * l.eval(&nodes[s], &u);
                    if cand < best {
                        best = cand;
                        arg = s as u32;
                        ties = 1;
                    } else if cand == best && cand.is_finite() {
                        ties += 1;
                    }
                }
                (best, arg, ties)
            })
            .collect();
        label = relaxed.iter().map(|r| r.0).collect();
        back.push(relaxed.iter().map(|r| r.1).collect());
        tie_layers.push(relaxed.iter().map(|r| r.2).collect());
    }
    if !label[goal].is_finite() {
        return Err(Error::CostOverflow);
    }
    let mut path = vec![goal; cfg.steps + 1];
    let mut ties = vec![0usize; cfg.steps + 1];
    for i in (0..cfg.steps).rev() {
        ties[i + 1] = tie_layers[i][path[i + 1]] as usize;
        path[i] = back[i][path[i + 1]] as usize;
    }
    let states = path.iter().map(|&k| nodes[k].clone()).collect();
    let trajectory = Trajectory::new(a, h, states)?;
    Ok(SolveResult {
        trajectory,
        action: label[goal],
        grid_global: true,
        ties,
        snap_distance_a: snap_a,
        snap_distance_b: snap_b,
    })
}

/// Coordinate descent on interior nodes: each node tries offsets of
/// `spacing * 2^-k`, `k = 1..=levels`, along every axis and keeps a move
/// only if the full action strictly decreases. Endpoints stay fixed.
pub fn refine_local(
    result: &SolveResult,
    lagrangian: &LagrangianSpec,
    spacing: &[f64],
    sweeps: usize,
) -> Result<SolveResult> {
    const LEVELS: i32 = 6;
    let mut traj = result.trajectory.clone();
    let mut best = evaluate_action(&traj, lagrangian)?.value();
    let n = traj.intervals();
    let mut moved = false;
    for _ in 0..sweeps {
        for i in 1..n {
            for (d, &dx) in spacing.iter().enumerate() {
                for k in 1..=LEVELS {
                    for sign in [1.0, -1.0] {
                        let old = traj.state(i)[d];
                        traj.states_mut()[i][d] = old + sign * dx * 0.5f64.powi(k);
                        let cand = evaluate_action(&traj, lagrangian)?.value();
                        if cand < best {
                            best = cand;
                            moved = true;
                        } else {
                            traj.states_mut()[i][d] = old;
                        }
                    }
                }
            }
        }
    }
    Ok(SolveResult {
        trajectory: traj,
        action: best,
        grid_global: result.grid_global && !moved,
        ties: result.ties.clone(),
        snap_distance_a: result.snap_distance_a,
        snap_distance_b: result.snap_distance_b,
    })
}

/// `sum h f(t_i, psi'_i) - sum h f(t_i, 1)` with `f(t, v) = L(y, y'/v) v`.
pub fn reparametrization_gain(
    traj: &Trajectory,
    lagrangian: &LagrangianSpec,
    psi_slopes: &[f64],
) -> Result<f64> {
    let n = traj.intervals();
    if psi_slopes.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi_slopes.len(),
        });
    }
    if let Some((node, &slope)) = psi_slopes.iter().enumerate().find(|(_, &v)| !(v > 0.5)) {
        return Err(Error::SlopeOutOfDomain { node, slope });
    }
    let h = traj.step();
    let len = traj.end_time() - traj.start_time();
    let mass: f64 = psi_slopes.iter().map(|v| v * h).sum();
    if (mass - len).abs() > 1e-12 * len.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::MassMismatch {
            expected: len,
            got: mass,
        });
    }
    let mut moved = 0.0;
    let mut base = 0.0;
    for (i, &v) in psi_slopes.iter().enumerate() {
        let y = traj.state(i);
        let u = traj.slope(i);
        let scaled: Vec<f64> = u.iter().map(|c| c / v).collect();
        moved += h * (lagrangian.eval(y, &scaled) * v);
        base += h * (lagrangian.eval(y, &u) * 1.0);
    }
    Ok(moved - base)
}

/// `max_i |u_i|`.
pub fn empirical_lipschitz(traj: &Trajectory) -> f64 {
    traj.empirical_lipschitz()
}
