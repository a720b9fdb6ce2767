//! Erdmann interval and DuBois-Reymond constancy checks along a candidate
//! minimizer.
//!
//! Along the trajectory, node `i` carries
//! `f_i(v) = L(y_i, u_i/v) v` for `v > 1/2` and `g_i(v) = L(y_i, v u_i)` for
//! `0 < v < 2`, their lower convex envelopes `f0_i`, `g0_i`, and one-sided
//! derivatives at `v = 1`.

use rayon::prelude::*;
use serde::Serialize;

use crate::convex::{
    clarke_gradient_1d, legendre_fenchel, linspace, lower_convex_envelope, one_sided_derivatives,
    subdifferential, superdifferential, FanConfig, OneSidedDerivatives, SampledFunction1D,
    StepSchedule,
};
use crate::error::{Error, Result};
use crate::lagrangian::{norm, LagrangianSpec, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VGridConfig {
    /// Points of the `g` grid on `[0, 2]`, endpoints included (and infinite).
    pub g_points: usize,
    /// `f` is sampled at reciprocals of the `g` grid up to this value.
    pub v_max: f64,
}

impl Default for VGridConfig {
    fn default() -> Self {
        VGridConfig {
            g_points: 401,
            v_max: 4.0,
        }
    }
}

/// Per-node data of the envelope pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEnvelopes {
    pub lagrangian_value: f64,
    pub slope: Vec<f64>,
    pub f: SampledFunction1D,
    pub g: SampledFunction1D,
    pub f0: SampledFunction1D,
    pub g0: SampledFunction1D,
    pub df0: OneSidedDerivatives,
    pub dg0: OneSidedDerivatives,
}

impl NodeEnvelopes {
    /// Erdmann interval `[L - d^r g0(1), L - d^l g0(1)]`.
    pub fn interval(&self) -> (f64, f64) {
        (
            self.lagrangian_value - self.dg0.right,
            self.lagrangian_value - self.dg0.left,
        )
    }

    /// The same interval written with `f0`: `[L - f0(1) + d^l f0(1), L - f0(1) + d^r f0(1)]`.
    pub fn interval_from_f0(&self) -> (f64, f64) {
        let f01 = self.f0.eval(1.0);
        (
            self.lagrangian_value - f01 + self.df0.left,
            self.lagrangian_value - f01 + self.df0.right,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePipeline {
    pub nodes: Vec<NodeEnvelopes>,
    pub config: VGridConfig,
}

impl EnvelopePipeline {
    /// Fraction of nodes with `f_i(1) - f0_i(1) <= tol`.
    pub fn contact_fraction(&self, tol: f64) -> f64 {
        let hits = self
            .nodes
            .iter()
            .filter(|n| n.f.eval(1.0) - n.f0.eval(1.0) <= tol)
            .count();
        hits as f64 / self.nodes.len() as f64
    }
}

/// Builds `f`, `g` and their envelopes at every interval of `traj`.
pub fn build_pipeline(
    traj: &Trajectory,
    l: &LagrangianSpec,
    cfg: &VGridConfig,
) -> Result<EnvelopePipeline> {
    if cfg.g_points < 5 || cfg.g_points.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "g grid needs an odd number of points >= 5, got {}",
            cfg.g_points
        )));
    }
    if !(cfg.v_max > 1.0) {
        return Err(Error::InvalidConfig(format!(
            "v_max {} must exceed 1",
            cfg.v_max
        )));
    }
    if traj.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: traj.dim(),
        });
    }
    let g_grid = linspace(0.0, 2.0, cfg.g_points);
    // reciprocals of g nodes in [1/v_max, 2], ascending, plus v = 1/2
    let mut f_grid: Vec<f64> = g_grid
        .iter()
        .rev()
        .filter(|&&w| w > 0.0 && w < 2.0 && 1.0 / w <= cfg.v_max)
        .map(|&w| 1.0 / w)
        .collect();
    f_grid.insert(0, 0.5);

    let nodes = (0..traj.intervals())
        .into_par_iter()
        .map(|i| {
            let y = traj.state(i);
            let u = traj.slope(i);
            let scaled = |s: f64| -> Vec<f64> { u.iter().map(|c| c * s).collect() };
            let f = SampledFunction1D::from_fn(f_grid.clone(), |v| {
                if v > 0.5 {
                    let w: Vec<f64> = u.iter().map(|c| c / v).collect();
                    l.eval(y, &w) * v
                } else {
                    f64::INFINITY
                }
            })?;
            let g = SampledFunction1D::from_fn(g_grid.clone(), |v| {
                if v > 0.0 && v < 2.0 {
                    l.eval(y, &scaled(v))
                } else {
                    f64::INFINITY
                }
            })?;
            let f0 = lower_convex_envelope(&f)?;
            let g0 = lower_convex_envelope(&g)?;
            let df0 = one_sided_derivatives(&f0, 1.0)?;
            let dg0 = one_sided_derivatives(&g0, 1.0)?;
            Ok(NodeEnvelopes {
                lagrangian_value: l.eval(y, &u),
                slope: u,
                f,
                g,
                f0,
                g0,
                df0,
                dg0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnvelopePipeline {
        nodes,
        config: *cfg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DbrVariant {
    Erdmann,
    Convexified,
    Subdifferential,
    Clarke,
    Superdifferential,
}

impl DbrVariant {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "erdmann" => Self::Erdmann,
            "convexified" | "convex" => Self::Convexified,
            "subdifferential" | "subdiff" => Self::Subdifferential,
            "clarke" => Self::Clarke,
            "superdifferential" | "superdiff" => Self::Superdifferential,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRecord {
    pub lagrangian_value: f64,
    pub interval: Option<(f64, f64)>,
    /// Selected costate; empty where the generalized gradient is empty.
    pub costate: Vec<f64>,
    pub vacuous: bool,
    /// `|L - <p,u> - c|`, or the distance of `c` to the interval.
    pub residual: f64,
    pub hamiltonian: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbrReport {
    pub variant: DbrVariant,
    pub c: Option<f64>,
    /// Intersection of the node intervals; `lo > hi` when empty.
    pub interval_lo: f64,
    pub interval_hi: f64,
    pub residual: f64,
    pub vacuous_fraction: f64,
    /// Half-width by which every interval must grow to intersect (0 if
    /// they already do).
    pub enlargement_eps: f64,
    /// Fraction of non-vacuous nodes within `tol`.
    pub satisfied_fraction: f64,
    /// Largest `|H(y_i, p_i) + c|` where a Hamiltonian was evaluated.
    pub hamiltonian_residual: Option<f64>,
    pub passed: bool,
    #[serde(skip)]
    pub nodes: Vec<NodeRecord>,
}

impl DbrReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbrConfig {
    pub v_grid: VGridConfig,
    /// Points of the velocity grid used for the convexification in `u`.
    pub u_points: usize,
    pub tol: f64,
    /// Required share of passing nodes (almost-everywhere proxy).
    pub ae_fraction: f64,
    /// Refuse variants whose hypotheses are not declared by the flags.
    pub require_flags: bool,
    pub fan: FanConfig,
}

impl Default for DbrConfig {
    fn default() -> Self {
        DbrConfig {
            v_grid: VGridConfig::default(),
            u_points: 8001,
            tol: 1e-2,
            ae_fraction: 0.95,
            require_flags: true,
            fan: FanConfig::default(),
        }
    }
}

/// Intersects the node intervals; `c` is the midpoint of the intersection
/// or, when empty, of the gap between the largest lower and the smallest
/// upper end.
pub fn erdmann_interval_test(pipe: &EnvelopePipeline, cfg: &DbrConfig) -> DbrReport {
    let intervals: Vec<(f64, f64)> = pipe.nodes.iter().map(NodeEnvelopes::interval).collect();
    let lo = intervals
        .iter()
        .map(|i| i.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = intervals.iter().map(|i| i.1).fold(f64::INFINITY, f64::min);
    let c = 0.5 * (lo + hi);
    let enlargement_eps = (0.5 * (lo - hi)).max(0.0);
    let nodes: Vec<NodeRecord> = pipe
        .nodes
        .iter()
        .zip(&intervals)
        .map(|(n, &(a, b))| NodeRecord {
            lagrangian_value: n.lagrangian_value,
            interval: Some((a, b)),
            costate: Vec::new(),
            vacuous: false,
            residual: (a - c).max(c - b).max(0.0),
            hamiltonian: None,
        })
        .collect();
    let residual = nodes.iter().map(|n| n.residual).fold(0.0, f64::max);
    let satisfied =
        nodes.iter().filter(|n| n.residual <= cfg.tol).count() as f64 / nodes.len() as f64;
    DbrReport {
        variant: DbrVariant::Erdmann,
        c: Some(c),
        interval_lo: lo,
        interval_hi: hi,
        residual,
        vacuous_fraction: 0.0,
        enlargement_eps,
        satisfied_fraction: satisfied,
        hamiltonian_residual: None,
        passed: enlargement_eps <= cfg.tol,
        nodes,
    }
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    Some(if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit direction of `u` (first axis when `u = 0`).
fn ray(u: &[f64]) -> (f64, Vec<f64>) {
    let s = norm(u);
    if s > 0.0 {
        (s, u.iter().map(|c| c / s).collect())
    } else {
        let mut e = vec![0.0; u.len()];
        e[0] = 1.0;
        (0.0, e)
    }
}

/// Min-norm point of `[lo, hi]`.
fn min_norm_interval(lo: f64, hi: f64) -> f64 {
    0.0f64.clamp(lo.min(hi), hi.max(lo))
}

fn one_dimensional(l: &LagrangianSpec) -> Result<()> {
    if l.dim() == 1 || l.flags.radial_in_u {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(l.dim()))
    }
}

/// Assembles the report of a gradient variant from per-node costates.
/// `sets[i]` lists every costate to test at node `i` (first = selection).
fn finish(
    variant: DbrVariant,
    traj: &Trajectory,
    l: &LagrangianSpec,
    sets: Vec<Vec<Vec<f64>>>,
    hamiltonians: Option<Vec<f64>>,
    cfg: &DbrConfig,
) -> DbrReport {
    let values: Vec<f64> = (0..traj.intervals())
        .map(|i| l.eval(traj.state(i), &traj.slope(i)))
        .collect();
    let slopes = traj.slopes();
    let c = median(
        sets.iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .map(|(i, s)| values[i] - dot(&s[0], &slopes[i]))
            .collect(),
    );
    let mut nodes = Vec::with_capacity(sets.len());
    for (i, set) in sets.iter().enumerate() {
        let vacuous = set.is_empty();
        let residual = match c {
            Some(c) if !vacuous => set
                .iter()
                .map(|p| (values[i] - dot(p, &slopes[i]) - c).abs())
                .fold(0.0, f64::max),
            _ => 0.0,
        };
        nodes.push(NodeRecord {
            lagrangian_value: values[i],
            interval: None,
            costate: set.first().cloned().unwrap_or_default(),
            vacuous,
            residual,
            hamiltonian: hamiltonians.as_ref().map(|h| h[i]),
        });
    }
    let active: Vec<&NodeRecord> = nodes.iter().filter(|n| !n.vacuous).collect();
    let vacuous_fraction = 1.0 - active.len() as f64 / nodes.len() as f64;
    let residual = active.iter().map(|n| n.residual).fold(0.0, f64::max);
    let satisfied_fraction = if active.is_empty() {
        1.0
    } else {
        active.iter().filter(|n| n.residual <= cfg.tol).count() as f64 / active.len() as f64
    };
    let hamiltonian_residual = match (&hamiltonians, c) {
        (Some(h), Some(c)) => Some(h.iter().map(|v| (v + c).abs()).fold(0.0, f64::max)),
        _ => None,
    };
    let hamiltonian_ok = match (&hamiltonians, c) {
        (Some(h), Some(c)) => {
            h.iter().filter(|v| (*v + c).abs() <= cfg.tol).count() as f64 / h.len() as f64
                >= cfg.ae_fraction
        }
        _ => true,
    };
    DbrReport {
        variant,
        c,
        interval_lo: c.unwrap_or(f64::NAN),
        interval_hi: c.unwrap_or(f64::NAN),
        residual,
        vacuous_fraction,
        enlargement_eps: 0.0,
        satisfied_fraction,
        hamiltonian_residual,
        passed: satisfied_fraction >= cfg.ae_fraction && hamiltonian_ok,
        nodes,
    }
}

/// Costates from the convexification `L0 = co_u L` along the path, with
/// the Hamiltonian check `H(y_i, p_i) = -c`.
pub fn dbr_convexified(
    traj: &Trajectory,
    l: &LagrangianSpec,
    cfg: &DbrConfig,
) -> Result<DbrReport> {
    one_dimensional(l)?;
    struct Node {
        p: Vec<f64>,
        gap: f64,
        h: f64,
    }
    let nodes = (0..traj.intervals())
        .into_par_iter()
        .map(|i| -> Result<Node> {
            let y = traj.state(i);
            let (s, e) = ray(&traj.slope(i));
            let half = 4.0 + s;
            let profile = SampledFunction1D::uniform(s - half, s + half, cfg.u_points, |r| {
                let w: Vec<f64> = e.iter().map(|c| c * r).collect();
                l.eval(y, &w)
            })?;
            let env = lower_convex_envelope(&profile)?;
            let d = one_sided_derivatives(&env, s)?;
            let p_scalar = min_norm_interval(d.left, d.right);
            let l_here = l.eval(y, &e.iter().map(|c| c * s).collect::<Vec<_>>());
            let gap = l_here - env.eval(s);
            let h = legendre_fenchel(&profile, &[p_scalar])?.values[0];
            Ok(Node {
                p: e.iter().map(|c| c * p_scalar).collect(),
                gap,
                h,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bad = nodes.iter().filter(|n| n.gap > cfg.tol).count();
    if bad as f64 > (1.0 - cfg.ae_fraction) * nodes.len() as f64 {
        let (worst, n) = nodes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.gap.total_cmp(&b.1.gap))
            .unwrap();
        return Err(Error::HypothesisFailed {
            condition: "L = co_u L along the trajectory".into(),
            detail: format!(
                "gap {:.3e} at node {worst}, {bad} nodes above tolerance",
                n.gap
            ),
        });
    }
    let hamiltonians = nodes.iter().map(|n| n.h).collect();
    let sets = nodes.into_iter().map(|n| vec![n.p]).collect();
    Ok(finish(
        DbrVariant::Convexified,
        traj,
        l,
        sets,
        Some(hamiltonians),
        cfg,
    ))
}

fn sorted_by_norm(mut points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    // stable: ties keep lattice order
    points.sort_by(|a, b| norm(a).total_cmp(&norm(b)));
    points
}

/// Costates from the subdifferential `d^- L(y_i, .)` at `u_i`; nodes with an
/// empty subdifferential are vacuous.
pub fn dbr_subdifferential(
    traj: &Trajectory,
    l: &LagrangianSpec,
    cfg: &DbrConfig,
) -> Result<DbrReport> {
    if cfg.require_flags && !(l.flags.semiconvex_in_u || l.flags.differentiable_in_u) {
        return Err(Error::FlagMissing("semiconvex_in_u"));
    }
    let sets = gradient_sets(traj, l, cfg, false)?;
    Ok(finish(
        DbrVariant::Subdifferential,
        traj,
        l,
        sets,
        None,
        cfg,
    ))
}

/// Like [`dbr_subdifferential`] with the superdifferential; every lattice
/// element of a non-empty set is tested.
pub fn dbr_superdifferential(
    traj: &Trajectory,
    l: &LagrangianSpec,
    cfg: &DbrConfig,
) -> Result<DbrReport> {
    let sets = gradient_sets(traj, l, cfg, true)?;
    Ok(finish(
        DbrVariant::Superdifferential,
        traj,
        l,
        sets,
        None,
        cfg,
    ))
}

fn gradient_sets(
    traj: &Trajectory,
    l: &LagrangianSpec,
    cfg: &DbrConfig,
    upper: bool,
) -> Result<Vec<Vec<Vec<f64>>>> {
    (0..traj.intervals())
        .into_par_iter()
        .map(|i| {
            let y = traj.state(i).to_vec();
            let phi = |u: &[f64]| l.eval(&y, u);
            let set = if upper {
                superdifferential(&phi, &traj.slope(i), &cfg.fan)?
            } else {
                subdifferential(&phi, &traj.slope(i), &cfg.fan)?
            };
            let mut pts = sorted_by_norm(set.points);
            if !upper {
                pts.truncate(1);
            }
            Ok(pts)
        })
        .collect()
}

/// Costates from the Clarke gradient of `L(y_i, .)` at `u_i` (along the
/// ray through `u_i` when `n > 1`).
pub fn dbr_clarke(traj: &Trajectory, l: &LagrangianSpec, cfg: &DbrConfig) -> Result<DbrReport> {
    if cfg.require_flags && !l.flags.lipschitz_in_u {
        return Err(Error::FlagMissing("lipschitz_in_u"));
    }
    one_dimensional(l)?;
    let steps: StepSchedule = cfg.fan.steps;
    let sets = (0..traj.intervals())
        .into_par_iter()
        .map(|i| {
            let y = traj.state(i);
            let (s, e) = ray(&traj.slope(i));
            let along = |r: f64| {
                let w: Vec<f64> = e.iter().map(|c| c * r).collect();
                l.eval(y, &w)
            };
            let (lo, hi) = clarke_gradient_1d(&along, s, &steps)?;
            let p = min_norm_interval(lo, hi);
            Ok(vec![e.iter().map(|c| c * p).collect()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(DbrVariant::Clarke, traj, l, sets, None, cfg))
}
