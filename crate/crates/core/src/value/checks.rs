//! Verifications run against a computed value grid.

use rayon::prelude::*;
use serde::Serialize;

use super::relaxed::RelaxedEstimator;
use super::{bilinear, ValueGrid};
use crate::convex::{contingent, subdifferential, FanConfig, StepSchedule};
use crate::error::{Error, Result};
use crate::lagrangian::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialAttainmentReport {
    /// Lattice points where `V(0, x)` differs from `phi(x)` in any bit.
    pub layer_mismatches: usize,
    /// Lattice points where `phi(x)` exceeds the liminf over shrinking
    /// neighbours by more than `tol`.
    pub lsc_violations: usize,
    pub cone_points: usize,
    pub cone_violations: usize,
    /// Most negative `cone estimate - phi(x0)`.
    pub worst_cone_gap: f64,
    pub worst_cone_x: Option<f64>,
    pub tol: f64,
    pub passed: bool,
}

/// Checks `V(0, .) = phi` and that `V` does not drop below `phi(x0)` on
/// small `(t, x)` cones around `(0, x0)`.
///
/// The cone minimum `m(r)` is taken over layer `r` and `|dj| <= r` for
/// `r = 1, 2`; the estimate at the apex is `2 m(1) - m(2)`, which removes
/// the first-order drift of a smooth `V` across the cone.
pub fn check_initial_attainment(v: &ValueGrid, tol: f64) -> InitialAttainmentReport {
    let phi = &v.terminal;
    let dx = v.dx();
    let m = v.xs.len();
    let layer_mismatches =
        v.xs.iter()
            .zip(&v.values[0])
            .filter(|(x, val)| phi.eval(&[**x]).to_bits() != val.to_bits())
            .count();
    let lsc_violations =
        v.xs.iter()
            .filter(|&&x| {
                let fx = phi.eval(&[x]);
                let liminf = (4..=8)
                    .flat_map(|j| {
                        let d = dx * 0.5f64.powi(j);
                        [phi.eval(&[x - d]), phi.eval(&[x + d])]
                    })
                    .fold(f64::INFINITY, f64::min);
                !(fx <= liminf + tol || (fx.is_infinite() && liminf.is_infinite()))
            })
            .count();

    let cone_min = |j: usize, r: usize| -> f64 {
        if r >= v.values.len() {
            return f64::INFINITY;
        }
        let lo = j.saturating_sub(r);
        let hi = (j + r).min(m - 1);
        v.values[r][lo..=hi]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    };
    let mut cone_points = 0;
    let mut cone_violations = 0;
    let mut worst = f64::INFINITY;
    let mut worst_x = None;
    for j in 0..m {
        let p = v.values[0][j];
        if !p.is_finite() {
            continue;
        }
        cone_points += 1;
        let (m1, m2) = (cone_min(j, 1), cone_min(j, 2));
        let est = if m2.is_finite() { 2.0 * m1 - m2 } else { m1 };
        let gap = est - p;
        if gap < worst {
            worst = gap;
            worst_x = Some(v.xs[j]);
        }
        if gap < -tol {
            cone_violations += 1;
        }
    }
    InitialAttainmentReport {
        layer_mismatches,
        lsc_violations,
        cone_points,
        cone_violations,
        worst_cone_gap: worst,
        worst_cone_x: worst_x,
        tol,
        passed: layer_mismatches == 0 && lsc_violations == 0 && cone_violations == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub t_min: f64,
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzBlock {
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
    /// Largest neighbour difference quotient along `t` or `x`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzTable {
    pub region: Region,
    pub blocks: Vec<LipschitzBlock>,
    pub max: f64,
}

/// Neighbour difference quotients of `V` over `region`, split into
/// `blocks.0 x blocks.1` subregions in `(t, x)`. Pairs with an infinite
/// end are skipped.
pub fn lipschitz_estimate_v(
    v: &ValueGrid,
    region: Region,
    blocks: (usize, usize),
) -> Result<LipschitzTable> {
    if !(region.t_min > 0.0) || region.t_min >= region.t_max || region.x_min >= region.x_max {
        return Err(Error::InvalidConfig(
            "Lipschitz region must be nonempty with t_min > 0".into(),
        ));
    }
    if blocks.0 == 0 || blocks.1 == 0 {
        return Err(Error::InvalidConfig("block counts must be positive".into()));
    }
    let (tau, dx) = (v.tau(), v.dx());
    let ks: Vec<usize> = (0..v.values.len())
        .filter(|&k| {
            let t = v.time(k);
            t >= region.t_min - 1e-9 * tau && t <= region.t_max + 1e-9 * tau
        })
        .collect();
    let js: Vec<usize> = (0..v.xs.len())
        .filter(|&j| v.xs[j] >= region.x_min - 1e-9 * dx && v.xs[j] <= region.x_max + 1e-9 * dx)
        .collect();
    if ks.len() < 2 || js.len() < 2 {
        return Err(Error::InvalidConfig(
            "Lipschitz region holds fewer than 2x2 lattice points".into(),
        ));
    }
    let split = |idx: &[usize], parts: usize, i: usize| -> Vec<usize> {
        let n = idx.len() - 1;
        let a = n * i / parts;
        let b = n * (i + 1) / parts;
        idx[a..=b].to_vec()
    };
    let quotient = |a: f64, b: f64, h: f64| {
        if a.is_finite() && b.is_finite() {
            (a - b).abs() / h
        } else {
            0.0
        }
    };
    let mut out = Vec::new();
    for bt in 0..blocks.0 {
        let kb = split(&ks, blocks.0, bt);
        for bx in 0..blocks.1 {
            let jb = split(&js, blocks.1, bx);
            let mut c: f64 = 0.0;
            for &k in &kb {
                for &j in &jb {
                    let val = v.values[k][j];
                    if k < *kb.last().unwrap() {
                        c = c.max(quotient(v.values[k + 1][j], val, tau));
                    }
                    if j < *jb.last().unwrap() {
                        c = c.max(quotient(v.values[k][j + 1], val, dx));
                    }
                }
            }
            out.push(LipschitzBlock {
                t_range: (v.time(kb[0]), v.time(*kb.last().unwrap())),
                x_range: (v.xs[jb[0]], v.xs[*jb.last().unwrap()]),
                constant: c,
            });
        }
    }
    let max = out.iter().map(|b| b.constant).fold(0.0, f64::max);
    Ok(LipschitzTable {
        region,
        blocks: out,
        max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiniReport {
    pub max_quotient: f64,
    /// Forward quotients stay below `g` (or `0` without `g`) within `tol`.
    pub premise: bool,
    /// `f(b) - f(a)`.
    pub increment: f64,
    /// Left Riemann sum of `g`, when given.
    pub integral: Option<f64>,
    pub conclusion: bool,
    pub tol: f64,
    /// The implication premise => conclusion holds on the samples.
    pub passed: bool,
}

/// Discrete Dini monotonicity test on uniform samples `f[i] = f(a + i delta)`.
pub fn dini_monotonicity(f: &[f64], delta: f64, g: Option<&[f64]>, tol: f64) -> Result<DiniReport> {
    if f.len() < 2 || !(delta > 0.0) {
        return Err(Error::InvalidConfig(
            "need at least two samples and delta > 0".into(),
        ));
    }
    if let Some(g) = g {
        if g.len() + 1 < f.len() {
            return Err(Error::DimensionMismatch {
                expected: f.len() - 1,
                got: g.len(),
            });
        }
    }
    let quotients: Vec<f64> = f.windows(2).map(|w| (w[1] - w[0]) / delta).collect();
    let max_quotient = quotients.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let increment = f[f.len() - 1] - f[0];
    let (premise, integral, conclusion) = match g {
        None => (max_quotient <= tol, None, increment <= tol),
        Some(g) => {
            let premise = quotients.iter().zip(g).all(|(q, gi)| *q <= gi + tol);
            let integral: f64 = g[..quotients.len()].iter().map(|gi| gi * delta).sum();
            (premise, Some(integral), increment <= integral + tol)
        }
    };
    Ok(DiniReport {
        max_quotient,
        premise,
        increment,
        integral,
        conclusion,
        tol,
        passed: !premise || conclusion,
    })
}

/// Contingent derivatives of the bilinear interpolant of `V` at `(t, x)`
/// in direction `dir = (dt, dx)`; `(+inf, +inf)` where `V(t, x) = +inf`.
fn contingent_v(
    v: &ValueGrid,
    t: f64,
    x: f64,
    dir: [f64; 2],
    steps: &StepSchedule,
    fan_width: f64,
) -> (f64, f64) {
    let (tau, x0, dx) = (v.tau(), v.xs[0], v.dx());
    let f = |p: &[f64]| bilinear(&v.values, tau, x0, dx, p[0], p[1]);
    contingent(&f, &[t, x], &dir, steps, fan_width).unwrap_or((f64::INFINITY, f64::INFINITY))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HjConfig {
    pub tol: f64,
    /// Test every `t_stride`-th layer and every `x_stride`-th state.
    pub t_stride: usize,
    pub x_stride: usize,
    /// Direction fan half-width in lattice steps.
    pub fan_cells: f64,
    /// Lattice resolution per axis for the subdifferential search.
    pub resolution: usize,
    /// Velocities `|u| <= forall_u_max` on a `forall_u_step` grid join the
    /// nine-point fan for the "for every u" inequality.
    pub forall_u_max: f64,
    pub forall_u_step: f64,
    /// Restrict tested points to this region.
    pub region: Option<Region>,
}

impl Default for HjConfig {
    fn default() -> Self {
        HjConfig {
            tol: 3e-2,
            t_stride: 10,
            x_stride: 10,
            fan_cells: 2.0,
            resolution: 41,
            forall_u_max: 2.0,
            forall_u_step: 0.25,
            region: None,
        }
    }
}

impl HjConfig {
    /// Difference-quotient steps `tau/4 * 2^-j`, `j = 2..=5`.
    pub fn steps(&self, tau: f64) -> StepSchedule {
        StepSchedule {
            h0: 0.25 * tau,
            count: 5,
            tail: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HjPoint {
    pub t: f64,
    pub x: f64,
    /// Number of sampled elements of the subdifferential.
    pub set_size: usize,
    /// `min p_t + H-(x, -p_x)` over the sampled set; must be `>= -tol`.
    pub super_residual: Option<f64>,
    /// `max p_t + H+(x, -p_x)` over the sampled set; must be `<= tol`.
    pub sub_residual: Option<f64>,
    /// `min_u D_up V(t, x)(-1, u) + L-(x, u)` over the argmin fan; `<= tol`.
    pub exists_residual: f64,
    /// `max_u D_down V(t, x)(1, -u) - L+(x, u)`; `<= tol`.
    pub forall_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HjResidualReport {
    pub tol: f64,
    pub tested: usize,
    /// Tested points where the sampled subdifferential is empty.
    pub vacuous: usize,
    pub super_pass_fraction: f64,
    pub sub_pass_fraction: f64,
    pub exists_pass_fraction: f64,
    pub forall_pass_fraction: f64,
    pub worst_super: Vec<HjPoint>,
    pub worst_sub: Vec<HjPoint>,
    pub worst_exists: Vec<HjPoint>,
    pub worst_forall: Vec<HjPoint>,
    #[serde(skip)]
    pub points: Vec<HjPoint>,
}

impl HjResidualReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Hamilton-Jacobi inequalities for `V` at interior lattice points.
pub fn hj_residuals(
    v: &ValueGrid,
    est: &RelaxedEstimator,
    cfg: &HjConfig,
) -> Result<HjResidualReport> {
    if cfg.t_stride == 0 || cfg.x_stride == 0 || cfg.resolution < 3 {
        return Err(Error::InvalidConfig(
            "HJ strides must be positive and resolution >= 3".into(),
        ));
    }
    let (tau, dx) = (v.tau(), v.dx());
    let steps = cfg.steps(tau);
    let fan_width = cfg.fan_cells * dx;
    let u_grid = est.u_grid();
    let reach = steps.h0 * (u_grid[u_grid.len() - 1].abs() + 1.0 + fan_width);
    let margin = (reach / dx).ceil() as usize + 1;
    let m = v.xs.len();
    if m <= 2 * margin {
        return Err(Error::InvalidConfig(
            "state lattice too narrow for the HJ stencil".into(),
        ));
    }
    let mut sites = Vec::new();
    for k in (1..v.layers()).step_by(cfg.t_stride) {
        for j in (margin..m - margin).step_by(cfg.x_stride) {
            let inside = cfg.region.is_none_or(|r| {
                let (t, x) = (v.time(k), v.xs[j]);
                let eps = 1e-9 * (tau + dx);
                t >= r.t_min - eps && t <= r.t_max + eps && x >= r.x_min - eps && x <= r.x_max + eps
            });
            if inside && v.values[k][j].is_finite() && v.slopes[k][j].is_finite() {
                sites.push((k, j));
            }
        }
    }
    let forall_n = (cfg.forall_u_max / cfg.forall_u_step).round() as i64;
    // The subdifferential is taken from one-sided cell slopes; a wide
    // direction fan would shrink it to nothing at smooth points.
    let fan = FanConfig {
        steps,
        resolution: Some(cfg.resolution),
        ..FanConfig::default()
    };

    let points: Vec<HjPoint> = sites
        .par_iter()
        .map(|&(k, j)| {
            let (t, x) = (v.time(k), v.xs[j]);
            let center = est.u_index(v.slopes[k][j]) as i64;
            let fan_idx: Vec<usize> = (center - 4..=center + 4)
                .filter(|&i| i >= 0 && (i as usize) < u_grid.len())
                .map(|i| i as usize)
                .collect();

            let exists_residual = fan_idx
                .iter()
                .map(|&i| {
                    let u = u_grid[i];
                    contingent_v(v, t, x, [-1.0, u], &steps, fan_width).0 + est.minus(x, i)
                })
                .fold(f64::INFINITY, f64::min);
            let mut forall_idx = fan_idx.clone();
            forall_idx
                .extend((-forall_n..=forall_n).map(|s| est.u_index(s as f64 * cfg.forall_u_step)));
            forall_idx.sort_unstable();
            forall_idx.dedup();
            let forall_residual = forall_idx
                .iter()
                .map(|&i| {
                    let u = u_grid[i];
                    contingent_v(v, t, x, [1.0, -u], &steps, fan_width).1 - est.plus(x, i)
                })
                .fold(f64::NEG_INFINITY, f64::max);

            let f = |p: &[f64]| bilinear(&v.values, tau, v.xs[0], dx, p[0], p[1]);
            let set = subdifferential(&f, &[t, x], &fan)
                .map(|s| s.points)
                .unwrap_or_default();
            let (mut sup, mut sub) = (None::<f64>, None::<f64>);
            let mut columns: Vec<(f64, f64, f64)> = Vec::new();
            for p in &set {
                match columns.iter_mut().find(|c| c.0 == p[1]) {
                    Some(c) => {
                        c.1 = c.1.min(p[0]);
                        c.2 = c.2.max(p[0]);
                    }
                    None => columns.push((p[1], p[0], p[0])),
                }
            }
            for (px, pt_min, pt_max) in columns {
                let (hp, hm) = est.hamiltonians_at(x, -px);
                let s = pt_min + hm;
                let b = pt_max + hp;
                sup = Some(sup.map_or(s, |c| c.min(s)));
                sub = Some(sub.map_or(b, |c| c.max(b)));
            }
            HjPoint {
                t,
                x,
                set_size: set.len(),
                super_residual: sup,
                sub_residual: sub,
                exists_residual,
                forall_residual,
            }
        })
        .collect();

    let tested = points.len();
    let nonvacuous: Vec<&HjPoint> = points.iter().filter(|p| p.set_size > 0).collect();
    let frac = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    let super_pass = nonvacuous
        .iter()
        .filter(|p| p.super_residual.is_some_and(|r| r >= -cfg.tol))
        .count();
    let sub_pass = nonvacuous
        .iter()
        .filter(|p| p.sub_residual.is_some_and(|r| r <= cfg.tol))
        .count();
    let exists_pass = points
        .iter()
        .filter(|p| p.exists_residual <= cfg.tol)
        .count();
    let forall_pass = points
        .iter()
        .filter(|p| p.forall_residual <= cfg.tol)
        .count();
    let worst = |key: &dyn Fn(&HjPoint) -> Option<f64>| -> Vec<HjPoint> {
        let mut v: Vec<(f64, &HjPoint)> = points
            .iter()
            .filter_map(|p| key(p).map(|r| (r, p)))
            .collect();
        v.sort_by(|a, b| b.0.total_cmp(&a.0));
        v.into_iter().take(10).map(|(_, p)| p.clone()).collect()
    };
    Ok(HjResidualReport {
        tol: cfg.tol,
        tested,
        vacuous: tested - nonvacuous.len(),
        super_pass_fraction: frac(super_pass, nonvacuous.len()),
        sub_pass_fraction: frac(sub_pass, nonvacuous.len()),
        exists_pass_fraction: frac(exists_pass, tested),
        forall_pass_fraction: frac(forall_pass, tested),
        worst_super: worst(&|p| p.super_residual.map(|r| -r)),
        worst_sub: worst(&|p| p.sub_residual),
        worst_exists: worst(&|p| Some(p.exists_residual)),
        worst_forall: worst(&|p| Some(p.forall_residual)),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ComparisonVerdict {
    /// `W(0, .)` differs from `phi` by more than `tol`.
    NotAdmissible { x: f64, gap: f64 },
    /// The sampled subsolution inequality fails.
    SubsolutionViolated {
        t: f64,
        x: f64,
        u: f64,
        residual: f64,
        tol: f64,
    },
    /// Subsolution on the sample and `W <= V + tol` on the whole grid.
    /// Grid sampling cannot establish the inequality off the lattice, so
    /// `label` is always `"sampled-verified"`.
    Dominated {
        label: String,
        sampled_points: usize,
        subsolution_tol: f64,
        max_excess: f64,
    },
    /// Subsolution on the sample but `W > V + tol` somewhere.
    NotDominated { t: f64, x: f64, excess: f64 },
}

/// Maximality test: a function `W(t, x)` with `W(0, .) = phi` that is a
/// subsolution on sampled points and directions must lie below `V` at
/// every grid node. `W` is evaluated directly, so its contingent
/// derivatives are not blurred by interpolation. The subsolution sample runs on
/// layers `t >= tau` with tolerance `max(cfg.tol, C (tau + dx))`, `C` the
/// Lipschitz constant of `V` there; admissibility and dominance use
/// `dominance_tol`.
pub fn comparison_check(
    w: &(dyn Fn(f64, f64) -> f64 + Sync),
    v: &ValueGrid,
    est: &RelaxedEstimator,
    cfg: &HjConfig,
    dominance_tol: f64,
) -> Result<ComparisonVerdict> {
    let tol = dominance_tol;
    for &x in &v.xs {
        let phi = v.terminal.eval(&[x]);
        let w0 = w(0.0, x);
        let gap = if phi.is_infinite() && w0.is_infinite() {
            0.0
        } else {
            (w0 - phi).abs()
        };
        if !(gap <= tol) {
            return Ok(ComparisonVerdict::NotAdmissible { x, gap });
        }
    }

    let (tau, dx) = (v.tau(), v.dx());
    let steps = cfg.steps(tau);
    let fan_width = cfg.fan_cells * dx;
    let lip = lipschitz_estimate_v(
        v,
        Region {
            t_min: tau,
            t_max: v.config.horizon,
            x_min: v.xs[0],
            x_max: v.xs[v.xs.len() - 1],
        },
        (1, 1),
    )
    .map(|t| t.max)
    .unwrap_or(0.0);
    let sub_tol = cfg.tol.max(lip * (tau + dx));
    let n = (cfg.forall_u_max / cfg.forall_u_step).round() as i64;
    let us: Vec<usize> = (-n..=n)
        .map(|s| est.u_index(s as f64 * cfg.forall_u_step))
        .collect();
    let reach = steps.h0 * (cfg.forall_u_max + 1.0 + fan_width);
    let margin = (reach / dx).ceil() as usize + 1;
    let m = v.xs.len();
    let mut sites = Vec::new();
    for k in (1..v.layers()).step_by(cfg.t_stride.max(1)) {
        for j in (margin..m.saturating_sub(margin)).step_by(cfg.x_stride.max(1)) {
            if w(v.time(k), v.xs[j]).is_finite() {
                sites.push((k, j));
            }
        }
    }
    let worst: Vec<(f64, f64, f64, f64)> = sites
        .par_iter()
        .map(|&(k, j)| {
            let (t, x) = (v.time(k), v.xs[j]);
            let f = |p: &[f64]| w(p[0], p[1]);
            let mut worst = (f64::NEG_INFINITY, t, x, 0.0);
            for &i in &us {
                let u = est.u_grid()[i];
                let up = contingent(&f, &[t, x], &[1.0, -u], &steps, fan_width)
                    .map(|d| d.1)
                    .unwrap_or(f64::INFINITY);
                let r = up - est.plus(x, i);
                if r > worst.0 {
                    worst = (r, t, x, u);
                }
            }
            worst
        })
        .collect();
    if let Some(&(residual, t, x, u)) = worst.iter().find(|r| r.0 > sub_tol) {
        return Ok(ComparisonVerdict::SubsolutionViolated {
            t,
            x,
            u,
            residual,
            tol: sub_tol,
        });
    }

    let mut max_excess = f64::NEG_INFINITY;
    for (k, row) in v.values.iter().enumerate() {
        for (j, &vv) in row.iter().enumerate() {
            let wv = w(v.time(k), v.xs[j]);
            let excess = if vv.is_infinite() || wv == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                wv - vv
            };
            if excess > tol {
                return Ok(ComparisonVerdict::NotDominated {
                    t: v.time(k),
                    x: v.xs[j],
                    excess,
                });
            }
            max_excess = max_excess.max(excess);
        }
    }
    Ok(ComparisonVerdict::Dominated {
        label: "sampled-verified".into(),
        sampled_points: sites.len(),
        subsolution_tol: sub_tol,
        max_excess,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionConfig {
    /// Membership tolerance for `r_F`, `r_G` and the optimality gap.
    pub tol: f64,
    pub node_fraction: f64,
    pub equality_tol: f64,
    pub equality_fraction: f64,
    pub fan_cells: f64,
}

impl Default for InclusionConfig {
    fn default() -> Self {
        InclusionConfig {
            tol: 5e-2,
            node_fraction: 0.95,
            equality_tol: 5e-2,
            equality_fraction: 0.9,
            fan_cells: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionNode {
    pub s: f64,
    pub y: f64,
    pub u: f64,
    pub r_f: f64,
    pub r_g: f64,
    /// `D_up V(-1, u) + L`, `D_down V(-1, u) + L`, `D_up V(1, -u) - L`,
    /// `D_down V(1, -u) - L`.
    pub equalities: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    pub nodes: usize,
    /// Nodes with `r_F <= tol` or `r_G <= tol`.
    pub membership_fraction: f64,
    pub max_r_f: f64,
    /// `action + phi(end) - V(T, x)`.
    pub optimality_gap: f64,
    /// Nodes where all four contingent equalities hold within tolerance.
    pub equality_fraction: f64,
    pub equalities_hold: bool,
    pub minimizer: bool,
    pub verdict: &'static str,
    #[serde(skip)]
    pub per_node: Vec<InclusionNode>,
}

/// Differential-inclusion characterization of minimizers for the path
/// `traj` on `[0, T]` with `T` its duration.
pub fn inclusion_check(
    traj: &Trajectory,
    v: &ValueGrid,
    cfg: &InclusionConfig,
) -> Result<InclusionReport> {
    let x = traj.state(0)[0];
    let j0 = v.index_of(x).ok_or(Error::TrajectoryOffGrid(x))?;
    let horizon = traj.end_time() - traj.start_time();
    if horizon > v.config.horizon * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(
            "trajectory longer than the value grid horizon".into(),
        ));
    }
    let l = &v.lagrangian;
    let steps = HjConfig::default().steps(v.tau());
    let fan_width = cfg.fan_cells * v.dx();
    let n = traj.intervals();
    let per_node: Vec<InclusionNode> = (1..n)
        .into_par_iter()
        .map(|i| {
            let s = traj.time(i) - traj.start_time();
            let t = horizon - s;
            let y = traj.state(i)[0];
            let u = traj.slope(i)[0];
            let lv = l.eval(&[y], &[u]);
            let back = contingent_v(v, t, y, [-1.0, u], &steps, fan_width);
            let fwd = contingent_v(v, t, y, [1.0, -u], &steps, fan_width);
            InclusionNode {
                s,
                y,
                u,
                r_f: back.0 + lv,
                r_g: lv - fwd.1,
                equalities: [back.0 + lv, back.1 + lv, fwd.0 - lv, fwd.1 - lv],
            }
        })
        .collect();
    let count = per_node.len();
    let frac = |k: usize| {
        if count == 0 {
            1.0
        } else {
            k as f64 / count as f64
        }
    };
    let members = per_node
        .iter()
        .filter(|p| p.r_f <= cfg.tol || p.r_g <= cfg.tol)
        .count();
    let equal = per_node
        .iter()
        .filter(|p| p.equalities.iter().all(|e| e.abs() <= cfg.equality_tol))
        .count();
    let max_r_f = per_node
        .iter()
        .map(|p| p.r_f)
        .fold(f64::NEG_INFINITY, f64::max);
    let action = crate::lagrangian::evaluate_action(traj, l)?.value();
    let end = traj.state(n)[0];
    let total = action + v.terminal.eval(&[end]);
    let vx = v.values[v.layers()][j0];
    let vt = if (horizon - v.config.horizon).abs() <= 1e-12 * horizon {
        vx
    } else {
        v.eval(horizon, x)
    };
    let optimality_gap = if total.is_infinite() {
        f64::INFINITY
    } else {
        total - vt
    };
    let membership_fraction = frac(members);
    let equality_fraction = frac(equal);
    let minimizer = membership_fraction >= cfg.node_fraction && optimality_gap <= cfg.tol;
    Ok(InclusionReport {
        nodes: count,
        membership_fraction,
        max_r_f,
        optimality_gap,
        equality_fraction,
        equalities_hold: equality_fraction >= cfg.equality_fraction,
        minimizer,
        verdict: if minimizer {
            "MINIMIZER"
        } else {
            "NOT_MINIMIZER"
        },
        per_node,
    })
}

impl InclusionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
