use std::path::Path;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use varcalc::convex::{legendre_fenchel, linspace, lower_convex_envelope, SampledFunction1D};
use varcalc::direct::{solve_lagrange_dp, trajectory_csv, SolveResult, SolverConfig};
use varcalc::lagrangian::{
    builtin_catalog, lagrangian, parse_problem, CatalogEntry, ProblemInstance, ProblemKind,
};
use varcalc::necessary::{
    build_pipeline, dbr_clarke, dbr_convexified, dbr_subdifferential, dbr_superdifferential,
    erdmann_interval_test, DbrConfig, DbrVariant,
};
use varcalc::regularity::{lipschitz_bound_for, verify_bound};
use varcalc::value::{
    check_initial_attainment, compute_value_grid, hj_residuals, inclusion_check, HjConfig,
    InclusionConfig, Region, RelaxedConfig, RelaxedEstimator, ValueConfig, ValueGrid,
};
use varcalc::Error;

use crate::{Command, LatticeArgs, SectionArgs, ValueArgs};

#[derive(Debug)]
pub enum RunError {
    Usage(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Usage(e.to_string())
    }
}

/// Result of one subcommand.
pub struct Outcome {
    pub report: String,
    pub passed: bool,
    /// `(file name, contents)` written only with `--out`.
    pub tables: Vec<(&'static str, String)>,
    pub problem_hash: Option<String>,
    pub outputs: Vec<String>,
}

impl Outcome {
    fn new(report: &impl Serialize, passed: bool) -> Self {
        Outcome {
            report: serde_json::to_string_pretty(report).expect("report serializes"),
            passed,
            tables: Vec::new(),
            problem_hash: None,
            outputs: Vec::new(),
        }
    }

    fn with_table(mut self, name: &'static str, contents: String) -> Self {
        self.tables.push((name, contents));
        self
    }

    fn with_hash(mut self, hash: String) -> Self {
        self.problem_hash = Some(hash);
        self
    }
}

/// Hypothesis failures and weak gauges are findings, not usage errors.
fn finding(e: Error, context: serde_json::Value) -> Result<Outcome, RunError> {
    match e {
        Error::HypothesisFailed { .. } | Error::GaugeTooWeak(_) => Ok(Outcome::new(
            &json!({ "finding": e.to_string(), "context": context }),
            false,
        )),
        other => Err(other.into()),
    }
}

fn load(path: &Path) -> Result<(ProblemInstance, String), RunError> {
    let bytes =
        std::fs::read(path).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| RunError::Usage(format!("{}: not valid UTF-8", path.display())))?;
    let problem =
        parse_problem(&text).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
    Ok((problem, hex::encode(Sha256::digest(&bytes))))
}

fn solve(problem: &ProblemInstance, lattice: &LatticeArgs) -> Result<SolveResult, RunError> {
    if !matches!(problem.kind, ProblemKind::Lagrange { .. }) {
        return Err(RunError::Usage(
            "this subcommand needs a lagrange problem".into(),
        ));
    }
    let cfg = SolverConfig::for_problem(problem, lattice.steps, lattice.resolution)?;
    Ok(solve_lagrange_dp(problem, &cfg)?)
}

fn value_grid(problem: &ProblemInstance, args: &ValueArgs) -> Result<(ValueGrid, f64), RunError> {
    let ProblemKind::Bolza {
        horizon,
        x,
        terminal,
    } = &problem.kind
    else {
        return Err(RunError::Usage(
            "this subcommand needs a bolza problem".into(),
        ));
    };
    let cfg = ValueConfig::new(*horizon, args.layers, args.half_width, args.resolution)?;
    let grid = compute_value_grid(&problem.lagrangian, terminal, &cfg)?;
    Ok((grid, x[0]))
}

fn section(args: &SectionArgs) -> Result<SampledFunction1D, RunError> {
    if !(args.u_min < args.u_max) || args.points < 2 {
        return Err(RunError::Usage(
            "section needs u-min < u-max and at least 2 points".into(),
        ));
    }
    let l = lagrangian(&args.lagrangian, 1)?;
    let x = args.x;
    Ok(SampledFunction1D::from_fn(
        linspace(args.u_min, args.u_max, args.points),
        |u| l.eval(&[x], &[u]),
    )?)
}

pub fn dispatch(command: &Command) -> Result<Outcome, RunError> {
    match command {
        Command::Catalog => {
            let entries: Vec<serde_json::Value> = builtin_catalog()
                .iter()
                .map(|e| match e {
                    CatalogEntry::Lagrangian(l) => {
                        json!({ "name": e.name(), "kind": e.kind(), "flags": l.flags })
                    }
                    CatalogEntry::Terminal(_) => json!({ "name": e.name(), "kind": e.kind() }),
                })
                .collect();
            Ok(Outcome::new(&entries, true))
        }
        Command::Solve { problem, lattice } => {
            let (p, hash) = load(problem)?;
            let r = solve(&p, lattice)?;
            Ok(Outcome::new(&r.summary(), true)
                .with_table("trajectory.csv", trajectory_csv(&r.trajectory))
                .with_hash(hash))
        }
        Command::Envelope { section: args } => {
            let f = section(args)?;
            let env = lower_convex_envelope(&f)?;
            let mut csv = String::from("u,L,coL\n");
            for ((u, l), e) in f.abscissae().iter().zip(f.ordinates()).zip(env.ordinates()) {
                csv.push_str(&format!("{u:.16e},{l:.16e},{e:.16e}\n"));
            }
            let report = json!({
                "lagrangian": args.lagrangian,
                "x": args.x,
                "u": f.abscissae(),
                "lagrangian_values": f.ordinates(),
                "envelope": env.ordinates(),
            });
            Ok(Outcome::new(&report, true).with_table("envelope.csv", csv))
        }
        Command::Lft {
            section: args,
            p_max,
            p_points,
        } => {
            if !(*p_max > 0.0) || *p_points < 2 {
                return Err(RunError::Usage(
                    "lft needs p-max > 0 and at least 2 dual points".into(),
                ));
            }
            let f = section(args)?;
            let conj = legendre_fenchel(&f, &linspace(-p_max, *p_max, *p_points))?;
            let mut csv = String::from("p,H,argmax,truncated\n");
            for i in 0..conj.dual.len() {
                csv.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{}\n",
                    conj.dual[i], conj.values[i], conj.argmax[i], conj.truncated[i]
                ));
            }
            Ok(Outcome::new(&conj, true).with_table("conjugate.csv", csv))
        }
        Command::Dbr {
            problem,
            variant,
            lattice,
        } => {
            let v = DbrVariant::parse(variant)
                .ok_or_else(|| RunError::Usage(format!("unknown dbr variant `{variant}`")))?;
            let (p, hash) = load(problem)?;
            let r = solve(&p, lattice)?;
            let cfg = DbrConfig::default();
            let l = &p.lagrangian;
            let report = match v {
                DbrVariant::Erdmann => Ok(erdmann_interval_test(
                    &build_pipeline(&r.trajectory, l, &cfg.v_grid)?,
                    &cfg,
                )),
                DbrVariant::Convexified => dbr_convexified(&r.trajectory, l, &cfg),
                DbrVariant::Subdifferential => dbr_subdifferential(&r.trajectory, l, &cfg),
                DbrVariant::Clarke => dbr_clarke(&r.trajectory, l, &cfg),
                DbrVariant::Superdifferential => dbr_superdifferential(&r.trajectory, l, &cfg),
            };
            let out = match report {
                Ok(rep) => Outcome::new(&rep, rep.passed),
                Err(e) => finding(e, json!({ "variant": variant }))?,
            };
            Ok(out
                .with_table("trajectory.csv", trajectory_csv(&r.trajectory))
                .with_hash(hash))
        }
        Command::Bound { problem, lattice } => {
            let (p, hash) = load(problem)?;
            if p.bounds.is_none() {
                return Err(RunError::Usage(
                    "bound needs a problem with `bounds`".into(),
                ));
            }
            let trace = match lipschitz_bound_for(&p) {
                Ok(t) => t,
                Err(e) => return Ok(finding(e, json!({}))?.with_hash(hash)),
            };
            let r = solve(&p, lattice)?;
            let out = match verify_bound(&p, &r.trajectory, &trace) {
                Ok(check) => Outcome::new(&json!({ "trace": trace, "check": check }), check.passed),
                Err(e) => finding(e, json!({ "trace": trace }))?,
            };
            Ok(out.with_hash(hash))
        }
        Command::Value { problem, grid } => {
            let (p, hash) = load(problem)?;
            let (v, x) = value_grid(&p, grid)?;
            let attain = check_initial_attainment(&v, 2e-2);
            let report = json!({
                "horizon": v.config.horizon,
                "x": x,
                "value": v.eval(v.config.horizon, x),
                "tau": v.tau(),
                "dx": v.dx(),
                "initial_attainment": attain,
            });
            Ok(Outcome::new(&report, attain.passed)
                .with_table("value.csv", v.to_csv())
                .with_hash(hash))
        }
        Command::Hj { problem, grid } => {
            let (p, hash) = load(problem)?;
            let (v, _) = value_grid(&p, grid)?;
            let est = RelaxedEstimator::new(p.lagrangian.clone(), RelaxedConfig::default())?;
            // Interior region away from the initial layer and the lattice edge.
            let region = Region {
                t_min: 0.25 * v.config.horizon,
                t_max: v.config.horizon,
                x_min: -0.5 * grid.half_width,
                x_max: 0.5 * grid.half_width,
            };
            let cfg = HjConfig {
                region: Some(region),
                ..HjConfig::default()
            };
            let r = hj_residuals(&v, &est, &cfg)?;
            let passed = r.super_pass_fraction >= 0.99 && r.sub_pass_fraction >= 0.99;
            Ok(Outcome::new(&r, passed).with_hash(hash))
        }
        Command::Inclusion { problem, grid } => {
            let (p, hash) = load(problem)?;
            let (v, x) = value_grid(&p, grid)?;
            let traj = v.extract_minimizer(x)?;
            let r = inclusion_check(&traj, &v, &InclusionConfig::default())?;
            Ok(Outcome::new(&r, r.minimizer)
                .with_table("trajectory.csv", trajectory_csv(&traj))
                .with_hash(hash))
        }
    }
}
