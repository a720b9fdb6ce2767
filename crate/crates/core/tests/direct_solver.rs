use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varcalc::direct::{
    refine_local, reparametrization_gain, solve_lagrange_dp, AxisGrid, SolverConfig, StateLattice,
};
use varcalc::lagrangian::{
    evaluate_action, lagrangian, GrowthGauge, LagrangianFlags, LagrangianSpec, ProblemInstance,
    Trajectory,
};

const NAMES: [&str; 5] = [
    "quadratic",
    "double_well",
    "double_well_x2",
    "abs",
    "piecewise_x",
];

fn problem(name: &str, xa: f64, xb: f64) -> ProblemInstance {
    ProblemInstance::lagrange(lagrangian(name, 1).unwrap(), 0.0, 1.0, vec![xa], vec![xb]).unwrap()
}

fn enumerate_min(p: &ProblemInstance, cfg: &SolverConfig) -> f64 {
    let lattice = StateLattice::new(&cfg.axes);
    let m = lattice.len();
    let (start, _) = lattice.snap(&[p_endpoint(p, true)], "xa").unwrap();
    let (goal, _) = lattice.snap(&[p_endpoint(p, false)], "xb").unwrap();
    let n = cfg.steps;
    let mut idx = vec![0usize; n - 1];
    let mut best = f64::INFINITY;
    loop {
        let mut states = vec![lattice.node(start)];
        states.extend(idx.iter().map(|&k| lattice.node(k)));
        states.push(lattice.node(goal));
        let traj = Trajectory::on_interval(0.0, 1.0, states).unwrap();
        best = best.min(evaluate_action(&traj, &p.lagrangian).unwrap().value());
        let mut d = 0;
        loop {
            if d == idx.len() {
                return best;
            }
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn p_endpoint(p: &ProblemInstance, start: bool) -> f64 {
    match &p.kind {
        varcalc::lagrangian::ProblemKind::Lagrange { xa, xb, .. } => {
            if start {
                xa[0]
            } else {
                xb[0]
            }
        }
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn dp_matches_exhaustive_enumeration(
        which in 0usize..5,
        steps in 2usize..=5,
        res in 3usize..=9,
        xa in -1.0f64..1.0,
        xb in -1.0f64..1.0,
    ) {
        let p = problem(NAMES[which], xa, xb);
        let cfg = SolverConfig::for_problem(&p, steps, res).unwrap();
        let r = solve_lagrange_dp(&p, &cfg).unwrap();
        prop_assert_eq!(r.action, enumerate_min(&p, &cfg));
        prop_assert_eq!(r.action, evaluate_action(&r.trajectory, &p.lagrangian).unwrap().value());
    }
}

#[test]
fn dp_matches_enumeration_at_six_steps() {
    for name in NAMES {
        let p = problem(name, 0.0, 0.5);
        let cfg = SolverConfig::for_problem(&p, 6, 7).unwrap();
        assert_eq!(
            solve_lagrange_dp(&p, &cfg).unwrap().action,
            enumerate_min(&p, &cfg),
            "{name}"
        );
    }
}

#[test]
fn constant_lagrangian_action_is_interval_length() {
    let one = LagrangianSpec::new(
        "one",
        1,
        Arc::new(|_: &[f64], _: &[f64]| 1.0),
        GrowthGauge::radial(1, |_| 0.0),
        Arc::new(|_| 1.0),
        LagrangianFlags::default(),
    );
    let p = ProblemInstance::lagrange(one, 0.0, 1.0, vec![0.0], vec![0.25]).unwrap();
    let cfg = SolverConfig::for_problem(&p, 64, 33).unwrap();
    assert_eq!(solve_lagrange_dp(&p, &cfg).unwrap().action, 1.0);
}

fn double_well_result() -> (ProblemInstance, SolverConfig, varcalc::direct::SolveResult) {
    let p = problem("double_well", 0.0, 0.0);
    // spacing 2/128 = 1/64 = h, so slopes +-1 are on the lattice
    let cfg = SolverConfig::for_problem(&p, 64, 129).unwrap();
    let r = solve_lagrange_dp(&p, &cfg).unwrap();
    (p, cfg, r)
}

#[test]
fn double_well_sawtooth_is_found() {
    let (p, _, r) = double_well_result();
    // oracle: zigzag with slopes +1 then -1 costs exactly 0
    let saw = Trajectory::from_fn(0.0, 1.0, 64, |t| 0.125 - (t % 0.25 - 0.125).abs()).unwrap();
    assert_eq!(evaluate_action(&saw, &p.lagrangian).unwrap().value(), 0.0);
    assert!(r.action <= 1e-2);
    assert!(r.trajectory.slopes().iter().all(|u| u[0].abs() == 1.0));
}

#[test]
fn refinement_never_increases_action() {
    let (p, cfg, r) = double_well_result();
    let refined = refine_local(&r, &p.lagrangian, &[cfg.axes[0].spacing()], 3).unwrap();
    assert!(refined.action <= r.action);

    let q = problem("quadratic", 0.0, 1.0);
    let coarse = SolverConfig::for_problem(&q, 10, 21).unwrap();
    let rq = solve_lagrange_dp(&q, &coarse).unwrap();
    let refined = refine_local(&rq, &q.lagrangian, &[coarse.axes[0].spacing()], 2).unwrap();
    assert!(refined.action <= rq.action);
    assert_eq!(
        refined.action,
        evaluate_action(&refined.trajectory, &q.lagrangian)
            .unwrap()
            .value()
    );
    assert_eq!(refined.trajectory.state(0), rq.trajectory.state(0));
    assert_eq!(refined.trajectory.state(10), rq.trajectory.state(10));
}

#[test]
fn refinement_band() {
    for name in ["quadratic", "double_well", "abs"] {
        let p = problem(name, 0.0, 1.0);
        let c1 = SolverConfig::for_problem(&p, 8, 33).unwrap();
        let c2 = SolverConfig::for_problem(&p, 16, 65).unwrap();
        let a1 = solve_lagrange_dp(&p, &c1).unwrap().action;
        let a2 = solve_lagrange_dp(&p, &c2).unwrap().action;
        let r_grid = 1.5_f64;
        let band = 2.0 * p.lagrangian.local_bound(r_grid) / 8.0;
        assert!(a2 <= a1 + band, "{name}: {a2} vs {a1}");
    }
}

#[test]
fn dp_minimizers_resist_random_reparametrization() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in ["quadratic", "double_well_x2", "abs"] {
        let p = problem(name, 0.0, 1.0);
        let cfg = SolverConfig::for_problem(&p, 20, 81).unwrap();
        let traj = solve_lagrange_dp(&p, &cfg).unwrap().trajectory;
        let n = traj.intervals();
        for _ in 0..1000 {
            let eps: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let mean = eps.iter().sum::<f64>() / n as f64;
            let mut psi: Vec<f64> = eps.iter().map(|e| 1.0 + e - mean).collect();
            // push rounding residue into the last slope
            let h = traj.step();
            let head: f64 = psi[..n - 1].iter().map(|v| v * h).sum();
            psi[n - 1] = (1.0 - head) / h;
            match reparametrization_gain(&traj, &p.lagrangian, &psi) {
                Ok(gain) => assert!(gain >= -1e-9, "{name}: {gain}"),
                Err(varcalc::Error::MassMismatch { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}

#[test]
fn two_dimensional_lattice() {
    let l = lagrangian("quadratic", 2).unwrap();
    let p = ProblemInstance::lagrange(l, 0.0, 1.0, vec![0.0, 0.0], vec![1.0, -1.0]).unwrap();
    let ax = AxisGrid {
        center: 0.0,
        half_width: 1.0,
        resolution: 9,
    };
    let cfg = SolverConfig::new(4, vec![ax, ax]).unwrap();
    let r = solve_lagrange_dp(&p, &cfg).unwrap();
    assert!((r.action - 2.0).abs() < 1e-12);
}
