use varcalc::direct::{solve_lagrange_dp, SolverConfig};
use varcalc::lagrangian::{evaluate_action, lagrangian, DataBounds, ProblemInstance, Trajectory};
use varcalc::regularity::{lipschitz_bound, lipschitz_bound_for, verify_bound};
use varcalc::Error;

fn bounds(a: f64, b: f64, alpha: f64, beta: f64) -> DataBounds {
    DataBounds {
        inf_norm: a,
        action: b,
        alpha,
        beta,
    }
}

#[test]
fn quadratic_trace_matches_closed_form_oracle() {
    let levels: Vec<f64> = (0..=280)
        .map(|k| 1e-3 * 10f64.powf(k as f64 / 40.0))
        .collect();
    // Theta = s^2: rho(s) = s, coTheta = Theta
    let m1 = levels
        .iter()
        .map(|s| s + 1.0 / s)
        .fold(f64::INFINITY, f64::min);
    let r = 1.0 + m1;
    let m2 = *levels.iter().find(|&&s| s * s > 1.0).unwrap();
    let c_lb = -3.0 * (r + 2.0 * m2).powi(2);
    let m = (r + 1.0).powi(2);
    let thr = m - c_lb;
    let last = levels.iter().rposition(|&s| s <= thr).unwrap();
    let k = levels[last + 1].max(2.0);

    let l = lagrangian("quadratic", 1).unwrap();
    let t = lipschitz_bound(l.gauge(), &*l.local_bound_fn(), &bounds(1.0, 1.0, 1.0, 1.0)).unwrap();
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + y.abs());
    assert!(close(t.m1, m1) && close(t.r, r) && close(t.m2, m2));
    assert!(
        close(t.c_lb, c_lb) && close(t.m, m) && close(t.k, k),
        "{t:?} vs K={k}"
    );
}

#[test]
fn monotone_in_data_and_gauge() {
    let l = lagrangian("double_well", 1).unwrap();
    let psi = l.local_bound_fn();
    let k = |d: DataBounds| lipschitz_bound(l.gauge(), &*psi, &d).unwrap().k;
    for w in [0.5, 1.0, 2.0].windows(2) {
        assert!(k(bounds(1.0, w[0], 1.0, 1.0)) <= k(bounds(1.0, w[1], 1.0, 1.0)));
        assert!(k(bounds(1.0, 1.0, 0.5, w[0])) <= k(bounds(1.0, 1.0, 0.5, w[1])));
        assert!(k(bounds(w[0], 1.0, 1.0, 1.0)) <= k(bounds(w[1], 1.0, 1.0, 1.0)));
    }
    let d = bounds(1.0, 1.0, 1.0, 1.0);
    let ks: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&f| {
            let base = psi.clone();
            let psi_f = move |r: f64| f * base(r);
            lipschitz_bound(l.gauge(), &psi_f, &d).unwrap().k
        })
        .collect();
    assert!(ks[0] <= ks[1] && ks[1] <= ks[2]);
    let kg: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&f| lipschitz_bound(&l.gauge().scaled(f), &*psi, &d).unwrap().k)
        .collect();
    assert!(kg[0] >= kg[1] && kg[1] >= kg[2]);
}

fn with_exact_bounds(name: &str, xb: f64) -> (ProblemInstance, Trajectory) {
    let l = lagrangian(name, 1).unwrap();
    let p = ProblemInstance::lagrange(l, 0.0, 1.0, vec![0.0], vec![xb]).unwrap();
    let cfg = SolverConfig::for_problem(&p, 64, 129).unwrap();
    let r = solve_lagrange_dp(&p, &cfg).unwrap();
    let b = bounds(0.0, r.action, 1.0, 1.0);
    (p.with_bounds(b).unwrap(), r.trajectory)
}

#[test]
fn bound_is_sound_on_catalog_minimizers() {
    for name in [
        "quadratic",
        "double_well",
        "double_well_x2",
        "abs",
        "piecewise_x",
    ] {
        for xb in [0.0, 1.0] {
            let (p, traj) = with_exact_bounds(name, xb);
            let trace = lipschitz_bound_for(&p).unwrap();
            let rep = verify_bound(&p, &traj, &trace).unwrap();
            assert!(trace.k >= 2.0 && trace.k.is_finite());
            assert!(rep.passed && rep.margin >= 0.0, "{name} {xb}: {rep:?}");
        }
    }
}

#[test]
fn sawtooth_double_well_passes() {
    let l = lagrangian("double_well", 1).unwrap();
    let saw = Trajectory::from_fn(0.0, 1.0, 64, |t| 0.125 - (t % 0.25 - 0.125).abs()).unwrap();
    let p = ProblemInstance::lagrange(l, 0.0, 1.0, vec![0.0], vec![0.0])
        .unwrap()
        .with_bounds(bounds(0.0, 0.0, 1.0, 1.0))
        .unwrap();
    let rep = verify_bound(&p, &saw, &lipschitz_bound_for(&p).unwrap()).unwrap();
    assert_eq!(rep.empirical, 1.0);
    assert!(rep.passed);
}

#[test]
fn understated_action_budget_is_a_hypothesis_failure() {
    let (p, traj) = with_exact_bounds("quadratic", 1.0);
    let action = evaluate_action(&traj, &p.lagrangian).unwrap().value();
    let wrong = p
        .clone()
        .with_bounds(bounds(0.0, action / 2.0, 1.0, 1.0))
        .unwrap();
    let trace = lipschitz_bound_for(&wrong).unwrap();
    match verify_bound(&wrong, &traj, &trace) {
        Err(Error::HypothesisFailed { condition, .. }) => assert_eq!(condition, "action <= B"),
        other => panic!("{other:?}"),
    }
}
