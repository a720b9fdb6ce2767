//! Explicit a-priori Lipschitz bound for minimizers and its empirical check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lagrangian::{
    evaluate_action, norm, BoundFn, DataBounds, GrowthGauge, ProblemInstance, ProblemKind,
    Trajectory,
};

/// Constants of the bound, in order of computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundTrace {
    /// Bound on the total variation of a minimizer.
    pub m1: f64,
    /// `A + M1`, bound on the sup norm.
    pub r: f64,
    /// Speed below which a minimizer spends a set of positive measure.
    pub m2: f64,
    /// Lower bound of the DuBois-Reymond constant, `-3 Psi(R + 2 M2)`.
    pub c_lb: f64,
    /// `Psi(R + 1)`.
    pub m: f64,
    pub big_c: f64,
    pub k: f64,
}

impl BoundTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Traces the constants on the certificate levels of `gauge`.
///
/// `|u| <= s + Theta(u)/rho(s)` integrates to `M1 = min_s s*beta + B/rho(s)`;
/// `Theta(u) >= rho(s) s` on `|u| >= s` gives `M2`; and the coercivity
/// inequality `min(c, 0) + coTheta(|u|)/|u| <= M` is inverted on the
/// convexified radial profile to get `C`.
pub fn lipschitz_bound(
    gauge: &GrowthGauge,
    psi: &BoundFn,
    bounds: &DataBounds,
) -> Result<BoundTrace> {
    let DataBounds {
        inf_norm: a,
        action: b,
        alpha,
        beta,
    } = *bounds;
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha = {alpha} must be positive"
        )));
    }
    let cert = gauge.certificate();
    if !cert.is_nontrivial() {
        return Err(Error::GaugeTooWeak(
            "superlinearity certificate is flat".into(),
        ));
    }

    let m1 = cert
        .levels
        .iter()
        .zip(&cert.rho)
        .filter(|(_, &rho)| rho > 0.0 || b == 0.0)
        .map(|(&s, &rho)| s * beta + if b == 0.0 { 0.0 } else { b / rho })
        .fold(f64::INFINITY, f64::min);
    let r = a + m1;

    let m2 = cert
        .levels
        .iter()
        .zip(&cert.rho)
        .find(|(&s, &rho)| rho * s > b / alpha)
        .map(|(&s, _)| s)
        .ok_or_else(|| {
            Error::GaugeTooWeak(format!("Theta never exceeds B/alpha = {}", b / alpha))
        })?;

    let c_lb = -3.0 * psi(r + 2.0 * m2);
    let m = psi(r + 1.0);
    if !(c_lb.is_finite() && m.is_finite()) {
        return Err(Error::GaugeTooWeak(
            "local bound is infinite on the needed range".into(),
        ));
    }
    let threshold = m - c_lb.min(0.0);
    let profile = gauge.convexified_profile();
    let last = profile.iter().rposition(|&(s, co)| co / s <= threshold);
    let big_c = match last {
        None => profile[0].0,
        Some(k) if k + 1 == profile.len() => {
            return Err(Error::GaugeTooWeak(format!(
                "coTheta(s)/s stays below {threshold} up to s = {}",
                profile[k].0
            )))
        }
        Some(k) => profile[k + 1].0,
    }
    .max(2.0);
    Ok(BoundTrace {
        m1,
        r,
        m2,
        c_lb,
        m,
        big_c,
        k: big_c,
    })
}

/// Bound for a problem with declared data bounds.
pub fn lipschitz_bound_for(problem: &ProblemInstance) -> Result<BoundTrace> {
    let bounds = problem
        .bounds
        .ok_or_else(|| Error::InvalidConfig("problem declares no data bounds".into()))?;
    let l = &problem.lagrangian;
    lipschitz_bound(l.gauge(), &*l.local_bound_fn(), &bounds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub empirical: f64,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
}

/// Checks the data bounds on `minimizer` and compares its largest slope
/// with `K`.
pub fn verify_bound(
    problem: &ProblemInstance,
    minimizer: &Trajectory,
    trace: &BoundTrace,
) -> Result<BoundReport> {
    let bounds = problem
        .bounds
        .ok_or_else(|| Error::InvalidConfig("problem declares no data bounds".into()))?;
    let fail = |condition: &str, detail: String| Error::HypothesisFailed {
        condition: condition.into(),
        detail,
    };
    let inf_norm = minimizer
        .states()
        .iter()
        .map(|y| norm(y))
        .fold(f64::INFINITY, f64::min);
    if inf_norm > bounds.inf_norm {
        return Err(fail(
            "inf |y| <= A",
            format!("inf |y| = {inf_norm} > A = {}", bounds.inf_norm),
        ));
    }
    let action = evaluate_action(minimizer, &problem.lagrangian)?.value();
    if action > bounds.action {
        return Err(fail(
            "action <= B",
            format!("action = {action} > B = {}", bounds.action),
        ));
    }
    if let ProblemKind::Lagrange { a, b, .. } = problem.kind {
        let len = b - a;
        if !(bounds.alpha <= len && len <= bounds.beta) {
            return Err(fail(
                "alpha <= b - a <= beta",
                format!("{} <= {len} <= {} fails", bounds.alpha, bounds.beta),
            ));
        }
    }
    let empirical = minimizer.empirical_lipschitz();
    Ok(BoundReport {
        empirical,
        bound: trace.k,
        margin: trace.k - empirical,
        passed: empirical <= trace.k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::lagrangian;

    fn unit() -> DataBounds {
        DataBounds {
            inf_norm: 1.0,
            action: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }

    #[test]
    fn quadratic_trace() {
        let l = lagrangian("quadratic", 1).unwrap();
        let t = lipschitz_bound(l.gauge(), &*l.local_bound_fn(), &unit()).unwrap();
        assert!((t.m1 - 2.0).abs() < 1e-2);
        assert_eq!(t.r, 1.0 + t.m1);
        assert!(t.m2 > 1.0 && t.m2 < 1.1);
        assert!(t.c_lb < 0.0);
        assert!(t.k >= 2.0 && t.k.is_finite());
    }

    #[test]
    fn zero_budget() {
        let l = lagrangian("quadratic", 1).unwrap();
        let b = DataBounds {
            action: 0.0,
            ..unit()
        };
        let t = lipschitz_bound(l.gauge(), &*l.local_bound_fn(), &b).unwrap();
        assert!((t.m1 - 1e-3).abs() < 1e-12);
        assert!(t.k >= 2.0 && t.k.is_finite());
    }

    #[test]
    fn flat_gauge_is_rejected() {
        let g = GrowthGauge::radial(1, |s| s);
        assert!(matches!(
            lipschitz_bound(&g, &|r: f64| r, &unit()),
            Err(Error::GaugeTooWeak(_))
        ));
    }
}
