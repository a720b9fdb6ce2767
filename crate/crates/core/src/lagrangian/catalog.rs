//! Builtin Lagrangians and terminal costs with their exact gauges.

use std::sync::Arc;

use super::{norm, GrowthGauge, LagrangianFlags, LagrangianSpec, TerminalCost};
use crate::error::{Error, Result};

/// Names of the builtin Lagrangians, in catalog order.
pub const LAGRANGIANS: [&str; 5] = [
    "quadratic",
    "double_well",
    "double_well_x2",
    "abs",
    "piecewise_x",
];

/// Names of the builtin terminal costs, in catalog order.
pub const TERMINAL_COSTS: [&str; 3] = ["zero", "quadratic_phi", "indicator_point"];

#[derive(Debug, Clone)]
pub enum CatalogEntry {
    Lagrangian(LagrangianSpec),
    Terminal(TerminalCost),
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        match self {
            CatalogEntry::Lagrangian(l) => l.name(),
            CatalogEntry::Terminal(t) => t.name(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CatalogEntry::Lagrangian(_) => "lagrangian",
            CatalogEntry::Terminal(_) => "terminal",
        }
    }
}

/// Every builtin entry, instantiated in dimension one.
pub fn builtin_catalog() -> Vec<CatalogEntry> {
    let mut out: Vec<CatalogEntry> = LAGRANGIANS
        .iter()
        .map(|n| CatalogEntry::Lagrangian(lagrangian(n, 1).expect("builtin")))
        .collect();
    out.extend(
        TERMINAL_COSTS
            .iter()
            .map(|n| CatalogEntry::Terminal(terminal_cost(n, 1).expect("builtin"))),
    );
    out
}

fn sq(x: f64) -> f64 {
    x * x
}

fn well_gauge(s: f64) -> f64 {
    sq((s * s - 1.0).max(0.0))
}

fn well_bound(r: f64) -> f64 {
    sq(r * r - 1.0).max(1.0)
}

/// Builtin Lagrangian `name` in dimension `dim`.
pub fn lagrangian(name: &str, dim: usize) -> Result<LagrangianSpec> {
    if dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    let smooth_nonconvex = LagrangianFlags {
        convex_in_u: false,
        differentiable_in_u: true,
        semiconvex_in_u: true,
        lipschitz_in_u: true,
        radial_in_u: true,
        state_independent: true,
    };
    let spec = match name {
        "quadratic" => LagrangianSpec::new(
            name,
            dim,
            Arc::new(|_x: &[f64], u: &[f64]| sq(norm(u))),
            GrowthGauge::radial(dim, sq),
            Arc::new(sq),
            LagrangianFlags {
                convex_in_u: true,
                ..smooth_nonconvex
            },
        ),
        "double_well" => LagrangianSpec::new(
            name,
            dim,
            Arc::new(|_x: &[f64], u: &[f64]| sq(sq(norm(u)) - 1.0)),
            GrowthGauge::radial(dim, well_gauge),
            Arc::new(well_bound),
            smooth_nonconvex,
        ),
        "double_well_x2" => LagrangianSpec::new(
            name,
            dim,
            Arc::new(|x: &[f64], u: &[f64]| sq(sq(norm(u)) - 1.0) + sq(norm(x))),
            GrowthGauge::radial(dim, well_gauge),
            Arc::new(|r| well_bound(r) + r * r),
            LagrangianFlags {
                state_independent: false,
                ..smooth_nonconvex
            },
        ),
        "abs" => LagrangianSpec::new(
            name,
            dim,
            Arc::new(|_x: &[f64], u: &[f64]| {
                let s = norm(u);
                s + s * s
            }),
            GrowthGauge::radial(dim, |s| s + s * s),
            Arc::new(|r| r + r * r),
            LagrangianFlags {
                convex_in_u: true,
                differentiable_in_u: false,
                ..smooth_nonconvex
            },
        ),
        "piecewise_x" => LagrangianSpec::new(
            name,
            dim,
            Arc::new(|x: &[f64], u: &[f64]| {
                let weight = if x[0] < 0.0 { 2.0 } else { 1.0 };
                sq(norm(u)) * weight
            }),
            GrowthGauge::radial(dim, sq),
            Arc::new(|r| 2.0 * r * r),
            LagrangianFlags {
                convex_in_u: true,
                state_independent: false,
                ..smooth_nonconvex
            },
        ),
        _ => return Err(Error::UnknownLagrangian(name.to_string())),
    };
    Ok(spec)
}

/// Builtin terminal cost `name` in dimension `dim`.
pub fn terminal_cost(name: &str, dim: usize) -> Result<TerminalCost> {
    let origin = vec![0.0; dim];
    let phi = match name {
        "zero" => TerminalCost::new(name, Arc::new(|_x: &[f64]| 0.0), origin),
        "quadratic_phi" => TerminalCost::new(name, Arc::new(|x: &[f64]| sq(norm(x))), origin),
        "indicator_point" => TerminalCost::new(
            name,
            Arc::new(|x: &[f64]| {
                if x.iter().all(|&c| c == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }),
            origin,
        ),
        _ => return Err(Error::UnknownTerminalCost(name.to_string())),
    };
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_all_entries() {
        let cat = builtin_catalog();
        assert_eq!(cat.len(), 8);
        let names: Vec<&str> = cat.iter().map(|e| e.name()).collect();
        assert!(names.contains(&"double_well_x2"));
        assert!(names.contains(&"indicator_point"));
    }

    #[test]
    fn quadratic_gauge_and_bound() {
        let l = lagrangian("quadratic", 1).unwrap();
        assert_eq!(l.gauge().eval(&[3.0]), 9.0);
        assert_eq!(l.local_bound(2.5), 6.25);
    }

    #[test]
    fn piecewise_x_formula() {
        let l = lagrangian("piecewise_x", 1).unwrap();
        assert_eq!(l.eval(&[-1.0], &[2.0]), 8.0);
        assert_eq!(l.eval(&[1.0], &[2.0]), 4.0);
    }

    #[test]
    fn double_well_bottom() {
        let l = lagrangian("double_well", 2).unwrap();
        let u = [0.6, 0.8];
        assert!(l.eval(&[0.0, 0.0], &u).abs() < 1e-15);
        assert_eq!(l.eval(&[0.0], &[1.0]), 0.0);
    }

    #[test]
    fn double_well_x2_flags() {
        let l = lagrangian("double_well_x2", 1).unwrap();
        assert!(!l.flags.convex_in_u);
        assert!(l.flags.differentiable_in_u);
    }

    #[test]
    fn unknown_names() {
        assert_eq!(
            lagrangian("nope", 1).unwrap_err(),
            Error::UnknownLagrangian("nope".into())
        );
        assert!(terminal_cost("nope", 1).is_err());
    }

    #[test]
    fn indicator_point_is_finite_only_at_origin() {
        let phi = terminal_cost("indicator_point", 1).unwrap();
        assert_eq!(phi.eval(phi.witness()), 0.0);
        assert!(phi.eval(&[0.1]).is_infinite());
    }

    /// L >= Theta and L <= Psi(max(|x|,|u|)) on a 101x101 grid over [-5,5]^2.
    #[test]
    fn gauge_and_local_bound_hold_on_sample_grid() {
        for name in LAGRANGIANS {
            let l = lagrangian(name, 1).unwrap();
            for i in 0..=100 {
                let x = -5.0 + 10.0 * i as f64 / 100.0;
                for j in 0..=100 {
                    let u = -5.0 + 10.0 * j as f64 / 100.0;
                    let v = l.eval(&[x], &[u]);
                    assert!(v >= 0.0, "{name} negative at ({x},{u})");
                    assert!(v >= l.gauge().eval(&[u]), "{name}: L < Theta at ({x},{u})");
                    let r = x.abs().max(u.abs());
                    assert!(v <= l.local_bound(r), "{name}: L > Psi at ({x},{u})");
                }
            }
        }
    }

    #[test]
    fn catalog_certificates_are_nontrivial() {
        for name in LAGRANGIANS {
            let c = lagrangian(name, 1).unwrap().gauge().certificate().clone();
            assert!(c.is_nondecreasing(), "{name}");
            assert!(c.is_nontrivial(), "{name}");
        }
    }
}
