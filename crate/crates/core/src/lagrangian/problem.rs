//! JSON problem documents.
//!
//! ```json
//! {"kind": "lagrange", "lagrangian": "quadratic", "a": 0, "b": 1, "xa": [0], "xb": [1]}
//! {"kind": "bolza", "lagrangian": {"name": "w", "n": 1, "expr-id": "double_well"},
//!  "t": 1, "x": [0.5], "phi": "quadratic_phi", "bounds": {"A": 1, "B": 1, "alpha": 1, "beta": 1}}
//! ```

use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

use super::catalog::{lagrangian, terminal_cost};
use super::{LagrangianSpec, TerminalCost};
use crate::error::{Error, Result};

/// Data bounds `A, B, alpha, beta` of the a-priori Lipschitz estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataBounds {
    #[serde(rename = "A")]
    pub inf_norm: f64,
    #[serde(rename = "B")]
    pub action: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub enum ProblemKind {
    /// Fixed endpoints on `[a, b]`.
    Lagrange {
        a: f64,
        b: f64,
        xa: Vec<f64>,
        xb: Vec<f64>,
    },
    /// Free endpoint with terminal cost, horizon `t`, start `x`.
    Bolza {
        horizon: f64,
        x: Vec<f64>,
        terminal: TerminalCost,
    },
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub kind: ProblemKind,
    pub lagrangian: LagrangianSpec,
    pub bounds: Option<DataBounds>,
}

impl ProblemInstance {
    pub fn lagrange(
        lagrangian: LagrangianSpec,
        a: f64,
        b: f64,
        xa: Vec<f64>,
        xb: Vec<f64>,
    ) -> Result<Self> {
        let p = ProblemInstance {
            kind: ProblemKind::Lagrange { a, b, xa, xb },
            lagrangian,
            bounds: None,
        };
        p.validate("")?;
        Ok(p)
    }

    pub fn bolza(
        lagrangian: LagrangianSpec,
        horizon: f64,
        x: Vec<f64>,
        terminal: TerminalCost,
    ) -> Result<Self> {
        let p = ProblemInstance {
            kind: ProblemKind::Bolza {
                horizon,
                x,
                terminal,
            },
            lagrangian,
            bounds: None,
        };
        p.validate("")?;
        Ok(p)
    }

    pub fn with_bounds(mut self, bounds: DataBounds) -> Result<Self> {
        self.bounds = Some(bounds);
        self.validate("")?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ProblemKind::Lagrange { .. } => "lagrange",
            ProblemKind::Bolza { .. } => "bolza",
        }
    }

    fn validate(&self, root: &str) -> Result<()> {
        let schema = |field: &str, message: String| Error::Schema {
            pointer: format!("{root}/{field}"),
            message,
        };
        let n = self.dim();
        match &self.kind {
            ProblemKind::Lagrange { a, b, xa, xb } => {
                if !(a < b) {
                    return Err(schema("b", format!("need a < b, got a={a}, b={b}")));
                }
                if xa.len() != n {
                    return Err(schema("xa", format!("expected {n} components")));
                }
                if xb.len() != n {
                    return Err(schema("xb", format!("expected {n} components")));
                }
                if let Some(bd) = &self.bounds {
                    let len = b - a;
                    if !(bd.alpha <= len && len <= bd.beta) {
                        return Err(schema(
                            "bounds",
                            format!(
                                "need alpha <= b-a <= beta, got {} <= {len} <= {}",
                                bd.alpha, bd.beta
                            ),
                        ));
                    }
                }
            }
            ProblemKind::Bolza {
                horizon,
                x,
                terminal,
            } => {
                if !(*horizon > 0.0) {
                    return Err(schema("t", "horizon must be positive".into()));
                }
                if x.len() != n {
                    return Err(schema("x", format!("expected {n} components")));
                }
                if !terminal.eval(terminal.witness()).is_finite() {
                    return Err(schema("phi", "terminal cost has no finite witness".into()));
                }
            }
        }
        if let Some(bd) = &self.bounds {
            for (name, v) in [
                ("A", bd.inf_norm),
                ("B", bd.action),
                ("alpha", bd.alpha),
                ("beta", bd.beta),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(schema(
                        &format!("bounds/{name}"),
                        "must be a nonnegative number".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str, root: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| Error::Schema {
        pointer: format!("{root}/{name}"),
        message: "missing field".into(),
    })
}

fn number(obj: &Map<String, Value>, name: &str, root: &str) -> Result<f64> {
    field(obj, name, root)?
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Schema {
            pointer: format!("{root}/{name}"),
            message: "expected a number".into(),
        })
}

fn vector(obj: &Map<String, Value>, name: &str, root: &str) -> Result<Vec<f64>> {
    let arr = field(obj, name, root)?
        .as_array()
        .ok_or_else(|| Error::Schema {
            pointer: format!("{root}/{name}"),
            message: "expected an array of numbers".into(),
        })?;
    if arr.is_empty() {
        return Err(Error::Schema {
            pointer: format!("{root}/{name}"),
            message: "empty state vector".into(),
        });
    }
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64().ok_or_else(|| Error::Schema {
                pointer: format!("{root}/{name}/{i}"),
                message: "expected a number".into(),
            })
        })
        .collect()
}

fn resolve_lagrangian(value: &Value, dim: usize) -> Result<LagrangianSpec> {
    match value {
        Value::String(name) => lagrangian(name, dim),
        Value::Object(inline) => {
            let root = "/lagrangian";
            let expr = field(inline, "expr-id", root)?
                .as_str()
                .ok_or_else(|| Error::Schema {
                    pointer: format!("{root}/expr-id"),
                    message: "expected a string".into(),
                })?;
            let n = field(inline, "n", root)?
                .as_u64()
                .ok_or_else(|| Error::Schema {
                    pointer: format!("{root}/n"),
                    message: "expected a positive integer".into(),
                })? as usize;
            if n != dim {
                return Err(Error::Schema {
                    pointer: format!("{root}/n"),
                    message: format!("n = {n} but states have {dim} components"),
                });
            }
            let spec = lagrangian(expr, n)?;
            match inline.get("name").and_then(Value::as_str) {
                Some(label) => Ok(LagrangianSpec::new(
                    label,
                    n,
                    spec.evaluator(),
                    spec.gauge().clone(),
                    spec.local_bound_fn(),
                    spec.flags,
                )),
                None => Ok(spec),
            }
        }
        _ => Err(Error::Schema {
            pointer: "/lagrangian".into(),
            message: "expected a catalog name or an inline spec".into(),
        }),
    }
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str) -> Result<ProblemInstance> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Schema {
        pointer: String::new(),
        message: format!("invalid JSON: {e}"),
    })?;
    let obj = doc.as_object().ok_or_else(|| Error::Schema {
        pointer: String::new(),
        message: "expected an object".into(),
    })?;
    let kind = field(obj, "kind", "")?
        .as_str()
        .ok_or_else(|| Error::Schema {
            pointer: "/kind".into(),
            message: "expected \"lagrange\" or \"bolza\"".into(),
        })?;
    let lag_value = field(obj, "lagrangian", "")?;
    let (kind, dim) = match kind {
        "lagrange" => {
            let a = number(obj, "a", "")?;
            let b = number(obj, "b", "")?;
            let xa = vector(obj, "xa", "")?;
            let xb = vector(obj, "xb", "")?;
            let dim = xa.len();
            (ProblemKind::Lagrange { a, b, xa, xb }, dim)
        }
        "bolza" => {
            let horizon = number(obj, "t", "")?;
            let x = vector(obj, "x", "")?;
            let dim = x.len();
            let phi_name = field(obj, "phi", "")?
                .as_str()
                .ok_or_else(|| Error::Schema {
                    pointer: "/phi".into(),
                    message: "expected a terminal cost name".into(),
                })?;
            let terminal = terminal_cost(phi_name, dim)?;
            (
                ProblemKind::Bolza {
                    horizon,
                    x,
                    terminal,
                },
                dim,
            )
        }
        other => {
            return Err(Error::Schema {
                pointer: "/kind".into(),
                message: format!("unknown kind `{other}`"),
            })
        }
    };
    let lagrangian = resolve_lagrangian(lag_value, dim)?;
    let bounds = match obj.get("bounds") {
        None | Some(Value::Null) => None,
        Some(Value::Object(b)) => Some(DataBounds {
            inf_norm: number(b, "A", "/bounds")?,
            action: number(b, "B", "/bounds")?,
            alpha: number(b, "alpha", "/bounds")?,
            beta: number(b, "beta", "/bounds")?,
        }),
        Some(_) => {
            return Err(Error::Schema {
                pointer: "/bounds".into(),
                message: "expected an object".into(),
            })
        }
    };
    let p = ProblemInstance {
        kind,
        lagrangian,
        bounds,
    };
    p.validate("")?;
    Ok(p)
}

/// Reads and parses a problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Schema {
        pointer: String::new(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_problem(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lagrange_document() {
        let p = parse_problem(
            r#"{"kind":"lagrange","lagrangian":"quadratic","a":0,"b":1,"xa":[0],"xb":[1]}"#,
        )
        .unwrap();
        assert_eq!(p.kind_name(), "lagrange");
        assert_eq!(p.lagrangian.name(), "quadratic");
        match p.kind {
            ProblemKind::Lagrange {
                a,
                b,
                ref xa,
                ref xb,
            } => {
                assert_eq!((a, b), (0.0, 1.0));
                assert_eq!((xa.as_slice(), xb.as_slice()), (&[0.0][..], &[1.0][..]));
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn missing_b_points_at_b() {
        let err = parse_problem(
            r#"{"kind":"lagrange","lagrangian":"quadratic","a":0,"xa":[0],"xb":[1]}"#,
        )
        .unwrap_err();
        match err {
            Error::Schema { pointer, .. } => assert_eq!(pointer, "/b"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn catalog_metadata_is_resolved() {
        let p = parse_problem(
            r#"{"kind":"lagrange","lagrangian":"double_well_x2","a":0,"b":1,"xa":[0],"xb":[0]}"#,
        )
        .unwrap();
        assert!(!p.lagrangian.flags.convex_in_u);
        assert!(p.lagrangian.flags.differentiable_in_u);
    }

    #[test]
    fn inline_spec_and_bolza() {
        let p = parse_problem(
            r#"{"kind":"bolza","lagrangian":{"name":"w","n":1,"expr-id":"double_well"},
                "t":1,"x":[0.5],"phi":"quadratic_phi","bounds":{"A":1,"B":2,"alpha":1,"beta":1}}"#,
        )
        .unwrap();
        assert_eq!(p.lagrangian.name(), "w");
        assert_eq!(p.bounds.unwrap().action, 2.0);
    }

    #[test]
    fn unknown_lagrangian_and_bad_types() {
        assert_eq!(
            parse_problem(
                r#"{"kind":"lagrange","lagrangian":"nope","a":0,"b":1,"xa":[0],"xb":[1]}"#
            )
            .unwrap_err(),
            Error::UnknownLagrangian("nope".into())
        );
        let err = parse_problem(
            r#"{"kind":"lagrange","lagrangian":"quadratic","a":0,"b":1,"xa":["z"],"xb":[1]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema { ref pointer, .. } if pointer == "/xa/0"));
        let err = parse_problem(
            r#"{"kind":"lagrange","lagrangian":"quadratic","a":1,"b":0,"xa":[0],"xb":[1]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema { ref pointer, .. } if pointer == "/b"));
    }

    #[test]
    fn bounds_must_bracket_interval_length() {
        let err = parse_problem(
            r#"{"kind":"lagrange","lagrangian":"quadratic","a":0,"b":1,"xa":[0],"xb":[1],
                "bounds":{"A":1,"B":1,"alpha":2,"beta":3}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema { ref pointer, .. } if pointer == "/bounds"));
    }
}
