use std::path::Path;

use serde::Serialize;

use crate::commands::{Outcome, RunError};
use crate::Command;

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a Command,
    problem_hash: Option<&'a str>,
    tool_version: &'static str,
    wall_time_s: f64,
    outputs: &'a [String],
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))
}

/// Writes `report.json`, the tables and `manifest.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    command: &Command,
    outcome: &mut Outcome,
    wall_time_s: f64,
) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Usage(format!("{}: {e}", dir.display())))?;
    write(dir, "report.json", &outcome.report)?;
    outcome.outputs.push("report.json".into());
    for (name, contents) in &outcome.tables {
        write(dir, name, contents)?;
        outcome.outputs.push((*name).into());
    }
    outcome.outputs.push("manifest.json".into());
    let manifest = RunManifest {
        command,
        problem_hash: outcome.problem_hash.as_deref(),
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_time_s,
        outputs: &outcome.outputs,
    };
    write(
        dir,
        "manifest.json",
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
}
