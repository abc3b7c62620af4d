//! The report command: render the scores a run manifest records.

use std::fmt::Write as _;

use xltime_core::config::RunManifest;
use xltime_core::eval::MeanReport;

use crate::run::{LoadedRun, RunDirs};
use crate::CliError;

/// Renders the recorded scores of a run, as a text table or as JSON.
pub fn cmd_report(loaded: &LoadedRun, json: bool) -> Result<String, CliError> {
    let manifest = match &loaded.source_manifest {
        Some(m) => m.clone(),
        None => {
            let dirs = RunDirs::new(&loaded.config.output_dir);
            if !dirs.manifest.exists() {
                return Err(CliError::Data(format!(
                    "no manifest at {}: train first",
                    dirs.manifest.display()
                )));
            }
            RunManifest::load(&dirs.manifest)?
        }
    };
    if manifest.runs.is_empty() {
        return Err(CliError::Data(
            "the manifest records no training runs: train first".to_string(),
        ));
    }
    if json {
        Ok(render_json(&manifest))
    } else {
        Ok(render_text(&manifest))
    }
}

fn render_json(manifest: &RunManifest) -> String {
    let value = serde_json::json!({
        "target_language": manifest.config.target_language,
        "source_languages": manifest.config.source_languages,
        "runs": manifest
            .runs
            .iter()
            .map(|r| {
                serde_json::json!({
                    "seed": r.seed,
                    "checkpoint": r.checkpoint,
                    "with_type": r.with_type.to_report_json(),
                    "without_type": r.without_type.to_report_json(),
                })
            })
            .collect::<Vec<_>>(),
        "mean_with_type": manifest.mean_with_type.as_ref().map(|m| m.to_report_json()),
        "mean_without_type": manifest.mean_without_type.as_ref().map(|m| m.to_report_json()),
    });
    serde_json::to_string_pretty(&value).expect("report serializes") + "\n"
}

fn render_text(manifest: &RunManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "target {}  sources {}  runs {}",
        manifest.config.target_language,
        manifest.config.source_languages.join("+"),
        manifest.runs.len()
    );
    let _ = writeln!(
        out,
        "{:<10} {:>18} {:>15}",
        "", "without-type F1", "with-type F1"
    );
    for run in &manifest.runs {
        let _ = writeln!(
            out,
            "seed {:<5} {:>18.4} {:>15.4}",
            run.seed, run.without_type.f1, run.with_type.f1
        );
    }
    let cell = |m: &Option<MeanReport>| match m {
        Some(m) => format!("{:.4}", m.f1),
        None => "-".to_string(),
    };
    let _ = writeln!(
        out,
        "{:<10} {:>18} {:>15}",
        "mean",
        cell(&manifest.mean_without_type),
        cell(&manifest.mean_with_type)
    );
    out
}
