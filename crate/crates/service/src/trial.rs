//! Crowd-only trials logged to a directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use telewalk_core::crowd::{run_trial_logged, Scenario, TrialMetrics};

use crate::log::{write_json, LogKind, Manifest};
use crate::replay::ReplayReport;
use crate::Result;

fn run_into<W: std::io::Write>(scenario: &Scenario, seed: u64, writer: &mut csv::Writer<W>) -> Result<TrialMetrics> {
    let costs = vec![0.0; scenario.gates.len()];
    Ok(run_trial_logged(scenario, &scenario.gate_choice, &costs, seed, "grid", Some(writer))?)
}

/// Runs one trial and writes `manifest.json`, `trajectory.csv` and
/// `metrics.json` into `dir`.
pub fn run_trial_dir(scenario: &Scenario, seed: u64, dir: &Path) -> Result<TrialMetrics> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest {
        kind: LogKind::Trial,
        scenario: scenario.clone(),
        session: None,
        participant: None,
        seed,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("trajectory.csv"))?));
    let metrics = run_into(scenario, seed, &mut writer)?;
    drop(writer);
    write_json(&dir.join("metrics.json"), &metrics)?;
    Ok(metrics)
}

/// Re-runs a logged trial and compares the trajectory bytes.
pub fn verify_trial(dir: &Path, manifest: &Manifest) -> Result<ReplayReport> {
    let logged = std::fs::read(dir.join("trajectory.csv"))?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    run_into(&manifest.scenario, manifest.seed, &mut writer)?;
    let fresh = writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    let logged_lines: Vec<&[u8]> = logged.split(|&b| b == b'\n').collect();
    let fresh_lines: Vec<&[u8]> = fresh.split(|&b| b == b'\n').collect();
    let mut mismatches = logged_lines.len().abs_diff(fresh_lines.len());
    let mut first_mismatch = (mismatches > 0).then_some(logged_lines.len().min(fresh_lines.len()) as u64);
    for (i, (a, b)) in logged_lines.iter().zip(&fresh_lines).enumerate() {
        if a != b {
            mismatches += 1;
            first_mismatch = Some(first_mismatch.map_or(i as u64, |f| f.min(i as u64)));
        }
    }
    Ok(ReplayReport {
        kind: LogKind::Trial,
        compared: logged_lines.len(),
        mismatches,
        first_mismatch,
    })
}
