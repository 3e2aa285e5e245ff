use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use isp_core::simulation::{bundled, design_controllers, run_scenario_partial, Scenario, TelemetryLog};
use isp_core::verify::{run_acceptance, ScenarioSet};
use isp_core::IspError;

use crate::output::OutDir;
use crate::summary::{bundle_table, dominant_base_axis, log_summary, parse_axis, run_summary};
use crate::{EXIT_ACCEPTANCE, EXIT_DIVERGENCE, EXIT_OK, EXIT_VALIDATION};

/// Maps an error to the exit status contract.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<IspError>() {
        Some(IspError::Divergence { .. }) => EXIT_DIVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

/// A file path, or failing that the name of a bundled scenario.
fn load_scenario(spec: &str, for_design: bool) -> Result<Scenario> {
    let path = Path::new(spec);
    let sc = if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut sc = Scenario::from_toml_str(&text).with_context(|| format!("in {}", path.display()))?;
        sc.base_dir = path.parent().map(Path::to_path_buf);
        if sc.name.is_empty() {
            sc.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        sc
    } else if bundled::source(spec).is_some() {
        bundled::load(spec)?
    } else {
        bail!(IspError::config(
            "scenario",
            format!("`{spec}` is neither a file nor a bundled scenario ({})", bundled::NAMES.join(", "))
        ));
    };
    if !for_design {
        sc.validate().with_context(|| format!("scenario `{}`", sc.name))?;
    }
    Ok(sc)
}

fn say(quiet: bool, text: &str) {
    if !quiet {
        print!("{text}");
        if !text.ends_with('\n') {
            println!();
        }
    }
}

pub fn design(spec: &str, out: &Path, quiet: bool) -> Result<u8> {
    let mut sc = load_scenario(spec, true)?;
    let d = design_controllers(&sc)?;
    d.apply(&mut sc);
    let dir = OutDir::create(out)?;
    let toml = dir.write(&sc.name, ".designed.toml", &sc.to_toml_string()?)?;
    let report = format!("scenario: {}\n{}", sc.name, d.report());
    let rep = dir.write(&sc.name, ".design.txt", &report)?;
    say(quiet, &report);
    say(quiet, &format!("wrote {}\nwrote {}", toml.display(), rep.display()));
    Ok(EXIT_OK)
}

/// Runs one scenario, writing telemetry (even partial) and the summary.
fn run_one(sc: &Scenario, dir: &OutDir, quiet: bool) -> Result<TelemetryLog> {
    let outcome = run_scenario_partial(sc)?;
    let csv = dir.file(&sc.name, ".csv");
    let mut file = std::fs::File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
    outcome.log.write_csv(&mut file)?;
    if let Some(failure) = outcome.failure {
        writeln!(file, "# {failure}").with_context(|| format!("writing {}", csv.display()))?;
        eprintln!("partial telemetry ({} rows) written to {}", outcome.log.len(), csv.display());
        return Err(failure.into());
    }
    let summary = run_summary(sc, &outcome.log);
    let path = dir.write(&sc.name, ".summary.txt", &summary)?;
    say(quiet, &summary);
    say(quiet, &format!("wrote {}\nwrote {}", csv.display(), path.display()));
    Ok(outcome.log)
}

pub fn run(spec: &str, seed: Option<u64>, out: &Path, quiet: bool) -> Result<u8> {
    let mut sc = load_scenario(spec, false)?;
    if let Some(s) = seed {
        sc.run.seed = s;
    }
    run_one(&sc, &OutDir::create(out)?, quiet)?;
    Ok(EXIT_OK)
}

pub fn run_bundle(seed: Option<u64>, out: &Path, quiet: bool) -> Result<u8> {
    let dir = OutDir::create(out)?;
    let mut logs = BTreeMap::new();
    for name in bundled::NAMES {
        let mut sc = load_scenario(name, false)?;
        if let Some(s) = seed {
            sc.run.seed = s;
        }
        logs.insert(name.to_string(), run_one(&sc, &dir, quiet)?);
    }
    let table = bundle_table(&logs);
    dir.write("performance", ".txt", &table.to_text())?;
    let csv = dir.write("performance", ".csv", &table.to_csv())?;
    say(quiet, &table.to_text());
    say(quiet, &format!("wrote {}", csv.display()));
    Ok(EXIT_OK)
}

pub fn metrics(telemetry: &Path, axis: Option<&str>, out: Option<&Path>, quiet: bool) -> Result<u8> {
    let log = TelemetryLog::read_csv_path(telemetry).with_context(|| format!("reading {}", telemetry.display()))?;
    let dist = match axis {
        Some(a) => Some(parse_axis(a).expect("clap restricts the axis names")),
        None => dominant_base_axis(&log),
    };
    let summary = log_summary(&log, dist);
    if let Some(out) = out {
        let stem = telemetry.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        OutDir::create(out)?.write(&stem, ".metrics.txt", &summary)?;
    }
    say(quiet, &summary);
    Ok(EXIT_OK)
}

pub fn verify(scenario_dir: Option<&Path>, out: Option<&Path>, quiet: bool) -> Result<u8> {
    let set = match scenario_dir {
        Some(d) if !d.is_dir() => bail!(IspError::config("scenario-dir", format!("{} is not a directory", d.display()))),
        Some(d) => ScenarioSet::with_overrides(d),
        None => ScenarioSet::bundled(),
    };
    let report = run_acceptance(&set);
    let text = report.to_text();
    if let Some(out) = out {
        OutDir::create(out)?.write("verify", ".txt", &text)?;
    }
    // the verdict is the point of this command, so it prints even when quiet
    if quiet {
        print!("{}", text.lines().last().map(|l| format!("{l}\n")).unwrap_or_default());
    } else {
        print!("{text}");
    }
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_ACCEPTANCE })
}
