//! Batch front end: scenario loading, command dispatch and result files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use mmfield::binaural::binaural_ne;
use mmfield::evaluation::direction_sweep;
use mmfield::mode_matching::{validity_warnings, ModeMatcher};
use mmfield::report::format_float;
use mmfield::DrivingSignals;

pub mod scenario;

pub use scenario::{Overrides, Resolved, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) | CliError::Io(..) => EXIT_NUMERICAL,
        }
    }
}

impl From<mmfield::Error> for CliError {
    fn from(e: mmfield::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Solve,
    Sweep,
    Binaural,
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Human-readable summary for stdout.
    pub summary: String,
    pub files: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn output_dir(resolved: &Resolved, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = match (out, &resolved.scenario.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => resolved.scenario.base_dir.join(o),
        (None, None) => {
            return Err(CliError::Validation(vec![
                "output: no --out given and the scenario has no `output`".to_string(),
            ]))
        }
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(dir.clone(), e))?;
    Ok(dir)
}

/// Scenario values a reader needs to interpret the result files.
fn metadata(resolved: &Resolved, command: &str, lambda: Option<f64>) -> String {
    let s = &resolved.scenario;
    let k = resolved.wavenumber().value();
    let value = serde_json::json!({
        "command": command,
        "geometry": resolved.array.label,
        "loudspeakers": resolved.array.len(),
        "frequency_hz": s.frequency_hz,
        "speed_of_sound": s.speed_of_sound,
        "wavenumber": k,
        "lambda_factor": s.lambda_factor,
        "lambda": lambda,
        "doa_order": s.doa_order,
        "sigma_floor": s.sigma_floor,
        "primary_distance": s.primary.distance,
        "primary_distance_note": "scenario assumption: the primary-source distance is not a measured quantity and sets the DoA weights",
        "zones": s.zones,
    });
    let mut text = serde_json::to_string_pretty(&value).expect("serializable");
    text.push('\n');
    text
}

fn error_manifest(lines: &[String]) -> String {
    let mut out = String::from("# rows missing from the results and why\n");
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}

/// `loudspeaker_index,re,im` rows.
pub fn driving_csv(d: &DrivingSignals) -> String {
    let mut out = String::from("loudspeaker_index,re,im\n");
    for (l, v) in d.values.iter().enumerate() {
        let _ = writeln!(out, "{l},{},{}", format_float(v.re), format_float(v.im));
    }
    out
}

pub fn run(command: Command, scenario: &Scenario, out: Option<&Path>) -> Result<Outcome, CliError> {
    let resolved = scenario.resolve()?;
    match command {
        Command::Validate => validate(&resolved),
        Command::Solve => solve(&resolved, out),
        Command::Sweep => sweep(&resolved, out),
        Command::Binaural => binaural(&resolved, out),
    }
}

fn validate(r: &Resolved) -> Result<Outcome, CliError> {
    let k = r.wavenumber();
    let matcher = ModeMatcher::new(
        r.array.clone(),
        r.zones.clone(),
        k,
        r.scenario.lambda_factor,
        r.scenario.doa(),
    )?;
    let mut s = String::new();
    let _ = writeln!(s, "loudspeakers: {} ({})", r.array.len(), r.array.label);
    let _ = writeln!(s, "zones: {}, rows of C: {}", r.zones.len(), r.zones.rows());
    let _ = writeln!(s, "frequency: {} Hz", r.scenario.frequency_hz);
    let _ = writeln!(s, "k: {:.4} rad/m", k.value());
    for (q, radius) in r.zones.sweet_spot_radii(k).iter().enumerate() {
        let regions: Vec<String> = r
            .scenario
            .radius_factors
            .iter()
            .map(|f| format!("{f}: {:.4} m", f * radius))
            .collect();
        let _ = writeln!(
            s,
            "zone {q}: sweet spot N/k = {radius:.4} m; regions {}",
            regions.join(", ")
        );
    }
    let _ = writeln!(s, "lambda: {:.6e}", matcher.lambda());
    let _ = writeln!(
        s,
        "primary: {} directions at {} m (scenario assumption)",
        r.directions.len(),
        r.scenario.primary.distance
    );
    for w in validity_warnings(&r.array, &r.zones, k) {
        let _ = writeln!(s, "warning: {w}");
    }
    Ok(Outcome {
        summary: s,
        files: Vec::new(),
    })
}

fn solve(r: &Resolved, out: Option<&Path>) -> Result<Outcome, CliError> {
    let dir = output_dir(r, out)?;
    let k = r.wavenumber();
    let matcher = ModeMatcher::new(
        r.array.clone(),
        r.zones.clone(),
        k,
        r.scenario.lambda_factor,
        r.scenario.doa(),
    )?;
    let direction = r.directions[0];
    let primary = direction.point_at(r.scenario.primary.distance);
    let mut outcome = Outcome::default();
    let _ = writeln!(
        outcome.summary,
        "primary direction theta={:.3} deg, phi={:.3} deg",
        direction.theta_deg(),
        direction.phi_deg()
    );
    if r.directions.len() > 1 {
        let _ = writeln!(
            outcome.summary,
            "note: solve uses the first of {} directions",
            r.directions.len()
        );
    }
    for &method in &r.methods {
        let d = matcher
            .solve(primary, method)?
            .at_frequency(r.scenario.frequency_hz);
        let path = dir.join(format!("driving_{method}.csv"));
        write_file(&path, &driving_csv(&d))?;
        let _ = writeln!(outcome.summary, "{method}: {}", path.display());
        outcome.files.push(path);
    }
    let meta = dir.join("metadata.json");
    write_file(&meta, &metadata(r, "solve", Some(matcher.lambda())))?;
    outcome.files.push(meta);
    Ok(outcome)
}

fn sweep(r: &Resolved, out: Option<&Path>) -> Result<Outcome, CliError> {
    let dir = output_dir(r, out)?;
    let report = direction_sweep(&r.sweep())?;
    let path = dir.join("sweep.csv");
    write_file(&path, &report.to_csv())?;
    let meta = dir.join("metadata.json");
    write_file(&meta, &metadata(r, "sweep", Some(report.lambda)))?;
    let mut outcome = Outcome {
        summary: format!("{} rows: {}\n", report.rows.len(), path.display()),
        files: vec![path, meta],
    };
    if !report.failures.is_empty() {
        let lines: Vec<String> = report
            .failures
            .iter()
            .map(|f| {
                format!(
                    "{},{},{}: {}",
                    f.method,
                    format_float(f.direction.theta_deg()),
                    format_float(f.direction.phi_deg()),
                    f.error
                )
            })
            .collect();
        let manifest = dir.join("errors.txt");
        write_file(&manifest, &error_manifest(&lines))?;
        return Err(CliError::Numerical(format!(
            "{} (method, direction) solves failed; partial results in {}, details in {}",
            lines.len(),
            outcome.files[0].display(),
            manifest.display()
        )));
    }
    outcome.summary.push_str("all rows succeeded\n");
    Ok(outcome)
}

fn binaural(r: &Resolved, out: Option<&Path>) -> Result<Outcome, CliError> {
    let dir = output_dir(r, out)?;
    let scenario = r.binaural()?;
    let report = binaural_ne(&scenario, &r.binaural_frequencies())?;
    let path = dir.join("binaural.csv");
    write_file(&path, &report.to_csv())?;
    let meta = dir.join("metadata.json");
    write_file(&meta, &metadata(r, "binaural", None))?;
    let outcome = Outcome {
        summary: format!("{} rows: {}\n", report.rows.len(), path.display()),
        files: vec![path, meta],
    };
    if !report.failures.is_empty() {
        let lines: Vec<String> = report
            .failures
            .iter()
            .map(|f| format!("{},{}: {}", f.method, format_float(f.frequency_hz), f.error))
            .collect();
        let manifest = dir.join("errors.txt");
        write_file(&manifest, &error_manifest(&lines))?;
        return Err(CliError::Numerical(format!(
            "{} binaural rows failed; details in {}",
            lines.len(),
            manifest.display()
        )));
    }
    Ok(outcome)
}

/// Caps the rayon pool from `MMFIELD_THREADS`. Unset, empty or `0` keeps the
/// default.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MMFIELD_THREADS") else {
        return Ok(());
    };
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(());
    }
    let threads: usize = raw.parse().map_err(|_| {
        CliError::Validation(vec![format!(
            "MMFIELD_THREADS: `{raw}` is not a thread count"
        )])
    })?;
    #[cfg(feature = "parallel")]
    if threads > 0 {
        // a second initialization attempt in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}
