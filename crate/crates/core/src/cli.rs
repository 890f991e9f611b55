//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiments::{
    generate_observations, run_forward_study, run_gradient_study, run_inversion_experiment,
    ObservationSet,
};
use crate::io::{
    convergence_csv, recording_from_bytes, recording_to_bytes, recording_to_csv, NodalField,
};

#[derive(Debug, Parser)]
#[command(
    name = "voidfwi",
    version,
    about = "Full-waveform inversion for voids with finite cell domains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the true model and write displacement snapshots.
    Forward(RunArgs),
    /// Generate full-matrix-capture observations from the reference model.
    Observe(RunArgs),
    /// Idealized gradient study.
    Gradient(RunArgs),
    /// Run the L-BFGS inversion.
    Invert(RunArgs),
    /// Convert a nodal field file for plotting.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
pub struct RunArgs {
    /// Experiment config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in preset instead of a config file.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Override a config entry, e.g. `--set material.tag=c`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Reuse binary recordings written by `observe` instead of regenerating them.
    #[arg(long, value_name = "DIR")]
    pub observations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    #[value(name = "csv_grid")]
    CsvGrid,
    #[value(name = "vtk_legacy_ascii")]
    VtkLegacyAscii,
}

/// Parses `argv`, runs the command and returns the process exit status:
/// 0 on success, 2 for usage and config errors, 1 for numerical failures.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Forward(args) => forward(&args),
        Command::Observe(args) => observe(&args),
        Command::Gradient(args) => gradient(&args),
        Command::Invert(args) => invert(&args),
        Command::Export(args) => export(&args),
    }
}

/// Files written so far, listed in `manifest.txt` with their SHA-256.
struct Outputs {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        let hash = Sha256::digest(bytes);
        let hex = hash.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        self.written.push((name.to_string(), hex));
        println!("wrote {}", path.display());
        Ok(())
    }

    fn finish(self) -> Result<()> {
        let mut text = String::new();
        for (name, hash) in &self.written {
            let _ = writeln!(text, "{hash}  {name}");
        }
        fs::write(self.dir.join("manifest.txt"), text)?;
        Ok(())
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    configure_threads(args.threads)?;
    let text = match (&args.config, &args.preset) {
        (Some(path), _) => fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?,
        (None, Some(name)) => crate::config::preset_text(name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset '{name}' (available: {})",
                    crate::config::PRESET_NAMES.join(", ")
                ))
            })?
            .to_string(),
        (None, None) => {
            return Err(Error::Config(
                "either --config or --preset is required".into(),
            ))
        }
    };
    ExperimentConfig::parse_with_overrides(&text, &args.overrides)
}

fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn forward(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let study = run_forward_study(&cfg)?;
    let mut out = Outputs::new(&args.out)?;
    let mut report = String::from("snapshot,time_s,relative_l2_error,void_max_abs\n");
    for (k, (t, u)) in study.times.iter().zip(&study.snapshots).enumerate() {
        let field = NodalField::new(&study.grid, "displacement", u.clone())?;
        out.write(
            &format!("snapshot_{k:02}.field"),
            field.to_text().as_bytes(),
        )?;
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        let _ = writeln!(
            report,
            "{k},{},{},{}",
            num(*t),
            opt(study.errors[k]),
            opt(study.void_max[k])
        );
        match (study.errors[k], study.void_max[k]) {
            (Some(e), Some(v)) => {
                println!("t = {t} s: relative L2 error {e:.4e}, void max |u| {v:.4e}")
            }
            (Some(e), None) => println!("t = {t} s: relative L2 error {e:.4e}"),
            _ => println!("t = {t} s"),
        }
    }
    out.write("forward_report.csv", report.as_bytes())?;
    out.finish()
}

fn observations(args: &RunArgs, cfg: &ExperimentConfig) -> Result<ObservationSet> {
    let Some(dir) = &args.observations else {
        return generate_observations(cfg);
    };
    let rec_dir = dir.join("recordings");
    let mut files: Vec<PathBuf> = fs::read_dir(&rec_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    files.sort();
    let recordings = files
        .iter()
        .map(|p| recording_from_bytes(&fs::read(p)?))
        .collect::<Result<Vec<_>>>()?;
    if recordings.is_empty() {
        return Err(Error::Config(format!(
            "no binary recordings in {}",
            rec_dir.display()
        )));
    }
    Ok(ObservationSet {
        recordings,
        description: format!("loaded from {}", dir.display()),
    })
}

fn observe(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let obs = generate_observations(&cfg)?;
    let mut out = Outputs::new(&args.out)?;
    for rec in &obs.recordings {
        let stem = format!("recordings/source_{:03}", rec.source_index);
        out.write(&format!("{stem}.csv"), recording_to_csv(rec).as_bytes())?;
        out.write(&format!("{stem}.bin"), &recording_to_bytes(rec))?;
    }
    out.write(
        "observations.txt",
        format!("{}\n", obs.description).as_bytes(),
    )?;
    out.finish()
}

fn gradient(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let obs = observations(args, &cfg)?;
    let field = run_gradient_study(&cfg, &obs)?;
    let grid = cfg.grid()?;
    let mut out = Outputs::new(&args.out)?;
    for (name, values) in cfg.material.tag.field_names().iter().zip(&field.fields) {
        let f = NodalField::new(&grid, &format!("gradient_{name}"), values.clone())?;
        out.write(&format!("gradient_{name}.field"), f.to_text().as_bytes())?;
    }
    out.finish()
}

fn invert(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let obs = observations(args, &cfg)?;
    let outcome = run_inversion_experiment(&cfg, &obs)?;
    let grid = cfg.grid()?;
    let names = cfg.material.tag.field_names();
    let mut out = Outputs::new(&args.out)?;
    out.write(
        "convergence.csv",
        convergence_csv(&outcome.state, outcome.initial_misfit).as_bytes(),
    )?;
    let mut write_fields = |label: &str, fields: &[Vec<f64>]| -> Result<()> {
        for (name, values) in names.iter().zip(fields) {
            let f = NodalField::new(&grid, name, values.clone())?;
            out.write(&format!("{name}_{label}.field"), f.to_text().as_bytes())?;
        }
        Ok(())
    };
    for (iteration, fields) in &outcome.snapshots {
        write_fields(&format!("iter{iteration:03}"), fields)?;
    }
    write_fields("final", &outcome.final_fields())?;
    let trace = outcome.state.normalized_objective();
    println!(
        "{:?} after {} iterations ({} evaluations), chi/chi0 = {:.4e}",
        outcome.state.status,
        outcome.state.iteration,
        outcome.state.evaluations,
        trace.last().copied().unwrap_or(1.0)
    );
    out.finish()
}

fn export(args: &ExportArgs) -> Result<()> {
    let field = NodalField::read(&args.field)?;
    let stem = args
        .field
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| field.name.clone());
    let mut out = Outputs::new(&args.out)?;
    match args.format {
        ExportFormat::CsvGrid => {
            out.write(&format!("{stem}.csv"), field.to_csv_grid()?.as_bytes())?
        }
        ExportFormat::VtkLegacyAscii => {
            out.write(&format!("{stem}.vtk"), field.to_vtk()?.as_bytes())?
        }
    }
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_config_is_a_usage_error() {
        assert_eq!(dispatch(["voidfwi", "invert"]), 2);
        assert_eq!(dispatch(["voidfwi", "frobnicate"]), 2);
        assert_eq!(dispatch(["voidfwi", "--help"]), 0);
    }

    #[test]
    fn bad_override_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = dispatch([
            "voidfwi",
            "forward",
            "--preset",
            "interface1d-p1",
            "--set",
            "grid.no_such_key=1",
            "--out",
            out,
        ]);
        assert_eq!(code, 2);
    }
}
