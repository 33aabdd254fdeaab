//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 solver non-convergence,
//! 4 cluster-count mismatch. Errors print one `ERROR <code>: ...` line on
//! stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{torsion_signature, AnalysisSettings, SignChange, DEFAULT_THRESHOLD_REL};
use crate::io::{
    curve_csv, points_csv, profile_csv, raw_points_csv, read_actuation, read_config, read_curve, read_raw_points,
    write_json, RunManifest,
};
use crate::measurement::{
    centers_to_curve, dbscan, synthetic_measurements, SyntheticSpec, DEFAULT_EPS_MM, DEFAULT_MIN_PTS,
};
use crate::rod::{solve_equilibrium, ActuationState, ManipulatorConfig, ReportSummary};
use crate::sequencer::{forward_shape, match_shape_with, MatchSettings, Target};
use crate::svg::{ct_plot, overlay_plot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CLUSTER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "rtdcm", version, about = "Simulate, analyze and shape-match a reconfigurable tendon-driven continuum manipulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the equilibrium shape for one actuation.
    Simulate(SimulateArgs),
    /// Curvature/torsion profile and torsion sign changes of a curve.
    Analyze(AnalyzeArgs),
    /// DBSCAN centroids of repeated point measurements.
    Cluster(ClusterArgs),
    /// Recover an actuation reproducing a target curve.
    Match(MatchArgs),
    /// Synthetic repeated measurements around simulated disk centers.
    SynthPoints(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Manipulator config JSON (defaults when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ActuationArgs {
    /// Actuation JSON `{tendon_mm, disk_angles_deg}`; flags override it.
    #[arg(long)]
    pub actuation: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub tendon_mm: Option<f64>,
    /// Disk rotation `i=deg` (1-based disk index), repeatable.
    #[arg(long = "disk", value_parser = parse_disk, allow_hyphen_values = true)]
    pub disks: Vec<(usize, f64)>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub actuation: ActuationArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Curve CSV (`x_mm,y_mm,z_mm`).
    pub curve: PathBuf,
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_REL)]
    pub threshold_rel: f64,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Raw points CSV (`x_mm,y_mm,z_mm[,disk]`).
    pub points: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPS_MM)]
    pub eps: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_PTS)]
    pub min_pts: usize,
    /// Required cluster count; centroids are then chained from the base.
    #[arg(long)]
    pub expect: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// Target curve CSV in the base frame.
    pub target: PathBuf,
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_REL)]
    pub threshold_rel: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub actuation: ActuationArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub points_per_disk: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_mm: f64,
    #[arg(long, default_value_t = 0.05)]
    pub outlier_fraction: f64,
}

fn parse_disk(s: &str) -> std::result::Result<(usize, f64), String> {
    let (i, deg) = s.split_once('=').ok_or_else(|| format!("expected i=deg, got `{s}`"))?;
    let i: usize = i.trim().parse().map_err(|_| format!("bad disk index `{i}`"))?;
    let deg: f64 = deg.trim().parse().map_err(|_| format!("bad angle `{deg}`"))?;
    Ok((i, deg))
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::SolverNotConverged { .. } => EXIT_SOLVER,
            Error::ClusterCountMismatch { .. } => EXIT_CLUSTER,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path, manifest: RunManifest) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir, manifest })
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.outputs.push("manifest.json".into());
        write_json(&self.dir.join("manifest.json"), &self.manifest)
    }
}

fn load_config(common: &Common, manifest_inputs: &mut Vec<String>) -> Result<ManipulatorConfig> {
    match &common.config {
        Some(p) => {
            manifest_inputs.push(p.display().to_string());
            read_config(p)
        }
        None => Ok(ManipulatorConfig::default()),
    }
}

fn build_actuation(args: &ActuationArgs, config: &ManipulatorConfig, manifest: &mut RunManifest) -> Result<ActuationState> {
    let mut act = match &args.actuation {
        Some(p) => {
            manifest.inputs.push(p.display().to_string());
            read_actuation(p)?
        }
        None => ActuationState::tendon_only(0.0, config.n_disks)?,
    };
    if act.disk_angles().len() != config.n_disks {
        return Err(Error::DimensionMismatch {
            expected: config.n_disks,
            found: act.disk_angles().len(),
        });
    }
    if let Some(t) = args.tendon_mm {
        act = act.with_tendon(t)?;
        manifest.overrides.insert("tendon_mm".into(), t.to_string());
    }
    for &(i, deg) in &args.disks {
        if i == 0 || i > config.n_disks {
            return Err(Error::InvalidParams(format!("disk index {i} outside 1..={}", config.n_disks)));
        }
        act = act.with_angle(i, deg)?;
        manifest.overrides.insert(format!("disk_{i}_deg"), deg.to_string());
    }
    Ok(act)
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    actuation: &'a ActuationState,
    equilibrium: ReportSummary,
}

fn simulate(args: &SimulateArgs) -> std::result::Result<(), CliError> {
    let mut inputs = Vec::new();
    let config = load_config(&args.common, &mut inputs)?;
    let mut manifest = RunManifest::with_config("simulate", &config)?;
    manifest.inputs = inputs;
    let act = build_actuation(&args.actuation, &config, &mut manifest)?;
    let report = solve_equilibrium(&config, &act, None)?;
    let mut out = Outputs::new(&args.common.out_dir, manifest)?;
    out.text("disk_centers.csv", &curve_csv(&report.shape.disk_curve()?))?;
    out.text("dense_curve.csv", &curve_csv(&report.shape.dense_curve))?;
    out.json(
        "report.json",
        &SimulateReport {
            actuation: &act,
            equilibrium: report.summary(),
        },
    )?;
    out.finish()?;
    if !report.converged {
        return Err(Error::SolverNotConverged {
            iterations: report.iterations,
            gradient: report.gradient_inf_norm,
        }
        .into());
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    threshold_rel: f64,
    threshold_rad: f64,
    peak_kappa_per_cm: f64,
    max_abs_tau_per_mm: f64,
    disk_s_mm: &'a [f64],
    sign_changes: &'a [SignChange],
}

fn analysis_settings(threshold_rel: f64) -> Result<AnalysisSettings> {
    if !(threshold_rel > 0.0 && threshold_rel < 1.0) {
        return Err(Error::InvalidParams(format!("threshold-rel must lie in (0, 1), got {threshold_rel}")));
    }
    Ok(AnalysisSettings {
        threshold_rel,
        ..AnalysisSettings::default()
    })
}

fn analyze(args: &AnalyzeArgs) -> std::result::Result<(), CliError> {
    let mut inputs = vec![args.curve.display().to_string()];
    let config = load_config(&args.common, &mut inputs)?;
    let settings = analysis_settings(args.threshold_rel)?;
    let curve = read_curve(&args.curve)?;
    let sig = torsion_signature(&curve, &config.disk_arc_positions(), &settings)?;
    let mut manifest = RunManifest::with_config("analyze", &config)?;
    manifest.inputs = inputs;
    manifest.overrides.insert("threshold_rel".into(), args.threshold_rel.to_string());
    let mut out = Outputs::new(&args.common.out_dir, manifest)?;
    out.text("profile.csv", &profile_csv(&sig.profile))?;
    out.json(
        "sign_changes.json",
        &AnalyzeReport {
            threshold_rel: args.threshold_rel,
            threshold_rad: sig.threshold,
            peak_kappa_per_cm: sig.profile.peak_kappa() * 10.0,
            max_abs_tau_per_mm: sig.profile.max_abs_tau(),
            disk_s_mm: &sig.disk_s,
            sign_changes: &sig.sign_changes,
        },
    )?;
    out.text("ct_profile.svg", &ct_plot(&sig.profile, &sig.disk_s, &sig.sign_changes))?;
    out.finish()?;
    Ok(())
}

fn cluster(args: &ClusterArgs) -> std::result::Result<(), CliError> {
    let set = read_raw_points(&args.points)?;
    let result = dbscan(&set, args.eps, args.min_pts)?;
    let centroids = match args.expect {
        Some(n) => centers_to_curve(&result, n, Vector3::zeros())?.points().to_vec(),
        None => result.centroids.clone(),
    };
    let mut manifest = RunManifest::new("cluster");
    manifest.inputs.push(args.points.display().to_string());
    manifest.overrides.insert("eps".into(), args.eps.to_string());
    manifest.overrides.insert("min_pts".into(), args.min_pts.to_string());
    if let Some(n) = args.expect {
        manifest.overrides.insert("expect".into(), n.to_string());
    }
    let mut out = Outputs::new(&args.out_dir, manifest)?;
    out.text("centroids.csv", &points_csv(&centroids))?;
    out.json("clusters.json", &result)?;
    out.finish()?;
    Ok(())
}

fn run_match(args: &MatchArgs) -> std::result::Result<(), CliError> {
    let mut inputs = vec![args.target.display().to_string()];
    let config = load_config(&args.common, &mut inputs)?;
    let settings = MatchSettings {
        analysis: analysis_settings(args.threshold_rel)?,
        ..MatchSettings::default()
    };
    let curve = read_curve(&args.target)?;
    let result = match_shape_with(&curve, &config, &settings)?;
    let target = Target::new(&curve, &config, &settings.analysis)?;
    let sig = torsion_signature(&curve, &config.disk_arc_positions(), &settings.analysis)?;
    let mut manifest = RunManifest::with_config("match", &config)?;
    manifest.inputs = inputs;
    manifest.overrides.insert("threshold_rel".into(), args.threshold_rel.to_string());
    let mut out = Outputs::new(&args.common.out_dir, manifest)?;
    out.json("match.json", &result)?;
    out.text("attained_centers.csv", &curve_csv(&result.attained_shape.disk_curve()?))?;
    out.text("step1_torsion.svg", &ct_plot(&sig.profile, &sig.disk_s, &sig.sign_changes))?;
    for (k, st) in result.steps.iter().enumerate() {
        let svg = overlay_plot(
            &format!("Step {}: target vs attained", k + 2),
            &target.centers[1..],
            &st.shape.disk_centers[1..],
        );
        out.text(&format!("step{}_overlay.svg", k + 2), &svg)?;
    }
    out.finish()?;
    Ok(())
}

fn synth_points(args: &SynthArgs) -> std::result::Result<(), CliError> {
    let mut inputs = Vec::new();
    let config = load_config(&args.common, &mut inputs)?;
    let mut manifest = RunManifest::with_config("synth-points", &config)?;
    manifest.inputs = inputs;
    let act = build_actuation(&args.actuation, &config, &mut manifest)?;
    manifest.overrides.insert("seed".into(), args.seed.to_string());
    let shape = forward_shape(&config, &act)?;
    let spec = SyntheticSpec {
        centers: shape.disk_centers[1..].to_vec(),
        points_per_center: args.points_per_disk,
        sigma_mm: args.sigma_mm,
        outlier_fraction: args.outlier_fraction,
        ..SyntheticSpec::new(Vec::new())
    };
    let set = synthetic_measurements(&spec, args.seed)?;
    let mut out = Outputs::new(&args.common.out_dir, manifest)?;
    out.text("raw_points.csv", &raw_points_csv(&set))?;
    out.text("true_centers.csv", &points_csv(&spec.centers))?;
    out.finish()?;
    Ok(())
}

pub fn execute(cli: &Cli) -> std::result::Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Cluster(a) => cluster(a),
        Command::Match(a) => run_match(a),
        Command::SynthPoints(a) => synth_points(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            let _ = writeln!(stderr, "ERROR {EXIT_INPUT}: {first}");
            return EXIT_INPUT;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "ERROR {}: {}", e.code, e.message.replace('\n', " "));
            e.code
        }
    }
}
