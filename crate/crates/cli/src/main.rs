use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sgi_core::density::{emit_density, parse_values};
use sgi_core::index::{compute_sgi_with_tolerance, effective_fertility};
use sgi_core::ingest::{load_bundle, parse_marital, BundleConfig, DatasetBundle};
use sgi_core::model::{
    canonicalize_sex_ratio, FertilityInputs, MarriageTiming, SexRatioConvention,
    DEFAULT_BALANCE_TOLERANCE, DEFAULT_BIRTH_INTERVAL,
};
use sgi_core::oracle_sim::{
    generate_stable_series, run_matching_microsim, stable_cohort_ratio, CohortMode,
};
use sgi_core::report::{self, ComputeOptions, ShareConvention};
use sgi_core::smam::{compute_smam, DEFAULT_UPPER_LIMIT};

/// Exit status when a computation fails on valid input.
const EXIT_COMPUTATION: u8 = 2;
const EXIT_VALIDATION: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "sgi", version, about = "Surplus Groom Index toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Index for every region, national figures, density and map table.
    Compute(ComputeArgs),
    /// Index under crude versus effective fertility.
    Sensitivity(BundleArgs),
    /// Stable-population cohort series and a marriage-matching run.
    Simulate(SimulateArgs),
    /// Kernel density of a list of values.
    Density(DensityArgs),
    /// Singulate mean age at marriage from a marital-status CSV.
    Smam(SmamArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct BundleArgs {
    #[arg(long)]
    regions: PathBuf,
    #[arg(long)]
    marital: Option<PathBuf>,
    /// Marriage-to-first-birth interval for every region, overriding the input.
    #[arg(long)]
    alpha: Option<f64>,
    /// Birth interval for regions whose `alpha` cell is blank.
    #[arg(long)]
    default_alpha: Option<f64>,
    /// Upper age limit for SMAM.
    #[arg(long, default_value_t = DEFAULT_UPPER_LIMIT)]
    omega: f64,
    /// Period label for an input field, e.g. `tfr=2001-03`. Repeatable.
    #[arg(long, value_name = "FIELD=LABEL")]
    vintage: Vec<String>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Write only this format. Both are written when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct ComputeArgs {
    #[command(flatten)]
    bundle: BundleArgs,
    #[arg(long, default_value = "both")]
    share_convention: ShareConvention,
    /// Region row holding national inputs, reported apart from the regions.
    #[arg(long)]
    national_id: Option<String>,
    /// Kernel bandwidth for the density; Silverman's rule when omitted.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Distance from 1 within which a region counts as balanced.
    #[arg(long, default_value_t = DEFAULT_BALANCE_TOLERANCE)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Sex ratio at birth in the chosen convention.
    #[arg(long)]
    srb: f64,
    #[arg(long, default_value = "females_per_male")]
    srb_convention: SexRatioConvention,
    #[arg(long)]
    tfr: f64,
    /// Under-five mortality as a proportion.
    #[arg(long, default_value_t = 0.0)]
    u5mr: f64,
    #[arg(long)]
    a_m: f64,
    #[arg(long)]
    a_f: f64,
    #[arg(long, default_value_t = DEFAULT_BIRTH_INTERVAL)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    years: usize,
    #[arg(long, default_value_t = 50)]
    burn_in: usize,
    /// Male births in the first year.
    #[arg(long, default_value_t = 1000.0)]
    b0: f64,
    /// Round cohorts to whole persons.
    #[arg(long)]
    integer: bool,
    #[arg(long, default_value_t = DEFAULT_BALANCE_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct DensityArgs {
    /// Plain numbers, one per line, or a CSV with an `sgi` or `value` column.
    values: PathBuf,
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Draw a reference line at this national value.
    #[arg(long)]
    national: Option<f64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct SmamArgs {
    marital: PathBuf,
    #[arg(long, default_value_t = DEFAULT_UPPER_LIMIT)]
    omega: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Some regions failed; their errors are already on stderr.
#[derive(Debug)]
struct ComputationFailed(String);

impl std::fmt::Display for ComputationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ComputationFailed {}

fn wants(format: Option<Format>, f: Format) -> bool {
    format.is_none_or(|x| x == f)
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
        })
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }
}

fn parse_vintage(items: &[String]) -> Result<BTreeMap<String, String>> {
    items
        .iter()
        .map(|item| match item.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                Ok((k.trim().to_string(), v.trim().to_string()))
            }
            _ => Err(sgi_core::Error::Config(format!(
                "--vintage expects FIELD=LABEL, got `{item}`"
            ))
            .into()),
        })
        .collect()
}

fn load(args: &BundleArgs) -> Result<DatasetBundle> {
    let config = BundleConfig {
        regions: args.regions.clone(),
        marital: args.marital.clone(),
        upper_limit: args.omega,
        default_alpha: args.default_alpha,
        vintage: parse_vintage(&args.vintage)?,
    };
    let bundle = load_bundle(&config)?;
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
    Ok(bundle)
}

/// Run metadata kept out of the data files so those stay byte-identical.
fn run_meta(command: &str, inputs: &[&Path]) -> serde_json::Value {
    json!({
        "tool": "sgi",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "args": std::env::args().skip(1).collect::<Vec<_>>(),
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    })
}

fn report_failures(failures: &[report::RegionFailure]) -> Result<()> {
    for f in failures {
        eprintln!("error: region {}: {}", f.region_id, f.error);
    }
    if !failures.is_empty() {
        bail!(ComputationFailed(format!(
            "{} region(s) failed",
            failures.len()
        )));
    }
    Ok(())
}

fn compute(args: &ComputeArgs) -> Result<()> {
    let b = &args.bundle;
    let bundle = load(b)?;
    let options = ComputeOptions {
        alpha: b.alpha,
        upper_limit: b.omega,
        tolerance: args.tolerance,
        share_convention: args.share_convention,
        bandwidth: args.bandwidth,
        national_id: args.national_id.clone(),
    };
    let run = report::run_compute(&bundle, &options)?;

    let out = Output::new(&b.out_dir)?;
    if wants(b.format, Format::Csv) {
        out.write("report.csv", &report::report_csv(&run)?)?;
        out.write("map.csv", &report::map_csv(&run)?)?;
        if let Some(d) = &run.density {
            out.write("density.csv", &report::density_csv(d)?)?;
        }
    }
    if wants(b.format, Format::Json) {
        out.write("report.json", &report::report_json(&run)?)?;
    }
    if let Some(d) = &run.density {
        let national = run.national.as_ref().map(|n| match &n.supplied {
            Some(s) => s.result.sgi,
            None => n.aggregated.sgi,
        });
        out.write("density.svg", &report::density_svg(d, national))?;
    }
    let mut inputs = vec![b.regions.as_path()];
    inputs.extend(b.marital.as_deref());
    out.write_json("run.meta.json", &run_meta("compute", &inputs))?;

    if let Some(n) = &run.national {
        if let Some(s) = &n.supplied {
            println!("national ({}): {:.4}", s.region_id, s.result.sgi);
        }
        println!("national (aggregated inputs): {:.4}", n.aggregated.sgi);
        println!("mean of regions: {:.4}", n.mean_of_regions);
    }
    println!("{}", report::headline(&run, args.share_convention));
    report_failures(&run.failures)
}

fn sensitivity(args: &BundleArgs) -> Result<()> {
    let bundle = load(args)?;
    let options = ComputeOptions {
        alpha: args.alpha,
        upper_limit: args.omega,
        ..ComputeOptions::default()
    };
    let (rows, failures) = report::run_sensitivity(&bundle, &options)?;
    let out = Output::new(&args.out_dir)?;
    if wants(args.format, Format::Csv) {
        out.write("sensitivity.csv", &report::sensitivity_csv(&rows)?)?;
    }
    if wants(args.format, Format::Json) {
        out.write_json("sensitivity.json", &serde_json::to_value(&rows)?)?;
    }
    report_failures(&failures)
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let s = canonicalize_sex_ratio(args.srb, args.srb_convention)?;
    let fertility = FertilityInputs::new(args.tfr, args.u5mr)?;
    let timing = MarriageTiming::new(args.a_m, args.a_f, args.alpha)?;
    let rt = effective_fertility(&fertility);
    let closed = compute_sgi_with_tolerance(s, rt, &timing, args.tolerance)?;

    let series = generate_stable_series(s, rt, &timing, args.years, args.b0)?;
    let at_year = timing.male_age().max(timing.female_age()).ceil() as i64 + 1;
    let oracle = stable_cohort_ratio(&series, &timing, at_year)?;
    let mode = if args.integer {
        CohortMode::Integer
    } else {
        CohortMode::Fractional
    };
    let sim = run_matching_microsim(&series, &timing, args.burn_in, mode)?;

    let summary = json!({
        "inputs": {
            "sex_ratio": s.females_per_male(),
            "tfr": args.tfr,
            "u5mr": args.u5mr,
            "male_age": args.a_m,
            "female_age": args.a_f,
            "birth_interval": args.alpha,
            "years": args.years,
            "burn_in": args.burn_in,
            "b0": args.b0,
            "cohort_mode": mode,
        },
        "effective_fertility": rt,
        "growth_rate": closed.growth_rate,
        "sgi": closed.sgi,
        "stable_cohort_ratio": oracle,
        "relative_difference": (oracle - closed.sgi) / closed.sgi,
        "expected_unmatched_male_share": (1.0 - 1.0 / closed.sgi).max(0.0),
        "expected_unmatched_female_share": (1.0 - closed.sgi).max(0.0),
        "unmatched_male_share": sim.unmatched_male_share,
        "unmatched_female_share": sim.unmatched_female_share,
        "counted_years": sim.counted_years,
    });

    let out = Output::new(&args.out_dir)?;
    out.write("trajectory.csv", &report::trajectory_csv(&sim.trajectory)?)?;
    out.write_json("summary.json", &summary)?;
    println!(
        "sgi {:.6}, cohort ratio {:.6}, unmatched men {:.4}, unmatched women {:.4}",
        closed.sgi, oracle, sim.unmatched_male_share, sim.unmatched_female_share
    );
    Ok(())
}

fn density(args: &DensityArgs) -> Result<()> {
    let text = fs::read_to_string(&args.values).map_err(|source| sgi_core::Error::Io {
        path: args.values.display().to_string(),
        source,
    })?;
    let values = parse_values(&text)?;
    let d = emit_density(&values, args.bandwidth)?;
    let out = Output::new(&args.out_dir)?;
    if wants(args.format, Format::Csv) {
        out.write("density.csv", &report::density_csv(&d)?)?;
    }
    if wants(args.format, Format::Json) {
        out.write_json("density.json", &serde_json::to_value(&d)?)?;
    }
    out.write("density.svg", &report::density_svg(&d, args.national))?;
    println!(
        "{} values, bandwidth {:.5}, mode {:.4}, integral {:.5}",
        values.len(),
        d.bandwidth,
        d.mode(),
        d.integral()
    );
    Ok(())
}

fn smam(args: &SmamArgs) -> Result<()> {
    let file = fs::File::open(&args.marital).map_err(|source| sgi_core::Error::Io {
        path: args.marital.display().to_string(),
        source,
    })?;
    let name = args
        .marital
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tables = parse_marital(file, &name, args.omega)?;

    let mut csv = String::from("region_id,smam_male,smam_female,age_gap\n");
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (region_id, t) in &tables {
        match (compute_smam(&t.male), compute_smam(&t.female)) {
            (Ok(m), Ok(f)) => {
                csv.push_str(&format!("{region_id},{m},{f},{}\n", m - f));
                rows.push(json!({ "region_id": region_id, "smam_male": m, "smam_female": f, "age_gap": m - f }));
            }
            (Err(e), _) | (_, Err(e)) => failures.push(report::RegionFailure {
                region_id: region_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let out = Output::new(&args.out_dir)?;
    if wants(args.format, Format::Csv) {
        out.write("smam.csv", &csv)?;
    }
    if wants(args.format, Format::Json) {
        out.write_json("smam.json", &serde_json::Value::Array(rows))?;
    }
    report_failures(&failures)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<sgi_core::Error>() {
        if e.is_validation() {
            return EXIT_VALIDATION;
        }
    }
    EXIT_COMPUTATION
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.cmd {
        Cmd::Compute(a) => compute(a),
        Cmd::Sensitivity(a) => sensitivity(a),
        Cmd::Simulate(a) => simulate(a),
        Cmd::Density(a) => density(a),
        Cmd::Smam(a) => smam(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
