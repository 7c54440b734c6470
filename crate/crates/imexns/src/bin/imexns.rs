//! Command-line front end for the integrator experiments.
//!
//! Subcommands:
//!
//! * `converge` — run the configured methods over the configured step sizes
//!   on a flow case; writes `convergence.csv` plus one directory per run
//!   (`meta.txt`, `errors.csv`) under the output directory.
//! * `critical-cfl` — bisect the largest stable step size of one method on
//!   the configured flow case and report it with its CFL number.
//! * `stability-domain` / `accuracy-domain` — evaluate `|R(z)|` and
//!   `|R(z) - e^z|` on a complex-plane lattice; CSV `re,im,absR,absErr`.
//! * `critical-imag` — imaginary-axis stability margin at a fixed real part,
//!   one `method,re_part,y_star` line per method.
//! * `dump-tableau` — print a built-in tableau as labeled CSV rows.
//!
//! Global flags: `--config <file>` (key = value run configuration),
//! `--out <dir>` (artifact directory, default `out`), `--jobs <n>` (worker
//! threads). All emitted floats carry 17 significant digits; files use LF
//! line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use imexns::flow::case::{
    errors_csv, meta_text, parse_config, split_list, FlowCase, RunConfig,
};
use imexns::harness::{self, convergence_csv, ConvergenceRecord, MethodId};
use imexns::sdc::SdcConfig;
use imexns::stability::{
    critical_imag, scan_domain, write_scan_csv, CriticalImag, MethodSpec, ScanRange, SpectralMode,
};
use imexns::tableaux::{builtin_tableau, TableauId};
use imexns::{Error, Result};

#[derive(Parser)]
#[command(
    name = "imexns",
    version,
    about = "IMEX time integration experiments: convergence, stability domains, critical steps"
)]
struct Cli {
    /// Run-configuration file (`key = value` lines; see the library docs for keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV and per-run artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for the run pool and lattice scans.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence sweep over the configured methods and step sizes.
    Converge,

    /// Bisect the largest stable step size of one method on the flow case.
    CriticalCfl {
        /// Method to probe (defaults to the first configured method).
        #[arg(long)]
        method: Option<String>,
        /// Stable bracket endpoint (defaults to the smallest configured dt).
        #[arg(long)]
        lo: Option<f64>,
        /// Unstable bracket endpoint (defaults to the largest configured dt).
        #[arg(long)]
        hi: Option<f64>,
    },

    /// Scan |R(z)| over a complex-plane lattice.
    StabilityDomain(ScanArgs),

    /// Scan the accuracy defect |R(z) - e^z| over a complex-plane lattice.
    AccuracyDomain(ScanArgs),

    /// Imaginary-axis stability margin at a fixed real part.
    CriticalImag {
        /// Comma-separated method names.
        #[arg(long)]
        method: String,
        /// Argument placement: implicit, explicit, or semi-implicit.
        #[arg(long, default_value = "semi-implicit")]
        mode: String,
        /// Real part of the probe ray.
        #[arg(long, default_value_t = -0.1, allow_negative_numbers = true)]
        re_part: f64,
        /// Interpret coordinates as per-substep arguments.
        #[arg(long)]
        scaled: bool,
    },

    /// Print a built-in tableau as labeled CSV rows (c, a_im, a_ex, b_im, b_ex).
    DumpTableau {
        /// Tableau name (full or compact, e.g. RK-CB3e or CB3e).
        name: String,
    },
}

/// Lattice flags shared by the two domain scans.
#[derive(clap::Args)]
struct ScanArgs {
    /// Comma-separated method names.
    #[arg(long)]
    method: String,
    /// Argument placement: implicit, explicit, or semi-implicit.
    #[arg(long, default_value = "semi-implicit")]
    mode: String,
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    re_min: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    re_max: f64,
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    im_min: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    im_max: f64,
    /// Lattice points along the real axis.
    #[arg(long, default_value_t = 161)]
    nx: usize,
    /// Lattice points along the imaginary axis.
    #[arg(long, default_value_t = 161)]
    ny: usize,
    /// Interpret coordinates as per-substep arguments.
    #[arg(long)]
    scaled: bool,
    /// Report (to stderr) how many lattice points fall within this bound
    /// on |R| (stability) or |R - e^z| (accuracy).
    #[arg(long)]
    threshold: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_jobs(cli.jobs);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn configure_jobs(jobs: Option<usize>) {
    let Some(n) = jobs else { return };
    #[cfg(feature = "parallel")]
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        eprintln!("warning: built without the `parallel` feature; --jobs is ignored");
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Converge => converge(cli),
        Command::CriticalCfl { method, lo, hi } => critical_cfl(cli, method.as_deref(), *lo, *hi),
        Command::StabilityDomain(args) => domain_scan(cli, args, DomainKind::Stability),
        Command::AccuracyDomain(args) => domain_scan(cli, args, DomainKind::Accuracy),
        Command::CriticalImag { method, mode, re_part, scaled } => {
            critical_imag_report(method, mode, *re_part, *scaled)
        }
        Command::DumpTableau { name } => dump_tableau(name),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| {
        Error::Config("this subcommand needs --config <file>".into())
    })?;
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

/// Directory-safe label for one run: method name plus the step size in
/// scientific notation.
fn run_dir_name(method: &str, dt: f64) -> String {
    format!("{method}_dt{dt:e}")
}

fn converge(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let case = FlowCase::from_config(&cfg)?;
    let sweep = harness::converge(&cfg)?;

    fs::create_dir_all(&cli.out)?;
    for run in &sweep.runs {
        let dir = cli.out.join(run_dir_name(&run.method, run.dt));
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("errors.csv"), errors_csv(&run.output.rows))?;
        fs::write(
            dir.join("meta.txt"),
            meta_text(&cfg, &case, &run.method, run.dt, &run.output),
        )?;
    }
    let csv = convergence_csv(&sweep.records);
    fs::write(cli.out.join("convergence.csv"), &csv)?;

    print_records(&sweep.records);
    println!("wrote {} runs under {}", sweep.runs.len(), cli.out.display());
    Ok(())
}

fn print_records(records: &[ConvergenceRecord]) {
    println!("{:<14} {:>12} {:>13} {:>8} {:>10}", "method", "dt", "eps_v", "eoc", "twall_s");
    for r in records {
        let flag = if r.unstable { "  UNSTABLE" } else { "" };
        println!(
            "{:<14} {:>12.6e} {:>13.6e} {:>8.3} {:>10.3}{flag}",
            r.method, r.dt, r.eps_v, r.eoc, r.twall_s
        );
    }
}

fn critical_cfl(
    cli: &Cli,
    method: Option<&str>,
    lo: Option<f64>,
    hi: Option<f64>,
) -> Result<()> {
    let cfg = load_config(cli)?;
    let fallback = SdcConfig::new(cfg.sdc_m, cfg.sdc_k, cfg.predictor)?;
    let name = match method {
        Some(m) => m.to_string(),
        None => cfg
            .methods
            .first()
            .cloned()
            .ok_or_else(|| Error::Config("no method configured or given".into()))?,
    };
    let id = MethodId::parse(&name, &fallback)?;

    let bracket_from_dts = || -> Result<(f64, f64)> {
        let min = cfg.dts.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = cfg.dts.iter().cloned().fold(0.0f64, f64::max);
        if !(min.is_finite() && min > 0.0 && max > min) {
            return Err(Error::Config(
                "give --lo/--hi or configure at least two distinct dt values".into(),
            ));
        }
        Ok((min, max))
    };
    let (lo, hi) = match (lo, hi) {
        (Some(lo), Some(hi)) => (lo, hi),
        (None, None) => bracket_from_dts()?,
        (Some(lo), None) => (lo, bracket_from_dts()?.1),
        (None, Some(hi)) => (bracket_from_dts()?.0, hi),
    };

    let found = harness::critical_cfl(&cfg, &id, lo, hi)?;
    println!("method,dt_star,cfl");
    println!("{},{:.16e},{:.16e}", id, found.dt_star, found.cfl);
    Ok(())
}

enum DomainKind {
    Stability,
    Accuracy,
}

fn parse_mode(name: &str) -> Result<SpectralMode> {
    let lower = name.trim().to_ascii_lowercase();
    for mode in SpectralMode::ALL {
        if mode.name() == lower {
            return Ok(mode);
        }
    }
    Err(Error::InvalidArgument(format!(
        "unknown mode `{name}` (expected implicit, explicit, or semi-implicit)"
    )))
}

/// Parses method names for the analyzer subcommands. The multistep method
/// has no one-step amplification factor and is rejected here.
fn parse_method_specs(list: &str) -> Result<Vec<MethodSpec>> {
    let fallback = SdcConfig::new(3, 3, TableauId::Euler)?;
    split_list(list)
        .iter()
        .map(|name| match MethodId::parse(name, &fallback)? {
            MethodId::Rk(id) => Ok(MethodSpec::Tableau(id)),
            MethodId::Sdc(cfg) => Ok(MethodSpec::Sdc(cfg)),
            MethodId::Bdf2 => Err(Error::InvalidArgument(
                "BDF2 is a multistep method without a one-step amplification factor; \
                 probe its stability through the flow or model-problem drivers"
                    .into(),
            )),
        })
        .collect()
}

fn domain_scan(cli: &Cli, args: &ScanArgs, kind: DomainKind) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let methods = parse_method_specs(&args.method)?;
    let range = ScanRange {
        re_min: args.re_min,
        re_max: args.re_max,
        im_min: args.im_min,
        im_max: args.im_max,
        nx: args.nx,
        ny: args.ny,
    };
    fs::create_dir_all(&cli.out)?;

    let suffix = match kind {
        DomainKind::Stability => "stability",
        DomainKind::Accuracy => "accuracy",
    };
    for method in &methods {
        let scan = scan_domain(method, mode, &range, args.scaled)?;
        let file = cli
            .out
            .join(format!("{}_{}_{}.csv", method.name(), mode.name(), suffix));
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &scan)?;
        fs::write(&file, buf)?;

        if let Some(threshold) = args.threshold {
            let total = range.nx * range.ny;
            let within = match kind {
                DomainKind::Stability => scan.count_within(threshold),
                DomainKind::Accuracy => {
                    scan.abs_err.iter().filter(|&&e| e <= threshold).count()
                }
            };
            let what = match kind {
                DomainKind::Stability => "|R|",
                DomainKind::Accuracy => "|R - e^z|",
            };
            eprintln!(
                "{} ({}): {within} of {total} lattice points with {what} <= {threshold:e}",
                method.name(),
                mode.name(),
            );
        }
        if scan.pole_count > 0 {
            eprintln!(
                "{} ({}): {} lattice points hit an amplification pole",
                method.name(),
                mode.name(),
                scan.pole_count
            );
        }
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn critical_imag_report(list: &str, mode: &str, re_part: f64, scaled: bool) -> Result<()> {
    let mode = parse_mode(mode)?;
    let methods = parse_method_specs(list)?;
    println!("method,re_part,y_star");
    for method in &methods {
        let line = match critical_imag(method, mode, re_part, scaled)? {
            CriticalImag::Bounded(y) => format!("{:.16e}", y),
            CriticalImag::Unbounded => "unbounded".to_string(),
        };
        println!("{},{:.16e},{line}", method.name(), re_part);
    }
    Ok(())
}

fn dump_tableau(name: &str) -> Result<()> {
    let id = TableauId::from_name(name).or_else(|_| TableauId::from_short_name(name))?;
    let tab = builtin_tableau(id);
    let mut out = String::new();
    let mut row = |label: &str, values: &[f64]| {
        let _ = write!(out, "{label}");
        for v in values {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    };
    row("c", &tab.c);
    for i in 0..tab.s {
        row(&format!("a_im[{i}]"), &tab.a_im[i]);
    }
    for i in 0..tab.s {
        row(&format!("a_ex[{i}]"), &tab.a_ex[i]);
    }
    row("b_im", &tab.b_im);
    row("b_ex", &tab.b_ex);
    print!("{out}");
    Ok(())
}
