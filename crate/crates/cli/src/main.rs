//! `phasecast` — phase-estimation scans under the stochastic-generator
//! channel.
//!
//! Subcommands: `scan` (per-round sensitivities in one of the three
//! settings), `nopt-contour` (optimal round counts over a parameter grid),
//! `trajectory` (Bloch-plane spiral of the sequential probe),
//! `channel-info` (the phase-covariant triple and derivatives), and
//! `validate` (the oracle cross-check suite).
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure,
//! 3 numeric-domain error. All floating-point output carries 15 significant
//! digits; indeterminate sensitivities print as `NA`, non-contractive grid
//! points as `INF`. Given the same arguments and seed, output is
//! byte-identical across runs.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod output;
mod scan;

use output::fmt_float;

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_VALIDATION: i32 = 2;
const EXIT_NUMERIC: i32 = 3;

#[derive(Parser)]
#[command(
    name = "phasecast",
    version,
    about = "Qubit phase estimation under unital phase-covariant noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan sensitivities over a round/probe range in one setting.
    Scan(ScanArgs),
    /// Optimal round count over a (phi, kappa) grid, as a CSV matrix.
    NoptContour(ContourArgs),
    /// Bloch trajectory of the sequential probe with per-round sensitivities.
    Trajectory(TrajectoryArgs),
    /// Print the channel triple, derivatives and coherence phases.
    ChannelInfo(InfoArgs),
    /// Run every oracle cross-check and report deviations vs tolerances.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Setting {
    Sequential,
    Ancilla,
    Parallel,
}

impl Setting {
    fn label(self) -> &'static str {
        match self {
            Setting::Sequential => "sequential",
            Setting::Ancilla => "ancilla",
            Setting::Parallel => "parallel",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ScanArgs {
    /// Estimation architecture to scan.
    #[arg(long, value_enum)]
    setting: Option<Setting>,
    /// Phase per channel application, radians.
    #[arg(long)]
    phi: Option<f64>,
    /// Concentration of the rotation-axis distribution.
    #[arg(long)]
    kappa: Option<f64>,
    /// First round/probe count.
    #[arg(long)]
    n_min: Option<u32>,
    /// Last round/probe count.
    #[arg(long)]
    n_max: Option<u32>,
    /// Comma-separated subset of
    /// sld-optimal,sigma-x,sigma-x-tensor,bell-projector.
    #[arg(long)]
    observables: Option<String>,
    /// Monte Carlo samples per channel application; 0 = exact Kraus path.
    #[arg(long)]
    mc_samples: Option<u64>,
    /// Random seed (also PHASECAST_SEED); recorded in every row.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON file with the same fields; explicit flags override it.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct ContourArgs {
    /// Phase grid: "start:stop:count" or a comma list.
    #[arg(long)]
    phi_grid: String,
    /// Concentration grid: "start:stop:count" or a comma list.
    #[arg(long)]
    kappa_grid: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[arg(long)]
    phi: f64,
    #[arg(long)]
    kappa: f64,
    /// Largest round count to emit (rows run from N = 0).
    #[arg(long)]
    n_max: u32,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long)]
    phi: f64,
    #[arg(long)]
    kappa: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct ValidateArgs {
    /// Seed for the stochastic checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Corrupt one tolerance to exercise the failure path.
    #[arg(long, hide = true)]
    inject_failure: bool,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Scan(args) => cmd_scan(args),
        Command::NoptContour(args) => cmd_nopt_contour(args),
        Command::Trajectory(args) => cmd_trajectory(args),
        Command::ChannelInfo(args) => cmd_channel_info(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn seed_fallback() -> u64 {
    std::env::var("PHASECAST_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(42)
}

fn numeric_error(e: phasecast::Error) -> i32 {
    eprintln!("error: {e}");
    EXIT_NUMERIC
}

fn cmd_scan(args: ScanArgs) -> i32 {
    let config = match scan::ScanConfig::assemble(args) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("error: {message}");
            return EXIT_USAGE;
        }
    };
    let result = match scan::run(&config) {
        Ok(result) => result,
        Err(e) => return numeric_error(e),
    };
    // The bound must sit below the QFI in every row; a violation means the
    // closed forms disagree about the channel and nothing should be emitted.
    for record in &result.records {
        if record.f_lower > record.qfi + 1e-9 {
            eprintln!(
                "error: row N = {} violates f_N <= QFI ({} > {})",
                record.n,
                fmt_float(record.f_lower),
                fmt_float(record.qfi)
            );
            return EXIT_VALIDATION;
        }
    }
    print!("{}", scan::render(&config, &result));
    EXIT_OK
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid '{spec}' is not start:stop:count"));
        }
        let start: f64 = parts[0].parse().map_err(|_| "bad grid start".to_string())?;
        let stop: f64 = parts[1].parse().map_err(|_| "bad grid stop".to_string())?;
        let count: usize = parts[2].parse().map_err(|_| "bad grid count".to_string())?;
        if count < 1 {
            return Err("grid count must be at least 1".into());
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let step = (stop - start) / (count - 1) as f64;
        Ok((0..count).map(|i| start + step * i as f64).collect())
    } else {
        spec.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad grid value '{tok}'"))
            })
            .collect()
    }
}

fn cmd_nopt_contour(args: ContourArgs) -> i32 {
    let phi_grid = match parse_grid(&args.phi_grid) {
        Ok(g) => g,
        Err(m) => {
            eprintln!("error: {m}");
            return EXIT_USAGE;
        }
    };
    let kappa_grid = match parse_grid(&args.kappa_grid) {
        Ok(g) => g,
        Err(m) => {
            eprintln!("error: {m}");
            return EXIT_USAGE;
        }
    };
    if phi_grid.iter().any(|&x| x <= 0.0) || kappa_grid.iter().any(|&x| x <= 0.0) {
        eprintln!("error: contour grids require phi > 0 and kappa > 0");
        return EXIT_USAGE;
    }

    let mut rows: Vec<Vec<Option<u32>>> = Vec::with_capacity(phi_grid.len());
    for &phi in &phi_grid {
        let mut row = Vec::with_capacity(kappa_grid.len());
        for &kappa in &kappa_grid {
            let p = match phasecast::vmf::VmfParams::new(phi, kappa) {
                Ok(p) => p,
                Err(e) => return numeric_error(e),
            };
            let params = match phasecast::channel::channel_params_vmf(&p) {
                Ok(c) => c,
                Err(e) => return numeric_error(e),
            };
            row.push(phasecast::estimation::n_opt_estimate(&params).ok());
        }
        rows.push(row);
    }

    match args.format {
        Format::Csv => {
            let mut out = String::from("phi\\kappa");
            for &kappa in &kappa_grid {
                out.push(',');
                out.push_str(&fmt_float(kappa));
            }
            out.push('\n');
            for (row, &phi) in rows.iter().zip(&phi_grid) {
                out.push_str(&fmt_float(phi));
                for cell in row {
                    out.push(',');
                    match cell {
                        Some(n) => out.push_str(&n.to_string()),
                        None => out.push_str("INF"),
                    }
                }
                out.push('\n');
            }
            print!("{out}");
        }
        Format::Json => {
            let mut out = String::from("{\"phi_grid\":[");
            out.push_str(
                &phi_grid
                    .iter()
                    .map(|&x| fmt_float(x))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push_str("],\"kappa_grid\":[");
            out.push_str(
                &kappa_grid
                    .iter()
                    .map(|&x| fmt_float(x))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push_str("],\"n_opt\":[");
            let body: Vec<String> = rows
                .iter()
                .map(|row| {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|cell| match cell {
                            Some(n) => n.to_string(),
                            None => "null".to_string(),
                        })
                        .collect();
                    format!("[{}]", cells.join(","))
                })
                .collect();
            out.push_str(&body.join(","));
            out.push_str("]}\n");
            print!("{out}");
        }
    }
    EXIT_OK
}

fn cmd_trajectory(args: TrajectoryArgs) -> i32 {
    let p = match phasecast::vmf::VmfParams::new(args.phi, args.kappa) {
        Ok(p) => p,
        Err(e) => return numeric_error(e),
    };
    let params = match phasecast::channel::channel_params_vmf(&p) {
        Ok(c) => c,
        Err(e) => return numeric_error(e),
    };
    let points = match phasecast::settings::bloch_trajectory(args.n_max, &p) {
        Ok(points) => points,
        Err(e) => return numeric_error(e),
    };

    let mut rows: Vec<(u32, [f64; 4], Option<f64>, f64)> = Vec::with_capacity(points.len());
    for point in &points {
        let sens = if point.n == 0 {
            Some(0.0)
        } else {
            match phasecast::estimation::sigma_x_sensitivity_closed(point.n, &params) {
                Ok(s) => s.value(),
                Err(e) => return numeric_error(e),
            }
        };
        let qfi = if point.n == 0 {
            0.0
        } else {
            match phasecast::estimation::qfi_sequential_vmf(point.n, &params) {
                Ok(f) => f,
                Err(e) => return numeric_error(e),
            }
        };
        rows.push((
            point.n,
            [point.bloch.x, point.bloch.y, point.bloch.z, point.sld_angle],
            sens,
            qfi,
        ));
    }

    match args.format {
        Format::Csv => {
            let mut out = String::from("N,r_x,r_y,r_z,sld_angle,sens_sigma_x,qfi\n");
            for (n, geom, sens, qfi) in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    n,
                    fmt_float(geom[0]),
                    fmt_float(geom[1]),
                    fmt_float(geom[2]),
                    fmt_float(geom[3]),
                    output::fmt_option(*sens),
                    fmt_float(*qfi),
                ));
            }
            print!("{out}");
        }
        Format::Json => {
            let body: Vec<String> = rows
                .iter()
                .map(|(n, geom, sens, qfi)| {
                    format!(
                        "{{\"n\":{},\"r_x\":{},\"r_y\":{},\"r_z\":{},\"sld_angle\":{},\"sens_sigma_x\":{},\"qfi\":{}}}",
                        n,
                        fmt_float(geom[0]),
                        fmt_float(geom[1]),
                        fmt_float(geom[2]),
                        fmt_float(geom[3]),
                        output::fmt_option_json(*sens),
                        fmt_float(*qfi),
                    )
                })
                .collect();
            println!("[{}]", body.join(","));
        }
    }
    EXIT_OK
}

fn cmd_channel_info(args: InfoArgs) -> i32 {
    let p = match phasecast::vmf::VmfParams::new(args.phi, args.kappa) {
        Ok(p) => p,
        Err(e) => return numeric_error(e),
    };
    let c = match phasecast::channel::channel_params_vmf(&p) {
        Ok(c) => c,
        Err(e) => return numeric_error(e),
    };
    match args.format {
        Format::Csv => {
            let fields: [(&str, f64); 11] = [
                ("phi", args.phi),
                ("kappa", args.kappa),
                ("lambda_par", c.lambda_par),
                ("lambda_perp", c.lambda_perp),
                ("g", c.g),
                ("d_lambda_par", c.d_lambda_par),
                ("d_lambda_perp", c.d_lambda_perp),
                ("d_g", c.d_g),
                ("mu", c.mu),
                ("nu", c.nu),
                ("s_re", c.s.re),
            ];
            for (name, value) in fields {
                println!("{name},{}", fmt_float(value));
            }
            println!("s_im,{}", fmt_float(c.s.im));
        }
        Format::Json => {
            println!(
                "{{\"phi\":{},\"kappa\":{},\"lambda_par\":{},\"lambda_perp\":{},\"g\":{},\"d_lambda_par\":{},\"d_lambda_perp\":{},\"d_g\":{},\"mu\":{},\"nu\":{},\"s_re\":{},\"s_im\":{}}}",
                fmt_float(args.phi),
                fmt_float(args.kappa),
                fmt_float(c.lambda_par),
                fmt_float(c.lambda_perp),
                fmt_float(c.g),
                fmt_float(c.d_lambda_par),
                fmt_float(c.d_lambda_perp),
                fmt_float(c.d_g),
                fmt_float(c.mu),
                fmt_float(c.nu),
                fmt_float(c.s.re),
                fmt_float(c.s.im),
            );
        }
    }
    EXIT_OK
}

fn cmd_validate(args: ValidateArgs) -> i32 {
    let seed = args.seed.unwrap_or_else(seed_fallback);
    let reports = match phasecast::validate::run_all_with(seed, args.inject_failure) {
        Ok(reports) => reports,
        Err(e) => return numeric_error(e),
    };
    let mut failures = 0usize;
    for report in &reports {
        let verdict = if report.passed() { "PASS" } else { "FAIL" };
        println!(
            "CHECK {}: deviation={} tolerance={} {verdict}",
            report.name,
            fmt_float(report.deviation),
            fmt_float(report.tolerance)
        );
        if !report.passed() {
            failures += 1;
        }
    }
    println!(
        "{} checks, {} passed, {} failed (seed {seed})",
        reports.len(),
        reports.len() - failures,
        failures
    );
    if failures > 0 {
        EXIT_VALIDATION
    } else {
        EXIT_OK
    }
}
