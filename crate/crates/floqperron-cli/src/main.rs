//! `floqperron` — Floquet and Perron growth eigenvalues of monotone
//! periodic systems.
//!
//! Subcommands:
//!
//! * `eigen`    — compute `λ_per`, `λ_s` and their gap for one model file.
//! * `sweep`    — run a randomized sweep from a sweep config file.
//! * `validate` — schema- and assumption-check a model file.
//!
//! Exit codes: 0 success/pass, 1 error, 2 growth inequality violated beyond
//! tolerance (`eigen`), 3 violations found under the arithmetico-geometric
//! scheme (`sweep`).

mod model;
mod report;

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use floqperron::cellcycle::{self, PdeGrid};
use floqperron::lab::{self, SweepConfig, SweepResult};
use floqperron::ode;
use floqperron::periodic::{AveragingScheme, PeriodicMatrixSeq};
use floqperron::spectral::{perron_metzler, perron_nonneg, DEFAULT_MAX_ITER, DEFAULT_TOL};
use floqperron::{discrete, GrowthComparison};

use model::{parse_model, Model};
use report::{emit, write_series, Summary};

/// Environment variable overriding the default comparison tolerance of the
/// model class being run (command-line flags still win).
const TOL_ENV_VAR: &str = "FLOQPERRON_TOL_COMPARE";

#[derive(Parser)]
#[command(
    name = "floqperron",
    version,
    about = "Floquet and Perron growth eigenvalues of monotone periodic systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute both growth eigenvalues and their gap for a model file.
    Eigen {
        /// Model file (TOML; kind = ode | discrete | cellcycle).
        model: PathBuf,
        /// Integration steps per period (ODE models).
        #[arg(long)]
        steps: Option<usize>,
        /// Age grid spacing (cell-cycle models).
        #[arg(long)]
        dx: Option<f64>,
        /// Warmup periods before the growth measurement (cell-cycle).
        #[arg(long)]
        warmup: Option<usize>,
        /// Measurement periods (cell-cycle).
        #[arg(long)]
        measure: Option<usize>,
        /// Comparison tolerance for ODE/discrete models.
        #[arg(long)]
        tol_compare: Option<f64>,
        /// Comparison tolerance for cell-cycle models.
        #[arg(long)]
        tol_compare_pde: Option<f64>,
        /// Averaging scheme for the comparison value λ_s.
        #[arg(long, value_enum, default_value = "arith-geometric")]
        scheme: SchemeArg,
        /// Write the summary report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a time series here (eigenfunction samples or growth curve).
        #[arg(long)]
        series: Option<PathBuf>,
        /// Samples in the eigenfunction series.
        #[arg(long, default_value_t = 65)]
        samples: usize,
        /// Write final age profiles here (cell-cycle models).
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Run cell-cycle models even when the survival assumptions fail.
        #[arg(long)]
        force: bool,
    },
    /// Run a randomized sweep described by a config file.
    Sweep {
        /// Sweep config file (TOML).
        config: PathBuf,
        /// Worker threads for the trials.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write the sweep report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a model file against the schema and model assumptions.
    Validate {
        /// Model file (TOML).
        model: PathBuf,
        /// Print the canonicalized model document after validation.
        #[arg(long)]
        echo_canonical: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SchemeArg {
    /// Arithmetic means on diagonal/loss terms, geometric on transitions.
    ArithGeometric,
    /// Arithmetic means everywhere (exploratory).
    ArithmeticEverywhere,
    /// Geometric means everywhere they are defined (exploratory).
    GeometricEverywhere,
}

impl From<SchemeArg> for AveragingScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::ArithGeometric => AveragingScheme::ArithGeometric,
            SchemeArg::ArithmeticEverywhere => AveragingScheme::ArithmeticEverywhere,
            SchemeArg::GeometricEverywhere => AveragingScheme::GeometricEverywhere,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Eigen {
            model,
            steps,
            dx,
            warmup,
            measure,
            tol_compare,
            tol_compare_pde,
            scheme,
            out,
            series,
            samples,
            profiles,
            force,
        } => cmd_eigen(EigenArgs {
            model,
            steps,
            dx,
            warmup,
            measure,
            tol_compare,
            tol_compare_pde,
            scheme: scheme.into(),
            out,
            series,
            samples,
            profiles,
            force,
        }),
        Command::Sweep { config, jobs, out } => cmd_sweep(&config, jobs, out.as_deref()),
        Command::Validate {
            model,
            echo_canonical,
        } => cmd_validate(&model, echo_canonical),
    }
}

struct EigenArgs {
    model: PathBuf,
    steps: Option<usize>,
    dx: Option<f64>,
    warmup: Option<usize>,
    measure: Option<usize>,
    tol_compare: Option<f64>,
    tol_compare_pde: Option<f64>,
    scheme: AveragingScheme,
    out: Option<PathBuf>,
    series: Option<PathBuf>,
    samples: usize,
    profiles: Option<PathBuf>,
    force: bool,
}

/// Tolerance resolution order: flag, then environment variable, then the
/// class default; the source is echoed into the report.
fn resolve_tol(flag: Option<f64>, default: f64) -> Result<(f64, String)> {
    if let Some(t) = flag {
        return Ok((t, "flag".into()));
    }
    if let Ok(text) = env::var(TOL_ENV_VAR) {
        let t: f64 = text
            .parse()
            .with_context(|| format!("{TOL_ENV_VAR} = `{text}` is not a number"))?;
        return Ok((t, TOL_ENV_VAR.into()));
    }
    Ok((default, "default".into()))
}

fn scheme_name(s: AveragingScheme) -> &'static str {
    match s {
        AveragingScheme::ArithGeometric => "arith-geometric",
        AveragingScheme::ArithmeticEverywhere => "arithmetic-everywhere",
        AveragingScheme::GeometricEverywhere => "geometric-everywhere",
    }
}

fn cmd_eigen(args: EigenArgs) -> Result<u8> {
    let text = fs::read_to_string(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let parsed = parse_model(&text)
        .with_context(|| format!("parsing {}", args.model.display()))?;

    let mut summary = Summary::new("floqperron eigen report");
    summary.meta("model", args.model.display());
    summary.meta("scheme", scheme_name(args.scheme));

    let comparison = match &parsed {
        Model::Ode(a) => {
            let steps = args.steps.unwrap_or(ode::DEFAULT_STEPS);
            let (tol, tol_src) = resolve_tol(args.tol_compare, ode::DEFAULT_TOL_COMPARE)?;
            summary.meta("steps", steps);
            summary.meta("tol_compare", format!("{tol} (source: {tol_src})"));

            let mono = ode::integrate_fundamental(a, steps)?;
            let averaged = a.average_with(args.scheme)?;
            let perron = perron_metzler(&averaged, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let gap = mono.floquet_eigenvalue - perron.eigenvalue;
            summary
                .kv("kind", "ode")
                .kv("dim", a.dim())
                .kv("period", a.period())
                .kv("steps_taken", mono.steps)
                .kv("monodromy_perron_residual", mono.perron_residual);

            if let Some(series_path) = &args.series {
                let ef = ode::floquet_eigenfunction(a, &mono, args.samples.max(2))?;
                summary.kv("eigenfunction_periodicity_residual", ef.periodicity_residual);
                let dim = a.dim();
                let header = std::iter::once("t".to_string())
                    .chain((1..=dim).map(|i| format!("x_{i}")))
                    .collect::<Vec<_>>()
                    .join(",");
                write_series(
                    series_path,
                    &[
                        "floqperron eigenfunction samples".into(),
                        format!("periodicity_residual = {}", ef.periodicity_residual),
                    ],
                    &header,
                    ef.times.iter().zip(&ef.states).map(|(t, state)| {
                        std::iter::once(t.to_string())
                            .chain(state.iter().map(|v| v.to_string()))
                            .collect()
                    }),
                )?;
            }
            GrowthComparison {
                lambda_per: mono.floquet_eigenvalue,
                lambda_s: perron.eigenvalue,
                gap,
                pass: gap >= -tol,
            }
        }
        Model::Discrete(seq) => {
            let (tol, tol_src) = resolve_tol(args.tol_compare, discrete::DEFAULT_TOL_COMPARE)?;
            summary.meta("tol_compare", format!("{tol} (source: {tol_src})"));

            let per = discrete::floquet_discrete(seq)?;
            let averaged = seq.average_with(args.scheme);
            let perron = perron_nonneg(&averaged, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let gap = per.eigenvalue - perron.eigenvalue;
            summary
                .kv("kind", "discrete")
                .kv("dim", seq.dim())
                .kv("period", seq.len());

            if let Some(series_path) = &args.series {
                write_periodic_solution_series(series_path, seq, &per.eigenvector, per.eigenvalue)?;
            }
            GrowthComparison {
                lambda_per: per.eigenvalue,
                lambda_s: perron.eigenvalue,
                gap,
                pass: gap >= -tol,
            }
        }
        Model::Cellcycle(m) => {
            let (tol, tol_src) =
                resolve_tol(args.tol_compare_pde, cellcycle::DEFAULT_TOL_COMPARE)?;
            let grid = PdeGrid {
                dx: args.dx.unwrap_or(cellcycle::DEFAULT_DX),
                warmup_periods: args.warmup.unwrap_or(cellcycle::DEFAULT_WARMUP_PERIODS),
                measure_periods: args.measure.unwrap_or(cellcycle::DEFAULT_MEASURE_PERIODS),
                allow_failed_assumptions: args.force,
                ..PdeGrid::default()
            };
            summary.meta("dx", grid.dx);
            summary.meta("warmup_periods", grid.warmup_periods);
            summary.meta("measure_periods", grid.measure_periods);
            summary.meta("tol_compare_pde", format!("{tol} (source: {tol_src})"));

            let assumptions = cellcycle::check_assumptions(m);
            let (per, trace) = cellcycle::floquet_growth_rate_traced(m, &grid)?;
            let avg = cellcycle::averaged_perron_rate_with(m, args.scheme)?;
            let gap = per.eigenvalue - avg.eigenvalue;
            summary
                .kv("kind", "cellcycle")
                .kv("phases", m.phase_count())
                .kv("period", m.period())
                .kv("x_max", m.x_max())
                .kv("survival_product", assumptions.survival_product)
                .kv("period_map_residual", per.residual)
                .kv("converged", per.converged);
            let losses = m
                .phases()
                .iter()
                .map(|p| cellcycle::artificial_loss(&p.transition, m.x_max()))
                .collect::<floqperron::Result<Vec<f64>>>()?;
            for (i, loss) in losses.iter().enumerate() {
                summary.kv(&format!("artificial_loss_{}", i + 1), loss);
            }

            if let Some(series_path) = &args.series {
                write_series(
                    series_path,
                    &["floqperron growth curve (per simulated period)".into()],
                    "period,time,mass_ratio,log_ratio,residual",
                    trace.period_times.iter().enumerate().map(|(k, t)| {
                        vec![
                            (k + 1).to_string(),
                            t.to_string(),
                            trace.mass_ratios[k].to_string(),
                            trace.mass_ratios[k].ln().to_string(),
                            trace.residuals[k].to_string(),
                        ]
                    }),
                )?;
            }
            if let Some(profile_path) = &args.profiles {
                let phases = trace.final_profiles.len();
                let header = std::iter::once("x".to_string())
                    .chain((1..=phases).map(|i| format!("phase_{i}")))
                    .collect::<Vec<_>>()
                    .join(",");
                let nodes = trace.final_profiles[0].len();
                write_series(
                    profile_path,
                    &["floqperron periodic-solution age profiles (end of run)".into()],
                    &header,
                    (0..nodes).map(|j| {
                        std::iter::once((j as f64 * trace.dx).to_string())
                            .chain(trace.final_profiles.iter().map(|p| p[j].to_string()))
                            .collect()
                    }),
                )?;
            }
            GrowthComparison {
                lambda_per: per.eigenvalue,
                lambda_s: avg.eigenvalue,
                gap,
                pass: gap >= -tol,
            }
        }
    };

    summary
        .kv("lambda_per", comparison.lambda_per)
        .kv("lambda_s", comparison.lambda_s)
        .kv("gap", comparison.gap)
        .kv("pass", comparison.pass);
    emit(args.out.as_deref(), &summary.render())?;
    Ok(if comparison.pass { 0 } else { 2 })
}

/// Discrete periodic solution `X(k+1) = A(k) X(k) / λ_per` over one period.
fn write_periodic_solution_series(
    path: &Path,
    seq: &PeriodicMatrixSeq,
    x0: &[f64],
    lambda: f64,
) -> Result<()> {
    let dim = seq.dim();
    let mut states = vec![x0.to_vec()];
    if lambda > 0.0 {
        let mut x = x0.to_vec();
        for m in seq.matrices() {
            let next: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|j| m.at(i, j) * x[j]).sum::<f64>() / lambda)
                .collect();
            x = next;
            states.push(x.clone());
        }
    }
    let header = std::iter::once("k".to_string())
        .chain((1..=dim).map(|i| format!("x_{i}")))
        .collect::<Vec<_>>()
        .join(",");
    write_series(
        path,
        &["floqperron periodic solution samples".into()],
        &header,
        states.iter().enumerate().map(|(k, state)| {
            std::iter::once(k.to_string())
                .chain(state.iter().map(|v| v.to_string()))
                .collect()
        }),
    )
}

/// Exit code policy for sweeps: violations only count against the
/// arithmetico-geometric scheme; the other schemes are exploratory.
fn sweep_exit_code(result: &SweepResult) -> u8 {
    if result.summary.violations > 0
        && result.config.scheme == AveragingScheme::ArithGeometric
    {
        3
    } else {
        0
    }
}

fn render_sweep_report(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str("# floqperron sweep report\n");
    if let Ok(cfg_text) = toml::to_string(&result.config) {
        for line in cfg_text.lines() {
            out.push_str("# config: ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str(&lab::format_records(&result.records));
    let s = &result.summary;
    out.push_str(&format!("# summary.trials = {}\n", s.trials));
    out.push_str(&format!("# summary.completed = {}\n", s.completed));
    out.push_str(&format!("# summary.errors = {}\n", s.errors));
    match s.min_gap {
        Some(g) => out.push_str(&format!("# summary.min_gap = {g}\n")),
        None => out.push_str("# summary.min_gap = none\n"),
    }
    match s.mean_gap {
        Some(g) => out.push_str(&format!("# summary.mean_gap = {g}\n")),
        None => out.push_str("# summary.mean_gap = none\n"),
    }
    out.push_str(&format!("# summary.violations = {}\n", s.violations));
    out.push_str(&format!(
        "# summary.violating_digests = {}\n",
        if s.violating_digests.is_empty() {
            "none".to_string()
        } else {
            s.violating_digests.join(";")
        }
    ));
    out.push_str(
        "# note: absence of violations in a finite sweep is evidence, not proof\n",
    );
    out
}

fn cmd_sweep(config_path: &Path, jobs: usize, out: Option<&Path>) -> Result<u8> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let cfg: SweepConfig = toml::from_str(&text)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    let result = pool.install(|| lab::run_sweep(&cfg))?;
    emit(out, &render_sweep_report(&result))?;
    Ok(sweep_exit_code(&result))
}

/// Validates the model; with `echo_canonical` the canonical document is the
/// entire stdout, otherwise key–value diagnostics plus `ok` are printed.
fn cmd_validate(path: &Path, echo_canonical: bool) -> Result<u8> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = parse_model(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut lines = vec![format!("kind = {}", parsed.kind())];
    if let Model::Cellcycle(m) = &parsed {
        let report = cellcycle::check_assumptions(m);
        lines.push(format!("survival_product = {}", report.survival_product));
        lines.push(format!("bounded = {}", report.bounded));
        if !report.pass {
            for l in lines {
                println!("{l}");
            }
            eprintln!(
                "error: transition survival product {:.6} does not exceed the required \
                 bound 0.5",
                report.survival_product
            );
            return Ok(1);
        }
    }
    if echo_canonical {
        print!("{}", model::model_to_toml(&parsed)?);
    } else {
        for l in lines {
            println!("{l}");
        }
        println!("ok");
    }
    Ok(0)
}
