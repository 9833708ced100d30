use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use achns::config::{parse_config, RunConfig};
use achns::diagnostics::{besov_seminorm, bihari_check, bihari_horizon, energy_report, BesovExponent};
use achns::fixedpoint::{picard, PicardConfig};
use achns::runner::{read_column, run_to_dir, sweep, SweepKind, DIAGNOSTICS_FILE};
use achns::Error;

#[derive(Parser)]
#[command(name = "achns", version, about = "Anisotropic variable-density Cahn-Hilliard-Navier-Stokes simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation; writes the diagnostics CSV and snapshots.
    Run {
        config: PathBuf,
        /// Output directory (overrides [output] directory).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the structural hypotheses of the configured anisotropy.
    CheckAnisotropy {
        config: PathBuf,
        /// Print only the CSV header and row.
        #[arg(long)]
        csv: bool,
    },
    /// Tabulate the potential and its regularization.
    PotentialTable {
        config: PathBuf,
        #[arg(long, default_value_t = -0.99, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 0.99, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 199)]
        points: usize,
    },
    /// Picard iteration of the linearized solution map on a short horizon.
    Fixedpoint {
        config: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        t_tilde: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 30)]
        max_iter: usize,
        /// Tolerance on |R^eps| relative to the initial energy.
        #[arg(long, default_value_t = 1e-8)]
        tol_r_rel: f64,
    },
    /// Bihari horizon and bound for y' <= c1 y^2 + g0.
    Bihari(BihariArgs),
    /// B^{1/4} norm of a recorded time series.
    Besov {
        csv: PathBuf,
        #[arg(long)]
        column: String,
        /// Exponent: 2 or inf.
        #[arg(long, default_value = "inf")]
        p: String,
        /// Sampling step (default: spacing of the t column).
        #[arg(long)]
        sample_dt: Option<f64>,
    },
    /// Convergence study over resolution or regularization.
    Sweep {
        config: PathBuf,
        /// Comma-separated collocation points per direction.
        #[arg(long, value_delimiter = ',', conflicts_with = "eps", required_unless_present = "eps")]
        modes: Option<Vec<usize>>,
        /// Comma-separated regularization parameters.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BihariArgs {
    #[arg(long)]
    c1: f64,
    #[arg(long)]
    g0: f64,
    #[arg(long)]
    y0: f64,
    /// Run the ODE-oracle check with this many random trials.
    #[arg(long)]
    check: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rows of the bound table on [0, 0.95 t_star].
    #[arg(long, default_value_t = 20)]
    points: usize,
}

/// Exit status of a failed command.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_runtime() { Failure::Runtime(e.to_string()) } else { Failure::Usage(e.to_string()) }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config { line: Some(l), msg } => Failure::Usage(format!("{}:{l}: {msg}", path.display())),
        other => Failure::Usage(format!("{}: {other}", path.display())),
    })
}

fn execute(cmd: Command) -> Result<String, Failure> {
    let mut out = String::new();
    match cmd {
        Command::Run { config, output } => {
            let cfg = load_config(&config)?;
            let dir = output.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let (_, outcome) = run_to_dir(&cfg, &dir)?;
            let tr = &outcome.trajectory;
            let (first, last) = (&tr.reports[0], tr.reports.last().expect("initial report"));
            writeln!(out, "steps = {}", outcome.steps).unwrap();
            writeln!(out, "t = {}", last.t).unwrap();
            writeln!(out, "e_total: {:.12e} -> {:.12e}", first.e_total, last.e_total).unwrap();
            writeln!(out, "max energy residual = {:.3e}", tr.max_residual()).unwrap();
            writeln!(out, "rho range = [{}, {}]", tr.rho_min, tr.rho_max).unwrap();
            writeln!(out, "diagnostics: {}", dir.join(DIAGNOSTICS_FILE).display()).unwrap();
        }
        Command::CheckAnisotropy { config, csv } => {
            let cfg = load_config(&config)?;
            let report = cfg.anisotropy_model()?.check_hypotheses(1000);
            if !csv {
                writeln!(out, "{report}").unwrap();
            }
            writeln!(out, "{}", achns::anisotropy::HypothesisReport::CSV_HEADER).unwrap();
            writeln!(out, "{}", report.csv_row()).unwrap();
        }
        Command::PotentialTable { config, from, to, points } => {
            let cfg = load_config(&config)?;
            if !(from.is_finite() && to.is_finite() && from <= to) || points < 1 {
                return Err(Failure::Usage("need finite --from <= --to and --points >= 1".into()));
            }
            let pot = cfg.potential()?;
            writeln!(out, "s,F,F_prime,F_eps,F_eps_prime,F_eps_second").unwrap();
            for i in 0..points {
                let s = if points == 1 { from } else { from + (to - from) * i as f64 / (points - 1) as f64 };
                let (f, fp) = match pot.log_spec() {
                    Some(spec) => (spec.f_log(s).ok(), spec.f_log_prime(s).ok()),
                    None => (Some(pot.value(s)), Some(pot.derivative(s))),
                };
                let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
                writeln!(
                    out,
                    "{s:.16e},{},{},{:.16e},{:.16e},{:.16e}",
                    opt(f),
                    opt(fp),
                    pot.value(s),
                    pot.derivative(s),
                    pot.second(s)
                )
                .unwrap();
            }
        }
        Command::Fixedpoint { config, t_tilde, tol, max_iter, tol_r_rel } => {
            let cfg = load_config(&config)?;
            let (model, init) = cfg.build()?;
            let e0 = energy_report(&model, &init).e_total;
            let pc = PicardConfig {
                t_tilde,
                dt: cfg.time.dt,
                tol,
                tol_r: tol_r_rel * e0.abs(),
                max_iter,
                flow_substeps: cfg.time.flow_substeps,
            };
            let (_, report) = picard(&model, &init, &pc)?;
            out.push_str(&report.to_csv());
            if !report.converged {
                print!("{out}");
                return Err(Failure::Runtime(format!(
                    "Picard iteration did not converge in {} iterates (last distance {:.3e})",
                    report.iterates,
                    report.distances.last().copied().unwrap_or(f64::NAN)
                )));
            }
        }
        Command::Bihari(a) => {
            let b = bihari_horizon(a.c1, a.g0, a.y0)?;
            writeln!(out, "t_star = {}", b.t_star).unwrap();
            writeln!(out, "t,bound").unwrap();
            let n = a.points.max(1);
            for i in 0..n {
                let t = 0.95 * b.t_star * i as f64 / n as f64;
                writeln!(out, "{t:.16e},{:.16e}", b.bound_at(t)?).unwrap();
            }
            if let Some(trials) = a.check {
                let check = bihari_check(trials, a.seed);
                let passed = check.trials.iter().filter(|t| t.3).count();
                writeln!(out, "check: {passed}/{} trials pass", check.trials.len()).unwrap();
                if !check.all_pass {
                    print!("{out}");
                    return Err(Failure::Runtime("the Bihari bound check failed".into()));
                }
            }
        }
        Command::Besov { csv, column, p, sample_dt } => {
            let p: BesovExponent = p.parse()?;
            let series = read_column(&csv, &column)?;
            let dt = match sample_dt {
                Some(dt) => dt,
                None => uniform_spacing(&read_column(&csv, "t").map_err(|_| {
                    Failure::Usage("no t column; pass --sample-dt".into())
                })?)?,
            };
            let norm = besov_seminorm(&series, p, dt)?;
            writeln!(out, "lp_norm = {:.16e}", norm.lp_norm).unwrap();
            writeln!(out, "seminorm = {:.16e}", norm.seminorm).unwrap();
            writeln!(out, "total = {:.16e}", norm.total).unwrap();
        }
        Command::Sweep { config, modes, eps, output } => {
            let cfg = load_config(&config)?;
            let kind = match (modes, eps) {
                (Some(m), None) => SweepKind::Modes(m),
                (None, Some(e)) => SweepKind::Eps(e),
                _ => return Err(Failure::Usage("give exactly one of --modes or --eps".into())),
            };
            let dir = output.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let report = sweep(&cfg, &kind, Some(&dir))?;
            out.push_str(&report.summary_csv());
            out.push('\n');
            out.push_str(&report.differences_csv());
        }
    }
    Ok(out)
}

fn uniform_spacing(t: &[f64]) -> Result<f64, Failure> {
    if t.len() < 2 {
        return Err(Failure::Usage("series too short to infer the sampling step".into()));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let uniform = t.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300));
    if !(dt > 0.0) || !uniform {
        return Err(Failure::Usage("t column is not uniformly spaced; pass --sample-dt".into()));
    }
    Ok(dt)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
