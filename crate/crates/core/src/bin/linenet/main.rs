mod args;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use linenet::exact;
use linenet::monte_carlo::{self, McEstimate};
use linenet::sweep::{self, format_f64, FigureOptions, RhoGrid};
use linenet::validate::{self, ClosedForm, Level, SimulationBudget};

use args::{Cli, Command, ExactArgs, FiguresArgs, LevelArg, SimulateArgs, ValidateArgs};
use settings::Settings;

/// Chi-square p-values at or below this make `simulate` exit with status 1.
const SIMULATE_MIN_P: f64 = 0.001;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or settings: exit status 2.
    #[error("{0}")]
    Usage(String),
    /// A check or statistical comparison failed, or the run itself failed:
    /// exit status 1.
    #[error("{0}")]
    Failed(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Settings::load(cli.config.as_deref()).and_then(|settings| match cli.command {
        Command::Exact(a) => cmd_exact(&settings, a),
        Command::Simulate(a) => cmd_simulate(&settings, a),
        Command::Figures(a) => cmd_figures(&settings, a),
        Command::Validate(a) => cmd_validate(&settings, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_exact(settings: &Settings, a: ExactArgs) -> Result<(), CliError> {
    let net = settings.network(&a.network)?;
    let model = net.closed_form().ok_or_else(|| {
        CliError::Usage("--x: closed forms exist only for an access point at 0; use `simulate`".into())
    })?;
    let m: usize = settings
        .pick(a.m, "m")?
        .ok_or_else(|| CliError::Usage("--m is required".into()))?;
    let mode = settings.mode(a.mode)?;
    let v = exact::q_m(model, net.config.n, m, &net.ratio, mode).map_err(|e| CliError::Usage(e.to_string()))?;

    println!("model: {model}");
    println!("n: {}", net.config.n);
    println!("m: {m}");
    println!("rho: {}", format_f64(net.ratio.value()));
    println!("q_exact: {}", format_f64(v.float_value));
    if !(0.0..=1.0).contains(&v.float_value) {
        println!("q_clamped: {}", format_f64(v.float_value.clamp(0.0, 1.0)));
    }
    println!("eval_mode: {}", v.mode_used);
    println!("cancellation_ratio: {}", format_f64(v.cancellation_ratio));
    println!("max_term: {}", format_f64(v.max_term_magnitude));
    if let Some(q) = &v.rational_value {
        println!("rational: {q}");
    }
    Ok(())
}

fn cmd_simulate(settings: &Settings, a: SimulateArgs) -> Result<(), CliError> {
    let net = settings.network(&a.network)?;
    let trials: u64 = settings.pick(a.trials, "trials")?.unwrap_or(100_000);
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let seed = settings.seed(&a.run)?;
    let workers = settings.workers(&a.run)?;
    let mode = settings.mode(a.mode)?;
    let cfg = net.config;

    let estimates =
        monte_carlo::estimate_distribution(&cfg, trials, seed, workers).map_err(|e| CliError::Usage(e.to_string()))?;
    let x = cfg.access_point.map_or_else(|| "none".to_owned(), format_f64);
    println!(
        "model={} n={} L={} r={} rho={} x={x} trials={trials} seed={seed} workers={workers}",
        net.model,
        cfg.n,
        format_f64(cfg.length),
        format_f64(cfg.radius),
        format_f64(net.ratio.value()),
    );
    print_estimates(&estimates);

    let Some(model) = net.closed_form() else {
        println!("note: no closed form is available for an access point at x={x}; estimates only");
        return Ok(());
    };
    let exact = exact::distribution(model, cfg.n, &net.ratio, mode).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = monte_carlo::compare(&cfg, &estimates, &exact).map_err(|e| CliError::Failed(e.to_string()))?;
    println!();
    println!(
        "{:>4} {:>22} {:>12} {:>12} {:>9}",
        "m", "q_exact", "p_hat", "stderr", "z"
    );
    for row in &report.rows {
        println!(
            "{:>4} {:>22} {:>12} {:>12.3e} {:>9.3}",
            row.m,
            format_f64(row.exact),
            format_f64(row.p_hat),
            row.stderr,
            row.z
        );
    }
    println!(
        "chi_square={} dof={} p_value={}",
        format_f64(report.chi_square),
        report.dof,
        format_f64(report.p_value)
    );
    if report.p_value <= SIMULATE_MIN_P {
        return Err(CliError::Failed(format!(
            "simulation disagrees with the closed form (chi-square p = {:.3e})",
            report.p_value
        )));
    }
    Ok(())
}

fn print_estimates(estimates: &[McEstimate]) {
    println!(
        "{:>4} {:>10} {:>12} {:>12} {:>12} {:>12}",
        "m", "count", "p_hat", "stderr", "ci_low", "ci_high"
    );
    for e in estimates {
        println!(
            "{:>4} {:>10} {:>12} {:>12.3e} {:>12.6} {:>12.6}",
            e.m,
            e.count,
            format_f64(e.p_hat),
            e.stderr,
            e.ci_low,
            e.ci_high
        );
    }
}

fn cmd_figures(settings: &Settings, a: FiguresArgs) -> Result<(), CliError> {
    let out: PathBuf = settings.pick(a.out, "out")?.unwrap_or_else(|| PathBuf::from("figures"));
    let defaults = RhoGrid::FIGURES;
    let opts = FigureOptions {
        trials: settings.pick(a.trials, "trials")?.unwrap_or(100_000),
        seed: settings.seed(&a.run)?,
        workers: settings.workers(&a.run)?,
        mode: settings.mode(a.mode)?,
        rho_grid: RhoGrid {
            start: settings.pick(a.rho_start, "rho-start")?.unwrap_or(defaults.start),
            stop: settings.pick(a.rho_stop, "rho-stop")?.unwrap_or(defaults.stop),
            step: settings.pick(a.rho_step, "rho-step")?.unwrap_or(defaults.step),
        },
        svg: settings.flag(a.svg, "svg")?,
    };
    sweep::figure_spec(&opts)
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let written = sweep::write_figures(&out, &opts).map_err(|e| CliError::Failed(e.to_string()))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_validate(settings: &Settings, a: ValidateArgs) -> Result<(), CliError> {
    let level = match settings.pick(a.level.map(level_name), "level")?.as_deref() {
        None | Some("quick") => Level::Quick,
        Some("full") => Level::Full,
        Some(other) => return Err(CliError::Usage(format!("--level: unknown level {other:?}"))),
    };
    let budget = SimulationBudget {
        trials: settings.pick(a.trials, "trials")?.unwrap_or(100_000),
        seed: settings.seed(&a.run)?,
        workers: settings.workers(&a.run)?,
    };
    if budget.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(budget.workers)
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let report = pool.install(|| validate::run(&ClosedForm, level, budget));
    for check in &report.checks {
        println!("{check}");
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Failed(format!(
            "{failed} of {} checks failed",
            report.checks.len()
        )));
    }
    println!("all {} checks passed", report.checks.len());
    Ok(())
}

fn level_name(level: LevelArg) -> String {
    match level {
        LevelArg::Quick => "quick".into(),
        LevelArg::Full => "full".into(),
    }
}
