use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hmt_cli::{run_all, run_suite, CliError, RunConfig, Suite, SuiteReport};

#[derive(Parser)]
#[command(name = "hmtlab", version, about = "Verification suites for the radial Hardy-Moser-Trudinger problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key = value configuration file; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the random profile sweeps
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of grid nodes
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Largest hyperbolic radius of the grid
    #[arg(long, global = true)]
    tmax: Option<String>,
    /// Alternative C_G fit window LO,HI
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Comma-separated ε ladder; accepts multiples of pi such as 3pi,pi/2
    #[arg(long, visible_alias = "epsilon", global = true, allow_hyphen_values = true)]
    epsilons: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Green's function, C_G extraction, Pohozaev and energy-split checks
    Green,
    /// Subcritical maximisers along an ε ladder
    Maximize,
    /// Lower-bound certificate and sharpness witnesses
    Certify,
    /// Random-profile inequality and rearrangement suites
    RearrangeCheck,
    /// Every suite, concurrently, one subdirectory each
    All,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Hardy,
    Dirichlet,
}

fn config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let mut flags: Vec<(&str, String)> = Vec::new();
    if let Some(v) = &cli.out {
        flags.push(("out", v.display().to_string()));
    }
    if let Some(v) = cli.seed {
        flags.push(("seed", v.to_string()));
    }
    if let Some(v) = cli.n {
        flags.push(("n", v.to_string()));
    }
    if let Some(v) = &cli.tmax {
        flags.push(("tmax", v.clone()));
    }
    if let Some(v) = &cli.window {
        flags.push(("window", v.clone()));
    }
    if let Some(v) = cli.mode {
        flags.push(("mode", if matches!(v, ModeArg::Hardy) { "hardy" } else { "dirichlet" }.into()));
    }
    if let Some(v) = &cli.epsilons {
        flags.push(("epsilons", v.clone()));
    }
    for (k, v) in flags {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_suite(rep: &SuiteReport) {
    println!("{} {} ({:.1} s)", if rep.passed { "PASS" } else { "FAIL" }, rep.suite, rep.wall_time_s);
    for c in &rep.checks {
        let mark = match (c.passed, c.gating) {
            (true, _) => "ok  ",
            (false, true) => "FAIL",
            (false, false) => "warn",
        };
        let cmp = serde_json::to_value(c.comparison).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        println!("    {mark} {}: {:.6e} {cmp} {:.3e}", c.name, c.value, c.threshold);
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = config(cli)?;
    let suite = match cli.command {
        Command::Green => Suite::Green,
        Command::Maximize => Suite::Maximize,
        Command::Certify => Suite::Certify,
        Command::RearrangeCheck => Suite::RearrangeCheck,
        Command::All => {
            let all = run_all(&cfg, &cfg.out)?;
            all.suites.iter().for_each(print_suite);
            println!("report: {}", cfg.out.join("report.json").display());
            return Ok(all.passed);
        }
    };
    let rep = run_suite(suite, &cfg, &cfg.out)?;
    print_suite(&rep);
    println!("report: {}", cfg.out.join("report.json").display());
    Ok(rep.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hmtlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
