use clap::{Args, Parser, Subcommand};
use cylgraft_cli::config::CollarTableConfig;
use cylgraft_cli::{report_exit_code, run_command, write_output, CliError, Command, Context, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "cylgraft", version, about = "Verification suites for cylinder grafting on flat surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and the CSV tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance for identities that are exact in the continuum.
    #[arg(long)]
    tol: Option<f64>,
    /// Multiply every mesh resolution by K.
    #[arg(long, value_name = "K", default_value_t = 1)]
    refine: usize,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Closed-form energies, decay and dampening bounds on random harmonic series.
    CylinderCheck(Common),
    /// Collar quantities on a grid of geodesic lengths.
    CollarTable {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ell_min: Option<f64>,
        #[arg(long)]
        ell_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Period data, capacity sandwich and asymptotics along a grafting family.
    GraftSweep(Common),
    /// Energy decay through the cylinder of a separating family.
    PinchVerify(Common),
    /// Limit packages and symplecticity of the assembled family.
    PackageFit(Common),
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let (cmd, common, collar) = match cli.command {
        Sub::CylinderCheck(c) => (Command::CylinderCheck, c, None),
        Sub::CollarTable { common, ell_min, ell_max, steps } => (Command::CollarTable, common, Some((ell_min, ell_max, steps))),
        Sub::GraftSweep(c) => (Command::GraftSweep, c, None),
        Sub::PinchVerify(c) => (Command::PinchVerify, c, None),
        Sub::PackageFit(c) => (Command::PackageFit, c, None),
    };
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some((lo, hi, n)) = collar {
        let mut t = cfg.collar_table.take().unwrap_or_else(CollarTableConfig::default);
        t.ell_min = lo.unwrap_or(t.ell_min);
        t.ell_max = hi.unwrap_or(t.ell_max);
        t.steps = n.unwrap_or(t.steps);
        cfg.collar_table = Some(t);
    }
    let ctx = Context::resolve(&cfg, common.seed, common.tol, common.refine)?;
    let out = run_command(cmd, &cfg, &ctx)?;
    write_output(&common.out, &out)?;
    let s = out.report.summary;
    eprintln!("{}: {} records, {} passed, {} failed, {} informational", cmd.name(), s.total, s.passed, s.failed, s.informational);
    for r in out.report.records.iter().filter(|r| r.failed()) {
        eprintln!("FAIL {} [{}]: {:e} > {:e} + {:e}", r.name, r.anchor, r.lhs, r.rhs, r.floor);
    }
    Ok(report_exit_code(&out.report))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("cylgraft: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
