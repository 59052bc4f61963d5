//! The five subcommands.

mod collar;
mod cylinder;
mod package;
mod pinch;
mod sweep;

use crate::config::{check_tol, RunConfig, SweepConfig, DEFAULT_SEED, DEFAULT_SOLVER_TOL, DEFAULT_TOL};
use crate::output::Output;
use crate::CliError;
use cylgraft::solver::SolverOptions;

pub use collar::collar_table;
pub use cylinder::cylinder_check;
pub use package::{package_fit, toy_package};
pub use pinch::pinch_verify;
pub use sweep::{graft_sweep, refinement_floor, sweep_samples, SweepRun};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CylinderCheck,
    CollarTable,
    GraftSweep,
    PinchVerify,
    PackageFit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CylinderCheck => "cylinder-check",
            Command::CollarTable => "collar-table",
            Command::GraftSweep => "graft-sweep",
            Command::PinchVerify => "pinch-verify",
            Command::PackageFit => "package-fit",
        }
    }
}

/// Settings shared by all commands after flags override the config file.
#[derive(Clone, Debug, PartialEq)]
pub struct Context {
    pub seed: u64,
    /// Tolerance for identities that hold exactly in the continuum.
    pub tol: f64,
    pub solver: SolverOptions,
    /// Multiplier on every mesh resolution.
    pub refine: usize,
}

impl Context {
    pub fn resolve(cfg: &RunConfig, seed: Option<u64>, tol: Option<f64>, refine: usize) -> Result<Context, CliError> {
        if refine == 0 {
            return Err(CliError::Config("--refine must be at least 1".into()));
        }
        let tol = tol.or(cfg.tol).unwrap_or(DEFAULT_TOL);
        check_tol("tol", tol)?;
        Ok(Context {
            seed: seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
            tol,
            solver: SolverOptions::with_tol(cfg.solver_tol.unwrap_or(DEFAULT_SOLVER_TOL)),
            refine,
        })
    }
}

pub fn run_command(cmd: Command, cfg: &RunConfig, ctx: &Context) -> Result<Output, CliError> {
    match cmd {
        Command::CylinderCheck => cylinder_check(&cfg.cylinder_check.clone().unwrap_or_default(), ctx),
        Command::CollarTable => collar_table(&cfg.collar_table.clone().unwrap_or_default(), ctx),
        Command::GraftSweep => graft_sweep(section(&cfg.graft_sweep, "graft_sweep")?, ctx),
        Command::PinchVerify => pinch_verify(section(&cfg.pinch_verify, "pinch_verify")?, ctx),
        Command::PackageFit => {
            let pf = cfg.package_fit.as_ref().ok_or_else(|| CliError::Config("config has no [package_fit] section".into()))?;
            package_fit(pf, ctx)
        }
    }
}

fn section<'a>(s: &'a Option<SweepConfig>, name: &str) -> Result<&'a SweepConfig, CliError> {
    s.as_ref().ok_or_else(|| CliError::Config(format!("config has no [{name}] section")))
}
