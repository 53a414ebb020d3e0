// SPDX-License-Identifier: Apache-2.0

//! One function per subcommand. Each takes a validated [`RunConfig`].

use std::io::Write;
use std::path::{Path, PathBuf};

use kerr_wigner::channel::{evolve_density_tol, L_SUM_TOL};
use kerr_wigner::density::DEFAULT_N_CUT;
use kerr_wigner::photon_stats::{pn_from_density, pn_overlap_distribution, PnDistribution};
use kerr_wigner::verify::{criteria, fig1_grids, FIG1_HALF_WIDTH, FIG1_RES};
use kerr_wigner::wigner::{wigner_grid, GridSpec, DEFAULT_TOL};
use kerr_wigner::{DensityMatrix, Error, InitialState, Result};

use crate::config::{with_path, CommandKind, PnMethod, RunConfig};

/// Truncation tail above which `evolve` warns.
const TAIL_WARNING: f64 = 1e-6;

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// `verify` ran to completion but at least one criterion failed.
    ChecksFailed,
}

/// Process exit code for an error: 3 for I/O, 2 for convergence, 1 otherwise.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        e if e.is_convergence() => 2,
        _ => 1,
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    match config.command {
        CommandKind::Evolve => cmd_evolve(config).map(|_| Outcome::Success),
        CommandKind::Wigner => cmd_wigner(config).map(|_| Outcome::Success),
        CommandKind::Pn => cmd_pn(config).map(|_| Outcome::Success),
        CommandKind::Fig1 => cmd_fig1(config).map(|_| Outcome::Success),
        CommandKind::Verify => cmd_verify(config),
    }
}

fn write_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| with_path(e, p))?;
            let mut file = std::io::BufWriter::new(file);
            body(&mut file)?;
            file.flush().map_err(|e| with_path(e, p))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn source(config: &RunConfig) -> Result<InitialState> {
    config
        .source
        .as_ref()
        .ok_or_else(|| Error::Validation("no initial state given".into()))?
        .load()
}

fn evolved_density(config: &RunConfig, source: &InitialState) -> Result<DensityMatrix> {
    let params = config.params()?;
    let rho0 = source.to_density(config.n_cut)?;
    let l_max = config.l_max.unwrap_or(rho0.n_cut());
    evolve_density_tol(&rho0, &params, l_max, config.tol.unwrap_or(L_SUM_TOL))
}

/// Writes ρ(t) in the `fock-density v1` format; diagnostics go to stderr.
pub fn cmd_evolve(config: &RunConfig) -> Result<()> {
    let source = source(config)?;
    let rho = evolved_density(config, &source)?;
    eprintln!("n_cut = {}", rho.n_cut());
    eprintln!("trace = {:.16e}", rho.trace().re);
    eprintln!("min eigenvalue = {:.6e}", rho.min_eigenvalue());
    eprintln!("truncation tail = {:.6e}", rho.tail());
    if rho.tail() > TAIL_WARNING {
        eprintln!("warning: truncation tail exceeds {TAIL_WARNING:e}; increase --n-cut");
    }
    write_output(config.output.as_deref(), |w| rho.write_to(w))
}

/// Writes the Wigner grid as CSV. With `output` set a `.meta` sidecar is
/// written next to it; otherwise the metadata goes to stderr.
pub fn cmd_wigner(config: &RunConfig) -> Result<()> {
    let source = source(config)?;
    let spec = GridSpec::square(config.window.unwrap_or(FIG1_HALF_WIDTH), config.res.unwrap_or(FIG1_RES));
    let grid = wigner_grid(&source, &config.params()?, spec, config.tol.unwrap_or(DEFAULT_TOL))?;
    match &config.output {
        Some(path) => grid.save(path).map_err(|e| match e {
            Error::Io(io) => with_path(io, path),
            other => other,
        }),
        None => {
            eprint!("{}", grid.metadata());
            write_output(None, |w| grid.write_csv(w))
        }
    }
}

/// Writes p(s) as CSV by the chosen route.
pub fn cmd_pn(config: &RunConfig) -> Result<()> {
    let source = source(config)?;
    let pn: PnDistribution = match config.method.unwrap_or(PnMethod::Density) {
        PnMethod::Density => pn_from_density(&evolved_density(config, &source)?)?,
        PnMethod::Overlap => {
            let n_max = config.n_max.unwrap_or(DEFAULT_N_CUT - 1);
            pn_overlap_distribution(&source, &config.params()?, n_max)?
        }
    };
    write_output(config.output.as_deref(), |w| pn.write_csv(w))
}

/// Writes `fig1a.csv` … `fig1f.csv` with sidecars into the output directory.
pub fn cmd_fig1(config: &RunConfig) -> Result<()> {
    let dir = config.output.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| with_path(e, &dir))?;
    let grids = fig1_grids(
        config.window.unwrap_or(FIG1_HALF_WIDTH),
        config.res.unwrap_or(FIG1_RES),
        config.tol.unwrap_or(DEFAULT_TOL),
    )?;
    for (label, grid) in &grids {
        let path = dir.join(format!("fig1{label}.csv"));
        grid.save(&path).map_err(|e| match e {
            Error::Io(io) => with_path(io, &path),
            other => other,
        })?;
        eprintln!(
            "{}: chi_t = {}, min = {:.6e}, integral = {:.8}",
            path.display(),
            grid.params.chi_t(),
            grid.min(),
            grid.integral()
        );
    }
    Ok(())
}

/// Prints one line per criterion and a summary.
pub fn cmd_verify(config: &RunConfig) -> Result<Outcome> {
    let all = criteria();
    if let Some(ids) = &config.criteria {
        if let Some(bad) = ids.iter().find(|id| !all.iter().any(|c| c.id == **id)) {
            return Err(Error::Validation(format!("no criterion with id {bad}")));
        }
    }
    let selected = all
        .iter()
        .filter(|c| config.criteria.as_ref().is_none_or(|ids| ids.contains(&c.id)));
    let (mut passed, mut failed) = (0, 0);
    for c in selected {
        let report = c.run();
        println!("{report}");
        if report.passed {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    println!("{passed} passed, {failed} failed");
    Ok(if failed == 0 {
        Outcome::Success
    } else {
        Outcome::ChecksFailed
    })
}
