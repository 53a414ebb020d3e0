// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kerr_wigner::numeric::parse_complex;
use kerr_wigner::Result;
use num_complex::Complex64;

use crate::config::{with_path, CommandKind, PnMethod, RunConfig, SourceSpec};

#[derive(Debug, Parser)]
#[command(
    name = "kerr-wigner",
    version,
    about = "Exact evolution of a bosonic mode in a lossy Kerr medium"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a density matrix and write it in `fock-density v1` format.
    Evolve(Flags),
    /// Evaluate the evolved Wigner function on a square grid (CSV).
    Wigner(Flags),
    /// Photon-number distribution of the evolved state (CSV).
    Pn(Flags),
    /// Write the six Kerr-squeezing grids fig1a.csv … fig1f.csv.
    Fig1(Flags),
    /// Run the cross-validation battery.
    Verify(Flags),
}

fn complex_arg(s: &str) -> std::result::Result<Complex64, String> {
    parse_complex(s).ok_or_else(|| format!("`{s}` is not of the form a+bi"))
}

/// Flags shared by all subcommands; each command rejects those it does not use.
#[derive(Debug, Clone, Default, Args)]
#[command(allow_negative_numbers = true)]
pub struct Flags {
    /// `key = value` file with defaults for any flag below.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Coherent initial state with amplitude a+bi.
    #[arg(long, value_name = "a+bi", value_parser = complex_arg, allow_hyphen_values = true,
          conflicts_with_all = ["fock", "density"])]
    pub coherent: Option<Complex64>,
    /// Number-state initial state.
    #[arg(long, value_name = "N", conflicts_with = "density")]
    pub fock: Option<usize>,
    /// Initial density matrix in `fock-density v1` format.
    #[arg(long, value_name = "FILE")]
    pub density: Option<PathBuf>,
    /// Kerr coupling χ.
    #[arg(long)]
    pub chi: Option<f64>,
    /// Decay rate γ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Elapsed time (default 1).
    #[arg(long)]
    pub t: Option<f64>,
    /// Dimensionless χt; implies t = 1.
    #[arg(long = "chi-t")]
    pub chi_t: Option<f64>,
    /// Dimensionless γt; implies t = 1.
    #[arg(long = "gamma-t")]
    pub gamma_t: Option<f64>,
    /// Half-width of the square grid [-w, w]² (wigner, fig1; default 4).
    #[arg(long)]
    pub window: Option<f64>,
    /// Grid points per axis (wigner, fig1; default 201).
    #[arg(long)]
    pub res: Option<usize>,
    /// Fock-space truncation (evolve, pn).
    #[arg(long = "n-cut")]
    pub n_cut: Option<usize>,
    /// Largest number of lost quanta kept in the operator sum (evolve, pn).
    #[arg(long = "l-max")]
    pub l_max: Option<usize>,
    /// Series tolerance (wigner, fig1) or dropped-mass tolerance (evolve, pn).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Photon-number route: density or overlap (pn).
    #[arg(long)]
    pub method: Option<PnMethod>,
    /// Largest photon number for the overlap route (pn).
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// Comma-separated criterion ids to run (verify).
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<u32>>,
    /// Output file, or directory for fig1. Defaults to stdout (current directory for fig1).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Self::Evolve(_) => CommandKind::Evolve,
            Self::Wigner(_) => CommandKind::Wigner,
            Self::Pn(_) => CommandKind::Pn,
            Self::Fig1(_) => CommandKind::Fig1,
            Self::Verify(_) => CommandKind::Verify,
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Self::Evolve(f) | Self::Wigner(f) | Self::Pn(f) | Self::Fig1(f) | Self::Verify(f) => f,
        }
    }

    /// Builds the run configuration: config file first, then flags on top.
    pub fn to_config(&self) -> Result<RunConfig> {
        let flags = self.flags();
        let mut config = RunConfig::new(self.kind());
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path).map_err(|e| with_path(e, path))?;
            config.apply_file_text(&text)?;
        }
        config.overlay(&flags.to_config(self.kind()));
        Ok(config)
    }
}

impl Flags {
    fn to_config(&self, command: CommandKind) -> RunConfig {
        let source = match (self.coherent, self.fock, &self.density) {
            (Some(z), _, _) => Some(SourceSpec::Coherent(z)),
            (_, Some(s), _) => Some(SourceSpec::Fock(s)),
            (_, _, Some(p)) => Some(SourceSpec::Density(p.clone())),
            _ => None,
        };
        RunConfig {
            command,
            source,
            chi: self.chi,
            gamma: self.gamma,
            t: self.t,
            chi_t: self.chi_t,
            gamma_t: self.gamma_t,
            window: self.window,
            res: self.res,
            n_cut: self.n_cut,
            l_max: self.l_max,
            tol: self.tol,
            method: self.method,
            n_max: self.n_max,
            criteria: self.criteria.clone(),
            output: self.output.clone(),
        }
    }
}
