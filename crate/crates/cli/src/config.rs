// SPDX-License-Identifier: Apache-2.0

//! Run configuration and its `key = value` text form.
//!
//! Keys are the long flag names. A config file may name the command; if it
//! does, it must match the subcommand being run.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use kerr_wigner::numeric::{format_complex, parse_complex};
use kerr_wigner::{ChannelParams, DensityMatrix, Error, InitialState, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Evolve,
    Wigner,
    Pn,
    Fig1,
    Verify,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::Wigner => "wigner",
            Self::Pn => "pn",
            Self::Fig1 => "fig1",
            Self::Verify => "verify",
        }
    }

    fn allows(self, key: &str) -> bool {
        const SOURCE: [&str; 3] = ["coherent", "fock", "density"];
        const PARAMS: [&str; 5] = ["chi", "gamma", "t", "chi-t", "gamma-t"];
        let in_source = SOURCE.contains(&key) || PARAMS.contains(&key);
        match self {
            Self::Evolve => in_source || matches!(key, "n-cut" | "l-max" | "tol" | "output"),
            Self::Wigner => in_source || matches!(key, "window" | "res" | "tol" | "output"),
            Self::Pn => in_source || matches!(key, "n-cut" | "l-max" | "tol" | "method" | "n-max" | "output"),
            Self::Fig1 => matches!(key, "window" | "res" | "tol" | "output"),
            Self::Verify => key == "criteria",
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CommandKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "evolve" => Self::Evolve,
            "wigner" => Self::Wigner,
            "pn" => Self::Pn,
            "fig1" => Self::Fig1,
            "verify" => Self::Verify,
            other => return Err(format!("unknown command `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Coherent(Complex64),
    Fock(usize),
    /// A `fock-density v1` file.
    Density(PathBuf),
}

impl SourceSpec {
    fn key(&self) -> &'static str {
        match self {
            Self::Coherent(_) => "coherent",
            Self::Fock(_) => "fock",
            Self::Density(_) => "density",
        }
    }

    fn value_text(&self) -> String {
        match self {
            Self::Coherent(z) => format_complex(*z),
            Self::Fock(s) => s.to_string(),
            Self::Density(p) => p.display().to_string(),
        }
    }

    /// Loads the source, reading and validating the density file if any.
    pub fn load(&self) -> Result<InitialState> {
        Ok(match self {
            Self::Coherent(z) => InitialState::Coherent(*z),
            Self::Fock(s) => InitialState::Number(*s),
            Self::Density(path) => {
                let file = std::fs::File::open(path).map_err(|e| with_path(e, path))?;
                let rho = DensityMatrix::read_from(std::io::BufReader::new(file))?;
                rho.validate()?;
                InitialState::Matrix(rho)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnMethod {
    /// Diagonal of the evolved density matrix.
    Density,
    /// Overlap of the initial Wigner function with the loss kernel.
    Overlap,
}

impl FromStr for PnMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "density" => Ok(Self::Density),
            "overlap" => Ok(Self::Overlap),
            other => Err(format!("unknown method `{other}` (expected density or overlap)")),
        }
    }
}

impl fmt::Display for PnMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Density => "density",
            Self::Overlap => "overlap",
        })
    }
}

/// Every setting of one run. Unset fields take command defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub source: Option<SourceSpec>,
    pub chi: Option<f64>,
    pub gamma: Option<f64>,
    pub t: Option<f64>,
    pub chi_t: Option<f64>,
    pub gamma_t: Option<f64>,
    /// Half-width of the square phase-space window.
    pub window: Option<f64>,
    /// Points per axis.
    pub res: Option<usize>,
    pub n_cut: Option<usize>,
    pub l_max: Option<usize>,
    pub tol: Option<f64>,
    pub method: Option<PnMethod>,
    pub n_max: Option<usize>,
    pub criteria: Option<Vec<u32>>,
    pub output: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Validation(format!("invalid value `{value}` for `{key}`: {e}")))
}

fn parse_float(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_value(key, value)?;
    if !v.is_finite() {
        return Err(Error::Validation(format!("`{key}` must be finite, got {value}")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            source: None,
            chi: None,
            gamma: None,
            t: None,
            chi_t: None,
            gamma_t: None,
            window: None,
            res: None,
            n_cut: None,
            l_max: None,
            tol: None,
            method: None,
            n_max: None,
            criteria: None,
            output: None,
        }
    }

    /// Sets one key from its text value. `command` is not a settable key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "coherent" => {
                let z = parse_complex(value)
                    .ok_or_else(|| Error::Validation(format!("invalid complex amplitude `{value}`, expected a+bi")))?;
                self.source = Some(SourceSpec::Coherent(z));
            }
            "fock" => self.source = Some(SourceSpec::Fock(parse_value(key, value)?)),
            "density" => self.source = Some(SourceSpec::Density(PathBuf::from(value))),
            "chi" => self.chi = Some(parse_float(key, value)?),
            "gamma" => self.gamma = Some(parse_float(key, value)?),
            "t" => self.t = Some(parse_float(key, value)?),
            "chi-t" => self.chi_t = Some(parse_float(key, value)?),
            "gamma-t" => self.gamma_t = Some(parse_float(key, value)?),
            "window" => self.window = Some(parse_float(key, value)?),
            "res" => self.res = Some(parse_value(key, value)?),
            "n-cut" => self.n_cut = Some(parse_value(key, value)?),
            "l-max" => self.l_max = Some(parse_value(key, value)?),
            "tol" => self.tol = Some(parse_float(key, value)?),
            "method" => self.method = Some(parse_value(key, value)?),
            "n-max" => self.n_max = Some(parse_value(key, value)?),
            "criteria" => {
                let ids = value
                    .split(',')
                    .map(|id| parse_value::<u32>(key, id.trim()))
                    .collect::<Result<Vec<_>>>()?;
                self.criteria = Some(ids);
            }
            "output" => self.output = Some(PathBuf::from(value)),
            other => return Err(Error::Validation(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Set keys and their text values, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(s) = &self.source {
            out.push((s.key(), s.value_text()));
        }
        let floats = [
            ("chi", self.chi),
            ("gamma", self.gamma),
            ("t", self.t),
            ("chi-t", self.chi_t),
            ("gamma-t", self.gamma_t),
            ("window", self.window),
        ];
        out.extend(floats.iter().filter_map(|(k, v)| v.map(|v| (*k, v.to_string()))));
        let counts = [("res", self.res), ("n-cut", self.n_cut), ("l-max", self.l_max)];
        out.extend(counts.iter().filter_map(|(k, v)| v.map(|v| (*k, v.to_string()))));
        if let Some(tol) = self.tol {
            out.push(("tol", tol.to_string()));
        }
        if let Some(m) = self.method {
            out.push(("method", m.to_string()));
        }
        if let Some(n) = self.n_max {
            out.push(("n-max", n.to_string()));
        }
        if let Some(ids) = &self.criteria {
            let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
            out.push(("criteria", ids.join(",")));
        }
        if let Some(p) = &self.output {
            out.push(("output", p.display().to_string()));
        }
        out
    }

    /// `key = value` lines, starting with the command.
    pub fn to_text(&self) -> String {
        let mut text = format!("command = {}\n", self.command);
        for (k, v) in self.entries() {
            text.push_str(&format!("{k} = {v}\n"));
        }
        text
    }

    /// Parses a full config, which must name its command.
    pub fn from_text(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        let (_, _, command) = entries
            .iter()
            .find(|(_, k, _)| k == "command")
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: "missing `command` key".into(),
            })?;
        let mut config = Self::new(parse_value("command", command)?);
        config.apply_entries(&entries)?;
        Ok(config)
    }

    /// Applies entries from a config file. A `command` entry must match.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        let entries = parse_entries(text)?;
        self.apply_entries(&entries)
    }

    fn apply_entries(&mut self, entries: &[(usize, String, String)]) -> Result<()> {
        for (line, key, value) in entries {
            if key == "command" {
                if value != self.command.name() {
                    return Err(Error::Validation(format!(
                        "config line {line} is for command `{value}`, running `{}`",
                        self.command
                    )));
                }
                continue;
            }
            self.set(key, value).map_err(|e| match e {
                Error::Validation(msg) => Error::Parse { line: *line, msg },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Overlays settings given on the command line. A flag for χ, γ or the
    /// source replaces both forms of that setting from the file.
    pub fn overlay(&mut self, flags: &RunConfig) {
        if flags.source.is_some() {
            self.source = flags.source.clone();
        }
        if flags.chi.is_some() || flags.chi_t.is_some() {
            self.chi = flags.chi;
            self.chi_t = flags.chi_t;
        }
        if flags.gamma.is_some() || flags.gamma_t.is_some() {
            self.gamma = flags.gamma;
            self.gamma_t = flags.gamma_t;
        }
        macro_rules! take {
            ($($f:ident),*) => {$(if flags.$f.is_some() { self.$f = flags.$f.clone(); })*};
        }
        take!(t, window, res, n_cut, l_max, tol, method, n_max, criteria, output);
    }

    /// Checks that every set key applies to the command and that values are in range.
    pub fn validate(&self) -> Result<()> {
        for (key, _) in self.entries() {
            if !self.command.allows(key) {
                return Err(Error::Validation(format!(
                    "`{key}` does not apply to `{}`",
                    self.command
                )));
            }
        }
        if matches!(
            self.command,
            CommandKind::Evolve | CommandKind::Wigner | CommandKind::Pn
        ) {
            if self.source.is_none() {
                return Err(Error::Validation(format!(
                    "`{}` needs an initial state: --coherent, --fock or --density",
                    self.command
                )));
            }
            self.params()?;
        }
        if let Some(w) = self.window {
            if !(w > 0.0) {
                return Err(Error::Validation(format!("window must be > 0, got {w}")));
            }
        }
        if let Some(r) = self.res {
            if r < 2 {
                return Err(Error::Validation(format!("res must be >= 2, got {r}")));
            }
        }
        if let Some(n) = self.n_cut {
            if n == 0 {
                return Err(Error::Validation("n-cut must be >= 1".into()));
            }
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return Err(Error::Validation(format!("tol must be > 0, got {tol}")));
            }
        }
        if self.n_max.is_some() && self.method != Some(PnMethod::Overlap) {
            return Err(Error::Validation("n-max applies only with method = overlap".into()));
        }
        Ok(())
    }

    /// Channel parameters. With χt or γt given, t is 1 and any rate flag is
    /// read at unit time; combining either with `t`, or giving both forms of
    /// one rate, is rejected. Unset values default to χ = γ = 0, t = 1.
    pub fn params(&self) -> Result<ChannelParams> {
        if self.chi.is_some() && self.chi_t.is_some() {
            return Err(Error::Validation("give either --chi or --chi-t, not both".into()));
        }
        if self.gamma.is_some() && self.gamma_t.is_some() {
            return Err(Error::Validation("give either --gamma or --gamma-t, not both".into()));
        }
        let dimensionless = self.chi_t.is_some() || self.gamma_t.is_some();
        if dimensionless && self.t.is_some() {
            return Err(Error::Validation(
                "--t cannot be combined with --chi-t or --gamma-t".into(),
            ));
        }
        let chi = self.chi.or(self.chi_t).unwrap_or(0.0);
        let gamma = self.gamma.or(self.gamma_t).unwrap_or(0.0);
        ChannelParams::new(chi, gamma, self.t.unwrap_or(1.0))
    }
}

/// Adds the offending path to an I/O error.
pub fn with_path(e: std::io::Error, path: &std::path::Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Splits config text into (line, key, value), skipping blanks and `#` comments.
fn parse_entries(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `key = value`, got `{body}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line,
                msg: format!("empty key or value in `{body}`"),
            });
        }
        if out.iter().any(|(_, k, _): &(usize, String, String)| k == key) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
        out.push((line, key.to_string(), value.to_string()));
    }
    Ok(out)
}
