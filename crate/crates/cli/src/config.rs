//! Run configuration: per-subcommand key tables, `--key value` flags and
//! plain-text `key = value` config files. Flags override file entries.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{Arg, ArgMatches, Command};

use crate::error::CliError;

pub const DEFAULT_OUT: &str = "hsnum-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Exponents,
    Quadrature,
    Constant,
    VerifyExtremal,
    VerifyProp4,
    Minimize,
    DecayFit,
    Plot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Uint,
    Float,
    UintList,
    FloatList,
    /// One of the listed words; any text when the list is empty.
    Text(&'static [&'static str]),
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Presence {
    Required,
    Default(&'static str),
    Optional,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    pub presence: Presence,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, presence: Presence, help: &'static str) -> KeySpec {
    KeySpec {
        name,
        kind,
        presence,
        help,
    }
}

use Kind::*;
use Presence::*;

const EXPONENTS: &[KeySpec] = &[
    key("n", Uint, Required, "ambient dimension"),
    key("k", Uint, Required, "dimension of the singular subspace"),
    key("p", Float, Default("2"), "Sobolev exponent"),
    key("s", Float, Default("1"), "weight exponent"),
    key("t", Float, Optional, "evaluate kappa_t = p*(t)/p"),
];

const QUADRATURE: &[KeySpec] = &[
    key(
        "identity",
        Text(&["beta-full", "beta-radial", "newtonian-ball"]),
        Default("beta-full"),
        "closed form to compare against quadrature",
    ),
    key("n", Uint, Optional, "ambient dimension (beta-full, newtonian-ball)"),
    key("k", Uint, Required, "dimension of the singular subspace"),
    key("m", Float, Default("2"), "power of (1+|x|^2+|y|^2)^{-m} (beta-full)"),
    key("a", Float, Optional, "power of (1+|x|^2)^{-a} (beta-radial)"),
    key("s", Float, Default("0"), "weight exponent"),
    key("z", FloatList, Optional, "evaluation point (newtonian-ball); default (1, 0, .., 0)"),
    key("tol", Float, Default("1e-10"), "relative quadrature tolerance"),
];

const CONSTANT: &[KeySpec] = &[
    key("n", Uint, Required, "ambient dimension"),
    key("k", Uint, Required, "dimension of the singular subspace"),
];

const VERIFY_EXTREMAL: &[KeySpec] = &[
    key("n", Uint, Default("3"), "ambient dimension"),
    key("k", Uint, Default("2"), "dimension of the singular subspace"),
    key("lambda", Float, Default("1"), "dilation of the extremal"),
    key("extent", Float, Default("2"), "side of the uniform grids"),
    key("levels", UintList, Default("128,256,512,1024"), "nested node counts per axis"),
    key("rho-min", Float, Optional, "residual window rho >= rho-min; default the extremal's shift"),
];

const VERIFY_PROP4: &[KeySpec] = &[
    key("a", Uint, Default("1"), "x lives in R^{a+1}"),
    key("b", Uint, Default("1"), "y lives in R^{b+1}"),
    key("lambda", Float, Default("1"), "dilation"),
    key("alpha", Float, Default("1"), "shift in |x|"),
    key("beta", Float, Default("1"), "shift in |y|"),
    key("lo", Float, Default("1"), "lower corner of the square box"),
    key("hi", Float, Default("2"), "upper corner of the square box"),
    key("nodes", Uint, Default("801"), "uniform nodes per axis"),
];

const MINIMIZE: &[KeySpec] = &[
    key("n", Uint, Default("3"), "ambient dimension"),
    key("k", Uint, Default("2"), "dimension of the singular subspace"),
    key("s", Float, Default("1"), "weight exponent"),
    key("extent", Float, Default("20"), "rho_max = r_max"),
    key("nodes", Uint, Default("128"), "nodes per axis"),
    key("grading", Float, Default("2"), "power grading exponent (1 = uniform)"),
    key("step", Float, Default("1"), "pseudo-time step"),
    key("max-iters", Uint, Default("2000"), "iteration budget"),
    key("tol", Float, Default("1e-10"), "relative energy change for convergence"),
    key("init", Text(&["analytic", "bump", "grid"]), Default("analytic"), "initial state"),
    key("lambda", Float, Default("1"), "dilation of the analytic initial state"),
    key("init-grid", File, Optional, "grid dump used by init = grid"),
    key("scheme", Text(&["semi-implicit", "explicit"]), Default("semi-implicit"), "time stepping"),
    key("history", File, Default("history.csv"), "energy history table (relative to --out)"),
    key("grid-out", File, Default("minimizer.csv"), "minimizer grid dump (relative to --out)"),
];

const DECAY_FIT: &[KeySpec] = &[
    key("input", File, Required, "grid dump or ray-sample file"),
    key("direction", Text(&["rho-axis", "r-axis", "diagonal"]), Default("diagonal"), "ray for grid input"),
    key("lo", Float, Optional, "smallest radius; grid default 10 core radii"),
    key("hi", Float, Optional, "largest radius; grid default a tenth of the box"),
    key("count", Uint, Default("16"), "samples drawn from a grid"),
    key("n", Uint, Optional, "ambient dimension (taken from a grid dump)"),
    key("p", Float, Default("2"), "Sobolev exponent"),
    key(
        "mode",
        Text(&["solution-two-sided", "subsolution-upper", "general-p"]),
        Default("solution-two-sided"),
        "decay bound to check",
    ),
    key("tol", Float, Default("0.1"), "tolerance on the exponent"),
];

const PLOT: &[KeySpec] = &[
    key("input", File, Required, "grid dump, history table or ray samples"),
    key("kind", Text(&["auto", "grid", "history", "rays"]), Default("auto"), "input format"),
    key(
        "axes",
        Text(&["auto", "linear", "log-x", "log-y", "log-log"]),
        Default("auto"),
        "axis scales; auto is log-log for profiles, linear for histories",
    ),
    key("output", File, Default("plot.svg"), "SVG file (relative to --out)"),
    key("title", Text(&[]), Optional, "plot caption"),
];

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::Exponents,
        Subcommand::Quadrature,
        Subcommand::Constant,
        Subcommand::VerifyExtremal,
        Subcommand::VerifyProp4,
        Subcommand::Minimize,
        Subcommand::DecayFit,
        Subcommand::Plot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Exponents => "exponents",
            Subcommand::Quadrature => "quadrature",
            Subcommand::Constant => "constant",
            Subcommand::VerifyExtremal => "verify-extremal",
            Subcommand::VerifyProp4 => "verify-prop4",
            Subcommand::Minimize => "minimize",
            Subcommand::DecayFit => "decay-fit",
            Subcommand::Plot => "plot",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Subcommand::Exponents => "Hardy-Sobolev conjugates and auxiliary exponents",
            Subcommand::Quadrature => "compare a Beta or Newtonian closed form with quadrature",
            Subcommand::Constant => "sharp constant K for s = 1, p = 2 and its printed variants",
            Subcommand::VerifyExtremal => "Euler-Lagrange residual of the extremal under grid refinement",
            Subcommand::VerifyProp4 => "residuals of the explicit cylindrical solution family",
            Subcommand::Minimize => "normalized gradient flow for the Rayleigh quotient",
            Subcommand::DecayFit => "log-log decay fit and decay-bound verdict",
            Subcommand::Plot => "render a grid dump, history or ray samples to SVG",
        }
    }

    pub fn keys(self) -> &'static [KeySpec] {
        match self {
            Subcommand::Exponents => EXPONENTS,
            Subcommand::Quadrature => QUADRATURE,
            Subcommand::Constant => CONSTANT,
            Subcommand::VerifyExtremal => VERIFY_EXTREMAL,
            Subcommand::VerifyProp4 => VERIFY_PROP4,
            Subcommand::Minimize => MINIMIZE,
            Subcommand::DecayFit => DECAY_FIT,
            Subcommand::Plot => PLOT,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully resolved run: every key with a default is present.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub params: BTreeMap<String, String>,
    pub output_dir: PathBuf,
}

pub fn command() -> Command {
    let mut cmd = Command::new("hsnum")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Sharp constants, extremals and decay checks for Hardy-Sobolev inequalities")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sub in Subcommand::ALL {
        let mut sc = Command::new(sub.name())
            .about(sub.about())
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .help("file of key = value lines; flags take precedence"),
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("DIR")
                    .help(format!("output directory [default: {DEFAULT_OUT}]")),
            );
        for spec in sub.keys() {
            let mut arg = Arg::new(spec.name).long(spec.name).value_name("VALUE").help(spec.help);
            if let Default(d) = spec.presence {
                arg = arg.help(format!("{} [default: {d}]", spec.help));
            }
            sc = sc.arg(arg);
        }
        cmd = cmd.subcommand(sc);
    }
    cmd
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Entries of a `key = value` file; `#` starts a comment line.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut out: Vec<(String, String)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key = value", path.display(), no + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(usage(format!("{}:{}: duplicate key '{k}'", path.display(), no + 1)));
        }
        out.push((k, v));
    }
    Ok(out)
}

fn check_value(spec: &KeySpec, value: &str) -> Result<(), CliError> {
    let bad = |what: &str| usage(format!("invalid value '{value}' for '{}': expected {what}", spec.name));
    let float_ok = |s: &str| s.trim().parse::<f64>().is_ok_and(f64::is_finite);
    let uint_ok = |s: &str| s.trim().parse::<u32>().is_ok();
    match spec.kind {
        Uint if !uint_ok(value) => Err(bad("a non-negative integer")),
        Float if !float_ok(value) => Err(bad("a finite number")),
        UintList if value.split(',').any(|s| !uint_ok(s)) => Err(bad("comma-separated non-negative integers")),
        FloatList if value.split(',').any(|s| !float_ok(s)) => Err(bad("comma-separated finite numbers")),
        Text(choices) if !choices.is_empty() && !choices.contains(&value) => {
            Err(bad(&format!("one of {}", choices.join(", "))))
        }
        File if value.is_empty() => Err(bad("a path")),
        _ => Ok(()),
    }
}

/// Merges file entries, flag values and defaults; validates every value.
pub fn resolve(
    sub: Subcommand,
    file: Vec<(String, String)>,
    flags: Vec<(String, String)>,
    out_flag: Option<String>,
) -> Result<RunConfig, CliError> {
    let mut params = BTreeMap::new();
    let mut out = None;
    for (k, v) in file {
        match k.as_str() {
            "subcommand" if v == sub.name() => {}
            "subcommand" => return Err(usage(format!("config file is for '{v}', not '{sub}'"))),
            "out" => out = Some(v),
            _ if sub.keys().iter().any(|s| s.name == k) => {
                params.insert(k, v);
            }
            _ => return Err(usage(format!("unknown key '{k}' for {sub}"))),
        }
    }
    for (k, v) in flags {
        params.insert(k, v);
    }
    for spec in sub.keys() {
        match (params.get(spec.name), spec.presence) {
            (Some(v), _) => check_value(spec, v)?,
            (None, Default(d)) => {
                params.insert(spec.name.to_string(), d.to_string());
            }
            (None, Required) => return Err(usage(format!("missing required key '{}' for {sub}", spec.name))),
            (None, Optional) => {}
        }
    }
    let output_dir = PathBuf::from(out_flag.or(out).unwrap_or_else(|| DEFAULT_OUT.to_string()));
    Ok(RunConfig {
        subcommand: sub,
        params,
        output_dir,
    })
}

fn flag_values(sub: Subcommand, m: &ArgMatches) -> Vec<(String, String)> {
    sub.keys()
        .iter()
        .filter(|s| m.value_source(s.name) == Some(ValueSource::CommandLine))
        .filter_map(|s| m.get_one::<String>(s.name).map(|v| (s.name.to_string(), v.clone())))
        .collect()
}

/// Parses `argv` (without the program name).
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let full = std::iter::once(std::ffi::OsString::from("hsnum")).chain(argv.into_iter().map(Into::into));
    let matches = command().try_get_matches_from(full).map_err(CliError::Clap)?;
    let (name, m) = matches.subcommand().ok_or_else(|| usage("missing subcommand"))?;
    let sub = Subcommand::parse(name).ok_or_else(|| usage(format!("unknown subcommand '{name}'")))?;
    let file = match m.get_one::<String>("config") {
        Some(p) => read_config_file(Path::new(p))?,
        None => Vec::new(),
    };
    resolve(sub, file, flag_values(sub, m), m.get_one::<String>("out").cloned())
}

impl RunConfig {
    fn raw(&self, key: &str) -> Result<&str, CliError> {
        self.params
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| usage(format!("{} needs key '{key}'", self.subcommand)))
    }

    pub fn has(&self, key: &str) -> bool {
        self.params.contains_key(key)
    }

    pub fn text(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key)
    }

    pub fn uint(&self, key: &str) -> Result<u32, CliError> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| usage(format!("'{key}' = '{v}' is not a non-negative integer")))
    }

    pub fn float(&self, key: &str) -> Result<f64, CliError> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| usage(format!("'{key}' = '{v}' is not a number")))
    }

    pub fn float_opt(&self, key: &str) -> Result<Option<f64>, CliError> {
        if self.has(key) {
            self.float(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn uint_opt(&self, key: &str) -> Result<Option<u32>, CliError> {
        if self.has(key) {
            self.uint(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn float_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = self.raw(key)?;
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| usage(format!("'{key}' = '{v}' is not a number list"))))
            .collect()
    }

    pub fn uint_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        let v = self.raw(key)?;
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| usage(format!("'{key}' = '{v}' is not an integer list"))))
            .collect()
    }

    /// A path resolved against the output directory.
    pub fn out_path(&self, key: &str) -> Result<PathBuf, CliError> {
        Ok(self.output_dir.join(self.raw(key)?))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        Ok(PathBuf::from(self.raw(key)?))
    }

    /// Re-feedable `key = value` text echoing the resolved configuration.
    pub fn manifest(&self) -> String {
        let mut out = format!(
            "# hsnum {} run manifest; rerun with: hsnum {} --config <this file>\n",
            env!("CARGO_PKG_VERSION"),
            self.subcommand
        );
        out.push_str(&format!("subcommand = {}\n", self.subcommand));
        out.push_str(&format!("out = {}\n", self.output_dir.display()));
        for spec in self.subcommand.keys() {
            if let Some(v) = self.params.get(spec.name) {
                out.push_str(&format!("{} = {v}\n", spec.name));
            }
        }
        out
    }
}
