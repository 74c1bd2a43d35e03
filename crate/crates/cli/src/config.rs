//! Settings resolution: command-line flags, then `RBL_*` environment
//! variables (both handled by clap), then a `key = value` file, then defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rbl_core::asymptotics::schedule;
use rbl_core::robust_solvers::SolverConfig;
use rbl_core::MeanMadSpec;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    Invalid { origin: Origin, message: String },
    #[error("{path}:{line}: {message}")]
    Syntax { path: String, line: usize, message: String },
    #[error("cannot read config file {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("missing `{key}`: pass --{flag}, set RBL_{env} or add `{key} = ...` to the config file")]
    Missing { key: &'static str, flag: String, env: String },
    #[error(transparent)]
    Core(#[from] rbl_core::Error),
}

/// Where a raw setting came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Flag(&'static str),
    File { path: String, line: usize },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Flag(key) => write!(f, "--{}", key.replace('_', "-")),
            Origin::File { path, line } => write!(f, "{path}:{line}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Enumeration {
    #[default]
    Full,
    Symmetric,
}

/// Flags shared by every subcommand. Each also reads `RBL_<NAME>`.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// `key = value` settings file; flags and environment override it.
    #[arg(long, global = true, env = "RBL_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, env = "RBL_FORMAT")]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, env = "RBL_OUT")]
    pub out: Option<PathBuf>,
    /// Seed for Monte Carlo subcommands.
    #[arg(long, global = true, env = "RBL_SEED")]
    pub seed: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "RBL_THREADS")]
    pub threads: Option<String>,
    /// Mean of each valuation.
    #[arg(long, global = true, env = "RBL_MU")]
    pub mu: Option<String>,
    /// Mean absolute deviation of each valuation.
    #[arg(long, global = true, env = "RBL_D")]
    pub d: Option<String>,
    /// Comma-separated, ascending list of good counts.
    #[arg(long, global = true, env = "RBL_M")]
    pub m: Option<String>,
    /// Concentration slack, or `auto` for m^(-1/4) capped at half its admissible range.
    #[arg(long, global = true, env = "RBL_EPS")]
    pub eps: Option<String>,
    /// Chebyshev slack: a number, `auto` for min(m^(-1/4), 0.5), or `best` (ratio only).
    #[arg(long, global = true, env = "RBL_GAMMA")]
    pub gamma: Option<String>,
    /// Points on the 1 - alpha grid.
    #[arg(long, global = true, env = "RBL_ALPHA_GRID")]
    pub alpha_grid: Option<String>,
    /// Points on the price grid.
    #[arg(long, global = true, env = "RBL_PRICE_GRID")]
    pub price_grid: Option<String>,
    /// Monte Carlo sample count.
    #[arg(long, global = true, env = "RBL_N")]
    pub n: Option<String>,
    /// Member law, e.g. `two_point:alpha=0.5` or `pareto:a=2`; repeatable.
    #[arg(long, global = true, env = "RBL_MEMBER")]
    pub member: Vec<String>,
    /// Minimize the concentration constant over the truncation level.
    #[arg(long, global = true, env = "RBL_OPTIMIZE_T")]
    pub optimize_t: Option<String>,
    /// Menu enumeration for `opt-oracle`.
    #[arg(long, global = true, env = "RBL_MODE")]
    pub mode: Option<Enumeration>,
    /// Comma-separated low-point masses, one per good or one for i.i.d.
    #[arg(long, global = true, env = "RBL_ALPHA")]
    pub alpha: Option<String>,
}

const KEYS: [&str; 17] = [
    "format",
    "out",
    "seed",
    "threads",
    "mu",
    "d",
    "m",
    "eps",
    "gamma",
    "alpha_grid",
    "price_grid",
    "n",
    "member",
    "optimize_t",
    "mode",
    "alpha",
    "config",
];

/// A setting before type checking.
#[derive(Debug, Clone)]
struct Raw {
    value: String,
    origin: Origin,
}

/// Raw settings after precedence has been applied.
#[derive(Debug, Default)]
pub struct RawSettings {
    values: BTreeMap<&'static str, Raw>,
    members: Vec<Raw>,
}

fn canonical(key: &str) -> Option<&'static str> {
    let key = key.trim().replace('-', "_");
    KEYS.iter().copied().find(|k| *k == key)
}

/// Parses a `key = value` file. `#` starts a comment; blank lines are skipped.
pub fn parse_file(path: &Path, text: &str) -> Result<Vec<(&'static str, String, usize)>, ConfigError> {
    let shown = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                path: shown,
                line: line_no,
                message: format!("expected `key = value`, got `{body}`"),
            });
        };
        let Some(key) = canonical(key) else {
            return Err(ConfigError::Syntax {
                path: shown,
                line: line_no,
                message: format!("unknown key `{}`", key.trim()),
            });
        };
        if key == "config" {
            return Err(ConfigError::Syntax {
                path: shown,
                line: line_no,
                message: "config files cannot include others".into(),
            });
        }
        out.push((key, value.trim().to_string(), line_no));
    }
    Ok(out)
}

impl RawSettings {
    /// Layers the file (if any) under the flags and environment.
    pub fn resolve(args: &GlobalArgs) -> Result<Self, ConfigError> {
        let mut raw = RawSettings::default();
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
            let shown = path.display().to_string();
            for (key, value, line) in parse_file(path, &text)? {
                let entry = Raw { value, origin: Origin::File { path: shown.clone(), line } };
                if key == "member" {
                    raw.members.push(entry);
                } else {
                    raw.values.insert(key, entry);
                }
            }
        }
        let flags: [(&'static str, Option<String>); 14] = [
            ("format", args.format.map(|f| format!("{f:?}").to_lowercase())),
            ("out", args.out.as_ref().map(|p| p.display().to_string())),
            ("seed", args.seed.clone()),
            ("threads", args.threads.clone()),
            ("mu", args.mu.clone()),
            ("d", args.d.clone()),
            ("m", args.m.clone()),
            ("eps", args.eps.clone()),
            ("gamma", args.gamma.clone()),
            ("alpha_grid", args.alpha_grid.clone()),
            ("price_grid", args.price_grid.clone()),
            ("n", args.n.clone()),
            ("optimize_t", args.optimize_t.clone()),
            ("alpha", args.alpha.clone()),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                raw.values.insert(key, Raw { value, origin: Origin::Flag(key) });
            }
        }
        if let Some(mode) = args.mode {
            raw.values.insert("mode", Raw { value: format!("{mode:?}").to_lowercase(), origin: Origin::Flag("mode") });
        }
        if !args.member.is_empty() {
            raw.members =
                args.member.iter().map(|v| Raw { value: v.clone(), origin: Origin::Flag("member") }).collect();
        }
        Ok(raw)
    }

    fn get(&self, key: &'static str) -> Option<&Raw> {
        self.values.get(key)
    }

    fn missing(key: &'static str) -> ConfigError {
        ConfigError::Missing { key, flag: key.replace('_', "-"), env: key.to_uppercase() }
    }

    fn parse<T: std::str::FromStr>(&self, key: &'static str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.value.trim().parse::<T>().map(Some).map_err(|_| ConfigError::Invalid {
                origin: raw.origin.clone(),
                message: format!("expected {what}, got `{}`", raw.value),
            }),
        }
    }

    pub fn format(&self) -> Result<Format, ConfigError> {
        match self.get("format") {
            None => Ok(Format::default()),
            Some(raw) => Format::from_str(raw.value.trim(), true).map_err(|_| ConfigError::Invalid {
                origin: raw.origin.clone(),
                message: format!("expected csv or json, got `{}`", raw.value),
            }),
        }
    }

    pub fn mode(&self) -> Result<Enumeration, ConfigError> {
        match self.get("mode") {
            None => Ok(Enumeration::default()),
            Some(raw) => Enumeration::from_str(raw.value.trim(), true).map_err(|_| ConfigError::Invalid {
                origin: raw.origin.clone(),
                message: format!("expected full or symmetric, got `{}`", raw.value),
            }),
        }
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.get("out").map(|r| PathBuf::from(r.value.trim()))
    }

    pub fn seed(&self) -> Result<Option<u64>, ConfigError> {
        self.parse("seed", "an unsigned 64-bit integer")
    }

    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed()?.ok_or_else(|| Self::missing("seed"))
    }

    pub fn threads(&self) -> Result<Option<usize>, ConfigError> {
        let threads: Option<usize> = self.parse("threads", "a positive integer")?;
        if threads == Some(0) {
            return Err(self.invalid("threads", "need at least one thread"));
        }
        Ok(threads)
    }

    fn invalid(&self, key: &'static str, message: &str) -> ConfigError {
        let origin = self.get(key).map(|r| r.origin.clone()).unwrap_or(Origin::Flag(key));
        ConfigError::Invalid { origin, message: message.into() }
    }

    pub fn spec(&self) -> Result<MeanMadSpec, ConfigError> {
        let mu: f64 = self.parse("mu", "a number")?.ok_or_else(|| Self::missing("mu"))?;
        let d: f64 = self.parse("d", "a number")?.ok_or_else(|| Self::missing("d"))?;
        MeanMadSpec::new(mu, d).map_err(|e| self.invalid("d", &e.to_string()))
    }

    /// Nonempty, strictly ascending list of positive counts.
    pub fn m_list(&self, default: &[usize]) -> Result<Vec<usize>, ConfigError> {
        let Some(raw) = self.get("m") else {
            return Ok(default.to_vec());
        };
        let mut out = Vec::new();
        for part in raw.value.split(',') {
            let m: usize = part.trim().replace('_', "").parse().map_err(|_| ConfigError::Invalid {
                origin: raw.origin.clone(),
                message: format!("expected a comma-separated list of positive integers, got `{}`", raw.value),
            })?;
            out.push(m);
        }
        if out.is_empty() || out.contains(&0) {
            return Err(self.invalid("m", "good counts must be positive"));
        }
        if !out.windows(2).all(|w| w[0] < w[1]) {
            return Err(self.invalid("m", "good counts must be strictly ascending"));
        }
        Ok(out)
    }

    /// `eps` for a given `m`; `auto` (the default) follows the schedule,
    /// capped at half the admissible range so small `m` stays feasible.
    pub fn eps(&self, m: usize, spec: MeanMadSpec) -> Result<f64, ConfigError> {
        match self.get("eps").map(|r| r.value.trim()) {
            None | Some("auto") => Ok(schedule(m).min(0.5 * spec.max_one_minus_alpha())),
            Some(_) => Ok(self.parse("eps", "a number or `auto`")?.expect("present")),
        }
    }

    pub fn gamma(&self, m: usize) -> Result<GammaChoice, ConfigError> {
        match self.get("gamma").map(|r| r.value.trim()) {
            None | Some("auto") => Ok(GammaChoice::Value(schedule(m).min(0.5))),
            Some("best") => Ok(GammaChoice::Best),
            Some(_) => Ok(GammaChoice::Value(self.parse("gamma", "a number, `auto` or `best`")?.expect("present"))),
        }
    }

    pub fn solver(&self) -> Result<SolverConfig, ConfigError> {
        let mut cfg = SolverConfig::default();
        if let Some(n) = self.parse::<usize>("alpha_grid", "an integer >= 2")? {
            if n < 2 {
                return Err(self.invalid("alpha_grid", "need at least 2 points"));
            }
            cfg.alpha_grid = n;
        }
        if let Some(n) = self.parse::<usize>("price_grid", "an integer >= 3")? {
            if n < 3 {
                return Err(self.invalid("price_grid", "need at least 3 points"));
            }
            cfg.price_grid = n;
        }
        Ok(cfg)
    }

    pub fn samples(&self, default: usize) -> Result<usize, ConfigError> {
        Ok(self.parse("n", "a positive integer")?.unwrap_or(default))
    }

    pub fn optimize_t(&self) -> Result<bool, ConfigError> {
        Ok(self.parse("optimize_t", "true or false")?.unwrap_or(false))
    }

    pub fn alphas(&self) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(raw) = self.get("alpha") else {
            return Ok(None);
        };
        raw.value
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| ConfigError::Invalid {
                    origin: raw.origin.clone(),
                    message: format!("expected comma-separated numbers, got `{}`", raw.value),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Member descriptors with their origins.
    pub fn members(&self) -> impl Iterator<Item = (&str, &Origin)> {
        self.members.iter().map(|r| (r.value.as_str(), &r.origin))
    }
}

/// How the Chebyshev slack is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaChoice {
    Value(f64),
    Best,
}
