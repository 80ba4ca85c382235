//! INI-style scenario files.
//!
//! ```ini
//! [game]
//! family = affine
//! a = 2.45
//! b = -0.05
//!
//! [distribution]
//! family = sqrt_shift
//!
//! [protocol]
//! kind = tempered
//! tempering = power
//! k = 3
//!
//! [initial]
//! composition = reversed
//! xbar0 = 0.25
//! ```
//!
//! Every key is validated against a fixed schema so a typo is reported at
//! its line instead of being ignored. Overrides use `section.key=value`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::dynamics::RevisionProtocol;
use crate::game::{AggregateGame, TypeDistribution, LOGISTIC_DEFAULT_TAU};

pub const DEFAULT_N: usize = 2000;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T_END: f64 = 50.0;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_KAPPA: f64 = 0.2;
pub const DEFAULT_PIMAX: f64 = 0.3;

const SCHEMA: &[(&str, &[&str])] = &[
    ("game", &["family", "a", "b", "c"]),
    ("distribution", &["family", "lo", "hi", "mu", "s", "tau"]),
    ("protocol", &["kind", "tempering", "k", "pisharp"]),
    ("grid", &["n"]),
    ("sim", &["dt", "t_end", "snapshot_times", "seed"]),
    (
        "initial",
        &["composition", "xbar0", "kappa", "pimax", "path"],
    ),
    ("select", &["sweep"]),
    ("escape", &["xbar_dagger", "t_end"]),
];

/// Where a value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override(String),
    Missing,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override(s) => write!(f, "override '{s}'"),
            Origin::Missing => f.write_str("config"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{origin}: {message}")]
pub struct ConfigError {
    pub origin: Origin,
    pub message: String,
}

impl ConfigError {
    fn new(origin: Origin, message: impl Into<String>) -> Self {
        Self {
            origin,
            message: message.into(),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self.origin {
            Origin::Line(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Sorted { xbar0: f64 },
    Reversed { xbar0: f64 },
    Balanced { xbar0: f64, kappa: f64, pimax: f64 },
    Random { xbar0: f64 },
    CustomCsv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub game: AggregateGame,
    pub dist: TypeDistribution,
    pub protocol: RevisionProtocol,
    pub n: usize,
    pub sim: SimSettings,
    pub initial: InitialSpec,
    /// Saturation deficits for the `select` sweep.
    pub sweep: Vec<f64>,
    pub xbar_dagger: Option<f64>,
    pub escape_t_end: f64,
}

type Entries = BTreeMap<(String, String), (String, Origin)>;

struct Raw {
    entries: Entries,
    sections: BTreeMap<String, usize>,
}

fn parse_text(text: &str) -> Result<Raw, ConfigError> {
    let mut entries = Entries::new();
    let mut sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, line) in text.lines().enumerate() {
        let no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| {
                    ConfigError::new(
                        Origin::Line(no),
                        format!("malformed section header '{line}'"),
                    )
                })?
                .trim()
                .to_string();
            if !SCHEMA.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::new(
                    Origin::Line(no),
                    format!("unknown section [{name}]"),
                ));
            }
            if sections.insert(name.clone(), no).is_some() {
                return Err(ConfigError::new(
                    Origin::Line(no),
                    format!("duplicate section [{name}]"),
                ));
            }
            current = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::new(
                Origin::Line(no),
                format!("expected 'key = value', got '{line}'"),
            )
        })?;
        let section = current
            .clone()
            .ok_or_else(|| ConfigError::new(Origin::Line(no), "key outside of any section"))?;
        let key = key.trim().to_string();
        check_key(&section, &key, Origin::Line(no))?;
        let value = value.split(" #").next().unwrap_or("").trim().to_string();
        if entries
            .insert((section.clone(), key.clone()), (value, Origin::Line(no)))
            .is_some()
        {
            return Err(ConfigError::new(
                Origin::Line(no),
                format!("duplicate key {section}.{key}"),
            ));
        }
    }
    Ok(Raw { entries, sections })
}

fn check_key(section: &str, key: &str, origin: Origin) -> Result<(), ConfigError> {
    let known = SCHEMA
        .iter()
        .find(|(s, _)| *s == section)
        .map(|(_, k)| *k)
        .unwrap_or(&[]);
    if known.contains(&key) {
        Ok(())
    } else {
        Err(ConfigError::new(
            origin,
            format!("unknown key {section}.{key}"),
        ))
    }
}

fn apply_override(raw: &mut Raw, spec: &str) -> Result<(), ConfigError> {
    let origin = Origin::Override(spec.to_string());
    let (path, value) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::new(origin.clone(), "expected section.key=value"))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| ConfigError::new(origin.clone(), "expected section.key=value"))?;
    if !SCHEMA.iter().any(|(s, _)| *s == section) {
        return Err(ConfigError::new(
            origin,
            format!("unknown section [{section}]"),
        ));
    }
    check_key(section, key, origin.clone())?;
    raw.entries.insert(
        (section.to_string(), key.to_string()),
        (value.trim().to_string(), origin),
    );
    Ok(())
}

struct Reader<'a> {
    raw: &'a Raw,
}

impl Reader<'_> {
    fn get(&self, section: &str, key: &str) -> Option<&(String, Origin)> {
        self.raw
            .entries
            .get(&(section.to_string(), key.to_string()))
    }

    fn missing(&self, section: &str, key: &str) -> ConfigError {
        let origin = self
            .raw
            .sections
            .get(section)
            .map_or(Origin::Missing, |&l| Origin::Line(l));
        ConfigError::new(origin, format!("missing required key {section}.{key}"))
    }

    fn origin(&self, section: &str, key: &str) -> Origin {
        match self.get(section, key) {
            Some((_, o)) => o.clone(),
            None => self
                .raw
                .sections
                .get(section)
                .map_or(Origin::Missing, |&l| Origin::Line(l)),
        }
    }

    fn string(&self, section: &str, key: &str) -> Result<String, ConfigError> {
        self.get(section, key)
            .map(|(v, _)| v.clone())
            .ok_or_else(|| self.missing(section, key))
    }

    fn parsed<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        what: &str,
    ) -> Result<Option<T>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((v, o)) => v.parse().map(Some).map_err(|_| {
                ConfigError::new(o.clone(), format!("{section}.{key} = '{v}' is not {what}"))
            }),
        }
    }

    fn real(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        let v: Option<f64> = self.parsed(section, key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError::new(
                self.origin(section, key),
                format!("{section}.{key} must be finite"),
            )),
            other => Ok(other),
        }
    }

    fn required_real(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.real(section, key)?
            .ok_or_else(|| self.missing(section, key))
    }

    fn list(&self, section: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
        let Some((v, o)) = self.get(section, key) else {
            return Ok(Vec::new());
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        ConfigError::new(
                            o.clone(),
                            format!("{section}.{key}: '{s}' is not a number"),
                        )
                    })
            })
            .collect()
    }

    fn invalid(&self, section: &str, key: &str, e: impl fmt::Display) -> ConfigError {
        ConfigError::new(self.origin(section, key), e.to_string())
    }
}

fn build(raw: &Raw, base: &Path) -> Result<Scenario, ConfigError> {
    let r = Reader { raw };

    let family = r.string("game", "family")?;
    let game = match family.as_str() {
        "affine" => {
            AggregateGame::affine(r.required_real("game", "a")?, r.required_real("game", "b")?)
        }
        "linear_coordination" => AggregateGame::linear_coordination(r.required_real("game", "c")?),
        other => {
            return Err(r.invalid(
                "game",
                "family",
                format!("unknown game family '{other}' (affine, linear_coordination)"),
            ))
        }
    }
    .map_err(|e| r.invalid("game", "family", e))?;

    let family = r.string("distribution", "family")?;
    let dist = match family.as_str() {
        "uniform" => TypeDistribution::uniform(
            r.required_real("distribution", "lo")?,
            r.required_real("distribution", "hi")?,
        ),
        "sqrt_shift" => Ok(TypeDistribution::sqrt_shift()),
        "logistic" => TypeDistribution::logistic(
            r.required_real("distribution", "mu")?,
            r.required_real("distribution", "s")?,
            r.real("distribution", "tau")?
                .unwrap_or(LOGISTIC_DEFAULT_TAU),
        ),
        other => {
            return Err(r.invalid(
                "distribution",
                "family",
                format!("unknown distribution '{other}' (uniform, sqrt_shift, logistic)"),
            ))
        }
    }
    .map_err(|e| r.invalid("distribution", "family", e))?;

    let kind = r.string("protocol", "kind")?;
    let protocol = match kind.as_str() {
        "standard" => Ok(RevisionProtocol::Standard),
        "tempered" => {
            let tempering = r.string("protocol", "tempering")?;
            let k = r.required_real("protocol", "k")?;
            match tempering.as_str() {
                "power" => RevisionProtocol::power(k),
                "bounded_power" => {
                    RevisionProtocol::bounded_power(k, r.required_real("protocol", "pisharp")?)
                }
                other => {
                    return Err(r.invalid(
                        "protocol",
                        "tempering",
                        format!("unknown tempering '{other}' (power, bounded_power)"),
                    ))
                }
            }
        }
        other => {
            return Err(r.invalid(
                "protocol",
                "kind",
                format!("unknown protocol '{other}' (standard, tempered)"),
            ))
        }
    }
    .map_err(|e| r.invalid("protocol", "k", e))?;

    let n: usize = r
        .parsed("grid", "n", "a positive integer")?
        .unwrap_or(DEFAULT_N);
    if n < 2 {
        return Err(r.invalid("grid", "n", format!("grid.n must be at least 2, got {n}")));
    }

    let dt = r.real("sim", "dt")?.unwrap_or(DEFAULT_DT);
    if dt <= 0.0 {
        return Err(r.invalid("sim", "dt", format!("sim.dt must be positive, got {dt}")));
    }
    let t_end = r.real("sim", "t_end")?.unwrap_or(DEFAULT_T_END);
    if t_end <= 0.0 {
        return Err(r.invalid(
            "sim",
            "t_end",
            format!("sim.t_end must be positive, got {t_end}"),
        ));
    }
    let snapshot_times = r.list("sim", "snapshot_times")?;
    if let Some(t) = snapshot_times.iter().find(|t| !(0.0..=t_end).contains(*t)) {
        return Err(r.invalid(
            "sim",
            "snapshot_times",
            format!("snapshot time {t} outside [0, t_end]"),
        ));
    }
    let seed = r
        .parsed("sim", "seed", "an unsigned integer")?
        .unwrap_or(DEFAULT_SEED);

    let composition = r
        .get("initial", "composition")
        .map_or("sorted", |(v, _)| v.as_str());
    let xbar0 = || -> Result<f64, ConfigError> {
        let x = r.required_real("initial", "xbar0")?;
        if !(0.0..=1.0).contains(&x) {
            return Err(r.invalid(
                "initial",
                "xbar0",
                format!("initial.xbar0 must lie in [0,1], got {x}"),
            ));
        }
        Ok(x)
    };
    let initial = match composition {
        "sorted" => InitialSpec::Sorted { xbar0: xbar0()? },
        "reversed" => InitialSpec::Reversed { xbar0: xbar0()? },
        "random" => InitialSpec::Random { xbar0: xbar0()? },
        "balanced" => InitialSpec::Balanced {
            xbar0: xbar0()?,
            kappa: r.real("initial", "kappa")?.unwrap_or(DEFAULT_KAPPA),
            pimax: r.real("initial", "pimax")?.unwrap_or(DEFAULT_PIMAX),
        },
        "custom-csv" => InitialSpec::CustomCsv {
            path: base.join(r.string("initial", "path")?),
        },
        other => {
            return Err(r.invalid(
                "initial",
                "composition",
                format!(
                "unknown composition '{other}' (sorted, reversed, balanced, random, custom-csv)"
            ),
            ))
        }
    };

    let sweep = r.list("select", "sweep")?;
    if let Some(p) = sweep.iter().find(|p| **p <= 0.0) {
        return Err(r.invalid(
            "select",
            "sweep",
            format!("sweep values must be positive, got {p}"),
        ));
    }
    let xbar_dagger = r.real("escape", "xbar_dagger")?;
    let escape_t_end = r.real("escape", "t_end")?.unwrap_or(t_end);

    Ok(Scenario {
        game,
        dist,
        protocol,
        n,
        sim: SimSettings {
            dt,
            t_end,
            snapshot_times,
            seed,
        },
        initial,
        sweep,
        xbar_dagger,
        escape_t_end,
    })
}

/// Parses scenario text. Relative paths resolve against `base`.
pub fn parse_str(text: &str, base: &Path, overrides: &[String]) -> Result<Scenario, ConfigError> {
    let mut raw = parse_text(text)?;
    for o in overrides {
        apply_override(&mut raw, o)?;
    }
    build(&raw, base)
}

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigError::new(
            Origin::Missing,
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_str(&text, base, overrides)
}
