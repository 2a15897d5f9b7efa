use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use besovcap::capacity::AdmissibleFamily;
use sha2::{Digest, Sha256};

/// Keys accepted in a config file; each mirrors the flag of the same name.
pub const KEYS: [&str; 14] = [
    "command", "set", "fn", "space", "p", "q", "alpha", "alphas", "spacing", "tau-grid",
    "eps-grid", "gamma-grid", "out", "format",
];

#[derive(Debug)]
pub enum ConfigError {
    UnknownKey(String),
    Domain(String),
    MissingFile(PathBuf),
    Syntax(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey(k) => write!(f, "unknown key `{k}`"),
            ConfigError::Domain(m) => write!(f, "domain error: {m}"),
            ConfigError::MissingFile(p) => write!(f, "missing file: {}", p.display()),
            ConfigError::Syntax(m) => write!(f, "syntax error: {m}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Norm,
    Modulus,
    Besov,
    Rearrange,
    Capacity,
    SweepToOne,
    SweepToZero,
    Verify,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "norm" => Command::Norm,
            "modulus" => Command::Modulus,
            "besov" => Command::Besov,
            "rearrange" => Command::Rearrange,
            "capacity" => Command::Capacity,
            "sweep-to-one" => Command::SweepToOne,
            "sweep-to-zero" => Command::SweepToZero,
            "verify" => Command::Verify,
            other => return Err(ConfigError::Domain(format!("unknown command `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    Sobolev,
    Besov,
}

/// A grid function given by file or by the name of a built-in example.
#[derive(Clone, Debug, PartialEq)]
pub enum FnSource {
    File(PathBuf),
    Fa { a: f64 },
    Oscillating { nu: usize },
    Log { n: usize },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub set: Option<PathBuf>,
    pub function: Option<FnSource>,
    pub space: SpaceKind,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub alphas: Option<Vec<f64>>,
    pub spacing: f64,
    pub tau_grid: Option<Vec<f64>>,
    pub eps_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Hex SHA-256 of the resolved settings and the bytes of every input.
    pub hash: String,
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|_| ConfigError::MissingFile(path.into()))?;
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax(format!("{}:{}: expected key = value", path.display(), no + 1)))?;
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey(k));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

fn number(key: &str, v: &str) -> Result<f64, ConfigError> {
    match v {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => v
            .parse::<f64>()
            .map_err(|_| ConfigError::Domain(format!("{key} = `{v}` is not a number"))),
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| number(key, s.trim())).collect()
}

fn in_unit(key: &str, a: f64) -> Result<f64, ConfigError> {
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(ConfigError::Domain(format!("{key} = {a} must lie in (0, 1)")))
    }
}

fn named_param<T: std::str::FromStr>(spec: &str, key: &str) -> Result<T, ConfigError> {
    let (_, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let (k, v) = rest
        .split_once('=')
        .ok_or_else(|| ConfigError::Domain(format!("fn `{spec}` needs `{key}=value`")))?;
    if k.trim() != key {
        return Err(ConfigError::Domain(format!("fn `{spec}` takes `{key}`, not `{k}`")));
    }
    v.trim()
        .parse()
        .map_err(|_| ConfigError::Domain(format!("fn `{spec}`: bad value `{v}`")))
}

fn fn_source(v: &str) -> Result<FnSource, ConfigError> {
    let head = v.split(':').next().unwrap_or("");
    let src = match head {
        "fa" if v.contains(':') => FnSource::Fa { a: named_param(v, "a")? },
        "osc" if v.contains(':') => FnSource::Oscillating { nu: named_param(v, "nu")? },
        "log" if v.contains(':') => FnSource::Log { n: named_param(v, "n")? },
        _ => FnSource::File(PathBuf::from(v)),
    };
    match &src {
        FnSource::Fa { a } if !(*a > 0.0 && a.is_finite()) => {
            Err(ConfigError::Domain(format!("fa: a = {a} must be positive")))
        }
        FnSource::Oscillating { nu: 0 } => Err(ConfigError::Domain("osc: nu must be ≥ 1".into())),
        FnSource::Log { n } if !(2..=3).contains(n) => {
            Err(ConfigError::Domain(format!("log: n = {n} must be 2 or 3")))
        }
        FnSource::File(p) if !p.is_file() => Err(ConfigError::MissingFile(p.clone())),
        _ => Ok(src),
    }
}

/// Validates the merged settings (flags already override file entries).
pub fn resolve(map: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    for k in map.keys() {
        if !KEYS.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
    }
    let get = |k: &str| map.get(k).map(String::as_str);
    let command = Command::parse(get("command").ok_or_else(|| ConfigError::Domain("no command given".into()))?)?;

    let p = get("p").map(|v| number("p", v)).transpose()?.unwrap_or(1.0);
    if !(p >= 1.0 && p.is_finite()) {
        return Err(ConfigError::Domain(format!("p = {p} must be finite and ≥ 1")));
    }
    let q = get("q").map(|v| number("q", v)).transpose()?.unwrap_or(1.0);
    if !(q >= 1.0) {
        return Err(ConfigError::Domain(format!("q = {q} must be ≥ 1")));
    }
    let alpha = in_unit("alpha", get("alpha").map(|v| number("alpha", v)).transpose()?.unwrap_or(0.5))?;
    let alphas = get("alphas").map(|v| list("alphas", v)).transpose()?;
    if let Some(a) = &alphas {
        for &x in a {
            in_unit("alphas", x)?;
        }
    }
    let spacing = get("spacing").map(|v| number("spacing", v)).transpose()?.unwrap_or(0.01);
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(ConfigError::Domain(format!("spacing = {spacing} must be positive")));
    }
    let positive_list = |key: &str| -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = get(key) else { return Ok(None) };
        let xs = list(key, v)?;
        if xs.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(ConfigError::Domain(format!("{key} entries must be positive")));
        }
        Ok(Some(xs))
    };
    let tau_grid = positive_list("tau-grid")?;
    let eps_grid = positive_list("eps-grid")?.unwrap_or_default();
    if eps_grid.iter().any(|&e| e >= 1.0) {
        return Err(ConfigError::Domain("eps-grid entries must lie in (0, 1)".into()));
    }
    let gamma_grid = positive_list("gamma-grid")?.unwrap_or_default();

    let space = match get("space").unwrap_or("w1p") {
        "w1p" | "sobolev" => SpaceKind::Sobolev,
        "bpq" | "besov" => SpaceKind::Besov,
        other => return Err(ConfigError::Domain(format!("space `{other}`: expected w1p or besov"))),
    };
    let format = match get("format").unwrap_or("csv") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return Err(ConfigError::Domain(format!("format `{other}`: expected csv or json"))),
    };
    let set = get("set").map(PathBuf::from);
    if let Some(s) = &set {
        if !s.is_file() {
            return Err(ConfigError::MissingFile(s.clone()));
        }
    }
    let function = get("fn").map(fn_source).transpose()?;

    match command {
        Command::Norm | Command::Modulus | Command::Besov | Command::Rearrange if function.is_none() => {
            return Err(ConfigError::Domain("this command needs --fn".into()));
        }
        Command::Capacity | Command::SweepToOne | Command::SweepToZero if set.is_none() => {
            return Err(ConfigError::Domain("this command needs --set".into()));
        }
        _ => {}
    }
    if q.is_infinite() && command != Command::Besov {
        return Err(ConfigError::Domain("q = ∞ is only available for `besov`".into()));
    }

    let hash = config_hash(map)?;
    Ok(RunConfig {
        command,
        set,
        function,
        space,
        p,
        q,
        alpha,
        alphas,
        spacing,
        tau_grid,
        eps_grid,
        gamma_grid,
        out: get("out").map(PathBuf::from),
        format,
        hash,
    })
}

/// SHA-256 over the sorted settings, except the output path, followed by
/// the contents of the input files.
fn config_hash(map: &BTreeMap<String, String>) -> Result<String, ConfigError> {
    let mut h = Sha256::new();
    for (k, v) in map.iter().filter(|(k, _)| k.as_str() != "out") {
        h.update(format!("{k}={v}\n").as_bytes());
    }
    for key in ["set", "fn"] {
        if let Some(path) = map.get(key).map(Path::new).filter(|p| p.is_file()) {
            let bytes = std::fs::read(path).map_err(|_| ConfigError::MissingFile(path.into()))?;
            h.update(format!("{key}-bytes={}\n", bytes.len()).as_bytes());
            h.update(&bytes);
        }
    }
    Ok(format!("{:x}", h.finalize()))
}

impl RunConfig {
    /// The admissible family for sets on a lattice of the configured
    /// spacing; explicit grids override the defaults.
    pub fn family(&self) -> AdmissibleFamily {
        let mut fam = AdmissibleFamily::for_spacing(self.spacing);
        if let Some(t) = &self.tau_grid {
            fam.tau_grid = t.clone();
        }
        fam.eps_grid = self.eps_grid.clone();
        fam.gamma_grid = self.gamma_grid.clone();
        fam
    }
}
