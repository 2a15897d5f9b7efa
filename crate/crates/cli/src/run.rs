use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use besovcap::besov::{self, besov_seminorm};
use besovcap::capacity::{self, CapacityEstimate};
use besovcap::grid::fmt_f64;
use besovcap::limits::{self, SweepResult};
use besovcap::verify::{self, SuiteConfig};
use besovcap::{modulus, mollify, rearrange, DiscreteSet, Error, Exponents, GridFunction};
use serde_json::{json, Value};

use crate::config::{Command, FnSource, Format, RunConfig, SpaceKind};

pub enum Failure {
    /// Input files that exist but cannot be parsed.
    Input(Error),
    Numerical(Error),
    Verification(usize),
    Output(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

struct Output {
    table: Table,
    json: Value,
    summary: Option<Value>,
}

fn num(v: f64) -> Result<String, Failure> {
    if v.is_nan() {
        return Err(Failure::Numerical(Error::InvariantViolation("NaN in output".into())));
    }
    Ok(fmt_f64(v))
}

fn load_function(cfg: &RunConfig) -> Result<GridFunction, Failure> {
    let src = cfg.function.as_ref().expect("validated");
    let h = cfg.spacing;
    match src {
        FnSource::File(p) => GridFunction::read(p).map_err(Failure::Input),
        FnSource::Fa { a } => Ok(mollify::example_fa(*a, h)?),
        FnSource::Oscillating { nu } => Ok(mollify::example_oscillating(*nu, h)?),
        FnSource::Log { n } => Ok(mollify::example_log(*n, h)?),
    }
}

fn load_set(cfg: &RunConfig) -> Result<DiscreteSet, Failure> {
    let path = cfg.set.as_ref().expect("validated");
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(e.into()))?;
    DiscreteSet::parse(&text, cfg.spacing).map_err(Failure::Input)
}

fn norm(cfg: &RunConfig) -> Result<Output, Failure> {
    let f = load_function(cfg)?;
    let v = f.lp_norm(cfg.p)?;
    let mut t = Table::new(&["p", "lp_norm"]);
    t.push(vec![num(cfg.p)?, num(v)?]);
    Ok(Output { table: t, json: json!({ "p": cfg.p, "lp_norm": v }), summary: None })
}

fn modulus_cmd(cfg: &RunConfig) -> Result<Output, Failure> {
    let f = load_function(cfg)?;
    let mut t = Table::new(&["axis", "delta", "omega"]);
    let mut curves = Vec::new();
    for axis in 1..=f.dim() {
        let c = modulus::curve_of(&f, axis, cfg.p)?;
        for (d, w) in c.knots.iter().zip(&c.values) {
            t.push(vec![axis.to_string(), num(*d)?, num(*w)?]);
        }
        t.push(vec![axis.to_string(), "inf".into(), num(c.plateau)?]);
        curves.push(json!({ "axis": axis, "knots": c.knots, "values": c.values, "plateau": c.plateau }));
    }
    Ok(Output { table: t, json: json!({ "p": cfg.p, "curves": curves }), summary: None })
}

fn besov_cmd(cfg: &RunConfig) -> Result<Output, Failure> {
    let f = load_function(cfg)?;
    if cfg.q.is_infinite() {
        let mut t = Table::new(&["axis", "sup_seminorm"]);
        let mut vals = Vec::new();
        for axis in 1..=f.dim() {
            let v = besov::besov_sup_seminorm(&f, axis, cfg.alpha, cfg.p)?;
            t.push(vec![axis.to_string(), num(v)?]);
            vals.push(v);
        }
        let total: f64 = vals.iter().sum();
        t.push(vec!["total".into(), num(total)?]);
        let json = json!({ "alpha": cfg.alpha, "p": cfg.p, "q": "inf", "axes": vals, "total": total });
        return Ok(Output { table: t, json, summary: None });
    }
    let e = Exponents::new(f.dim(), cfg.p, cfg.q, cfg.alpha)?;
    let (total, evals) = besov_seminorm(&f, e)?;
    let mut t = Table::new(&["axis", "value", "head_part", "body_part", "tail_part"]);
    for ev in &evals {
        t.push(vec![
            ev.axis.to_string(),
            num(ev.value)?,
            num(ev.head_part)?,
            num(ev.body_part)?,
            num(ev.tail_part)?,
        ]);
    }
    t.push(vec!["total".into(), num(total)?, String::new(), String::new(), String::new()]);
    let json = json!({ "exponents": e, "axes": evals, "total": total });
    Ok(Output { table: t, json, summary: None })
}

fn rearrange_cmd(cfg: &RunConfig) -> Result<Output, Failure> {
    let f = load_function(cfg)?;
    let prof = rearrange::rearrangement(&f);
    let mut t = Table::new(&["t_break", "level"]);
    for (b, l) in prof.breakpoints.iter().zip(&prof.levels) {
        t.push(vec![num(*b)?, num(*l)?]);
    }
    let json = json!({ "breakpoints": prof.breakpoints, "levels": prof.levels });
    Ok(Output { table: t, json, summary: None })
}

fn estimate_row(e: &CapacityEstimate) -> Result<Vec<String>, Failure> {
    let w = e.witness.as_ref();
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    Ok(vec![
        serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        num(e.value)?,
        w.map(|w| w.family.clone()).unwrap_or_default(),
        opt(w.and_then(|w| w.tau)),
        opt(w.and_then(|w| w.eps)),
        opt(w.and_then(|w| w.gamma)),
        e.derivation.clone(),
    ])
}

fn capacity_cmd(cfg: &RunConfig) -> Result<Output, Failure> {
    let k = load_set(cfg)?;
    let fam = cfg.family();
    let mut estimates = Vec::new();
    match cfg.space {
        SpaceKind::Sobolev => {
            estimates.push(capacity::sobolev_capacity_upper(&k, cfg.p, &fam)?);
            if cfg.p < k.dim() as f64 && !k.is_empty() {
                estimates.push(capacity::sobolev_capacity_lower(&k, cfg.p)?);
            }
        }
        SpaceKind::Besov => {
            let e = Exponents::new(k.dim(), cfg.p, cfg.q, cfg.alpha)?;
            estimates.push(capacity::besov_capacity_upper(&k, e, &fam)?);
            if e.p_alpha().is_some() && !k.is_empty() {
                estimates.push(capacity::besov_capacity_lower(&k, e)?);
            }
        }
    }
    let mut t = Table::new(&["kind", "value", "family", "tau", "eps", "gamma", "derivation"]);
    for e in &estimates {
        t.push(estimate_row(e)?);
    }
    let json = json!({ "measure": k.measure(), "estimates": estimates });
    Ok(Output { table: t, json, summary: None })
}

fn sweep_output(s: SweepResult) -> Result<Output, Failure> {
    let mut t = Table::new(&["alpha", "J"]);
    for (a, j) in s.alphas.iter().zip(&s.j_values) {
        t.push(vec![num(*a)?, num(*j)?]);
    }
    num(s.extrapolated)?;
    let summary = s.summary_json();
    let json = json!({ "alphas": s.alphas, "j_values": s.j_values, "summary": summary });
    Ok(Output { table: t, json, summary: Some(summary) })
}

fn sweep_cmd(cfg: &RunConfig, to_one: bool) -> Result<Output, Failure> {
    let k = load_set(cfg)?;
    let fam = cfg.family();
    let s = if to_one {
        let alphas = cfg.alphas.clone().unwrap_or_else(|| vec![0.9, 0.925, 0.95, 0.975]);
        limits::sweep_alpha_to_one(&k, cfg.p, cfg.q, &alphas, &fam)?
    } else {
        let alphas = cfg.alphas.clone().unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125]);
        limits::sweep_alpha_to_zero(&k, cfg.p, cfg.q, &alphas, &fam)?
    };
    sweep_output(s)
}

fn verify_cmd() -> Result<(Output, usize), Failure> {
    let report = verify::run_suite(SuiteConfig::default())?;
    let mut t = Table::new(&["tag", "checks", "failures", "min_slack"]);
    for (tag, tally) in &report.tallies {
        t.push(vec![tag.clone(), tally.checks.to_string(), tally.failures.to_string(), num(tally.min_slack)?]);
    }
    for v in &report.violations {
        eprintln!("{} violated: {}: lhs = {} rhs = {}", v.tag, v.subject, fmt_f64(v.lhs), fmt_f64(v.rhs));
    }
    let json = json!({
        "total_checks": report.total_checks(),
        "tallies": report.tallies,
        "violations": report.violations,
    });
    Ok((Output { table: t, json, summary: None }, report.violations.len()))
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Norm => "norm",
        Command::Modulus => "modulus",
        Command::Besov => "besov",
        Command::Rearrange => "rearrange",
        Command::Capacity => "capacity",
        Command::SweepToOne => "sweep-to-one",
        Command::SweepToZero => "sweep-to-zero",
        Command::Verify => "verify",
    }
}

fn render_csv(cfg: &RunConfig, t: &Table) -> Result<Vec<u8>, Failure> {
    let mut buf = format!("# config_hash={}\n", cfg.hash).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| Failure::Output(e.to_string());
        w.write_record(&t.header).map_err(io)?;
        for r in &t.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| Failure::Output(e.to_string()))?;
    }
    Ok(buf)
}

fn render_json(cfg: &RunConfig, body: Value) -> Vec<u8> {
    let mut doc = json!({ "config_hash": cfg.hash, "command": command_name(cfg.command) });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("json value serializes");
    s.push('\n');
    s.into_bytes()
}

fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Output(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| Failure::Output(e.to_string())),
    }
}

/// Runs the configured command and writes its artifact.
pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    let (out, violations) = match cfg.command {
        Command::Norm => (norm(cfg)?, 0),
        Command::Modulus => (modulus_cmd(cfg)?, 0),
        Command::Besov => (besov_cmd(cfg)?, 0),
        Command::Rearrange => (rearrange_cmd(cfg)?, 0),
        Command::Capacity => (capacity_cmd(cfg)?, 0),
        Command::SweepToOne => (sweep_cmd(cfg, true)?, 0),
        Command::SweepToZero => (sweep_cmd(cfg, false)?, 0),
        Command::Verify => verify_cmd()?,
    };
    match cfg.format {
        Format::Csv => {
            let mut bytes = render_csv(cfg, &out.table)?;
            if let Some(summary) = out.summary {
                let doc = render_json(cfg, summary);
                match &cfg.out {
                    Some(p) => {
                        let mut side = p.clone().into_os_string();
                        side.push(".summary.json");
                        emit(Some(&PathBuf::from(side)), &doc)?;
                    }
                    None => {
                        bytes.extend_from_slice(b"# summary ");
                        let line: Value = serde_json::from_slice(&doc).expect("own json");
                        bytes.extend_from_slice(line.to_string().as_bytes());
                        bytes.push(b'\n');
                    }
                }
            }
            emit(cfg.out.as_ref(), &bytes)?;
        }
        Format::Json => emit(cfg.out.as_ref(), &render_json(cfg, out.json))?,
    }
    if violations > 0 {
        return Err(Failure::Verification(violations));
    }
    Ok(())
}
