//! Command-line driver: `valdet <command> --system builtin:e2 --order 14 …`.
//!
//! Exit codes: 0 success, 2 certification failed (the result is still
//! written, marked uncertified), 1 pipeline error, 64 usage error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rug::float::Round;
use rug::{Float, Rational};
use serde_json::{json, Value};

use valdet::arith::{float_to_decimal, parse_decimal_rational, ValidatedReal};
use valdet::determinant::{output_digits, WeightPlan};
use valdet::periodic::Observable;
use valdet::quantities::{self, CertifiedValue, PipelineOptions, QuantityError};
use valdet::systems::{builtin_config, load_system, SystemSpec};
use valdet::tailbounds::{build_certificate, default_bound_order, ParamBox};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Dim,
    Lyapunov,
    Variance,
    Integral,
    Zeros,
    Mixing,
    Julia,
    Certify,
}

#[derive(Parser, Debug, Clone)]
#[command(name = "valdet", about = "Validated transfer-operator determinants")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// `builtin:<name>` or a path to a config file.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long = "order", default_value_t = 12)]
    pub order: usize,
    #[arg(long = "bound-order")]
    pub bound_order: Option<usize>,
    #[arg(long, default_value_t = 256)]
    pub precision: u32,
    #[arg(long)]
    pub validate: bool,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long)]
    pub t0: Option<String>,
    #[arg(long)]
    pub t1: Option<String>,
    /// Julia parameter `RE,IM`.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Polynomial observable coefficients `c0,c1,…` for `integral`.
    #[arg(long, default_value = "0,1")]
    pub observable: String,
    /// File with one order (or one Julia parameter `RE,IM`) per line.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(String),
}

impl From<QuantityError> for CliError {
    fn from(e: QuantityError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl RunConfig {
    fn check(&self) -> Result<(), CliError> {
        if self.order < 1 {
            return Err(CliError::Usage("--order must be at least 1".into()));
        }
        if self.precision < 64 {
            return Err(CliError::Usage("--precision must be at least 64".into()));
        }
        if self.threads < 1 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        if let Some(l) = self.bound_order {
            if self.validate && l <= self.order {
                return Err(CliError::Usage("--bound-order must exceed --order".into()));
            }
        }
        if self.command != Command::Julia && self.system.is_none() {
            return Err(CliError::Usage("--system is required".into()));
        }
        if self.command == Command::Julia && self.c.is_none() && self.sweep.is_none() {
            return Err(CliError::Usage("julia needs --c RE,IM or --sweep".into()));
        }
        Ok(())
    }

    fn options(&self) -> Result<PipelineOptions, CliError> {
        let mut o = PipelineOptions {
            precision: self.precision,
            bound_order: self.bound_order,
            ..Default::default()
        };
        match (&self.t0, &self.t1) {
            (Some(a), Some(b)) => {
                let (a, b) = (rational(a)?, rational(b)?);
                if a >= b {
                    return Err(CliError::Usage("--t0 must be below --t1".into()));
                }
                o.bracket = Some((a, b));
            }
            (None, None) => {}
            _ => return Err(CliError::Usage("--t0 and --t1 go together".into())),
        }
        Ok(o)
    }
}

fn rational(s: &str) -> Result<Rational, CliError> {
    parse_decimal_rational(s).map_err(|e| CliError::Usage(format!("bad number `{s}`: {e}")))
}

fn complex_param(s: &str) -> Result<(Rational, Rational), CliError> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    Ok((rational(re.trim())?, rational(im.trim())?))
}

fn load(spec: &str) -> Result<(SystemSpec, String), CliError> {
    let text = match spec.strip_prefix("builtin:") {
        Some(name) => builtin_config(name).map_err(|e| CliError::Usage(e.to_string()))?,
        None => fs::read_to_string(spec).map_err(|e| CliError::Usage(format!("cannot read {spec}: {e}")))?,
    };
    let sys = load_system(&text).map_err(|e| CliError::Run(e.to_string()))?;
    let label = spec.strip_prefix("builtin:").unwrap_or(spec).to_string();
    Ok((sys, label))
}

enum Sweep {
    Orders(Vec<usize>),
    Params(Vec<(Rational, Rational)>),
}

fn read_sweep(path: &PathBuf) -> Result<Sweep, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read sweep file: {e}")))?;
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if lines.iter().all(|l| l.parse::<usize>().is_ok()) {
        return Ok(Sweep::Orders(lines.iter().map(|l| l.parse().unwrap()).collect()));
    }
    lines
        .iter()
        .map(|l| complex_param(l))
        .collect::<Result<_, _>>()
        .map(Sweep::Params)
}

/// Count of leading significant digits two decimal strings share.
pub fn agreed_digits(a: &str, b: &str) -> usize {
    let mut n = 0;
    let mut started = false;
    for (x, y) in a.chars().zip(b.chars()) {
        if x != y {
            break;
        }
        if x.is_ascii_digit() {
            if x != '0' {
                started = true;
            }
            if started {
                n += 1;
            }
        }
    }
    n
}

/// `emit_convergence_table`: `N,estimate,agreed_digits,certified_width`
/// rows; needs at least two orders.
pub fn emit_convergence_table(results: &[CertifiedValue]) -> Result<String, String> {
    if results.len() < 2 {
        return Err("a convergence table needs at least two orders".into());
    }
    let mut out = String::from("N,estimate,agreed_digits,certified_width\n");
    let mut prev: Option<String> = None;
    for r in results {
        let d = output_digits(r.estimate.prec());
        let est = float_to_decimal(&r.estimate, d, Round::Nearest);
        let agreed = prev.as_ref().map(|p| agreed_digits(p, &est).to_string()).unwrap_or_default();
        let width = if r.uncertified {
            String::new()
        } else {
            let w = Float::with_val(r.upper.prec(), &r.upper - &r.lower);
            float_to_decimal(&w, 6, Round::Up)
        };
        out.push_str(&format!("{},{},{},{}\n", r.order_n, est, agreed, width));
        prev = Some(est);
    }
    Ok(out)
}

fn zeros_csv(zs: &[CertifiedValue]) -> String {
    let mut out = String::from("index,estimate,lower,upper,uncertified\n");
    for (i, z) in zs.iter().enumerate() {
        let d = output_digits(z.estimate.prec());
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            float_to_decimal(&z.estimate, d, Round::Nearest),
            float_to_decimal(&z.lower, d, Round::Down),
            float_to_decimal(&z.upper, d, Round::Up),
            z.uncertified
        ));
    }
    out
}

fn summary(v: &CertifiedValue, label: &str) -> String {
    let d = output_digits(v.estimate.prec()).min(30);
    format!(
        "{} {} N={}: {} in [{}, {}]{}",
        v.name,
        label,
        v.order_n,
        float_to_decimal(&v.estimate, d, Round::Nearest),
        float_to_decimal(&v.lower, d, Round::Down),
        float_to_decimal(&v.upper, d, Round::Up),
        if v.uncertified { " (uncertified)" } else { " (certified)" }
    )
}

struct Outcome {
    body: String,
    summary: String,
    uncertified: bool,
}

fn single(cfg: &RunConfig, sys: Option<&SystemSpec>, n: usize, c: Option<&(Rational, Rational)>) -> Result<CertifiedValue, CliError> {
    let o = cfg.options()?;
    let sys = || sys.expect("system loaded");
    Ok(match cfg.command {
        Command::Dim => quantities::hausdorff_dimension(sys(), n, cfg.validate, &o)?,
        Command::Lyapunov => quantities::lyapunov_pipeline(sys(), n, cfg.validate, &o)?,
        Command::Variance => quantities::variance_pipeline(sys(), n, cfg.validate, &o)?,
        Command::Integral => {
            let coeffs = cfg
                .observable
                .split(',')
                .map(|s| rational(s.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            quantities::integral_pipeline_for(sys(), &Observable(coeffs), n, cfg.validate, &o)?
        }
        Command::Mixing => quantities::mixing_rate(sys(), n, cfg.validate, &o)?,
        Command::Julia => quantities::julia_dimension(c.expect("julia parameter"), n, &o)?,
        Command::Zeros | Command::Certify => unreachable!(),
    })
}

fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let loaded = match &cfg.system {
        Some(s) if cfg.command != Command::Julia => Some(load(s)?),
        _ => None,
    };
    let sys = loaded.as_ref().map(|l| &l.0);
    let label = loaded.as_ref().map(|l| l.1.clone()).unwrap_or_else(|| "quadratic_julia".into());
    let sweep = cfg.sweep.as_ref().map(read_sweep).transpose()?;
    match cfg.command {
        Command::Zeros => {
            let plan = WeightPlan::mixing(cfg.precision);
            let zs = quantities::determinant_zeros(sys.unwrap(), &plan, cfg.order, cfg.count, cfg.validate, &cfg.options()?)?;
            let line = format!("{} real zeros of d_{} for {}", zs.len(), cfg.order, label);
            return Ok(Outcome {
                body: zeros_csv(&zs),
                summary: line,
                uncertified: cfg.validate && zs.iter().any(|z| z.uncertified),
            });
        }
        Command::Certify => return certify(cfg, sys.unwrap(), &label),
        _ => {}
    }
    let julia_c = match (&cfg.c, cfg.command) {
        (Some(c), Command::Julia) => Some(complex_param(c)?),
        _ => None,
    };
    let runs: Vec<(usize, Option<(Rational, Rational)>)> = match sweep {
        None => vec![(cfg.order, julia_c)],
        Some(Sweep::Orders(ns)) => ns.into_iter().map(|n| (n, julia_c.clone())).collect(),
        Some(Sweep::Params(ps)) if cfg.command == Command::Julia => ps.into_iter().map(|c| (cfg.order, Some(c))).collect(),
        Some(Sweep::Params(_)) => return Err(CliError::Usage("parameter sweeps apply to julia only".into())),
    };
    let mut results = Vec::new();
    let mut records = Vec::new();
    for (n, c) in &runs {
        let t = Instant::now();
        let v = single(cfg, sys, *n, c.as_ref())?;
        records.push(v.to_json(&label, Some(t.elapsed().as_secs_f64())));
        results.push(v);
    }
    let uncertified = cfg.validate && results.iter().any(|r| r.uncertified);
    let summary_line = results.last().map(|v| summary(v, &label)).unwrap_or_default();
    let body = if records.len() == 1 {
        records.pop().unwrap()
    } else {
        let mut obj = json!({ "results": records, "runtime_seconds": started.elapsed().as_secs_f64() });
        if runs.windows(2).all(|w| w[0].0 != w[1].0) {
            if let Ok(t) = emit_convergence_table(&results) {
                obj["convergence_csv"] = json!(t);
            }
        }
        obj
    };
    Ok(Outcome {
        body: serde_json::to_string_pretty(&body).unwrap() + "\n",
        summary: summary_line,
        uncertified,
    })
}

fn certify(cfg: &RunConfig, sys: &SystemSpec, label: &str) -> Result<Outcome, CliError> {
    let p = cfg.precision;
    let n = cfg.order;
    let l = cfg.bound_order.unwrap_or_else(|| default_bound_order(n)).max(n + 1);
    let (plan, pbox) = match (&cfg.t0, &cfg.t1) {
        (Some(a), Some(b)) => {
            let (a, b) = (rational(a)?, rational(b)?);
            let t = ValidatedReal::from_rational(p, &a).hull(&ValidatedReal::from_rational(p, &b));
            let h = Rational::from(&b - &a) / 8;
            (WeightPlan::dimension(ValidatedReal::from_rational(p, &a)), ParamBox::around(t, h))
        }
        _ => (WeightPlan::mixing(p), ParamBox::around(ValidatedReal::zero(p), Rational::from((1, 8)))),
    };
    match build_certificate(sys, &plan, &pbox, None, n, l, p) {
        Ok(cert) => {
            let body = json!({ "system": label, "certificate": cert.to_json() });
            let text = serde_json::to_string_pretty(&body).unwrap() + "\n";
            if let Some(dir) = std::env::var_os("VALDET_CACHE_DIR") {
                let key = format!("{}|{}|{:?}|{}|{}|{}", sys.canonical, plan.name(), pbox, n, l, p);
                let h = key.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3));
                let _ = fs::write(PathBuf::from(dir).join(format!("cert-{h:016x}.json")), &text);
            }
            Ok(Outcome {
                body: text,
                summary: format!("certificate for {label} N={n} L={l}: gamma_max {}", cert.gamma_max().hi().to_f64()),
                uncertified: false,
            })
        }
        Err(e) => Ok(Outcome {
            body: serde_json::to_string_pretty(&json!({ "system": label, "certificate": Value::Null, "error": e.to_string() }))
                .unwrap()
                + "\n",
            summary: format!("certification failed: {e}"),
            uncertified: true,
        }),
    }
}

/// `run`: parse, execute, write the result and print a summary line.
pub fn run<S: AsRef<str>>(argv: &[S]) -> i32 {
    let args: Vec<&str> = argv.iter().map(|s| s.as_ref()).collect();
    let cfg = match RunConfig::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(CliError::Usage(m)) = cfg.check() {
        eprintln!("usage error: {m}");
        return EXIT_USAGE;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    match pool.install(|| execute(&cfg)) {
        Ok(out) => {
            let written = match &cfg.output {
                Some(path) => fs::write(path, &out.body).map_err(|e| e.to_string()),
                None => std::io::stdout().write_all(out.body.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write output: {e}");
                return EXIT_ERROR;
            }
            eprintln!("{}", out.summary);
            if out.uncertified {
                EXIT_UNCERTIFIED
            } else {
                EXIT_OK
            }
        }
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Run(m)) => {
            eprintln!("error: {m}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_agreement() {
        assert_eq!(agreed_digits("0.578079688751", "0.578079688535"), 9);
        assert_eq!(agreed_digits("1.5", "2.5"), 0);
        assert_eq!(agreed_digits("0.00123", "0.00124"), 2);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(&["valdet", "dim"]), EXIT_USAGE);
        assert_eq!(run(&["valdet", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(&["valdet", "dim", "--system", "builtin:e2", "--precision", "32"]), EXIT_USAGE);
        assert_eq!(
            run(&["valdet", "dim", "--system", "builtin:e2", "--validate", "--order", "8", "--bound-order", "8"]),
            EXIT_USAGE
        );
        assert_eq!(run(&["valdet", "dim", "--system", "builtin:nope"]), EXIT_USAGE);
    }

    #[test]
    fn convergence_table_needs_two_rows() {
        assert!(emit_convergence_table(&[]).is_err());
    }
}
