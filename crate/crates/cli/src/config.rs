//! Flat sectioned `key = value` configuration with defaults and validation.

use std::collections::HashSet;
use std::fmt::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeBlock {
    pub scheme: String,
    pub nu: f64,
    pub d: f64,
    pub flux: String,
    pub state_lo: f64,
    pub state_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShockBlock {
    pub u_minus: f64,
    pub u_plus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBlock {
    pub half_width: i64,
    pub tol: f64,
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub delta_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentBlock {
    pub choice: u32,
    pub p: f64,
    pub j_max: usize,
    pub n_max: usize,
    pub reg_lo: Option<usize>,
    pub reg_hi: Option<usize>,
    pub seed: u64,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenBlock {
    pub n: usize,
    pub j0: i64,
    pub decompose: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsBlock {
    pub trials: usize,
    pub n_check: usize,
    pub insum_n_max: usize,
    pub duhamel_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub out_dir: String,
    pub csv: bool,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: SchemeBlock,
    pub shock: ShockBlock,
    pub profile: ProfileBlock,
    pub experiment: ExperimentBlock,
    pub green: GreenBlock,
    pub bounds: BoundsBlock,
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeBlock {
                scheme: "mlf".into(),
                nu: 0.5,
                d: 0.8,
                flux: "burgers".into(),
                state_lo: -1.5,
                state_hi: 1.5,
            },
            shock: ShockBlock {
                u_minus: 1.0,
                u_plus: -1.0,
            },
            profile: ProfileBlock {
                half_width: 60,
                tol: 1e-13,
                delta_lo: -0.5,
                delta_hi: 0.5,
                delta_n: 17,
            },
            experiment: ExperimentBlock {
                choice: 1,
                p: 1.0,
                j_max: 50,
                n_max: 2000,
                reg_lo: None,
                reg_hi: None,
                seed: 0x5EED,
                strict: true,
            },
            green: GreenBlock {
                n: 2000,
                j0: 0,
                decompose: false,
            },
            bounds: BoundsBlock {
                trials: 100,
                n_check: 50,
                insum_n_max: 10_000,
                duhamel_delta: 0.25,
            },
            output: OutputBlock {
                out_dir: "out".into(),
                csv: true,
                svg: true,
            },
        }
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\''))) {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

struct Ctx {
    line: usize,
}

impl Ctx {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: self.line,
            message: message.into(),
        })
    }

    fn real(&self, key: &str, v: &str) -> Result<f64, ConfigError> {
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => self.err(format!("`{key}` expects a finite real, got `{v}`")),
        }
    }

    fn positive(&self, key: &str, v: &str) -> Result<f64, ConfigError> {
        let x = self.real(key, v)?;
        if x > 0.0 {
            Ok(x)
        } else {
            self.err(format!("`{key}` must be positive, got {x}"))
        }
    }

    fn uint(&self, key: &str, v: &str, min: usize) -> Result<usize, ConfigError> {
        match v.parse::<usize>() {
            Ok(x) if x >= min => Ok(x),
            Ok(x) => self.err(format!("`{key}` must be at least {min}, got {x}")),
            Err(_) => self.err(format!("`{key}` expects a non-negative integer, got `{v}`")),
        }
    }

    fn int(&self, key: &str, v: &str) -> Result<i64, ConfigError> {
        v.parse::<i64>()
            .or_else(|_| self.err(format!("`{key}` expects an integer, got `{v}`")))
    }

    fn flag(&self, key: &str, v: &str) -> Result<bool, ConfigError> {
        match v {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => self.err(format!("`{key}` expects true or false, got `{v}`")),
        }
    }

    fn seed(&self, key: &str, v: &str) -> Result<u64, ConfigError> {
        let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(hex, 16),
            None => v.parse::<u64>(),
        };
        parsed.or_else(|_| self.err(format!("`{key}` expects an unsigned integer, got `{v}`")))
    }
}

/// Parses and validates a configuration; missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section: Option<String> = None;
    let mut seen = HashSet::new();
    let mut key_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ctx = Ctx { line: i + 1 };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return ctx.err(format!("malformed section header `{line}`"));
            };
            let name = name.trim();
            if !matches!(name, "scheme" | "shock" | "profile" | "experiment" | "green" | "bounds" | "output") {
                return ctx.err(format!("unknown section `[{name}]`"));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return ctx.err(format!("expected `key = value`, got `{line}`"));
        };
        let key = k.trim();
        let v = v.split_once(" #").map_or(v, |(a, _)| a);
        let v = unquote(v);
        let Some(sec) = section.as_deref() else {
            return ctx.err(format!("key `{key}` appears before any section"));
        };
        if !seen.insert(format!("{sec}.{key}")) {
            return ctx.err(format!("duplicate key `{key}` in [{sec}]"));
        }
        key_lines.push((format!("{sec}.{key}"), ctx.line));
        match (sec, key) {
            ("scheme", "scheme") => {
                if v != "mlf" {
                    return ctx.err(format!("unsupported scheme `{v}` (only `mlf`)"));
                }
                cfg.scheme.scheme = v.into();
            }
            ("scheme", "nu") => cfg.scheme.nu = ctx.positive(key, v)?,
            ("scheme", "D") | ("scheme", "d") => cfg.scheme.d = ctx.positive(key, v)?,
            ("scheme", "flux") => {
                if v != "burgers" {
                    return ctx.err(format!("unsupported flux `{v}` (only `burgers`)"));
                }
                cfg.scheme.flux = v.into();
            }
            ("scheme", "state_lo") => cfg.scheme.state_lo = ctx.real(key, v)?,
            ("scheme", "state_hi") => cfg.scheme.state_hi = ctx.real(key, v)?,
            ("shock", "u_minus") => cfg.shock.u_minus = ctx.real(key, v)?,
            ("shock", "u_plus") => cfg.shock.u_plus = ctx.real(key, v)?,
            ("profile", "half_width") => {
                let w = ctx.int(key, v)?;
                if w < 10 {
                    return ctx.err(format!("`half_width` must be at least 10, got {w}"));
                }
                cfg.profile.half_width = w;
            }
            ("profile", "tol") => cfg.profile.tol = ctx.positive(key, v)?,
            ("profile", "delta_lo") => cfg.profile.delta_lo = ctx.real(key, v)?,
            ("profile", "delta_hi") => cfg.profile.delta_hi = ctx.real(key, v)?,
            ("profile", "delta_n") => cfg.profile.delta_n = ctx.uint(key, v, 3)?,
            ("experiment", "choice") => {
                cfg.experiment.choice = match v {
                    "1" => 1,
                    "2" => 2,
                    _ => return ctx.err(format!("`choice` must be 1 or 2, got `{v}`")),
                }
            }
            ("experiment", "p") => {
                let p = ctx.real(key, v)?;
                if p < 0.0 {
                    return ctx.err(format!("`p` must be non-negative, got {p}"));
                }
                cfg.experiment.p = p;
            }
            ("experiment", "j_max") => cfg.experiment.j_max = ctx.uint(key, v, 1)?,
            ("experiment", "n_max") => cfg.experiment.n_max = ctx.uint(key, v, 2)?,
            ("experiment", "reg_lo") => cfg.experiment.reg_lo = Some(ctx.uint(key, v, 1)?),
            ("experiment", "reg_hi") => cfg.experiment.reg_hi = Some(ctx.uint(key, v, 2)?),
            ("experiment", "seed") => cfg.experiment.seed = ctx.seed(key, v)?,
            ("experiment", "strict") => cfg.experiment.strict = ctx.flag(key, v)?,
            ("green", "n") => cfg.green.n = ctx.uint(key, v, 0)?,
            ("green", "j0") => cfg.green.j0 = ctx.int(key, v)?,
            ("green", "decompose") => cfg.green.decompose = ctx.flag(key, v)?,
            ("bounds", "trials") => cfg.bounds.trials = ctx.uint(key, v, 10)?,
            ("bounds", "n_check") => {
                let n = ctx.uint(key, v, 1)?;
                if n > 100 {
                    return ctx.err(format!("`n_check` must be at most 100, got {n}"));
                }
                cfg.bounds.n_check = n;
            }
            ("bounds", "insum_n_max") => cfg.bounds.insum_n_max = ctx.uint(key, v, 10)?,
            ("bounds", "duhamel_delta") => cfg.bounds.duhamel_delta = ctx.real(key, v)?,
            ("output", "out_dir") => {
                if v.is_empty() {
                    return ctx.err("`out_dir` must not be empty");
                }
                cfg.output.out_dir = v.into();
            }
            ("output", "formats") => {
                let (mut csv, mut svg) = (false, false);
                for f in v.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                    match f {
                        "csv" => csv = true,
                        "svg" => svg = true,
                        _ => return ctx.err(format!("unknown output format `{f}`")),
                    }
                }
                cfg.output.csv = csv;
                cfg.output.svg = svg;
            }
            _ => return ctx.err(format!("unknown key `{key}` in [{sec}]")),
        }
    }
    validate(&cfg, &key_lines)?;
    Ok(cfg)
}

/// Cross-key checks, reported at the line of the last key involved.
fn validate(cfg: &RunConfig, key_lines: &[(String, usize)]) -> Result<(), ConfigError> {
    let line_of = |keys: &[&str]| {
        key_lines
            .iter()
            .filter(|(k, _)| keys.contains(&k.as_str()))
            .map(|(_, l)| *l)
            .max()
            .unwrap_or(0)
    };
    let fail = |keys: &[&str], message: String| {
        Err(ConfigError {
            line: line_of(keys),
            message,
        })
    };
    let s = &cfg.scheme;
    if !(s.state_lo < s.state_hi) {
        return fail(&["scheme.state_lo", "scheme.state_hi"], format!("state_lo {} must be below state_hi {}", s.state_lo, s.state_hi));
    }
    for (k, u) in [("shock.u_minus", cfg.shock.u_minus), ("shock.u_plus", cfg.shock.u_plus)] {
        if !(u > s.state_lo && u < s.state_hi) {
            return fail(&[k, "scheme.state_lo", "scheme.state_hi"], format!("{k} = {u} lies outside ({}, {})", s.state_lo, s.state_hi));
        }
    }
    let p = &cfg.profile;
    if !(p.delta_lo < 0.0 && p.delta_hi > 0.0) {
        return fail(&["profile.delta_lo", "profile.delta_hi"], "the delta grid must straddle 0".into());
    }
    let e = &cfg.experiment;
    if let (Some(lo), Some(hi)) = (e.reg_lo, e.reg_hi) {
        if lo >= hi {
            return fail(&["experiment.reg_lo", "experiment.reg_hi"], format!("reg_lo {lo} must be below reg_hi {hi}"));
        }
    }
    if e.reg_hi.is_some_and(|hi| hi > e.n_max) {
        return fail(&["experiment.reg_hi", "experiment.n_max"], "reg_hi exceeds n_max".into());
    }
    Ok(())
}

/// Effective configuration in the same format the parser reads.
pub fn echo(cfg: &RunConfig) -> String {
    let mut o = String::new();
    let s = &cfg.scheme;
    let _ = writeln!(o, "[scheme]\nscheme = \"{}\"\nnu = {}\nD = {}\nflux = \"{}\"\nstate_lo = {}\nstate_hi = {}\n", s.scheme, s.nu, s.d, s.flux, s.state_lo, s.state_hi);
    let _ = writeln!(o, "[shock]\nu_minus = {}\nu_plus = {}\n", cfg.shock.u_minus, cfg.shock.u_plus);
    let p = &cfg.profile;
    let _ = writeln!(o, "[profile]\nhalf_width = {}\ntol = {:e}\ndelta_lo = {}\ndelta_hi = {}\ndelta_n = {}\n", p.half_width, p.tol, p.delta_lo, p.delta_hi, p.delta_n);
    let e = &cfg.experiment;
    let _ = writeln!(o, "[experiment]\nchoice = {}\np = {}\nj_max = {}\nn_max = {}", e.choice, e.p, e.j_max, e.n_max);
    if let Some(lo) = e.reg_lo {
        let _ = writeln!(o, "reg_lo = {lo}");
    }
    if let Some(hi) = e.reg_hi {
        let _ = writeln!(o, "reg_hi = {hi}");
    }
    let _ = writeln!(o, "seed = {:#x}\nstrict = {}\n", e.seed, e.strict);
    let g = &cfg.green;
    let _ = writeln!(o, "[green]\nn = {}\nj0 = {}\ndecompose = {}\n", g.n, g.j0, g.decompose);
    let b = &cfg.bounds;
    let _ = writeln!(o, "[bounds]\ntrials = {}\nn_check = {}\ninsum_n_max = {}\nduhamel_delta = {}\n", b.trials, b.n_check, b.insum_n_max, b.duhamel_delta);
    let formats: Vec<&str> = [("csv", cfg.output.csv), ("svg", cfg.output.svg)].iter().filter(|f| f.1).map(|f| f.0).collect();
    let _ = writeln!(o, "[output]\nout_dir = \"{}\"\nformats = \"{}\"", cfg.output.out_dir, formats.join(","));
    o
}
