//! Flat `key = value` experiment files.
//!
//! ```text
//! # four-site run checked against RK
//! N = 4
//! J = 1.3, 0.1, 1.0
//! B = 0.7, 0.3, 0.1
//! mode = invariant
//! alpha = 1
//! max_iters = 7000
//! rk_reference = true
//! ```
//!
//! Keys and defaults:
//!
//! | key              | default       | notes                                          |
//! |------------------|---------------|------------------------------------------------|
//! | `N`              | required      | chain length, ≥ 2                              |
//! | `mode`           | required      | `rk`, `rbm`, `invariant`, `gradient`, `natural-gradient` |
//! | `J`              | `0, 0, 0`     | (J_x, J_y, J_z) in units of γ                  |
//! | `B`              | `0, 0, 0`     | (B_x, B_y, B_z) in units of γ                  |
//! | `gamma`          | `1`           |                                                |
//! | `alpha`          | `1`           | M = αN                                         |
//! | `beta`           | `alpha`       | L = βN                                         |
//! | `dt_base`        | `0.01`        | RK step, TDVP base step, or learning rate      |
//! | `rcond`          | `1e-12`       | relative singular-value cutoff                 |
//! | `max_iters`      | `1000`        | iterations (RK steps in `rk` mode)             |
//! | `cost_threshold` | `1e-10`       | early stop on the normalized cost              |
//! | `seed`           | `0`           |                                                |
//! | `hermitian_c`    | `true`        | keep the mixing biases real                    |
//! | `rk_reference`   | `false`       | integrate RK alongside and emit `ln_d_rk`      |
//! | `rk_init`        | `mixed`       | RK initial state: `mixed`, `up`, `down`        |
//! | `ansatz`         | `invariant`   | ansatz for the gradient modes: `rbm`, `invariant` |
//! | `cost`           | `normalized`  | gradient-mode cost: `normalized`, `unnormalized` |
//! | `checkpoint_every` | `0`         | write `checkpoint.txt` every k iterations (0: only at the end) |
//! | `resume`         | none          | checkpoint file to start from                  |
//! | `dump_density`   | `false`       | write the final trace-normalized ρ (and the RK ρ) as CSV |
//! | `out`            | `out`         | output directory                               |

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::ansatz::hidden_units;
use crate::error::{Error, Result};
use crate::variational::CostKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Rk,
    Rbm,
    Invariant,
    Gradient,
    NaturalGradient,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rk" => Ok(Mode::Rk),
            "rbm" => Ok(Mode::Rbm),
            "invariant" => Ok(Mode::Invariant),
            "gradient" => Ok(Mode::Gradient),
            "natural-gradient" => Ok(Mode::NaturalGradient),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rk => "rk",
            Mode::Rbm => "rbm",
            Mode::Invariant => "invariant",
            Mode::Gradient => "gradient",
            Mode::NaturalGradient => "natural-gradient",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkInit {
    MaximallyMixed,
    AllUp,
    AllDown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_sites: usize,
    pub coupling: [f64; 3],
    pub field: [f64; 3],
    pub gamma: f64,
    pub mode: Mode,
    pub alpha: f64,
    pub beta: f64,
    pub dt_base: f64,
    pub rcond: f64,
    pub max_iters: usize,
    pub cost_threshold: f64,
    pub seed: u64,
    pub hermitian_c: bool,
    pub rk_reference: bool,
    pub rk_init: RkInit,
    pub gradient_ansatz_invariant: bool,
    pub cost: CostKind,
    pub checkpoint_every: usize,
    pub resume: Option<PathBuf>,
    pub dump_density: bool,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for everything except the two required keys.
    pub fn new(n_sites: usize, mode: Mode) -> Self {
        Self {
            n_sites,
            coupling: [0.0; 3],
            field: [0.0; 3],
            gamma: 1.0,
            mode,
            alpha: 1.0,
            beta: 1.0,
            dt_base: 1e-2,
            rcond: 1e-12,
            max_iters: 1000,
            cost_threshold: 1e-10,
            seed: 0,
            hermitian_c: true,
            rk_reference: false,
            rk_init: RkInit::MaximallyMixed,
            gradient_ansatz_invariant: true,
            cost: CostKind::Normalized,
            checkpoint_every: 0,
            resume: None,
            dump_density: false,
            out: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::config(None, format!("N must be at least 2, got {}", self.n_sites)));
        }
        if self.n_sites > 12 {
            return Err(Error::config(None, format!("N = {} exceeds the dense limit of 12", self.n_sites)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::config(None, "gamma must be positive"));
        }
        if !(self.dt_base > 0.0) {
            return Err(Error::config(None, "dt_base must be positive"));
        }
        if !(self.rcond >= 0.0) {
            return Err(Error::config(None, "rcond must be non-negative"));
        }
        if self.max_iters < 1 {
            return Err(Error::config(None, "max_iters must be at least 1"));
        }
        for (name, d) in [("alpha", self.alpha), ("beta", self.beta)] {
            hidden_units(self.n_sites, d).map_err(|e| Error::config(None, format!("{name}: {e}")))?;
        }
        Ok(())
    }

    /// Echo in the same format [`parse_config_str`] reads.
    pub fn to_text(&self) -> String {
        let v3 = |v: [f64; 3]| format!("{}, {}, {}", v[0], v[1], v[2]);
        let mut lines = vec![
            format!("N = {}", self.n_sites),
            format!("J = {}", v3(self.coupling)),
            format!("B = {}", v3(self.field)),
            format!("gamma = {}", self.gamma),
            format!("mode = {}", self.mode),
            format!("alpha = {}", self.alpha),
            format!("beta = {}", self.beta),
            format!("dt_base = {}", self.dt_base),
            format!("rcond = {}", self.rcond),
            format!("max_iters = {}", self.max_iters),
            format!("cost_threshold = {}", self.cost_threshold),
            format!("seed = {}", self.seed),
            format!("hermitian_c = {}", self.hermitian_c),
            format!("rk_reference = {}", self.rk_reference),
            format!(
                "rk_init = {}",
                match self.rk_init {
                    RkInit::MaximallyMixed => "mixed",
                    RkInit::AllUp => "up",
                    RkInit::AllDown => "down",
                }
            ),
            format!("ansatz = {}", if self.gradient_ansatz_invariant { "invariant" } else { "rbm" }),
            format!(
                "cost = {}",
                match self.cost {
                    CostKind::Normalized => "normalized",
                    CostKind::Unnormalized => "unnormalized",
                }
            ),
            format!("checkpoint_every = {}", self.checkpoint_every),
            format!("dump_density = {}", self.dump_density),
        ];
        if let Some(r) = &self.resume {
            lines.push(format!("resume = {}", r.display()));
        }
        lines.push(format!("out = {}", self.out.display()));
        lines.join("\n") + "\n"
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::config(Some(line), format!("{key}: cannot parse {v:?}: {e}")))
}

fn parse_vec3(line: usize, key: &str, v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::config(Some(line), format!("{key}: expected 3 comma-separated values, got {v:?}")));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_value(line, key, p)?;
    }
    Ok(out)
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(Some(line), format!("{key}: expected true/false, got {v:?}"))),
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(0, Mode::Rk);
    let mut seen = HashSet::new();
    let mut beta_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config(Some(line), format!("expected key = value, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::config(Some(line), format!("duplicate key {key}")));
        }
        match key {
            "N" => cfg.n_sites = parse_value(line, key, value)?,
            "J" => cfg.coupling = parse_vec3(line, key, value)?,
            "B" => cfg.field = parse_vec3(line, key, value)?,
            "gamma" => cfg.gamma = parse_value(line, key, value)?,
            "mode" => {
                cfg.mode = value.parse().map_err(|e: String| Error::config(Some(line), e))?;
            }
            "alpha" => cfg.alpha = parse_value(line, key, value)?,
            "beta" => {
                cfg.beta = parse_value(line, key, value)?;
                beta_line = Some(line);
            }
            "dt_base" => cfg.dt_base = parse_value(line, key, value)?,
            "rcond" => cfg.rcond = parse_value(line, key, value)?,
            "max_iters" => cfg.max_iters = parse_value(line, key, value)?,
            "cost_threshold" => cfg.cost_threshold = parse_value(line, key, value)?,
            "seed" => cfg.seed = parse_value(line, key, value)?,
            "hermitian_c" => cfg.hermitian_c = parse_bool(line, key, value)?,
            "rk_reference" => cfg.rk_reference = parse_bool(line, key, value)?,
            "rk_init" => {
                cfg.rk_init = match value {
                    "mixed" => RkInit::MaximallyMixed,
                    "up" => RkInit::AllUp,
                    "down" => RkInit::AllDown,
                    _ => return Err(Error::config(Some(line), format!("rk_init: unknown state {value:?}"))),
                }
            }
            "ansatz" => {
                cfg.gradient_ansatz_invariant = match value {
                    "invariant" => true,
                    "rbm" => false,
                    _ => return Err(Error::config(Some(line), format!("ansatz: unknown kind {value:?}"))),
                }
            }
            "cost" => {
                cfg.cost = match value {
                    "normalized" => CostKind::Normalized,
                    "unnormalized" => CostKind::Unnormalized,
                    _ => return Err(Error::config(Some(line), format!("cost: unknown kind {value:?}"))),
                }
            }
            "checkpoint_every" => cfg.checkpoint_every = parse_value(line, key, value)?,
            "dump_density" => cfg.dump_density = parse_bool(line, key, value)?,
            "resume" => cfg.resume = Some(PathBuf::from(value)),
            "out" => cfg.out = PathBuf::from(value),
            _ => return Err(Error::config(Some(line), format!("unknown key {key:?}"))),
        }
    }
    for required in ["N", "mode"] {
        if !seen.contains(required) {
            return Err(Error::config(None, format!("missing required key {required}")));
        }
    }
    if beta_line.is_none() {
        cfg.beta = cfg.alpha;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(None, format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}
