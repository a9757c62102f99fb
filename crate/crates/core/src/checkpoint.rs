//! Exact text checkpoints of ansatz parameters and optimizer progress.
//!
//! ```text
//! # olnqs checkpoint
//! format=1
//! n_sites=5
//! hidden=5
//! mixing=5
//! hermitian_c=true
//! seed=42
//! kind=invariant
//! iteration=120
//! time=0x3ff0000000000000
//! chi=0x3f847ae147ae147b,0xbf70624dd2f1a9fc,...
//! ```
//!
//! Floating-point values are stored as the hex of their IEEE-754 bits, so a
//! write/read cycle reproduces them exactly.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::ansatz::{AnsatzKind, RbmParameters};
use crate::error::{Error, Result};
use crate::variational::VariationalState;

const FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: RbmParameters,
    pub seed: u64,
    pub kind: String,
    pub iteration: usize,
    pub time: f64,
}

fn hex(v: f64) -> String {
    format!("{:#018x}", v.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    let digits = s
        .trim()
        .strip_prefix("0x")
        .ok_or_else(|| Error::Checkpoint(format!("expected hex float, got {s:?}")))?;
    u64::from_str_radix(digits, 16)
        .map(f64::from_bits)
        .map_err(|e| Error::Checkpoint(format!("{s:?}: {e}")))
}

impl Checkpoint {
    pub fn from_state(state: &VariationalState, seed: u64) -> Self {
        Self {
            params: state.params.clone(),
            seed,
            kind: state.kind.name().to_string(),
            iteration: state.iteration,
            time: state.time,
        }
    }

    pub fn into_state(self) -> Result<VariationalState> {
        let kind = match self.kind.as_str() {
            "rbm" => AnsatzKind::Plain,
            "invariant" => AnsatzKind::invariant(self.params.n_visible())?,
            other => return Err(Error::Checkpoint(format!("unknown ansatz kind {other:?}"))),
        };
        Ok(VariationalState {
            params: self.params,
            kind,
            iteration: self.iteration,
            time: self.time,
        })
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = String::from("# olnqs checkpoint\n");
        let _ = writeln!(out, "format={FORMAT}");
        let _ = writeln!(out, "n_sites={}", p.n_visible());
        let _ = writeln!(out, "hidden={}", p.n_hidden());
        let _ = writeln!(out, "mixing={}", p.n_mixing());
        let _ = writeln!(out, "hermitian_c={}", p.hermitian_c());
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "kind={}", self.kind);
        let _ = writeln!(out, "iteration={}", self.iteration);
        let _ = writeln!(out, "time={}", hex(self.time));
        let chi: Vec<String> = p.to_real().into_iter().map(hex).collect();
        let _ = writeln!(out, "chi={}", chi.join(","));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fields = HashMap::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Checkpoint(format!("line without '=': {line:?}")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Checkpoint(format!("missing field {k}")))
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?.parse().map_err(|e| Error::Checkpoint(format!("{k}: {e}")))
        };
        if int("format")? != u64::from(FORMAT) {
            return Err(Error::Checkpoint(format!("unsupported format {}", get("format")?)));
        }
        let hermitian_c = match get("hermitian_c")? {
            "true" => true,
            "false" => false,
            other => return Err(Error::Checkpoint(format!("hermitian_c={other}"))),
        };
        let chi_text = get("chi")?;
        let chi: Vec<f64> = if chi_text.is_empty() {
            Vec::new()
        } else {
            chi_text.split(',').map(unhex).collect::<Result<_>>()?
        };
        let params = RbmParameters::from_real(
            int("n_sites")? as usize,
            int("hidden")? as usize,
            int("mixing")? as usize,
            hermitian_c,
            &chi,
        )
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Self {
            params,
            seed: int("seed")?,
            kind: get("kind")?.to_string(),
            iteration: int("iteration")? as usize,
            time: unhex(get("time")?)?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
