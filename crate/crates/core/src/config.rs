//! Experiment configuration: a flat key-value text format with `[env]` and
//! `[experiment]` sections.
//!
//! ```text
//! # comments start with '#'
//! [env]
//! M = 2
//! d = 1
//! L = 1
//! norm = L2
//! mean_family = CONE
//! peaks = 0.37 0.62 @ 1
//! noise = BERNOULLI
//!
//! [experiment]
//! algorithm = mcab_a
//! variant = A
//! T = 10000
//! trials = 20
//! seed = 7
//! ```
//!
//! Peaks are `coords @ height`, separated by `;`. `sigma` is required with
//! `noise = GAUSSIAN` and rejected otherwise. Optional keys: `K`, `f`
//! (`sqrt` or `log`), `doubling_cap`, `catch_up`, `output_dir`.

use std::collections::HashMap;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::env::{EnvModel, FamilyKind, Noise, Norm, Peak};
use crate::error::{Error, Result};
use crate::geometry::MAX_SUPPORTED_LEVEL;
use crate::harness::{Algorithm, PolicySpec};
use crate::protocol::ProblemVariant;
use crate::uniform::ExploreGrowth;
use crate::zooming::DEFAULT_DOUBLING_CAP;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub players: usize,
    pub dim: usize,
    pub lipschitz: f64,
    pub norm: Norm,
    pub family: FamilyKind,
    pub peaks: Vec<Peak>,
    pub noise: Noise,
}

impl EnvConfig {
    pub fn build(&self) -> Result<EnvModel> {
        EnvModel::new(self.players, self.dim, self.lipschitz, self.norm, self.family, self.peaks.clone(), self.noise)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub algorithm: Algorithm,
    pub variant: ProblemVariant,
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    pub k: Option<u32>,
    pub growth: ExploreGrowth,
    pub doubling_cap: u32,
    pub catch_up: bool,
    pub output_dir: PathBuf,
}

const ENV_KEYS: [&str; 8] = ["M", "d", "L", "norm", "mean_family", "peaks", "noise", "sigma"];
const EXPERIMENT_KEYS: [&str; 10] = [
    "algorithm",
    "variant",
    "T",
    "trials",
    "seed",
    "K",
    "f",
    "doubling_cap",
    "catch_up",
    "output_dir",
];

struct Entry {
    line: usize,
    value: String,
}

struct Section {
    line: usize,
    entries: HashMap<String, Entry>,
}

impl Section {
    fn raw(&self, key: &str) -> Result<&Entry> {
        self.entries
            .get(key)
            .ok_or_else(|| Error::config(self.line, key, "required key is missing"))
    }

    fn parse<T, E: std::fmt::Display>(&self, key: &str, f: impl FnOnce(&str) -> std::result::Result<T, E>) -> Result<T> {
        let e = self.raw(key)?;
        f(&e.value).map_err(|err| Error::config(e.line, key, err.to_string()))
    }

    fn optional<T, E: std::fmt::Display>(
        &self,
        key: &str,
        f: impl FnOnce(&str) -> std::result::Result<T, E>,
    ) -> Result<Option<T>> {
        if self.entries.contains_key(key) {
            self.parse(key, f).map(Some)
        } else {
            Ok(None)
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(self.line, |e| e.line)
    }
}

fn finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn integer<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean (true/false)")),
    }
}

fn noise_kind(s: &str) -> std::result::Result<bool, String> {
    match s.to_ascii_uppercase().as_str() {
        "GAUSSIAN" => Ok(true),
        "BERNOULLI" => Ok(false),
        _ => Err(format!("unknown noise `{s}` (expected GAUSSIAN or BERNOULLI)")),
    }
}

fn peaks(s: &str) -> std::result::Result<Vec<Peak>, String> {
    let mut out = vec![];
    for part in s.split(';') {
        let (coords, height) = part
            .split_once('@')
            .ok_or_else(|| format!("peak `{}` must look like `x1 x2 … @ height`", part.trim()))?;
        let location = coords.split_whitespace().map(finite).collect::<std::result::Result<Vec<_>, _>>()?;
        if location.is_empty() {
            return Err("peak has no coordinates".into());
        }
        out.push(Peak { location, height: finite(height.trim())? });
    }
    Ok(out)
}

fn sections(text: &str) -> Result<HashMap<String, Section>> {
    let mut out: HashMap<String, Section> = HashMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::config(line, content, "unterminated section header"))?
                .trim()
                .to_string();
            if name != "env" && name != "experiment" {
                return Err(Error::config(line, &name, "unknown section (expected [env] or [experiment])"));
            }
            if out.contains_key(&name) {
                return Err(Error::config(line, &name, "duplicate section"));
            }
            out.insert(name.clone(), Section { line, entries: HashMap::new() });
            current = Some(name);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config(line, content, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let section = current
            .as_ref()
            .ok_or_else(|| Error::config(line, key, "key appears before any section header"))?;
        let allowed: &[&str] = if section == "env" { &ENV_KEYS } else { &EXPERIMENT_KEYS };
        if !allowed.contains(&key) {
            return Err(Error::config(line, key, format!("unknown key in [{section}]")));
        }
        if value.is_empty() {
            return Err(Error::config(line, key, "empty value"));
        }
        let entries = &mut out.get_mut(section).expect("section exists").entries;
        if entries.contains_key(key) {
            return Err(Error::config(line, key, "duplicate key"));
        }
        entries.insert(key.to_string(), Entry { line, value: value.to_string() });
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let secs = sections(text)?;
        let env = secs.get("env").ok_or_else(|| Error::config(0, "env", "missing [env] section"))?;
        let exp = secs
            .get("experiment")
            .ok_or_else(|| Error::config(0, "experiment", "missing [experiment] section"))?;

        let gaussian = env.parse("noise", noise_kind)?;
        let sigma = env.optional("sigma", finite)?;
        let noise = match (gaussian, sigma) {
            (true, Some(sigma)) => Noise::Gaussian { sigma },
            (true, None) => return Err(Error::config(env.line_of("noise"), "sigma", "GAUSSIAN noise needs sigma")),
            (false, None) => Noise::Bernoulli,
            (false, Some(_)) => {
                return Err(Error::config(env.line_of("sigma"), "sigma", "sigma only applies to GAUSSIAN noise"))
            }
        };
        let env_cfg = EnvConfig {
            players: env.parse("M", integer)?,
            dim: env.parse("d", integer)?,
            lipschitz: env.parse("L", finite)?,
            norm: env.parse("norm", str::parse::<Norm>)?,
            family: env.parse("mean_family", str::parse::<FamilyKind>)?,
            peaks: env.parse("peaks", peaks)?,
            noise,
        };
        if let Err(e) = env_cfg.build() {
            return Err(Error::config(env.line, "env", e.to_string()));
        }

        let algorithm: Algorithm = exp.parse("algorithm", str::parse)?;
        let variant: ProblemVariant = exp.parse("variant", str::parse)?;
        algorithm.check_pairing(variant)?;
        let horizon: u64 = exp.parse("T", integer)?;
        if horizon < 3 {
            return Err(Error::config(exp.line_of("T"), "T", "horizon must be at least 3"));
        }
        let trials: u64 = exp.parse("trials", integer)?;
        if trials < 1 {
            return Err(Error::config(exp.line_of("trials"), "trials", "at least one trial is required"));
        }
        let k: Option<u32> = exp.optional("K", integer)?;
        if k == Some(0) {
            return Err(Error::config(exp.line_of("K"), "K", "K must be at least 1"));
        }
        let doubling_cap = exp.optional("doubling_cap", integer)?.unwrap_or(DEFAULT_DOUBLING_CAP);
        if !(1..=MAX_SUPPORTED_LEVEL).contains(&doubling_cap) {
            return Err(Error::config(
                exp.line_of("doubling_cap"),
                "doubling_cap",
                format!("must be between 1 and {MAX_SUPPORTED_LEVEL}"),
            ));
        }
        Ok(ExperimentConfig {
            env: env_cfg,
            algorithm,
            variant,
            horizon,
            trials,
            seed: exp.parse("seed", integer)?,
            k,
            growth: exp.optional("f", str::parse::<ExploreGrowth>)?.unwrap_or_default(),
            doubling_cap,
            catch_up: exp.optional("catch_up", boolean)?.unwrap_or(true),
            output_dir: exp
                .optional("output_dir", |s| Ok::<_, String>(PathBuf::from(s)))?
                .unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// Canonical text form; parsing it yields this config again.
    pub fn to_text(&self) -> String {
        let e = &self.env;
        let peaks = e
            .peaks
            .iter()
            .map(|p| {
                let coords: Vec<String> = p.location.iter().map(|x| x.to_string()).collect();
                format!("{} @ {}", coords.join(" "), p.height)
            })
            .collect::<Vec<_>>()
            .join(" ; ");
        let mut out = String::from("[env]\n");
        out += &format!("M = {}\nd = {}\nL = {}\nnorm = {}\n", e.players, e.dim, e.lipschitz, e.norm);
        out += &format!("mean_family = {}\npeaks = {}\n", e.family, peaks);
        match e.noise {
            Noise::Bernoulli => out += "noise = BERNOULLI\n",
            Noise::Gaussian { sigma } => out += &format!("noise = GAUSSIAN\nsigma = {sigma}\n"),
        }
        out += "\n[experiment]\n";
        out += &format!("algorithm = {}\nvariant = {}\n", self.algorithm, self.variant);
        out += &format!("T = {}\ntrials = {}\nseed = {}\n", self.horizon, self.trials, self.seed);
        if let Some(k) = self.k {
            out += &format!("K = {k}\n");
        }
        out += &format!("f = {}\ndoubling_cap = {}\ncatch_up = {}\n", self.growth, self.doubling_cap, self.catch_up);
        out += &format!("output_dir = {}\n", self.output_dir.display());
        out
    }

    /// Hex prefix of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn policy(&self) -> PolicySpec {
        PolicySpec {
            algorithm: self.algorithm,
            k: self.k,
            growth: self.growth,
            doubling_cap: self.doubling_cap,
            catch_up: self.catch_up,
        }
    }
}
