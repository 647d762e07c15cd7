//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! elements_per_subdomain = 64
//! px = 4
//! py = 4
//! coefficient = channels
//! contrast = 1e6
//! mode = both
//! m = 12
//!
//! [repeat]
//! px = 2, 4, 8
//! py = 2, 4, 8
//! ```
//!
//! Keys after `[repeat]` take comma-separated lists. Lists of equal length
//! on keys named together in one `zip = a, b` line advance in lockstep; all
//! other lists expand to their cartesian product. Later keys win.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coarse::{CoarseMode, ModeRule};
use crate::decomp::EtaRamp;
use crate::error::{Error, Result};
use crate::fem::CoefficientKind;
use crate::krylov::ResidualNorm;

/// Which preconditioners an experiment runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunModes {
    None,
    Geneo,
    #[serde(rename = "rgeneo")]
    RGeneo,
    Both,
}

impl RunModes {
    /// Modes in report order; `None` stands for the one-level method.
    pub fn expand(self) -> Vec<Option<CoarseMode>> {
        match self {
            RunModes::None => vec![None],
            RunModes::Geneo => vec![Some(CoarseMode::Geneo)],
            RunModes::RGeneo => vec![Some(CoarseMode::RGeneo)],
            RunModes::Both => vec![Some(CoarseMode::Geneo), Some(CoarseMode::RGeneo)],
        }
    }
}

impl FromStr for RunModes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "one-level" => Ok(RunModes::None),
            "geneo" => Ok(RunModes::Geneo),
            "rgeneo" | "r-geneo" => Ok(RunModes::RGeneo),
            "both" => Ok(RunModes::Both),
            other => Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for RunModes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunModes::None => "none",
            RunModes::Geneo => "geneo",
            RunModes::RGeneo => "rgeneo",
            RunModes::Both => "both",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Global mesh size; overridden by `elements_per_subdomain`.
    pub nx: usize,
    pub ny: usize,
    pub elements_per_subdomain: Option<usize>,
    pub px: usize,
    pub py: usize,
    pub overlap_layers: usize,
    pub star_layers: usize,
    pub coefficient: CoefficientKind,
    pub contrast: f64,
    pub coefficient_seed: u64,
    pub mode: RunModes,
    pub rule: ModeRule,
    pub tol: f64,
    pub maxit: usize,
    pub residual_norm: ResidualNorm,
    pub eta_ramp: EtaRamp,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub dense_cap: usize,
    pub verify_theory: bool,
    pub dump_matrices: bool,
}

impl Default for ExperimentConfig {
    /// 2x2 subdomains of 64x64 elements on the channel coefficient.
    fn default() -> Self {
        ExperimentConfig {
            nx: 128,
            ny: 128,
            elements_per_subdomain: Some(64),
            px: 2,
            py: 2,
            overlap_layers: 2,
            star_layers: 1,
            coefficient: CoefficientKind::Channels,
            contrast: 1e6,
            coefficient_seed: 7,
            mode: RunModes::Both,
            rule: ModeRule::Fixed(12),
            tol: 1e-10,
            maxit: 2000,
            residual_norm: ResidualNorm::Unpreconditioned,
            eta_ramp: EtaRamp::Linear,
            threads: 1,
            out: None,
            seed: 0x5eed,
            dense_cap: 200,
            verify_theory: false,
            dump_matrices: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::parse(
            key,
            format!("expected a boolean, got `{value}`"),
        )),
    }
}

impl ExperimentConfig {
    /// Mesh size after resolving `elements_per_subdomain`.
    pub fn mesh_size(&self) -> (usize, usize) {
        match self.elements_per_subdomain {
            Some(e) => (self.px * e, self.py * e),
            None => (self.nx, self.ny),
        }
    }

    pub fn n_subdomains(&self) -> usize {
        self.px * self.py
    }

    /// Sets one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "nx" => {
                self.nx = parse_num(key, v)?;
                self.elements_per_subdomain = None;
            }
            "ny" => {
                self.ny = parse_num(key, v)?;
                self.elements_per_subdomain = None;
            }
            "n" | "mesh" => {
                self.nx = parse_num(key, v)?;
                self.ny = self.nx;
                self.elements_per_subdomain = None;
            }
            "elements_per_subdomain" => self.elements_per_subdomain = Some(parse_num(key, v)?),
            "px" => self.px = parse_num(key, v)?,
            "py" => self.py = parse_num(key, v)?,
            "subdomains" => {
                self.px = parse_num(key, v)?;
                self.py = self.px;
            }
            "overlap_layers" | "overlap" => self.overlap_layers = parse_num(key, v)?,
            "star_layers" | "strip" => self.star_layers = parse_num(key, v)?,
            "coefficient" => self.coefficient = v.parse()?,
            "contrast" => self.contrast = parse_num(key, v)?,
            "coefficient_seed" => self.coefficient_seed = parse_num(key, v)?,
            "mode" => self.mode = v.parse()?,
            "m" => self.rule = ModeRule::Fixed(parse_num(key, v)?),
            "threshold" | "tau" => self.rule = ModeRule::Threshold(parse_num(key, v)?),
            "tol" => self.tol = parse_num(key, v)?,
            "maxit" => self.maxit = parse_num(key, v)?,
            "residual_norm" => {
                self.residual_norm = match v {
                    "unpreconditioned" | "true" => ResidualNorm::Unpreconditioned,
                    "preconditioned" => ResidualNorm::Preconditioned,
                    _ => return Err(Error::parse(key, format!("unknown norm `{v}`"))),
                }
            }
            "eta_ramp" => {
                self.eta_ramp = match v {
                    "linear" => EtaRamp::Linear,
                    _ => return Err(Error::parse(key, format!("unknown ramp `{v}`"))),
                }
            }
            "threads" => self.threads = parse_num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "seed" => self.seed = parse_num(key, v)?,
            "dense_cap" => self.dense_cap = parse_num(key, v)?,
            "verify_theory" => self.verify_theory = parse_bool(key, v)?,
            "dump_matrices" => self.dump_matrices = parse_bool(key, v)?,
            other => return Err(Error::parse(other, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        let (nx, ny) = self.mesh_size();
        if nx == 0 || ny == 0 || self.px == 0 || self.py == 0 {
            return bad("mesh and partition counts must be positive");
        }
        if nx % self.px != 0 || ny % self.py != 0 {
            return bad("mesh size must be divisible by the partition");
        }
        if self.overlap_layers == 0 || self.star_layers == 0 {
            return bad("overlap and strip layers must be positive");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol must lie in (0, 1)");
        }
        if self.maxit == 0 || self.threads == 0 {
            return bad("maxit and threads must be positive");
        }
        if !(self.contrast >= 1.0 && self.contrast.is_finite()) {
            return bad("contrast must be a finite number >= 1");
        }
        match self.rule {
            ModeRule::Fixed(0) if self.mode != RunModes::None => bad("a two-level run needs m > 0"),
            ModeRule::Threshold(t) if !(t > 0.0) => bad("threshold must be positive"),
            _ => Ok(()),
        }
    }
}

/// Parses a configuration file into the list of experiments it describes.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    let mut base = ExperimentConfig::default();
    let mut repeat: Vec<(String, Vec<String>)> = Vec::new();
    let mut zipped: Vec<Vec<String>> = Vec::new();
    let mut in_repeat = false;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let loc = format!("line {}", no + 1);
        if line.starts_with('[') {
            if line == "[repeat]" {
                in_repeat = true;
                continue;
            }
            return Err(Error::parse(loc, format!("unknown section `{line}`")));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(&loc, "expected `key = value`"))?;
        let key = key.trim();
        if in_repeat {
            let items: Vec<String> = value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if items.is_empty() {
                return Err(Error::parse(loc, format!("empty list for `{key}`")));
            }
            if key == "zip" {
                zipped.push(items);
            } else {
                // validate every value up front
                for it in &items {
                    base.clone()
                        .set(key, it)
                        .map_err(|e| Error::parse(&loc, e.to_string()))?;
                }
                repeat.push((key.to_string(), items));
            }
        } else {
            base.set(key, value)
                .map_err(|e| Error::parse(&loc, e.to_string()))?;
        }
    }

    // group lockstep keys into one axis
    let mut axes: Vec<Vec<Vec<(String, String)>>> = Vec::new();
    let mut used = vec![false; repeat.len()];
    for group in &zipped {
        let idx: Vec<usize> = group
            .iter()
            .map(|k| {
                repeat
                    .iter()
                    .position(|(rk, _)| rk == k)
                    .ok_or_else(|| Error::parse("[repeat]", format!("zip names unknown key `{k}`")))
            })
            .collect::<Result<_>>()?;
        let len = repeat[idx[0]].1.len();
        if idx.iter().any(|&i| repeat[i].1.len() != len) {
            return Err(Error::parse("[repeat]", "zipped lists differ in length"));
        }
        axes.push(
            (0..len)
                .map(|p| {
                    idx.iter()
                        .map(|&i| (repeat[i].0.clone(), repeat[i].1[p].clone()))
                        .collect()
                })
                .collect(),
        );
        for i in idx {
            used[i] = true;
        }
    }
    for (i, (k, items)) in repeat.iter().enumerate() {
        if !used[i] {
            axes.push(items.iter().map(|v| vec![(k.clone(), v.clone())]).collect());
        }
    }

    let mut configs = vec![base];
    for axis in &axes {
        let mut next = Vec::with_capacity(configs.len() * axis.len());
        for c in &configs {
            for assignment in axis {
                let mut c = c.clone();
                for (k, v) in assignment {
                    c.set(k, v)?;
                }
                next.push(c);
            }
        }
        configs = next;
    }
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}
