//! `key = value` experiment configs.
//!
//! Blank lines and text after `#` are ignored. Unknown or repeated keys are
//! rejected. Relative paths resolve against the config file's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use invlrr::grouprep::{c4_image_rotation, rep_from_generator, GroupRep};
use invlrr::trainer::Loss;

use crate::error::{CliError, CliResult};
use crate::matfile::read_matrix;

/// Group presets understood by the `group` key.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupPreset {
    /// Quarter-turn rotations of a `p × p` image (`c4_image:p`).
    C4Image(usize),
    /// Cyclic shift of `d` coordinates (`cyclic_perm:d`).
    CyclicPerm(usize),
    /// Planar rotation by `2π/k` (`rotation2d:k`).
    Rotation2d(usize),
    /// Identity on `d` coordinates (`trivial:d`).
    Trivial(usize),
    /// Generator from a matrix file with its order (`custom:<file>+<order>`).
    Custom { path: PathBuf, order: usize },
}

impl GroupPreset {
    fn parse(value: &str, base: &Path) -> CliResult<Self> {
        let bad = || CliError::Config(format!("group: cannot parse `{value}`"));
        let (kind, arg) = value.split_once(':').ok_or_else(bad)?;
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
        Ok(match kind.trim() {
            "c4_image" => GroupPreset::C4Image(num(arg)?),
            "cyclic_perm" => GroupPreset::CyclicPerm(num(arg)?),
            "rotation2d" => GroupPreset::Rotation2d(num(arg)?),
            "trivial" => GroupPreset::Trivial(num(arg)?),
            "custom" => {
                let (file, order) = arg.rsplit_once('+').ok_or_else(bad)?;
                let path = base.join(file.trim());
                if !path.is_file() {
                    return Err(CliError::Config(format!("group: file {} does not exist", path.display())));
                }
                GroupPreset::Custom { path, order: num(order)? }
            }
            _ => return Err(bad()),
        })
    }

    pub fn build(&self) -> CliResult<GroupRep> {
        Ok(match self {
            GroupPreset::C4Image(p) => {
                if *p == 0 {
                    return Err(CliError::Config("group: image side must be positive".into()));
                }
                c4_image_rotation(*p)
            }
            GroupPreset::CyclicPerm(d) => GroupRep::cyclic_shift(*d)?,
            GroupPreset::Rotation2d(k) => GroupRep::rotation2d(*k)?,
            GroupPreset::Trivial(d) => {
                if *d == 0 {
                    return Err(CliError::Config("group: dimension must be positive".into()));
                }
                GroupRep::trivial(*d)
            }
            GroupPreset::Custom { path, order } => rep_from_generator(read_matrix(path)?, *order)?,
        })
    }
}

/// Parsed experiment configuration; unset optional keys are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub base_dir: PathBuf,
    pub mode: Option<String>,
    pub group: Option<GroupPreset>,
    pub d0: Option<usize>,
    pub dl: Option<usize>,
    pub hidden: Vec<usize>,
    pub r: Option<usize>,
    pub lambda: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub noise_sigma: f64,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub loss: Loss,
    pub invariant_target: bool,
    pub target_rank: Option<usize>,
    pub data_dir: Option<PathBuf>,
    pub width: usize,
    pub trials: usize,
    pub orbit_width: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub init_scale: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            base_dir: PathBuf::from("."),
            mode: None,
            group: None,
            d0: None,
            dl: None,
            hidden: Vec::new(),
            r: None,
            lambda: None,
            lambda_grid: None,
            n: None,
            noise_sigma: 0.0,
            seed: 0,
            epochs: 1000,
            learning_rate: 1e-3,
            loss: Loss::Mse,
            invariant_target: true,
            target_rank: None,
            data_dir: None,
            width: 1 << 16,
            trials: 50,
            orbit_width: 64,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            init_scale: 1.0,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> CliResult<Vec<T>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_value(key, s.trim())).collect()
}

/// `a,b,c` or `geom:lo:hi:count` (inclusive, log-spaced).
fn parse_grid(value: &str) -> CliResult<Vec<f64>> {
    let grid = if let Some(spec) = value.strip_prefix("geom:") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!("lambda_grid: expected geom:lo:hi:count, got `{value}`")));
        }
        let lo: f64 = parse_value("lambda_grid", parts[0])?;
        let hi: f64 = parse_value("lambda_grid", parts[1])?;
        let count: usize = parse_value("lambda_grid", parts[2])?;
        if !(lo > 0.0 && hi > lo) || count < 2 {
            return Err(CliError::Config(format!("lambda_grid: need 0 < lo < hi and count ≥ 2 in `{value}`")));
        }
        let step = (hi / lo).ln() / (count - 1) as f64;
        (0..count).map(|i| if i + 1 == count { hi } else { lo * (step * i as f64).exp() }).collect()
    } else {
        parse_list("lambda_grid", value)?
    };
    if let Some(bad) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(CliError::Config(format!("lambda_grid: value {bad} is not positive")));
    }
    if grid.is_empty() {
        return Err(CliError::Config("lambda_grid: empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("lambda_grid: values must be strictly increasing".into()));
    }
    Ok(grid)
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected true or false, got `{value}`"))),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut cfg = ExperimentConfig { base_dir: base_dir.to_path_buf(), ..Default::default() };
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            match key {
                "mode" => cfg.mode = Some(value.to_string()),
                "group" => cfg.group = Some(GroupPreset::parse(value, base_dir)?),
                "d0" => cfg.d0 = Some(parse_value(key, value)?),
                "dL" => cfg.dl = Some(parse_value(key, value)?),
                "hidden" => cfg.hidden = parse_list(key, value)?,
                "r" => cfg.r = Some(parse_value(key, value)?),
                "lambda" => cfg.lambda = Some(parse_value(key, value)?),
                "lambda_grid" => cfg.lambda_grid = Some(parse_grid(value)?),
                "n" => cfg.n = Some(parse_value(key, value)?),
                "noise_sigma" => cfg.noise_sigma = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                "epochs" => cfg.epochs = parse_value(key, value)?,
                "learning_rate" => cfg.learning_rate = parse_value(key, value)?,
                "loss" => cfg.loss = value.parse().map_err(|_| CliError::Config(format!("loss: unknown `{value}`")))?,
                "invariant_target" => cfg.invariant_target = parse_bool(key, value)?,
                "target_rank" => cfg.target_rank = Some(parse_value(key, value)?),
                "data_dir" => cfg.data_dir = Some(base_dir.join(value)),
                "width" => cfg.width = parse_value(key, value)?,
                "trials" => cfg.trials = parse_value(key, value)?,
                "orbit_width" => cfg.orbit_width = parse_value(key, value)?,
                "beta1" => cfg.beta1 = parse_value(key, value)?,
                "beta2" => cfg.beta2 = parse_value(key, value)?,
                "adam_eps" => cfg.adam_eps = parse_value(key, value)?,
                "init_scale" => cfg.init_scale = parse_value(key, value)?,
                _ => return Err(CliError::Config(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
            return Err(CliError::Config(format!("noise_sigma: must be nonnegative, got {}", cfg.noise_sigma)));
        }
        Ok(cfg)
    }

    pub fn rep(&self) -> CliResult<GroupRep> {
        let preset = self.group.as_ref().ok_or_else(|| CliError::Config("missing key `group`".into()))?;
        let rep = preset.build()?;
        if let Some(d0) = self.d0 {
            if d0 != rep.dim() {
                return Err(CliError::Config(format!("d0 = {d0} but group acts on {} coordinates", rep.dim())));
            }
        }
        Ok(rep)
    }

    pub fn require<T: Copy>(value: Option<T>, key: &str) -> CliResult<T> {
        value.ok_or_else(|| CliError::Config(format!("missing key `{key}`")))
    }
}
