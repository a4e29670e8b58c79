//! Experiment configuration: flat `key = value` files with every key
//! overridable by a command-line flag of the same name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use helmprec_core::filter::FilterConfig;
use helmprec_core::lwpt::LwptConfig;
use helmprec_core::solver::SolveConfig;

/// Number of bands: a fixed count or the frequency-scaled rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bands {
    Fixed(usize),
    Auto,
}

impl Bands {
    pub fn resolve(&self, omega: f64, l: f64) -> usize {
        match self {
            Bands::Fixed(n) => *n,
            Bands::Auto => FilterConfig::auto_bands(omega, l),
        }
    }
}

/// Experiment parameters; the defaults follow the reference protocol
/// (damping 2*pi, 16 points per wavelength, 8 angles, two bands).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub omega: Option<f64>,
    pub alpha: f64,
    pub nw: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub angles: usize,
    pub bands: Bands,
    pub n: Option<usize>,
    pub medium: Option<PathBuf>,
    pub out: PathBuf,
    pub omegas: Vec<f64>,
    pub n_media: usize,
    pub suite: Option<String>,
    pub inject_weight_fault: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            omega: None,
            alpha: 2.0 * std::f64::consts::PI,
            nw: 16.0,
            tol: 1e-5,
            max_iter: 500,
            seed: 1,
            angles: 8,
            bands: Bands::Fixed(2),
            n: None,
            medium: None,
            out: PathBuf::from("."),
            omegas: Vec::new(),
            n_media: 20,
            suite: None,
            inject_weight_fault: false,
        }
    }
}

/// Parse an angular frequency: a float, or `<x>pi` for multiples of pi.
pub fn parse_omega(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Some(stripped) = t.strip_suffix("pi") {
        stripped
            .trim()
            .parse::<f64>()
            .map(|v| v * std::f64::consts::PI)
            .map_err(|_| format!("cannot parse frequency {t:?}"))
    } else {
        t.parse::<f64>().map_err(|_| format!("cannot parse frequency {t:?}"))
    }
}

impl ExperimentConfig {
    pub fn solve_config(&self, omega: f64, l: f64) -> SolveConfig {
        SolveConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            lwpt: LwptConfig {
                filter: FilterConfig {
                    n_angles: self.angles,
                    n_bands: self.bands.resolve(omega, l),
                    ..FilterConfig::default()
                },
                ..LwptConfig::default()
            },
        }
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "omega" => self.omega = Some(parse_omega(value)?),
            "alpha" => self.alpha = value.parse().map_err(|_| bad(key, value))?,
            "nw" | "ppw" => self.nw = value.parse().map_err(|_| bad(key, value))?,
            "tol" => self.tol = value.parse().map_err(|_| bad(key, value))?,
            "max-iter" | "max_iter" => {
                self.max_iter = value.parse().map_err(|_| bad(key, value))?
            }
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "angles" => self.angles = value.parse().map_err(|_| bad(key, value))?,
            "bands" => {
                self.bands = if value == "auto" {
                    Bands::Auto
                } else {
                    Bands::Fixed(value.parse().map_err(|_| bad(key, value))?)
                }
            }
            "n" => self.n = Some(value.parse().map_err(|_| bad(key, value))?),
            "medium" => self.medium = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "omegas" => {
                self.omegas = value
                    .split(',')
                    .map(parse_omega)
                    .collect::<Result<Vec<_>, _>>()?
            }
            "n-media" | "n_media" => {
                self.n_media = value.parse().map_err(|_| bad(key, value))?
            }
            "suite" => self.suite = Some(value.to_string()),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Load assignments from a `key = value` file (blank lines and `#`
    /// comments ignored), then let flags override.
    pub fn load_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), lineno + 1))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }
}

fn bad(key: &str, value: &str) -> String {
    format!("cannot parse {key} = {value:?}")
}

/// Split raw arguments into flag assignments; flags are `--key value`
/// (or `--key=value`), plus bare switches.
pub fn parse_flags(args: &[String]) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| format!("unexpected argument {a:?}"))?;
        if let Some((k, v)) = key.split_once('=') {
            map.insert(k.to_string(), v.to_string());
            i += 1;
        } else if key == "inject-weight-fault" || key == "zero-amplitude" {
            map.insert(key.to_string(), "true".to_string());
            i += 1;
        } else {
            let v = args
                .get(i + 1)
                .ok_or_else(|| format!("flag --{key} expects a value"))?;
            map.insert(key.to_string(), v.clone());
            i += 2;
        }
    }
    Ok(map)
}
