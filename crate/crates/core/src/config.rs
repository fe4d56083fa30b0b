//! Flat key-value run configuration. A config file provides defaults;
//! command-line flags override file values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::image::PixelRect;
use crate::observer::ObserverGains;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    Sim1,
    Sim2,
    Custom,
}

impl std::str::FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim1" => Ok(ScenarioName::Sim1),
            "sim2" => Ok(ScenarioName::Sim2),
            "custom" => Ok(ScenarioName::Custom),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected sim1, sim2 or custom)"
            ))),
        }
    }
}

/// Resolved run configuration for the CLI commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub image_path: Option<PathBuf>,
    pub scenario: ScenarioName,
    pub intrinsics: Option<CameraIntrinsics>,
    /// Region as (u_min, v_min, width, height); None = full frame.
    pub region: Option<(usize, usize, usize, usize)>,
    pub k_delta: f64,
    pub k_gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub out_dir: PathBuf,
    pub dump_frames: bool,
    pub deterministic: bool,
    pub smooth_gradient: bool,
    pub noise_std: f64,
    pub seed: u64,
    /// Replace the pixel reference by the built-in analytic scene.
    pub analytic: bool,
    /// Custom-motion overrides: initial homography (row-major), angular
    /// velocity, scaled linear velocity, plane normal.
    pub h0: Option<[f64; 9]>,
    pub omega: Option<[f64; 3]>,
    pub v_over_d: Option<[f64; 3]>,
    pub eta: Option<[f64; 3]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            image_path: None,
            scenario: ScenarioName::Sim1,
            intrinsics: None,
            region: None,
            k_delta: 0.1,
            k_gamma: 2.0,
            dt: 0.02,
            t_end: 3.0,
            out_dir: PathBuf::from("out"),
            dump_frames: false,
            deterministic: true,
            smooth_gradient: false,
            noise_std: 0.0,
            seed: 0,
            analytic: false,
            h0: None,
            omega: None,
            v_over_d: None,
            eta: None,
        }
    }
}

impl RunConfig {
    /// Parses `key value` (or `key = value`) lines; '#' starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, |c: char| c == '=' || c.is_whitespace());
            let key = parts.next().unwrap_or("").trim();
            let val = parts.next().unwrap_or("").trim().trim_start_matches('=').trim();
            if key.is_empty() || val.is_empty() {
                return Err(Error::Config(format!(
                    "{}:{}: expected 'key value'",
                    path.display(),
                    lineno + 1
                )));
            }
            pairs.insert(key.to_string(), val.to_string());
        }
        for (key, val) in pairs {
            self.apply_key(&key, &val)?;
        }
        Ok(())
    }

    pub fn apply_key(&mut self, key: &str, val: &str) -> Result<()> {
        let bad = |k: &str, v: &str| Error::Config(format!("bad value '{v}' for key '{k}'"));
        match key {
            "image" => self.image_path = Some(PathBuf::from(val)),
            "scenario" => self.scenario = val.parse()?,
            "fu" | "fv" | "u0" | "v0" | "width" | "height" => {
                let mut k = self
                    .intrinsics
                    .unwrap_or(CameraIntrinsics::default_for(256, 254));
                let f: f64 = val.parse().map_err(|_| bad(key, val))?;
                match key {
                    "fu" => k.fu = f,
                    "fv" => k.fv = f,
                    "u0" => k.u0 = f,
                    "v0" => k.v0 = f,
                    "width" => k.width = f as usize,
                    _ => k.height = f as usize,
                }
                self.intrinsics = Some(k);
            }
            "region" => {
                let nums: Vec<usize> = val
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| bad(key, val)))
                    .collect::<Result<_>>()?;
                if nums.len() != 4 {
                    return Err(bad(key, val));
                }
                self.region = Some((nums[0], nums[1], nums[2], nums[3]));
            }
            "k_delta" => self.k_delta = val.parse().map_err(|_| bad(key, val))?,
            "k_gamma" => self.k_gamma = val.parse().map_err(|_| bad(key, val))?,
            "dt" => self.dt = val.parse().map_err(|_| bad(key, val))?,
            "t_end" => self.t_end = val.parse().map_err(|_| bad(key, val))?,
            "out_dir" => self.out_dir = PathBuf::from(val),
            "dump_frames" => self.dump_frames = parse_bool(val).ok_or_else(|| bad(key, val))?,
            "deterministic" => {
                self.deterministic = parse_bool(val).ok_or_else(|| bad(key, val))?
            }
            "smooth_gradient" => {
                self.smooth_gradient = parse_bool(val).ok_or_else(|| bad(key, val))?
            }
            "noise_std" => self.noise_std = val.parse().map_err(|_| bad(key, val))?,
            "seed" => self.seed = val.parse().map_err(|_| bad(key, val))?,
            "analytic" => self.analytic = parse_bool(val).ok_or_else(|| bad(key, val))?,
            "h0" => {
                let nums = parse_floats(val, 9).ok_or_else(|| bad(key, val))?;
                let mut arr = [0.0; 9];
                arr.copy_from_slice(&nums);
                self.h0 = Some(arr);
            }
            "omega" | "v_over_d" | "eta" => {
                let nums = parse_floats(val, 3).ok_or_else(|| bad(key, val))?;
                let arr = [nums[0], nums[1], nums[2]];
                match key {
                    "omega" => self.omega = Some(arr),
                    "v_over_d" => self.v_over_d = Some(arr),
                    _ => self.eta = Some(arr),
                }
            }
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 {
            return Err(Error::Config(format!("dt must be > 0 (got {})", self.dt)));
        }
        if self.t_end < self.dt {
            return Err(Error::Config(format!(
                "t_end must be >= dt (got {})",
                self.t_end
            )));
        }
        if self.k_delta < 0.0 || self.k_gamma <= 0.0 {
            return Err(Error::Config(format!(
                "gains must be positive (k_delta = {}, k_gamma = {})",
                self.k_delta, self.k_gamma
            )));
        }
        if self.noise_std < 0.0 {
            return Err(Error::Config("noise_std must be >= 0".into()));
        }
        Ok(())
    }

    pub fn region_rect(&self, k: &CameraIntrinsics) -> Result<PixelRect> {
        match self.region {
            None => Ok(PixelRect::full(k)),
            Some((u, v, w, h)) => {
                if u + w > k.width || v + h > k.height || w == 0 || h == 0 {
                    return Err(Error::Config(format!(
                        "region {u},{v},{w},{h} outside {}x{} image",
                        k.width, k.height
                    )));
                }
                Ok(PixelRect {
                    u_min: u,
                    v_min: v,
                    width: w,
                    height: h,
                })
            }
        }
    }

    pub fn gains(&self) -> ObserverGains {
        ObserverGains {
            k_delta: self.k_delta,
            k_gamma: self.k_gamma,
        }
    }

    /// Canonical text form; hashed into the CSV header for provenance.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "scenario={:?} image={:?} region={:?} k_delta={} k_gamma={} dt={} t_end={} \
             deterministic={} smooth_gradient={} noise_std={} seed={} analytic={}",
            self.scenario,
            self.image_path,
            self.region,
            self.k_delta,
            self.k_gamma,
            self.dt,
            self.t_end,
            self.deterministic,
            self.smooth_gradient,
            self.noise_std,
            self.seed,
            self.analytic
        );
        let _ = write!(
            s,
            " h0={:?} omega={:?} v_over_d={:?} eta={:?}",
            self.h0, self.omega, self.v_over_d, self.eta
        );
        s
    }

    pub fn hash(&self) -> u64 {
        // FNV-1a over the canonical string
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.canonical_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

fn parse_floats(v: &str, n: usize) -> Option<Vec<f64>> {
    let nums: Vec<f64> = v
        .split(',')
        .map(|s| s.trim().parse().ok())
        .collect::<Option<_>>()?;
    (nums.len() == n).then_some(nums)
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}
