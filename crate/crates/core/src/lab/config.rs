use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::kernel::min_resolvable_level;
use crate::sphere::{KernelSpec, SphereFunction};

const FROZEN: &str = include_str!("../../../../calibration/constants.conf");

/// Calibrated constants read by the assertions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    /// Ceiling for the weak-type ratio.
    pub r_max: f64,
    /// Constant of the sample-wise control between truncation schemes.
    pub pointwise_c: f64,
    /// Default overlap constant for the `F` sets.
    pub c0: f64,
}

impl Constants {
    pub fn parse(text: &str) -> Result<Self> {
        let (mut r_max, mut pointwise_c, mut c0) = (None, None, None);
        for (key, value) in key_values(text)? {
            let v = parse_f64(&key, &value)?;
            match key.as_str() {
                "r_max" => r_max = Some(v),
                "pointwise_c" => pointwise_c = Some(v),
                "c0" => c0 = Some(v),
                _ => return Err(Error::Config(format!("unknown constant `{key}`"))),
            }
        }
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| Error::Config(format!("constant `{k}` missing")));
        Ok(Self { r_max: need(r_max, "r_max")?, pointwise_c: need(pointwise_c, "pointwise_c")?, c0: need(c0, "c0")? })
    }

    /// The constants checked into the repository.
    pub fn frozen() -> Self {
        Self::parse(FROZEN).expect("calibration/constants.conf is well formed")
    }

    /// File body with one comment line per provenance entry.
    pub fn render(&self, provenance: &[String]) -> String {
        let mut s = String::new();
        for p in provenance {
            let _ = writeln!(s, "# {p}");
        }
        let _ = writeln!(s, "r_max = {}", self.r_max);
        let _ = writeln!(s, "pointwise_c = {}", self.pointwise_c);
        let _ = writeln!(s, "c0 = {}", self.c0);
        s
    }
}

fn key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse().map_err(|_| Error::Config(format!("`{key}` must be a real, got `{v}`")))
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("`{key}` must be an integer, got `{v}`")))
}

/// Parameters shared by every experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mesh: u32,
    pub k_min: i32,
    pub k_max: i32,
    pub kernel: KernelSpec,
    /// Subtract the mean of Ω before use.
    pub project: bool,
    pub arc_count: usize,
    pub lambda_points: usize,
    pub lambda_decades: f64,
    /// Decomposition level for the bad-function experiments.
    pub alpha: f64,
    pub s_list: Vec<u32>,
    /// `s` of the tower suites.
    pub tower_s: u32,
    pub gamma: f64,
    pub eta: f64,
    pub c0: f64,
    pub seed: u64,
    pub dilate: f64,
    pub out: PathBuf,
    pub r_max: f64,
    pub pointwise_c: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let c = Constants::frozen();
        Self {
            mesh: 9,
            k_min: -2,
            k_max: 2,
            kernel: KernelSpec::Cos,
            project: true,
            arc_count: 1024,
            lambda_points: 32,
            lambda_decades: 4.0,
            alpha: 1.0,
            s_list: vec![4, 6, 8, 10],
            tower_s: 2,
            gamma: 0.25,
            eta: 0.05,
            c0: c.c0,
            seed: 1,
            dilate: 8.0,
            out: PathBuf::from("out"),
            r_max: c.r_max,
            pointwise_c: c.pointwise_c,
        }
    }
}

impl ExperimentConfig {
    /// Defaults overridden by a flat `key = value` text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (k, v) in key_values(text)? {
            c.set(&k, &v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "mesh" => self.mesh = parse_int(key, v)?,
            "k_min" => self.k_min = parse_int(key, v)?,
            "k_max" => self.k_max = parse_int(key, v)?,
            "kernel" => self.kernel = v.parse()?,
            "project" => {
                self.project = v.parse().map_err(|_| Error::Config(format!("`project` must be true or false, got `{v}`")))?
            }
            "arc_count" => self.arc_count = parse_int(key, v)?,
            "lambda_points" => self.lambda_points = parse_int(key, v)?,
            "lambda_decades" => self.lambda_decades = parse_f64(key, v)?,
            "alpha" => self.alpha = parse_f64(key, v)?,
            "s_list" => {
                self.s_list = v.split(',').map(|t| parse_int(key, t.trim())).collect::<Result<_>>()?;
            }
            "tower_s" => self.tower_s = parse_int(key, v)?,
            "gamma" => self.gamma = parse_f64(key, v)?,
            "eta" => self.eta = parse_f64(key, v)?,
            "c0" => self.c0 = parse_f64(key, v)?,
            "seed" => self.seed = parse_int(key, v)?,
            "dilate" => self.dilate = parse_f64(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "r_max" => self.r_max = parse_f64(key, v)?,
            "pointwise_c" => self.pointwise_c = parse_f64(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(4..=12).contains(&self.mesh) {
            return bad(format!("mesh must be in 4..=12, got {}", self.mesh));
        }
        let lo = min_resolvable_level(self.mesh);
        if self.k_min < lo {
            return bad(format!("k_min = {} is below the finest resolvable level {lo} at mesh {}", self.k_min, self.mesh));
        }
        if self.k_min > self.k_max {
            return bad(format!("empty level range [{}, {}]", self.k_min, self.k_max));
        }
        if self.k_max > 4 {
            return bad(format!("k_max = {} exceeds 4", self.k_max));
        }
        if !self.arc_count.is_power_of_two() || self.arc_count < 8 {
            return bad(format!("arc_count must be a power of two >= 8, got {}", self.arc_count));
        }
        if self.lambda_points < 2 || !(self.lambda_decades > 0.0) {
            return bad("the lambda grid needs >= 2 points and a positive span".into());
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.s_list.iter().any(|&s| s < 2) || self.tower_s < 2 {
            return bad("every s must be >= 2".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.eta > 0.0) || !(self.c0 > 0.0) || !(self.r_max > 0.0) || !(self.pointwise_c > 0.0) {
            return bad("eta, c0, r_max and pointwise_c must be positive".into());
        }
        if !(self.dilate >= 1.0) {
            return bad(format!("dilate must be >= 1, got {}", self.dilate));
        }
        Ok(())
    }

    pub fn omega(&self) -> Result<SphereFunction> {
        self.kernel.build(self.arc_count, self.project)
    }

    /// `lambda_points` log-spaced values spanning `lambda_decades` around `center`.
    pub fn lambda_grid(&self, center: f64) -> Vec<f64> {
        let n = self.lambda_points;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64 - 0.5;
                center * 10f64.powf(t * self.lambda_decades)
            })
            .collect()
    }

    /// Flat text that parses back to this config.
    pub fn render(&self) -> String {
        let s_list: Vec<String> = self.s_list.iter().map(|s| s.to_string()).collect();
        format!(
            "mesh = {}\nk_min = {}\nk_max = {}\nkernel = {}\nproject = {}\narc_count = {}\nlambda_points = {}\n\
             lambda_decades = {}\nalpha = {}\ns_list = {}\ntower_s = {}\ngamma = {}\neta = {}\nc0 = {}\nseed = {}\n\
             dilate = {}\nout = {}\nr_max = {}\npointwise_c = {}\n",
            self.mesh,
            self.k_min,
            self.k_max,
            self.kernel,
            self.project,
            self.arc_count,
            self.lambda_points,
            self.lambda_decades,
            self.alpha,
            s_list.join(","),
            self.tower_s,
            self.gamma,
            self.eta,
            self.c0,
            self.seed,
            self.dilate,
            self.out.display(),
            self.r_max,
            self.pointwise_c
        )
    }
}
