use super::checks::{f_level_decay, pointwise_ratios};
use super::config::{Constants, ExperimentConfig};
use super::experiments::weak11_samples;
use crate::error::{Error, Result};

/// Margin applied to the observed suprema.
const MARGIN: f64 = 2.0;

/// Constants measured on the seeded suites.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub constants: Constants,
    pub observed_r: f64,
    pub observed_pointwise: f64,
    /// `(c0, worst F ratio, instances with F¹ ≠ ∅)` for every candidate tried.
    pub c0_trials: Vec<(f64, f64, usize)>,
    pub provenance: Vec<String>,
}

impl Calibration {
    /// Contents of `calibration/constants.conf`.
    pub fn render(&self) -> String {
        self.constants.render(&self.provenance)
    }
}

/// Measures `r_max`, the pointwise constant and the smallest admissible `c0`.
///
/// `c0` is the first value of `2^{-8}, 2^{-7}, …, 4` for which the tower
/// suite shows `|F^n| ≤ ¼|F^{n−1}|` with some `F¹` non-empty.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<Calibration> {
    cfg.validate()?;
    let observed_r = weak11_samples(cfg)?.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let observed_pointwise = pointwise_ratios(cfg, 20)?;
    let mut trials = Vec::new();
    let mut c0 = None;
    for e in -8..=2 {
        let c = f64::from(e).exp2();
        let (_, d) = f_level_decay(cfg, c)?;
        trials.push((c, d.worst_ratio, d.nonempty));
        if d.worst_ratio <= 0.25 && d.nonempty > 0 {
            c0 = Some(c);
            break;
        }
    }
    let c0 = c0.ok_or_else(|| Error::Config("no overlap constant on the grid gives the required decay".into()))?;
    let constants = Constants { r_max: MARGIN * observed_r, pointwise_c: MARGIN * observed_pointwise, c0 };
    let mut provenance = vec![
        format!(
            "calibrated with seed {} mesh {} kernel {} levels [{}, {}]",
            cfg.seed, cfg.mesh, cfg.kernel, cfg.k_min, cfg.k_max
        ),
        format!("r_max = {MARGIN} x observed sup weak ratio {observed_r:.6e}"),
        format!("pointwise_c = {MARGIN} x observed max control ratio {observed_pointwise:.6e} over 20 inputs"),
    ];
    for (c, r, n) in &trials {
        provenance.push(format!("c0 candidate {c}: worst F ratio {r:.4}, non-empty F1 on {n} towers"));
    }
    Ok(Calibration { constants, observed_r, observed_pointwise, c0_trials: trials, provenance })
}
