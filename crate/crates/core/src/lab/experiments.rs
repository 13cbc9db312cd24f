use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt::Write as _;

use super::checks::{e_star_clearance, tk_map};
use super::config::ExperimentConfig;
use super::suite::{self, rng};
use super::{ExperimentReport, Row};
use crate::czd::cz_decompose;
use crate::dyadic::Shift;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Rect};
use crate::layering::{
    active_cubes, brute_force_sup, build_f_levels, check_layers, layer_betas, layers_csv, linearized_sup,
    partition_i_sharp, rm_check, select_layers,
};
use crate::operator::DyadicOperator;

/// One sample of the weak-type curve.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakSample {
    pub input: String,
    pub lambda: f64,
    pub measure: f64,
    pub ratio: f64,
}

/// `λ|{T_* f > λ}| / (𝒞_Ω‖f‖₁)` over the λ grid for every suite input.
pub fn weak11_samples(cfg: &ExperimentConfig) -> Result<Vec<WeakSample>> {
    cfg.validate()?;
    let om = cfg.omega()?;
    let c = om.c_omega();
    if c == 0.0 {
        return Err(Error::ZeroKernel);
    }
    let grid = cfg.lambda_grid(cfg.alpha * c);
    let mut op = DyadicOperator::new(om, cfg.mesh);
    let mut out = Vec::new();
    for inp in suite::weak_suite(cfg.mesh, cfg.seed)? {
        let t = op.maximal(&inp.f, cfg.k_min, cfg.k_max)?;
        let norm = inp.f.l1_norm();
        for &lambda in &grid {
            let measure = t.level_set_measure(lambda);
            out.push(WeakSample { input: inp.name.clone(), lambda, measure, ratio: lambda * measure / (c * norm) });
        }
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Weak-type ratio sweep; writes `weak11.csv`.
pub fn run_weak11(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let samples = weak11_samples(cfg)?;
    let mut rep = ExperimentReport::new("weak11");
    let mut csv = String::from("input,lambda,measure,ratio\n");
    for s in &samples {
        let _ = writeln!(csv, "{},{:e},{:e},{:e}", s.input, s.lambda, s.measure, s.ratio);
    }
    let sup = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    rep.rows.push(Row::at_most("weak11", "sup_ratio", sup, cfg.r_max));

    // the median ignores the λ where the level set is empty
    let med = median(samples.iter().map(|s| s.ratio).filter(|&r| r > 0.0).collect());
    let lambda_lo = samples.iter().map(|s| s.lambda).fold(f64::INFINITY, f64::min);
    let tail: Vec<f64> = samples.iter().filter(|s| s.lambda < 10.0 * lambda_lo).map(|s| s.ratio).collect();
    let tail_mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
    rep.rows.push(Row::above("weak11", "positive_samples", med, 0.0));
    rep.rows.push(Row::at_most("weak11", "small_lambda_mean_over_2_median", tail_mean, 2.0 * med));
    rep.notes.push(format!("sup ratio {sup:.4e}, median {med:.4e}, smallest-decade mean {tail_mean:.4e}"));
    rep.files.push(("weak11.csv".into(), csv));
    Ok(rep)
}

/// `L(s)` and its per-shift parts.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayPoint {
    pub s: u32,
    pub l: f64,
    pub per_shift: [f64; 4],
    /// Shifts on which the layering reproduced the family exactly.
    pub linearized: [bool; 4],
}

/// Base input of the decay experiment: bad cubes between level `1 − m` and `k_min − 4`.
pub fn decay_input(cfg: &ExperimentConfig) -> GridFunction {
    let q_lo = 1 - cfg.mesh as i32;
    let q_hi = (cfg.k_min - 4).max(q_lo);
    suite::multilevel_spikes(cfg.mesh, 80, q_lo, q_hi, cfg.alpha, &mut rng(cfg.seed, 1000))
}

/// `L(s) = Σ_w ‖sup_{K'} |Σ_{K ⊇ K'} T_K b_{k−s}|‖₂` for one `s`.
pub fn decay_point(cfg: &ExperimentConfig, op: &mut DyadicOperator, dec: &crate::czd::CZDecomposition, s: u32) -> Result<DecayPoint> {
    let mut p = DecayPoint { s, l: 0.0, per_shift: [0.0; 4], linearized: [false; 4] };
    for (i, w) in Shift::ALL.into_iter().enumerate() {
        let act = active_cubes(dec, s as i32, w, cfg.k_min, cfg.k_max)?;
        if act.is_empty() {
            p.linearized[i] = true;
            continue;
        }
        let tk = tk_map(op, dec, &act)?;
        let part: Vec<_> = act.iter().map(|a| a.cube).collect();
        let layers = select_layers(&part);
        let sup = if check_layers(&part, &layers).is_ok() {
            p.linearized[i] = true;
            let beta = layer_betas(&layers, &tk, cfg.mesh)?;
            linearized_sup(&part, &layers, &beta)?
        } else {
            brute_force_sup(&part, &tk, cfg.mesh)?
        };
        p.per_shift[i] = sup.l2_norm();
        p.l += p.per_shift[i];
    }
    Ok(p)
}

/// Decay of `L(s)` in `s`; writes `decay.csv`.
pub fn run_decay(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.s_list.len() < 3 {
        return Err(Error::Config(format!("the decay fit needs at least 3 values of s, got {}", cfg.s_list.len())));
    }
    let om = cfg.omega()?;
    let f = decay_input(cfg);
    let dec = cz_decompose(&f, cfg.alpha, 0)?;
    let mut op = DyadicOperator::new(om.clone(), cfg.mesh);
    let mut rep = ExperimentReport::new("decay");
    let (e_rows, s0) = e_star_clearance(cfg, &om)?;
    rep.extend(e_rows);
    let s_min = cfg.s_list.iter().copied().min().unwrap_or(0);
    rep.rows.push(Row::above("decay", "smallest_s_over_dilate_threshold", s_min as f64, s0 as f64 - 1.0));

    let mut points = Vec::new();
    for &s in &cfg.s_list {
        points.push(decay_point(cfg, &mut op, &dec, s)?);
    }
    let delta = fit_delta(&points);
    if points.iter().all(|p| p.l == 0.0) {
        rep.notes.push("L(s) vanishes identically; the kernel or input has no bad part in range".into());
    }
    for w in points.windows(2) {
        rep.rows.push(Row::below("decay", &format!("L_s{}_below_L_s{}", w[1].s, w[0].s), w[1].l, w[0].l));
    }
    rep.rows.push(Row::above("decay", "fitted_delta", delta.unwrap_or(f64::NAN), 0.0));
    rep.delta_hat = delta;
    let mut csv = String::from("s,L,delta_hat\n");
    for p in &points {
        let _ = writeln!(csv, "{},{:e},{:e}", p.s, p.l, delta.unwrap_or(f64::NAN));
    }
    rep.files.push(("decay.csv".into(), csv));
    Ok(rep)
}

/// Negative least-squares slope of `log₂(L²/s²)` against `s`, over `L > 0`.
pub fn fit_delta(points: &[DecayPoint]) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.l > 0.0)
        .map(|p| (p.s as f64, (p.l * p.l / (p.s as f64 * p.s as f64)).log2()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

/// Each link of the large-part bound `Σ_s Σ_K ‖T_{K,1} b‖₁ ≤ C‖f‖₁𝒞_Ω`.
pub fn large_part_chain(cfg: &ExperimentConfig, f: &GridFunction) -> Result<Vec<Row>> {
    let om = cfg.omega()?;
    let dec = cz_decompose(f, cfg.alpha, 0)?;
    let (mut lhs, mut young, mut levels) = (0.0, 0.0, 0.0);
    let mut kappa = 0.0f64;
    let mut per_s: Vec<(f64, f64, f64)> = Vec::new();
    for &s in &cfg.s_list {
        let (o1, _) = om.split(s, cfg.eta);
        let o1_l1 = o1.l1_norm();
        if o1_l1 == 0.0 {
            continue;
        }
        let mut op = DyadicOperator::new(o1, cfg.mesh);
        let mut kappa_s = 0.0f64;
        let mut b_levels = 0.0;
        for k in cfg.k_min..=cfg.k_max {
            kappa_s = kappa_s.max(op.kernel(k)?.l1_norm() / o1_l1);
            b_levels += dec.bad_at_level(k - s as i32).l1_norm();
        }
        for w in Shift::ALL {
            for a in active_cubes(&dec, s as i32, w, cfg.k_min, cfg.k_max)? {
                let mut b = GridFunction::zeros(cfg.mesh, Rect::EMPTY);
                for &q in &a.witnesses {
                    b.add_assign(&dec.bad[q].bq)?;
                }
                lhs += op.tk(&a.cube, &b)?.l1_norm();
                young += op.kernel(a.cube.level)?.l1_norm() * b.masked(&a.cube.half_rect(cfg.mesh)?).l1_norm();
            }
        }
        levels += kappa_s * o1_l1 * b_levels;
        kappa = kappa.max(kappa_s);
        per_s.push((kappa_s, o1_l1, b_levels));
    }
    let bq_total: f64 = dec.bad.iter().map(|q| q.bq.l1_norm()).sum();
    let o1_sum: f64 = per_s.iter().map(|p| p.1).sum();
    let norm_f = f.l1_norm();
    let c = om.c_omega();
    let constant = 2.0 * kappa / (cfg.eta * LN_2);
    let tol = |x: f64| 1e-12 * x.abs().max(1e-300);
    let chain = [
        ("young", lhs, young),
        ("disjoint_halves", young, levels),
        ("bad_mass", levels, 2.0 * kappa * norm_f * o1_sum),
        ("large_part_strength", 2.0 * kappa * norm_f * o1_sum, constant * norm_f * c),
    ];
    let mut rows: Vec<Row> = chain
        .iter()
        .map(|&(name, a, b)| Row::at_most("large_part", &format!("link_{name}"), a, b + tol(b)))
        .collect();
    rows.push(Row::at_most("large_part", "bad_parts_over_2f", bq_total, 2.0 * norm_f + tol(norm_f)));
    rows.push(Row::advisory("large_part", "explicit_constant", constant, 0.0));
    rows.push(Row::advisory("large_part", "left_side", lhs, constant * norm_f * c));
    Ok(rows)
}

/// Orthogonality across overlap levels on the tower suite; writes
/// `ortho.csv` and `layers.csv`.
pub fn run_orthogonality(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let om = cfg.omega()?;
    let s = cfg.tower_s as i32;
    let box_level = cfg.k_max.min(1);
    let depth = (box_level - cfg.k_min + 1).max(1) as usize;
    let mut op = DyadicOperator::new(om, cfg.mesh);
    let mut energy: BTreeMap<usize, f64> = BTreeMap::new();
    let (mut rm_worst, mut first_layers) = (0.0f64, None);
    for t in suite::tower_suite(cfg.mesh, cfg.tower_s, box_level, depth, cfg.alpha, cfg.seed, 8)? {
        let dec = cz_decompose(&t.f, cfg.alpha, box_level)?;
        let act = active_cubes(&dec, s, Shift::ZERO, cfg.k_min, cfg.k_max)?;
        let tk = tk_map(&mut op, &dec, &act)?;
        let f_levels = build_f_levels(&act, cfg.c0, s, cfg.mesh, 16)?;
        let parts = partition_i_sharp(&act, &f_levels, cfg.mesh)?;
        let mut all_layers = Vec::new();
        for (n, part) in parts.iter().enumerate() {
            if part.is_empty() {
                all_layers.push(Vec::new());
                continue;
            }
            let layers = select_layers(part);
            let beta = layer_betas(&layers, &tk, cfg.mesh)?;
            let rm = rm_check(&beta, 10, cfg.seed)?;
            rm_worst = rm_worst.max(rm.ratio);
            *energy.entry(n + 1).or_default() += rm.b * rm.b;
            all_layers.push(layers);
        }
        first_layers.get_or_insert(all_layers);
    }
    let mut rep = ExperimentReport::new("ortho");
    let mut csv = String::from("n,b_n,ratio\n");
    let mut prev: Option<f64> = None;
    let mut ratios = 0;
    for (&n, &e) in &energy {
        let b = e.sqrt();
        let ratio = prev.map_or(f64::NAN, |p| b / p);
        let _ = writeln!(csv, "{n},{b:e},{ratio:e}");
        if prev.is_some() && b > 0.0 {
            rep.rows.push(Row::at_most("ortho", &format!("b_ratio_n{n}"), ratio, 0.75));
            ratios += 1;
        }
        prev = Some(b);
    }
    rep.rows.push(Row::above("ortho", "compared_levels", ratios as f64, 0.0));
    rep.rows.push(Row::at_most("ortho", "rademacher_menshov_ratio", rm_worst, 1.0));
    rep.files.push(("ortho.csv".into(), csv));
    rep.files.push(("layers.csv".into(), layers_csv(&first_layers.unwrap_or_default())));
    Ok(rep)
}
