use std::collections::BTreeMap;
use std::f64::consts::{LN_2, TAU};

use rand::Rng;

use super::config::ExperimentConfig;
use super::suite::{self, rng};
use super::Row;
use crate::czd::{cz_decompose, default_root_level, verify_cz, CZDecomposition, Check};
use crate::dyadic::{cover_count, cubes_meeting, DyadicCube, Relation, Shift};
use crate::error::Result;
use crate::grid::{mesh_h, GridFunction, Rect};
use crate::kernel::{build_kernel, build_kernel_slice, phi};
use crate::layering::{
    active_cubes, brute_force_sup, build_f_levels, check_layers, layer_betas, layers_nested, linearized_sup,
    max_ancestors, overlap_threshold, packing_chain, partition_i_sharp, rm_check, select_layers, ActiveCube,
};
use crate::microlocal::{build_direction_net, complement_l1_ratio, spike_g_ratio};
use crate::operator::{convolve, m_omega, maximal_dyadic, maximal_truncated_direct, DyadicOperator};
use crate::sphere::{KernelSpec, SphereFunction};

fn random_fn(mesh: u32, rect: Rect, density: f64, rng: &mut impl Rng) -> GridFunction {
    let mut g = GridFunction::zeros(mesh, rect);
    for (x, y) in rect.points() {
        if rng.gen::<f64>() < density {
            g.set(x, y, rng.gen_range(-1.0..1.0));
        }
    }
    g
}

fn random_cube(rng: &mut impl Rng, level: i32, spread: i64) -> DyadicCube {
    let w = Shift::ALL[rng.gen_range(0..4)];
    DyadicCube::new(w, level, rng.gen_range(-spread..=spread), rng.gen_range(-spread..=spread))
}

/// Mean-zero, cancellation and split properties of Ω.
pub fn sphere_checks(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let om = cfg.omega()?;
    let l1 = om.l1_norm();
    let mut rows = Vec::new();
    let cancel = if l1 > 0.0 { om.integral().abs() / l1 } else { 0.0 };
    rows.push(if cfg.project {
        Row::at_most("sphere", "cancellation_residual", cancel, 1e-12)
    } else {
        Row::advisory("sphere", "cancellation_residual", cancel, 1e-12)
    });
    rows.push(Row::holds("sphere", "c_omega_dominates_l1", om.c_omega() >= l1));
    let (mut norm_gap, mut sup_ratio) = (0.0f64, 0.0f64);
    for &s in &cfg.s_list {
        let (o1, o2) = om.split(s, cfg.eta);
        norm_gap = norm_gap.max((o1.l1_norm() + o2.l1_norm() - l1).abs());
        let t = om.split_threshold(s, cfg.eta);
        if t > 0.0 {
            sup_ratio = sup_ratio.max(o2.linf_norm() / t);
        }
        let exact = o1.values().iter().zip(o2.values()).zip(om.values()).all(|((a, b), c)| a + b == *c);
        rows.push(Row::holds("sphere", &format!("split_sum_exact_s{s}"), exact));
    }
    rows.push(Row::at_most("sphere", "split_l1_gap", norm_gap, 1e-12 * l1.max(1.0)));
    rows.push(Row::below("sphere", "split_small_part_over_threshold", sup_ratio, 1.0));
    Ok(rows)
}

/// `max |Σ_j φ(2^{-j}x) − 1|` over 10⁴ points with `2^{-6} < |x| < 4`.
pub fn partition_of_unity(seed: u64) -> Vec<Row> {
    let mut r = rng(seed, 1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let rho = r.gen_range(-6.0f64..2.0).exp2();
        let a = r.gen_range(0.0..TAU);
        let (x, y) = (rho * a.cos(), rho * a.sin());
        let s: f64 = (-12..=12).map(|j| {
            let sc = (-(j as f64)).exp2();
            phi(sc * x, sc * y)
        }).sum();
        worst = worst.max((s - 1.0).abs());
    }
    vec![Row::at_most("kernel", "partition_of_unity", worst, 1e-12)]
}

/// `Σ_w Σ_K χ_{½K} ≡ 1` exhaustively on a patch at three levels.
pub fn cover_identity(mesh: u32) -> Vec<Row> {
    let mut bad = 0u64;
    let mut total = 0u64;
    for level in [2 - mesh as i32, 4 - mesh as i32, 6 - mesh as i32] {
        let side = 3i64 << (level + mesh as i32);
        for y in -side..side {
            for x in -side..side {
                total += 1;
                if cover_count(x, y, level, mesh) != 1 {
                    bad += 1;
                }
            }
        }
    }
    vec![
        Row::at_most("dyadic", "cover_identity_failures", bad as f64, 0.0),
        Row::above("dyadic", "cover_identity_points", total as f64, 0.0),
    ]
}

/// Nested-or-disjoint on the standard grid for random nearby pairs.
pub fn dichotomy(seed: u64) -> Vec<Row> {
    let mut r = rng(seed, 2);
    let mut bad = 0u32;
    for _ in 0..10_000 {
        let a = DyadicCube::standard(r.gen_range(-6..=0), r.gen_range(-4..4), r.gen_range(-4..4));
        let b = DyadicCube::standard(r.gen_range(-6..=0), r.gen_range(-16..16), r.gen_range(-16..16));
        if a.relation(&b) == Relation::Overlap {
            bad += 1;
        }
    }
    vec![Row::at_most("dyadic", "dichotomy_violations_w0", bad as f64, 0.0)]
}

/// Annulus support, L¹ mass and cancellation transfer of the kernel pieces.
pub fn kernel_checks(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let om = cfg.omega()?;
    let l1 = om.l1_norm();
    let mut rows = Vec::new();
    let (mut outside, mut mass_err, mut transfer) = (0u64, 0.0f64, 0.0f64);
    for j in cfg.k_min..=(cfg.k_min + 2).min(cfg.k_max) {
        let k = build_kernel(j, &om, cfg.mesh)?;
        let h = k.h();
        let (lo, hi) = ((j as f64 - 4.0).exp2(), (j as f64 - 2.0).exp2());
        for (x, y, _) in k.nonzeros() {
            let r = (x as f64 * h).hypot(y as f64 * h);
            if !(r > lo && r < hi) {
                outside += 1;
            }
        }
        if l1 > 0.0 {
            mass_err = mass_err.max((k.l1_norm() / (l1 * LN_2) - 1.0).abs());
            transfer = transfer.max(k.integral().abs() / (h * (-j as f64).exp2() * l1));
        }
    }
    rows.push(Row::at_most("kernel", "samples_outside_annulus", outside as f64, 0.0));
    rows.push(Row::at_most("kernel", "l1_vs_frullani_rel_err", mass_err, 0.05));
    let transfer_row = if cfg.project {
        Row::below("kernel", "cancellation_transfer_constant", transfer, 4.0)
    } else {
        Row::advisory("kernel", "cancellation_transfer_constant", transfer, 4.0)
    };
    rows.push(transfer_row);
    Ok(rows)
}

fn cz_inputs(cfg: &ExperimentConfig) -> Result<Vec<(GridFunction, f64)>> {
    let m = cfg.mesh.min(8);
    let mut out = Vec::new();
    for i in 0..20u64 {
        let mut r = rng(cfg.seed, 500 + i);
        let f = match i % 4 {
            0 => suite::spike_train(m, 1 + (i as usize % 7) * 3, &mut r),
            1 => suite::blob_bad_part(m, &mut r)?,
            2 => random_fn(m, suite::unit_box(m), 0.2, &mut r).map(|v| v.powi(3)),
            _ => suite::multilevel_spikes(m, 30, 2 - m as i32, -2, 1.0, &mut r),
        };
        let alpha = f.l1_norm() * r.gen_range(1.5..40.0);
        out.push((f, alpha));
    }
    Ok(out)
}

fn worst_checks(all: &[Vec<Check>], suite: &str) -> Vec<Row> {
    let mut by: BTreeMap<&str, Check> = BTreeMap::new();
    for checks in all {
        for c in checks {
            let e = by.entry(c.name).or_insert_with(|| c.clone());
            if !e.pass {
                continue;
            }
            let above = c.pass && c.value > c.bound;
            let worse = !c.pass || if above { c.value < e.value } else { c.value > e.value };
            if worse {
                *e = c.clone();
            }
        }
    }
    by.into_values()
        .map(|c| {
            let mut r = Row::at_most(suite, c.name, c.value, c.bound);
            r.status = if c.pass { super::Status::Pass } else { super::Status::Fail };
            r
        })
        .collect()
}

/// Decomposition properties on 20 seeded inputs, worst case per property.
pub fn cz_properties(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let mut all = Vec::new();
    for (f, alpha) in cz_inputs(cfg)? {
        let dec = cz_decompose(&f, alpha, 0)?;
        all.push(verify_cz(&dec, &f).checks);
    }
    Ok(worst_checks(&all, "czd"))
}

fn direct_convolution(k: &GridFunction, g: &GridFunction) -> GridFunction {
    let rect = k.rect().minkowski(&g.rect());
    let mut out = GridFunction::zeros(g.mesh(), rect);
    for (x, y) in rect.points() {
        let mut s = 0.0;
        for (gx, gy, gv) in g.iter() {
            s += k.get(x - gx, y - gy) * gv;
        }
        out.set(x, y, s * g.cell_area());
    }
    out
}

/// Fast convolution against the O(n⁴) sum on 32² inputs.
pub fn convolution_oracle(seed: u64) -> Result<Vec<Row>> {
    let mut r = rng(seed, 3);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let a = random_fn(5, Rect::square(r.gen_range(-40..0), r.gen_range(-40..0), 32), 1.0, &mut r);
        let b = random_fn(5, Rect::square(r.gen_range(0..40), r.gen_range(-20..20), 32), 1.0, &mut r);
        let fast = convolve(&a, &b)?;
        let slow = direct_convolution(&a, &b);
        worst = worst.max(fast.max_abs_diff(&slow) / slow.linf_norm());
    }
    Ok(vec![Row::at_most("operator", "convolution_vs_direct_rel", worst, 1e-10)])
}

fn test_levels(cfg: &ExperimentConfig) -> Vec<i32> {
    (cfg.k_min..=cfg.k_max).take(3).collect()
}

/// `T_K g` vanishes outside `K` for 100 random pairs per level.
pub fn support_exactness(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let om = cfg.omega()?;
    let mut op = DyadicOperator::new(om, cfg.mesh);
    let mut r = rng(cfg.seed, 4);
    let mut leaks = 0u64;
    let mut nonzero_outputs = 0u64;
    for level in test_levels(cfg) {
        for _ in 0..100 {
            let k = random_cube(&mut r, level, 2);
            let kr = k.lattice_rect(cfg.mesh)?;
            let (cx, cy) = (r.gen_range(kr.x0 - 8..kr.x1 + 8), r.gen_range(kr.y0 - 8..kr.y1 + 8));
            let g = random_fn(cfg.mesh, Rect::new(cx - 12, cy - 12, cx + 12, cy + 12), 0.5, &mut r);
            let out = op.tk(&k, &g)?;
            if !out.is_zero() {
                nonzero_outputs += 1;
            }
            leaks += out.nonzeros().filter(|&(x, y, _)| !kr.contains_point(x, y)).count() as u64;
        }
    }
    Ok(vec![
        Row::at_most("operator", "tk_samples_outside_k", leaks as f64, 0.0),
        Row::above("operator", "tk_nonzero_outputs", nonzero_outputs as f64, 0.0),
    ])
}

/// `T_k g = Σ_w Σ_K T_K g` at three levels.
pub fn identity_check(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let om = cfg.omega()?;
    let mut op = DyadicOperator::new(om, cfg.mesh);
    let mut r = rng(cfg.seed, 5);
    let mut worst = 0.0f64;
    for level in test_levels(cfg) {
        let g = random_fn(cfg.mesh, Rect::new(-30, -20, 34, 44), 1.0, &mut r);
        let direct = op.tj(level, &g)?;
        let mut sum = GridFunction::zeros(cfg.mesh, Rect::EMPTY);
        for w in Shift::ALL {
            for k in cubes_meeting(&g.support(), level, w, cfg.mesh) {
                sum.add_assign(&op.tk(&k, &g)?)?;
            }
        }
        let scale = direct.linf_norm();
        if scale > 0.0 {
            worst = worst.max(direct.max_abs_diff(&sum) / scale);
        }
    }
    Ok(vec![Row::at_most("operator", "shift_decomposition_identity_rel", worst, 1e-10)])
}

/// Largest ratio of the two-sided control between the raw and smoothed
/// maximal operators over `count` seeded inputs.
pub fn pointwise_ratios(cfg: &ExperimentConfig, count: u64) -> Result<f64> {
    let om = cfg.kernel.build(cfg.arc_count.min(256), cfg.project)?;
    let mesh = 7;
    let (k_min, k_max) = (0, 2);
    let grid: Vec<f64> = (k_min..=k_max).map(|l| (l as f64 - 3.0).exp2()).collect();
    let mut worst = 0.0f64;
    for i in 0..count {
        let mut r = rng(cfg.seed, 600 + i);
        let f = random_fn(mesh, Rect::square(r.gen_range(-8..8), r.gen_range(-8..8), 24), r.gen_range(0.05..0.5), &mut r);
        let eval = f.rect().dilate(8);
        let direct = maximal_truncated_direct(&om, &f, &grid, eval)?;
        let dyadic = maximal_dyadic(&om, &f, k_min, k_max)?;
        let m = m_omega(&om, &f, &grid)?;
        for (x, y) in eval.points() {
            let (a, b, c) = (direct.get(x, y), dyadic.get(x, y), m.get(x, y));
            if c + b > 0.0 {
                worst = worst.max(a / (c + b));
            }
            if c + a > 0.0 {
                worst = worst.max(b / (c + a));
            }
        }
    }
    Ok(worst)
}

/// Two-sided pointwise control with the frozen constant.
pub fn pointwise_control(cfg: &ExperimentConfig) -> Result<(Vec<Row>, f64)> {
    let worst = pointwise_ratios(cfg, 5)?;
    Ok((vec![Row::at_most("operator", "pointwise_control_ratio", worst, cfg.pointwise_c)], worst))
}

/// Net invariants and exact slice partition for `s ∈ {4, 8, 12}`.
pub fn direction_nets(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let om = cfg.omega()?;
    let mut rows = Vec::new();
    for s in [4u32, 8, 12] {
        let net = build_direction_net(s, cfg.gamma, cfg.arc_count)?;
        let rep = net.verify();
        let tag = |n: &str| format!("{n}_s{s}");
        if rep.count > 1 {
            rows.push(Row::at_most("microlocal", &tag("separation_deficit"), rep.separation_bound - rep.min_separation, 0.0));
        }
        rows.push(Row::at_most("microlocal", &tag("cover_distance"), rep.max_cover_distance, rep.separation_bound));
        rows.push(Row::at_most("microlocal", &tag("sector_diameter"), rep.max_sector_diameter, rep.diameter_bound));
        rows.push(Row::holds("microlocal", &tag("centers_in_own_sector"), rep.centers_in_own_sector));
        let mut cover = vec![0u32; net.arc_count()];
        for v in 0..net.len() {
            for (c, m) in cover.iter_mut().zip(net.sector_mask(v)) {
                *c += m as u32;
            }
        }
        rows.push(Row::holds("microlocal", &tag("sectors_partition_arcs"), cover.iter().all(|&c| c == 1)));
        let j = cfg.k_min;
        let full = build_kernel(j, &om, cfg.mesh)?;
        let mut sum = GridFunction::zeros(cfg.mesh, Rect::EMPTY);
        for v in 0..net.len() {
            sum.add_assign(&build_kernel_slice(j, &om, cfg.mesh, &net.sector_mask(v))?)?;
        }
        rows.push(Row::at_most("microlocal", &tag("slice_sum_residual"), full.max_abs_diff(&sum), 0.0));
    }
    Ok(rows)
}

/// A dipole `+1/−1` on the two halves of the standard cube of `level` at the origin.
fn dipole(level: i32, mesh: u32) -> GridFunction {
    let side = 1i64 << (level + mesh as i32);
    let mut b = GridFunction::zeros(mesh, Rect::square(0, 0, side));
    for (x, y) in b.rect().points() {
        b.set(x, y, if 2 * x < side { 1.0 } else { -1.0 });
    }
    b
}

/// Frequency-localization trends; the complement ratio is advisory.
pub fn microlocal_trends(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let mesh = cfg.mesh.min(8);
    let om = KernelSpec::Cos.build(cfg.arc_count, true)?;
    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    let mut prev_c: Option<f64> = None;
    for s in [4u32, 6, 8, 10] {
        let net = build_direction_net(s, cfg.gamma, cfg.arc_count)?;
        let g = spike_g_ratio(&net, 0, 1, &om, mesh)?;
        if let Some(p) = prev {
            rows.push(Row::below("microlocal", &format!("spike_g_ratio_s{s}_vs_s{}", s - 2), g, p));
        }
        prev = Some(g);
        // the dipole needs at least two cells across
        let j = 9 - mesh as i32;
        if j - (s as i32) < 1 - mesh as i32 {
            continue;
        }
        let c = complement_l1_ratio(&net, j, &om, &dipole(j - s as i32, mesh), 2.0)?;
        if let Some(p) = prev_c {
            rows.push(Row::advisory("microlocal", &format!("complement_l1_ratio_s{s}_vs_s{}", s - 2), c, p));
        }
        prev_c = Some(c);
    }
    Ok(rows)
}

fn packing_instances(cfg: &ExperimentConfig) -> Result<Vec<(GridFunction, CZDecomposition)>> {
    let m = cfg.mesh.min(8);
    let mut out = Vec::new();
    for i in 0..3u64 {
        let mut r = rng(cfg.seed, 700 + i);
        let f = suite::multilevel_spikes(m, 60, 2 - m as i32, -2, cfg.alpha, &mut r);
        let dec = cz_decompose(&f, cfg.alpha, default_root_level(&f, cfg.alpha)?.max(0))?;
        out.push((f, dec));
    }
    let towers = suite::tower_suite(m, cfg.tower_s, 0, 8, cfg.alpha, cfg.seed, 2)?;
    for t in towers {
        let dec = cz_decompose(&t.f, cfg.alpha, 0)?;
        out.push((t.f, dec));
    }
    Ok(out)
}

/// Every link of the packing chain on 50 random boxes per instance and shift,
/// plus the global packing bound.
pub fn packing_chain_check(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let s = cfg.tower_s as i32;
    let mut r = rng(cfg.seed, 6);
    let (mut worst_link, mut area_ratio, mut global) = (0.0f64, 0.0f64, 0.0f64);
    let (mut disjoint, mut holds, mut populated) = (true, true, 0u64);
    for (f, dec) in packing_instances(cfg)? {
        let mesh = f.mesh();
        let side = 1i64 << mesh;
        for w in Shift::ALL {
            let act = active_cubes(&dec, s, w, -(mesh as i32), 4)?;
            let total: f64 = act.iter().map(|a| a.cube.measure()).sum();
            let bound = (2.0 * s as f64).exp2() / dec.alpha * f.l1_norm();
            if bound > 0.0 {
                global = global.max(total / bound);
            }
            for _ in 0..50 {
                let (wd, ht) = (r.gen_range(side / 8..=2 * side), r.gen_range(side / 8..=2 * side));
                let a = Rect::new(0, 0, wd, ht).translate(r.gen_range(-side / 2..side), r.gen_range(-side / 2..side));
                let c = packing_chain(&dec, &f, &act, s, &a)?;
                if c.cubes > 0.0 {
                    populated += 1;
                }
                let links = [
                    (c.cubes - c.witnesses).abs(),
                    c.witnesses - c.witness_mass,
                    c.witness_mass - c.box_mass,
                    c.box_mass - c.box_cubes,
                    c.box_cubes - c.area,
                ];
                for l in links {
                    worst_link = worst_link.max(l / c.area);
                }
                area_ratio = area_ratio.max(c.cubes / c.area);
                disjoint &= c.witnesses_disjoint;
                holds &= c.holds();
            }
        }
    }
    Ok(vec![
        Row::at_most("layering", "packing_worst_link_excess", worst_link, 1e-12),
        Row::holds("layering", "packing_chain_holds", holds),
        Row::holds("layering", "packing_witnesses_disjoint", disjoint),
        Row::at_most("layering", "packing_cubes_over_4_2ds_area", area_ratio, 1.0),
        Row::at_most("layering", "packing_global_ratio", global, 1.0),
        Row::above("layering", "packing_populated_boxes", populated as f64, 0.0),
    ])
}

/// Decomposition and active cubes of one tower, every shift.
fn tower_actives(f: &GridFunction, cfg: &ExperimentConfig, box_level: i32) -> Result<Vec<(Shift, Vec<ActiveCube>)>> {
    let dec = cz_decompose(f, cfg.alpha, box_level)?;
    Shift::ALL
        .iter()
        .map(|&w| Ok((w, active_cubes(&dec, cfg.tower_s as i32, w, -(f.mesh() as i32), 4)?)))
        .collect()
}

/// Outcome of the `F`-set decay experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct FDecay {
    /// Largest `|F^n|/|F^{n−1}|`.
    pub worst_ratio: f64,
    /// Instances with a non-empty `F^1` (some shift).
    pub nonempty: usize,
    pub max_depth: usize,
    /// `f_levels.csv` of the first tower on the standard grid.
    pub csv: String,
}

/// `|F^n| ≤ ¼|F^{n−1}|` on the deep tower suite with overlap constant `c0`.
pub fn f_level_decay(cfg: &ExperimentConfig, c0: f64) -> Result<(Vec<Row>, FDecay)> {
    let s = cfg.tower_s;
    let depth = (cfg.mesh as i32 - s as i32 + 1).max(1) as usize;
    let towers = suite::tower_suite(cfg.mesh, s, 1, depth, cfg.alpha, cfg.seed, 8)?;
    let mut out = FDecay { worst_ratio: 0.0, nonempty: 0, max_depth: 0, csv: String::new() };
    let (mut ancestors_ok, mut covers) = (true, true);
    for (i, t) in towers.iter().enumerate() {
        let mut any = false;
        for (w, act) in tower_actives(&t.f, cfg, 1)? {
            let f_levels = build_f_levels(&act, c0, s as i32, cfg.mesh, 16)?;
            if i == 0 && w.is_standard() {
                out.csv = crate::layering::f_levels_csv(&f_levels);
            }
            any |= !f_levels.is_empty();
            out.max_depth = out.max_depth.max(f_levels.len());
            for pair in f_levels.windows(2) {
                out.worst_ratio = out.worst_ratio.max(pair[1].measure() / pair[0].measure());
            }
            let parts = partition_i_sharp(&act, &f_levels, cfg.mesh)?;
            covers &= parts.iter().map(Vec::len).sum::<usize>() == act.len();
            for p in &parts {
                ancestors_ok &= max_ancestors(p) as f64 <= overlap_threshold(c0, s as i32);
            }
        }
        out.nonempty += any as usize;
    }
    let rows = vec![
        Row::at_most("layering", "f_level_decay_ratio", out.worst_ratio, 0.25),
        Row::above("layering", "f_level_nonempty_instances", out.nonempty as f64, 0.0),
        Row::holds("layering", "partition_covers_active", covers),
        Row::holds("layering", "ancestors_within_threshold", ancestors_ok),
    ];
    Ok((rows, out))
}

/// `T_K b_{k−s}` for every active cube, `b` the witnesses' sum.
pub fn tk_map(
    op: &mut DyadicOperator,
    dec: &CZDecomposition,
    active: &[ActiveCube],
) -> Result<BTreeMap<DyadicCube, GridFunction>> {
    let mesh = dec.mesh();
    let mut map = BTreeMap::new();
    for a in active {
        let mut b = GridFunction::zeros(mesh, Rect::EMPTY);
        for &q in &a.witnesses {
            b.add_assign(&dec.bad[q].bq)?;
        }
        map.insert(a.cube, op.tk(&a.cube, &b)?);
    }
    Ok(map)
}

/// Linearized supremum against the brute-force two-parameter supremum.
pub fn linearization(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let om = cfg.omega()?;
    let mesh = cfg.mesh;
    let mut op = DyadicOperator::new(om, mesh);
    let (mut worst, mut nested, mut max_layers, mut instances) = (0.0f64, true, 0usize, 0u32);
    let k_top = cfg.k_max.min(1);
    let tower_depth = (k_top - cfg.k_min + 1).max(1) as usize;
    let mut cases: Vec<(GridFunction, i32, i32, i32)> = Vec::new();
    for t in suite::tower_suite(mesh, cfg.tower_s, k_top, tower_depth, cfg.alpha, cfg.seed ^ 0x5eed, 10)? {
        cases.push((t.f, k_top, cfg.tower_s as i32, cfg.k_min));
    }
    for i in 0..10u64 {
        let s = 4;
        let k_hi = cfg.k_max.min(0);
        let f = suite::multilevel_spikes(mesh, 25, cfg.k_min - s, k_hi - s, cfg.alpha, &mut rng(cfg.seed, 800 + i));
        let root = default_root_level(&f, cfg.alpha)?.max(0);
        cases.push((f, root, s, cfg.k_min));
    }
    for (f, root, s, k_lo) in cases {
        let dec = cz_decompose(&f, cfg.alpha, root)?;
        let act = active_cubes(&dec, s, Shift::ZERO, k_lo, cfg.k_max)?;
        let tk = tk_map(&mut op, &dec, &act)?;
        let f_levels = build_f_levels(&act, cfg.c0, s, mesh, 16)?;
        let mut parts = partition_i_sharp(&act, &f_levels, mesh)?;
        parts.push(act.iter().map(|a| a.cube).collect());
        for part in parts.iter().filter(|p| !p.is_empty()) {
            let layers = select_layers(part);
            check_layers(part, &layers)?;
            nested &= layers_nested(&layers);
            max_layers = max_layers.max(layers.len());
            let beta = layer_betas(&layers, &tk, mesh)?;
            let lin = linearized_sup(part, &layers, &beta)?;
            let brute = brute_force_sup(part, &tk, mesh)?;
            worst = worst.max(lin.max_abs_diff(&brute));
        }
        instances += 1;
    }
    Ok(vec![
        Row::at_most("layering", "linearization_residual", worst, 0.0),
        Row::holds("layering", "layers_nested", nested),
        Row::above("layering", "linearization_max_layers", max_layers as f64, 1.0),
        Row::at_most("layering", "linearization_instances", 20.0, instances as f64),
    ])
}

/// Exhaustive-sign Rademacher–Menshov ratio on 20 seeded families.
pub fn rademacher_menshov(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let mut worst = 0.0f64;
    let mut exhaustive = true;
    for i in 0..20u64 {
        let mut r = rng(cfg.seed, 900 + i);
        let n = 2 + (i as usize % 9);
        let common = random_fn(4, Rect::square(0, 0, 12), 0.5, &mut r);
        let fs: Vec<GridFunction> = (0..n)
            .map(|_| {
                let own = random_fn(4, Rect::square(r.gen_range(-4..4), r.gen_range(-4..4), 12), 0.3, &mut r);
                own.add(&common.scaled(r.gen_range(-1.0..1.0))).expect("same mesh")
            })
            .collect();
        let rep = rm_check(&fs, 10, cfg.seed)?;
        exhaustive &= rep.exhaustive;
        worst = worst.max(rep.ratio);
    }
    Ok(vec![
        Row::at_most("layering", "rademacher_menshov_ratio", worst, 1.0),
        Row::holds("layering", "rademacher_menshov_exhaustive", exhaustive),
    ])
}

/// `T_k b_{k−s}` vanishes off `E*` for every `s` the dilate clears.
pub fn e_star_clearance(cfg: &ExperimentConfig, om: &SphereFunction) -> Result<(Vec<Row>, u32)> {
    let mesh = cfg.mesh;
    let q_lo = (cfg.k_min - 3).max(1 - mesh as i32);
    let f = suite::multilevel_spikes(mesh, 20, q_lo, (cfg.k_min - 1).max(q_lo), cfg.alpha, &mut rng(cfg.seed, 1100));
    let dec = cz_decompose(&f, cfg.alpha, default_root_level(&f, cfg.alpha)?.max(0))?;
    let h = mesh_h(mesh);
    // smallest s with 1 + 2^{s−1} > dilate
    let s0 = (1u32..).find(|&s| 1.0 + ((s - 1) as f64).exp2() > cfg.dilate).unwrap_or(1);
    let mut op = DyadicOperator::new(om.clone(), mesh);
    let (mut worst, mut inspected) = (0.0f64, 0u64);
    for s in 1..s0 as i32 {
        for k in cfg.k_min..=cfg.k_max {
            let b = dec.bad_at_level(k - s);
            if b.is_zero() {
                continue;
            }
            let out = op.tj(k, &b)?;
            let scale = out.linf_norm();
            let boxes: Vec<(f64, f64, f64)> = dec
                .bad
                .iter()
                .map(|q| {
                    let (cx, cy) = q.cube.center();
                    (cx, cy, cfg.dilate * q.cube.side() / 2.0)
                })
                .collect();
            for (x, y, v) in out.nonzeros() {
                inspected += 1;
                let (px, py) = (x as f64 * h, y as f64 * h);
                let inside = boxes.iter().any(|&(cx, cy, r)| (px - cx).abs() <= r && (py - cy).abs() <= r);
                if !inside && scale > 0.0 {
                    worst = worst.max(v.abs() / scale);
                }
            }
        }
    }
    let rows = vec![
        Row::at_most("decay", "t_k_b_outside_e_star_rel", worst, 1e-12),
        Row::above("decay", "e_star_samples_inspected", inspected as f64, 0.0),
    ];
    Ok((rows, s0))
}
