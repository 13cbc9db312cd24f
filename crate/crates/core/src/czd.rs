//! Stopping-time Calderón–Zygmund decomposition on the standard dyadic grid.
//!
//! Starting from root cubes of a fixed level, every cube whose `|f|`-average
//! exceeds `α` is selected and not refined further; the others are split into
//! their four children down to single lattice cells. On a selected cube `Q` the
//! bad part is `b_Q = (f − mean_Q f)·χ_Q` and the good part is `mean_Q f`.

use std::fmt::Write as _;

use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Rect};

#[derive(Clone, Debug)]
pub struct BadCube {
    pub cube: DyadicCube,
    /// `⟨|f|⟩_Q`.
    pub avg: f64,
    /// Signed mean of `f` on `Q`.
    pub mean: f64,
    pub bq: GridFunction,
}

#[derive(Clone, Debug)]
pub struct CZDecomposition {
    pub alpha: f64,
    pub root_level: i32,
    pub good: GridFunction,
    pub bad: Vec<BadCube>,
}

impl CZDecomposition {
    pub fn mesh(&self) -> u32 {
        self.good.mesh()
    }

    /// `Σ_Q b_Q`.
    pub fn bad_part(&self) -> GridFunction {
        let mut b = GridFunction::zeros(self.mesh(), Rect::EMPTY);
        for q in &self.bad {
            b.add_assign(&q.bq).expect("same mesh");
        }
        b
    }

    /// `b_s = Σ_{l(Q) = 2^level} b_Q`.
    pub fn bad_at_level(&self, level: i32) -> GridFunction {
        let mut b = GridFunction::zeros(self.mesh(), Rect::EMPTY);
        for q in self.bad.iter().filter(|q| q.cube.level == level) {
            b.add_assign(&q.bq).expect("same mesh");
        }
        b
    }

    /// Measure of `E = ∪Q`.
    pub fn exceptional_measure(&self) -> f64 {
        self.bad.iter().map(|q| q.cube.measure()).sum()
    }

    /// Bad cubes as CSV with header `k,m1,m2,avg,bq_l1`.
    pub fn bad_cubes_csv(&self) -> String {
        let mut s = String::from("k,m1,m2,avg,bq_l1\n");
        for q in &self.bad {
            let _ = writeln!(
                s,
                "{},{},{},{:e},{:e}",
                q.cube.level,
                q.cube.index.0,
                q.cube.index.1,
                q.avg,
                q.bq.l1_norm()
            );
        }
        s
    }
}

/// Sums of `f` and `|f|` over the cells of `rect`.
fn cube_sums(f: &GridFunction, rect: &Rect) -> (f64, f64) {
    let r = f.rect().intersect(rect);
    let (mut s, mut a) = (0.0, 0.0);
    for y in r.y0..r.y1 {
        for x in r.x0..r.x1 {
            let v = f.get(x, y);
            s += v;
            a += v.abs();
        }
    }
    (s, a)
}

/// Standard root cubes of `level` covering the support of `f`.
fn root_cubes(f: &GridFunction, level: i32) -> Vec<DyadicCube> {
    let supp = f.support();
    if supp.is_empty() {
        return Vec::new();
    }
    let m = f.mesh();
    let lo = DyadicCube::containing_point(Default::default(), level, m, supp.x0, supp.y0);
    let hi = DyadicCube::containing_point(Default::default(), level, m, supp.x1 - 1, supp.y1 - 1);
    let mut out = Vec::new();
    for j in lo.index.1..=hi.index.1 {
        for i in lo.index.0..=hi.index.0 {
            out.push(DyadicCube::standard(level, i, j));
        }
    }
    out
}

/// Smallest root level (at least the cell level) whose root cubes all have
/// `|f|`-average at most `α`.
pub fn default_root_level(f: &GridFunction, alpha: f64) -> Result<i32> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveLevel(alpha));
    }
    let m = f.mesh();
    let mut level = -(m as i32);
    loop {
        let ok = root_cubes(f, level).iter().all(|q| {
            let rect = q.lattice_rect(m).expect("standard cube on lattice");
            let (_, a) = cube_sums(f, &rect);
            a <= alpha * rect.area() as f64
        });
        if ok {
            return Ok(level);
        }
        level += 1;
        if level > 40 {
            return Err(Error::Config("no admissible root level below 2^40".into()));
        }
    }
}

/// Decomposes `f` at level `α` below root cubes of `root_level`.
pub fn cz_decompose(f: &GridFunction, alpha: f64, root_level: i32) -> Result<CZDecomposition> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveLevel(alpha));
    }
    let m = f.mesh();
    let finest = -(m as i32);
    if root_level < finest {
        return Err(Error::OffLattice(format!("root level {root_level}"), m));
    }
    let mut stack = Vec::new();
    for q in root_cubes(f, root_level) {
        let rect = q.lattice_rect(m)?;
        let (_, a) = cube_sums(f, &rect);
        let avg = a / rect.area() as f64;
        if avg > alpha {
            return Err(Error::RootTooFine { avg, alpha, cube: q.to_string() });
        }
        if a > 0.0 {
            stack.push(q);
        }
    }

    let mut selected = Vec::new();
    while let Some(q) = stack.pop() {
        if q.level == finest {
            continue;
        }
        for c in q.children() {
            let rect = c.lattice_rect(m)?;
            let (s, a) = cube_sums(f, &rect);
            if a == 0.0 {
                continue;
            }
            let n = rect.area() as f64;
            if a > alpha * n {
                selected.push((c, rect, a / n, s / n));
            } else {
                stack.push(c);
            }
        }
    }
    selected.sort_by(|a, b| a.0.cmp(&b.0));

    let mut hull = f.rect();
    for (_, rect, _, _) in &selected {
        hull = hull.union(rect);
    }
    let mut good = f.restrict(hull);
    let mut bad = Vec::with_capacity(selected.len());
    for (cube, rect, avg, mean) in selected {
        let mut bq = GridFunction::zeros(m, rect);
        for y in rect.y0..rect.y1 {
            for x in rect.x0..rect.x1 {
                bq.set(x, y, f.get(x, y) - mean);
                good.set(x, y, mean);
            }
        }
        bad.push(BadCube { cube, avg, mean, bq });
    }
    Ok(CZDecomposition { alpha, root_level, good, bad })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &'static str, value: f64, bound: f64) -> Self {
        Self { name, value, bound, pass: value <= bound }
    }

    pub fn above(name: &'static str, value: f64, bound: f64) -> Self {
        Self { name, value, bound, pass: value > bound }
    }
}

/// Measured properties of a decomposition, each paired with its contract.
#[derive(Clone, Debug)]
pub struct CzReport {
    pub checks: Vec<Check>,
}

impl CzReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Relative tolerance for the exact identities of the decomposition.
pub const CZ_EXACT_TOL: f64 = 1e-12;

/// Re-derives every decomposition property from `f` directly.
pub fn verify_cz(dec: &CZDecomposition, f: &GridFunction) -> CzReport {
    let m = f.mesh();
    let alpha = dec.alpha;
    let f_l1 = f.l1_norm();
    let per_f = |v: f64| if f_l1 > 0.0 { v / f_l1 } else { 0.0 };

    let (mut max_avg, mut min_avg) = (0.0f64, f64::INFINITY);
    let mut cancel = 0.0f64;
    let mut outside = 0.0f64;
    let mut bq_l1 = 0.0;
    for q in &dec.bad {
        let rect = q.cube.lattice_rect(m).expect("standard cube on lattice");
        let (_, a) = cube_sums(f, &rect);
        let avg = a / rect.area() as f64;
        max_avg = max_avg.max(avg / alpha);
        min_avg = min_avg.min(avg / alpha);
        let l1 = q.bq.l1_norm();
        bq_l1 += l1;
        let resid = q.bq.integral().abs();
        if l1 > 0.0 {
            cancel = cancel.max(resid / l1);
        } else if resid > 0.0 {
            cancel = f64::INFINITY;
        }
        for (x, y, v) in q.bq.nonzeros() {
            if !rect.contains_point(x, y) {
                outside = outside.max(v.abs());
            }
        }
    }
    if dec.bad.is_empty() {
        min_avg = f64::INFINITY;
    }

    let mut overlaps = 0.0;
    for (i, a) in dec.bad.iter().enumerate() {
        for b in &dec.bad[i + 1..] {
            if a.cube.intersects(&b.cube) {
                overlaps += 1.0;
            }
        }
    }

    let recon = dec.good.add(&dec.bad_part()).expect("same mesh");
    let scale = f.linf_norm().max(f64::MIN_POSITIVE);
    let recon_err = recon.max_abs_diff(f) / scale;

    let checks = vec![
        Check::at_most("h_linf_over_alpha", dec.good.linf_norm() / alpha, 4.0),
        Check::at_most("max_avg_over_alpha", max_avg, 4.0),
        Check::above("min_avg_over_alpha", min_avg, 1.0),
        Check::at_most("bq_l1_over_f_l1", per_f(bq_l1), 2.0),
        Check::at_most("e_measure_ratio", per_f(dec.exceptional_measure() * alpha), 1.0),
        Check::at_most("max_cancellation_residual", cancel, CZ_EXACT_TOL),
        Check::at_most("reconstruction_residual", recon_err, CZ_EXACT_TOL),
        Check::at_most("bq_outside_q", outside, 0.0),
        Check::at_most("overlapping_pairs", overlaps, 0.0),
        Check::at_most("h_l1_over_f_plus_b", per_f(dec.good.l1_norm()) - per_f(f_l1 + bq_l1), 1e-12),
    ];
    CzReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn indicator(mesh: u32, rect: Rect, v: f64) -> GridFunction {
        GridFunction::from_fn(mesh, rect, |_, _| v)
    }

    #[test]
    fn unit_indicator_below_level_has_no_bad_cubes() {
        let f = indicator(4, Rect::new(0, 0, 16, 16), 1.0);
        let dec = cz_decompose(&f, 2.0, 0).unwrap();
        assert!(dec.bad.is_empty());
        assert_eq!(dec.good.max_abs_diff(&f), 0.0);
        assert!(verify_cz(&dec, &f).passed());
    }

    #[test]
    fn hand_executed_stopping_time() {
        // f = 16·χ[0,¼)², α = 1 at mesh 2^-4
        let f = indicator(4, Rect::new(0, 0, 4, 4), 16.0);
        let dec = cz_decompose(&f, 1.0, 0).unwrap();
        assert_eq!(dec.bad.len(), 1);
        let q = &dec.bad[0];
        assert_eq!(q.cube, DyadicCube::standard(-1, 0, 0));
        assert_eq!(q.avg, 4.0);
        for y in 0..8 {
            for x in 0..8 {
                let expect = if x < 4 && y < 4 { 12.0 } else { -4.0 };
                assert_eq!(q.bq.get(x, y), expect);
                assert_eq!(dec.good.get(x, y), 4.0);
            }
        }
        assert!(verify_cz(&dec, &f).passed());
    }

    #[test]
    fn separated_spikes_give_one_cube_each() {
        let mesh = 6;
        let mut f = GridFunction::zeros(mesh, Rect::new(0, 0, 64, 64));
        let spikes = [(3, 5), (40, 9), (17, 50), (60, 60), (33, 33)];
        for &(x, y) in &spikes {
            f.set(x, y, 1.0);
        }
        let alpha = 1.0 / 64.0;
        let root = default_root_level(&f, alpha).unwrap();
        let dec = cz_decompose(&f, alpha, root).unwrap();
        assert_eq!(dec.bad.len(), spikes.len());
        for q in &dec.bad {
            // brute-force re-check of the selected average
            let rect = q.cube.lattice_rect(mesh).unwrap();
            let n: usize = spikes.iter().filter(|&&(x, y)| rect.contains_point(x, y)).count();
            assert_eq!(n, 1);
            let avg = 1.0 / rect.area() as f64;
            assert_eq!(avg, q.avg);
            assert!(avg > alpha && avg <= 4.0 * alpha);
        }
        assert!(dec.exceptional_measure() <= f.l1_norm() / alpha);
        assert!(verify_cz(&dec, &f).passed());
    }

    #[test]
    fn single_cell_cubes_can_be_selected() {
        let mut f = GridFunction::zeros(3, Rect::new(0, 0, 8, 8));
        f.set(2, 2, 100.0);
        let dec = cz_decompose(&f, 99.0, 1).unwrap();
        assert_eq!(dec.bad.len(), 1);
        assert_eq!(dec.bad[0].cube.level, -3);
        assert!(dec.bad[0].bq.is_zero());
        assert!(verify_cz(&dec, &f).passed());
    }

    #[test]
    fn corrupted_bad_function_fails_cancellation() {
        let f = indicator(4, Rect::new(0, 0, 4, 4), 16.0);
        let mut dec = cz_decompose(&f, 1.0, 0).unwrap();
        dec.bad[0].bq = dec.bad[0].bq.map(|v| v + 0.5);
        let rep = verify_cz(&dec, &f);
        assert!(!rep.get("max_cancellation_residual").unwrap().pass);
    }

    #[test]
    fn zero_function_is_vacuous() {
        let f = GridFunction::zeros(4, Rect::new(0, 0, 8, 8));
        let dec = cz_decompose(&f, 1.0, 0).unwrap();
        assert!(dec.bad.is_empty());
        assert!(verify_cz(&dec, &f).passed());
    }

    #[test]
    fn errors() {
        let f = indicator(4, Rect::new(0, 0, 4, 4), 16.0);
        assert!(matches!(cz_decompose(&f, 1.0, -2), Err(Error::RootTooFine { .. })));
        assert_eq!(cz_decompose(&f, 0.0, 0).unwrap_err(), Error::NonPositiveLevel(0.0));
        assert!(cz_decompose(&f, -1.0, 0).is_err());
    }

    #[test]
    fn csv_dump() {
        let f = indicator(4, Rect::new(0, 0, 4, 4), 16.0);
        let dec = cz_decompose(&f, 1.0, 0).unwrap();
        let csv = dec.bad_cubes_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,m1,m2,avg,bq_l1"));
        assert!(lines.next().unwrap().starts_with("-1,0,0,4e0,"));
    }

    fn sparse_f(mesh: u32, pts: &[(i64, i64, f64)]) -> GridFunction {
        let side = 1i64 << mesh;
        let mut f = GridFunction::zeros(mesh, Rect::new(0, 0, side, side));
        for &(x, y, v) in pts {
            f.add_at(x.rem_euclid(side), y.rem_euclid(side), v);
        }
        f
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn decomposition_contracts(
            pts in prop::collection::vec((0i64..32, 0i64..32, -50.0f64..50.0), 1..40),
            alpha in 0.5f64..20.0,
        ) {
            let f = sparse_f(5, &pts);
            let root = default_root_level(&f, alpha).unwrap();
            let dec = cz_decompose(&f, alpha, root).unwrap();
            let rep = verify_cz(&dec, &f);
            prop_assert!(rep.passed(), "{:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
            let bl1: f64 = dec.bad.iter().map(|q| q.bq.l1_norm()).sum();
            prop_assert!(dec.good.l1_norm() <= f.l1_norm() + bl1 + 1e-12);
            prop_assert!(bl1 <= 2.0 * f.l1_norm() + 1e-12);
        }

        #[test]
        fn doubling_alpha_never_selects_a_strict_ancestor(
            pts in prop::collection::vec((0i64..32, 0i64..32, 0.1f64..50.0), 1..30),
            alpha in 0.5f64..10.0,
        ) {
            let f = sparse_f(5, &pts);
            let root = default_root_level(&f, alpha).unwrap();
            let a = cz_decompose(&f, alpha, root).unwrap();
            let b = cz_decompose(&f, 2.0 * alpha, root).unwrap();
            for qb in &b.bad {
                for qa in &a.bad {
                    let strict = qb.cube != qa.cube && qb.cube.contains(&qa.cube).unwrap();
                    prop_assert!(!strict, "{} contains {}", qb.cube, qa.cube);
                }
            }
        }
    }
}
