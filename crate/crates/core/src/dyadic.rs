//! Shifted dyadic systems `𝔇^w`, `w ∈ {0, ½}²`, in exact integer arithmetic.
//!
//! A cube of level `k` in `𝔇^w` with index `(m₁, m₂)` is the half-open square
//! with corner `2^k·w + 2^k·(m₁, m₂)` and side `2^k`. All predicates scale the
//! coordinates to a common power-of-two unit and compare integers.
//!
//! Only the standard system (`w = 0`) is nested across levels. For `w ≠ 0` the
//! level-dependent shift `2^k·w` makes cubes of adjacent levels overlap
//! partially, e.g. `[1, 3)` and `[½, 3/2)` in one dimension.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Rect;

/// Grid shift `w`, one half-step flag per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Shift {
    pub x: bool,
    pub y: bool,
}

impl Shift {
    pub const ZERO: Shift = Shift { x: false, y: false };
    pub const ALL: [Shift; 4] = [
        Shift { x: false, y: false },
        Shift { x: false, y: true },
        Shift { x: true, y: false },
        Shift { x: true, y: true },
    ];

    pub fn new(x: bool, y: bool) -> Self {
        Self { x, y }
    }

    pub fn is_standard(&self) -> bool {
        !self.x && !self.y
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |b: bool| if b { "1/2" } else { "0" };
        write!(f, "({},{})", c(self.x), c(self.y))
    }
}

impl FromStr for Shift {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad shift `{s}`, expected (0|1/2,0|1/2)"));
        let inner = s.trim().strip_prefix('(').and_then(|t| t.strip_suffix(')')).ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let one = |t: &str| match t.trim() {
            "0" => Ok(false),
            "1/2" => Ok(true),
            _ => Err(bad()),
        };
        Ok(Shift::new(one(a)?, one(b)?))
    }
}

/// Axis-aligned half-open box with real (dyadic rational) corners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl RealBox {
    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub shift: Shift,
    pub level: i32,
    pub index: (i64, i64),
}

/// Relative position of two cubes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Disjoint,
    Equal,
    /// The first cube strictly contains the second.
    Contains,
    /// The first cube is strictly inside the second.
    Inside,
    /// Overlap without containment (possible only for shifted systems).
    Overlap,
}

fn pow2(e: i32) -> i128 {
    debug_assert!((0..126).contains(&e));
    1i128 << e
}

impl DyadicCube {
    pub fn new(shift: Shift, level: i32, i: i64, j: i64) -> Self {
        Self { shift, level, index: (i, j) }
    }

    pub fn standard(level: i32, i: i64, j: i64) -> Self {
        Self::new(Shift::ZERO, level, i, j)
    }

    pub fn side(&self) -> f64 {
        (self.level as f64).exp2()
    }

    pub fn measure(&self) -> f64 {
        self.side() * self.side()
    }

    /// Half-open span `[lo, hi)` along one axis in units of `2^unit`.
    fn axis_span(&self, axis: usize, unit: i32) -> (i128, i128) {
        let (idx, half) = if axis == 0 {
            (self.index.0, self.shift.x)
        } else {
            (self.index.1, self.shift.y)
        };
        let side = pow2(self.level - unit);
        let lo = idx as i128 * side + if half { side / 2 } else { 0 };
        (lo, lo + side)
    }

    fn spans(&self, unit: i32) -> [(i128, i128); 2] {
        [self.axis_span(0, unit), self.axis_span(1, unit)]
    }

    pub fn corner(&self) -> (f64, f64) {
        let s = self.side();
        let o = |half: bool| if half { s / 2.0 } else { 0.0 };
        (self.index.0 as f64 * s + o(self.shift.x), self.index.1 as f64 * s + o(self.shift.y))
    }

    pub fn center(&self) -> (f64, f64) {
        let (x, y) = self.corner();
        (x + self.side() / 2.0, y + self.side() / 2.0)
    }

    pub fn real_box(&self) -> RealBox {
        let (x0, y0) = self.corner();
        let s = self.side();
        RealBox { x0, y0, x1: x0 + s, y1: y0 + s }
    }

    /// `½K`: same center, side `2^{k-1}`.
    pub fn half_cube(&self) -> RealBox {
        let (x0, y0) = self.corner();
        let q = self.side() / 4.0;
        RealBox { x0: x0 + q, y0: y0 + q, x1: x0 + 3.0 * q, y1: y0 + 3.0 * q }
    }

    /// The cube as a box of lattice points at mesh `2^{-m}`.
    pub fn lattice_rect(&self, mesh: u32) -> Result<Rect> {
        let unit = -(mesh as i32);
        let need = if self.shift.is_standard() { 0 } else { 1 };
        if self.level - unit < need || self.level - unit > 62 {
            return Err(Error::OffLattice(self.to_string(), mesh));
        }
        let [(x0, x1), (y0, y1)] = self.spans(unit);
        Ok(Rect::new(x0 as i64, y0 as i64, x1 as i64, y1 as i64))
    }

    /// `½K` as a box of lattice points; needs `k + m ≥ 2`.
    pub fn half_rect(&self, mesh: u32) -> Result<Rect> {
        let unit = -(mesh as i32);
        if self.level - unit < 2 || self.level - unit > 62 {
            return Err(Error::OffLattice(self.to_string(), mesh));
        }
        let [(x0, _), (y0, _)] = self.spans(unit);
        let q = pow2(self.level - unit - 2);
        Ok(Rect::new((x0 + q) as i64, (y0 + q) as i64, (x0 + 3 * q) as i64, (y0 + 3 * q) as i64))
    }

    /// Cube of `shift`/`level` containing the lattice point `(x, y)` at mesh `2^{-m}`.
    pub fn containing_point(shift: Shift, level: i32, mesh: u32, x: i64, y: i64) -> Self {
        let (p, scale) = scaled_side(level, mesh);
        let idx = |c: i64, half: bool| {
            let o = if half { p / 2 } else { 0 };
            (c as i128 * scale - o).div_euclid(p) as i64
        };
        Self::new(shift, level, idx(x, shift.x), idx(y, shift.y))
    }

    /// Strict ancestor candidate one level up; `None` when the cube straddles
    /// the coarser grid lines (shifted systems).
    pub fn parent(&self) -> Option<Self> {
        let unit = self.level - 1;
        let [(x0, _), (y0, _)] = self.spans(unit);
        let p = pow2(self.level + 1 - unit);
        let idx = |c: i128, half: bool| {
            let o = if half { p / 2 } else { 0 };
            (c - o).div_euclid(p) as i64
        };
        let cand = Self::new(self.shift, self.level + 1, idx(x0, self.shift.x), idx(y0, self.shift.y));
        match cand.contains(self) {
            Ok(true) => Some(cand),
            _ => None,
        }
    }

    /// Cubes one level down contained in this cube.
    pub fn children(&self) -> Vec<Self> {
        let k = self.level - 1;
        let mut out = Vec::with_capacity(4);
        let range = |idx: i64, half: bool| -> Vec<i64> {
            if half {
                // the concentric child only
                vec![2 * idx + 1]
            } else {
                vec![2 * idx, 2 * idx + 1]
            }
        };
        for j in range(self.index.1, self.shift.y) {
            for i in range(self.index.0, self.shift.x) {
                let c = Self::new(self.shift, k, i, j);
                debug_assert_eq!(self.contains(&c), Ok(true));
                out.push(c);
            }
        }
        out
    }

    /// `other ⊆ self`, exact; both cubes must belong to the same system.
    pub fn contains(&self, other: &Self) -> Result<bool> {
        if self.shift != other.shift {
            return Err(Error::CrossGrid);
        }
        if other.level > self.level {
            return Ok(false);
        }
        let unit = other.level - 1;
        let a = self.spans(unit);
        let b = other.spans(unit);
        Ok((0..2).all(|i| a[i].0 <= b[i].0 && b[i].1 <= a[i].1))
    }

    /// Positive-area intersection; valid across systems.
    pub fn intersects(&self, other: &Self) -> bool {
        let unit = self.level.min(other.level) - 1;
        let a = self.spans(unit);
        let b = other.spans(unit);
        (0..2).all(|i| a[i].0 < b[i].1 && b[i].0 < a[i].1)
    }

    pub fn relation(&self, other: &Self) -> Relation {
        if !self.intersects(other) {
            return Relation::Disjoint;
        }
        let unit = self.level.min(other.level) - 1;
        let a = self.spans(unit);
        let b = other.spans(unit);
        let within = |p: &[(i128, i128); 2], q: &[(i128, i128); 2]| (0..2).all(|i| p[i].0 <= q[i].0 && q[i].1 <= p[i].1);
        match (within(&a, &b), within(&b, &a)) {
            (true, true) => Relation::Equal,
            (true, false) => Relation::Contains,
            (false, true) => Relation::Inside,
            (false, false) => Relation::Overlap,
        }
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w={};k={};m=({},{})", self.shift, self.level, self.index.0, self.index.1)
    }
}

impl FromStr for DyadicCube {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad cube `{s}`"));
        let mut parts = s.trim().split(';');
        let w = parts.next().and_then(|p| p.strip_prefix("w=")).ok_or_else(bad)?;
        let k = parts.next().and_then(|p| p.strip_prefix("k=")).ok_or_else(bad)?;
        let m = parts.next().and_then(|p| p.strip_prefix("m=")).ok_or_else(bad)?;
        let m = m.strip_prefix('(').and_then(|t| t.strip_suffix(')')).ok_or_else(bad)?;
        let (i, j) = m.split_once(',').ok_or_else(bad)?;
        Ok(Self::new(
            w.parse()?,
            k.parse().map_err(|_| bad())?,
            i.trim().parse().map_err(|_| bad())?,
            j.trim().parse().map_err(|_| bad())?,
        ))
    }
}

/// Cube side in scaled lattice units, and the scale applied to lattice
/// coordinates, chosen so that the side is a multiple of 4.
fn scaled_side(level: i32, mesh: u32) -> (i128, i128) {
    let e = level + mesh as i32;
    let extra = (2 - e).max(0);
    (pow2(e + extra), pow2(extra))
}

/// `Σ_w Σ_{K ∈ 𝔇^w, l(K) = 2^k} χ_{½K}(x)` at the lattice point `(x, y)`.
pub fn cover_count(x: i64, y: i64, level: i32, mesh: u32) -> u32 {
    let (p, scale) = scaled_side(level, mesh);
    let inside = |c: i64, half: bool| {
        let o = if half { p / 2 } else { 0 };
        let rel = (c as i128 * scale - o).rem_euclid(p);
        rel >= p / 4 && rel < 3 * p / 4
    };
    Shift::ALL
        .iter()
        .filter(|w| inside(x, w.x) && inside(y, w.y))
        .count() as u32
}

/// Level-`k` cubes of `𝔇^w` whose `½K` meets `support` (a box of lattice
/// cells at mesh `2^{-m}`), sorted by index.
pub fn cubes_meeting(support: &Rect, level: i32, shift: Shift, mesh: u32) -> Vec<DyadicCube> {
    if support.is_empty() {
        return Vec::new();
    }
    let (p, scale) = scaled_side(level, mesh);
    let range = |a: i64, b: i64, half: bool| {
        let o = if half { p / 2 } else { 0 };
        let (a, b) = (a as i128 * scale, b as i128 * scale);
        // ½K = [idx·p + o + p/4, idx·p + o + 3p/4) meets [a, b)
        let lo = (a - o - 3 * p / 4).div_euclid(p) + 1;
        let hi = -((-(b - o - p / 4)).div_euclid(p)) - 1;
        (lo as i64, hi as i64)
    };
    let (ix0, ix1) = range(support.x0, support.x1, shift.x);
    let (iy0, iy1) = range(support.y0, support.y1, shift.y);
    let mut out = Vec::new();
    for i in ix0..=ix1 {
        for j in iy0..=iy1 {
            out.push(DyadicCube::new(shift, level, i, j));
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_cube_examples() {
        let k = DyadicCube::standard(0, 0, 0);
        assert_eq!(k.half_cube(), RealBox { x0: 0.25, y0: 0.25, x1: 0.75, y1: 0.75 });
        let k = DyadicCube::new(Shift::new(true, true), 1, 0, 0);
        assert_eq!(k.real_box(), RealBox { x0: 1.0, y0: 1.0, x1: 3.0, y1: 3.0 });
        assert_eq!(k.half_cube(), RealBox { x0: 1.5, y0: 1.5, x1: 2.5, y1: 2.5 });
    }

    #[test]
    fn half_cube_is_centered_with_exact_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let w = Shift::ALL[rng.gen_range(0..4)];
            let k = DyadicCube::new(w, rng.gen_range(-6..6), rng.gen_range(-50..50), rng.gen_range(-50..50));
            let (hb, b) = (k.half_cube(), k.real_box());
            assert_eq!(hb.center(), k.center());
            let margin = (k.level as f64 - 2.0).exp2();
            assert_eq!(hb.x0 - b.x0, margin);
            assert_eq!(b.x1 - hb.x1, margin);
            assert_eq!(hb.y0 - b.y0, margin);
            assert_eq!(b.y1 - hb.y1, margin);
        }
    }

    #[test]
    fn cover_identity_on_patches() {
        let mesh = 4;
        for level in [-2, 0, 1] {
            let p = 1i64 << (level + mesh as i32);
            for y in -p..2 * p {
                for x in -p..2 * p {
                    assert_eq!(cover_count(x, y, level, mesh), 1, "({x},{y}) level {level}");
                }
            }
        }
        // levels finer than the lattice
        assert_eq!(cover_count(0, 0, -8, 4), 1);
        assert_eq!(cover_count(7, -3, -5, 4), 1);
    }

    #[test]
    fn cover_count_on_seams() {
        // x on the seam between standard unit cubes at mesh 2^-3
        assert_eq!(cover_count(8, 8, 0, 3), 1);
        assert_eq!(cover_count(8, 3, 0, 3), 1);
    }

    #[test]
    fn cubes_meeting_matches_window_scan() {
        let mesh = 3;
        let support = Rect::new(0, 0, 8, 8); // unit box
        for w in Shift::ALL {
            let fast = cubes_meeting(&support, 0, w, mesh);
            let mut slow = Vec::new();
            for i in -2..=2 {
                for j in -2..=2 {
                    let c = DyadicCube::new(w, 0, i, j);
                    if c.half_rect(mesh).unwrap().intersects(&support) {
                        slow.push(c);
                    }
                }
            }
            slow.sort();
            assert_eq!(fast, slow);
            assert!(!fast.is_empty() && fast.len() <= 4);
            // translation covariance
            let far = cubes_meeting(&support.translate(8 * 37, -8 * 11), 0, w, mesh);
            assert_eq!(far.len(), fast.len());
            assert_eq!(far[0].index, (fast[0].index.0 + 37, fast[0].index.1 - 11));
        }
        assert!(cubes_meeting(&Rect::new(3, 3, 3, 9), 0, Shift::ZERO, mesh).is_empty());
    }

    #[test]
    fn containment_examples() {
        let a = DyadicCube::standard(1, 0, 0);
        let b = DyadicCube::standard(0, 0, 0);
        let c = DyadicCube::standard(0, 1, 0);
        assert_eq!(a.contains(&b), Ok(true));
        assert_eq!(b.contains(&c), Ok(false));
        let s = DyadicCube::new(Shift::new(true, false), 0, 0, 0);
        assert_eq!(a.contains(&s), Err(Error::CrossGrid));
    }

    #[test]
    fn parent_chains_are_transitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let w = Shift::ALL[rng.gen_range(0..4)];
            // odd indices on shifted axes have parents
            let pick = |half: bool, r: &mut ChaCha8Rng| {
                let v: i64 = r.gen_range(-1000..1000);
                if half {
                    -1
                } else {
                    v
                }
            };
            let start = DyadicCube::new(w, rng.gen_range(-20..0), pick(w.x, &mut rng), pick(w.y, &mut rng));
            let mut chain = vec![start];
            while chain.len() < 10 {
                let p = chain.last().unwrap().parent().expect("parent exists");
                chain.push(p);
            }
            for i in 0..chain.len() {
                for j in i..chain.len() {
                    assert_eq!(chain[j].contains(&chain[i]), Ok(true));
                }
            }
        }
    }

    #[test]
    fn standard_grid_dichotomy() {
        let mut cubes = Vec::new();
        for k in -2..=1 {
            let n = 1i64 << (2 - k).max(0);
            for i in -1..n {
                for j in -1..n {
                    cubes.push(DyadicCube::standard(k, i, j));
                }
            }
        }
        for a in &cubes {
            for b in &cubes {
                let r = a.relation(b);
                assert_ne!(r, Relation::Overlap, "{a} vs {b}");
                if a == b {
                    assert_eq!(r, Relation::Equal);
                }
            }
        }
    }

    #[test]
    fn shifted_grid_is_not_nested_across_levels() {
        // [1,3)² at level 1 and [1/2,3/2)² at level 0 in the (1/2,1/2) system
        let w = Shift::new(true, true);
        let big = DyadicCube::new(w, 1, 0, 0);
        let small = DyadicCube::new(w, 0, 0, 0);
        assert_eq!(big.relation(&small), Relation::Overlap);
        // same-level cubes still tile
        for i in -3..3 {
            for j in -3..3 {
                let a = DyadicCube::new(w, 0, i, j);
                for b in [DyadicCube::new(w, 0, i + 1, j), DyadicCube::new(w, 0, i, j - 1)] {
                    assert_eq!(a.relation(&b), Relation::Disjoint);
                }
            }
        }
    }

    #[test]
    fn shifted_children_are_concentric_halves() {
        let w = Shift::new(true, true);
        let k = DyadicCube::new(w, 3, 2, -1);
        let ch = k.children();
        assert_eq!(ch.len(), 1);
        let hb = k.half_cube();
        assert_eq!(ch[0].real_box(), hb);
    }

    #[test]
    fn lattice_rects() {
        let k = DyadicCube::new(Shift::new(false, true), -1, 2, 3);
        // side 4 points at mesh 2^-3, y shifted by 2
        assert_eq!(k.lattice_rect(3).unwrap(), Rect::new(8, 14, 12, 18));
        assert_eq!(k.half_rect(3).unwrap(), Rect::new(9, 15, 11, 17));
        assert!(DyadicCube::new(Shift::new(true, false), -3, 0, 0).lattice_rect(3).is_err());
        let p = DyadicCube::containing_point(Shift::new(false, true), -1, 3, 9, 14);
        assert_eq!(p, k);
    }

    #[test]
    fn notation_round_trip() {
        let k = DyadicCube::new(Shift::new(false, true), 3, -1, 4);
        assert_eq!(k.to_string(), "w=(0,1/2);k=3;m=(-1,4)");
        assert_eq!(k.to_string().parse::<DyadicCube>().unwrap(), k);
    }
}
