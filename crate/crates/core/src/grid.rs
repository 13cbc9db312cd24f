//! Finitely supported functions on the lattice `(h·ℤ)²`, `h = 2^{-m}`.
//!
//! Lattice point `(i, j)` sits at `(i·h, j·h)` and stands for the cell
//! `[i·h, (i+1)·h) × [j·h, (j+1)·h)`; every integral is a Riemann sum with
//! weight `h²` per sample.

use std::fmt;

use crate::error::{Error, Result};

/// Half-open box of lattice points `[x0, x1) × [y0, y1)`, equivalently a union
/// of lattice cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl Rect {
    pub const EMPTY: Rect = Rect { x0: 0, y0: 0, x1: 0, y1: 0 };

    pub fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn square(x0: i64, y0: i64, side: i64) -> Self {
        Self::new(x0, y0, x0 + side, y0 + side)
    }

    pub fn is_empty(&self) -> bool {
        self.x1 <= self.x0 || self.y1 <= self.y0
    }

    pub fn width(&self) -> usize {
        (self.x1 - self.x0).max(0) as usize
    }

    pub fn height(&self) -> usize {
        (self.y1 - self.y0).max(0) as usize
    }

    /// Number of lattice points (cells).
    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn contains_point(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        o.is_empty() || (o.x0 >= self.x0 && o.x1 <= self.x1 && o.y0 >= self.y0 && o.y1 <= self.y1)
    }

    pub fn intersect(&self, o: &Rect) -> Rect {
        let r = Rect::new(self.x0.max(o.x0), self.y0.max(o.y0), self.x1.min(o.x1), self.y1.min(o.y1));
        if r.is_empty() {
            Rect::EMPTY
        } else {
            r
        }
    }

    pub fn intersects(&self, o: &Rect) -> bool {
        !self.intersect(o).is_empty()
    }

    /// Smallest box containing both; empty operands are ignored.
    pub fn union(&self, o: &Rect) -> Rect {
        if self.is_empty() {
            return *o;
        }
        if o.is_empty() {
            return *self;
        }
        Rect::new(self.x0.min(o.x0), self.y0.min(o.y0), self.x1.max(o.x1), self.y1.max(o.y1))
    }

    /// Minkowski sum of the two point sets.
    pub fn minkowski(&self, o: &Rect) -> Rect {
        if self.is_empty() || o.is_empty() {
            return Rect::EMPTY;
        }
        Rect::new(self.x0 + o.x0, self.y0 + o.y0, self.x1 + o.x1 - 1, self.y1 + o.y1 - 1)
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Rect {
        Rect::new(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)
    }

    /// Grows the box by `r` points on every side.
    pub fn dilate(&self, r: i64) -> Rect {
        Rect::new(self.x0 - r, self.y0 - r, self.x1 + r, self.y1 + r)
    }

    pub fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| (x, y)))
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})x[{},{})", self.x0, self.x1, self.y0, self.y1)
    }
}

/// A real function sampled on a dense box of the lattice; reads outside the
/// box return zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    mesh: u32,
    rect: Rect,
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(mesh: u32, rect: Rect) -> Self {
        let rect = if rect.is_empty() { Rect::EMPTY } else { rect };
        Self {
            mesh,
            rect,
            samples: vec![0.0; rect.area() as usize],
        }
    }

    pub fn from_samples(mesh: u32, rect: Rect, samples: Vec<f64>) -> Result<Self> {
        if samples.len() as u64 != rect.area() {
            return Err(Error::Config(format!(
                "{} samples for a box of {} points",
                samples.len(),
                rect.area()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid samples"));
        }
        Ok(Self { mesh, rect, samples })
    }

    /// Samples `f(x, y)` at the lattice points of `rect`, coordinates in real units.
    pub fn from_fn(mesh: u32, rect: Rect, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut g = Self::zeros(mesh, rect);
        let h = g.h();
        for y in rect.y0..rect.y1 {
            for x in rect.x0..rect.x1 {
                let v = f(x as f64 * h, y as f64 * h);
                g.set(x, y, v);
            }
        }
        g
    }

    pub fn mesh(&self) -> u32 {
        self.mesh
    }

    /// Lattice spacing `2^{-m}`.
    pub fn h(&self) -> f64 {
        mesh_h(self.mesh)
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.h();
        h * h
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn anchor(&self) -> (i64, i64) {
        (self.rect.x0, self.rect.y0)
    }

    pub fn extent(&self) -> (usize, usize) {
        (self.rect.width(), self.rect.height())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    #[inline]
    fn offset(&self, x: i64, y: i64) -> usize {
        (y - self.rect.y0) as usize * self.rect.width() + (x - self.rect.x0) as usize
    }

    #[inline]
    pub fn get(&self, x: i64, y: i64) -> f64 {
        if self.rect.contains_point(x, y) {
            self.samples[self.offset(x, y)]
        } else {
            0.0
        }
    }

    /// Writes a sample; panics outside the stored box.
    #[inline]
    pub fn set(&mut self, x: i64, y: i64, v: f64) {
        assert!(self.rect.contains_point(x, y), "({x},{y}) outside {}", self.rect);
        let o = self.offset(x, y);
        self.samples[o] = v;
    }

    #[inline]
    pub fn add_at(&mut self, x: i64, y: i64, v: f64) {
        let o = self.offset(x, y);
        self.samples[o] += v;
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let w = self.rect.width().max(1);
        let (x0, y0) = (self.rect.x0, self.rect.y0);
        self.samples
            .iter()
            .enumerate()
            .map(move |(i, &v)| (x0 + (i % w) as i64, y0 + (i / w) as i64, v))
    }

    pub fn nonzeros(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        self.iter().filter(|t| t.2 != 0.0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.samples.iter().filter(|v| **v != 0.0).count()
    }

    /// Tight box around the nonzero samples.
    pub fn support(&self) -> Rect {
        let mut r = Rect::EMPTY;
        for (x, y, _) in self.nonzeros() {
            r = r.union(&Rect::new(x, y, x + 1, y + 1));
        }
        r
    }

    /// Copy onto `rect`; samples outside it are dropped.
    pub fn restrict(&self, rect: Rect) -> Self {
        let mut out = Self::zeros(self.mesh, rect);
        let common = self.rect.intersect(&out.rect);
        for y in common.y0..common.y1 {
            for x in common.x0..common.x1 {
                out.set(x, y, self.get(x, y));
            }
        }
        out
    }

    pub fn trimmed(&self) -> Self {
        self.restrict(self.support())
    }

    /// `g·χ_rect`, stored on the intersection.
    pub fn masked(&self, rect: &Rect) -> Self {
        self.restrict(self.rect.intersect(rect))
    }

    pub fn check_mesh(&self, other: &GridFunction) -> Result<()> {
        if self.mesh != other.mesh {
            return Err(Error::MeshMismatch(self.mesh, other.mesh));
        }
        Ok(())
    }

    /// Adds `other` into `self`, growing the stored box when needed.
    pub fn add_assign(&mut self, other: &GridFunction) -> Result<()> {
        self.check_mesh(other)?;
        if other.rect.is_empty() {
            return Ok(());
        }
        if !self.rect.contains_rect(&other.rect) {
            *self = self.restrict(self.rect.union(&other.rect));
        }
        let w = other.rect.width();
        for (row, y) in (other.rect.y0..other.rect.y1).enumerate() {
            let src = &other.samples[row * w..(row + 1) * w];
            let start = self.offset(other.rect.x0, y);
            for (d, s) in self.samples[start..start + w].iter_mut().zip(src) {
                *d += s;
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mesh: self.mesh,
            rect: self.rect,
            samples: self.samples.iter().map(|v| v * c).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh: self.mesh,
            rect: self.rect,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// `Σ samples · h²`.
    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.cell_area()
    }

    pub fn l1_norm(&self) -> f64 {
        self.samples.iter().map(|v| v.abs()).sum::<f64>() * self.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() * self.cell_area()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `|{x : g(x) > λ}|` as a cell count times `h²`.
    pub fn level_set_measure(&self, lambda: f64) -> f64 {
        self.samples.iter().filter(|&&v| v > lambda).count() as f64 * self.cell_area()
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    /// Pointwise maximum with `other`, over the union of both boxes.
    pub fn max_assign(&mut self, other: &GridFunction) -> Result<()> {
        self.check_mesh(other)?;
        if !self.rect.contains_rect(&other.rect) {
            *self = self.restrict(self.rect.union(&other.rect));
        }
        for (x, y, v) in other.iter() {
            let o = self.offset(x, y);
            if v > self.samples[o] {
                self.samples[o] = v;
            }
        }
        Ok(())
    }

    /// `max |self − other|` over the union of the boxes.
    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        let r = self.rect.union(&other.rect);
        r.points()
            .map(|(x, y)| (self.get(x, y) - other.get(x, y)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn mesh_h(mesh: u32) -> f64 {
    (-(mesh as f64)).exp2()
}
