//! Discrete operators: the dyadic pieces `T_j`, their localizations `T_K`, the
//! maximal dyadic operator `T_*`, the directly truncated maximal operator and
//! the rough maximal function `M_Ω`.
//!
//! Every operator is a linear convolution with quadrature weight `h²`.

use std::collections::HashMap;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};
use crate::fft::{fft2, padded};
use crate::grid::{mesh_h, GridFunction, Rect};
use crate::kernel::{build_kernel, check_resolvable};
use crate::sphere::SphereFunction;

/// Below this many nonzeros in one operand the direct scatter always wins.
const SPARSE_NNZ: usize = 64;

/// Convolution with a fixed kernel; kernel spectra are cached per padded size.
pub struct Convolver {
    kernel: GridFunction,
    kernel_nnz: usize,
    spectra: HashMap<(usize, usize), Vec<Complex64>>,
    planner: FftPlanner<f64>,
}

impl Convolver {
    pub fn new(kernel: GridFunction) -> Self {
        let kernel_nnz = kernel.nonzero_count();
        Self { kernel, kernel_nnz, spectra: HashMap::new(), planner: FftPlanner::new() }
    }

    pub fn kernel(&self) -> &GridFunction {
        &self.kernel
    }

    /// `Σ_y kernel(x − y)·g(y)·h²` on the Minkowski sum of both boxes.
    pub fn apply(&mut self, g: &GridFunction) -> Result<GridFunction> {
        self.kernel.check_mesh(g)?;
        let out_rect = self.kernel.rect().minkowski(&g.rect());
        let mesh = g.mesh();
        if out_rect.is_empty() || self.kernel_nnz == 0 {
            return Ok(GridFunction::zeros(mesh, out_rect));
        }
        let g_nnz = g.nonzero_count();
        if g_nnz == 0 {
            return Ok(GridFunction::zeros(mesh, out_rect));
        }
        let px = out_rect.width().next_power_of_two();
        let py = out_rect.height().next_power_of_two();
        let n = (px * py) as f64;
        let fft_cost = 6.0 * n * n.log2();
        let direct_k = self.kernel_nnz as f64 * g.rect().area() as f64;
        let direct_g = g_nnz as f64 * self.kernel.rect().area() as f64;
        if direct_k.min(direct_g) <= fft_cost || self.kernel_nnz.min(g_nnz) <= SPARSE_NNZ {
            let (sparse, dense) = if direct_g <= direct_k { (g, &self.kernel) } else { (&self.kernel, g) };
            return Ok(scatter(sparse, dense, out_rect));
        }
        self.fft_apply(g, out_rect, px, py)
    }

    fn fft_apply(&mut self, g: &GridFunction, out_rect: Rect, px: usize, py: usize) -> Result<GridFunction> {
        if !self.spectra.contains_key(&(px, py)) {
            let mut k = padded(&self.kernel, px, py, 0, 0);
            fft2(&mut self.planner, &mut k, px, py, false);
            self.spectra.insert((px, py), k);
        }
        let mut a = padded(g, px, py, 0, 0);
        fft2(&mut self.planner, &mut a, px, py, false);
        let spec = &self.spectra[&(px, py)];
        for (v, k) in a.iter_mut().zip(spec) {
            *v *= k;
        }
        fft2(&mut self.planner, &mut a, px, py, true);
        let scale = g.cell_area() / (px * py) as f64;
        let mut out = GridFunction::zeros(g.mesh(), out_rect);
        let w = out_rect.width();
        for (row, chunk) in out.samples_mut().chunks_mut(w).enumerate() {
            for (x, v) in chunk.iter_mut().enumerate() {
                *v = a[row * px + x].re * scale;
            }
        }
        Ok(out)
    }
}

/// Direct summation driven by the nonzeros of `sparse`.
fn scatter(sparse: &GridFunction, dense: &GridFunction, out_rect: Rect) -> GridFunction {
    let mut out = GridFunction::zeros(sparse.mesh(), out_rect);
    let ca = sparse.cell_area();
    let dr = dense.rect();
    let (w, ow) = (dr.width(), out_rect.width());
    for (sx, sy, sv) in sparse.nonzeros() {
        let c = sv * ca;
        for (row, chunk) in dense.samples().chunks(w).enumerate() {
            let y = dr.y0 + sy + row as i64 - out_rect.y0;
            let x = (dr.x0 + sx - out_rect.x0) as usize;
            let start = y as usize * ow + x;
            for (o, d) in out.samples_mut()[start..start + w].iter_mut().zip(chunk) {
                *o += c * d;
            }
        }
    }
    out
}

/// Linear convolution `Σ_y kernel(x − y)·g(y)·h²`.
pub fn convolve(kernel: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    Convolver::new(kernel.clone()).apply(g)
}

/// `T_j f = 𝒦_j * f`.
pub fn apply_tj(j: i32, omega: &SphereFunction, f: &GridFunction) -> Result<GridFunction> {
    convolve(&build_kernel(j, omega, f.mesh())?, f)
}

/// `T_K g = 𝒦_k * (g·χ_{½K})`; the output box lies inside `K`.
pub fn apply_tk(cube: &DyadicCube, omega: &SphereFunction, g: &GridFunction) -> Result<GridFunction> {
    DyadicOperator::new(omega.clone(), g.mesh()).tk(cube, g)
}

/// Dyadic pieces of one kernel at one mesh, with per-level caches.
pub struct DyadicOperator {
    omega: SphereFunction,
    mesh: u32,
    levels: HashMap<i32, Convolver>,
}

impl DyadicOperator {
    pub fn new(omega: SphereFunction, mesh: u32) -> Self {
        Self { omega, mesh, levels: HashMap::new() }
    }

    pub fn omega(&self) -> &SphereFunction {
        &self.omega
    }

    pub fn mesh(&self) -> u32 {
        self.mesh
    }

    fn level(&mut self, j: i32) -> Result<&mut Convolver> {
        check_resolvable(j, self.mesh)?;
        if !self.levels.contains_key(&j) {
            let k = build_kernel(j, &self.omega, self.mesh)?;
            self.levels.insert(j, Convolver::new(k));
        }
        Ok(self.levels.get_mut(&j).expect("inserted"))
    }

    pub fn kernel(&mut self, j: i32) -> Result<&GridFunction> {
        Ok(self.level(j)?.kernel())
    }

    pub fn tj(&mut self, j: i32, f: &GridFunction) -> Result<GridFunction> {
        self.level(j)?.apply(f)
    }

    pub fn tk(&mut self, cube: &DyadicCube, g: &GridFunction) -> Result<GridFunction> {
        let conv = self.level(cube.level)?;
        let half = cube.half_rect(g.mesh())?;
        let local = g.masked(&half);
        conv.apply(&local)
    }

    /// Truncations `Σ_{j ≥ l} T_j f` for `l = k_max, …, k_min`, in that order.
    pub fn suffix_sums(&mut self, f: &GridFunction, k_min: i32, k_max: i32) -> Result<Vec<(i32, GridFunction)>> {
        if k_min > k_max {
            return Err(Error::EmptyLevels(k_min, k_max));
        }
        let mut s = GridFunction::zeros(f.mesh(), Rect::EMPTY);
        let mut out = Vec::with_capacity((k_max - k_min + 1) as usize);
        for j in (k_min..=k_max).rev() {
            s.add_assign(&self.tj(j, f)?)?;
            out.push((j, s.clone()));
        }
        Ok(out)
    }

    /// `T_* f = max_l |Σ_{j ≥ l} T_j f|` over `l ∈ [k_min, k_max]`, one downward sweep.
    pub fn maximal(&mut self, f: &GridFunction, k_min: i32, k_max: i32) -> Result<GridFunction> {
        if k_min > k_max {
            return Err(Error::EmptyLevels(k_min, k_max));
        }
        let mut s = GridFunction::zeros(f.mesh(), Rect::EMPTY);
        let mut best = GridFunction::zeros(f.mesh(), Rect::EMPTY);
        for j in (k_min..=k_max).rev() {
            s.add_assign(&self.tj(j, f)?)?;
            best.max_assign(&s.abs())?;
        }
        Ok(best)
    }
}

/// `T_* f` over levels `[k_min, k_max]`.
pub fn maximal_dyadic(omega: &SphereFunction, f: &GridFunction, k_min: i32, k_max: i32) -> Result<GridFunction> {
    DyadicOperator::new(omega.clone(), f.mesh()).maximal(f, k_min, k_max)
}

/// Samples of `w(x)` for `r_lo < |x| ≤ r_hi` (strict on both ends when `open_hi`).
fn annulus(mesh: u32, r_lo: f64, r_hi: f64, open_hi: bool, w: impl Fn(f64, f64, f64) -> f64) -> GridFunction {
    let h = mesh_h(mesh);
    let reach = (r_hi / h).floor() as i64;
    let rect = Rect::new(-reach, -reach, reach + 1, reach + 1);
    let mut k = GridFunction::zeros(mesh, rect);
    for l in -reach..=reach {
        for i in -reach..=reach {
            let (x, y) = (i as f64 * h, l as f64 * h);
            let r2 = x * x + y * y;
            let inside_hi = if open_hi { r2 < r_hi * r_hi } else { r2 <= r_hi * r_hi };
            if r2 > r_lo * r_lo && inside_hi {
                k.set(i, l, w(x, y, r2));
            }
        }
    }
    k.trimmed()
}

fn check_radii(radii: &[f64], mesh: u32) -> Result<Vec<f64>> {
    if radii.is_empty() {
        return Err(Error::Empty("radius grid"));
    }
    let h = mesh_h(mesh);
    for &r in radii {
        if !r.is_finite() || r < 4.0 * h {
            return Err(Error::BelowMesh(r));
        }
    }
    let mut v = radii.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

/// Largest distance between a point of `a` and a point of `b`, real units.
fn box_diameter(a: &Rect, b: &Rect, h: f64) -> f64 {
    let u = a.union(b);
    (u.width() as f64 * h).hypot(u.height() as f64 * h)
}

/// `sup_ε |Σ_{|x−y|>ε} Ω(x−y)/|x−y|²·f(y)·h²|` over `eps_grid`, evaluated on
/// `eval`; the raw kernel has no smoothing.
pub fn maximal_truncated_direct(
    omega: &SphereFunction,
    f: &GridFunction,
    eps_grid: &[f64],
    eval: Rect,
) -> Result<GridFunction> {
    let mesh = f.mesh();
    let eps = check_radii(eps_grid, mesh)?;
    let mut best = GridFunction::zeros(mesh, eval);
    let supp = f.support();
    if supp.is_empty() || eval.is_empty() || omega.is_zero() {
        return Ok(best);
    }
    let reach = box_diameter(&supp, &eval, f.h());
    let f = f.restrict(supp);
    let mut s = GridFunction::zeros(mesh, eval);
    let mut outer = reach;
    for &e in eps.iter().rev() {
        if e < outer {
            let piece = annulus(mesh, e, outer, false, |x, y, r2| omega.eval_dir(x, y) / r2);
            s.add_assign(&convolve(&piece, &f)?.restrict(eval))?;
            outer = e;
        }
        best.max_assign(&s.abs())?;
    }
    Ok(best)
}

/// `max_r r^{-2}·Σ_{|x−y|<r} |Ω(x−y)|·|f(y)|·h²` over `radii`.
pub fn m_omega(omega: &SphereFunction, f: &GridFunction, radii: &[f64]) -> Result<GridFunction> {
    let mesh = f.mesh();
    let radii = check_radii(radii, mesh)?;
    let supp = f.support();
    if supp.is_empty() || omega.is_zero() {
        return Ok(GridFunction::zeros(mesh, supp));
    }
    let af = f.restrict(supp).abs();
    let mut s = GridFunction::zeros(mesh, Rect::EMPTY);
    let mut best = GridFunction::zeros(mesh, Rect::EMPTY);
    let mut inner = 0.0;
    for &r in &radii {
        // punctured ball of radius r, built as the annulus beyond the previous radius
        let piece = annulus(mesh, inner, r, true, |x, y, _| omega.eval_dir(x, y).abs());
        s.add_assign(&convolve(&piece, &af)?)?;
        best.max_assign(&s.scaled(1.0 / (r * r)))?;
        inner = r;
    }
    Ok(best)
}
