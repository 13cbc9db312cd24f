//! Direction nets on the circle, the sector partition of the kernel, and the
//! directional frequency cutoffs `G_v`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fft::{fast_size, fft2, padded, signed_bin};
use crate::grid::{GridFunction, Rect};
use crate::kernel::{build_kernel, smooth_step};
use crate::sphere::{chord, chord_to_angle, SphereFunction};

/// A maximal separated set of directions and the sectors around them.
#[derive(Clone, Debug)]
pub struct DirectionNet {
    pub s: u32,
    pub gamma: f64,
    /// Chord separation `2^{-sγ-4}`.
    pub separation: f64,
    /// Center angles in `[0, 2π)`, increasing.
    pub centers: Vec<f64>,
    /// Sector index of every arc of the underlying arc grid.
    pub sector_of_arc: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetReport {
    pub count: usize,
    pub min_separation: f64,
    pub max_cover_distance: f64,
    pub max_sector_diameter: f64,
    pub centers_in_own_sector: bool,
    pub separation_bound: f64,
    pub diameter_bound: f64,
}

impl NetReport {
    pub fn passed(&self) -> bool {
        (self.count == 1 || self.min_separation >= self.separation_bound)
            && self.max_cover_distance <= self.separation_bound
            && self.max_sector_diameter <= self.diameter_bound
            && self.centers_in_own_sector
    }
}

/// `2^{-sγ-4}`.
pub fn net_separation(s: u32, gamma: f64) -> f64 {
    (-(s as f64) * gamma - 4.0).exp2()
}

impl DirectionNet {
    pub fn arc_count(&self) -> usize {
        self.sector_of_arc.len()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// `2^{sγ}`.
    pub fn sharpness(&self) -> f64 {
        (self.s as f64 * self.gamma).exp2()
    }

    /// Arc mask of sector `v`.
    pub fn sector_mask(&self, v: usize) -> Vec<bool> {
        self.sector_of_arc.iter().map(|&u| u == v).collect()
    }

    /// Re-measures every net invariant by brute force.
    pub fn verify(&self) -> NetReport {
        let n = self.arc_count();
        let w = TAU / n as f64;
        let c = &self.centers;
        let mut min_sep = f64::INFINITY;
        for (i, a) in c.iter().enumerate() {
            for b in &c[i + 1..] {
                min_sep = min_sep.min(chord(*a, *b));
            }
        }
        // worst direction: probe 8 points per arc plus every gap midpoint
        let mut probes: Vec<f64> = (0..8 * n).map(|i| (i as f64 + 0.5) * w / 8.0).collect();
        for (i, a) in c.iter().enumerate() {
            let b = if i + 1 < c.len() { c[i + 1] } else { c[0] + TAU };
            probes.push((a + b) / 2.0);
        }
        let cover = probes
            .iter()
            .map(|&t| c.iter().map(|&e| chord(t, e)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);

        let mut edges: Vec<Vec<f64>> = vec![Vec::new(); c.len()];
        for (i, &v) in self.sector_of_arc.iter().enumerate() {
            edges[v].push(i as f64 * w);
            edges[v].push((i + 1) as f64 * w);
        }
        let mut diam = 0.0f64;
        for e in &edges {
            for (i, a) in e.iter().enumerate() {
                for b in &e[i + 1..] {
                    diam = diam.max(chord(*a, *b));
                }
            }
        }
        let own = c
            .iter()
            .enumerate()
            .all(|(v, &a)| self.sector_of_arc[((a / w).floor() as usize).min(n - 1)] == v);
        NetReport {
            count: c.len(),
            min_separation: min_sep,
            max_cover_distance: cover,
            max_sector_diameter: diam,
            centers_in_own_sector: own,
            separation_bound: self.separation,
            diameter_bound: 4.0 * self.separation,
        }
    }

    /// CSV with header `v,angle,sep_left,sector_width`.
    pub fn csv(&self) -> String {
        let w = TAU / self.arc_count() as f64;
        let mut counts = vec![0usize; self.len()];
        for &v in &self.sector_of_arc {
            counts[v] += 1;
        }
        let mut s = String::from("v,angle,sep_left,sector_width\n");
        for (v, &a) in self.centers.iter().enumerate() {
            let prev = if v == 0 { self.centers[self.len() - 1] } else { self.centers[v - 1] };
            let _ = writeln!(s, "{v},{a},{},{}", chord(a, prev), counts[v] as f64 * w);
        }
        s
    }

    /// `Φ(2^{sγ}⟨e_v, ξ/|ξ|⟩)`, 1 at `ξ = 0`.
    pub fn symbol(&self, v: usize, xi1: f64, xi2: f64) -> f64 {
        let r = xi1.hypot(xi2);
        if r == 0.0 {
            return 1.0;
        }
        let a = self.centers[v];
        cutoff(self.sharpness() * (a.cos() * xi1 + a.sin() * xi2) / r)
    }
}

/// Radial cutoff: 1 on `|t| ≤ 2`, 0 on `|t| ≥ 4`.
pub fn cutoff(t: f64) -> f64 {
    smooth_step((t.abs() - 2.0) / 2.0)
}

/// Greedy packing with chord separation `separation` over `arc_count` arc midpoints.
pub fn net_with_separation(s: u32, gamma: f64, separation: f64, arc_count: usize) -> Result<DirectionNet> {
    let n = arc_count;
    let w = TAU / n as f64;
    if n == 0 || w > separation {
        return Err(Error::UnresolvedNet { arc_width: w, separation });
    }
    let mid = |i: usize| (i as f64 + 0.5) * w;
    for start in 0..n {
        let mut idx: Vec<usize> = Vec::new();
        for step in 0..n {
            let i = (start + step) % n;
            if idx.iter().all(|&u| chord(mid(u), mid(i)) >= separation) {
                idx.push(i);
            }
        }
        idx.sort_unstable();
        let centers: Vec<f64> = idx.iter().map(|&i| mid(i)).collect();
        let widest = centers
            .iter()
            .enumerate()
            .map(|(i, &a)| if i + 1 < centers.len() { centers[i + 1] - a } else { centers[0] + TAU - a })
            .fold(0.0, f64::max);
        if chord_to_angle(2.0).min(widest / 2.0) > chord_to_angle(separation) {
            continue;
        }
        let sector_of_arc = (0..n)
            .map(|i| {
                let mut best = (f64::INFINITY, 0);
                for (v, &a) in centers.iter().enumerate() {
                    let d = chord(mid(i), a);
                    if d < best.0 {
                        best = (d, v);
                    }
                }
                best.1
            })
            .collect();
        return Ok(DirectionNet { s, gamma, separation, centers, sector_of_arc });
    }
    Err(Error::UnresolvedNet { arc_width: w, separation })
}

/// The net `Θ_s` for `γ` on a grid of `arc_count` arcs.
pub fn build_direction_net(s: u32, gamma: f64, arc_count: usize) -> Result<DirectionNet> {
    if !(gamma > 0.0 && gamma < 1.0) || s == 0 {
        return Err(Error::Config(format!("net needs s ≥ 1 and 0 < γ < 1, got s={s}, γ={gamma}")));
    }
    let net = net_with_separation(s, gamma, net_separation(s, gamma), arc_count)?;
    let rep = net.verify();
    if !rep.passed() {
        return Err(Error::UnresolvedNet { arc_width: TAU / arc_count as f64, separation: net.separation });
    }
    Ok(net)
}

/// Square transform grid holding `g` centred, at least twice its extent.
fn transform_box(g: &GridFunction) -> (Rect, usize) {
    let r = g.rect();
    let p = fast_size(2 * r.width().max(r.height()).max(1));
    let ox = (p - r.width()) as i64 / 2;
    let oy = (p - r.height()) as i64 / 2;
    (Rect::square(r.x0 - ox, r.y0 - oy, p as i64), p)
}

fn multiply(g: &GridFunction, symbol: impl Fn(f64, f64) -> f64) -> GridFunction {
    let (rect, p) = transform_box(g);
    let mut planner = FftPlanner::new();
    let (ox, oy) = ((g.rect().x0 - rect.x0) as usize, (g.rect().y0 - rect.y0) as usize);
    let mut a = padded(g, p, p, ox, oy);
    fft2(&mut planner, &mut a, p, p, false);
    for ky in 0..p {
        let fy = signed_bin(ky, p);
        for kx in 0..p {
            a[ky * p + kx] *= symbol(signed_bin(kx, p), fy);
        }
    }
    fft2(&mut planner, &mut a, p, p, true);
    let scale = 1.0 / (p * p) as f64;
    let mut out = GridFunction::zeros(g.mesh(), rect);
    for (o, v) in out.samples_mut().iter_mut().zip(&a) {
        *o = v.re * scale;
    }
    out
}

/// `G_v g` on a periodic square grid twice the extent of `g`.
pub fn apply_g(net: &DirectionNet, v: usize, g: &GridFunction) -> GridFunction {
    if g.rect().is_empty() {
        return g.clone();
    }
    multiply(g, |a, b| net.symbol(v, a, b))
}

/// `(I − G_v) g` on the same grid as [`apply_g`].
pub fn apply_i_minus_g(net: &DirectionNet, v: usize, g: &GridFunction) -> GridFunction {
    if g.rect().is_empty() {
        return g.clone();
    }
    multiply(g, |a, b| 1.0 - net.symbol(v, a, b))
}

/// `‖G_v 𝒦_j^v‖₂ / ‖𝒦_j^v‖₂`, the response of `G_v T_j^v` to a unit spike.
pub fn spike_g_ratio(net: &DirectionNet, v: usize, j: i32, omega: &SphereFunction, mesh: u32) -> Result<f64> {
    check_net(net, omega)?;
    let slice = build_kernel(j, &omega.masked(&net.sector_mask(v)), mesh)?;
    if slice.is_zero() {
        return Err(Error::ZeroKernel);
    }
    let p = fast_size(2 * slice.rect().width());
    let mut planner = FftPlanner::new();
    let mut a = padded(&slice, p, p, 0, 0);
    fft2(&mut planner, &mut a, p, p, false);
    let (mut kept, mut total) = (0.0, 0.0);
    for ky in 0..p {
        let fy = signed_bin(ky, p);
        for kx in 0..p {
            let e = a[ky * p + kx].norm_sqr();
            let m = net.symbol(v, signed_bin(kx, p), fy);
            kept += m * m * e;
            total += e;
        }
    }
    Ok((kept / total).sqrt())
}

fn check_net(net: &DirectionNet, omega: &SphereFunction) -> Result<()> {
    if net.arc_count() != omega.arc_count() {
        return Err(Error::Config(format!(
            "net built on {} arcs, kernel has {}",
            net.arc_count(),
            omega.arc_count()
        )));
    }
    Ok(())
}

/// `Σ_v m_v(ξ)·𝒦̂_j^v(ξ)·b̂(ξ)` transformed back, for an arbitrary per-sector
/// symbol `m_v`; the grid is `pad` times the extent of the linear convolution.
pub fn sector_sum_with(
    net: &DirectionNet,
    j: i32,
    omega: &SphereFunction,
    b: &GridFunction,
    pad: f64,
    symbol: impl Fn(usize, f64, f64) -> f64,
) -> Result<GridFunction> {
    check_net(net, omega)?;
    let mesh = b.mesh();
    let kernel = build_kernel(j, omega, mesh)?;
    let out_rect = kernel.rect().minkowski(&b.rect());
    if out_rect.is_empty() {
        return Ok(GridFunction::zeros(mesh, out_rect));
    }
    let side = out_rect.width().max(out_rect.height());
    let p = fast_size((pad.max(1.0) * side as f64).ceil() as usize);
    let n = net.arc_count();

    let mut slices: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.len()];
    let kr = kernel.rect();
    for (x, y, v) in kernel.nonzeros() {
        let arc = crate::sphere::arc_index(n, x as f64, y as f64);
        let at = ((y - kr.y0) as usize) * p + (x - kr.x0) as usize;
        slices[net.sector_of_arc[arc]].push((at, v));
    }

    let mut planner = FftPlanner::new();
    let mut acc = vec![Complex64::default(); p * p];
    let mut buf = vec![Complex64::default(); p * p];
    let live: Vec<usize> = (0..net.len()).filter(|&v| !slices[v].is_empty()).collect();
    for pair in live.chunks(2) {
        buf.iter_mut().for_each(|z| *z = Complex64::default());
        for &(at, v) in &slices[pair[0]] {
            buf[at].re = v;
        }
        if let Some(&v2) = pair.get(1) {
            for &(at, v) in &slices[v2] {
                buf[at].im = v;
            }
        }
        fft2(&mut planner, &mut buf, p, p, false);
        for ky in 0..p {
            let fy = signed_bin(ky, p);
            let ny = (p - ky) % p;
            for kx in 0..p {
                let nx = (p - kx) % p;
                let z = buf[ky * p + kx];
                let zc = buf[ny * p + nx].conj();
                let fx = signed_bin(kx, p);
                let first = (z + zc) * 0.5;
                acc[ky * p + kx] += first * symbol(pair[0], fx, fy);
                if let Some(&v2) = pair.get(1) {
                    let second = (z - zc) * Complex64::new(0.0, -0.5);
                    acc[ky * p + kx] += second * symbol(v2, fx, fy);
                }
            }
        }
    }

    let mut bh = padded(b, p, p, 0, 0);
    fft2(&mut planner, &mut bh, p, p, false);
    for (a, z) in acc.iter_mut().zip(&bh) {
        *a *= z;
    }
    fft2(&mut planner, &mut acc, p, p, true);
    let scale = b.cell_area() / (p * p) as f64;
    let rect = Rect::new(out_rect.x0, out_rect.y0, out_rect.x0 + p as i64, out_rect.y0 + p as i64);
    let mut out = GridFunction::zeros(mesh, rect);
    for (o, v) in out.samples_mut().iter_mut().zip(&acc) {
        *o = v.re * scale;
    }
    Ok(out)
}

/// `‖Σ_v (I − G_v) T_j^v b‖₁ / ‖b‖₁`.
pub fn complement_l1_ratio(
    net: &DirectionNet,
    j: i32,
    omega: &SphereFunction,
    b: &GridFunction,
    pad: f64,
) -> Result<f64> {
    let bl1 = b.l1_norm();
    if bl1 == 0.0 {
        return Ok(0.0);
    }
    let sharp = net.sharpness();
    let dirs: Vec<(f64, f64)> = net.centers.iter().map(|a| (a.cos(), a.sin())).collect();
    let out = sector_sum_with(net, j, omega, b, pad, |v, x, y| {
        let r = x.hypot(y);
        if r == 0.0 {
            return 0.0;
        }
        let t = sharp * (dirs[v].0 * x + dirs[v].1 * y) / r;
        if t.abs() >= 4.0 {
            1.0
        } else if t.abs() <= 2.0 {
            0.0
        } else {
            1.0 - cutoff(t)
        }
    })?;
    Ok(out.l1_norm() / bl1)
}
