//! Smooth radial partition of unity and the dyadic kernel pieces
//! `𝒦_j(x) = φ(2^{-j}x)·Ω(x/|x|)/|x|²` sampled on the lattice.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{mesh_h, GridFunction, Rect};
use crate::sphere::SphereFunction;

/// `exp(-1/t)` for `t > 0`, else 0.
fn bump_tail(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 1 for `t ≤ 0`, 0 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let a = bump_tail(1.0 - t);
    a / (a + bump_tail(t))
}

/// Shape of the radial profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileSpec {
    pub inner: f64,
    pub outer: f64,
}

impl ProfileSpec {
    pub const STANDARD: ProfileSpec = ProfileSpec { inner: 1.0 / 16.0, outer: 0.25 };

    /// Cutoff: 1 on `r ≤ 2·inner`, 0 on `r ≥ outer`.
    pub fn theta(&self, r: f64) -> f64 {
        let lo = 2.0 * self.inner;
        smooth_step((r - lo) / (self.outer - lo))
    }

    /// `θ(r) − θ(2r)`, supported in `(inner, outer)`.
    pub fn phi(&self, r: f64) -> f64 {
        self.theta(r) - self.theta(2.0 * r)
    }
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self::STANDARD
    }
}

pub fn theta(r: f64) -> f64 {
    ProfileSpec::STANDARD.theta(r)
}

/// `φ(x)` for a point `x = (x, y)`.
pub fn phi(x: f64, y: f64) -> f64 {
    ProfileSpec::STANDARD.phi(x.hypot(y))
}

/// Smallest level whose annulus inner radius `2^{j-4}` is at least `8h`.
pub fn min_resolvable_level(mesh: u32) -> i32 {
    7 - mesh as i32
}

pub fn check_resolvable(j: i32, mesh: u32) -> Result<()> {
    if j < min_resolvable_level(mesh) {
        return Err(Error::Unresolved { level: j, mesh });
    }
    Ok(())
}

/// Half-width in lattice points of the box holding every nonzero sample of
/// `𝒦_j`: samples satisfy `|i|, |l| ≤ 2^{j-2}/h − 1`.
pub fn kernel_reach(j: i32, mesh: u32) -> i64 {
    (1i64 << (j + mesh as i32 - 2)) - 1
}

/// Samples of `𝒦_j` on a box trimmed to the open annulus
/// `2^{j-4} < |x| < 2^{j-2}`.
pub fn build_kernel(j: i32, omega: &SphereFunction, mesh: u32) -> Result<GridFunction> {
    check_resolvable(j, mesh)?;
    let r = kernel_reach(j, mesh);
    let rect = Rect::new(-r, -r, r + 1, r + 1);
    let h = mesh_h(mesh);
    let scale = (-j as f64).exp2();
    let profile = ProfileSpec::STANDARD;
    let mut k = GridFunction::zeros(mesh, rect);
    if omega.is_zero() {
        return Ok(k);
    }
    for l in -r..=r {
        for i in -r..=r {
            if i == 0 && l == 0 {
                continue;
            }
            let (x, y) = (i as f64 * h, l as f64 * h);
            let rho2 = x * x + y * y;
            let p = profile.phi(rho2.sqrt() * scale);
            if p == 0.0 {
                continue;
            }
            let w = omega.eval_dir(x, y);
            if w != 0.0 {
                k.set(i, l, p * w / rho2);
            }
        }
    }
    Ok(k)
}

/// `𝒦_j` restricted to directions in the arcs flagged by `sector`.
pub fn build_kernel_slice(
    j: i32,
    omega: &SphereFunction,
    mesh: u32,
    sector: &[bool],
) -> Result<GridFunction> {
    if sector.len() != omega.arc_count() {
        return Err(Error::Config(format!(
            "sector mask has {} arcs, kernel has {}",
            sector.len(),
            omega.arc_count()
        )));
    }
    build_kernel(j, &omega.masked(sector), mesh)
}

/// Kernel samples as CSV `x,y,value` in real coordinates, nonzeros only.
pub fn kernel_csv(k: &GridFunction) -> String {
    let h = k.h();
    let mut s = String::from("x,y,value\n");
    for (i, l, v) in k.nonzeros() {
        let _ = writeln!(s, "{},{},{:e}", i as f64 * h, l as f64 * h, v);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::KernelSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn phi_support_bounds() {
        assert_eq!(phi((-5f64).exp2(), 0.0), 0.0);
        assert_eq!(phi(0.5, 0.0), 0.0);
        assert_eq!(phi(0.0625, 0.0), 0.0);
        assert_eq!(phi(0.0, 0.25), 0.0);
        assert!(phi(0.1, 0.05) > 0.0);
        for i in 0..1000 {
            let r = i as f64 / 2000.0;
            let v = phi(r, 0.0);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn telescoping_partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let r = rng.gen_range(-6.0f64..2.0).exp2();
            let a = rng.gen_range(0.0..2.0 * PI);
            let (x, y) = (r * a.cos(), r * a.sin());
            let sum: f64 = (-8..=8).map(|j| phi(x * (-j as f64).exp2(), y * (-j as f64).exp2())).sum();
            let oracle = theta((-8f64).exp2() * r) - theta(9f64.exp2() * r);
            assert!((sum - oracle).abs() < 1e-12);
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_step_is_monotone_and_symmetric() {
        let mut prev = 1.0;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let v = smooth_step(t);
            assert!(v <= prev);
            assert!((v + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
            prev = v;
        }
    }

    #[test]
    fn zero_kernel_and_resolvability() {
        let z = SphereFunction::zero(64).unwrap();
        assert!(build_kernel(0, &z, 8).unwrap().is_zero());
        let err = build_kernel(-2, &z, 8).unwrap_err();
        assert_eq!(err, Error::Unresolved { level: -2, mesh: 8 });
        assert!(err.to_string().contains("below mesh resolution"));
        assert!(build_kernel(-1, &z, 8).is_ok());
    }

    #[test]
    fn cos_kernel_is_odd() {
        let om = KernelSpec::Cos.build(1024, false).unwrap();
        let k = build_kernel(0, &om, 7).unwrap();
        let r = kernel_reach(0, 7);
        for l in -r..=r {
            for i in -r..=r {
                assert_eq!(k.get(-i, -l), -k.get(i, l));
            }
        }
    }

    #[test]
    fn support_in_open_annulus() {
        let om = KernelSpec::Random(3).build(256, true).unwrap();
        for mesh in [6u32, 8] {
            for j in min_resolvable_level(mesh)..=min_resolvable_level(mesh) + 2 {
                let k = build_kernel(j, &om, mesh).unwrap();
                let h = k.h();
                let (lo, hi) = ((j - 4) as f64, (j - 2) as f64);
                for (i, l, _) in k.nonzeros() {
                    let r = (i as f64 * h).hypot(l as f64 * h);
                    assert!(r > lo.exp2() && r < hi.exp2());
                }
                assert!(k.nonzero_count() > 0);
            }
        }
    }

    #[test]
    fn l1_norm_is_scale_invariant() {
        // ∫|𝒦_j| = ‖Ω‖₁·∫φ(r)/r dr = ‖Ω‖₁·ln 2
        let om = KernelSpec::Cos.build(1024, false).unwrap();
        let exact = om.l1_norm() * LN_2;
        let mesh = 9;
        let norms: Vec<f64> = (min_resolvable_level(mesh)..=1)
            .map(|j| build_kernel(j, &om, mesh).unwrap().l1_norm())
            .collect();
        for n in &norms {
            assert!((n / exact - 1.0).abs() < 0.02, "{n} vs {exact}");
        }
        let (lo, hi) = norms.iter().fold((f64::MAX, 0.0f64), |(a, b), &n| (a.min(n), b.max(n)));
        assert!(hi / lo < 1.02);
    }

    #[test]
    fn fine_grid_quadrature_agrees() {
        // ∫|𝒦_0| by polar quadrature, independent of the lattice
        let om = KernelSpec::Sign(5).build(64, false).unwrap();
        let (nr, na) = (4000, 64 * 16);
        let (r0, r1) = (1.0 / 16.0, 0.25);
        let dr = (r1 - r0) / nr as f64;
        let da = 2.0 * PI / na as f64;
        let mut q = 0.0;
        for a in 0..na {
            let t = (a as f64 + 0.5) * da;
            let w = om.eval_dir(t.cos(), t.sin()).abs();
            for i in 0..nr {
                let r = r0 + (i as f64 + 0.5) * dr;
                q += ProfileSpec::STANDARD.phi(r) / r * w * dr * da;
            }
        }
        let lattice = build_kernel(0, &om, 9).unwrap().l1_norm();
        assert!((lattice / q - 1.0).abs() < 0.02, "{lattice} vs {q}");
        assert!((q / (om.l1_norm() * LN_2) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn cancellation_transfers_to_lattice() {
        for spec in ["cos", "sign:4", "random:11"] {
            let om = spec.parse::<KernelSpec>().unwrap().build(64, true).unwrap();
            let mesh = 8;
            for j in min_resolvable_level(mesh)..=2 {
                let k = build_kernel(j, &om, mesh).unwrap();
                let bound = k.h() * (-j as f64).exp2() * om.l1_norm();
                let c = k.integral().abs() / bound;
                assert!(c < 4.0, "{spec} j={j}: C = {c}");
            }
        }
    }

    #[test]
    fn slices_partition_the_kernel() {
        let om = KernelSpec::Cos.build(256, false).unwrap();
        let full = vec![true; 256];
        let k = build_kernel(0, &om, 7).unwrap();
        assert_eq!(build_kernel_slice(0, &om, 7, &full).unwrap().samples(), k.samples());
        let left: Vec<bool> = (0..256).map(|i| i < 128).collect();
        let right: Vec<bool> = left.iter().map(|b| !b).collect();
        let a = build_kernel_slice(0, &om, 7, &left).unwrap();
        let b = build_kernel_slice(0, &om, 7, &right).unwrap();
        assert_eq!(a.add(&b).unwrap().max_abs_diff(&k), 0.0);
        assert!(build_kernel_slice(0, &om, 7, &left[..10]).is_err());
    }

    #[test]
    fn narrow_slice_sample_count() {
        let n = 1024;
        let om = SphereFunction::from_fn(n, |_| 1.0).unwrap();
        let k = build_kernel(1, &om, 8).unwrap();
        let total = k.nonzero_count() as f64;
        // width 2^{-sγ-2} with sγ = 2, centred at angle 1
        let width = 1.0 / 16.0;
        let arc = 2.0 * PI / n as f64;
        let mask: Vec<bool> = (0..n)
            .map(|i| {
                let mid = (i as f64 + 0.5) * arc;
                (mid - 1.0).abs() < width / 2.0
            })
            .collect();
        let slice = build_kernel_slice(1, &om, 8, &mask).unwrap();
        let covered = mask.iter().filter(|b| **b).count() as f64 * arc;
        let expect = covered / (2.0 * PI) * total;
        let got = slice.nonzero_count() as f64;
        assert!(got > expect / 2.0 && got < expect * 2.0, "{got} vs {expect}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let om = KernelSpec::Cos.build(64, false).unwrap();
        let k = build_kernel(0, &om, 7).unwrap();
        let csv = kernel_csv(&k);
        assert!(csv.starts_with("x,y,value\n"));
        assert_eq!(csv.lines().count(), k.nonzero_count() + 1);
    }
}
