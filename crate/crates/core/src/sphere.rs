//! Angular part of a homogeneous kernel on the unit circle.
//!
//! A [`SphereFunction`] is piecewise constant on `arc_count` equal arcs of
//! `[0, 2π)`, arc `i` covering `[i·2π/N, (i+1)·2π/N)`. Every integral over the
//! circle is the midpoint rule on these arcs, which is exact for the
//! piecewise-constant representation.

use std::f64::consts::{LN_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default number of arcs (`2^10`).
pub const DEFAULT_ARC_COUNT: usize = 1 << 10;

#[derive(Clone, Debug, PartialEq)]
pub struct SphereFunction {
    values: Vec<f64>,
}

impl SphereFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::ArcCount(n));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sphere function values"));
        }
        Ok(Self { values })
    }

    pub fn zero(arc_count: usize) -> Result<Self> {
        Self::new(vec![0.0; arc_count])
    }

    /// Samples `f` at the arc midpoints.
    pub fn from_fn(arc_count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let w = TAU / arc_count as f64;
        Self::new((0..arc_count).map(|i| f((i as f64 + 0.5) * w)).collect())
    }

    pub fn arc_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn arc_width(&self) -> f64 {
        TAU / self.arc_count() as f64
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Index of the arc containing the direction of `(x, y)`; `(0, 0)` maps to arc 0.
    pub fn arc_index(&self, x: f64, y: f64) -> usize {
        arc_index(self.arc_count(), x, y)
    }

    /// `Ω(x/|x|)`; zero at the origin.
    pub fn eval_dir(&self, x: f64, y: f64) -> f64 {
        if x == 0.0 && y == 0.0 {
            return 0.0;
        }
        self.values[self.arc_index(x, y)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.arc_count() as f64
    }

    /// `∫ Ω dσ` by arc quadrature.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.arc_width()
    }

    /// `Ω − mean(Ω)`: the closest function satisfying the cancellation condition.
    pub fn project_cancellation(&self) -> Self {
        let mean = self.mean();
        self.map(|v| v - mean)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.arc_width()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ |Ω| log(2 + |Ω|) dσ`.
    pub fn llogl_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.abs() * (2.0 + v.abs()).ln())
            .sum::<f64>()
            * self.arc_width()
    }

    /// The strength constant `‖Ω‖_{L log L} + ∫|Ω|(1 + log⁺(|Ω|/‖Ω‖₁))`.
    ///
    /// Zero for the zero kernel.
    pub fn c_omega(&self) -> f64 {
        let l1 = self.l1_norm();
        if l1 == 0.0 {
            return 0.0;
        }
        let tail: f64 = self
            .values
            .iter()
            .map(|v| {
                let a = v.abs();
                let lp = if a > l1 { (a / l1).ln() } else { 0.0 };
                a * (1.0 + lp)
            })
            .sum::<f64>()
            * self.arc_width();
        self.llogl_norm() + tail
    }

    /// Threshold `2^{ηs}‖Ω‖₁` separating the large part from the bounded part.
    pub fn split_threshold(&self, s: u32, eta: f64) -> f64 {
        (eta * s as f64 * LN_2).exp() * self.l1_norm()
    }

    /// `(Ω₁, Ω₂)` with `Ω₁ = Ω·χ{|Ω| ≥ 2^{ηs}‖Ω‖₁}` and `Ω₂ = Ω − Ω₁`.
    ///
    /// A zero kernel splits into `(0, 0)`.
    pub fn split(&self, s: u32, eta: f64) -> (Self, Self) {
        let t = self.split_threshold(s, eta);
        if self.l1_norm() == 0.0 {
            return (self.map(|_| 0.0), self.clone());
        }
        let big = self.map(|v| if v.abs() >= t { v } else { 0.0 });
        let small = self.map(|v| if v.abs() < t { v } else { 0.0 });
        (big, small)
    }

    /// Restriction to the arcs flagged in `mask`.
    pub fn masked(&self, mask: &[bool]) -> Self {
        debug_assert_eq!(mask.len(), self.arc_count());
        Self {
            values: self
                .values
                .iter()
                .zip(mask)
                .map(|(&v, &keep)| if keep { v } else { 0.0 })
                .collect(),
        }
    }
}

/// Arc index of the direction of `(x, y)` for `n` equal arcs.
///
/// The lower half plane is mapped through the antipode, so `x` and `-x` always
/// land in arcs exactly `n/2` apart when `n ≥ 2`.
pub fn arc_index(n: usize, x: f64, y: f64) -> usize {
    if n >= 2 && (y < 0.0 || (y == 0.0 && x < 0.0)) {
        return arc_index(n, -x, -y) + n / 2;
    }
    let a = y.atan2(x).max(0.0);
    let i = (a / TAU * n as f64).floor() as usize;
    // y > 0 puts the true angle strictly inside (0, π)
    if n >= 2 && y > 0.0 {
        i.min(n / 2 - 1)
    } else {
        i.min(n - 1)
    }
}

/// Midpoint samples on the upper half circle, negated on the lower half.
fn odd_from_fn(arc_count: usize, f: impl Fn(f64) -> f64) -> Result<SphereFunction> {
    if arc_count < 2 {
        return SphereFunction::from_fn(arc_count, f);
    }
    let w = TAU / arc_count as f64;
    let half: Vec<f64> = (0..arc_count / 2).map(|i| f((i as f64 + 0.5) * w)).collect();
    SphereFunction::new(half.iter().copied().chain(half.iter().map(|v| -v)).collect())
}

/// Built-in kernel families accepted on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    Cos,
    Sin,
    /// Seeded ±1 per arc.
    Sign(u64),
    /// Seeded heavy-tailed values (symmetric Pareto, index 3/2).
    Random(u64),
    /// Explicit arc values; the arc count is the number of values.
    Arcs(Vec<f64>),
    Zero,
}

impl KernelSpec {
    pub fn build(&self, arc_count: usize, project: bool) -> Result<SphereFunction> {
        let raw = match self {
            KernelSpec::Cos => odd_from_fn(arc_count, f64::cos)?,
            KernelSpec::Sin => odd_from_fn(arc_count, f64::sin)?,
            KernelSpec::Sign(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                SphereFunction::new(
                    (0..arc_count)
                        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                        .collect(),
                )?
            }
            KernelSpec::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                SphereFunction::new(
                    (0..arc_count)
                        .map(|_| {
                            let u: f64 = 1.0 - rng.gen::<f64>();
                            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                            sign * u.powf(-2.0 / 3.0)
                        })
                        .collect(),
                )?
            }
            KernelSpec::Arcs(v) => SphereFunction::new(v.clone())?,
            KernelSpec::Zero => SphereFunction::zero(arc_count)?,
        };
        Ok(if project {
            raw.project_cancellation()
        } else {
            raw
        })
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::KernelSpec(s.to_string(), why.to_string());
        let seed = |t: &str| t.trim().parse::<u64>().map_err(|_| bad("seed must be a u64"));
        match s.trim() {
            "cos" => Ok(KernelSpec::Cos),
            "sin" => Ok(KernelSpec::Sin),
            "zero" => Ok(KernelSpec::Zero),
            t => match t.split_once(':') {
                Some(("sign", rest)) => Ok(KernelSpec::Sign(seed(rest)?)),
                Some(("random", rest)) => Ok(KernelSpec::Random(seed(rest)?)),
                Some(("arcs", rest)) => {
                    let v = rest
                        .split(',')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("arc values must be reals"))?;
                    if v.is_empty() || !v.len().is_power_of_two() {
                        return Err(bad("arc value count must be a power of two"));
                    }
                    Ok(KernelSpec::Arcs(v))
                }
                _ => Err(bad("expected cos, sin, zero, sign:<seed>, random:<seed> or arcs:<values>")),
            },
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Cos => write!(f, "cos"),
            KernelSpec::Sin => write!(f, "sin"),
            KernelSpec::Zero => write!(f, "zero"),
            KernelSpec::Sign(s) => write!(f, "sign:{s}"),
            KernelSpec::Random(s) => write!(f, "random:{s}"),
            KernelSpec::Arcs(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "arcs:{}", parts.join(","))
            }
        }
    }
}

/// Chord length between the unit vectors at angles `a` and `b`.
pub fn chord(a: f64, b: f64) -> f64 {
    2.0 * ((a - b) / 2.0).sin().abs()
}

/// Angle subtended by a chord of length `c` (`c ≤ 2`).
pub fn chord_to_angle(c: f64) -> f64 {
    2.0 * (c.min(2.0) / 2.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn projection_examples() {
        let c = SphereFunction::new(vec![3.0; 8]).unwrap().project_cancellation();
        assert!(c.values().iter().all(|&v| v == 0.0));

        let p = SphereFunction::new(vec![5.0, 1.0, 1.0, 1.0]).unwrap().project_cancellation();
        assert_eq!(p.values(), &[3.0, -1.0, -1.0, -1.0]);

        let cos = KernelSpec::Cos.build(1024, false).unwrap();
        let pc = cos.project_cancellation();
        for (a, b) in cos.values().iter().zip(pc.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn norms_of_constants_and_cos() {
        let z = SphereFunction::zero(16).unwrap();
        assert_eq!((z.l1_norm(), z.linf_norm(), z.llogl_norm(), z.c_omega()), (0.0, 0.0, 0.0, 0.0));

        let one = SphereFunction::new(vec![1.0; 64]).unwrap();
        assert!(close(one.l1_norm(), TAU, 1e-14));
        assert!(close(one.llogl_norm(), TAU * 3f64.ln(), 1e-14));
        assert!(close(one.c_omega(), TAU * (1.0 + 3f64.ln()), 1e-14));

        // ∫|cos| = 4, midpoint error O(N⁻²)
        for n in [64usize, 256, 1024] {
            let cos = KernelSpec::Cos.build(n, false).unwrap();
            let err = (cos.l1_norm() - 4.0).abs();
            assert!(err < 4.0 * (TAU / n as f64).powi(2), "n={n} err={err}");
        }
    }

    #[test]
    fn c_omega_single_spike_matches_direct_sum() {
        let mut v = vec![0.0; 16];
        v[5] = 1024.0;
        let om = SphereFunction::new(v.clone()).unwrap();
        // independent summation over the 16 arcs
        let w = TAU / 16.0;
        let l1: f64 = v.iter().map(|x: &f64| x.abs() * w).sum();
        let mut oracle = 0.0;
        for x in &v {
            let a = x.abs();
            oracle += a * (2.0 + a).ln() * w;
            let lp = if a / l1 > 1.0 { (a / l1).ln() } else { 0.0 };
            oracle += a * (1.0 + lp) * w;
        }
        assert!(close(om.c_omega(), oracle, 1e-14));
        assert!(om.c_omega() > om.llogl_norm());
    }

    #[test]
    fn split_examples() {
        let cos = KernelSpec::Cos.build(1024, true).unwrap();
        let (big, small) = cos.split(4, 0.1);
        assert!(big.is_zero());
        assert_eq!(small, cos);

        let mut v = vec![0.5; 16];
        v[0] = 100.0;
        v[1] = -100.0;
        v[2] = -0.25;
        let om = SphereFunction::new(v).unwrap();
        // threshold 8 = 2^{ηs}·‖Ω‖₁ with ηs chosen to hit it
        let l1 = om.l1_norm();
        let eta = (8.0 / l1).log2() / 3.0;
        let (big, small) = om.split(3, eta);
        assert!(close(om.split_threshold(3, eta), 8.0, 1e-12));
        let kept: Vec<usize> = (0..16).filter(|&i| big.values()[i] != 0.0).collect();
        assert_eq!(kept, vec![0, 1]);
        for i in 0..16 {
            assert_eq!(big.values()[i] + small.values()[i], om.values()[i]);
        }
    }

    #[test]
    fn zero_kernel_split() {
        let z = SphereFunction::zero(8).unwrap();
        let (a, b) = z.split(5, 0.05);
        assert!(a.is_zero() && b.is_zero());
    }

    #[test]
    fn arc_count_must_be_power_of_two() {
        assert_eq!(SphereFunction::new(vec![1.0; 6]), Err(Error::ArcCount(6)));
        assert!(SphereFunction::new(vec![f64::NAN; 4]).is_err());
    }

    #[test]
    fn kernel_spec_parsing() {
        assert_eq!("cos".parse::<KernelSpec>().unwrap(), KernelSpec::Cos);
        assert_eq!("sign:7".parse::<KernelSpec>().unwrap(), KernelSpec::Sign(7));
        assert_eq!(
            "arcs:5,1,1,1".parse::<KernelSpec>().unwrap(),
            KernelSpec::Arcs(vec![5.0, 1.0, 1.0, 1.0])
        );
        assert!("arcs:1,2,3".parse::<KernelSpec>().is_err());
        assert!("tan".parse::<KernelSpec>().is_err());
        let s = KernelSpec::Random(3);
        assert_eq!(s.to_string().parse::<KernelSpec>().unwrap(), s);
    }

    #[test]
    fn arc_index_boundaries() {
        assert_eq!(arc_index(4, 1.0, 0.0), 0);
        assert_eq!(arc_index(4, 0.0, 1.0), 1);
        assert_eq!(arc_index(4, -1.0, 0.0), 2);
        assert_eq!(arc_index(4, 0.0, -1.0), 3);
        assert_eq!(arc_index(4, 1.0, -1e-300), 3);
    }
}
