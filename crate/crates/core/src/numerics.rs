//! Numerical building blocks: globally adaptive Gauss–Kronrod quadrature,
//! golden-section search and bisection.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        // odd Kronrod indices coincide with the Gauss nodes
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integrator.
///
/// The interval with the largest error estimate is bisected until the summed
/// error falls below `max(abs_tol, rel_tol * |I|)`.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_segments: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-30,
            max_segments: 4000,
        }
    }
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrate over `[points[0], points[last]]`, starting from the given
    /// breakpoints. Breakpoints outside the span or out of order are ignored.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<f64> {
        if points.len() < 2 {
            return Ok(0.0);
        }
        let (lo, hi) = (points[0], points[points.len() - 1]);
        if lo == hi {
            return Ok(0.0);
        }
        let (sign, lo, hi) = if lo < hi { (1.0, lo, hi) } else { (-1.0, hi, lo) };
        let mut cuts: Vec<f64> = points
            .iter()
            .copied()
            .filter(|p| *p > lo && *p < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        let mut left = lo;
        for right in cuts.into_iter().chain(std::iter::once(hi)) {
            let (value, error) = gauss_kronrod_15(&f, left, right);
            total += value;
            total_err += error;
            heap.push(Segment {
                a: left,
                b: right,
                value,
                error,
            });
            left = right;
        }

        while total_err > self.abs_tol.max(self.rel_tol * total.abs()) {
            if heap.len() >= self.max_segments {
                return Err(Error::Quadrature {
                    estimate: sign * total,
                    error: total_err,
                });
            }
            let worst = heap.pop().expect("heap never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // interval exhausted at machine precision
                return Err(Error::Quadrature {
                    estimate: sign * total,
                    error: total_err,
                });
            }
            let (v1, e1) = gauss_kronrod_15(&f, worst.a, mid);
            let (v2, e2) = gauss_kronrod_15(&f, mid, worst.b);
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Segment {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }
        // resum to shed accumulated cancellation from the running updates
        let value: f64 = heap.iter().map(|s| s.value).sum();
        Ok(sign * value)
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
/// Returns `(x, f(x))` once the bracket is narrower than `tol`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Bisection root finder; `f(a)` and `f(b)` must bracket a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidArgument(format!(
            "bisection bracket [{a}, {b}] does not contain a sign change"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Err(Error::NonConvergence {
        what: "bisection",
        residual: (b - a).abs(),
    })
}

/// Fixed-step composite trapezoid rule, used as an independent check on the adaptive scheme.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(a + h * i as f64)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

/// Convert a linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let v = q.integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn sharp_exponential_converges() {
        let q = Quadrature::default();
        let v = q.integrate(|x| (-x / 0.01).exp(), 0.0, 50.0).unwrap();
        assert!((v / 0.01 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = Quadrature::default();
        let a = q.integrate(f64::sin, 0.0, 1.0).unwrap();
        let b = q.integrate(f64::sin, 1.0, 0.0).unwrap();
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn nonconvergence_reports_estimate() {
        let q = Quadrature {
            max_segments: 3,
            ..Quadrature::default()
        };
        let err = q.integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn adaptive_agrees_with_trapezoid() {
        let f = |x: f64| (x * 3.0).cos() * (-x).exp();
        let q = Quadrature::default().integrate(f, 0.0, 4.0).unwrap();
        let t = trapezoid(f, 0.0, 4.0, 200_000);
        assert!((q - t).abs() < 1e-9);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3).powi(2) + 2.0, -1.0, 4.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bisect_rejects_bad_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9).is_err());
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }
}
