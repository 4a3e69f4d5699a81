use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::{bisect_root, ToleranceConfig};
use crate::error::{Error, Result};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x) = erfc(x/√2)/2`.
///
/// `erfc` is the fdlibm rational/asymptotic approximation (via `libm`),
/// accurate to about one ulp, so `Q` keeps full relative precision deep
/// into the upper tail. It underflows to zero only past `x ≈ 38`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

// Acklam's rational approximation to the normal quantile, |rel err| < 1.2e-9.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_671_010_173_382,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.02425;

/// Seed for `Q⁻¹(p)` with `p ≤ 0.5`, returned as a non-negative abscissa.
fn acklam_upper_tail(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        let num = ((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5];
        let den = (((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0;
        // num/den is Φ⁻¹(p), negative in the lower tail.
        -num / den
    } else {
        let q = p - 0.5;
        let r = q * q;
        let num = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q;
        let den = ((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0;
        -num / den
    }
}

/// Inverse of [`q_function`] on the open unit interval.
///
/// A rational seed is polished with Newton steps on `Q(x) - p`; if those
/// fail to settle the routine falls back to bisection.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "Q^-1 requires 0 < p < 1, got {p}"
        )));
    }
    if p > 0.5 {
        // 1 - p is exact here (Sterbenz).
        return q_inverse(1.0 - p).map(|x| -x);
    }
    if p == 0.5 {
        return Ok(0.0);
    }

    let mut x = acklam_upper_tail(p);
    for _ in 0..50 {
        let density = normal_pdf(x);
        if density == 0.0 {
            break;
        }
        let residual = q_function(x) - p;
        let step = residual / density;
        x += step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(x);
        }
    }

    let tol = ToleranceConfig::tight();
    bisect_root(|t| q_function(t) - p, 0.0, 40.0, &tol)
}
