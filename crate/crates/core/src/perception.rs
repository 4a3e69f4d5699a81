//! Perception-error surface and semantic values.
//!
//! The perceptual error of the regenerated image is modelled by the
//! saturating family
//!
//! ```text
//! P(ψ₁, ψ₂) = pmax − (pmax − p0) · exp(−(ψ₁/τ₁)^β₁ − (ψ₂/τ₂)^β₂)
//! ```
//!
//! which is non-decreasing in each BER by construction. A single-stream
//! curve `Pᵢ(ψ)` has the same shape in one variable; its value at zero BER
//! fixes the stream's semantic value `Lᵢ = 1 − Pᵢ(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::MAX_BER;
use crate::numerics::{bisect_root, nelder_mead_minimize, ToleranceConfig};

/// Identifier stored alongside fitted parameters.
pub const SURFACE_FAMILY: &str = "exp-power-sum";

/// Slack used when deciding whether a target lies on a boundary.
const LEVEL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceParams {
    pub p0: f64,
    pub pmax: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for SurfaceParams {
    /// Bundled surface: prompt stream (index 1) tolerates about five
    /// times the BER of the edge-map stream (index 2).
    fn default() -> Self {
        Self {
            p0: 0.30,
            pmax: 0.95,
            tau1: 5e-3,
            tau2: 1e-3,
            beta1: 1.0,
            beta2: 1.0,
        }
    }
}

impl SurfaceParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.p0, self.pmax, self.tau1, self.tau2, self.beta1, self.beta2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("surface parameters must be finite".into()));
        }
        if !(0.0 <= self.p0 && self.p0 < self.pmax && self.pmax <= 1.0) {
            return Err(Error::Precondition(format!(
                "need 0 <= p0 < pmax <= 1, got p0 = {}, pmax = {}",
                self.p0, self.pmax
            )));
        }
        if self.tau1 <= 0.0 || self.tau2 <= 0.0 || self.beta1 <= 0.0 || self.beta2 <= 0.0 {
            return Err(Error::Precondition(
                "decay scales and shape exponents must be positive".into(),
            ));
        }
        Ok(())
    }

    fn exponent(&self, psi1: f64, psi2: f64) -> f64 {
        (psi1 / self.tau1).powf(self.beta1) + (psi2 / self.tau2).powf(self.beta2)
    }

    /// Closed form without domain checks.
    pub fn value(&self, psi1: f64, psi2: f64) -> f64 {
        let rise = -(-self.exponent(psi1, psi2)).exp_m1();
        (self.p0 + (self.pmax - self.p0) * rise).min(self.pmax)
    }

    fn as_vector(&self) -> [f64; 6] {
        [self.p0, self.pmax, self.tau1, self.tau2, self.beta1, self.beta2]
    }
}

fn check_ber(psi: f64) -> Result<()> {
    if (0.0..=MAX_BER).contains(&psi) {
        Ok(())
    } else {
        Err(Error::Domain(format!("BER {psi} is outside [0, 0.5]")))
    }
}

/// `P(ψ₁, ψ₂)` on `[0, 0.5]²`.
pub fn eval_surface(s: &SurfaceParams, psi1: f64, psi2: f64) -> Result<f64> {
    check_ber(psi1)?;
    check_ber(psi2)?;
    Ok(s.value(psi1, psi2))
}

/// Analytic `(∂P/∂ψ₁, ∂P/∂ψ₂)`.
///
/// Singular at `ψᵢ = 0` when `βᵢ < 1`.
pub fn surface_partials(s: &SurfaceParams, psi1: f64, psi2: f64) -> Result<(f64, f64)> {
    check_ber(psi1)?;
    check_ber(psi2)?;
    let scale = (s.pmax - s.p0) * (-s.exponent(psi1, psi2)).exp();
    let d = |psi: f64, tau: f64, beta: f64, which: usize| -> Result<f64> {
        if psi == 0.0 {
            return if beta < 1.0 {
                Err(Error::Singularity(format!(
                    "dP/dpsi{which} diverges at psi{which} = 0 with beta{which} = {beta} < 1"
                )))
            } else if beta == 1.0 {
                Ok(scale / tau)
            } else {
                Ok(0.0)
            };
        }
        Ok(scale * beta / tau * (psi / tau).powf(beta - 1.0))
    };
    Ok((d(psi1, s.tau1, s.beta1, 1)?, d(psi2, s.tau2, s.beta2, 2)?))
}

/// Single-stream perception curve `Pᵢ(ψ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamCurve {
    /// Perception value from the error-free stream alone.
    pub p0: f64,
    pub pmax: f64,
    pub tau: f64,
    pub beta: f64,
}

impl StreamCurve {
    /// Textual-prompt stream, `L₁ = 0.5887`.
    pub fn prompt() -> Self {
        Self {
            p0: 0.4113,
            pmax: 0.95,
            tau: 5e-3,
            beta: 1.0,
        }
    }

    /// Edge-map stream, `L₂ = 0.3596`.
    pub fn edge() -> Self {
        Self {
            p0: 0.6404,
            pmax: 0.95,
            tau: 1e-3,
            beta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.p0, self.pmax, self.tau, self.beta].iter().all(|v| v.is_finite()) {
            return Err(Error::Precondition("curve parameters must be finite".into()));
        }
        // p0 = pmax = 1 is the degenerate "worthless stream".
        if !(0.0 <= self.p0 && self.p0 <= self.pmax && self.pmax <= 1.0)
            || (self.p0 == self.pmax && self.p0 != 1.0)
        {
            return Err(Error::Precondition(format!(
                "need 0 <= p0 < pmax <= 1, got p0 = {}, pmax = {}",
                self.p0, self.pmax
            )));
        }
        if self.tau <= 0.0 || self.beta <= 0.0 {
            return Err(Error::Precondition("tau and beta must be positive".into()));
        }
        Ok(())
    }

    pub fn value(&self, psi: f64) -> f64 {
        let rise = -(-(psi / self.tau).powf(self.beta)).exp_m1();
        (self.p0 + (self.pmax - self.p0) * rise).min(self.pmax)
    }

    /// BER at which the curve reaches `p`, for `p ∈ [p0, pmax)`. Not capped
    /// at 0.5.
    pub fn inverse(&self, p: f64) -> Result<f64> {
        if !(p >= self.p0 && p < self.pmax) {
            return Err(Error::Domain(format!(
                "perception value {p} is outside the curve's range [{}, {})",
                self.p0, self.pmax
            )));
        }
        let decay = -(-(p - self.p0) / (self.pmax - self.p0)).ln_1p();
        Ok(self.tau * decay.max(0.0).powf(1.0 / self.beta))
    }
}

/// `Lᵢ = 1 − Pᵢ(0)`.
pub fn semantic_value_transmitted(c: &StreamCurve) -> f64 {
    1.0 - c.p0
}

/// `L̂ᵢ(ψ) = 1 − Pᵢ(ψ)`.
pub fn semantic_value_received(c: &StreamCurve, psi: f64) -> Result<f64> {
    check_ber(psi)?;
    Ok(1.0 - c.value(psi))
}

/// Observed `(ψ₁, ψ₂, P)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub psi1: f64,
    pub psi2: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    pub rows: Vec<Sample>,
}

/// Number of free parameters in the surface family.
pub const SURFACE_PARAM_COUNT: usize = 6;

impl SampleSet {
    pub fn new(rows: Vec<Sample>) -> Result<Self> {
        let set = Self { rows };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() < SURFACE_PARAM_COUNT {
            return Err(Error::Precondition(format!(
                "need at least {SURFACE_PARAM_COUNT} samples to fit, got {}",
                self.rows.len()
            )));
        }
        for (i, r) in self.rows.iter().enumerate() {
            let ok = (0.0..=MAX_BER).contains(&r.psi1)
                && (0.0..=MAX_BER).contains(&r.psi2)
                && (0.0..=1.0).contains(&r.p);
            if !ok {
                return Err(Error::Precondition(format!(
                    "sample {} out of domain: ({}, {}, {})",
                    i + 1,
                    r.psi1,
                    r.psi2,
                    r.p
                )));
            }
        }
        Ok(())
    }

    /// Samples of `s` on the Cartesian product of the two BER grids.
    pub fn tabulate(s: &SurfaceParams, psi1: &[f64], psi2: &[f64]) -> Self {
        let rows = psi1
            .iter()
            .flat_map(|&a| {
                psi2.iter().map(move |&b| Sample {
                    psi1: a,
                    psi2: b,
                    p: s.value(a, b),
                })
            })
            .collect();
        Self { rows }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFit {
    pub params: SurfaceParams,
    pub rmse: f64,
    pub n_samples: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

// Unconstrained coordinates: logit(p0), logit of pmax's position in
// (p0, 1], and logs of the four positive scales.
fn to_unconstrained(s: &SurfaceParams) -> Vec<f64> {
    vec![
        logit(s.p0),
        logit((s.pmax - s.p0) / (1.0 - s.p0)),
        s.tau1.ln(),
        s.tau2.ln(),
        s.beta1.ln(),
        s.beta2.ln(),
    ]
}

fn from_unconstrained(t: &[f64]) -> SurfaceParams {
    let p0 = logistic(t[0]);
    SurfaceParams {
        p0,
        pmax: p0 + (1.0 - p0) * logistic(t[1]),
        tau1: t[2].exp(),
        tau2: t[3].exp(),
        beta1: t[4].exp(),
        beta2: t[5].exp(),
    }
}

fn sse(s: &SurfaceParams, data: &SampleSet) -> f64 {
    data.rows
        .iter()
        .map(|r| {
            let e = s.value(r.psi1, r.psi2) - r.p;
            e * e
        })
        .sum()
}

/// Default stopping rule for [`fit_surface`].
pub fn fit_tolerance() -> ToleranceConfig {
    ToleranceConfig {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_iter: 60_000,
    }
}

/// Least-squares fit of the surface family, starting from `init`.
pub fn fit_surface(data: &SampleSet, init: &SurfaceParams) -> Result<SurfaceFit> {
    fit_surface_with(data, init, &fit_tolerance())
}

pub fn fit_surface_with(
    data: &SampleSet,
    init: &SurfaceParams,
    tol: &ToleranceConfig,
) -> Result<SurfaceFit> {
    data.validate()?;
    init.validate()?;
    let start = to_unconstrained(init);
    let min = nelder_mead_minimize(|t| sse(&from_unconstrained(t), data), &start, tol)?;
    let params = from_unconstrained(&min.point);
    Ok(SurfaceFit {
        params,
        rmse: (min.value / data.rows.len() as f64).sqrt(),
        n_samples: data.rows.len(),
        iterations: min.iterations,
        converged: min.converged,
    })
}

/// Observed `(ψ, P)` pairs for a single-stream curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub psi: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFit {
    pub curve: StreamCurve,
    pub rmse: f64,
    pub n_samples: usize,
    pub converged: bool,
}

/// Least-squares fit of a single-stream curve, in the same unconstrained
/// coordinates as [`fit_surface`].
pub fn fit_stream_curve(data: &[CurveSample], init: &StreamCurve) -> Result<CurveFit> {
    if data.len() < 4 {
        return Err(Error::Precondition(format!(
            "need at least 4 samples to fit a curve, got {}",
            data.len()
        )));
    }
    if let Some((i, r)) = data
        .iter()
        .enumerate()
        .find(|(_, r)| !((0.0..=MAX_BER).contains(&r.psi) && (0.0..=1.0).contains(&r.p)))
    {
        return Err(Error::Precondition(format!(
            "sample {} out of domain: ({}, {})",
            i + 1,
            r.psi,
            r.p
        )));
    }
    init.validate()?;
    let decode = |t: &[f64]| {
        let p0 = logistic(t[0]);
        StreamCurve {
            p0,
            pmax: p0 + (1.0 - p0) * logistic(t[1]),
            tau: t[2].exp(),
            beta: t[3].exp(),
        }
    };
    let start = [
        logit(init.p0),
        logit((init.pmax - init.p0) / (1.0 - init.p0)),
        init.tau.ln(),
        init.beta.ln(),
    ];
    let objective = |t: &[f64]| {
        let c = decode(t);
        data.iter().map(|r| (c.value(r.psi) - r.p).powi(2)).sum::<f64>()
    };
    let min = nelder_mead_minimize(objective, &start, &fit_tolerance())?;
    Ok(CurveFit {
        curve: decode(&min.point),
        rmse: (min.value / data.len() as f64).sqrt(),
        n_samples: data.len(),
        converged: min.converged,
    })
}

/// Largest relative deviation between two parameter sets.
pub fn max_relative_difference(a: &SurfaceParams, b: &SurfaceParams) -> f64 {
    a.as_vector()
        .iter()
        .zip(b.as_vector())
        .map(|(x, y)| ((x - y) / y).abs())
        .fold(0.0, f64::max)
}

/// Per-stream upper BER limits for constraint-line searches.
pub const FULL_BER_BOX: [f64; 2] = [MAX_BER, MAX_BER];

/// `ψ₂` with `P(ψ₁, ψ₂) = P̄`, searched on `[0, 0.5]`.
pub fn solve_psi2_on_constraint(s: &SurfaceParams, psi1: f64, target: f64) -> Result<f64> {
    solve_psi2_within(s, psi1, target, MAX_BER)
}

/// As [`solve_psi2_on_constraint`], with `ψ₂` restricted to `[0, psi2_max]`.
pub fn solve_psi2_within(s: &SurfaceParams, psi1: f64, target: f64, psi2_max: f64) -> Result<f64> {
    check_ber(psi1)?;
    let low = s.value(psi1, 0.0);
    let high = s.value(psi1, psi2_max);
    if target < low - LEVEL_SLACK || target > high + LEVEL_SLACK || target.is_nan() {
        return Err(Error::Infeasible { target, low, high });
    }
    if target <= low {
        return Ok(0.0);
    }
    if target >= high {
        return Ok(psi2_max);
    }
    bisect_root(
        |psi2| s.value(psi1, psi2) - target,
        0.0,
        psi2_max,
        &ToleranceConfig::tight(),
    )
}

/// Ends of the level set `P = P̄` inside the BER box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintLine {
    /// Smallest feasible `ψ₁` and the matching (largest) `ψ₂`.
    pub left: (f64, f64),
    /// Largest feasible `ψ₁` and the matching (smallest) `ψ₂`.
    pub right: (f64, f64),
}

/// Open interval of targets with a non-degenerate constraint line.
pub fn achievable_range(s: &SurfaceParams, caps: [f64; 2]) -> (f64, f64) {
    (s.p0, s.value(caps[0], caps[1]))
}

pub fn constraint_line_endpoints(s: &SurfaceParams, target: f64) -> Result<ConstraintLine> {
    constraint_line_within(s, target, FULL_BER_BOX)
}

/// Constraint-line ends with `ψᵢ ≤ caps[i]`.
pub fn constraint_line_within(s: &SurfaceParams, target: f64, caps: [f64; 2]) -> Result<ConstraintLine> {
    s.validate()?;
    let (low, high) = achievable_range(s, caps);
    if !(target > low && target < high) {
        return Err(Error::Infeasible { target, low, high });
    }
    let tight = ToleranceConfig::tight();

    let left = if s.value(0.0, caps[1]) >= target {
        (0.0, solve_psi2_within(s, 0.0, target, caps[1])?)
    } else {
        let psi1 = bisect_root(|x| s.value(x, caps[1]) - target, 0.0, caps[0], &tight)?;
        (psi1, caps[1])
    };
    let right = if s.value(caps[0], 0.0) <= target {
        (caps[0], solve_psi2_within(s, caps[0], target, caps[1])?)
    } else {
        let psi1 = bisect_root(|x| s.value(x, 0.0) - target, 0.0, caps[0], &tight)?;
        (psi1, 0.0)
    };
    Ok(ConstraintLine { left, right })
}

/// `dψ₂/dψ₁ = −(∂P/∂ψ₁)/(∂P/∂ψ₂)` along the level set through `(ψ₁, ψ₂)`.
pub fn constraint_slope(s: &SurfaceParams, psi1: f64, psi2: f64) -> Result<f64> {
    let (d1, d2) = surface_partials(s, psi1, psi2)?;
    if d2 == 0.0 {
        return Err(Error::Singularity(format!(
            "dP/dpsi2 vanishes at ({psi1}, {psi2}); the level set is vertical"
        )));
    }
    Ok(-d1 / d2)
}
