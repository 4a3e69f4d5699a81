//! Uncoded BER model `ψ = (a / log₂M) · Q(√(b · SNR))` and its inverses.
//!
//! Under a quasi-static channel every symbol of a stream sees the same
//! SNR, so a single `ψᵢ` describes all of the stream's bits.

use serde::{Deserialize, Serialize};

use crate::channel::{snr, ChannelState};
use crate::error::{Error, Result};
use crate::numerics::{normal_pdf, q_function, q_inverse};

/// Smallest BER handed to `Q⁻¹`; lower targets are raised to this value.
pub const MIN_BER: f64 = 1e-15;

/// Upper clamp on any BER: a coin flip.
pub const MAX_BER: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationScheme {
    pub name: String,
    /// Constellation size, a power of two.
    #[serde(rename = "M")]
    pub order: u32,
    pub a: f64,
    pub b: f64,
}

impl ModulationScheme {
    pub fn new(name: impl Into<String>, order: u32, a: f64, b: f64) -> Result<Self> {
        let scheme = Self {
            name: name.into(),
            order,
            a,
            b,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    /// Antipodal signalling, exact: `ψ = Q(√(2·SNR))`.
    pub fn bpsk() -> Self {
        Self {
            name: "bpsk".into(),
            order: 2,
            a: 1.0,
            b: 2.0,
        }
    }

    /// Rectangular 4×2 Gray-mapped 8-QAM.
    ///
    /// With unit average energy the grid step is `2/√6`; the 4-level axis
    /// carries two bits with per-bit nearest-neighbour error `(3/4)·Q(·)`
    /// and the 2-level axis one bit with `Q(·)`, so averaged over three
    /// bits `ψ ≈ (5/6)·Q(√(SNR/3))`, i.e. `a = 2.5`, `b = 1/3`.
    pub fn qam8() -> Self {
        Self {
            name: "8qam".into(),
            order: 8,
            a: 2.5,
            b: 1.0 / 3.0,
        }
    }

    /// Square Gray-mapped 16-QAM, `a = 4(1 − 1/√M)`, `b = 3/(M − 1)`.
    pub fn qam16() -> Self {
        Self::square_qam(16).expect("16 is an even power of two")
    }

    /// Square Gray-mapped M-QAM for `M = 4, 16, 64, ...`.
    pub fn square_qam(order: u32) -> Result<Self> {
        let k = order.trailing_zeros();
        if order < 4 || !order.is_power_of_two() || !k.is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "square QAM needs an even power of two, got {order}"
            )));
        }
        let m = order as f64;
        Ok(Self {
            name: format!("{order}qam"),
            order,
            a: 4.0 * (1.0 - 1.0 / m.sqrt()),
            b: 3.0 / (m - 1.0),
        })
    }

    /// Looks up a named preset (`bpsk`, `8qam`, `16qam`, or any square
    /// `<M>qam`).
    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::bpsk()),
            "8qam" | "8-qam" => Ok(Self::qam8()),
            other => {
                let digits = other.trim_end_matches("qam").trim_end_matches('-');
                match digits.parse::<u32>() {
                    Ok(m) if other.ends_with("qam") => Self::square_qam(m),
                    _ => Err(Error::Precondition(format!("unknown modulation '{name}'"))),
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || !self.order.is_power_of_two() {
            return Err(Error::Precondition(format!(
                "modulation order must be a power of two >= 2, got {}",
                self.order
            )));
        }
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Precondition(format!(
                "BER coefficients must be positive (a = {}, b = {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    /// Ratio `log₂M / a` that maps a BER to the `Q` argument.
    fn ber_scale(&self) -> f64 {
        self.bits_per_symbol() as f64 / self.a
    }

    /// BER at zero SNR; the upper end of the invertible branch.
    pub fn max_ber(&self) -> f64 {
        MAX_BER.min(0.5 / self.ber_scale())
    }
}

/// `min(0.5, (a/log₂M)·Q(√(b·snr)))`.
pub fn ber_from_snr(m: &ModulationScheme, snr: f64) -> f64 {
    let snr = snr.max(0.0);
    (q_function((m.b * snr).sqrt()) / m.ber_scale()).min(MAX_BER)
}

/// Inverse of [`ber_from_snr`] on the open branch `0 < ψ < max_ber`.
pub fn snr_from_ber(m: &ModulationScheme, psi: f64) -> Result<f64> {
    if !(psi > 0.0 && psi < m.max_ber()) {
        return Err(Error::Domain(format!(
            "BER {psi} is outside the invertible range (0, {}) of {}",
            m.max_ber(),
            m.name
        )));
    }
    let x = q_inverse(psi * m.ber_scale())?;
    Ok(x * x / m.b)
}

/// Checks `psi` and maps it onto the `Q` argument, or `None` when the BER
/// sits at (or rounds onto) the zero-power end of the branch.
fn q_argument(m: &ModulationScheme, psi: f64) -> Result<Option<f64>> {
    let top = m.max_ber();
    if !(psi >= 0.0 && psi <= top * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "BER {psi} is outside [0, {top}] for {}",
            m.name
        )));
    }
    let arg = psi.max(MIN_BER) * m.ber_scale();
    if arg >= 0.5 {
        Ok(None)
    } else {
        Ok(Some(arg))
    }
}

/// Per-symbol power that yields BER `psi`:
/// `q = σ²/(b|h|²) · (Q⁻¹(ψ·log₂M/a))²`.
///
/// BERs below [`MIN_BER`] are raised to it; the top of the branch maps to
/// zero power.
pub fn power_from_ber(m: &ModulationScheme, state: &ChannelState, psi: f64) -> Result<f64> {
    match q_argument(m, psi)? {
        None => Ok(0.0),
        Some(arg) => {
            let x = q_inverse(arg)?;
            Ok(state.noise_w / (m.b * state.gain) * x * x)
        }
    }
}

/// `dq/dψ` of [`power_from_ber`]; negative on the interior of the branch.
pub fn power_ber_slope(m: &ModulationScheme, state: &ChannelState, psi: f64) -> Result<f64> {
    match q_argument(m, psi)? {
        None => Ok(0.0),
        Some(arg) => {
            let x = q_inverse(arg)?;
            let c = state.noise_w / (m.b * state.gain);
            // d Q⁻¹(p)/dp = −1/φ(Q⁻¹(p))
            Ok(-2.0 * c * x * m.ber_scale() / normal_pdf(x))
        }
    }
}

/// BER produced by per-symbol power `q` on `state`.
pub fn ber_from_power(m: &ModulationScheme, state: &ChannelState, q: f64) -> f64 {
    ber_from_snr(m, snr(q, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn bpsk_examples() {
        let m = ModulationScheme::bpsk();
        assert_eq!(ber_from_snr(&m, 0.0), 0.5);
        let oracle = q_function(20f64.sqrt());
        assert!(rel(oracle, 3.88e-6) < 0.01);
        assert!(rel(ber_from_snr(&m, 10.0), oracle) < 1e-14);
    }

    #[test]
    fn qam16_examples() {
        let m = ModulationScheme::qam16();
        assert_eq!(m.a, 3.0);
        assert!((m.b - 0.2).abs() < 1e-15);
        let psi = ber_from_snr(&m, 100.0);
        assert!(rel(psi, 2.91e-6) < 0.01);
        assert!(rel(psi, 0.75 * q_function(20f64.sqrt())) < 1e-12);
        assert_eq!(m.max_ber(), 0.375);
        assert!(matches!(snr_from_ber(&m, 0.4), Err(Error::Domain(_))));
    }

    #[test]
    fn snr_inversion() {
        let m = ModulationScheme::bpsk();
        let s = snr_from_ber(&m, 0.5 - 1e-9).unwrap();
        assert!(s > 0.0 && s < 1e-16);
        let s = snr_from_ber(&m, 3.88e-6).unwrap();
        assert!(rel(s, 10.0) < 0.005);
        assert!(snr_from_ber(&m, 0.0).is_err());
        assert!(snr_from_ber(&m, 0.5).is_err());
    }

    #[test]
    fn power_examples() {
        let m = ModulationScheme::bpsk();
        let state = ChannelState::deterministic(&ChannelParams::default()).unwrap();
        assert_eq!(power_from_ber(&m, &state, 0.5).unwrap(), 0.0);
        let q = power_from_ber(&m, &state, 3.88e-6).unwrap();
        assert!(rel(q, 6.31e-4) < 0.01, "q = {q}");
        let weak = ChannelState::from_gain(state.gain / 2.0, state.noise_w).unwrap();
        let q2 = power_from_ber(&m, &weak, 3.88e-6).unwrap();
        assert!(rel(q2, 2.0 * q) < 1e-14);
        let qam = ModulationScheme::qam16();
        assert_eq!(power_from_ber(&qam, &state, 0.375).unwrap(), 0.0);
        assert!(power_from_ber(&qam, &state, 0.4).is_err());
        // Zero BER is raised to the floor rather than diverging.
        let floor = power_from_ber(&m, &state, 0.0).unwrap();
        assert_eq!(floor, power_from_ber(&m, &state, MIN_BER).unwrap());
    }

    #[test]
    fn slope_matches_central_difference() {
        let state = ChannelState::deterministic(&ChannelParams::default()).unwrap();
        for m in [ModulationScheme::bpsk(), ModulationScheme::qam8(), ModulationScheme::qam16()] {
            for psi in [1e-6, 1e-4, 1e-2, 0.1] {
                let h = psi * 1e-5;
                let fd = (power_from_ber(&m, &state, psi + h).unwrap()
                    - power_from_ber(&m, &state, psi - h).unwrap())
                    / (2.0 * h);
                let an = power_ber_slope(&m, &state, psi).unwrap();
                assert!(an < 0.0);
                assert!(rel(an, fd) < 1e-6, "{} psi {psi}: {an} vs {fd}", m.name);
            }
        }
    }

    #[test]
    fn presets() {
        assert_eq!(ModulationScheme::preset("BPSK").unwrap(), ModulationScheme::bpsk());
        assert_eq!(ModulationScheme::preset("8qam").unwrap(), ModulationScheme::qam8());
        assert_eq!(ModulationScheme::preset("16qam").unwrap(), ModulationScheme::qam16());
        assert_eq!(ModulationScheme::preset("64qam").unwrap().order, 64);
        assert!(ModulationScheme::preset("32qam").is_err());
        assert!(ModulationScheme::preset("fsk").is_err());
        assert!(ModulationScheme::new("x", 6, 1.0, 1.0).is_err());
        assert!(ModulationScheme::new("x", 4, 0.0, 1.0).is_err());
    }

    fn scheme() -> impl Strategy<Value = ModulationScheme> {
        (1u32..7, 0.5f64..4.0, 0.05f64..3.0)
            .prop_map(|(k, a, b)| ModulationScheme::new("custom", 1 << k, a, b).unwrap())
    }

    proptest! {
        #[test]
        fn ber_round_trip(m in scheme(), frac in 1e-6f64..0.999, log_psi in -12.0f64..0.0) {
            let psi = (10f64.powf(log_psi) * frac).min(m.max_ber() * 0.999);
            let s = snr_from_ber(&m, psi).unwrap();
            prop_assert!(rel(ber_from_snr(&m, s), psi) < 1e-9);
        }

        #[test]
        fn ber_decreases_with_power(m in scheme(), q in 1e-6f64..1e-2, bump in 1.001f64..3.0) {
            let state = ChannelState::deterministic(&ChannelParams::default()).unwrap();
            let lo = ber_from_power(&m, &state, q);
            let hi = ber_from_power(&m, &state, q * bump);
            prop_assert!(hi <= lo);
            if lo < m.max_ber() && lo > 1e-300 {
                prop_assert!(hi < lo);
            }
        }
    }

    #[test]
    fn power_vanishes_at_branch_top() {
        let state = ChannelState::deterministic(&ChannelParams::default()).unwrap();
        let m = ModulationScheme::qam16();
        let mut prev = f64::INFINITY;
        for k in 1..=20 {
            let psi = m.max_ber() * (1.0 - 0.5f64.powi(k));
            let q = power_from_ber(&m, &state, psi).unwrap();
            assert!(q < prev);
            prev = q;
        }
        assert!(prev < 1e-9 * power_from_ber(&m, &state, 1e-3).unwrap());
    }
}
