//! Quasi-static Rayleigh channel with log-distance path loss.
//!
//! The power gain of stream `i` is `|hᵢ|² = h₀ (d/d₀)^(−α) |h̃ᵢ|²` with
//! `h̃ᵢ ~ CN(0, 1)`. The exponent `alpha` is stored as a *positive* number
//! and applied as `(d/d₀)^(−alpha)`, so `alpha = 3.4` at 100 m from a
//! 1 m reference with `h₀ = −30 dB` gives a total loss of −98 dB. A
//! negative exponent would make the gain grow with distance and is
//! rejected.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{rng_from_seed, RandomSeed, SimRng};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// Large-scale link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Path loss at the reference distance, dB.
    pub h0_db: f64,
    /// Link distance, metres.
    #[serde(rename = "d_m")]
    pub d: f64,
    /// Reference distance, metres.
    #[serde(rename = "d0_m")]
    pub d0: f64,
    /// Path-loss exponent, positive.
    pub alpha: f64,
    /// Noise power σ², dBm.
    pub noise_dbm: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            h0_db: -30.0,
            d: 100.0,
            d0: 1.0,
            alpha: 3.4,
            noise_dbm: -110.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [self.h0_db, self.d, self.d0, self.alpha, self.noise_dbm];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("channel parameters must be finite".into()));
        }
        if self.d <= 0.0 || self.d0 <= 0.0 {
            return Err(Error::Precondition(format!(
                "distances must be positive (d = {}, d0 = {})",
                self.d, self.d0
            )));
        }
        if self.alpha <= 0.0 {
            return Err(Error::Precondition(format!(
                "path-loss exponent must be positive (it is applied as (d/d0)^-alpha), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }
}

/// `h₀ (d/d₀)^(−α)` as a linear power ratio.
pub fn path_loss_linear(p: &ChannelParams) -> f64 {
    db_to_linear(p.h0_db) * (p.d / p.d0).powf(-p.alpha)
}

/// One realization of a stream's channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    /// `|hᵢ|²`, path loss times fading.
    pub gain: f64,
    /// `σᵢ²` in watts.
    pub noise_w: f64,
    /// `|h̃ᵢ|²`.
    pub fading: f64,
}

impl ChannelState {
    pub fn new(params: &ChannelParams, fading: f64) -> Result<Self> {
        params.validate()?;
        if !(fading > 0.0 && fading.is_finite()) {
            return Err(Error::Precondition(format!(
                "fading power must be positive, got {fading}"
            )));
        }
        Ok(Self {
            gain: path_loss_linear(params) * fading,
            noise_w: params.noise_watts(),
            fading,
        })
    }

    /// Channel with `|h̃|² = 1`.
    pub fn deterministic(params: &ChannelParams) -> Result<Self> {
        Self::new(params, 1.0)
    }

    /// Directly specified gain and noise, bypassing the path-loss model.
    pub fn from_gain(gain: f64, noise_w: f64) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite() && noise_w > 0.0 && noise_w.is_finite()) {
            return Err(Error::Precondition(format!(
                "gain and noise must be positive and finite (gain = {gain}, noise = {noise_w})"
            )));
        }
        Ok(Self {
            gain,
            noise_w,
            fading: 1.0,
        })
    }

    /// Same realization with the noise power multiplied by `factor`.
    pub fn with_noise_scaled(&self, factor: f64) -> Self {
        Self {
            noise_w: self.noise_w * factor,
            ..*self
        }
    }
}

/// Received SNR `q |h|² / σ²` for per-symbol power `q` (watts).
pub fn snr(q: f64, state: &ChannelState) -> f64 {
    q * state.gain / state.noise_w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingMode {
    /// `|h̃|² = 1`: pure path loss.
    #[default]
    Deterministic,
    /// `h̃ ~ CN(0, 1)`, drawn once per experiment.
    Rayleigh,
}

/// Unit-power circularly symmetric complex Gaussian draws.
pub fn sample_fading_coefficients(rng: &mut SimRng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

/// `n` draws of `|h̃|²`, i.e. unit-mean exponential variates.
pub fn sample_fading(seed: RandomSeed, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Precondition("need at least one fading sample".into()));
    }
    let mut rng = rng_from_seed(seed);
    Ok(sample_fading_coefficients(&mut rng, n)
        .into_iter()
        .map(|h| h.norm_sqr())
        .collect())
}

/// Complex small-scale coefficients for `streams` links.
///
/// The channel is quasi-static: a single coefficient is drawn and shared
/// by every stream unless `independent` is set, in which case each stream
/// gets its own draw. Deterministic mode returns `1 + 0j` throughout.
pub fn realize_coefficients(
    mode: FadingMode,
    seed: RandomSeed,
    streams: usize,
    independent: bool,
) -> Vec<Complex64> {
    match mode {
        FadingMode::Deterministic => vec![Complex64::new(1.0, 0.0); streams],
        FadingMode::Rayleigh => {
            let mut rng = rng_from_seed(seed);
            if independent {
                sample_fading_coefficients(&mut rng, streams)
            } else {
                let h = sample_fading_coefficients(&mut rng, 1)[0];
                vec![h; streams]
            }
        }
    }
}

/// Per-stream [`ChannelState`]s for the given fading mode.
pub fn realize_states(
    params: &ChannelParams,
    mode: FadingMode,
    seed: RandomSeed,
    streams: usize,
    independent: bool,
) -> Result<Vec<ChannelState>> {
    realize_coefficients(mode, seed, streams, independent)
        .into_iter()
        .map(|h| ChannelState::new(params, h.norm_sqr()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_distance_loss() {
        for alpha in [0.5, 2.0, 3.4, 6.0] {
            let p = ChannelParams {
                d: 7.0,
                d0: 7.0,
                alpha,
                ..ChannelParams::default()
            };
            assert!((path_loss_linear(&p) - 1e-3).abs() < 1e-18);
        }
    }

    #[test]
    fn paper_geometry_is_minus_98_db() {
        let p = ChannelParams::default();
        let pl = path_loss_linear(&p);
        assert!((pl - 10f64.powf(-9.8)).abs() / pl < 1e-12);
        assert!((pl - 1.585e-10).abs() / pl < 1e-3);
        assert!((linear_to_db(pl) + 98.0).abs() < 1e-9);
    }

    #[test]
    fn zero_exponent_ignores_distance() {
        let p = ChannelParams {
            alpha: 0.0,
            d: 1234.0,
            ..ChannelParams::default()
        };
        assert_eq!(path_loss_linear(&p), db_to_linear(-30.0));
        assert!(p.validate().is_err());
    }

    #[test]
    fn negative_exponent_rejected() {
        let p = ChannelParams {
            alpha: -3.4,
            ..ChannelParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::Precondition(_))));
    }

    #[test]
    fn snr_examples() {
        let state = ChannelState::deterministic(&ChannelParams::default()).unwrap();
        assert_eq!(snr(0.0, &state), 0.0);
        assert!((state.noise_w - 1e-14).abs() < 1e-26);
        let s = snr(6.31e-4, &state);
        assert!((s - 10.0).abs() / 10.0 < 0.005);
        assert_eq!(snr(2.0 * 6.31e-4, &state), 2.0 * s);
    }

    #[test]
    fn dbm_round_trip() {
        for dbm in [-150.0, -110.0, -30.0, 0.0, 17.5, 40.0] {
            let back = watts_to_dbm(dbm_to_watts(dbm));
            assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
    }

    #[test]
    fn fading_statistics() {
        let s = sample_fading(RandomSeed(11), 1_000_000).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
        let below = s.iter().filter(|&&v| v <= 1.0).count() as f64 / s.len() as f64;
        let oracle = 1.0 - (-1.0f64).exp();
        assert!((below - oracle).abs() < 0.005, "cdf {below}");
        assert_eq!(s, sample_fading(RandomSeed(11), 1_000_000).unwrap());
        assert!(sample_fading(RandomSeed(1), 0).is_err());
    }

    #[test]
    fn quasi_static_sharing() {
        let p = ChannelParams::default();
        let shared = realize_states(&p, FadingMode::Rayleigh, RandomSeed(3), 2, false).unwrap();
        assert_eq!(shared[0], shared[1]);
        let indep = realize_states(&p, FadingMode::Rayleigh, RandomSeed(3), 2, true).unwrap();
        assert_ne!(indep[0].fading, indep[1].fading);
        let det = realize_states(&p, FadingMode::Deterministic, RandomSeed(3), 2, true).unwrap();
        assert_eq!(det[0].fading, 1.0);
    }
}
