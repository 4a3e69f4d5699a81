//! Monte Carlo link simulation.
//!
//! Bits are Gray-mapped onto a unit-energy rectangular QAM grid, sent
//! through `y = √q · h · z + n` with `n ~ CN(0, σ²)`, equalized with the
//! known channel and sliced per axis. Work is split into fixed-size
//! chunks, each with its own sub-seed, so results do not depend on the
//! number of worker threads.

use num_complex::Complex64;
use rand::distributions::{Bernoulli, Distribution};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{linear_to_db, snr, ChannelState, FadingMode};
use crate::error::{Error, Result};
use crate::modulation::{ber_from_snr, ModulationScheme};
use crate::numerics::{rng_from_seed, RandomSeed};
use crate::perception::eval_surface;
use crate::solvers::{Allocation, ProblemSpec};

/// Smallest bit count for which binomial confidence bands are reported.
pub const MIN_SIM_BITS: u64 = 10_000;

/// Symbols simulated per work chunk.
const CHUNK_SYMBOLS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_bits: u64,
    pub seed: RandomSeed,
    /// `Rayleigh` gives the simulated coefficient a random phase (drawn
    /// from the seed) on top of the state's magnitude; the receiver knows
    /// it either way.
    pub fading_mode: FadingMode,
}

impl SimConfig {
    pub fn new(n_bits: u64, seed: u64) -> Result<Self> {
        let cfg = Self {
            n_bits,
            seed: RandomSeed(seed),
            fading_mode: FadingMode::Deterministic,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bits < MIN_SIM_BITS {
            return Err(Error::Precondition(format!(
                "simulation needs at least {MIN_SIM_BITS} bits per stream, got {}",
                self.n_bits
            )));
        }
        Ok(())
    }
}

/// One Gray-coded PAM axis of a rectangular constellation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Axis {
    bits: u32,
    levels: u32,
}

impl Axis {
    fn new(bits: u32) -> Self {
        Self {
            bits,
            levels: 1 << bits,
        }
    }

    /// Amplitude, in grid steps, of the level carrying Gray word `word`.
    fn amplitude(&self, word: u32) -> f64 {
        let index = inverse_gray(word);
        2.0 * index as f64 - (self.levels - 1) as f64
    }

    /// Gray word of the level nearest to `x` grid steps.
    fn slice(&self, x: f64) -> u32 {
        let top = (self.levels - 1) as f64;
        let index = ((x + top) / 2.0).round().clamp(0.0, top) as u32;
        index ^ (index >> 1)
    }

    /// Sum of squared amplitudes over the levels, divided by the count.
    fn mean_energy(&self) -> f64 {
        let n = self.levels as f64;
        (n * n - 1.0) / 3.0
    }
}

fn inverse_gray(mut g: u32) -> u32 {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Rectangular Gray-mapped QAM with unit average symbol energy.
///
/// `log₂M` bits split as `⌈k/2⌉` on the in-phase axis and `⌊k/2⌋` on the
/// quadrature axis: BPSK is 2×1, 8-QAM 4×2, 16-QAM 4×4.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    i_axis: Axis,
    q_axis: Axis,
    /// Grid step that normalizes the average energy to one.
    step: f64,
}

impl Constellation {
    pub fn for_scheme(m: &ModulationScheme) -> Result<Self> {
        m.validate()?;
        let k = m.bits_per_symbol();
        let i_axis = Axis::new(k.div_ceil(2));
        let q_axis = Axis::new(k / 2);
        let energy = i_axis.mean_energy() + q_axis.mean_energy();
        Ok(Self {
            i_axis,
            q_axis,
            step: 1.0 / energy.sqrt(),
        })
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.i_axis.bits + self.q_axis.bits
    }

    /// Symbol for the `bits_per_symbol` low bits of `word`; the in-phase
    /// bits are the high ones.
    pub fn map(&self, word: u32) -> Complex64 {
        let q_mask = (1u32 << self.q_axis.bits) - 1;
        let i_word = word >> self.q_axis.bits;
        let q_word = word & q_mask;
        let q_amp = if self.q_axis.bits == 0 {
            0.0
        } else {
            self.q_axis.amplitude(q_word)
        };
        Complex64::new(self.i_axis.amplitude(i_word), q_amp) * self.step
    }

    /// Minimum-distance decision for an equalized sample.
    pub fn demap(&self, y: Complex64) -> u32 {
        let i_word = self.i_axis.slice(y.re / self.step);
        let q_word = if self.q_axis.bits == 0 {
            0
        } else {
            self.q_axis.slice(y.im / self.step)
        };
        (i_word << self.q_axis.bits) | q_word
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..1u32 << self.bits_per_symbol()).map(|w| self.map(w)).collect()
    }
}

/// Bit errors observed in a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BerCount {
    pub errors: u64,
    pub bits: u64,
}

impl BerCount {
    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.bits as f64
    }
}

/// Counts bit errors over `cfg.n_bits` random bits (rounded up to whole
/// symbols) sent with per-symbol power `q` over `state`.
pub fn simulate_errors(
    m: &ModulationScheme,
    state: &ChannelState,
    q: f64,
    cfg: &SimConfig,
) -> Result<BerCount> {
    cfg.validate()?;
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::Precondition(format!("power must be non-negative, got {q}")));
    }
    let constellation = Constellation::for_scheme(m)?;
    let k = constellation.bits_per_symbol() as u64;
    let symbols = cfg.n_bits.div_ceil(k);
    let chunks = symbols.div_ceil(CHUNK_SYMBOLS);

    let h = match cfg.fading_mode {
        FadingMode::Deterministic => Complex64::new(state.gain.sqrt(), 0.0),
        FadingMode::Rayleigh => {
            let mut rng = rng_from_seed(cfg.seed.derive(u64::MAX));
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(state.gain.sqrt(), phase)
        }
    };
    let amplitude = q.sqrt();
    let noise_sd = (state.noise_w / 2.0).sqrt();
    // Coherent receiver: undo the known channel. With no transmit power the
    // decisions are independent of the data whatever the scaling.
    let equalizer = if q > 0.0 {
        h.conj() / (h.norm_sqr() * amplitude)
    } else {
        Complex64::new(1.0 / noise_sd, 0.0)
    };
    let word_mask = (1u32 << k) - 1;

    let errors = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(cfg.seed.derive(c));
            let count = CHUNK_SYMBOLS.min(symbols - c * CHUNK_SYMBOLS);
            let mut errors = 0u64;
            for _ in 0..count {
                let word = rng.gen::<u32>() & word_mask;
                let z = constellation.map(word);
                let n = Complex64::new(
                    noise_sd * rng.sample::<f64, _>(StandardNormal),
                    noise_sd * rng.sample::<f64, _>(StandardNormal),
                );
                let y = h * amplitude * z + n;
                let decided = constellation.demap(y * equalizer);
                errors += (decided ^ word).count_ones() as u64;
            }
            errors
        })
        .sum();
    Ok(BerCount {
        errors,
        bits: symbols * k,
    })
}

/// Empirical bit error rate at power `q`.
pub fn simulate_ber(
    m: &ModulationScheme,
    state: &ChannelState,
    q: f64,
    cfg: &SimConfig,
) -> Result<f64> {
    simulate_errors(m, state, q, cfg).map(|c| c.rate())
}

/// Half-width of the 3σ binomial band for rate `psi` over `n` trials.
pub fn binomial_three_sigma(psi: f64, n: u64) -> f64 {
    3.0 * (psi * (1.0 - psi) / n as f64).sqrt()
}

/// Opaque bit string of one semantic stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamPayload {
    pub bits: Vec<bool>,
}

impl StreamPayload {
    pub fn random(len: usize, seed: RandomSeed) -> Self {
        let mut rng = rng_from_seed(seed);
        Self {
            bits: (0..len).map(|_| rng.gen()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn hamming_distance(&self, other: &StreamPayload) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Flips each bit independently with probability `psi`.
pub fn corrupt_payload(payload: &StreamPayload, psi: f64, seed: RandomSeed) -> Result<StreamPayload> {
    if !(0.0..=0.5).contains(&psi) {
        return Err(Error::Domain(format!("flip probability {psi} is outside [0, 0.5]")));
    }
    let flip = Bernoulli::new(psi).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    Ok(StreamPayload {
        bits: payload
            .bits
            .iter()
            .map(|&b| b ^ flip.sample(&mut rng))
            .collect(),
    })
}

/// Analytic vs simulated BER for one stream at one power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub stream: String,
    pub q_w: f64,
    pub snr_db: f64,
    pub psi_analytic: f64,
    pub psi_empirical: f64,
    pub n_bits: u64,
    /// 3σ binomial band around the analytic BER.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SimRow {
    pub fn within_ci(&self) -> bool {
        self.psi_empirical >= self.ci_low && self.psi_empirical <= self.ci_high
    }
}

/// Simulates `m` at `q` and pairs the result with the analytic BER.
pub fn compare_at_power(
    stream: &str,
    m: &ModulationScheme,
    state: &ChannelState,
    q: f64,
    cfg: &SimConfig,
) -> Result<SimRow> {
    let count = simulate_errors(m, state, q, cfg)?;
    let analytic = ber_from_snr(m, snr(q, state));
    let half = binomial_three_sigma(analytic, count.bits);
    Ok(SimRow {
        stream: stream.to_string(),
        q_w: q,
        snr_db: linear_to_db(snr(q, state)),
        psi_analytic: analytic,
        psi_empirical: count.rate(),
        n_bits: count.bits,
        ci_low: (analytic - half).max(0.0),
        ci_high: analytic + half,
    })
}

/// [`compare_at_power`] over a list of target SNRs in dB. Each point uses
/// its own sub-seed.
pub fn validate_ber_curve(
    stream: &str,
    m: &ModulationScheme,
    state: &ChannelState,
    snr_db: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<SimRow>> {
    snr_db
        .iter()
        .enumerate()
        .map(|(i, &db)| {
            let q = 10f64.powf(db / 10.0) * state.noise_w / state.gain;
            let point_cfg = SimConfig {
                seed: cfg.seed.derive(i as u64),
                ..*cfg
            };
            compare_at_power(stream, m, state, q, &point_cfg)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndReport {
    pub rows: [SimRow; 2],
    pub target: f64,
    /// `P` at the allocation's analytic BERs.
    pub analytic_p: f64,
    /// `P` at the simulated BERs.
    pub empirical_p: f64,
    /// `|empirical_p − target|`.
    pub gap: f64,
}

/// Simulates both streams at the allocated powers and evaluates the
/// perception surface at the empirical BERs.
pub fn end_to_end_check(p: &ProblemSpec, alloc: &Allocation, cfg: &SimConfig) -> Result<EndToEndReport> {
    if !alloc.feasible {
        return Err(Error::Precondition("allocation is not feasible".into()));
    }
    let row = |i: usize| {
        let s = &p.streams[i];
        let stream_cfg = SimConfig {
            seed: cfg.seed.derive(1_000 + i as u64),
            ..*cfg
        };
        compare_at_power(&s.name, &s.modulation, &s.channel, alloc.q[i], &stream_cfg)
    };
    let rows = [row(0)?, row(1)?];
    let clamp = |x: f64| x.min(0.5);
    let empirical_p = eval_surface(
        &p.surface,
        clamp(rows[0].psi_empirical),
        clamp(rows[1].psi_empirical),
    )?;
    Ok(EndToEndReport {
        target: p.target,
        analytic_p: eval_surface(&p.surface, alloc.psi[0], alloc.psi[1])?,
        empirical_p,
        gap: (empirical_p - p.target).abs(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::numerics::q_function;

    fn state() -> ChannelState {
        ChannelState::deterministic(&ChannelParams::default()).unwrap()
    }

    fn q_for_snr_db(db: f64) -> f64 {
        let s = state();
        10f64.powf(db / 10.0) * s.noise_w / s.gain
    }

    #[test]
    fn unit_energy_constellations() {
        for m in [ModulationScheme::bpsk(), ModulationScheme::qam8(), ModulationScheme::qam16()] {
            let c = Constellation::for_scheme(&m).unwrap();
            let pts = c.points();
            assert_eq!(pts.len(), m.order as usize);
            let e = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-15, "{}: {e}", m.name);
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for m in [ModulationScheme::qam8(), ModulationScheme::qam16()] {
            let c = Constellation::for_scheme(&m).unwrap();
            let pts = c.points();
            let dmin = 2.0 * c.step;
            for (a, za) in pts.iter().enumerate() {
                for (b, zb) in pts.iter().enumerate() {
                    if ((za - zb).norm() - dmin).abs() < 1e-12 {
                        assert_eq!((a ^ b).count_ones(), 1);
                    }
                }
                assert_eq!(c.demap(*za), a as u32);
            }
        }
    }

    #[test]
    fn zero_power_is_coin_flip() {
        let cfg = SimConfig::new(200_000, 1).unwrap();
        for m in [ModulationScheme::bpsk(), ModulationScheme::qam16()] {
            let c = simulate_errors(&m, &state(), 0.0, &cfg).unwrap();
            let band = binomial_three_sigma(0.5, c.bits);
            assert!((c.rate() - 0.5).abs() < band, "{}: {}", m.name, c.rate());
        }
    }

    #[test]
    fn bpsk_at_zero_db() {
        let cfg = SimConfig::new(1_000_000, 2).unwrap();
        let oracle = q_function(2f64.sqrt());
        assert!((oracle - 0.0786).abs() < 1e-4);
        let psi = simulate_ber(&ModulationScheme::bpsk(), &state(), q_for_snr_db(0.0), &cfg).unwrap();
        assert!((psi - oracle).abs() < binomial_three_sigma(oracle, 1_000_000));
    }

    #[test]
    fn qam16_at_15_db() {
        let cfg = SimConfig::new(1_000_000, 3).unwrap();
        let m = ModulationScheme::qam16();
        let q = q_for_snr_db(15.0);
        let psi = simulate_ber(&m, &state(), q, &cfg).unwrap();
        let analytic = ber_from_snr(&m, snr(q, &state()));
        assert!(((psi - analytic) / analytic).abs() < 0.15);
    }

    #[test]
    fn phase_rotation_is_equalized() {
        let m = ModulationScheme::qam16();
        let q = q_for_snr_db(14.0);
        let det = SimConfig::new(400_000, 4).unwrap();
        let ray = SimConfig {
            fading_mode: FadingMode::Rayleigh,
            ..det
        };
        let a = simulate_ber(&m, &state(), q, &det).unwrap();
        let b = simulate_ber(&m, &state(), q, &ray).unwrap();
        let band = binomial_three_sigma(a, 400_000) * 2.0;
        assert!((a - b).abs() < band);
    }

    #[test]
    fn seed_determinism() {
        let cfg = SimConfig::new(100_000, 9).unwrap();
        let m = ModulationScheme::qam8();
        let a = simulate_errors(&m, &state(), q_for_snr_db(8.0), &cfg).unwrap();
        let b = simulate_errors(&m, &state(), q_for_snr_db(8.0), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn common_random_numbers_give_monotone_errors() {
        let cfg = SimConfig::new(200_000, 5).unwrap();
        let m = ModulationScheme::bpsk();
        let mut prev = u64::MAX;
        for db in [-4.0, -2.0, 0.0, 2.0, 4.0, 6.0] {
            let c = simulate_errors(&m, &state(), q_for_snr_db(db), &cfg).unwrap();
            assert!(c.errors <= prev);
            prev = c.errors;
        }
    }

    #[test]
    fn minimum_bits_enforced() {
        assert!(matches!(SimConfig::new(9_999, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn payload_corruption() {
        let p = StreamPayload::random(1_000_000, RandomSeed(6));
        assert_eq!(corrupt_payload(&p, 0.0, RandomSeed(1)).unwrap(), p);
        for psi in [0.5, 0.01] {
            let c = corrupt_payload(&p, psi, RandomSeed(2)).unwrap();
            let frac = p.hamming_distance(&c) as f64 / p.len() as f64;
            assert!((frac - psi).abs() < binomial_three_sigma(psi, p.len() as u64), "psi {psi}");
            assert_eq!(c, corrupt_payload(&p, psi, RandomSeed(2)).unwrap());
        }
        assert!(corrupt_payload(&p, 0.6, RandomSeed(0)).is_err());
    }

    #[test]
    fn ci_narrows_with_more_bits() {
        let w1 = binomial_three_sigma(0.01, 100_000);
        let w2 = binomial_three_sigma(0.01, 200_000);
        assert!((w1 / w2 - 2f64.sqrt()).abs() < 1e-12);
    }
}
