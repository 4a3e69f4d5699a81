//! Minimum-cost power allocation under a perception target.
//!
//! Every allocator returns a point on the level set `P(ψ₁, ψ₂) = P̄`: the
//! BER of each stream falls monotonically with its power, so any slack in
//! the perception constraint could be traded for lower power.
//!
//! * [`solve_equal_snr`]: semantic-unaware baseline, both streams at the
//!   same received SNR.
//! * [`solve_proportional`]: each stream keeps the same fraction
//!   `L̂ᵢ/Lᵢ` of its semantic value; powers follow from the BER inversion.
//! * [`solve_bisection`]: bisection on `ψ₁` along the level set, steered by
//!   the sign of the total derivative of the cost.
//! * [`solve_grid_oracle`]: exhaustive scan of the level set, used to
//!   check the others.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{snr, ChannelState};
use crate::error::{Error, Result};
use crate::modulation::{ber_from_snr, power_ber_slope, power_from_ber, ModulationScheme, MAX_BER};
use crate::numerics::{bisect_root_report, ToleranceConfig};
use crate::perception::{
    achievable_range, constraint_line_within, constraint_slope, semantic_value_transmitted,
    solve_psi2_within, StreamCurve, SurfaceParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub name: String,
    /// Payload length `Kᵢ` in bits.
    pub bits: u64,
    pub modulation: ModulationScheme,
    pub channel: ChannelState,
    pub curve: StreamCurve,
}

/// What `Kᵢ` counts in the objective `Σ Kᵢ qᵢ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostBasis {
    /// `Kᵢ` is the bit count, as in the objective's literal form.
    #[default]
    Bits,
    /// `Kᵢ / log₂Mᵢ` symbols, the energy actually radiated per symbol power.
    Symbols,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    /// Prompt stream first, edge-map stream second.
    pub streams: [StreamSpec; 2],
    pub surface: SurfaceParams,
    pub target: f64,
    pub tol: ToleranceConfig,
    pub cost_basis: CostBasis,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.surface.validate()?;
        self.tol.validate()?;
        for s in &self.streams {
            if s.bits == 0 {
                return Err(Error::Precondition(format!("stream '{}' has no bits", s.name)));
            }
            s.modulation.validate()?;
            s.curve.validate()?;
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return Err(Error::Precondition(format!(
                "target must lie in (0, 1), got {}",
                self.target
            )));
        }
        Ok(())
    }

    /// Highest usable BER per stream: the zero-power end of each branch.
    pub fn caps(&self) -> [f64; 2] {
        [0, 1].map(|i| self.streams[i].modulation.max_ber().min(MAX_BER))
    }

    /// Open interval of targets any allocator can meet.
    pub fn achievable_range(&self) -> (f64, f64) {
        achievable_range(&self.surface, self.caps())
    }

    fn check_target(&self) -> Result<()> {
        self.validate()?;
        let (low, high) = self.achievable_range();
        if self.target > low && self.target < high {
            Ok(())
        } else {
            Err(Error::Infeasible {
                target: self.target,
                low,
                high,
            })
        }
    }

    /// Objective weight of stream `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let s = &self.streams[i];
        match self.cost_basis {
            CostBasis::Bits => s.bits as f64,
            CostBasis::Symbols => s.bits as f64 / s.modulation.bits_per_symbol() as f64,
        }
    }

    pub fn power(&self, i: usize, psi: f64) -> Result<f64> {
        power_from_ber(&self.streams[i].modulation, &self.streams[i].channel, psi)
    }

    /// `Σ wᵢ qᵢ(ψᵢ)`.
    pub fn cost(&self, psi: [f64; 2]) -> Result<f64> {
        Ok(self.weight(0) * self.power(0, psi[0])? + self.weight(1) * self.power(1, psi[1])?)
    }

    /// Same problem with a different target.
    pub fn with_target(&self, target: f64) -> Self {
        Self {
            target,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    EqualSnr,
    Proportional,
    Bisection,
    GridOracle,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::EqualSnr,
        SolverKind::Proportional,
        SolverKind::Bisection,
        SolverKind::GridOracle,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SolverKind::EqualSnr => "equal_snr",
            SolverKind::Proportional => "proportional",
            SolverKind::Bisection => "bisection",
            SolverKind::GridOracle => "grid_oracle",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == label)
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Per-symbol transmit power of each stream, watts.
    pub q: [f64; 2],
    pub psi: [f64; 2],
    pub achieved_p: f64,
    /// `Σ wᵢ qᵢ`.
    pub total_cost: f64,
    pub solver: SolverKind,
    pub iterations: usize,
    pub feasible: bool,
    /// `false` if an iteration cap was hit before the stopping rule.
    pub converged: bool,
}

fn allocation_from_psi(
    p: &ProblemSpec,
    psi: [f64; 2],
    solver: SolverKind,
    iterations: usize,
    converged: bool,
) -> Result<Allocation> {
    let q = [p.power(0, psi[0])?, p.power(1, psi[1])?];
    Ok(Allocation {
        q,
        psi,
        achieved_p: p.surface.value(psi[0], psi[1]),
        total_cost: p.weight(0) * q[0] + p.weight(1) * q[1],
        solver,
        iterations,
        feasible: true,
        converged,
    })
}

/// Semantic-unaware baseline: one common received SNR `γ` for both
/// streams, chosen so the perception target is met exactly.
pub fn solve_equal_snr(p: &ProblemSpec) -> Result<Allocation> {
    p.check_target()?;
    let psi_at = |gamma: f64| {
        [0, 1].map(|i| ber_from_snr(&p.streams[i].modulation, gamma))
    };
    // P falls as ln γ grows; e^-60 is indistinguishable from zero power
    // and e^20 drives every preset far below the smallest usable BER.
    let report = bisect_root_report(
        |t| {
            let psi = psi_at(t.exp());
            p.surface.value(psi[0], psi[1]) - p.target
        },
        -60.0,
        20.0,
        &ToleranceConfig::tight(),
    )?;
    let gamma = report.root.exp();
    let psi = psi_at(gamma);
    let q = [0, 1].map(|i| {
        let ch = &p.streams[i].channel;
        gamma * ch.noise_w / ch.gain
    });
    Ok(Allocation {
        q,
        psi,
        achieved_p: p.surface.value(psi[0], psi[1]),
        total_cost: p.weight(0) * q[0] + p.weight(1) * q[1],
        solver: SolverKind::EqualSnr,
        iterations: report.iterations,
        feasible: true,
        converged: true,
    })
}

/// BER at which `curve` retains the fraction `ratio` of its semantic value.
fn psi_for_ratio(curve: &StreamCurve, ratio: f64) -> Result<f64> {
    let level = 1.0 - ratio * semantic_value_transmitted(curve);
    if level >= curve.pmax {
        return Ok(f64::INFINITY);
    }
    curve.inverse(level.max(curve.p0))
}

/// Semantic-aware proportional allocation.
///
/// The joint target is split into per-stream semantic-value requirements
/// `L̄ᵢ = ρ·Lᵢ` with a common retention ratio `ρ`, found so that the
/// resulting BER pair meets `P̄` with equality. Each power then follows in
/// closed form from the BER inversion.
pub fn solve_proportional(p: &ProblemSpec) -> Result<Allocation> {
    p.check_target()?;
    let caps = p.caps();
    let curves = [p.streams[0].curve, p.streams[1].curve];
    let mut ratio_floor: f64 = 0.0;
    for (c, cap) in curves.iter().zip(caps) {
        let l = semantic_value_transmitted(c);
        if l <= 0.0 {
            return Err(Error::Domain(
                "proportional split is undefined for a stream with zero semantic value".into(),
            ));
        }
        // Below this ratio the stream's BER would leave the invertible branch.
        ratio_floor = ratio_floor.max((1.0 - c.value(cap)) / l);
    }
    let psi_at = |ratio: f64| -> Result<[f64; 2]> {
        Ok([
            psi_for_ratio(&curves[0], ratio)?.min(caps[0]),
            psi_for_ratio(&curves[1], ratio)?.min(caps[1]),
        ])
    };
    let reach = {
        let psi = psi_at(ratio_floor)?;
        p.surface.value(psi[0], psi[1])
    };
    if reach < p.target {
        return Err(Error::Domain(format!(
            "equal semantic-value retention cannot reach P = {} inside the BER branch (max {reach})",
            p.target
        )));
    }
    let report = bisect_root_report(
        |ratio| match psi_at(ratio) {
            Ok(psi) => p.surface.value(psi[0], psi[1]) - p.target,
            Err(_) => f64::NAN,
        },
        ratio_floor,
        1.0,
        &ToleranceConfig::tight(),
    )?;
    let psi = psi_at(report.root)?;
    allocation_from_psi(p, psi, SolverKind::Proportional, report.iterations, true)
}

/// Directional derivative of the cost along the level set at `ψ₁`,
/// together with the matching `ψ₂`.
fn cost_derivative_along_constraint(p: &ProblemSpec, psi1: f64) -> Result<(f64, f64)> {
    let caps = p.caps();
    let psi2 = solve_psi2_within(&p.surface, psi1, p.target, caps[1])?;
    if psi2 <= 0.0 {
        // Stream 2 would need infinite power; move left.
        return Ok((psi2, f64::INFINITY));
    }
    let s = &p.streams;
    let df1 = p.weight(0) * power_ber_slope(&s[0].modulation, &s[0].channel, psi1)?;
    let df2 = p.weight(1) * power_ber_slope(&s[1].modulation, &s[1].channel, psi2)?;
    let dpsi2 = constraint_slope(&p.surface, psi1, psi2)?;
    Ok((psi2, df1 + dpsi2 * df2))
}

/// Total derivative `df/dψ₁` of the cost along the constraint line.
pub fn constraint_cost_derivative(p: &ProblemSpec, psi1: f64) -> Result<f64> {
    cost_derivative_along_constraint(p, psi1).map(|(_, d)| d)
}

/// Semantic-aware bisection along the constraint line.
///
/// Starts from the two ends of the level set `P = P̄`. At the midpoint
/// `ψ₁` the matching `ψ₂` is solved on the level set, the cost partials
/// `∂f/∂ψᵢ` come from the BER inversion and `dψ₂/dψ₁` from implicit
/// differentiation of the constraint. A non-negative total derivative
/// moves the right end to the midpoint, a negative one the left end. The
/// search stops once the `ψ₁` bracket is narrower than `tol.abs_tol`.
///
/// Correct when the cost is unimodal along the line, which holds for the
/// bundled surface (its level sets are straight lines and each `qᵢ(ψᵢ)`
/// is convex); [`solve_grid_oracle`] is the cross-check for other
/// surfaces.
pub fn solve_bisection(p: &ProblemSpec) -> Result<Allocation> {
    p.check_target()?;
    let line = constraint_line_within(&p.surface, p.target, p.caps())?;
    let (mut left, mut right) = (line.left.0, line.right.0);
    let mut iterations = 0;
    let mut converged = true;

    while right - left >= p.tol.abs_tol {
        if iterations == p.tol.max_iter {
            converged = false;
            break;
        }
        let mid = left + 0.5 * (right - left);
        if mid <= left || mid >= right {
            break;
        }
        iterations += 1;
        let (_, slope) = cost_derivative_along_constraint(p, mid)?;
        if slope >= 0.0 {
            right = mid;
        } else {
            left = mid;
        }
    }

    let psi1 = left + 0.5 * (right - left);
    let psi2 = solve_psi2_within(&p.surface, psi1, p.target, p.caps()[1])?;
    allocation_from_psi(p, [psi1, psi2], SolverKind::Bisection, iterations, converged)
}

/// Decades resolved next to each end of the constraint line.
const ORACLE_DECADES: f64 = 12.0;

/// Smallest accepted oracle grid.
pub const MIN_ORACLE_GRID: usize = 64;

/// `ψ₁` values scanned by [`solve_grid_oracle`].
///
/// The cost blows up at whichever end drives a BER to zero, so the grid is
/// logarithmic towards both ends: the left half is log-spaced in `ψ₁`, the
/// right half in the distance to the right end, each spanning
/// `ORACLE_DECADES` when the end itself is unbounded. Point `k` depends
/// only on `k/(grid_n − 1)`, so grids of `2ᵏ + 1` points nest.
pub fn oracle_grid(p: &ProblemSpec, grid_n: usize) -> Result<Vec<f64>> {
    if grid_n < MIN_ORACLE_GRID {
        return Err(Error::Precondition(format!(
            "oracle grid needs at least {MIN_ORACLE_GRID} points, got {grid_n}"
        )));
    }
    p.check_target()?;
    let line = constraint_line_within(&p.surface, p.target, p.caps())?;
    let (left, hi) = (line.left.0, line.right.0);
    let mid = left + 0.5 * (hi - left);
    let lo = if left > 0.0 {
        left
    } else {
        mid * 10f64.powf(-ORACLE_DECADES)
    };
    let span = hi - mid;
    let ratio_left = mid / lo;
    let ratio_right = 10f64.powf(-ORACLE_DECADES);
    Ok((0..grid_n)
        .map(|k| {
            let t = k as f64 / (grid_n - 1) as f64;
            if k == 0 {
                lo
            } else if k == grid_n - 1 {
                hi
            } else if t <= 0.5 {
                lo * ratio_left.powf(2.0 * t)
            } else {
                hi - span * ratio_right.powf(2.0 * t - 1.0)
            }
        })
        .collect())
}

/// Exhaustive scan of the constraint line on [`oracle_grid`]; ties go to
/// the smallest `ψ₁`.
pub fn solve_grid_oracle(p: &ProblemSpec, grid_n: usize) -> Result<Allocation> {
    let grid = oracle_grid(p, grid_n)?;
    let cap2 = p.caps()[1];
    let mut best: Option<([f64; 2], f64)> = None;
    for psi1 in grid {
        let psi2 = solve_psi2_within(&p.surface, psi1, p.target, cap2)?;
        let cost = p.cost([psi1, psi2])?;
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some(([psi1, psi2], cost));
        }
    }
    let (psi, _) = best.expect("grid is non-empty");
    allocation_from_psi(p, psi, SolverKind::GridOracle, grid_n, true)
}

/// Runs one allocator.
pub fn solve(p: &ProblemSpec, kind: SolverKind, grid_n: usize) -> Result<Allocation> {
    match kind {
        SolverKind::EqualSnr => solve_equal_snr(p),
        SolverKind::Proportional => solve_proportional(p),
        SolverKind::Bisection => solve_bisection(p),
        SolverKind::GridOracle => solve_grid_oracle(p, grid_n),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub target: f64,
    pub solver: SolverKind,
    pub outcome: std::result::Result<Allocation, Error>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    /// Ordered by target index, then by solver in the requested order.
    pub rows: Vec<SweepRow>,
    /// Targets where bisection and the grid oracle disagree.
    pub warnings: Vec<String>,
}

/// Relative gap between bisection and oracle cost that triggers a warning.
pub const ORACLE_AGREEMENT: f64 = 5e-3;

/// Solves every target with every selected allocator. Targets run in
/// parallel; the row order does not depend on scheduling.
pub fn sweep_targets(
    template: &ProblemSpec,
    targets: &[f64],
    solvers: &[SolverKind],
    grid_n: usize,
) -> SweepReport {
    let per_target: Vec<(Vec<SweepRow>, Option<String>)> = targets
        .par_iter()
        .map(|&target| {
            let p = template.with_target(target);
            let rows: Vec<SweepRow> = solvers
                .iter()
                .map(|&solver| SweepRow {
                    target,
                    solver,
                    outcome: solve(&p, solver, grid_n),
                })
                .collect();
            let cost_of = |k: SolverKind| {
                rows.iter()
                    .find(|r| r.solver == k)
                    .and_then(|r| r.outcome.as_ref().ok())
                    .map(|a| a.total_cost)
            };
            let warning = match (cost_of(SolverKind::Bisection), cost_of(SolverKind::GridOracle)) {
                (Some(b), Some(o)) if (b - o).abs() > ORACLE_AGREEMENT * o => Some(format!(
                    "target {target}: bisection cost {b:e} differs from grid oracle {o:e}; \
                     the cost may be multimodal along the constraint line"
                )),
                _ => None,
            };
            (rows, warning)
        })
        .collect();

    let mut report = SweepReport::default();
    for (rows, warning) in per_target {
        report.rows.extend(rows);
        report.warnings.extend(warning);
    }
    report
}

/// Re-derives each stream's BER from its allocated power through the
/// SNR and BER models.
pub fn rederive_psi(p: &ProblemSpec, alloc: &Allocation) -> [f64; 2] {
    [0, 1].map(|i| {
        let s = &p.streams[i];
        ber_from_snr(&s.modulation, snr(alloc.q[i], &s.channel))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::numerics::finite_difference;
    use crate::perception::semantic_value_received;

    fn problem(modulation: ModulationScheme, target: f64) -> ProblemSpec {
        let ch = ChannelState::deterministic(&ChannelParams::default()).unwrap();
        ProblemSpec {
            streams: [
                StreamSpec {
                    name: "prompt".into(),
                    bits: 512,
                    modulation: modulation.clone(),
                    channel: ch,
                    curve: StreamCurve::prompt(),
                },
                StreamSpec {
                    name: "edge".into(),
                    bits: 10_419,
                    modulation,
                    channel: ch,
                    curve: StreamCurve::edge(),
                },
            ],
            surface: SurfaceParams::default(),
            target,
            tol: ToleranceConfig::default(),
            cost_basis: CostBasis::Bits,
        }
    }

    fn symmetric(target: f64) -> ProblemSpec {
        let mut p = problem(ModulationScheme::qam16(), target);
        p.streams[1].bits = p.streams[0].bits;
        p.streams[1].curve = p.streams[0].curve;
        p.surface.tau2 = p.surface.tau1;
        p
    }

    #[test]
    fn equal_snr_symmetry_and_equality() {
        let p = symmetric(0.6);
        let a = solve_equal_snr(&p).unwrap();
        assert_eq!(a.q[0], a.q[1]);
        assert_eq!(a.psi[0], a.psi[1]);
        assert!((a.achieved_p - 0.6).abs() < 1e-8);
    }

    #[test]
    fn equal_snr_matches_ray_scan() {
        let p = problem(ModulationScheme::qam16(), 0.55);
        let a = solve_equal_snr(&p).unwrap();
        let snr_now = snr(a.q[0], &p.streams[0].channel);
        // Scan the equal-SNR ray on a fine log grid for the closest level.
        let n = 200_000;
        let (lo, hi) = (0.1f64.ln(), 1e4f64.ln());
        let step = (hi - lo) / n as f64;
        let best = (0..=n)
            .map(|k| lo + k as f64 * step)
            .min_by(|x, y| {
                let gap = |t: f64| {
                    let g = t.exp();
                    let m = &p.streams[0].modulation;
                    (p.surface.value(ber_from_snr(m, g), ber_from_snr(m, g)) - p.target).abs()
                };
                gap(*x).total_cmp(&gap(*y))
            })
            .unwrap();
        assert!((snr_now.ln() - best).abs() <= step);
    }

    #[test]
    fn proportional_keeps_equal_retention() {
        for target in [0.35, 0.5, 0.7, 0.9] {
            let p = problem(ModulationScheme::qam8(), target);
            let a = solve_proportional(&p).unwrap();
            let ratio = |i: usize| {
                let c = &p.streams[i].curve;
                semantic_value_received(c, a.psi[i]).unwrap() / semantic_value_transmitted(c)
            };
            assert!((ratio(0) - ratio(1)).abs() < 1e-8, "target {target}");
            assert!((a.achieved_p - target).abs() < 1e-8);
        }
    }

    #[test]
    fn floor_target_is_infeasible() {
        let p = problem(ModulationScheme::qam16(), 0.30);
        for k in SolverKind::ALL {
            assert!(matches!(solve(&p, k, 128), Err(Error::Infeasible { .. })), "{k}");
        }
        let p = problem(ModulationScheme::qam16(), 0.2);
        assert!(matches!(solve_bisection(&p), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn bisection_symmetric_optimum() {
        let p = symmetric(0.55);
        let a = solve_bisection(&p).unwrap();
        assert!((a.psi[0] - a.psi[1]).abs() < 1e-6);
        let o = solve_grid_oracle(&p, 4097).unwrap();
        // Grid resolution near the optimum.
        assert!((o.psi[0] - a.psi[0]).abs() / a.psi[0] < 0.01);
    }

    #[test]
    fn bisection_stationary_along_constraint() {
        let p = problem(ModulationScheme::qam16(), 0.6);
        let a = solve_bisection(&p).unwrap();
        let along = |x: &[f64]| {
            let psi2 = solve_psi2_within(&p.surface, x[0], p.target, p.caps()[1]).unwrap();
            p.cost([x[0], psi2]).unwrap()
        };
        let h = a.psi[0] * 1e-4;
        let d = finite_difference(along, &[a.psi[0]], h)[0];
        // Scale: the cost change over a unit relative move in ψ₁.
        let scale = a.total_cost / a.psi[0];
        assert!((d / scale).abs() < 1e-4, "d = {d}, scale = {scale}");
    }

    #[test]
    fn bisection_iteration_bound() {
        let p = problem(ModulationScheme::qam16(), 0.6);
        let a = solve_bisection(&p).unwrap();
        let line = constraint_line_within(&p.surface, 0.6, p.caps()).unwrap();
        let bound = ((line.right.0 - line.left.0) / p.tol.abs_tol).log2().ceil() as usize + 2;
        assert!(a.iterations <= bound);
        assert!(a.converged);
    }

    #[test]
    fn bisection_flags_iteration_cap() {
        let mut p = problem(ModulationScheme::qam16(), 0.6);
        p.tol.max_iter = 3;
        let a = solve_bisection(&p).unwrap();
        assert!(!a.converged);
        assert_eq!(a.iterations, 3);
        assert!((a.achieved_p - 0.6).abs() < 1e-9);
    }

    #[test]
    fn oracle_refinement_never_worse() {
        let p = problem(ModulationScheme::qam16(), 0.5);
        let mut prev = f64::INFINITY;
        for k in 6..=12 {
            let a = solve_grid_oracle(&p, (1 << k) + 1).unwrap();
            assert!(a.total_cost <= prev);
            prev = a.total_cost;
        }
        assert!(solve_grid_oracle(&p, 32).is_err());
    }

    #[test]
    fn oracle_dominates_and_agrees() {
        for target in [0.4, 0.55, 0.7, 0.85] {
            let p = problem(ModulationScheme::qam16(), target);
            let o = solve_grid_oracle(&p, 4096).unwrap();
            let b = solve_bisection(&p).unwrap();
            assert!(b.total_cost <= o.total_cost * (1.0 + 1e-9));
            assert!((b.total_cost - o.total_cost).abs() / o.total_cost < 5e-3);
            for k in [SolverKind::EqualSnr, SolverKind::Proportional] {
                let a = solve(&p, k, 0).unwrap();
                assert!(a.total_cost >= o.total_cost * (1.0 - 1e-6));
            }
        }
    }

    #[test]
    fn psi_rederives_from_power() {
        let p = problem(ModulationScheme::qam8(), 0.65);
        for k in SolverKind::ALL {
            let a = solve(&p, k, 512).unwrap();
            let back = rederive_psi(&p, &a);
            for (i, (b, psi)) in back.iter().zip(a.psi).enumerate() {
                assert!(((b - psi) / psi).abs() < 1e-8, "{k} stream {i}");
            }
            let sum = p.weight(0) * a.q[0] + p.weight(1) * a.q[1];
            assert_eq!(a.total_cost, sum);
        }
    }

    #[test]
    fn noise_scaling_scales_powers() {
        let p = problem(ModulationScheme::qam16(), 0.6);
        let mut scaled = p.clone();
        for s in scaled.streams.iter_mut() {
            s.channel = s.channel.with_noise_scaled(4.0);
        }
        for k in SolverKind::ALL {
            let a = solve(&p, k, 256).unwrap();
            let b = solve(&scaled, k, 256).unwrap();
            assert_eq!(a.psi, b.psi, "{k}");
            for i in 0..2 {
                assert!((b.q[i] - 4.0 * a.q[i]).abs() <= 1e-15 * b.q[i], "{k}");
            }
        }
    }

    #[test]
    fn symbol_cost_basis() {
        let mut p = problem(ModulationScheme::qam16(), 0.6);
        p.cost_basis = CostBasis::Symbols;
        assert_eq!(p.weight(0), 128.0);
        let a = solve_bisection(&p).unwrap();
        assert!((a.achieved_p - 0.6).abs() < 1e-9);
    }

    #[test]
    fn sweep_orders_rows() {
        let p = problem(ModulationScheme::qam16(), 0.5);
        let targets = [0.7, 0.4, 0.2];
        let report = sweep_targets(&p, &targets, &SolverKind::ALL, 256);
        assert_eq!(report.rows.len(), 12);
        for (i, row) in report.rows.iter().enumerate() {
            assert_eq!(row.target, targets[i / 4]);
            assert_eq!(row.solver, SolverKind::ALL[i % 4]);
        }
        assert!(report.rows[8..].iter().all(|r| r.outcome.is_err()));
        assert!(report.warnings.is_empty());
    }
}
