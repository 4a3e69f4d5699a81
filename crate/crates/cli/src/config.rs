//! Experiment configuration (TOML).
//!
//! Relative paths inside a config file resolve against the file's own
//! directory. Every section is optional; the defaults reproduce the
//! bundled two-stream scenario (100 m link, −98 dB path loss, −110 dBm
//! noise, 16-QAM on both streams).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use semalloc::channel::{realize_states, ChannelParams, FadingMode};
use semalloc::modulation::ModulationScheme;
use semalloc::numerics::{RandomSeed, ToleranceConfig};
use semalloc::perception::{fit_stream_curve, fit_surface, StreamCurve, SurfaceParams};
use semalloc::solvers::{CostBasis, ProblemSpec, SolverKind, StreamSpec};

use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub cost_basis: CostBasis,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<String>,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default = "default_streams")]
    pub streams: Vec<StreamSection>,
    #[serde(default)]
    pub surface: SurfaceSection,
    #[serde(default)]
    pub targets: TargetSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    /// Run metadata present when a manifest is used as a config.
    #[serde(default, skip_serializing)]
    pub manifest: Option<toml::Value>,
}

fn default_seed() -> u64 {
    2024
}

fn default_grid_n() -> usize {
    4096
}

fn default_solvers() -> Vec<String> {
    SolverKind::ALL.iter().map(|k| k.label().to_string()).collect()
}

fn default_streams() -> Vec<StreamSection> {
    vec![
        StreamSection {
            name: "prompt".into(),
            bits: 4096,
            ..StreamSection::default()
        },
        StreamSection {
            name: "edge".into(),
            bits: 6835,
            ..StreamSection::default()
        },
    ]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub h0_db: f64,
    pub d_m: f64,
    pub d0_m: f64,
    pub alpha: f64,
    pub noise_dbm: f64,
    pub fading: FadingMode,
    /// Seed for the fading draw; the global seed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Draw a separate fading coefficient per stream.
    pub independent: bool,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let p = ChannelParams::default();
        Self {
            h0_db: p.h0_db,
            d_m: p.d,
            d0_m: p.d0,
            alpha: p.alpha,
            noise_dbm: p.noise_dbm,
            fading: FadingMode::Deterministic,
            seed: None,
            independent: false,
        }
    }
}

impl ChannelSection {
    pub fn params(&self) -> ChannelParams {
        ChannelParams {
            h0_db: self.h0_db,
            d: self.d_m,
            d0: self.d0_m,
            alpha: self.alpha,
            noise_dbm: self.noise_dbm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSection {
    pub name: String,
    pub bits: u64,
    /// `bpsk`, `8qam`, `16qam`, any square `<M>qam`, or `custom`.
    #[serde(default = "default_modulation")]
    pub modulation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    /// `default` (by position), `prompt`, `edge`, or a `.toml` curve
    /// document / `.csv` sample file.
    #[serde(default = "default_curve")]
    pub curve: String,
}

fn default_modulation() -> String {
    "16qam".into()
}

fn default_curve() -> String {
    "default".into()
}

impl Default for StreamSection {
    fn default() -> Self {
        Self {
            name: String::new(),
            bits: 1,
            modulation: default_modulation(),
            a: None,
            b: None,
            order: None,
            curve: default_curve(),
        }
    }
}

impl StreamSection {
    pub fn scheme(&self) -> Result<ModulationScheme, CliError> {
        let mut scheme = if self.modulation.eq_ignore_ascii_case("custom") {
            let (Some(order), Some(a), Some(b)) = (self.order, self.a, self.b) else {
                return Err(CliError::Input(format!(
                    "stream '{}': custom modulation needs M, a and b",
                    self.name
                )));
            };
            ModulationScheme::new("custom", order, a, b)?
        } else {
            ModulationScheme::preset(&self.modulation)?
        };
        if let Some(a) = self.a {
            scheme.a = a;
        }
        if let Some(b) = self.b {
            scheme.b = b;
        }
        scheme.validate()?;
        Ok(scheme)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceSource {
    #[default]
    Default,
    /// A surface document written by `fit`.
    File,
    /// A `psi1,psi2,P` sample file, fitted on load.
    Samples,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceSection {
    pub source: SurfaceSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl TargetSection {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        let targets = match (&self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                if step.is_nan() || step <= 0.0 || stop < start {
                    return Err(CliError::Input(format!(
                        "target range needs start <= stop and step > 0 (got {start}..{stop} by {step})"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // Rounded so that 0.35 + 2·0.05 prints as 0.45.
                (0..=n)
                    .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                    .collect()
            }
            (None, None, None, None) => vec![0.6],
            _ => {
                return Err(CliError::Input(
                    "targets: give either `values` or all of `start`, `stop`, `step`".into(),
                ))
            }
        };
        if targets.is_empty() {
            return Err(CliError::Input("target list is empty".into()));
        }
        if let Some(t) = targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(CliError::Input(format!("target {t} is outside (0, 1)")));
        }
        Ok(targets)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Run the sweep once per listed modulation, applied to both streams.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulations: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
pub enum OutputFormat {
    #[serde(rename = "csv")]
    #[value(name = "csv")]
    Csv,
    #[default]
    #[serde(rename = "csv+svg")]
    #[value(name = "csv+svg")]
    CsvSvg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: OutputFormat::CsvSvg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_bits: u64,
    /// SNR points (dB) for the analytic-vs-empirical BER comparison.
    #[serde(default)]
    pub snr_db: Vec<f64>,
    /// Modulation for the SNR sweep; each stream's own when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<String>,
    /// Allocator whose solution is checked end to end at the first target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_solver: Option<String>,
    #[serde(default)]
    pub fading: FadingMode,
}

/// Config with every reference loaded and checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    /// Problem at the first target.
    pub problem: ProblemSpec,
    pub targets: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    /// Files read while resolving, for the manifest digests.
    pub inputs: Vec<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    /// Reads a config file and makes its paths absolute.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let base = std::path::absolute(&base).unwrap_or(base);
        cfg.rebase(&base);
        Ok(cfg)
    }

    /// Anchors every relative path at `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.surface.path.as_mut() {
            fix(p);
        }
        fix(&mut self.output.dir);
        for s in &mut self.streams {
            if s.curve.ends_with(".toml") || s.curve.ends_with(".csv") {
                let mut p = PathBuf::from(&s.curve);
                fix(&mut p);
                s.curve = p.to_string_lossy().into_owned();
            }
        }
    }

    pub fn solver_kinds(&self) -> Result<Vec<SolverKind>, CliError> {
        if self.solvers.is_empty() {
            return Err(CliError::Input("select at least one solver".into()));
        }
        self.solvers
            .iter()
            .map(|s| {
                SolverKind::from_label(s).ok_or_else(|| {
                    CliError::Input(format!(
                        "unknown solver '{s}' (expected one of equal_snr, proportional, bisection, grid_oracle)"
                    ))
                })
            })
            .collect()
    }

    fn surface(&self, inputs: &mut Vec<PathBuf>) -> Result<SurfaceParams, CliError> {
        let path = || {
            self.surface
                .path
                .clone()
                .ok_or_else(|| CliError::Input("surface.path is required for this source".into()))
        };
        match self.surface.source {
            SurfaceSource::Default => Ok(SurfaceParams::default()),
            SurfaceSource::File => {
                let p = path()?;
                let doc = io::read_surface_document(&p)?;
                inputs.push(p);
                Ok(doc.params())
            }
            SurfaceSource::Samples => {
                let p = path()?;
                let samples = io::read_samples(&p)?;
                inputs.push(p);
                let fit = fit_surface(&samples, &io::initial_guess(&samples))?;
                if !fit.converged {
                    return Err(CliError::Numerical(
                        "surface fit did not converge; run `fit` to inspect it".into(),
                    ));
                }
                Ok(fit.params)
            }
        }
    }

    fn curve(&self, index: usize, spec: &str, inputs: &mut Vec<PathBuf>) -> Result<StreamCurve, CliError> {
        let by_position = if index == 0 {
            StreamCurve::prompt()
        } else {
            StreamCurve::edge()
        };
        match spec {
            "default" => Ok(by_position),
            "prompt" => Ok(StreamCurve::prompt()),
            "edge" => Ok(StreamCurve::edge()),
            path if path.ends_with(".toml") => {
                let p = PathBuf::from(path);
                let c = io::read_curve_document(&p)?;
                inputs.push(p);
                Ok(c)
            }
            path if path.ends_with(".csv") => {
                let p = PathBuf::from(path);
                let samples = io::read_curve_samples(&p)?;
                inputs.push(p);
                let fit = fit_stream_curve(&samples, &by_position)?;
                if !fit.converged {
                    return Err(CliError::Numerical(format!("curve fit for {path} did not converge")));
                }
                Ok(fit.curve)
            }
            other => Err(CliError::Input(format!(
                "curve '{other}': expected default, prompt, edge, or a .toml/.csv path"
            ))),
        }
    }

    /// Loads all referenced files and builds the allocation problem.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if self.streams.len() != 2 {
            return Err(CliError::Input(format!(
                "exactly two streams are required, got {}",
                self.streams.len()
            )));
        }
        self.tolerance.validate()?;
        let mut inputs = Vec::new();
        let params = self.channel.params();
        params.validate()?;
        let states = realize_states(
            &params,
            self.channel.fading,
            RandomSeed(self.channel.seed.unwrap_or(self.seed)),
            2,
            self.channel.independent,
        )?;
        let surface = self.surface(&mut inputs)?;
        let mut streams = Vec::with_capacity(2);
        for (i, s) in self.streams.iter().enumerate() {
            if s.bits == 0 {
                return Err(CliError::Input(format!("stream '{}' has zero bits", s.name)));
            }
            streams.push(StreamSpec {
                name: s.name.clone(),
                bits: s.bits,
                modulation: s.scheme()?,
                channel: states[i],
                curve: self.curve(i, &s.curve, &mut inputs)?,
            });
        }
        let targets = self.targets.resolve()?;
        let streams: [StreamSpec; 2] = streams.try_into().expect("two streams");
        let problem = ProblemSpec {
            streams,
            surface,
            target: targets[0],
            tol: self.tolerance,
            cost_basis: self.cost_basis,
        };
        problem.validate()?;
        Ok(Resolved {
            config: self.clone(),
            problem,
            targets,
            solvers: self.solver_kinds()?,
            inputs,
        })
    }
}

impl Resolved {
    /// Modulations to sweep, each applied to both streams; the configured
    /// per-stream schemes when `sweep.modulations` is absent.
    pub fn sweep_problems(&self) -> Result<Vec<(String, ProblemSpec)>, CliError> {
        match &self.config.sweep.modulations {
            None => {
                let label = self.problem.streams[0].modulation.name.clone();
                Ok(vec![(label, self.problem.clone())])
            }
            Some(list) if list.is_empty() => Err(CliError::Input("sweep.modulations is empty".into())),
            Some(list) => list
                .iter()
                .map(|name| {
                    let scheme = ModulationScheme::preset(name)?;
                    let mut p = self.problem.clone();
                    for s in p.streams.iter_mut() {
                        s.modulation = scheme.clone();
                    }
                    Ok((scheme.name.clone(), p))
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default_scenario() {
        let cfg = ExperimentConfig::default();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.problem.streams[0].bits, 4096);
        assert_eq!(r.problem.streams[1].bits, 6835);
        assert_eq!(r.problem.streams[0].modulation, ModulationScheme::qam16());
        assert_eq!(r.solvers, SolverKind::ALL.to_vec());
        assert_eq!(r.targets, vec![0.6]);
        let gain_db = 10.0 * r.problem.streams[0].channel.gain.log10();
        assert!((gain_db + 98.0).abs() < 1e-9);
    }

    #[test]
    fn target_ranges() {
        let t = TargetSection {
            start: Some(0.35),
            stop: Some(0.85),
            step: Some(0.05),
            ..Default::default()
        };
        let v = t.resolve().unwrap();
        assert_eq!(v.len(), 11);
        assert!((v[10] - 0.85).abs() < 1e-12);
        let bad = TargetSection {
            values: Some(vec![0.5, 1.2]),
            ..Default::default()
        };
        assert!(bad.resolve().is_err());
        let mixed = TargetSection {
            values: Some(vec![0.5]),
            step: Some(0.1),
            ..Default::default()
        };
        assert!(mixed.resolve().is_err());
    }

    #[test]
    fn custom_and_overridden_modulation() {
        let s = StreamSection {
            name: "x".into(),
            modulation: "custom".into(),
            order: Some(4),
            a: Some(2.0),
            b: Some(1.0),
            ..StreamSection::default()
        };
        assert_eq!(s.scheme().unwrap().order, 4);
        let missing = StreamSection {
            modulation: "custom".into(),
            ..StreamSection::default()
        };
        assert!(missing.scheme().is_err());
        let tweaked = StreamSection {
            modulation: "8qam".into(),
            b: Some(6.0 / 7.0),
            ..StreamSection::default()
        };
        assert_eq!(tweaked.scheme().unwrap().b, 6.0 / 7.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("[channel]\nalpah = 3.0\n").is_err());
        assert!(ExperimentConfig::from_toml("solvers = [\"magic\"]\n")
            .unwrap()
            .solver_kinds()
            .is_err());
    }

    #[test]
    fn rayleigh_fading_is_seeded() {
        let text = "seed = 5\n[channel]\nfading = \"rayleigh\"\n";
        let a = ExperimentConfig::from_toml(text).unwrap().resolve().unwrap();
        let b = ExperimentConfig::from_toml(text).unwrap().resolve().unwrap();
        assert_eq!(a.problem.streams[0].channel, b.problem.streams[0].channel);
        assert_eq!(a.problem.streams[0].channel, a.problem.streams[1].channel);
        assert_ne!(a.problem.streams[0].channel.fading, 1.0);
    }
}
