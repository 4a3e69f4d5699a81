//! File formats: sample CSVs, surface and curve documents, report CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use semalloc::perception::{CurveSample, Sample, SampleSet, StreamCurve, SurfaceFit, SurfaceParams, SURFACE_FAMILY};
use semalloc::simulator::SimRow;
use semalloc::solvers::SweepRow;

use crate::error::CliError;

/// Header of every allocation CSV (`solve.csv`, `sweep_<mod>.csv`).
pub const ALLOCATION_HEADER: [&str; 10] = [
    "p_bar",
    "solver",
    "total_cost_w",
    "q1_w",
    "q2_w",
    "psi1",
    "psi2",
    "achieved_p",
    "iterations",
    "feasible",
];

/// Header of the simulator report CSV.
pub const SIMULATION_HEADER: [&str; 8] = [
    "stream",
    "q_w",
    "snr_db",
    "psi_analytic",
    "psi_empirical",
    "n_bits",
    "ci_low",
    "ci_high",
];

pub const SAMPLE_HEADER: [&str; 3] = ["psi1", "psi2", "P"];
pub const CURVE_SAMPLE_HEADER: [&str; 2] = ["psi", "P"];

/// Shortest round-trip representation, so CSVs re-read exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == 0.0 {
        "0".into()
    } else if (1e-3..1e4).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

fn located(path: &Path, line: Option<u64>, msg: impl std::fmt::Display) -> CliError {
    match line {
        Some(l) => CliError::Input(format!("{}:{l}: {msg}", path.display())),
        None => CliError::Input(format!("{}: {msg}", path.display())),
    }
}

/// Reads a headed CSV (`#` starts a comment line) into typed rows, each
/// checked by `check`. Diagnostics carry the 1-based file line.
fn read_rows<T, F>(path: &Path, header: &[&str], check: F) -> Result<Vec<T>, CliError>
where
    T: serde::de::DeserializeOwned,
    F: Fn(&T) -> Option<String>,
{
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| located(path, None, e))?;
    let headers = rdr
        .headers()
        .map_err(|e| located(path, e.position().map(|p| p.line()), e))?
        .clone();
    if headers.iter().ne(header.iter().copied()) {
        let line = headers.position().map(|p| p.line());
        return Err(located(
            path,
            line,
            format!("expected header `{}`, found `{}`", header.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(located(path, e.position().map(|p| p.line()), e)),
        }
        let line = record.position().map(|p| p.line());
        let row: T = record
            .deserialize(Some(&headers))
            .map_err(|e| located(path, line, format!("invalid row: {e}")))?;
        if let Some(msg) = check(&row) {
            return Err(located(path, line, msg));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Reads a `psi1,psi2,P` sample file.
pub fn read_samples(path: &Path) -> Result<SampleSet, CliError> {
    let rows = read_rows(path, &SAMPLE_HEADER, |s: &Sample| {
        let ok = (0.0..=0.5).contains(&s.psi1) && (0.0..=0.5).contains(&s.psi2) && in_unit(s.p);
        (!ok).then(|| format!("sample ({}, {}, {}) is outside [0, 0.5]² × [0, 1]", s.psi1, s.psi2, s.p))
    })?;
    SampleSet::new(rows).map_err(|e| located(path, None, e))
}

/// Reads a `psi,P` single-stream sample file.
pub fn read_curve_samples(path: &Path) -> Result<Vec<CurveSample>, CliError> {
    read_rows(path, &CURVE_SAMPLE_HEADER, |s: &CurveSample| {
        let ok = (0.0..=0.5).contains(&s.psi) && in_unit(s.p);
        (!ok).then(|| format!("sample ({}, {}) is outside [0, 0.5] × [0, 1]", s.psi, s.p))
    })
}

pub fn write_samples(path: &Path, samples: &SampleSet, comment: &str) -> Result<(), CliError> {
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{}", SAMPLE_HEADER.join(","));
    for s in &samples.rows {
        let _ = writeln!(out, "{},{},{}", fmt_f64(s.psi1), fmt_f64(s.psi2), fmt_f64(s.p));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Fit diagnostics stored next to the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRecord {
    pub rmse: f64,
    pub n_samples: usize,
    pub iterations: usize,
    pub converged: bool,
    pub samples_sha256: String,
}

/// TOML document holding a perception surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceDocument {
    pub family: String,
    pub p0: f64,
    pub pmax: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitRecord>,
}

impl SurfaceDocument {
    pub fn new(s: &SurfaceParams) -> Self {
        Self {
            family: SURFACE_FAMILY.into(),
            p0: s.p0,
            pmax: s.pmax,
            tau1: s.tau1,
            tau2: s.tau2,
            beta1: s.beta1,
            beta2: s.beta2,
            fit: None,
        }
    }

    pub fn from_fit(fit: &SurfaceFit, samples_sha256: String) -> Self {
        Self {
            fit: Some(FitRecord {
                rmse: fit.rmse,
                n_samples: fit.n_samples,
                iterations: fit.iterations,
                converged: fit.converged,
                samples_sha256,
            }),
            ..Self::new(&fit.params)
        }
    }

    pub fn params(&self) -> SurfaceParams {
        SurfaceParams {
            p0: self.p0,
            pmax: self.pmax,
            tau1: self.tau1,
            tau2: self.tau2,
            beta1: self.beta1,
            beta2: self.beta2,
        }
    }
}

pub fn read_surface_document(path: &Path) -> Result<SurfaceDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|e| located(path, None, e))?;
    let doc: SurfaceDocument = toml::from_str(&text).map_err(|e| located(path, None, e))?;
    if doc.family != SURFACE_FAMILY {
        return Err(located(
            path,
            None,
            format!("unknown surface family '{}' (supported: {SURFACE_FAMILY})", doc.family),
        ));
    }
    doc.params().validate().map_err(|e| located(path, None, e))?;
    Ok(doc)
}

pub fn write_surface_document(path: &Path, doc: &SurfaceDocument) -> Result<(), CliError> {
    let text = toml::to_string(doc).map_err(|e| CliError::Input(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn read_curve_document(path: &Path) -> Result<StreamCurve, CliError> {
    let text = fs::read_to_string(path).map_err(|e| located(path, None, e))?;
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Doc {
        #[allow(dead_code)]
        name: Option<String>,
        p0: f64,
        pmax: f64,
        tau: f64,
        beta: f64,
    }
    let d: Doc = toml::from_str(&text).map_err(|e| located(path, None, e))?;
    let c = StreamCurve {
        p0: d.p0,
        pmax: d.pmax,
        tau: d.tau,
        beta: d.beta,
    };
    c.validate().map_err(|e| located(path, None, e))?;
    Ok(c)
}

/// Starting point for a surface fit: floor and ceiling from the data,
/// scales from the bundled surface.
pub fn initial_guess(samples: &SampleSet) -> SurfaceParams {
    let (lo, hi) = samples
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.p), hi.max(s.p)));
    let d = SurfaceParams::default();
    let p0 = lo.clamp(1e-3, 0.98);
    let pmax = hi.clamp(p0 + 1e-3, 0.999);
    SurfaceParams { p0, pmax, ..d }
}

/// Renders allocation rows; failed rows keep their target and solver and
/// carry `nan` in the numeric columns.
pub fn allocation_csv(rows: &[SweepRow]) -> String {
    let mut out = ALLOCATION_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let _ = match &r.outcome {
            Ok(a) => writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(r.target),
                r.solver,
                fmt_f64(a.total_cost),
                fmt_f64(a.q[0]),
                fmt_f64(a.q[1]),
                fmt_f64(a.psi[0]),
                fmt_f64(a.psi[1]),
                fmt_f64(a.achieved_p),
                a.iterations,
                a.feasible
            ),
            Err(_) => writeln!(out, "{},{},nan,nan,nan,nan,nan,nan,0,false", fmt_f64(r.target), r.solver),
        };
    }
    out
}

pub fn simulation_csv(rows: &[SimRow]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(SIMULATION_HEADER).map_err(|e| CliError::Input(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.stream.clone(),
            fmt_f64(r.q_w),
            fmt_f64(r.snr_db),
            fmt_f64(r.psi_analytic),
            fmt_f64(r.psi_empirical),
            r.n_bits.to_string(),
            fmt_f64(r.ci_low),
            fmt_f64(r.ci_high),
        ])
        .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, 0.45, 40.41234567891234, 1.234e-9, 3.5e-15, 12345.678, -2.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(0.45), "0.45");
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
