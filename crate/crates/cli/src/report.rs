//! Report documents and their deterministic JSON rendering.
//!
//! Key order follows struct field order and every float is printed with 17
//! significant digits, so identical runs give byte-identical output.

use std::io;

use jaynes_qmp::attractors::PeripheralEigenvalue;
use jaynes_qmp::motion::Parity;
use jaynes_qmp::{Operator, Tolerances};
use serde::ser::Serializer;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::files::{matrix_to_data, MatrixData};

struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // `-0.0` prints like `0.0` so sign noise never changes a report
        let value = if value == 0.0 { 0.0 } else { value };
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with fixed-width floats and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Floats that may be infinite or NaN are written as `"inf"`, `"-inf"`, `"nan"`.
pub fn extended_real<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
    if value.is_finite() {
        s.serialize_f64(*value)
    } else if value.is_nan() {
        s.serialize_str("nan")
    } else if *value > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub tool_version: &'static str,
    pub spec: SpecEcho,
    pub tolerances: Vec<ToleranceEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<Analysis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution: Option<Vec<EvolutionSample>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationSection>,
}

impl Report {
    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }
}

#[derive(Debug, Serialize)]
pub struct ToleranceEntry {
    pub key: &'static str,
    pub value: f64,
}

pub fn tolerance_entries(tol: &Tolerances) -> Vec<ToleranceEntry> {
    tol.entries()
        .into_iter()
        .map(|(key, value)| ToleranceEntry { key, value })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct SpecEcho {
    pub label: Option<String>,
    pub kind: &'static str,
    pub dim: usize,
    pub operator_count: usize,
    pub trace_preservation_residual: f64,
    pub unital: bool,
}

#[derive(Debug, Serialize)]
pub struct Analysis {
    pub spectrum: Vec<SpectrumEntry>,
    pub dim_attractor: usize,
    /// `null` when there is no decaying part.
    pub spectral_gap: Option<f64>,
    pub regime_time: f64,
    pub t_projector_rank: usize,
    pub sigma_i: MatrixData,
    pub motion_basis: Vec<BasisEntry>,
}

#[derive(Debug, Serialize)]
pub struct SpectrumEntry {
    pub lambda: [f64; 2],
    /// Generator eigenvalue, continuous processes only.
    pub rate: Option<[f64; 2]>,
    pub multiplicity: usize,
    pub stationary: bool,
}

impl From<&PeripheralEigenvalue> for SpectrumEntry {
    fn from(e: &PeripheralEigenvalue) -> Self {
        Self {
            lambda: [e.lambda.re, e.lambda.im],
            rate: e.rate.map(|a| [a.re, a.im]),
            multiplicity: e.multiplicity,
            stationary: e.stationary,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BasisEntry {
    pub label: String,
    pub parity: &'static str,
    pub integral: bool,
    /// Frequency `arg λ` (discrete) or `Im a` (continuous).
    pub frequency: f64,
    pub value_at_zero: MatrixData,
}

pub fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Plus => "plus",
        Parity::Minus => "minus",
        Parity::Identity => "identity",
        Parity::Observable => "observable",
    }
}

#[derive(Debug, Serialize)]
pub struct EvolutionSample {
    pub t: f64,
    pub brute_force: MatrixData,
    pub asymptotic: MatrixData,
    pub discrepancy: f64,
}

#[derive(Debug, Serialize)]
pub struct FitSection {
    pub mode: &'static str,
    pub t_eval: f64,
    pub constraints: Vec<ConstraintEcho>,
    pub gammas: Vec<f64>,
    pub log_partition: f64,
    pub achieved_moments: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub status: &'static str,
    pub min_hessian_eigenvalue: f64,
    pub entropy: Option<EntropySection>,
    pub samples: Vec<StateSample>,
}

#[derive(Debug, Serialize)]
pub struct ConstraintEcho {
    pub label: String,
    pub target: f64,
    pub integral: bool,
}

#[derive(Debug, Serialize)]
pub struct EntropySection {
    #[serde(serialize_with = "extended_real")]
    pub relative_entropy: f64,
    pub identity_value: f64,
    pub check: f64,
}

#[derive(Debug, Serialize)]
pub struct StateSample {
    pub t: f64,
    pub state: MatrixData,
}

pub fn sample(t: f64, op: &Operator) -> StateSample {
    StateSample {
        t,
        state: matrix_to_data(op),
    }
}

#[derive(Debug, Serialize)]
pub struct VerificationSection {
    pub suite: &'static str,
    pub all_passed: bool,
    pub checks: Vec<CheckRow>,
}

#[derive(Debug, Serialize)]
pub struct CheckRow {
    pub name: &'static str,
    pub passed: bool,
    #[serde(serialize_with = "extended_real")]
    pub residual: f64,
    pub tolerance: f64,
    pub detail: Option<String>,
}
