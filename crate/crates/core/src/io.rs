//! On-disk formats: `HDQ1` grid functions, `HDQM1` matrix symbols, `HDQS1` j-group functions
//! and a CSV rendering of each.
//!
//! The JSON formats are a single object whose header fields sit next to a `data` array of
//! `[re, im]` pairs in row-major order. CSV files start with a `# key=value …` line that
//! carries the same header, followed by a column header row and one row per sample.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HdqError, Result};
use crate::grid::{Axis, GridFunction, GridSpec};
use crate::jgroup::{JGroupFunction, JGroupSpec};
use crate::linalg::{CMat, C64};
use crate::matrix_basis::{synthesize_basis, MatrixSymbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    #[serde(rename = "HDQ1")]
    Hdq1,
    #[serde(rename = "HDQM1")]
    Hdqm1,
    #[serde(rename = "HDQS1")]
    Hdqs1,
    #[serde(rename = "CSV")]
    Csv,
}

impl FromStr for Format {
    type Err = HdqError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HDQ1" => Ok(Format::Hdq1),
            "HDQM1" => Ok(Format::Hdqm1),
            "HDQS1" => Ok(Format::Hdqs1),
            "CSV" => Ok(Format::Csv),
            _ => Err(HdqError::ParseError(format!("unknown format {s:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Hdq1 => "HDQ1",
            Format::Hdqm1 => "HDQM1",
            Format::Hdqs1 => "HDQS1",
            Format::Csv => "CSV",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Grid(GridFunction),
    Matrix(MatrixSymbol),
    JGroup(JGroupFunction),
}

impl Document {
    /// The JSON format this document is stored in natively.
    pub fn native_format(&self) -> Format {
        match self {
            Document::Grid(_) => Format::Hdq1,
            Document::Matrix(_) => Format::Hdqm1,
            Document::JGroup(_) => Format::Hdqs1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisHeader {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

impl From<Axis> for AxisHeader {
    fn from(a: Axis) -> Self {
        Self { m: a.m, l: a.l }
    }
}

impl From<AxisHeader> for Axis {
    fn from(h: AxisHeader) -> Self {
        Axis::new(h.m, h.l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JGroupGrids {
    pub a: AxisHeader,
    pub x: [AxisHeader; 2],
    pub l: AxisHeader,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "format", deny_unknown_fields)]
enum JsonFile {
    #[serde(rename = "HDQ1")]
    Grid {
        n: usize,
        #[serde(rename = "M")]
        m: usize,
        #[serde(rename = "L")]
        l: f64,
        theta: f64,
        data: Vec<[f64; 2]>,
    },
    #[serde(rename = "HDQM1")]
    Matrix {
        #[serde(rename = "N")]
        n: usize,
        theta: f64,
        coeffs: Vec<[f64; 2]>,
    },
    #[serde(rename = "HDQS1")]
    JGroup { n: usize, grids: JGroupGrids, theta: f64, data: Vec<[f64; 2]> },
}

fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn unpairs(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

fn row_major(m: &CMat) -> Vec<C64> {
    (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect()
}

fn jgroup_spec(n: usize, g: &JGroupGrids, theta: f64) -> Result<JGroupSpec> {
    if n != 1 {
        return Err(HdqError::SpecMismatch(format!("HDQS1 supports n = 1, got {n}")));
    }
    JGroupSpec::new(g.a.into(), g.x[0].into(), g.x[1].into(), g.l.into(), theta)
}

fn matrix_symbol(n: usize, theta: f64, coeffs: Vec<C64>) -> Result<MatrixSymbol> {
    if n == 0 || coeffs.len() != n * n {
        return Err(HdqError::ParseError(format!("HDQM1 with N = {n} needs N² coefficients, got {}", coeffs.len())));
    }
    MatrixSymbol::new(theta, CMat::from_row_slice(n, n, &coeffs))
}

impl JsonFile {
    fn from_document(doc: &Document) -> Self {
        match doc {
            Document::Grid(f) => JsonFile::Grid {
                n: f.spec.n,
                m: f.spec.m,
                l: f.spec.l,
                theta: f.spec.theta,
                data: pairs(&f.samples),
            },
            Document::Matrix(s) => JsonFile::Matrix { n: s.trunc, theta: s.theta, coeffs: pairs(&row_major(&s.coeffs)) },
            Document::JGroup(f) => JsonFile::JGroup {
                n: f.spec.n,
                grids: JGroupGrids { a: f.spec.a.into(), x: [f.spec.xq.into(), f.spec.xp.into()], l: f.spec.l.into() },
                theta: f.spec.theta,
                data: pairs(&f.samples),
            },
        }
    }

    fn into_document(self) -> Result<Document> {
        match self {
            JsonFile::Grid { n, m, l, theta, data } => {
                Ok(Document::Grid(GridFunction::from_samples(GridSpec::new(n, m, l, theta)?, unpairs(&data))?))
            }
            JsonFile::Matrix { n, theta, coeffs } => Ok(Document::Matrix(matrix_symbol(n, theta, unpairs(&coeffs))?)),
            JsonFile::JGroup { n, grids, theta, data } => {
                Ok(Document::JGroup(JGroupFunction::from_samples(jgroup_spec(n, &grids, theta)?, unpairs(&data))?))
            }
        }
    }
}

/// Parses any of the four formats; CSV is recognised by its leading `#` line.
pub fn read_document(text: &str) -> Result<Document> {
    if text.trim_start().starts_with('#') {
        return read_csv(text);
    }
    let f: JsonFile = serde_json::from_str(text).map_err(|e| HdqError::ParseError(e.to_string()))?;
    f.into_document()
}

/// Renders `doc` in `format`. JSON formats must match the document kind; CSV takes any kind.
pub fn write_document(doc: &Document, format: Format) -> Result<String> {
    match format {
        Format::Csv => write_csv(doc),
        f if f == doc.native_format() => {
            Ok(serde_json::to_string(&JsonFile::from_document(doc)).expect("finite header fields serialize"))
        }
        f => Err(HdqError::SpecMismatch(format!("{} document cannot be written as {f}", doc.native_format()))),
    }
}

/// Grid parameters used when a matrix symbol is synthesized onto a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvertOptions {
    pub m: usize,
    pub l: Option<f64>,
    pub trunc: usize,
}

/// Converts between document kinds. Grid to matrix keeps the first `trunc` modes; matrix to
/// grid samples `Σ f_mn b_mn` on an `m`-point grid with half-width `l` (default `6√θ`).
pub fn convert_document(doc: Document, target: Format, opts: ConvertOptions) -> Result<Document> {
    match (doc, target) {
        (d, Format::Csv) => Ok(d),
        (d, t) if d.native_format() == t => Ok(d),
        (Document::Grid(f), Format::Hdqm1) => {
            let cache = synthesize_basis(f.spec, opts.trunc)?;
            Ok(Document::Matrix(cache.forward(&f)?))
        }
        (Document::Matrix(s), Format::Hdq1) => {
            let l = opts.l.unwrap_or(6.0 * s.theta.sqrt());
            let cache = synthesize_basis(GridSpec::new(1, opts.m, l, s.theta)?, s.trunc)?;
            Ok(Document::Grid(cache.backward(&s)?))
        }
        (d, t) => Err(HdqError::SpecMismatch(format!("no conversion from {} to {t}", d.native_format()))),
    }
}

fn header_line(doc: &Document) -> String {
    match doc {
        Document::Grid(f) => format!("# format=HDQ1 n={} M={} L={} theta={}", f.spec.n, f.spec.m, f.spec.l, f.spec.theta),
        Document::Matrix(s) => format!("# format=HDQM1 N={} theta={}", s.trunc, s.theta),
        Document::JGroup(f) => {
            let s = f.spec;
            format!(
                "# format=HDQS1 n={} a.M={} a.L={} xq.M={} xq.L={} xp.M={} xp.L={} l.M={} l.L={} theta={}",
                s.n, s.a.m, s.a.l, s.xq.m, s.xq.l, s.xp.m, s.xp.l, s.l.m, s.l.l, s.theta
            )
        }
    }
}

fn write_csv(doc: &Document) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HdqError::ParseError(e.to_string());
    match doc {
        Document::Grid(f) => {
            let n = f.spec.n;
            let mut head: Vec<String> = (0..n).map(|j| format!("q{j}")).chain((0..n).map(|j| format!("p{j}"))).collect();
            head.extend(["re".into(), "im".into()]);
            w.write_record(&head).map_err(csv_err)?;
            for (k, z) in f.samples.iter().enumerate() {
                let mut row: Vec<String> = f.spec.point(k).iter().map(|v| v.to_string()).collect();
                row.extend([z.re.to_string(), z.im.to_string()]);
                w.write_record(&row).map_err(csv_err)?;
            }
        }
        Document::Matrix(s) => {
            w.write_record(["m", "n", "re", "im"]).map_err(csv_err)?;
            for m in 0..s.trunc {
                for n in 0..s.trunc {
                    let z = s.coeffs[(m, n)];
                    w.write_record([m.to_string(), n.to_string(), z.re.to_string(), z.im.to_string()]).map_err(csv_err)?;
                }
            }
        }
        Document::JGroup(f) => {
            w.write_record(["a", "xq", "xp", "l", "re", "im"]).map_err(csv_err)?;
            for (k, z) in f.samples.iter().enumerate() {
                let g = f.spec.element(k);
                w.write_record([g.a, g.x[0], g.x[1], g.l, z.re, z.im].map(|v| v.to_string())).map_err(csv_err)?;
            }
        }
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| HdqError::ParseError(e.to_string()))?)
        .expect("csv output is utf-8");
    Ok(format!("{}\n{body}", header_line(doc)))
}

fn read_csv(text: &str) -> Result<Document> {
    let (first, rest) = text.trim_start().split_once('\n').unwrap_or((text, ""));
    let fields: std::collections::HashMap<&str, &str> = first
        .trim_start_matches('#')
        .split_whitespace()
        .map(|kv| kv.split_once('=').ok_or_else(|| HdqError::ParseError(format!("bad CSV header entry {kv:?}"))))
        .collect::<Result<_>>()?;
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| HdqError::ParseError(format!("CSV header lacks {k}")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| HdqError::ParseError(format!("bad value for {k}"))) };
    let int = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| HdqError::ParseError(format!("bad value for {k}"))) };

    let mut values = Vec::new();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    for rec in r.records() {
        let rec = rec.map_err(|e| HdqError::ParseError(e.to_string()))?;
        let n = rec.len();
        if n < 2 {
            return Err(HdqError::ParseError("CSV row lacks re, im columns".into()));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| HdqError::ParseError(format!("bad number {s:?}")));
        values.push(C64::new(parse(&rec[n - 2])?, parse(&rec[n - 1])?));
    }
    let file = match get("format")? {
        "HDQ1" => JsonFile::Grid { n: int("n")?, m: int("M")?, l: num("L")?, theta: num("theta")?, data: pairs(&values) },
        "HDQM1" => JsonFile::Matrix { n: int("N")?, theta: num("theta")?, coeffs: pairs(&values) },
        "HDQS1" => {
            let ax = |p: &str| -> Result<AxisHeader> { Ok(AxisHeader { m: int(&format!("{p}.M"))?, l: num(&format!("{p}.L"))? }) };
            let grids = JGroupGrids { a: ax("a")?, x: [ax("xq")?, ax("xp")?], l: ax("l")? };
            JsonFile::JGroup { n: int("n")?, grids, theta: num("theta")?, data: pairs(&values) }
        }
        other => return Err(HdqError::ParseError(format!("unknown format {other:?} in CSV header"))),
    };
    file.into_document()
}
