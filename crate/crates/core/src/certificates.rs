//! Text formats for matrices, witness certificates and invariant reports.
//!
//! # Matrix format
//!
//! ```text
//! # comment until end of line
//! label A B        (optional; row label then column label)
//! 2 3              (rows cols, both positive)
//! 1 0 2
//! 0 0 1
//! ```
//!
//! Blank lines and comments may appear anywhere. Entries are unsigned
//! decimal integers of any size separated by whitespace. [`write_matrix`]
//! always emits the label line, single spaces and a trailing newline; that
//! is the canonical form.
//!
//! # Certificate format
//!
//! A TOML document with these keys and no others:
//!
//! ```toml
//! schema_version = 1
//! kind = "esse"            # esse | sse-chain | se | sme
//! left = """<matrix>"""    # E, or T_0 for a chain
//! right = """<matrix>"""   # F, or T_n for a chain
//!
//! [witness]
//! r = """<matrix>"""       # esse, se
//! s = """<matrix>"""       # esse, se
//! lag = 2                  # se
//! p = """<matrix>"""       # sme
//! intermediates = [...]    # sse-chain: T_1 .. T_(n-1), may be empty
//!
//! [[witness.links]]        # sse-chain: one table per link, with r and s
//! r = """<matrix>"""
//! s = """<matrix>"""
//!
//! [verdict]                # optional, advisory only
//! accepted = true
//! toolkit_version = "0.1.0"
//! ```
//!
//! Matrices are embedded in the matrix format above. A cached verdict is
//! never trusted: use [`Certificate::verify`] after loading.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equivalences::{
    verify_esse, verify_se, verify_sme, verify_sse_chain, EquivError, EsseWitness, SeWitness,
    SmeWitness, SseChain, Verdict,
};
use crate::invariants::InvariantReport;
use crate::matrix::{CorrMatrix, Label};

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("negative entry at line {line}, column {column}")]
    NegativeEntry { line: usize, column: usize },
    #[error("shape mismatch at line {line}: {message}")]
    ShapeMismatch { line: usize, message: String },
    #[error("unsupported schema version {0} (supported: {SCHEMA_VERSION})")]
    SchemaVersionUnsupported(i64),
    #[error("witness payload does not match kind {kind}: {message}")]
    KindMismatch { kind: Kind, message: String },
    #[error("chain endpoints do not match left/right matrices")]
    ChainEndpoints,
    #[error("in {field}: {source}")]
    Embedded {
        field: String,
        #[source]
        source: Box<FormatError>,
    },
    #[error(transparent)]
    Witness(#[from] EquivError),
}

impl FormatError {
    fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn within(self, field: impl Into<String>) -> Self {
        FormatError::Embedded {
            field: field.into(),
            source: Box::new(self),
        }
    }
}

/// Whitespace-separated tokens of a line with their 1-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let token = &tail[..len];
        let column = line[..offset + start].chars().count() + 1;
        offset += start + len;
        rest = &tail[len..];
        Some((column, token))
    })
}

fn parse_count(line: usize, column: usize, token: &str, what: &str) -> Result<usize, FormatError> {
    if !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(FormatError::parse(
            line,
            column,
            format!("{what} must be a decimal count, got {token:?}"),
        ));
    }
    let n: usize = token
        .parse()
        .map_err(|_| FormatError::parse(line, column, format!("{what} {token} is too large")))?;
    if n == 0 {
        return Err(FormatError::ShapeMismatch {
            line,
            message: format!("{what} must be positive"),
        });
    }
    Ok(n)
}

fn parse_entry(line: usize, column: usize, token: &str) -> Result<BigUint, FormatError> {
    let bytes = token.as_bytes();
    if bytes.first() == Some(&b'-') && bytes.len() > 1 && bytes[1..].iter().all(u8::is_ascii_digit)
    {
        return Err(FormatError::NegativeEntry { line, column });
    }
    if bytes.is_empty() || !bytes.iter().all(u8::is_ascii_digit) {
        return Err(FormatError::parse(
            line,
            column,
            format!("expected a non-negative integer, got {token:?}"),
        ));
    }
    BigUint::parse_bytes(bytes, 10)
        .ok_or_else(|| FormatError::parse(line, column, format!("bad integer {token:?}")))
}

fn parse_label(line: usize, column: usize, token: &str) -> Result<Label, FormatError> {
    Label::new(token).map_err(|e| FormatError::parse(line, column, e.to_string()))
}

/// Parses the matrix text format.
pub fn parse_matrix(text: &str) -> Result<CorrMatrix, FormatError> {
    let mut content = text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        (!body.trim().is_empty()).then_some((i + 1, body))
    });

    let Some((mut lineno, mut line)) = content.next() else {
        return Err(FormatError::parse(1, 1, "empty matrix text"));
    };

    let mut labels = None;
    let first: Vec<_> = tokens(line).collect();
    if first[0].1 == "label" {
        if first.len() != 3 {
            return Err(FormatError::parse(
                lineno,
                first[0].0,
                "label line needs exactly a row label and a column label",
            ));
        }
        labels = Some((
            parse_label(lineno, first[1].0, first[1].1)?,
            parse_label(lineno, first[2].0, first[2].1)?,
        ));
        (lineno, line) = content
            .next()
            .ok_or_else(|| FormatError::parse(lineno + 1, 1, "missing dimension line"))?;
    }

    let dims: Vec<_> = tokens(line).collect();
    if dims.len() != 2 {
        return Err(FormatError::parse(
            lineno,
            1,
            "dimension line must be `rows cols`",
        ));
    }
    let rows = parse_count(lineno, dims[0].0, dims[0].1, "row count")?;
    let cols = parse_count(lineno, dims[1].0, dims[1].1, "column count")?;
    if rows.checked_mul(cols).is_none() {
        return Err(FormatError::ShapeMismatch {
            line: lineno,
            message: format!("{rows}x{cols} is too large"),
        });
    }
    let dims_line = lineno;

    let mut entries = Vec::new();
    for r in 0..rows {
        let Some((lineno, line)) = content.next() else {
            return Err(FormatError::ShapeMismatch {
                line: dims_line,
                message: format!("expected {rows} rows, found {r}"),
            });
        };
        let mut count = 0;
        for (column, token) in tokens(line) {
            count += 1;
            if count > cols {
                return Err(FormatError::ShapeMismatch {
                    line: lineno,
                    message: format!("row has more than {cols} entries"),
                });
            }
            entries.push(parse_entry(lineno, column, token)?);
        }
        if count != cols {
            return Err(FormatError::ShapeMismatch {
                line: lineno,
                message: format!("expected {cols} entries, found {count}"),
            });
        }
    }
    if let Some((lineno, _)) = content.next() {
        return Err(FormatError::ShapeMismatch {
            line: lineno,
            message: format!("extra content after {rows} rows"),
        });
    }

    let (row_label, col_label) =
        labels.unwrap_or_else(|| (Label::anonymous(rows), Label::anonymous(cols)));
    CorrMatrix::new(row_label, col_label, rows, cols, entries).map_err(|e| {
        FormatError::ShapeMismatch {
            line: dims_line,
            message: e.to_string(),
        }
    })
}

/// Canonical text form of a matrix.
pub fn write_matrix(m: &CorrMatrix) -> String {
    let mut out = format!(
        "label {} {}\n{} {}\n",
        m.row_label(),
        m.col_label(),
        m.rows(),
        m.cols()
    );
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(ToString::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Esse,
    SseChain,
    Se,
    Sme,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Esse => "esse",
            Kind::SseChain => "sse-chain",
            Kind::Se => "se",
            Kind::Sme => "sme",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "esse" => Ok(Kind::Esse),
            "sse-chain" => Ok(Kind::SseChain),
            "se" => Ok(Kind::Se),
            "sme" => Ok(Kind::Sme),
            other => Err(format!("unknown certificate kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessPayload {
    Esse(EsseWitness),
    SseChain(SseChain),
    Se(SeWitness),
    Sme(SmeWitness),
}

impl WitnessPayload {
    pub fn kind(&self) -> Kind {
        match self {
            WitnessPayload::Esse(_) => Kind::Esse,
            WitnessPayload::SseChain(_) => Kind::SseChain,
            WitnessPayload::Se(_) => Kind::Se,
            WitnessPayload::Sme(_) => Kind::Sme,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedVerdict {
    pub accepted: bool,
    pub toolkit_version: String,
}

/// Two matrices, a witness relating them and an optional cached verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    left: CorrMatrix,
    right: CorrMatrix,
    witness: WitnessPayload,
    verdict: Option<CachedVerdict>,
}

impl Certificate {
    /// For a chain, `left` and `right` must be its first and last matrices.
    pub fn new(
        left: CorrMatrix,
        right: CorrMatrix,
        witness: WitnessPayload,
    ) -> Result<Self, FormatError> {
        if let WitnessPayload::SseChain(chain) = &witness {
            if chain.first() != &left || chain.last() != &right {
                return Err(FormatError::ChainEndpoints);
            }
        }
        Ok(Certificate {
            left,
            right,
            witness,
            verdict: None,
        })
    }

    pub fn with_verdict(mut self, verdict: Option<CachedVerdict>) -> Self {
        self.verdict = verdict;
        self
    }

    pub fn kind(&self) -> Kind {
        self.witness.kind()
    }

    pub fn left(&self) -> &CorrMatrix {
        &self.left
    }

    pub fn right(&self) -> &CorrMatrix {
        &self.right
    }

    pub fn witness(&self) -> &WitnessPayload {
        &self.witness
    }

    /// The cached verdict as stored; advisory only.
    pub fn cached_verdict(&self) -> Option<&CachedVerdict> {
        self.verdict.as_ref()
    }

    /// Re-checks the witness from scratch, ignoring any cached verdict.
    pub fn verify(&self) -> Result<Verdict, EquivError> {
        match &self.witness {
            WitnessPayload::Esse(w) => verify_esse(&self.left, &self.right, w),
            WitnessPayload::SseChain(chain) => verify_sse_chain(chain),
            WitnessPayload::Se(w) => verify_se(&self.left, &self.right, w),
            WitnessPayload::Sme(w) => verify_sme(&self.left, &self.right, w),
        }
    }

    /// Verifies and records the fresh verdict with this toolkit's version.
    pub fn stamped(self) -> Result<(Self, Verdict), EquivError> {
        let verdict = self.verify()?;
        let cached = CachedVerdict {
            accepted: verdict.is_accept(),
            toolkit_version: crate::TOOLKIT_VERSION.to_string(),
        };
        Ok((self.with_verdict(Some(cached)), verdict))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCertificate {
    schema_version: i64,
    kind: String,
    left: String,
    right: String,
    witness: RawWitness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verdict: Option<RawVerdict>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWitness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lag: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intermediates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    links: Option<Vec<RawLink>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    r: String,
    s: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerdict {
    accepted: bool,
    toolkit_version: String,
}

fn toml_error(text: &str, err: &toml::de::Error) -> FormatError {
    let (line, column) = match err.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            (line, column)
        }
        None => (0, 0),
    };
    FormatError::parse(line, column, err.message().to_string())
}

fn embedded(field: &str, text: &str) -> Result<CorrMatrix, FormatError> {
    parse_matrix(text).map_err(|e| e.within(field))
}

pub fn parse_certificate(bytes: &[u8]) -> Result<Certificate, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let before = &bytes[..e.valid_up_to()];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        FormatError::parse(line, 1, "certificate is not valid UTF-8")
    })?;

    // Check the version before the strict schema, so that a newer file is
    // reported as such rather than as a pile of unknown fields.
    let table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    match table.get("schema_version") {
        Some(toml::Value::Integer(v)) if *v == SCHEMA_VERSION => {}
        Some(toml::Value::Integer(v)) => return Err(FormatError::SchemaVersionUnsupported(*v)),
        Some(_) => {
            return Err(FormatError::parse(
                0,
                0,
                "schema_version must be an integer",
            ))
        }
        None => return Err(FormatError::parse(0, 0, "missing schema_version")),
    }

    let raw: RawCertificate = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    let kind: Kind = raw
        .kind
        .parse()
        .map_err(|m: String| FormatError::parse(0, 0, m))?;
    let left = embedded("left", &raw.left)?;
    let right = embedded("right", &raw.right)?;
    let w = raw.witness;
    let mismatch = |message: &str| FormatError::KindMismatch {
        kind,
        message: message.to_string(),
    };

    let has = [
        ("r", w.r.is_some()),
        ("s", w.s.is_some()),
        ("lag", w.lag.is_some()),
        ("p", w.p.is_some()),
        ("intermediates", w.intermediates.is_some()),
        ("links", w.links.is_some()),
    ];
    let (required, allowed): (&[&str], &[&str]) = match kind {
        Kind::Esse => (&["r", "s"], &["r", "s"]),
        Kind::Se => (&["r", "s", "lag"], &["r", "s", "lag"]),
        Kind::Sme => (&["p"], &["p"]),
        Kind::SseChain => (&["links"], &["links", "intermediates"]),
    };
    for (name, present) in has {
        if present && !allowed.contains(&name) {
            return Err(mismatch(&format!("unexpected witness field `{name}`")));
        }
        if !present && required.contains(&name) {
            return Err(mismatch(&format!("missing witness field `{name}`")));
        }
    }

    let payload = match kind {
        Kind::Esse => WitnessPayload::Esse(EsseWitness {
            r: embedded("witness.r", w.r.as_deref().unwrap_or_default())?,
            s: embedded("witness.s", w.s.as_deref().unwrap_or_default())?,
        }),
        Kind::Se => WitnessPayload::Se(SeWitness {
            r: embedded("witness.r", w.r.as_deref().unwrap_or_default())?,
            s: embedded("witness.s", w.s.as_deref().unwrap_or_default())?,
            lag: w.lag.unwrap_or_default(),
        }),
        Kind::Sme => WitnessPayload::Sme(SmeWitness {
            p: embedded("witness.p", w.p.as_deref().unwrap_or_default())?,
        }),
        Kind::SseChain => {
            let raw_links = w.links.unwrap_or_default();
            if raw_links.is_empty() {
                return Err(mismatch("a chain needs at least one link"));
            }
            let interior = w.intermediates.unwrap_or_default();
            if interior.len() + 1 != raw_links.len() {
                return Err(mismatch(&format!(
                    "{} links need {} intermediates, found {}",
                    raw_links.len(),
                    raw_links.len() - 1,
                    interior.len()
                )));
            }
            let mut matrices = vec![left.clone()];
            for (i, t) in interior.iter().enumerate() {
                matrices.push(embedded(&format!("witness.intermediates[{i}]"), t)?);
            }
            matrices.push(right.clone());
            let links = raw_links
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    Ok(EsseWitness {
                        r: embedded(&format!("witness.links[{i}].r"), &l.r)?,
                        s: embedded(&format!("witness.links[{i}].s"), &l.s)?,
                    })
                })
                .collect::<Result<Vec<_>, FormatError>>()?;
            WitnessPayload::SseChain(SseChain::new(matrices, links)?)
        }
    };

    let verdict = raw.verdict.map(|v| CachedVerdict {
        accepted: v.accepted,
        toolkit_version: v.toolkit_version,
    });
    Ok(Certificate::new(left, right, payload)?.with_verdict(verdict))
}

pub fn write_certificate(c: &Certificate) -> String {
    let mut witness = RawWitness::default();
    match &c.witness {
        WitnessPayload::Esse(w) => {
            witness.r = Some(write_matrix(&w.r));
            witness.s = Some(write_matrix(&w.s));
        }
        WitnessPayload::Se(w) => {
            witness.r = Some(write_matrix(&w.r));
            witness.s = Some(write_matrix(&w.s));
            witness.lag = Some(w.lag);
        }
        WitnessPayload::Sme(w) => witness.p = Some(write_matrix(&w.p)),
        WitnessPayload::SseChain(chain) => {
            let inner = chain.intermediates();
            witness.intermediates =
                Some(inner[1..inner.len() - 1].iter().map(write_matrix).collect());
            witness.links = Some(
                chain
                    .links()
                    .iter()
                    .map(|l| RawLink {
                        r: write_matrix(&l.r),
                        s: write_matrix(&l.s),
                    })
                    .collect(),
            );
        }
    }
    let raw = RawCertificate {
        schema_version: SCHEMA_VERSION,
        kind: c.kind().as_str().to_string(),
        left: write_matrix(&c.left),
        right: write_matrix(&c.right),
        witness,
        verdict: c.verdict.as_ref().map(|v| RawVerdict {
            accepted: v.accepted,
            toolkit_version: v.toolkit_version.clone(),
        }),
    };
    toml::to_string(&raw).expect("certificate fields are always representable in TOML")
}

/// Deterministic `key: value` rendering of an invariant report.
pub fn render_report(r: &InvariantReport) -> String {
    fn or_absent<T: ToString>(v: &Option<T>) -> String {
        v.as_ref()
            .map_or_else(|| "absent".to_string(), ToString::to_string)
    }
    let coeffs: Vec<String> = r
        .nonzero_char_poly
        .coeffs()
        .iter()
        .map(ToString::to_string)
        .collect();
    format!(
        "size: {}\n\
         regular: {}\n\
         full: {}\n\
         nondegenerate: {}\n\
         bowen_franks: {}\n\
         det_i_minus_a: {}\n\
         k0: {}\n\
         k1_rank: {}\n\
         nonzero_char_poly: {}\n\
         nonzero_char_poly_coeffs: {}\n",
        r.size,
        r.flags.regular,
        r.flags.full,
        r.flags.nondegenerate,
        r.bowen_franks,
        r.det_i_minus_a,
        or_absent(&r.k0),
        or_absent(&r.k1_rank),
        r.nonzero_char_poly,
        coeffs.join(" "),
    )
}
