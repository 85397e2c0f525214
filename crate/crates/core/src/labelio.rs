//! Image labels `N.i.g.n`, the generator file format, record validation, the
//! report line grammar, and the table of known isolated rational j-invariants.
//!
//! Generator files hold one record per line:
//!
//! ```text
//! # comment
//! 49.196.9.1|49|1,0,37,48;20,4,18,21
//! 7.28.0.1|7|3,0,0,1;1,0,0,3;0,1,1,0|7Ns
//! ```
//!
//! The optional fourth field is an opaque tag (e.g. a Sutherland label).

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::gl2::{index_in_ambient, level, MatrixGroup};
use crate::modarith::{PrimePowerModulus, ResidueMatrix};
use crate::modcurves::genus_xg;
use crate::Family;

/// The bundled catalogue of known l-adic images.
pub const KNOWN_IMAGES: &str = include_str!("../data/known_images.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Label {
    pub level: u64,
    pub index: u64,
    pub genus: u64,
    pub tiebreak: u64,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}.{}.{}",
            self.level, self.index, self.genus, self.tiebreak
        )
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_label(s)
    }
}

pub fn parse_label(text: &str) -> Result<Label> {
    let parts: Vec<&str> = text.trim().split('.').collect();
    if parts.len() != 4 {
        return Err(Error::Invalid(format!(
            "label {text:?} must have four dot-separated fields"
        )));
    }
    let nums = parts
        .iter()
        .map(|p| {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::Invalid(format!("label {text:?}: bad field {p:?}")));
            }
            p.parse::<u64>()
                .map_err(|e| Error::Invalid(format!("label {text:?}: {e}")))
        })
        .collect::<Result<Vec<u64>>>()?;
    if nums[1] == 0 || nums[3] == 0 {
        return Err(Error::Invalid(format!(
            "label {text:?}: index and tiebreak must be positive"
        )));
    }
    if nums[0] != 1 {
        PrimePowerModulus::from_modulus(nums[0])?;
    }
    Ok(Label {
        level: nums[0],
        index: nums[1],
        genus: nums[2],
        tiebreak: nums[3],
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageRecord {
    pub rszb_label: String,
    pub modulus: PrimePowerModulus,
    pub generators: Vec<ResidueMatrix>,
    pub sutherland_label: Option<String>,
}

impl ImageRecord {
    pub fn group(&self) -> Result<MatrixGroup> {
        Ok(MatrixGroup::new(self.modulus, self.generators.clone())?
            .with_label(self.rszb_label.clone()))
    }

    pub fn to_line(&self) -> String {
        let gens: Vec<String> = self
            .generators
            .iter()
            .map(|g| {
                g.entries()
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        let mut s = format!(
            "{}|{}|{}",
            self.rszb_label,
            self.modulus.modulus(),
            gens.join(";")
        );
        if let Some(t) = &self.sutherland_label {
            s.push('|');
            s.push_str(t);
        }
        s
    }
}

fn parse_record(line: &str, lineno: usize) -> Result<ImageRecord> {
    let err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    if !line.is_ascii() {
        return Err(err("non-ASCII input".into()));
    }
    let fields: Vec<&str> = line.split('|').map(str::trim).collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(err(format!(
            "expected 3 or 4 '|'-separated fields, found {}",
            fields.len()
        )));
    }
    parse_label(fields[0]).map_err(|e| err(e.to_string()))?;
    let q: u64 = fields[1]
        .parse()
        .map_err(|_| err(format!("bad modulus {:?}", fields[1])))?;
    let modulus = PrimePowerModulus::from_modulus(q).map_err(|e| err(e.to_string()))?;
    let mut generators = Vec::new();
    if !fields[2].is_empty() {
        for (gi, chunk) in fields[2].split(';').enumerate() {
            let entries: Vec<&str> = chunk.split(',').map(str::trim).collect();
            if entries.len() != 4 {
                return Err(err(format!("generator {}: expected 4 entries", gi + 1)));
            }
            let mut e = [0u64; 4];
            for (slot, text) in e.iter_mut().zip(&entries) {
                let v: u64 = text
                    .parse()
                    .map_err(|_| err(format!("generator {}: bad entry {text:?}", gi + 1)))?;
                if v >= q {
                    return Err(err(format!(
                        "generator {}: entry {v} out of range [0, {q})",
                        gi + 1
                    )));
                }
                *slot = v;
            }
            let m = ResidueMatrix::from_reduced(e, modulus).map_err(|e| err(e.to_string()))?;
            if !m.is_invertible() {
                return Err(err(format!(
                    "generator {} is not invertible mod {q}",
                    gi + 1
                )));
            }
            generators.push(m);
        }
    }
    let sutherland_label = fields
        .get(3)
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string());
    Ok(ImageRecord {
        rszb_label: fields[0].to_string(),
        modulus,
        generators,
        sutherland_label,
    })
}

/// Parse generator-file text. Blank lines and `#` comments are skipped.
pub fn parse_generators(text: &str) -> Result<Vec<ImageRecord>> {
    let mut out = Vec::new();
    let mut labels = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let rec = parse_record(line, i + 1)?;
        if !labels.insert(rec.rszb_label.clone()) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("duplicate label {}", rec.rszb_label),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_generators_file(path: impl AsRef<Path>) -> Result<Vec<ImageRecord>> {
    parse_generators(&std::fs::read_to_string(path)?)
}

pub fn serialize_records(records: &[ImageRecord]) -> String {
    records.iter().map(|r| r.to_line() + "\n").collect()
}

pub fn known_images() -> Vec<ImageRecord> {
    parse_generators(KNOWN_IMAGES).expect("bundled data parses")
}

pub fn find_record<'a>(records: &'a [ImageRecord], label: &str) -> Option<&'a ImageRecord> {
    records.iter().find(|r| r.rszb_label == label)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldCheck {
    pub field: &'static str,
    pub expected: u64,
    pub computed: Option<u64>,
}

impl FieldCheck {
    pub fn ok(&self) -> bool {
        self.computed == Some(self.expected)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub label: String,
    pub checks: Vec<FieldCheck>,
    pub error: Option<String>,
}

impl ValidationReport {
    pub fn mismatches(&self) -> Vec<&FieldCheck> {
        self.checks.iter().filter(|c| !c.ok()).collect()
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.mismatches().is_empty()
    }

    /// `label<TAB>field<TAB>expected<TAB>computed<TAB>ok|MISMATCH` per field.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let comp = c.computed.map_or("-".to_string(), |x| x.to_string());
            let verdict = if c.ok() { "ok" } else { "MISMATCH" };
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                self.label, c.field, c.expected, comp, verdict
            )
            .unwrap();
        }
        if let Some(e) = &self.error {
            writeln!(out, "{}\terror\t{}", self.label, e).unwrap();
        }
        out
    }
}

/// Recompute level, index and genus and compare them with the label.
pub fn validate_record(rec: &ImageRecord, cap: u64) -> ValidationReport {
    let mut report = ValidationReport {
        label: rec.rszb_label.clone(),
        checks: Vec::new(),
        error: None,
    };
    let label = match parse_label(&rec.rszb_label) {
        Ok(l) => l,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let computed = (|| -> Result<(u64, u64, u64)> {
        let g = rec.group()?;
        let lv = level(&g, cap)?.modulus();
        let idx = index_in_ambient(&g, cap)?;
        let genus = genus_xg(&g, cap)?.genus;
        Ok((lv, idx, genus))
    })();
    match computed {
        Ok((lv, idx, genus)) => {
            report.checks = vec![
                FieldCheck {
                    field: "N",
                    expected: label.level,
                    computed: Some(lv),
                },
                FieldCheck {
                    field: "i",
                    expected: label.index,
                    computed: Some(idx),
                },
                FieldCheck {
                    field: "g",
                    expected: label.genus,
                    computed: Some(genus),
                },
            ];
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report
}

/// One report row read back from the line format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportRow {
    pub level: u64,
    pub degree: u64,
    pub survives: bool,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedReport {
    pub label: String,
    pub family: Family,
    pub rows: Vec<ReportRow>,
    pub result: Vec<(u64, u64)>,
}

/// Parse the line format emitted by `FilterReport::to_lines` (possibly several reports).
pub fn parse_report_lines(text: &str) -> Result<Vec<ParsedReport>> {
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let mut current: Option<(String, Family)> = None;
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f[0] == "RESULT" {
            if f.len() < 3 {
                return Err(err("RESULT line needs a label and a family".into()));
            }
            let family: Family = f[2].parse().map_err(|e: Error| err(e.to_string()))?;
            if let Some((l, fam)) = &current {
                if l != f[1] || *fam != family {
                    return Err(err("RESULT line does not match the preceding rows".into()));
                }
            }
            let result = f[3..]
                .iter()
                .map(|p| {
                    let mut it = p.split(' ');
                    match (
                        it.next().map(str::parse),
                        it.next().map(str::parse),
                        it.next(),
                    ) {
                        (Some(Ok(l)), Some(Ok(d)), None) => Ok((l, d)),
                        _ => Err(err(format!("bad pair {p:?}"))),
                    }
                })
                .collect::<Result<Vec<(u64, u64)>>>()?;
            out.push(ParsedReport {
                label: f[1].to_string(),
                family,
                rows: std::mem::take(&mut rows),
                result,
            });
            current = None;
            continue;
        }
        if f.len() != 6 {
            return Err(err(format!(
                "expected 6 tab-separated fields, found {}",
                f.len()
            )));
        }
        let family: Family = f[1].parse().map_err(|e: Error| err(e.to_string()))?;
        match &current {
            Some((l, fam)) if l != f[0] || *fam != family => {
                return Err(err("rows from different reports are interleaved".into()))
            }
            None => current = Some((f[0].to_string(), family)),
            _ => {}
        }
        let num = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| err(format!("bad number {s:?}")))
        };
        let survives = match f[4] {
            "survives" => true,
            "eliminated" => false,
            s => return Err(err(format!("bad status {s:?}"))),
        };
        rows.push(ReportRow {
            level: num(f[2])?,
            degree: num(f[3])?,
            survives,
            reason: f[5].to_string(),
        });
    }
    if current.is_some() {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: "missing RESULT line".into(),
        });
    }
    Ok(out)
}

/// A rational j-invariant known to be Gamma1- or Gamma0-isolated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnownJRecord {
    pub j_invariant: Ratio<i128>,
    pub cm: bool,
    pub family: Family,
    /// The prime whose tower carries the isolated point; `None` for CM values.
    pub ell: Option<u64>,
    pub citation: &'static str,
}

/// The thirteen rational CM j-invariants.
pub fn cm_j_invariants() -> Vec<i128> {
    vec![
        0,
        1728,
        -3375,
        8000,
        -32768,
        54000,
        287496,
        -884736,
        -12288000,
        16581375,
        -884736000,
        -147197952000,
        -262537412640768000,
    ]
}

pub fn known_j_invariants() -> Vec<KnownJRecord> {
    let int = Ratio::from_integer;
    let mut out = Vec::new();
    for family in [Family::Gamma1, Family::Gamma0] {
        for j in cm_j_invariants() {
            out.push(KnownJRecord {
                j_invariant: int(j),
                cm: true,
                family,
                ell: None,
                citation: "cm",
            });
        }
        let x1_37 = "isolated points on X1(37) of degrees 6 and 18";
        out.push(KnownJRecord {
            j_invariant: int(-7 * 11i128.pow(3)),
            cm: false,
            family,
            ell: Some(37),
            citation: x1_37,
        });
        out.push(KnownJRecord {
            j_invariant: int(-7 * 137i128.pow(3) * 2083i128.pow(3)),
            cm: false,
            family,
            ell: Some(37),
            citation: x1_37,
        });
    }
    let x0 = "non-cuspidal rational points on X0(l)";
    for (j, ell) in [
        (int(-11 * 131i128.pow(3)), 11),
        (int(-(11i128.pow(2))), 11),
        (Ratio::new(-(17i128.pow(2)) * 101i128.pow(3), 2), 17),
        (Ratio::new(-17 * 373i128.pow(3), 2i128.pow(17)), 17),
    ] {
        out.push(KnownJRecord {
            j_invariant: j,
            cm: false,
            family: Family::Gamma0,
            ell: Some(ell),
            citation: x0,
        });
    }
    out
}
