//! JSON interchange formats and a deterministic writer.
//!
//! Output is byte-stable: object keys are sorted and every float is
//! printed in scientific notation with 17 significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::extension::{ExtensionContext, ReductionResiduals};
use crate::linalg::{c, from_rows, to_rows, CMat};
use crate::moments::{Atom, AtomicMeasure, MomentIndex, MomentTable};
use crate::operators::OperatorSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentEntry {
    pub m: i64,
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTableFile {
    pub max_power: usize,
    pub max_freq: usize,
    pub moments: Vec<MomentEntry>,
}

impl From<&MomentTable> for MomentTableFile {
    fn from(t: &MomentTable) -> Self {
        Self {
            max_power: t.max_power(),
            max_freq: t.max_freq(),
            moments: t
                .entries()
                .map(|(idx, v)| MomentEntry {
                    m: idx.m,
                    n: idx.n,
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<MomentTableFile> for MomentTable {
    type Error = Error;

    fn try_from(f: MomentTableFile) -> Result<Self> {
        MomentTable::from_entries(
            f.max_power,
            f.max_freq,
            f.moments
                .into_iter()
                .map(|e| (MomentIndex::new(e.m, e.n), c(e.re, e.im))),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub atoms: Vec<Atom>,
}

impl From<&AtomicMeasure> for MeasureFile {
    fn from(m: &AtomicMeasure) -> Self {
        Self {
            atoms: m.atoms().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub max_power: usize,
    pub max_freq: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDiagnostics {
    pub fit: f64,
    pub dropped_mass: f64,
    pub parameter: String,
    pub residuals: BTreeMap<String, f64>,
    /// Window of the table the solution was built from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<SolutionDiagnostics>,
}

/// Complex matrix as row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixFile(pub Vec<Vec<[f64; 2]>>);

impl MatrixFile {
    pub fn from_matrix(m: &CMat) -> Self {
        Self(to_rows(m))
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        from_rows(&self.0)
    }
}

/// Operator model dump: matrices in embedding coordinates, domains as
/// window index lists, residuals verbatim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorsDump {
    pub window: WindowRecord,
    pub rank: usize,
    pub gram: MatrixFile,
    pub embedding: MatrixFile,
    pub a: MatrixFile,
    pub a_domain: Vec<MomentIndex>,
    pub b: MatrixFile,
    pub j: MatrixFile,
    pub x00: Vec<[f64; 2]>,
    pub residuals: BTreeMap<String, f64>,
    pub defect: usize,
    pub h1: MatrixFile,
    pub h2: MatrixFile,
    pub h3: MatrixFile,
    pub h4: MatrixFile,
    pub u24: MatrixFile,
    pub reduction: ReductionResiduals,
}

impl OperatorsDump {
    pub fn new(sys: &OperatorSystem, ctx: &ExtensionContext) -> Self {
        let w = &sys.gns.window;
        let dd = &ctx.deficiency;
        Self {
            window: WindowRecord {
                max_power: w.max_power,
                max_freq: w.max_freq,
            },
            rank: sys.dim(),
            gram: MatrixFile::from_matrix(&sys.gns.gram),
            embedding: MatrixFile::from_matrix(&sys.gns.embedding),
            a: MatrixFile::from_matrix(&sys.a.action),
            a_domain: sys.a.domain_indices.clone(),
            b: MatrixFile::from_matrix(&sys.b),
            j: MatrixFile::from_matrix(&sys.j.matrix),
            x00: sys.x00.iter().map(|z| [z.re, z.im]).collect(),
            residuals: sys
                .residuals
                .named()
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .chain([(
                    "a_symmetry_pre_repair".to_string(),
                    sys.a.pre_repair_symmetry_defect,
                )])
                .collect(),
            defect: dd.defect,
            h1: MatrixFile::from_matrix(&dd.h1),
            h2: MatrixFile::from_matrix(&dd.h2),
            h3: MatrixFile::from_matrix(&dd.h3),
            h4: MatrixFile::from_matrix(&dd.h4),
            u24: MatrixFile::from_matrix(&ctx.u24.matrix),
            reduction: ctx.reduction.clone(),
        }
    }
}

/// Pretty printing with fixed 17-significant-digit floats.
struct StableFormatter {
    inner: PrettyFormatter<'static>,
}

impl Formatter for StableFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Deterministic JSON text with a trailing newline.
pub fn to_stable_json<T: Serialize>(value: &T) -> Result<String> {
    // Round-tripping through `Value` sorts object keys.
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        StableFormatter {
            inner: PrettyFormatter::with_indent(b"  "),
        },
    );
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_stable_json(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_table(path: &Path) -> Result<MomentTable> {
    read_json::<MomentTableFile>(path)?.try_into()
}

pub fn write_table(path: &Path, table: &MomentTable) -> Result<()> {
    write_json(path, &MomentTableFile::from(table))
}

pub fn read_measure(path: &Path) -> Result<AtomicMeasure> {
    AtomicMeasure::new(read_json::<MeasureFile>(path)?.atoms)
}

pub fn read_solution(path: &Path) -> Result<(AtomicMeasure, Option<SolutionDiagnostics>)> {
    let file: SolutionFile = read_json(path)?;
    Ok((AtomicMeasure::new(file.atoms)?, file.diagnostics))
}

pub fn read_matrix(path: &Path) -> Result<CMat> {
    read_json::<MatrixFile>(path)?.to_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::compute_moments;

    #[test]
    fn floats_have_seventeen_significant_digits_and_sorted_keys() {
        let f = MomentEntry {
            m: 1,
            n: -1,
            re: 0.1,
            im: -2.0,
        };
        let s = to_stable_json(&f).unwrap();
        assert_eq!(
            s,
            "{\n  \"im\": -2.0000000000000000e0,\n  \"m\": 1,\n  \"n\": -1,\n  \"re\": 1.0000000000000001e-1\n}\n"
        );
    }

    #[test]
    fn table_round_trip_is_exact() {
        let mu =
            AtomicMeasure::new([Atom::new(0.3, 1.0, 0.7), Atom::new(-1.2, -2.5, 1.1)]).unwrap();
        let t = compute_moments(&mu, 2, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        write_table(&p, &t).unwrap();
        assert_eq!(read_table(&p).unwrap(), t);
        let first = fs::read(&p).unwrap();
        write_table(&p, &t).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
    }

    #[test]
    fn table_reader_rejects_holes_and_duplicates() {
        let mut f = MomentTableFile::from(&MomentTable::from_fn(1, 0, |_| c(1.0, 0.0)).unwrap());
        let extra = f.moments[0].clone();
        f.moments.push(extra);
        assert!(MomentTable::try_from(f.clone()).is_err());
        f.moments.truncate(1);
        let err = MomentTable::try_from(f).unwrap_err().to_string();
        assert!(err.contains("missing"), "{err}");
    }

    #[test]
    fn measure_reader_enforces_invariants() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mu.json");
        fs::write(&p, r#"{"atoms":[{"x":1.0,"phi":0.0,"weight":-1.0}]}"#).unwrap();
        assert!(read_measure(&p)
            .unwrap_err()
            .to_string()
            .contains("weight must be positive"));
        fs::write(&p, r#"{"atoms":[]}"#).unwrap();
        assert!(read_measure(&p).unwrap().is_empty());
    }

    #[test]
    fn matrix_file_round_trip() {
        let m = CMat::from_fn(2, 3, |i, j| c(i as f64, -(j as f64) / 3.0));
        let text = to_stable_json(&MatrixFile::from_matrix(&m)).unwrap();
        let back: MatrixFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }
}
