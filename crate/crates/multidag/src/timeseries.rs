//! Per-subject multivariate time series and the CSV/manifest formats
//! that carry them.
//!
//! A series file is plain CSV: one header row with variable names, then
//! N rows of P finite reals. A manifest is CSV with a `subject,path`
//! header; relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Observed activity for one subject: `n_steps` rows by `p` variables.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    subject: String,
    n_steps: usize,
    p: usize,
    names: Vec<String>,
    values: Vec<f64>, // row-major: values[n * p + i]
}

impl TimeSeries {
    pub fn new(
        subject: impl Into<String>,
        n_steps: usize,
        p: usize,
        names: Vec<String>,
        values: Vec<f64>,
    ) -> Result<TimeSeries> {
        if n_steps == 0 {
            return Err(Error::input("a series needs at least one time step"));
        }
        if p == 0 {
            return Err(Error::input("a series needs at least one variable"));
        }
        if names.len() != p {
            return Err(Error::input(format!(
                "expected {p} variable names, got {}",
                names.len()
            )));
        }
        if values.len() != n_steps * p {
            return Err(Error::input(format!(
                "expected {} values for {n_steps}x{p}, got {}",
                n_steps * p,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite value at row {}, column {}",
                pos / p + 1,
                pos % p + 1
            )));
        }
        Ok(TimeSeries {
            subject: subject.into(),
            n_steps,
            p,
            names,
            values,
        })
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Value at time step `n` (0-based) of variable `i` (1-based).
    pub fn value(&self, n: usize, i: usize) -> f64 {
        self.values[n * self.p + (i - 1)]
    }

    pub fn from_csv(subject: impl Into<String>, path: &Path) -> Result<TimeSeries> {
        let display = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::io(format!("opening series {display}"), to_io(e)))?;
        let names: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse {
                path: display.clone(),
                record: 0,
                message: e.to_string(),
            })?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let p = names.len();
        let mut values = Vec::new();
        let mut n_steps = 0usize;
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                path: display.clone(),
                record: idx + 1,
                message: e.to_string(),
            })?;
            if record.len() != p {
                return Err(Error::Parse {
                    path: display.clone(),
                    record: idx + 1,
                    message: format!("expected {p} columns, got {}", record.len()),
                });
            }
            for field in record.iter() {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    path: display.clone(),
                    record: idx + 1,
                    message: format!("not a number: {field:?}"),
                })?;
                values.push(v);
            }
            n_steps += 1;
        }
        TimeSeries::new(subject, n_steps, p, names, values)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.names.join(","));
        out.push('\n');
        for n in 0..self.n_steps {
            let row: Vec<String> = (1..=self.p)
                .map(|i| format!("{}", self.value(n, i)))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn to_io(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}")),
    }
}

/// One manifest row: a subject id and the path of its series file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub subject: String,
    pub path: PathBuf,
}

/// Reads a `subject,path` manifest; paths are returned resolved against
/// the manifest's own directory. Subject order in the file defines the
/// subject indices 1..=K used everywhere else.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::io(format!("opening manifest {display}"), to_io(e)))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: display.clone(),
            record: 0,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() < 2 || &headers[0] != "subject" || &headers[1] != "path" {
        return Err(Error::Parse {
            path: display.clone(),
            record: 0,
            message: "manifest header must be `subject,path`".to_string(),
        });
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: display.clone(),
            record: idx + 1,
            message: e.to_string(),
        })?;
        let subject = record
            .get(0)
            .unwrap_or_default()
            .to_string();
        let rel = record.get(1).unwrap_or_default();
        if subject.is_empty() || rel.is_empty() {
            return Err(Error::Parse {
                path: display.clone(),
                record: idx + 1,
                message: "empty subject or path".to_string(),
            });
        }
        if !seen.insert(subject.clone()) {
            return Err(Error::Parse {
                path: display.clone(),
                record: idx + 1,
                message: format!("duplicate subject id {subject:?}"),
            });
        }
        let rel_path = Path::new(rel);
        let resolved = if rel_path.is_absolute() {
            rel_path.to_path_buf()
        } else {
            base.join(rel_path)
        };
        entries.push(ManifestEntry {
            subject,
            path: resolved,
        });
    }
    if entries.is_empty() {
        return Err(Error::Parse {
            path: display,
            record: 0,
            message: "manifest lists no subjects".to_string(),
        });
    }
    Ok(entries)
}

/// Renders a manifest with paths written as given.
pub fn manifest_string(entries: &[(String, String)]) -> String {
    let mut out = String::from("subject,path\n");
    for (subject, path) in entries {
        out.push_str(&format!("{subject},{path}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn csv_round_trip() {
        let ts = TimeSeries::new(
            "s1",
            2,
            3,
            vec!["a".into(), "b".into(), "c".into()],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s1.csv");
        std::fs::File::create(&path)
            .unwrap()
            .write_all(ts.to_csv_string().as_bytes())
            .unwrap();
        let back = TimeSeries::from_csv("s1", &path).unwrap();
        assert_eq!(back.n_steps(), 2);
        assert_eq!(back.p(), 3);
        assert_eq!(back.value(1, 2), 5.0);
        assert_eq!(back.names()[2], "c");
    }

    #[test]
    fn non_finite_rejected() {
        let r = TimeSeries::new("s", 1, 1, vec!["a".into()], vec![f64::NAN]);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn manifest_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(&path, "subject,path\ns1,data/s1.csv\n").unwrap();
        let entries = read_manifest(&path).unwrap();
        assert_eq!(entries[0].subject, "s1");
        assert_eq!(entries[0].path, dir.path().join("data/s1.csv"));
    }

    #[test]
    fn manifest_rejects_duplicates_and_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(&path, "subject,path\ns1,a.csv\ns1,b.csv\n").unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::Parse { .. })));
        std::fs::write(&path, "id,file\ns1,a.csv\n").unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::Parse { .. })));
    }
}
