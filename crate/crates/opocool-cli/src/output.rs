//! CSV and manifest emission.
//!
//! Every CSV has a header row, comma-separated values printed with 17
//! significant digits, and `status` as the last column. Missing quantities
//! (instability, a method that was not run) are empty fields; the status
//! column says why. The manifest records the fixed parameters, a SHA-256
//! content hash per file, and the wall-clock runtime.

use opocool::{RecordStatus, SweepRecord};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// One value slot in a CSV row.
#[derive(Debug, Clone)]
pub enum Field {
    Number(f64),
    Missing,
    Bool(bool),
    /// Plain label (e.g. a model name); must not contain commas.
    Text(String),
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Number(v)
    }
}

impl From<Option<f64>> for Field {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(x) => Field::Number(x),
            None => Field::Missing,
        }
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

fn push_field(line: &mut String, field: &Field) {
    match field {
        Field::Number(x) => line.push_str(&format!("{x:.16e}")),
        Field::Missing => {}
        Field::Bool(b) => line.push_str(if *b { "true" } else { "false" }),
        Field::Text(t) => {
            debug_assert!(!t.contains(','));
            line.push_str(t);
        }
    }
}

/// Render a table whose rows all share `columns`; `status` is appended last.
pub fn render_csv(columns: &[&str], rows: &[(Vec<Field>, RecordStatus)]) -> String {
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push_str(",status\n");
    for (fields, status) in rows {
        debug_assert_eq!(fields.len(), columns.len());
        let mut line = String::new();
        for (i, field) in fields.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            push_field(&mut line, field);
        }
        line.push(',');
        line.push_str(status.as_str());
        line.push('\n');
        out.push_str(&line);
    }
    out
}

/// Column layout for a generic sweep: axis names, then the record fields,
/// then any minimizer names, then status.
pub fn sweep_csv(axis_names: &[&str], records: &[SweepRecord]) -> String {
    let minimizer_names: Vec<String> = records
        .first()
        .map(|r| {
            r.minimizer
                .iter()
                .map(|(n, _)| format!("opt_{n}"))
                .collect()
        })
        .unwrap_or_default();
    let mut columns: Vec<&str> = axis_names.to_vec();
    columns.extend([
        "n_st_pert",
        "n_st_lyap",
        "a_plus",
        "a_minus",
        "gamma_opt",
        "n_o",
        "stable",
    ]);
    for name in &minimizer_names {
        columns.push(name);
    }
    let rows: Vec<(Vec<Field>, RecordStatus)> = records
        .iter()
        .map(|r| {
            let mut fields: Vec<Field> = r.coordinates.iter().map(|&c| c.into()).collect();
            fields.push(r.n_st_pert.into());
            fields.push(r.n_st_lyap.into());
            fields.push(r.a_plus.into());
            fields.push(r.a_minus.into());
            fields.push(r.gamma_opt.into());
            fields.push(r.n_o.into());
            fields.push(Field::Bool(r.stable));
            for (_, v) in &r.minimizer {
                fields.push((*v).into());
            }
            (fields, r.status)
        })
        .collect();
    render_csv(&columns, &rows)
}

pub fn sha256_hex(content: &str) -> String {
    hex::encode(Sha256::digest(content.as_bytes()))
}

#[derive(Debug, Clone, Serialize)]
pub struct PanelEntry {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
    /// Count of rows per status string. `unstable` and `heating` rows are
    /// complete physical results; a panel is partial only when some row
    /// could not be computed (`not_converged`).
    pub status_counts: Vec<(String, usize)>,
    pub partial: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub parameters: Vec<(String, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_m_hz: Option<f64>,
    pub seed: u64,
    pub panels: Vec<PanelEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub runtime_seconds: f64,
}

impl Manifest {
    pub fn new(command: impl Into<String>) -> Self {
        Manifest {
            command: command.into(),
            parameters: Vec::new(),
            omega_m_hz: None,
            seed: 0,
            panels: Vec::new(),
            notes: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    pub fn any_partial(&self) -> bool {
        self.panels.iter().any(|p| p.partial)
    }
}

/// Emission sink: collects panels, hashes them, and writes the manifest.
pub struct Emitter {
    dir: PathBuf,
    pub manifest: Manifest,
    started: std::time::Instant,
}

impl Emitter {
    pub fn new(dir: &Path, command: impl Into<String>) -> Result<Self, OutputError> {
        std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            manifest: Manifest::new(command),
            started: std::time::Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write one CSV panel and record it in the manifest.
    pub fn panel(
        &mut self,
        file: &str,
        content: &str,
        statuses: &[RecordStatus],
        notes: Vec<String>,
    ) -> Result<(), OutputError> {
        let path = self.dir.join(file);
        std::fs::write(&path, content).map_err(|source| OutputError::Io {
            path: path.clone(),
            source,
        })?;
        let mut counts: Vec<(String, usize)> = Vec::new();
        for status in statuses {
            let key = status.as_str().to_string();
            match counts.iter_mut().find(|(name, _)| *name == key) {
                Some((_, n)) => *n += 1,
                None => counts.push((key, 1)),
            }
        }
        let partial = statuses.contains(&RecordStatus::NotConverged);
        self.manifest.panels.push(PanelEntry {
            file: file.to_string(),
            rows: statuses.len(),
            sha256: sha256_hex(content),
            status_counts: counts,
            partial,
            notes,
        });
        Ok(())
    }

    /// Write `manifest.json`; returns whether any panel was partial.
    pub fn finish(mut self) -> Result<bool, OutputError> {
        self.manifest.runtime_seconds = self.started.elapsed().as_secs_f64();
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        let mut file = std::fs::File::create(&path).map_err(|source| OutputError::Io {
            path: path.clone(),
            source,
        })?;
        file.write_all(text.as_bytes())
            .map_err(|source| OutputError::Io { path, source })?;
        Ok(self.manifest.any_partial())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_precision() {
        let rows = vec![
            (
                vec![Field::Number(0.1), Field::Missing, Field::Bool(true)],
                RecordStatus::Ok,
            ),
            (
                vec![Field::Number(2.0), Field::Number(-1.0), Field::Bool(false)],
                RecordStatus::Unstable,
            ),
        ];
        let text = render_csv(&["x", "y", "flag"], &rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,flag,status");
        assert_eq!(lines[1], "1.0000000000000001e-1,,true,ok");
        assert_eq!(
            lines[2],
            "2.0000000000000000e0,-1.0000000000000000e0,false,unstable"
        );
    }

    #[test]
    fn sweep_csv_includes_minimizers() {
        let mut record = SweepRecord {
            coordinates: vec![0.5],
            n_st_pert: Some(0.1),
            n_st_lyap: Some(0.11),
            a_plus: Some(0.0),
            a_minus: Some(0.02),
            gamma_opt: Some(0.02),
            n_o: Some(0.0),
            stable: true,
            minimizer: vec![("delta_a".into(), 3.0)],
            status: RecordStatus::Ok,
        };
        let text = sweep_csv(&["phi"], std::slice::from_ref(&record));
        assert!(text.starts_with(
            "phi,n_st_pert,n_st_lyap,a_plus,a_minus,gamma_opt,n_o,stable,opt_delta_a,status"
        ));
        record.minimizer.clear();
        let text = sweep_csv(&["phi"], &[record]);
        assert!(text.contains("n_o,stable,status"));
    }

    #[test]
    fn emitter_writes_files_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut emitter = Emitter::new(dir.path(), "test").unwrap();
        emitter
            .panel("a.csv", "x,status\n1,ok\n", &[RecordStatus::Ok], vec![])
            .unwrap();
        emitter
            .panel(
                "b.csv",
                "x,status\n1,not_converged\n",
                &[RecordStatus::NotConverged],
                vec!["note".into()],
            )
            .unwrap();
        // An unstable row is a complete result, not a partial panel.
        emitter
            .panel(
                "c.csv",
                "x,status\n1,unstable\n",
                &[RecordStatus::Unstable],
                vec![],
            )
            .unwrap();
        assert!(!emitter.manifest.panels[2].partial);
        assert!(emitter.manifest.any_partial());
        let partial = emitter.finish().unwrap();
        assert!(partial);
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["panels"].as_array().unwrap().len(), 3);
        assert_eq!(manifest["panels"][0]["partial"], false);
        assert_eq!(manifest["panels"][1]["partial"], true);
        assert_eq!(manifest["panels"][2]["partial"], false);
        let digest = manifest["panels"][0]["sha256"].as_str().unwrap();
        assert_eq!(digest.len(), 64);
        assert_eq!(digest, sha256_hex("x,status\n1,ok\n"));
    }
}
