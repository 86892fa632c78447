//! Run artifacts: CSV/JSON writers with atomic replace semantics and the
//! per-run manifest. Every run — including failed ones — leaves a
//! `manifest.json` behind so reruns can be audited.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write serialized JSON via a temp file + rename, so readers never observe
/// a half-written artifact.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let body = serde_json::to_vec_pretty(value)?;
    write_bytes_atomic(path, &body)
}

/// RFC 4180 CSV: header row plus string records, quoted as needed.
pub fn write_csv_atomic(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let body = w.into_inner().map_err(|e| e.into_error())?;
    write_bytes_atomic(path, &body)
}

pub fn write_bytes_atomic(path: &Path, body: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_sha256: String,
    pub code_version: String,
    pub seed: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_seconds: f64,
    pub stages: Vec<StageTime>,
    pub outputs: Vec<String>,
}

/// Tracks a run in progress: stage timing and produced files, then writes
/// the manifest on completion or failure.
pub struct RunRecorder {
    experiment: String,
    config_sha256: String,
    seed: u64,
    started: Instant,
    stage_started: Instant,
    stages: Vec<StageTime>,
    outputs: Vec<PathBuf>,
    out_dir: PathBuf,
}

impl RunRecorder {
    pub fn new(experiment: &str, config_text: &str, seed: u64, out_dir: &Path) -> Self {
        let now = Instant::now();
        RunRecorder {
            experiment: experiment.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            seed,
            started: now,
            stage_started: now,
            stages: Vec::new(),
            outputs: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    /// Close the current stage and start timing the next one.
    pub fn stage(&mut self, finished_stage: &str) {
        let now = Instant::now();
        self.stages.push(StageTime {
            stage: finished_stage.to_string(),
            seconds: (now - self.stage_started).as_secs_f64(),
        });
        self.stage_started = now;
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>])
        -> std::io::Result<PathBuf>
    {
        let path = self.out_path(name);
        write_csv_atomic(&path, header, rows)?;
        self.record_output(&path);
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T)
        -> std::io::Result<PathBuf>
    {
        let path = self.out_path(name);
        write_json_atomic(&path, value)?;
        self.record_output(&path);
        Ok(path)
    }

    fn manifest(&self, status: &str, error: Option<String>) -> RunManifest {
        RunManifest {
            experiment: self.experiment.clone(),
            config_sha256: self.config_sha256.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            status: status.to_string(),
            error,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            stages: self.stages.clone(),
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
        }
    }

    /// Emit `manifest.json`. Called on both success and failure paths.
    pub fn finish(mut self, error: Option<String>) -> std::io::Result<RunManifest> {
        if self.stage_started.elapsed().as_secs_f64() > 1e-4 || self.stages.is_empty() {
            self.stage("final");
        }
        let status = if error.is_some() { "failed" } else { "ok" };
        let manifest = self.manifest(status, error);
        write_json_atomic(&self.out_path("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_is_stable() {
        let dir = std::env::temp_dir().join("qmlab_report_test");
        let path = dir.join("t.csv");
        let rows = vec![vec!["a,b".to_string(), "plain".to_string()]];
        write_csv_atomic(&path, &["word", "value"], &rows).unwrap();
        let first = fs::read(&path).unwrap();
        assert_eq!(
            String::from_utf8(first.clone()).unwrap(),
            "word,value\n\"a,b\",plain\n"
        );
        write_csv_atomic(&path, &["word", "value"], &rows).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn manifest_written_on_failure() {
        let dir = std::env::temp_dir().join("qmlab_manifest_test");
        fs::remove_dir_all(&dir).ok();
        let mut rec = RunRecorder::new("demo", "seed = 3\n", 3, &dir);
        rec.stage("setup");
        let m = rec.finish(Some("tube placement failed".into())).unwrap();
        assert_eq!(m.status, "failed");
        assert_eq!(m.config_sha256.len(), 64);
        let text = fs::read_to_string(dir.join("manifest.json")).unwrap();
        assert!(text.contains("tube placement failed"));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn hash_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
