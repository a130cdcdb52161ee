//! Output bundles: a directory of report files plus a manifest, written
//! all-or-nothing.
//!
//! Every command writes its artifacts through a [`Bundle`]. Files are
//! tracked as they are written; if the command fails before
//! [`Bundle::finish`], dropping the bundle removes everything it wrote (and
//! the directory itself when the bundle created it), so a failed run never
//! leaves partial output behind. `finish` writes `manifest.json` last — the
//! manifest lists exactly the files that were successfully produced.
//!
//! Manifests are deterministic: they echo the effective configuration and
//! input tallies but never wall-clock data, so reruns with the same inputs
//! are byte-identical. Opt-in timing data goes to a separate `timings.json`
//! that is excluded from the manifest's file list.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err<'a>(
    action: &'static str,
    path: &'a Path,
) -> impl FnOnce(std::io::Error) -> ReportError + 'a {
    move |source| ReportError::Io {
        action,
        path: path.to_path_buf(),
        source,
    }
}

/// Tool identification embedded in every manifest.
#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Input tallies echoed into the manifest; fields irrelevant to a command
/// are omitted from the JSON.
#[derive(Debug, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ManifestInputs {
    pub documents: u64,
    pub documents_by_category: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub unknown_corpus_categories: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_events: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub export_events: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invalid_log_rows: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub unknown_log_categories: BTreeMap<String, u64>,
    /// Export events whose target is not in the audited corpus slice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unknown_export_targets: Option<u64>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct Manifest<'a> {
    format: &'static str,
    format_version: u32,
    tool: ToolInfo,
    command: &'a str,
    config: BTreeMap<String, serde_json::Value>,
    inputs: &'a ManifestInputs,
    /// Report files in this bundle, sorted by name. `manifest.json` itself
    /// and any auxiliary (non-deterministic) files are not listed.
    files: Vec<&'a str>,
}

const BUNDLE_FORMAT: &str = "retaudit-bundle";
const BUNDLE_VERSION: u32 = 1;

/// An output directory under construction.
#[derive(Debug)]
pub struct Bundle {
    dir: PathBuf,
    files: Vec<String>,
    aux_files: Vec<String>,
    created_dir: bool,
    committed: bool,
}

impl Bundle {
    /// Create (or reuse) the output directory and start tracking.
    pub fn create(dir: &Path) -> Result<Bundle, ReportError> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir).map_err(io_err("create directory", dir))?;
        Ok(Bundle {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            aux_files: Vec::new(),
            created_dir,
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write one report file and record it for the manifest.
    pub fn write_file(&mut self, name: &str, contents: &[u8]) -> Result<(), ReportError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(io_err("write", &path))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Record a file that other code is about to write into the bundle
    /// directory (an index save, say) so it shows up in the manifest and is
    /// cleaned up on failure. Call before the write: a half-written file
    /// must already be tracked when the failure unwinds.
    pub fn track_file(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    /// Write a file that is cleaned up on failure like any other but kept
    /// out of the manifest's file list (used for wall-clock timing data,
    /// which would break rerun byte-identity).
    pub fn write_aux_file(&mut self, name: &str, contents: &[u8]) -> Result<(), ReportError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(io_err("write", &path))?;
        self.aux_files.push(name.to_string());
        Ok(())
    }

    /// Serialize a value as pretty JSON into a tracked report file.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), ReportError> {
        let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
        text.push('\n');
        self.write_file(name, text.as_bytes())
    }

    /// Write `manifest.json` and commit: the bundle's files are now
    /// permanent.
    pub fn finish(
        mut self,
        command: &str,
        config: &RunConfig,
        inputs: &ManifestInputs,
    ) -> Result<(), ReportError> {
        let mut names: Vec<&str> = self.files.iter().map(String::as_str).collect();
        names.sort_unstable();
        let manifest = Manifest {
            format: BUNDLE_FORMAT,
            format_version: BUNDLE_VERSION,
            tool: ToolInfo::default(),
            command,
            config: config.manifest_echo(),
            inputs,
            files: names,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(io_err("write", &path))?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for Bundle {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for name in self.files.iter().chain(&self.aux_files) {
            let _ = std::fs::remove_file(self.dir.join(name));
        }
        if self.created_dir {
            // Only removes the directory if nothing else lives there.
            let _ = std::fs::remove_dir(&self.dir);
        }
    }
}

/// Format a float for report tables: shortest form that parses back to the
/// identical value, so emitted numbers can be recomputed and compared
/// exactly.
pub fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigOverlay;

    fn test_config(out: &Path) -> RunConfig {
        ConfigOverlay {
            corpus: Some(PathBuf::from("corpus.tsv")),
            out: Some(out.to_path_buf()),
            ..ConfigOverlay::default()
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn committed_bundle_keeps_files_and_lists_them_sorted() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let cfg = test_config(&out);

        let mut bundle = Bundle::create(&out).unwrap();
        bundle.write_file("b.csv", b"x\n").unwrap();
        bundle.write_file("a.csv", b"y\n").unwrap();
        bundle.write_aux_file("timings.json", b"{}\n").unwrap();
        bundle
            .finish("audit", &cfg, &ManifestInputs::default())
            .unwrap();

        assert!(out.join("a.csv").exists());
        assert!(out.join("timings.json").exists());
        let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
        assert_eq!(parsed["format"], "retaudit-bundle");
        assert_eq!(parsed["command"], "audit");
        let files: Vec<&str> = parsed["files"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap())
            .collect();
        assert_eq!(files, vec!["a.csv", "b.csv"]);
    }

    #[test]
    fn unfinished_bundle_removes_its_output() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        {
            let mut bundle = Bundle::create(&out).unwrap();
            bundle.write_file("partial.csv", b"x\n").unwrap();
            bundle.write_aux_file("timings.json", b"{}\n").unwrap();
            // Dropped without finish — simulates a failed command.
        }
        assert!(!out.exists());
    }

    #[test]
    fn cleanup_preserves_preexisting_directories_and_files() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        std::fs::create_dir_all(&out).unwrap();
        std::fs::write(out.join("keep.txt"), b"mine\n").unwrap();
        {
            let mut bundle = Bundle::create(&out).unwrap();
            bundle.write_file("partial.csv", b"x\n").unwrap();
        }
        assert!(out.join("keep.txt").exists());
        assert!(!out.join("partial.csv").exists());
    }

    #[test]
    fn floats_round_trip_through_table_format() {
        for v in [0.0, 1.0, 0.1 + 0.2, 2.0 / 3.0, 1e-9, 123456.789] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v);
        }
    }
}
