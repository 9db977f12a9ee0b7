//! Plain-text run manifests.

use crate::CliError;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

#[derive(Clone, Debug)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub git_describe: String,
    pub started: String,
    pub finished: Option<String>,
    pub outputs: Vec<PathBuf>,
    /// Further `key: value` lines, e.g. the dataset description.
    pub extra: Vec<(String, String)>,
}

/// sha256 of the effective argument list, one argument per line.
pub fn config_hash(args: &[OsString]) -> String {
    let mut h = Sha256::new();
    for a in args.iter().skip(1) {
        h.update(a.to_string_lossy().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(args: &[OsString]) -> Self {
        Self {
            command: args.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
            config_hash: config_hash(args),
            seeds: Vec::new(),
            git_describe: git_describe(),
            started: now(),
            finished: None,
            outputs: Vec::new(),
            extra: Vec::new(),
        }
    }

    /// The manifest as ordered `key: value` pairs.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut p = vec![
            ("command".to_string(), self.command.join(" ")),
            ("config_hash".to_string(), self.config_hash.clone()),
            (
                "seeds".to_string(),
                self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
            ),
            ("git_describe".to_string(), self.git_describe.clone()),
            ("started".to_string(), self.started.clone()),
        ];
        if let Some(f) = &self.finished {
            p.push(("finished".to_string(), f.clone()));
        }
        p.extend(self.extra.iter().cloned());
        p.extend(self.outputs.iter().map(|o| ("output".to_string(), o.display().to_string())));
        p
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.pairs() {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }

    /// Stamps the finish time, lists `path` itself and writes the manifest.
    pub fn finish(mut self, path: &Path) -> Result<(), CliError> {
        self.finished = Some(now());
        self.outputs.push(path.to_path_buf());
        std::fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }
}

/// Manifest path for an output file: `<file>.manifest`.
pub fn beside(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// Reads the `key: value` lines of a manifest.
pub fn read(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_program_name_only() {
        let a: Vec<OsString> = ["ufo", "train", "--epochs", "3"].iter().map(OsString::from).collect();
        let mut b = a.clone();
        b[0] = "/usr/bin/ufo".into();
        assert_eq!(config_hash(&a), config_hash(&b));
        b[3] = "4".into();
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn render_lists_outputs() {
        let args: Vec<OsString> = vec!["ufo".into(), "params".into()];
        let mut m = RunManifest::start(&args);
        m.seeds = vec![42, 200];
        m.outputs.push("a.csv".into());
        let text = m.render();
        assert!(text.contains("seeds: 42,200\n"));
        assert!(text.contains("output: a.csv\n"));
        assert!(text.starts_with("command: ufo params\n"));
    }
}
