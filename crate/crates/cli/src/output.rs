use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes through a sibling temporary file and renames it into place.
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let dir = path.parent().unwrap_or(&self.root);
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
        let tmp = dir.join(format!(".{file_name}.tmp{}", std::process::id()));
        let result = fs::File::create(&tmp)
            .and_then(|mut f| {
                f.write_all(contents.as_bytes())?;
                f.sync_all()
            })
            .and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(&path, e));
        }
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// CSV text with a header row; numbers use the shortest round-trip form.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Common envelope of every JSON report.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    #[serde(flatten)]
    pub body: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'static str, config: &'a RunConfig, body: T) -> Self {
        Report {
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            body,
        }
    }
}
