use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

/// Exit code plus message for anything that stops a run.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<fractal_coherence::Error> for Failure {
    fn from(e: fractal_coherence::Error) -> Self {
        Self {
            code: if e.is_internal() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::internal(format!("serialization failed: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::usage(e.to_string())
    }
}

/// Who ran what. Embedded in every output so a result file can be
/// reproduced; everything but the timestamp determines the numbers.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub flags: serde_json::Value,
    /// Caps in effect after environment and flags.
    pub caps: fractal_coherence::Caps,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub timestamp: String,
}

impl RunManifest {
    pub fn comment(&self) -> Result<String, Failure> {
        Ok(format!("# manifest {}\n", serde_json::to_string(self)?))
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: &'a T,
}

pub fn json_with_manifest<T: Serialize>(manifest: &RunManifest, body: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(&Envelope { manifest, body })?;
    s.push('\n');
    Ok(s)
}

/// Writes to the file, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => File::create(p)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Formats an optional float for a CSV cell.
pub fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}
