//! Run manifests: the resolved configuration plus digests of every input
//! file, written beside each output so a run can be reproduced exactly.

use std::fmt::Write as _;
use std::path::Path;

use incidentmine::digest::sha256_hex;

use crate::CliError;

pub const MANIFEST_FORMAT_TAG: &str = "incidentmine-manifest v1";

pub struct Manifest {
    command: &'static str,
    args: Vec<(String, String)>,
    inputs: Vec<(String, String, String)>, // key, path, digest
}

impl Manifest {
    pub fn new(command: &'static str) -> Manifest {
        Manifest {
            command,
            args: Vec::new(),
            inputs: Vec::new(),
        }
    }

    pub fn arg(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.args.push((key.to_string(), value.to_string()));
        self
    }

    pub fn input(&mut self, key: &str, path: &Path) -> Result<&mut Self, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Validation(format!("input {}: {e}", path.display())))?;
        self.inputs
            .push((key.to_string(), path.display().to_string(), sha256_hex(&bytes)));
        Ok(self)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MANIFEST_FORMAT_TAG}");
        let _ = writeln!(out, "command = {}", self.command);
        for (key, value) in &self.args {
            let _ = writeln!(out, "arg {key} = {value}");
        }
        for (key, path, digest) in &self.inputs {
            let _ = writeln!(out, "digest {key} = {digest}");
            let _ = writeln!(out, "path {key} = {path}");
        }
        out
    }

    /// Writes `<output>.manifest` beside the given output file.
    pub fn write_beside(&self, output: &Path) -> Result<(), CliError> {
        let mut path = output.as_os_str().to_owned();
        path.push(".manifest");
        std::fs::write(&path, self.render())
            .map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
        Ok(())
    }
}
