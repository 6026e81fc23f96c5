//! Run manifests: the `# key: value` block heading every output file.
//!
//! The `command` line is a complete invocation with every option spelled
//! out, so running it again reproduces the data rows.

use std::io::Write;
use std::time::Duration;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    /// `statecap` followed by the resolved arguments.
    pub command: Vec<String>,
    /// Column schema of the rows that follow, e.g. `simulate/1`.
    pub schema: &'static str,
    pub seed: Option<u64>,
    /// Resolved configuration, in display order.
    pub config: Vec<(String, String)>,
    pub elapsed: Duration,
}

impl RunManifest {
    pub fn command_line(&self) -> String {
        shell_words::join(&self.command)
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# statecap run manifest")?;
        writeln!(w, "# tool_version: {TOOL_VERSION}")?;
        writeln!(w, "# schema: {}", self.schema)?;
        writeln!(w, "# command: {}", self.command_line())?;
        match self.seed {
            Some(s) => writeln!(w, "# seed: {s}")?,
            None => writeln!(w, "# seed: none")?,
        }
        for (k, v) in &self.config {
            writeln!(w, "# config.{k}: {v}")?;
        }
        writeln!(w, "# wall_clock_seconds: {:.3}", self.elapsed.as_secs_f64())
    }
}

/// Value of `key` in a manifest block.
pub fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .map_while(|l| l.strip_prefix("# "))
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
}

/// Lines after the manifest block.
pub fn data_rows(text: &str) -> Vec<&str> {
    text.lines().skip_while(|l| l.starts_with('#')).collect()
}
