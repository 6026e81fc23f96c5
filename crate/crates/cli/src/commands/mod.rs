mod capacity;
mod region;
mod simulate;
mod validate;

use std::io::Write;
use std::path::Path;

pub use capacity::capacity;
pub use region::region;
pub use simulate::simulate;
pub use validate::validate;

use statecap::channels::{enumerate_strategies, StrategyMap, DEFAULT_STRATEGY_CAP};

use crate::args::ChannelArgs;
use crate::channel_file::{self, Channel, ChannelFile, Model};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;

/// Reads and parses the channel file without validating it.
pub(crate) fn read(args: &ChannelArgs) -> Result<ChannelFile> {
    let path = &args.channel;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let file = channel_file::parse(&text).map_err(|source| CliError::Parse {
        path: path.clone(),
        source,
    })?;
    if let Some(m) = args.model {
        if m != file.model {
            return Err(CliError::Usage(format!(
                "{}: --model {m} given but the file declares model `{}`",
                path.display(),
                file.model
            )));
        }
    }
    Ok(file)
}

/// Reads, parses and validates; any failing check aborts.
pub(crate) fn load(args: &ChannelArgs) -> Result<(ChannelFile, Channel)> {
    let file = read(args)?;
    let v = file.validate();
    match v.channel {
        Some(channel) if v.checks.iter().all(|c| c.passed) => Ok((file, channel)),
        _ => Err(CliError::Validation {
            path: args.channel.clone(),
            failures: v.failures(),
        }),
    }
}

pub(crate) fn require(model: Model, allowed: &[Model], command: &str) -> Result<()> {
    if allowed.contains(&model) {
        return Ok(());
    }
    let names: Vec<&str> = allowed.iter().map(|m| m.as_str()).collect();
    Err(CliError::Usage(format!(
        "`{command}` accepts {} channels, got `{model}`",
        names.join(" or ")
    )))
}

pub(crate) fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        eprintln!("warning: no --seed given; using seed 0");
        0
    })
}

/// Argument vector for the manifest, starting with the program and subcommand.
pub(crate) struct Argv(Vec<String>);

impl Argv {
    pub(crate) fn new(command: &str, channel: &ChannelArgs) -> Self {
        let mut v = vec!["statecap".to_string(), command.to_string()];
        v.push("--channel".into());
        v.push(channel.channel.display().to_string());
        if let Some(m) = channel.model {
            v.push("--model".into());
            v.push(m.as_str().into());
        }
        Self(v)
    }

    pub(crate) fn opt(&mut self, flag: &str, value: impl ToString) -> &mut Self {
        self.0.push(format!("--{flag}"));
        self.0.push(value.to_string());
        self
    }

    pub(crate) fn list<T: ToString>(&mut self, flag: &str, values: &[T]) -> &mut Self {
        if !values.is_empty() {
            let joined: Vec<String> = values.iter().map(T::to_string).collect();
            self.opt(flag, joined.join(","));
        }
        self
    }

    pub(crate) fn flag(&mut self, flag: &str, on: bool) -> &mut Self {
        if on {
            self.0.push(format!("--{flag}"));
        }
        self
    }

    pub(crate) fn out(&mut self, out: Option<&Path>) -> &mut Self {
        if let Some(p) = out {
            self.opt("out", p.display());
        }
        self
    }

    pub(crate) fn into_vec(self) -> Vec<String> {
        self.0
    }
}

/// Manifest block followed by CSV, to `out` or stdout.
pub(crate) fn emit_csv(
    out: Option<&Path>,
    manifest: &RunManifest,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut buf = Vec::new();
    manifest.write_to(&mut buf).expect("write to memory");
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().expect("write to memory");
    }
    match out {
        Some(path) => std::fs::write(path, &buf).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

pub(crate) fn strategies(x: usize, s: usize) -> Result<Vec<StrategyMap>> {
    Ok(enumerate_strategies(x, s, DEFAULT_STRATEGY_CAP)?)
}

/// `(t(0),t(1),...)`.
pub(crate) fn strategy_label(t: &StrategyMap) -> String {
    let v: Vec<String> = t.table().iter().map(usize::to_string).collect();
    format!("({})", v.join(","))
}
