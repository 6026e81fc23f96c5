//! Channel description files.
//!
//! A file is TOML with a fixed layout:
//!
//! ```toml
//! model = "bc"                 # single | bc | relay | mac
//! name = "clean-bsc"           # optional
//! comment = "free text"        # optional
//! state = [1.0]                # p(s)
//!
//! [alphabets]                  # every alphabet of the model, no others
//! x = 2
//! s = 1
//! y1 = 2
//! y2 = 2
//!
//! [kernel]
//! index = ["x", "s"]           # row tuple, first axis slowest
//! columns = ["y1", "y2"]       # column tuple, first axis slowest
//! rows = [
//!   [1.0, 0.0, 0.0, 0.0],
//!   [0.0, 0.0, 0.0, 1.0],
//! ]
//! ```
//!
//! `index` and `columns` must name the model's axes in the order given by
//! [`Model::row_axes`] and [`Model::column_axes`]. Rows and the state pmf
//! are normalized on load when their sum is within [`LOAD_SLACK`] of one and
//! rejected otherwise.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::Deserialize;
use statecap::channels::{
    check_bc_degraded, check_relay_degraded, strategy_count, BcDegradedness, BroadcastStateChannel,
    MacStateChannel, RelayDegradedness, RelayStateChannel, StateChannel, DEFAULT_DEGRADED_TOL,
    DEFAULT_STRATEGY_CAP,
};
use statecap::probcore::{Pmf, MASS_TOLERANCE};
use thiserror::Error;

/// Largest row-sum deviation from one that is normalized away on load.
pub const LOAD_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Single,
    Bc,
    Relay,
    Mac,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Single => "single",
            Model::Bc => "bc",
            Model::Relay => "relay",
            Model::Mac => "mac",
        }
    }

    /// Alphabet names, in canonical file order.
    pub fn alphabets(&self) -> &'static [&'static str] {
        match self {
            Model::Single => &["x", "s", "y"],
            Model::Bc => &["x", "s", "y1", "y2"],
            Model::Relay => &["x", "x1", "s", "y1", "y"],
            Model::Mac => &["x1", "x2", "s", "y"],
        }
    }

    pub fn row_axes(&self) -> &'static [&'static str] {
        match self {
            Model::Single | Model::Bc => &["x", "s"],
            Model::Relay => &["x", "x1", "s"],
            Model::Mac => &["x1", "x2", "s"],
        }
    }

    pub fn column_axes(&self) -> &'static [&'static str] {
        match self {
            Model::Single | Model::Mac => &["y"],
            Model::Bc => &["y1", "y2"],
            Model::Relay => &["y1", "y"],
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{}: {message}", .line.map(|l| format!("line {l}, ")).unwrap_or_default(), field.as_deref().map(|f| format!("field `{f}`")).unwrap_or_else(|| "syntax".into()))]
pub struct ParseError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    model: Model,
    name: Option<String>,
    comment: Option<String>,
    state: Vec<f64>,
    alphabets: toml::Spanned<BTreeMap<String, usize>>,
    kernel: RawKernel,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    index: toml::Spanned<Vec<String>>,
    columns: toml::Spanned<Vec<String>>,
    rows: Vec<Vec<f64>>,
}

/// A parsed, not yet validated, channel file.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFile {
    pub model: Model,
    pub name: Option<String>,
    pub comment: Option<String>,
    /// Sizes in [`Model::alphabets`] order.
    pub sizes: Vec<usize>,
    pub state: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

fn line_of(text: &str, span: Option<Range<usize>>) -> Option<usize> {
    span.map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

pub fn parse(text: &str) -> Result<ChannelFile, ParseError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| ParseError {
        line: line_of(text, e.span()),
        field: None,
        message: e.message().trim().to_string(),
    })?;
    let model = raw.model;
    let err = |span: Range<usize>, field: &str, message: String| ParseError {
        line: line_of(text, Some(span)),
        field: Some(field.to_string()),
        message,
    };

    let span = raw.alphabets.span();
    let alphabets = raw.alphabets.into_inner();
    if let Some(extra) = alphabets
        .keys()
        .find(|k| !model.alphabets().contains(&k.as_str()))
    {
        return Err(err(
            span,
            &format!("alphabets.{extra}"),
            format!(
                "not an alphabet of model `{model}` (expected {:?})",
                model.alphabets()
            ),
        ));
    }
    let mut sizes = Vec::new();
    for &a in model.alphabets() {
        match alphabets.get(a) {
            Some(&n) => sizes.push(n),
            None => {
                return Err(err(span, &format!("alphabets.{a}"), "missing".into()));
            }
        }
    }
    for (field, got, want) in [
        ("kernel.index", &raw.kernel.index, model.row_axes()),
        ("kernel.columns", &raw.kernel.columns, model.column_axes()),
    ] {
        if got
            .get_ref()
            .iter()
            .map(String::as_str)
            .ne(want.iter().copied())
        {
            return Err(err(
                got.span(),
                field,
                format!(
                    "expected {want:?} for model `{model}`, got {:?}",
                    got.get_ref()
                ),
            ));
        }
    }
    Ok(ChannelFile {
        model,
        name: raw.name,
        comment: raw.comment,
        sizes,
        state: raw.state,
        rows: raw.kernel.rows,
    })
}

/// Any of the four channel types.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Single(StateChannel),
    Bc(BroadcastStateChannel),
    Relay(RelayStateChannel),
    Mac(MacStateChannel),
}

impl Channel {
    pub fn model(&self) -> Model {
        match self {
            Channel::Single(_) => Model::Single,
            Channel::Bc(_) => Model::Bc,
            Channel::Relay(_) => Model::Relay,
            Channel::Mac(_) => Model::Mac,
        }
    }

    pub fn kernel(&self) -> &[f64] {
        match self {
            Channel::Single(c) => c.kernel(),
            Channel::Bc(c) => c.kernel(),
            Channel::Relay(c) => c.kernel(),
            Channel::Mac(c) => c.kernel(),
        }
    }

    pub fn state(&self) -> &Pmf {
        match self {
            Channel::Single(c) => c.state_pmf(),
            Channel::Bc(c) => c.state_pmf(),
            Channel::Relay(c) => c.state_pmf(),
            Channel::Mac(c) => c.state_pmf(),
        }
    }
}

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub checks: Vec<Check>,
    /// Present when every check needed to build the channel passed.
    pub channel: Option<Channel>,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.to_string())
            .collect()
    }
}

/// `Ok(normalized)` or `Err(sum)` when the sum is out of slack.
fn normalize(v: &[f64]) -> Result<Vec<f64>, f64> {
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() <= MASS_TOLERANCE {
        Ok(v.to_vec())
    } else if (sum - 1.0).abs() <= LOAD_SLACK {
        Ok(v.iter().map(|p| p / sum).collect())
    } else {
        Err(sum)
    }
}

fn bad_entry(v: &[f64]) -> Option<(usize, f64)> {
    v.iter()
        .position(|&p| !(p.is_finite() && (0.0..=1.0 + LOAD_SLACK).contains(&p)))
        .map(|i| (i, v[i]))
}

fn tuple_label(names: &[&str], sizes: &[usize], mut index: usize) -> String {
    let mut parts = vec![String::new(); names.len()];
    for k in (0..names.len()).rev() {
        parts[k] = format!("{}={}", names[k], index % sizes[k]);
        index /= sizes[k];
    }
    format!("({})", parts.join(", "))
}

impl ChannelFile {
    pub fn size(&self, alphabet: &str) -> usize {
        let i = self.model.alphabets().iter().position(|&a| a == alphabet);
        i.map_or(0, |i| self.sizes[i])
    }

    fn axis_sizes(&self, axes: &[&str]) -> Vec<usize> {
        axes.iter().map(|a| self.size(a)).collect()
    }

    pub fn row_label(&self, row: usize) -> String {
        let axes = self.model.row_axes();
        tuple_label(axes, &self.axis_sizes(axes), row)
    }

    pub fn validate(&self) -> Validation {
        let mut checks = Vec::new();
        let mut push = |name, passed, detail: String| {
            checks.push(Check {
                name,
                passed,
                detail,
            });
            passed
        };
        let sizes_ok = push(
            "alphabet sizes",
            self.sizes.iter().all(|&n| n > 0),
            self.model
                .alphabets()
                .iter()
                .zip(&self.sizes)
                .map(|(a, n)| format!("|{a}|={n}"))
                .collect::<Vec<_>>()
                .join(" "),
        );
        if !sizes_ok {
            return Validation {
                checks,
                channel: None,
            };
        }

        let ns = self.size("s");
        let state = if self.state.len() != ns {
            push(
                "state pmf",
                false,
                format!("{} entries, expected {ns}", self.state.len()),
            );
            None
        } else if let Some((i, v)) = bad_entry(&self.state) {
            push(
                "state pmf",
                false,
                format!("invalid probability {v} at s={i}"),
            );
            None
        } else {
            match normalize(&self.state) {
                Ok(p) => {
                    push("state pmf", true, format!("{ns} entries"));
                    Some(p)
                }
                Err(sum) => {
                    push("state pmf", false, format!("sums to {sum}"));
                    None
                }
            }
        };

        let n_rows: usize = self.axis_sizes(self.model.row_axes()).iter().product();
        let n_cols: usize = self.axis_sizes(self.model.column_axes()).iter().product();
        let shape_error = if self.rows.len() != n_rows {
            Some(format!("{} rows, expected {n_rows}", self.rows.len()))
        } else {
            self.rows.iter().position(|r| r.len() != n_cols).map(|r| {
                format!(
                    "row {} has {} entries, expected {n_cols}",
                    self.row_label(r),
                    self.rows[r].len()
                )
            })
        };
        let shape_ok = push(
            "kernel shape",
            shape_error.is_none(),
            shape_error.unwrap_or_else(|| format!("{n_rows} rows of {n_cols}")),
        );
        let mut kernel = None;
        if shape_ok {
            let entries = self
                .rows
                .iter()
                .enumerate()
                .find_map(|(r, row)| bad_entry(row).map(|(_, v)| (r, v)));
            let entries_ok = push(
                "kernel entries",
                entries.is_none(),
                match entries {
                    Some((r, v)) => format!("invalid probability {v} in row {}", self.row_label(r)),
                    None => "all in [0, 1]".into(),
                },
            );
            if entries_ok {
                let mut flat = Vec::with_capacity(n_rows * n_cols);
                let mut failure = None;
                for (r, row) in self.rows.iter().enumerate() {
                    match normalize(row) {
                        Ok(p) => flat.extend(p),
                        Err(sum) => {
                            failure = Some(format!(
                                "non-stochastic row {}: sums to {sum}",
                                self.row_label(r)
                            ));
                            break;
                        }
                    }
                }
                let ok = push(
                    "stochastic rows",
                    failure.is_none(),
                    failure.unwrap_or_else(|| format!("{n_rows} rows sum to 1")),
                );
                if ok {
                    kernel = Some(flat);
                }
            }
        }

        let mut strat = Vec::new();
        for x in ["x", "x1", "x2"] {
            if self.model.alphabets().contains(&x) {
                strat.push((x, strategy_count(self.size(x), ns, DEFAULT_STRATEGY_CAP)));
            }
        }
        let strat_ok = strat.iter().all(|(_, r)| r.is_ok());
        push(
            "strategy alphabets",
            strat_ok,
            strat
                .iter()
                .map(|(x, r)| match r {
                    Ok(n) => format!("|{x}|^|s| = {n}"),
                    Err(e) => e.to_string(),
                })
                .collect::<Vec<_>>()
                .join(", "),
        );

        let (Some(state), Some(kernel)) = (state, kernel) else {
            return Validation {
                checks,
                channel: None,
            };
        };
        let built = self.build(kernel, state);
        let channel = match built {
            Ok(c) => c,
            Err(e) => {
                push("channel construction", false, e.to_string());
                return Validation {
                    checks,
                    channel: None,
                };
            }
        };
        match &channel {
            Channel::Bc(c) => {
                match check_bc_degraded(c, DEFAULT_DEGRADED_TOL) {
                    BcDegradedness::Degraded { max_residual, .. } => {
                        push(
                        "physically degraded",
                        true,
                        format!("p(y1,y2|x,s) = p(y1|x,s) p(y2|y1), max residual {max_residual:.3e}"),
                    );
                    }
                    BcDegradedness::NotDegraded { witness: w } => {
                        push(
                            "physically degraded",
                            false,
                            format!(
                                "witness cell (x={}, s={}, y1={}), residual {:.3e}",
                                w.x, w.s, w.y1, w.residual
                            ),
                        );
                    }
                }
            }
            Channel::Relay(c) => match check_relay_degraded(c, DEFAULT_DEGRADED_TOL) {
                RelayDegradedness::Degraded { max_residual, .. } => {
                    push(
                        "physically degraded",
                        true,
                        format!("p(y|y1,x,x1,s) free of x, max residual {max_residual:.3e}"),
                    );
                }
                RelayDegradedness::NotDegraded { witness: w } => {
                    push(
                        "physically degraded",
                        false,
                        format!(
                            "witness cell (x={}, x1={}, s={}, y1={}), residual {:.3e}",
                            w.x, w.x1, w.s, w.y1, w.residual
                        ),
                    );
                }
            },
            _ => {}
        }
        Validation {
            checks,
            channel: Some(channel),
        }
    }

    fn build(&self, kernel: Vec<f64>, state: Vec<f64>) -> statecap::channels::Result<Channel> {
        let state = Pmf::new(state)?;
        let s = |a| self.size(a);
        Ok(match self.model {
            Model::Single => {
                Channel::Single(StateChannel::new(s("x"), s("s"), s("y"), kernel, state)?)
            }
            Model::Bc => Channel::Bc(BroadcastStateChannel::new(
                s("x"),
                s("s"),
                s("y1"),
                s("y2"),
                kernel,
                state,
            )?),
            Model::Relay => Channel::Relay(RelayStateChannel::new(
                s("x"),
                s("x1"),
                s("s"),
                s("y1"),
                s("y"),
                kernel,
                state,
            )?),
            Model::Mac => Channel::Mac(MacStateChannel::new(
                s("x1"),
                s("x2"),
                s("s"),
                s("y"),
                kernel,
                state,
            )?),
        })
    }
}

fn float_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|p| format!("{p:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Canonical text of a validated channel. Floats use the shortest decimal
/// that reads back to the same bits, so `parse` then `validate` on the
/// output rebuilds an identical channel.
pub fn to_canonical(file: &ChannelFile, channel: &Channel) -> String {
    let model = file.model;
    let mut out = String::new();
    out.push_str(&format!("model = {}\n", quoted(model.as_str())));
    if let Some(name) = &file.name {
        out.push_str(&format!("name = {}\n", quoted(name)));
    }
    if let Some(comment) = &file.comment {
        out.push_str(&format!("comment = {}\n", quoted(comment)));
    }
    out.push_str(&format!(
        "state = {}\n\n[alphabets]\n",
        float_list(channel.state().probs())
    ));
    for (a, n) in model.alphabets().iter().zip(&file.sizes) {
        out.push_str(&format!("{a} = {n}\n"));
    }
    let list = |axes: &[&str]| {
        let q: Vec<String> = axes.iter().map(|a| quoted(a)).collect();
        format!("[{}]", q.join(", "))
    };
    out.push_str(&format!(
        "\n[kernel]\nindex = {}\ncolumns = {}\nrows = [\n",
        list(model.row_axes()),
        list(model.column_axes())
    ));
    let cols: usize = file.axis_sizes(model.column_axes()).iter().product();
    for (r, row) in channel.kernel().chunks(cols).enumerate() {
        out.push_str(&format!(
            "  {},  # {}\n",
            float_list(row),
            file.row_label(r)
        ));
    }
    out.push_str("]\n");
    out
}
