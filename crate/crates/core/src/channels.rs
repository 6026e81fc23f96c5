//! Channel models with causal state at the transmitter(s), the Shannon
//! strategy transform, and physical-degradedness checks.
//!
//! Kernel layouts are row-major with the conditioning tuple as the row and
//! the output tuple as the column:
//!
//! | model                    | row index        | column index |
//! |--------------------------|------------------|--------------|
//! | [`StateChannel`]         | `(x, s)`         | `y`          |
//! | [`BroadcastStateChannel`]| `(x, s)`         | `(y1, y2)`   |
//! | [`RelayStateChannel`]    | `(x, x1, s)`     | `(y1, y)`    |
//! | [`MacStateChannel`]      | `(x1, x2, s)`    | `y`          |
//!
//! A strategy `t: S -> X` is stored as its table `[t(0), .., t(|S|-1)]`.
//! Strategies are enumerated in lexicographic order of their tables, so with
//! `|S| = 1` strategy `k` is the plain input `k`.

use thiserror::Error;

use crate::probcore::{assemble_joint, Axis, Factor, JointPmf, Pmf, ProbError, MASS_TOLERANCE};

/// Largest strategy alphabet expanded by default (4^6).
pub const DEFAULT_STRATEGY_CAP: usize = 4096;

/// Default tolerance for the degradedness factorization.
pub const DEFAULT_DEGRADED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("alphabet `{0}` is empty")]
    EmptyAlphabet(&'static str),
    #[error("kernel has {got} entries, expected {expected}")]
    KernelShape { expected: usize, got: usize },
    #[error("non-stochastic row {row} {label}: sums to {sum}")]
    NonStochasticRow { row: usize, label: String, sum: f64 },
    #[error("invalid probability {value} in row {row} {label}")]
    InvalidEntry {
        row: usize,
        label: String,
        value: f64,
    },
    #[error("state pmf has {got} entries, expected {expected}")]
    StateShape { expected: usize, got: usize },
    #[error("invalid state pmf: {0}")]
    StatePmf(ProbError),
    #[error("strategy alphabet {x_size}^{s_size} exceeds cap {cap}")]
    StrategyCapExceeded {
        x_size: usize,
        s_size: usize,
        cap: usize,
    },
    #[error("strategy pmf has shape {got:?}, expected {expected:?}")]
    StrategyShape {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// An ordinary discrete memoryless channel `p(y|x)` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    inputs: usize,
    outputs: usize,
    rows: Vec<f64>,
}

impl Dmc {
    pub fn new(inputs: usize, outputs: usize, rows: Vec<f64>) -> Result<Self> {
        if inputs == 0 {
            return Err(ChannelError::EmptyAlphabet("input"));
        }
        if outputs == 0 {
            return Err(ChannelError::EmptyAlphabet("output"));
        }
        check_rows(&rows, outputs, inputs * outputs, |r| format!("(x={r})"))?;
        Ok(Self {
            inputs,
            outputs,
            rows,
        })
    }

    pub(crate) fn from_rows_unchecked(inputs: usize, outputs: usize, rows: Vec<f64>) -> Self {
        debug_assert_eq!(rows.len(), inputs * outputs);
        Self {
            inputs,
            outputs,
            rows,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    /// Output distribution of input pmf `p`.
    pub fn output_distribution(&self, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.outputs];
        for (x, &px) in p.iter().enumerate() {
            if px > 0.0 {
                for (qy, &w) in q.iter_mut().zip(self.row(x)) {
                    *qy += px * w;
                }
            }
        }
        q
    }

    /// `I(X;Y)` in bits for input pmf `p`.
    pub fn mutual_information(&self, p: &[f64]) -> f64 {
        let q = self.output_distribution(p);
        let mut mi = 0.0;
        for (x, &px) in p.iter().enumerate() {
            if px > 0.0 {
                for (&w, &qy) in self.row(x).iter().zip(&q) {
                    if w > 0.0 {
                        mi += px * w * (w / qy).log2();
                    }
                }
            }
        }
        mi.max(0.0)
    }

    /// Same channel with `extra` zero-probability output columns appended.
    pub fn with_dead_outputs(&self, extra: usize) -> Dmc {
        let outputs = self.outputs + extra;
        let mut rows = Vec::with_capacity(self.inputs * outputs);
        for x in 0..self.inputs {
            rows.extend_from_slice(self.row(x));
            rows.extend(std::iter::repeat_n(0.0, extra));
        }
        Dmc::from_rows_unchecked(self.inputs, outputs, rows)
    }
}

fn check_rows(
    kernel: &[f64],
    cols: usize,
    expected: usize,
    label: impl Fn(usize) -> String,
) -> Result<()> {
    if kernel.len() != expected {
        return Err(ChannelError::KernelShape {
            expected,
            got: kernel.len(),
        });
    }
    for (row, r) in kernel.chunks(cols).enumerate() {
        if let Some(&value) = r.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(ChannelError::InvalidEntry {
                row,
                label: label(row),
                value,
            });
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(ChannelError::NonStochasticRow {
                row,
                label: label(row),
                sum,
            });
        }
    }
    Ok(())
}

fn check_state(state_pmf: &Pmf, s_size: usize) -> Result<()> {
    if state_pmf.len() != s_size {
        return Err(ChannelError::StateShape {
            expected: s_size,
            got: state_pmf.len(),
        });
    }
    Ok(())
}

fn nonzero(sizes: &[(&'static str, usize)]) -> Result<()> {
    for &(name, n) in sizes {
        if n == 0 {
            return Err(ChannelError::EmptyAlphabet(name));
        }
    }
    Ok(())
}

/// A map `t: S -> X`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyMap {
    table: Vec<usize>,
}

impl StrategyMap {
    pub fn new(table: Vec<usize>, x_size: usize) -> Option<Self> {
        table.iter().all(|&x| x < x_size).then_some(Self { table })
    }

    #[inline]
    pub fn apply(&self, s: usize) -> usize {
        self.table[s]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }
}

/// `x_size^s_size` if it fits under `cap`.
pub fn strategy_count(x_size: usize, s_size: usize, cap: usize) -> Result<usize> {
    u32::try_from(s_size)
        .ok()
        .and_then(|e| x_size.checked_pow(e))
        .filter(|&n| n <= cap)
        .ok_or(ChannelError::StrategyCapExceeded {
            x_size,
            s_size,
            cap,
        })
}

/// All `x_size^s_size` strategies in lexicographic order of their tables.
pub fn enumerate_strategies(x_size: usize, s_size: usize, cap: usize) -> Result<Vec<StrategyMap>> {
    nonzero(&[("x", x_size), ("s", s_size)])?;
    let count = strategy_count(x_size, s_size, cap)?;
    let mut out = Vec::with_capacity(count);
    let mut table = vec![0usize; s_size];
    for _ in 0..count {
        out.push(StrategyMap {
            table: table.clone(),
        });
        for d in (0..s_size).rev() {
            table[d] += 1;
            if table[d] < x_size {
                break;
            }
            table[d] = 0;
        }
    }
    Ok(out)
}

/// Single-user channel `p(y|x,s)` with state pmf `p(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateChannel {
    x_size: usize,
    s_size: usize,
    y_size: usize,
    kernel: Vec<f64>,
    state_pmf: Pmf,
}

impl StateChannel {
    pub fn new(
        x_size: usize,
        s_size: usize,
        y_size: usize,
        kernel: Vec<f64>,
        state_pmf: Pmf,
    ) -> Result<Self> {
        nonzero(&[("x", x_size), ("s", s_size), ("y", y_size)])?;
        check_state(&state_pmf, s_size)?;
        check_rows(&kernel, y_size, x_size * s_size * y_size, |r| {
            format!("(x={}, s={})", r / s_size, r % s_size)
        })?;
        Ok(Self {
            x_size,
            s_size,
            y_size,
            kernel,
            state_pmf,
        })
    }

    /// A state-independent channel `p(y|x)` with a dummy state alphabet.
    pub fn state_independent(dmc: &Dmc, state_pmf: Pmf) -> Result<Self> {
        let s_size = state_pmf.len();
        let mut kernel = Vec::with_capacity(dmc.inputs() * s_size * dmc.outputs());
        for x in 0..dmc.inputs() {
            for _ in 0..s_size {
                kernel.extend_from_slice(dmc.row(x));
            }
        }
        Self::new(dmc.inputs(), s_size, dmc.outputs(), kernel, state_pmf)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }
    pub fn s_size(&self) -> usize {
        self.s_size
    }
    pub fn y_size(&self) -> usize {
        self.y_size
    }
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
    pub fn state_pmf(&self) -> &Pmf {
        &self.state_pmf
    }

    pub fn row(&self, x: usize, s: usize) -> &[f64] {
        let off = (x * self.s_size + s) * self.y_size;
        &self.kernel[off..off + self.y_size]
    }

    /// Same channel with `extra` zero-probability output symbols appended.
    pub fn with_dead_outputs(&self, extra: usize) -> Self {
        let y_size = self.y_size + extra;
        let mut kernel = Vec::with_capacity(self.x_size * self.s_size * y_size);
        for row in self.kernel.chunks(self.y_size) {
            kernel.extend_from_slice(row);
            kernel.extend(std::iter::repeat_n(0.0, extra));
        }
        Self {
            y_size,
            kernel,
            ..self.clone()
        }
    }
}

/// Broadcast channel `p(y1, y2|x, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastStateChannel {
    x_size: usize,
    s_size: usize,
    y1_size: usize,
    y2_size: usize,
    kernel: Vec<f64>,
    state_pmf: Pmf,
}

impl BroadcastStateChannel {
    pub fn new(
        x_size: usize,
        s_size: usize,
        y1_size: usize,
        y2_size: usize,
        kernel: Vec<f64>,
        state_pmf: Pmf,
    ) -> Result<Self> {
        nonzero(&[
            ("x", x_size),
            ("s", s_size),
            ("y1", y1_size),
            ("y2", y2_size),
        ])?;
        check_state(&state_pmf, s_size)?;
        check_rows(
            &kernel,
            y1_size * y2_size,
            x_size * s_size * y1_size * y2_size,
            |r| format!("(x={}, s={})", r / s_size, r % s_size),
        )?;
        Ok(Self {
            x_size,
            s_size,
            y1_size,
            y2_size,
            kernel,
            state_pmf,
        })
    }

    /// Physically degraded composition `p(y1|x,s) p(y2|y1)`.
    pub fn degraded(strong: &StateChannel, weak: &Dmc) -> Result<Self> {
        let (x_size, s_size, y1_size) = (strong.x_size, strong.s_size, strong.y_size);
        if weak.inputs() != y1_size {
            return Err(ChannelError::KernelShape {
                expected: y1_size,
                got: weak.inputs(),
            });
        }
        let y2_size = weak.outputs();
        let mut kernel = Vec::with_capacity(x_size * s_size * y1_size * y2_size);
        for x in 0..x_size {
            for s in 0..s_size {
                for (y1, &p1) in strong.row(x, s).iter().enumerate() {
                    kernel.extend(weak.row(y1).iter().map(|&p2| p1 * p2));
                }
            }
        }
        Self::new(
            x_size,
            s_size,
            y1_size,
            y2_size,
            kernel,
            strong.state_pmf.clone(),
        )
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }
    pub fn s_size(&self) -> usize {
        self.s_size
    }
    pub fn y1_size(&self) -> usize {
        self.y1_size
    }
    pub fn y2_size(&self) -> usize {
        self.y2_size
    }
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
    pub fn state_pmf(&self) -> &Pmf {
        &self.state_pmf
    }

    /// Row `p(y1, y2 | x, s)` flattened with `y1` outer.
    pub fn row(&self, x: usize, s: usize) -> &[f64] {
        let cols = self.y1_size * self.y2_size;
        let off = (x * self.s_size + s) * cols;
        &self.kernel[off..off + cols]
    }

    /// The single-user channel seen by receiver 1.
    pub fn strong_marginal(&self) -> StateChannel {
        let mut kernel = Vec::with_capacity(self.x_size * self.s_size * self.y1_size);
        for row in self.kernel.chunks(self.y1_size * self.y2_size) {
            kernel.extend(row.chunks(self.y2_size).map(|c| c.iter().sum::<f64>()));
        }
        StateChannel {
            x_size: self.x_size,
            s_size: self.s_size,
            y_size: self.y1_size,
            kernel,
            state_pmf: self.state_pmf.clone(),
        }
    }

    /// The single-user channel seen by receiver 2.
    pub fn weak_marginal(&self) -> StateChannel {
        let mut kernel = Vec::with_capacity(self.x_size * self.s_size * self.y2_size);
        for row in self.kernel.chunks(self.y1_size * self.y2_size) {
            let mut out = vec![0.0; self.y2_size];
            for c in row.chunks(self.y2_size) {
                for (o, &v) in out.iter_mut().zip(c) {
                    *o += v;
                }
            }
            kernel.extend(out);
        }
        StateChannel {
            x_size: self.x_size,
            s_size: self.s_size,
            y_size: self.y2_size,
            kernel,
            state_pmf: self.state_pmf.clone(),
        }
    }

    /// Appends `extra` dead symbols to both output alphabets.
    pub fn with_dead_outputs(&self, extra: usize) -> Self {
        let (y1n, y2n) = (self.y1_size + extra, self.y2_size + extra);
        let mut kernel = Vec::with_capacity(self.x_size * self.s_size * y1n * y2n);
        for row in self.kernel.chunks(self.y1_size * self.y2_size) {
            for y1 in 0..y1n {
                for y2 in 0..y2n {
                    let v = if y1 < self.y1_size && y2 < self.y2_size {
                        row[y1 * self.y2_size + y2]
                    } else {
                        0.0
                    };
                    kernel.push(v);
                }
            }
        }
        Self {
            y1_size: y1n,
            y2_size: y2n,
            kernel,
            ..self.clone()
        }
    }
}

/// Relay channel `p(y1, y | x, x1, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayStateChannel {
    x_size: usize,
    x1_size: usize,
    s_size: usize,
    y1_size: usize,
    y_size: usize,
    kernel: Vec<f64>,
    state_pmf: Pmf,
}

impl RelayStateChannel {
    pub fn new(
        x_size: usize,
        x1_size: usize,
        s_size: usize,
        y1_size: usize,
        y_size: usize,
        kernel: Vec<f64>,
        state_pmf: Pmf,
    ) -> Result<Self> {
        nonzero(&[
            ("x", x_size),
            ("x1", x1_size),
            ("s", s_size),
            ("y1", y1_size),
            ("y", y_size),
        ])?;
        check_state(&state_pmf, s_size)?;
        let rows = x_size * x1_size * s_size;
        check_rows(&kernel, y1_size * y_size, rows * y1_size * y_size, |r| {
            format!(
                "(x={}, x1={}, s={})",
                r / (x1_size * s_size),
                (r / s_size) % x1_size,
                r % s_size
            )
        })?;
        Ok(Self {
            x_size,
            x1_size,
            s_size,
            y1_size,
            y_size,
            kernel,
            state_pmf,
        })
    }

    /// Physically degraded composition `p(y1|x,x1,s) p(y|y1,x1,s)`.
    ///
    /// `to_relay` rows are `(x, x1, s)` over `y1`; `to_dest` rows are
    /// `(x1, s, y1)` over `y`.
    #[allow(clippy::too_many_arguments)]
    pub fn degraded(
        x_size: usize,
        x1_size: usize,
        s_size: usize,
        y1_size: usize,
        y_size: usize,
        to_relay: &[f64],
        to_dest: &[f64],
        state_pmf: Pmf,
    ) -> Result<Self> {
        let mut kernel = Vec::with_capacity(x_size * x1_size * s_size * y1_size * y_size);
        for x in 0..x_size {
            for x1 in 0..x1_size {
                for s in 0..s_size {
                    let r = ((x * x1_size + x1) * s_size + s) * y1_size;
                    for y1 in 0..y1_size {
                        let p1 = to_relay[r + y1];
                        let d = ((x1 * s_size + s) * y1_size + y1) * y_size;
                        kernel.extend(to_dest[d..d + y_size].iter().map(|&p| p1 * p));
                    }
                }
            }
        }
        Self::new(x_size, x1_size, s_size, y1_size, y_size, kernel, state_pmf)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }
    pub fn x1_size(&self) -> usize {
        self.x1_size
    }
    pub fn s_size(&self) -> usize {
        self.s_size
    }
    pub fn y1_size(&self) -> usize {
        self.y1_size
    }
    pub fn y_size(&self) -> usize {
        self.y_size
    }
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
    pub fn state_pmf(&self) -> &Pmf {
        &self.state_pmf
    }

    /// Row `p(y1, y | x, x1, s)` flattened with `y1` outer.
    pub fn row(&self, x: usize, x1: usize, s: usize) -> &[f64] {
        let cols = self.y1_size * self.y_size;
        let off = ((x * self.x1_size + x1) * self.s_size + s) * cols;
        &self.kernel[off..off + cols]
    }

    pub fn with_dead_outputs(&self, extra: usize) -> Self {
        let (y1n, yn) = (self.y1_size + extra, self.y_size + extra);
        let mut kernel = Vec::new();
        for row in self.kernel.chunks(self.y1_size * self.y_size) {
            for y1 in 0..y1n {
                for y in 0..yn {
                    let v = if y1 < self.y1_size && y < self.y_size {
                        row[y1 * self.y_size + y]
                    } else {
                        0.0
                    };
                    kernel.push(v);
                }
            }
        }
        Self {
            y1_size: y1n,
            y_size: yn,
            kernel,
            ..self.clone()
        }
    }
}

/// Multiple access channel `p(y | x1, x2, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacStateChannel {
    x1_size: usize,
    x2_size: usize,
    s_size: usize,
    y_size: usize,
    kernel: Vec<f64>,
    state_pmf: Pmf,
}

impl MacStateChannel {
    pub fn new(
        x1_size: usize,
        x2_size: usize,
        s_size: usize,
        y_size: usize,
        kernel: Vec<f64>,
        state_pmf: Pmf,
    ) -> Result<Self> {
        nonzero(&[
            ("x1", x1_size),
            ("x2", x2_size),
            ("s", s_size),
            ("y", y_size),
        ])?;
        check_state(&state_pmf, s_size)?;
        check_rows(&kernel, y_size, x1_size * x2_size * s_size * y_size, |r| {
            format!(
                "(x1={}, x2={}, s={})",
                r / (x2_size * s_size),
                (r / s_size) % x2_size,
                r % s_size
            )
        })?;
        Ok(Self {
            x1_size,
            x2_size,
            s_size,
            y_size,
            kernel,
            state_pmf,
        })
    }

    pub fn x1_size(&self) -> usize {
        self.x1_size
    }
    pub fn x2_size(&self) -> usize {
        self.x2_size
    }
    pub fn s_size(&self) -> usize {
        self.s_size
    }
    pub fn y_size(&self) -> usize {
        self.y_size
    }
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
    pub fn state_pmf(&self) -> &Pmf {
        &self.state_pmf
    }

    pub fn row(&self, x1: usize, x2: usize, s: usize) -> &[f64] {
        let off = ((x1 * self.x2_size + x2) * self.s_size + s) * self.y_size;
        &self.kernel[off..off + self.y_size]
    }

    /// Single-user channel of sender 1 with sender 2 fixed to input `x2`.
    pub fn sender1_channel(&self, x2: usize) -> StateChannel {
        let mut kernel = Vec::new();
        for x1 in 0..self.x1_size {
            for s in 0..self.s_size {
                kernel.extend_from_slice(self.row(x1, x2, s));
            }
        }
        StateChannel {
            x_size: self.x1_size,
            s_size: self.s_size,
            y_size: self.y_size,
            kernel,
            state_pmf: self.state_pmf.clone(),
        }
    }

    pub fn with_dead_outputs(&self, extra: usize) -> Self {
        let y_size = self.y_size + extra;
        let mut kernel = Vec::with_capacity(self.kernel.len() / self.y_size * y_size);
        for row in self.kernel.chunks(self.y_size) {
            kernel.extend_from_slice(row);
            kernel.extend(std::iter::repeat_n(0.0, extra));
        }
        Self {
            y_size,
            kernel,
            ..self.clone()
        }
    }
}

fn state_average<'a>(
    strategies: &[StrategyMap],
    state_pmf: &Pmf,
    cols: usize,
    row: impl Fn(usize, usize) -> &'a [f64],
) -> Vec<f64> {
    let mut out = vec![0.0; strategies.len() * cols];
    for (t, strat) in strategies.iter().enumerate() {
        let dst = &mut out[t * cols..(t + 1) * cols];
        for (s, &ps) in state_pmf.probs().iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            for (d, &v) in dst.iter_mut().zip(row(strat.apply(s), s)) {
                *d += ps * v;
            }
        }
    }
    out
}

/// `p(y|t) = sum_s p(s) p(y | t(s), s)` over all strategies.
pub fn induced_strategy_channel(ch: &StateChannel, cap: usize) -> Result<Dmc> {
    let strategies = enumerate_strategies(ch.x_size, ch.s_size, cap)?;
    let rows = state_average(&strategies, &ch.state_pmf, ch.y_size, |x, s| ch.row(x, s));
    Ok(Dmc::from_rows_unchecked(strategies.len(), ch.y_size, rows))
}

/// `p(y1, y2 | t)` over all strategies; columns are `(y1, y2)` with `y1` outer.
pub fn induced_bc_strategy_channel(ch: &BroadcastStateChannel, cap: usize) -> Result<Dmc> {
    let strategies = enumerate_strategies(ch.x_size, ch.s_size, cap)?;
    let cols = ch.y1_size * ch.y2_size;
    let rows = state_average(&strategies, &ch.state_pmf, cols, |x, s| ch.row(x, s));
    Ok(Dmc::from_rows_unchecked(strategies.len(), cols, rows))
}

fn check_pair_shape(q: &JointPmf, expected: [usize; 2]) -> Result<()> {
    let got = q.shape();
    if got != expected {
        return Err(ChannelError::StrategyShape {
            expected: expected.to_vec(),
            got,
        });
    }
    Ok(())
}

/// Joint law `q(t,t1) p(s) p(y1, y | t(s), t1(s), s)` on axes `T, T1, S, Y1, Y`.
pub fn induced_relay_joint(ch: &RelayStateChannel, q: &JointPmf, cap: usize) -> Result<JointPmf> {
    let ts = enumerate_strategies(ch.x_size, ch.s_size, cap)?;
    let t1s = enumerate_strategies(ch.x1_size, ch.s_size, cap)?;
    check_pair_shape(q, [ts.len(), t1s.len()])?;
    let cols = ch.y1_size * ch.y_size;
    let mut kernel = Vec::with_capacity(ts.len() * t1s.len() * ch.s_size * cols);
    for t in &ts {
        for t1 in &t1s {
            for s in 0..ch.s_size {
                kernel.extend_from_slice(ch.row(t.apply(s), t1.apply(s), s));
            }
        }
    }
    let joint = assemble_joint(&[
        Factor::new(
            &[],
            vec![Axis::new("T", ts.len()), Axis::new("T1", t1s.len())],
            q.probs().to_vec(),
        ),
        Factor::root("S", &ch.state_pmf),
        Factor::new(
            &["T", "T1", "S"],
            vec![Axis::new("Y1", ch.y1_size), Axis::new("Y", ch.y_size)],
            kernel,
        ),
    ])?;
    Ok(joint)
}

/// Joint law `p(t1,t2) p(s) p(y | t1(s), t2(s), s)` on axes `T1, T2, S, Y`.
pub fn induced_mac_joint(ch: &MacStateChannel, p12: &JointPmf, cap: usize) -> Result<JointPmf> {
    let t1s = enumerate_strategies(ch.x1_size, ch.s_size, cap)?;
    let t2s = enumerate_strategies(ch.x2_size, ch.s_size, cap)?;
    check_pair_shape(p12, [t1s.len(), t2s.len()])?;
    let mut kernel = Vec::with_capacity(t1s.len() * t2s.len() * ch.s_size * ch.y_size);
    for t1 in &t1s {
        for t2 in &t2s {
            for s in 0..ch.s_size {
                kernel.extend_from_slice(ch.row(t1.apply(s), t2.apply(s), s));
            }
        }
    }
    let joint = assemble_joint(&[
        Factor::new(
            &[],
            vec![Axis::new("T1", t1s.len()), Axis::new("T2", t2s.len())],
            p12.probs().to_vec(),
        ),
        Factor::root("S", &ch.state_pmf),
        Factor::new(&["T1", "T2", "S"], vec![Axis::new("Y", ch.y_size)], kernel),
    ])?;
    Ok(joint)
}

/// Cell where a degradedness factorization fails worst.
#[derive(Debug, Clone, PartialEq)]
pub struct BcWitness {
    pub x: usize,
    pub s: usize,
    pub y1: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BcDegradedness {
    /// Recovered `p(y2|y1)`; rows of `y1` values never reached are uniform.
    Degraded {
        weak: Dmc,
        max_residual: f64,
    },
    NotDegraded {
        witness: BcWitness,
    },
}

impl BcDegradedness {
    pub fn passed(&self) -> bool {
        matches!(self, Self::Degraded { .. })
    }
}

/// Checks `p(y1,y2|x,s) = p(y1|x,s) p(y2|y1)` wherever `p(y1|x,s) > tol`.
pub fn check_bc_degraded(ch: &BroadcastStateChannel, tol: f64) -> BcDegradedness {
    let (y1n, y2n) = (ch.y1_size, ch.y2_size);
    // For each y1, the (x, s) cell with the largest p(y1|x,s) supplies the reference row.
    let mut reference: Vec<Option<(f64, usize, usize)>> = vec![None; y1n];
    for x in 0..ch.x_size {
        for s in 0..ch.s_size {
            let row = ch.row(x, s);
            for (y1, r) in reference.iter_mut().enumerate() {
                let mass: f64 = row[y1 * y2n..(y1 + 1) * y2n].iter().sum();
                if mass > tol && r.is_none_or(|(m, _, _)| mass > m) {
                    *r = Some((mass, x, s));
                }
            }
        }
    }
    let mut weak = vec![1.0 / y2n as f64; y1n * y2n];
    for (y1, r) in reference.iter().enumerate() {
        if let Some((mass, x, s)) = *r {
            let cells = &ch.row(x, s)[y1 * y2n..(y1 + 1) * y2n];
            for (w, &c) in weak[y1 * y2n..(y1 + 1) * y2n].iter_mut().zip(cells) {
                *w = c / mass;
            }
        }
    }

    let mut worst = BcWitness {
        x: 0,
        s: 0,
        y1: 0,
        residual: 0.0,
    };
    for x in 0..ch.x_size {
        for s in 0..ch.s_size {
            let row = ch.row(x, s);
            for y1 in 0..y1n {
                let cells = &row[y1 * y2n..(y1 + 1) * y2n];
                let mass: f64 = cells.iter().sum();
                if mass <= tol {
                    continue;
                }
                let residual = cells
                    .iter()
                    .zip(&weak[y1 * y2n..(y1 + 1) * y2n])
                    .map(|(&c, &w)| (c / mass - w).abs())
                    .fold(0.0, f64::max);
                if residual > worst.residual {
                    worst = BcWitness { x, s, y1, residual };
                }
            }
        }
    }
    if worst.residual > tol {
        BcDegradedness::NotDegraded { witness: worst }
    } else {
        BcDegradedness::Degraded {
            weak: Dmc::from_rows_unchecked(y1n, y2n, weak),
            max_residual: worst.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayWitness {
    pub x: usize,
    pub x1: usize,
    pub s: usize,
    pub y1: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RelayDegradedness {
    /// Recovered `p(y | y1, x1, s)` with rows indexed `(x1, s, y1)`.
    Degraded {
        to_dest: Vec<f64>,
        max_residual: f64,
    },
    NotDegraded {
        witness: RelayWitness,
    },
}

impl RelayDegradedness {
    pub fn passed(&self) -> bool {
        matches!(self, Self::Degraded { .. })
    }
}

/// Checks that `p(y | y1, x, x1, s)` does not depend on `x` wherever
/// `p(y1 | x, x1, s) > tol`.
pub fn check_relay_degraded(ch: &RelayStateChannel, tol: f64) -> RelayDegradedness {
    let (y1n, yn) = (ch.y1_size, ch.y_size);
    let block = |x1: usize, s: usize, y1: usize| ((x1 * ch.s_size + s) * y1n + y1) * yn;
    let mut to_dest = vec![1.0 / yn as f64; ch.x1_size * ch.s_size * y1n * yn];
    let mut worst = RelayWitness {
        x: 0,
        x1: 0,
        s: 0,
        y1: 0,
        residual: 0.0,
    };
    for x1 in 0..ch.x1_size {
        for s in 0..ch.s_size {
            for y1 in 0..y1n {
                let mut best: Option<(f64, usize)> = None;
                for x in 0..ch.x_size {
                    let cells = &ch.row(x, x1, s)[y1 * yn..(y1 + 1) * yn];
                    let mass: f64 = cells.iter().sum();
                    if mass > tol && best.is_none_or(|(m, _)| mass > m) {
                        best = Some((mass, x));
                    }
                }
                let Some((mass, xr)) = best else { continue };
                let off = block(x1, s, y1);
                let reference = &ch.row(xr, x1, s)[y1 * yn..(y1 + 1) * yn];
                for (d, &c) in to_dest[off..off + yn].iter_mut().zip(reference) {
                    *d = c / mass;
                }
                for x in 0..ch.x_size {
                    let cells = &ch.row(x, x1, s)[y1 * yn..(y1 + 1) * yn];
                    let m: f64 = cells.iter().sum();
                    if m <= tol {
                        continue;
                    }
                    let residual = cells
                        .iter()
                        .zip(&to_dest[off..off + yn])
                        .map(|(&c, &r)| (c / m - r).abs())
                        .fold(0.0, f64::max);
                    if residual > worst.residual {
                        worst = RelayWitness {
                            x,
                            x1,
                            s,
                            y1,
                            residual,
                        };
                    }
                }
            }
        }
    }
    if worst.residual > tol {
        RelayDegradedness::NotDegraded { witness: worst }
    } else {
        RelayDegradedness::Degraded {
            to_dest,
            max_residual: worst.residual,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn xor_channel(q: f64) -> StateChannel {
        let mut k = Vec::new();
        for x in 0..2 {
            for s in 0..2 {
                let mut row = [0.0; 2];
                row[x ^ s] = 1.0;
                k.extend_from_slice(&row);
            }
        }
        StateChannel::new(2, 2, 2, k, Pmf::new(vec![1.0 - q, q]).unwrap()).unwrap()
    }

    fn bsc(p: f64) -> Dmc {
        Dmc::new(2, 2, vec![1.0 - p, p, p, 1.0 - p]).unwrap()
    }

    #[test]
    fn strategy_enumeration() {
        let s = enumerate_strategies(2, 2, DEFAULT_STRATEGY_CAP).unwrap();
        let tables: Vec<_> = s.iter().map(|m| m.table().to_vec()).collect();
        assert_eq!(tables, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(
            enumerate_strategies(3, 2, DEFAULT_STRATEGY_CAP)
                .unwrap()
                .len(),
            9
        );
        let plain = enumerate_strategies(2, 1, DEFAULT_STRATEGY_CAP).unwrap();
        assert_eq!(plain.len(), 2);
        assert_eq!(plain[1].table(), &[1]);
        assert_eq!(
            enumerate_strategies(4, 6, DEFAULT_STRATEGY_CAP)
                .unwrap()
                .len(),
            4096
        );
        assert!(matches!(
            enumerate_strategies(2, 13, DEFAULT_STRATEGY_CAP),
            Err(ChannelError::StrategyCapExceeded { .. })
        ));
        assert!(matches!(
            enumerate_strategies(usize::MAX, 3, DEFAULT_STRATEGY_CAP),
            Err(ChannelError::StrategyCapExceeded { .. })
        ));
    }

    #[test]
    fn xor_strategy_channel() {
        let w = induced_strategy_channel(&xor_channel(0.5), DEFAULT_STRATEGY_CAP).unwrap();
        assert_eq!(w.row(0), &[0.5, 0.5]);
        assert_eq!(w.row(1), &[1.0, 0.0]);

        let w = induced_strategy_channel(&xor_channel(0.3), DEFAULT_STRATEGY_CAP).unwrap();
        assert_eq!(w.row(0), &[0.7, 0.3]);
        assert_eq!(w.row(1), &[1.0, 0.0]);
        assert_eq!(w.row(2), &[0.0, 1.0]);
        assert!((w.row(3)[0] - 0.3).abs() < 1e-15 && (w.row(3)[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn no_state_reduction() {
        let base = Dmc::new(3, 2, vec![0.2, 0.8, 0.6, 0.4, 1.0, 0.0]).unwrap();
        let ch = StateChannel::state_independent(&base, Pmf::uniform(1)).unwrap();
        assert_eq!(
            induced_strategy_channel(&ch, DEFAULT_STRATEGY_CAP).unwrap(),
            base
        );
    }

    #[test]
    fn bc_strategy_channel() {
        let ch = BroadcastStateChannel::degraded(&xor_channel(0.5), &bsc(0.1)).unwrap();
        let w = induced_bc_strategy_channel(&ch, DEFAULT_STRATEGY_CAP).unwrap();
        // t(s) = s always yields y1 = 0
        assert!((w.row(1)[0] - 0.9).abs() < 1e-15);
        assert!((w.row(1)[1] - 0.1).abs() < 1e-15);
        assert_eq!(w.row(1)[2], 0.0);

        let ident = Dmc::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let copy = BroadcastStateChannel::degraded(&xor_channel(0.3), &ident).unwrap();
        let w = induced_bc_strategy_channel(&copy, DEFAULT_STRATEGY_CAP).unwrap();
        let single = induced_strategy_channel(&xor_channel(0.3), DEFAULT_STRATEGY_CAP).unwrap();
        for t in 0..4 {
            let r = w.row(t);
            assert_eq!(r[1], 0.0);
            assert_eq!(r[2], 0.0);
            assert!((r[0] - single.row(t)[0]).abs() < 1e-15);
            assert!((r[3] - single.row(t)[1]).abs() < 1e-15);
        }

        let stateless = BroadcastStateChannel::degraded(
            &StateChannel::state_independent(&bsc(0.2), Pmf::uniform(1)).unwrap(),
            &bsc(0.1),
        )
        .unwrap();
        let w = induced_bc_strategy_channel(&stateless, DEFAULT_STRATEGY_CAP).unwrap();
        assert_eq!(w.rows(), stateless.kernel());
    }

    fn two_hop(s_size: usize) -> RelayStateChannel {
        // y1 = x, y = x1
        let mut to_relay = Vec::new();
        for x in 0..2 {
            for _x1 in 0..2 {
                for _s in 0..s_size {
                    to_relay.extend(if x == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
                }
            }
        }
        let mut to_dest = Vec::new();
        for x1 in 0..2 {
            for _s in 0..s_size {
                for _y1 in 0..2 {
                    to_dest.extend(if x1 == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
                }
            }
        }
        RelayStateChannel::degraded(
            2,
            2,
            s_size,
            2,
            2,
            &to_relay,
            &to_dest,
            Pmf::uniform(s_size),
        )
        .unwrap()
    }

    #[test]
    fn relay_joint() {
        let ch = two_hop(1);
        let q = JointPmf::new(vec![Axis::new("A", 2), Axis::new("B", 2)], vec![0.25; 4]).unwrap();
        let j = induced_relay_joint(&ch, &q, DEFAULT_STRATEGY_CAP).unwrap();
        let names: Vec<_> = j.axes().iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["T", "T1", "S", "Y1", "Y"]);
        assert_eq!(j.marginal(&["Y"]).unwrap().probs(), &[0.5, 0.5]);
        let tt1 = j.marginal(&["T", "T1"]).unwrap();
        assert_eq!(tt1.probs(), q.probs());
        // |S| = 1 reduction: joint equals q(x,x1) p(y1,y|x,x1)
        assert_eq!(j.prob(&[1, 0, 0, 1, 0]), 0.25);
        assert_eq!(j.prob(&[1, 0, 0, 0, 0]), 0.0);

        let point = JointPmf::new(
            vec![Axis::new("A", 2), Axis::new("B", 2)],
            vec![0.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let j = induced_relay_joint(&ch, &point, DEFAULT_STRATEGY_CAP).unwrap();
        let tt1 = j.marginal(&["T", "T1"]).unwrap();
        assert_eq!(tt1.probs(), &[0.0, 0.0, 1.0, 0.0]);

        let bad = JointPmf::new(vec![Axis::new("A", 4)], vec![0.25; 4]).unwrap();
        assert!(matches!(
            induced_relay_joint(&ch, &bad, DEFAULT_STRATEGY_CAP),
            Err(ChannelError::StrategyShape { .. })
        ));
    }

    fn adder() -> MacStateChannel {
        let mut k = Vec::new();
        for x1 in 0..2 {
            for x2 in 0..2 {
                let mut row = [0.0; 3];
                row[x1 + x2] = 1.0;
                k.extend_from_slice(&row);
            }
        }
        MacStateChannel::new(2, 2, 1, 3, k, Pmf::uniform(1)).unwrap()
    }

    #[test]
    fn mac_joint() {
        let ch = adder();
        let p = JointPmf::new(vec![Axis::new("A", 2), Axis::new("B", 2)], vec![0.25; 4]).unwrap();
        let j = induced_mac_joint(&ch, &p, DEFAULT_STRATEGY_CAP).unwrap();
        assert_eq!(j.marginal(&["Y"]).unwrap().probs(), &[0.25, 0.5, 0.25]);
        let point = JointPmf::new(
            vec![Axis::new("A", 2), Axis::new("B", 2)],
            vec![0.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        let j = induced_mac_joint(&ch, &point, DEFAULT_STRATEGY_CAP).unwrap();
        assert_eq!(j.marginal(&["Y"]).unwrap().probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn bc_degradedness() {
        let ident = Dmc::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let copy = BroadcastStateChannel::degraded(&xor_channel(0.3), &ident).unwrap();
        match check_bc_degraded(&copy, DEFAULT_DEGRADED_TOL) {
            BcDegradedness::Degraded { weak, .. } => assert_eq!(weak, ident),
            other => panic!("{other:?}"),
        }
        let constant = Dmc::new(2, 3, vec![0.2, 0.3, 0.5, 0.2, 0.3, 0.5]).unwrap();
        let indep = BroadcastStateChannel::degraded(&xor_channel(0.3), &constant).unwrap();
        assert!(check_bc_degraded(&indep, DEFAULT_DEGRADED_TOL).passed());

        // Y1 = BSC(0.2)(X), Y2 = X. Given y1 = 0, y2 is 0 when x = 0 and 1 when x = 1,
        // so the conditional rows differ by 1.0.
        let mut k = Vec::new();
        for x in 0..2usize {
            for y1 in 0..2usize {
                let p1 = if y1 == x { 0.8 } else { 0.2 };
                for y2 in 0..2usize {
                    k.push(if y2 == x { p1 } else { 0.0 });
                }
            }
        }
        let bad = BroadcastStateChannel::new(2, 1, 2, 2, k, Pmf::uniform(1)).unwrap();
        match check_bc_degraded(&bad, DEFAULT_DEGRADED_TOL) {
            BcDegradedness::NotDegraded { witness } => {
                assert!((witness.residual - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relay_degradedness() {
        assert!(check_relay_degraded(&two_hop(2), DEFAULT_DEGRADED_TOL).passed());

        // y = y1 (relay output forwarded), y1 = BSC(0.1)(x)
        let mut k = Vec::new();
        for x in 0..2usize {
            for _x1 in 0..2 {
                for y1 in 0..2usize {
                    let p1 = if y1 == x { 0.9 } else { 0.1 };
                    for y in 0..2usize {
                        k.push(if y == y1 { p1 } else { 0.0 });
                    }
                }
            }
        }
        let fwd = RelayStateChannel::new(2, 2, 1, 2, 2, k, Pmf::uniform(1)).unwrap();
        assert!(check_relay_degraded(&fwd, DEFAULT_DEGRADED_TOL).passed());

        // y = x directly, y1 pure noise: given y1, y still depends on x.
        let mut k = Vec::new();
        for x in 0..2usize {
            for _x1 in 0..2 {
                for _y1 in 0..2 {
                    for y in 0..2usize {
                        k.push(if y == x { 0.5 } else { 0.0 });
                    }
                }
            }
        }
        let direct = RelayStateChannel::new(2, 2, 1, 2, 2, k, Pmf::uniform(1)).unwrap();
        match check_relay_degraded(&direct, DEFAULT_DEGRADED_TOL) {
            RelayDegradedness::NotDegraded { witness } => {
                assert!((witness.residual - 1.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_rows() {
        let err = StateChannel::new(1, 1, 2, vec![0.5, 0.48], Pmf::uniform(1)).unwrap_err();
        assert!(matches!(err, ChannelError::NonStochasticRow { row: 0, .. }));
        let err = StateChannel::new(1, 1, 2, vec![0.5], Pmf::uniform(1)).unwrap_err();
        assert!(matches!(err, ChannelError::KernelShape { .. }));
        let err = StateChannel::new(1, 2, 2, vec![0.5; 4], Pmf::uniform(1)).unwrap_err();
        assert!(matches!(err, ChannelError::StateShape { .. }));
    }
}
