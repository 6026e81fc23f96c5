//! Exact finite-alphabet probability: labeled joint pmfs and the
//! entropy / mutual-information functionals, all in bits.
//!
//! A [`JointPmf`] is a dense row-major tensor (last axis fastest) over a list
//! of named axes. Conditional quantities are evaluated through marginals:
//! `H(A|B) = H(A,B) - H(B)` and `I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)`.

use thiserror::Error;

/// Mass tolerance for pmfs and stochastic kernel rows.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Rounding slack below zero that mutual information is clamped from.
pub const NEGATIVE_MI_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("axis `{0}` appears in more than one argument set")]
    OverlappingAxes(String),
    #[error("duplicate axis name `{0}`")]
    DuplicateAxis(String),
    #[error("axis `{0}` has an empty alphabet")]
    EmptyAxis(String),
    #[error("shape mismatch: expected {expected} cells, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("negative or non-finite probability {value} at cell {index}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("total mass {sum} differs from 1")]
    NotNormalized { sum: f64 },
    #[error("factor {factor}: row {row} sums to {sum}")]
    NonStochasticRow { factor: usize, row: usize, sum: f64 },
    #[error("axis `{0}` is produced by more than one factor")]
    AxisProducedTwice(String),
    #[error("factors form a cycle or depend on missing axes: {0:?}")]
    UnresolvedParents(Vec<String>),
    #[error("mutual information evaluated to {0} bits (internal inconsistency)")]
    NegativeInformation(f64),
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// Support-weighted `-p log2 p`, with `0 log 0 = 0`.
#[inline]
pub fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a nonnegative vector (assumed normalized).
pub fn entropy_of(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| plogp(p)).sum()
}

/// Binary entropy function h(p) in bits.
pub fn binary_entropy(p: f64) -> f64 {
    plogp(p) + plogp(1.0 - p)
}

/// A pmf over `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_mass(&probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform pmf over an empty alphabet");
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

fn validate_mass(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(ProbError::ShapeMismatch {
            expected: 1,
            got: 0,
        });
    }
    for (index, &value) in probs.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(ProbError::InvalidProbability { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(ProbError::NotNormalized { sum });
    }
    Ok(())
}

/// A named finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// Dense joint pmf over labeled axes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    axes: Vec<Axis>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(axes: Vec<Axis>, probs: Vec<f64>) -> Result<Self> {
        check_axes(&axes)?;
        let expected: usize = axes.iter().map(|a| a.size).product();
        if probs.len() != expected {
            return Err(ProbError::ShapeMismatch {
                expected,
                got: probs.len(),
            });
        }
        validate_mass(&probs)?;
        Ok(Self { axes, probs })
    }

    /// One-axis joint holding `pmf`.
    pub fn from_pmf(name: impl Into<String>, pmf: &Pmf) -> Self {
        Self {
            axes: vec![Axis::new(name, pmf.len())],
            probs: pmf.probs().to_vec(),
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| ProbError::UnknownAxis(name.to_string()))
    }

    fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape())
    }

    /// Probability of a full index tuple.
    pub fn prob(&self, index: &[usize]) -> f64 {
        let strides = self.strides();
        let flat: usize = index.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.probs[flat]
    }

    /// Marginal onto the named axes, in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<JointPmf> {
        let idx = self.resolve(names)?;
        let mut seen = Vec::with_capacity(idx.len());
        for (&i, name) in idx.iter().zip(names) {
            if seen.contains(&i) {
                return Err(ProbError::DuplicateAxis(name.to_string()));
            }
            seen.push(i);
        }
        let axes = idx.iter().map(|&i| self.axes[i].clone()).collect();
        Ok(JointPmf {
            axes,
            probs: self.marginal_probs(&idx),
        })
    }

    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.axis_index(n)).collect()
    }

    /// Marginal cell masses over axis positions `idx` (row-major in `idx` order).
    fn marginal_probs(&self, idx: &[usize]) -> Vec<f64> {
        let shape = self.shape();
        let out_shape: Vec<usize> = idx.iter().map(|&i| shape[i]).collect();
        let out_strides = strides_of(&out_shape);
        // Stride each source axis contributes to the output flat index.
        let mut contrib = vec![0usize; shape.len()];
        for (k, &i) in idx.iter().enumerate() {
            contrib[i] = out_strides[k];
        }
        let mut out = vec![0.0; out_shape.iter().product::<usize>().max(1)];
        let mut digits = vec![0usize; shape.len()];
        let mut target = 0usize;
        for &p in &self.probs {
            out[target] += p;
            // odometer increment, last axis fastest
            for ax in (0..shape.len()).rev() {
                digits[ax] += 1;
                target += contrib[ax];
                if digits[ax] < shape[ax] {
                    break;
                }
                target -= contrib[ax] * digits[ax];
                digits[ax] = 0;
            }
        }
        out
    }

    fn joint_entropy_of(&self, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        entropy_of(&self.marginal_probs(idx))
    }

    fn disjoint(&self, sets: &[&[&str]]) -> Result<Vec<Vec<usize>>> {
        let mut all: Vec<usize> = Vec::new();
        let mut out = Vec::with_capacity(sets.len());
        for set in sets {
            let mut resolved = Vec::with_capacity(set.len());
            for name in *set {
                let i = self.axis_index(name)?;
                if all.contains(&i) {
                    return Err(ProbError::OverlappingAxes(name.to_string()));
                }
                all.push(i);
                resolved.push(i);
            }
            resolved.sort_unstable();
            out.push(resolved);
        }
        Ok(out)
    }

    /// `H(target | given)` in bits.
    pub fn entropy(&self, target: &[&str], given: &[&str]) -> Result<f64> {
        let sets = self.disjoint(&[target, given])?;
        let union = merged(&sets[0], &sets[1]);
        let h = self.joint_entropy_of(&union) - self.joint_entropy_of(&sets[1]);
        Ok(h.max(0.0))
    }

    /// `I(a; b | given)` in bits.
    pub fn mutual_information(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        let sets = self.disjoint(&[a, b, given])?;
        let ag = merged(&sets[0], &sets[2]);
        let bg = merged(&sets[1], &sets[2]);
        let abg = merged(&ag, &sets[1]);
        let mi = self.joint_entropy_of(&ag) + self.joint_entropy_of(&bg)
            - self.joint_entropy_of(&abg)
            - self.joint_entropy_of(&sets[2]);
        clamp_information(mi)
    }
}

/// Clamp rounding noise in `(-1e-10, 0)` to zero; larger negatives are errors.
pub fn clamp_information(mi: f64) -> Result<f64> {
    if mi >= 0.0 {
        Ok(mi)
    } else if mi > -NEGATIVE_MI_SLACK {
        Ok(0.0)
    } else {
        Err(ProbError::NegativeInformation(mi))
    }
}

fn merged(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v
}

fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

fn check_axes(axes: &[Axis]) -> Result<()> {
    for (i, a) in axes.iter().enumerate() {
        if a.size == 0 {
            return Err(ProbError::EmptyAxis(a.name.clone()));
        }
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(ProbError::DuplicateAxis(a.name.clone()));
        }
    }
    Ok(())
}

/// A conditional kernel `p(children | parents)`, rows indexed by the parent
/// tuple (row-major in `parents` order), columns by the child tuple.
#[derive(Debug, Clone)]
pub struct Factor {
    pub parents: Vec<String>,
    pub children: Vec<Axis>,
    pub kernel: Vec<f64>,
}

impl Factor {
    pub fn new(parents: &[&str], children: Vec<Axis>, kernel: Vec<f64>) -> Self {
        Self {
            parents: parents.iter().map(|s| s.to_string()).collect(),
            children,
            kernel,
        }
    }

    /// A root factor holding a pmf on a single new axis.
    pub fn root(name: &str, pmf: &Pmf) -> Self {
        Self::new(&[], vec![Axis::new(name, pmf.len())], pmf.probs().to_vec())
    }
}

/// Product law of a list of conditional factors.
///
/// Factors may be listed in any order; each is applied once all of its
/// parents exist. Output axes appear in the order they are produced.
pub fn assemble_joint(factors: &[Factor]) -> Result<JointPmf> {
    let mut axes: Vec<Axis> = Vec::new();
    let mut probs = vec![1.0];
    let mut pending: Vec<usize> = (0..factors.len()).collect();

    for f in factors {
        check_axes(&f.children)?;
    }

    while !pending.is_empty() {
        let ready = pending.iter().position(|&fi| {
            factors[fi]
                .parents
                .iter()
                .all(|p| axes.iter().any(|a| &a.name == p))
        });
        let Some(pos) = ready else {
            let missing = pending
                .iter()
                .flat_map(|&fi| factors[fi].parents.iter())
                .filter(|p| !axes.iter().any(|a| &a.name == *p))
                .cloned()
                .collect();
            return Err(ProbError::UnresolvedParents(missing));
        };
        let fi = pending.remove(pos);
        let f = &factors[fi];
        for c in &f.children {
            if axes.iter().any(|a| a.name == c.name) {
                return Err(ProbError::AxisProducedTwice(c.name.clone()));
            }
        }

        let parent_pos: Vec<usize> = f
            .parents
            .iter()
            .map(|p| axes.iter().position(|a| &a.name == p).unwrap())
            .collect();
        let shape: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let rows: usize = parent_pos.iter().map(|&i| shape[i]).product();
        let cols: usize = f.children.iter().map(|a| a.size).product();
        if f.kernel.len() != rows * cols {
            return Err(ProbError::ShapeMismatch {
                expected: rows * cols,
                got: f.kernel.len(),
            });
        }
        for (r, row) in f.kernel.chunks(cols).enumerate() {
            if let Some((index, &value)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
            {
                return Err(ProbError::InvalidProbability {
                    index: r * cols + index,
                    value,
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > MASS_TOLERANCE {
                return Err(ProbError::NonStochasticRow {
                    factor: fi,
                    row: r,
                    sum,
                });
            }
        }

        // row stride contributed by each existing axis
        let parent_shape: Vec<usize> = parent_pos.iter().map(|&i| shape[i]).collect();
        let parent_strides = strides_of(&parent_shape);
        let mut contrib = vec![0usize; shape.len()];
        for (k, &i) in parent_pos.iter().enumerate() {
            contrib[i] = parent_strides[k];
        }

        let mut next = Vec::with_capacity(probs.len() * cols);
        let mut digits = vec![0usize; shape.len()];
        let mut row = 0usize;
        for &p in &probs {
            let krow = &f.kernel[row * cols..(row + 1) * cols];
            next.extend(krow.iter().map(|&k| p * k));
            for ax in (0..shape.len()).rev() {
                digits[ax] += 1;
                row += contrib[ax];
                if digits[ax] < shape[ax] {
                    break;
                }
                row -= contrib[ax] * digits[ax];
                digits[ax] = 0;
            }
        }
        probs = next;
        axes.extend(f.children.iter().cloned());
    }

    check_axes(&axes)?;
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(ProbError::NotNormalized { sum });
    }
    Ok(JointPmf { axes, probs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> Pmf {
        Pmf::new(vec![1.0 - p, p]).unwrap()
    }

    #[test]
    fn entropy_of_simple_pmfs() {
        let uni = JointPmf::from_pmf("A", &Pmf::uniform(2));
        assert_eq!(uni.entropy(&["A"], &[]).unwrap(), 1.0);
        let point = JointPmf::from_pmf("A", &Pmf::point_mass(3, 1));
        assert_eq!(point.entropy(&["A"], &[]).unwrap(), 0.0);
        let skew = JointPmf::from_pmf("A", &Pmf::new(vec![0.9, 0.1]).unwrap());
        let h = skew.entropy(&["A"], &[]).unwrap();
        assert!((h - 0.468996).abs() < 1e-6, "{h}");
    }

    #[test]
    fn axis_errors() {
        let j = JointPmf::new(vec![Axis::new("A", 2), Axis::new("B", 2)], vec![0.25; 4]).unwrap();
        assert_eq!(
            j.entropy(&["C"], &[]),
            Err(ProbError::UnknownAxis("C".into()))
        );
        assert_eq!(
            j.entropy(&["A"], &["A"]),
            Err(ProbError::OverlappingAxes("A".into()))
        );
        assert!(matches!(
            j.mutual_information(&["A"], &["B"], &["B"]),
            Err(ProbError::OverlappingAxes(_))
        ));
    }

    #[test]
    fn mutual_information_examples() {
        let prod = JointPmf::new(
            vec![Axis::new("A", 2), Axis::new("B", 3)],
            vec![0.1, 0.2, 0.1, 0.15, 0.3, 0.15],
        )
        .unwrap();
        assert!(prod.mutual_information(&["A"], &["B"], &[]).unwrap() < 1e-12);

        let mut cells = vec![0.0; 16];
        for i in 0..4 {
            cells[i * 4 + i] = 0.25;
        }
        let ident = JointPmf::new(vec![Axis::new("A", 4), Axis::new("B", 4)], cells).unwrap();
        let mi = ident.mutual_information(&["A"], &["B"], &[]).unwrap();
        assert!((mi - 2.0).abs() < 1e-12);

        let bsc = assemble_joint(&[
            Factor::root("X", &Pmf::uniform(2)),
            Factor::new(&["X"], vec![Axis::new("Y", 2)], vec![0.9, 0.1, 0.1, 0.9]),
        ])
        .unwrap();
        let mi = bsc.mutual_information(&["X"], &["Y"], &[]).unwrap();
        assert!((mi - 0.531004).abs() < 1e-6, "{mi}");
    }

    #[test]
    fn assemble_examples() {
        let single = assemble_joint(&[Factor::root("A", &bern(0.3))]).unwrap();
        assert_eq!(single.probs(), &[0.7, 0.3]);

        let copy = assemble_joint(&[
            Factor::root("S", &bern(0.5)),
            Factor::new(&["S"], vec![Axis::new("Y", 2)], vec![1.0, 0.0, 0.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(copy.probs(), &[0.5, 0.0, 0.0, 0.5]);

        // 4 strategies t: S -> Y in lexicographic order, p(s) = Bern(0.3).
        // Hand enumeration of P(Y=1): t=[0,0] -> 0, [0,1] -> 0.3, [1,0] -> 0.7,
        // [1,1] -> 1; uniform average = 0.5.
        let tables = [[0usize, 0], [0, 1], [1, 0], [1, 1]];
        let mut push = Vec::new();
        for t in &tables {
            for s in 0..2 {
                let mut row = [0.0; 2];
                row[t[s]] = 1.0;
                push.extend_from_slice(&row);
            }
        }
        let j = assemble_joint(&[
            Factor::root("U", &Pmf::uniform(4)),
            Factor::root("S", &bern(0.3)),
            Factor::new(&["U", "S"], vec![Axis::new("Y", 2)], push),
        ])
        .unwrap();
        let y = j.marginal(&["Y"]).unwrap();
        assert!((y.probs()[1] - 0.5).abs() < 1e-15);
        let uy = j.marginal(&["U", "Y"]).unwrap();
        assert!((uy.prob(&[1, 1]) - 0.25 * 0.3).abs() < 1e-15);
        assert!((uy.prob(&[2, 1]) - 0.25 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn assemble_errors() {
        let cyc = assemble_joint(&[
            Factor::new(&["B"], vec![Axis::new("A", 2)], vec![0.5; 4]),
            Factor::new(&["A"], vec![Axis::new("B", 2)], vec![0.5; 4]),
        ]);
        assert!(matches!(cyc, Err(ProbError::UnresolvedParents(_))));

        let twice = assemble_joint(&[Factor::root("A", &bern(0.5)), Factor::root("A", &bern(0.5))]);
        assert_eq!(twice, Err(ProbError::AxisProducedTwice("A".into())));

        let shape = assemble_joint(&[
            Factor::root("A", &bern(0.5)),
            Factor::new(&["A"], vec![Axis::new("B", 2)], vec![0.5; 3]),
        ]);
        assert!(matches!(shape, Err(ProbError::ShapeMismatch { .. })));

        let row = assemble_joint(&[
            Factor::root("A", &bern(0.5)),
            Factor::new(&["A"], vec![Axis::new("B", 2)], vec![0.5, 0.5, 0.5, 0.49]),
        ]);
        assert!(matches!(
            row,
            Err(ProbError::NonStochasticRow {
                factor: 1,
                row: 1,
                ..
            })
        ));
    }

    #[test]
    fn pmf_validation() {
        assert!(matches!(
            Pmf::new(vec![0.5, 0.4]),
            Err(ProbError::NotNormalized { .. })
        ));
        assert!(matches!(
            Pmf::new(vec![1.5, -0.5]),
            Err(ProbError::InvalidProbability { index: 1, .. })
        ));
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn negative_information_clamp() {
        assert_eq!(clamp_information(-1e-12).unwrap(), 0.0);
        assert!(clamp_information(-1e-6).is_err());
    }

    #[test]
    fn marginal_reorders_axes() {
        let j = JointPmf::new(
            vec![Axis::new("A", 2), Axis::new("B", 3)],
            vec![0.1, 0.2, 0.05, 0.15, 0.3, 0.2],
        )
        .unwrap();
        let ba = j.marginal(&["B", "A"]).unwrap();
        assert_eq!(ba.shape(), vec![3, 2]);
        assert!((ba.prob(&[2, 1]) - 0.2).abs() < 1e-15);
        assert!((ba.prob(&[1, 0]) - 0.2).abs() < 1e-15);
    }
}
