use crate::probcore::JointPmf;

use super::{Result, SimError};

/// Strong typicality test for sequences of length `n` against a fixed joint
/// pmf: every cell count `c` must satisfy `|c/n - p| <= eps p`, so cells with
/// `p = 0` must stay empty.
#[derive(Debug, Clone)]
pub(crate) struct TypicalSet {
    n: usize,
    lo: Vec<u32>,
    hi: Vec<u32>,
}

impl TypicalSet {
    pub(crate) fn new(probs: &[f64], n: usize, epsilon: f64) -> Self {
        let mut lo = Vec::with_capacity(probs.len());
        let mut hi = Vec::with_capacity(probs.len());
        let nf = n as f64;
        for &p in probs {
            let ok = |c: usize| (c as f64 / nf - p).abs() <= epsilon * p;
            let first = (0..=n).find(|&c| ok(c));
            match first {
                Some(a) => {
                    let b = (a..=n).take_while(|&c| ok(c)).last().unwrap_or(a);
                    lo.push(a as u32);
                    hi.push(b as u32);
                }
                None => {
                    // no admissible count: any occurrence or absence fails
                    lo.push(1);
                    hi.push(0);
                }
            }
        }
        Self { n, lo, hi }
    }

    pub(crate) fn cells(&self) -> usize {
        self.lo.len()
    }

    /// Tests the sequence whose cell at position `i` is `cell(i)`; `counts`
    /// is scratch space of length [`Self::cells`].
    #[inline]
    pub(crate) fn check(&self, counts: &mut [u32], mut cell: impl FnMut(usize) -> usize) -> bool {
        counts.fill(0);
        for i in 0..self.n {
            let c = cell(i);
            counts[c] += 1;
            if counts[c] > self.hi[c] {
                return false;
            }
        }
        counts.iter().zip(&self.lo).all(|(c, l)| c >= l)
    }
}

/// Whether `seqs` (one sequence per axis of `joint`, in axis order) are
/// jointly strongly typical with slack `epsilon`.
pub fn joint_typicality(seqs: &[&[usize]], joint: &JointPmf, epsilon: f64) -> Result<bool> {
    let axes = joint.axes();
    if seqs.len() != axes.len() {
        return Err(SimError::AxisMismatch {
            expected: axes.len(),
            got: seqs.len(),
        });
    }
    let n = seqs.first().map_or(0, |s| s.len());
    for (index, s) in seqs.iter().enumerate() {
        if s.len() != n {
            return Err(SimError::LengthMismatch {
                index,
                expected: n,
                got: s.len(),
            });
        }
        if let Some(&symbol) = s.iter().find(|&&v| v >= axes[index].size) {
            return Err(SimError::SymbolOutOfRange {
                axis: axes[index].name.clone(),
                symbol,
                size: axes[index].size,
            });
        }
    }
    if n == 0 {
        return Ok(true);
    }
    let set = TypicalSet::new(joint.probs(), n, epsilon);
    let mut counts = vec![0; set.cells()];
    Ok(set.check(&mut counts, |i| {
        seqs.iter()
            .zip(axes)
            .fold(0, |acc, (s, a)| acc * a.size + s[i])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::Axis;

    fn pair(probs: Vec<f64>) -> JointPmf {
        JointPmf::new(vec![Axis::new("A", 2), Axis::new("B", 2)], probs).unwrap()
    }

    #[test]
    fn deterministic_copy() {
        let j = pair(vec![1.0, 0.0, 0.0, 0.0]);
        let z = [0usize; 5];
        for eps in [0.0, 0.1, 0.9] {
            assert!(joint_typicality(&[&z, &z], &j, eps).unwrap());
        }
        let one = [0, 0, 1, 0, 0];
        assert!(!joint_typicality(&[&one, &one], &j, 0.9).unwrap());
    }

    #[test]
    fn exact_counts_and_offset() {
        let j = pair(vec![0.5, 0.0, 0.0, 0.5]);
        let a = [0, 0, 0, 0, 1, 1, 1, 1];
        assert!(joint_typicality(&[&a, &a], &j, 0.1).unwrap());
        let b = [0, 0, 0, 0, 0, 0, 1, 1];
        assert!(!joint_typicality(&[&b, &b], &j, 0.1).unwrap());
        // within slack: 5/8 vs 0.5 is a relative deviation of 0.25
        let c = [0, 0, 0, 0, 0, 1, 1, 1];
        assert!(joint_typicality(&[&c, &c], &j, 0.25).unwrap());
        assert!(!joint_typicality(&[&c, &c], &j, 0.2).unwrap());
    }

    #[test]
    fn shape_errors() {
        let j = pair(vec![0.25; 4]);
        let a = [0, 1];
        let b = [0, 1, 1];
        assert!(matches!(
            joint_typicality(&[&a, &b], &j, 0.1),
            Err(SimError::LengthMismatch { .. })
        ));
        assert!(matches!(
            joint_typicality(&[&a], &j, 0.1),
            Err(SimError::AxisMismatch { .. })
        ));
        let c = [0, 2];
        assert!(matches!(
            joint_typicality(&[&a, &c], &j, 0.1),
            Err(SimError::SymbolOutOfRange { .. })
        ));
    }
}
