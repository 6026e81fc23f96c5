use crate::seeding::{unit_at, Cdf};

/// Random codebook addressed by counter.
///
/// Symbol `i` of codeword `w` is drawn by inverse CDF from the uniform
/// `unit_at(key, w * n + i)`. A superposition codebook draws it from the
/// conditional pmf selected by the parent codeword's symbol. Any symbol can be
/// regenerated in isolation, and the codebook is fully determined by
/// `(key, n, pmfs)`.
#[derive(Debug, Clone)]
pub struct Codebook {
    key: u64,
    n: usize,
    cdfs: Vec<Cdf>,
}

impl Codebook {
    /// i.i.d. codewords from `pmf`.
    pub fn iid(key: u64, n: usize, pmf: &[f64]) -> Self {
        Self {
            key,
            n,
            cdfs: vec![Cdf::new(pmf)],
        }
    }

    /// Codewords drawn symbol-wise from `conditionals[parent symbol]`.
    pub fn superposed(key: u64, n: usize, conditionals: &[Vec<f64>]) -> Self {
        Self {
            key,
            n,
            cdfs: conditionals.iter().map(|p| Cdf::new(p)).collect(),
        }
    }

    pub fn blocklength(&self) -> usize {
        self.n
    }

    /// Symbol `i` of codeword `index` given the parent symbol (0 for i.i.d.).
    #[inline]
    pub fn symbol(&self, index: u64, i: usize, parent: usize) -> usize {
        let u = unit_at(self.key, index * self.n as u64 + i as u64);
        self.cdfs[parent].sample_unit(u)
    }

    /// Full codeword; `parent` is the parent codeword for superposed books.
    pub fn codeword(&self, index: u64, parent: Option<&[usize]>) -> Vec<usize> {
        (0..self.n)
            .map(|i| self.symbol(index, i, parent.map_or(0, |p| p[i])))
            .collect()
    }

    /// First `count` codewords of an i.i.d. book.
    pub fn materialize(&self, count: usize) -> Vec<Vec<usize>> {
        (0..count as u64).map(|w| self.codeword(w, None)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regenerable_and_prefix_stable() {
        let a = Codebook::iid(9, 6, &[0.2, 0.5, 0.3]);
        let b = Codebook::iid(9, 6, &[0.2, 0.5, 0.3]);
        let small = a.materialize(4);
        let large = b.materialize(10);
        assert_eq!(small[..], large[..4]);
        assert_eq!(a.codeword(7, None), large[7]);
        assert_ne!(Codebook::iid(10, 6, &[0.2, 0.5, 0.3]).materialize(4), small);
    }

    #[test]
    fn symbol_frequencies_follow_pmf() {
        let book = Codebook::iid(1, 100, &[0.1, 0.0, 0.9]);
        let words = book.materialize(200);
        let mut counts = [0usize; 3];
        for w in &words {
            for &s in w {
                counts[s] += 1;
            }
        }
        assert_eq!(counts[1], 0);
        let f = counts[0] as f64 / 20_000.0;
        assert!((f - 0.1).abs() < 0.01, "{f}");
    }

    #[test]
    fn superposition_follows_parent() {
        let book = Codebook::superposed(4, 8, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let parent = [0, 1, 1, 0, 1, 0, 0, 1];
        assert_eq!(book.codeword(3, Some(&parent)), parent.to_vec());
    }
}
