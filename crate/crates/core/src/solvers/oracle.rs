use super::{Result, SolverError};

/// Default cap on lattice evaluations.
pub const DEFAULT_ORACLE_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub argmax: Vec<Vec<f64>>,
    pub evaluations: u128,
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Number of points of the product lattice `prod_i {p in simplex(dims[i]) : res * p integral}`.
pub fn lattice_size(dims: &[usize], resolution: usize) -> Option<u128> {
    dims.iter().try_fold(1u128, |acc, &d| {
        let d = d as u128;
        acc.checked_mul(binomial(resolution as u128 + d - 1, d - 1)?)
    })
}

/// Next composition of `total` into `c.len()` parts in lexicographic order.
pub(crate) fn next_composition(c: &mut [usize]) -> bool {
    let d = c.len();
    let mut tail = c[d - 1];
    for i in (0..d - 1).rev() {
        if tail > 0 {
            c[i] += 1;
            for x in &mut c[i + 1..] {
                *x = 0;
            }
            c[d - 1] = tail - 1;
            return true;
        }
        tail += c[i];
    }
    false
}

/// Every pmf on `d` letters with denominator `resolution`, in lexicographic order.
pub(crate) fn lattice_points(d: usize, resolution: usize) -> Vec<Vec<f64>> {
    let mut c = vec![0; d];
    c[d - 1] = resolution;
    let mut out = Vec::new();
    loop {
        out.push(c.iter().map(|&k| k as f64 / resolution as f64).collect());
        if !next_composition(&mut c) {
            return out;
        }
    }
}

/// Exhaustive maximization over the product of probability lattices with
/// denominator `resolution`.
///
/// Points are visited in lexicographic order of the concatenated
/// distribution vectors and only strict improvements replace the incumbent,
/// so ties resolve to the lexicographically smallest maximizer.
pub fn grid_oracle_maximize<F>(
    mut objective: F,
    dims: &[usize],
    resolution: usize,
    budget: u128,
) -> Result<OracleResult>
where
    F: FnMut(&[Vec<f64>]) -> f64,
{
    if dims.is_empty() || dims.contains(&0) || resolution == 0 {
        return Err(SolverError::InvalidConfig(
            "oracle needs nonempty simplices and resolution > 0".into(),
        ));
    }
    let needed = lattice_size(dims, resolution).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(SolverError::OracleBudget { needed, budget });
    }

    let mut counts: Vec<Vec<usize>> = dims
        .iter()
        .map(|&d| {
            let mut c = vec![0; d];
            c[d - 1] = resolution;
            c
        })
        .collect();
    let scale = 1.0 / resolution as f64;
    let mut point: Vec<Vec<f64>> = dims.iter().map(|&d| vec![0.0; d]).collect();
    let mut best = OracleResult {
        value: f64::NEG_INFINITY,
        argmax: Vec::new(),
        evaluations: 0,
    };

    loop {
        for (p, c) in point.iter_mut().zip(&counts) {
            for (x, &k) in p.iter_mut().zip(c) {
                *x = k as f64 * scale;
            }
        }
        let v = objective(&point);
        best.evaluations += 1;
        if v > best.value {
            best.value = v;
            best.argmax = point.clone();
        }
        // odometer over simplices, last simplex fastest
        let mut advanced = false;
        for i in (0..counts.len()).rev() {
            if next_composition(&mut counts[i]) {
                advanced = true;
                break;
            }
            let d = counts[i].len();
            counts[i].iter_mut().for_each(|x| *x = 0);
            counts[i][d - 1] = resolution;
        }
        if !advanced {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_in_lex_order() {
        let mut c = vec![0, 0, 2];
        let mut seen = vec![c.clone()];
        while next_composition(&mut c) {
            seen.push(c.clone());
        }
        assert_eq!(
            seen,
            vec![
                vec![0, 0, 2],
                vec![0, 1, 1],
                vec![0, 2, 0],
                vec![1, 0, 1],
                vec![1, 1, 0],
                vec![2, 0, 0]
            ]
        );
        assert_eq!(lattice_size(&[3], 2), Some(6));
        assert_eq!(lattice_size(&[3, 2], 2), Some(18));
    }

    #[test]
    fn linear_objective_hits_a_vertex() {
        let w = [0.3, 1.7, -0.2];
        let r = grid_oracle_maximize(
            |p| p[0].iter().zip(&w).map(|(a, b)| a * b).sum(),
            &[3],
            7,
            DEFAULT_ORACLE_BUDGET,
        )
        .unwrap();
        assert_eq!(r.argmax[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(r.evaluations, 36);
    }

    #[test]
    fn ties_resolve_to_smallest_vector() {
        let r = grid_oracle_maximize(|_| 1.0, &[2, 2], 3, DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(r.argmax, vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn budget_is_enforced() {
        let err = grid_oracle_maximize(|_| 0.0, &[16], 32, DEFAULT_ORACLE_BUDGET).unwrap_err();
        assert!(matches!(err, SolverError::OracleBudget { .. }));
    }
}
