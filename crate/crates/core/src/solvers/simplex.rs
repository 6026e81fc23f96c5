//! Simplex geometry used by the ascent methods.

/// Floor applied after multiplicative updates so no coordinate underflows to
/// an absorbing zero.
pub(crate) const MASS_FLOOR: f64 = 1e-300;

/// Euclidean projection onto `{x >= 0, sum x = 1}` (sort-based).
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Exponentiated-gradient step `x_i <- x_i exp(eta g_i) / Z` in place.
pub(crate) fn exponentiated_step(x: &mut [f64], grad: &[f64], eta: f64) {
    let gmax = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (xi, &gi) in x.iter_mut().zip(grad) {
        *xi *= (eta * (gi - gmax)).exp();
    }
    normalize_floored(x);
}

pub(crate) fn normalize_floored(x: &mut [f64]) {
    let z: f64 = x.iter().sum();
    for xi in x.iter_mut() {
        *xi = (*xi / z).max(MASS_FLOOR);
    }
    let z: f64 = x.iter().sum();
    for xi in x.iter_mut() {
        *xi /= z;
    }
}

/// `D(w || m)` in bits, summing over the support of `w`.
#[inline]
pub(crate) fn kl_bits(w: &[f64], m: &[f64]) -> f64 {
    w.iter()
        .zip(m)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).log2())
        .sum()
}
