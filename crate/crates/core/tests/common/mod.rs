#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statecap::channels::{
    BroadcastStateChannel, Dmc, MacStateChannel, RelayStateChannel, StateChannel,
};
use statecap::probcore::Pmf;
use statecap::seeding::{task_rng, uniform_simplex};

pub fn rng(seed: u64) -> ChaCha8Rng {
    task_rng(seed, &[0xC0FFEE])
}

/// Random pmf; with probability 1/4 one coordinate is zeroed and the rest renormalized.
pub fn pmf(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut p = uniform_simplex(rng, n);
    if n > 1 && rng.random_bool(0.25) {
        let k = rng.random_range(0..n);
        p[k] = 0.0;
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
    }
    p
}

pub fn rows(rng: &mut ChaCha8Rng, count: usize, width: usize) -> Vec<f64> {
    (0..count).flat_map(|_| pmf(rng, width)).collect()
}

pub fn bsc(p: f64) -> Dmc {
    Dmc::new(2, 2, vec![1.0 - p, p, p, 1.0 - p]).unwrap()
}

pub fn state_channel(rng: &mut ChaCha8Rng, x: usize, s: usize, y: usize) -> StateChannel {
    let state = Pmf::new(uniform_simplex(rng, s)).unwrap();
    StateChannel::new(x, s, y, rows(rng, x * s, y), state).unwrap()
}

pub fn degraded_bc(
    rng: &mut ChaCha8Rng,
    x: usize,
    s: usize,
    y1: usize,
    y2: usize,
) -> BroadcastStateChannel {
    let strong = state_channel(rng, x, s, y1);
    let weak = Dmc::new(y1, y2, rows(rng, y1, y2)).unwrap();
    BroadcastStateChannel::degraded(&strong, &weak).unwrap()
}

pub fn degraded_relay(
    rng: &mut ChaCha8Rng,
    x: usize,
    x1: usize,
    s: usize,
    y1: usize,
    y: usize,
) -> RelayStateChannel {
    let to_relay = rows(rng, x * x1 * s, y1);
    let to_dest = rows(rng, x1 * s * y1, y);
    let state = Pmf::new(uniform_simplex(rng, s)).unwrap();
    RelayStateChannel::degraded(x, x1, s, y1, y, &to_relay, &to_dest, state).unwrap()
}

pub fn mac(rng: &mut ChaCha8Rng, x1: usize, x2: usize, s: usize, y: usize) -> MacStateChannel {
    let state = Pmf::new(uniform_simplex(rng, s)).unwrap();
    MacStateChannel::new(x1, x2, s, y, rows(rng, x1 * x2 * s, y), state).unwrap()
}

/// `I(X;Y)` in bits for input `p` and row-major kernel `w` with `ny` columns.
pub fn mutual_information(p: &[f64], w: &[f64], ny: usize) -> f64 {
    let mut out = vec![0.0; ny];
    for (x, &px) in p.iter().enumerate() {
        for y in 0..ny {
            out[y] += px * w[x * ny + y];
        }
    }
    let mut mi = 0.0;
    for (x, &px) in p.iter().enumerate() {
        for y in 0..ny {
            let v = w[x * ny + y];
            if px > 0.0 && v > 0.0 {
                mi += px * v * (v / out[y]).log2();
            }
        }
    }
    mi
}

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// `Y = X xor S` with `S ~ Bern(q)`.
pub fn xor_channel(q: f64) -> StateChannel {
    let mut k = Vec::new();
    for x in 0..2 {
        for s in 0..2 {
            k.extend(if x ^ s == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
        }
    }
    StateChannel::new(2, 2, 2, k, Pmf::new(vec![1.0 - q, q]).unwrap()).unwrap()
}

pub fn adder_mac() -> MacStateChannel {
    let mut k = Vec::new();
    for x1 in 0..2 {
        for x2 in 0..2 {
            let mut row = vec![0.0; 3];
            row[x1 + x2] = 1.0;
            k.extend(row);
        }
    }
    MacStateChannel::new(2, 2, 1, 3, k, Pmf::uniform(1)).unwrap()
}

/// Noiseless binary two-hop relay without state.
pub fn two_hop() -> RelayStateChannel {
    let id = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
    RelayStateChannel::degraded(2, 2, 1, 2, 2, &id, &id, Pmf::uniform(1)).unwrap()
}
