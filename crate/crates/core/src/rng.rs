//! Counter-based random numbers: every variate is a pure function of
//! (seed, domain tag, counter indices), so samples are reproducible
//! regardless of worker count or evaluation order.

use statrs::distribution::{ContinuousCDF, Normal};

/// Domain-separation tags; distinct consumers never share a stream.
pub const TAG_FIELD: u64 = 0x01;
pub const TAG_WGRID: u64 = 0x02;
pub const TAG_SCALAR_MC: u64 = 0x03;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a sequence of words into one well-distributed key.
pub fn mix(parts: &[u64]) -> u64 {
    let mut acc = 0x243f_6a88_85a3_08d3; // pi fraction, arbitrary nonzero start
    for &p in parts {
        acc = splitmix(acc ^ splitmix(p));
    }
    acc
}

/// Stateless generator keyed by (seed, tag).
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, tag: u64) -> CounterRng {
        CounterRng { key: mix(&[seed, tag]) }
    }

    #[inline]
    pub fn raw(&self, i: u64, j: u64) -> u64 {
        mix(&[self.key, i, j])
    }

    /// Uniform variate in the open interval (0, 1).
    #[inline]
    pub fn uniform(&self, i: u64, j: u64) -> f64 {
        ((self.raw(i, j) >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Standard normal variate via the inverse CDF.
    #[inline]
    pub fn normal(&self, i: u64, j: u64) -> f64 {
        std_normal_inv_cdf(self.uniform(i, j))
    }
}

/// Inverse CDF of N(0,1).
pub fn std_normal_inv_cdf(p: f64) -> f64 {
    // statrs's Normal is Copy-free but cheap to build; keep one static.
    use std::sync::OnceLock;
    static STD: OnceLock<Normal> = OnceLock::new();
    STD.get_or_init(|| Normal::new(0.0, 1.0).unwrap()).inverse_cdf(p)
}

/// Two-sided Kolmogorov-Smirnov statistic of `data` against N(0,1).
pub fn ks_statistic_normal(data: &mut [f64]) -> f64 {
    data.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = data.len() as f64;
    let std = Normal::new(0.0, 1.0).unwrap();
    let mut d: f64 = 0.0;
    for (i, x) in data.iter().enumerate() {
        let cdf = std.cdf(*x);
        d = d.max((cdf - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - cdf).abs());
    }
    d
}

/// Critical KS value at significance alpha for n samples (asymptotic form).
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
