//! Log-domain helpers shared by the rate, partition and security calculators.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use statrs::function::factorial::ln_binomial;

/// `-x log2 x` with the `0 log 0 = 0` convention.
pub fn neg_xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(x: f64) -> f64 {
    neg_xlog2x(x) + neg_xlog2x(1.0 - x)
}

/// Shannon entropy (bits) of a probability vector.
pub fn entropy_bits(weights: &[f64]) -> f64 {
    let mut acc = NeumaierSum::default();
    for &w in weights {
        acc.add(neg_xlog2x(w));
    }
    acc.total()
}

/// Natural log of the binomial coefficient.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        f64::NEG_INFINITY
    } else if k == 0 || k == n {
        0.0
    } else {
        ln_binomial(n, k)
    }
}

/// `ln(k ln a + (n-k) ln(1-a))` with the edge cases `a in {0, 1}` handled exactly.
pub fn ln_bernoulli_string(n: u64, k: u64, a: f64) -> f64 {
    let ones = if k == 0 { 0.0 } else { k as f64 * a.ln() };
    let zeros = if n == k { 0.0 } else { (n - k) as f64 * (-a).ln_1p() };
    ones + zeros
}

/// Log of the binomial pmf `C(n,k) a^k (1-a)^(n-k)`.
pub fn ln_binomial_pmf(n: u64, k: u64, a: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_choose(n, k) + ln_bernoulli_string(n, k, a)
}

/// Full binomial pmf vector over `0..=n`, normalized so the entries sum to one.
pub fn binomial_pmf_vec(n: u64, a: f64) -> Vec<f64> {
    let len = n as usize + 1;
    if a <= 0.0 || a >= 1.0 {
        let mut v = vec![0.0; len];
        v[if a <= 0.0 { 0 } else { n as usize }] = 1.0;
        return v;
    }
    // Log-weights by the ratio recurrence, then one normalization.
    let odds = a.ln() - (-a).ln_1p();
    let mut lw = Vec::with_capacity(len);
    let mut cur = 0.0;
    lw.push(cur);
    for k in 1..=n {
        cur += ((n - k + 1) as f64 / k as f64).ln() + odds;
        lw.push(cur);
    }
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.into_iter().map(|x| (x - top).exp()).collect();
    let z: NeumaierSum = w.iter().copied().collect();
    let z = z.total();
    w.into_iter().map(|x| x / z).collect()
}

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `ln(exp(a) + exp(b))`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn ln_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, ln_add_exp)
}

/// Exact binomial coefficient.
pub fn big_choose(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c *= n - i;
        c /= i + 1;
    }
    c
}

/// `ceil(log2 x)` for a positive integer; 0 for `x <= 1`.
pub fn ceil_log2(x: &BigUint) -> usize {
    if x <= &BigUint::one() {
        0
    } else {
        (x - 1u32).bits() as usize
    }
}

/// `floor(log2 x)` for a positive integer.
pub fn floor_log2(x: &BigUint) -> usize {
    assert!(!x.is_zero(), "floor_log2 of zero");
    x.bits() as usize - 1
}

/// Floating-point `log2` of an arbitrarily large integer.
pub fn log2_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).log2() + shift as f64
}

/// Nearest integer to `2^l2`, carrying 53 bits of precision for large values.
pub fn big_from_log2(l2: f64) -> BigUint {
    if !l2.is_finite() || l2 < -1.0 {
        return BigUint::zero();
    }
    if l2 < 52.0 {
        let v = l2.exp2().round();
        return BigUint::from(v as u64);
    }
    let e = l2.floor();
    let mant = (l2 - e).exp2() * (1u64 << 52) as f64;
    let m = BigUint::from(mant.round() as u64);
    let shift = e as usize - 52;
    m << shift
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_conventions() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.11) - 0.49991596).abs() < 1e-6);
    }

    #[test]
    fn big_choose_matches_known_values() {
        assert_eq!(big_choose(100, 10), BigUint::from(17_310_309_456_440u64));
        assert_eq!(big_choose(4, 2), BigUint::from(6u32));
        assert_eq!(big_choose(3, 5), BigUint::zero());
        assert_eq!(ceil_log2(&big_choose(100, 10)), 44);
        assert_eq!(ceil_log2(&BigUint::from(4u32)), 2);
        assert_eq!(ceil_log2(&BigUint::from(5u32)), 3);
        assert_eq!(ceil_log2(&BigUint::one()), 0);
    }

    #[test]
    fn log2_roundtrip_on_large_integers() {
        let c = big_choose(4000, 1200);
        let l = log2_big(&c);
        let back = big_from_log2(l);
        let rel = log2_big(&back) - l;
        assert!(rel.abs() < 1e-12);
        assert_eq!(big_from_log2(10.0), BigUint::from(1024u32));
        assert_eq!(big_from_log2(60.0), BigUint::one() << 60usize);
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        for &(n, a) in &[(1u64, 0.4), (50, 0.2), (2000, 0.37), (10, 0.0), (10, 1.0)] {
            let s: NeumaierSum = binomial_pmf_vec(n, a).into_iter().collect();
            assert!((s.total() - 1.0).abs() < 1e-12, "n={n} a={a}");
        }
    }

    #[test]
    fn ln_add_exp_handles_infinities() {
        assert_eq!(ln_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        assert!((ln_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
