//! Binomial coefficients in log space and exactly, plus compensated summation.

use statrs::function::factorial::ln_factorial;

/// `ln C(n, k)`, or `None` when the coefficient vanishes (`k < 0`, `k > n` or `n < 0`).
pub fn ln_binomial(n: i64, k: i64) -> Option<f64> {
    if n < 0 || k < 0 || k > n {
        return None;
    }
    let (n, k) = (n as u64, k as u64);
    Some(ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k))
}

/// Exact `C(n, k)` with the same zero conventions; `None` on overflow.
pub fn binomial_exact(n: i64, k: i64) -> Option<u128> {
    if n < 0 || k < 0 || k > n {
        return Some(0);
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.checked_mul(n - i)? / (i + 1);
    }
    Some(r)
}

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `ln Σ exp(x_i)` over the given log terms, compensated; `None` for an empty sum.
pub fn log_sum_exp(terms: &[f64]) -> Option<f64> {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let s: NeumaierSum = terms.iter().map(|t| (t - max).exp()).collect();
    Some(max + s.value().ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_binomials() {
        assert_eq!(binomial_exact(5, 2), Some(10));
        assert_eq!(binomial_exact(3, 4), Some(0));
        assert_eq!(binomial_exact(-1, 0), Some(0));
        assert_eq!(binomial_exact(0, 0), Some(1));
        assert_eq!(binomial_exact(121, 60), binomial_exact(121, 61));
        // Pascal's rule pins the large exact values
        for n in 1..=125 {
            for k in 1..n {
                let lhs = binomial_exact(n, k).unwrap();
                let rhs = binomial_exact(n - 1, k - 1).unwrap() + binomial_exact(n - 1, k).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn log_binomials_match_exact() {
        for n in 0..=120i64 {
            for k in 0..=n {
                let exact = binomial_exact(n, k).unwrap() as f64;
                let lg = ln_binomial(n, k).unwrap();
                assert!((lg - exact.ln()).abs() <= 1e-12 * exact.ln().abs().max(1.0));
            }
        }
        assert_eq!(ln_binomial(3, 5), None);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.1f64, -3.0, 2.5];
        let direct = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs).unwrap() - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), None);
    }
}
