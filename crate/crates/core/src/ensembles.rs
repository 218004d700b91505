//! Exact combinatorics of ergodic configurations on a box and the canonical
//! window marginals they induce.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{bail, Result};
use crate::lattice::FepConfig;
use crate::measures::window_prob;
use crate::special::{binomial_exact, ln_binomial, NeumaierSum};

/// Largest half-width for which canonical marginals use exact integer binomials.
pub const EXACT_HALF_WIDTH: i64 = 60;

/// Exact number of ergodic configurations with `j` particles on `ell` free sites,
/// `C(j + 1, ell − j)`.
pub fn count_ergodic(ell: i64, j: i64) -> Result<u128> {
    if ell < 0 || j < 0 {
        bail!(Domain, "negative size or particle count ({ell}, {j})");
    }
    match binomial_exact(j + 1, ell - j) {
        Some(n) => Ok(n),
        None => bail!(Domain, "count for ell = {ell}, j = {j} overflows 128 bits"),
    }
}

/// `ln N_{ell,j}`, or `None` when no ergodic configuration exists.
pub fn ln_count_ergodic(ell: i64, j: i64) -> Result<Option<f64>> {
    if ell < 0 || j < 0 {
        bail!(Domain, "negative size or particle count ({ell}, {j})");
    }
    Ok(ln_binomial(j + 1, ell - j))
}

fn count_or_zero(ell: i64, j: i64) -> Result<u128> {
    if ell < 0 || j < 0 {
        return Ok(0);
    }
    count_ergodic(ell, j)
}

/// Both sides of the splitting recursion for ergodic counts:
/// `Σ N_{ℓ1,j1} N_{ℓ2,j2}` over `j1 + j2 = j`, and
/// `N_{ℓ1+ℓ2,j} + Σ N_{ℓ1−2,j1} N_{ℓ2−2,j2}` over `j1 + j2 = j − 2`.
pub fn splitting_recursion(ell1: i64, ell2: i64, j: i64) -> Result<(u128, u128)> {
    if ell1 < 2 || ell1 >= ell2 {
        bail!(InvalidArgument, "need 2 <= ell1 < ell2, got ({ell1}, {ell2})");
    }
    if j < 0 {
        bail!(Domain, "negative particle count {j}");
    }
    let mut lhs = 0u128;
    for j1 in 0..=j {
        lhs += count_or_zero(ell1, j1)? * count_or_zero(ell2, j - j1)?;
    }
    let mut rhs = count_or_zero(ell1 + ell2, j)?;
    for j1 in 0..=j - 2 {
        rhs += count_or_zero(ell1 - 2, j1)? * count_or_zero(ell2 - 2, j - 2 - j1)?;
    }
    Ok((lhs, rhs))
}

/// Uniform measure on ergodic configurations of `B_ell = {−ell, …, ell}` holding `j`
/// particles, with frozen boundary values `a = (a1, a2)` at `∓(ell + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CanonicalSpec {
    pub ell: i64,
    pub j: i64,
    pub a: (u8, u8),
    pub delta: f64,
}

impl CanonicalSpec {
    /// Validated spec: `j` must lie in the cropped range
    /// `⌈(ell+1)(1+delta)⌉ ..= ⌊(2ell+1)(1−delta)⌋`.
    pub fn new(ell: i64, j: i64, a: (u8, u8), delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            bail!(Domain, "delta {delta} must be non-negative");
        }
        let lo = ((ell + 1) as f64 * (1.0 + delta)).ceil() as i64;
        let hi = ((2 * ell + 1) as f64 * (1.0 - delta)).floor() as i64;
        if j < lo || j > hi {
            bail!(Domain, "j = {j} outside the admissible range {lo}..={hi}");
        }
        Self::any_density(ell, j, a).map(|s| Self { delta, ..s })
    }

    /// Spec without the density cropping; only requires a nonempty ergodic set.
    pub fn any_density(ell: i64, j: i64, a: (u8, u8)) -> Result<Self> {
        if ell < 1 {
            bail!(Domain, "half-width {ell} must be at least 1");
        }
        if a.0 > 1 || a.1 > 1 {
            bail!(InvalidArgument, "boundary values {a:?} must be 0 or 1");
        }
        let spec = Self { ell, j, a, delta: 0.0 };
        if spec.ln_count().is_none() {
            bail!(Domain, "no ergodic configuration with ell = {ell}, j = {j}, a = {a:?}");
        }
        Ok(spec)
    }

    pub fn sites(&self) -> i64 {
        2 * self.ell + 1
    }

    pub fn density(&self) -> f64 {
        self.j as f64 / self.sites() as f64
    }

    /// `ln |E^a_{ell,j}|`.
    pub fn ln_count(&self) -> Option<f64> {
        segment_ln_count(self.sites(), self.j, self.a.0, self.a.1)
    }

    /// Uniform draw from the ergodic set: the `sites − j` empty sites occupy distinct
    /// gaps between particles, boundary gaps allowed only next to a boundary particle.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FepConfig> {
        let (j, n) = (self.j as usize, self.sites() as usize);
        let empties = n - j;
        let skip_first = usize::from(self.a.0 == 0);
        let gaps = j + 1 - skip_first - usize::from(self.a.1 == 0);
        let mut chosen = index::sample(rng, gaps, empties).into_vec();
        chosen.sort_unstable();
        let mut sites = Vec::with_capacity(n);
        let mut next = chosen.iter().map(|g| g + skip_first).peekable();
        for gap in 0..=j {
            if next.peek() == Some(&gap) {
                sites.push(0);
                next.next();
            }
            if gap < j {
                sites.push(1);
            }
        }
        FepConfig::boxed(-self.ell, &sites, Some(self.a.0), Some(self.a.1))
    }
}

/// `ln` of the number of ergodic fillings of `n` sites with `j` particles between
/// boundary values `b1` and `b2`.
fn segment_ln_count(n: i64, j: i64, b1: u8, b2: u8) -> Option<f64> {
    ln_binomial(j + b1 as i64 + b2 as i64 - 1, n - j)
}

fn segment_count_exact(n: i64, j: i64, b1: u8, b2: u8) -> u128 {
    binomial_exact(j + b1 as i64 + b2 as i64 - 1, n - j).expect("exact path is bounded")
}

fn is_ergodic_word(sigma: &[u8]) -> bool {
    sigma.windows(2).all(|w| w[0] + w[1] >= 1)
}

fn check_window(spec: &CanonicalSpec, x: i64, k: i64, sigma: &[u8]) -> Result<()> {
    if k < 0 || sigma.len() as i64 != 2 * k + 1 {
        bail!(InvalidArgument, "window of half-width {k} needs {} values", 2 * k + 1);
    }
    if sigma.iter().any(|&s| s > 1) {
        bail!(InvalidArgument, "window values must be 0 or 1");
    }
    if x.abs() > spec.ell - k - 1 {
        bail!(Domain, "window B_{k}({x}) with a margin site does not fit in B_{}", spec.ell);
    }
    Ok(())
}

/// Probability under the uniform ergodic measure of `spec` that the sites
/// `x − k, …, x + k` read `sigma`.
pub fn canonical_window_prob(spec: &CanonicalSpec, x: i64, k: i64, sigma: &[u8]) -> Result<f64> {
    check_window(spec, x, k, sigma)?;
    if !is_ergodic_word(sigma) {
        return Ok(0.0);
    }
    Ok(if spec.ell <= EXACT_HALF_WIDTH {
        canonical_exact(spec, x, k, sigma)
    } else {
        canonical_log(spec, x, k, sigma)
    })
}

fn split(spec: &CanonicalSpec, x: i64, k: i64, sigma: &[u8]) -> (i64, i64, i64, u8, u8) {
    let j0: i64 = sigma.iter().map(|&s| s as i64).sum();
    let n1 = x - k + spec.ell;
    let n2 = spec.ell - x - k;
    (spec.j - j0, n1, n2, sigma[0], sigma[sigma.len() - 1])
}

fn canonical_exact(spec: &CanonicalSpec, x: i64, k: i64, sigma: &[u8]) -> f64 {
    let (rest, n1, n2, first, last) = split(spec, x, k, sigma);
    let denom = segment_count_exact(spec.sites(), spec.j, spec.a.0, spec.a.1) as f64;
    let mut sum = NeumaierSum::new();
    for j1 in 0.max(rest - n2)..=rest.min(n1) {
        let c1 = segment_count_exact(n1, j1, spec.a.0, first);
        let c2 = segment_count_exact(n2, rest - j1, last, spec.a.1);
        if c1 > 0 && c2 > 0 {
            sum.add(c1 as f64 / denom * c2 as f64);
        }
    }
    sum.value()
}

pub(crate) fn canonical_log(spec: &CanonicalSpec, x: i64, k: i64, sigma: &[u8]) -> f64 {
    let (rest, n1, n2, first, last) = split(spec, x, k, sigma);
    let Some(ln_denom) = spec.ln_count() else {
        return 0.0;
    };
    let terms: Vec<f64> = (0.max(rest - n2)..=rest.min(n1))
        .filter_map(|j1| {
            let c1 = segment_ln_count(n1, j1, spec.a.0, first)?;
            let c2 = segment_ln_count(n2, rest - j1, last, spec.a.1)?;
            Some(c1 + c2 - ln_denom)
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let sum: NeumaierSum = terms.iter().map(|t| (t - max).exp()).collect();
    max.exp() * sum.value()
}

/// All ergodic words of length `2k + 1`.
pub fn ergodic_windows(k: i64) -> Vec<Vec<u8>> {
    let len = (2 * k + 1) as usize;
    (0u64..1 << len)
        .map(|m| (0..len).map(|i| ((m >> i) & 1) as u8).collect::<Vec<u8>>())
        .filter(|s| is_ergodic_word(s))
        .collect()
}

/// Centres admitted by the equivalence bound: `|x| ≤ ell − ⌈(ln ell)²⌉`, further
/// limited so that the window and one margin site stay inside the box.
pub fn admissible_centres(ell: i64, k: i64) -> Vec<i64> {
    let margin = ((ell as f64).ln().powi(2)).ceil() as i64;
    let r = (ell - margin).min(ell - k - 1);
    if r < 0 {
        return Vec::new();
    }
    (-r..=r).collect()
}

/// Largest gap between canonical and grand-canonical window probabilities at
/// density `j / (2 ell + 1)`, over admissible centres and ergodic windows.
/// Returns `(max_err, argmax_x)`.
pub fn equivalence_error(spec: &CanonicalSpec, k: i64) -> Result<(f64, i64)> {
    let centres = admissible_centres(spec.ell, k);
    if centres.is_empty() {
        bail!(Domain, "no admissible centre for ell = {}, k = {k}", spec.ell);
    }
    let rho = spec.density();
    let windows = ergodic_windows(k);
    let grand = windows
        .iter()
        .map(|s| window_prob(rho, s))
        .collect::<Result<Vec<f64>>>()?;
    let per_x = centres
        .par_iter()
        .map(|&x| {
            let mut worst = 0.0f64;
            for (s, g) in windows.iter().zip(&grand) {
                let c = canonical_window_prob(spec, x, k, s)?;
                worst = worst.max((c - g).abs());
            }
            Ok((worst, x))
        })
        .collect::<Result<Vec<(f64, i64)>>>()?;
    Ok(per_x
        .into_iter()
        .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best }))
}

/// One line of an equivalence-of-ensembles sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub ell: i64,
    pub j: i64,
    pub rho_ell: f64,
    pub a1: u8,
    pub a2: u8,
    pub k: i64,
    pub max_err: f64,
    pub argmax_x: i64,
    pub err_times_ell_over_log2: f64,
}

pub const SWEEP_HEADER: &str = "ell,j,rho_ell,a1,a2,k,max_err,argmax_x,err_times_ell_over_log2";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:e},{},{}",
            self.ell,
            self.j,
            self.rho_ell,
            self.a1,
            self.a2,
            self.k,
            self.max_err,
            self.argmax_x,
            self.err_times_ell_over_log2
        )
    }
}

/// Evaluates the equivalence error at `j = round(rho (2 ell + 1))`.
pub fn sweep_point(ell: i64, rho: f64, a: (u8, u8), k: i64) -> Result<SweepRow> {
    let j = (rho * (2 * ell + 1) as f64).round() as i64;
    let spec = CanonicalSpec::any_density(ell, j, a)?;
    let (max_err, argmax_x) = equivalence_error(&spec, k)?;
    let log = (ell as f64).ln();
    Ok(SweepRow {
        ell,
        j,
        rho_ell: spec.density(),
        a1: a.0,
        a2: a.1,
        k,
        max_err,
        argmax_x,
        err_times_ell_over_log2: max_err * ell as f64 / (log * log),
    })
}

/// `Σ_{m=1}^{ell−1} [Π_{n=1}^m (1−ρ+n/ell)/(ρ+n/ell) − ((1−ρ)/ρ)^m]`.
pub fn ratio_product_excess(rho: f64, ell: u64) -> Result<f64> {
    if !(0.5..=1.0).contains(&rho) {
        bail!(Domain, "density {rho} outside [1/2, 1]");
    }
    let l = ell as f64;
    let ratio = (1.0 - rho) / rho;
    let mut ln_prod = 0.0;
    let mut sum = NeumaierSum::new();
    for m in 1..ell {
        let u = m as f64 / l;
        ln_prod += (1.0 - rho + u).ln() - (rho + u).ln();
        sum.add(ln_prod.exp() - ratio.powi(m.min(i32::MAX as u64) as i32));
    }
    Ok(sum.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn words(len: usize) -> impl Iterator<Item = Vec<u8>> {
        (0u64..1 << len).map(move |m| (0..len).map(|i| ((m >> i) & 1) as u8).collect())
    }

    fn brute_count(ell: usize, j: usize) -> u128 {
        words(ell)
            .filter(|s| s.iter().map(|&x| x as usize).sum::<usize>() == j && is_ergodic_word(s))
            .count() as u128
    }

    /// All ergodic fillings of `B_ell` with `j` particles between boundary values `a`.
    fn brute_canonical(ell: i64, j: i64, a: (u8, u8)) -> Vec<Vec<u8>> {
        let n = (2 * ell + 1) as usize;
        words(n)
            .filter(|s| {
                let mut ext = vec![a.0];
                ext.extend(s);
                ext.push(a.1);
                s.iter().map(|&x| x as i64).sum::<i64>() == j && is_ergodic_word(&ext)
            })
            .collect()
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_ergodic(4, 2).unwrap(), 3);
        assert_eq!(count_ergodic(5, 3).unwrap(), 6);
        assert_eq!(count_ergodic(7, 7).unwrap(), 1);
        assert_eq!(count_ergodic(0, 0).unwrap(), 1);
        assert_eq!(count_ergodic(3, 1).unwrap(), 1);
        assert_eq!(count_ergodic(4, 1).unwrap(), 0);
        assert!(count_ergodic(-1, 0).is_err());
    }

    #[test]
    fn counts_match_enumeration() {
        for ell in 0..=16 {
            for j in 0..=ell {
                assert_eq!(count_ergodic(ell as i64, j as i64).unwrap(), brute_count(ell, j));
            }
        }
    }

    #[test]
    fn log_count_matches_exact() {
        for ell in 0..=60 {
            for j in 0..=ell {
                let exact = count_ergodic(ell, j).unwrap();
                match ln_count_ergodic(ell, j).unwrap() {
                    None => assert_eq!(exact, 0),
                    Some(l) => assert!((l - (exact as f64).ln()).abs() < 1e-10),
                }
            }
        }
    }

    #[test]
    fn splitting_recursion_examples() {
        assert_eq!(splitting_recursion(2, 3, 3).unwrap(), (7, 7));
        assert_eq!(splitting_recursion(2, 3, 20).unwrap(), (0, 0));
        assert!(splitting_recursion(3, 3, 3).is_err());
        for ell in 5..=14 {
            for ell1 in 2..ell {
                let ell2 = ell - ell1;
                if ell1 >= ell2 {
                    continue;
                }
                for j in 0..=ell {
                    let (lhs, rhs) = splitting_recursion(ell1, ell2, j).unwrap();
                    assert_eq!(lhs, rhs);
                    let b = |l: i64, j: i64| if l < 0 || j < 0 { 0 } else { brute_count(l as usize, j as usize) };
                    let brute_lhs: u128 = (0..=j).map(|j1| b(ell1, j1) * b(ell2, j - j1)).sum();
                    assert_eq!(lhs, brute_lhs);
                }
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(CanonicalSpec::new(3, 5, (1, 1), 0.0).is_ok());
        assert!(CanonicalSpec::new(3, 3, (1, 1), 0.0).is_err());
        assert!(CanonicalSpec::any_density(3, 3, (1, 1)).is_ok());
        assert!(CanonicalSpec::new(10, 21, (1, 1), 0.1).is_err());
        assert!(CanonicalSpec::any_density(1, 1, (0, 0)).is_err());
        assert!(CanonicalSpec::any_density(1, 1, (2, 0)).is_err());
    }

    #[test]
    fn canonical_matches_enumeration() {
        for ell in 1..=4i64 {
            for j in 0..=2 * ell + 1 {
                for a in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let Ok(spec) = CanonicalSpec::any_density(ell, j, a) else {
                        assert!(brute_canonical(ell, j, a).is_empty());
                        continue;
                    };
                    let configs = brute_canonical(ell, j, a);
                    assert!(((configs.len() as f64).ln() - spec.ln_count().unwrap()).abs() < 1e-12);
                    for k in 0..ell {
                        for x in -(ell - k - 1)..=(ell - k - 1) {
                            for sigma in words((2 * k + 1) as usize) {
                                let lo = (x - k + ell) as usize;
                                let hits = configs
                                    .iter()
                                    .filter(|c| c[lo..lo + sigma.len()] == sigma[..])
                                    .count();
                                let oracle = hits as f64 / configs.len() as f64;
                                let p = canonical_window_prob(&spec, x, k, &sigma).unwrap();
                                assert!((p - oracle).abs() < 1e-12, "{spec:?} x={x} k={k} {sigma:?}");
                                if is_ergodic_word(&sigma) {
                                    assert!((canonical_log(&spec, x, k, &sigma) - oracle).abs() < 1e-12);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn canonical_window_outside_box_is_rejected() {
        let spec = CanonicalSpec::any_density(3, 5, (1, 1)).unwrap();
        assert!(canonical_window_prob(&spec, 2, 1, &[1, 1, 1]).is_err());
        assert!(canonical_window_prob(&spec, 0, 1, &[1, 1]).is_err());
        assert_eq!(canonical_window_prob(&spec, 0, 1, &[0, 0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn exact_and_log_paths_agree() {
        for (ell, j) in [(20, 30), (40, 61), (60, 100), (60, 121)] {
            for a in [(0, 0), (1, 0), (1, 1)] {
                let spec = CanonicalSpec::any_density(ell, j, a).unwrap();
                for x in [-(ell - 3), -7, 0, 11, ell - 3] {
                    for s in ergodic_windows(1) {
                        let e = canonical_exact(&spec, x, 1, &s);
                        let l = canonical_log(&spec, x, 1, &s);
                        assert!((e - l).abs() < 1e-11 * e.max(1e-300), "{e} {l}");
                    }
                }
            }
        }
    }

    #[test]
    fn normalization_and_telescoping() {
        for ell in 2..=8i64 {
            for j in 0..=2 * ell + 1 {
                for a in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let Ok(spec) = CanonicalSpec::any_density(ell, j, a) else { continue };
                    for k in 0..=1 {
                        for x in -(ell - k - 1)..=(ell - k - 1) {
                            let total: f64 = words((2 * k + 1) as usize)
                                .map(|s| canonical_window_prob(&spec, x, k, &s).unwrap())
                                .sum();
                            assert!((total - 1.0).abs() < 1e-12);
                        }
                    }
                    // summing out both outer sites of B_2(x) gives B_1(x)
                    for x in -(ell - 3)..=(ell - 3) {
                        for s in words(3) {
                            let mut acc = 0.0;
                            for (l, r) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                                let w = [l, s[0], s[1], s[2], r];
                                acc += canonical_window_prob(&spec, x, 2, &w).unwrap();
                            }
                            let direct = canonical_window_prob(&spec, x, 1, &s).unwrap();
                            assert!((acc - direct).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn reflection_symmetry() {
        for (ell, j) in [(5, 8), (7, 11), (70, 100)] {
            for a in [(0, 1), (1, 0), (1, 1)] {
                let spec = CanonicalSpec::any_density(ell, j, a).unwrap();
                let mirror = CanonicalSpec::any_density(ell, j, (a.1, a.0)).unwrap();
                for x in -(ell - 2)..=(ell - 2) {
                    for s in ergodic_windows(1) {
                        let mut r = s.clone();
                        r.reverse();
                        let p = canonical_window_prob(&spec, x, 1, &s).unwrap();
                        let q = canonical_window_prob(&mirror, -x, 1, &r).unwrap();
                        assert!((p - q).abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn full_box_has_no_error() {
        let spec = CanonicalSpec::any_density(30, 61, (1, 1)).unwrap();
        let (err, _) = equivalence_error(&spec, 1).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn canonical_sampler_is_uniform_and_matches_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = CanonicalSpec::any_density(2, 3, (0, 1)).unwrap();
        let configs = brute_canonical(2, 3, (0, 1));
        let mut counts = vec![0usize; configs.len()];
        for _ in 0..20_000 {
            let c = spec.sample(&mut rng).unwrap();
            assert!(c.is_ergodic());
            counts[configs.iter().position(|s| *s == c.occupations()).unwrap()] += 1;
        }
        let expect = 20_000.0 / configs.len() as f64;
        assert!(counts.iter().all(|&n| (n as f64 - expect).abs() < 5.0 * expect.sqrt()));

        let spec = CanonicalSpec::any_density(100, 150, (1, 1)).unwrap();
        let (err, x) = equivalence_error(&spec, 1).unwrap();
        assert!(err > 0.0 && x.abs() <= 100);
        let draws = 40_000;
        let window = [1u8, 1, 1];
        let mut hits = 0.0;
        for _ in 0..draws {
            let c = spec.sample(&mut rng).unwrap();
            let lo = (x - 1 + 100) as usize;
            hits += ((lo..lo + 3).all(|i| c.get(i) == (window[i - lo] == 1))) as u8 as f64;
        }
        let p = canonical_window_prob(&spec, x, 1, &window).unwrap();
        let freq = hits / draws as f64;
        assert!((freq - p).abs() < 3.0 * (p * (1.0 - p) / draws as f64).sqrt());
    }

    #[test]
    fn ratio_product_excess_examples() {
        assert_eq!(ratio_product_excess(0.5, 1000).unwrap(), 0.0);
        for rho in [0.5, 0.6, 0.75, 0.9, 1.0] {
            for ell in [2, 10, 100, 1000] {
                assert!(ratio_product_excess(rho, ell).unwrap() >= 0.0);
            }
        }
        let scaled: Vec<f64> = [100u64, 1_000, 10_000, 100_000]
            .iter()
            .map(|&l| ratio_product_excess(0.75, l).unwrap() * l as f64 / (l as f64).ln().powi(2))
            .collect();
        assert!(scaled.windows(2).all(|w| w[1] <= w[0] * 1.05), "{scaled:?}");
        assert!(ratio_product_excess(0.4, 10).is_err());
    }

    #[test]
    fn sweep_row_format() {
        let row = sweep_point(64, 0.75, (1, 1), 1).unwrap();
        assert_eq!(row.j, 97);
        assert_eq!(row.csv_line().split(',').count(), SWEEP_HEADER.split(',').count());
    }
}
