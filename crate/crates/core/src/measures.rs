//! Closed-form coefficients, exact window probabilities and exact samplers for the
//! stationary measures of both processes.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::lattice::{FepConfig, ZrConfig, ZrGeometry, MIN_RING_LEN};
use crate::special::{ln_binomial, log_sum_exp};

/// Coefficients of the macroscopic theory at density `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryBundle {
    pub rho: f64,
    pub a: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub sigma: f64,
    pub chi: f64,
    pub v: f64,
    pub alpha: f64,
    pub phi: f64,
    pub phi_prime: f64,
    pub zr_var: f64,
}

pub fn check_density(rho: f64) -> Result<()> {
    if !(rho > 0.5 && rho <= 1.0) {
        bail!(Domain, "density {rho} outside (1/2, 1]");
    }
    Ok(())
}

pub fn theory(rho: f64) -> Result<TheoryBundle> {
    check_density(rho)?;
    let alpha = (2.0 * rho - 1.0) / (1.0 - rho);
    Ok(TheoryBundle {
        rho,
        a: active_density(rho),
        d: 1.0 / (rho * rho),
        sigma: (2.0 * rho - 1.0) * (1.0 - rho) / rho,
        chi: rho * (1.0 - rho) * (2.0 * rho - 1.0),
        v: (1.0 - 2.0 * rho * rho) / (rho * rho),
        alpha,
        phi: if alpha.is_finite() {
            alpha / (1.0 + alpha)
        } else {
            1.0
        },
        phi_prime: ((1.0 - rho) / rho).powi(2),
        zr_var: rho * (2.0 * rho - 1.0) / ((1.0 - rho) * (1.0 - rho)),
    })
}

fn active_density(rho: f64) -> f64 {
    (2.0 * rho - 1.0) / rho
}

impl TheoryBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

/// Probability under the grand-canonical measure that `sigma` occupies a window
/// of `sigma.len()` consecutive sites.
///
/// Evaluated as the stationary two-state chain with `P(1→1) = a`, `P(1→0) = 1 − a`,
/// `P(0→1) = 1`.
pub fn window_prob(rho: f64, sigma: &[u8]) -> Result<f64> {
    check_density(rho)?;
    if sigma.is_empty() {
        bail!(InvalidArgument, "empty window");
    }
    if let Some(&s) = sigma.iter().find(|&&s| s > 1) {
        bail!(InvalidArgument, "window holds {s}, expected 0 or 1");
    }
    let a = active_density(rho);
    let mut n11 = 0i32;
    let mut n10 = 0i32;
    for w in sigma.windows(2) {
        match (w[0], w[1]) {
            (0, 0) => return Ok(0.0),
            (1, 1) => n11 += 1,
            (1, 0) => n10 += 1,
            _ => {}
        }
    }
    let first = if sigma[0] == 1 { rho } else { 1.0 - rho };
    Ok(first * a.powi(n11) * (1.0 - a).powi(n10))
}

/// Covariance `Cov(η_0, η_x)` under the grand-canonical measure.
pub fn pair_covariance(rho: f64, x: u64) -> Result<f64> {
    check_density(rho)?;
    let ratio = (rho - 1.0) / rho;
    Ok(rho * (1.0 - rho) * ratio.powi(x.min(i32::MAX as u64) as i32))
}

fn check_sampler_density(rho: f64) -> Result<f64> {
    check_density(rho)?;
    if rho == 1.0 {
        bail!(Domain, "zero-range samplers need rho < 1 (the cluster law is degenerate at rho = 1)");
    }
    Ok(active_density(rho))
}

/// Draws from `P(k) = a^k (1 − a)` by inversion.
pub fn geometric<R: Rng + ?Sized>(a: f64, rng: &mut R) -> u64 {
    if a <= 0.0 {
        return 0;
    }
    let u: f64 = 1.0 - rng.gen::<f64>();
    (u.ln() / a.ln()).floor() as u64
}

/// Independent sites with the geometric law of density `alpha(rho)`.
pub fn sample_zr_geometric<R: Rng + ?Sized>(
    rho: f64,
    geometry: ZrGeometry,
    rng: &mut R,
) -> Result<ZrConfig> {
    let a = check_sampler_density(rho)?;
    match geometry {
        ZrGeometry::Ring { len } => ZrConfig::ring((0..len).map(|_| geometric(a, rng)).collect()),
        ZrGeometry::Box { first, last } => {
            if last < first {
                bail!(InvalidArgument, "empty box {first}..{last}");
            }
            ZrConfig::boxed(first, (first..=last).map(|_| geometric(a, rng)).collect())
        }
    }
}

/// Central cluster size `omega_0` with law `(k+2) a^k rho (1−a)^2` and the tagged
/// empty site `X_0`, uniform on `{−omega_0 − 1, …, 0}`.
pub fn sample_zr_distorted<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> Result<(u64, i64)> {
    let a = check_sampler_density(rho)?;
    let mut omega0 = geometric(a, rng);
    if rng.gen::<f64>() < rho {
        omega0 += geometric(a, rng);
    }
    let x0 = -(rng.gen_range(0..=omega0 + 1) as i64);
    Ok((omega0, x0))
}

/// Exact grand-canonical configuration restricted to `{−m, …, m}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample {
    pub config: FepConfig,
    pub rho: f64,
}

/// Exact draw of the grand-canonical marginal on `{−m, …, m}`, built cluster by
/// cluster outward from the distorted central cluster.
pub fn sample_window_grand<R: Rng + ?Sized>(rho: f64, m: usize, rng: &mut R) -> Result<WindowSample> {
    check_density(rho)?;
    if m < 1 {
        bail!(InvalidArgument, "half width must be at least 1");
    }
    let m = m as i64;
    let width = (2 * m + 1) as usize;
    let mut sites = vec![1u8; width];
    if rho < 1.0 {
        let a = active_density(rho);
        let (omega0, x0) = sample_zr_distorted(rho, rng)?;
        let mut mark = |x: i64| {
            if (-m..=m).contains(&x) {
                sites[(x + m) as usize] = 0;
            }
        };
        mark(x0);
        let mut right = x0 + omega0 as i64 + 2;
        while right <= m {
            mark(right);
            right += geometric(a, rng) as i64 + 2;
        }
        let mut left = x0;
        while left >= -m {
            left -= geometric(a, rng) as i64 + 2;
            mark(left);
        }
    }
    Ok(WindowSample {
        config: FepConfig::boxed(-m, &sites, None, None)?,
        rho,
    })
}

/// One-sided window `(η_0, …, η_{length−1})` from the stationary two-state chain.
pub fn markov_chain_window<R: Rng + ?Sized>(rho: f64, length: usize, rng: &mut R) -> Result<FepConfig> {
    check_density(rho)?;
    if length == 0 {
        bail!(InvalidArgument, "empty window");
    }
    let a = active_density(rho);
    let mut sites = Vec::with_capacity(length);
    let mut cur = u8::from(rng.gen::<f64>() < rho);
    sites.push(cur);
    for _ in 1..length {
        cur = if cur == 0 {
            1
        } else {
            u8::from(rng.gen::<f64>() < a)
        };
        sites.push(cur);
    }
    FepConfig::boxed(0, &sites, None, None)
}

/// Number of ergodic configurations with `n` particles on a ring of `len` sites.
pub fn ln_count_ergodic_ring(len: usize, n: usize) -> Option<f64> {
    if n == 0 || n > len || 2 * n < len {
        return None;
    }
    let ln_c = ln_binomial(n as i64, (len - n) as i64)?;
    Some((len as f64 / n as f64).ln() + ln_c)
}

fn check_ring_len(len: usize) -> Result<()> {
    if len < MIN_RING_LEN {
        bail!(InvalidArgument, "ring length {len} is below the minimum {MIN_RING_LEN}");
    }
    Ok(())
}

/// Uniform draw among ergodic ring configurations with `n` particles.
pub fn sample_canonical_ring<R: Rng + ?Sized>(len: usize, n: usize, rng: &mut R) -> Result<FepConfig> {
    check_ring_len(len)?;
    if n > len || 2 * n < len {
        bail!(Domain, "{n} particles on a ring of {len} sites has no ergodic configuration");
    }
    let empties = len - n;
    if empties == 0 {
        return FepConfig::ring(&vec![1; len]);
    }
    let extra = 2 * n - len;
    let slots = extra + empties - 1;
    let mut bars = index::sample(rng, slots, empties - 1).into_vec();
    bars.sort_unstable();
    let offset = rng.gen_range(0..len);
    let mut sites = vec![1u8; len];
    // bars at slot positions split the `extra` stars into `empties` groups
    let mut pos = 0usize;
    let mut prev = 0usize;
    for (i, b) in bars.iter().chain(std::iter::once(&slots)).enumerate() {
        let part = b - prev - usize::from(i > 0);
        prev = *b;
        sites[(pos + offset) % len] = 0;
        pos += part + 2;
    }
    debug_assert_eq!(pos, len);
    FepConfig::ring(&sites)
}

/// Particle number of the fixed-fugacity ergodic ring ensemble whose bulk density is `rho`.
pub fn sample_ring_particle_number<R: Rng + ?Sized>(len: usize, rho: f64, rng: &mut R) -> Result<usize> {
    check_density(rho)?;
    check_ring_len(len)?;
    if rho == 1.0 {
        return Ok(len);
    }
    let ln_z = (2.0 * (2.0 * rho - 1.0).ln()) - rho.ln() - (1.0 - rho).ln();
    let lo = len.div_ceil(2);
    let logs: Vec<f64> = (lo..=len)
        .map(|n| n as f64 * ln_z + ln_count_ergodic_ring(len, n).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let total = log_sum_exp(&logs).expect("n = len always contributes");
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, l) in logs.iter().enumerate() {
        acc += (l - total).exp();
        if u < acc {
            return Ok(lo + i);
        }
    }
    Ok(len)
}

/// Stationary ring configuration at fixed fugacity: the particle number is drawn from
/// its ring law, then the configuration uniformly among ergodic ones.
pub fn sample_grand_ring<R: Rng + ?Sized>(len: usize, rho: f64, rng: &mut R) -> Result<FepConfig> {
    let n = sample_ring_particle_number(len, rho, rng)?;
    sample_canonical_ring(len, n, rng)
}
