use serde::Serialize;

use super::TestFunction;
use crate::dynamics::RateSchedule;
use crate::error::{bail, Result};
use crate::lattice::{FepConfig, FepGeometry, ZrConfig, ZrGeometry};
use crate::measures::theory;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub value: f64,
    pub time: f64,
    pub frame_shift: f64,
}

/// `v_N = v(rho) N^{gamma − 1}`, the speed of the exclusion frame.
pub fn fep_frame_velocity(rho: f64, sched: &RateSchedule) -> Result<f64> {
    Ok(theory(rho)?.v * sched.gamma.drift_scale(sched.n_f64()))
}

/// `(1 − rho) v'_N = N^{gamma − 1} Φ'(alpha)`, the speed of the zero-range frame.
pub fn zr_frame_velocity(rho: f64, sched: &RateSchedule) -> Result<f64> {
    Ok(theory(rho)?.phi_prime * sched.gamma.drift_scale(sched.n_f64()))
}

/// `v'_N = N^{gamma − 1} (1 − rho) / rho^2`, the speed of a tagged particle.
pub fn particle_velocity(rho: f64, sched: &RateSchedule) -> Result<f64> {
    theory(rho)?;
    Ok(sched.gamma.drift_scale(sched.n_f64()) * (1.0 - rho) / (rho * rho))
}

/// Whether an experiment up to `t_end` keeps `g` inside half of a ring of `len` sites:
/// `radius + 6 sqrt(4 D t_end) + |t_end v| < len / (2N)`, with the support centre
/// added to the radius.
pub fn check_validity(g: &TestFunction, len: usize, n: f64, d: f64, t_end: f64, velocity: f64) -> Result<()> {
    let (c, r) = g.support();
    let need = c.abs() + r + 6.0 * (4.0 * d * t_end).sqrt() + (t_end * velocity).abs();
    let half = len as f64 / (2.0 * n);
    if need >= half {
        bail!(
            ValidityWindow,
            "{g} needs {need:.3} macroscopic units but the half ring is {half:.3}; enlarge the ring"
        );
    }
    Ok(())
}

/// `Σ_x value(x) G(x/N − shift)` over the support of the shifted `g`, with ring
/// sites read at their minimal image around 0.
fn pair_with<F: Fn(usize) -> f64>(
    g: &TestFunction,
    n: f64,
    shift: f64,
    ring: Option<usize>,
    first: i64,
    len: usize,
    value: F,
) -> Result<f64> {
    let (c, r) = g.support();
    let (lo, hi) = (c + shift - r, c + shift + r);
    let xs = (lo * n).ceil() as i64..=(hi * n).floor() as i64;
    match ring {
        Some(l) => {
            let half = l as f64 / (2.0 * n);
            if hi >= half || lo < -half {
                bail!(ValidityWindow, "support [{lo:.3}, {hi:.3}] of {g} leaves the half ring ±{half:.3}");
            }
        }
        None => {
            let last = first + len as i64 - 1;
            if *xs.start() < first || *xs.end() > last {
                bail!(ValidityWindow, "support of {g} leaves the box {first}..{last}");
            }
        }
    }
    let mut sum = 0.0;
    for x in xs {
        let idx = match ring {
            Some(l) => x.rem_euclid(l as i64) as usize,
            None => (x - first) as usize,
        };
        sum += value(idx) * g.value(x as f64 / n - shift);
    }
    Ok(sum)
}

/// `N^{−1/2} Σ_x (eta_x − rho) G(x/N − t v_N)`.
pub fn field_eval_fep(eta: &FepConfig, g: &TestFunction, rho: f64, t: f64, sched: &RateSchedule) -> Result<FieldSample> {
    let shift = t * fep_frame_velocity(rho, sched)?;
    let n = sched.n_f64();
    let ring = match eta.geometry() {
        FepGeometry::Ring { len } => Some(len),
        FepGeometry::Box { .. } => None,
    };
    let s = pair_with(g, n, shift, ring, eta.first(), eta.len(), |i| {
        f64::from(u8::from(eta.get(i))) - rho
    })?;
    Ok(FieldSample {
        value: s / n.sqrt(),
        time: t,
        frame_shift: shift,
    })
}

/// `N^{−1/2} Σ_y (omega_y − alpha) G(y/N − t (1 − rho) v'_N)`.
pub fn field_eval_zr(omega: &ZrConfig, g: &TestFunction, rho: f64, t: f64, sched: &RateSchedule) -> Result<FieldSample> {
    let th = theory(rho)?;
    if !th.alpha.is_finite() {
        bail!(Domain, "zero-range density is infinite at rho = 1");
    }
    let shift = t * zr_frame_velocity(rho, sched)?;
    let n = sched.n_f64();
    let ring = match omega.geometry() {
        ZrGeometry::Ring { len } => Some(len),
        ZrGeometry::Box { .. } => None,
    };
    let sites = omega.sites();
    let s = pair_with(g, n, shift, ring, omega.first(), omega.len(), |i| sites[i] as f64 - th.alpha)?;
    Ok(FieldSample {
        value: s / n.sqrt(),
        time: t,
        frame_shift: shift,
    })
}

/// `N^{−1} Σ_x G(x/N)^2`, the Riemann sum of `‖G‖^2` over all of `Z / N`.
pub fn discrete_norm_sq(g: &TestFunction, n: f64) -> f64 {
    let (c, r) = g.support();
    (((c - r) * n).ceil() as i64..=((c + r) * n).floor() as i64)
        .map(|x| g.value(x as f64 / n).powi(2))
        .sum::<f64>()
        / n
}
