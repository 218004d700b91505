use serde::Serialize;

use super::{
    check_validity, covariance_estimate, fep_frame_velocity, field_eval_fep, inner_product, mean_estimate,
    she_covariance, BgFunctional, Estimate, FieldRecorder, LocalFunction, QuadraticVariation, TestFunction,
};
use crate::dynamics::{run_fep, RateSchedule, RunOptions};
use crate::error::{bail, Result};
use crate::measures::{sample_grand_ring, sample_window_grand, theory};
use crate::seed::run_replicas;

pub const COVARIANCE_CSV_HEADER: &str = "rho,N,gamma,s_switch,s_time,t_time,G,H,estimate,stderr,prediction";

/// Variance of `Y_0(G)` over exact grand-canonical window samples.
pub fn static_variance(rho: f64, g: &TestFunction, n: u32, replicas: usize, seed: u64) -> Result<Estimate> {
    let sched = RateSchedule::symmetric(n);
    let (c, r) = g.support();
    let m = ((c.abs() + r) * n as f64).ceil() as usize + 1;
    let values = run_replicas(seed, replicas, |_, rng| {
        let w = sample_window_grand(rho, m, rng)?;
        Ok(field_eval_fep(&w.config, g, rho, 0.0, &sched)?.value)
    })?;
    covariance_estimate(&values, &values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicCovariance {
    pub estimate: Estimate,
    pub prediction: f64,
    pub events_per_replica: f64,
}

/// `E[Y_s(G) Y_t(H)]` from stationary ring starts, with fields in the moving frame.
///
/// The prediction is `chi ⟨T_{t−s} G, H⟩` when the symmetric part is on and
/// `chi ⟨G, H⟩` otherwise, where the noise is integrated in time and the diffusive
/// smoothing is absent at this scale.
#[allow(clippy::too_many_arguments)]
pub fn dynamic_covariance(
    rho: f64,
    sched: &RateSchedule,
    len: usize,
    g: &TestFunction,
    h: &TestFunction,
    s_time: f64,
    t_time: f64,
    replicas: usize,
    seed: u64,
) -> Result<DynamicCovariance> {
    if !(0.0 <= s_time && s_time <= t_time) {
        bail!(InvalidArgument, "need 0 <= s_time <= t_time, got {s_time}, {t_time}");
    }
    let th = theory(rho)?;
    let v = fep_frame_velocity(rho, sched)?;
    for f in [g, h] {
        check_validity(f, len, sched.n_f64(), th.d, t_time, v)?;
    }
    let runs = run_replicas(seed, replicas, |_, rng| {
        let eta = sample_grand_ring(len, rho, rng)?;
        let mut rec = FieldRecorder::new(rho, *sched, vec![s_time, t_time], vec![g.clone(), h.clone()], vec![]);
        let log = run_fep(eta, sched, t_time.max(f64::MIN_POSITIVE), &mut [&mut rec], &RunOptions::default(), rng)?;
        let v = rec.finish()?;
        Ok((v[0][0], v[1][1], log.n_events))
    })?;
    let xs: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let prediction = if sched.s == 1 {
        she_covariance(rho, g, h, t_time - s_time)?.value
    } else {
        th.chi * inner_product(g, h)
    };
    Ok(DynamicCovariance {
        estimate: covariance_estimate(&xs, &ys)?,
        prediction,
        events_per_replica: runs.iter().map(|r| r.2 as f64).sum::<f64>() / replicas as f64,
    })
}

/// Stationary mean of `QV(t) / t`.
pub fn qv_rate(
    rho: f64,
    sched: &RateSchedule,
    len: usize,
    g: &TestFunction,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    let rates = run_replicas(seed, replicas, |_, rng| {
        let eta = sample_grand_ring(len, rho, rng)?;
        let mut qv = QuadraticVariation::new(g, len, sched, vec![])?;
        run_fep(eta, sched, t, &mut [&mut qv], &RunOptions::default(), rng)?;
        Ok(qv.total / t)
    })?;
    mean_estimate(&rates)
}

/// Second moment of the Boltzmann–Gibbs functional of `psi` up to time `t`.
#[allow(clippy::too_many_arguments)]
pub fn bg_second_moment(
    rho: f64,
    sched: &RateSchedule,
    len: usize,
    g: &TestFunction,
    psi: &LocalFunction,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    let squares = run_replicas(seed, replicas, |_, rng| {
        let eta = sample_grand_ring(len, rho, rng)?;
        let mut bg = BgFunctional::new(psi.clone(), g, rho, len, sched.n_f64())?;
        run_fep(eta, sched, t, &mut [&mut bg], &RunOptions::default(), rng)?;
        Ok(bg.total * bg.total)
    })?;
    mean_estimate(&squares)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Gamma;

    fn gauss() -> TestFunction {
        TestFunction::gaussian(0.0, 1.0).unwrap()
    }

    #[test]
    fn fixed_time_covariance_is_static() {
        let sched = RateSchedule::symmetric(16);
        let res = dynamic_covariance(0.75, &sched, 24 * 16, &gauss(), &gauss(), 0.0, 0.0, 400, 1).unwrap();
        let chi = theory(0.75).unwrap().chi;
        let expected = chi * std::f64::consts::PI.sqrt();
        assert!((res.prediction - expected).abs() < 1e-12);
        assert!((res.estimate.estimate - expected).abs() < 3.0 * res.estimate.stderr, "{res:?}");
    }

    #[test]
    fn static_variance_converges() {
        let est = static_variance(0.75, &gauss(), 64, 2000, 2).unwrap();
        let expected = theory(0.75).unwrap().chi * std::f64::consts::PI.sqrt();
        assert!((est.estimate - expected).abs() < 3.0 * est.stderr + 0.02 * expected, "{est:?}");
    }

    #[test]
    fn validity_is_enforced() {
        let sched = RateSchedule::symmetric(16);
        let err = dynamic_covariance(0.75, &sched, 16 * 16, &gauss(), &gauss(), 0.0, 0.05, 40, 1);
        assert!(matches!(err, Err(crate::FepError::ValidityWindow(_))));
        let asym = RateSchedule::new(0, Gamma::Finite(1.0), 16).unwrap();
        assert!(dynamic_covariance(0.75, &asym, 24 * 16, &gauss(), &gauss(), 0.1, 0.0, 40, 1).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let sched = RateSchedule::symmetric(8);
        let a = qv_rate(0.75, &sched, 160, &gauss(), 0.05, 8, 7).unwrap();
        let b = qv_rate(0.75, &sched, 160, &gauss(), 0.05, 8, 7).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        let psi = LocalFunction::h(0.75).unwrap();
        let m = bg_second_moment(0.75, &sched, 160, &gauss(), &psi, 0.05, 8, 7).unwrap();
        assert!(m.estimate > 0.0);
    }
}
