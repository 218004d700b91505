use rand::Rng;
use serde::Serialize;

use super::{check_t_end, exp_wait, IndexSet, RateSchedule};
use crate::error::{bail, Result};
use crate::lattice::{ZrConfig, ZrGeometry};

/// Pair of zero-range configurations under the basic coupling at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingState {
    pub time: f64,
    pub omega: ZrConfig,
    pub xi: ZrConfig,
    pub discrepancy: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledSummary {
    pub n_events: u64,
    pub initial_discrepancy: u64,
    pub min_discrepancy: u64,
    pub max_discrepancy: u64,
    /// Whether the discrepancy never increased along the run.
    pub non_increasing: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledRun {
    pub summary: CoupledSummary,
    pub samples: Vec<CouplingState>,
    /// Net bond currents of the `omega` marginal.
    pub omega_currents: Vec<i64>,
    pub final_state: CouplingState,
}

fn discrepancy(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum()
}

/// Runs two zero-range rings with shared clocks: a clock ring at site `y` moves one
/// particle in the same direction in every configuration that has a particle at `y`.
pub fn run_coupled<R: Rng + ?Sized>(
    omega0: ZrConfig,
    xi0: ZrConfig,
    sched: &RateSchedule,
    t_end: f64,
    sample_times: &[f64],
    rng: &mut R,
) -> Result<CoupledRun> {
    check_t_end(t_end)?;
    let ZrGeometry::Ring { len } = omega0.geometry() else {
        bail!(InvalidArgument, "the coupled engine runs on a ring");
    };
    if xi0.geometry() != omega0.geometry() {
        bail!(InvalidArgument, "coupled configurations live on different geometries");
    }
    if sample_times.iter().any(|t| !(0.0..=t_end).contains(t)) || !sample_times.is_sorted() {
        bail!(InvalidArgument, "sample times must be sorted and inside [0, t_end]");
    }
    let (p, q) = (sched.p(), sched.q());
    let p_right = p / (p + q);
    let (mut omega, mut xi) = (omega0, xi0);
    let mut union = IndexSet::new(len);
    for y in 0..len {
        union.set(y, omega.sites()[y] > 0 || xi.sites()[y] > 0);
    }
    let initial = discrepancy(omega.sites(), xi.sites());
    let mut disc = initial;
    let mut summary = CoupledSummary {
        n_events: 0,
        initial_discrepancy: initial,
        min_discrepancy: initial,
        max_discrepancy: initial,
        non_increasing: true,
    };
    let mut omega_currents = vec![0i64; len];
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    let mut t = 0.0;
    loop {
        let n = union.len();
        if n == 0 {
            break;
        }
        t += exp_wait((p + q) * n as f64, rng);
        if t > t_end {
            break;
        }
        while next_sample < sample_times.len() && sample_times[next_sample] < t {
            samples.push(CouplingState {
                time: sample_times[next_sample],
                omega: omega.clone(),
                xi: xi.clone(),
                discrepancy: disc,
            });
            next_sample += 1;
        }
        let u = rng.gen::<f64>() * n as f64;
        let k = (u as usize).min(n - 1);
        let y = union.get(k);
        let right = (u - k as f64) < p_right;
        let to = match (right, y) {
            (true, y) if y + 1 == len => 0,
            (true, y) => y + 1,
            (false, 0) => len - 1,
            (false, y) => y - 1,
        };
        let before = omega.sites()[y].abs_diff(xi.sites()[y]) + omega.sites()[to].abs_diff(xi.sites()[to]);
        if omega.sites()[y] > 0 {
            let s = omega.sites_mut();
            s[y] -= 1;
            s[to] += 1;
            if right {
                omega_currents[y] += 1;
            } else {
                omega_currents[to] -= 1;
            }
        }
        let s = xi.sites_mut();
        if s[y] > 0 {
            s[y] -= 1;
            s[to] += 1;
        }
        let after = omega.sites()[y].abs_diff(xi.sites()[y]) + omega.sites()[to].abs_diff(xi.sites()[to]);
        let new_disc = disc - before + after;
        if new_disc > disc {
            summary.non_increasing = false;
        }
        disc = new_disc;
        summary.min_discrepancy = summary.min_discrepancy.min(disc);
        summary.max_discrepancy = summary.max_discrepancy.max(disc);
        union.set(y, omega.sites()[y] > 0 || xi.sites()[y] > 0);
        union.insert(to);
        summary.n_events += 1;
    }
    let final_state = CouplingState {
        time: t_end,
        omega,
        xi,
        discrepancy: disc,
    };
    for &time in &sample_times[next_sample..] {
        samples.push(CouplingState { time, ..final_state.clone() });
    }
    debug_assert_eq!(disc, discrepancy(final_state.omega.sites(), final_state.xi.sites()));
    Ok(CoupledRun {
        summary,
        samples,
        omega_currents,
        final_state,
    })
}
