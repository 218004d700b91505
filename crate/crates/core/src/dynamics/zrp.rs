use rand::Rng;
use serde::Serialize;

use super::{
    check_t_end, exp_wait, Event, IndexSet, LoggedEvent, Observer, RateSchedule, RunOptions,
    SampleClock, Snapshot, TrajectoryLog, SNAPSHOT,
};
use crate::error::{bail, Result};
use crate::lattice::{ZrConfig, ZrGeometry};
use crate::measures::{sample_zr_geometric, theory};
use crate::seed::run_replicas;

/// Simulates the constant-rate zero-range process on a ring: every occupied site
/// sends a particle right at rate `p` and left at rate `q`.
pub fn run_zr<R: Rng + ?Sized>(
    config: ZrConfig,
    sched: &RateSchedule,
    t_end: f64,
    observers: &mut [&mut dyn Observer<ZrConfig>],
    opts: &RunOptions,
    rng: &mut R,
) -> Result<TrajectoryLog> {
    check_t_end(t_end)?;
    let ZrGeometry::Ring { len } = config.geometry() else {
        bail!(InvalidArgument, "the zero-range engine runs on a ring");
    };
    let (p, q) = (sched.p(), sched.q());
    let p_right = p / (p + q);
    let mut state = config;
    let mut occupied = IndexSet::new(len);
    for (y, &w) in state.sites().iter().enumerate() {
        occupied.set(y, w > 0);
    }
    let mut clock = SampleClock::new(observers, &opts.snapshot_times, t_end)?;
    let mut currents = vec![0i64; len];
    let mut events = opts.record_events.then(Vec::new);
    let mut snapshots = Vec::with_capacity(opts.snapshot_times.len());
    let mut n_events = 0u64;
    let mut t = 0.0;

    for obs in observers.iter_mut() {
        obs.on_start(&state);
    }
    loop {
        let n_occ = occupied.len();
        if n_occ == 0 {
            break;
        }
        t += exp_wait((p + q) * n_occ as f64, rng);
        if t > t_end {
            break;
        }
        while clock.due_before(t) {
            let (time, o, i) = clock.pop();
            dispatch(o, i, time, observers, &mut snapshots, &state);
        }
        let u = rng.gen::<f64>() * n_occ as f64;
        let k = (u as usize).min(n_occ - 1);
        let y = occupied.get(k);
        let right = (u - k as f64) < p_right;
        let (to, event) = if right {
            let to = if y + 1 == len { 0 } else { y + 1 };
            (to, Event { bond: y, direction: 1 })
        } else {
            let to = if y == 0 { len - 1 } else { y - 1 };
            (to, Event { bond: to, direction: -1 })
        };
        for obs in observers.iter_mut() {
            obs.before_event(t, &state, event);
        }
        let sites = state.sites_mut();
        sites[y] -= 1;
        sites[to] += 1;
        if sites[y] == 0 {
            occupied.remove(y);
        }
        occupied.insert(to);
        currents[event.bond] += event.direction as i64;
        n_events += 1;
        if let Some(ev) = events.as_mut() {
            ev.push(LoggedEvent {
                time: t,
                bond: event.bond as u32,
                direction: event.direction,
            });
        }
        for obs in observers.iter_mut() {
            obs.after_event(t, &state, event);
        }
    }
    for (time, o, i) in clock.drain_remaining() {
        dispatch(o, i, time, observers, &mut snapshots, &state);
    }
    for obs in observers.iter_mut() {
        obs.on_finish(t_end, &state);
    }
    Ok(TrajectoryLog {
        t_end,
        n_events,
        events,
        currents,
        snapshots,
        final_state: Snapshot::Zr(state),
    })
}

fn dispatch(
    o: usize,
    i: usize,
    time: f64,
    observers: &mut [&mut dyn Observer<ZrConfig>],
    snapshots: &mut Vec<(f64, Snapshot)>,
    state: &ZrConfig,
) {
    if o == SNAPSHOT {
        snapshots.push((time, Snapshot::Zr(state.clone())));
    } else {
        observers[o].on_sample(i, time, state);
    }
}

/// Tracks `sup_{t ≤ T} |J(t) − t·drift|` for one bond. Between crossings the centred
/// current is linear, so the supremum is attained at crossing times or at `T`.
struct SupTracker {
    bond: usize,
    drift: f64,
    current: i64,
    sup: f64,
}

impl SupTracker {
    fn touch(&mut self, t: f64) {
        self.sup = self.sup.max((self.current as f64 - t * self.drift).abs());
    }
}

impl Observer<ZrConfig> for SupTracker {
    fn before_event(&mut self, t: f64, _s: &ZrConfig, e: Event) {
        if e.bond == self.bond {
            self.touch(t);
            self.current += e.direction as i64;
            self.touch(t);
        }
    }

    fn on_finish(&mut self, t_end: f64, _s: &ZrConfig) {
        self.touch(t_end);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupCurrentEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
}

/// Monte Carlo estimate of `E[sup_{t ≤ T} J̄(t)^2]` for the bond `(−1, 0)` of a
/// stationary zero-range ring of `ring_sites` sites, where `J̄` is the current
/// centred by its mean `t N^gamma a(rho)`.
pub fn sup_current_moment(
    sched: &RateSchedule,
    rho: f64,
    t_end: f64,
    replicas: usize,
    ring_sites: usize,
    seed: u64,
) -> Result<SupCurrentEstimate> {
    if replicas < 2 {
        bail!(Domain, "need at least 2 replicas, got {replicas}");
    }
    if ring_sites < 2 {
        bail!(InvalidArgument, "ring of {ring_sites} sites is too small");
    }
    check_t_end(t_end)?;
    let a = theory(rho)?.a;
    let drift = (sched.p() - sched.q()) * a;
    let values = run_replicas(seed, replicas, |_, rng| {
        let omega = sample_zr_geometric(rho, ZrGeometry::Ring { len: ring_sites }, rng)?;
        let mut tracker = SupTracker {
            bond: ring_sites - 1,
            drift,
            current: 0,
            sup: 0.0,
        };
        run_zr(omega, sched, t_end, &mut [&mut tracker], &RunOptions::default(), rng)?;
        Ok(tracker.sup * tracker.sup)
    })?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SupCurrentEstimate {
        mean,
        stderr: (var / n).sqrt(),
        replicas,
    })
}
