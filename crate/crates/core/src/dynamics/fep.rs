use rand::Rng;

use super::{
    check_t_end, exp_wait, Event, IndexSet, LoggedEvent, Observer, RateSchedule, RunOptions,
    SampleClock, Snapshot, TrajectoryLog, SNAPSHOT,
};
use crate::error::{bail, Result};
use crate::lattice::{FepConfig, FepGeometry};

/// Right (`c_{y,y+1}`) and left (`c_{y+1,y}`) constraints at edge `y` of a ring.
#[inline]
fn edge_rates(occ: &[u8], y: usize) -> (bool, bool) {
    let len = occ.len();
    let at = |d: usize| occ[(y + d) % len];
    let (m1, e0, e1, e2) = (at(len - 1), at(0), at(1), at(2));
    (m1 & e0 & !e1 & 1 == 1, !e0 & e1 & e2 & 1 == 1)
}

pub(crate) struct ActiveSets {
    pub(crate) right: IndexSet,
    pub(crate) left: IndexSet,
}

impl ActiveSets {
    pub(crate) fn build(occ: &[u8]) -> Self {
        let len = occ.len();
        let mut right = IndexSet::new(len);
        let mut left = IndexSet::new(len);
        for y in 0..len {
            let (r, l) = edge_rates(occ, y);
            right.set(y, r);
            left.set(y, l);
        }
        Self { right, left }
    }

    /// Refreshes the edges `x − 2, …, x + 2`, whose constraints read sites `x` or `x + 1`.
    #[inline]
    fn refresh(&mut self, occ: &[u8], x: usize) {
        let len = occ.len();
        let mut w = [0u8; 8];
        let mut i = (x + len - 3) % len;
        for v in w.iter_mut() {
            *v = occ[i];
            i += 1;
            if i == len {
                i = 0;
            }
        }
        let mut y = (x + len - 2) % len;
        for d in 1..6 {
            let (m1, e0, e1, e2) = (w[d - 1], w[d], w[d + 1], w[d + 2]);
            self.right.set(y, m1 & e0 & !e1 & 1 == 1);
            self.left.set(y, !e0 & e1 & e2 & 1 == 1);
            y += 1;
            if y == len {
                y = 0;
            }
        }
    }

    fn matches(&self, other: &ActiveSets) -> bool {
        self.right.sorted() == other.right.sorted() && self.left.sorted() == other.left.sorted()
    }
}

/// Simulates the exclusion process on a ring from an ergodic configuration up to
/// macroscopic time `t_end`.
pub fn run_fep<R: Rng + ?Sized>(
    config: FepConfig,
    sched: &RateSchedule,
    t_end: f64,
    observers: &mut [&mut dyn Observer<FepConfig>],
    opts: &RunOptions,
    rng: &mut R,
) -> Result<TrajectoryLog> {
    check_t_end(t_end)?;
    let FepGeometry::Ring { len } = config.geometry() else {
        bail!(InvalidArgument, "the exclusion engine runs on a ring");
    };
    if !config.is_ergodic() {
        bail!(Precondition, "initial configuration is not ergodic");
    }
    let (p, q) = (sched.p(), sched.q());
    let mut state = config;
    let mut occ = state.occupations();
    let mut sets = ActiveSets::build(&occ);
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
        let n_right = sets.right.len();
        let total = p * n_right as f64 + q * sets.left.len() as f64;
        if total <= 0.0 {
            break;
        }
        t += exp_wait(total, rng);
        if t > t_end {
            break;
        }
        while clock.due_before(t) {
            fire(&mut clock, observers, &mut snapshots, &state);
        }
        let r = rng.gen::<f64>() * total;
        let right_mass = p * n_right as f64;
        let event = if r < right_mass {
            let k = ((r / p) as usize).min(n_right - 1);
            Event {
                bond: sets.right.get(k),
                direction: 1,
            }
        } else {
            let n_left = sets.left.len();
            let k = (((r - right_mass) / q) as usize).min(n_left - 1);
            Event {
                bond: sets.left.get(k),
                direction: -1,
            }
        };
        for obs in observers.iter_mut() {
            obs.before_event(t, &state, event);
        }
        let x = event.bond;
        let y = if x + 1 == len { 0 } else { x + 1 };
        occ.swap(x, y);
        state.set(x, occ[x] == 1);
        state.set(y, occ[y] == 1);
        sets.refresh(&occ, x);
        currents[x] += event.direction as i64;
        n_events += 1;
        if let Some(ev) = events.as_mut() {
            ev.push(LoggedEvent {
                time: t,
                bond: x as u32,
                direction: event.direction,
            });
        }
        for obs in observers.iter_mut() {
            obs.after_event(t, &state, event);
        }
        if cfg!(debug_assertions) && n_events.is_multiple_of(1 << 16) {
            assert!(
                sets.matches(&ActiveSets::build(&occ)),
                "incremental active sets diverged after {n_events} events"
            );
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
        final_state: Snapshot::Fep(state),
    })
}

fn fire(
    clock: &mut SampleClock,
    observers: &mut [&mut dyn Observer<FepConfig>],
    snapshots: &mut Vec<(f64, Snapshot)>,
    state: &FepConfig,
) {
    let (time, o, i) = clock.pop();
    dispatch(o, i, time, observers, snapshots, state);
}

fn dispatch(
    o: usize,
    i: usize,
    time: f64,
    observers: &mut [&mut dyn Observer<FepConfig>],
    snapshots: &mut Vec<(f64, Snapshot)>,
    state: &FepConfig,
) {
    if o == SNAPSHOT {
        snapshots.push((time, Snapshot::Fep(state.clone())));
    } else {
        observers[o].on_sample(i, time, state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{current, Gamma};
    use crate::lattice::Classification;
    use crate::measures::sample_canonical_ring;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn alternating_ring_never_moves() {
        let c = FepConfig::ring(&[0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let log = run_fep(
            c.clone(),
            &RateSchedule::symmetric(16),
            1.0,
            &mut [],
            &RunOptions::recording(),
            &mut rng(1),
        )
        .unwrap();
        assert_eq!(log.n_events, 0);
        assert!(log.events.unwrap().is_empty());
        assert_eq!(log.final_state, Snapshot::Fep(c));
    }

    #[test]
    fn rejects_bad_input() {
        let sched = RateSchedule::symmetric(4);
        let transient = FepConfig::ring(&[1, 1, 0, 0, 1, 1]).unwrap();
        assert!(matches!(
            run_fep(transient, &sched, 1.0, &mut [], &RunOptions::default(), &mut rng(0)),
            Err(crate::FepError::Precondition(_))
        ));
        let c = FepConfig::ring(&[1, 1, 0, 1]).unwrap();
        assert!(matches!(
            run_fep(c, &sched, 0.0, &mut [], &RunOptions::default(), &mut rng(0)),
            Err(crate::FepError::Domain(_))
        ));
    }

    struct Checker {
        particles: usize,
        events: u64,
    }

    impl Observer<FepConfig> for Checker {
        fn after_event(&mut self, _t: f64, s: &FepConfig, _e: Event) {
            self.events += 1;
            assert_eq!(s.particles(), self.particles);
            if self.events.is_multiple_of(97) {
                assert_eq!(s.classify().unwrap(), Classification::Ergodic);
            }
        }
    }

    #[test]
    fn conservation_and_closure() {
        let mut r = rng(2);
        let c = sample_canonical_ring(200, 150, &mut r).unwrap();
        let mut chk = Checker {
            particles: 150,
            events: 0,
        };
        let sched = RateSchedule::new(1, Gamma::Finite(1.0), 16).unwrap();
        let log = run_fep(c, &sched, 2.0, &mut [&mut chk], &RunOptions::recording(), &mut r).unwrap();
        assert_eq!(chk.events, log.n_events);
        assert!(log.n_events > 10_000);
        let events = log.events.as_ref().unwrap();
        assert!(events.windows(2).all(|w| w[0].time < w[1].time));
        for b in [0, 17, 199] {
            let direct: i64 = events
                .iter()
                .filter(|e| e.bond == b as u32)
                .map(|e| e.direction as i64)
                .sum();
            assert_eq!(current(&log, b, 2.0).unwrap(), direct);
        }
    }

    #[test]
    fn mean_event_count_matches_conductivity() {
        // E(#events) = t · 2N² · L · sigma(rho) in the symmetric case
        let (n, len, t) = (64u32, 256usize, 0.05);
        let sched = RateSchedule::symmetric(n);
        let mut r = rng(3);
        let counts: Vec<f64> = (0..60)
            .map(|_| {
                let c = crate::measures::sample_grand_ring(len, 0.75, &mut r).unwrap();
                run_fep(c, &sched, t, &mut [], &RunOptions::default(), &mut r)
                    .unwrap()
                    .n_events as f64
            })
            .collect();
        let m = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / m;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let expected = t * 2.0 * (n as f64).powi(2) * len as f64 / 6.0;
        assert!((mean - expected).abs() < 3.0 * (var / m).sqrt(), "{mean} vs {expected}");
    }

    /// Samples the state at fixed times.
    struct Recorder {
        times: Vec<f64>,
        seen: Vec<Vec<u8>>,
    }

    impl Observer<FepConfig> for Recorder {
        fn sample_times(&self) -> Vec<f64> {
            self.times.clone()
        }
        fn on_sample(&mut self, i: usize, _t: f64, s: &FepConfig) {
            assert_eq!(i, self.seen.len());
            self.seen.push(s.occupations());
        }
    }

    #[test]
    fn samples_and_snapshots_see_state_at_requested_time() {
        let mut r = rng(4);
        let c = sample_canonical_ring(40, 28, &mut r).unwrap();
        let mut rec = Recorder {
            times: vec![0.0, 0.01, 0.02, 0.05],
            seen: Vec::new(),
        };
        let opts = RunOptions {
            record_events: true,
            snapshot_times: vec![0.02, 0.05],
        };
        let log = run_fep(c.clone(), &RateSchedule::symmetric(8), 0.05, &mut [&mut rec], &opts, &mut r).unwrap();
        assert_eq!(rec.seen.len(), 4);
        assert_eq!(rec.seen[0], c.occupations());
        // replay events up to each time
        let events = log.events.unwrap();
        for (k, &s) in rec.times.iter().enumerate() {
            let mut cur = c.clone();
            for e in events.iter().take_while(|e| e.time <= s) {
                cur.swap_in_place(e.bond as i64).unwrap();
            }
            assert_eq!(rec.seen[k], cur.occupations());
        }
        assert_eq!(log.snapshots[1].1, log.final_state);
        assert_eq!(log.snapshots[0].1.as_fep().unwrap().occupations(), rec.seen[2]);
    }

    #[test]
    fn deterministic_given_seed() {
        let c = sample_canonical_ring(64, 45, &mut rng(5)).unwrap();
        let sched = RateSchedule::new(1, Gamma::Finite(1.2), 8).unwrap();
        let a = run_fep(c.clone(), &sched, 0.3, &mut [], &RunOptions::recording(), &mut rng(6)).unwrap();
        let b = run_fep(c, &sched, 0.3, &mut [], &RunOptions::recording(), &mut rng(6)).unwrap();
        assert_eq!(a.events_csv().unwrap(), b.events_csv().unwrap());
    }

    /// Counts, per configuration, the time spent there and the jumps out of it.
    struct GeneratorTally {
        last_t: f64,
        holding: HashMap<Vec<u8>, f64>,
        jumps: HashMap<(Vec<u8>, usize, i8), f64>,
    }

    impl Observer<FepConfig> for GeneratorTally {
        fn before_event(&mut self, t: f64, s: &FepConfig, e: Event) {
            let key = s.occupations();
            *self.holding.entry(key.clone()).or_default() += t - self.last_t;
            *self.jumps.entry((key, e.bond, e.direction)).or_default() += 1.0;
            self.last_t = t;
        }
        fn on_finish(&mut self, t_end: f64, s: &FepConfig) {
            *self.holding.entry(s.occupations()).or_default() += t_end - self.last_t;
        }
    }

    #[test]
    fn empirical_generator_matches_rate_table() {
        let sched = RateSchedule::new(1, Gamma::Finite(1.0), 2).unwrap();
        let (p, q) = (sched.p(), sched.q());
        let c = FepConfig::ring(&[1, 1, 0, 1, 1, 0]).unwrap();
        let mut tally = GeneratorTally {
            last_t: 0.0,
            holding: HashMap::new(),
            jumps: HashMap::new(),
        };
        run_fep(c, &sched, 20_000.0, &mut [&mut tally], &RunOptions::default(), &mut rng(7)).unwrap();
        assert!(tally.holding.len() > 5);
        for (cfg, &time) in &tally.holding {
            let fc = FepConfig::ring(cfg).unwrap();
            for x in 0..6 {
                let (cr, cl) = fc.jump_rates(x as i64).unwrap();
                for (dir, rate) in [(1i8, p * cr as f64), (-1, q * cl as f64)] {
                    let n = tally.jumps.get(&(cfg.clone(), x, dir)).copied().unwrap_or(0.0);
                    if rate == 0.0 {
                        assert_eq!(n, 0.0);
                    } else {
                        let expected = rate * time;
                        assert!((n - expected).abs() < 4.0 * expected.sqrt() + 1.0, "{cfg:?} {x} {dir}");
                    }
                }
            }
        }
    }
}
