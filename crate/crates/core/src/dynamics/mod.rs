//! Event-driven continuous-time simulation of both processes.
//!
//! Time is macroscopic: the `N^2` scaling sits inside the rates, so a run of length
//! `t_end` covers `t_end` units of the diffusive time scale.

mod coupling;
mod fep;
mod log;
mod zrp;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

pub use coupling::{run_coupled, CoupledRun, CoupledSummary, CouplingState};
pub use fep::run_fep;
pub use log::{current, LoggedEvent, Snapshot, TrajectoryLog, EVENTS_CSV_HEADER};
pub use zrp::{run_zr, sup_current_moment, SupCurrentEstimate};

/// Asymmetry exponent; `MinusInf` switches the asymmetric part off exactly.
/// Serialized as a number or the string `"minus_inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gamma {
    Finite(f64),
    MinusInf,
}

impl Serialize for Gamma {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Gamma::Finite(g) => s.serialize_f64(*g),
            Gamma::MinusInf => s.serialize_str("minus_inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(Gamma::Finite)
                .ok_or_else(|| serde::de::Error::custom("gamma is not representable")),
            serde_json::Value::String(s) if s == "minus_inf" => Ok(Gamma::MinusInf),
            other => Err(serde::de::Error::custom(format!(
                "gamma must be a number or \"minus_inf\", got {other}"
            ))),
        }
    }
}

impl Gamma {
    /// `N^gamma`, with `N^{−∞} = 0`.
    pub fn power(self, n: f64) -> f64 {
        match self {
            Gamma::Finite(g) => n.powf(g),
            Gamma::MinusInf => 0.0,
        }
    }

    /// `N^{gamma − 1}`, with `N^{−∞} = 0`.
    pub fn drift_scale(self, n: f64) -> f64 {
        match self {
            Gamma::Finite(g) => n.powf(g - 1.0),
            Gamma::MinusInf => 0.0,
        }
    }
}

impl std::fmt::Display for Gamma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Gamma::Finite(g) => write!(f, "{g}"),
            Gamma::MinusInf => f.write_str("minus_inf"),
        }
    }
}

/// Jump rates `p = s N^2 + N^gamma` (right) and `q = s N^2` (left).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    pub s: u8,
    pub gamma: Gamma,
    #[serde(rename = "N")]
    pub n: u32,
}

impl RateSchedule {
    pub fn new(s: u8, gamma: Gamma, n: u32) -> Result<Self> {
        if s > 1 {
            bail!(InvalidArgument, "symmetric switch must be 0 or 1, got {s}");
        }
        if n == 0 {
            bail!(InvalidArgument, "scaling parameter N must be positive");
        }
        if let Gamma::Finite(g) = gamma {
            if !g.is_finite() {
                bail!(InvalidArgument, "gamma must be finite or minus_inf");
            }
        }
        let sched = Self { s, gamma, n };
        if sched.p() <= 0.0 {
            bail!(InvalidArgument, "right rate vanishes (s = 0 with gamma = minus_inf)");
        }
        Ok(sched)
    }

    pub fn symmetric(n: u32) -> Self {
        Self {
            s: 1,
            gamma: Gamma::MinusInf,
            n,
        }
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn p(&self) -> f64 {
        let n = self.n_f64();
        self.s as f64 * n * n + self.gamma.power(n)
    }

    pub fn q(&self) -> f64 {
        let n = self.n_f64();
        self.s as f64 * n * n
    }

    /// Whether `(s, gamma)` lies where the fluctuation limits are known to hold.
    pub fn in_scaling_regime(&self) -> bool {
        match (self.s, self.gamma) {
            (_, Gamma::MinusInf) => self.s == 1,
            (1, Gamma::Finite(g)) => g <= 1.5,
            (_, Gamma::Finite(g)) => g < 4.0 / 3.0,
        }
    }
}

/// A jump across bond `bond` (between sites `bond` and `bond + 1`); `direction` is
/// `+1` for a rightward particle move and `−1` for a leftward one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub bond: usize,
    pub direction: i8,
}

/// Callbacks fired during a run. Sample times are pulled once at the start; a sample
/// at time `s` sees the state in force at `s` (the chain is piecewise constant).
#[allow(unused_variables)]
pub trait Observer<S> {
    fn sample_times(&self) -> Vec<f64> {
        Vec::new()
    }
    fn on_start(&mut self, state: &S) {}
    fn on_sample(&mut self, index: usize, time: f64, state: &S) {}
    /// Called with the pre-event state at the event time.
    fn before_event(&mut self, time: f64, state: &S, event: Event) {}
    fn after_event(&mut self, time: f64, state: &S, event: Event) {}
    fn on_finish(&mut self, t_end: f64, state: &S) {}
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub record_events: bool,
    pub snapshot_times: Vec<f64>,
}

impl RunOptions {
    pub fn recording() -> Self {
        Self {
            record_events: true,
            snapshot_times: Vec::new(),
        }
    }
}

/// Merged, time-ordered sample requests of all observers plus snapshot requests.
pub(crate) struct SampleClock {
    /// (time, observer index or `usize::MAX` for a snapshot, sample index)
    queue: Vec<(f64, usize, usize)>,
    next: usize,
}

pub(crate) const SNAPSHOT: usize = usize::MAX;

impl SampleClock {
    pub(crate) fn new<S>(observers: &[&mut dyn Observer<S>], snapshots: &[f64], t_end: f64) -> Result<Self> {
        let mut queue = Vec::new();
        for (o, obs) in observers.iter().enumerate() {
            for (i, t) in obs.sample_times().into_iter().enumerate() {
                queue.push((t, o, i));
            }
        }
        for (i, &t) in snapshots.iter().enumerate() {
            queue.push((t, SNAPSHOT, i));
        }
        for &(t, _, _) in &queue {
            if !(0.0..=t_end).contains(&t) {
                bail!(InvalidArgument, "sample time {t} outside [0, {t_end}]");
            }
        }
        queue.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { queue, next: 0 })
    }

    #[inline]
    pub(crate) fn due_before(&self, t: f64) -> bool {
        self.next < self.queue.len() && self.queue[self.next].0 < t
    }

    pub(crate) fn pop(&mut self) -> (f64, usize, usize) {
        let item = self.queue[self.next];
        self.next += 1;
        item
    }

    pub(crate) fn drain_remaining(&mut self) -> Vec<(f64, usize, usize)> {
        let rest = self.queue[self.next..].to_vec();
        self.next = self.queue.len();
        rest
    }
}

/// Set of indices in `0..capacity` with O(1) insert, remove and uniform access.
#[derive(Clone, Debug)]
pub(crate) struct IndexSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl IndexSet {
    pub(crate) fn new(capacity: usize) -> Self {
        Self {
            items: Vec::with_capacity(capacity),
            pos: vec![ABSENT; capacity],
        }
    }

    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.items.len()
    }

    #[cfg(test)]
    pub(crate) fn contains(&self, i: usize) -> bool {
        self.pos[i] != ABSENT
    }

    #[inline]
    pub(crate) fn get(&self, k: usize) -> usize {
        self.items[k] as usize
    }

    #[inline]
    pub(crate) fn insert(&mut self, i: usize) {
        if self.pos[i] == ABSENT {
            self.pos[i] = self.items.len() as u32;
            self.items.push(i as u32);
        }
    }

    #[inline]
    pub(crate) fn remove(&mut self, i: usize) {
        let p = self.pos[i];
        if p != ABSENT {
            let last = self.items.pop().expect("nonempty when an element is present");
            if last as usize != i {
                self.items[p as usize] = last;
                self.pos[last as usize] = p;
            }
            self.pos[i] = ABSENT;
        }
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, member: bool) {
        if member {
            self.insert(i)
        } else {
            self.remove(i)
        }
    }

    pub(crate) fn sorted(&self) -> Vec<u32> {
        let mut v = self.items.clone();
        v.sort_unstable();
        v
    }
}

/// Exponential waiting time with the given total rate, by inversion.
#[inline]
pub(crate) fn exp_wait<R: rand::Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

pub(crate) fn check_t_end(t_end: f64) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        bail!(Domain, "t_end must be positive and finite, got {t_end}");
    }
    Ok(())
}
