use std::fmt::Write as _;

use crate::error::{bail, Result};
use crate::lattice::{FepConfig, ZrConfig};

pub const EVENTS_CSV_HEADER: &str = "time,bond,direction";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoggedEvent {
    pub time: f64,
    pub bond: u32,
    pub direction: i8,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Fep(FepConfig),
    Zr(ZrConfig),
}

impl Snapshot {
    pub fn to_text(&self) -> String {
        match self {
            Snapshot::Fep(c) => c.to_text(),
            Snapshot::Zr(c) => c.to_text(),
        }
    }

    pub fn as_fep(&self) -> Option<&FepConfig> {
        match self {
            Snapshot::Fep(c) => Some(c),
            Snapshot::Zr(_) => None,
        }
    }

    pub fn as_zr(&self) -> Option<&ZrConfig> {
        match self {
            Snapshot::Zr(c) => Some(c),
            Snapshot::Fep(_) => None,
        }
    }
}

/// Record of one trajectory: optional event list, per-bond net currents, snapshots
/// at requested times and the final state.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub t_end: f64,
    pub n_events: u64,
    pub events: Option<Vec<LoggedEvent>>,
    pub currents: Vec<i64>,
    pub snapshots: Vec<(f64, Snapshot)>,
    pub final_state: Snapshot,
}

impl TrajectoryLog {
    pub fn events_csv(&self) -> Result<String> {
        let Some(events) = &self.events else {
            bail!(Precondition, "events were not recorded for this run");
        };
        let mut s = String::with_capacity(24 * events.len() + 32);
        s.push_str(EVENTS_CSV_HEADER);
        s.push('\n');
        for e in events {
            let _ = writeln!(s, "{},{},{}", e.time, e.bond, e.direction);
        }
        Ok(s)
    }
}

/// Net signed number of crossings of `bond` during `[0, t]`.
pub fn current(log: &TrajectoryLog, bond: usize, t: f64) -> Result<i64> {
    if bond >= log.currents.len() {
        bail!(InvalidArgument, "unknown bond {bond} (log has {})", log.currents.len());
    }
    if t > log.t_end || t < 0.0 {
        bail!(InvalidArgument, "time {t} outside [0, {}]", log.t_end);
    }
    if t == log.t_end {
        return Ok(log.currents[bond]);
    }
    let Some(events) = &log.events else {
        bail!(Precondition, "intermediate currents need recorded events");
    };
    Ok(events
        .iter()
        .take_while(|e| e.time <= t)
        .filter(|e| e.bond as usize == bond)
        .map(|e| e.direction as i64)
        .sum())
}
