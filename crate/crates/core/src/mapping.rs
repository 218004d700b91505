//! Bijection between ergodic exclusion configurations and zero-range configurations
//! with a tagged empty site, and pathwise replay of the dynamic correspondence.
//!
//! Empty sites are labelled in order, label 0 being the first empty site at or left
//! of the origin; `omega_y = X_{y+1} − X_y − 2` counts the particles between
//! consecutive empty sites beyond the first one. On a ring labels run `0..K` to the
//! right of `X_0` and gaps wrap around.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::{Snapshot, TrajectoryLog};
use crate::error::{bail, Result};
use crate::lattice::{FepConfig, FepGeometry, ZrConfig, ZrGeometry};
use crate::measures::{check_density, geometric, sample_window_grand, sample_zr_distorted, theory, window_prob};

/// A zero-range configuration with the position of the tagged empty site `X_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedState {
    pub omega: ZrConfig,
    pub x0: i64,
}

impl TaggedState {
    /// Checks `−omega_0 − 1 ≤ x0 ≤ 0` (box) or `(−x0) mod L ≤ omega_0 + 1` (ring).
    pub fn validate(&self) -> Result<()> {
        let Some(w0) = self.omega.get(0) else {
            bail!(InvalidArgument, "zero-range configuration has no site 0");
        };
        match self.omega.geometry() {
            ZrGeometry::Box { .. } => {
                if self.x0 > 0 || self.x0 < -(w0 as i64) - 1 {
                    bail!(InvalidArgument, "x0 = {} outside [-omega_0 - 1, 0] with omega_0 = {w0}", self.x0);
                }
            }
            ZrGeometry::Ring { len } => {
                if len < 2 {
                    bail!(InvalidArgument, "ring states need at least two empty sites");
                }
                let l = self.ring_len() as i64;
                if !(0..l).contains(&self.x0) {
                    bail!(InvalidArgument, "ring x0 = {} outside 0..{l}", self.x0);
                }
                if (-self.x0).rem_euclid(l) > w0 as i64 + 1 {
                    bail!(InvalidArgument, "origin is not in the cluster following x0 = {}", self.x0);
                }
            }
        }
        Ok(())
    }

    /// Length of the exclusion ring encoded by a ring state: `Σ (omega_y + 2)`.
    pub fn ring_len(&self) -> usize {
        self.omega.sites().iter().map(|&w| w as usize + 2).sum()
    }

    /// State of the configuration translated one site to the right.
    ///
    /// If the origin was not the tagged empty site, labels are kept and `x0` moves by
    /// one. If it was, the next empty site to the left becomes the tagged one and the
    /// labels shift: `omega'_y = omega_{y−1}`.
    pub fn translate_right(&self) -> Result<TaggedState> {
        self.validate()?;
        match self.omega.geometry() {
            ZrGeometry::Box { first, .. } => {
                if self.x0 < 0 {
                    return Ok(TaggedState {
                        omega: self.omega.clone(),
                        x0: self.x0 + 1,
                    });
                }
                let Some(w_left) = self.omega.get(-1) else {
                    bail!(InsufficientWindow, "label -1 is needed to translate past the tagged site");
                };
                Ok(TaggedState {
                    omega: ZrConfig::boxed(first + 1, self.omega.sites().to_vec())?,
                    x0: -(w_left as i64) - 1,
                })
            }
            ZrGeometry::Ring { len: k } => {
                let l = self.ring_len() as i64;
                if self.x0 != 0 {
                    return Ok(TaggedState {
                        omega: self.omega.clone(),
                        x0: (self.x0 + 1) % l,
                    });
                }
                let w = self.omega.sites();
                let rotated: Vec<u64> = (0..k).map(|y| w[(y + k - 1) % k]).collect();
                let x_left = l - (w[k - 1] as i64 + 2);
                Ok(TaggedState {
                    omega: ZrConfig::ring(rotated)?,
                    x0: (x_left + 1) % l,
                })
            }
        }
    }
}

fn empty_positions(eta: &FepConfig) -> Vec<i64> {
    let first = eta.first();
    (0..eta.len())
        .filter(|&i| !eta.get(i))
        .map(|i| first + i as i64)
        .collect()
}

/// Maps an ergodic configuration to its zero-range configuration and tagged site.
pub fn map_forward(eta: &FepConfig) -> Result<TaggedState> {
    if !eta.is_ergodic() {
        bail!(Precondition, "configuration is not ergodic");
    }
    let empties = empty_positions(eta);
    match eta.geometry() {
        FepGeometry::Ring { len } => {
            let k = empties.len();
            if k < 2 {
                bail!(InsufficientWindow, "a ring state needs at least two empty sites, found {k}");
            }
            // empties are sorted in 0..len; the tagged one is the last at or left of 0
            let start = if empties[0] == 0 { 0 } else { k - 1 };
            let x0 = empties[start];
            let omega = (0..k)
                .map(|y| {
                    let a = empties[(start + y) % k];
                    let b = empties[(start + y + 1) % k];
                    ((b - a).rem_euclid(len as i64) - 2) as u64
                })
                .collect();
            Ok(TaggedState {
                omega: ZrConfig::ring(omega)?,
                x0,
            })
        }
        FepGeometry::Box { .. } => {
            if empties.len() < 2 {
                bail!(InsufficientWindow, "fewer than two empty sites in the box");
            }
            let Some(tag) = empties.iter().rposition(|&x| x <= 0) else {
                bail!(InsufficientWindow, "no empty site at or left of the origin");
            };
            if tag + 1 == empties.len() {
                bail!(InsufficientWindow, "no empty site right of the origin");
            }
            let omega = empties.windows(2).map(|w| (w[1] - w[0] - 2) as u64).collect();
            Ok(TaggedState {
                omega: ZrConfig::boxed(-(tag as i64), omega)?,
                x0: empties[tag],
            })
        }
    }
}

/// Rebuilds the exclusion configuration. On a box, `extent = (first, last)` must lie
/// between the outermost empty sites fixed by the state; rings ignore `extent`.
pub fn map_backward(state: &TaggedState, extent: Option<(i64, i64)>) -> Result<FepConfig> {
    state.validate()?;
    match state.omega.geometry() {
        ZrGeometry::Ring { len: k } => {
            let l = state.ring_len();
            let mut sites = vec![1u8; l];
            let mut x = state.x0;
            for y in 0..k {
                sites[x.rem_euclid(l as i64) as usize] = 0;
                x += state.omega.sites()[y] as i64 + 2;
            }
            FepConfig::ring(&sites)
        }
        ZrGeometry::Box { first, last } => {
            // X_y for y = first ..= last + 1
            let w = state.omega.sites();
            let mut xs = vec![0i64; (last - first + 2) as usize];
            let zero = (-first) as usize;
            xs[zero] = state.x0;
            for i in zero..w.len() {
                xs[i + 1] = xs[i] + w[i] as i64 + 2;
            }
            for i in (0..zero).rev() {
                xs[i] = xs[i + 1] - w[i] as i64 - 2;
            }
            let (lo, hi) = (xs[0], xs[xs.len() - 1]);
            let (a, b) = extent.unwrap_or((lo, hi));
            if a > b || a < lo || b > hi {
                bail!(InsufficientWindow, "extent {a}..{b} not determined by empty sites {lo}..{hi}");
            }
            let mut sites = vec![1u8; (b - a + 1) as usize];
            for &x in &xs {
                if (a..=b).contains(&x) {
                    sites[(x - a) as usize] = 0;
                }
            }
            FepConfig::boxed(a, &sites, None, None)
        }
    }
}

/// Outcome of replaying an exclusion trajectory through the mapping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapReport {
    pub pass: bool,
    pub first_violation: Option<u64>,
    pub checks: MapChecks,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapChecks {
    /// Every logged swap was an allowed exclusion move.
    pub fep_moves_legal: bool,
    /// Every swap moved exactly one labelled empty site by one step, inducing a
    /// zero-range jump from an occupied site.
    pub single_zr_move: bool,
    /// Gaps between labelled empty sites equal the independently evolved zero-range
    /// configuration, and re-mapping the replayed configuration agrees up to labels.
    pub labels_match: bool,
    /// `X_0(t) = −J_{−1,0}(t) + X_0(0)` after every event.
    pub tagged_identity: bool,
    /// The replayed final configuration equals the logged one.
    pub final_state_matches: bool,
}

impl MapReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}

/// Tracks labelled empty sites of a ring configuration along a replay.
struct LabelTracker {
    len: usize,
    occ: Vec<u8>,
    /// unwrapped position of every label
    pos: Vec<i64>,
    /// label of the empty site at each ring site, `u32::MAX` for particles
    label_at: Vec<u32>,
}

const NO_LABEL: u32 = u32::MAX;

impl LabelTracker {
    fn new(eta: &FepConfig, state: &TaggedState) -> Self {
        let len = eta.len();
        let k = state.omega.len();
        let mut pos = Vec::with_capacity(k);
        let mut label_at = vec![NO_LABEL; len];
        let mut x = state.x0;
        for y in 0..k {
            pos.push(x);
            label_at[x.rem_euclid(len as i64) as usize] = y as u32;
            x += state.omega.sites()[y] as i64 + 2;
        }
        Self {
            len,
            occ: eta.occupations(),
            pos,
            label_at,
        }
    }

    fn site(&self, x: i64) -> u8 {
        self.occ[x.rem_euclid(self.len as i64) as usize]
    }

    fn gap(&self, y: usize) -> i64 {
        let k = self.pos.len();
        let next = if y + 1 == k { self.pos[0] + self.len as i64 } else { self.pos[y + 1] };
        next - self.pos[y] - 2
    }
}

/// Replays an exclusion trajectory on a ring and checks, event by event, that it
/// drives the mapped zero-range process and the tagged-site identity exactly.
pub fn verify_dynamic(log: &TrajectoryLog, eta0: &FepConfig) -> Result<MapReport> {
    let FepGeometry::Ring { len } = eta0.geometry() else {
        bail!(InvalidArgument, "replay needs a ring configuration");
    };
    if log.currents.len() != len {
        bail!(InvalidArgument, "log has {} bonds but the ring has {len} sites", log.currents.len());
    }
    let Some(events) = &log.events else {
        bail!(InvalidArgument, "log carries no event list");
    };
    let state0 = map_forward(eta0)?;
    let k = state0.omega.len();
    let mut tracker = LabelTracker::new(eta0, &state0);
    let mut omega = state0.omega.clone();
    let x0_start = state0.x0;
    let mut j_tag = 0i64;
    let mut checks = MapChecks {
        fep_moves_legal: true,
        single_zr_move: true,
        labels_match: true,
        tagged_identity: true,
        final_state_matches: true,
    };
    let mut first_violation = None;
    let mut fail = |flag: &mut bool, idx: u64| {
        *flag = false;
        first_violation.get_or_insert(idx);
    };
    let l = len as i64;
    for (idx, e) in events.iter().enumerate() {
        let idx = idx as u64;
        let x = e.bond as i64;
        if e.bond as usize >= len || (e.direction != 1 && e.direction != -1) {
            fail(&mut checks.fep_moves_legal, idx);
            break;
        }
        let s = |d: i64| tracker.site(x + d);
        let legal = match e.direction {
            1 => s(-1) == 1 && s(0) == 1 && s(1) == 0,
            _ => s(0) == 0 && s(1) == 1 && s(2) == 1,
        };
        if !legal {
            fail(&mut checks.fep_moves_legal, idx);
            break;
        }
        // the empty site that moves, and where it goes
        let (from, to) = if e.direction == 1 { (x + 1, x) } else { (x, x + 1) };
        let from_i = from.rem_euclid(l) as usize;
        let to_i = to.rem_euclid(l) as usize;
        let y = tracker.label_at[from_i];
        if y == NO_LABEL || tracker.label_at[to_i] != NO_LABEL {
            fail(&mut checks.single_zr_move, idx);
            break;
        }
        let y = y as usize;
        tracker.occ.swap(from_i, to_i);
        tracker.label_at[from_i] = NO_LABEL;
        tracker.label_at[to_i] = y as u32;
        tracker.pos[y] += (to - from).signum();
        // induced zero-range jump across the bond between labels y − 1 and y
        let left = (y + k - 1) % k;
        let (src, dst) = if e.direction == 1 { (left, y) } else { (y, left) };
        if omega.sites()[src] == 0 {
            fail(&mut checks.single_zr_move, idx);
            break;
        }
        let w = omega.sites_mut();
        w[src] -= 1;
        w[dst] += 1;
        if y == 0 {
            j_tag += e.direction as i64;
        }
        if tracker.gap(left) != omega.sites()[left] as i64 || tracker.gap(y) != omega.sites()[y] as i64 {
            fail(&mut checks.labels_match, idx);
        }
        // neighbours keep their order: both adjacent gaps stay nonnegative
        if tracker.gap(left) < 0 || tracker.gap(y) < 0 {
            fail(&mut checks.single_zr_move, idx);
        }
        if tracker.pos[0] != x0_start - j_tag {
            fail(&mut checks.tagged_identity, idx);
        }
        if ((idx + 1).is_multiple_of(4096) || idx + 1 == events.len() as u64)
            && !remap_agrees(&tracker, &omega)? {
                fail(&mut checks.labels_match, idx);
            }
    }
    let replayed = FepConfig::ring(&tracker.occ)?;
    if log.final_state != Snapshot::Fep(replayed) {
        checks.final_state_matches = false;
        first_violation.get_or_insert(events.len() as u64);
    }
    let pass = checks.fep_moves_legal
        && checks.single_zr_move
        && checks.labels_match
        && checks.tagged_identity
        && checks.final_state_matches;
    Ok(MapReport {
        pass,
        first_violation,
        checks,
    })
}

/// Re-maps the replayed configuration from scratch and compares with the tracked
/// labels, allowing for the tagged site having changed.
fn remap_agrees(tracker: &LabelTracker, omega: &ZrConfig) -> Result<bool> {
    let fresh = map_forward(&FepConfig::ring(&tracker.occ)?)?;
    let k = omega.len();
    if fresh.omega.len() != k {
        return Ok(false);
    }
    let r = tracker.label_at[fresh.x0 as usize];
    if r == NO_LABEL {
        return Ok(false);
    }
    let r = r as usize;
    Ok((0..k).all(|i| fresh.omega.sites()[i] == omega.sites()[(i + r) % k]))
}

/// Position of the empty site that starts at `x0`, after each event that moves it.
/// Positions are unwrapped (they may leave `0..L`).
pub fn tagged_empty_site(log: &TrajectoryLog, eta0: &FepConfig, x0: i64) -> Result<Vec<(f64, i64)>> {
    let FepGeometry::Ring { len } = eta0.geometry() else {
        bail!(InvalidArgument, "tracking needs a ring configuration");
    };
    if eta0.site(x0) != Some(0) {
        bail!(Precondition, "site {x0} is not empty");
    }
    let Some(events) = &log.events else {
        bail!(InvalidArgument, "log carries no event list");
    };
    let l = len as i64;
    let mut pos = x0;
    let mut series = vec![(0.0, pos)];
    for e in events {
        let b = e.bond as i64;
        let here = pos.rem_euclid(l);
        // a rightward particle jump over bond b moves the empty site at b + 1 to b
        if e.direction == 1 && (b + 1).rem_euclid(l) == here {
            pos -= 1;
            series.push((e.time, pos));
        } else if e.direction == -1 && b == here {
            pos += 1;
            series.push((e.time, pos));
        }
    }
    Ok(series)
}

/// Outcome of the static checks of the mapping between stationary measures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryReport {
    pub replicas: usize,
    /// Chi-square p-value of the origin cluster against `(k+2) a^k rho (1−a)^2`.
    pub origin_p_value: f64,
    /// Chi-square p-value of the cluster right of the origin against the geometric law.
    pub off_origin_p_value: f64,
    /// Chi-square p-value of mapped-back windows `{0, …, window − 1}` against the
    /// grand-canonical window law.
    pub window_p_value: f64,
    pub pass: bool,
}

/// Chi-square goodness-of-fit p-value; the last bin collects the tail.
pub fn chi_square_p_value(observed: &[f64], expected: &[f64]) -> f64 {
    let mut stat = 0.0;
    let mut bins = 0usize;
    for (o, e) in observed.iter().zip(expected) {
        if *e > 0.0 {
            stat += (o - e).powi(2) / e;
            bins += 1;
        }
    }
    if bins < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).expect("positive dof").cdf(stat)
}

/// Bins of a law on `0..` with an overflow bin, merged so every bin expects ≥ 5.
fn binned_law(law: impl Fn(usize) -> f64, n: f64) -> (Vec<f64>, usize) {
    let mut expected = Vec::new();
    let mut mass = 0.0;
    let mut k = 0;
    while (1.0 - mass) * n >= 10.0 {
        let p = law(k);
        expected.push(p * n);
        mass += p;
        k += 1;
    }
    expected.push((1.0 - mass).max(0.0) * n);
    (expected, k)
}

/// Samples both sides of the mapping between stationary measures and tests the laws
/// that should match.
pub fn stationary_identity_check<R: Rng + ?Sized>(
    rho: f64,
    window: usize,
    replicas: usize,
    rng: &mut R,
) -> Result<StationaryReport> {
    check_density(rho)?;
    if rho == 1.0 {
        bail!(Domain, "the cluster laws are degenerate at rho = 1");
    }
    if window == 0 || window > 16 || replicas < 100 {
        bail!(InvalidArgument, "need 1 <= window <= 16 and at least 100 replicas");
    }
    let a = theory(rho)?.a;
    let n = replicas as f64;

    // grand-canonical side, mapped forward
    let (origin_exp, origin_cap) = binned_law(|k| (k as f64 + 2.0) * a.powi(k as i32) * rho * (1.0 - a).powi(2), n);
    let (geo_exp, geo_cap) = binned_law(|k| a.powi(k as i32) * (1.0 - a), n);
    let mut origin_obs = vec![0.0; origin_exp.len()];
    let mut geo_obs = vec![0.0; geo_exp.len()];
    let mut m = 16usize;
    let mut done = 0;
    while done < replicas {
        let sample = sample_window_grand(rho, m, rng)?;
        let state = match map_forward(&sample.config) {
            Ok(s) => s,
            Err(crate::FepError::InsufficientWindow(_)) => {
                m *= 2;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (Some(w0), Some(w1)) = (state.omega.get(0), state.omega.get(1)) else {
            m *= 2;
            continue;
        };
        origin_obs[(w0 as usize).min(origin_cap)] += 1.0;
        geo_obs[(w1 as usize).min(geo_cap)] += 1.0;
        done += 1;
    }

    // tagged zero-range side, mapped backward
    let words = 1usize << window;
    let mut counts = vec![0.0; words];
    for _ in 0..replicas {
        let (w0, x0) = sample_zr_distorted(rho, rng)?;
        let mut omega = vec![geometric(a, rng), w0];
        let mut right_edge = x0 + w0 as i64 + 2;
        while right_edge < window as i64 {
            let w = geometric(a, rng);
            omega.push(w);
            right_edge += w as i64 + 2;
        }
        let state = TaggedState {
            omega: ZrConfig::boxed(-1, omega)?,
            x0,
        };
        let eta = map_backward(&state, Some((0, window as i64 - 1)))?;
        let code = (0..window).fold(0usize, |c, i| c | (usize::from(eta.get(i)) << i));
        counts[code] += 1.0;
    }
    let expected = (0..words)
        .map(|code| {
            let w: Vec<u8> = (0..window).map(|i| ((code >> i) & 1) as u8).collect();
            window_prob(rho, &w).map(|p| p * n)
        })
        .collect::<Result<Vec<f64>>>()?;

    let origin_p_value = chi_square_p_value(&origin_obs, &origin_exp);
    let off_origin_p_value = chi_square_p_value(&geo_obs, &geo_exp);
    let window_p_value = chi_square_p_value(&counts, &expected);
    Ok(StationaryReport {
        replicas,
        origin_p_value,
        off_origin_p_value,
        window_p_value,
        pass: origin_p_value > 0.01 && off_origin_p_value > 0.01 && window_p_value > 0.01,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_fep, run_zr, Gamma, LoggedEvent, RateSchedule, RunOptions};
    use crate::measures::{sample_canonical_ring, sample_zr_geometric};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn worked_example() {
        let eta = FepConfig::boxed(-3, &[0, 1, 1, 0, 1, 1, 1, 0], None, None).unwrap();
        let s = map_forward(&eta).unwrap();
        assert_eq!(s.x0, 0);
        assert_eq!(s.omega, ZrConfig::boxed(-1, vec![1, 2]).unwrap());
        assert_eq!(map_backward(&s, Some((-3, 4))).unwrap(), eta);
        assert_eq!(map_backward(&s, None).unwrap(), eta);
    }

    #[test]
    fn packed_gap_is_zero() {
        let eta = FepConfig::boxed(-1, &[0, 1, 0], None, None).unwrap();
        assert_eq!(map_forward(&eta).unwrap().omega.sites(), &[0]);
    }

    #[test]
    fn all_zero_gaps_give_alternating_pattern() {
        let s = TaggedState {
            omega: ZrConfig::boxed(-1, vec![0, 0]).unwrap(),
            x0: 0,
        };
        let eta = map_backward(&s, Some((-2, 2))).unwrap();
        assert_eq!(eta.occupations(), vec![0, 1, 0, 1, 0]);
        assert!(map_backward(&s, Some((-3, 2))).is_err());
    }

    #[test]
    fn forward_errors() {
        let transient = FepConfig::boxed(0, &[1, 0, 0, 1], None, None).unwrap();
        assert!(matches!(map_forward(&transient), Err(crate::FepError::Precondition(_))));
        let one_empty = FepConfig::boxed(-2, &[1, 1, 0, 1, 1], None, None).unwrap();
        assert!(matches!(map_forward(&one_empty), Err(crate::FepError::InsufficientWindow(_))));
        let bad = TaggedState {
            omega: ZrConfig::boxed(-1, vec![0, 1]).unwrap(),
            x0: -3,
        };
        assert!(matches!(map_backward(&bad, None), Err(crate::FepError::InvalidArgument(_))));
    }

    fn ring_configs(len: usize) -> Vec<FepConfig> {
        (0u32..1 << len)
            .map(|m| (0..len).map(|i| ((m >> i) & 1) as u8).collect::<Vec<u8>>())
            .filter_map(|s| FepConfig::ring(&s).ok())
            .filter(|c| c.is_ergodic() && c.len() - c.particles() >= 2)
            .collect()
    }

    #[test]
    fn ring_bijection_on_all_small_rings() {
        for len in 4..=12 {
            let configs = ring_configs(len);
            let mut states = Vec::new();
            for c in &configs {
                let s = map_forward(c).unwrap();
                assert_eq!(s.ring_len(), len);
                assert_eq!(map_backward(&s, None).unwrap(), *c);
                states.push(s);
            }
            // every valid tagged state with K >= 2 is hit exactly once
            let mut count = 0;
            for s in &states {
                assert_eq!(map_forward(&map_backward(s, None).unwrap()).unwrap(), *s);
                count += 1;
            }
            assert_eq!(count, configs.len());
            assert_eq!(
                states.iter().collect::<std::collections::HashSet<_>>().len(),
                configs.len()
            );
        }
        for c in ring_configs(10).iter().filter(|c| c.particles() == 7) {
            let s = map_forward(c).unwrap();
            assert_eq!(s.omega.sites().iter().map(|&w| w + 2).sum::<u64>(), 10);
        }
    }

    impl std::hash::Hash for TaggedState {
        fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
            self.omega.sites().hash(h);
            self.x0.hash(h);
        }
    }
    impl Eq for TaggedState {}

    #[test]
    fn random_canonical_round_trips() {
        let mut r = rng(1);
        for _ in 0..100_000 {
            let c = sample_canonical_ring(30, 20, &mut r).unwrap();
            let s = map_forward(&c).unwrap();
            assert_eq!(map_backward(&s, None).unwrap(), c);
        }
    }

    #[test]
    fn box_bijection_on_all_small_boxes() {
        for len in 3..=12usize {
            for first in -(len as i64)..=0 {
                for m in 0u32..1 << len {
                    let s: Vec<u8> = (0..len).map(|i| ((m >> i) & 1) as u8).collect();
                    let eta = FepConfig::boxed(first, &s, None, None).unwrap();
                    if !eta.is_ergodic() {
                        continue;
                    }
                    let Ok(state) = map_forward(&eta) else { continue };
                    let empties = empty_positions(&eta);
                    let ext = (empties[0], *empties.last().unwrap());
                    let back = map_backward(&state, Some(ext)).unwrap();
                    let lo = (ext.0 - first) as usize;
                    assert_eq!(back.occupations(), eta.occupations()[lo..=lo + (ext.1 - ext.0) as usize]);
                    assert_eq!(map_forward(&back).unwrap(), state);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn translation_rule(seed in any::<u64>(), len in 6usize..40) {
            let mut r = rng(seed);
            let n = r.gen_range(len.div_ceil(2)..=len - 2);
            let c = sample_canonical_ring(len, n, &mut r).unwrap();
            let s = map_forward(&c).unwrap();
            let shifted = map_forward(&c.shifted(1).unwrap()).unwrap();
            prop_assert_eq!(s.translate_right().unwrap(), shifted);
        }
    }

    #[test]
    fn box_translation_rule() {
        let eta = FepConfig::boxed(-4, &[0, 1, 1, 0, 1, 0, 1, 1, 0], None, None).unwrap();
        let s = map_forward(&eta).unwrap();
        let shifted = FepConfig::boxed(-3, &eta.occupations(), None, None).unwrap();
        assert_eq!(s.translate_right().unwrap(), map_forward(&shifted).unwrap());
    }

    fn symmetric_run(seed: u64, len: usize, n: usize, t: f64) -> (FepConfig, TrajectoryLog) {
        let mut r = rng(seed);
        let c = sample_canonical_ring(len, n, &mut r).unwrap();
        let sched = RateSchedule::new(1, Gamma::Finite(1.0), 32).unwrap();
        let log = run_fep(c.clone(), &sched, t, &mut [], &RunOptions::recording(), &mut r).unwrap();
        (c, log)
    }

    #[test]
    fn replay_passes_on_real_trajectories() {
        let (c, log) = symmetric_run(2, 64, 44, 3.0);
        assert!(log.n_events > 50_000);
        let report = verify_dynamic(&log, &c).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.first_violation, None);
    }

    #[test]
    fn empty_log_passes() {
        let c = FepConfig::ring(&[1, 0, 1, 1, 0, 1]).unwrap();
        let log = TrajectoryLog {
            t_end: 1.0,
            n_events: 0,
            events: Some(Vec::new()),
            currents: vec![0; 6],
            snapshots: Vec::new(),
            final_state: Snapshot::Fep(c.clone()),
        };
        assert!(verify_dynamic(&log, &c).unwrap().pass);
    }

    #[test]
    fn corrupted_event_fails_at_its_index() {
        let (c, mut log) = symmetric_run(3, 40, 28, 0.5);
        let events = log.events.as_mut().unwrap();
        assert!(events.len() > 500);
        events[500].direction = -events[500].direction;
        let report = verify_dynamic(&log, &c).unwrap();
        assert!(!report.pass);
        assert_eq!(report.first_violation, Some(500));
        assert!(!report.checks.fep_moves_legal);
    }

    #[test]
    fn replay_rejects_mismatched_log() {
        let (c, log) = symmetric_run(4, 40, 28, 0.1);
        let other = FepConfig::ring(&[1; 20]).unwrap();
        assert!(verify_dynamic(&log, &other).is_err());
        let mut no_events = log.clone();
        no_events.events = None;
        assert!(verify_dynamic(&no_events, &c).is_err());
    }

    #[test]
    fn tagged_site_follows_the_zero_range_current() {
        let (c, log) = symmetric_run(5, 50, 35, 1.0);
        let s = map_forward(&c).unwrap();
        let series = tagged_empty_site(&log, &c, s.x0).unwrap();
        assert_eq!(series[0], (0.0, s.x0));
        // zero-range current across bond (−1, 0) is minus the tagged displacement
        let k = s.omega.len();
        let (_, last) = *series.last().unwrap();
        let mut omega = s.omega.clone();
        let mut tracker = LabelTracker::new(&c, &s);
        let mut j = 0i64;
        for e in log.events.as_ref().unwrap() {
            let x = e.bond as i64;
            let from = if e.direction == 1 { x + 1 } else { x };
            let y = tracker.label_at[from.rem_euclid(50) as usize] as usize;
            let to = if e.direction == 1 { x } else { x + 1 };
            tracker.label_at[from.rem_euclid(50) as usize] = NO_LABEL;
            tracker.label_at[to.rem_euclid(50) as usize] = y as u32;
            let left = (y + k - 1) % k;
            let (src, dst) = if e.direction == 1 { (left, y) } else { (y, left) };
            omega.jump_in_place(src as i64, dst as i64).unwrap();
            if y == 0 {
                j += e.direction as i64;
            }
        }
        assert_eq!(last, s.x0 - j);
    }

    #[test]
    fn single_crossing_moves_tag_left() {
        // empty sites at 0 and 3; the particle at 5 (= −1 mod 6) jumps right onto 0
        let c = FepConfig::ring(&[0, 1, 1, 0, 1, 1]).unwrap();
        let moved = c.apply_swap(5).unwrap();
        let log = TrajectoryLog {
            t_end: 1.0,
            n_events: 1,
            events: Some(vec![LoggedEvent {
                time: 0.5,
                bond: 5,
                direction: 1,
            }]),
            currents: vec![0, 0, 0, 0, 0, 1],
            snapshots: Vec::new(),
            final_state: Snapshot::Fep(moved),
        };
        assert_eq!(tagged_empty_site(&log, &c, 0).unwrap(), vec![(0.0, 0), (0.5, -1)]);
        let report = verify_dynamic(&log, &c).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(matches!(tagged_empty_site(&log, &c, 1), Err(crate::FepError::Precondition(_))));
    }

    #[test]
    fn stationary_laws_match() {
        let report = stationary_identity_check(0.75, 3, 100_000, &mut rng(6)).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn tilted_origin_cluster_is_not_stationary_for_zero_range() {
        // origin cluster drawn from the tilted law, others geometric; evolve omega alone
        let rho = 0.75;
        let mut r = rng(7);
        let sched = RateSchedule::symmetric(8);
        let (mut before, mut after) = (0.0, 0.0);
        let reps = 2000;
        for _ in 0..reps {
            let mut z = sample_zr_geometric(rho, ZrGeometry::Ring { len: 16 }, &mut r).unwrap();
            z.sites_mut()[0] = sample_zr_distorted(rho, &mut r).unwrap().0;
            before += z.sites()[0] as f64;
            let log = run_zr(z, &sched, 1.0, &mut [], &RunOptions::default(), &mut r).unwrap();
            after += log.final_state.as_zr().unwrap().sites()[0] as f64;
        }
        let (before, after) = (before / reps as f64, after / reps as f64);
        // tilted mean alpha (1 + rho) = 3.5, drifting toward the ring average
        assert!((before - 3.5).abs() < 0.25, "{before}");
        assert!(after < 2.6, "{after}");
    }
}
