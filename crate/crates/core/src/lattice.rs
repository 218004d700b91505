//! Configuration types for the exclusion and zero-range processes.
//!
//! An exclusion configuration lives either on a ring `Z/LZ` or on a finite box
//! `{first, ..., last}` with optional frozen boundary values just outside it.
//! Zero-range configurations use the same two geometries without boundary values.

use std::fmt::Write as _;

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail, FepError, Result};

/// Smallest ring on which the exclusion dynamics is non-degenerate.
pub const MIN_RING_LEN: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FepGeometry {
    Ring {
        len: usize,
    },
    Box {
        first: i64,
        last: i64,
        left: Option<u8>,
        right: Option<u8>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Ergodic,
    Frozen,
    Transient,
}

/// Binary occupation configuration `eta`, stored as a packed bit array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FepConfig {
    geometry: FepGeometry,
    bits: BitVec<u64, Lsb0>,
}

fn check_binary(sites: &[u8]) -> Result<BitVec<u64, Lsb0>> {
    let mut bits = BitVec::with_capacity(sites.len());
    for (i, &s) in sites.iter().enumerate() {
        match s {
            0 => bits.push(false),
            1 => bits.push(true),
            _ => bail!(InvalidArgument, "site {i} holds {s}, expected 0 or 1"),
        }
    }
    Ok(bits)
}

fn check_boundary(v: Option<u8>) -> Result<()> {
    match v {
        None | Some(0) | Some(1) => Ok(()),
        Some(v) => bail!(InvalidArgument, "boundary value {v} is not 0 or 1"),
    }
}

impl FepConfig {
    pub fn ring(sites: &[u8]) -> Result<Self> {
        if sites.len() < MIN_RING_LEN {
            bail!(
                InvalidArgument,
                "ring length {} is below the minimum {MIN_RING_LEN}",
                sites.len()
            );
        }
        Ok(Self {
            geometry: FepGeometry::Ring { len: sites.len() },
            bits: check_binary(sites)?,
        })
    }

    /// Box `{first, ..., first + sites.len() - 1}` with optional boundary values.
    pub fn boxed(first: i64, sites: &[u8], left: Option<u8>, right: Option<u8>) -> Result<Self> {
        if sites.is_empty() {
            bail!(InvalidArgument, "empty box configuration");
        }
        check_boundary(left)?;
        check_boundary(right)?;
        Ok(Self {
            geometry: FepGeometry::Box {
                first,
                last: first + sites.len() as i64 - 1,
                left,
                right,
            },
            bits: check_binary(sites)?,
        })
    }

    pub(crate) fn from_bits(geometry: FepGeometry, bits: BitVec<u64, Lsb0>) -> Self {
        Self { geometry, bits }
    }

    pub fn geometry(&self) -> FepGeometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_ring(&self) -> bool {
        matches!(self.geometry, FepGeometry::Ring { .. })
    }

    /// Coordinate of storage index 0.
    pub fn first(&self) -> i64 {
        match self.geometry {
            FepGeometry::Ring { .. } => 0,
            FepGeometry::Box { first, .. } => first,
        }
    }

    /// Occupation at storage index `i` (no wrapping, no boundary lookup).
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, v: bool) {
        self.bits.set(i, v);
    }

    /// Storage index of coordinate `x`, wrapping on a ring.
    pub fn index_of(&self, x: i64) -> Option<usize> {
        match self.geometry {
            FepGeometry::Ring { len } => Some(x.rem_euclid(len as i64) as usize),
            FepGeometry::Box { first, last, .. } => {
                (first..=last).contains(&x).then(|| (x - first) as usize)
            }
        }
    }

    /// Occupation at coordinate `x`, resolving ring wrap and box boundary values.
    pub fn site(&self, x: i64) -> Option<u8> {
        if let Some(i) = self.index_of(x) {
            return Some(self.bits[i] as u8);
        }
        match self.geometry {
            FepGeometry::Box {
                first, left, last, right, ..
            } => {
                if x == first - 1 {
                    left
                } else if x == last + 1 {
                    right
                } else {
                    None
                }
            }
            FepGeometry::Ring { .. } => unreachable!(),
        }
    }

    pub fn occupations(&self) -> Vec<u8> {
        self.bits.iter().map(|b| *b as u8).collect()
    }

    pub fn particles(&self) -> usize {
        self.bits.count_ones()
    }

    /// Pairs of neighbouring values that enter the ergodic/frozen predicates.
    fn edges(&self) -> Vec<(u8, u8)> {
        let n = self.len();
        let mut out = Vec::with_capacity(n + 1);
        match self.geometry {
            FepGeometry::Ring { len } => {
                for i in 0..len {
                    out.push((self.bits[i] as u8, self.bits[(i + 1) % len] as u8));
                }
            }
            FepGeometry::Box { left, right, .. } => {
                if let Some(l) = left {
                    out.push((l, self.bits[0] as u8));
                }
                for i in 0..n.saturating_sub(1) {
                    out.push((self.bits[i] as u8, self.bits[i + 1] as u8));
                }
                if let Some(r) = right {
                    out.push((self.bits[n - 1] as u8, r));
                }
            }
        }
        out
    }

    pub fn classify(&self) -> Result<Classification> {
        if self.is_empty() {
            bail!(InvalidArgument, "cannot classify an empty configuration");
        }
        let edges = self.edges();
        let ergodic = edges.iter().all(|&(a, b)| a + b >= 1);
        let frozen = edges.iter().all(|&(a, b)| a + b <= 1);
        Ok(match (ergodic, frozen) {
            (true, _) => Classification::Ergodic,
            (false, true) => Classification::Frozen,
            (false, false) => Classification::Transient,
        })
    }

    /// Both ergodic and frozen: every particle is isolated and so is every empty site.
    pub fn is_alternating(&self) -> bool {
        !self.is_empty() && self.edges().iter().all(|&(a, b)| a + b == 1)
    }

    pub fn is_ergodic(&self) -> bool {
        matches!(self.classify(), Ok(Classification::Ergodic))
    }

    /// `(c_{x,x+1}, c_{x+1,x})`: rate of the particle at `x` jumping right and of
    /// the particle at `x + 1` jumping left onto `x`.
    pub fn jump_rates(&self, x: i64) -> Result<(u8, u8)> {
        let get = |y: i64| {
            self.site(y).ok_or_else(|| {
                FepError::InvalidArgument(format!("site {y} is not resolvable around {x}"))
            })
        };
        let (m1, e0, e1, e2) = (get(x - 1)?, get(x)?, get(x + 1)?, get(x + 2)?);
        Ok((m1 * e0 * (1 - e1), (1 - e0) * e1 * e2))
    }

    /// Configuration with the values at `x` and `x + 1` exchanged.
    pub fn apply_swap(&self, x: i64) -> Result<FepConfig> {
        let mut out = self.clone();
        out.swap_in_place(x)?;
        Ok(out)
    }

    pub fn swap_in_place(&mut self, x: i64) -> Result<()> {
        let (i, j) = match (self.index_of(x), self.index_of(x + 1)) {
            (Some(i), Some(j)) => (i, j),
            _ => bail!(InvalidArgument, "edge ({x},{}) is outside the box", x + 1),
        };
        let (a, b) = (self.bits[i], self.bits[j]);
        if a == b {
            bail!(Logic, "swap of equal values at edge ({x},{})", x + 1);
        }
        self.bits.set(i, b);
        self.bits.set(j, a);
        Ok(())
    }

    /// Ring configuration translated by `k`: `out[x] = self[x - k]`.
    pub fn shifted(&self, k: i64) -> Result<FepConfig> {
        let FepGeometry::Ring { len } = self.geometry else {
            bail!(InvalidArgument, "shift is only defined on a ring");
        };
        let mut bits = BitVec::repeat(false, len);
        for i in 0..len {
            let src = (i as i64 - k).rem_euclid(len as i64) as usize;
            bits.set(i, self.bits[src]);
        }
        Ok(Self::from_bits(self.geometry, bits))
    }

    /// Two-line text dump: geometry header, then the occupation string.
    pub fn to_text(&self) -> String {
        let mut s = match self.geometry {
            FepGeometry::Ring { len } => format!("geometry=ring,L={len}\n"),
            FepGeometry::Box {
                first,
                last,
                left,
                right,
            } => format!(
                "geometry=box,first={first},last={last},bl={},br={}\n",
                fmt_boundary(left),
                fmt_boundary(right)
            ),
        };
        for b in self.bits.iter() {
            s.push(if *b { '1' } else { '0' });
        }
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (header, body) = split_dump(text)?;
        let sites = body
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                c => Err(FepError::Parse(format!("unexpected character {c:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        match parse_header(header)? {
            Header::Ring { len } => {
                if len != sites.len() {
                    bail!(Parse, "header length {len} but {} sites", sites.len());
                }
                Self::ring(&sites)
            }
            Header::Box {
                first,
                last,
                left,
                right,
            } => {
                if last - first + 1 != sites.len() as i64 {
                    bail!(Parse, "header extent does not match {} sites", sites.len());
                }
                Self::boxed(first, &sites, left, right)
            }
        }
    }
}

fn fmt_boundary(v: Option<u8>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

enum Header {
    Ring {
        len: usize,
    },
    Box {
        first: i64,
        last: i64,
        left: Option<u8>,
        right: Option<u8>,
    },
}

fn split_dump(text: &str) -> Result<(&str, &str)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| FepError::Parse("missing header line".into()))?;
    let body = lines
        .next()
        .ok_or_else(|| FepError::Parse("missing data line".into()))?;
    Ok((header, body))
}

fn parse_header(line: &str) -> Result<Header> {
    let mut fields = std::collections::HashMap::new();
    for part in line.trim().split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| FepError::Parse(format!("malformed header field {part:?}")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| FepError::Parse(format!("header lacks {k}")))
    };
    let int = |k: &str| -> Result<i64> {
        get(k)?
            .parse()
            .map_err(|_| FepError::Parse(format!("header field {k} is not an integer")))
    };
    let boundary = |k: &str| -> Result<Option<u8>> {
        match get(k)? {
            "-" => Ok(None),
            "0" => Ok(Some(0)),
            "1" => Ok(Some(1)),
            v => bail!(Parse, "bad boundary value {v:?}"),
        }
    };
    match get("geometry")? {
        "ring" => Ok(Header::Ring {
            len: int("L")? as usize,
        }),
        "box" => Ok(Header::Box {
            first: int("first")?,
            last: int("last")?,
            left: boundary("bl")?,
            right: boundary("br")?,
        }),
        g => bail!(Parse, "unknown geometry {g:?}"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZrGeometry {
    Ring { len: usize },
    Box { first: i64, last: i64 },
}

/// Zero-range configuration `omega`: a particle count per site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZrConfig {
    geometry: ZrGeometry,
    sites: Vec<u64>,
}

impl ZrConfig {
    pub fn ring(sites: Vec<u64>) -> Result<Self> {
        if sites.is_empty() {
            bail!(InvalidArgument, "empty zero-range ring");
        }
        Ok(Self {
            geometry: ZrGeometry::Ring { len: sites.len() },
            sites,
        })
    }

    pub fn boxed(first: i64, sites: Vec<u64>) -> Result<Self> {
        if sites.is_empty() {
            bail!(InvalidArgument, "empty zero-range box");
        }
        Ok(Self {
            geometry: ZrGeometry::Box {
                first,
                last: first + sites.len() as i64 - 1,
            },
            sites,
        })
    }

    pub fn geometry(&self) -> ZrGeometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn first(&self) -> i64 {
        match self.geometry {
            ZrGeometry::Ring { .. } => 0,
            ZrGeometry::Box { first, .. } => first,
        }
    }

    pub fn sites(&self) -> &[u64] {
        &self.sites
    }

    pub(crate) fn sites_mut(&mut self) -> &mut [u64] {
        &mut self.sites
    }

    pub fn index_of(&self, y: i64) -> Option<usize> {
        match self.geometry {
            ZrGeometry::Ring { len } => Some(y.rem_euclid(len as i64) as usize),
            ZrGeometry::Box { first, last } => {
                (first..=last).contains(&y).then(|| (y - first) as usize)
            }
        }
    }

    pub fn get(&self, y: i64) -> Option<u64> {
        self.index_of(y).map(|i| self.sites[i])
    }

    pub fn total(&self) -> u64 {
        self.sites.iter().sum()
    }

    /// Moves one particle from `from` to the adjacent site `to`.
    pub fn zr_apply_jump(&self, from: i64, to: i64) -> Result<ZrConfig> {
        let mut out = self.clone();
        out.jump_in_place(from, to)?;
        Ok(out)
    }

    pub fn jump_in_place(&mut self, from: i64, to: i64) -> Result<()> {
        let adjacent = match self.geometry {
            ZrGeometry::Ring { len } => {
                let d = (to - from).rem_euclid(len as i64);
                d == 1 || d == len as i64 - 1
            }
            ZrGeometry::Box { .. } => (to - from).abs() == 1,
        };
        if !adjacent {
            bail!(InvalidArgument, "sites {from} and {to} are not adjacent");
        }
        let (Some(i), Some(j)) = (self.index_of(from), self.index_of(to)) else {
            bail!(InvalidArgument, "jump {from}->{to} leaves the box");
        };
        if self.sites[i] == 0 {
            bail!(Logic, "jump from empty site {from}");
        }
        self.sites[i] -= 1;
        self.sites[j] += 1;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = match self.geometry {
            ZrGeometry::Ring { len } => format!("geometry=ring,L={len}\n"),
            ZrGeometry::Box { first, last } => {
                format!("geometry=box,first={first},last={last},bl=-,br=-\n")
            }
        };
        for (i, v) in self.sites.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (header, body) = split_dump(text)?;
        let sites = body
            .split_whitespace()
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|_| FepError::Parse(format!("bad occupation {t:?}")))
            })
            .collect::<Result<Vec<u64>>>()?;
        match parse_header(header)? {
            Header::Ring { len } => {
                if len != sites.len() {
                    bail!(Parse, "header length {len} but {} sites", sites.len());
                }
                Self::ring(sites)
            }
            Header::Box { first, last, .. } => {
                if last - first + 1 != sites.len() as i64 {
                    bail!(Parse, "header extent does not match {} sites", sites.len());
                }
                Self::boxed(first, sites)
            }
        }
    }
}
