//! Domain types shared by every learner, baseline and environment.
//!
//! Energies are dimensionless losses. The normalization convention is
//! `E_min = 0` and `E_max + E_s = 1`, so that a slot's total cost (service
//! energy plus a possible handover charge) never exceeds one.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Index of a small base station, dense in `0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SbsId(pub usize);

impl SbsId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for SbsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A service energy on the normalized `[0, 1]` scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NormalizedEnergy(f64);

impl NormalizedEnergy {
    pub const ZERO: NormalizedEnergy = NormalizedEnergy(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(NormalizedEnergy(value))
        } else {
            Err(Error::domain(format!("normalized energy {value} outside [0, 1]")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for NormalizedEnergy {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        NormalizedEnergy::new(value)
    }
}

impl From<NormalizedEnergy> for f64 {
    fn from(e: NormalizedEnergy) -> f64 {
        e.0
    }
}

/// Cost incurred in one slot.
///
/// `service` is kept as a plain real so that the raw-unit lower-bound
/// scenarios (whose losses may exceed one) share the same accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotCost {
    pub service: f64,
    pub switched: bool,
    pub handover_cost: f64,
}

impl SlotCost {
    pub fn new(service: f64, switched: bool, handover_cost: f64) -> Self {
        SlotCost { service, switched, handover_cost }
    }

    #[inline]
    pub fn total(&self) -> f64 {
        if self.switched {
            self.service + self.handover_cost
        } else {
            self.service
        }
    }
}

/// Maps raw joules onto the normalized scale.
///
/// Returns the normalized service energy and the normalized handover cost;
/// the normalized maximum service energy and handover cost sum to one.
pub fn normalize_energy(raw: f64, e_max_raw: f64, e_s_raw: f64) -> Result<(NormalizedEnergy, f64)> {
    if !(e_max_raw > 0.0) || !e_max_raw.is_finite() {
        return Err(Error::domain(format!("e_max_raw must be positive, got {e_max_raw}")));
    }
    if !(e_s_raw >= 0.0) || !e_s_raw.is_finite() {
        return Err(Error::domain(format!("e_s_raw must be non-negative, got {e_s_raw}")));
    }
    if !(0.0..=e_max_raw).contains(&raw) {
        return Err(Error::domain(format!("raw energy {raw} outside [0, {e_max_raw}]")));
    }
    let scale = e_max_raw + e_s_raw;
    Ok((NormalizedEnergy::new(raw / scale)?, e_s_raw / scale))
}

/// Total energy of an action sequence: service energy plus `e_s` per handover.
///
/// `energies[t]` is the service energy realized by `actions[t]`. The first
/// association is free.
pub fn total_cost(actions: &[SbsId], energies: &[f64], e_s: f64) -> Result<f64> {
    if actions.len() != energies.len() {
        return Err(Error::domain(format!("{} actions but {} energies", actions.len(), energies.len())));
    }
    if actions.is_empty() {
        return Err(Error::domain("empty action sequence"));
    }
    let service: f64 = energies.iter().sum();
    Ok(service + e_s * handover_count(actions) as f64)
}

/// Number of slots `t >= 2` with `a_t != a_{t-1}`.
pub fn handover_count(actions: &[SbsId]) -> usize {
    actions.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Set of SBSs that are switched on in a slot, as a bitmask (`N <= 64`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AvailableSet(u64);

pub const MAX_SBS: usize = 64;

impl AvailableSet {
    pub fn all(n: usize) -> Self {
        assert!(n <= MAX_SBS, "at most {MAX_SBS} SBSs are supported");
        if n == MAX_SBS {
            AvailableSet(u64::MAX)
        } else {
            AvailableSet((1u64 << n) - 1)
        }
    }

    pub fn empty() -> Self {
        AvailableSet(0)
    }

    pub fn from_mask(mask: u64) -> Self {
        AvailableSet(mask)
    }

    pub fn from_ids<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        let mut s = AvailableSet(0);
        for i in ids {
            s.insert(SbsId(i));
        }
        s
    }

    #[inline]
    pub fn mask(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn contains(self, a: SbsId) -> bool {
        a.0 < MAX_SBS && self.0 & (1u64 << a.0) != 0
    }

    pub fn insert(&mut self, a: SbsId) {
        assert!(a.0 < MAX_SBS);
        self.0 |= 1u64 << a.0;
    }

    pub fn remove(&mut self, a: SbsId) {
        if a.0 < MAX_SBS {
            self.0 &= !(1u64 << a.0);
        }
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in increasing index order.
    pub fn iter(self) -> impl Iterator<Item = SbsId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(SbsId(i))
            }
        })
    }

    /// The `k`-th member in increasing index order.
    pub fn nth(self, k: usize) -> Option<SbsId> {
        self.iter().nth(k)
    }
}
