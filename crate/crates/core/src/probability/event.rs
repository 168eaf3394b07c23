//! Events: measurable subsets of outcomes.
//!
//! Every constructor normalizes its input, so an [`Event`] value always
//! satisfies its variant's invariants (sorted unique indices, disjoint
//! closed intervals, ...). Set algebra produces new normalized events.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::{Error, Result};

/// A closed interval `[lo, hi]` on a real axis. Endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Inclusive occupation-number range `min..=max`. An inverted range matches nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccupationRange {
    pub min: u32,
    pub max: u32,
}

impl OccupationRange {
    pub fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    pub fn exactly(n: u32) -> Self {
        Self { min: n, max: n }
    }

    pub fn contains(&self, n: u32) -> bool {
        self.min <= n && n <= self.max
    }

    fn intersect(self, other: Self) -> Self {
        Self { min: self.min.max(other.min), max: self.max.min(other.max) }
    }
}

/// Predicate on Fock occupation vectors: per-mode ranges plus an optional
/// range on the total particle number.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FockPredicate {
    modes: BTreeMap<usize, OccupationRange>,
    total: Option<OccupationRange>,
}

impl FockPredicate {
    /// The predicate that accepts every occupation vector.
    pub fn any() -> Self {
        Self::default()
    }

    pub fn with_mode(mut self, mode: usize, range: OccupationRange) -> Self {
        let merged = match self.modes.get(&mode) {
            Some(existing) => existing.intersect(range),
            None => range,
        };
        self.modes.insert(mode, merged);
        self
    }

    pub fn with_total(mut self, range: OccupationRange) -> Self {
        self.total = Some(match self.total {
            Some(existing) => existing.intersect(range),
            None => range,
        });
        self
    }

    pub fn modes(&self) -> impl Iterator<Item = (usize, OccupationRange)> + '_ {
        self.modes.iter().map(|(&m, &r)| (m, r))
    }

    pub fn total(&self) -> Option<OccupationRange> {
        self.total
    }

    /// Largest mode index referenced by the predicate.
    pub fn max_mode(&self) -> Option<usize> {
        self.modes.keys().next_back().copied()
    }

    pub fn matches(&self, occupation: &[u32]) -> bool {
        let modes_ok = self
            .modes
            .iter()
            .all(|(&m, r)| occupation.get(m).is_some_and(|&n| r.contains(n)));
        let total_ok = self.total.is_none_or(|r| r.contains(occupation.iter().sum()));
        modes_ok && total_ok
    }

    fn intersect(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, r) in other.modes() {
            out = out.with_mode(m, r);
        }
        if let Some(t) = other.total {
            out = out.with_total(t);
        }
        out
    }
}

/// Read-only view of an event's payload.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Basis indices, sorted and unique.
    DiscreteSet(BTreeSet<usize>),
    /// Pairwise disjoint closed intervals, sorted by left endpoint.
    IntervalUnion(Vec<Interval>),
    /// One flag per grid point.
    GridMask(Vec<bool>),
    /// One event per axis.
    Product(Vec<Event>),
    FockPredicate(FockPredicate),
}

/// A measurable subset of outcomes. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    kind: EventKind,
}

impl Event {
    pub fn kind(&self) -> &EventKind {
        &self.kind
    }

    pub fn discrete<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Self { kind: EventKind::DiscreteSet(indices.into_iter().collect()) }
    }

    /// The empty discrete event.
    pub fn empty_discrete() -> Self {
        Self::discrete(std::iter::empty())
    }

    /// Ω for a discrete basis of dimension `dim`.
    pub fn full_discrete(dim: usize) -> Self {
        Self::discrete(0..dim)
    }

    /// Union of closed intervals. Overlapping or touching intervals are merged.
    pub fn intervals<I: IntoIterator<Item = (f64, f64)>>(intervals: I) -> Result<Self> {
        let mut list = Vec::new();
        for (lo, hi) in intervals {
            if lo.is_nan() || hi.is_nan() {
                return Err(Error::InvalidEvent("interval endpoint is NaN".into()));
            }
            if lo > hi {
                return Err(Error::InvalidEvent(format!("interval [{lo}, {hi}] has lo > hi")));
            }
            list.push(Interval { lo, hi });
        }
        Ok(Self { kind: EventKind::IntervalUnion(merge_intervals(list)) })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::intervals([(lo, hi)])
    }

    /// The whole real line, Ω for a continuous axis.
    pub fn whole_line() -> Self {
        Self { kind: EventKind::IntervalUnion(vec![Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }]) }
    }

    pub fn empty_line() -> Self {
        Self { kind: EventKind::IntervalUnion(Vec::new()) }
    }

    pub fn mask(flags: Vec<bool>) -> Self {
        Self { kind: EventKind::GridMask(flags) }
    }

    /// Product event, one factor per axis.
    pub fn product(axes: Vec<Event>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidEvent("product event needs at least one axis".into()));
        }
        Ok(Self { kind: EventKind::Product(axes) })
    }

    /// Ω for a two-axis grid.
    pub fn whole_plane() -> Self {
        Self { kind: EventKind::Product(vec![Self::whole_line(), Self::whole_line()]) }
    }

    pub fn fock(predicate: FockPredicate) -> Self {
        Self { kind: EventKind::FockPredicate(predicate) }
    }

    pub fn variant_name(&self) -> &'static str {
        match self.kind {
            EventKind::DiscreteSet(_) => "DiscreteSet",
            EventKind::IntervalUnion(_) => "IntervalUnion",
            EventKind::GridMask(_) => "GridMask",
            EventKind::Product(_) => "Product",
            EventKind::FockPredicate(_) => "FockPredicate",
        }
    }

    pub fn intersect(&self, other: &Event) -> Result<Event> {
        event_intersect(self, other)
    }

    /// Set union, defined for the same variants as intersection except Fock predicates.
    pub fn union(&self, other: &Event) -> Result<Event> {
        use EventKind::*;
        let kind = match (&self.kind, &other.kind) {
            (DiscreteSet(a), DiscreteSet(b)) => DiscreteSet(a.union(b).copied().collect()),
            (IntervalUnion(a), IntervalUnion(b)) => {
                IntervalUnion(merge_intervals(a.iter().chain(b).copied().collect()))
            }
            (GridMask(a), GridMask(b)) => {
                check_len(a.len(), b.len())?;
                GridMask(a.iter().zip(b).map(|(&x, &y)| x || y).collect())
            }
            _ => return Err(incompatible(self, other)),
        };
        Ok(Event { kind })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EventKind::DiscreteSet(s) => {
                let items: Vec<String> = s.iter().map(|i| i.to_string()).collect();
                write!(f, "{{{}}}", items.join(","))
            }
            EventKind::IntervalUnion(list) if list.is_empty() => write!(f, "∅"),
            EventKind::IntervalUnion(list) => {
                let items: Vec<String> = list.iter().map(|i| format!("[{},{}]", i.lo, i.hi)).collect();
                write!(f, "{}", items.join("∪"))
            }
            EventKind::GridMask(m) => write!(f, "mask({}/{})", m.iter().filter(|&&b| b).count(), m.len()),
            EventKind::Product(axes) => {
                let items: Vec<String> = axes.iter().map(|a| a.to_string()).collect();
                write!(f, "{}", items.join("×"))
            }
            EventKind::FockPredicate(p) => {
                let mut parts: Vec<String> =
                    p.modes().map(|(m, r)| format!("n{m}∈[{},{}]", r.min, r.max)).collect();
                if let Some(t) = p.total() {
                    parts.push(format!("N∈[{},{}]", t.min, t.max));
                }
                if parts.is_empty() {
                    write!(f, "all")
                } else {
                    write!(f, "{}", parts.join("∧"))
                }
            }
        }
    }
}

/// Normalized intersection of two events of the same variant.
pub fn event_intersect(a: &Event, b: &Event) -> Result<Event> {
    use EventKind::*;
    let kind = match (&a.kind, &b.kind) {
        (DiscreteSet(x), DiscreteSet(y)) => DiscreteSet(x.intersection(y).copied().collect()),
        (IntervalUnion(x), IntervalUnion(y)) => IntervalUnion(intersect_intervals(x, y)),
        (GridMask(x), GridMask(y)) => {
            check_len(x.len(), y.len())?;
            GridMask(x.iter().zip(y).map(|(&p, &q)| p && q).collect())
        }
        (Product(x), Product(y)) => {
            check_len(x.len(), y.len())?;
            Product(x.iter().zip(y).map(|(p, q)| event_intersect(p, q)).collect::<Result<_>>()?)
        }
        (FockPredicate(x), FockPredicate(y)) => FockPredicate(x.intersect(y)),
        _ => return Err(incompatible(a, b)),
    };
    Ok(Event { kind })
}

fn incompatible(a: &Event, b: &Event) -> Error {
    Error::IncompatibleEvents { left: a.variant_name(), right: b.variant_name() }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn merge_intervals(mut list: Vec<Interval>) -> Vec<Interval> {
    list.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut out: Vec<Interval> = Vec::with_capacity(list.len());
    for iv in list {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

fn intersect_intervals(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].lo.max(b[j].lo);
        let hi = a[i].hi.min(b[j].hi);
        if lo <= hi {
            out.push(Interval { lo, hi });
        }
        if a[i].hi < b[j].hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    merge_intervals(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ivs(e: &Event) -> Vec<(f64, f64)> {
        match e.kind() {
            EventKind::IntervalUnion(l) => l.iter().map(|i| (i.lo, i.hi)).collect(),
            _ => panic!("not intervals"),
        }
    }

    #[test]
    fn discrete_intersection() {
        let a = Event::discrete([1, 2, 3]);
        let b = Event::discrete([2, 3, 5]);
        assert_eq!(event_intersect(&a, &b).unwrap(), Event::discrete([2, 3]));
    }

    #[test]
    fn interval_overlap() {
        let a = Event::interval(0.0, 2.0).unwrap();
        let b = Event::interval(1.0, 3.0).unwrap();
        assert_eq!(ivs(&event_intersect(&a, &b).unwrap()), vec![(1.0, 2.0)]);
    }

    #[test]
    fn interval_normalization_merges_and_is_idempotent() {
        let e = Event::intervals([(3.0, 4.0), (0.0, 1.0), (0.5, 2.0), (2.0, 2.5)]).unwrap();
        assert_eq!(ivs(&e), vec![(0.0, 2.5), (3.0, 4.0)]);
        let again = Event::intervals(ivs(&e)).unwrap();
        assert_eq!(again, e);
    }

    #[test]
    fn interval_intersection_of_unions() {
        let a = Event::intervals([(0.0, 1.0), (2.0, 5.0)]).unwrap();
        let b = Event::intervals([(0.5, 2.5), (4.0, 6.0)]).unwrap();
        assert_eq!(ivs(&a.intersect(&b).unwrap()), vec![(0.5, 1.0), (2.0, 2.5), (4.0, 5.0)]);
    }

    #[test]
    fn invalid_intervals_rejected() {
        assert!(Event::interval(2.0, 1.0).is_err());
        assert!(Event::interval(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn omega_is_identity_for_intersection() {
        let a = Event::discrete([0, 3, 7]);
        assert_eq!(a.intersect(&Event::full_discrete(8)).unwrap(), a);
        let line = Event::interval(-1.0, 1.0).unwrap();
        assert_eq!(line.intersect(&Event::whole_line()).unwrap(), line);
    }

    #[test]
    fn variant_mismatch_is_an_error() {
        let err = Event::discrete([1]).intersect(&Event::whole_line()).unwrap_err();
        assert!(matches!(err, Error::IncompatibleEvents { .. }));
        let err = Event::mask(vec![true]).intersect(&Event::mask(vec![true, false])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn product_intersects_per_axis() {
        let a = Event::product(vec![Event::interval(0.0, 2.0).unwrap(), Event::whole_line()]).unwrap();
        let b = Event::product(vec![Event::whole_line(), Event::interval(-1.0, 0.0).unwrap()]).unwrap();
        let c = a.intersect(&b).unwrap();
        match c.kind() {
            EventKind::Product(axes) => {
                assert_eq!(ivs(&axes[0]), vec![(0.0, 2.0)]);
                assert_eq!(ivs(&axes[1]), vec![(-1.0, 0.0)]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn fock_predicates_combine() {
        let a = Event::fock(FockPredicate::any().with_mode(0, OccupationRange::new(0, 2)));
        let b = Event::fock(FockPredicate::any().with_mode(0, OccupationRange::new(1, 5)).with_total(OccupationRange::exactly(2)));
        let c = a.intersect(&b).unwrap();
        let EventKind::FockPredicate(p) = c.kind() else { panic!() };
        assert!(p.matches(&[1, 1]));
        assert!(p.matches(&[2, 0]));
        assert!(!p.matches(&[0, 2]));
        assert!(!p.matches(&[1, 2]));
    }

    #[test]
    fn union_of_disjoint_sets() {
        let u = Event::discrete([0, 1]).union(&Event::discrete([4])).unwrap();
        assert_eq!(u, Event::discrete([0, 1, 4]));
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(Event::discrete([2, 0]).to_string(), "{0,2}");
        assert_eq!(Event::interval(0.0, 1.5).unwrap().to_string(), "[0,1.5]");
        let p = FockPredicate::any().with_mode(1, OccupationRange::exactly(1));
        assert_eq!(Event::fock(p).to_string(), "n1∈[1,1]");
    }
}
