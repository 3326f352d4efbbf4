//! Experimental logic: outcomes, measurements, sequences, and the series,
//! parallel and composition operators.
//!
//! Outcomes are index-sets over a measurement's atomic outcomes (0-based
//! internally, 1-based when displayed), so coarse-graining is set union.
//! Composite measurements flatten their atomic outcomes row-major:
//! `(j, k) -> j * n_right + k`, which makes composition associative on the
//! nose.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("a sequence needs at least two events, got {0}")]
    TooShort(usize),
    #[error("event times must be strictly increasing (event {0})")]
    NonIncreasingTimes(usize),
    #[error("expected {expected} interactions for the intervals, found {found}")]
    InteractionCount { expected: usize, found: usize },
    #[error("the first event of a sequence must have an atomic outcome")]
    NonAtomicStart,
    #[error("outcome index-set is empty")]
    EmptyOutcome,
    #[error("outcome index {index} out of range for a measurement with {count} atomic outcomes")]
    OutcomeOutOfRange { index: usize, count: usize },
    #[error("final event of the first sequence does not match the initial event of the second")]
    MismatchedJunction,
    #[error("series combination needs atomic outcomes at both endpoints and the junction")]
    NonAtomicEndpoint,
    #[error("sequences are not parallel-compatible: {0}")]
    NotParallelCompatible(&'static str),
    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("event times differ at position {0}")]
    TimeMismatch(usize),
    #[error("composed sequences must belong to distinct systems")]
    SameSystem,
    #[error("invalid partition: {0}")]
    InvalidPartition(&'static str),
    #[error("measurement must have at least two atomic outcomes, got {0}")]
    TooFewOutcomes(usize),
}

/// Identifier of a (possibly composite) physical system. Composite systems
/// list their atomic components in composition order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SystemId(Vec<String>);

impl SystemId {
    pub fn new(name: impl Into<String>) -> Self {
        SystemId(alloc::vec![name.into()])
    }

    pub fn components(&self) -> &[String] {
        &self.0
    }

    pub fn compose(&self, other: &SystemId) -> SystemId {
        SystemId(self.0.iter().chain(&other.0).cloned().collect())
    }

    pub fn is_disjoint(&self, other: &SystemId) -> bool {
        self.0.iter().all(|c| !other.0.contains(c))
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("⊗"))
    }
}

/// Identifier of a (possibly composite) measurement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementId(Vec<String>);

impl MeasurementId {
    pub fn new(name: impl Into<String>) -> Self {
        MeasurementId(alloc::vec![name.into()])
    }

    pub fn components(&self) -> &[String] {
        &self.0
    }

    pub fn is_composite(&self) -> bool {
        self.0.len() > 1
    }

    pub fn compose(&self, other: &MeasurementId) -> MeasurementId {
        MeasurementId(self.0.iter().chain(&other.0).cloned().collect())
    }
}

impl fmt::Display for MeasurementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("⊗"))
    }
}

/// One system's share of an interval's interaction. `reversed` marks the
/// temporal inverse of the named interaction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InteractionPart {
    pub name: String,
    pub reversed: bool,
}

/// Interaction acting during one inter-event interval; composite intervals
/// carry one part per component system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InteractionId(Vec<InteractionPart>);

impl InteractionId {
    /// Name of the do-nothing interaction (zero-duration or free interval).
    pub const IDENTITY: &'static str = "identity";

    pub fn new(name: impl Into<String>) -> Self {
        InteractionId(alloc::vec![InteractionPart {
            name: name.into(),
            reversed: false,
        }])
    }

    pub fn identity() -> Self {
        Self::new(Self::IDENTITY)
    }

    /// Identity on a composite of `systems` components.
    pub fn identity_on(systems: usize) -> Self {
        InteractionId(
            (0..systems.max(1))
                .map(|_| InteractionPart {
                    name: Self::IDENTITY.into(),
                    reversed: false,
                })
                .collect(),
        )
    }

    pub fn parts(&self) -> &[InteractionPart] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|p| p.name == Self::IDENTITY)
    }

    /// Temporal inverse. The identity interaction is its own inverse.
    pub fn inverse(&self) -> InteractionId {
        InteractionId(
            self.0
                .iter()
                .map(|p| InteractionPart {
                    name: p.name.clone(),
                    reversed: p.name != Self::IDENTITY && !p.reversed,
                })
                .collect(),
        )
    }

    pub fn compose(&self, other: &InteractionId) -> InteractionId {
        InteractionId(self.0.iter().chain(&other.0).cloned().collect())
    }
}

impl fmt::Display for InteractionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|p| if p.reversed { alloc::format!("{}⁻¹", p.name) } else { p.name.clone() })
            .collect();
        f.write_str(&parts.join("⊗"))
    }
}

/// Nonempty set of atomic outcome indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomeSet(BTreeSet<usize>);

impl OutcomeSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self, LogicError> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if set.is_empty() {
            return Err(LogicError::EmptyOutcome);
        }
        Ok(OutcomeSet(set))
    }

    pub fn atomic(index: usize) -> Self {
        OutcomeSet(core::iter::once(index).collect())
    }

    /// All of `0..count`: the outcome of a trivial measurement.
    pub fn full(count: usize) -> Self {
        OutcomeSet((0..count).collect())
    }

    pub fn is_atomic(&self) -> bool {
        self.0.len() == 1
    }

    /// The single index of an atomic outcome.
    pub fn atomic_index(&self) -> Option<usize> {
        if self.is_atomic() {
            self.0.iter().next().copied()
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.contains(&index)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn max_index(&self) -> usize {
        *self.0.iter().next_back().expect("outcome sets are nonempty")
    }

    pub fn is_disjoint(&self, other: &OutcomeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn is_subset(&self, other: &OutcomeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &OutcomeSet) -> OutcomeSet {
        OutcomeSet(self.0.union(&other.0).copied().collect())
    }

    /// Row-major product with an outcome set of a measurement with
    /// `right_count` atomic outcomes.
    pub fn product(&self, other: &OutcomeSet, right_count: usize) -> OutcomeSet {
        OutcomeSet(
            self.0
                .iter()
                .flat_map(|&j| other.0.iter().map(move |&k| j * right_count + k))
                .collect(),
        )
    }
}

impl fmt::Display for OutcomeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// A measurement as referenced from a sequence: identity plus the size of
/// its atomic outcome universe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementRef {
    pub id: MeasurementId,
    pub atomic_count: usize,
}

impl MeasurementRef {
    pub fn new(name: impl Into<String>, atomic_count: usize) -> Self {
        MeasurementRef {
            id: MeasurementId::new(name),
            atomic_count,
        }
    }

    pub fn compose(&self, other: &MeasurementRef) -> MeasurementRef {
        MeasurementRef {
            id: self.id.compose(&other.id),
            atomic_count: self.atomic_count * other.atomic_count,
        }
    }
}

impl fmt::Display for MeasurementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.id, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Atomic,
    CoarseGrained,
    Trivial,
}

/// A measurement together with the partition its detectors realise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measurement {
    reference: MeasurementRef,
    partition: Vec<OutcomeSet>,
}

impl Measurement {
    /// Atomic measurement with `atomic_count` singleton outcomes.
    pub fn atomic(name: impl Into<String>, atomic_count: usize) -> Result<Self, LogicError> {
        Self::atomic_from(MeasurementRef::new(name, atomic_count))
    }

    pub fn atomic_from(reference: MeasurementRef) -> Result<Self, LogicError> {
        if reference.atomic_count < 2 {
            return Err(LogicError::TooFewOutcomes(reference.atomic_count));
        }
        let partition = (0..reference.atomic_count).map(OutcomeSet::atomic).collect();
        Ok(Measurement { reference, partition })
    }

    /// Trivial (single-outcome) form of a measurement.
    pub fn trivial(reference: MeasurementRef) -> Result<Self, LogicError> {
        if reference.atomic_count < 2 {
            return Err(LogicError::TooFewOutcomes(reference.atomic_count));
        }
        let full = OutcomeSet::full(reference.atomic_count);
        Ok(Measurement {
            reference,
            partition: alloc::vec![full],
        })
    }

    /// Measurement with an explicit partition of its atomic outcomes.
    pub fn with_partition(reference: MeasurementRef, blocks: Vec<OutcomeSet>) -> Result<Self, LogicError> {
        if reference.atomic_count < 2 {
            return Err(LogicError::TooFewOutcomes(reference.atomic_count));
        }
        validate_partition(reference.atomic_count, &blocks)?;
        let mut partition = blocks;
        partition.sort();
        Ok(Measurement { reference, partition })
    }

    pub fn reference(&self) -> &MeasurementRef {
        &self.reference
    }

    pub fn id(&self) -> &MeasurementId {
        &self.reference.id
    }

    pub fn atomic_count(&self) -> usize {
        self.reference.atomic_count
    }

    /// Blocks sorted by their smallest index.
    pub fn partition(&self) -> &[OutcomeSet] {
        &self.partition
    }

    pub fn kind(&self) -> MeasurementKind {
        if self.partition.len() == 1 {
            MeasurementKind::Trivial
        } else if self.partition.iter().all(OutcomeSet::is_atomic) {
            MeasurementKind::Atomic
        } else {
            MeasurementKind::CoarseGrained
        }
    }

    /// Index of the block containing atomic outcome `index`.
    pub fn block_of(&self, index: usize) -> Option<usize> {
        self.partition.iter().position(|b| b.contains(index))
    }

    /// Composite measurement with the row-major product partition.
    pub fn compose(&self, other: &Measurement) -> Measurement {
        let n2 = other.atomic_count();
        let mut partition: Vec<OutcomeSet> = self
            .partition
            .iter()
            .flat_map(|a| other.partition.iter().map(move |b| a.product(b, n2)))
            .collect();
        partition.sort();
        Measurement {
            reference: self.reference.compose(&other.reference),
            partition,
        }
    }
}

fn validate_partition(count: usize, blocks: &[OutcomeSet]) -> Result<(), LogicError> {
    if blocks.is_empty() {
        return Err(LogicError::InvalidPartition("no blocks"));
    }
    let mut seen = BTreeSet::new();
    for block in blocks {
        for i in block.iter() {
            if i >= count {
                return Err(LogicError::InvalidPartition("index out of range"));
            }
            if !seen.insert(i) {
                return Err(LogicError::InvalidPartition("blocks overlap"));
            }
        }
    }
    if seen.len() != count {
        return Err(LogicError::InvalidPartition("blocks do not cover every atomic outcome"));
    }
    Ok(())
}

/// Coarse-grains `measurement` into `blocks`, which must form a partition
/// no finer than the measurement's current one.
pub fn coarse_grain(measurement: &Measurement, blocks: Vec<OutcomeSet>) -> Result<Measurement, LogicError> {
    validate_partition(measurement.atomic_count(), &blocks)?;
    let coarser = measurement
        .partition
        .iter()
        .all(|old| blocks.iter().any(|new| old.is_subset(new)));
    if !coarser {
        return Err(LogicError::InvalidPartition("finer than the existing partition"));
    }
    Measurement::with_partition(measurement.reference.clone(), blocks)
}

/// One (time, measurement, outcome) record of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub time: i64,
    pub measurement: MeasurementRef,
    pub outcome: OutcomeSet,
}

impl Event {
    pub fn new(time: i64, measurement: MeasurementRef, outcome: OutcomeSet) -> Result<Self, LogicError> {
        if outcome.max_index() >= measurement.atomic_count {
            return Err(LogicError::OutcomeOutOfRange {
                index: outcome.max_index(),
                count: measurement.atomic_count,
            });
        }
        Ok(Event {
            time,
            measurement,
            outcome,
        })
    }

    pub fn atomic(time: i64, measurement: MeasurementRef, index: usize) -> Result<Self, LogicError> {
        Self::new(time, measurement, OutcomeSet::atomic(index))
    }

    /// Event recording block `block` of `measurement`'s partition.
    pub fn of_block(time: i64, measurement: &Measurement, block: usize) -> Option<Self> {
        measurement.partition.get(block).map(|outcome| Event {
            time,
            measurement: measurement.reference.clone(),
            outcome: outcome.clone(),
        })
    }

    pub fn is_atomic(&self) -> bool {
        self.outcome.is_atomic()
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}@{}", self.measurement, self.outcome, self.time)
    }
}

/// Composite outcome `(left, right)` of simultaneous measurements on two
/// distinct systems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeOutcome {
    pub left: Event,
    pub right: Event,
}

impl CompositeOutcome {
    pub fn new(left: Event, right: Event) -> Result<Self, LogicError> {
        if left.time != right.time {
            return Err(LogicError::TimeMismatch(0));
        }
        if left.measurement.id == right.measurement.id {
            return Err(LogicError::SameSystem);
        }
        Ok(CompositeOutcome { left, right })
    }

    /// The flattened event on the composite measurement.
    pub fn flatten(&self) -> Event {
        Event {
            time: self.left.time,
            measurement: self.left.measurement.compose(&self.right.measurement),
            outcome: self
                .left
                .outcome
                .product(&self.right.outcome, self.right.measurement.atomic_count),
        }
    }
}

/// Ordered record of one experimental run: the operational Feynman path.
///
/// Equality is structural: system, event times, measurements, outcome
/// index-sets and interval interactions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sequence {
    system: SystemId,
    events: Vec<Event>,
    interactions: Vec<InteractionId>,
}

impl Sequence {
    pub fn new(system: SystemId, events: Vec<Event>, interactions: Vec<InteractionId>) -> Result<Self, LogicError> {
        if events.len() < 2 {
            return Err(LogicError::TooShort(events.len()));
        }
        if interactions.len() != events.len() - 1 {
            return Err(LogicError::InteractionCount {
                expected: events.len() - 1,
                found: interactions.len(),
            });
        }
        if let Some(i) = events.windows(2).position(|w| w[1].time <= w[0].time) {
            return Err(LogicError::NonIncreasingTimes(i + 1));
        }
        if !events[0].is_atomic() {
            return Err(LogicError::NonAtomicStart);
        }
        Ok(Sequence {
            system,
            events,
            interactions,
        })
    }

    /// Sequence with the identity interaction on every interval.
    pub fn free(system: SystemId, events: Vec<Event>) -> Result<Self, LogicError> {
        let n = events.len().saturating_sub(1);
        Self::new(system, events, alloc::vec![InteractionId::identity(); n])
    }

    pub fn system(&self) -> &SystemId {
        &self.system
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn interactions(&self) -> &[InteractionId] {
        &self.interactions
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> &Event {
        &self.events[0]
    }

    pub fn last(&self) -> &Event {
        &self.events[self.events.len() - 1]
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.events.iter().enumerate() {
            if i > 0 {
                write!(f, " -{}-> ", self.interactions[i - 1])?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]")
    }
}

/// Series combination `A ∙ B`: concatenation at a shared atomic event.
pub fn series(a: &Sequence, b: &Sequence) -> Result<Sequence, LogicError> {
    if a.system != b.system || a.last() != b.first() {
        return Err(LogicError::MismatchedJunction);
    }
    if !a.last().is_atomic() || !b.last().is_atomic() || !a.first().is_atomic() {
        return Err(LogicError::NonAtomicEndpoint);
    }
    let events = a.events.iter().chain(&b.events[1..]).cloned().collect();
    let interactions = a.interactions.iter().chain(&b.interactions).cloned().collect();
    Sequence::new(a.system.clone(), events, interactions)
}

/// Parallel combination `A ∨ B`: merge two sequences that differ only in the
/// outcome of one interior measurement.
pub fn parallel(a: &Sequence, b: &Sequence) -> Result<Sequence, LogicError> {
    use LogicError::NotParallelCompatible as Incompatible;
    if a.system != b.system {
        return Err(Incompatible("different systems"));
    }
    if a.len() != b.len() {
        return Err(Incompatible("different lengths"));
    }
    if a.interactions != b.interactions {
        return Err(Incompatible("different interactions"));
    }
    let mut differing = None;
    for (k, (ea, eb)) in a.events.iter().zip(&b.events).enumerate() {
        if ea.time != eb.time || ea.measurement != eb.measurement {
            return Err(Incompatible("different measurement layout"));
        }
        if ea.outcome != eb.outcome {
            if differing.is_some() {
                return Err(Incompatible("outcomes differ at more than one event"));
            }
            differing = Some(k);
        }
    }
    let k = differing.ok_or(Incompatible("sequences are identical"))?;
    if k == 0 || k == a.len() - 1 {
        return Err(Incompatible("outcomes differ at an endpoint"));
    }
    let (oa, ob) = (&a.events[k].outcome, &b.events[k].outcome);
    if !oa.is_disjoint(ob) {
        return Err(Incompatible("outcome index-sets overlap"));
    }
    let mut merged = a.clone();
    merged.events[k].outcome = oa.union(ob);
    Ok(merged)
}

/// Composition `A ⊙ B` of simultaneous sequences on distinct systems.
pub fn compose(a: &Sequence, b: &Sequence) -> Result<Sequence, LogicError> {
    if a.len() != b.len() {
        return Err(LogicError::LengthMismatch(a.len(), b.len()));
    }
    if let Some(k) = a.events.iter().zip(&b.events).position(|(x, y)| x.time != y.time) {
        return Err(LogicError::TimeMismatch(k));
    }
    if !a.system.is_disjoint(&b.system) {
        return Err(LogicError::SameSystem);
    }
    let events = a
        .events
        .iter()
        .zip(&b.events)
        .map(|(x, y)| {
            CompositeOutcome {
                left: x.clone(),
                right: y.clone(),
            }
            .flatten()
        })
        .collect();
    let interactions = a
        .interactions
        .iter()
        .zip(&b.interactions)
        .map(|(x, y)| x.compose(y))
        .collect();
    Sequence::new(a.system.compose(&b.system), events, interactions)
}

/// Temporal inverse: events reversed, times mapped `t -> -t`, interactions
/// reversed and inverted.
///
/// Fails with [`LogicError::NonAtomicEndpoint`] when the final outcome is
/// coarse-grained, since it would become a non-atomic first event.
pub fn invert(a: &Sequence) -> Result<Sequence, LogicError> {
    if !a.last().is_atomic() {
        return Err(LogicError::NonAtomicEndpoint);
    }
    let events = a
        .events
        .iter()
        .rev()
        .map(|e| Event {
            time: -e.time,
            ..e.clone()
        })
        .collect();
    let interactions = a.interactions.iter().rev().map(InteractionId::inverse).collect();
    Sequence::new(a.system.clone(), events, interactions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m(name: &str) -> MeasurementRef {
        MeasurementRef::new(name, 2)
    }

    fn ev(t: i64, name: &str, outcome: &[usize]) -> Event {
        Event::new(t, m(name), OutcomeSet::new(outcome.iter().copied()).unwrap()).unwrap()
    }

    fn seq(events: Vec<Event>) -> Sequence {
        Sequence::free(SystemId::new("s"), events).unwrap()
    }

    #[test]
    fn series_shares_junction_once() {
        let a = seq(vec![ev(1, "L", &[0]), ev(2, "M", &[0])]);
        let b = seq(vec![ev(2, "M", &[0]), ev(3, "N", &[1])]);
        let c = series(&a, &b).unwrap();
        assert_eq!(c.events(), &[ev(1, "L", &[0]), ev(2, "M", &[0]), ev(3, "N", &[1])]);
        assert_eq!(c.interactions().len(), 2);
    }

    #[test]
    fn series_rejects_mismatched_junction() {
        let a = seq(vec![ev(1, "L", &[0]), ev(2, "M", &[0])]);
        let b = seq(vec![ev(2, "M", &[1]), ev(3, "N", &[0])]);
        assert_eq!(series(&a, &b), Err(LogicError::MismatchedJunction));
        let late = seq(vec![ev(5, "M", &[0]), ev(6, "N", &[0])]);
        assert_eq!(series(&a, &late), Err(LogicError::MismatchedJunction));
    }

    #[test]
    fn series_rejects_coarse_endpoints() {
        let a = seq(vec![ev(1, "L", &[0]), ev(2, "M", &[0])]);
        let b = seq(vec![ev(2, "M", &[0]), ev(3, "N", &[0, 1])]);
        assert_eq!(series(&a, &b), Err(LogicError::NonAtomicEndpoint));
        let a2 = seq(vec![ev(1, "L", &[0]), ev(2, "M", &[0, 1])]);
        let b2 = Sequence::free(SystemId::new("s"), vec![ev(2, "M", &[0, 1]), ev(3, "N", &[0])]);
        assert_eq!(b2, Err(LogicError::NonAtomicStart));
        assert!(series(&a2, &a2).is_err());
    }

    #[test]
    fn parallel_merges_interior_outcome() {
        let a = seq(vec![ev(1, "L", &[0]), ev(2, "M", &[0]), ev(3, "N", &[0])]);
        let b = seq(vec![ev(1, "L", &[0]), ev(2, "M", &[1]), ev(3, "N", &[0])]);
        let e = parallel(&a, &b).unwrap();
        assert_eq!(e.events()[1].outcome, OutcomeSet::new([0, 1]).unwrap());
        assert_eq!(e, parallel(&b, &a).unwrap());
    }

    #[test]
    fn parallel_rejects_endpoint_and_overlap() {
        let a = seq(vec![ev(1, "L", &[0]), ev(2, "M", &[0]), ev(3, "N", &[0])]);
        let b = seq(vec![ev(1, "L", &[1]), ev(2, "M", &[0]), ev(3, "N", &[0])]);
        assert!(matches!(parallel(&a, &b), Err(LogicError::NotParallelCompatible(_))));
        let c = seq(vec![ev(1, "L", &[0]), ev(2, "M", &[0]), ev(3, "N", &[1])]);
        assert!(matches!(parallel(&a, &c), Err(LogicError::NotParallelCompatible(_))));
        let three = |o: &[usize]| {
            Sequence::free(
                SystemId::new("s"),
                vec![
                    ev(1, "L", &[0]),
                    Event::new(2, MeasurementRef::new("M", 3), OutcomeSet::new(o.iter().copied()).unwrap()).unwrap(),
                    ev(3, "N", &[0]),
                ],
            )
            .unwrap()
        };
        assert!(parallel(&three(&[0, 1]), &three(&[1, 2])).is_err());
        assert!(parallel(&three(&[0, 1]), &three(&[2])).is_ok());
        assert!(parallel(&a, &a).is_err());
    }

    #[test]
    fn compose_builds_row_major_outcomes() {
        let a = Sequence::free(SystemId::new("s1"), vec![ev(1, "L1", &[0]), ev(2, "M1", &[0]), ev(3, "N1", &[0])]).unwrap();
        let b = Sequence::free(SystemId::new("s2"), vec![ev(1, "L2", &[0]), ev(2, "M2", &[1]), ev(3, "N2", &[0])]).unwrap();
        let c = compose(&a, &b).unwrap();
        assert_eq!(c.events()[1].outcome, OutcomeSet::atomic(1));
        assert_eq!(c.events()[1].measurement.atomic_count, 4);
        assert_eq!(c.system().components().len(), 2);

        let b2 = Sequence::free(SystemId::new("s2"), vec![ev(1, "L2", &[0]), ev(2, "M2", &[0, 1]), ev(3, "N2", &[0])]).unwrap();
        let c2 = compose(&a, &b2).unwrap();
        // (m1, m2) ∨ (m1, m2')
        assert_eq!(c2.events()[1].outcome, OutcomeSet::new([0, 1]).unwrap());
    }

    #[test]
    fn compose_errors() {
        let a = Sequence::free(SystemId::new("s1"), vec![ev(1, "L", &[0]), ev(2, "M", &[0])]).unwrap();
        let longer = Sequence::free(SystemId::new("s2"), vec![ev(1, "L", &[0]), ev(2, "M", &[0]), ev(3, "M", &[0])]).unwrap();
        assert_eq!(compose(&a, &longer), Err(LogicError::LengthMismatch(2, 3)));
        let shifted = Sequence::free(SystemId::new("s2"), vec![ev(1, "L", &[0]), ev(4, "M", &[0])]).unwrap();
        assert_eq!(compose(&a, &shifted), Err(LogicError::TimeMismatch(1)));
        assert_eq!(compose(&a, &a), Err(LogicError::SameSystem));
    }

    #[test]
    fn coarse_grain_partitions() {
        let m2 = Measurement::atomic("M", 2).unwrap();
        let t = coarse_grain(&m2, vec![OutcomeSet::full(2)]).unwrap();
        assert_eq!(t.kind(), MeasurementKind::Trivial);

        let m4 = Measurement::atomic("M", 4).unwrap();
        let cg = coarse_grain(
            &m4,
            vec![OutcomeSet::new([0, 1]).unwrap(), OutcomeSet::atomic(2), OutcomeSet::atomic(3)],
        )
        .unwrap();
        assert_eq!(cg.kind(), MeasurementKind::CoarseGrained);

        let overlap = coarse_grain(&m2, vec![OutcomeSet::atomic(0), OutcomeSet::new([0, 1]).unwrap()]);
        assert!(matches!(overlap, Err(LogicError::InvalidPartition(_))));

        // going back to a finer partition is not coarse-graining
        assert!(coarse_grain(&cg, m4.partition().to_vec()).is_err());
        // idempotent on its own partition
        assert_eq!(coarse_grain(&cg, cg.partition().to_vec()).unwrap(), cg);
    }

    #[test]
    fn invert_reverses_and_is_involutive() {
        let a = Sequence::new(
            SystemId::new("s"),
            vec![ev(1, "L", &[0]), ev(2, "M", &[1])],
            vec![InteractionId::new("kick")],
        )
        .unwrap();
        let inv = invert(&a).unwrap();
        assert_eq!(inv.events()[0].measurement, m("M"));
        assert_eq!(inv.events()[1].measurement, m("L"));
        assert!(inv.interactions()[0].parts()[0].reversed);
        assert_eq!(invert(&inv).unwrap(), a);
    }

    #[test]
    fn invert_is_anti_homomorphism_of_series() {
        let a = seq(vec![ev(1, "L", &[0]), ev(2, "M", &[1])]);
        let b = Sequence::new(
            SystemId::new("s"),
            vec![ev(2, "M", &[1]), ev(3, "N", &[0])],
            vec![InteractionId::new("kick")],
        )
        .unwrap();
        let lhs = invert(&series(&a, &b).unwrap()).unwrap();
        let rhs = series(&invert(&b).unwrap(), &invert(&a).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn outcome_range_checked() {
        assert!(matches!(
            Event::atomic(0, m("M"), 2),
            Err(LogicError::OutcomeOutOfRange { index: 2, count: 2 })
        ));
        assert_eq!(OutcomeSet::new([]), Err(LogicError::EmptyOutcome));
    }
}
