//! Random operand tuples for the algebraic identities of `∙`, `∨` and `⊙`,
//! checked as structural sequence equality.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::logic::{compose, parallel, series, Event, InteractionId, LogicError, MeasurementRef, OutcomeSet, Sequence, SystemId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Identity {
    ParallelCommutative,
    ParallelAssociative,
    SeriesAssociative,
    SeriesLeftDistributive,
    SeriesRightDistributive,
    CompositionAssociative,
    CrossMultiplicative,
    CompositionLeftDistributive,
    CompositionRightDistributive,
}

impl Identity {
    pub const ALL: [Identity; 9] = [
        Identity::ParallelCommutative,
        Identity::ParallelAssociative,
        Identity::SeriesAssociative,
        Identity::SeriesLeftDistributive,
        Identity::SeriesRightDistributive,
        Identity::CompositionAssociative,
        Identity::CrossMultiplicative,
        Identity::CompositionLeftDistributive,
        Identity::CompositionRightDistributive,
    ];

    pub fn formula(self) -> &'static str {
        match self {
            Identity::ParallelCommutative => "A ∨ B = B ∨ A",
            Identity::ParallelAssociative => "(A ∨ B) ∨ C = A ∨ (B ∨ C)",
            Identity::SeriesAssociative => "(A ∙ B) ∙ C = A ∙ (B ∙ C)",
            Identity::SeriesLeftDistributive => "(A ∨ B) ∙ C = (A ∙ C) ∨ (B ∙ C)",
            Identity::SeriesRightDistributive => "C ∙ (A ∨ B) = (C ∙ A) ∨ (C ∙ B)",
            Identity::CompositionAssociative => "(A ⊙ B) ⊙ C = A ⊙ (B ⊙ C)",
            Identity::CrossMultiplicative => "(A ∙ B) ⊙ (C ∙ D) = (A ⊙ C) ∙ (B ⊙ D)",
            Identity::CompositionLeftDistributive => "(A ∨ B) ⊙ C = (A ⊙ C) ∨ (B ⊙ C)",
            Identity::CompositionRightDistributive => "C ⊙ (A ∨ B) = (C ⊙ A) ∨ (C ⊙ B)",
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.formula())
    }
}

const INTERACTIONS: [&str; 3] = [InteractionId::IDENTITY, "kick", "drift"];
const MEASUREMENTS: usize = 3;

/// Draws sequences on one system whose measurements all have `dim`
/// outcomes.
#[derive(Debug, Clone)]
pub struct SequenceGenerator {
    system: String,
    dim: usize,
}

impl SequenceGenerator {
    pub fn new(system: impl Into<String>, dim: usize) -> Self {
        SequenceGenerator {
            system: system.into(),
            dim,
        }
    }

    pub fn system(&self) -> SystemId {
        SystemId::new(self.system.clone())
    }

    fn measurement<R: Rng + ?Sized>(&self, rng: &mut R) -> MeasurementRef {
        MeasurementRef::new(format!("{}.M{}", self.system, rng.random_range(0..MEASUREMENTS)), self.dim)
    }

    fn subset<R: Rng + ?Sized>(&self, rng: &mut R) -> OutcomeSet {
        loop {
            let picked: Vec<usize> = (0..self.dim).filter(|_| rng.random_bool(0.5)).collect();
            if let Ok(s) = OutcomeSet::new(picked) {
                return s;
            }
        }
    }

    fn interaction<R: Rng + ?Sized>(rng: &mut R) -> InteractionId {
        let id = InteractionId::new(*INTERACTIONS.choose(rng).expect("non-empty"));
        if rng.random_bool(0.25) {
            id.inverse()
        } else {
            id
        }
    }

    /// Sequence at the given times with atomic endpoints and random interior
    /// outcomes; `first` fixes the opening event.
    pub fn sequence<R: Rng + ?Sized>(&self, rng: &mut R, times: &[i64], first: Option<&Event>) -> Sequence {
        let mut events = Vec::with_capacity(times.len());
        for (k, &t) in times.iter().enumerate() {
            if k == 0 {
                if let Some(e) = first {
                    events.push(e.clone());
                    continue;
                }
            }
            let m = self.measurement(rng);
            let outcome = if k == 0 || k + 1 == times.len() {
                OutcomeSet::atomic(rng.random_range(0..self.dim))
            } else {
                self.subset(rng)
            };
            events.push(Event::new(t, m, outcome).expect("outcome in range"));
        }
        let interactions = (1..times.len()).map(|_| Self::interaction(rng)).collect();
        Sequence::new(self.system(), events, interactions).expect("generated sequence is valid")
    }

    fn fresh<R: Rng + ?Sized>(&self, rng: &mut R, t0: i64, first: Option<&Event>) -> Sequence {
        let n = rng.random_range(3..=5);
        let times = random_times(rng, t0, n);
        self.sequence(rng, &times, first)
    }

    /// Sequences identical to `base` except at one interior event, where they
    /// take `count` pairwise-disjoint outcome sets.
    pub fn parallel_family<R: Rng + ?Sized>(&self, rng: &mut R, base: &Sequence, count: usize) -> Vec<Sequence> {
        assert!(base.len() >= 3 && count <= self.dim);
        let k = rng.random_range(1..base.len() - 1);
        let sets = loop {
            let mut bins: Vec<Vec<usize>> = (0..count).map(|_| Vec::new()).collect();
            for i in 0..self.dim {
                let b = rng.random_range(0..=count);
                if b < count {
                    bins[b].push(i);
                }
            }
            if bins.iter().all(|b| !b.is_empty()) {
                break bins;
            }
        };
        sets.into_iter()
            .map(|s| {
                let events = base
                    .events()
                    .iter()
                    .enumerate()
                    .map(|(j, e)| {
                        if j == k {
                            Event::new(e.time, e.measurement.clone(), OutcomeSet::new(s.clone()).expect("non-empty"))
                                .expect("in range")
                        } else {
                            e.clone()
                        }
                    })
                    .collect();
                Sequence::new(base.system().clone(), events, base.interactions().to_vec()).expect("valid")
            })
            .collect()
    }
}

/// Strictly increasing times starting at `t0`.
pub fn random_times<R: Rng + ?Sized>(rng: &mut R, t0: i64, len: usize) -> Vec<i64> {
    let mut t = t0;
    (0..len)
        .map(|k| {
            if k > 0 {
                t += rng.random_range(1..=3);
            }
            t
        })
        .collect()
}

/// Both sides of one identity instance.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityInstance {
    pub identity: Identity,
    pub lhs: Sequence,
    pub rhs: Sequence,
}

impl IdentityInstance {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

fn dims<R: Rng + ?Sized>(rng: &mut R, min: usize) -> usize {
    rng.random_range(min..=4)
}

/// Draws a valid operand tuple for `identity` and evaluates both sides.
pub fn sample<R: Rng + ?Sized>(identity: Identity, rng: &mut R) -> Result<IdentityInstance, LogicError> {
    let len = |rng: &mut R| rng.random_range(3..=5);
    let (lhs, rhs) = match identity {
        Identity::ParallelCommutative => {
            let g = SequenceGenerator::new("s", dims(rng, 2));
            let base = g.fresh(rng, 0, None);
            let f = g.parallel_family(rng, &base, 2);
            (parallel(&f[0], &f[1])?, parallel(&f[1], &f[0])?)
        }
        Identity::ParallelAssociative => {
            let g = SequenceGenerator::new("s", dims(rng, 3));
            let base = g.fresh(rng, 0, None);
            let f = g.parallel_family(rng, &base, 3);
            (
                parallel(&parallel(&f[0], &f[1])?, &f[2])?,
                parallel(&f[0], &parallel(&f[1], &f[2])?)?,
            )
        }
        Identity::SeriesAssociative => {
            let g = SequenceGenerator::new("s", dims(rng, 2));
            let a = g.fresh(rng, 0, None);
            let b = g.fresh(rng, a.last().time, Some(a.last()));
            let c = g.fresh(rng, b.last().time, Some(b.last()));
            (series(&series(&a, &b)?, &c)?, series(&a, &series(&b, &c)?)?)
        }
        Identity::SeriesLeftDistributive => {
            let g = SequenceGenerator::new("s", dims(rng, 2));
            let base = g.fresh(rng, 0, None);
            let f = g.parallel_family(rng, &base, 2);
            let c = g.fresh(rng, base.last().time, Some(base.last()));
            (
                series(&parallel(&f[0], &f[1])?, &c)?,
                parallel(&series(&f[0], &c)?, &series(&f[1], &c)?)?,
            )
        }
        Identity::SeriesRightDistributive => {
            let g = SequenceGenerator::new("s", dims(rng, 2));
            let c = g.fresh(rng, 0, None);
            let base = g.fresh(rng, c.last().time, Some(c.last()));
            let f = g.parallel_family(rng, &base, 2);
            (
                series(&c, &parallel(&f[0], &f[1])?)?,
                parallel(&series(&c, &f[0])?, &series(&c, &f[1])?)?,
            )
        }
        Identity::CompositionAssociative => {
            let n = len(rng);
            let times = random_times(rng, 0, n);
            let [a, b, c] = ["s0", "s1", "s2"].map(|s| {
                let d = dims(rng, 2);
                SequenceGenerator::new(s, d).sequence(rng, &times, None)
            });
            (compose(&compose(&a, &b)?, &c)?, compose(&a, &compose(&b, &c)?)?)
        }
        Identity::CrossMultiplicative => {
            let (g0, g1) = (SequenceGenerator::new("s0", dims(rng, 2)), SequenceGenerator::new("s1", dims(rng, 2)));
            let n = len(rng);
            let t1 = random_times(rng, 0, n);
            let n = len(rng);
            let t2 = random_times(rng, *t1.last().expect("non-empty"), n);
            let a = g0.sequence(rng, &t1, None);
            let b = g0.sequence(rng, &t2, Some(a.last()));
            let c = g1.sequence(rng, &t1, None);
            let d = g1.sequence(rng, &t2, Some(c.last()));
            (
                compose(&series(&a, &b)?, &series(&c, &d)?)?,
                series(&compose(&a, &c)?, &compose(&b, &d)?)?,
            )
        }
        Identity::CompositionLeftDistributive | Identity::CompositionRightDistributive => {
            let (g0, g1) = (SequenceGenerator::new("s0", dims(rng, 2)), SequenceGenerator::new("s1", dims(rng, 2)));
            let n = len(rng);
            let times = random_times(rng, 0, n);
            let base = g0.sequence(rng, &times, None);
            let f = g0.parallel_family(rng, &base, 2);
            let c = g1.sequence(rng, &times, None);
            if identity == Identity::CompositionLeftDistributive {
                (
                    compose(&parallel(&f[0], &f[1])?, &c)?,
                    parallel(&compose(&f[0], &c)?, &compose(&f[1], &c)?)?,
                )
            } else {
                (
                    compose(&c, &parallel(&f[0], &f[1])?)?,
                    parallel(&compose(&c, &f[0])?, &compose(&c, &f[1])?)?,
                )
            }
        }
    };
    Ok(IdentityInstance { identity, lhs, rhs })
}

/// Outcome of checking one identity on many random tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub identity: Identity,
    pub tuples: usize,
    pub failures: usize,
    pub first_failure: Option<IdentityInstance>,
    pub errors: usize,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.errors == 0
    }
}

/// Checks `identity` on `tuples` random operand tuples.
pub fn check_identity(identity: Identity, tuples: usize, seed: u64) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = IdentityReport {
        identity,
        tuples,
        failures: 0,
        first_failure: None,
        errors: 0,
    };
    for _ in 0..tuples {
        match sample(identity, &mut rng) {
            Ok(inst) if inst.holds() => {}
            Ok(inst) => {
                report.failures += 1;
                if report.first_failure.is_none() {
                    report.first_failure = Some(inst);
                }
            }
            Err(_) => report.errors += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_identity_holds_on_samples() {
        for id in Identity::ALL {
            let r = check_identity(id, 200, 5);
            assert!(r.passed(), "{id}: {r:?}");
        }
    }

    #[test]
    fn sequences_differ_under_distinct_orders() {
        // Series is not commutative: swapping the operands breaks the junction.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = SequenceGenerator::new("s", 2);
        let a = g.sequence(&mut rng, &[0, 1, 2], None);
        let b = g.sequence(&mut rng, &[2, 3], Some(a.last()));
        assert!(series(&a, &b).is_ok());
        assert!(series(&b, &a).is_err());
    }
}
