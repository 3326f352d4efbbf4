//! Random models and brute-force oracles shared by the integration tests.
//!
//! The oracles never call `amplitude`, `outcome_distribution` or
//! `AmplitudeModel::transition`; they rebuild every transition from the raw
//! frames and unitaries and enumerate paths explicitly.

#![allow(dead_code)]

use std::collections::BTreeMap;

use feynrec_core::amplitude::{AmplitudeModel, Stage};
use feynrec_core::linalg::CMatrix;
use feynrec_core::logic::{Event, InteractionId, InteractionPart, Measurement, MeasurementRef, OutcomeSet, Sequence, SystemId};
use feynrec_core::random::random_unitary;
use feynrec_core::Complex64;
use rand::Rng;

pub const MEASUREMENTS: [&str; 3] = ["R", "A", "B"];
pub const INTERACTIONS: [&str; 3] = ["identity", "u", "w"];

pub struct RandomModel {
    pub model: AmplitudeModel,
    pub system: String,
    pub n: usize,
    pub frames: BTreeMap<String, CMatrix>,
    pub unitaries: BTreeMap<String, CMatrix>,
}

/// One system with reference `R`, random measurements `A`, `B` and random
/// interactions `u`, `w`. Names are prefixed with `prefix`.
pub fn random_model_named<R: Rng>(prefix: &str, n: usize, rng: &mut R) -> RandomModel {
    let mut model = AmplitudeModel::new();
    let system = format!("{prefix}sys");
    let mut frames = BTreeMap::new();
    frames.insert(format!("{prefix}R"), CMatrix::identity(n));
    model.add_system(&system, &format!("{prefix}R"), n).unwrap();
    for m in ["A", "B"] {
        let f = random_unitary(n, rng);
        model.add_measurement(&system, &format!("{prefix}{m}"), f.clone()).unwrap();
        frames.insert(format!("{prefix}{m}"), f);
    }
    let mut unitaries = BTreeMap::new();
    for i in ["u", "w"] {
        let u = random_unitary(n, rng);
        model.add_interaction(&system, i, u.clone()).unwrap();
        unitaries.insert(i.to_string(), u);
    }
    RandomModel {
        model,
        system,
        n,
        frames,
        unitaries,
    }
}

pub fn random_model<R: Rng>(n: usize, rng: &mut R) -> RandomModel {
    random_model_named("", n, rng)
}

/// Naive `n×n` product, kept separate from `CMatrix::matmul`.
pub fn naive_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.rows();
    let mut out = CMatrix::zeros(n, b.cols());
    for r in 0..n {
        for c in 0..b.cols() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..a.cols() {
                acc += a[(r, k)] * b[(k, c)];
            }
            out[(r, c)] = acc;
        }
    }
    out
}

pub fn naive_adjoint(a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.cols(), a.rows(), |r, c| a[(c, r)].conj())
}

impl RandomModel {
    pub fn mref(&self, name: &str) -> MeasurementRef {
        MeasurementRef::new(name, self.n)
    }

    pub fn names(&self) -> Vec<String> {
        self.frames.keys().cloned().collect()
    }

    /// `frame(to) · U · frame(from)†`, with a reversed part using `U†`.
    pub fn oracle_transition(&self, from: &str, to: &str, part: &InteractionPart) -> CMatrix {
        let u = if part.name == InteractionId::IDENTITY {
            CMatrix::identity(self.n)
        } else {
            let u = &self.unitaries[&part.name];
            if part.reversed {
                naive_adjoint(u)
            } else {
                u.clone()
            }
        };
        naive_mul(&naive_mul(&self.frames[to], &u), &naive_adjoint(&self.frames[from]))
    }

    fn interaction<R: Rng>(rng: &mut R) -> InteractionId {
        let id = InteractionId::new(INTERACTIONS[rng.random_range(0..INTERACTIONS.len())]);
        if rng.random_bool(0.3) {
            id.inverse()
        } else {
            id
        }
    }

    pub fn random_subset<R: Rng>(&self, rng: &mut R) -> OutcomeSet {
        loop {
            let picked: Vec<usize> = (0..self.n).filter(|_| rng.random_bool(0.5)).collect();
            if let Ok(s) = OutcomeSet::new(picked) {
                return s;
            }
        }
    }

    /// Random sequence of `len` events; the first outcome is atomic, the
    /// rest are random subsets unless `atomic_last`.
    pub fn random_sequence<R: Rng>(&self, rng: &mut R, len: usize, t0: i64, atomic_last: bool) -> Sequence {
        let names = self.names();
        let mut t = t0;
        let mut events = Vec::new();
        for k in 0..len {
            if k > 0 {
                t += rng.random_range(1..=2);
            }
            let m = self.mref(&names[rng.random_range(0..names.len())]);
            let outcome = if k == 0 || (atomic_last && k + 1 == len) {
                OutcomeSet::atomic(rng.random_range(0..self.n))
            } else {
                self.random_subset(rng)
            };
            events.push(Event::new(t, m, outcome).unwrap());
        }
        let interactions = (1..len).map(|_| Self::interaction(rng)).collect();
        Sequence::new(SystemId::new(self.system.clone()), events, interactions).unwrap()
    }

    /// Sum over every atomic refinement of the product of transition
    /// amplitudes.
    pub fn oracle_amplitude(&self, seq: &Sequence) -> Complex64 {
        let events = seq.events();
        let mats: Vec<CMatrix> = seq
            .interactions()
            .iter()
            .enumerate()
            .map(|(k, i)| {
                self.oracle_transition(
                    &events[k].measurement.id.to_string(),
                    &events[k + 1].measurement.id.to_string(),
                    &i.parts()[0],
                )
            })
            .collect();
        let sets: Vec<Vec<usize>> = events.iter().map(|e| e.outcome.iter().collect()).collect();
        let mut total = Complex64::new(0.0, 0.0);
        let mut idx = vec![0usize; sets.len()];
        loop {
            let mut z = Complex64::new(1.0, 0.0);
            for k in 0..mats.len() {
                z *= mats[k][(sets[k + 1][idx[k + 1]], sets[k][idx[k]])];
            }
            total += z;
            // Odometer over the refinement choices.
            let mut pos = sets.len();
            loop {
                if pos == 0 {
                    return total;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < sets[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// Random chain of stages with random partitions, ending in `last`.
    pub fn random_chain<R: Rng>(&self, rng: &mut R, stages: usize) -> Vec<Stage> {
        let names = self.names();
        (0..stages)
            .map(|_| {
                let r = self.mref(&names[rng.random_range(0..names.len())]);
                let m = self.random_partition(rng, r);
                Stage::new(m, Self::interaction(rng))
            })
            .collect()
    }

    pub fn random_partition<R: Rng>(&self, rng: &mut R, r: MeasurementRef) -> Measurement {
        let k = rng.random_range(1..=self.n);
        loop {
            let mut blocks = vec![Vec::new(); k];
            for i in 0..self.n {
                blocks[rng.random_range(0..k)].push(i);
            }
            if blocks.iter().all(|b| !b.is_empty()) {
                let sets = blocks.into_iter().map(|b| OutcomeSet::new(b).unwrap()).collect();
                return Measurement::with_partition(r, sets).unwrap();
            }
        }
    }

    /// `Pr(final block | preparation)` by enumerating every block choice at
    /// the intermediate stages, squaring the summed amplitude of each
    /// recorded history.
    pub fn oracle_distribution(&self, prep: &Event, stages: &[Stage]) -> Vec<f64> {
        let last = stages.last().unwrap();
        let mut out = vec![0.0; last.measurement.partition().len()];
        let choices: Vec<usize> = stages.iter().map(|s| s.measurement.partition().len()).collect();
        let mut idx = vec![0usize; stages.len()];
        loop {
            let mut events = vec![prep.clone()];
            for (k, s) in stages.iter().enumerate() {
                let outcome = s.measurement.partition()[idx[k]].clone();
                events.push(Event::new(prep.time + 1 + k as i64, s.measurement.reference().clone(), outcome).unwrap());
            }
            let interactions: Vec<InteractionId> = stages.iter().map(|s| s.interaction.clone()).collect();
            // The final record is an endpoint: its atomic members add in probability.
            let block = events.pop().unwrap();
            for i in block.outcome.iter() {
                let mut history = events.clone();
                history.push(Event::atomic(block.time, block.measurement.clone(), i).unwrap());
                let seq = Sequence::new(SystemId::new(self.system.clone()), history, interactions.clone()).unwrap();
                out[idx[stages.len() - 1]] += self.oracle_amplitude(&seq).norm_sqr();
            }
            let mut pos = stages.len();
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < choices[pos] {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
