//! Amplitude model and Feynman's rules.
//!
//! The model is generative. Each system has a reference measurement `R`;
//! every other measurement `X` is given by its frame, the transformation
//! matrix from `R` to `X`, and every interaction by its unitary in the `R`
//! representation. The transition matrix for `A -> B` across interaction
//! `I` is then `frame(B) · U_I · frame(A)†`, with entry `[k][j]` the
//! amplitude of `[a_j -> b_k]`. Explicit per-triple transition matrices can
//! override the derived ones.
//!
//! Composite measurements resolve to Kronecker products of their component
//! transitions, entry by entry through [`composite_amplitude`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul};

use num_complex::Complex64;
use thiserror::Error;

use crate::composition::composite_amplitude;
use crate::linalg::CMatrix;
use crate::logic::{self, Event, InteractionId, InteractionPart, LogicError, Measurement, MeasurementId, OutcomeSet, Sequence};
use crate::UNITARY_TOL;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("no transition from {from} to {to} under interaction {interaction}")]
    UnknownTransition {
        from: String,
        to: String,
        interaction: String,
    },
    #[error("unknown system {0}")]
    UnknownSystem(String),
    #[error("unknown measurement {0}")]
    UnknownMeasurement(String),
    #[error("{0} is already defined")]
    Duplicate(String),
    #[error("matrix {name} is not unitary (defect {defect:.3e})")]
    NotUnitary { name: String, defect: f64 },
    #[error("matrix {name} has shape {rows}x{cols}, expected {expected}x{expected}")]
    DimensionMismatch {
        name: String,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("dimension {0} outside the supported range 2..=64")]
    UnsupportedDimension(usize),
    #[error("preparation outcome must be atomic")]
    NonAtomicPreparation,
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Complex amplitude of a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude(pub Complex64);

impl Amplitude {
    pub const ZERO: Amplitude = Amplitude(Complex64::new(0.0, 0.0));
    pub const ONE: Amplitude = Amplitude(Complex64::new(1.0, 0.0));

    pub fn new(re: f64, im: f64) -> Self {
        Amplitude(Complex64::new(re, im))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    /// Probability rule: `|z|²`.
    pub fn probability(self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn conj(self) -> Amplitude {
        Amplitude(self.0.conj())
    }

    pub fn norm(self) -> f64 {
        self.0.norm()
    }
}

impl Add for Amplitude {
    type Output = Amplitude;
    fn add(self, rhs: Amplitude) -> Amplitude {
        Amplitude(self.0 + rhs.0)
    }
}

impl Mul for Amplitude {
    type Output = Amplitude;
    fn mul(self, rhs: Amplitude) -> Amplitude {
        Amplitude(self.0 * rhs.0)
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12}{:+.12}i", self.0.re, self.0.im)
    }
}

/// One physical system: its reference measurement, measurement frames and
/// interaction unitaries.
#[derive(Debug, Clone)]
pub struct SystemModel {
    name: String,
    dim: usize,
    reference: String,
    frames: BTreeMap<String, CMatrix>,
    interactions: BTreeMap<String, CMatrix>,
}

impl SystemModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reference(&self) -> &str {
        &self.reference
    }

    /// Measurement names, reference first.
    pub fn measurements(&self) -> impl Iterator<Item = &str> {
        core::iter::once(self.reference.as_str())
            .chain(self.frames.keys().map(String::as_str).filter(move |n| *n != self.reference))
    }

    pub fn interactions(&self) -> impl Iterator<Item = (&str, &CMatrix)> {
        self.interactions.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Transformation matrix from the reference measurement to `measurement`.
    pub fn frame(&self, measurement: &str) -> Option<&CMatrix> {
        self.frames.get(measurement)
    }
}

/// Generative amplitude data for one or more noninteracting systems.
#[derive(Debug, Clone, Default)]
pub struct AmplitudeModel {
    systems: Vec<SystemModel>,
    owner: BTreeMap<String, usize>,
    overrides: BTreeMap<(String, String, String), CMatrix>,
    validate: bool,
}

impl AmplitudeModel {
    /// Empty model that checks every stored matrix for unitarity.
    pub fn new() -> Self {
        AmplitudeModel {
            validate: true,
            ..Default::default()
        }
    }

    /// Empty model that accepts non-unitary matrices, for counterexample
    /// studies.
    pub fn unvalidated() -> Self {
        AmplitudeModel::default()
    }

    pub fn validates(&self) -> bool {
        self.validate
    }

    fn check(&self, name: &str, m: &CMatrix, dim: usize) -> Result<(), ModelError> {
        if m.rows() != dim || m.cols() != dim {
            return Err(ModelError::DimensionMismatch {
                name: name.to_string(),
                rows: m.rows(),
                cols: m.cols(),
                expected: dim,
            });
        }
        if self.validate {
            let defect = m.unitarity_defect();
            if !(defect <= UNITARY_TOL) {
                return Err(ModelError::NotUnitary {
                    name: name.to_string(),
                    defect,
                });
            }
        }
        Ok(())
    }

    /// Adds a system whose reference measurement is `reference`.
    pub fn add_system(&mut self, name: &str, reference: &str, dim: usize) -> Result<(), ModelError> {
        if !(2..=crate::MAX_DIM).contains(&dim) {
            return Err(ModelError::UnsupportedDimension(dim));
        }
        if self.systems.iter().any(|s| s.name == name) {
            return Err(ModelError::Duplicate(name.to_string()));
        }
        if self.owner.contains_key(reference) {
            return Err(ModelError::Duplicate(reference.to_string()));
        }
        let mut frames = BTreeMap::new();
        frames.insert(reference.to_string(), CMatrix::identity(dim));
        self.owner.insert(reference.to_string(), self.systems.len());
        self.systems.push(SystemModel {
            name: name.to_string(),
            dim,
            reference: reference.to_string(),
            frames,
            interactions: BTreeMap::new(),
        });
        Ok(())
    }

    fn system_index(&self, name: &str) -> Result<usize, ModelError> {
        self.systems
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| ModelError::UnknownSystem(name.to_string()))
    }

    /// Adds measurement `name` to `system`; `frame` is the transformation
    /// matrix from the system's reference measurement to it.
    pub fn add_measurement(&mut self, system: &str, name: &str, frame: CMatrix) -> Result<(), ModelError> {
        let idx = self.system_index(system)?;
        if self.owner.contains_key(name) {
            return Err(ModelError::Duplicate(name.to_string()));
        }
        self.check(name, &frame, self.systems[idx].dim)?;
        self.systems[idx].frames.insert(name.to_string(), frame);
        self.owner.insert(name.to_string(), idx);
        Ok(())
    }

    /// Adds an interaction, given as its unitary in the reference
    /// representation.
    pub fn add_interaction(&mut self, system: &str, name: &str, unitary: CMatrix) -> Result<(), ModelError> {
        let idx = self.system_index(system)?;
        if name == InteractionId::IDENTITY || self.systems[idx].interactions.contains_key(name) {
            return Err(ModelError::Duplicate(name.to_string()));
        }
        self.check(name, &unitary, self.systems[idx].dim)?;
        self.systems[idx].interactions.insert(name.to_string(), unitary);
        Ok(())
    }

    /// Overrides the derived transition for one (from, to, interaction) triple.
    pub fn add_transition(&mut self, from: &str, to: &str, interaction: &str, matrix: CMatrix) -> Result<(), ModelError> {
        let dim = self.measurement_dim(from)?;
        if self.measurement_dim(to)? != dim {
            return Err(ModelError::DimensionMismatch {
                name: alloc::format!("{from}->{to}"),
                rows: self.measurement_dim(to)?,
                cols: dim,
                expected: dim,
            });
        }
        let key = (from.to_string(), to.to_string(), interaction.to_string());
        if self.overrides.contains_key(&key) {
            return Err(ModelError::Duplicate(alloc::format!("{from}->{to} under {interaction}")));
        }
        self.check(&alloc::format!("{from}->{to} under {interaction}"), &matrix, dim)?;
        self.overrides.insert(key, matrix);
        Ok(())
    }

    pub fn systems(&self) -> &[SystemModel] {
        &self.systems
    }

    pub fn system(&self, name: &str) -> Option<&SystemModel> {
        self.systems.iter().find(|s| s.name == name)
    }

    /// System owning an atomic measurement.
    pub fn system_of(&self, measurement: &str) -> Option<&SystemModel> {
        self.owner.get(measurement).map(|&i| &self.systems[i])
    }

    pub fn measurement_dim(&self, measurement: &str) -> Result<usize, ModelError> {
        self.system_of(measurement)
            .map(|s| s.dim)
            .ok_or_else(|| ModelError::UnknownMeasurement(measurement.to_string()))
    }

    /// Reference (with atomic count) of a possibly composite measurement id.
    pub fn measurement_ref(&self, id: &MeasurementId) -> Result<logic::MeasurementRef, ModelError> {
        let mut count = 1;
        for c in id.components() {
            count *= self.measurement_dim(c)?;
        }
        Ok(logic::MeasurementRef {
            id: id.clone(),
            atomic_count: count,
        })
    }

    /// Atomic measurement by name.
    pub fn measurement(&self, name: &str) -> Result<Measurement, ModelError> {
        let dim = self.measurement_dim(name)?;
        Ok(Measurement::atomic(name, dim)?)
    }

    fn unknown(from: &MeasurementId, to: &MeasurementId, interaction: &InteractionId) -> ModelError {
        ModelError::UnknownTransition {
            from: from.to_string(),
            to: to.to_string(),
            interaction: interaction.to_string(),
        }
    }

    /// Transition matrix for the interval `from -> to` under `interaction`.
    pub fn transition(&self, from: &MeasurementId, to: &MeasurementId, interaction: &InteractionId) -> Result<CMatrix, ModelError> {
        let (fc, tc, ic) = (from.components(), to.components(), interaction.parts());
        if fc.len() != tc.len() || fc.len() != ic.len() {
            return Err(Self::unknown(from, to, interaction));
        }
        let mut parts = fc
            .iter()
            .zip(tc)
            .zip(ic)
            .map(|((f, t), i)| self.component_transition(f, t, i).ok_or_else(|| Self::unknown(from, to, interaction)));
        let first = parts.next().expect("ids have at least one component")?;
        parts.try_fold(first, |acc, next| {
            let next = next?;
            Ok(CMatrix::from_fn(acc.rows() * next.rows(), acc.cols() * next.cols(), |r, c| {
                composite_amplitude(
                    Amplitude(acc[(r / next.rows(), c / next.cols())]),
                    Amplitude(next[(r % next.rows(), c % next.cols())]),
                )
                .0
            }))
        })
    }

    fn component_transition(&self, from: &str, to: &str, part: &InteractionPart) -> Option<CMatrix> {
        if part.reversed {
            // Running an interval backwards: the adjoint of the forward transition.
            let forward = InteractionPart {
                name: part.name.clone(),
                reversed: false,
            };
            return self.component_transition(to, from, &forward).map(|m| m.adjoint());
        }
        let key = (from.to_string(), to.to_string(), part.name.clone());
        if let Some(m) = self.overrides.get(&key) {
            return Some(m.clone());
        }
        let identity = part.name == InteractionId::IDENTITY;
        if identity {
            let rev = (to.to_string(), from.to_string(), part.name.clone());
            if let Some(m) = self.overrides.get(&rev) {
                return Some(m.adjoint());
            }
        }
        let sf = *self.owner.get(from)?;
        let st = *self.owner.get(to)?;
        if sf != st {
            return None;
        }
        let sys = &self.systems[sf];
        if identity && from == to {
            return Some(CMatrix::identity(sys.dim));
        }
        let frame_from = &sys.frames[from];
        let frame_to = &sys.frames[to];
        let evolved = if identity {
            frame_from.adjoint()
        } else {
            sys.interactions.get(&part.name)?.matmul(&frame_from.adjoint())
        };
        Some(frame_to.matmul(&evolved))
    }

    fn interval(&self, from: &Event, to: &Event, interaction: &InteractionId) -> Result<CMatrix, ModelError> {
        let t = self.transition(&from.measurement.id, &to.measurement.id, interaction)?;
        if t.cols() != from.measurement.atomic_count || t.rows() != to.measurement.atomic_count {
            return Err(ModelError::DimensionMismatch {
                name: alloc::format!("{}->{}", from.measurement, to.measurement),
                rows: t.rows(),
                cols: t.cols(),
                expected: from.measurement.atomic_count,
            });
        }
        Ok(t)
    }
}

/// Amplitude of a sequence: the sum over every atomic refinement of its
/// coarse outcomes of the product of transition amplitudes along it.
///
/// Evaluated by propagating an amplitude vector through the transition
/// matrices and masking it to each recorded outcome set.
pub fn amplitude(model: &AmplitudeModel, seq: &Sequence) -> Result<Amplitude, ModelError> {
    let events = seq.events();
    let start = events[0].outcome.atomic_index().ok_or(ModelError::NonAtomicPreparation)?;
    let mut v = vec![Complex64::new(0.0, 0.0); events[0].measurement.atomic_count];
    v[start] = Complex64::new(1.0, 0.0);
    for (k, interaction) in seq.interactions().iter().enumerate() {
        let t = model.interval(&events[k], &events[k + 1], interaction)?;
        v = t.apply(&v);
        mask(&mut v, &events[k + 1].outcome);
    }
    Ok(Amplitude(v.iter().sum()))
}

fn mask(v: &mut [Complex64], keep: &OutcomeSet) {
    for (i, z) in v.iter_mut().enumerate() {
        if !keep.contains(i) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
}

/// `Pr(m, n, … | ℓ) = |amplitude|²`.
pub fn probability(model: &AmplitudeModel, seq: &Sequence) -> Result<f64, ModelError> {
    amplitude(model, seq).map(Amplitude::probability)
}

/// Amplitude of the temporal inverse of `seq`; equals the conjugate of the
/// forward amplitude.
pub fn amplitude_of_inverse(model: &AmplitudeModel, seq: &Sequence) -> Result<Amplitude, ModelError> {
    amplitude(model, &logic::invert(seq)?)
}

/// Probabilities over the blocks of a final measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    outcomes: Vec<OutcomeSet>,
    probabilities: Vec<f64>,
}

impl ProbabilityTable {
    pub fn new(outcomes: Vec<OutcomeSet>, probabilities: Vec<f64>) -> Self {
        assert_eq!(outcomes.len(), probabilities.len());
        ProbabilityTable { outcomes, probabilities }
    }

    pub fn outcomes(&self) -> &[OutcomeSet] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn get(&self, outcome: &OutcomeSet) -> Option<f64> {
        self.outcomes.iter().position(|o| o == outcome).map(|i| self.probabilities[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OutcomeSet, f64)> {
        self.outcomes.iter().zip(self.probabilities.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Largest absolute difference over matching outcomes; infinite if the
    /// tables are over different outcome sets.
    pub fn max_deviation(&self, other: &ProbabilityTable) -> f64 {
        if self.outcomes != other.outcomes {
            return f64::INFINITY;
        }
        self.probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for ProbabilityTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (o, p) in self.iter() {
            writeln!(f, "  {o}: {p:.12}")?;
        }
        Ok(())
    }
}

/// A measurement in an experimental chain with the interaction acting in
/// the interval before it.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub measurement: Measurement,
    pub interaction: InteractionId,
}

impl Stage {
    pub fn new(measurement: Measurement, interaction: InteractionId) -> Self {
        Stage { measurement, interaction }
    }
}

/// `Pr(final outcome | preparation)` for every block of the final
/// measurement.
///
/// Distinct blocks of an intermediate measurement are distinguishable
/// records and add in probability; atomic outcomes inside one block add in
/// amplitude. This is tracked with the matrix of amplitude products
/// `ρ = Σ_paths z z*`, block-diagonalised after every intermediate
/// measurement, which equals enumerating every block choice.
pub fn outcome_distribution(
    model: &AmplitudeModel,
    preparation: &Event,
    chain: &[Stage],
    last: &Stage,
) -> Result<ProbabilityTable, ModelError> {
    let start = preparation.outcome.atomic_index().ok_or(ModelError::NonAtomicPreparation)?;
    let n0 = preparation.measurement.atomic_count;
    let mut rho = CMatrix::zeros(n0, n0);
    rho[(start, start)] = Complex64::new(1.0, 0.0);
    let mut prev = preparation.measurement.clone();
    for stage in chain.iter().chain(core::iter::once(last)) {
        let t = model.transition(&prev.id, stage.measurement.id(), &stage.interaction)?;
        if t.cols() != prev.atomic_count || t.rows() != stage.measurement.atomic_count() {
            return Err(ModelError::DimensionMismatch {
                name: alloc::format!("{}->{}", prev, stage.measurement.reference()),
                rows: t.rows(),
                cols: t.cols(),
                expected: stage.measurement.atomic_count(),
            });
        }
        rho = t.matmul(&rho).matmul(&t.adjoint());
        let m = &stage.measurement;
        for r in 0..rho.rows() {
            for c in 0..rho.cols() {
                if m.block_of(r) != m.block_of(c) {
                    rho[(r, c)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        prev = m.reference().clone();
    }
    let outcomes = last.measurement.partition().to_vec();
    let probabilities = outcomes
        .iter()
        .map(|block| block.iter().map(|i| rho[(i, i)].re).sum())
        .collect();
    Ok(ProbabilityTable::new(outcomes, probabilities))
}
