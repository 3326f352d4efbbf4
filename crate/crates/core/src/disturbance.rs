//! Trivial-measurement insertion and the no-disturbance comparison between
//! quantum and classical predictions.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::amplitude::{outcome_distribution, AmplitudeModel, ModelError, ProbabilityTable, Stage};
use crate::linalg::{self, CMatrix};
use crate::logic::{Event, InteractionId, Measurement, MeasurementKind, MeasurementRef};

/// Tolerance on `|T_kj|² = |T'_jk|²` for a zero-evolution return to the
/// same measurement.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DisturbanceError {
    #[error("position {position} is not strictly between two measurements (1..={max})")]
    InvalidPosition { position: usize, max: usize },
    #[error("alpha {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("monte carlo needs at least one run")]
    NoRuns,
    #[error("experiment has no measurement after the preparation")]
    EmptyExperiment,
    #[error("transition probabilities {from}->{to} are not symmetric (deviation {deviation:.3e})")]
    AsymmetricTransition {
        from: MeasurementRef,
        to: MeasurementRef,
        deviation: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A preparation followed by a chain of measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub preparation: Event,
    pub stages: Vec<Stage>,
}

impl Experiment {
    pub fn new(preparation: Event, stages: Vec<Stage>) -> Result<Self, DisturbanceError> {
        if stages.is_empty() {
            return Err(DisturbanceError::EmptyExperiment);
        }
        if !preparation.is_atomic() {
            return Err(ModelError::NonAtomicPreparation.into());
        }
        Ok(Experiment { preparation, stages })
    }

    /// Measurement references in order, preparation first.
    pub fn references(&self) -> Vec<MeasurementRef> {
        core::iter::once(self.preparation.measurement.clone())
            .chain(self.stages.iter().map(|s| s.measurement.reference().clone()))
            .collect()
    }

    fn split(&self) -> (&[Stage], &Stage) {
        let (last, chain) = self.stages.split_last().expect("non-empty");
        (chain, last)
    }
}

/// Inserts the trivial measurement on `trivial` just before stage
/// `position - 1`, so it sits between measurement `position - 1` and
/// `position` when the preparation counts as measurement 0.
///
/// The original interaction now acts before the trivial measurement; the new
/// zero-duration interval carries the identity.
pub fn insert_trivial(experiment: &Experiment, position: usize, trivial: MeasurementRef) -> Result<Experiment, DisturbanceError> {
    let max = experiment.stages.len();
    if position == 0 || position > max {
        return Err(DisturbanceError::InvalidPosition { position, max });
    }
    let measurement = Measurement::trivial(trivial).map_err(ModelError::from)?;
    let mut stages = experiment.stages.clone();
    let parts = stages[position - 1].measurement.id().components().len();
    let interaction = core::mem::replace(&mut stages[position - 1].interaction, InteractionId::identity_on(parts));
    stages.insert(position - 1, Stage::new(measurement, interaction));
    Ok(Experiment {
        preparation: experiment.preparation.clone(),
        stages,
    })
}

/// Feynman-rule probabilities of the final measurement's outcomes.
pub fn quantum_prediction(model: &AmplitudeModel, experiment: &Experiment) -> Result<ProbabilityTable, DisturbanceError> {
    let (chain, last) = experiment.split();
    Ok(outcome_distribution(model, &experiment.preparation, chain, last)?)
}

fn transition(model: &AmplitudeModel, from: &MeasurementRef, stage: &Stage) -> Result<CMatrix, DisturbanceError> {
    let t = model.transition(&from.id, stage.measurement.id(), &stage.interaction)?;
    if t.cols() != from.atomic_count || t.rows() != stage.measurement.atomic_count() {
        return Err(ModelError::DimensionMismatch {
            name: alloc::format!("{}->{}", from, stage.measurement.reference()),
            rows: t.rows(),
            cols: t.cols(),
            expected: stage.measurement.atomic_count(),
        }
        .into());
    }
    Ok(t)
}

/// Classical prediction: every intermediate measurement is taken to have a
/// definite atomic outcome whether or not it is recorded, so probabilities
/// `|T_kj|²` chain as a Markov process and coarse outcomes are marginalised
/// in probability.
///
/// Returning to a measurement across two zero-evolution intervals requires
/// symmetric transition probabilities within [`SYMMETRY_TOL`].
pub fn classical_prediction(model: &AmplitudeModel, experiment: &Experiment) -> Result<ProbabilityTable, DisturbanceError> {
    let refs = experiment.references();
    let mut mats = Vec::with_capacity(experiment.stages.len());
    for (k, stage) in experiment.stages.iter().enumerate() {
        mats.push(transition(model, &refs[k], stage)?);
    }
    for k in 1..mats.len() {
        let back = &experiment.stages[k];
        if refs[k - 1] == refs[k + 1] && experiment.stages[k - 1].interaction.is_identity() && back.interaction.is_identity() {
            let (fwd, rev) = (&mats[k - 1], &mats[k]);
            let mut deviation: f64 = 0.0;
            for r in 0..fwd.rows() {
                for c in 0..fwd.cols() {
                    deviation = deviation.max((fwd[(r, c)].norm_sqr() - rev[(c, r)].norm_sqr()).abs());
                }
            }
            if deviation > SYMMETRY_TOL {
                return Err(DisturbanceError::AsymmetricTransition {
                    from: refs[k - 1].clone(),
                    to: refs[k].clone(),
                    deviation,
                });
            }
        }
    }
    let start = experiment.preparation.outcome.atomic_index().ok_or(ModelError::NonAtomicPreparation)?;
    let mut p = vec![0.0; refs[0].atomic_count];
    p[start] = 1.0;
    for t in &mats {
        p = (0..t.rows()).map(|k| (0..t.cols()).map(|j| t[(k, j)].norm_sqr() * p[j]).sum()).collect();
    }
    let last = &experiment.stages[experiment.stages.len() - 1].measurement;
    let outcomes = last.partition().to_vec();
    let probabilities = outcomes.iter().map(|b| b.iter().map(|i| p[i]).sum()).collect();
    Ok(ProbabilityTable::new(outcomes, probabilities))
}

/// `α² + (1 − α)²`: classical probability of repeating a two-outcome
/// measurement across a trivial one with `Pr(m | ℓ) = α`.
pub fn repeatability_gap(alpha: f64) -> Result<f64, DisturbanceError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(DisturbanceError::OutOfRange(alpha));
    }
    Ok(alpha * alpha + (1.0 - alpha) * (1.0 - alpha))
}

/// Frequency estimate of the final outcome distribution from `runs`
/// simulated trials.
///
/// Each trial propagates an amplitude vector, collapses it onto the sampled
/// block at every non-trivial measurement and leaves it untouched at trivial
/// ones. Deterministic given `seed`.
pub fn monte_carlo(model: &AmplitudeModel, experiment: &Experiment, runs: usize, seed: u64) -> Result<ProbabilityTable, DisturbanceError> {
    if runs == 0 {
        return Err(DisturbanceError::NoRuns);
    }
    let refs = experiment.references();
    let mut mats = Vec::with_capacity(experiment.stages.len());
    for (k, stage) in experiment.stages.iter().enumerate() {
        mats.push(transition(model, &refs[k], stage)?);
    }
    let start = experiment.preparation.outcome.atomic_index().ok_or(ModelError::NonAtomicPreparation)?;
    let last = &experiment.stages[experiment.stages.len() - 1].measurement;
    let mut counts = vec![0usize; last.partition().len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..runs {
        let mut v = vec![Complex64::new(0.0, 0.0); refs[0].atomic_count];
        v[start] = Complex64::new(1.0, 0.0);
        let mut outcome = 0;
        for (t, stage) in mats.iter().zip(&experiment.stages) {
            v = t.apply(&v);
            if stage.measurement.kind() == MeasurementKind::Trivial {
                continue;
            }
            outcome = collapse(&mut v, &stage.measurement, &mut rng);
        }
        counts[outcome] += 1;
    }
    let outcomes = last.partition().to_vec();
    let probabilities = counts.iter().map(|&c| c as f64 / runs as f64).collect();
    Ok(ProbabilityTable::new(outcomes, probabilities))
}

fn collapse<R: Rng + ?Sized>(v: &mut [Complex64], measurement: &Measurement, rng: &mut R) -> usize {
    let blocks = measurement.partition();
    let weights: Vec<f64> = blocks.iter().map(|b| b.iter().map(|i| v[i].norm_sqr()).sum()).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    let mut chosen = blocks.len() - 1;
    for (b, w) in weights.iter().enumerate() {
        if x < *w {
            chosen = b;
            break;
        }
        x -= w;
    }
    // Rounding can leave `x` past the last weight; fall back to the last
    // block with any weight.
    if weights[chosen] == 0.0 {
        chosen = weights.iter().rposition(|w| *w > 0.0).unwrap_or(chosen);
    }
    let keep = &blocks[chosen];
    for (i, z) in v.iter_mut().enumerate() {
        if !keep.contains(i) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let norm = linalg::norm(v);
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    chosen
}

/// Baseline, trivial-inserted and classical predictions side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceReport {
    pub baseline: ProbabilityTable,
    pub with_trivial: ProbabilityTable,
    pub classical: ProbabilityTable,
    pub max_quantum_deviation: f64,
    pub max_classical_deviation: f64,
}

pub fn disturbance_report(
    model: &AmplitudeModel,
    experiment: &Experiment,
    position: usize,
    trivial: MeasurementRef,
) -> Result<DisturbanceReport, DisturbanceError> {
    let inserted = insert_trivial(experiment, position, trivial)?;
    let baseline = quantum_prediction(model, experiment)?;
    let with_trivial = quantum_prediction(model, &inserted)?;
    let classical = classical_prediction(model, &inserted)?;
    Ok(DisturbanceReport {
        max_quantum_deviation: baseline.max_deviation(&with_trivial),
        max_classical_deviation: baseline.max_deviation(&classical),
        baseline,
        with_trivial,
        classical,
    })
}
