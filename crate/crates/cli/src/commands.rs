//! One function per subcommand, each returning a [`RunReport`].

use std::path::Path;
use std::time::Instant;

use feynrec_core::action::{
    action, amplitude_from_action, check_candidate_amplitude_map, compare_free_particle, lattice_propagator, ActionError,
    ActionFunctional, ActionScale, Boundary, LatticeSpec, MapProperty, PathSpec, RealCandidate,
};
use feynrec_core::amplitude::{amplitude, probability, Amplitude, AmplitudeModel, ModelError, ProbabilityTable, SystemModel};
use feynrec_core::composition::{
    check_admissibility, check_binary_axioms, check_fixed_point_constraint, check_unary_pair, Admissibility, AxiomCheck,
    BinaryCandidate, UnaryCandidate,
};
use feynrec_core::disturbance::{
    classical_prediction, insert_trivial, monte_carlo, quantum_prediction, DisturbanceError, Experiment,
};
use feynrec_core::identities::{check_identity, Identity};
use feynrec_core::linalg::{self, CMatrix};
use feynrec_core::logic::{
    self, Event, InteractionId, MeasurementId, MeasurementRef, OutcomeSet, Sequence, SystemId,
};
use feynrec_core::state::{
    born_probability, change_representation, compose_states, conjugate_operator, evolve, prepared_states,
    state_after_preparation, EvolutionOperator, MeasurementOperator, StateError, StateVector, TransformationMatrix,
};
use feynrec_core::{Complex64, PROBABILITY_TOL, UNITARY_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{self, ConfigError, Derivation, LoadedConfig, NoDisturbanceScenario};
use crate::report::{CheckResult, Row, RunReport, Status};

/// Largest lattice-to-continuum relative deviation accepted.
pub const PROPAGATOR_TOL: f64 = 0.02;
/// Monte-Carlo frequencies must fall within this many standard errors.
pub const MC_SIGMAS: f64 = 3.0;
/// Probes for the candidate amplitude maps.
const MAP_SAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown sequence {0:?}")]
    UnknownSequence(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("config declares no {0} scenario")]
    NoScenario(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Logic(#[from] logic::LogicError),
    #[error(transparent)]
    Disturbance(#[from] DisturbanceError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub validate: bool,
    pub seed: u64,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, std::time::Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn fmt_c(z: Complex64) -> String {
    format!("{:+.6}{:+.6}i", z.re, z.im)
}

fn fmt_vec(v: &[Complex64]) -> String {
    let parts: Vec<String> = v.iter().map(|z| fmt_c(*z)).collect();
    format!("({})", parts.join(", "))
}

/// Largest value seen together with a description of where.
struct Worst {
    value: f64,
    witness: Option<String>,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, witness: None }
    }

    fn record(&mut self, value: f64, witness: impl FnOnce() -> String) {
        if value > self.value || value.is_nan() {
            self.value = value;
            self.witness = Some(witness());
        }
    }

    fn check(self, name: impl Into<String>, tol: f64) -> CheckResult {
        let c = CheckResult::residual(name, self.value, tol);
        match self.witness {
            Some(w) if c.status == Status::Fail => c.with_witness(w),
            _ => c,
        }
    }
}

fn load(path: &Path, opts: Options) -> Result<LoadedConfig, CliError> {
    Ok(config::load(path, opts.validate)?)
}

fn mref(system: &SystemModel, name: &str) -> MeasurementRef {
    MeasurementRef::new(name, system.dim())
}

fn interactions(system: &SystemModel) -> Vec<InteractionId> {
    std::iter::once(InteractionId::identity())
        .chain(system.interactions().map(|(n, _)| InteractionId::new(n)))
        .collect()
}

fn two_event(system: &SystemModel, from: Event, to: Event, interaction: &InteractionId) -> Sequence {
    Sequence::new(SystemId::new(system.name()), vec![from, to], vec![interaction.clone()]).expect("valid two-event sequence")
}

// ---------------------------------------------------------------- validate

/// Identity suite over random tuples and, when a config is given, over its
/// declared sequences, plus unitarity of every declared matrix.
pub fn validate(config: Option<&Path>, tuples: usize, opts: Options) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("validate");
    for (k, identity) in Identity::ALL.into_iter().enumerate() {
        let (r, elapsed) = timed(|| check_identity(identity, tuples, opts.seed.wrapping_add(k as u64)));
        let mut c = CheckResult::residual(format!("random tuples: {identity}"), (r.failures + r.errors) as f64, 0.0)
            .with_detail(format!("{} tuples, {} failures, {} invalid", r.tuples, r.failures, r.errors))
            .with_elapsed(elapsed);
        if let Some(inst) = r.first_failure {
            c = c.with_witness(format!("lhs {} / rhs {}", inst.lhs, inst.rhs));
        }
        report.push(c);
    }
    if let Some(path) = config {
        let cfg = config::load(path, false)?;
        model_checks(&cfg.model, &mut report);
        declared_identities(&cfg, &mut report);
    }
    Ok(report)
}

fn model_checks(model: &AmplitudeModel, report: &mut RunReport) {
    for system in model.systems() {
        for name in system.measurements().skip(1) {
            let defect = system.frame(name).expect("declared").unitarity_defect();
            report.push(CheckResult::residual(format!("unitary frame {name}"), defect, UNITARY_TOL));
        }
        for (name, u) in system.interactions() {
            report.push(CheckResult::residual(format!("unitary interaction {name}"), u.unitarity_defect(), UNITARY_TOL));
        }
        let mut worst = Worst::new();
        for from in system.measurements() {
            for to in system.measurements() {
                for i in interactions(system) {
                    let t = model.transition(&MeasurementId::new(from), &MeasurementId::new(to), &i);
                    let defect = t.map(|t| t.unitarity_defect()).unwrap_or(f64::INFINITY);
                    worst.record(defect, || format!("{from} -> {to} under {i}"));
                }
            }
        }
        report.push(worst.check(format!("unitary transitions in {}", system.name()), UNITARY_TOL));
    }
}

fn declared_identities(cfg: &LoadedConfig, report: &mut RunReport) {
    let seqs: Vec<&Sequence> = cfg.sequences.iter().map(|s| &s.sequence).collect();
    let mut tally = |name: &str, cases: Vec<Option<(Sequence, Sequence)>>| {
        let tried: Vec<(Sequence, Sequence)> = cases.into_iter().flatten().collect();
        let bad = tried.iter().find(|(l, r)| l != r);
        let failures = tried.iter().filter(|(l, r)| l != r).count();
        let c = if tried.is_empty() {
            CheckResult::info(format!("declared sequences: {name}")).with_detail("no applicable tuple")
        } else {
            CheckResult::residual(format!("declared sequences: {name}"), failures as f64, 0.0)
                .with_detail(format!("{} tuples", tried.len()))
        };
        report.push(match bad {
            Some((l, r)) => c.with_witness(format!("lhs {l} / rhs {r}")),
            None => c,
        });
    };
    let pairs = || seqs.iter().flat_map(|a| seqs.iter().map(move |b| (*a, *b)));
    let triples = || pairs().flat_map(|(a, b)| seqs.iter().map(move |c| (a, b, *c)));
    let ok = |r: Result<Sequence, logic::LogicError>| r.ok();
    tally(
        Identity::ParallelCommutative.formula(),
        pairs().map(|(a, b)| Some((ok(logic::parallel(a, b))?, ok(logic::parallel(b, a))?))).collect(),
    );
    tally(
        Identity::SeriesAssociative.formula(),
        triples()
            .map(|(a, b, c)| {
                let l = ok(logic::series(&ok(logic::series(a, b))?, c))?;
                let r = ok(logic::series(a, &ok(logic::series(b, c))?))?;
                Some((l, r))
            })
            .collect(),
    );
    tally(
        Identity::SeriesLeftDistributive.formula(),
        triples()
            .map(|(a, b, c)| {
                let l = ok(logic::series(&ok(logic::parallel(a, b))?, c))?;
                let r = ok(logic::parallel(&ok(logic::series(a, c))?, &ok(logic::series(b, c))?))?;
                Some((l, r))
            })
            .collect(),
    );
    tally(
        Identity::CompositionAssociative.formula(),
        triples()
            .map(|(a, b, c)| {
                let l = ok(logic::compose(&ok(logic::compose(a, b))?, c))?;
                let r = ok(logic::compose(a, &ok(logic::compose(b, c))?))?;
                Some((l, r))
            })
            .collect(),
    );
    tally(
        "invert(invert(A)) = A",
        seqs.iter().map(|a| Some((ok(logic::invert(&ok(logic::invert(a))?))?, (*a).clone()))).collect(),
    );
}

// --------------------------------------------------------------- amplitude

/// Amplitude of every atomic refinement of `seq`.
fn refinements(seq: &Sequence) -> Vec<Sequence> {
    let events = seq.events();
    let choices: Vec<Vec<usize>> = events.iter().map(|e| e.outcome.iter().collect()).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; events.len()];
    loop {
        let refined: Vec<Event> = events
            .iter()
            .zip(&idx)
            .zip(&choices)
            .map(|((e, &k), c)| Event::atomic(e.time, e.measurement.clone(), c[k]).expect("outcome in range"))
            .collect();
        out.push(Sequence::new(seq.system().clone(), refined, seq.interactions().to_vec()).expect("refinement of a valid sequence"));
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

pub fn amplitude_cmd(config: &Path, name: &str, opts: Options) -> Result<RunReport, CliError> {
    let cfg = load(config, opts)?;
    let named = cfg.sequence(name).ok_or_else(|| CliError::UnknownSequence(name.to_string()))?;
    let seq = &named.sequence;
    let model = &cfg.model;
    let mut report = RunReport::new("amplitude");
    let z = amplitude(model, seq)?;
    let p = probability(model, seq)?;
    report.push(
        CheckResult::info(format!("sequence {name}"))
            .with_detail(format!("{seq}: amplitude {} probability {p:.12}", fmt_c(z.0))),
    );
    report.push(CheckResult::residual("probability rule |z|^2", (p - z.probability()).abs(), PROBABILITY_TOL));
    if seq.events().iter().any(|e| !e.is_atomic()) {
        let parts = refinements(seq);
        let mut sum = Amplitude::ZERO;
        for r in &parts {
            sum = sum + amplitude(model, r)?;
        }
        report.push(
            CheckResult::residual("sum rule over atomic refinements", (sum.0 - z.0).norm(), PROBABILITY_TOL)
                .with_detail(format!("{} refinements", parts.len())),
        );
    }
    let amp_of = |n: &String| -> Result<Amplitude, CliError> {
        let s = cfg.sequence(n).ok_or_else(|| CliError::UnknownSequence(n.clone()))?;
        Ok(amplitude(model, &s.sequence)?)
    };
    let derived = match &named.derivation {
        Derivation::Primitive => None,
        Derivation::Series(a, b) => Some(("product rule (series)", amp_of(a)? * amp_of(b)?)),
        Derivation::Parallel(a, b) => Some(("sum rule (parallel)", amp_of(a)? + amp_of(b)?)),
        Derivation::Compose(a, b) => Some(("composite rule", amp_of(a)? * amp_of(b)?)),
        Derivation::Invert(a) => Some(("inverse is conjugate", amp_of(a)?.conj())),
    };
    if let Some((label, expect)) = derived {
        report.push(
            CheckResult::residual(label, (expect.0 - z.0).norm(), PROBABILITY_TOL)
                .with_detail(format!("from parts {}", fmt_c(expect.0))),
        );
    }
    Ok(report)
}

// ----------------------------------------------------------------- check-nd

#[derive(Debug, Clone, Copy)]
pub struct NdOptions {
    pub tol: f64,
    pub runs: Option<usize>,
}

fn table_rows(tables: &[&ProbabilityTable]) -> Vec<Row> {
    tables[0]
        .outcomes()
        .iter()
        .enumerate()
        .map(|(k, o)| Row {
            label: one_based(o),
            values: tables.iter().map(|t| t.probabilities()[k]).collect(),
        })
        .collect()
}

fn one_based(o: &OutcomeSet) -> String {
    let parts: Vec<String> = o.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// Binomial standard error of a frequency with mean `p`.
pub fn standard_error(p: f64, runs: usize) -> f64 {
    (p * (1.0 - p)).max(0.0).sqrt() / (runs as f64).sqrt()
}

/// Largest `|f − p|` in units of the binomial standard error of `p`.
pub fn max_standard_errors(freq: &ProbabilityTable, pred: &ProbabilityTable, runs: usize) -> f64 {
    freq.probabilities()
        .iter()
        .zip(pred.probabilities())
        .map(|(f, p)| {
            let dev = ((f - p).abs() - PROBABILITY_TOL).max(0.0);
            let se = standard_error(*p, runs);
            if dev == 0.0 {
                0.0
            } else if se == 0.0 {
                f64::INFINITY
            } else {
                dev / se
            }
        })
        .fold(0.0, f64::max)
}

fn nd_scenario(model: &AmplitudeModel, s: &NoDisturbanceScenario, nd: NdOptions, seed: u64, report: &mut RunReport) -> Result<(), CliError> {
    let inserted = insert_trivial(&s.experiment, s.position, s.trivial.clone())?;
    let (tables, elapsed) = timed(|| -> Result<_, CliError> {
        Ok((quantum_prediction(model, &s.experiment)?, quantum_prediction(model, &inserted)?))
    });
    let (baseline, with_trivial) = tables?;
    let name = &s.name;
    report.push(
        CheckResult::residual(format!("{name}: trivial measurement leaves probabilities unchanged"), baseline.max_deviation(&with_trivial), nd.tol)
            .with_detail(format!("trivial {} inserted at position {}", s.trivial, s.position))
            .with_elapsed(elapsed),
    );
    report.push(CheckResult::residual(format!("{name}: normalisation"), (baseline.total() - 1.0).abs(), PROBABILITY_TOL));
    match classical_prediction(model, &inserted) {
        Ok(classical) => {
            report.push(
                CheckResult::info(format!("{name}: predictions"))
                    .with_detail(format!("classical deviation {:.6e}", baseline.max_deviation(&classical)))
                    .with_table(&["outcome", "baseline", "with trivial", "classical"], table_rows(&[&baseline, &with_trivial, &classical])),
            );
            if let Some(expect) = &s.expect_classical {
                let dev = if expect.len() == classical.probabilities().len() {
                    expect.iter().zip(classical.probabilities()).map(|(e, c)| (e - c).abs()).fold(0.0, f64::max)
                } else {
                    f64::INFINITY
                };
                report.push(CheckResult::residual(format!("{name}: classical prediction matches expectation"), dev, PROBABILITY_TOL));
            }
        }
        Err(DisturbanceError::AsymmetricTransition { from, to, deviation }) => {
            report.push(
                CheckResult::residual(format!("{name}: symmetric transition probabilities"), deviation, feynrec_core::disturbance::SYMMETRY_TOL)
                    .with_witness(format!("{from} -> {to}")),
            );
        }
        Err(e) => return Err(e.into()),
    }
    if let Some(runs) = nd.runs {
        let (freq, elapsed) = timed(|| monte_carlo(model, &inserted, runs, seed));
        let freq = freq?;
        let se: Vec<f64> = with_trivial.probabilities().iter().map(|p| standard_error(*p, runs)).collect();
        let se_table = ProbabilityTable::new(with_trivial.outcomes().to_vec(), se);
        report.push(
            CheckResult::residual(
                format!("{name}: Monte-Carlo within {MC_SIGMAS} standard errors"),
                max_standard_errors(&freq, &with_trivial, runs),
                MC_SIGMAS,
            )
            .with_detail(format!("{runs} runs, seed {seed}"))
            .with_table(&["outcome", "frequency", "prediction", "std error"], table_rows(&[&freq, &with_trivial, &se_table]))
            .with_elapsed(elapsed),
        );
    }
    Ok(())
}

pub fn check_nd(config: &Path, scenario: Option<&str>, nd: NdOptions, opts: Options) -> Result<RunReport, CliError> {
    let cfg = load(config, opts)?;
    let chosen: Vec<&NoDisturbanceScenario> = match scenario {
        Some(name) => vec![cfg
            .no_disturbance
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::UnknownScenario(name.to_string()))?],
        None => cfg.no_disturbance.iter().collect(),
    };
    if chosen.is_empty() {
        return Err(CliError::NoScenario("no_disturbance"));
    }
    let mut report = RunReport::new("check-nd");
    for s in chosen {
        nd_scenario(&cfg.model, s, nd, opts.seed, &mut report)?;
    }
    Ok(report)
}

/// Experiment of a scenario, for callers that run it directly.
pub fn scenario_experiment(cfg: &LoadedConfig, name: &str) -> Option<Experiment> {
    cfg.no_disturbance.iter().find(|s| s.name == name).map(|s| s.experiment.clone())
}

// -------------------------------------------------------------- reconstruct

pub fn reconstruct(config: &Path, opts: Options) -> Result<RunReport, CliError> {
    let cfg = load(config, opts)?;
    let model = &cfg.model;
    let mut report = RunReport::new("reconstruct");
    for system in model.systems() {
        reconstruct_system(model, system, &mut report)?;
    }
    let pairs: Vec<(String, String)> = if cfg.composition.is_empty() {
        let names: Vec<&str> = model.systems().iter().map(|s| s.name()).collect();
        let mut all = Vec::new();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                all.push((a.to_string(), b.to_string()));
            }
        }
        all
    } else {
        cfg.composition.clone()
    };
    for (a, b) in pairs {
        let (sa, sb) = (model.system(&a).expect("resolved"), model.system(&b).expect("resolved"));
        report.push(tensor_check(model, sa, sb)?);
    }
    Ok(report)
}

fn reconstruct_system(model: &AmplitudeModel, system: &SystemModel, report: &mut RunReport) -> Result<(), CliError> {
    let sys = system.name();
    let n = system.dim();
    let reference = mref(system, system.reference());
    let names: Vec<&str> = system.measurements().collect();
    let ints = interactions(system);

    // States: components are the amplitudes of two-event sequences.
    let mut states = Vec::new();
    let mut state_dev = Worst::new();
    for &l in &names {
        for i in 0..n {
            let prep = Event::atomic(0, mref(system, l), i)?;
            for int in &ints {
                let v = state_after_preparation(model, &prep, int, &reference)?;
                for (j, c) in v.components().iter().enumerate() {
                    let seq = two_event(system, prep.clone(), Event::atomic(1, reference.clone(), j)?, int);
                    let z = amplitude(model, &seq)?;
                    state_dev.record((z.0 - c).norm(), || format!("{l}={} under {int}, component {}", i + 1, j + 1));
                }
                state_dev.record((v.norm() - 1.0).abs(), || format!("norm of state from {l}={} under {int}", i + 1));
                states.push((prep.clone(), int.clone(), v));
            }
        }
    }
    report.push(state_dev.check(format!("{sys}: state vectors from preparation"), PROBABILITY_TOL));

    // Prepared states, operators and the Born rule.
    let mut unitarity = Worst::new();
    let mut repeat = Worst::new();
    let mut born = Worst::new();
    let mut herm = Worst::new();
    let mut spectrum = Worst::new();
    let mut representation = Worst::new();
    for &target in &names {
        let tref = mref(system, target);
        let t = TransformationMatrix::from_model(model, &reference, &tref)?;
        unitarity.record(t.matrix().unitarity_defect(), || format!("{} -> {target}", system.reference()));
        let us = prepared_states(&t)?;
        if n <= 8 {
            let listed: Vec<String> = us.iter().enumerate().map(|(k, u)| format!("u{} = {}", k + 1, fmt_vec(u.components()))).collect();
            report.push(CheckResult::info(format!("{sys}: states prepared by {target}")).with_detail(listed.join("; ")));
        }
        for (q, uq) in us.iter().enumerate() {
            for (k, uk) in us.iter().enumerate() {
                let expect = if k == q { 1.0 } else { 0.0 };
                repeat.record((born_probability(uk, uq)? - expect).abs(), || format!("{target}: outcome {} after {}", k + 1, q + 1));
            }
        }
        let values: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let op = MeasurementOperator::from_transformation(values, &t)?;
        herm.record(op.matrix().hermiticity_defect(), || format!("operator of {target}"));
        let back = MeasurementOperator::from_matrix(op.matrix().clone(), reference.clone())?;
        for (x, y) in back.eigenvalues().iter().zip(op.spectrum()) {
            spectrum.record((x - y).abs(), || format!("spectrum of {target}"));
        }
        for (prep, int, v) in &states {
            let probs = op.outcome_probabilities(v)?;
            let total: f64 = probs.iter().sum();
            born.record((total - 1.0).abs(), || format!("{target} after {prep} under {int}"));
            for (k, p) in probs.iter().enumerate() {
                let seq = two_event(system, prep.clone(), Event::atomic(1, tref.clone(), k)?, int);
                let q = probability(model, &seq)?;
                born.record((p - q).abs(), || format!("{target}={} after {prep} under {int}", k + 1));
            }
        }
        // Representation change to `target`: v' = V†v with V from target to reference.
        let v_matrix = TransformationMatrix::from_model(model, &tref, &reference)?;
        let moved = conjugate_operator(&op, &v_matrix)?;
        for (prep, int, v) in &states {
            let vp = change_representation(v, &v_matrix)?;
            let direct = state_after_preparation(model, prep, int, &tref)?;
            representation.record(linalg::max_abs_diff(vp.components(), direct.components()), || {
                format!("state from {prep} under {int} in the {target} representation")
            });
            for (a, b) in op.eigenstates().iter().zip(moved.eigenstates()) {
                let d = (born_probability(a, v)? - born_probability(b, &vp)?).abs();
                representation.record(d, || format!("probabilities of {target} from {prep} under {int}"));
            }
        }
    }
    report.push(unitarity.check(format!("{sys}: transformation matrices unitary"), UNITARY_TOL));
    report.push(repeat.check(format!("{sys}: prepared states repeatable"), PROBABILITY_TOL));
    report.push(herm.check(format!("{sys}: measurement operators Hermitian"), PROBABILITY_TOL));
    report.push(spectrum.check(format!("{sys}: operator spectra recovered"), 1e-9));
    report.push(born.check(format!("{sys}: Born rule matches Feynman probabilities"), PROBABILITY_TOL));
    report.push(representation.check(format!("{sys}: representation change"), PROBABILITY_TOL));

    // Unitary evolution between measurements.
    let mut evolution = Worst::new();
    let mut evo_unitary = Worst::new();
    for int in &ints {
        let u = EvolutionOperator::from_model(model, &reference, int, (0, 1))?;
        evo_unitary.record(u.matrix().unitarity_defect(), || format!("evolution under {int}"));
        if n <= 8 && !int.is_identity() {
            let rows: Vec<String> = (0..n).map(|r| fmt_vec(u.matrix().row(r))).collect();
            report.push(CheckResult::info(format!("{sys}: evolution operator {int}")).with_detail(rows.join("; ")));
        }
        for i in 0..n {
            let prep = Event::atomic(0, reference.clone(), i)?;
            let v0 = StateVector::basis(reference.clone(), i);
            let direct = state_after_preparation(model, &prep, int, &reference)?;
            let evolved = evolve(&v0, &u)?;
            evolution.record(linalg::max_abs_diff(evolved.components(), direct.components()), || {
                format!("{int} from {}={}", system.reference(), i + 1)
            });
            let back = evolve(&evolved, &u.inverse())?;
            evolution.record(linalg::max_abs_diff(back.components(), v0.components()), || format!("{int} reversed"));
        }
    }
    report.push(evo_unitary.check(format!("{sys}: evolution operators unitary"), UNITARY_TOL));
    report.push(evolution.check(format!("{sys}: evolution reproduces interaction amplitudes"), PROBABILITY_TOL));
    Ok(())
}

fn tensor_check(model: &AmplitudeModel, a: &SystemModel, b: &SystemModel) -> Result<CheckResult, CliError> {
    let (ra, rb) = (mref(a, a.reference()), mref(b, b.reference()));
    let joint_ref = ra.compose(&rb);
    let mut worst = Worst::new();
    let mut cases = 0;
    for la in a.measurements() {
        for lb in b.measurements() {
            for ia in interactions(a) {
                for ib in interactions(b) {
                    for i in 0..a.dim() {
                        for j in 0..b.dim() {
                            let pa = Event::atomic(0, mref(a, la), i)?;
                            let pb = Event::atomic(0, mref(b, lb), j)?;
                            let va = state_after_preparation(model, &pa, &ia, &ra)?;
                            let vb = state_after_preparation(model, &pb, &ib, &rb)?;
                            let joint = Event::atomic(0, pa.measurement.compose(&pb.measurement), i * b.dim() + j)?;
                            let v = state_after_preparation(model, &joint, &ia.compose(&ib), &joint_ref)?;
                            let product = compose_states(&va, &vb)?;
                            worst.record(linalg::max_abs_diff(v.components(), product.components()), || {
                                format!("{la}={} under {ia} with {lb}={} under {ib}", i + 1, j + 1)
                            });
                            cases += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(worst
        .check(format!("{} x {}: composite state is the tensor product", a.name(), b.name()), PROBABILITY_TOL)
        .with_detail(format!("{cases} preparations")))
}

// -------------------------------------------------------- check-composition

fn axiom_rows(check: &AxiomCheck) -> Vec<Row> {
    check
        .max_residuals
        .iter()
        .map(|(axiom, r)| Row {
            label: axiom.label().to_string(),
            values: vec![*r, check.violation(*axiom).map_or(0.0, |v| v.violations as f64)],
        })
        .collect()
}

fn witness(check: &AxiomCheck) -> Option<String> {
    check.violations.first().map(|v| {
        let args: Vec<String> = v.witness.iter().map(|z| fmt_c(*z)).collect();
        format!("{} at ({})", v.axiom, args.join(", "))
    })
}

pub fn check_composition(samples: usize, opts: Options) -> Result<RunReport, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let seed = opts.seed;
    let mut report = RunReport::new("check-composition");
    for f in BinaryCandidate::standard_family() {
        let is_product = f.label == BinaryCandidate::product().label;
        let (check, elapsed) = timed(|| check_binary_axioms(&f, samples, seed));
        let admissible = check_admissibility(&f, samples.min(1000), seed);
        let fixed = check_fixed_point_constraint(&f, samples, seed);
        let columns = ["axiom", "max residual", "violations"];
        if is_product {
            let worst = check.max_residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max);
            let mut c = CheckResult::residual(format!("F = {}: satisfies every axiom", f.label), worst, PROBABILITY_TOL)
                .with_detail(format!("{} samples, sum skipped at rate {:.4}", check.evaluated, check.skip_rate()))
                .with_table(&columns, axiom_rows(&check))
                .with_elapsed(elapsed);
            if !check.passed() {
                c.status = Status::Fail;
                c.witness = witness(&check);
            }
            report.push(c);
            let fp_ok = matches!(fixed, Ok(None));
            report.push(CheckResult::new(format!("F = {}: fixed-point constraint", f.label), Status::from_bool(fp_ok)));
            continue;
        }
        let rejected = !check.passed() || admissible == Admissibility::IdenticallyZero || !matches!(fixed, Ok(None));
        let mut c = CheckResult::new(format!("F = {}: rejected", f.label), Status::from_bool(rejected))
            .with_table(&columns, axiom_rows(&check))
            .with_elapsed(elapsed);
        let mut reasons = Vec::new();
        if let Some(w) = witness(&check) {
            reasons.push(w);
        }
        match &fixed {
            Ok(Some(v)) => reasons.push(format!(
                "fixed-point fails at {} (residual {:.3e})",
                v.witness.iter().map(|z| fmt_c(*z)).collect::<Vec<_>>().join(", "),
                v.residual
            )),
            Err(e) => reasons.push(e.to_string()),
            Ok(None) => {}
        }
        if admissible == Admissibility::IdenticallyZero {
            reasons.push("inadmissible: identically zero".into());
        }
        if !reasons.is_empty() {
            c = c.with_witness(reasons.join("; "));
        }
        report.push(c);
    }
    for (f, expect_pass) in [
        (UnaryCandidate::identity(), true),
        (UnaryCandidate::conjugate(), true),
        (UnaryCandidate::square(), false),
    ] {
        let check = check_unary_pair(&f, samples, seed);
        let ok = check.passed() == expect_pass;
        let verb = if expect_pass { "solves" } else { "fails" };
        let mut c = CheckResult::new(format!("f(z) = {}: {verb} the additive and multiplicative pair", f.label), Status::from_bool(ok))
            .with_table(&["axiom", "max residual", "violations"], axiom_rows(&check));
        if let Some(w) = witness(&check) {
            c = c.with_witness(w);
        }
        report.push(c);
    }
    Ok(report)
}

// ------------------------------------------------------------------- action

#[derive(Debug, Clone)]
pub struct ActionOptions {
    pub functional: ActionFunctional,
    pub scale: ActionScale,
    pub grid: LatticeSpec,
    pub steps: usize,
    pub paths: usize,
}

/// Random path with strictly increasing times.
pub fn random_path<R: Rng + ?Sized>(rng: &mut R) -> PathSpec {
    let n = rng.random_range(3..12);
    let positions: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut times = vec![rng.random_range(-5.0..5.0)];
    for _ in 1..n {
        let last = *times.last().expect("non-empty");
        times.push(last + rng.random_range(0.01..1.0));
    }
    PathSpec::new(positions, times).expect("valid random path")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn action_cmd(a: &ActionOptions, opts: Options) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("action");
    let l = &a.functional;
    let scale = a.scale;
    report.push(CheckResult::info(format!("lagrangian {l}")).with_detail(format!("alpha {}", scale.alpha())));

    let rest = PathSpec::uniform(vec![0.0; 4], 0.0, a.grid.time_step)?;
    let s0 = action(&rest, l)?;
    let z0 = amplitude_from_action(s0, scale);
    report.push(
        CheckResult::info("path at rest at the origin").with_detail(format!("S = {s0:.12}, amplitude {}", fmt_c(z0.0))),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut additivity = Worst::new();
    let mut inversion = Worst::new();
    let mut homomorphism = Worst::new();
    let mut conjugation = Worst::new();
    let mut sample = None;
    let ((), elapsed) = timed(|| {
        for _ in 0..a.paths {
            let p = random_path(&mut rng);
            let cut = rng.random_range(1..p.segments());
            let (Ok(s), Ok((pa, pb))) = (action(&p, l), p.split(cut)) else {
                additivity.record(f64::INFINITY, || "action undefined".into());
                continue;
            };
            let (sa, sb) = (action(&pa, l).unwrap_or(f64::NAN), action(&pb, l).unwrap_or(f64::NAN));
            additivity.record(rel(sa + sb, s), || format!("split at {cut} of {p:?}"));
            let si = action(&p.invert(), l).unwrap_or(f64::NAN);
            inversion.record(rel(si, -s), || format!("{p:?}"));
            let lhs = amplitude_from_action(sa + sb, scale).0;
            let rhs = amplitude_from_action(sa, scale).0 * amplitude_from_action(sb, scale).0;
            // A phase of size x carries a rounding error of order x·ε.
            let size = (scale.alpha() * (sa.abs() + sb.abs())).max(1.0);
            homomorphism.record((lhs - rhs).norm() / size, || format!("S_A = {sa}, S_B = {sb}"));
            let z = amplitude_from_action(s, scale).0;
            conjugation.record((amplitude_from_action(-s, scale).0 - z.conj()).norm(), || format!("S = {s}"));
            if sample.is_none() {
                sample = Some((s, z));
            }
        }
    });
    if let Some((s, z)) = sample {
        report.push(CheckResult::info("first random path").with_detail(format!("S = {s:.12}, amplitude {}", fmt_c(z))));
    }
    report.push(
        additivity
            .check("action additive over split paths", PROBABILITY_TOL)
            .with_detail(format!("{} paths", a.paths))
            .with_elapsed(elapsed),
    );
    report.push(inversion.check("action odd under path inversion", PROBABILITY_TOL));
    report.push(homomorphism.check("exp(i alpha S) multiplicative (relative)", PROBABILITY_TOL));
    report.push(conjugation.check("exp(i alpha S) conjugates under inversion", PROBABILITY_TOL));

    let phase = check_candidate_amplitude_map(&RealCandidate::phase(scale), MAP_SAMPLES, opts.seed);
    report.push(
        CheckResult::new("candidate exp(i alpha x) satisfies both equations", Status::from_bool(phase.passed() && phase.unit_modulus()))
            .with_detail(format!("estimated beta {:.3e}, alpha {:.6}", phase.beta_estimate, phase.alpha_estimate)),
    );
    let growth = check_candidate_amplitude_map(&RealCandidate::exponential(1.0, 1.0), MAP_SAMPLES, opts.seed);
    let broken = growth.violation(MapProperty::Inversion);
    let mut c = CheckResult::new("candidate exp(x + i x) rejected", Status::from_bool(broken.is_some()))
        .with_detail(format!("estimated beta {:.6}", growth.beta_estimate));
    if let Some(v) = broken {
        c = c.with_witness(format!("inversion fails at x = {:?} (residual {:.3e})", v.witness, v.residual));
    }
    report.push(c);

    let g = &a.grid;
    let grid_detail = format!(
        "{} sites, spacing {}, time step {:.6e}, {} steps, {} boundary",
        g.sites,
        g.spacing,
        g.time_step,
        a.steps,
        match g.boundary {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        }
    );
    if let Some(mass) = free_mass(l) {
        let (cmp, elapsed) = timed(|| compare_free_particle(mass, g, a.steps, scale));
        let cmp = cmp?;
        report.push(
            CheckResult::residual("lattice propagator modulus matches the free kernel", cmp.max_relative_deviation, PROPAGATOR_TOL)
                .with_detail(format!("{grid_detail}; expected |P| = {:.6e}", cmp.expected_modulus))
                .with_elapsed(elapsed),
        );
        report.push(
            CheckResult::info("single-step kernel unitarity defect").with_detail(format!("{:.3e}", cmp.kernel_unitarity_defect)),
        );
    } else {
        let (p, elapsed) = timed(|| lattice_propagator(l, g, a.steps, scale));
        let p: CMatrix = p?;
        report.push(
            CheckResult::info("lattice propagator")
                .with_detail(format!("{grid_detail}; unitarity defect {:.3e}", p.unitarity_defect()))
                .with_elapsed(elapsed),
        );
    }
    Ok(report)
}

fn free_mass(l: &ActionFunctional) -> Option<f64> {
    match l.lagrangian {
        feynrec_core::action::Lagrangian::FreeParticle { mass } => Some(mass),
        _ => None,
    }
}

/// Action options from a config scenario.
pub fn action_from_config(config: &Path, scenario: Option<&str>, paths: usize, opts: Options) -> Result<ActionOptions, CliError> {
    let cfg = load(config, opts)?;
    let s = match scenario {
        Some(name) => cfg.actions.iter().find(|s| s.name == name).ok_or_else(|| CliError::UnknownScenario(name.to_string()))?,
        None => cfg.actions.first().ok_or(CliError::NoScenario("action"))?,
    };
    Ok(ActionOptions {
        functional: s.functional,
        scale: s.scale,
        grid: s.grid,
        steps: s.steps,
        paths,
    })
}
