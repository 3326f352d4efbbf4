//! TOML experiment descriptions.
//!
//! ```toml
//! schema_version = 1
//!
//! [[systems]]
//! name = "spin"
//! reference = "Z"
//! dim = 2
//! measurements = [{ name = "X", frame = [[0.7071067811865476, 0.7071067811865476], [0.7071067811865476, -0.7071067811865476]] }]
//!
//! [[sequences]]
//! name = "z-x"
//! events = [{ time = 0, measurement = "Z", outcome = 1 }, { time = 1, measurement = "X", outcome = 2 }]
//! ```
//!
//! Matrix entries are `[re, im]` pairs or plain reals. Outcomes are 1-based;
//! composite measurements are written as name lists and their outcomes as
//! row-major flattened indices.

use std::fs;
use std::path::Path;

use feynrec_core::action::{ActionFunctional, ActionScale, Boundary, LatticeSpec};
use feynrec_core::amplitude::{AmplitudeModel, ModelError, Stage};
use feynrec_core::disturbance::Experiment;
use feynrec_core::linalg::CMatrix;
use feynrec_core::logic::{
    self, Event, InteractionId, Measurement, MeasurementRef, OutcomeSet, Sequence, SystemId,
};
use feynrec_core::Complex64;
use serde::Deserialize;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{field}: unresolved reference {name:?}")]
    Unresolved { field: String, name: String },
    #[error("{field}: {source}")]
    Model { field: String, source: ModelError },
}

fn invalid(field: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(&self) -> Complex64 {
        match *self {
            Entry::Real(re) => Complex64::new(re, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

pub type MatrixConfig = Vec<Vec<Entry>>;

/// A single name or the component names of a composite.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Names {
    One(String),
    Many(Vec<String>),
}

impl Names {
    fn list(&self) -> Vec<String> {
        match self {
            Names::One(s) => vec![s.clone()],
            Names::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OutcomeConfig {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub systems: Vec<SystemConfig>,
    #[serde(default)]
    pub transitions: Vec<TransitionConfig>,
    #[serde(default)]
    pub sequences: Vec<SequenceConfig>,
    #[serde(default)]
    pub scenarios: ScenarioConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    pub reference: String,
    pub dim: usize,
    #[serde(default)]
    pub measurements: Vec<MeasurementConfig>,
    #[serde(default)]
    pub interactions: Vec<InteractionConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub name: String,
    /// Transformation matrix from the reference measurement.
    pub frame: MatrixConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    pub name: String,
    /// Unitary in the reference representation.
    pub matrix: MatrixConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub from: String,
    pub to: String,
    #[serde(default = "identity_name")]
    pub interaction: String,
    pub matrix: MatrixConfig,
}

fn identity_name() -> String {
    InteractionId::IDENTITY.to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub time: i64,
    pub measurement: Names,
    pub outcome: OutcomeConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub name: String,
    #[serde(default)]
    pub events: Option<Vec<EventConfig>>,
    #[serde(default)]
    pub interactions: Option<Vec<Names>>,
    #[serde(default)]
    pub series: Option<[String; 2]>,
    #[serde(default)]
    pub parallel: Option<[String; 2]>,
    #[serde(default)]
    pub compose: Option<[String; 2]>,
    #[serde(default)]
    pub invert: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub no_disturbance: Vec<NoDisturbanceConfig>,
    #[serde(default)]
    pub composition: Vec<CompositionConfig>,
    #[serde(default)]
    pub action: Vec<ActionConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparationConfig {
    pub measurement: Names,
    pub outcome: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub measurement: Names,
    #[serde(default)]
    pub interaction: Option<Names>,
    /// Blocks of 1-based atomic outcomes; atomic when omitted.
    #[serde(default)]
    pub partition: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertConfig {
    pub position: usize,
    pub measurement: Names,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoDisturbanceConfig {
    pub name: String,
    pub preparation: PreparationConfig,
    pub stages: Vec<StageConfig>,
    pub insert: InsertConfig,
    /// Expected classical probability of each final outcome, if known.
    #[serde(default)]
    pub expect_classical: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionConfig {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    pub name: String,
    pub lagrangian: String,
    pub mass: f64,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    pub sites: usize,
    pub steps: usize,
    #[serde(default)]
    pub boundary: Option<String>,
    #[serde(default)]
    pub spacing: Option<f64>,
    #[serde(default)]
    pub time_step: Option<f64>,
}

/// How a declared sequence was built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Derivation {
    Primitive,
    Series(String, String),
    Parallel(String, String),
    Compose(String, String),
    Invert(String),
}

#[derive(Debug, Clone)]
pub struct NamedSequence {
    pub name: String,
    pub sequence: Sequence,
    pub derivation: Derivation,
}

#[derive(Debug, Clone)]
pub struct NoDisturbanceScenario {
    pub name: String,
    pub experiment: Experiment,
    pub position: usize,
    pub trivial: MeasurementRef,
    pub expect_classical: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ActionScenario {
    pub name: String,
    pub functional: ActionFunctional,
    pub scale: ActionScale,
    pub grid: LatticeSpec,
    pub steps: usize,
}

/// A config with every reference resolved.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub name: Option<String>,
    pub model: AmplitudeModel,
    pub sequences: Vec<NamedSequence>,
    pub no_disturbance: Vec<NoDisturbanceScenario>,
    /// System pairs checked as composites; every pair when empty.
    pub composition: Vec<(String, String)>,
    pub actions: Vec<ActionScenario>,
}

impl LoadedConfig {
    pub fn sequence(&self, name: &str) -> Option<&NamedSequence> {
        self.sequences.iter().find(|s| s.name == name)
    }
}

pub fn load(path: &Path, validate: bool) -> Result<LoadedConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text, validate)
}

pub fn parse(text: &str, validate: bool) -> Result<LoadedConfig, ConfigError> {
    let raw: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))?;
    resolve(&raw, validate)
}

fn matrix(field: &str, m: &MatrixConfig, dim: usize) -> Result<CMatrix, ConfigError> {
    if m.len() != dim || m.iter().any(|r| r.len() != dim) {
        return Err(invalid(field, format!("expected a {dim}x{dim} matrix")));
    }
    let rows: Vec<Vec<Complex64>> = m.iter().map(|r| r.iter().map(Entry::value).collect()).collect();
    let out = CMatrix::from_rows(&rows).expect("checked shape");
    if !out.is_finite() {
        return Err(invalid(field, "non-finite entry"));
    }
    Ok(out)
}

fn model_err(field: &str) -> impl Fn(ModelError) -> ConfigError + '_ {
    move |source| ConfigError::Model {
        field: field.to_string(),
        source,
    }
}

fn measurement_ref(model: &AmplitudeModel, field: &str, names: &Names) -> Result<MeasurementRef, ConfigError> {
    let list = names.list();
    if list.is_empty() {
        return Err(invalid(field, "empty measurement list"));
    }
    let mut out: Option<MeasurementRef> = None;
    for n in &list {
        let dim = model.measurement_dim(n).map_err(|_| ConfigError::Unresolved {
            field: field.to_string(),
            name: n.clone(),
        })?;
        let r = MeasurementRef::new(n.clone(), dim);
        out = Some(match out {
            Some(prev) => prev.compose(&r),
            None => r,
        });
    }
    Ok(out.expect("non-empty"))
}

fn system_of(model: &AmplitudeModel, r: &MeasurementRef) -> SystemId {
    let mut parts = r.id.components().iter().map(|c| SystemId::new(model.system_of(c).expect("resolved").name()));
    let first = parts.next().expect("non-empty");
    parts.fold(first, |acc, s| acc.compose(&s))
}

fn interaction(model: &AmplitudeModel, field: &str, names: &Names) -> Result<InteractionId, ConfigError> {
    let list = names.list();
    let mut out: Option<InteractionId> = None;
    for n in &list {
        let known = n == InteractionId::IDENTITY || model.systems().iter().any(|s| s.interactions().any(|(k, _)| k == n.as_str()));
        if !known {
            return Err(ConfigError::Unresolved {
                field: field.to_string(),
                name: n.clone(),
            });
        }
        let id = InteractionId::new(n.clone());
        out = Some(match out {
            Some(prev) => prev.compose(&id),
            None => id,
        });
    }
    out.ok_or_else(|| invalid(field, "empty interaction list"))
}

fn identity_for(r: &MeasurementRef) -> InteractionId {
    InteractionId::identity_on(r.id.components().len())
}

fn outcome(field: &str, o: &OutcomeConfig, count: usize) -> Result<OutcomeSet, ConfigError> {
    let one_based = match o {
        OutcomeConfig::One(i) => vec![*i],
        OutcomeConfig::Many(v) => v.clone(),
    };
    if one_based.iter().any(|&i| i == 0 || i > count) {
        return Err(invalid(field, format!("outcomes are numbered 1..={count}")));
    }
    OutcomeSet::new(one_based.into_iter().map(|i| i - 1)).map_err(|e| invalid(field, e))
}

fn resolve(raw: &ExperimentConfig, validate: bool) -> Result<LoadedConfig, ConfigError> {
    if raw.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::SchemaVersion(raw.schema_version));
    }
    let mut model = if validate {
        AmplitudeModel::new()
    } else {
        AmplitudeModel::unvalidated()
    };
    for (si, sys) in raw.systems.iter().enumerate() {
        let field = format!("systems[{si}]");
        model.add_system(&sys.name, &sys.reference, sys.dim).map_err(model_err(&field))?;
        for (mi, m) in sys.measurements.iter().enumerate() {
            let field = format!("systems[{si}].measurements[{mi}].frame");
            let frame = matrix(&field, &m.frame, sys.dim)?;
            model.add_measurement(&sys.name, &m.name, frame).map_err(model_err(&field))?;
        }
        for (ii, i) in sys.interactions.iter().enumerate() {
            let field = format!("systems[{si}].interactions[{ii}].matrix");
            let u = matrix(&field, &i.matrix, sys.dim)?;
            model.add_interaction(&sys.name, &i.name, u).map_err(model_err(&field))?;
        }
    }
    for (ti, t) in raw.transitions.iter().enumerate() {
        let field = format!("transitions[{ti}]");
        let dim = model.measurement_dim(&t.from).map_err(|_| ConfigError::Unresolved {
            field: field.clone(),
            name: t.from.clone(),
        })?;
        let m = matrix(&format!("{field}.matrix"), &t.matrix, dim)?;
        model.add_transition(&t.from, &t.to, &t.interaction, m).map_err(model_err(&field))?;
    }

    let mut sequences: Vec<NamedSequence> = Vec::new();
    for (qi, q) in raw.sequences.iter().enumerate() {
        let field = format!("sequences[{qi}]");
        if sequences.iter().any(|s| s.name == q.name) {
            return Err(invalid(&field, format!("duplicate sequence name {:?}", q.name)));
        }
        let (sequence, derivation) = resolve_sequence(&model, &sequences, &field, q)?;
        sequences.push(NamedSequence {
            name: q.name.clone(),
            sequence,
            derivation,
        });
    }

    let mut no_disturbance = Vec::new();
    for (ni, nd) in raw.scenarios.no_disturbance.iter().enumerate() {
        let field = format!("scenarios.no_disturbance[{ni}]");
        no_disturbance.push(resolve_nd(&model, &field, nd)?);
    }
    let mut composition = Vec::new();
    for (ci, c) in raw.scenarios.composition.iter().enumerate() {
        let field = format!("scenarios.composition[{ci}]");
        for name in [&c.left, &c.right] {
            if model.system(name).is_none() {
                return Err(ConfigError::Unresolved {
                    field: field.clone(),
                    name: name.clone(),
                });
            }
        }
        if c.left == c.right {
            return Err(invalid(field, "a composite needs two distinct systems"));
        }
        composition.push((c.left.clone(), c.right.clone()));
    }
    let mut actions = Vec::new();
    for (ai, a) in raw.scenarios.action.iter().enumerate() {
        actions.push(resolve_action(&format!("scenarios.action[{ai}]"), a)?);
    }
    Ok(LoadedConfig {
        name: raw.name.clone(),
        model,
        sequences,
        no_disturbance,
        composition,
        actions,
    })
}

fn resolve_sequence(
    model: &AmplitudeModel,
    earlier: &[NamedSequence],
    field: &str,
    q: &SequenceConfig,
) -> Result<(Sequence, Derivation), ConfigError> {
    let lookup = |name: &String| {
        earlier
            .iter()
            .find(|s| &s.name == name)
            .map(|s| s.sequence.clone())
            .ok_or_else(|| ConfigError::Unresolved {
                field: field.to_string(),
                name: name.clone(),
            })
    };
    let forms = [q.events.is_some(), q.series.is_some(), q.parallel.is_some(), q.compose.is_some(), q.invert.is_some()];
    if forms.iter().filter(|f| **f).count() != 1 {
        return Err(invalid(field, "give exactly one of events, series, parallel, compose or invert"));
    }
    let logic_err = |e: logic::LogicError| invalid(field, e);
    if let Some([a, b]) = &q.series {
        let s = logic::series(&lookup(a)?, &lookup(b)?).map_err(logic_err)?;
        return Ok((s, Derivation::Series(a.clone(), b.clone())));
    }
    if let Some([a, b]) = &q.parallel {
        let s = logic::parallel(&lookup(a)?, &lookup(b)?).map_err(logic_err)?;
        return Ok((s, Derivation::Parallel(a.clone(), b.clone())));
    }
    if let Some([a, b]) = &q.compose {
        let s = logic::compose(&lookup(a)?, &lookup(b)?).map_err(logic_err)?;
        return Ok((s, Derivation::Compose(a.clone(), b.clone())));
    }
    if let Some(a) = &q.invert {
        let s = logic::invert(&lookup(a)?).map_err(logic_err)?;
        return Ok((s, Derivation::Invert(a.clone())));
    }
    let events_cfg = q.events.as_ref().expect("checked above");
    let mut events = Vec::with_capacity(events_cfg.len());
    for (ei, e) in events_cfg.iter().enumerate() {
        let efield = format!("{field}.events[{ei}]");
        let r = measurement_ref(model, &format!("{efield}.measurement"), &e.measurement)?;
        let o = outcome(&format!("{efield}.outcome"), &e.outcome, r.atomic_count)?;
        events.push(Event::new(e.time, r, o).map_err(|err| invalid(&efield, err))?);
    }
    if events.is_empty() {
        return Err(invalid(field, "a sequence needs events"));
    }
    let system = system_of(model, &events[0].measurement);
    for (ei, e) in events.iter().enumerate() {
        if system_of(model, &e.measurement) != system {
            return Err(invalid(format!("{field}.events[{ei}]"), "measurement belongs to a different system"));
        }
    }
    let interactions = match &q.interactions {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(ii, n)| interaction(model, &format!("{field}.interactions[{ii}]"), n))
            .collect::<Result<Vec<_>, _>>()?,
        None => events.iter().skip(1).map(|e| identity_for(&e.measurement)).collect(),
    };
    let seq = Sequence::new(system, events, interactions).map_err(logic_err)?;
    Ok((seq, Derivation::Primitive))
}

fn resolve_nd(model: &AmplitudeModel, field: &str, nd: &NoDisturbanceConfig) -> Result<NoDisturbanceScenario, ConfigError> {
    let pref = measurement_ref(model, &format!("{field}.preparation.measurement"), &nd.preparation.measurement)?;
    let pout = outcome(
        &format!("{field}.preparation.outcome"),
        &OutcomeConfig::One(nd.preparation.outcome),
        pref.atomic_count,
    )?;
    let prep = Event::new(0, pref, pout).map_err(|e| invalid(field, e))?;
    let mut stages = Vec::with_capacity(nd.stages.len());
    for (si, s) in nd.stages.iter().enumerate() {
        let sfield = format!("{field}.stages[{si}]");
        let r = measurement_ref(model, &format!("{sfield}.measurement"), &s.measurement)?;
        let m = match &s.partition {
            None => Measurement::atomic_from(r.clone()),
            Some(blocks) => {
                let mut sets = Vec::with_capacity(blocks.len());
                for b in blocks {
                    sets.push(outcome(&format!("{sfield}.partition"), &OutcomeConfig::Many(b.clone()), r.atomic_count)?);
                }
                Measurement::with_partition(r.clone(), sets)
            }
        }
        .map_err(|e| invalid(&sfield, e))?;
        let i = match &s.interaction {
            Some(n) => interaction(model, &format!("{sfield}.interaction"), n)?,
            None => identity_for(&r),
        };
        stages.push(Stage::new(m, i));
    }
    let experiment = Experiment::new(prep, stages).map_err(|e| invalid(field, e))?;
    let trivial = measurement_ref(model, &format!("{field}.insert.measurement"), &nd.insert.measurement)?;
    if nd.insert.position == 0 || nd.insert.position > experiment.stages.len() {
        return Err(invalid(
            format!("{field}.insert.position"),
            format!("must lie strictly between two measurements (1..={})", experiment.stages.len()),
        ));
    }
    Ok(NoDisturbanceScenario {
        name: nd.name.clone(),
        experiment,
        position: nd.insert.position,
        trivial,
        expect_classical: nd.expect_classical.clone(),
    })
}

/// Parses a Lagrangian name.
pub fn functional(field: &str, name: &str, mass: f64, omega: Option<f64>) -> Result<ActionFunctional, ConfigError> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(invalid(field, "mass must be positive"));
    }
    match (name, omega) {
        ("free", None) => Ok(ActionFunctional::free_particle(mass)),
        ("free", Some(_)) => Err(invalid(field, "the free particle takes no omega")),
        ("harmonic", Some(w)) if w.is_finite() => Ok(ActionFunctional::harmonic(mass, w)),
        ("harmonic", _) => Err(invalid(field, "the harmonic oscillator needs a finite omega")),
        _ => Err(invalid(field, format!("unknown lagrangian {name:?} (free or harmonic)"))),
    }
}

/// Builds the lattice: the periodic revival lattice unless spacing or time
/// step are given.
pub fn lattice(
    field: &str,
    functional: &ActionFunctional,
    scale: ActionScale,
    sites: usize,
    steps: usize,
    boundary: Option<&str>,
    spacing: Option<f64>,
    time_step: Option<f64>,
) -> Result<LatticeSpec, ConfigError> {
    let boundary = match boundary.unwrap_or("periodic") {
        "periodic" => Boundary::Periodic,
        "open" => Boundary::Open,
        other => return Err(invalid(field, format!("unknown boundary {other:?} (periodic or open)"))),
    };
    if sites < 2 || steps == 0 {
        return Err(invalid(field, "need at least two sites and one step"));
    }
    let mut grid = LatticeSpec::revival(sites, steps, functional.mass(), scale);
    grid.boundary = boundary;
    if let Some(dx) = spacing {
        grid.spacing = dx;
        grid.origin = -0.5 * (sites as f64 - 1.0) * dx;
    }
    if let Some(dt) = time_step {
        grid.time_step = dt;
    }
    Ok(grid)
}

fn resolve_action(field: &str, a: &ActionConfig) -> Result<ActionScenario, ConfigError> {
    let functional = functional(field, &a.lagrangian, a.mass, a.omega)?;
    let scale = ActionScale::new(a.alpha.unwrap_or(1.0)).map_err(|e| invalid(field, e))?;
    let grid = lattice(field, &functional, scale, a.sites, a.steps, a.boundary.as_deref(), a.spacing, a.time_step)?;
    Ok(ActionScenario {
        name: a.name.clone(),
        functional,
        scale,
        grid,
        steps: a.steps,
    })
}
