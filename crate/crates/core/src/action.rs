//! Discretized paths, classical action and the amplitude `z = e^{iαS}`.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::amplitude::Amplitude;
use crate::linalg::CMatrix;

/// Largest lattice accepted by [`lattice_propagator`].
pub const MAX_SITES: usize = 256;
/// Largest step count accepted by [`lattice_propagator`].
pub const MAX_STEPS: usize = 128;
/// Relative residual above which a candidate amplitude map is reported.
pub const MAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error("a path needs at least two points, got {0}")]
    TooShort(usize),
    #[error("{positions} positions but {times} times")]
    LengthMismatch { positions: usize, times: usize },
    #[error("segment {0} has zero duration or reverses the direction of time")]
    DegenerateSegment(usize),
    #[error("path contains a non-finite value")]
    NonFinite,
    #[error("paths do not meet at a common point")]
    JunctionMismatch,
    #[error("split index {0} is not an interior point")]
    InvalidSplit(usize),
    #[error("action scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("lattice of {sites} sites over {steps} steps exceeds {MAX_SITES} sites or {MAX_STEPS} steps")]
    ResourceLimit { sites: usize, steps: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(&'static str),
}

/// Configuration-space path sampled at `K + 1` times.
///
/// Times are strictly monotone. A path traversed forward in time has them
/// increasing; its inverse runs the same points with time decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    positions: Vec<f64>,
    times: Vec<f64>,
}

impl PathSpec {
    pub fn new(positions: Vec<f64>, times: Vec<f64>) -> Result<Self, ActionError> {
        if positions.len() != times.len() {
            return Err(ActionError::LengthMismatch {
                positions: positions.len(),
                times: times.len(),
            });
        }
        if positions.len() < 2 {
            return Err(ActionError::TooShort(positions.len()));
        }
        if positions.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(ActionError::NonFinite);
        }
        let direction = (times[1] - times[0]).signum();
        for k in 0..times.len() - 1 {
            let dt = times[k + 1] - times[k];
            if dt == 0.0 || dt.signum() != direction {
                return Err(ActionError::DegenerateSegment(k));
            }
        }
        Ok(PathSpec { positions, times })
    }

    /// Evenly timed path starting at `t0`.
    pub fn uniform(positions: Vec<f64>, t0: f64, dt: f64) -> Result<Self, ActionError> {
        let times = (0..positions.len()).map(|k| t0 + k as f64 * dt).collect();
        Self::new(positions, times)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn segments(&self) -> usize {
        self.positions.len() - 1
    }

    /// Same points in reverse order.
    pub fn invert(&self) -> PathSpec {
        let mut positions = self.positions.clone();
        let mut times = self.times.clone();
        positions.reverse();
        times.reverse();
        PathSpec { positions, times }
    }

    /// `self` followed by `next`, which must start where `self` ends.
    pub fn concat(&self, next: &PathSpec) -> Result<PathSpec, ActionError> {
        if self.positions.last() != next.positions.first() || self.times.last() != next.times.first() {
            return Err(ActionError::JunctionMismatch);
        }
        let mut positions = self.positions.clone();
        let mut times = self.times.clone();
        positions.extend_from_slice(&next.positions[1..]);
        times.extend_from_slice(&next.times[1..]);
        PathSpec::new(positions, times)
    }

    /// Splits at interior point `at`, which both halves share.
    pub fn split(&self, at: usize) -> Result<(PathSpec, PathSpec), ActionError> {
        if at == 0 || at >= self.segments() {
            return Err(ActionError::InvalidSplit(at));
        }
        Ok((
            PathSpec {
                positions: self.positions[..=at].to_vec(),
                times: self.times[..=at].to_vec(),
            },
            PathSpec {
                positions: self.positions[at..].to_vec(),
                times: self.times[at..].to_vec(),
            },
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lagrangian {
    /// `L = m ẋ² / 2`
    FreeParticle { mass: f64 },
    /// `L = m ẋ² / 2 − m ω² x² / 2`
    Harmonic { mass: f64, omega: f64 },
}

/// Lagrangian with the per-segment rule: velocity `Δx/Δt`, potential at the
/// segment midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionFunctional {
    pub lagrangian: Lagrangian,
}

impl ActionFunctional {
    pub fn free_particle(mass: f64) -> Self {
        ActionFunctional {
            lagrangian: Lagrangian::FreeParticle { mass },
        }
    }

    pub fn harmonic(mass: f64, omega: f64) -> Self {
        ActionFunctional {
            lagrangian: Lagrangian::Harmonic { mass, omega },
        }
    }

    pub fn mass(&self) -> f64 {
        match self.lagrangian {
            Lagrangian::FreeParticle { mass } | Lagrangian::Harmonic { mass, .. } => mass,
        }
    }

    pub fn potential(&self, x: f64) -> f64 {
        match self.lagrangian {
            Lagrangian::FreeParticle { .. } => 0.0,
            Lagrangian::Harmonic { mass, omega } => 0.5 * mass * omega * omega * x * x,
        }
    }

    /// Action of the straight segment `x0 -> x1` taking time `dt`.
    pub fn segment(&self, x0: f64, x1: f64, dt: f64) -> f64 {
        let dx = x1 - x0;
        self.mass() * dx * dx / (2.0 * dt) - self.potential(0.5 * (x0 + x1)) * dt
    }
}

impl fmt::Display for ActionFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lagrangian {
            Lagrangian::FreeParticle { mass } => write!(f, "free particle (m = {mass})"),
            Lagrangian::Harmonic { mass, omega } => write!(f, "harmonic oscillator (m = {mass}, omega = {omega})"),
        }
    }
}

/// The constant `α` in `z = e^{iαS}`, in inverse units of action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionScale(f64);

impl ActionScale {
    pub fn new(alpha: f64) -> Result<Self, ActionError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ActionError::InvalidScale(alpha));
        }
        Ok(ActionScale(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

impl Default for ActionScale {
    fn default() -> Self {
        ActionScale(1.0)
    }
}

/// Sum of segment actions along the path.
pub fn action(path: &PathSpec, functional: &ActionFunctional) -> Result<f64, ActionError> {
    let mut total = 0.0;
    for k in 0..path.segments() {
        let dt = path.times[k + 1] - path.times[k];
        if dt == 0.0 {
            return Err(ActionError::DegenerateSegment(k));
        }
        total += functional.segment(path.positions[k], path.positions[k + 1], dt);
    }
    Ok(total)
}

/// `z = e^{iαS}`.
pub fn amplitude_from_action(s: f64, scale: ActionScale) -> Amplitude {
    Amplitude(Complex64::cis(scale.0 * s))
}

/// Complex-valued function of a real action.
pub struct RealCandidate {
    pub label: String,
    eval: Box<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl fmt::Debug for RealCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealCandidate").field("label", &self.label).finish()
    }
}

impl RealCandidate {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        RealCandidate {
            label: label.into(),
            eval: Box::new(eval),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.eval)(x)
    }

    /// `e^{(β + iα) x}`.
    pub fn exponential(beta: f64, alpha: f64) -> Self {
        RealCandidate::new(alloc::format!("exp(({beta}+{alpha}i)x)"), move |x| {
            Complex64::new(beta * x, alpha * x).exp()
        })
    }

    pub fn phase(scale: ActionScale) -> Self {
        RealCandidate::new(alloc::format!("exp({}ix)", scale.0), move |x| amplitude_from_action(x, scale).0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapProperty {
    /// `f(x + y) = f(x) f(y)`
    Multiplicativity,
    /// `f*(x) = f(−x)`
    Inversion,
    /// `|f(x)| = 1`
    UnitModulus,
}

impl fmt::Display for MapProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapProperty::Multiplicativity => "multiplicativity",
            MapProperty::Inversion => "inversion",
            MapProperty::UnitModulus => "unit modulus",
        })
    }
}

/// Worst sample for one violated property.
#[derive(Debug, Clone, PartialEq)]
pub struct MapViolation {
    pub property: MapProperty,
    pub witness: Vec<f64>,
    pub residual: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeMapCheck {
    /// Violated functional equations (multiplicativity, inversion).
    pub violations: Vec<MapViolation>,
    /// Modulus departure, reported separately from the two equations.
    pub modulus: Option<MapViolation>,
    /// `ln|f(h)| / h`
    pub beta_estimate: f64,
    /// `arg f(h) / h`
    pub alpha_estimate: f64,
    pub samples: usize,
}

impl AmplitudeMapCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn unit_modulus(&self) -> bool {
        self.modulus.is_none()
    }

    pub fn violation(&self, property: MapProperty) -> Option<&MapViolation> {
        if property == MapProperty::UnitModulus {
            return self.modulus.as_ref();
        }
        self.violations.iter().find(|v| v.property == property)
    }
}

struct MapTally {
    property: MapProperty,
    worst: Option<MapViolation>,
}

impl MapTally {
    fn new(property: MapProperty) -> Self {
        MapTally { property, worst: None }
    }

    fn record(&mut self, witness: &[f64], residual: f64) {
        if !(residual <= MAP_TOL) {
            match &mut self.worst {
                Some(w) => {
                    w.violations += 1;
                    if residual > w.residual {
                        w.residual = residual;
                        w.witness = witness.to_vec();
                    }
                }
                None => {
                    self.worst = Some(MapViolation {
                        property: self.property,
                        witness: witness.to_vec(),
                        residual,
                        violations: 1,
                    })
                }
            }
        }
    }
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

/// Range of sampled action values.
pub const SAMPLE_RANGE: f64 = 4.0;
const PROBE_STEP: f64 = 1e-3;

/// Samples `x, y` uniformly in `[−4, 4]` and checks multiplicativity and
/// conjugate inversion with relative residuals; the modulus `R = |f|` is
/// checked against 1 on the same samples. The exponents of `f = e^{(β+iα)x}`
/// are estimated from a short probe step.
pub fn check_candidate_amplitude_map(f: &RealCandidate, samples: usize, seed: u64) -> AmplitudeMapCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mult = MapTally::new(MapProperty::Multiplicativity);
    let mut inv = MapTally::new(MapProperty::Inversion);
    let mut modulus = MapTally::new(MapProperty::UnitModulus);
    for _ in 0..samples {
        let x = rng.random_range(-SAMPLE_RANGE..=SAMPLE_RANGE);
        let y = rng.random_range(-SAMPLE_RANGE..=SAMPLE_RANGE);
        let (fx, fy) = (f.eval(x), f.eval(y));
        mult.record(&[x, y], relative(f.eval(x + y), fx * fy));
        inv.record(&[x], relative(fx.conj(), f.eval(-x)));
        modulus.record(&[x], (fx.norm() - 1.0).abs());
    }
    let probe = f.eval(PROBE_STEP);
    AmplitudeMapCheck {
        violations: [mult, inv].into_iter().filter_map(|t| t.worst).collect(),
        modulus: modulus.worst,
        beta_estimate: probe.norm().ln() / PROBE_STEP,
        alpha_estimate: probe.arg() / PROBE_STEP,
        samples,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Displacements taken as the minimal image on a ring of `sites` points.
    Periodic,
    Open,
}

/// Evenly spaced one-dimensional lattice and time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub sites: usize,
    pub spacing: f64,
    pub origin: f64,
    pub time_step: f64,
    pub boundary: Boundary,
}

impl LatticeSpec {
    /// Periodic lattice of `sites` points with unit spacing, centred on 0,
    /// whose time step makes `αm·dx²/(2Δt) = πn/sites`.
    ///
    /// For an odd prime `sites` and even `n` with `n/2` coprime to `sites`,
    /// every single-step kernel entry has modulus `1/√sites` and the kernel
    /// is unitary, so the `n`-step propagator has the flat modulus
    /// `dx·|K_free(nΔt)|` of the continuum free-particle kernel.
    pub fn revival(sites: usize, n: usize, mass: f64, scale: ActionScale) -> Self {
        let spacing = 1.0;
        LatticeSpec {
            sites,
            spacing,
            origin: -0.5 * (sites as f64 - 1.0) * spacing,
            time_step: scale.alpha() * mass * spacing * spacing * sites as f64 / (2.0 * PI * n as f64),
            boundary: Boundary::Periodic,
        }
    }

    pub fn position(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    /// Displacement from site `i` to site `f`.
    pub fn displacement(&self, i: usize, f: usize) -> f64 {
        let mut d = f as i64 - i as i64;
        if self.boundary == Boundary::Periodic {
            let n = self.sites as i64;
            d = d.rem_euclid(n);
            if 2 * d > n {
                d -= n;
            }
        }
        d as f64 * self.spacing
    }

    fn validate(&self) -> Result<(), ActionError> {
        if self.sites < 2 {
            return Err(ActionError::InvalidLattice("need at least two sites"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(ActionError::InvalidLattice("spacing must be positive"));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) || !self.origin.is_finite() {
            return Err(ActionError::InvalidLattice("time step must be positive"));
        }
        Ok(())
    }
}

/// Single-step kernel `K[f][i] = e^{iα S(x_i -> x_f)}`, each row scaled to
/// unit norm.
pub fn single_step_kernel(functional: &ActionFunctional, grid: &LatticeSpec, scale: ActionScale) -> Result<CMatrix, ActionError> {
    grid.validate()?;
    if grid.sites > MAX_SITES {
        return Err(ActionError::ResourceLimit { sites: grid.sites, steps: 1 });
    }
    let mut k = CMatrix::from_fn(grid.sites, grid.sites, |f, i| {
        let x0 = grid.position(i);
        let s = functional.segment(x0, x0 + grid.displacement(i, f), grid.time_step);
        amplitude_from_action(s, scale).0
    });
    for r in 0..grid.sites {
        let norm = k.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for c in 0..grid.sites {
            k[(r, c)] /= norm;
        }
    }
    Ok(k)
}

/// Sum over all lattice paths of `steps` steps: the `steps`-th power of the
/// single-step kernel. Entry `[f][i]` propagates site `i` to site `f`.
pub fn lattice_propagator(
    functional: &ActionFunctional,
    grid: &LatticeSpec,
    steps: usize,
    scale: ActionScale,
) -> Result<CMatrix, ActionError> {
    if grid.sites > MAX_SITES || steps > MAX_STEPS {
        return Err(ActionError::ResourceLimit { sites: grid.sites, steps });
    }
    if steps == 0 {
        return Err(ActionError::InvalidLattice("need at least one step"));
    }
    let kernel = single_step_kernel(functional, grid, scale)?;
    // Square-and-multiply.
    let mut result: Option<CMatrix> = None;
    let mut base = kernel;
    let mut n = steps;
    loop {
        if n & 1 == 1 {
            result = Some(match result {
                Some(r) => base.matmul(&r),
                None => base.clone(),
            });
        }
        n >>= 1;
        if n == 0 {
            break;
        }
        base = base.matmul(&base);
    }
    Ok(result.expect("steps >= 1"))
}

/// `|K(x_f, T; x_i, 0)| = sqrt(αm / (2πT))` for a free particle.
pub fn free_particle_kernel_modulus(mass: f64, scale: ActionScale, elapsed: f64) -> f64 {
    (scale.alpha() * mass / (2.0 * PI * elapsed)).sqrt()
}

/// Lattice propagator modulus against the continuum free-particle kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorComparison {
    pub sites: usize,
    pub steps: usize,
    pub elapsed: f64,
    /// `dx·|K_free|`, the expected modulus of each lattice entry.
    pub expected_modulus: f64,
    /// Largest `| |P_fi| / expected − 1 |` over interior entries.
    pub max_relative_deviation: f64,
    /// `max |K†K − I|` of the single-step kernel.
    pub kernel_unitarity_defect: f64,
}

/// Compares interior entries (the central half of the lattice in both
/// indices) of the free-particle lattice propagator with the continuum
/// kernel modulus.
pub fn compare_free_particle(
    mass: f64,
    grid: &LatticeSpec,
    steps: usize,
    scale: ActionScale,
) -> Result<PropagatorComparison, ActionError> {
    let functional = ActionFunctional::free_particle(mass);
    let kernel = single_step_kernel(&functional, grid, scale)?;
    let prop = lattice_propagator(&functional, grid, steps, scale)?;
    let elapsed = steps as f64 * grid.time_step;
    let expected = grid.spacing * free_particle_kernel_modulus(mass, scale, elapsed);
    let (lo, hi) = (grid.sites / 4, grid.sites - grid.sites / 4);
    let mut worst: f64 = 0.0;
    for f in lo..hi {
        for i in lo..hi {
            worst = worst.max((prop[(f, i)].norm() / expected - 1.0).abs());
        }
    }
    Ok(PropagatorComparison {
        sites: grid.sites,
        steps,
        elapsed,
        expected_modulus: expected,
        max_relative_deviation: worst,
        kernel_unitarity_defect: kernel.unitarity_defect(),
    })
}
