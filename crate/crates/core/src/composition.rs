//! Numerical checks of the functional equations behind the composite
//! amplitude rule.
//!
//! If the amplitude of `A ⊙ B` is `F(a, b)`, the symmetries of `⊙` force
//!
//! - associativity: `F(a, F(b, c)) = F(F(a, b), c)`
//! - cross-multiplicativity: `F(ab, cd) = F(a, c) F(b, d)`
//! - left-distributivity: `F(a, b + c) = F(a, b) + F(a, c)`
//! - right-distributivity: `F(a + b, c) = F(a, c) + F(b, c)`
//!
//! and, with `f(z) = F(z, 1)`, the pair `f(z₁ + z₂) = f(z₁) + f(z₂)`,
//! `f(z₁ z₂) = f(z₁) f(z₂)` whose continuous solutions on the unit disk are
//! `0`, `z` and `z*`. The fixed-point identity `F(u, 1) = F(F(u, 1), 1)`
//! then rules out `z*`, leaving `F(u, v) = uv`.
//!
//! Candidates are sampled uniformly on the closed unit disk. Sums that
//! leave the disk are skipped and counted.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::amplitude::Amplitude;
use crate::random::unit_disk;

/// Residuals above this are reported as violations.
pub const REPORT_THRESHOLD: f64 = 1e-9;

/// `|F(1, 1)|` at or below this is treated as zero.
const ZERO_TOL: f64 = 1e-12;

/// The composite system rule: `F(u, v) = uv`.
pub fn composite_amplitude(a: Amplitude, b: Amplitude) -> Amplitude {
    Amplitude(a.0 * b.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axiom {
    Associativity,
    CrossMultiplicativity,
    LeftDistributivity,
    RightDistributivity,
    Additivity,
    Multiplicativity,
    FixedPoint,
}

impl Axiom {
    pub fn label(self) -> &'static str {
        match self {
            Axiom::Associativity => "associativity",
            Axiom::CrossMultiplicativity => "cross-multiplicativity",
            Axiom::LeftDistributivity => "left-distributivity",
            Axiom::RightDistributivity => "right-distributivity",
            Axiom::Additivity => "additivity",
            Axiom::Multiplicativity => "multiplicativity",
            Axiom::FixedPoint => "fixed-point",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Worst sampled violation of one axiom.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub axiom: Axiom,
    /// Arguments of the worst sample, in the order the axiom names them.
    pub witness: Vec<Complex64>,
    pub residual: f64,
    /// Number of samples whose residual exceeded [`REPORT_THRESHOLD`].
    pub violations: usize,
}

/// Outcome of sampling a candidate against a set of axioms.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomCheck {
    /// Largest residual seen per axiom, including passing ones.
    pub max_residuals: Vec<(Axiom, f64)>,
    pub violations: Vec<ViolationReport>,
    pub evaluated: usize,
    /// Sum-rule evaluations attempted.
    pub sum_checks: usize,
    /// Sum-rule evaluations skipped because the sum left the unit disk.
    pub skipped: usize,
}

impl AxiomCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, axiom: Axiom) -> Option<&ViolationReport> {
        self.violations.iter().find(|v| v.axiom == axiom)
    }

    pub fn max_residual(&self, axiom: Axiom) -> Option<f64> {
        self.max_residuals.iter().find(|(a, _)| *a == axiom).map(|(_, r)| *r)
    }

    /// Fraction of sum-rule evaluations skipped.
    pub fn skip_rate(&self) -> f64 {
        if self.sum_checks == 0 {
            0.0
        } else {
            self.skipped as f64 / self.sum_checks as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error("candidate has F(1, 1) = 0 and is inadmissible")]
    ZeroCandidate,
}

type BinaryFn = dyn Fn(Complex64, Complex64) -> Complex64 + Send + Sync;
type UnaryFn = dyn Fn(Complex64) -> Complex64 + Send + Sync;

/// Candidate composite-amplitude function `F(u, v)`.
pub struct BinaryCandidate {
    pub label: String,
    eval: Box<BinaryFn>,
}

impl fmt::Debug for BinaryCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryCandidate").field("label", &self.label).finish()
    }
}

impl BinaryCandidate {
    pub fn new(label: impl Into<String>, eval: impl Fn(Complex64, Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        BinaryCandidate {
            label: label.into(),
            eval: Box::new(eval),
        }
    }

    pub fn eval(&self, u: Complex64, v: Complex64) -> Complex64 {
        (self.eval)(u, v)
    }

    pub fn product() -> Self {
        Self::new("u·v", |u, v| u * v)
    }

    pub fn conjugate_product() -> Self {
        Self::new("u*·v*", |u, v| u.conj() * v.conj())
    }

    pub fn conjugate_left() -> Self {
        Self::new("u*·v", |u, v| u.conj() * v)
    }

    pub fn squared_product() -> Self {
        Self::new("(u·v)²", |u, v| (u * v) * (u * v))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(alloc::format!("const {}{:+}i", c.re, c.im), move |_, _| c)
    }

    pub fn zero() -> Self {
        Self::new("0", |_, _| Complex64::new(0.0, 0.0))
    }

    /// The product rule followed by the named alternatives it must beat.
    pub fn standard_family() -> Vec<BinaryCandidate> {
        vec![
            Self::product(),
            Self::conjugate_product(),
            Self::conjugate_left(),
            Self::squared_product(),
            Self::constant(Complex64::new(0.5, 0.0)),
            Self::zero(),
        ]
    }
}

/// Candidate `f(z) = F(z, 1)`.
pub struct UnaryCandidate {
    pub label: String,
    eval: Box<UnaryFn>,
}

impl fmt::Debug for UnaryCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnaryCandidate").field("label", &self.label).finish()
    }
}

impl UnaryCandidate {
    pub fn new(label: impl Into<String>, eval: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        UnaryCandidate {
            label: label.into(),
            eval: Box::new(eval),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.eval)(z)
    }

    pub fn identity() -> Self {
        Self::new("z", |z| z)
    }

    pub fn conjugate() -> Self {
        Self::new("z*", |z| z.conj())
    }

    pub fn zero() -> Self {
        Self::new("0", |_| Complex64::new(0.0, 0.0))
    }

    pub fn square() -> Self {
        Self::new("z²", |z| z * z)
    }

    /// `f(z) = F(z, 1)` for a binary candidate.
    pub fn from_binary(f: BinaryCandidate) -> Self {
        let label = alloc::format!("F(z,1) for {}", f.label);
        Self::new(label, move |z| f.eval(z, Complex64::new(1.0, 0.0)))
    }
}

/// Running worst-case tracker for one axiom.
struct Tally {
    axiom: Axiom,
    worst: f64,
    witness: Vec<Complex64>,
    violations: usize,
}

impl Tally {
    fn new(axiom: Axiom) -> Self {
        Tally {
            axiom,
            worst: 0.0,
            witness: Vec::new(),
            violations: 0,
        }
    }

    fn record(&mut self, lhs: Complex64, rhs: Complex64, args: &[Complex64]) {
        let r = (lhs - rhs).norm();
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > REPORT_THRESHOLD {
            self.violations += 1;
        }
        if r > self.worst || self.witness.is_empty() {
            self.worst = r;
            self.witness = args.to_vec();
        }
    }
}

fn finish(tallies: Vec<Tally>, evaluated: usize, sum_checks: usize, skipped: usize) -> AxiomCheck {
    let max_residuals = tallies.iter().map(|t| (t.axiom, t.worst)).collect();
    let violations = tallies
        .into_iter()
        .filter(|t| t.violations > 0)
        .map(|t| ViolationReport {
            axiom: t.axiom,
            witness: t.witness,
            residual: t.worst,
            violations: t.violations,
        })
        .collect();
    AxiomCheck {
        max_residuals,
        violations,
        evaluated,
        sum_checks,
        skipped,
    }
}

fn in_disk(z: Complex64) -> bool {
    z.norm_sqr() <= 1.0
}

/// Samples the four binary functional equations on the unit disk.
pub fn check_binary_axioms(f: &BinaryCandidate, samples: usize, seed: u64) -> AxiomCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assoc = Tally::new(Axiom::Associativity);
    let mut cross = Tally::new(Axiom::CrossMultiplicativity);
    let mut left = Tally::new(Axiom::LeftDistributivity);
    let mut right = Tally::new(Axiom::RightDistributivity);
    let mut skipped = 0;
    for _ in 0..samples.max(1) {
        let (a, b, c, d) = (unit_disk(&mut rng), unit_disk(&mut rng), unit_disk(&mut rng), unit_disk(&mut rng));
        assoc.record(f.eval(a, f.eval(b, c)), f.eval(f.eval(a, b), c), &[a, b, c]);
        cross.record(f.eval(a * b, c * d), f.eval(a, c) * f.eval(b, d), &[a, b, c, d]);
        if in_disk(b + c) {
            left.record(f.eval(a, b + c), f.eval(a, b) + f.eval(a, c), &[a, b, c]);
        } else {
            skipped += 1;
        }
        if in_disk(a + b) {
            right.record(f.eval(a + b, c), f.eval(a, c) + f.eval(b, c), &[a, b, c]);
        } else {
            skipped += 1;
        }
    }
    finish(vec![assoc, cross, left, right], samples.max(1), 2 * samples.max(1), skipped)
}

/// Samples the additivity/multiplicativity pair for `f`.
pub fn check_unary_pair(f: &UnaryCandidate, samples: usize, seed: u64) -> AxiomCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut add = Tally::new(Axiom::Additivity);
    let mut mul = Tally::new(Axiom::Multiplicativity);
    let mut skipped = 0;
    for _ in 0..samples.max(1) {
        let (z1, z2) = (unit_disk(&mut rng), unit_disk(&mut rng));
        if in_disk(z1 + z2) {
            add.record(f.eval(z1 + z2), f.eval(z1) + f.eval(z2), &[z1, z2]);
        } else {
            skipped += 1;
        }
        mul.record(f.eval(z1 * z2), f.eval(z1) * f.eval(z2), &[z1, z2]);
    }
    finish(vec![add, mul], samples.max(1), samples.max(1), skipped)
}

/// Checks `F(u, 1) = F(F(u, 1), 1)`, probing the unit and imaginary unit
/// first and then `samples` random points.
///
/// Returns `Ok(None)` when the identity holds, or the worst violation.
pub fn check_fixed_point_constraint(f: &BinaryCandidate, samples: usize, seed: u64) -> Result<Option<ViolationReport>, CompositionError> {
    let one = Complex64::new(1.0, 0.0);
    if f.eval(one, one).norm() <= ZERO_TOL {
        return Err(CompositionError::ZeroCandidate);
    }
    let probes = [
        one,
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(0.5, 0.5),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new(Axiom::FixedPoint);
    let random = (0..samples).map(|_| unit_disk(&mut rng)).collect::<Vec<_>>();
    for u in probes.iter().copied().chain(random) {
        let once = f.eval(u, one);
        tally.record(once, f.eval(once, one), &[u]);
    }
    Ok(finish(vec![tally], probes.len() + samples, 0, 0).violations.into_iter().next())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Admissible,
    /// `F` vanishes on every sample: it assigns amplitude zero to every
    /// composite sequence.
    IdenticallyZero,
}

/// Flags the zero solution, which satisfies every equation but assigns no
/// amplitude to anything.
pub fn check_admissibility(f: &BinaryCandidate, samples: usize, seed: u64) -> Admissibility {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = Complex64::new(1.0, 0.0);
    let zero_everywhere = f.eval(one, one).norm() <= ZERO_TOL
        && (0..samples).all(|_| f.eval(unit_disk(&mut rng), unit_disk(&mut rng)).norm() <= ZERO_TOL);
    if zero_everywhere {
        Admissibility::IdenticallyZero
    } else {
        Admissibility::Admissible
    }
}
