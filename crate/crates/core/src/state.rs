//! States, transformation matrices and operators reconstructed from an
//! amplitude model.

use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::amplitude::{AmplitudeModel, ModelError};
use crate::linalg::{self, CMatrix};
use crate::logic::{Event, InteractionId, MeasurementRef};
use crate::UNITARY_TOL;

/// Allowed deviation of a state's norm from one.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("reference measurements do not match: {expected} vs {found}")]
    ReferenceMismatch { expected: MeasurementRef, found: MeasurementRef },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("state norm deviates from 1 by {0:.3e}")]
    NormalizationFailure(f64),
    #[error("operator is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("need one eigenvalue per prepared state ({0} vs {1})")]
    EigenvalueCount(usize, usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Amplitude vector specified with respect to a reference measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    components: Vec<Complex64>,
    reference: MeasurementRef,
}

impl StateVector {
    /// Fails if the dimension disagrees with the reference or the norm is
    /// off by more than [`NORMALIZATION_TOL`].
    pub fn new(components: Vec<Complex64>, reference: MeasurementRef) -> Result<Self, StateError> {
        if components.len() != reference.atomic_count {
            return Err(StateError::DimensionMismatch(components.len(), reference.atomic_count));
        }
        let deviation = (linalg::norm(&components) - 1.0).abs();
        if !(deviation <= NORMALIZATION_TOL) {
            return Err(StateError::NormalizationFailure(deviation));
        }
        Ok(StateVector { components, reference })
    }

    /// Basis state `e_index`.
    pub fn basis(reference: MeasurementRef, index: usize) -> Self {
        let mut components = alloc::vec![Complex64::new(0.0, 0.0); reference.atomic_count];
        components[index] = Complex64::new(1.0, 0.0);
        StateVector { components, reference }
    }

    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    pub fn reference(&self) -> &MeasurementRef {
        &self.reference
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.components)
    }

    /// Same state in canonical gauge (first non-negligible component real
    /// and non-negative).
    pub fn canonical(&self) -> StateVector {
        let mut c = self.components.clone();
        linalg::canonical_phase(&mut c);
        StateVector {
            components: c,
            reference: self.reference.clone(),
        }
    }

    fn check_reference(&self, expected: &MeasurementRef) -> Result<(), StateError> {
        if &self.reference != expected {
            return Err(StateError::ReferenceMismatch {
                expected: expected.clone(),
                found: self.reference.clone(),
            });
        }
        Ok(())
    }
}

/// Unitary matrix relating outcome amplitudes of `from` to those of `to`:
/// entry `[k][j]` is the amplitude of `[from_j -> to_k]` with no
/// appreciable evolution in between.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformationMatrix {
    matrix: CMatrix,
    from: MeasurementRef,
    to: MeasurementRef,
}

impl TransformationMatrix {
    pub fn new(matrix: CMatrix, from: MeasurementRef, to: MeasurementRef) -> Result<Self, StateError> {
        if matrix.rows() != to.atomic_count || matrix.cols() != from.atomic_count {
            return Err(StateError::DimensionMismatch(matrix.rows(), to.atomic_count));
        }
        let defect = matrix.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(StateError::NotUnitary(defect));
        }
        Ok(TransformationMatrix { matrix, from, to })
    }

    /// Zero-duration transformation between two measurements of a model.
    pub fn from_model(model: &AmplitudeModel, from: &MeasurementRef, to: &MeasurementRef) -> Result<Self, StateError> {
        let m = model.transition(&from.id, &to.id, &InteractionId::identity())?;
        Self::new(m, from.clone(), to.clone())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn from(&self) -> &MeasurementRef {
        &self.from
    }

    pub fn to(&self) -> &MeasurementRef {
        &self.to
    }

    pub fn inverse(&self) -> TransformationMatrix {
        TransformationMatrix {
            matrix: self.matrix.adjoint(),
            from: self.to.clone(),
            to: self.from.clone(),
        }
    }
}

/// Transformation from a measurement to itself: the identity, with the
/// free phases on its diagonal set to zero.
pub fn self_transformation(measurement: &MeasurementRef) -> TransformationMatrix {
    TransformationMatrix {
        matrix: CMatrix::identity(measurement.atomic_count),
        from: measurement.clone(),
        to: measurement.clone(),
    }
}

/// State just before `reference` is measured, for a system prepared in
/// `preparation` and subject to `interaction`: `v_j = z([ℓ_i -> m_j])`.
pub fn state_after_preparation(
    model: &AmplitudeModel,
    preparation: &Event,
    interaction: &InteractionId,
    reference: &MeasurementRef,
) -> Result<StateVector, StateError> {
    let i = preparation.outcome.atomic_index().ok_or(ModelError::NonAtomicPreparation)?;
    let t = model.transition(&preparation.measurement.id, &reference.id, interaction)?;
    if t.cols() != preparation.measurement.atomic_count {
        return Err(StateError::DimensionMismatch(t.cols(), preparation.measurement.atomic_count));
    }
    StateVector::new(t.column(i), reference.clone())
}

/// States prepared by the target measurement of `t`, expressed with respect
/// to its source: `u_q` is the conjugated `q`-th row of `t`, in canonical
/// gauge.
pub fn prepared_states(t: &TransformationMatrix) -> Result<Vec<StateVector>, StateError> {
    let defect = t.matrix.unitarity_defect();
    if !(defect <= UNITARY_TOL) {
        return Err(StateError::NotUnitary(defect));
    }
    Ok((0..t.matrix.rows())
        .map(|q| {
            let mut u: Vec<Complex64> = t.matrix.row(q).iter().map(Complex64::conj).collect();
            linalg::canonical_phase(&mut u);
            StateVector {
                components: u,
                reference: t.from.clone(),
            }
        })
        .collect())
}

/// Born rule: `|u_k† v|²`.
pub fn born_probability(u: &StateVector, v: &StateVector) -> Result<f64, StateError> {
    v.check_reference(&u.reference)?;
    Ok(linalg::inner(&u.components, &v.components).norm_sqr())
}

/// Re-expresses `v` (w.r.t. `M`) with respect to `M′`, where `V` is the
/// transformation matrix from `M′` to `M`: `v′ = V† v`.
pub fn change_representation(v: &StateVector, transform: &TransformationMatrix) -> Result<StateVector, StateError> {
    v.check_reference(&transform.to)?;
    let defect = transform.matrix.unitarity_defect();
    if !(defect <= UNITARY_TOL) {
        return Err(StateError::NotUnitary(defect));
    }
    Ok(StateVector {
        components: transform.matrix.adjoint().apply(&v.components),
        reference: transform.from.clone(),
    })
}

/// Hermitian operator `N = Σ_q a_q u_q u_q†` for a repeatable measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    eigenvalues: Vec<f64>,
    eigenstates: Vec<StateVector>,
    matrix: CMatrix,
}

impl MeasurementOperator {
    /// Operator assigning `values[q]` to the outcome prepared as
    /// `states[q]`. The states must be orthonormal w.r.t. one reference.
    pub fn new(values: Vec<f64>, states: Vec<StateVector>) -> Result<Self, StateError> {
        if values.len() != states.len() {
            return Err(StateError::EigenvalueCount(values.len(), states.len()));
        }
        let reference = states
            .first()
            .map(|s| s.reference.clone())
            .ok_or(StateError::EigenvalueCount(0, 0))?;
        let n = reference.atomic_count;
        if states.len() != n {
            return Err(StateError::EigenvalueCount(values.len(), n));
        }
        for s in &states {
            s.check_reference(&reference)?;
        }
        let basis = CMatrix::from_columns(&states.iter().map(|s| s.components.clone()).collect::<Vec<_>>())
            .expect("uniform length");
        let defect = basis.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(StateError::NotUnitary(defect));
        }
        let mut matrix = CMatrix::zeros(n, n);
        for (a, s) in values.iter().zip(&states) {
            for r in 0..n {
                for c in 0..n {
                    matrix[(r, c)] += s.components[r] * s.components[c].conj() * *a;
                }
            }
        }
        Ok(MeasurementOperator {
            eigenvalues: values,
            eigenstates: states,
            matrix,
        })
    }

    /// Operator for the measurement `t.to()` with respect to `t.from()`.
    pub fn from_transformation(values: Vec<f64>, t: &TransformationMatrix) -> Result<Self, StateError> {
        Self::new(values, prepared_states(t)?)
    }

    /// Diagonalizes a Hermitian matrix. Eigenpairs are ordered by
    /// descending eigenvalue, ties broken lexicographically on the
    /// canonically-phased eigenvectors.
    pub fn from_matrix(matrix: CMatrix, reference: MeasurementRef) -> Result<Self, StateError> {
        if !matrix.is_square() || matrix.rows() != reference.atomic_count {
            return Err(StateError::DimensionMismatch(matrix.rows(), reference.atomic_count));
        }
        let defect = matrix.hermiticity_defect();
        if !(defect <= 1e-12 * (1.0 + matrix.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max))) {
            return Err(StateError::NotHermitian(defect));
        }
        let eig = linalg::eigh(&matrix);
        let eigenstates = eig
            .vectors
            .into_iter()
            .map(|components| StateVector {
                components,
                reference: reference.clone(),
            })
            .collect();
        Ok(MeasurementOperator {
            eigenvalues: eig.values,
            eigenstates,
            matrix,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenstates(&self) -> &[StateVector] {
        &self.eigenstates
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn reference(&self) -> &MeasurementRef {
        &self.eigenstates[0].reference
    }

    /// Eigenvalues sorted descending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut s = self.eigenvalues.clone();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
        s
    }

    /// Largest `|Σ_q |u_q† v|² − 1|`-style check: the outcome probabilities
    /// of this measurement on `v`.
    pub fn outcome_probabilities(&self, v: &StateVector) -> Result<Vec<f64>, StateError> {
        self.eigenstates.iter().map(|u| born_probability(u, v)).collect()
    }
}

/// `V† N V`: the operator re-expressed with respect to `V.from()`.
pub fn conjugate_operator(op: &MeasurementOperator, transform: &TransformationMatrix) -> Result<MeasurementOperator, StateError> {
    let reference = op.reference();
    if reference != &transform.to {
        return Err(StateError::ReferenceMismatch {
            expected: transform.to.clone(),
            found: reference.clone(),
        });
    }
    let vd = transform.matrix.adjoint();
    let matrix = vd.matmul(&op.matrix).matmul(&transform.matrix);
    let eigenstates = op
        .eigenstates
        .iter()
        .map(|u| StateVector {
            components: vd.apply(&u.components),
            reference: transform.from.clone(),
        })
        .collect();
    Ok(MeasurementOperator {
        eigenvalues: op.eigenvalues.clone(),
        eigenstates,
        matrix,
    })
}

/// Unitary evolution over an interval, in the representation of one
/// measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionOperator {
    matrix: CMatrix,
    interval: (i64, i64),
}

impl EvolutionOperator {
    pub fn new(matrix: CMatrix, interval: (i64, i64)) -> Result<Self, StateError> {
        let defect = matrix.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(StateError::NotUnitary(defect));
        }
        Ok(EvolutionOperator { matrix, interval })
    }

    /// `U_kj = z([m_j -> m_k])` across `interaction`.
    pub fn from_model(
        model: &AmplitudeModel,
        measurement: &MeasurementRef,
        interaction: &InteractionId,
        interval: (i64, i64),
    ) -> Result<Self, StateError> {
        let m = model.transition(&measurement.id, &measurement.id, interaction)?;
        Self::new(m, interval)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn interval(&self) -> (i64, i64) {
        self.interval
    }

    /// Evolution back from the end of the interval to its start.
    pub fn inverse(&self) -> EvolutionOperator {
        EvolutionOperator {
            matrix: self.matrix.adjoint(),
            interval: (self.interval.1, self.interval.0),
        }
    }
}

/// `ṽ = U v`.
pub fn evolve(v: &StateVector, u: &EvolutionOperator) -> Result<StateVector, StateError> {
    if u.matrix.cols() != v.dim() {
        return Err(StateError::DimensionMismatch(u.matrix.cols(), v.dim()));
    }
    Ok(StateVector {
        components: u.matrix.apply(&v.components),
        reference: v.reference.clone(),
    })
}

/// Tensor product state of two distinct subsystems.
pub fn compose_states(left: &StateVector, right: &StateVector) -> Result<StateVector, StateError> {
    let disjoint = left
        .reference
        .id
        .components()
        .iter()
        .all(|c| !right.reference.id.components().contains(c));
    if !disjoint {
        return Err(StateError::ReferenceMismatch {
            expected: left.reference.clone(),
            found: right.reference.clone(),
        });
    }
    Ok(StateVector {
        components: linalg::kron_vec(&left.components, &right.components),
        reference: left.reference.compose(&right.reference),
    })
}
