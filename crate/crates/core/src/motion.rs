//! Constants and integrals of motion built from the dual attractor basis.
//!
//! A constant of motion is a Hermitian Heisenberg-picture trajectory running
//! backwards in time, `C(t₂ − t₁) = T_{t₁}†(C(t₂))`. Every one of them has the
//! form `C(t) = ½ Σ (λ^t Y + conj(λ^t) Y†)` with `Y` in the dual attractor space.

use num_complex::Complex64 as C64;

use crate::attractors::{AttractorDecomposition, PeripheralEigenvalue};
use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{DensityMatrix, Operator};
use crate::process::{ProcessKind, Time};

/// Which Hermitian combination of a dual attractor a constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// `½ (λ^t X + h.c.)`
    Plus,
    /// `(1/2i) (λ^t X − h.c.)`
    Minus,
    /// The identity operator.
    Identity,
    /// A user-supplied time-independent observable.
    Observable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantOfMotion {
    label: String,
    parity: Parity,
    terms: Vec<(PeripheralEigenvalue, Operator)>,
}

fn stationary_eigenvalue(kind: ProcessKind) -> PeripheralEigenvalue {
    PeripheralEigenvalue {
        lambda: C64::new(1.0, 0.0),
        rate: match kind {
            ProcessKind::Discrete => None,
            ProcessKind::Continuous => Some(C64::new(0.0, 0.0)),
        },
        multiplicity: 1,
        stationary: true,
    }
}

impl ConstantOfMotion {
    pub fn identity(kind: ProcessKind, n: usize) -> Self {
        Self {
            label: "I".into(),
            parity: Parity::Identity,
            terms: vec![(stationary_eigenvalue(kind), Operator::identity(n))],
        }
    }

    /// Wraps a Hermitian observable already known to be conserved. Use
    /// [`integral_of_motion`] to check the conservation law first.
    pub fn observable(label: impl Into<String>, kind: ProcessKind, op: Operator) -> Self {
        Self {
            label: label.into(),
            parity: Parity::Observable,
            terms: vec![(stationary_eigenvalue(kind), op.hermitian_part())],
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn terms(&self) -> &[(PeripheralEigenvalue, Operator)] {
        &self.terms
    }

    /// Time-independent members are integrals of motion.
    pub fn is_integral(&self) -> bool {
        self.terms.iter().all(|(e, _)| e.stationary)
    }

    pub fn evaluate(&self, t: Time) -> Operator {
        let n = self.terms[0].1.dim();
        let mut sum = Operator::zeros(n);
        for (e, y) in &self.terms {
            sum = &sum + &y.scale(e.power(t));
        }
        (&sum + &sum.adjoint()).scale(C64::new(0.5, 0.0))
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            label: self.label.clone(),
            parity: self.parity,
            terms: self
                .terms
                .iter()
                .map(|(e, y)| (*e, y * factor))
                .collect(),
        }
    }
}

pub fn evaluate(c: &ConstantOfMotion, t: Time) -> Operator {
    c.evaluate(t)
}

/// Real basis `{I, C₁, …, C_d}` of the constants of motion.
#[derive(Debug, Clone)]
pub struct MotionBasis {
    identity: ConstantOfMotion,
    constants: Vec<ConstantOfMotion>,
}

impl MotionBasis {
    pub fn identity(&self) -> &ConstantOfMotion {
        &self.identity
    }

    /// `C₁ … C_d`, without the identity.
    pub fn constants(&self) -> &[ConstantOfMotion] {
        &self.constants
    }

    /// `I` followed by `C₁ … C_d`.
    pub fn members(&self) -> Vec<&ConstantOfMotion> {
        std::iter::once(&self.identity).chain(&self.constants).collect()
    }

    pub fn len(&self) -> usize {
        self.constants.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Indices into [`constants`](Self::constants) of time-independent members.
    pub fn integrals(&self) -> Vec<usize> {
        (0..self.constants.len())
            .filter(|&k| self.constants[k].is_integral())
            .collect()
    }

    pub fn by_label(&self, label: &str) -> Option<&ConstantOfMotion> {
        self.members().into_iter().find(|c| c.label() == label)
    }
}

fn first_significant_sign(op: &Operator) -> f64 {
    let max = op.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in op.matrix().as_slice() {
        if z.re.abs() > 1e-6 * max {
            return z.re.signum();
        }
        if z.im.abs() > 1e-6 * max {
            return z.im.signum();
        }
    }
    1.0
}

/// Builds `{I, C₁, …, C_d}` with `d + 1 = dim Atr`.
///
/// Candidates `C^{(±)}_{λ,j}` are taken from every dual attractor and reduced
/// to a linearly independent real set. Integrals of motion are then
/// orthonormalized against `I` in the Hilbert–Schmidt product so that, for
/// example, a dephasing channel yields exactly `σ_z`.
pub fn motion_basis(decomposition: &AttractorDecomposition) -> Result<MotionBasis> {
    let kind = decomposition.kind();
    let n = decomposition.dim();
    let tol = decomposition.tolerances();
    let identity = ConstantOfMotion::identity(kind, n);

    let mut candidates = Vec::new();
    for (k, dual) in decomposition.dual_basis().iter().enumerate() {
        let e = *decomposition.eigenvalue_of(k);
        candidates.push(ConstantOfMotion {
            label: String::new(),
            parity: Parity::Plus,
            terms: vec![(e, dual.clone())],
        });
        candidates.push(ConstantOfMotion {
            label: String::new(),
            parity: Parity::Minus,
            terms: vec![(e, dual.scale(C64::new(0.0, -1.0)))],
        });
    }
    let coords: Vec<_> = candidates
        .iter()
        .map(|c| linalg::real_coordinates(c.evaluate(Time::ZERO).matrix()))
        .collect();
    let scales: Vec<f64> = decomposition
        .dual_basis()
        .iter()
        .flat_map(|d| [d.frobenius_norm(), d.frobenius_norm()])
        .collect();
    let seed = [linalg::real_coordinates(Operator::identity(n).matrix())];
    let chosen = linalg::greedy_independent(&seed, &coords, &scales, tol.rank);
    let expected = decomposition.dim_attractor() - 1;
    if chosen.len() != expected {
        return Err(Error::RankDeficient {
            expected: expected + 1,
            found: chosen.len() + 1,
        });
    }

    let mut chosen: Vec<ConstantOfMotion> = chosen.into_iter().map(|i| candidates[i].clone()).collect();
    // integrals first, in a stable order
    chosen.sort_by_key(|c| !c.is_integral());

    let norm_target = (n as f64).sqrt();
    let mut orthonormal: Vec<Operator> = vec![&Operator::identity(n) * (1.0 / norm_target)];
    let mut constants = Vec::with_capacity(chosen.len());
    for c in chosen {
        let c = if c.is_integral() {
            // Gram–Schmidt inside the stationary sector keeps single-λ terms
            let mut op = c.evaluate(Time::ZERO);
            for _ in 0..2 {
                for q in &orthonormal {
                    let overlap = crate::operators::hs_inner(q, &op)?.re;
                    op = &op - &(q * overlap);
                }
            }
            let norm = op.frobenius_norm();
            orthonormal.push(&op * (1.0 / norm));
            let op = &op * (norm_target / norm);
            let sign = first_significant_sign(&op);
            ConstantOfMotion {
                label: String::new(),
                parity: c.parity,
                terms: vec![(c.terms[0].0, &op * sign)],
            }
        } else {
            let at0 = c.evaluate(Time::ZERO);
            let scale = norm_target / at0.frobenius_norm();
            c.scaled(scale * first_significant_sign(&at0))
        };
        constants.push(c);
    }
    for (k, c) in constants.iter_mut().enumerate() {
        c.label = format!("C{}", k + 1);
    }
    Ok(MotionBasis { identity, constants })
}

/// Checks that `op` is a time-independent constant of motion
/// (`T†(op) = op`, or `L†(op) = 0`) and wraps it.
pub fn integral_of_motion(
    decomposition: &AttractorDecomposition,
    label: impl Into<String>,
    op: &Operator,
) -> Result<ConstantOfMotion> {
    let tol = decomposition.tolerances();
    let deviation = op.hermitian_deviation();
    if deviation > tol.herm {
        return Err(Error::NotHermitian { deviation });
    }
    let adj = decomposition.superoperator().adjoint();
    let image = adj.apply(op);
    let residual = match decomposition.kind() {
        ProcessKind::Discrete => image.distance(op),
        ProcessKind::Continuous => image.frobenius_norm(),
    };
    let scale = adj.matrix.norm().max(1.0) * op.frobenius_norm().max(1.0);
    if residual > tol.eig * scale {
        return Err(Error::NotConstantOfMotion { residual });
    }
    Ok(ConstantOfMotion::observable(label, decomposition.kind(), op.clone()))
}

/// `(Tr[C_j(t) ρ])_j` over `{I, C₁, …, C_d}`.
pub fn expectations(basis: &MotionBasis, rho: &DensityMatrix, t: Time) -> Result<Vec<f64>> {
    basis
        .members()
        .into_iter()
        .map(|c| real_expectation(c, rho, t))
        .collect()
}

pub(crate) fn real_expectation(c: &ConstantOfMotion, rho: &DensityMatrix, t: Time) -> Result<f64> {
    let op = c.evaluate(t);
    let v = rho.expectation(&op);
    if v.im.abs() > 1e-12 * op.frobenius_norm().max(1.0) {
        return Err(Error::ComplexExpectation { imag: v.im });
    }
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractors::decompose;
    use crate::channels;
    use crate::operators::pauli;
    use crate::process::Propagator;
    use crate::tolerances::Tolerances;
    use std::f64::consts::FRAC_PI_3;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn identity_channel_basis_spans_all_observables() {
        let d = decompose(&channels::identity(2), &tol()).unwrap();
        let b = motion_basis(&d).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b.integrals().len(), 3);
        // real span equals span{I, σx, σy, σz}
        let coords: Vec<_> = b
            .members()
            .iter()
            .map(|c| linalg::real_coordinates(c.evaluate(Time::ZERO).matrix()))
            .collect();
        for p in [pauli::x(), pauli::y(), pauli::z()] {
            let r = linalg::span_residual(&coords, &linalg::real_coordinates(p.matrix()));
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn amplitude_damping_has_only_identity() {
        let d = decompose(&channels::amplitude_damping(0.5), &tol()).unwrap();
        let b = motion_basis(&d).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.constants().is_empty());
    }

    #[test]
    fn dephasing_integral_is_sigma_z() {
        let d = decompose(&channels::dephasing(0.3), &tol()).unwrap();
        let b = motion_basis(&d).unwrap();
        assert_eq!(b.len(), 2);
        assert!(b.constants()[0].is_integral());
        assert!(b.constants()[0].evaluate(Time::ZERO).distance(&pauli::z()) < 1e-12);
    }

    #[test]
    fn unitary_channel_oscillating_constants() {
        // oracle: Heisenberg evolution U† B U of the off-diagonal part
        let theta = FRAC_PI_3;
        let spec = channels::unitary_phase(theta);
        let d = decompose(&spec, &tol()).unwrap();
        let b = motion_basis(&d).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b.integrals().len(), 1);
        let zero = b.constants()[0].evaluate(Time::ZERO);
        assert!(zero.distance(&pauli::z()) < 1e-12);

        let prop = Propagator::new(&spec, &tol());
        for c in b.constants().iter().filter(|c| !c.is_integral()) {
            let c0 = c.evaluate(Time::ZERO);
            assert!(c0.entry(0, 0).norm() < 1e-12 && c0.entry(1, 1).norm() < 1e-12);
            assert!(c.evaluate(Time::steps(6)).distance(&c0) < 1e-12);
            assert!(c.evaluate(Time::steps(3)).distance(&-&c0) < 1e-12);
            for t in 0..6u64 {
                // C(0) = U^{†t} C(t) U^t
                let back = prop.apply_adjoint(&c.evaluate(Time::steps(t)), Time::steps(t)).unwrap();
                assert!(back.distance(&c0) < 1e-12);
                let phase = C64::from_polar(1.0, -theta * t as f64);
                let ct = c.evaluate(Time::steps(t));
                assert!((ct.entry(0, 1) - c0.entry(0, 1) * phase.conj()).norm() < 1e-12
                    || (ct.entry(0, 1) - c0.entry(0, 1) * phase).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn integrals_are_time_independent() {
        let d = decompose(&channels::identity(2), &tol()).unwrap();
        let b = motion_basis(&d).unwrap();
        for c in b.constants() {
            assert!(c.evaluate(Time::steps(17)).distance(&c.evaluate(Time::ZERO)) < 1e-15);
        }
    }

    #[test]
    fn expectation_examples() {
        let d = decompose(&channels::dephasing(0.3), &tol()).unwrap();
        let b = motion_basis(&d).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        let e = expectations(&b, &mixed, Time::steps(3)).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-15);
        assert!(e[1].abs() < 1e-15);
        let ground = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let e = expectations(&b, &ground, Time::ZERO).unwrap();
        assert!((e[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn observable_integrals_are_checked() {
        let d = decompose(&channels::dephasing(0.3), &tol()).unwrap();
        assert!(integral_of_motion(&d, "sz", &pauli::z()).is_ok());
        assert!(matches!(
            integral_of_motion(&d, "sx", &pauli::x()),
            Err(Error::NotConstantOfMotion { .. })
        ));
    }

    #[test]
    fn conservation_law_on_random_families() {
        let tol = tol();
        for family in channels::Family::ALL {
            for (seed, n) in [(3u64, 2usize), (4, 3), (5, 4)] {
                let spec = channels::random_discrete(family, n, seed);
                let d = decompose(&spec, &tol).unwrap();
                let b = motion_basis(&d).unwrap();
                assert_eq!(b.len(), d.dim_attractor());
                let prop = Propagator::new(&spec, &tol);
                let rho = channels::random_state(n, seed + 100);
                for c in b.members() {
                    for t in [0u64, 1, 2, 7] {
                        let evolved = prop.evolve(&rho, Time::steps(t)).unwrap();
                        for s in [0u64, 3] {
                            let lhs = real_expectation(c, &evolved, Time::steps(t + s)).unwrap();
                            let rhs = real_expectation(c, &rho, Time::steps(s)).unwrap();
                            assert!((lhs - rhs).abs() < 1e-9, "{family:?} n={n} {}", c.label());
                        }
                    }
                }
            }
        }
    }
}
