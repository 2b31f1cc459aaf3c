//! Quantum Markov processes: Kraus channels and Lindbladians, their
//! superoperator matrices, Schrödinger and Heisenberg evolution.
//!
//! Operators are vectorized by column stacking, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, EigenDecomposition};
use crate::operators::{validate_density, DensityMatrix, Operator};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Discrete,
    Continuous,
}

/// A discrete quantum Markov chain (Kraus channel) or a continuous
/// dynamical semigroup (Lindbladian).
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessSpec {
    Discrete {
        kraus: Vec<Operator>,
    },
    Continuous {
        hamiltonian: Operator,
        lindblad_ops: Vec<Operator>,
    },
}

impl ProcessSpec {
    /// A Kraus channel; fails unless `Σ K†K = I`.
    pub fn discrete(kraus: Vec<Operator>, tol: &Tolerances) -> Result<Self> {
        let spec = Self::discrete_unchecked(kraus)?;
        spec.validate(tol)?;
        Ok(spec)
    }

    /// A Lindbladian; fails unless `H` is Hermitian.
    pub fn continuous(
        hamiltonian: Operator,
        lindblad_ops: Vec<Operator>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let spec = Self::continuous_unchecked(hamiltonian, lindblad_ops)?;
        spec.validate(tol)?;
        Ok(spec)
    }

    /// Only checks dimensions. Used to inspect broken inputs.
    pub fn discrete_unchecked(kraus: Vec<Operator>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidSpec("a discrete process needs at least one Kraus operator".into()))?;
        let n = first.dim();
        for k in &kraus {
            if k.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: k.dim(),
                });
            }
        }
        Ok(Self::Discrete { kraus })
    }

    pub fn continuous_unchecked(hamiltonian: Operator, lindblad_ops: Vec<Operator>) -> Result<Self> {
        let n = hamiltonian.dim();
        for l in &lindblad_ops {
            if l.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: l.dim(),
                });
            }
        }
        Ok(Self::Continuous {
            hamiltonian,
            lindblad_ops,
        })
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        match self {
            Self::Discrete { .. } => {
                let residual = self.trace_preservation_residual();
                if residual > tol.tp {
                    return Err(Error::InvalidSpec(format!(
                        "Kraus operators are not trace preserving: ‖Σ K†K − I‖_F = {residual:.3e}"
                    )));
                }
            }
            Self::Continuous { hamiltonian, .. } => {
                let deviation = hamiltonian.hermitian_deviation();
                if deviation > tol.herm {
                    return Err(Error::InvalidSpec(format!(
                        "Hamiltonian is not Hermitian (deviation {deviation:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> ProcessKind {
        match self {
            Self::Discrete { .. } => ProcessKind::Discrete,
            Self::Continuous { .. } => ProcessKind::Continuous,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Discrete { kraus } => kraus[0].dim(),
            Self::Continuous { hamiltonian, .. } => hamiltonian.dim(),
        }
    }

    /// `‖Σ K†K − I‖_F` for channels, `‖L†(I)‖_F` for Lindbladians.
    pub fn trace_preservation_residual(&self) -> f64 {
        let n = self.dim();
        match self {
            Self::Discrete { kraus } => {
                let mut sum = CMatrix::zeros(n, n);
                for k in kraus {
                    sum += k.matrix().adjoint() * k.matrix();
                }
                (sum - CMatrix::identity(n, n)).norm()
            }
            Self::Continuous { .. } => {
                let s = self.to_superoperator().adjoint();
                s.apply(&Operator::identity(n)).frobenius_norm()
            }
        }
    }

    /// Superoperator matrix of the one-step map (discrete) or the generator (continuous).
    pub fn to_superoperator(&self) -> Superoperator {
        let n = self.dim();
        let id = CMatrix::identity(n, n);
        match self {
            Self::Discrete { kraus } => {
                let mut m = CMatrix::zeros(n * n, n * n);
                for k in kraus {
                    m += k.matrix().conjugate().kronecker(k.matrix());
                }
                Superoperator {
                    dim: n,
                    matrix: m,
                    picture: Picture::Schrodinger,
                    kind: SuperoperatorKind::Map,
                }
            }
            Self::Continuous {
                hamiltonian,
                lindblad_ops,
            } => {
                let h = hamiltonian.matrix();
                let i = C64::new(0.0, 1.0);
                // i[X, H] = i X H − i H X
                let mut m = (h.transpose().kronecker(&id) - id.kronecker(h)) * i;
                for l in lindblad_ops {
                    let l = l.matrix();
                    let ldl = l.adjoint() * l;
                    m += l.conjugate().kronecker(l);
                    m -= (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
                }
                Superoperator {
                    dim: n,
                    matrix: m,
                    picture: Picture::Schrodinger,
                    kind: SuperoperatorKind::Generator,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Schrodinger,
    Heisenberg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperoperatorKind {
    Map,
    Generator,
}

/// `N² × N²` matrix acting on column-stacked operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: CMatrix,
    pub picture: Picture,
    pub kind: SuperoperatorKind,
}

impl Superoperator {
    pub fn apply(&self, x: &Operator) -> Operator {
        let v = &self.matrix * linalg::vectorize(x.matrix());
        Operator::new(linalg::unvectorize(v.as_slice(), self.dim)).expect("square by construction")
    }

    /// Conjugate transpose, with the picture flipped.
    pub fn adjoint(&self) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
            picture: match self.picture {
                Picture::Schrodinger => Picture::Heisenberg,
                Picture::Heisenberg => Picture::Schrodinger,
            },
            kind: self.kind,
        }
    }
}

pub fn adjoint(s: &Superoperator) -> Superoperator {
    s.adjoint()
}

/// Evolution time: any non-negative real for continuous processes,
/// a whole number of steps for discrete ones.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Time(f64);

impl Time {
    pub const ZERO: Time = Time(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidTime {
                value,
                reason: "time must be finite",
            });
        }
        if value < 0.0 {
            return Err(Error::InvalidTime {
                value,
                reason: "time must be non-negative",
            });
        }
        Ok(Self(value))
    }

    pub fn steps(n: u64) -> Self {
        Self(n as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_integral(self) -> bool {
        self.0.fract() == 0.0
    }

    pub fn check(self, kind: ProcessKind) -> Result<()> {
        if kind == ProcessKind::Discrete && !self.is_integral() {
            return Err(Error::InvalidTime {
                value: self.0,
                reason: "discrete processes only admit whole steps",
            });
        }
        Ok(())
    }

    pub fn plus(self, other: Time) -> Time {
        Time(self.0 + other.0)
    }
}

/// Cached evolution machinery for a single process.
#[derive(Debug, Clone)]
pub struct Propagator {
    spec: ProcessSpec,
    superop: Superoperator,
    eigen: Option<EigenDecomposition>,
    tol: Tolerances,
}

const KRAUS_DIRECT_STEPS: u64 = 64;

impl Propagator {
    pub fn new(spec: &ProcessSpec, tol: &Tolerances) -> Self {
        let superop = spec.to_superoperator();
        let eigen = match spec.kind() {
            ProcessKind::Continuous => EigenDecomposition::new(&superop.matrix)
                .filter(|e| e.condition <= tol.eigen_cond && e.residual <= 1e-10),
            ProcessKind::Discrete => None,
        };
        Self {
            spec: spec.clone(),
            superop,
            eigen,
            tol: *tol,
        }
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn kind(&self) -> ProcessKind {
        self.spec.kind()
    }

    pub fn superoperator(&self) -> &Superoperator {
        &self.superop
    }

    /// Whether continuous propagation goes through the eigendecomposition
    /// of the generator rather than scaling and squaring.
    pub fn uses_eigendecomposition(&self) -> bool {
        self.eigen.is_some()
    }

    /// Matrix of the propagator `T_t` in the Schrödinger picture.
    pub fn propagator_matrix(&self, t: Time) -> Result<CMatrix> {
        t.check(self.kind())?;
        match self.kind() {
            ProcessKind::Discrete => Ok(matrix_power(&self.superop.matrix, t.value() as u64)),
            ProcessKind::Continuous => Ok(match &self.eigen {
                Some(e) => e.apply(|a| (a * t.value()).exp()),
                None => (&self.superop.matrix * C64::new(t.value(), 0.0)).exp(),
            }),
        }
    }

    /// `T_t(X)` for any operator `X`.
    pub fn apply(&self, x: &Operator, t: Time) -> Result<Operator> {
        t.check(self.kind())?;
        if let ProcessSpec::Discrete { kraus } = &self.spec {
            let steps = t.value() as u64;
            if steps <= KRAUS_DIRECT_STEPS {
                let mut cur = x.clone();
                for _ in 0..steps {
                    cur = apply_kraus(kraus, &cur);
                }
                return Ok(cur);
            }
        }
        let m = self.propagator_matrix(t)?;
        let v = m * linalg::vectorize(x.matrix());
        Operator::new(linalg::unvectorize(v.as_slice(), x.dim()))
    }

    /// Heisenberg-picture propagation `T_t†(B)`.
    pub fn apply_adjoint(&self, b: &Operator, t: Time) -> Result<Operator> {
        t.check(self.kind())?;
        if let ProcessSpec::Discrete { kraus } = &self.spec {
            let steps = t.value() as u64;
            if steps <= KRAUS_DIRECT_STEPS {
                let mut cur = b.clone();
                for _ in 0..steps {
                    cur = apply_kraus_adjoint(kraus, &cur);
                }
                return Ok(cur);
            }
        }
        let m = self.propagator_matrix(t)?.adjoint();
        let v = m * linalg::vectorize(b.matrix());
        Operator::new(linalg::unvectorize(v.as_slice(), b.dim()))
    }

    pub fn evolve(&self, rho: &DensityMatrix, t: Time) -> Result<DensityMatrix> {
        if rho.dim() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                found: rho.dim(),
            });
        }
        let out = self.apply(rho.op(), t)?;
        validate_density(&out, &self.tol)
    }
}

fn apply_kraus(kraus: &[Operator], x: &Operator) -> Operator {
    let n = x.dim();
    let mut out = CMatrix::zeros(n, n);
    for k in kraus {
        out += k.matrix() * x.matrix() * k.matrix().adjoint();
    }
    Operator::new(out).expect("square")
}

fn apply_kraus_adjoint(kraus: &[Operator], x: &Operator) -> Operator {
    let n = x.dim();
    let mut out = CMatrix::zeros(n, n);
    for k in kraus {
        out += k.matrix().adjoint() * x.matrix() * k.matrix();
    }
    Operator::new(out).expect("square")
}

fn matrix_power(m: &CMatrix, mut exp: u64) -> CMatrix {
    let n = m.nrows();
    let mut result = CMatrix::identity(n, n);
    let mut base = m.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &base;
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    result
}

/// One-shot evolution of a state.
pub fn evolve(spec: &ProcessSpec, rho: &DensityMatrix, t: Time, tol: &Tolerances) -> Result<DensityMatrix> {
    Propagator::new(spec, tol).evolve(rho, t)
}

/// Whether the process fixes the identity operator.
pub fn is_unital(spec: &ProcessSpec, tol: &Tolerances) -> bool {
    let n = spec.dim();
    let residual = match spec {
        ProcessSpec::Discrete { kraus } => {
            let mut sum = CMatrix::zeros(n, n);
            for k in kraus {
                sum += k.matrix() * k.matrix().adjoint();
            }
            (sum - CMatrix::identity(n, n)).norm()
        }
        ProcessSpec::Continuous { .. } => spec
            .to_superoperator()
            .apply(&Operator::identity(n))
            .frobenius_norm(),
    };
    residual <= tol.tp
}
