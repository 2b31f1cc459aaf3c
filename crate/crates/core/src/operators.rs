//! Operator space: dense complex matrices with Hilbert–Schmidt geometry,
//! Hermitian functional calculus and density-matrix validation.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::tolerances::Tolerances;

/// A square complex matrix acting on an `N`-dimensional Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Operator {
    m: CMatrix,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dim={}){}", self.dim(), self.m)
    }
}

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(Self { m })
    }

    /// Row-major construction from complex entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            m: DMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    C64::new(values[r], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: CMatrix::zeros(n, n),
        }
    }

    /// `|i⟩⟨j|`.
    pub fn ket_bra(n: usize, i: usize, j: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        m[(i, j)] = C64::new(1.0, 0.0);
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        (&self.m - self.m.adjoint()).norm()
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            m: (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { m: &self.m * c }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            m: &self.m * &other.m - &other.m * &self.m,
        }
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Self {
            m: &self.m * &other.m + &other.m * &self.m,
        }
    }

    /// Frobenius distance.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.m - &other.m).norm()
    }

    /// `P A P`.
    pub fn sandwich(&self, p: &Self) -> Self {
        Self {
            m: &p.m * &self.m * &p.m,
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m - &rhs.m }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m * &rhs.m }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator {
            m: &self.m * C64::new(rhs, 0.0),
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { m: -&self.m }
    }
}

/// Pauli matrices and ladder operators with `σ_z|0⟩ = |0⟩`.
pub mod pauli {
    use super::*;

    pub fn x() -> Operator {
        Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> Operator {
        let i = C64::new(0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        Operator::from_rows(&[vec![z, -i], vec![i, z]]).unwrap()
    }

    pub fn z() -> Operator {
        Operator::diag(&[1.0, -1.0])
    }

    /// `|0⟩⟨1|`, the lowering operator.
    pub fn lowering() -> Operator {
        Operator::ket_bra(2, 0, 1)
    }
}

/// Hilbert–Schmidt inner product `Tr[a† b]`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<C64> {
    a.check_dim(b)?;
    Ok(a
        .m
        .iter()
        .zip(b.m.iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Scalar function applied through the Hermitian functional calculus.
#[derive(Clone, Copy)]
pub enum ScalarFn<'a> {
    Exp,
    Log,
    Custom(&'a dyn Fn(f64) -> f64),
}

impl ScalarFn<'_> {
    fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Exp => x.exp(),
            ScalarFn::Log => x.ln(),
            ScalarFn::Custom(f) => f(x),
        }
    }
}

/// Eigenvalue cut-off below which an eigenvalue is outside the support.
fn support_cutoff(values: &[f64], tol: &Tolerances) -> f64 {
    let largest = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    tol.support * largest
}

/// `U f(D) U†` for Hermitian `a`. With `support_only`, eigenvalues at or
/// below the support cut-off are excluded and map to zero.
pub fn herm_function(
    a: &Operator,
    f: ScalarFn<'_>,
    support_only: bool,
    tol: &Tolerances,
) -> Result<Operator> {
    let deviation = a.hermitian_deviation();
    if deviation > tol.herm {
        return Err(Error::NotHermitian { deviation });
    }
    let (values, vectors) = linalg::hermitian_eigen(&a.m);
    let cutoff = support_cutoff(&values, tol);
    let mut mapped = Vec::with_capacity(values.len());
    for &v in &values {
        if support_only && v <= cutoff {
            mapped.push(0.0);
            continue;
        }
        if matches!(f, ScalarFn::Log) && v <= 0.0 {
            return Err(Error::NegativeEigenvalue { value: v });
        }
        mapped.push(f.eval(v));
    }
    Operator::new(linalg::from_eigen(&mapped, &vectors))
}

/// Orthogonal projector onto the span of eigenvectors above the support cut-off.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportProjector {
    op: Operator,
    rank: usize,
    /// Isometry `N × rank` whose columns span the support.
    isometry: CMatrix,
}

impl SupportProjector {
    pub fn full(n: usize) -> Self {
        Self {
            op: Operator::identity(n),
            rank: n,
            isometry: CMatrix::identity(n, n),
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    /// `V† A V`, the restriction of `a` to the support.
    pub fn compress(&self, a: &Operator) -> CMatrix {
        self.isometry.adjoint() * &a.m * &self.isometry
    }

    /// `V B V†`, embedding back with zeros off the support.
    pub fn embed(&self, b: &CMatrix) -> Operator {
        Operator {
            m: &self.isometry * b * self.isometry.adjoint(),
        }
    }

    /// `P A P`.
    pub fn project(&self, a: &Operator) -> Operator {
        a.sandwich(&self.op)
    }

    /// Frobenius norm of the part of `a` outside `P A P`.
    pub fn leakage(&self, a: &Operator) -> f64 {
        a.distance(&self.project(a))
    }
}

pub fn support_projector(a: &Operator, tol: &Tolerances) -> Result<SupportProjector> {
    let deviation = a.hermitian_deviation();
    if deviation > tol.herm {
        return Err(Error::NotHermitian { deviation });
    }
    let (values, vectors) = linalg::hermitian_eigen(&a.m);
    let cutoff = support_cutoff(&values, tol);
    if let Some(&min) = values.first() {
        if min < -tol.psd {
            return Err(Error::NegativeEigenvalue { value: min });
        }
    }
    let kept: Vec<usize> = (0..values.len()).filter(|&k| values[k] > cutoff).collect();
    let n = a.dim();
    let isometry = CMatrix::from_fn(n, kept.len(), |r, c| vectors[(r, kept[c])]);
    let m = &isometry * isometry.adjoint();
    Ok(SupportProjector {
        op: Operator::new(m)?,
        rank: kept.len(),
        isometry,
    })
}

/// A validated quantum state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            op: &Operator::identity(n) * (1.0 / n as f64),
        }
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `ket`.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidDensity {
                violations: vec!["zero state vector".into()],
            });
        }
        let n = ket.len();
        let m = DMatrix::from_fn(n, n, |r, c| ket[r] * ket[c].conj() / (norm * norm));
        Ok(Self {
            op: Operator::new(m)?,
        })
    }

    /// Expectation value `Tr[B ρ]`.
    pub fn expectation(&self, b: &Operator) -> C64 {
        (b.matrix() * self.op.matrix()).trace()
    }
}

/// Checks Hermiticity, positivity and unit trace, listing every violation.
pub fn validate_density(op: &Operator, tol: &Tolerances) -> Result<DensityMatrix> {
    let mut violations = Vec::new();
    let deviation = op.hermitian_deviation();
    if deviation > tol.herm {
        violations.push(format!("non-Hermitian (deviation {deviation:.3e})"));
    }
    let herm = op.hermitian_part();
    let (values, _) = linalg::hermitian_eigen(herm.matrix());
    if let Some(&min) = values.first() {
        if min < -tol.psd {
            violations.push(format!("negative eigenvalue {min:.3e}"));
        }
    }
    let trace = op.trace();
    let trace_err = (trace - C64::new(1.0, 0.0)).norm();
    if trace_err > tol.trace {
        violations.push(format!(
            "trace {:.6e}{:+.3e}i differs from 1 by {trace_err:.3e}",
            trace.re, trace.im
        ));
    }
    if violations.is_empty() {
        Ok(DensityMatrix { op: herm })
    } else {
        Err(Error::InvalidDensity { violations })
    }
}
