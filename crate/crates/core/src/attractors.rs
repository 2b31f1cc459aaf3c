//! Peripheral spectrum, attractor spaces and the closed-form asymptotic dynamics.

use std::cmp::Ordering;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operators::{hs_inner, support_projector, validate_density, DensityMatrix, Operator, SupportProjector};
use crate::process::{ProcessKind, ProcessSpec, Superoperator, Time};
use crate::tolerances::Tolerances;

/// A point of the asymptotic spectrum. For continuous processes the
/// generator eigenvalue `a` is kept and `λ = exp(a)` is derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeripheralEigenvalue {
    pub lambda: C64,
    pub rate: Option<C64>,
    pub multiplicity: usize,
    /// `λ = 1` (discrete) or `a = 0` (continuous).
    pub stationary: bool,
}

impl PeripheralEigenvalue {
    /// `λ^t`, evaluated as `exp(a t)` for continuous processes.
    pub fn power(&self, t: Time) -> C64 {
        if self.stationary {
            return C64::new(1.0, 0.0);
        }
        match self.rate {
            Some(a) => (a * t.value()).exp(),
            None => C64::from_polar(1.0, self.lambda.arg() * t.value()),
        }
    }

    /// Angular frequency: `arg λ` or `Im a`.
    pub fn frequency(&self) -> f64 {
        match self.rate {
            Some(a) => a.im,
            None => self.lambda.arg(),
        }
    }

    fn describe(&self) -> String {
        match self.rate {
            Some(a) => format!("a={:.6}{:+.6}i", a.re, a.im),
            None => format!("λ={:.6}{:+.6}i", self.lambda.re, self.lambda.im),
        }
    }
}

/// Attractor space of a process together with its dual basis and the
/// maximally mixed T-state.
#[derive(Debug, Clone)]
pub struct AttractorDecomposition {
    kind: ProcessKind,
    dim: usize,
    superop: Superoperator,
    spectrum: Vec<C64>,
    eigenvalues: Vec<PeripheralEigenvalue>,
    /// Index into `eigenvalues` for each basis element.
    labels: Vec<usize>,
    right_basis: Vec<Operator>,
    dual_basis: Vec<Operator>,
    spectral_gap: Option<f64>,
    t_state: DensityMatrix,
    t_projector: SupportProjector,
    tol: Tolerances,
}

/// Spectral decomposition of the process onto its attractor space.
pub fn decompose(spec: &ProcessSpec, tol: &Tolerances) -> Result<AttractorDecomposition> {
    AttractorDecomposition::new(spec, tol)
}

struct Cluster {
    value: C64,
    members: usize,
}

fn is_peripheral(kind: ProcessKind, z: C64, tol: &Tolerances) -> bool {
    match kind {
        ProcessKind::Discrete => (z.norm() - 1.0).abs() <= tol.peripheral,
        ProcessKind::Continuous => z.re.abs() <= tol.peripheral,
    }
}

fn cluster(values: &[C64], tol: f64) -> Vec<Cluster> {
    // single linkage
    let n = values.len();
    let mut group: Vec<usize> = (0..n).collect();
    fn root(g: &mut [usize], mut i: usize) -> usize {
        while g[i] != i {
            g[i] = g[g[i]];
            i = g[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() < tol {
                let (a, b) = (root(&mut group, i), root(&mut group, j));
                group[a.max(b)] = a.min(b);
            }
        }
    }
    let mut clusters: Vec<(usize, C64, usize)> = Vec::new();
    for i in 0..n {
        let r = root(&mut group, i);
        match clusters.iter_mut().find(|c| c.0 == r) {
            Some(c) => {
                c.1 += values[i];
                c.2 += 1;
            }
            None => clusters.push((r, values[i], 1)),
        }
    }
    clusters
        .into_iter()
        .map(|(_, sum, k)| Cluster {
            value: sum / k as f64,
            members: k,
        })
        .collect()
}

fn spectral_order(a: &PeripheralEigenvalue, b: &PeripheralEigenvalue) -> Ordering {
    let key = |e: &PeripheralEigenvalue| {
        let f = if e.stationary { 0.0 } else { e.frequency() };
        (f.abs(), f < 0.0)
    };
    let (ka, kb) = (key(a), key(b));
    ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
}

/// Reduced row echelon form of the rows of `basis` (each column of the
/// input is one vector); pivots below `rel * max` are skipped.
fn canonical_basis(basis: &CMatrix, rel: f64) -> Vec<DVector<C64>> {
    let mut rows: Vec<DVector<C64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let len = basis.nrows();
    let scale = rows
        .iter()
        .flat_map(|r| r.iter().map(|z| z.norm()))
        .fold(0.0, f64::max);
    let mut pivot_row = 0;
    for col in 0..len {
        if pivot_row == rows.len() {
            break;
        }
        let (best, mag) = (pivot_row..rows.len())
            .map(|r| (r, rows[r][col].norm()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= rel * scale {
            continue;
        }
        rows.swap(pivot_row, best);
        let p = rows[pivot_row][col];
        rows[pivot_row] /= p;
        let pivot = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != pivot_row {
                let f = row[col];
                if f.norm() != 0.0 {
                    *row -= &pivot * f;
                }
            }
        }
        pivot_row += 1;
    }
    // clean round-off
    for row in rows.iter_mut() {
        for z in row.iter_mut() {
            if z.re.abs() < 1e-15 {
                z.re = 0.0;
            }
            if z.im.abs() < 1e-15 {
                z.im = 0.0;
            }
        }
    }
    rows
}

fn basis_order(a: &Operator, b: &Operator) -> Ordering {
    let ta = a.trace().norm();
    let tb = b.trace().norm();
    if (ta - tb).abs() > 1e-9 {
        return tb.total_cmp(&ta);
    }
    for (x, y) in a.matrix().as_slice().iter().zip(b.matrix().as_slice()) {
        let o = y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im));
        if (x - y).norm() > 1e-9 && o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

impl AttractorDecomposition {
    pub fn new(spec: &ProcessSpec, tol: &Tolerances) -> Result<Self> {
        let kind = spec.kind();
        let dim = spec.dim();
        let superop = spec.to_superoperator();
        let s = &superop.matrix;
        let n2 = s.nrows();
        let spectrum = linalg::eigenvalues(s);
        let scale = s.norm().max(1.0);

        let peripheral: Vec<C64> = spectrum.iter().copied().filter(|&z| is_peripheral(kind, z, tol)).collect();
        let gap_source: Vec<C64> = spectrum.iter().copied().filter(|&z| !is_peripheral(kind, z, tol)).collect();
        let spectral_gap = match kind {
            ProcessKind::Discrete => gap_source.iter().map(|z| z.norm()).reduce(f64::max).map(|m| 1.0 - m),
            ProcessKind::Continuous => gap_source.iter().map(|z| z.re).reduce(f64::max).map(|m| -m),
        };

        let mut eigenvalues: Vec<PeripheralEigenvalue> = cluster(&peripheral, tol.cluster)
            .into_iter()
            .map(|c| {
                let (lambda, rate, stationary) = match kind {
                    ProcessKind::Discrete => {
                        let stationary = (c.value - 1.0).norm() < tol.cluster;
                        let lambda = if stationary { C64::new(1.0, 0.0) } else { c.value / c.value.norm() };
                        (lambda, None, stationary)
                    }
                    ProcessKind::Continuous => {
                        let stationary = c.value.norm() < tol.cluster;
                        let a = if stationary { C64::new(0.0, 0.0) } else { C64::new(0.0, c.value.im) };
                        (a.exp(), Some(a), stationary)
                    }
                };
                PeripheralEigenvalue {
                    lambda,
                    rate,
                    multiplicity: c.members,
                    stationary,
                }
            })
            .collect();
        eigenvalues.sort_by(spectral_order);

        // raw eigenvalue of the superoperator matrix for each cluster
        let raw = |e: &PeripheralEigenvalue| e.rate.unwrap_or(e.lambda);
        let null_tol = 1e-8 * scale;
        let id = CMatrix::identity(n2, n2);

        let mut labels = Vec::new();
        let mut right_basis = Vec::new();
        let mut dual_basis = Vec::new();
        for (idx, e) in eigenvalues.iter().enumerate() {
            let z = raw(e);
            let m = e.multiplicity;
            let shifted = s - &id * z;
            let (right, sv) = linalg::smallest_singular_vectors(&shifted, m);
            let geometric = sv.iter().filter(|&&x| x <= null_tol).count();
            if geometric < m {
                return Err(Error::JordanDefect {
                    lambda: e.describe(),
                    algebraic: m,
                    geometric,
                });
            }
            let shifted_adj = s.adjoint() - &id * z.conj();
            let (left, _) = linalg::smallest_singular_vectors(&shifted_adj, m);

            let mut rights: Vec<Operator> = canonical_basis(&right, 1e-6)
                .iter()
                .map(|v| Operator::new(linalg::unvectorize(v.as_slice(), dim)).unwrap())
                .collect();
            rights.sort_by(basis_order);

            // dual Gram system, G_ij = (left_i, right_j)
            let r_mat = CMatrix::from_fn(n2, m, |r, c| rights[c].matrix().as_slice()[r]);
            let gram = left.adjoint() * &r_mat;
            let inv = gram.try_inverse().ok_or_else(|| Error::SingularDualGram { lambda: e.describe() })?;
            if !inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::SingularDualGram { lambda: e.describe() });
            }
            let duals = &left * inv.adjoint();
            for (j, right) in rights.into_iter().enumerate() {
                labels.push(idx);
                right_basis.push(right);
                let col = duals.column(j).into_owned();
                dual_basis.push(Operator::new(linalg::unvectorize(col.as_slice(), dim)).unwrap());
            }
        }

        // stationary part of the maximally mixed trajectory
        let mixed = Operator::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0));
        let mut sigma = Operator::zeros(dim);
        for (k, x) in right_basis.iter().enumerate() {
            if eigenvalues[labels[k]].stationary {
                let w = hs_inner(&dual_basis[k], &mixed)?;
                sigma = &sigma + &x.scale(w);
            }
        }
        let t_state = validate_density(&sigma, tol)?;
        let t_projector = support_projector(t_state.op(), tol)?;

        let decomposition = Self {
            kind,
            dim,
            superop,
            spectrum,
            eigenvalues,
            labels,
            right_basis,
            dual_basis,
            spectral_gap,
            t_state,
            t_projector,
            tol: *tol,
        };
        decomposition.check_invariants()?;
        Ok(decomposition)
    }

    fn check_invariants(&self) -> Result<()> {
        let bio = self.biorthogonality_residual();
        if bio > self.tol.dual {
            return Err(Error::IdentityViolation {
                what: "dual-basis biorthogonality",
                residual: bio,
                tolerance: self.tol.dual,
            });
        }
        let scale = self.superop.matrix.norm().max(1.0);
        let eig = self.eigen_residual();
        if eig > self.tol.eig * scale {
            return Err(Error::IdentityViolation {
                what: "attractor eigen-equation",
                residual: eig,
                tolerance: self.tol.eig * scale,
            });
        }
        let fixed = self.t_state_fixed_point_residual();
        if fixed > self.tol.eig * scale {
            return Err(Error::IdentityViolation {
                what: "T-state fixed point",
                residual: fixed,
                tolerance: self.tol.eig * scale,
            });
        }
        Ok(())
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn superoperator(&self) -> &Superoperator {
        &self.superop
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Full spectrum of the superoperator matrix (map or generator).
    pub fn spectrum(&self) -> &[C64] {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[PeripheralEigenvalue] {
        &self.eigenvalues
    }

    pub fn right_basis(&self) -> &[Operator] {
        &self.right_basis
    }

    pub fn dual_basis(&self) -> &[Operator] {
        &self.dual_basis
    }

    /// Peripheral eigenvalue carried by basis element `k`.
    pub fn eigenvalue_of(&self, k: usize) -> &PeripheralEigenvalue {
        &self.eigenvalues[self.labels[k]]
    }

    pub fn dim_attractor(&self) -> usize {
        self.right_basis.len()
    }

    /// `None` when the whole spectrum is peripheral.
    pub fn spectral_gap(&self) -> Option<f64> {
        self.spectral_gap
    }

    pub fn t_state(&self) -> &DensityMatrix {
        &self.t_state
    }

    pub fn t_projector(&self) -> &SupportProjector {
        &self.t_projector
    }

    /// Number of peripheral eigenvalues of the adjoint superoperator,
    /// counted independently of the Schrödinger-picture basis.
    pub fn heisenberg_dim_attractor(&self) -> usize {
        linalg::eigenvalues(&self.superop.matrix.adjoint())
            .into_iter()
            .filter(|&z| is_peripheral(self.kind, z, &self.tol))
            .count()
    }

    /// `max |(X^i, X_j) − δ_ij|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, d) in self.dual_basis.iter().enumerate() {
            for (j, r) in self.right_basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                let v = hs_inner(d, r).expect("same dimension");
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }

    /// Largest `‖S(X) − z X‖_F` over the right basis, `z` being `λ` or `a`.
    pub fn eigen_residual(&self) -> f64 {
        self.right_basis
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let e = self.eigenvalue_of(k);
                let z = e.rate.unwrap_or(e.lambda);
                self.superop.apply(x).distance(&x.scale(z))
            })
            .fold(0.0, f64::max)
    }

    /// `‖T(σ_I) − σ_I‖_F` (discrete) or `‖L(σ_I)‖_F` (continuous).
    pub fn t_state_fixed_point_residual(&self) -> f64 {
        let image = self.superop.apply(self.t_state.op());
        match self.kind {
            ProcessKind::Discrete => image.distance(self.t_state.op()),
            ProcessKind::Continuous => image.frobenius_norm(),
        }
    }

    /// `Σ X_{λ,j} (X^{λ,j}, Y)`: projection onto the attractor space.
    pub fn project(&self, y: &Operator) -> Operator {
        let mut out = Operator::zeros(self.dim);
        for (x, d) in self.right_basis.iter().zip(&self.dual_basis) {
            out = &out + &x.scale(hs_inner(d, y).expect("same dimension"));
        }
        out
    }

    /// Asymptotic trajectory `Σ λ^t X_{λ,j} (X^{λ,j}, ρ₀)`.
    pub fn asymptotic_trajectory(&self, rho0: &DensityMatrix) -> Trajectory {
        self.trajectory_of(rho0.op())
    }

    /// Asymptotic part of the evolution of an arbitrary operator.
    pub fn trajectory_of(&self, y: &Operator) -> Trajectory {
        let mut terms: Vec<TrajectoryTerm> = self
            .eigenvalues
            .iter()
            .map(|&e| TrajectoryTerm {
                eigenvalue: e,
                op: Operator::zeros(self.dim),
            })
            .collect();
        for (k, (x, d)) in self.right_basis.iter().zip(&self.dual_basis).enumerate() {
            let w = hs_inner(d, y).expect("same dimension");
            let term = &mut terms[self.labels[k]];
            term.op = &term.op + &x.scale(w);
        }
        terms.retain(|t| t.op.frobenius_norm() > 0.0);
        Trajectory {
            kind: self.kind,
            dim: self.dim,
            terms,
        }
    }

    /// The asymptotic part `σ_I(t)` of the trajectory started at `I/N`.
    /// Every sampled state is checked to have support equal to the T-projector.
    pub fn maximally_mixed_trajectory(&self) -> Result<Trajectory> {
        let traj = self.asymptotic_trajectory(&DensityMatrix::maximally_mixed(self.dim));
        let p = &self.t_projector;
        for t in traj.sample_times(8) {
            let state = traj.evaluate(t)?.hermitian_part();
            let support = support_projector(&state, &self.tol)?;
            let deviation = support.op().distance(p.op());
            if support.rank() != p.rank() || deviation > 1e-6 {
                return Err(Error::SupportMismatch { deviation });
            }
        }
        Ok(traj)
    }

    /// Smallest time after which the decaying part has shrunk by `tol`
    /// relative to its initial size.
    pub fn regime_time(&self, tol: f64) -> Time {
        let Some(gap) = self.spectral_gap.filter(|&g| g > self.tol.peripheral) else {
            return Time::ZERO;
        };
        match self.kind {
            ProcessKind::Discrete => {
                if gap >= 1.0 {
                    return Time::steps(1);
                }
                let t = (tol.ln() / (1.0 - gap).ln() - 1e-9).ceil().max(0.0);
                Time::steps(t as u64)
            }
            ProcessKind::Continuous => Time::new((1.0 / tol).ln() / gap).expect("finite"),
        }
    }

    /// `P X^{λ,j} P` for every dual attractor.
    pub fn projected_duals(&self) -> Vec<Operator> {
        self.dual_basis.iter().map(|d| self.t_projector.project(d)).collect()
    }

    /// Least-squares residual of the product `A B` against the complex
    /// span of the projected dual attractors.
    pub fn projected_product_residual(&self, a: &Operator, b: &Operator) -> f64 {
        let mut basis = Vec::new();
        for d in self.projected_duals() {
            basis.push(linalg::real_coordinates(d.matrix()));
            basis.push(linalg::real_coordinates(d.scale(C64::new(0.0, 1.0)).matrix()));
        }
        let product = a * b;
        linalg::span_residual(&basis, &linalg::real_coordinates(product.matrix()))
    }
}

/// Computes the maximally mixed T-state `σ_I` and its support projector.
pub fn t_state_and_projector(decomposition: &AttractorDecomposition) -> (DensityMatrix, SupportProjector) {
    (decomposition.t_state.clone(), decomposition.t_projector.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTerm {
    pub eigenvalue: PeripheralEigenvalue,
    pub op: Operator,
}

/// Closed-form asymptotic trajectory `ρ(t) = Σ λ^t X_λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    kind: ProcessKind,
    dim: usize,
    terms: Vec<TrajectoryTerm>,
}

impl Trajectory {
    /// A time-independent trajectory.
    pub fn constant(kind: ProcessKind, op: Operator) -> Self {
        let stationary = PeripheralEigenvalue {
            lambda: C64::new(1.0, 0.0),
            rate: match kind {
                ProcessKind::Discrete => None,
                ProcessKind::Continuous => Some(C64::new(0.0, 0.0)),
            },
            multiplicity: 1,
            stationary: true,
        };
        Self {
            kind,
            dim: op.dim(),
            terms: vec![TrajectoryTerm {
                eigenvalue: stationary,
                op,
            }],
        }
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TrajectoryTerm] {
        &self.terms
    }

    pub fn is_stationary(&self) -> bool {
        self.terms.iter().all(|t| t.eigenvalue.stationary)
    }

    pub fn evaluate(&self, t: Time) -> Result<Operator> {
        t.check(self.kind)?;
        let mut out = Operator::zeros(self.dim);
        for term in &self.terms {
            out = &out + &term.op.scale(term.eigenvalue.power(t));
        }
        Ok(out)
    }

    /// Evaluation validated as a density matrix.
    pub fn state(&self, t: Time, tol: &Tolerances) -> Result<DensityMatrix> {
        validate_density(&self.evaluate(t)?, tol)
    }

    /// Cesàro time average: the stationary terms.
    pub fn time_average(&self) -> Operator {
        self.terms
            .iter()
            .filter(|t| t.eigenvalue.stationary)
            .fold(Operator::zeros(self.dim), |acc, t| &acc + &t.op)
    }

    /// `t ↦ ρ(t + s)`.
    pub fn shifted(&self, s: Time) -> Result<Trajectory> {
        s.check(self.kind)?;
        Ok(Self {
            kind: self.kind,
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| TrajectoryTerm {
                    eigenvalue: t.eigenvalue,
                    op: t.op.scale(t.eigenvalue.power(s)),
                })
                .collect(),
        })
    }

    /// A few spread-out sample times valid for the process kind.
    pub fn sample_times(&self, count: usize) -> Vec<Time> {
        (0..count)
            .map(|k| match self.kind {
                ProcessKind::Discrete => Time::steps(k as u64 * 3),
                ProcessKind::Continuous => Time::new(k as f64 * 0.77).expect("finite"),
            })
            .collect()
    }
}
