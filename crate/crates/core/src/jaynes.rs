//! Generalized Gibbs states over asymptotic trajectories and the three
//! reconstruction principles, solved as convex moment matching in the
//! Lagrange multipliers.
//!
//! All exponentials live on the support of the T-projector `P`: operators are
//! compressed with the isometry `V` (`V†AV`), exponentiated in an
//! eigenbasis, then embedded back with zeros outside the support.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::attractors::{AttractorDecomposition, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::motion::{self, ConstantOfMotion, MotionBasis};
use crate::operators::{support_projector, DensityMatrix, Operator, SupportProjector};
use crate::process::{ProcessKind, Time};
use crate::tolerances::Tolerances;

const MAX_ITERATIONS: usize = 100;
const MAX_STEP: f64 = 10.0;
const STEP_TOL: f64 = 1e-6;
/// Gradient size below which a diverging fit is attributed to a target on
/// the boundary of the moment set rather than outside it.
const BOUNDARY_GRADIENT: f64 = 1e-6;
/// Covariance eigenvalue below which the Gibbs family is numerically degenerate.
const DEGENERATE_HESSIAN: f64 = 1e-13;
const TRAJECTORY_TOL: f64 = 1e-7;
const STATIONARY_TOL: f64 = 1e-9;
const ENTROPY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    BoundarySuspected,
    MomentInfeasible,
}

impl FitStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FitStatus::Converged => "converged",
            FitStatus::BoundarySuspected => "boundary_suspected",
            FitStatus::MomentInfeasible => "moment_infeasible",
        }
    }
}

/// Newton matrix used by [`fit_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HessianKind {
    /// Exact Hessian of `ln Z` through divided differences of `exp`.
    #[default]
    DividedDifference,
    /// Anticommutator covariance. Exact only for commuting constraints.
    Symmetrized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub gammas: Vec<f64>,
    pub log_partition: f64,
    pub achieved_moments: Vec<f64>,
    /// `‖c − ⟨C⟩‖_∞` at the last iterate.
    pub residual_norm: f64,
    pub iterations: usize,
    pub status: FitStatus,
    /// Smallest Hessian eigenvalue seen over all iterates.
    pub min_hessian_eigenvalue: f64,
}

/// `ρ(t) = exp[ln σ(t) − Σ γ_j P C_j(t) P] / Z`.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    reference: Trajectory,
    projector: SupportProjector,
    constraints: Vec<ConstantOfMotion>,
    gammas: Vec<f64>,
    log_partition: f64,
    fitted_at: Time,
    tol: Tolerances,
}

/// Everything computed from one exponent: the compressed state, its
/// eigen-structure and the compressed constraints.
struct Evaluation {
    log_partition: f64,
    state: CMatrix,
    moments: Vec<f64>,
    exponent_values: Vec<f64>,
    /// Normalized Boltzmann weights `exp(e_k − ln Z)`.
    weights: Vec<f64>,
    shift: f64,
    normalizer: f64,
    /// Compressed constraints in the exponent eigenbasis.
    constraints: Vec<CMatrix>,
}

fn compressed_log_reference(
    reference: &Trajectory,
    projector: &SupportProjector,
    t: Time,
    tol: &Tolerances,
) -> Result<CMatrix> {
    let sigma = reference.evaluate(t)?;
    let deviation = sigma.hermitian_deviation();
    if deviation > tol.herm {
        return Err(Error::NotHermitian { deviation });
    }
    let sigma = sigma.hermitian_part();
    let leak = projector.leakage(&sigma);
    if leak > tol.support.max(1e-8) {
        return Err(Error::SupportMismatch { deviation: leak });
    }
    let (values, vectors) = linalg::hermitian_eigen(&projector.compress(&sigma));
    let max = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if let Some(&min) = values.first() {
        if min <= tol.support * max.max(1.0) {
            return Err(Error::SupportMismatch { deviation: min.abs() });
        }
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(linalg::from_eigen(&logs, &vectors))
}

fn compressed_constraints(
    constraints: &[ConstantOfMotion],
    projector: &SupportProjector,
    t: Time,
) -> Vec<CMatrix> {
    constraints
        .iter()
        .map(|c| {
            let m = projector.compress(&c.evaluate(t));
            (&m + m.adjoint()) * num_complex::Complex64::new(0.5, 0.0)
        })
        .collect()
}

fn evaluate(log_reference: &CMatrix, constraints: &[CMatrix], gammas: &[f64], tol: &Tolerances) -> Result<Evaluation> {
    let mut exponent = log_reference.clone();
    for (c, &g) in constraints.iter().zip(gammas) {
        exponent -= c * num_complex::Complex64::new(g, 0.0);
    }
    let deviation = (&exponent - exponent.adjoint()).norm();
    if deviation > tol.herm * exponent.norm().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let (values, vectors) = linalg::hermitian_eigen(&exponent);
    if values.is_empty() {
        return Err(Error::SupportMismatch { deviation: 0.0 });
    }
    let shift = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = values.iter().map(|e| (e - shift).exp()).collect();
    let normalizer: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / normalizer).collect();
    let state = linalg::from_eigen(&weights, &vectors);
    let log_partition = shift + normalizer.ln();
    if !log_partition.is_finite() {
        return Err(Error::Numerical("log partition function is not finite".into()));
    }
    let rotated: Vec<CMatrix> = constraints
        .iter()
        .map(|c| vectors.adjoint() * c * &vectors)
        .collect();
    let moments = rotated
        .iter()
        .map(|c| (0..weights.len()).map(|k| weights[k] * c[(k, k)].re).sum())
        .collect();
    Ok(Evaluation {
        log_partition,
        state,
        moments,
        exponent_values: values,
        weights,
        shift,
        normalizer,
        constraints: rotated,
    })
}

/// `(e^a − e^b)/(a − b)` written as `e^{(a+b)/2} sinh(δ)/δ` with `δ = (a−b)/2`.
fn exp_divided_difference(a: f64, b: f64) -> f64 {
    let delta = 0.5 * (a - b);
    let mid = (0.5 * (a + b)).exp();
    if delta.abs() < 1e-5 {
        mid * (1.0 + delta * delta / 6.0)
    } else {
        mid * delta.sinh() / delta
    }
}

impl Evaluation {
    fn hessian(&self, kind: HessianKind) -> DMatrix<f64> {
        let m = self.constraints.len();
        let r = self.weights.len();
        let mut h = DMatrix::zeros(m, m);
        match kind {
            HessianKind::DividedDifference => {
                let mut g = DMatrix::zeros(r, r);
                for k in 0..r {
                    for l in 0..r {
                        g[(k, l)] = exp_divided_difference(
                            self.exponent_values[k] - self.shift,
                            self.exponent_values[l] - self.shift,
                        ) / self.normalizer;
                    }
                }
                for i in 0..m {
                    for j in 0..=i {
                        let (a, b) = (&self.constraints[i], &self.constraints[j]);
                        let mut s = 0.0;
                        for k in 0..r {
                            for l in 0..r {
                                s += (a[(k, l)] * b[(k, l)].conj()).re * g[(k, l)];
                            }
                        }
                        h[(i, j)] = s - self.moments[i] * self.moments[j];
                        h[(j, i)] = h[(i, j)];
                    }
                }
            }
            HessianKind::Symmetrized => {
                for i in 0..m {
                    for j in 0..=i {
                        let (a, b) = (&self.constraints[i], &self.constraints[j]);
                        let mut s = 0.0;
                        for k in 0..r {
                            for l in 0..r {
                                s += self.weights[k] * (a[(k, l)] * b[(l, k)]).re;
                            }
                        }
                        h[(i, j)] = s - self.moments[i] * self.moments[j];
                        h[(j, i)] = h[(i, j)];
                    }
                }
            }
        }
        h
    }

    fn dual(&self, gammas: &[f64], targets: &[f64]) -> f64 {
        self.log_partition + gammas.iter().zip(targets).map(|(g, c)| g * c).sum::<f64>()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Solves `H Δ = −g` through the symmetric eigendecomposition, flooring
/// tiny eigenvalues so the direction stays a descent direction.
fn newton_direction(h: &DMatrix<f64>, gradient: &[f64]) -> (Vec<f64>, f64) {
    let eig = SymmetricEigen::new(h.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = (1e-14 * top).max(1e-300);
    let g = DVector::from_column_slice(gradient);
    let coeffs = eig.eigenvectors.transpose() * g;
    let scaled = DVector::from_iterator(
        coeffs.len(),
        coeffs.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| -c / l.max(floor)),
    );
    let step = &eig.eigenvectors * scaled;
    (step.iter().cloned().collect(), min)
}

fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    if h.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Fits the multipliers with the exact Hessian.
pub fn fit(
    reference: &Trajectory,
    projector: &SupportProjector,
    constraints: &[(ConstantOfMotion, f64)],
    t_eval: Time,
    tol: &Tolerances,
) -> Result<(GibbsModel, FitResult)> {
    fit_with(reference, projector, constraints, t_eval, tol, HessianKind::default())
}

/// Minimizes `f(γ) = ln Z(γ) + Σ γ_j c_j` by damped Newton from `γ = 0`.
pub fn fit_with(
    reference: &Trajectory,
    projector: &SupportProjector,
    constraints: &[(ConstantOfMotion, f64)],
    t_eval: Time,
    tol: &Tolerances,
    hessian: HessianKind,
) -> Result<(GibbsModel, FitResult)> {
    t_eval.check(reference.kind())?;
    if projector.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            found: projector.dim(),
        });
    }
    let ops: Vec<ConstantOfMotion> = constraints.iter().map(|(c, _)| c.clone()).collect();
    let targets: Vec<f64> = constraints.iter().map(|(_, v)| *v).collect();
    if let Some(bad) = targets.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec(format!("constraint target {bad} is not finite")));
    }
    let log_ref = compressed_log_reference(reference, projector, t_eval, tol)?;
    let compressed = compressed_constraints(&ops, projector, t_eval);

    let m = ops.len();
    let mut gammas = vec![0.0; m];
    let mut eval = evaluate(&log_ref, &compressed, &gammas, tol)?;
    let mut min_hessian = f64::INFINITY;
    let mut status = None;
    let mut iterations = 0;

    if m > 0 {
        let h0 = eval.hessian(HessianKind::DividedDifference);
        let top = SymmetricEigen::new(h0.clone())
            .eigenvalues
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()));
        if min_eigenvalue(&h0) <= tol.rank * top.max(1e-300) || top == 0.0 {
            return Err(Error::DependentConstraints);
        }
    }

    while status.is_none() {
        let gradient: Vec<f64> = targets.iter().zip(&eval.moments).map(|(c, mu)| c - mu).collect();
        let gnorm = max_abs(&gradient);
        let h = eval.hessian(hessian);
        let exact_min = if hessian == HessianKind::DividedDifference {
            min_eigenvalue(&h)
        } else {
            min_eigenvalue(&eval.hessian(HessianKind::DividedDifference))
        };
        min_hessian = min_hessian.min(exact_min);
        if m == 0 {
            status = Some(FitStatus::Converged);
            break;
        }
        let (mut step, _) = newton_direction(&h, &gradient);
        let snorm = max_abs(&step);
        if gnorm <= tol.fit && snorm <= STEP_TOL {
            // A vanishing covariance means the moments saturated: the
            // optimum sits at infinite multipliers.
            status = Some(if exact_min <= DEGENERATE_HESSIAN {
                FitStatus::BoundarySuspected
            } else {
                FitStatus::Converged
            });
            break;
        }
        if max_abs(&gammas) > tol.gamma_max {
            status = Some(classify_divergence(gnorm));
            break;
        }
        if iterations >= MAX_ITERATIONS {
            if gnorm <= tol.fit && exact_min > DEGENERATE_HESSIAN {
                status = Some(FitStatus::Converged);
            } else if exact_min < 1e-8 {
                status = Some(classify_divergence(gnorm));
            } else {
                return Err(Error::FitFailed(format!(
                    "no convergence after {MAX_ITERATIONS} iterations, gradient {gnorm:.3e}"
                )));
            }
            break;
        }
        if snorm > MAX_STEP {
            for s in &mut step {
                *s *= MAX_STEP / snorm;
            }
        }
        let f0 = eval.dual(&gammas, &targets);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = gammas.iter().zip(&step).map(|(g, s)| g + alpha * s).collect();
            let next = evaluate(&log_ref, &compressed, &trial, tol);
            if let Ok(next) = next {
                let f1 = next.dual(&trial, &targets);
                if f1 <= f0 + 1e-14 * (1.0 + f0.abs()) {
                    gammas = trial;
                    eval = next;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                // No descent possible: the gradient is at rounding level.
                status = Some(if gnorm <= tol.fit {
                    FitStatus::Converged
                } else if max_abs(&gammas) > 0.5 * tol.gamma_max {
                    classify_divergence(gnorm)
                } else {
                    return Err(Error::FitFailed(format!(
                        "line search stalled with gradient {gnorm:.3e}"
                    )));
                });
                break;
            }
        }
        iterations += 1;
    }

    let gradient: Vec<f64> = targets.iter().zip(&eval.moments).map(|(c, mu)| c - mu).collect();
    let result = FitResult {
        gammas: gammas.clone(),
        log_partition: eval.log_partition,
        achieved_moments: eval.moments.clone(),
        residual_norm: max_abs(&gradient),
        iterations,
        status: status.expect("loop sets a status"),
        min_hessian_eigenvalue: min_hessian,
    };
    let model = GibbsModel {
        reference: reference.clone(),
        projector: projector.clone(),
        constraints: ops,
        gammas,
        log_partition: eval.log_partition,
        fitted_at: t_eval,
        tol: *tol,
    };
    Ok((model, result))
}

fn classify_divergence(gradient: f64) -> FitStatus {
    if gradient <= BOUNDARY_GRADIENT {
        FitStatus::BoundarySuspected
    } else {
        FitStatus::MomentInfeasible
    }
}

impl GibbsModel {
    /// A model with explicitly given multipliers.
    pub fn new(
        reference: Trajectory,
        projector: SupportProjector,
        constraints: Vec<ConstantOfMotion>,
        gammas: Vec<f64>,
        t: Time,
        tol: &Tolerances,
    ) -> Result<Self> {
        if constraints.len() != gammas.len() {
            return Err(Error::DimensionMismatch {
                expected: constraints.len(),
                found: gammas.len(),
            });
        }
        let mut model = Self {
            reference,
            projector,
            constraints,
            gammas,
            log_partition: 0.0,
            fitted_at: t,
            tol: *tol,
        };
        model.log_partition = model.log_partition(t)?;
        Ok(model)
    }

    pub fn reference(&self) -> &Trajectory {
        &self.reference
    }

    pub fn projector(&self) -> &SupportProjector {
        &self.projector
    }

    pub fn constraints(&self) -> &[ConstantOfMotion] {
        &self.constraints
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `ln Z` at the time the model was fitted.
    pub fn stored_log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn fitted_at(&self) -> Time {
        self.fitted_at
    }

    /// Same reference and constraints, different multipliers.
    pub fn with_gammas(&self, gammas: Vec<f64>) -> Result<Self> {
        Self::new(
            self.reference.clone(),
            self.projector.clone(),
            self.constraints.clone(),
            gammas,
            self.fitted_at,
            &self.tol,
        )
    }

    fn evaluation(&self, t: Time) -> Result<Evaluation> {
        let log_ref = compressed_log_reference(&self.reference, &self.projector, t, &self.tol)?;
        let compressed = compressed_constraints(&self.constraints, &self.projector, t);
        evaluate(&log_ref, &compressed, &self.gammas, &self.tol)
    }

    pub fn gibbs_state(&self, t: Time) -> Result<DensityMatrix> {
        let eval = self.evaluation(t)?;
        let op = self.projector.embed(&eval.state).hermitian_part();
        crate::operators::validate_density(&op, &self.tol)
    }

    pub fn log_partition(&self, t: Time) -> Result<f64> {
        Ok(self.evaluation(t)?.log_partition)
    }

    /// `Tr[C_j(t) ρ(t)]` for each constraint.
    pub fn moment_map(&self, t: Time) -> Result<Vec<f64>> {
        Ok(self.evaluation(t)?.moments)
    }

    /// Exact covariance (Hessian of `ln Z`) at `t`.
    pub fn hessian(&self, t: Time, kind: HessianKind) -> Result<DMatrix<f64>> {
        Ok(self.evaluation(t)?.hessian(kind))
    }

    pub fn entropy_report(&self, t: Time) -> Result<EntropyReport> {
        let eval = self.evaluation(t)?;
        let state = self.gibbs_state(t)?;
        let reference = crate::operators::validate_density(&self.reference.evaluate(t)?.hermitian_part(), &self.tol)?;
        let direct = relative_entropy_with(&state, &reference, &self.tol);
        let identity = -eval.log_partition
            - self
                .gammas
                .iter()
                .zip(&eval.moments)
                .map(|(g, c)| g * c)
                .sum::<f64>();
        let check = (direct - identity).abs();
        if !(check <= ENTROPY_TOL) {
            return Err(Error::IdentityViolation {
                what: "relative entropy",
                residual: check,
                tolerance: ENTROPY_TOL,
            });
        }
        Ok(EntropyReport {
            relative_entropy: direct,
            identity_value: identity,
            check,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    /// `S(ρ(t)|σ(t))` computed directly.
    pub relative_entropy: f64,
    /// `−ln Z − Σ γ_j ⟨C_j(t)⟩`.
    pub identity_value: f64,
    pub check: f64,
}

/// Quantum relative entropy `Tr ρ(ln ρ − ln σ)`, or `+∞` when the support of
/// `ρ` is not contained in that of `σ`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    relative_entropy_with(rho, sigma, &Tolerances::default())
}

pub fn relative_entropy_with(rho: &DensityMatrix, sigma: &DensityMatrix, tol: &Tolerances) -> f64 {
    let Ok(support) = support_projector(sigma.op(), tol) else {
        return f64::NAN;
    };
    let outside = &Operator::identity(rho.dim()) - support.op();
    if rho.op().sandwich(&outside).frobenius_norm() > tol.support {
        return f64::INFINITY;
    }
    let (rho_values, _) = linalg::hermitian_eigen(&rho.op().hermitian_part().into_matrix());
    let neg_entropy: f64 = rho_values
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum();
    let (sigma_values, sigma_vectors) = linalg::hermitian_eigen(&support.compress(sigma.op()));
    let rho_c = support.compress(rho.op());
    let rotated = sigma_vectors.adjoint() * rho_c * &sigma_vectors;
    let cross: f64 = sigma_values
        .iter()
        .enumerate()
        .map(|(k, s)| rotated[(k, k)].re * s.ln())
        .sum();
    neg_entropy - cross
}

/// A fitted model together with the solver report.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub model: GibbsModel,
    pub fit: FitResult,
}

/// Times `t_eval, t_eval + Δ, …` used for trajectory checks.
pub fn asymptotic_grid(kind: ProcessKind, t_eval: Time, count: usize) -> Vec<Time> {
    (0..count)
        .map(|k| match kind {
            ProcessKind::Discrete => t_eval.plus(Time::steps(k as u64)),
            ProcessKind::Continuous => t_eval.plus(Time::new(0.7 * k as f64).expect("finite")),
        })
        .collect()
}

/// Default evaluation time: decay of transients below `1e-10`.
pub fn default_t_eval(decomposition: &AttractorDecomposition) -> Time {
    decomposition.regime_time(1e-10)
}

/// Full knowledge of `ρ₀`: every constant of motion is constrained and the
/// fitted model must reproduce the asymptotic trajectory of `ρ₀`.
pub fn reconstruct_known_state(
    decomposition: &AttractorDecomposition,
    basis: &MotionBasis,
    rho0: &DensityMatrix,
) -> Result<Reconstruction> {
    reconstruct_known_state_at(decomposition, basis, rho0, default_t_eval(decomposition))
}

pub fn reconstruct_known_state_at(
    decomposition: &AttractorDecomposition,
    basis: &MotionBasis,
    rho0: &DensityMatrix,
    t_eval: Time,
) -> Result<Reconstruction> {
    let tol = decomposition.tolerances();
    let reference = decomposition.maximally_mixed_trajectory()?;
    let constraints: Vec<(ConstantOfMotion, f64)> = basis
        .constants()
        .iter()
        .map(|c| Ok((c.clone(), motion::real_expectation(c, rho0, Time::ZERO)?)))
        .collect::<Result<_>>()?;
    let (model, fit) = fit(&reference, decomposition.t_projector(), &constraints, t_eval, tol)?;
    if fit.status == FitStatus::Converged {
        let target = decomposition.asymptotic_trajectory(rho0);
        for t in asymptotic_grid(decomposition.kind(), t_eval, 8) {
            let residual = model.gibbs_state(t)?.op().distance(&target.evaluate(t)?);
            if residual > TRAJECTORY_TOL {
                return Err(Error::IdentityViolation {
                    what: "Gibbs state versus asymptotic trajectory",
                    residual,
                    tolerance: TRAJECTORY_TOL,
                });
            }
        }
    }
    Ok(Reconstruction { model, fit })
}

/// Partial knowledge of an asymptotic trajectory: only the given constants
/// receive multipliers, the reference is `σ_I(t)`.
pub fn reconstruct_partial(
    decomposition: &AttractorDecomposition,
    subset: &[(ConstantOfMotion, f64)],
) -> Result<Reconstruction> {
    let reference = decomposition.maximally_mixed_trajectory()?;
    let (model, fit) = fit(
        &reference,
        decomposition.t_projector(),
        subset,
        default_t_eval(decomposition),
        decomposition.tolerances(),
    )?;
    Ok(Reconstruction { model, fit })
}

/// Stationary state with known integrals of motion, relative to the
/// time-averaged `σ_I`.
pub fn reconstruct_stationary(
    decomposition: &AttractorDecomposition,
    subset: &[(ConstantOfMotion, f64)],
) -> Result<Reconstruction> {
    if let Some((c, _)) = subset.iter().find(|(c, _)| !c.is_integral()) {
        return Err(Error::NotIntegralOfMotion(c.label().to_string()));
    }
    let kind = decomposition.kind();
    let reference = Trajectory::constant(kind, decomposition.t_state().op().clone());
    let t_eval = Time::ZERO;
    let (model, fit) = fit(
        &reference,
        decomposition.t_projector(),
        subset,
        t_eval,
        decomposition.tolerances(),
    )?;
    if fit.status == FitStatus::Converged {
        let rho = model.gibbs_state(t_eval)?;
        let image = decomposition.superoperator().apply(rho.op());
        let residual = match kind {
            ProcessKind::Discrete => image.distance(rho.op()),
            ProcessKind::Continuous => image.frobenius_norm(),
        };
        if residual > STATIONARY_TOL {
            return Err(Error::IdentityViolation {
                what: "stationarity of the reconstructed state",
                residual,
                tolerance: STATIONARY_TOL,
            });
        }
    }
    Ok(Reconstruction { model, fit })
}
