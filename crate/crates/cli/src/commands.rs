//! The `analyze`, `evolve`, `fit` and `verify` commands.

use std::path::Path;

use jaynes_qmp::jaynes::{self, FitStatus, Reconstruction};
use jaynes_qmp::motion::{integral_of_motion, motion_basis, ConstantOfMotion, MotionBasis};
use jaynes_qmp::process::is_unital;
use jaynes_qmp::verify::{run_suite, Suite};
use jaynes_qmp::{decompose, AttractorDecomposition, ProcessKind, ProcessSpec, Propagator, Time, Tolerances};

use crate::error::CliError;
use crate::files::{matrix_from_data, matrix_to_data, ChannelFile, ConstraintsFile, StateFile};
use crate::report::{
    parity_name, sample, tolerance_entries, Analysis, BasisEntry, CheckRow, ConstraintEcho, EntropySection,
    EvolutionSample, FitSection, Report, SpecEcho, SpectrumEntry, VerificationSection,
};

/// Exit code when a fit ends on the boundary of, or outside, the moment set.
pub const EXIT_INFEASIBLE: i32 = 4;
/// Exit code when any verification check fails.
pub const EXIT_VERIFY_FAILED: i32 = 1;

#[derive(Debug, Clone)]
pub struct Context {
    pub tol: Tolerances,
}

impl Context {
    /// Default tolerances with `key=value` overrides applied in order.
    pub fn with_overrides(overrides: &[String]) -> Result<Self, CliError> {
        let mut tol = Tolerances::default();
        for o in overrides {
            tol.apply_override(o)?;
        }
        Ok(Self { tol })
    }
}

/// A finished command: the report document, a one-paragraph human summary
/// and the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub summary: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Known,
    Partial,
    Stationary,
}

impl FitMode {
    fn name(self) -> &'static str {
        match self {
            FitMode::Known => "known",
            FitMode::Partial => "partial",
            FitMode::Stationary => "stationary",
        }
    }
}

fn kind_name(kind: ProcessKind) -> &'static str {
    match kind {
        ProcessKind::Discrete => "discrete",
        ProcessKind::Continuous => "continuous",
    }
}

fn spec_echo(file: &ChannelFile, spec: &ProcessSpec, tol: &Tolerances) -> SpecEcho {
    let operator_count = match spec {
        ProcessSpec::Discrete { kraus } => kraus.len(),
        ProcessSpec::Continuous { lindblad_ops, .. } => lindblad_ops.len(),
    };
    SpecEcho {
        label: file.label.clone(),
        kind: kind_name(spec.kind()),
        dim: spec.dim(),
        operator_count,
        trace_preservation_residual: spec.trace_preservation_residual(),
        unital: is_unital(spec, tol),
    }
}

fn load(path: &Path, ctx: &Context, validate: bool) -> Result<(ChannelFile, ProcessSpec), CliError> {
    let file = ChannelFile::read(path)?;
    let spec = file.to_spec(&ctx.tol, validate)?;
    Ok((file, spec))
}

fn base_report(command: &'static str, file: &ChannelFile, spec: &ProcessSpec, ctx: &Context) -> Report {
    Report {
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        spec: spec_echo(file, spec, &ctx.tol),
        tolerances: tolerance_entries(&ctx.tol),
        analysis: None,
        evolution: None,
        fit: None,
        verification: None,
    }
}

fn analysis(dec: &AttractorDecomposition, basis: &MotionBasis) -> Analysis {
    Analysis {
        spectrum: dec.eigenvalues().iter().map(SpectrumEntry::from).collect(),
        dim_attractor: dec.dim_attractor(),
        spectral_gap: dec.spectral_gap(),
        regime_time: dec.regime_time(1e-10).value(),
        t_projector_rank: dec.t_projector().rank(),
        sigma_i: matrix_to_data(dec.t_state().op()),
        motion_basis: basis
            .members()
            .into_iter()
            .map(|c| BasisEntry {
                label: c.label().to_string(),
                parity: parity_name(c.parity()),
                integral: c.is_integral(),
                frequency: c.terms()[0].0.frequency(),
                value_at_zero: matrix_to_data(&c.evaluate(Time::ZERO)),
            })
            .collect(),
    }
}

fn analysis_summary(a: &Analysis) -> String {
    let gap = match a.spectral_gap {
        Some(g) => format!("{g:.6}"),
        None => "none".into(),
    };
    format!(
        "dim_attractor = {}, spectral gap = {gap}, T-projector rank = {}, {} peripheral eigenvalue cluster(s)",
        a.dim_attractor,
        a.t_projector_rank,
        a.spectrum.len()
    )
}

pub fn cmd_analyze(path: &Path, ctx: &Context) -> Result<Outcome, CliError> {
    let (file, spec) = load(path, ctx, true)?;
    let dec = decompose(&spec, &ctx.tol)?;
    let basis = motion_basis(&dec)?;
    let mut report = base_report("analyze", &file, &spec, ctx);
    let a = analysis(&dec, &basis);
    let summary = format!("{}; unital = {}", analysis_summary(&a), report.spec.unital);
    report.analysis = Some(a);
    Ok(Outcome {
        report,
        summary,
        exit_code: 0,
    })
}

pub fn cmd_evolve(path: &Path, state: &Path, times: &[f64], ctx: &Context) -> Result<Outcome, CliError> {
    let (file, spec) = load(path, ctx, true)?;
    let rho0 = StateFile::read(state)?.to_state(&ctx.tol)?;
    if rho0.dim() != spec.dim() {
        return Err(CliError::Parse(format!(
            "state dimension {} does not match process dimension {}",
            rho0.dim(),
            spec.dim()
        )));
    }
    let times = times
        .iter()
        .map(|&t| {
            let t = Time::new(t)?;
            t.check(spec.kind())?;
            Ok(t)
        })
        .collect::<Result<Vec<_>, jaynes_qmp::Error>>()?;
    let dec = decompose(&spec, &ctx.tol)?;
    let basis = motion_basis(&dec)?;
    let prop = Propagator::new(&spec, &ctx.tol);
    let traj = dec.asymptotic_trajectory(&rho0);
    let mut samples = Vec::with_capacity(times.len());
    for t in times {
        let brute = prop.evolve(&rho0, t)?;
        let asymptotic = traj.evaluate(t)?;
        samples.push(EvolutionSample {
            t: t.value(),
            discrepancy: brute.op().distance(&asymptotic),
            brute_force: matrix_to_data(brute.op()),
            asymptotic: matrix_to_data(&asymptotic),
        });
    }
    let summary = samples
        .iter()
        .map(|s| format!("t = {}: discrepancy {:.3e}", s.t, s.discrepancy))
        .collect::<Vec<_>>()
        .join("\n");
    let mut report = base_report("evolve", &file, &spec, ctx);
    report.analysis = Some(analysis(&dec, &basis));
    report.evolution = Some(samples);
    Ok(Outcome {
        report,
        summary,
        exit_code: 0,
    })
}

fn resolve_constraints(
    file: &ConstraintsFile,
    dec: &AttractorDecomposition,
    basis: &MotionBasis,
) -> Result<Vec<(ConstantOfMotion, f64)>, CliError> {
    let mut out: Vec<(ConstantOfMotion, f64)> = Vec::with_capacity(file.constraints.len());
    for (k, entry) in file.constraints.iter().enumerate() {
        let at = format!("constraints[{k}]");
        if !entry.target.is_finite() {
            return Err(CliError::Parse(format!("at {at}.target: non-finite target")));
        }
        let constant = if let Some(data) = &entry.observable {
            let op = matrix_from_data(data, dec.dim(), &format!("{at}.observable"))?;
            let label = entry.label.clone().unwrap_or_else(|| format!("observable{}", k + 1));
            integral_of_motion(dec, label, &op).map_err(|e| CliError::Parse(format!("at {at}.observable: {e}")))?
        } else if let Some(index) = entry.index {
            if entry.label.is_some() {
                return Err(CliError::Parse(format!("at {at}: give either label or index, not both")));
            }
            if index == 0 || index > basis.constants().len() {
                return Err(CliError::Parse(format!(
                    "at {at}.index: {index} is outside 1..={}",
                    basis.constants().len()
                )));
            }
            basis.constants()[index - 1].clone()
        } else if let Some(label) = &entry.label {
            if label == "I" {
                return Err(CliError::Parse(format!(
                    "at {at}.label: the identity is fixed by normalization"
                )));
            }
            basis
                .constants()
                .iter()
                .find(|c| c.label() == label)
                .cloned()
                .ok_or_else(|| CliError::Parse(format!("at {at}.label: no basis member {label:?}")))?
        } else {
            return Err(CliError::Parse(format!("at {at}: needs a label, an index or an observable")));
        };
        if out.iter().any(|(c, _)| c.label() == constant.label()) {
            return Err(CliError::Parse(format!("at {at}: {} is constrained twice", constant.label())));
        }
        out.push((constant, entry.target));
    }
    Ok(out)
}

pub fn cmd_fit(path: &Path, constraints: &Path, mode: FitMode, ctx: &Context) -> Result<Outcome, CliError> {
    let (file, spec) = load(path, ctx, true)?;
    let cfile = ConstraintsFile::read(constraints)?;
    let dec = decompose(&spec, &ctx.tol)?;
    let basis = motion_basis(&dec)?;

    let (rec, echo): (Reconstruction, Vec<ConstraintEcho>) = match mode {
        FitMode::Known => {
            let data = cfile
                .state
                .as_ref()
                .ok_or_else(|| CliError::Parse("at state: mode known needs the initial state".into()))?;
            if !cfile.constraints.is_empty() {
                return Err(CliError::Parse(
                    "at constraints: mode known derives every constraint from the state".into(),
                ));
            }
            let op = matrix_from_data(data, spec.dim(), "state")?;
            let rho0 = jaynes_qmp::operators::validate_density(&op, &ctx.tol)?;
            let rec = jaynes::reconstruct_known_state(&dec, &basis, &rho0)?;
            let echo = basis
                .constants()
                .iter()
                .map(|c| {
                    Ok(ConstraintEcho {
                        label: c.label().to_string(),
                        target: rho0.expectation(&c.evaluate(Time::ZERO)).re,
                        integral: c.is_integral(),
                    })
                })
                .collect::<Result<_, CliError>>()?;
            (rec, echo)
        }
        FitMode::Partial | FitMode::Stationary => {
            if cfile.state.is_some() {
                return Err(CliError::Parse(format!("at state: only used by mode known, not {}", mode.name())));
            }
            let subset = resolve_constraints(&cfile, &dec, &basis)?;
            let echo = subset
                .iter()
                .map(|(c, v)| ConstraintEcho {
                    label: c.label().to_string(),
                    target: *v,
                    integral: c.is_integral(),
                })
                .collect();
            let rec = if mode == FitMode::Partial {
                jaynes::reconstruct_partial(&dec, &subset)?
            } else {
                jaynes::reconstruct_stationary(&dec, &subset)?
            };
            (rec, echo)
        }
    };

    let t_eval = rec.model.fitted_at();
    let converged = rec.fit.status == FitStatus::Converged;
    let entropy = if converged {
        let e = rec.model.entropy_report(t_eval)?;
        Some(EntropySection {
            relative_entropy: e.relative_entropy,
            identity_value: e.identity_value,
            check: e.check,
        })
    } else {
        None
    };
    let grid = if mode == FitMode::Stationary {
        vec![t_eval]
    } else {
        jaynes::asymptotic_grid(dec.kind(), t_eval, 4)
    };
    let samples = grid
        .into_iter()
        .map(|t| Ok(sample(t.value(), rec.model.gibbs_state(t)?.op())))
        .collect::<Result<Vec<_>, CliError>>()?;

    let summary = format!(
        "mode {}: status {} after {} iteration(s), residual {:.3e}, gammas {:?}",
        mode.name(),
        rec.fit.status.as_str(),
        rec.fit.iterations,
        rec.fit.residual_norm,
        rec.fit.gammas
    );
    let mut report = base_report("fit", &file, &spec, ctx);
    report.analysis = Some(analysis(&dec, &basis));
    report.fit = Some(FitSection {
        mode: mode.name(),
        t_eval: t_eval.value(),
        constraints: echo,
        gammas: rec.fit.gammas.clone(),
        log_partition: rec.fit.log_partition,
        achieved_moments: rec.fit.achieved_moments.clone(),
        residual_norm: rec.fit.residual_norm,
        iterations: rec.fit.iterations,
        status: rec.fit.status.as_str(),
        min_hessian_eigenvalue: rec.fit.min_hessian_eigenvalue,
        entropy,
        samples,
    });
    Ok(Outcome {
        report,
        summary,
        exit_code: if converged { 0 } else { EXIT_INFEASIBLE },
    })
}

pub fn cmd_verify(path: &Path, suite: Suite, ctx: &Context) -> Result<Outcome, CliError> {
    // Unvalidated on purpose: a broken channel is reported, not rejected.
    let (file, spec) = load(path, ctx, false)?;
    let outcome = run_suite(&spec, suite, &ctx.tol);
    let mut report = base_report("verify", &file, &spec, ctx);
    if let Ok(dec) = decompose(&spec, &ctx.tol) {
        if let Ok(basis) = motion_basis(&dec) {
            report.analysis = Some(analysis(&dec, &basis));
        }
    }
    let passed = outcome.all_passed();
    let rows: Vec<CheckRow> = outcome
        .checks
        .iter()
        .map(|c| CheckRow {
            name: c.name,
            passed: c.passed,
            residual: c.residual,
            tolerance: c.tolerance,
            detail: c.detail.clone(),
        })
        .collect();
    let summary = rows
        .iter()
        .map(|r| {
            format!(
                "{} {:<30} residual {:.3e} (tolerance {:.1e})",
                if r.passed { "pass" } else { "FAIL" },
                r.name,
                r.residual,
                r.tolerance
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    report.verification = Some(VerificationSection {
        suite: match suite {
            Suite::Fast => "fast",
            Suite::Full => "full",
        },
        all_passed: passed,
        checks: rows,
    });
    Ok(Outcome {
        report,
        summary,
        exit_code: if passed { 0 } else { EXIT_VERIFY_FAILED },
    })
}
