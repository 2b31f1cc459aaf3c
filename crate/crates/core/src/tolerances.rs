//! Numerical thresholds shared by the whole pipeline.

use crate::error::{Error, Result};

/// Every threshold used by validation, spectral classification and fitting.
///
/// Defaults are tuned for double precision at dimensions up to 16. Individual
/// entries can be overridden by name via [`Tolerances::set`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Hermiticity, Frobenius norm of `A - A†`.
    pub herm: f64,
    /// `|Tr ρ - 1|`.
    pub trace: f64,
    /// Most negative eigenvalue tolerated in a state.
    pub psd: f64,
    /// Support cut-off, relative to the largest eigenvalue.
    pub support: f64,
    /// Trace preservation / unitality residuals.
    pub tp: f64,
    /// `|λ| - 1` for discrete, `Re a` for continuous.
    pub peripheral: f64,
    /// Eigenvalues closer than this are one cluster.
    pub cluster: f64,
    /// Biorthogonality residual of the dual basis.
    pub dual: f64,
    /// Eigen-equation residual of attractors.
    pub eig: f64,
    /// Real rank tolerance for motion-basis reduction (relative).
    pub rank: f64,
    /// Newton stopping tolerance on the dual gradient (max-norm).
    pub fit: f64,
    /// Multiplier magnitude beyond which a boundary state is suspected.
    pub gamma_max: f64,
    /// Condition-number limit for eigendecomposition-based propagation.
    pub eigen_cond: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            trace: 1e-10,
            psd: 1e-10,
            support: 1e-9,
            tp: 1e-10,
            peripheral: 1e-9,
            cluster: 1e-8,
            dual: 1e-9,
            eig: 1e-9,
            rank: 1e-9,
            fit: 1e-10,
            gamma_max: 50.0,
            eigen_cond: 1e8,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 13] = [
        "herm",
        "trace",
        "psd",
        "support",
        "tp",
        "peripheral",
        "cluster",
        "dual",
        "eig",
        "rank",
        "fit",
        "gamma_max",
        "eigen_cond",
    ];

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "tolerance {key} must be positive and finite, got {value}"
            )));
        }
        let slot = match key {
            "herm" => &mut self.herm,
            "trace" => &mut self.trace,
            "psd" => &mut self.psd,
            "support" => &mut self.support,
            "tp" => &mut self.tp,
            "peripheral" => &mut self.peripheral,
            "cluster" => &mut self.cluster,
            "dual" => &mut self.dual,
            "eig" => &mut self.eig,
            "rank" => &mut self.rank,
            "fit" => &mut self.fit,
            "gamma_max" => &mut self.gamma_max,
            "eigen_cond" => &mut self.eigen_cond,
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "unknown tolerance key {key:?} (known: {})",
                    Self::KEYS.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    /// `(key, value)` pairs in [`KEYS`](Self::KEYS) order.
    pub fn entries(&self) -> [(&'static str, f64); 13] {
        [
            ("herm", self.herm),
            ("trace", self.trace),
            ("psd", self.psd),
            ("support", self.support),
            ("tp", self.tp),
            ("peripheral", self.peripheral),
            ("cluster", self.cluster),
            ("dual", self.dual),
            ("eig", self.eig),
            ("rank", self.rank),
            ("fit", self.fit),
            ("gamma_max", self.gamma_max),
            ("eigen_cond", self.eigen_cond),
        ]
    }

    /// Parses a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidSpec(format!("tolerance override {assignment:?} is not key=value"))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::InvalidSpec(format!("tolerance override {assignment:?} has a non-numeric value"))
        })?;
        self.set(key.trim(), value)
    }
}
