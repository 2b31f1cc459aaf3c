//! The canonical example channels shipped with the tool.

use std::path::{Path, PathBuf};

use jaynes_qmp::{channels, ProcessSpec};

use crate::error::CliError;
use crate::files::ChannelFile;

pub const RANDOM_SEED: u64 = 20_231_107;

pub struct Example {
    pub file_name: &'static str,
    pub label: &'static str,
    pub spec: ProcessSpec,
    pub seed: Option<u64>,
}

pub fn examples() -> Vec<Example> {
    let ex = |file_name, label, spec| Example {
        file_name,
        label,
        spec,
        seed: None,
    };
    vec![
        ex("identity.json", "identity channel on a qubit", channels::identity(2)),
        ex(
            "unitary_theta.json",
            "unitary diag(1, exp(i pi/3))",
            channels::unitary_phase(std::f64::consts::FRAC_PI_3),
        ),
        ex("dephasing.json", "dephasing p = 0.3", channels::dephasing(0.3)),
        ex("amplitude_damping.json", "amplitude damping p = 0.5", channels::amplitude_damping(0.5)),
        ex(
            "amplitude_damping_continuous.json",
            "Lindblad decay with jump operator sigma_minus",
            channels::lindblad_damping(1.0),
        ),
        ex("depolarizing.json", "depolarizing p = 0.2", channels::depolarizing(0.2)),
        ex(
            "qutrit_block.json",
            "amplitude-damped qubit plus a fixed level, block direct sum",
            channels::qutrit_block(0.5),
        ),
        Example {
            file_name: "random_two_qubit.json",
            label: "random two-qubit CPTP channel, 3 Kraus operators",
            spec: channels::random_kraus(4, 3, RANDOM_SEED),
            seed: Some(RANDOM_SEED),
        },
    ]
}

/// Writes every example into `dir`, creating it if needed.
pub fn generate_examples(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for ex in examples() {
        let path = dir.join(ex.file_name);
        let text = ChannelFile::from_spec(&ex.spec, Some(ex.label), ex.seed).to_canonical_string();
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
