//! Canonical example processes and seeded random generators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMatrix};
use crate::operators::{pauli, validate_density, DensityMatrix, Operator};
use crate::process::ProcessSpec;
use crate::tolerances::Tolerances;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn discrete(kraus: Vec<Operator>) -> ProcessSpec {
    ProcessSpec::discrete(kraus, &Tolerances::default()).expect("trace-preserving by construction")
}

fn continuous(h: Operator, ls: Vec<Operator>) -> ProcessSpec {
    ProcessSpec::continuous(h, ls, &Tolerances::default()).expect("Hermitian by construction")
}

pub fn identity(n: usize) -> ProcessSpec {
    discrete(vec![Operator::identity(n)])
}

/// Conjugation by a single unitary.
pub fn unitary(u: Operator) -> ProcessSpec {
    discrete(vec![u])
}

/// `U = diag(1, e^{iθ})`.
pub fn unitary_phase(theta: f64) -> ProcessSpec {
    let mut m = CMatrix::identity(2, 2);
    m[(1, 1)] = C64::from_polar(1.0, theta);
    unitary(Operator::new(m).unwrap())
}

/// `{√(1−p) I, √p σ_z}`.
pub fn dephasing(p: f64) -> ProcessSpec {
    discrete(vec![
        &Operator::identity(2) * (1.0 - p).sqrt(),
        &pauli::z() * p.sqrt(),
    ])
}

/// `K₀ = diag(1, √(1−p))`, `K₁ = √p |0⟩⟨1|`.
pub fn amplitude_damping(p: f64) -> ProcessSpec {
    discrete(vec![
        Operator::diag(&[1.0, (1.0 - p).sqrt()]),
        &Operator::ket_bra(2, 0, 1) * p.sqrt(),
    ])
}

/// `ρ ↦ (1−p) ρ + p I/2`.
pub fn depolarizing(p: f64) -> ProcessSpec {
    discrete(vec![
        &Operator::identity(2) * (1.0 - 0.75 * p).sqrt(),
        &pauli::x() * (p / 4.0).sqrt(),
        &pauli::y() * (p / 4.0).sqrt(),
        &pauli::z() * (p / 4.0).sqrt(),
    ])
}

/// Continuous decay with `H = 0` and `L = √rate σ₋`.
pub fn lindblad_damping(rate: f64) -> ProcessSpec {
    continuous(Operator::zeros(2), vec![&pauli::lowering() * rate.sqrt()])
}

/// Direct sum `ρ ↦ T_a(P_a ρ P_a) + T_b(P_b ρ P_b)`: each block evolves under
/// its own channel and coherences between the blocks are discarded.
pub fn direct_sum(a: &ProcessSpec, b: &ProcessSpec) -> ProcessSpec {
    let (ka, kb) = discrete_pair(a, b);
    let (na, nb) = (a.dim(), b.dim());
    let n = na + nb;
    let kraus = ka
        .iter()
        .map(|k| embed_block(n, 0, k.matrix()))
        .chain(kb.iter().map(|k| embed_block(n, na, k.matrix())))
        .map(|m| Operator::new(m).unwrap())
        .collect();
    discrete(kraus)
}

/// Direct sum pairing Kraus operators by index, `K_j ⊕ L_j` (shorter list
/// padded with zeros). Coherences between the blocks can survive.
pub fn coherent_direct_sum(a: &ProcessSpec, b: &ProcessSpec) -> ProcessSpec {
    let (ka, kb) = discrete_pair(a, b);
    let (na, nb) = (a.dim(), b.dim());
    let n = na + nb;
    let kraus = (0..ka.len().max(kb.len()))
        .map(|j| {
            let mut m = CMatrix::zeros(n, n);
            if let Some(k) = ka.get(j) {
                m += embed_block(n, 0, k.matrix());
            }
            if let Some(k) = kb.get(j) {
                m += embed_block(n, na, k.matrix());
            }
            Operator::new(m).unwrap()
        })
        .collect();
    discrete(kraus)
}

fn discrete_pair<'a>(a: &'a ProcessSpec, b: &'a ProcessSpec) -> (&'a [Operator], &'a [Operator]) {
    match (a, b) {
        (ProcessSpec::Discrete { kraus: ka }, ProcessSpec::Discrete { kraus: kb }) => (ka, kb),
        _ => panic!("direct sums are defined for discrete channels"),
    }
}

/// Qutrit made of an amplitude-damped qubit and an untouched third level.
/// The excited level is transient, so the T-projector has rank 2.
pub fn qutrit_block(p: f64) -> ProcessSpec {
    direct_sum(&amplitude_damping(p), &identity(1))
}

/// Qutrit channel that swaps populations between the block `{0}` and
/// the block `{1, 2}`; the maximally mixed trajectory oscillates with period 2.
pub fn qutrit_swap() -> ProcessSpec {
    let h = 0.5f64.sqrt();
    discrete(vec![
        &Operator::ket_bra(3, 1, 0) * h,
        &Operator::ket_bra(3, 2, 0) * h,
        Operator::ket_bra(3, 0, 1),
        Operator::ket_bra(3, 0, 2),
    ])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ginibre(n: usize, m: usize, rng: &mut impl Rng) -> CMatrix {
    DMatrix::from_fn(n, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> Operator {
    let g = ginibre(n, n, rng);
    Operator::new((&g + g.adjoint()) * c(0.5)).unwrap()
}

/// Haar-distributed unitary via QR with phase correction.
pub fn random_unitary_with(n: usize, rng: &mut impl Rng) -> Operator {
    let qr = ginibre(n, n, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        let mut col = u.column_mut(k);
        col *= phase;
    }
    Operator::new(u).unwrap()
}

/// Kraus channel from `k` Ginibre matrices normalized by `(Σ G†G)^{-1/2}`.
pub fn random_kraus_with(n: usize, k: usize, rng: &mut impl Rng) -> Vec<Operator> {
    let gs: Vec<CMatrix> = (0..k).map(|_| ginibre(n, n, rng)).collect();
    let mut s = CMatrix::zeros(n, n);
    for g in &gs {
        s += g.adjoint() * g;
    }
    let (vals, vecs) = linalg::hermitian_eigen(&s);
    let inv_sqrt: Vec<f64> = vals.iter().map(|v| 1.0 / v.sqrt()).collect();
    let s_inv_sqrt = linalg::from_eigen(&inv_sqrt, &vecs);
    gs.iter()
        .map(|g| Operator::new(g * &s_inv_sqrt).unwrap())
        .collect()
}

pub fn random_kraus(n: usize, k: usize, seed: u64) -> ProcessSpec {
    discrete(random_kraus_with(n, k, &mut rng(seed)))
}

pub fn random_lindbladian(n: usize, jumps: usize, seed: u64) -> ProcessSpec {
    let mut r = rng(seed);
    let h = random_hermitian(n, &mut r);
    let ls = (0..jumps)
        .map(|_| Operator::new(ginibre(n, n, &mut r) * c(0.5)).unwrap())
        .collect();
    continuous(h, ls)
}

/// Full-rank random state from a square Ginibre matrix.
pub fn random_state_with(n: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(n, n, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    validate_density(&Operator::new(m / c(tr)).unwrap(), &Tolerances::default()).unwrap()
}

pub fn random_state(n: usize, seed: u64) -> DensityMatrix {
    random_state_with(n, &mut rng(seed))
}

/// Structured families of random processes with non-trivial asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Unstructured; generically a unique full-rank fixed point.
    Generic,
    /// Two invariant blocks, each with its own stationary state.
    BlockDiagonal,
    /// Random phases with noise on the last level only; the other levels
    /// carry oscillating coherences at incommensurate frequencies.
    DecoherenceFree,
    /// A random unitary on all but the last level, which decays into it.
    /// Rank-deficient T-projector and a time-dependent T-trajectory.
    TransientIntoUnitary,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Generic,
        Family::BlockDiagonal,
        Family::DecoherenceFree,
        Family::TransientIntoUnitary,
    ];
}

fn embed_block(n: usize, offset: usize, block: &CMatrix) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    let k = block.nrows();
    m.view_mut((offset, offset), (k, k)).copy_from(block);
    m
}

fn random_unit_vector(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let g = ginibre(n, 1, rng);
    let norm = g.norm();
    g.iter().map(|z| z / norm).collect()
}

pub fn random_discrete(family: Family, n: usize, seed: u64) -> ProcessSpec {
    assert!(n >= 2);
    let mut r = rng(seed);
    match family {
        Family::Generic => discrete(random_kraus_with(n, 2, &mut r)),
        Family::BlockDiagonal => {
            let na = n / 2;
            let nb = n - na;
            let ka = random_kraus_with(na, 2, &mut r);
            let kb = random_kraus_with(nb, 2, &mut r);
            let kraus = ka
                .iter()
                .zip(&kb)
                .map(|(a, b)| {
                    Operator::new(embed_block(n, 0, a.matrix()) + embed_block(n, na, b.matrix())).unwrap()
                })
                .collect();
            discrete(kraus)
        }
        Family::DecoherenceFree => {
            let p: f64 = r.random_range(0.2..0.8);
            let phases: Vec<C64> = (0..n)
                .map(|_| C64::from_polar(1.0, r.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
                .collect();
            let u = CMatrix::from_fn(n, n, |i, j| if i == j { phases[i] } else { c(0.0) });
            let mut flip = CMatrix::identity(n, n);
            flip[(n - 1, n - 1)] = c(-1.0);
            discrete(vec![
                Operator::new(&u * c((1.0 - p).sqrt())).unwrap(),
                Operator::new(&u * flip * c(p.sqrt())).unwrap(),
            ])
        }
        Family::TransientIntoUnitary => {
            let q: f64 = r.random_range(0.3..0.7);
            let ua = random_unitary_with(n - 1, &mut r);
            let mut k0 = embed_block(n, 0, ua.matrix());
            k0[(n - 1, n - 1)] = c((1.0 - q).sqrt());
            let v = random_unit_vector(n - 1, &mut r);
            let mut k1 = CMatrix::zeros(n, n);
            for (i, vi) in v.iter().enumerate() {
                k1[(i, n - 1)] = vi * q.sqrt();
            }
            discrete(vec![Operator::new(k0).unwrap(), Operator::new(k1).unwrap()])
        }
    }
}

pub fn random_continuous(family: Family, n: usize, seed: u64) -> ProcessSpec {
    assert!(n >= 2);
    let mut r = rng(seed);
    match family {
        Family::Generic => {
            let h = random_hermitian(n, &mut r);
            let ls = (0..2)
                .map(|_| Operator::new(ginibre(n, n, &mut r) * c(0.5)).unwrap())
                .collect();
            continuous(h, ls)
        }
        Family::BlockDiagonal => {
            let na = n / 2;
            let nb = n - na;
            let h = embed_block(n, 0, random_hermitian(na, &mut r).matrix())
                + embed_block(n, na, random_hermitian(nb, &mut r).matrix());
            let ls = (0..2)
                .map(|_| {
                    let a = ginibre(na, na, &mut r) * c(0.5);
                    let b = ginibre(nb, nb, &mut r) * c(0.5);
                    Operator::new(embed_block(n, 0, &a) + embed_block(n, na, &b)).unwrap()
                })
                .collect();
            continuous(Operator::new(h).unwrap(), ls)
        }
        Family::DecoherenceFree => {
            let energies: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
            let h = Operator::diag(&energies);
            let ls = (0..2)
                .map(|_| {
                    let shared: f64 = r.random_range(-1.0..1.0);
                    let last: f64 = shared + r.random_range(0.5..1.5);
                    let mut d = vec![shared; n];
                    d[n - 1] = last;
                    Operator::diag(&d)
                })
                .collect();
            continuous(h, ls)
        }
        Family::TransientIntoUnitary => {
            let mut h = embed_block(n, 0, random_hermitian(n - 1, &mut r).matrix());
            h[(n - 1, n - 1)] = c(r.random_range(-1.0..1.0));
            let rate: f64 = r.random_range(0.5..1.5);
            let v = random_unit_vector(n - 1, &mut r);
            let mut l = CMatrix::zeros(n, n);
            for (i, vi) in v.iter().enumerate() {
                l[(i, n - 1)] = vi * rate.sqrt();
            }
            continuous(Operator::new(h).unwrap(), vec![Operator::new(l).unwrap()])
        }
    }
}
