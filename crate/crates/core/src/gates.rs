//! Gate families and seeded random ensembles.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, hs_norm, identity, kron, nearest_unitary, realign, unitarity_deficit,
    BipartiteGate, ComplexMatrix, C64, UNITARY_TOL,
};

/// Tolerance on `|H_jk| = 1/√d` when validating complex Hadamard matrices.
pub const CHM_TOL: f64 = 1e-8;
pub const DUAL_TOL: f64 = 1e-10;
pub const DUAL_MAX_ITER: usize = 10_000;
pub const DUAL_RESEEDS: usize = 8;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Pauli matrices σ₁, σ₂, σ₃.
pub fn pauli(k: usize) -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    let entries = match k {
        1 => [zero(), one(), one(), zero()],
        2 => [zero(), -i, i, zero()],
        3 => [one(), zero(), zero(), -one()],
        _ => panic!("pauli index must be 1, 2 or 3"),
    };
    ComplexMatrix::from_row_slice(2, 2, &entries)
}

/// Nonlocal parameters `(c₁, c₂, c₃)` of a two-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl CanonicalParams {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Self {
        Self { c1, c2, c3 }
    }

    /// Map into the Weyl chamber `π/4 ≥ c₁ ≥ c₂ ≥ c₃ ≥ 0`.
    ///
    /// Uses shifts of any `c_k` by `π/2`, permutations and paired sign flips,
    /// all local-unitary equivalences. A leftover single sign on `c₃` is
    /// dropped: the mirror gate is the complex conjugate, which shares every
    /// invariant computed in this crate.
    pub fn canonicalize(self) -> Self {
        let half = PI / 2.0;
        let fold = |c: f64| {
            let r = c.rem_euclid(half);
            if r > PI / 4.0 {
                (r - half).abs()
            } else {
                r
            }
        };
        let mut c = [fold(self.c1), fold(self.c2), fold(self.c3)];
        c.sort_by(|a, b| b.total_cmp(a));
        Self::new(c[0], c[1], c[2])
    }
}

/// `exp[i(c₁σ₁⊗σ₁ + c₂σ₂⊗σ₂ + c₃σ₃⊗σ₃)]` as a product of commuting factors.
pub fn canonical_two_qubit(p: CanonicalParams) -> BipartiteGate {
    let mut u = identity(4);
    for (k, c) in [(1, p.c1), (2, p.c2), (3, p.c3)] {
        let ss = kron(&pauli(k), &pauli(k));
        let factor = identity(4) * C64::new(c.cos(), 0.0) + ss * C64::new(0.0, c.sin());
        u = factor * u;
    }
    BipartiteGate::new(u).expect("product of unitary exponentials")
}

/// SWAP on two `d`-level systems, `S|ij⟩ = |ji⟩`.
pub fn swap(d: usize) -> BipartiteGate {
    let n = d * d;
    let m = ComplexMatrix::from_fn(n, n, |r, c| {
        if r == (c % d) * d + c / d {
            one()
        } else {
            zero()
        }
    });
    BipartiteGate::new(m).expect("permutation matrix")
}

/// `S^α = cos(πα/2) I + i sin(πα/2) S` for `α ∈ [0, 1]`.
pub fn frac_swap(d: usize, alpha: f64) -> Result<BipartiteGate> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("swap power {alpha} outside [0, 1]")));
    }
    let theta = PI * alpha / 2.0;
    let m = identity(d * d) * C64::new(theta.cos(), 0.0)
        + swap(d).into_matrix() * C64::new(0.0, theta.sin());
    BipartiteGate::new(m)
}

/// Discrete Fourier matrix `e^{2πi jk/d}/√d`.
pub fn fourier(d: usize) -> ComplexMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    ComplexMatrix::from_fn(d, d, |j, k| {
        C64::from_polar(norm, 2.0 * PI * (j * k) as f64 / d as f64)
    })
}

/// Diagonal gate `Σ e^{iφ_jk}|jk⟩⟨jk|` carrying the phases of a complex
/// Hadamard matrix.
pub fn chm_diagonal(h: &ComplexMatrix) -> Result<BipartiteGate> {
    let d = h.nrows();
    if h.ncols() != d || d < 2 {
        return Err(Error::Shape(format!(
            "Hadamard matrix must be square with d >= 2, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let modulus = 1.0 / (d as f64).sqrt();
    let worst = h
        .iter()
        .map(|z| (z.norm() - modulus).abs())
        .fold(0.0, f64::max);
    if worst > CHM_TOL {
        return Err(Error::Domain(format!(
            "not a complex Hadamard matrix: entry modulus off by {worst:.3e}"
        )));
    }
    let deficit = unitarity_deficit(h);
    if deficit > CHM_TOL {
        return Err(Error::Domain(format!(
            "not a complex Hadamard matrix: unitarity deficit {deficit:.3e}"
        )));
    }
    let phases = DVector::from_fn(d * d, |idx, _| {
        let z = h[(idx / d, idx % d)];
        z / z.norm()
    });
    BipartiteGate::new(ComplexMatrix::from_diagonal(&phases))
}

fn phase_diagonal(phases: &[f64]) -> ComplexMatrix {
    let diag = DVector::from_iterator(
        phases.len(),
        phases.iter().map(|&p| C64::from_polar(1.0, p)),
    );
    ComplexMatrix::from_diagonal(&diag)
}

/// `S·diag(e^{iφ})`, a self-dual gate.
pub fn sd_diagonal(d: usize, phases: &[f64]) -> Result<BipartiteGate> {
    if phases.len() != d * d {
        return Err(Error::Shape(format!(
            "expected {} phases for d = {d}, got {}",
            d * d,
            phases.len()
        )));
    }
    BipartiteGate::new(swap(d).into_matrix() * phase_diagonal(phases))
}

/// `I_{d²−1} ⊕ (−1)`; the CZ gate at `d = 2`.
pub fn u_cz(d: usize) -> Result<BipartiteGate> {
    if d < 2 {
        return Err(Error::Domain(format!("local dimension {d} < 2")));
    }
    let mut m = identity(d * d);
    m[(d * d - 1, d * d - 1)] = -one();
    BipartiteGate::new(m)
}

/// `Σ_i |i⟩⟨i| ⊗ u_i`: block `i` occupies rows and columns `i·d .. (i+1)·d`.
pub fn block_diagonal(blocks: &[ComplexMatrix]) -> Result<BipartiteGate> {
    let d = blocks.len();
    if d < 2 {
        return Err(Error::Domain(format!("need d >= 2 blocks, got {d}")));
    }
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for (i, b) in blocks.iter().enumerate() {
        if b.nrows() != d || b.ncols() != d {
            return Err(Error::Shape(format!(
                "block {i} is {}x{}, expected {d}x{d}",
                b.nrows(),
                b.ncols()
            )));
        }
        let deficit = unitarity_deficit(b);
        if deficit > UNITARY_TOL {
            return Err(Error::Domain(format!(
                "block {i} is not unitary (deficit {deficit:.3e})"
            )));
        }
        m.view_mut((i * d, i * d), (d, d)).copy_from(b);
    }
    BipartiteGate::new(m)
}

/// Haar-random unitary from `rng`: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn random_cue_with(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            one()
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random `n × n` unitary, deterministic in `seed`.
pub fn random_cue(n: usize, seed: u64) -> ComplexMatrix {
    random_cue_with(n, &mut seeded_rng(seed))
}

/// Diagonal unitary with i.i.d. uniform phases on `[0, 2π)`.
pub fn random_diagonal(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = seeded_rng(seed);
    let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    phase_diagonal(&phases)
}

pub fn random_phases(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
}

/// Dual-unitary gate by alternating polar projections of `U` and `U^R`,
/// started from a CUE sample.
pub fn random_dual(d: usize, seed: u64, max_iter: usize, tol: f64) -> Result<BipartiteGate> {
    let mut u = random_cue(d * d, seed);
    let mut deficit = f64::INFINITY;
    for _ in 0..max_iter {
        let r = nearest_unitary(&realign(&u)?)?;
        u = nearest_unitary(&realign(&r)?)?;
        deficit = unitarity_deficit(&u).max(unitarity_deficit(&realign(&u)?));
        if deficit < tol {
            return BipartiteGate::new(u);
        }
    }
    Err(Error::NotConverged {
        what: "dual-unitary projection",
        iterations: max_iter,
        residual: deficit,
    })
}

/// [`random_dual`] with default limits, redrawing the CUE start up to
/// [`DUAL_RESEEDS`] times when a projection run stalls.
pub fn random_dual_reseeding(d: usize, seed: u64) -> Result<BipartiteGate> {
    let mut last = None;
    for k in 0..DUAL_RESEEDS as u64 {
        match random_dual(
            d,
            seed.wrapping_add(k.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            DUAL_MAX_ITER,
            DUAL_TOL,
        ) {
            Err(e @ Error::NotConverged { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Random Hermitian matrix with unit Hilbert–Schmidt norm.
pub fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = seeded_rng(seed);
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let norm = hs_norm(&h);
    h / C64::new(norm, 0.0)
}

/// `exp(iεH)` for Hermitian `H` via its eigendecomposition.
pub fn expi_hermitian(h: &ComplexMatrix, eps: f64) -> Result<ComplexMatrix> {
    let (vals, q) = hermitian_eigen(h)?;
    let phases = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&lam| C64::from_polar(1.0, eps * lam)),
    );
    Ok(&q * ComplexMatrix::from_diagonal(&phases) * q.adjoint())
}

/// `U_dual · exp(iεH)` with a seeded unit-norm Hermitian `H`.
pub fn near_dual(dual: &BipartiteGate, eps: f64, seed: u64) -> Result<BipartiteGate> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::Domain(format!(
            "perturbation strength {eps} must be >= 0"
        )));
    }
    if eps == 0.0 {
        return Ok(dual.clone());
    }
    let n = dual.matrix().nrows();
    let h = random_hermitian(n, seed);
    BipartiteGate::new(dual.matrix() * expi_hermitian(&h, eps)?)
}

/// A parametric gate family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    Identity,
    #[serde(rename = "canonical2q")]
    Canonical2q(CanonicalParams),
    Swap,
    FracSwap {
        alpha: f64,
    },
    /// Uses the Fourier matrix.
    ChmDiagonal,
    /// Phases drawn from the seed when absent.
    SdDiagonal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phases: Option<Vec<f64>>,
    },
    /// Blocks drawn from CUE with the seed.
    BlockDiagonal,
    UCz,
    CueRandom,
    DiagonalRandom,
    DualRandom,
    NearDual {
        eps: f64,
    },
}

/// Declarative handle for a gate: `{"family": tag, "d": int, "params": {...}, "seed": int}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateFamilySpec {
    #[serde(flatten)]
    pub family: Family,
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GateFamilySpec {
    pub fn new(family: Family, d: usize, seed: u64) -> Self {
        Self { family, d, seed }
    }

    pub fn build(&self) -> Result<BipartiteGate> {
        let d = self.d;
        if d < 2 {
            return Err(Error::Domain(format!("local dimension {d} < 2")));
        }
        let seed = self.seed;
        match &self.family {
            Family::Identity => BipartiteGate::new(identity(d * d)),
            Family::Canonical2q(p) => {
                if d != 2 {
                    return Err(Error::Domain("canonical2q requires d = 2".into()));
                }
                Ok(canonical_two_qubit(*p))
            }
            Family::Swap => Ok(swap(d)),
            Family::FracSwap { alpha } => frac_swap(d, *alpha),
            Family::ChmDiagonal => chm_diagonal(&fourier(d)),
            Family::SdDiagonal { phases } => match phases {
                Some(p) => sd_diagonal(d, p),
                None => sd_diagonal(d, &random_phases(d * d, seed)),
            },
            Family::BlockDiagonal => {
                let mut rng = seeded_rng(seed);
                let blocks: Vec<_> = (0..d).map(|_| random_cue_with(d, &mut rng)).collect();
                block_diagonal(&blocks)
            }
            Family::UCz => u_cz(d),
            Family::CueRandom => BipartiteGate::new(random_cue(d * d, seed)),
            Family::DiagonalRandom => BipartiteGate::new(random_diagonal(d * d, seed)),
            Family::DualRandom => random_dual_reseeding(d, seed),
            Family::NearDual { eps } => {
                let dual = random_dual_reseeding(d, seed)?;
                near_dual(&dual, *eps, seed.wrapping_add(0x9e37_79b9_7f4a_7c15))
            }
        }
    }
}
