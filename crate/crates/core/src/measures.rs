//! Operator Schmidt decomposition and the invariants built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::swap;
use crate::kd::{kd_alternating_dims, KdOptions};
use crate::linalg::{
    devectorize, hermitian_eigen, hs_norm, identity, kron, svd, trace_norm, BipartiteGate,
    ComplexMatrix, ComplexVector, Svd, C64,
};

/// Eigenvalues of a density matrix above `-NEG_EIG_TOL` are clamped to zero.
pub const NEG_EIG_TOL: f64 = 1e-10;
/// Allowed deviation of `tr ρ` from one and of `ρ` from Hermitian.
pub const DENSITY_TOL: f64 = 1e-8;

/// `U = Σ √λ_i m_i^A ⊗ m_i^B` with `tr(m_i m_j†) = d δ_ij`, sorted by `λ`.
///
/// When singular values are degenerate (dual gates, CHM diagonals) the bases
/// are whatever the SVD returned; nothing here promises unitary `m_i`.
#[derive(Clone, Debug)]
pub struct SchmidtData {
    pub d: usize,
    pub lambdas: Vec<f64>,
    pub basis_a: Vec<ComplexMatrix>,
    pub basis_b: Vec<ComplexMatrix>,
}

impl SchmidtData {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.d * self.d;
        let mut u = ComplexMatrix::zeros(n, n);
        for ((l, a), b) in self.lambdas.iter().zip(&self.basis_a).zip(&self.basis_b) {
            u += kron(a, b) * C64::new(l.sqrt(), 0.0);
        }
        u
    }

    pub fn schmidt_rank(&self, tol: f64) -> usize {
        self.lambdas.iter().filter(|&&l| l > tol).count()
    }
}

/// Operator Schmidt decomposition from the SVD of the realigned gate.
///
/// `U^R = Σ s_i |a_i⟩⟨b_i|` gives `λ_i = s_i²/d²`, `m_i^A = √d a_i` and
/// `m_i^B = √d b_i*`.
pub fn operator_schmidt(gate: &BipartiteGate) -> SchmidtData {
    let d = gate.d();
    // a unitary gate is finite, so the decomposition cannot fail
    let Svd {
        u,
        s: svals,
        v_t: vt,
    } = svd(&gate.realigned()).expect("finite realigned gate");
    let scale = C64::new((d as f64).sqrt(), 0.0);
    let dd = (d * d) as f64;
    let mut lambdas = Vec::with_capacity(d * d);
    let mut basis_a = Vec::with_capacity(d * d);
    let mut basis_b = Vec::with_capacity(d * d);
    for (i, &s) in svals.iter().enumerate() {
        lambdas.push(s * s / dd);
        let a: ComplexVector = u.column(i).into_owned();
        let b_conj = ComplexVector::from_iterator(d * d, vt.row(i).iter().copied());
        basis_a.push(devectorize(&a, d).expect("length d²") * scale);
        basis_b.push(devectorize(&b_conj, d).expect("length d²") * scale);
    }
    SchmidtData {
        d,
        lambdas,
        basis_a,
        basis_b,
    }
}

/// Lower bound `K_D*(U)` and the triangle-inequality upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub kd_star: f64,
    pub kd_upper: f64,
    pub lambda1: f64,
    pub trace_norm_m1a: f64,
    pub trace_norm_m1b: f64,
}

/// `√(2d² − 2d)`, the value attained by dual-unitary gates.
pub fn dual_distance(d: usize) -> f64 {
    let d = d as f64;
    (2.0 * d * d - 2.0 * d).sqrt()
}

pub fn kd_star_from_lambda1(d: usize, lambda1: f64) -> f64 {
    let dd = (d * d) as f64;
    (2.0 * dd - 2.0 * dd * lambda1.sqrt()).max(0.0).sqrt()
}

pub fn bounds_from_schmidt(s: &SchmidtData) -> BoundsReport {
    let dd = (s.d * s.d) as f64;
    let lambda1 = s.lambdas[0];
    let kd_star = kd_star_from_lambda1(s.d, lambda1);
    let na = trace_norm(&s.basis_a[0]);
    let nb = trace_norm(&s.basis_b[0]);
    let gap = (2.0 * dd - 2.0 * na * nb).max(0.0).sqrt();
    BoundsReport {
        kd_star,
        kd_upper: kd_star + gap,
        lambda1,
        trace_norm_m1a: na,
        trace_norm_m1b: nb,
    }
}

pub fn kd_bounds(gate: &BipartiteGate) -> BoundsReport {
    bounds_from_schmidt(&operator_schmidt(gate))
}

fn entanglement_of(lambdas: &[f64]) -> f64 {
    1.0 - lambdas.iter().map(|l| l * l).sum::<f64>()
}

/// Operator entanglement `E(U) = 1 − Σ λ_i²`.
pub fn operator_entanglement(gate: &BipartiteGate) -> f64 {
    entanglement_of(&operator_schmidt(gate).lambdas)
}

fn entanglement_of_matrix(m: ComplexMatrix) -> f64 {
    let g = BipartiteGate::with_tolerance(m, 1e-8).expect("product of unitaries");
    operator_entanglement(&g)
}

/// Entangling power `(d/(d+1))² [E(U) + E(US) − E(S)]`: the mean linear
/// entropy produced from Haar-random product inputs.
pub fn entangling_power(gate: &BipartiteGate) -> f64 {
    let d = gate.d();
    let s = swap(d);
    let e_s = operator_entanglement(&s);
    let e_us = entanglement_of_matrix(gate.matrix() * s.matrix());
    let pref = (d as f64 / (d as f64 + 1.0)).powi(2);
    pref * (operator_entanglement(gate) + e_us - e_s)
}

/// Gate typicality `[E(U) − E(US) + E(S)] / (2 E(S))`, in `[0, 1]`; zero on
/// local gates and one on SWAP.
pub fn gate_typicality(gate: &BipartiteGate) -> f64 {
    let s = swap(gate.d());
    let e_s = operator_entanglement(&s);
    let e_us = entanglement_of_matrix(gate.matrix() * s.matrix());
    (operator_entanglement(gate) - e_us + e_s) / (2.0 * e_s)
}

fn density_eigenvalues(rho: &ComplexMatrix) -> Result<Vec<f64>> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::Shape("density matrix must be square".into()));
    }
    let herm = hs_norm(&(rho - rho.adjoint()));
    if herm > DENSITY_TOL {
        return Err(Error::Domain(format!(
            "density matrix is not Hermitian (deviation {herm:.3e})"
        )));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > DENSITY_TOL {
        return Err(Error::Domain(format!("density matrix has trace {tr}")));
    }
    let (vals, _) = hermitian_eigen(rho)?;
    let mut out = Vec::with_capacity(rho.nrows());
    for &e in vals.iter() {
        if e < -NEG_EIG_TOL {
            return Err(Error::Domain(format!(
                "density matrix has eigenvalue {e:.3e}"
            )));
        }
        out.push(e.max(0.0));
    }
    Ok(out)
}

/// `1 − tr ρ²`.
pub fn linear_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let eig = density_eigenvalues(rho)?;
    Ok(1.0 - eig.iter().map(|e| e * e).sum::<f64>())
}

/// Rényi entropy of order 1/2, `2 log tr √ρ`.
pub fn renyi_half(rho: &ComplexMatrix) -> Result<f64> {
    let eig = density_eigenvalues(rho)?;
    Ok(2.0 * eig.iter().map(|e| e.sqrt()).sum::<f64>().ln())
}

/// Both entropies from one eigendecomposition.
pub fn entropies(rho: &ComplexMatrix) -> Result<(f64, f64)> {
    let eig = density_eigenvalues(rho)?;
    let lin = 1.0 - eig.iter().map(|e| e * e).sum::<f64>();
    let renyi = 2.0 * eig.iter().map(|e| e.sqrt()).sum::<f64>().ln();
    Ok((lin, renyi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub kd_sq: f64,
    pub kd_sq_embedded: f64,
    /// `None` when both distances vanish (product gates).
    pub ratio: Option<f64>,
}

/// Compares `K_D²(U ⊗ I_{d'})` across the cut A | (B ⊗ ancilla) with `K_D²(U)`.
pub fn stability_check(
    gate: &BipartiteGate,
    ancilla_dim: usize,
    opts: &KdOptions,
) -> Result<StabilityReport> {
    if ancilla_dim < 2 {
        return Err(Error::Domain(format!(
            "ancilla dimension {ancilla_dim} < 2"
        )));
    }
    let d = gate.d();
    let base = kd_alternating_dims(gate.matrix(), (d, d), opts)?;
    let embedded_matrix = kron(gate.matrix(), &identity(ancilla_dim));
    let embedded = kd_alternating_dims(&embedded_matrix, (d, d * ancilla_dim), opts)?;
    let kd_sq = base.kd * base.kd;
    let kd_sq_embedded = embedded.kd * embedded.kd;
    let ratio = if kd_sq < 1e-10 && kd_sq_embedded < 1e-10 {
        None
    } else {
        Some(kd_sq_embedded / kd_sq)
    };
    Ok(StabilityReport {
        kd_sq,
        kd_sq_embedded,
        ratio,
    })
}
