//! Dense complex matrix kernel.
//!
//! Basis convention, fixed across the crate: the two-party basis state `|ij⟩`
//! sits at row `i * d + j`, with `i` indexing party A and `j` party B.
//! Vectorization is row-major, `|u⟩ = Σ_ij u_ij |ij⟩`, so `⟨u|u⟩ = d` for a
//! `d × d` unitary.
//!
//! Polar factors, trace norms and the operator Schmidt decomposition all go
//! through one SVD kernel.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Default Hilbert–Schmidt tolerance on `‖UU† − I‖`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Smallest singular value below which a polar factor is reported non-unique.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    A,
    B,
}

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Returns `d` if `n = d²` for an integer `d ≥ 2`.
pub fn local_dim(n: usize) -> Result<usize> {
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || d < 2 {
        return Err(Error::Shape(format!(
            "dimension {n} is not the square of a local dimension d >= 2"
        )));
    }
    Ok(d)
}

fn require_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Realignment `⟨ij|M^R|kl⟩ = ⟨ik|M|jl⟩`.
///
/// A pure permutation of entries, so it preserves the Hilbert–Schmidt norm and
/// is its own inverse. `(a ⊗ b)^R = |a⟩⟨b*|`.
pub fn realign(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = require_square(m)?;
    let d = local_dim(n)?;
    Ok(ComplexMatrix::from_fn(n, n, |row, col| {
        let (i, j) = (row / d, row % d);
        let (k, l) = (col / d, col % d);
        m[(i * d + k, j * d + l)]
    }))
}

pub fn vectorize(u: &ComplexMatrix) -> Result<ComplexVector> {
    let d = require_square(u)?;
    Ok(ComplexVector::from_fn(d * d, |idx, _| {
        u[(idx / d, idx % d)]
    }))
}

pub fn devectorize(v: &ComplexVector, d: usize) -> Result<ComplexMatrix> {
    if v.len() != d * d {
        return Err(Error::Shape(format!(
            "vector of length {} cannot be reshaped to {d}x{d}",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(d, d, |i, j| v[i * d + j]))
}

/// Partial trace of a `d² × d²` matrix over the named party.
pub fn partial_trace(m: &ComplexMatrix, party: Party) -> Result<ComplexMatrix> {
    let d = local_dim(require_square(m)?)?;
    partial_trace_dims(m, (d, d), party)
}

/// Partial trace for an unequal bipartition `dims = (dim_a, dim_b)`.
pub fn partial_trace_dims(
    m: &ComplexMatrix,
    dims: (usize, usize),
    party: Party,
) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    let n = require_square(m)?;
    if da * db != n {
        return Err(Error::Shape(format!(
            "bipartition {da}x{db} does not match matrix dimension {n}"
        )));
    }
    Ok(match party {
        Party::B => ComplexMatrix::from_fn(da, da, |i, k| {
            (0..db).map(|j| m[(i * db + j, k * db + j)]).sum()
        }),
        Party::A => ComplexMatrix::from_fn(db, db, |j, l| {
            (0..da).map(|i| m[(i * db + j, i * db + l)]).sum()
        }),
    })
}

/// Unitary factor of a polar decomposition, with the data needed to judge it.
#[derive(Clone, Debug)]
pub struct PolarFactor {
    pub unitary: ComplexMatrix,
    /// Sum of singular values, `max_w Re tr(w† A) = ‖A‖₁`.
    pub trace_norm: f64,
    pub min_singular: f64,
    /// Set when the smallest singular value is below [`SINGULAR_TOL`]; the
    /// returned unitary is then one of several minimizers.
    pub degenerate: bool,
}

/// Polar projection `P[A] = W X†` from the SVD `A = W Σ X†`.
pub fn polar(a: &ComplexMatrix) -> Result<PolarFactor> {
    require_square(a)?;
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let svd = svd(a)?;
    let min_singular = svd.s.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PolarFactor {
        unitary: svd.u * svd.v_t,
        trace_norm: svd.s.iter().sum(),
        min_singular,
        degenerate: min_singular < SINGULAR_TOL,
    })
}

/// The unitary closest to `a` in Hilbert–Schmidt distance.
pub fn nearest_unitary(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    polar(a).map(|p| p.unitary)
}

/// Full SVD `A = U diag(s) V†`, singular values in nonincreasing order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v_t: ComplexMatrix,
}

fn to_faer(a: &ComplexMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn no_convergence(what: &'static str) -> Error {
    Error::NotConverged {
        what,
        iterations: 0,
        residual: f64::NAN,
    }
}

// nalgebra's complex SVD loses accuracy when singular vectors are requested
// and two singular values nearly coincide; faer's does not.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let f = to_faer(a)
        .svd()
        .map_err(|_| no_convergence("singular value decomposition"))?;
    let s = f.S().column_vector().iter().map(|z| z.re).collect();
    Ok(Svd {
        u: from_faer(f.U()),
        s,
        v_t: from_faer(f.V()).adjoint(),
    })
}

/// Eigenvalues (nondecreasing) and eigenvectors of a Hermitian matrix; only
/// the lower triangle is read.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    require_square(a)?;
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let f = to_faer(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| no_convergence("Hermitian eigendecomposition"))?;
    let vals = f.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, from_faer(f.U())))
}

/// Nonincreasing; NaN-filled when the input is not finite.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    to_faer(a)
        .singular_values()
        .unwrap_or_else(|_| vec![f64::NAN; a.nrows().min(a.ncols())])
}

/// `‖A‖₁ = tr √(AA†)`.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    singular_values(a).iter().sum()
}

/// `‖A‖ = √tr(AA†)`.
pub fn hs_norm(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `tr(A†B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `‖MM† − I‖` in Hilbert–Schmidt norm.
pub fn unitarity_deficit(m: &ComplexMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    hs_norm(&(m * m.adjoint() - identity(n)))
}

/// Hilbert–Schmidt distance between `u` and `w` after the best global phase
/// has been applied to `w`.
pub fn phase_distance(u: &ComplexMatrix, w: &ComplexMatrix) -> f64 {
    let overlap = hs_inner(w, u);
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    hs_norm(&(u - w * phase))
}

/// A `d² × d²` unitary acting on two `d`-level systems.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteGate {
    d: usize,
    matrix: ComplexMatrix,
}

impl BipartiteGate {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARY_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let n = require_square(&matrix)?;
        let d = local_dim(n)?;
        if !is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        let deficit = unitarity_deficit(&matrix);
        if deficit > tol {
            return Err(Error::NotUnitary { deficit, tol });
        }
        Ok(Self { d, matrix })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn realigned(&self) -> ComplexMatrix {
        realign(&self.matrix).expect("gate dimension is a perfect square")
    }

    /// Unitarity deficit of `U^R`; zero exactly for dual-unitary gates.
    pub fn duality_deficit(&self) -> f64 {
        unitarity_deficit(&self.realigned())
    }
}

/// Normalized two-party state `|u⟩/√d` built from a `d × d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntangledState {
    d: usize,
    amplitudes: ComplexVector,
}

impl MaxEntangledState {
    /// `vectorize(u)/√d`. Maximally entangled when `u` is unitary.
    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self> {
        let d = require_square(u)?;
        let amplitudes = vectorize(u)? / C64::new((d as f64).sqrt(), 0.0);
        Ok(Self { d, amplitudes })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// Reduced density matrix on one party.
    pub fn reduced_density(&self, party: Party) -> ComplexMatrix {
        let m = devectorize(&self.amplitudes, self.d).expect("length is d²");
        match party {
            Party::A => &m * m.adjoint(),
            Party::B => (m.adjoint() * &m).transpose(),
        }
    }

    /// Largest deviation (HS norm) of either reduced density from `I/d`.
    pub fn entanglement_deficit(&self) -> f64 {
        let target = identity(self.d) / C64::new(self.d as f64, 0.0);
        [Party::A, Party::B]
            .into_iter()
            .map(|p| hs_norm(&(self.reduced_density(p) - &target)))
            .fold(0.0, f64::max)
    }

    pub fn is_maximally_entangled(&self, tol: f64) -> bool {
        self.entanglement_deficit() <= tol
    }
}
