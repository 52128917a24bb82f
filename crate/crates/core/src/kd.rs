//! Distance from a bipartite unitary to the nearest local product unitary.
//!
//! `K_D²(U) = 2N − 2 max |tr(U†(u_A ⊗ u_B))|` with `N = d_A d_B`. The
//! maximization alternates polar projections of the two partial traces,
//! `u_A ← P[tr_B U(I ⊗ u_B†)]` and `u_B ← P[tr_A U(u_A† ⊗ I)]`; each half
//! step is the exact maximizer over one factor, so the overlap never drops.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{random_cue_with, seeded_rng, Family, GateFamilySpec};
use crate::linalg::{
    hs_inner, identity, kron, partial_trace_dims, polar, BipartiteGate, ComplexMatrix, Party, C64,
    SINGULAR_TOL,
};
use crate::measures::{
    bounds_from_schmidt, dual_distance, kd_star_from_lambda1, operator_schmidt, BoundsReport,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdOptions {
    /// Number of seeds. The first is the identity; for equal local dimensions
    /// the next are polar factors of the operator Schmidt terms on B, in
    /// decreasing weight; the rest are CUE draws.
    pub n_seeds: usize,
    /// Stop a seed run once a sweep improves the overlap by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Keep the overlap sequence of every seed run.
    pub record_history: bool,
}

impl Default for KdOptions {
    fn default() -> Self {
        Self {
            n_seeds: 8,
            tol: 1e-12,
            max_iter: 10_000,
            seed: 0x5eed,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub overlap: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Largest decrease between consecutive half steps.
    pub max_drop: f64,
    pub history: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KdResult {
    pub kd: f64,
    /// `max |tr(U†(u_A ⊗ u_B))|` over the seeds tried.
    pub overlap: f64,
    #[serde(skip)]
    pub u_a: ComplexMatrix,
    #[serde(skip)]
    pub u_b: ComplexMatrix,
    /// Sweeps taken by the winning seed.
    pub iterations: usize,
    pub seeds_tried: usize,
    pub converged: bool,
    /// Present for equal local dimensions.
    pub bounds: Option<BoundsReport>,
    /// Set when `kd` exceeds the dual-unitary value `√(2d² − 2d)` by more
    /// than 1e-6.
    pub exceeds_dual_max: bool,
    pub runs: Vec<SeedRun>,
}

impl KdResult {
    pub fn kd_sq(&self) -> f64 {
        self.kd * self.kd
    }
}

/// `tr(U†(u_A ⊗ u_B))`.
fn product_overlap(u: &ComplexMatrix, u_a: &ComplexMatrix, u_b: &ComplexMatrix) -> C64 {
    hs_inner(u, &kron(u_a, u_b))
}

struct Climb {
    run: SeedRun,
    u_a: ComplexMatrix,
    u_b: ComplexMatrix,
    degenerate: bool,
}

fn climb(
    u: &ComplexMatrix,
    dims: (usize, usize),
    mut u_b: ComplexMatrix,
    opts: &KdOptions,
) -> Result<Climb> {
    let (da, db) = dims;
    let id_a = identity(da);
    let id_b = identity(db);
    let mut u_a = id_a.clone();
    let mut prev = f64::NEG_INFINITY;
    let mut last_half = f64::NEG_INFINITY;
    let mut max_drop: f64 = 0.0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut overlap = 0.0;
    let note = |value: f64, history: &mut Vec<f64>, max_drop: &mut f64, last: &mut f64| {
        if last.is_finite() {
            *max_drop = max_drop.max(*last - value);
        }
        *last = value;
        if opts.record_history {
            history.push(value);
        }
    };
    while sweeps < opts.max_iter {
        sweeps += 1;
        let x_a = partial_trace_dims(&(u * kron(&id_a, &u_b.adjoint())), dims, Party::B)?;
        let pa = polar(&x_a)?;
        if pa.trace_norm < SINGULAR_TOL {
            return Ok(Climb {
                run: SeedRun {
                    overlap: 0.0,
                    sweeps,
                    converged: false,
                    max_drop,
                    history,
                },
                u_a,
                u_b,
                degenerate: true,
            });
        }
        u_a = pa.unitary;
        note(pa.trace_norm, &mut history, &mut max_drop, &mut last_half);

        let x_b = partial_trace_dims(&(u * kron(&u_a.adjoint(), &id_b)), dims, Party::A)?;
        let pb = polar(&x_b)?;
        u_b = pb.unitary;
        overlap = pb.trace_norm;
        note(overlap, &mut history, &mut max_drop, &mut last_half);

        if overlap - prev < opts.tol {
            converged = true;
            break;
        }
        prev = overlap;
    }
    debug_assert!(max_drop <= 1e-10, "overlap decreased by {max_drop:e}");
    Ok(Climb {
        run: SeedRun {
            overlap,
            sweeps,
            converged,
            max_drop,
            history,
        },
        u_a,
        u_b,
        degenerate: false,
    })
}

/// Alternating maximization over an arbitrary bipartition `dims = (d_A, d_B)`.
pub fn kd_alternating_dims(
    u: &ComplexMatrix,
    dims: (usize, usize),
    opts: &KdOptions,
) -> Result<KdResult> {
    let (da, db) = dims;
    if u.nrows() != da * db || u.ncols() != da * db {
        return Err(Error::Shape(format!(
            "{}x{} matrix does not fit bipartition {da}x{db}",
            u.nrows(),
            u.ncols()
        )));
    }
    if opts.n_seeds == 0 || opts.tol <= 0.0 {
        return Err(Error::Domain("need n_seeds >= 1 and tol > 0".into()));
    }
    let schmidt = if da == db {
        BipartiteGate::with_tolerance(u.clone(), 1e-8)
            .ok()
            .map(|g| operator_schmidt(&g))
    } else {
        None
    };
    // P[m_kᴮ] follows the gate under local dressing, unlike the identity
    let schmidt_seeds: Vec<ComplexMatrix> = schmidt
        .iter()
        .flat_map(|s| s.lambdas.iter().zip(&s.basis_b))
        .filter(|(&l, _)| l > SINGULAR_TOL)
        .filter_map(|(_, m)| polar(m).ok().map(|p| p.unitary))
        .collect();
    let mut rng = seeded_rng(opts.seed);
    let mut best: Option<Climb> = None;
    let mut runs = Vec::with_capacity(opts.n_seeds);
    let mut productive = 0;
    let mut reseeds = 0;
    while productive < opts.n_seeds {
        let start = match runs.len() {
            0 => identity(db),
            k if k <= schmidt_seeds.len() => schmidt_seeds[k - 1].clone(),
            _ => random_cue_with(db, &mut rng),
        };
        let c = climb(u, dims, start, opts)?;
        runs.push(c.run.clone());
        if c.degenerate {
            // zero partial trace; draw a replacement seed
            reseeds += 1;
            if reseeds > opts.n_seeds {
                break;
            }
            continue;
        }
        productive += 1;
        if best.as_ref().is_none_or(|b| c.run.overlap > b.run.overlap) {
            best = Some(c);
        }
    }
    let Some(best) = best else {
        return Err(Error::DegenerateLandscape(format!(
            "{} seeds on a {da}x{db} gate",
            runs.len()
        )));
    };
    let n = (da * db) as f64;
    let Climb {
        run, mut u_a, u_b, ..
    } = best;
    let t = product_overlap(u, &u_a, &u_b);
    if t.norm() > 0.0 {
        // rotate tr(U†(u_A ⊗ u_B)) onto the positive real axis
        u_a *= t.conj() / t.norm();
    }
    let kd = (2.0 * n - 2.0 * run.overlap).max(0.0).sqrt();
    let bounds = schmidt.as_ref().map(bounds_from_schmidt);
    let exceeds_dual_max = da == db && kd > dual_distance(da) + 1e-6;
    if exceeds_dual_max {
        warn!(
            "K_D = {kd} exceeds the dual-unitary value {}",
            dual_distance(da)
        );
    }
    let records = if opts.record_history {
        runs
    } else {
        runs.into_iter()
            .map(|r| SeedRun {
                history: Vec::new(),
                ..r
            })
            .collect()
    };
    Ok(KdResult {
        kd,
        overlap: run.overlap,
        u_a,
        u_b,
        iterations: run.sweeps,
        seeds_tried: records.len(),
        converged: run.converged,
        bounds,
        exceeds_dual_max,
        runs: records,
    })
}

pub fn kd_alternating(gate: &BipartiteGate, opts: &KdOptions) -> Result<KdResult> {
    let d = gate.d();
    kd_alternating_dims(gate.matrix(), (d, d), opts)
}

/// `√(8 − 8√λ₁)`; exact for two qubits.
pub fn kd_two_qubit(gate: &BipartiteGate) -> Result<f64> {
    if gate.d() != 2 {
        return Err(Error::Domain(format!(
            "two-qubit formula needs d = 2, got {}",
            gate.d()
        )));
    }
    Ok(kd_star_from_lambda1(2, operator_schmidt(gate).lambdas[0]))
}

/// `K_D(S^α) = √(2d² − 2d √(d² cos²(πα/2) + sin²(πα/2)))`.
pub fn kd_frac_swap(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    let (s, c) = (PI * alpha / 2.0).sin_cos();
    (2.0 * d * d - 2.0 * d * (d * d * c * c + s * s).sqrt())
        .max(0.0)
        .sqrt()
}

/// `K_D(D_CHM) = √(2d² − 2d√d)`.
pub fn kd_chm(d: usize) -> f64 {
    let d = d as f64;
    (2.0 * d * d - 2.0 * d * d.sqrt()).sqrt()
}

pub fn kd_u_cz(d: usize) -> f64 {
    match d {
        2 => 2.0 * (2.0 - 2f64.sqrt()).sqrt(),
        3 => (18.0 - 10.0 * 2f64.sqrt()).sqrt(),
        _ => 2.0,
    }
}

/// Analytic `K_D` for the families where one is known.
pub fn kd_closed_form(spec: &GateFamilySpec) -> Option<f64> {
    let d = spec.d;
    match &spec.family {
        Family::Identity => Some(0.0),
        Family::Swap | Family::SdDiagonal { .. } | Family::DualRandom => Some(dual_distance(d)),
        Family::FracSwap { alpha } => Some(kd_frac_swap(d, *alpha)),
        Family::ChmDiagonal => Some(kd_chm(d)),
        Family::UCz => Some(kd_u_cz(d)),
        Family::Canonical2q(_) => spec.build().ok().and_then(|g| kd_two_qubit(&g).ok()),
        Family::BlockDiagonal
        | Family::CueRandom
        | Family::DiagonalRandom
        | Family::NearDual { .. } => None,
    }
}

/// `2d² − 2 Σ_i |tr(u_i† v)|`, an upper bound on `K_D²` of the block-diagonal
/// gate with blocks `u_i`, valid for every unitary probe `v`.
pub fn block_diag_overlap(blocks: &[ComplexMatrix], v: &ComplexMatrix) -> Result<f64> {
    let d = blocks.len();
    if v.nrows() != d || v.ncols() != d || blocks.iter().any(|b| b.shape() != (d, d)) {
        return Err(Error::Shape(format!(
            "expected {d} blocks and probe of size {d}x{d}"
        )));
    }
    let dd = (d * d) as f64;
    Ok(2.0 * dd - 2.0 * blocks.iter().map(|b| hs_inner(b, v).norm()).sum::<f64>())
}
