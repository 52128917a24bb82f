//! Maximally entangled pairs connected by a bipartite unitary.
//!
//! Starting from a unitary `u₀`, the map
//!
//! ```text
//! v_n     = P[V|u_n⟩]
//! u_{n+1} = P[V†|v_n⟩]
//! ```
//!
//! (vectors reshaped to `d × d` before the polar projection `P`) moves toward
//! a pair with `V|u⟩ = |v⟩`. Each half step picks the closest maximally
//! entangled state, so the distances `‖V|u_n⟩ − |v_n⟩‖`, `‖V†|v_n⟩ − |u_{n+1}⟩‖`
//! form a nonincreasing sequence and the Rényi-1/2 entropy of
//! `ρ_n = tr_B(V|u_n⟩⟨u_n|V†)/d` never decreases.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use log::warn;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::gates::random_cue;
use crate::linalg::{
    devectorize, hs_norm, phase_distance, polar, vectorize, BipartiteGate, ComplexMatrix,
    MaxEntangledState, C64,
};
use crate::measures::entropies;

/// Two iterates closer than this (modulo global phase) count as equal.
pub const RECURRENCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct UbbOptions {
    /// Stop once `‖V|u_n⟩ − |v_n⟩‖/√d` falls to this value.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of recent `u_n` kept for cycle detection.
    pub window: usize,
    /// Abort when the residual improves by less than `stagnation_eps` for
    /// this many consecutive steps.
    pub stagnation_steps: usize,
    pub stagnation_eps: f64,
}

impl Default for UbbOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            window: 64,
            stagnation_steps: 100,
            stagnation_eps: 1e-14,
        }
    }
}

#[derive(Clone, Debug)]
pub struct UbbTrace {
    pub d: usize,
    /// Final pair `(u_n, v_n)`.
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
    /// Half-step distances `d₀, d₁, d₂, …` (even entries `‖V|u_n⟩ − |v_n⟩‖`).
    pub d_seq: Vec<f64>,
    /// Linear entropy of `ρ_n`, one entry per step.
    pub lin_entropy_seq: Vec<f64>,
    pub renyi_half_seq: Vec<f64>,
    pub converged: bool,
    pub steps: usize,
    pub seeds_tried: usize,
    /// Steps whose polar factor was flagged non-unique.
    pub degenerate_steps: usize,
    /// Most recent `u_n`, oldest first; includes the iterate following the
    /// final pair.
    pub history: VecDeque<ComplexMatrix>,
}

impl UbbTrace {
    /// `‖V|u_n⟩ − |v_n⟩‖/√d` at the final step.
    pub fn residual(&self) -> f64 {
        let last_even = match self.d_seq.len() {
            0 => f64::INFINITY,
            n => self.d_seq[(n - 1) / 2 * 2],
        };
        last_even / (self.d as f64).sqrt()
    }

    /// Largest increase between consecutive distances.
    pub fn max_distance_rise(&self) -> f64 {
        self.d_seq
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Largest decrease between consecutive Rényi-1/2 entropies.
    pub fn max_renyi_drop(&self) -> f64 {
        self.renyi_half_seq
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    /// Steps at which the linear entropy went down by more than `tol`.
    pub fn linear_entropy_drops(&self, tol: f64) -> usize {
        self.lin_entropy_seq
            .windows(2)
            .filter(|w| w[1] < w[0] - tol)
            .count()
    }

    /// `(1 − 1/d) − linear_entropy` at the final step.
    pub fn entropy_gap(&self) -> f64 {
        let max = 1.0 - 1.0 / self.d as f64;
        self.lin_entropy_seq
            .last()
            .map_or(f64::INFINITY, |l| max - l)
    }

    /// `(|Φ₀⟩, |Φ₁⟩)` with `V|Φ₀⟩ ≈ |Φ₁⟩`.
    pub fn states(&self) -> (MaxEntangledState, MaxEntangledState) {
        (
            MaxEntangledState::from_unitary(&self.u).expect("square"),
            MaxEntangledState::from_unitary(&self.v).expect("square"),
        )
    }

    /// CSV with one row per step: `step,d_n,linear_entropy,renyi_half`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,d_n,linear_entropy,renyi_half")?;
        for (n, (lin, ren)) in self
            .lin_entropy_seq
            .iter()
            .zip(&self.renyi_half_seq)
            .enumerate()
        {
            writeln!(w, "{n},{:.17e},{lin:.17e},{ren:.17e}", self.d_seq[2 * n])?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UbbFailureReason {
    MaxIter,
    Stagnated,
}

#[derive(Debug, Error)]
pub struct UbbFailure {
    pub reason: UbbFailureReason,
    pub trace: UbbTrace,
}

impl fmt::Display for UbbFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let why = match self.reason {
            UbbFailureReason::MaxIter => "hit the iteration limit",
            UbbFailureReason::Stagnated => "stagnated",
        };
        write!(
            f,
            "UBB iteration {why} after {} steps with residual {:.3e}",
            self.trace.steps,
            self.trace.residual()
        )
    }
}

fn apply(m: &ComplexMatrix, x: &ComplexMatrix, d: usize) -> Result<ComplexMatrix> {
    devectorize(&(m * vectorize(x)?), d)
}

/// `‖V·vec(u) − vec(v)‖₂` with unnormalized vectorizations (`⟨u|u⟩ = d`).
pub fn ubb_distance(gate: &BipartiteGate, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    let image = apply(gate.matrix(), u, gate.d())?;
    if v.shape() != image.shape() {
        return Err(Error::Shape(format!(
            "expected {}x{} unitary",
            gate.d(),
            gate.d()
        )));
    }
    Ok(hs_norm(&(image - v)))
}

/// Runs the map from the unitary seed `u0`.
pub fn ubb_find_from(
    gate: &BipartiteGate,
    u0: &ComplexMatrix,
    opts: &UbbOptions,
) -> Result<UbbTrace> {
    let d = gate.d();
    if u0.shape() != (d, d) {
        return Err(Error::Shape(format!("seed must be {d}x{d}")));
    }
    if opts.tol <= 0.0 {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let v_gate = gate.matrix();
    let v_dag = v_gate.adjoint();
    let sqrt_d = (d as f64).sqrt();
    let inv_d = C64::new(1.0 / d as f64, 0.0);
    let window = opts.window.max(2);

    let mut u = u0.clone();
    let mut v = u0.clone();
    let mut history = VecDeque::with_capacity(window);
    history.push_back(u.clone());
    let mut d_seq = Vec::new();
    let mut lin_seq = Vec::new();
    let mut renyi_seq = Vec::new();
    let mut degenerate_steps = 0;
    let mut converged = false;
    let mut stalled_for = 0;
    let mut prev_residual = f64::INFINITY;
    let mut steps = 0;
    let mut failure = None;

    let push = |history: &mut VecDeque<ComplexMatrix>, m: ComplexMatrix| {
        if history.len() == window {
            history.pop_front();
        }
        history.push_back(m);
    };

    while steps < opts.max_iter {
        steps += 1;
        let image = apply(v_gate, &u, d)?;
        let pv = polar(&image)?;
        degenerate_steps += pv.degenerate as usize;
        v = pv.unitary;
        let dist = hs_norm(&(&image - &v));
        d_seq.push(dist);
        let rho = &image * image.adjoint() * inv_d;
        let (lin, renyi) = entropies(&rho)?;
        lin_seq.push(lin);
        renyi_seq.push(renyi);

        let back = apply(&v_dag, &v, d)?;
        let pu = polar(&back)?;
        degenerate_steps += pu.degenerate as usize;

        let residual = dist / sqrt_d;
        if residual <= opts.tol {
            converged = true;
            push(&mut history, pu.unitary);
            break;
        }
        d_seq.push(hs_norm(&(&back - &pu.unitary)));
        u = pu.unitary;
        push(&mut history, u.clone());

        if prev_residual - residual < opts.stagnation_eps {
            stalled_for += 1;
            if stalled_for >= opts.stagnation_steps {
                failure = Some(UbbFailureReason::Stagnated);
                break;
            }
        } else {
            stalled_for = 0;
        }
        prev_residual = residual;
    }
    if !converged && failure.is_none() {
        failure = Some(UbbFailureReason::MaxIter);
    }
    let trace = UbbTrace {
        d,
        u,
        v,
        d_seq,
        lin_entropy_seq: lin_seq,
        renyi_half_seq: renyi_seq,
        converged,
        steps,
        seeds_tried: 1,
        degenerate_steps,
        history,
    };
    match failure {
        None => Ok(trace),
        Some(reason) => Err(Error::Ubb(Box::new(UbbFailure { reason, trace }))),
    }
}

/// Runs the map from a Haar-random seed unitary.
pub fn ubb_find(gate: &BipartiteGate, seed: u64, opts: &UbbOptions) -> Result<UbbTrace> {
    ubb_find_from(gate, &random_cue(gate.d(), seed), opts)
}

/// Retries with fresh seeds `seed, seed + 1, …` until a run converges.
pub fn ubb_find_reseeding(
    gate: &BipartiteGate,
    seed: u64,
    opts: &UbbOptions,
    max_seeds: usize,
) -> Result<UbbTrace> {
    let mut last_err = None;
    for k in 0..max_seeds.max(1) {
        match ubb_find(gate, seed.wrapping_add(k as u64), opts) {
            Ok(mut trace) => {
                trace.seeds_tried = k + 1;
                return Ok(trace);
            }
            Err(Error::Ubb(mut failure)) => {
                failure.trace.seeds_tried = k + 1;
                last_err = Some(Error::Ubb(failure));
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

#[derive(Clone, Debug)]
pub enum CycleReport {
    /// The latest iterate repeats its predecessor.
    FixedPoint,
    /// No recurrence inside the window.
    NoRecurrence,
    /// A period-`p > 1` recurrence whose states differ.
    Violation { period: usize, state: ComplexMatrix },
}

/// Looks for `u_{n+p} ≈ u_n` (modulo phase) among the last `window` iterates.
///
/// A cycle of this map can only be a fixed point, so a minimal period above
/// one is reported as a violation.
pub fn detect_cycle(trace: &UbbTrace, window: usize) -> CycleReport {
    let h = &trace.history;
    let len = h.len();
    if len < 2 {
        return CycleReport::NoRecurrence;
    }
    let last = &h[len - 1];
    let span = window.min(len - 1);
    for p in 1..=span {
        if phase_distance(&h[len - 1 - p], last) < RECURRENCE_TOL {
            if p == 1 {
                return CycleReport::FixedPoint;
            }
            warn!(
                "UBB map revisited a state after {p} steps without being fixed: {:?}",
                last
            );
            return CycleReport::Violation {
                period: p,
                state: last.clone(),
            };
        }
    }
    CycleReport::NoRecurrence
}
