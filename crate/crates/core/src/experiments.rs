//! Experiment pipelines driven by the `gatedist` CLI.
//!
//! Every sample derives its own seed from the master seed and its index, so
//! rows can be computed in any order and still come out identical.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{
    canonical_two_qubit, near_dual, random_cue, random_diagonal, random_dual_reseeding, seeded_rng,
    CanonicalParams, GateFamilySpec,
};
use crate::kd::{kd_alternating, kd_closed_form, kd_two_qubit, KdOptions};
use crate::linalg::BipartiteGate;
use crate::measures::{bounds_from_schmidt, entangling_power, gate_typicality, operator_schmidt};
use crate::ubb::{detect_cycle, ubb_find_reseeding, CycleReport, UbbOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Scan2q,
    Ensemble,
    UbbDemo,
    Analyze,
    Gen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub d: usize,
    pub samples: usize,
    pub seed: u64,
    /// Grid points per Weyl-chamber axis.
    pub res: usize,
    /// Largest near-dual perturbation strength.
    pub eps: f64,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub n_seeds: Option<usize>,
    /// Extra seeds allowed per UBB run before a sample is flagged.
    pub reseeds: usize,
    pub out: Option<PathBuf>,
    pub reproducible: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Analyze,
            d: 3,
            samples: 1000,
            seed: 1,
            res: 17,
            eps: 0.1,
            tol: None,
            max_iter: None,
            n_seeds: None,
            reseeds: 10,
            out: None,
            reproducible: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if self.d < 2 {
            return bad(format!("d = {} must be >= 2", self.d));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.res < 2 {
            return bad(format!("grid resolution {} must be >= 2", self.res));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps = {} must be positive", self.eps));
        }
        if let Some(tol) = self.tol {
            if tol.is_nan() || tol <= 0.0 {
                return bad(format!("tol = {tol} must be positive"));
            }
        }
        if self.max_iter == Some(0) || self.n_seeds == Some(0) {
            return bad("max-iter and seed counts must be positive".into());
        }
        Ok(())
    }

    pub fn kd_options(&self) -> KdOptions {
        let mut o = KdOptions::default();
        if let Some(t) = self.tol {
            o.tol = t;
        }
        if let Some(m) = self.max_iter {
            o.max_iter = m;
        }
        if let Some(n) = self.n_seeds {
            o.n_seeds = n;
        }
        o
    }

    pub fn ubb_options(&self) -> UbbOptions {
        let mut o = UbbOptions::default();
        if let Some(t) = self.tol {
            o.tol = t;
        }
        if let Some(m) = self.max_iter {
            o.max_iter = m;
        }
        o
    }
}

/// SplitMix64 finalizer applied to `master + index·γ`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn header<W: Write>(w: &mut W, what: &str, reproducible: bool) -> std::io::Result<()> {
    if !reproducible {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        writeln!(w, "# gatedist {what}, generated at unix time {now}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub e_p: f64,
    pub g_t: f64,
    pub kd: f64,
    pub kd_star: f64,
    pub kd_upper: f64,
}

/// Weyl chamber grid `π/4 ≥ c₁ ≥ c₂ ≥ c₃ ≥ 0` with `res` points per axis.
pub fn weyl_grid(res: usize) -> Vec<CanonicalParams> {
    let step = PI / 4.0 / (res - 1) as f64;
    let mut out = Vec::new();
    for i in 0..res {
        for j in 0..=i {
            for k in 0..=j {
                let p = CanonicalParams::new(i as f64 * step, j as f64 * step, k as f64 * step);
                out.push(p.canonicalize());
            }
        }
    }
    out
}

pub fn scan2q(res: usize) -> Result<Vec<ScanRow>> {
    if res < 2 {
        return Err(Error::Domain(format!("grid resolution {res} must be >= 2")));
    }
    weyl_grid(res)
        .into_par_iter()
        .map(|p| {
            let g = canonical_two_qubit(p);
            let schmidt = operator_schmidt(&g);
            let bounds = bounds_from_schmidt(&schmidt);
            Ok(ScanRow {
                c1: p.c1,
                c2: p.c2,
                c3: p.c3,
                e_p: entangling_power(&g),
                g_t: gate_typicality(&g),
                kd: kd_two_qubit(&g)?,
                kd_star: bounds.kd_star,
                kd_upper: bounds.kd_upper,
            })
        })
        .collect()
}

pub fn write_scan_csv<W: Write>(
    mut w: W,
    rows: &[ScanRow],
    reproducible: bool,
) -> std::io::Result<()> {
    header(&mut w, "scan2q", reproducible)?;
    writeln!(w, "c1,c2,c3,e_p,g_t,kd,kd_star,kd_upper")?;
    for r in rows {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.c1, r.c2, r.c3, r.e_p, r.g_t, r.kd, r.kd_star, r.kd_upper
        )?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleFamily {
    Diagonal,
    Cue,
    NearDual,
}

impl EnsembleFamily {
    pub const ALL: [EnsembleFamily; 3] = [
        EnsembleFamily::Diagonal,
        EnsembleFamily::Cue,
        EnsembleFamily::NearDual,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EnsembleFamily::Diagonal => "diagonal",
            EnsembleFamily::Cue => "cue",
            EnsembleFamily::NearDual => "near_dual",
        }
    }

    fn stream(self) -> u64 {
        match self {
            EnsembleFamily::Diagonal => 1,
            EnsembleFamily::Cue => 2,
            EnsembleFamily::NearDual => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleRow {
    pub family: EnsembleFamily,
    pub index: usize,
    pub seed: u64,
    /// Perturbation strength for near-dual samples.
    pub eps: Option<f64>,
    pub kd_star_sq: f64,
    pub kd_sq: f64,
    pub kd_upper_sq: f64,
    pub exceeds_dual_max: bool,
    pub error: Option<String>,
}

/// One ensemble sample. Near-dual samples draw `ε` uniformly from `(0, eps]`.
pub fn ensemble_sample(
    family: EnsembleFamily,
    d: usize,
    seed: u64,
    eps: f64,
) -> Result<(BipartiteGate, Option<f64>)> {
    let n = d * d;
    Ok(match family {
        EnsembleFamily::Diagonal => (BipartiteGate::new(random_diagonal(n, seed))?, None),
        EnsembleFamily::Cue => (BipartiteGate::new(random_cue(n, seed))?, None),
        EnsembleFamily::NearDual => {
            let mut rng = seeded_rng(seed);
            let strength = eps * (1.0 - rng.random::<f64>());
            let dual = random_dual_reseeding(d, rng.random())?;
            (near_dual(&dual, strength, rng.random())?, Some(strength))
        }
    })
}

pub fn ensemble_row(
    family: EnsembleFamily,
    index: usize,
    d: usize,
    master_seed: u64,
    eps: f64,
    opts: &KdOptions,
) -> EnsembleRow {
    let seed = derive_seed(master_seed ^ family.stream().rotate_left(32), index as u64);
    let outcome = ensemble_sample(family, d, seed, eps).and_then(|(gate, strength)| {
        let r = kd_alternating(
            &gate,
            &KdOptions {
                seed,
                ..opts.clone()
            },
        )?;
        Ok((r, strength))
    });
    match outcome {
        Ok((r, strength)) => {
            let b = r.bounds.expect("equal local dimensions");
            EnsembleRow {
                family,
                index,
                seed,
                eps: strength,
                kd_star_sq: b.kd_star * b.kd_star,
                kd_sq: r.kd_sq(),
                kd_upper_sq: b.kd_upper * b.kd_upper,
                exceeds_dual_max: r.exceeds_dual_max,
                error: None,
            }
        }
        Err(e) => EnsembleRow {
            family,
            index,
            seed,
            eps: None,
            kd_star_sq: f64::NAN,
            kd_sq: f64::NAN,
            kd_upper_sq: f64::NAN,
            exceeds_dual_max: false,
            error: Some(e.to_string()),
        },
    }
}

pub fn ensemble(cfg: &ExperimentConfig) -> Result<Vec<EnsembleRow>> {
    cfg.validate()?;
    let opts = cfg.kd_options();
    let jobs: Vec<(EnsembleFamily, usize)> = EnsembleFamily::ALL
        .iter()
        .flat_map(|&f| (0..cfg.samples).map(move |i| (f, i)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(f, i)| ensemble_row(f, i, cfg.d, cfg.seed, cfg.eps, &opts))
        .collect())
}

fn opt_f64(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v:.17e}"))
}

pub fn write_ensemble_csv<W: Write>(
    mut w: W,
    rows: &[EnsembleRow],
    reproducible: bool,
) -> std::io::Result<()> {
    header(&mut w, "ensemble", reproducible)?;
    writeln!(
        w,
        "family,index,seed,eps,kd_star_sq,kd_sq,kd_upper_sq,error"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:.17e},{:.17e},{:.17e},{}",
            r.family.tag(),
            r.index,
            r.seed,
            opt_f64(r.eps),
            r.kd_star_sq,
            r.kd_sq,
            r.kd_upper_sq,
            r.error.as_deref().unwrap_or("").replace(',', ";")
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UbbStep {
    pub step: usize,
    pub d_n: f64,
    pub linear_entropy: f64,
    pub renyi_half: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UbbRun {
    pub index: usize,
    pub seed: u64,
    pub converged: bool,
    pub seeds_tried: usize,
    pub steps: usize,
    pub residual: f64,
    pub final_delta: f64,
    pub max_distance_rise: f64,
    pub max_renyi_drop: f64,
    pub linear_entropy_drops: usize,
    /// `None` when no cycle check could run (failed sample).
    pub cycle_violation: Option<bool>,
    pub trajectory: Vec<UbbStep>,
    pub error: Option<String>,
}

pub fn ubb_sample(
    index: usize,
    d: usize,
    master_seed: u64,
    opts: &UbbOptions,
    reseeds: usize,
) -> UbbRun {
    let seed = derive_seed(master_seed, index as u64);
    let gate = BipartiteGate::new(random_cue(d * d, seed)).expect("CUE sample is unitary");
    let max_entropy = 1.0 - 1.0 / d as f64;
    let outcome = ubb_find_reseeding(&gate, seed ^ 0x0b0b, opts, reseeds + 1);
    let (trace, error) = match outcome {
        Ok(t) => (t, None),
        Err(Error::Ubb(f)) => {
            let msg = f.to_string();
            (f.trace, Some(msg))
        }
        Err(e) => {
            return UbbRun {
                index,
                seed,
                converged: false,
                seeds_tried: 0,
                steps: 0,
                residual: f64::NAN,
                final_delta: f64::NAN,
                max_distance_rise: f64::NAN,
                max_renyi_drop: f64::NAN,
                linear_entropy_drops: 0,
                cycle_violation: None,
                trajectory: Vec::new(),
                error: Some(e.to_string()),
            }
        }
    };
    let trajectory = trace
        .lin_entropy_seq
        .iter()
        .zip(&trace.renyi_half_seq)
        .enumerate()
        .map(|(n, (&lin, &ren))| UbbStep {
            step: n,
            d_n: trace.d_seq[2 * n],
            linear_entropy: lin,
            renyi_half: ren,
            delta: max_entropy - lin,
        })
        .collect();
    let cycle_violation = Some(matches!(
        detect_cycle(&trace, opts.window),
        CycleReport::Violation { .. }
    ));
    UbbRun {
        index,
        seed,
        converged: trace.converged,
        seeds_tried: trace.seeds_tried,
        steps: trace.steps,
        residual: trace.residual(),
        final_delta: trace.entropy_gap(),
        max_distance_rise: trace.max_distance_rise(),
        max_renyi_drop: trace.max_renyi_drop(),
        linear_entropy_drops: trace.linear_entropy_drops(1e-12),
        cycle_violation,
        trajectory,
        error,
    }
}

pub fn ubb_demo(cfg: &ExperimentConfig) -> Result<Vec<UbbRun>> {
    cfg.validate()?;
    let opts = cfg.ubb_options();
    Ok((0..cfg.samples)
        .into_par_iter()
        .map(|i| ubb_sample(i, cfg.d, cfg.seed, &opts, cfg.reseeds))
        .collect())
}

pub fn write_ubb_csv<W: Write>(
    mut w: W,
    runs: &[UbbRun],
    reproducible: bool,
) -> std::io::Result<()> {
    header(&mut w, "ubb-demo", reproducible)?;
    writeln!(
        w,
        "sample,seeds_tried,status,step,d_n,linear_entropy,renyi_half,delta"
    )?;
    for r in runs {
        let status = match (&r.error, r.seeds_tried) {
            (Some(_), _) => "failed",
            (None, 0 | 1) => "ok",
            (None, _) => "reseeded",
        };
        for s in &r.trajectory {
            writeln!(
                w,
                "{},{},{status},{},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.index, r.seeds_tried, s.step, s.d_n, s.linear_entropy, s.renyi_half, s.delta
            )?;
        }
        if r.trajectory.is_empty() {
            writeln!(w, "{},{},{status},,,,,", r.index, r.seeds_tried)?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub d: usize,
    pub schmidt: Vec<f64>,
    pub kd_star: f64,
    pub kd_upper: f64,
    pub kd: f64,
    pub overlap: f64,
    pub kd_converged: bool,
    pub exceeds_dual_max: bool,
    pub closed_form: Option<f64>,
    pub duality_deficit: f64,
    pub e_p: f64,
    pub g_t: f64,
    pub ubb_residual: Option<f64>,
    pub ubb_steps: Option<usize>,
    pub ubb_error: Option<String>,
}

pub fn analyze(
    gate: &BipartiteGate,
    spec: Option<&GateFamilySpec>,
    kd_opts: &KdOptions,
    ubb_opts: &UbbOptions,
    reseeds: usize,
) -> Result<AnalyzeReport> {
    let schmidt = operator_schmidt(gate);
    let bounds = bounds_from_schmidt(&schmidt);
    let kd = kd_alternating(gate, kd_opts)?;
    let (ubb_residual, ubb_steps, ubb_error) =
        match ubb_find_reseeding(gate, kd_opts.seed, ubb_opts, reseeds + 1) {
            Ok(t) => (Some(t.residual()), Some(t.steps), None),
            Err(Error::Ubb(f)) => (
                Some(f.trace.residual()),
                Some(f.trace.steps),
                Some(f.to_string()),
            ),
            Err(e) => return Err(e),
        };
    Ok(AnalyzeReport {
        d: gate.d(),
        schmidt: schmidt.lambdas,
        kd_star: bounds.kd_star,
        kd_upper: bounds.kd_upper,
        kd: kd.kd,
        overlap: kd.overlap,
        kd_converged: kd.converged,
        exceeds_dual_max: kd.exceeds_dual_max,
        closed_form: spec.and_then(kd_closed_form),
        duality_deficit: gate.duality_deficit(),
        e_p: entangling_power(gate),
        g_t: gate_typicality(gate),
        ubb_residual,
        ubb_steps,
        ubb_error,
    })
}
