//! Seeded Monte Carlo sweeps and analytic predictions over a load grid.
//!
//! Seeding: load point `i` of a sweep uses the seed
//! `master + i * 0x9E37_79B9_7F4A_7C15` (wrapping). Batch `b` of a point runs
//! on ChaCha8 seeded with the point seed and switched to stream `b`. Batch
//! results are reduced in batch order, so the output does not depend on how
//! many worker threads run the batches.

pub mod config;

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};

use crate::floor::{FloorError, FloorModel, FloorParams};
use crate::model::ModelError;
use crate::receiver::{Outcome, Receiver};
use crate::traffic::{generate_trace, TrafficError};

/// Virtual frames of counted traffic per batch.
pub const BATCH_VF_SPANS: f64 = 200.0;
/// Batches simulated between two checks of the stopping rule.
const BATCH_CHUNK: u64 = 16;
/// Users required before the lost-event stopping rule may fire.
pub const MIN_USERS_FOR_EARLY_STOP: u64 = 100_000;

/// Standard normal quantiles for two-sided 95% and 99% intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;
pub const Z_99: f64 = 2.575_829_303_548_901;

const POINT_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Header of every result file.
pub const CSV_HEADER: &str = "load,users,lost,plr,ci_lo,ci_hi,plr_floor";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Floor(#[from] FloorError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Counted users and losses at one load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PointResult {
    pub users: u64,
    pub lost: u64,
    pub batches: u64,
}

impl PointResult {
    pub fn plr(&self) -> f64 {
        if self.users == 0 {
            0.0
        } else {
            self.lost as f64 / self.users as f64
        }
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    (
        (centre - half).max(0.0).min(p),
        (centre + half).min(1.0).max(p),
    )
}

/// Seed of the `index`-th load point of a sweep.
pub fn point_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add((index as u64).wrapping_mul(POINT_SEED_STRIDE))
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Simulates one batch and returns `(counted users, lost among them)`.
///
/// Only users whose virtual frame lies within `[W, horizon - W]`, with `W`
/// the receiver window, are counted.
pub fn run_batch(
    exp: &Experiment,
    load: f64,
    seed: u64,
    batch: u64,
) -> Result<(u64, u64), HarnessError> {
    let sys = &exp.system;
    let margin = sys.window_len();
    let horizon = BATCH_VF_SPANS * sys.vf_span + 2.0 * margin;
    let mut rng = batch_rng(seed, batch);
    let trace = generate_trace(sys, &exp.distribution, load, horizon, &mut rng)?;
    let mut rx = Receiver::new(&trace, sys);
    rx.run();
    let mut users = 0;
    let mut lost = 0;
    for (user, outcome) in trace.users.iter().zip(rx.outcomes()) {
        if user.arrival < margin || user.vf_end(sys.vf_span) > horizon - margin {
            continue;
        }
        users += 1;
        lost += matches!(outcome, Outcome::Lost { .. }) as u64;
    }
    Ok((users, lost))
}

/// Runs batches at `load` until at least `min_users_per_point` users were
/// counted, or `max_lost_events` losses were seen over at least
/// [`MIN_USERS_FOR_EARLY_STOP`] users.
pub fn run_point(exp: &Experiment, load: f64, seed: u64) -> Result<PointResult, HarnessError> {
    let cfg = &exp.config;
    let done = |r: &PointResult| {
        r.users >= cfg.min_users_per_point
            || cfg
                .max_lost_events
                .is_some_and(|k| r.lost >= k && r.users >= MIN_USERS_FOR_EARLY_STOP)
    };
    let mut acc = PointResult::default();
    let mut next = 0u64;
    loop {
        let chunk: Vec<Result<(u64, u64), HarnessError>> = (next..next + BATCH_CHUNK)
            .into_par_iter()
            .map(|b| run_batch(exp, load, seed, b))
            .collect();
        for res in chunk {
            let (users, lost) = res?;
            acc.users += users;
            acc.lost += lost;
            acc.batches += 1;
            if done(&acc) {
                return Ok(acc);
            }
        }
        next += BATCH_CHUNK;
    }
}

/// Simulated statistics of one curve row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimStats {
    pub users: u64,
    pub lost: u64,
    pub plr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl From<PointResult> for SimStats {
    fn from(r: PointResult) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(r.lost, r.users, Z_95);
        Self {
            users: r.users,
            lost: r.lost,
            plr: r.plr(),
            ci_lo,
            ci_hi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub load: f64,
    pub sim: Option<SimStats>,
    pub plr_floor: f64,
}

/// Loss-rate curve over a load grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlrCurve {
    pub params: FloorParams,
    pub rows: Vec<CurveRow>,
    pub warnings: Vec<String>,
}

impl PlrCurve {
    /// Writes the comma-separated curve. Columns without a simulation are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for row in &self.rows {
            match row.sim {
                Some(s) => writeln!(
                    out,
                    "{},{},{},{:.6e},{:.6e},{:.6e},{:.6e}",
                    row.load, s.users, s.lost, s.plr, s.ci_lo, s.ci_hi, row.plr_floor
                )?,
                None => writeln!(out, "{},,,,,,{:.6e}", row.load, row.plr_floor)?,
            }
        }
        Ok(())
    }
}

/// One-line description of the scenario and its vulnerable-period parameters.
pub fn run_header(exp: &Experiment) -> Result<String, HarnessError> {
    let p = FloorParams::from_config(&exp.system)?;
    let n_v = p.n_v.map_or_else(|| "inf".to_string(), |n| n.to_string());
    Ok(format!(
        "snr_db={} rate={} vf_span={} mean_degree={} phi={:.6} t_v={:.6} n_v={}",
        exp.config.snr_db,
        exp.config.rate,
        exp.config.vf_span,
        exp.distribution.mean_degree(),
        p.phi,
        p.t_v,
        n_v
    ))
}

fn analytic(exp: &Experiment) -> Result<(FloorModel, Vec<String>), HarnessError> {
    let model = FloorModel::new(&exp.system, &exp.distribution, &exp.catalog)?;
    let mut warnings = Vec::new();
    if model.params.n_v.is_none() {
        warnings.push("vulnerable fraction is zero: the analytic floor is identically zero".into());
    } else if model.active_catalog().is_empty() {
        warnings.push("no catalog pattern is feasible under this distribution".into());
    }
    Ok((model, warnings))
}

/// Evaluates the analytic floor on the load grid.
pub fn predict(exp: &Experiment) -> Result<PlrCurve, HarnessError> {
    let (model, mut warnings) = analytic(exp)?;
    let mut rows = Vec::with_capacity(exp.config.load_grid.len());
    for &load in &exp.config.load_grid {
        let est = model.estimate(load)?;
        if est.clamped > 0 {
            warnings.push(format!(
                "G={load}: {} probabilities clamped to 1",
                est.clamped
            ));
        }
        rows.push(CurveRow {
            load,
            sim: None,
            plr_floor: est.plr,
        });
    }
    Ok(PlrCurve {
        params: model.params,
        rows,
        warnings,
    })
}

/// Simulates every grid load and pairs it with the analytic floor.
pub fn sweep(exp: &Experiment) -> Result<PlrCurve, HarnessError> {
    let mut curve = predict(exp)?;
    for (i, row) in curve.rows.iter_mut().enumerate() {
        let point = run_point(exp, row.load, point_seed(exp.config.seed, i))?;
        row.sim = Some(point.into());
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(load_grid: Vec<f64>, distribution: Vec<(usize, f64)>) -> Experiment {
        Experiment::new(ExperimentConfig {
            load_grid,
            distribution,
            min_users_per_point: 10_000,
            ..ExperimentConfig::reference()
        })
        .unwrap()
    }

    #[test]
    fn wilson_interval_properties() {
        let (lo, hi) = wilson_interval(0, 1000, Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let (lo, hi) = wilson_interval(50, 1000, Z_95);
        assert!(lo < 0.05 && hi > 0.05);
        // Reference: Wilson 95% for 50/1000 is [0.0381, 0.0653].
        assert!((lo - 0.0381).abs() < 1e-4 && (hi - 0.0653).abs() < 1e-4);
        let (lo99, hi99) = wilson_interval(50, 1000, Z_99);
        assert!(lo99 < lo && hi99 > hi);
        assert_eq!(wilson_interval(0, 0, Z_95), (0.0, 1.0));
    }

    #[test]
    fn tiny_load_has_almost_no_losses() {
        let exp = small(vec![1e-3], vec![(2, 1.0)]);
        let r = run_point(&exp, 1e-3, 3).unwrap();
        assert!(r.users >= 10_000);
        assert!(r.lost <= 2, "lost = {}", r.lost);
    }

    #[test]
    fn run_point_is_deterministic() {
        let exp = small(vec![0.2], vec![(2, 0.51), (4, 0.49)]);
        let a = run_point(&exp, 0.2, 11).unwrap();
        let b = run_point(&exp, 0.2, 11).unwrap();
        assert_eq!(a, b);
        let c = run_point(&exp, 0.2, 12).unwrap();
        assert_ne!((a.users, a.lost), (c.users, c.lost));
    }

    #[test]
    fn batch_edge_exclusion_is_bounded() {
        let exp = small(vec![0.3], vec![(2, 1.0)]);
        let sys = &exp.system;
        let horizon = BATCH_VF_SPANS * sys.vf_span + 2.0 * sys.window_len();
        let mut excluded = 0.0;
        let batches = 20;
        for b in 0..batches {
            let (users, _) = run_batch(&exp, 0.3, 5, b).unwrap();
            excluded += 0.3 * horizon - users as f64;
        }
        // Two boundaries per batch, each allowed 2 W G expected exclusions.
        let bound = 2.0 * 2.0 * sys.window_len() * 0.3;
        assert!(excluded / (batches as f64) < bound);
    }

    #[test]
    fn early_stop_on_lost_events() {
        let mut cfg = ExperimentConfig {
            load_grid: vec![0.4],
            min_users_per_point: 10_000_000,
            max_lost_events: Some(1),
            ..ExperimentConfig::reference()
        };
        cfg.distribution = vec![(2, 1.0)];
        let exp = Experiment::new(cfg).unwrap();
        let r = run_point(&exp, 0.4, 1).unwrap();
        assert!(r.users >= MIN_USERS_FOR_EARLY_STOP && r.users < 10_000_000);
        assert!(r.lost >= 1);
    }

    #[test]
    fn predict_reports_reference_parameters() {
        for (rate, vf, n_v) in [(1.5, 200.0, 225), (2.0, 200.0, 127), (1.5, 100.0, 112)] {
            let exp = Experiment::new(ExperimentConfig {
                rate,
                vf_span: vf,
                ..ExperimentConfig::reference()
            })
            .unwrap();
            let curve = predict(&exp).unwrap();
            assert_eq!(curve.params.n_v, Some(n_v));
            assert!(run_header(&exp).unwrap().contains(&format!("n_v={n_v}")));
            assert!(curve
                .rows
                .iter()
                .all(|r| r.sim.is_none() && r.plr_floor > 0.0));
        }
    }

    #[test]
    fn zero_phi_gives_zero_prediction_with_warning() {
        let exp = Experiment::new(ExperimentConfig {
            rate: 0.5,
            ..ExperimentConfig::reference()
        })
        .unwrap();
        let curve = predict(&exp).unwrap();
        assert!(curve.rows.iter().all(|r| r.plr_floor == 0.0));
        assert_eq!(curve.warnings.len(), 1);
    }

    #[test]
    fn catalog_override_matches_builtin() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ucps.toml");
        std::fs::write(&path, include_str!("../../data/dominant_ucps.toml")).unwrap();
        let builtin = Experiment::new(ExperimentConfig::reference()).unwrap();
        let file = Experiment::new(ExperimentConfig {
            catalog: Some(path),
            ..ExperimentConfig::reference()
        })
        .unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        predict(&builtin).unwrap().write_csv(&mut a).unwrap();
        predict(&file).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_layout() {
        let exp = small(vec![0.1], vec![(2, 1.0)]);
        let mut buf = Vec::new();
        predict(&exp).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row = lines.next().unwrap();
        assert!(row.starts_with("0.1,,,,,,"), "{row}");
    }

    #[test]
    fn sweep_fills_every_column() {
        let exp = small(vec![0.1, 0.2], vec![(2, 0.51), (4, 0.49)]);
        let curve = sweep(&exp).unwrap();
        for row in &curve.rows {
            let s = row.sim.unwrap();
            assert!(s.users >= 10_000);
            assert!(0.0 <= s.ci_lo && s.ci_lo <= s.plr && s.plr <= s.ci_hi && s.ci_hi <= 1.0);
            assert!(row.plr_floor > 0.0);
        }
    }
}
