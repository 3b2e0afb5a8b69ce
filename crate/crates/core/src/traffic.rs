//! Poisson user arrivals, degree sampling and replica placement.

use std::io::{self, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp;
use thiserror::Error;

use crate::model::{DegreeDistribution, SystemConfig, UserTransmission, PACKET_DURATION};

/// Below this acceptance probability, replica placement switches from
/// whole-set rejection to the spacing transform, which has the same law.
const MIN_REJECTION_ACCEPTANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrafficError {
    #[error("{degree} replicas cannot be placed without overlap in a virtual frame of {vf_span}")]
    PlacementInfeasible { degree: usize, vf_span: f64 },
    #[error("horizon {horizon} is shorter than the receiver window {window}")]
    HorizonTooShort { horizon: f64, window: f64 },
    #[error("load must be positive and finite, got {0}")]
    InvalidLoad(f64),
}

/// Draws degrees with probability `Λ_d`.
#[derive(Debug, Clone)]
pub struct DegreeSampler {
    degrees: Vec<usize>,
    index: WeightedIndex<f64>,
}

impl DegreeSampler {
    pub fn new(dist: &DegreeDistribution) -> Self {
        let degrees = dist.entries().iter().map(|&(d, _)| d).collect();
        let index = WeightedIndex::new(dist.entries().iter().map(|&(_, p)| p))
            .expect("validated distribution has positive weights");
        Self { degrees, index }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.degrees[self.index.sample(rng)]
    }
}

/// Draws one repetition degree from `dist`.
pub fn sample_degree<R: Rng + ?Sized>(dist: &DegreeDistribution, rng: &mut R) -> usize {
    DegreeSampler::new(dist).sample(rng)
}

/// Places `d` replicas in the virtual frame starting at `t0`.
///
/// The first replica starts at `t0`. The other `d - 1` starts are uniform on
/// `[t0, t0 + T_f - T_p]` conditioned on every pair being at least one packet
/// apart. The conditioning is done by redrawing the whole set; when the
/// feasible region is too thin for that to terminate quickly the equivalent
/// spacing transform is used instead.
pub fn place_replicas<R: Rng + ?Sized>(
    t0: f64,
    d: usize,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<Vec<f64>, TrafficError> {
    let infeasible = TrafficError::PlacementInfeasible {
        degree: d,
        vf_span: cfg.vf_span,
    };
    if d == 0 || d as f64 * PACKET_DURATION > cfg.vf_span {
        return Err(infeasible);
    }
    let span = cfg.vf_span - PACKET_DURATION;
    let extra = d - 1;
    let slack = span - extra as f64 * PACKET_DURATION;
    let mut starts = Vec::with_capacity(d);
    starts.push(t0);
    if extra == 0 {
        return Ok(starts);
    }
    if slack <= 0.0 {
        starts.extend((1..d).map(|i| t0 + i as f64 * PACKET_DURATION));
        return Ok(starts);
    }

    let acceptance = (slack / span).powi(extra as i32);
    if acceptance >= MIN_REJECTION_ACCEPTANCE {
        loop {
            starts.truncate(1);
            starts.extend((0..extra).map(|_| t0 + rng.random_range(0.0..=span)));
            starts[1..].sort_by(f64::total_cmp);
            if starts.windows(2).all(|w| w[1] - w[0] >= PACKET_DURATION) {
                return Ok(starts);
            }
        }
    }

    // Sorted uniforms on [0, slack], shifted by i packets: uniform on the
    // sorted feasible set, i.e. the same law as the rejection branch.
    let mut offsets: Vec<f64> = (0..extra).map(|_| rng.random_range(0.0..=slack)).collect();
    offsets.sort_by(f64::total_cmp);
    starts.extend(
        offsets
            .iter()
            .enumerate()
            .map(|(i, &u)| t0 + u + (i + 1) as f64 * PACKET_DURATION),
    );
    Ok(starts)
}

/// A continuous-time trace of user transmissions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficTrace {
    /// Users sorted by arrival time.
    pub users: Vec<UserTransmission>,
    /// Arrivals were generated on `[0, horizon]`.
    pub horizon: f64,
    /// Logical load `G` in arrivals per packet duration.
    pub load: f64,
}

impl TrafficTrace {
    /// Total number of replicas on the channel.
    pub fn replica_count(&self) -> usize {
        self.users.iter().map(UserTransmission::degree).sum()
    }

    /// Writes one comma-separated record per replica:
    /// `user_id,degree,replica_index,start_time`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "user_id,degree,replica_index,start_time")?;
        for user in &self.users {
            for (i, start) in user.replica_starts().iter().enumerate() {
                writeln!(out, "{},{},{},{}", user.user_id, user.degree(), i, start)?;
            }
        }
        Ok(())
    }
}

/// Generates Poisson(`load`) arrivals on `[0, horizon]`, each with a sampled
/// degree and self-interference-free replicas.
pub fn generate_trace<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    dist: &DegreeDistribution,
    load: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<TrafficTrace, TrafficError> {
    if !(load.is_finite() && load > 0.0) {
        return Err(TrafficError::InvalidLoad(load));
    }
    if horizon < cfg.window_len() {
        return Err(TrafficError::HorizonTooShort {
            horizon,
            window: cfg.window_len(),
        });
    }
    let sampler = DegreeSampler::new(dist);
    let gaps = Exp::new(load).map_err(|_| TrafficError::InvalidLoad(load))?;
    let mut users = Vec::with_capacity((load * horizon * 1.1) as usize + 16);
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t > horizon {
            break;
        }
        let degree = sampler.sample(rng);
        let starts = place_replicas(t, degree, cfg, rng)?;
        let user_id = users.len() as u64;
        users.push(
            UserTransmission::new(user_id, starts, cfg.vf_span)
                .expect("placement satisfies transmission invariants"),
        );
    }
    Ok(TrafficTrace {
        users,
        horizon,
        load,
    })
}
