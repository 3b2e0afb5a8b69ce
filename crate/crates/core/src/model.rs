//! Shared domain types and physical-parameter validation.
//!
//! All durations are measured in packet durations: `T_p = 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Duration of a single replica. Every other time quantity is a multiple of it.
pub const PACKET_DURATION: f64 = 1.0;

/// Absolute tolerance on `sum(probabilities) == 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("degree distribution sums to {sum}, expected 1")]
    NonNormalizedDistribution { sum: f64 },
    #[error(
        "maximum degree {max_degree} does not fit in a virtual frame of {vf_span} packet durations"
    )]
    DegreeTooLargeForVF { max_degree: usize, vf_span: f64 },
    #[error("invalid physical parameter: {0}")]
    InvalidPhysicalParameter(String),
    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid user transmission: {0}")]
    InvalidTransmission(String),
}

/// Converts a power ratio given in dB to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Physical and receiver configuration shared by the simulator and the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// P/N as a linear ratio.
    pub snr_linear: f64,
    /// Code rate in bits per symbol.
    pub rate: f64,
    /// Virtual frame duration `T_f` in packet durations (`n_p`).
    pub vf_span: f64,
    /// Receiver window length in units of `T_f`.
    pub window_span: f64,
    /// Window slide step in units of `T_f`.
    pub window_step: f64,
}

impl SystemConfig {
    pub const DEFAULT_WINDOW_SPAN: f64 = 3.0;
    pub const DEFAULT_WINDOW_STEP: f64 = 0.1;

    /// Builds a configuration from an SNR in dB with the default receiver window.
    pub fn from_db(snr_db: f64, rate: f64, vf_span: f64) -> Self {
        Self {
            snr_linear: db_to_linear(snr_db),
            rate,
            vf_span,
            window_span: Self::DEFAULT_WINDOW_SPAN,
            window_step: Self::DEFAULT_WINDOW_STEP,
        }
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr_linear.log10()
    }

    /// Receiver window length in packet durations.
    pub fn window_len(&self) -> f64 {
        self.window_span * self.vf_span
    }

    /// Window slide step in packet durations.
    pub fn step_len(&self) -> f64 {
        self.window_step * self.vf_span
    }

    /// Checks the invariants that do not involve a degree distribution.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidPhysicalParameter(msg));
        if !(self.snr_linear.is_finite() && self.snr_linear > 0.0) {
            return bad(format!("snr must be positive, got {}", self.snr_linear));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return bad(format!("rate must be positive, got {}", self.rate));
        }
        if !(self.vf_span.is_finite() && self.vf_span >= 2.0 * PACKET_DURATION) {
            return bad(format!("vf_span must be at least 2, got {}", self.vf_span));
        }
        if !(self.window_span.is_finite()
            && self.window_span >= 1.0 + PACKET_DURATION / self.vf_span)
        {
            return bad(format!(
                "window_span must be at least 1 + 1/vf_span, got {}",
                self.window_span
            ));
        }
        if !(self.window_step.is_finite() && self.window_step > 0.0) {
            return bad(format!(
                "window_step must be positive, got {}",
                self.window_step
            ));
        }
        Ok(())
    }
}

/// Probabilities `Λ_d` over replica counts `d ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    entries: Vec<(usize, f64)>,
    mean_degree: f64,
}

impl DegreeDistribution {
    /// Builds a distribution from `(degree, probability)` pairs. Entries are
    /// kept sorted by degree.
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, ModelError> {
        let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(ModelError::InvalidDistribution("no entries".into()));
        }
        entries.sort_by_key(|&(d, _)| d);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ModelError::InvalidDistribution(format!(
                    "degree {} listed twice",
                    w[0].0
                )));
            }
        }
        for &(d, p) in &entries {
            if d < 2 {
                return Err(ModelError::InvalidDistribution(format!(
                    "degree {d} is below 2"
                )));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(ModelError::InvalidDistribution(format!(
                    "probability {p} of degree {d} outside (0, 1]"
                )));
            }
        }
        let sum: f64 = entries.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(ModelError::NonNormalizedDistribution { sum });
        }
        let mean_degree = entries.iter().map(|&(d, p)| d as f64 * p).sum();
        Ok(Self {
            entries,
            mean_degree,
        })
    }

    /// The regular distribution `Λ(x) = x^d`.
    pub fn regular(degree: usize) -> Result<Self, ModelError> {
        Self::new([(degree, 1.0)])
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn max_degree(&self) -> usize {
        self.entries.last().map(|&(d, _)| d).unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        self.mean_degree
    }

    /// `Λ_d`, zero for degrees outside the support.
    pub fn probability(&self, degree: usize) -> f64 {
        self.entries
            .iter()
            .find(|&&(d, _)| d == degree)
            .map(|&(_, p)| p)
            .unwrap_or(0.0)
    }

    /// `Some(d)` when all the mass sits on a single degree.
    pub fn regular_degree(&self) -> Option<usize> {
        match self.entries.as_slice() {
            [(d, _)] => Some(*d),
            _ => None,
        }
    }
}

/// Half-open time interval `[begin, end)` in packet durations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    pub begin: f64,
    pub end: f64,
}

impl TimeInterval {
    pub fn new(begin: f64, end: f64) -> Result<Self, ModelError> {
        if begin < end {
            Ok(Self { begin, end })
        } else {
            Err(ModelError::InvalidPhysicalParameter(format!(
                "empty interval [{begin}, {end})"
            )))
        }
    }

    /// Interval occupied by a replica starting at `start`.
    pub fn replica(start: f64) -> Self {
        Self {
            begin: start,
            end: start + PACKET_DURATION,
        }
    }

    pub fn len(&self) -> f64 {
        self.end - self.begin
    }

    pub fn overlap(&self, other: &TimeInterval) -> f64 {
        (self.end.min(other.end) - self.begin.max(other.begin)).max(0.0)
    }
}

/// One user's transmission: arrival time, degree and replica start times.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTransmission {
    pub user_id: u64,
    pub arrival: f64,
    replica_starts: Vec<f64>,
}

impl UserTransmission {
    /// Validates and builds a transmission. `replica_starts` must be sorted,
    /// begin at the arrival time, stay inside the virtual frame and keep
    /// consecutive replicas at least one packet apart.
    pub fn new(user_id: u64, replica_starts: Vec<f64>, vf_span: f64) -> Result<Self, ModelError> {
        let err = |msg: String| Err(ModelError::InvalidTransmission(msg));
        let Some(&arrival) = replica_starts.first() else {
            return err(format!("user {user_id} has no replicas"));
        };
        if replica_starts.len() < 2 {
            return err(format!("user {user_id} has degree below 2"));
        }
        let last_allowed = arrival + vf_span - PACKET_DURATION;
        for w in replica_starts.windows(2) {
            if w[1] - w[0] < PACKET_DURATION {
                return err(format!(
                    "user {user_id}: replicas at {} and {} overlap",
                    w[0], w[1]
                ));
            }
        }
        if *replica_starts.last().unwrap() > last_allowed {
            return err(format!("user {user_id}: replica outside its virtual frame"));
        }
        Ok(Self {
            user_id,
            arrival,
            replica_starts,
        })
    }

    pub fn degree(&self) -> usize {
        self.replica_starts.len()
    }

    pub fn replica_starts(&self) -> &[f64] {
        &self.replica_starts
    }

    /// End of the user's virtual frame.
    pub fn vf_end(&self, vf_span: f64) -> f64 {
        self.arrival + vf_span
    }
}

/// Checks a configuration together with the degree distribution it will be used with.
pub fn validate_config(cfg: &SystemConfig, dist: &DegreeDistribution) -> Result<(), ModelError> {
    let sum: f64 = dist.entries().iter().map(|&(_, p)| p).sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(ModelError::NonNormalizedDistribution { sum });
    }
    cfg.validate()?;
    if dist.max_degree() as f64 * PACKET_DURATION > cfg.vf_span {
        return Err(ModelError::DegreeTooLargeForVF {
            max_degree: dist.max_degree(),
            vf_span: cfg.vf_span,
        });
    }
    Ok(())
}

/// The four degree distributions used throughout the evaluation scenarios.
pub mod distributions {
    use super::{DegreeDistribution, ModelError};

    /// `Λ(x) = x^2`.
    pub fn ira2() -> DegreeDistribution {
        DegreeDistribution::regular(2).expect("valid")
    }

    /// `Λ(x) = x^3`.
    pub fn ira3() -> DegreeDistribution {
        DegreeDistribution::regular(3).expect("valid")
    }

    /// `Λ₁(x) = 0.263x² + 0.344x³ + 0.393x⁵`.
    pub fn lambda1() -> DegreeDistribution {
        DegreeDistribution::new([(2, 0.263), (3, 0.344), (5, 0.393)]).expect("valid")
    }

    /// `Λ₂(x) = 0.51x² + 0.49x⁴`.
    pub fn lambda2() -> DegreeDistribution {
        DegreeDistribution::new([(2, 0.51), (4, 0.49)]).expect("valid")
    }

    /// Looks up one of the named distributions (`ira2`, `ira3`, `lambda1`, `lambda2`).
    pub fn by_name(name: &str) -> Result<DegreeDistribution, ModelError> {
        match name.to_ascii_lowercase().as_str() {
            "ira2" | "ira-2" => Ok(ira2()),
            "ira3" | "ira-3" => Ok(ira3()),
            "lambda1" => Ok(lambda1()),
            "lambda2" => Ok(lambda2()),
            other => Err(ModelError::InvalidDistribution(format!(
                "unknown distribution name {other:?}"
            ))),
        }
    }
}
