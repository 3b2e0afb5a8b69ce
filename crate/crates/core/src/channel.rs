//! Block-interference channel: per-replica interference timelines, average
//! mutual information and the decoding threshold.

use crate::model::{TimeInterval, PACKET_DURATION};

/// Piecewise-constant count of interferers over one replica.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceTimeline {
    /// Contiguous segments covering the replica, each with its interferer count.
    pub segments: Vec<(TimeInterval, usize)>,
}

impl InterferenceTimeline {
    /// Largest interferer count over the replica.
    pub fn max_count(&self) -> usize {
        self.segments.iter().map(|&(_, k)| k).max().unwrap_or(0)
    }

    /// Interferer count at `t`, with segments taken as right-open.
    pub fn count_at(&self, t: f64) -> usize {
        self.segments
            .iter()
            .find(|(iv, _)| iv.begin <= t && t < iv.end)
            .or(self.segments.last())
            .map(|&(_, k)| k)
            .unwrap_or(0)
    }

    fn span(&self) -> f64 {
        match (self.segments.first(), self.segments.last()) {
            (Some(first), Some(last)) => last.0.end - first.0.begin,
            _ => PACKET_DURATION,
        }
    }
}

/// Builds the interferer-count timeline of `replica` against the other
/// replicas on the channel. Intervals that do not overlap are ignored.
pub fn build_timeline(
    replica: TimeInterval,
    active_others: &[TimeInterval],
) -> InterferenceTimeline {
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * active_others.len());
    let mut base = 0i32;
    for other in active_others {
        if other.end <= replica.begin || other.begin >= replica.end {
            continue;
        }
        if other.begin <= replica.begin {
            base += 1;
        } else {
            events.push((other.begin, 1));
        }
        if other.end < replica.end {
            events.push((other.end, -1));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut segments: Vec<(TimeInterval, usize)> = Vec::with_capacity(events.len() + 1);
    let mut cursor = replica.begin;
    let mut count = base;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        let mut delta = 0;
        while i < events.len() && events[i].0 == t {
            delta += events[i].1;
            i += 1;
        }
        if delta == 0 {
            continue;
        }
        if t > cursor {
            push_segment(&mut segments, cursor, t, count as usize);
            cursor = t;
        }
        count += delta;
    }
    push_segment(&mut segments, cursor, replica.end, count as usize);
    InterferenceTimeline { segments }
}

fn push_segment(segments: &mut Vec<(TimeInterval, usize)>, begin: f64, end: f64, count: usize) {
    if let Some(last) = segments.last_mut() {
        if last.1 == count {
            last.0.end = end;
            return;
        }
    }
    segments.push((TimeInterval { begin, end }, count));
}

/// Mutual information of one symbol with `interferers` equal-power
/// interferers: `log2(1 + ρ / (1 + k ρ))`.
pub fn symbol_mutual_information(snr: f64, interferers: usize) -> f64 {
    (snr / (1.0 + interferers as f64 * snr)).ln_1p() / std::f64::consts::LN_2
}

/// Length-weighted average of the per-symbol mutual information over the
/// timeline, i.e. the continuous limit of the per-symbol average.
pub fn avg_mutual_information(tl: &InterferenceTimeline, snr: f64) -> f64 {
    let span = tl.span();
    tl.segments
        .iter()
        .map(|&(iv, k)| iv.len() * symbol_mutual_information(snr, k))
        .sum::<f64>()
        / span
}

/// Average mutual information of `n_symbols` equally spaced symbols, each
/// taking the interferer count at its sampling instant.
pub fn discretized_mutual_information(
    tl: &InterferenceTimeline,
    snr: f64,
    n_symbols: usize,
) -> f64 {
    let Some(first) = tl.segments.first() else {
        return symbol_mutual_information(snr, 0);
    };
    let begin = first.0.begin;
    let step = tl.span() / n_symbols as f64;
    (0..n_symbols)
        .map(|i| symbol_mutual_information(snr, tl.count_at(begin + (i as f64 + 0.5) * step)))
        .sum::<f64>()
        / n_symbols as f64
}

/// Decoding succeeds iff `rate <= avg_mi`.
pub fn is_decodable(avg_mi: f64, rate: f64) -> bool {
    rate <= avg_mi
}

/// Average mutual information of a replica and the resulting decoding decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodabilityReport {
    pub avg_mi: f64,
    pub decodable: bool,
}

impl DecodabilityReport {
    pub fn evaluate(tl: &InterferenceTimeline, snr: f64, rate: f64) -> Self {
        let avg_mi = avg_mutual_information(tl, snr);
        Self {
            avg_mi,
            decodable: is_decodable(avg_mi, rate),
        }
    }
}

/// Table of `log2(1 + ρ/(1 + kρ))` indexed by interferer count, grown on demand.
#[derive(Debug, Clone)]
pub struct MiTable {
    snr: f64,
    values: Vec<f64>,
}

impl MiTable {
    pub fn new(snr: f64) -> Self {
        let values = (0..16).map(|k| symbol_mutual_information(snr, k)).collect();
        Self { snr, values }
    }

    pub fn get(&mut self, interferers: usize) -> f64 {
        while self.values.len() <= interferers {
            let k = self.values.len();
            self.values.push(symbol_mutual_information(self.snr, k));
        }
        self.values[interferers]
    }
}

/// Average mutual information of the unit-length replica starting at
/// `start`, interfered by unit-length replicas starting at `others`.
///
/// Same result as [`build_timeline`] + [`avg_mutual_information`] without
/// allocating; `scratch` is reused between calls.
pub fn replica_mutual_information(
    start: f64,
    others: impl IntoIterator<Item = f64>,
    table: &mut MiTable,
    scratch: &mut Vec<(f64, i32)>,
) -> f64 {
    let end = start + PACKET_DURATION;
    scratch.clear();
    let mut count = 0i32;
    for o in others {
        let o_end = o + PACKET_DURATION;
        if o_end <= start || o >= end {
            continue;
        }
        if o <= start {
            count += 1;
            scratch.push((o_end, -1));
        } else {
            scratch.push((o, 1));
        }
    }
    if scratch.is_empty() {
        return table.get(0);
    }
    scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut cursor = start;
    let mut acc = 0.0;
    for &(t, delta) in scratch.iter() {
        acc += (t - cursor) * table.get(count as usize);
        cursor = t;
        count += delta;
    }
    acc += (end - cursor) * table.get(count as usize);
    acc / PACKET_DURATION
}
