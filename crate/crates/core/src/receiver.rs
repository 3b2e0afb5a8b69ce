//! Sliding-window successive interference cancellation (SIC) receiver.
//!
//! The receiver looks at a window of `window_span * T_f`. Inside it, any
//! replica whose average mutual information clears the rate is decoded and
//! every replica of its user is cancelled, wherever it lies. When nothing
//! else decodes the window slides by `window_step * T_f`, and users whose
//! whole virtual frame has fallen behind the window are declared lost.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{is_decodable, replica_mutual_information, MiTable};
use crate::model::{SystemConfig, TimeInterval, PACKET_DURATION};
use crate::traffic::TrafficTrace;

/// Per-user decision, with the window start at which it was taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Pending,
    Decoded { window_start: f64 },
    Lost { window_start: f64 },
}

/// Order in which decodable replicas are picked inside one SIC pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicOrder {
    /// Candidates taken in start-time order.
    Ascending,
    /// Candidates drawn uniformly at random from the work list.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Replica {
    start: f64,
    user: u32,
}

/// Receiver state over one trace.
pub struct Receiver<'a> {
    cfg: &'a SystemConfig,
    trace: &'a TrafficTrace,
    replicas: Vec<Replica>,
    // Replica indices of each user, flattened: user u owns
    // `user_replicas[user_offsets[u]..user_offsets[u + 1]]`.
    user_offsets: Vec<usize>,
    user_replicas: Vec<u32>,
    active: Vec<bool>,
    outcomes: Vec<Outcome>,
    window_start: f64,
    // Users before this index (in arrival order) are no longer pending-and-in-range.
    loss_cursor: usize,
    last_vf_end: f64,
    table: MiTable,
    scratch: Vec<(f64, i32)>,
    neighbour_starts: Vec<f64>,
    worklist: Vec<usize>,
}

impl<'a> Receiver<'a> {
    /// Creates a receiver whose window ends at the first arrival.
    pub fn new(trace: &'a TrafficTrace, cfg: &'a SystemConfig) -> Self {
        let first = trace.users.first().map(|u| u.arrival).unwrap_or(0.0);
        Self::with_window_start(trace, cfg, first - cfg.window_len())
    }

    pub fn with_window_start(
        trace: &'a TrafficTrace,
        cfg: &'a SystemConfig,
        window_start: f64,
    ) -> Self {
        let mut replicas: Vec<Replica> = trace
            .users
            .iter()
            .enumerate()
            .flat_map(|(u, user)| {
                user.replica_starts().iter().map(move |&start| Replica {
                    start,
                    user: u as u32,
                })
            })
            .collect();
        replicas.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.user.cmp(&b.user)));

        let n_users = trace.users.len();
        let mut user_offsets = vec![0usize; n_users + 1];
        for r in &replicas {
            user_offsets[r.user as usize + 1] += 1;
        }
        for u in 0..n_users {
            user_offsets[u + 1] += user_offsets[u];
        }
        let mut fill = user_offsets.clone();
        let mut user_replicas = vec![0u32; replicas.len()];
        for (i, r) in replicas.iter().enumerate() {
            let slot = &mut fill[r.user as usize];
            user_replicas[*slot] = i as u32;
            *slot += 1;
        }

        let last_vf_end = trace
            .users
            .iter()
            .map(|u| u.vf_end(cfg.vf_span))
            .fold(f64::NEG_INFINITY, f64::max);

        Self {
            cfg,
            trace,
            active: vec![true; replicas.len()],
            replicas,
            user_offsets,
            user_replicas,
            outcomes: vec![Outcome::Pending; n_users],
            window_start,
            loss_cursor: 0,
            last_vf_end,
            table: MiTable::new(cfg.snr_linear),
            scratch: Vec::new(),
            neighbour_starts: Vec::new(),
            worklist: Vec::new(),
        }
    }

    pub fn window(&self) -> TimeInterval {
        TimeInterval {
            begin: self.window_start,
            end: self.window_start + self.cfg.window_len(),
        }
    }

    /// Outcome of every user, indexed like `trace.users`.
    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn decoded_users(&self) -> Vec<u64> {
        self.users_where(|o| matches!(o, Outcome::Decoded { .. }))
    }

    pub fn lost_users(&self) -> Vec<u64> {
        self.users_where(|o| matches!(o, Outcome::Lost { .. }))
    }

    fn users_where(&self, pred: impl Fn(&Outcome) -> bool) -> Vec<u64> {
        self.outcomes
            .iter()
            .zip(&self.trace.users)
            .filter(|(o, _)| pred(o))
            .map(|(_, u)| u.user_id)
            .collect()
    }

    /// Number of replicas still present on the channel.
    pub fn active_replica_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Range of replica indices lying entirely inside the window.
    fn window_range(&self) -> (usize, usize) {
        let w = self.window();
        let lo = self.replicas.partition_point(|r| r.start < w.begin);
        let hi = self
            .replicas
            .partition_point(|r| r.start + PACKET_DURATION <= w.end);
        (lo, hi.max(lo))
    }

    /// Indices of active replicas overlapping replica `i` (excluding `i`).
    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let s = self.replicas[i].start;
        let left = (0..i)
            .rev()
            .take_while(move |&j| s - self.replicas[j].start < PACKET_DURATION);
        let right = (i + 1..self.replicas.len())
            .take_while(move |&j| self.replicas[j].start - s < PACKET_DURATION);
        left.chain(right).filter(|&j| self.active[j])
    }

    fn replica_decodable(&mut self, i: usize) -> bool {
        let mut starts = std::mem::take(&mut self.neighbour_starts);
        starts.clear();
        starts.extend(self.neighbours(i).map(|j| self.replicas[j].start));
        let mi = replica_mutual_information(
            self.replicas[i].start,
            starts.iter().copied(),
            &mut self.table,
            &mut self.scratch,
        );
        self.neighbour_starts = starts;
        is_decodable(mi, self.cfg.rate)
    }

    /// Runs SIC at the current window position until no replica inside the
    /// window decodes. Returns whether at least one user was decoded.
    pub fn sic_pass(&mut self, order: SicOrder) -> bool {
        let (lo, hi) = self.window_range();
        let mut worklist = std::mem::take(&mut self.worklist);
        worklist.clear();
        worklist.extend((lo..hi).filter(|&i| self.active[i]));

        let mut rng = match order {
            SicOrder::Ascending => {
                worklist.reverse();
                None
            }
            SicOrder::Shuffled { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                worklist.shuffle(&mut rng);
                Some(rng)
            }
        };

        let mut progressed = false;
        while !worklist.is_empty() {
            let i = match rng.as_mut() {
                Some(rng) => {
                    let k = rng.random_range(0..worklist.len());
                    worklist.swap_remove(k)
                }
                None => worklist.pop().unwrap(),
            };
            if !self.active[i] || !self.replica_decodable(i) {
                continue;
            }
            progressed = true;
            let user = self.replicas[i].user as usize;
            self.outcomes[user] = Outcome::Decoded {
                window_start: self.window_start,
            };
            for k in self.user_offsets[user]..self.user_offsets[user + 1] {
                let r = self.user_replicas[k] as usize;
                self.active[r] = false;
            }
            for k in self.user_offsets[user]..self.user_offsets[user + 1] {
                let r = self.user_replicas[k] as usize;
                worklist.extend(self.neighbours(r).filter(|&j| j >= lo && j < hi));
            }
        }
        self.worklist = worklist;
        progressed
    }

    /// Advances the window by one step and declares lost every pending user
    /// whose virtual frame ends at or before the new window start.
    pub fn slide(&mut self) {
        self.window_start += self.cfg.step_len();
        let users = &self.trace.users;
        while self.loss_cursor < users.len()
            && users[self.loss_cursor].vf_end(self.cfg.vf_span) <= self.window_start
        {
            let u = self.loss_cursor;
            if self.outcomes[u] == Outcome::Pending {
                self.outcomes[u] = Outcome::Lost {
                    window_start: self.window_start,
                };
                for k in self.user_offsets[u]..self.user_offsets[u + 1] {
                    let r = self.user_replicas[k] as usize;
                    self.active[r] = false;
                }
            }
            self.loss_cursor += 1;
        }
    }

    /// Alternates SIC passes and slides until every user is classified.
    pub fn run(&mut self) {
        if self.trace.users.is_empty() {
            return;
        }
        loop {
            self.sic_pass(SicOrder::Ascending);
            if self.window_start > self.last_vf_end {
                break;
            }
            self.slide();
        }
    }

    /// Writes `user_id,degree,outcome,window_start` for every classified user.
    pub fn write_outcomes_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "user_id,degree,outcome,window_start")?;
        for (user, outcome) in self.trace.users.iter().zip(&self.outcomes) {
            let (label, ws) = match outcome {
                Outcome::Decoded { window_start } => ("decoded", *window_start),
                Outcome::Lost { window_start } => ("lost", *window_start),
                Outcome::Pending => continue,
            };
            writeln!(out, "{},{},{},{}", user.user_id, user.degree(), label, ws)?;
        }
        Ok(())
    }
}

/// Decoded and lost user ids after a full receiver run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiverResult {
    pub decoded: Vec<u64>,
    pub lost: Vec<u64>,
}

/// Runs the sliding-window SIC receiver over a whole trace.
pub fn run_receiver(trace: &TrafficTrace, cfg: &SystemConfig) -> ReceiverResult {
    let mut rx = Receiver::new(trace, cfg);
    rx.run();
    ReceiverResult {
        decoded: rx.decoded_users(),
        lost: rx.lost_users(),
    }
}
