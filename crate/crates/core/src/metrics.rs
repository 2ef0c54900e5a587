//! Run traces and the quantities reported from them: pseudo- and realized
//! regret, optimal rate, decision counts and pool sizes.

use std::collections::HashMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::env::{OracleReport, RoundOutcome, World};
use crate::error::Result;
use crate::model::{Action, ActionId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Ucb,
    EpsilonGreedy,
    UserLevel,
    SystemLevel,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Ucb => "ucb",
            Phase::EpsilonGreedy => "egreedy",
            Phase::UserLevel => "ul",
            Phase::SystemLevel => "sl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    /// One-based slot index.
    pub t: u64,
    pub phase: Phase,
    pub action_id: ActionId,
    pub delay_s: f64,
    pub per_user_delay: Vec<f64>,
    pub expected_delay_s: f64,
    /// `|A''|` in system-level phases, the summed method-group sizes in the user level.
    pub pool_size: u64,
    pub decisions_cum: u64,
    pub dropped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "snake_case")]
pub enum EliminationScope {
    /// A method removed from one user's group; ids are method indices.
    User { user: usize, total_pulls: u64, removed_pulls: u64 },
    /// An action removed from the system-level pool.
    System { batch: u64, pool_before: usize, best_pulls: u64 },
}

/// One elimination, with the statistics that justified it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    /// Slot after whose observation the sweep ran.
    pub t: u64,
    pub scope: EliminationScope,
    pub removed: u64,
    pub removed_mean: f64,
    pub best: u64,
    pub best_mean: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub index: u64,
    pub allotted: u64,
    pub pool_before: usize,
    pub pulls_per_action: u64,
    pub pulled: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<SlotRecord>,
    pub eliminations: Vec<Elimination>,
    pub batches: Vec<BatchSummary>,
    /// Empirical best at the end of the run.
    pub survivor: Option<ActionId>,
    pub wall_clock_s: f64,
    /// Dropped slots add no regret when set.
    pub dropped_slots_free: bool,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn decisions(&self) -> u64 {
        self.records.last().map_or(0, |r| r.decisions_cum)
    }
}

/// Builds a [`RunTrace`] slot by slot while a policy runs.
#[derive(Debug)]
pub struct TraceRecorder {
    trace: RunTrace,
    decisions: u64,
    expected: HashMap<ActionId, f64>,
    started: Instant,
}

impl Default for TraceRecorder {
    fn default() -> Self {
        Self::new()
    }
}

impl TraceRecorder {
    pub fn new() -> Self {
        TraceRecorder {
            trace: RunTrace::default(),
            decisions: 0,
            expected: HashMap::new(),
            started: Instant::now(),
        }
    }

    pub fn next_t(&self) -> u64 {
        self.trace.records.len() as u64 + 1
    }

    pub fn slots_used(&self) -> u64 {
        self.trace.records.len() as u64
    }

    pub fn decide(&mut self) {
        self.decisions += 1;
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    pub fn eliminated(&mut self, e: Elimination) {
        self.trace.eliminations.push(e);
    }

    pub fn batch(&mut self, b: BatchSummary) {
        self.trace.batches.push(b);
    }

    pub fn set_dropped_slots_free(&mut self, free: bool) {
        self.trace.dropped_slots_free = free;
    }

    /// Pulls `action` in `world`, records the slot and returns the outcome.
    pub fn pull<W: World>(
        &mut self,
        world: &mut W,
        phase: Phase,
        action: &Action,
        pool_size: u64,
        dropped: bool,
    ) -> Result<RoundOutcome> {
        let expected = match self.expected.get(&action.id) {
            Some(&v) => v,
            None => {
                let v = world.expected_delay(action)?;
                self.expected.insert(action.id, v);
                v
            }
        };
        let outcome = world.sample_round(action)?;
        self.trace.records.push(SlotRecord {
            t: self.next_t(),
            phase,
            action_id: action.id,
            delay_s: outcome.total_delay,
            per_user_delay: outcome.per_user_delay.clone(),
            expected_delay_s: expected,
            pool_size,
            decisions_cum: self.decisions,
            dropped,
        });
        Ok(outcome)
    }

    pub fn finish(mut self, survivor: Option<ActionId>) -> RunTrace {
        self.trace.survivor = survivor;
        self.trace.wall_clock_s = self.started.elapsed().as_secs_f64();
        self.trace
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Cumulative pseudo-regret: the running sum of the chosen actions'
/// expected-delay gaps to the oracle optimum.
pub fn cumulative_regret(trace: &RunTrace, oracle: &OracleReport) -> Result<Vec<f64>> {
    let mut acc = CompensatedSum::default();
    trace
        .records
        .iter()
        .map(|r| {
            let gap = oracle.gap(r.action_id)?;
            if !(r.dropped && trace.dropped_slots_free) {
                acc.add(gap);
            }
            Ok(acc.value())
        })
        .collect()
}

/// Cumulative realized regret: observed delay minus `D*`, slot by slot.
pub fn realized_regret(trace: &RunTrace, oracle: &OracleReport) -> Vec<f64> {
    let mut acc = CompensatedSum::default();
    trace
        .records
        .iter()
        .map(|r| {
            if !(r.dropped && trace.dropped_slots_free) {
                acc.add(r.delay_s - oracle.best_expected_delay);
            }
            acc.value()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateWindow {
    Cumulative,
    Trailing(usize),
}

/// Fraction of slots whose chosen action is the oracle optimum.
pub fn optimal_rate(trace: &RunTrace, oracle: &OracleReport, window: RateWindow) -> Vec<f64> {
    let best = oracle.best_action.id;
    let hits: Vec<bool> = trace.records.iter().map(|r| r.action_id == best).collect();
    let mut count = 0usize;
    let mut out = Vec::with_capacity(hits.len());
    for (i, &hit) in hits.iter().enumerate() {
        count += usize::from(hit);
        match window {
            RateWindow::Cumulative => out.push(count as f64 / (i + 1) as f64),
            RateWindow::Trailing(k) => {
                let k = k.max(1);
                if i >= k {
                    count -= usize::from(hits[i - k]);
                }
                out.push(count as f64 / (i + 1).min(k) as f64);
            }
        }
    }
    out
}

pub fn decision_count(trace: &RunTrace) -> Vec<u64> {
    trace.records.iter().map(|r| r.decisions_cum).collect()
}

pub fn pool_size_series(trace: &RunTrace) -> Vec<u64> {
    trace.records.iter().map(|r| r.pool_size).collect()
}
