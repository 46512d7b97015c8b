//! Top-k detection with a candidate list fed by walk samples, plus the
//! sample-count stopping rules.
//!
//! The candidate list keeps the `k` best distinct nodes seen so far under the
//! (-degree, id) order together with the number of times each was sampled.
//! Once the list is full its worst entry can only improve, so a node that is
//! rejected or evicted can never come back: a listed node has been in the
//! list since its first sample and its counter is its total hit count.
//!
//! The stopping statistics use the *repeat* hits `X = hits - 1` of each
//! entry. The sample that inserts a node is the reason it is listed at all,
//! so counting it would give every entry `X >= 1` and make the relaxed score
//! `sum (1 - e^{-X})` at least `k (1 - 1/e)` the moment the list fills.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::graph::{rank_key, DegreeRecord, Graph, NodeId};
use crate::walk::{SampleStream, WalkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub node: NodeId,
    pub degree: usize,
    /// Total number of samples of this node.
    pub hits: u64,
}

impl Candidate {
    /// Samples after the one that inserted the node.
    #[inline]
    pub fn repeat_hits(&self) -> u64 {
        self.hits.saturating_sub(1)
    }
}

/// What [`CandidateList::update`] did with a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Hit,
    Inserted { evicted: Option<NodeId> },
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateList {
    k: usize,
    entries: Vec<Candidate>,
}

impl CandidateList {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "candidate list capacity must be positive");
        CandidateList { k, entries: Vec::with_capacity(k + 1) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Entries from best to worst.
    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.k
    }

    pub fn worst(&self) -> Option<&Candidate> {
        self.entries.last()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.entries.iter().any(|c| c.node == node)
    }

    /// Repeat hits of each entry, best entry first.
    pub fn repeat_hits(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(Candidate::repeat_hits)
    }

    /// Repeat hits of the least-hit entry.
    pub fn min_repeat_hits(&self) -> Option<u64> {
        self.repeat_hits().min()
    }

    /// Records one sample of `node`, whose degree is `degree`.
    pub fn update(&mut self, node: NodeId, degree: usize) -> UpdateOutcome {
        let key = rank_key(degree as u32, node);
        if self.is_full() {
            let worst = self.entries.last().expect("full list is non-empty");
            if key < rank_key(worst.degree as u32, worst.node) {
                return UpdateOutcome::Rejected;
            }
        }
        let pos = self
            .entries
            .binary_search_by(|c| key.cmp(&rank_key(c.degree as u32, c.node)));
        match pos {
            Ok(i) => {
                self.entries[i].hits += 1;
                UpdateOutcome::Hit
            }
            Err(i) => {
                self.entries.insert(i, Candidate { node, degree, hits: 1 });
                let evicted = if self.entries.len() > self.k {
                    self.entries.pop().map(|c| c.node)
                } else {
                    None
                };
                UpdateOutcome::Inserted { evicted }
            }
        }
    }

    /// Full-list error estimate `2 (1 - prod (1 - exp(-X)))` over the current
    /// entries.
    pub fn a_hat_0(&self) -> f64 {
        2.0 * (1.0 - self.repeat_hits().map(|x| -(-(x as f64)).exp_m1()).product::<f64>())
    }

    /// Worst-entry bound `2 (1 - (1 - exp(-X_min))^k)`; never below
    /// [`a_hat_0`](Self::a_hat_0) on a full list.
    pub fn a_hat_1(&self) -> f64 {
        let x = self.min_repeat_hits().unwrap_or(0) as f64;
        2.0 * (1.0 - (-(-x).exp_m1()).powi(self.k as i32))
    }

    /// Relaxed score `sum (1 - exp(-X))`; missing entries contribute zero.
    pub fn b_m(&self) -> f64 {
        self.repeat_hits().map(|x| -(-(x as f64)).exp_m1()).sum()
    }

    /// Number of listed nodes that belong to `truth`.
    pub fn correct_count(&self, truth: &[DegreeRecord]) -> usize {
        self.entries.iter().filter(|c| truth.iter().any(|t| t.node == c.node)).count()
    }
}

pub fn update(list: &mut CandidateList, sample: NodeId, degree: usize) -> UpdateOutcome {
    list.update(sample, degree)
}

/// Fires when the list is full and its full-list error estimate is at most
/// `a_bar`.
pub fn stopping_rule_0(list: &CandidateList, a_bar: f64) -> bool {
    list.is_full() && list.a_hat_0() <= a_bar
}

/// Smallest natural `x` with `(1 - e^{-x})^k >= 1 - a_bar / 2`.
pub fn rule1_threshold(k: usize, a_bar: f64) -> Result<u64> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    if !(a_bar > 0.0 && a_bar < 2.0) {
        return Err(invalid(format!("a_bar must lie in (0, 2), got {a_bar}")));
    }
    let target = 1.0 - a_bar / 2.0;
    let mut x = 0u64;
    while (-(-(x as f64)).exp_m1()).powi(k as i32) < target {
        x += 1;
    }
    Ok(x)
}

/// Fires when the list is full and its least-hit entry has `x0` repeat hits.
pub fn stopping_rule_1(list: &CandidateList, x0: u64) -> bool {
    list.is_full() && list.min_repeat_hits().is_some_and(|h| h >= x0)
}

pub fn stopping_rule_2(list: &CandidateList, b_bar: f64) -> bool {
    list.b_m() >= b_bar
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop after exactly `m` samples.
    FixedM(u64),
    Rule0 { a_bar: f64 },
    Rule1 { x0: u64 },
    Rule2 { b_bar: f64 },
}

impl StopRule {
    pub fn rule1_from_a_bar(k: usize, a_bar: f64) -> Result<Self> {
        Ok(StopRule::Rule1 { x0: rule1_threshold(k, a_bar)? })
    }

    pub fn id(&self) -> &'static str {
        match self {
            StopRule::FixedM(_) => "fixed",
            StopRule::Rule0 { .. } => "r0",
            StopRule::Rule1 { .. } => "r1",
            StopRule::Rule2 { .. } => "r2",
        }
    }

    pub fn threshold(&self) -> f64 {
        match *self {
            StopRule::FixedM(m) => m as f64,
            StopRule::Rule0 { a_bar } => a_bar,
            StopRule::Rule1 { x0 } => x0 as f64,
            StopRule::Rule2 { b_bar } => b_bar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StopRule::FixedM(0) => Err(invalid("m must be at least 1")),
            StopRule::Rule0 { a_bar } if !(a_bar > 0.0) => Err(invalid("a_bar must be positive")),
            StopRule::Rule2 { b_bar } if !b_bar.is_finite() => Err(invalid("b_bar must be finite")),
            _ => Ok(()),
        }
    }

    pub fn fires(&self, list: &CandidateList, samples: u64) -> bool {
        match *self {
            StopRule::FixedM(m) => samples >= m,
            StopRule::Rule0 { a_bar } => stopping_rule_0(list, a_bar),
            StopRule::Rule1 { x0 } => stopping_rule_1(list, x0),
            StopRule::Rule2 { b_bar } => stopping_rule_2(list, b_bar),
        }
    }
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopDecision {
    pub rule: StopRule,
    /// False when the step cap was reached first.
    pub fired: bool,
    pub fired_at_samples: u64,
    pub raw_steps: u64,
    pub final_list: CandidateList,
}

impl StopDecision {
    pub fn threshold(&self) -> f64 {
        self.rule.threshold()
    }
}

/// A candidate list fed from a walk's sample stream.
#[derive(Debug)]
pub struct Detector<'g> {
    graph: &'g Graph,
    stream: SampleStream<'g>,
    list: CandidateList,
    samples: u64,
}

impl<'g> Detector<'g> {
    pub fn new(graph: &'g Graph, cfg: WalkConfig, k: usize) -> Result<Self> {
        if k == 0 || k > graph.n() {
            return Err(Error::InvalidK { k, n: graph.n() });
        }
        Ok(Detector { graph, stream: SampleStream::new(graph, cfg)?, list: CandidateList::new(k), samples: 0 })
    }

    /// Consumes one sample. Returns `false` once the step cap is exhausted.
    pub fn advance(&mut self) -> Result<bool> {
        match self.stream.next() {
            None => Ok(false),
            Some(Err(e)) => Err(e),
            Some(Ok(s)) => {
                let degree = self.graph.degrees()[s.node] as usize;
                self.list.update(s.node, degree);
                self.samples += 1;
                Ok(true)
            }
        }
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn raw_steps(&self) -> u64 {
        self.stream.raw_steps()
    }

    pub fn list(&self) -> &CandidateList {
        &self.list
    }

    pub fn into_list(self) -> CandidateList {
        self.list
    }
}

/// Runs the candidate-list detector for exactly `m` samples.
pub fn detect_fixed_m(g: &Graph, cfg: &WalkConfig, k: usize, m: u64) -> Result<CandidateList> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let mut det = Detector::new(g, *cfg, k)?;
    while det.samples() < m {
        if !det.advance()? {
            return Err(Error::Timeout { max_steps: cfg.max_steps });
        }
    }
    Ok(det.into_list())
}

/// Runs the detector until `rule` fires (checked after every sample) or the
/// step cap is reached, in which case the decision is marked as not fired.
pub fn detect_with_rule(g: &Graph, cfg: &WalkConfig, k: usize, rule: StopRule) -> Result<StopDecision> {
    rule.validate()?;
    let mut det = Detector::new(g, *cfg, k)?;
    let fired = loop {
        if !det.advance()? {
            break false;
        }
        if rule.fires(det.list(), det.samples()) {
            break true;
        }
    };
    Ok(StopDecision {
        rule,
        fired,
        fired_at_samples: det.samples(),
        raw_steps: det.raw_steps(),
        final_list: det.into_list(),
    })
}
