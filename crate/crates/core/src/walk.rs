//! Random walk with uniform jumps and the sample streams built on top of it.
//!
//! From node `i` with degree `d_i` the walk moves to `j` with probability
//! `(alpha/n + 1) / (d_i + alpha)` when `j` is a neighbor and
//! `(alpha/n) / (d_i + alpha)` otherwise (including `j = i`). It is realized
//! in two stages: with probability `alpha / (d_i + alpha)` jump to a uniform
//! node among all `n`, otherwise move to a uniform neighbor. The stationary
//! law is `pi_i = (d_i + alpha) / (2|E| + n alpha)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, NodeId};

pub const DEFAULT_TRANSIENT: u64 = 100;
pub const DEFAULT_Q: f64 = 0.5;
pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

/// Which walk visits become samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    /// Every visited node after each step.
    EveryStep,
    /// One uninterrupted walk; after `transient` raw steps each visit is kept
    /// independently with probability `q`.
    Thinned { transient: u64, q: f64 },
    /// Each sample is the last node of a fresh walk of `burn_in` steps started
    /// from a uniform node.
    Restart { burn_in: u64 },
}

impl SamplingMode {
    pub fn thinned(q: f64) -> Self {
        SamplingMode::Thinned { transient: DEFAULT_TRANSIENT, q }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub alpha: f64,
    pub seed: u64,
    pub max_steps: u64,
    pub mode: SamplingMode,
}

impl WalkConfig {
    pub fn new(alpha: f64, seed: u64) -> Self {
        WalkConfig { alpha, seed, max_steps: DEFAULT_MAX_STEPS, mode: SamplingMode::EveryStep }
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps must be at least 1"));
        }
        match self.mode {
            SamplingMode::Thinned { q, .. } if !(q > 0.0 && q <= 1.0) => {
                Err(invalid(format!("q must lie in (0, 1], got {q}")))
            }
            SamplingMode::Restart { burn_in: 0 } => Err(invalid("restart burn-in must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Where a walk starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartDist {
    Uniform,
    Fixed(NodeId),
}

/// A node emitted by a sample stream with the raw step at which it was
/// visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub node: NodeId,
    pub step_index: u64,
}

/// Position and randomness of one walker.
#[derive(Debug, Clone)]
pub struct WalkState {
    current: NodeId,
    steps_taken: u64,
    rng: ChaCha8Rng,
}

impl WalkState {
    pub fn new(start: NodeId, seed: u64) -> Self {
        WalkState { current: start, steps_taken: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn from_rng(start: NodeId, rng: ChaCha8Rng) -> Self {
        WalkState { current: start, steps_taken: 0, rng }
    }

    /// Places the walker according to `start`, drawing from its own RNG when
    /// the start is uniform.
    pub fn start(g: &Graph, start: StartDist, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let node = pick_start(g, start, &mut rng)?;
        Ok(Self::from_rng(node, rng))
    }

    #[inline]
    pub fn current(&self) -> NodeId {
        self.current
    }

    #[inline]
    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn set_current(&mut self, node: NodeId) {
        self.current = node;
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Takes one step and returns the new position.
    #[inline]
    pub fn step(&mut self, g: &Graph, alpha: f64) -> Result<NodeId> {
        let next = step_from(g, self.current, alpha, &mut self.rng)?;
        self.current = next;
        self.steps_taken += 1;
        Ok(next)
    }
}

/// One step from `current`.
pub fn step(g: &Graph, state: &mut WalkState, alpha: f64) -> Result<NodeId> {
    state.step(g, alpha)
}

#[inline]
fn step_from<R: Rng>(g: &Graph, current: NodeId, alpha: f64, rng: &mut R) -> Result<NodeId> {
    let adj = g.neighbors(current);
    let d = adj.len();
    if d == 0 {
        if alpha > 0.0 {
            return Ok(rng.random_range(0..g.n()));
        }
        return Err(Error::Stuck { node: current });
    }
    if alpha == 0.0 {
        return Ok(adj[rng.random_range(0..d)] as usize);
    }
    // u in [0, d + alpha): below alpha means jump, otherwise the integer part
    // of u - alpha selects the neighbor.
    let u = rng.random::<f64>() * (d as f64 + alpha);
    if u < alpha {
        Ok(rng.random_range(0..g.n()))
    } else {
        let idx = ((u - alpha) as usize).min(d - 1);
        Ok(adj[idx] as usize)
    }
}

fn pick_start<R: Rng>(g: &Graph, start: StartDist, rng: &mut R) -> Result<NodeId> {
    let n = g.n();
    if n == 0 {
        return Err(invalid("graph has no nodes"));
    }
    match start {
        StartDist::Uniform => Ok(rng.random_range(0..n)),
        StartDist::Fixed(node) if node < n => Ok(node),
        StartDist::Fixed(node) => Err(Error::NodeOutOfRange { node, n }),
    }
}

/// Outcome of [`walk_until_hit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitOutcome {
    Hit(u64),
    Timeout,
}

impl HitOutcome {
    pub fn steps(self) -> Option<u64> {
        match self {
            HitOutcome::Hit(s) => Some(s),
            HitOutcome::Timeout => None,
        }
    }
}

/// Walks until the first visit to `target`. Starting on the target counts as
/// zero steps. The sampling mode of `cfg` is ignored.
pub fn walk_until_hit(g: &Graph, cfg: &WalkConfig, start: StartDist, target: NodeId) -> Result<HitOutcome> {
    cfg.validate()?;
    if target >= g.n() {
        return Err(Error::NodeOutOfRange { node: target, n: g.n() });
    }
    let mut state = WalkState::start(g, start, cfg.seed)?;
    if state.current == target {
        return Ok(HitOutcome::Hit(0));
    }
    while state.steps_taken < cfg.max_steps {
        if state.step(g, cfg.alpha)? == target {
            return Ok(HitOutcome::Hit(state.steps_taken));
        }
    }
    Ok(HitOutcome::Timeout)
}

/// Iterator over the samples of one walk, started at a uniform node. It ends
/// once `max_steps` raw steps have been taken.
#[derive(Debug, Clone)]
pub struct SampleStream<'g> {
    graph: &'g Graph,
    cfg: WalkConfig,
    state: WalkState,
    failed: bool,
}

impl<'g> SampleStream<'g> {
    pub fn new(graph: &'g Graph, cfg: WalkConfig) -> Result<Self> {
        cfg.validate()?;
        let state = WalkState::start(graph, StartDist::Uniform, cfg.seed)?;
        Ok(SampleStream { graph, cfg, state, failed: false })
    }

    /// Raw walk steps consumed so far.
    pub fn raw_steps(&self) -> u64 {
        self.state.steps_taken
    }

    pub fn config(&self) -> &WalkConfig {
        &self.cfg
    }

    fn next_sample(&mut self) -> Result<Option<Sample>> {
        let g = self.graph;
        let alpha = self.cfg.alpha;
        let max = self.cfg.max_steps;
        match self.cfg.mode {
            SamplingMode::EveryStep => {
                if self.state.steps_taken >= max {
                    return Ok(None);
                }
                let node = self.state.step(g, alpha)?;
                Ok(Some(Sample { node, step_index: self.state.steps_taken }))
            }
            SamplingMode::Thinned { transient, q } => loop {
                if self.state.steps_taken >= max {
                    return Ok(None);
                }
                let node = self.state.step(g, alpha)?;
                if self.state.steps_taken <= transient {
                    continue;
                }
                // q = 1 consumes no extra randomness, so it reproduces EveryStep.
                if q >= 1.0 || self.state.rng.random::<f64>() < q {
                    return Ok(Some(Sample { node, step_index: self.state.steps_taken }));
                }
            },
            SamplingMode::Restart { burn_in } => {
                if self.state.steps_taken.saturating_add(burn_in) > max {
                    return Ok(None);
                }
                let start = self.state.rng.random_range(0..g.n());
                self.state.current = start;
                for _ in 0..burn_in {
                    self.state.step(g, alpha)?;
                }
                Ok(Some(Sample { node: self.state.current, step_index: self.state.steps_taken }))
            }
        }
    }
}

impl Iterator for SampleStream<'_> {
    type Item = Result<Sample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.next_sample() {
            Ok(s) => s.map(Ok),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

pub fn sample_stream(g: &Graph, cfg: WalkConfig) -> Result<SampleStream<'_>> {
    SampleStream::new(g, cfg)
}
