//! Synthetic graph generators: generalized preferential attachment and the
//! erased configuration model with Pareto-tailed degrees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::graph::{Graph, NodeId};

/// Generalized preferential attachment. Each new node attaches
/// `edges_per_node` edges to distinct existing nodes chosen with probability
/// proportional to `degree + attractiveness`.
///
/// The degree survival function then decays with tail exponent
/// `2 + attractiveness / edges_per_node` (density exponent one higher), so
/// `edges_per_node = 1, attractiveness = 0.5` gives average degree 2 and tail
/// exponent 2.5.
#[derive(Debug, Clone, PartialEq)]
pub struct PaConfig {
    pub n: usize,
    pub edges_per_node: usize,
    pub attractiveness: f64,
    pub seed: u64,
}

impl PaConfig {
    pub fn new(n: usize, edges_per_node: usize, attractiveness: f64, seed: u64) -> Self {
        PaConfig { n, edges_per_node, attractiveness, seed }
    }

    /// Target tail exponent of the degree survival function.
    pub fn tail_exponent(&self) -> f64 {
        2.0 + self.attractiveness / self.edges_per_node as f64
    }
}

/// Pareto tail `P[D > x] = c * x^(-gamma)` for `x > x_prime`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoTail {
    pub gamma: f64,
    pub c: f64,
    pub x_prime: f64,
}

impl ParetoTail {
    pub fn new(gamma: f64, c: f64, x_prime: f64) -> Result<Self> {
        let tail = ParetoTail { gamma, c, x_prime };
        tail.validate()?;
        Ok(tail)
    }

    /// Smallest cutoff for which the survival function stays at most one.
    pub fn min_cutoff(gamma: f64, c: f64) -> f64 {
        c.powf(1.0 / gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(invalid(format!("tail exponent gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(invalid(format!("tail scale C must be positive, got {}", self.c)));
        }
        if !(self.x_prime > 0.0) || !self.x_prime.is_finite() {
            return Err(invalid(format!("cutoff x' must be positive, got {}", self.x_prime)));
        }
        if self.survival(self.x_prime) > 1.0 + 1e-12 {
            return Err(invalid(format!(
                "C * x'^(-gamma) = {} exceeds 1; raise x' to at least {}",
                self.survival(self.x_prime),
                Self::min_cutoff(self.gamma, self.c)
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn survival(&self, x: f64) -> f64 {
        self.c * x.powf(-self.gamma)
    }

    /// Point whose survival probability is `u`.
    #[inline]
    pub fn quantile_of_survival(&self, u: f64) -> f64 {
        (self.c / u).powf(1.0 / self.gamma)
    }

    /// Discretized degree for a uniform draw `u` in `(0, 1]`: the ceiling of
    /// the Pareto variate, or `ceil(x')` when the variate falls below the
    /// cutoff.
    pub fn degree_from_uniform(&self, u: f64) -> u32 {
        let x = self.quantile_of_survival(u);
        let x = if x <= self.x_prime { self.x_prime } else { x };
        x.ceil().min(u32::MAX as f64) as u32
    }

    /// `P[D <= d]` of the discretized law, for integer `d`.
    pub fn degree_cdf(&self, d: u32) -> f64 {
        let floor = self.x_prime.ceil();
        if (d as f64) < floor {
            0.0
        } else {
            // D <= d  iff  X <= d, and X <= x' collapses onto ceil(x') <= d.
            1.0 - self.survival((d as f64).max(self.x_prime)).min(1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigModelConfig {
    pub n: usize,
    pub tail: ParetoTail,
    pub seed: u64,
}

pub fn generate_pa(cfg: &PaConfig) -> Result<Graph> {
    let n = cfg.n;
    let m = cfg.edges_per_node;
    let a = cfg.attractiveness;
    if n < 2 {
        return Err(invalid("preferential attachment needs n >= 2"));
    }
    if m == 0 {
        return Err(invalid("edges_per_node must be positive"));
    }
    if !a.is_finite() || a < -(m as f64) {
        return Err(invalid(format!("attractiveness must be >= -{m}, got {a}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut degree = vec![0u32; n];
    // Every edge contributes both endpoints, so a uniform pick is degree-biased.
    let mut endpoints: Vec<u32> = Vec::with_capacity(2 * n * m);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(n * m);

    // Seed: the first min(m + 1, n) nodes form a clique.
    let seed_nodes = (m + 1).min(n);
    for t in 1..seed_nodes {
        for s in 0..t {
            edges.push((t, s));
            endpoints.extend([t as u32, s as u32]);
            degree[t] += 1;
            degree[s] += 1;
        }
    }

    let mut targets: Vec<usize> = Vec::with_capacity(m);
    for t in seed_nodes..n {
        targets.clear();
        let mut attempts = 0usize;
        while targets.len() < m {
            attempts += 1;
            let cand = if attempts > 64 * m {
                // Too few nodes with positive weight; fill uniformly.
                rng.random_range(0..t)
            } else {
                pick_attachment(&mut rng, &endpoints, &degree, t, a)
            };
            if !targets.contains(&cand) {
                targets.push(cand);
            }
        }
        for &s in &targets {
            edges.push((t, s));
            endpoints.extend([t as u32, s as u32]);
            degree[t] += 1;
            degree[s] += 1;
        }
    }
    Graph::from_edges(n, edges)
}

/// Draws one node from `0..t` with probability proportional to `d + a`.
fn pick_attachment<R: Rng>(rng: &mut R, endpoints: &[u32], degree: &[u32], t: usize, a: f64) -> usize {
    let degree_mass = endpoints.len() as f64;
    let total = degree_mass + a * t as f64;
    if total <= 0.0 {
        return rng.random_range(0..t);
    }
    if a >= 0.0 {
        if rng.random::<f64>() * total < degree_mass {
            endpoints[rng.random_range(0..endpoints.len())] as usize
        } else {
            rng.random_range(0..t)
        }
    } else {
        // Rejection from the degree-biased pick: accept with (d + a) / d.
        loop {
            let v = endpoints[rng.random_range(0..endpoints.len())] as usize;
            let d = degree[v] as f64;
            if rng.random::<f64>() * d < d + a {
                return v;
            }
        }
    }
}

/// Draws `n` i.i.d. degrees from the discretized Pareto law and makes the
/// sum even by incrementing one uniformly chosen entry.
pub fn sample_degrees<R: Rng>(rng: &mut R, n: usize, tail: &ParetoTail) -> Vec<u32> {
    let mut degrees: Vec<u32> = (0..n)
        .map(|_| {
            // (0, 1]: avoids an infinite variate at u = 0.
            let u = 1.0 - rng.random::<f64>();
            tail.degree_from_uniform(u)
        })
        .collect();
    let sum: u64 = degrees.iter().map(|&d| d as u64).sum();
    if sum % 2 == 1 {
        let i = rng.random_range(0..n);
        degrees[i] = degrees[i].saturating_add(1);
    }
    degrees
}

/// Result of a configuration-model run, keeping the pre-erasure degrees.
#[derive(Debug, Clone)]
pub struct ConfigModelGraph {
    pub graph: Graph,
    pub sampled_degrees: Vec<u32>,
}

pub fn generate_config_model(cfg: &ConfigModelConfig) -> Result<Graph> {
    generate_config_model_detailed(cfg).map(|r| r.graph)
}

pub fn generate_config_model_detailed(cfg: &ConfigModelConfig) -> Result<ConfigModelGraph> {
    cfg.tail.validate()?;
    if cfg.n < 2 {
        return Err(invalid("configuration model needs n >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sampled_degrees = sample_degrees(&mut rng, cfg.n, &cfg.tail);
    let graph = pair_stubs(&mut rng, &sampled_degrees)?;
    Ok(ConfigModelGraph { graph, sampled_degrees })
}

/// Erased configuration model on a prescribed degree sequence with an even
/// sum: stubs are paired uniformly, then self-loops and repeated edges are
/// removed.
pub fn config_model_from_degrees(degrees: &[u32], seed: u64) -> Result<Graph> {
    let sum: u64 = degrees.iter().map(|&d| d as u64).sum();
    if sum % 2 == 1 {
        return Err(invalid("degree sequence has an odd sum"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pair_stubs(&mut rng, degrees)
}

fn pair_stubs<R: Rng>(rng: &mut R, degrees: &[u32]) -> Result<Graph> {
    let mut stubs: Vec<u32> = degrees
        .iter()
        .enumerate()
        .flat_map(|(i, &d)| std::iter::repeat_n(i as u32, d as usize))
        .collect();
    stubs.shuffle(rng);
    let edges = stubs.chunks_exact(2).map(|p| (p[0] as usize, p[1] as usize));
    Graph::from_edges(degrees.len(), edges)
}

/// Connected test graph: a random recursive tree plus `extra_edges` uniform
/// random pairs.
pub fn random_connected(n: usize, extra_edges: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(invalid("random_connected needs n >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(NodeId, NodeId)> = (1..n).map(|i| (i, rng.random_range(0..i))).collect();
    for _ in 0..extra_edges {
        edges.push((rng.random_range(0..n), rng.random_range(0..n)));
    }
    Graph::from_edges(n, edges)
}

/// Hill estimator of the tail exponent from the `k` largest values:
/// the reciprocal of the mean of `ln(x_(i) / x_(k+1))`, `i = 1..=k`.
pub fn hill_tail_index(values: &[u32], k: usize) -> Option<f64> {
    if k == 0 || k >= values.len() {
        return None;
    }
    let mut sorted: Vec<u32> = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let threshold = sorted[k] as f64;
    if threshold <= 0.0 {
        return None;
    }
    let mean_log: f64 = sorted[..k].iter().map(|&x| (x as f64 / threshold).ln()).sum::<f64>() / k as f64;
    (mean_log > 0.0).then(|| 1.0 / mean_log)
}
