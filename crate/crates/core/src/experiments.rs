//! Replicated experiments: hitting-time distributions, accuracy against the
//! number of samples, and stopping-rule accuracy and cost.
//!
//! Every trial draws its walk seed from `(master_seed, trial)` alone, and
//! trials are assembled in index order, so a plan produces the same CSV bytes
//! no matter how many threads execute it. Ground truth is always the exact
//! top-k of the graph.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytics::{expected_correct_count, top_k_stationary, CountMode};
use crate::detector::{detect_with_rule, Detector, StopRule};
use crate::error::{invalid, Error, Result};
use crate::graph::{DegreeRecord, Graph};
use crate::walk::{walk_until_hit, HitOutcome, StartDist, WalkConfig};

/// z-value of a two-sided 95% normal interval.
const Z95: f64 = 1.959_963_984_540_054;

/// Seed of trial `trial`: the first output of a ChaCha8 stream selected by
/// the trial index.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng.next_u64()
}

fn check_runs(runs: usize) -> Result<()> {
    if runs == 0 {
        return Err(invalid("runs must be at least 1"));
    }
    Ok(())
}

fn mean_and_ci(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.len() as f64;
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Output shared by every experiment: CSV rows plus `key=value` summary lines.
pub trait Report {
    fn write_csv<W: Write>(&self, writer: W) -> Result<()>;
    fn summary_lines(&self) -> Vec<(String, String)>;

    fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

// ---------------------------------------------------------------- hitting

#[derive(Debug, Clone, PartialEq)]
pub struct HittingTimePlan {
    pub walk: WalkConfig,
    pub runs: usize,
    pub master_seed: u64,
    pub start: StartDist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HittingTrial {
    pub trial: u64,
    /// `None` when the walk hit the step cap.
    pub steps: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HittingSummary {
    pub trials: usize,
    pub timeouts: usize,
    pub mean: f64,
    pub median: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` bin edges over the completed trials.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub timeouts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HittingReport {
    pub target: DegreeRecord,
    pub trials: Vec<HittingTrial>,
}

impl HittingReport {
    fn completed(&self) -> Vec<u64> {
        self.trials.iter().filter_map(|t| t.steps).collect()
    }

    pub fn summary(&self) -> HittingSummary {
        let mut done = self.completed();
        done.sort_unstable();
        let timeouts = self.trials.len() - done.len();
        let (mean, ci) = mean_and_ci(done.iter().map(|&s| s as f64));
        let median = match done.len() {
            0 => f64::NAN,
            l if l % 2 == 1 => done[l / 2] as f64,
            l => (done[l / 2 - 1] + done[l / 2]) as f64 / 2.0,
        };
        HittingSummary { trials: self.trials.len(), timeouts, mean, median, std_err: ci / Z95 }
    }

    pub fn histogram(&self, bins: usize) -> Histogram {
        let done = self.completed();
        let timeouts = self.trials.len() - done.len();
        let bins = bins.max(1);
        let hi = done.iter().copied().max().unwrap_or(0) as f64 + 1.0;
        let width = hi / bins as f64;
        let edges = (0..=bins).map(|b| b as f64 * width).collect();
        let mut counts = vec![0; bins];
        for s in done {
            counts[((s as f64 / width) as usize).min(bins - 1)] += 1;
        }
        Histogram { edges, counts, timeouts }
    }
}

impl Report for HittingReport {
    fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["trial", "steps"])?;
        for t in &self.trials {
            let steps = t.steps.map_or_else(|| "timeout".to_string(), |s| s.to_string());
            w.write_record([t.trial.to_string(), steps])?;
        }
        w.flush()?;
        Ok(())
    }

    fn summary_lines(&self) -> Vec<(String, String)> {
        let s = self.summary();
        vec![
            ("target".into(), self.target.node.to_string()),
            ("target_degree".into(), self.target.degree.to_string()),
            ("trials".into(), s.trials.to_string()),
            ("timeouts".into(), s.timeouts.to_string()),
            ("mean".into(), s.mean.to_string()),
            ("median".into(), s.median.to_string()),
            ("std_err".into(), s.std_err.to_string()),
        ]
    }
}

/// Hitting times to the largest-degree node.
pub fn run_hitting_time(g: &Graph, plan: &HittingTimePlan) -> Result<HittingReport> {
    check_runs(plan.runs)?;
    plan.walk.validate()?;
    let target = g.max_degree_node().ok_or_else(|| invalid("empty graph"))?;
    let trials = (0..plan.runs as u64)
        .into_par_iter()
        .map(|trial| {
            let cfg = plan.walk.with_seed(trial_seed(plan.master_seed, trial));
            let steps = match walk_until_hit(g, &cfg, plan.start, target.node)? {
                HitOutcome::Hit(s) => Some(s),
                HitOutcome::Timeout => None,
            };
            Ok(HittingTrial { trial, steps })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HittingReport { target, trials })
}

// ---------------------------------------------------------------- accuracy

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyPlan {
    pub walk: WalkConfig,
    pub k: usize,
    /// Sample counts at which the candidate list is scored, strictly
    /// increasing.
    pub m_grid: Vec<u64>,
    pub runs: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRow {
    pub m: u64,
    pub mean_correct: f64,
    /// Half-width of the 95% normal confidence interval.
    pub ci95: f64,
    pub exact: f64,
    pub poisson: f64,
}

impl AccuracyRow {
    pub fn exact_within_ci(&self) -> bool {
        (self.mean_correct - self.exact).abs() <= self.ci95
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
    /// `per_trial[t][i]` is the correct count of trial `t` at `m_grid[i]`.
    pub per_trial: Vec<Vec<usize>>,
}

impl Report for AccuracyReport {
    fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["m", "mean_correct", "ci95", "exact", "poisson"])?;
        for r in &self.rows {
            w.write_record([
                r.m.to_string(),
                r.mean_correct.to_string(),
                r.ci95.to_string(),
                r.exact.to_string(),
                r.poisson.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn summary_lines(&self) -> Vec<(String, String)> {
        let inside = self.rows.iter().filter(|r| r.exact_within_ci()).count();
        let gap = self.rows.iter().map(|r| (r.exact - r.poisson).abs()).fold(0.0, f64::max);
        vec![
            ("runs".into(), self.per_trial.len().to_string()),
            ("points".into(), self.rows.len().to_string()),
            ("exact_inside_ci".into(), inside.to_string()),
            ("max_exact_poisson_gap".into(), gap.to_string()),
        ]
    }
}

/// Mean number of true top-k nodes in the candidate list after each `m` of
/// the grid, with the i.i.d. curves for comparison.
pub fn run_accuracy_curve(g: &Graph, plan: &AccuracyPlan) -> Result<AccuracyReport> {
    check_runs(plan.runs)?;
    if plan.m_grid.is_empty() || plan.m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("m_grid must be non-empty and strictly increasing"));
    }
    let truth = g.exact_top_k(plan.k)?;
    let pis = top_k_stationary(g, plan.walk.alpha, plan.k)?;
    let per_trial = (0..plan.runs as u64)
        .into_par_iter()
        .map(|trial| {
            let cfg = plan.walk.with_seed(trial_seed(plan.master_seed, trial));
            let mut det = Detector::new(g, cfg, plan.k)?;
            let mut counts = Vec::with_capacity(plan.m_grid.len());
            for &m in &plan.m_grid {
                while det.samples() < m {
                    if !det.advance()? {
                        return Err(Error::Timeout { max_steps: cfg.max_steps });
                    }
                }
                counts.push(det.list().correct_count(&truth));
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = plan
        .m_grid
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let (mean_correct, ci95) = mean_and_ci(per_trial.iter().map(|c| c[i] as f64));
            AccuracyRow {
                m,
                mean_correct,
                ci95,
                exact: expected_correct_count(&pis, m, CountMode::Exact),
                poisson: expected_correct_count(&pis, m, CountMode::Poisson),
            }
        })
        .collect();
    Ok(AccuracyReport { rows, per_trial })
}

// ---------------------------------------------------------------- stopping

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingPlan {
    pub walk: WalkConfig,
    pub k: usize,
    pub rule: StopRule,
    pub runs: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoppingTrial {
    pub trial: u64,
    pub raw_steps: u64,
    pub samples: u64,
    pub correct_count: usize,
    pub full_list_correct: bool,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSummary {
    pub trials: usize,
    pub timeouts: usize,
    pub mean_correct: f64,
    pub mean_raw_steps: f64,
    pub mean_samples: f64,
    /// Fraction of trials whose final list held every true top-k node.
    pub full_list_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingReport {
    pub rule: StopRule,
    pub trials: Vec<StoppingTrial>,
}

impl StoppingReport {
    pub fn summary(&self) -> StoppingSummary {
        let n = self.trials.len() as f64;
        let mean = |f: &dyn Fn(&StoppingTrial) -> f64| self.trials.iter().map(f).sum::<f64>() / n;
        StoppingSummary {
            trials: self.trials.len(),
            timeouts: self.trials.iter().filter(|t| !t.fired).count(),
            mean_correct: mean(&|t| t.correct_count as f64),
            mean_raw_steps: mean(&|t| t.raw_steps as f64),
            mean_samples: mean(&|t| t.samples as f64),
            full_list_accuracy: mean(&|t| t.full_list_correct as u8 as f64),
        }
    }
}

impl Report for StoppingReport {
    fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["trial", "raw_steps", "samples", "correct_count", "full_list_correct"])?;
        for t in &self.trials {
            w.write_record([
                t.trial.to_string(),
                t.raw_steps.to_string(),
                t.samples.to_string(),
                t.correct_count.to_string(),
                t.full_list_correct.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn summary_lines(&self) -> Vec<(String, String)> {
        let s = self.summary();
        vec![
            ("rule".into(), self.rule.id().into()),
            ("threshold".into(), self.rule.threshold().to_string()),
            ("trials".into(), s.trials.to_string()),
            ("timeouts".into(), s.timeouts.to_string()),
            ("mean_correct".into(), s.mean_correct.to_string()),
            ("mean_raw_steps".into(), s.mean_raw_steps.to_string()),
            ("mean_samples".into(), s.mean_samples.to_string()),
            ("full_list_accuracy".into(), s.full_list_accuracy.to_string()),
        ]
    }
}

/// Accuracy and cost of a stopping rule. The rules assume near-independent
/// samples, so a thinned or restart sampling mode is the intended setting.
pub fn run_stopping_eval(g: &Graph, plan: &StoppingPlan) -> Result<StoppingReport> {
    check_runs(plan.runs)?;
    let truth = g.exact_top_k(plan.k)?;
    let trials = (0..plan.runs as u64)
        .into_par_iter()
        .map(|trial| {
            let cfg = plan.walk.with_seed(trial_seed(plan.master_seed, trial));
            let d = detect_with_rule(g, &cfg, plan.k, plan.rule)?;
            let correct_count = d.final_list.correct_count(&truth);
            Ok(StoppingTrial {
                trial,
                raw_steps: d.raw_steps,
                samples: d.fired_at_samples,
                correct_count,
                full_list_correct: correct_count == plan.k,
                fired: d.fired,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StoppingReport { rule: plan.rule, trials })
}

// ---------------------------------------------------------------- dispatch

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentPlan {
    HittingTime(HittingTimePlan),
    AccuracyCurve(AccuracyPlan),
    StoppingEval(StoppingPlan),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentReport {
    HittingTime(HittingReport),
    AccuracyCurve(AccuracyReport),
    StoppingEval(StoppingReport),
}

impl ExperimentPlan {
    pub fn run(&self, g: &Graph) -> Result<ExperimentReport> {
        Ok(match self {
            ExperimentPlan::HittingTime(p) => ExperimentReport::HittingTime(run_hitting_time(g, p)?),
            ExperimentPlan::AccuracyCurve(p) => ExperimentReport::AccuracyCurve(run_accuracy_curve(g, p)?),
            ExperimentPlan::StoppingEval(p) => ExperimentReport::StoppingEval(run_stopping_eval(g, p)?),
        })
    }
}

impl Report for ExperimentReport {
    fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        match self {
            ExperimentReport::HittingTime(r) => r.write_csv(writer),
            ExperimentReport::AccuracyCurve(r) => r.write_csv(writer),
            ExperimentReport::StoppingEval(r) => r.write_csv(writer),
        }
    }

    fn summary_lines(&self) -> Vec<(String, String)> {
        match self {
            ExperimentReport::HittingTime(r) => r.summary_lines(),
            ExperimentReport::AccuracyCurve(r) => r.summary_lines(),
            ExperimentReport::StoppingEval(r) => r.summary_lines(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::SamplingMode;

    fn star4() -> Graph {
        Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    #[test]
    fn trial_seeds_are_distinct_and_stable() {
        let a: Vec<_> = (0..100).map(|t| trial_seed(7, t)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_eq!(trial_seed(7, 42), a[42]);
        assert_ne!(trial_seed(8, 42), a[42]);
    }

    #[test]
    fn single_run_gives_single_row() {
        let plan = StoppingPlan {
            walk: WalkConfig::new(1.0, 0).with_mode(SamplingMode::thinned(0.5)),
            k: 1,
            rule: StopRule::Rule2 { b_bar: 0.5 },
            runs: 1,
            master_seed: 3,
        };
        let r = run_stopping_eval(&star4(), &plan).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert_eq!(r.to_csv_string().lines().count(), 2);
    }

    #[test]
    fn zero_threshold_fires_on_first_sample() {
        let transient = 10;
        let plan = StoppingPlan {
            walk: WalkConfig::new(1.0, 0).with_mode(SamplingMode::Thinned { transient, q: 1.0 }),
            k: 2,
            rule: StopRule::Rule2 { b_bar: 0.0 },
            runs: 20,
            master_seed: 3,
        };
        let r = run_stopping_eval(&star4(), &plan).unwrap();
        for t in &r.trials {
            assert!(t.fired);
            assert_eq!(t.samples, 1);
            assert_eq!(t.raw_steps, transient + 1);
            assert!(t.correct_count <= 1);
        }
    }

    #[test]
    fn accuracy_curve_at_zero_is_zero() {
        let plan = AccuracyPlan {
            walk: WalkConfig::new(1.0, 0),
            k: 1,
            m_grid: vec![0, 3],
            runs: 50,
            master_seed: 1,
        };
        let r = run_accuracy_curve(&star4(), &plan).unwrap();
        assert_eq!(r.rows[0].mean_correct, 0.0);
        assert_eq!(r.rows[0].ci95, 0.0);
        assert_eq!(r.rows[0].exact, 0.0);
    }

    #[test]
    fn bad_plans_rejected() {
        let g = star4();
        let mut plan = AccuracyPlan { walk: WalkConfig::new(1.0, 0), k: 1, m_grid: vec![5, 5], runs: 2, master_seed: 0 };
        assert!(run_accuracy_curve(&g, &plan).is_err());
        plan.m_grid = vec![1, 2];
        plan.runs = 0;
        assert!(run_accuracy_curve(&g, &plan).is_err());
    }

    #[test]
    fn disconnected_timeouts_are_kept() {
        let g = Graph::from_edges(7, [(0, 1), (0, 2), (0, 3), (4, 5), (5, 6), (6, 4)]).unwrap();
        let plan = HittingTimePlan {
            walk: WalkConfig::new(0.0, 0).with_max_steps(500),
            runs: 200,
            master_seed: 11,
            start: StartDist::Uniform,
        };
        let r = run_hitting_time(&g, &plan).unwrap();
        assert_eq!(r.target.node, 0);
        let s = r.summary();
        assert_eq!(s.trials, 200);
        assert!(s.timeouts > 0);
        // Exactly the trials that start in the other triangle time out.
        for t in &r.trials {
            let start = crate::walk::WalkState::start(&g, StartDist::Uniform, trial_seed(11, t.trial)).unwrap().current();
            assert_eq!(t.steps.is_none(), start >= 4);
        }
        let h = r.histogram(4);
        assert_eq!(h.timeouts, s.timeouts);
        assert_eq!(h.counts.iter().sum::<usize>() + h.timeouts, 200);
        assert!(r.to_csv_string().contains("timeout"));
    }
}
