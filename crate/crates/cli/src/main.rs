use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use topk_walk::analytics::{
    self, evt_predict_with, expected_correct_count, hitting_time_asymptotic, hitting_time_exact,
    poisson_error_bound, CountMode, InitialDist, MaxDegreeStatistic,
};
use topk_walk::detector::rule1_threshold;
use topk_walk::experiments::{
    AccuracyPlan, ExperimentPlan, ExperimentReport, HittingTimePlan, Report, StoppingPlan,
};
use topk_walk::generators::{generate_config_model, generate_pa};
use topk_walk::walk::{DEFAULT_MAX_STEPS, DEFAULT_Q, DEFAULT_TRANSIENT};
use topk_walk::{
    detect_with_rule, ConfigModelConfig, Graph, NodeId, PaConfig, ParetoTail, SamplingMode, StartDist,
    StopRule, WalkConfig,
};

#[derive(Debug, Parser)]
#[command(name = "topk-walk", version, about = "Find the largest-degree nodes of a graph with a jumping random walk")]
struct Cli {
    /// Seed for generators, walks and experiment trials.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for experiment trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic graph as an edge list.
    #[command(subcommand)]
    Generate(Generate),
    /// Read an edge list, print its statistics and optionally write a binary cache.
    Ingest {
        input: PathBuf,
        /// Read lines as directed arcs and add their reverses.
        #[arg(long)]
        symmetrize: bool,
    },
    /// Run the detector on a graph until a stopping rule fires.
    Detect(DetectArgs),
    /// Exact quantities of the walk on a graph.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Predictions that need no graph.
    #[command(subcommand)]
    Estimate(Estimate),
    /// Replicated experiments written as CSV.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Subcommand)]
enum Generate {
    /// Preferential attachment.
    Pa {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        edges_per_node: usize,
        /// Initial attractiveness A; the tail exponent is 2 + A/edges-per-node.
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        attract: f64,
    },
    /// Erased configuration model with a Pareto degree tail.
    Cm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        c: f64,
        /// Lower cutoff x'; defaults to the smallest valid value C^(1/gamma).
        #[arg(long)]
        xprime: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Everystep,
    Thinned,
    Restart,
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Edge list or binary cache.
    graph: PathBuf,
    #[arg(long)]
    symmetrize: bool,
}

#[derive(Debug, Args)]
struct WalkArgs {
    /// Jump weight; defaults to the graph's average degree.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Thinned)]
    mode: ModeArg,
    /// Probability of keeping a step as a sample (thinned mode).
    #[arg(long, default_value_t = DEFAULT_Q)]
    q: f64,
    /// Steps discarded before thinning starts.
    #[arg(long, default_value_t = DEFAULT_TRANSIENT)]
    transient: u64,
    /// Steps per fresh walk in restart mode.
    #[arg(long, default_value_t = 100)]
    burn_in: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Fixed,
    R0,
    R1,
    R2,
}

#[derive(Debug, Args)]
#[group(id = "threshold", multiple = false)]
struct ThresholdArgs {
    /// Sample budget for `--rule fixed`.
    #[arg(long)]
    m: Option<u64>,
    /// Error level for rules r0 and r1.
    #[arg(long)]
    a_bar: Option<f64>,
    /// Worst-entry hit count for r1, instead of deriving it from --a-bar.
    #[arg(long)]
    x0: Option<u64>,
    /// Relaxed score level for r2.
    #[arg(long)]
    b_bar: Option<f64>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum)]
    rule: RuleArg,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[command(flatten)]
    walk: WalkArgs,
}

#[derive(Debug, Subcommand)]
enum Analyze {
    /// Stationary probability of every node as CSV.
    Stationary {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Expected return time to the largest-degree node and the jump rate.
    ReturnTime {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Expected hitting time of a node, by linear solve.
    Hitting {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        alpha: Option<f64>,
        /// Original id of the target; the largest-degree node when omitted.
        #[arg(long)]
        target: Option<u64>,
        /// Initial law: `uniform`, `others` (uniform over non-targets) or `node:<id>`.
        #[arg(long, default_value = "uniform")]
        nu: String,
    },
    /// Poisson error bound and expected correct count for m samples.
    Poisson {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatArg {
    Median,
    Mode,
    Mean,
}

#[derive(Debug, Subcommand)]
enum Estimate {
    /// Predicted largest degrees of a Pareto-tailed graph.
    Evt {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = StatArg::Median)]
        stat: StatArg,
    },
    /// Worst-entry hit count needed by rule r1.
    X0 {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        a_bar: f64,
    },
}

#[derive(Debug, Subcommand)]
enum Experiment {
    /// Hitting times to the largest-degree node.
    Hitting {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value_t = 500)]
        runs: usize,
        /// `uniform` or `node:<id>`.
        #[arg(long, default_value = "uniform")]
        start: String,
    },
    /// Mean correct count at each budget of a grid.
    Accuracy {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "2000,6000,12000,18000")]
        m_grid: Vec<u64>,
    },
    /// Accuracy and cost of a stopping rule.
    Stopping {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum)]
        rule: RuleArg,
        #[command(flatten)]
        threshold: ThresholdArgs,
    },
}

/// Failure classes, mapped to exit codes 1 and 2.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<topk_walk::Error> for Failure {
    fn from(e: topk_walk::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

type CliResult<T> = Result<T, Failure>;
type PlanBuilder = Box<dyn FnOnce(&Graph) -> CliResult<ExperimentPlan>>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("topk-walk: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Generate(g) => generate(g, cli.seed, out),
        Command::Ingest { input, symmetrize } => ingest(&input, symmetrize, out),
        Command::Detect(args) => detect(args, cli.seed, out),
        Command::Analyze(a) => analyze(a, out),
        Command::Estimate(e) => estimate(e),
        Command::Experiment(x) => experiment(x, cli.seed, out),
    }
}

/// CSV or edge-list destination. Summaries go to standard output unless the
/// payload already does, in which case they go to standard error.
fn open_out(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn summary_sink(out: Option<&Path>) -> Box<dyn Write> {
    if out.is_some() {
        Box::new(io::stdout())
    } else {
        Box::new(io::stderr())
    }
}

fn load(args: &GraphArgs) -> CliResult<Graph> {
    Graph::load(&args.graph, args.symmetrize)
        .with_context(|| format!("loading {}", args.graph.display()))
        .map_err(Failure::Runtime)
}

fn check_alpha(alpha: Option<f64>) -> CliResult<()> {
    match alpha {
        Some(a) if !(a >= 0.0 && a.is_finite()) => Err(usage("--alpha must be a finite non-negative number")),
        _ => Ok(()),
    }
}

fn resolve_alpha(alpha: Option<f64>, g: &Graph) -> f64 {
    alpha.unwrap_or_else(|| g.average_degree())
}

impl WalkArgs {
    fn mode(&self) -> SamplingMode {
        match self.mode {
            ModeArg::Everystep => SamplingMode::EveryStep,
            ModeArg::Thinned => SamplingMode::Thinned { transient: self.transient, q: self.q },
            ModeArg::Restart => SamplingMode::Restart { burn_in: self.burn_in },
        }
    }

    /// Validates everything except α, which may still depend on the graph.
    fn check(&self) -> CliResult<()> {
        check_alpha(self.alpha)?;
        WalkConfig::new(1.0, 0)
            .with_mode(self.mode())
            .with_max_steps(self.max_steps)
            .validate()
            .map_err(|e| usage(e.to_string()))
    }

    fn config(&self, g: &Graph, seed: u64) -> WalkConfig {
        WalkConfig::new(resolve_alpha(self.alpha, g), seed)
            .with_mode(self.mode())
            .with_max_steps(self.max_steps)
    }
}

fn stop_rule(rule: RuleArg, t: &ThresholdArgs, k: usize) -> CliResult<StopRule> {
    if k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let given = [("--m", t.m.is_some()), ("--a-bar", t.a_bar.is_some()), ("--x0", t.x0.is_some()), ("--b-bar", t.b_bar.is_some())]
        .into_iter()
        .find(|f| f.1)
        .map(|f| f.0);
    let rule = match (rule, t) {
        (RuleArg::Fixed, ThresholdArgs { m: Some(m), .. }) => StopRule::FixedM(*m),
        (RuleArg::R0, ThresholdArgs { a_bar: Some(a), .. }) => StopRule::Rule0 { a_bar: *a },
        (RuleArg::R1, ThresholdArgs { a_bar: Some(a), .. }) => {
            StopRule::rule1_from_a_bar(k, *a).map_err(|e| usage(e.to_string()))?
        }
        (RuleArg::R1, ThresholdArgs { x0: Some(x0), .. }) => StopRule::Rule1 { x0: *x0 },
        (RuleArg::R2, ThresholdArgs { b_bar: Some(b), .. }) => StopRule::Rule2 { b_bar: *b },
        (rule, _) => {
            let needed = match rule {
                RuleArg::Fixed => "--m",
                RuleArg::R0 => "--a-bar",
                RuleArg::R1 => "--a-bar or --x0",
                RuleArg::R2 => "--b-bar",
            };
            let name = rule.to_possible_value().expect("no skipped variants").get_name().to_string();
            return Err(usage(match given {
                Some(flag) => format!("{flag} does not apply to rule {name}; it takes {needed}"),
                None => format!("rule {name} requires {needed}"),
            }));
        }
    };
    rule.validate().map_err(|e| usage(e.to_string()))?;
    Ok(rule)
}

fn parse_node_spec(spec: &str, g: &Graph, flag: &str) -> CliResult<NodeId> {
    let id = spec
        .strip_prefix("node:")
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| usage(format!("{flag}: expected `node:<id>`, got {spec:?}")))?;
    node_by_original(g, id)
}

fn node_by_original(g: &Graph, id: u64) -> CliResult<NodeId> {
    g.dense_id(id)
        .ok_or_else(|| Failure::Runtime(anyhow::anyhow!("node {id} does not occur in the graph")))
}

fn check_node_spec(spec: &str, allowed: &[&str], flag: &str) -> CliResult<()> {
    let ok = allowed.contains(&spec) || spec.strip_prefix("node:").is_some_and(|s| s.parse::<u64>().is_ok());
    if ok {
        Ok(())
    } else {
        Err(usage(format!("{flag}: expected one of {allowed:?} or `node:<id>`, got {spec:?}")))
    }
}

fn generate(cmd: Generate, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let g = match cmd {
        Generate::Pa { n, edges_per_node, attract } => {
            let cfg = PaConfig::new(n, edges_per_node, attract, seed);
            generate_pa(&cfg)?
        }
        Generate::Cm { n, gamma, c, xprime } => {
            let x_prime = xprime.unwrap_or_else(|| ParetoTail::min_cutoff(gamma, c));
            let tail = ParetoTail::new(gamma, c, x_prime).map_err(|e| usage(e.to_string()))?;
            generate_config_model(&ConfigModelConfig { n, tail, seed })?
        }
    };
    let mut w = open_out(out)?;
    g.write_edge_list(&mut w)?;
    w.flush()?;
    Ok(())
}

fn ingest(input: &Path, symmetrize: bool, out: Option<&Path>) -> CliResult<()> {
    let g = load(&GraphArgs { graph: input.to_path_buf(), symmetrize })?;
    if let Some(path) = out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        g.write_binary(file)?;
    }
    let top = g.max_degree_node().expect("ingested graphs are non-empty");
    println!("nodes={}", g.n());
    println!("edges={}", g.m_edges());
    println!("average_degree={}", g.average_degree());
    println!("max_degree={}", top.degree);
    println!("max_degree_node={}", g.original_id(top.node));
    Ok(())
}

fn detect(args: DetectArgs, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let rule = stop_rule(args.rule, &args.threshold, args.k)?;
    args.walk.check()?;
    let g = load(&args.graph)?;
    let cfg = args.walk.config(&g, seed);
    let decision = detect_with_rule(&g, &cfg, args.k, rule)?;

    let mut w = open_out(out)?;
    writeln!(w, "original_id,degree,hits")?;
    for c in decision.final_list.entries() {
        writeln!(w, "{},{},{}", g.original_id(c.node), c.degree, c.hits)?;
    }
    w.flush()?;
    writeln!(
        summary_sink(out),
        "samples={} raw_steps={} rule={} threshold={} alpha={} fired={}",
        decision.fired_at_samples,
        decision.raw_steps,
        rule.id(),
        rule.threshold(),
        cfg.alpha,
        decision.fired
    )?;
    if !decision.fired {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "step cap of {} reached before rule {} fired",
            cfg.max_steps,
            rule.id()
        )));
    }
    Ok(())
}

fn analyze(cmd: Analyze, out: Option<&Path>) -> CliResult<()> {
    match cmd {
        Analyze::Stationary { graph, alpha } => {
            check_alpha(alpha)?;
            let g = load(&graph)?;
            let pi = analytics::stationary(&g, resolve_alpha(alpha, &g))?;
            let mut w = open_out(out)?;
            writeln!(w, "original_id,degree,pi")?;
            for (i, p) in pi.probs.iter().enumerate() {
                writeln!(w, "{},{},{}", g.original_id(i), g.degrees()[i], p)?;
            }
            w.flush()?;
        }
        Analyze::ReturnTime { graph, alpha } => {
            check_alpha(alpha)?;
            let g = load(&graph)?;
            let alpha = resolve_alpha(alpha, &g);
            let rt = analytics::expected_return_time_max(&g, alpha)?;
            let jump = analytics::jump_probability(&g, alpha)?;
            let top = g.max_degree_node().expect("loaded graphs are non-empty");
            println!("alpha={alpha}");
            println!("max_degree={}", top.degree);
            println!("return_time={rt}");
            println!("jump_probability={jump}");
        }
        Analyze::Hitting { graph, alpha, target, nu } => {
            check_alpha(alpha)?;
            check_node_spec(&nu, &["uniform", "others"], "--nu")?;
            let g = load(&graph)?;
            let alpha = resolve_alpha(alpha, &g);
            let top = g.max_degree_node().expect("loaded graphs are non-empty");
            let target = match target {
                Some(id) => node_by_original(&g, id)?,
                None => top.node,
            };
            let init = match nu.as_str() {
                "uniform" => InitialDist::Uniform,
                "others" => InitialDist::UniformNonTarget,
                spec => InitialDist::Node(parse_node_spec(spec, &g, "--nu")?),
            };
            let exact = hitting_time_exact(&g, alpha, target, &init)?;
            println!("alpha={alpha}");
            println!("target={}", g.original_id(target));
            println!("exact={exact}");
            if target == top.node {
                println!("asymptotic={}", hitting_time_asymptotic(&g, alpha)?);
            }
        }
        Analyze::Poisson { graph, alpha, k, m } => {
            check_alpha(alpha)?;
            let g = load(&graph)?;
            let alpha = resolve_alpha(alpha, &g);
            let pis = analytics::top_k_stationary(&g, alpha, k)?;
            let raw = poisson_error_bound(&pis, m);
            println!("alpha={alpha}");
            println!("bound={}", raw.clamp(0.0, 1.0));
            println!("bound_raw={raw}");
            println!("expected_correct_exact={}", expected_correct_count(&pis, m, CountMode::Exact));
            println!("expected_correct_poisson={}", expected_correct_count(&pis, m, CountMode::Poisson));
        }
    }
    Ok(())
}

fn estimate(cmd: Estimate) -> CliResult<()> {
    match cmd {
        Estimate::Evt { gamma, c, n, k, stat } => {
            let stat = match stat {
                StatArg::Median => MaxDegreeStatistic::Median,
                StatArg::Mode => MaxDegreeStatistic::Mode,
                StatArg::Mean => MaxDegreeStatistic::Mean,
            };
            let tail = ParetoTail::new(gamma, c, ParetoTail::min_cutoff(gamma, c)).map_err(|e| usage(e.to_string()))?;
            let p = evt_predict_with(&tail, n, k, stat).map_err(|e| usage(e.to_string()))?;
            println!("delta={}", p.delta);
            println!("a_n={}", p.a_n);
            println!("b_n={}", p.b_n);
            for j in 1..=k {
                println!("d{j}={}", p.degree(j).expect("j within 1..=k"));
            }
        }
        Estimate::X0 { k, a_bar } => {
            println!("x0={}", rule1_threshold(k, a_bar).map_err(|e| usage(e.to_string()))?);
        }
    }
    Ok(())
}

fn experiment(cmd: Experiment, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let (graph_args, plan_of): (GraphArgs, PlanBuilder) = match cmd {
        Experiment::Hitting { graph, walk, runs, start } => {
            walk.check()?;
            check_node_spec(&start, &["uniform"], "--start")?;
            (
                graph,
                Box::new(move |g: &Graph| {
                    let start = match start.as_str() {
                        "uniform" => StartDist::Uniform,
                        spec => StartDist::Fixed(parse_node_spec(spec, g, "--start")?),
                    };
                    Ok(ExperimentPlan::HittingTime(HittingTimePlan {
                        walk: walk.config(g, 0),
                        runs,
                        master_seed: seed,
                        start,
                    }))
                }),
            )
        }
        Experiment::Accuracy { graph, walk, runs, k, m_grid } => {
            walk.check()?;
            if k == 0 {
                return Err(usage("--k must be at least 1"));
            }
            if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage("--m-grid must be strictly increasing"));
            }
            (
                graph,
                Box::new(move |g: &Graph| {
                    Ok(ExperimentPlan::AccuracyCurve(AccuracyPlan {
                        walk: walk.config(g, 0),
                        k,
                        m_grid,
                        runs,
                        master_seed: seed,
                    }))
                }),
            )
        }
        Experiment::Stopping { graph, walk, runs, k, rule, threshold } => {
            let rule = stop_rule(rule, &threshold, k)?;
            walk.check()?;
            (
                graph,
                Box::new(move |g: &Graph| {
                    Ok(ExperimentPlan::StoppingEval(StoppingPlan {
                        walk: walk.config(g, 0),
                        k,
                        rule,
                        runs,
                        master_seed: seed,
                    }))
                }),
            )
        }
    };
    let g = load(&graph_args)?;
    let report = plan_of(&g)?.run(&g)?;
    let mut w = open_out(out)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut s = summary_sink(out);
    for (k, v) in report.summary_lines() {
        writeln!(s, "{k}={v}")?;
    }
    if let ExperimentReport::HittingTime(r) = &report {
        if r.summary().timeouts > 0 {
            writeln!(s, "warning: {} trials hit the step cap", r.summary().timeouts)?;
        }
    }
    Ok(())
}
