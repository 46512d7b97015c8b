use proptest::prelude::*;
use topk_walk::generators::random_connected;
use topk_walk::walk::{sample_stream, walk_until_hit, HitOutcome, WalkState};
use topk_walk::{Graph, SamplingMode, StartDist, WalkConfig};

fn star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).unwrap()
}

/// Transition row i written out term by term.
fn kernel_row(g: &Graph, alpha: f64, i: usize) -> Vec<f64> {
    let n = g.n() as f64;
    let d = g.degrees()[i] as f64;
    (0..g.n())
        .map(|j| {
            let link = if g.has_edge(i, j) { 1.0 } else { 0.0 };
            (alpha / n + link) / (d + alpha)
        })
        .collect()
}

fn stationary_oracle(g: &Graph, alpha: f64) -> Vec<f64> {
    let total: f64 = g.degrees().iter().map(|&d| d as f64 + alpha).sum();
    g.degrees().iter().map(|&d| (d as f64 + alpha) / total).collect()
}

fn empirical_row(g: &Graph, alpha: f64, i: usize, draws: usize, seed: u64) -> Vec<f64> {
    let mut state = WalkState::new(i, seed);
    let mut counts = vec![0usize; g.n()];
    for _ in 0..draws {
        state.set_current(i);
        counts[state.step(g, alpha).unwrap()] += 1;
    }
    counts.into_iter().map(|c| c as f64 / draws as f64).collect()
}

#[test]
fn star_center_jump_share() {
    // From the center of S4 with α=1 the only way to stay put is a jump onto
    // itself, so P(stay) = (α/(d+α)) * (1/n) = 1/16 and a jump happens with 1/4.
    let g = star(3);
    let row = empirical_row(&g, 1.0, 0, 1_000_000, 8);
    let jump_share = row[0] * 4.0;
    assert!((jump_share - 0.25).abs() < 0.002 * 4.0, "{jump_share}");
    assert!((row[0] - 1.0 / 16.0).abs() < 0.002);
}

#[test]
fn kernel_rows_match_formula() {
    let triangle = Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
    let cases = [
        (triangle, 3.0),
        (star(3), 1.0),
        (random_connected(8, 6, 3).unwrap(), 0.7),
        (Graph::from_edges(5, [(0, 1), (1, 2)]).unwrap(), 2.0),
    ];
    for (g, alpha) in cases {
        for i in 0..g.n() {
            let want = kernel_row(&g, alpha, i);
            assert!((want.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let got = empirical_row(&g, alpha, i, 200_000, i as u64 + 100);
            for (j, (w, e)) in want.iter().zip(&got).enumerate() {
                assert!((w - e).abs() < 0.005, "row {i} col {j}: {e} vs {w}");
            }
        }
    }
}

#[test]
fn triangle_alpha_three() {
    // Neighbors get (1 + 1)/5 each, the node itself 1/5.
    let g = Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
    let row = empirical_row(&g, 3.0, 0, 500_000, 1);
    assert!((row[0] - 0.2).abs() < 0.005);
    assert!((row[1] - 0.4).abs() < 0.005);
    assert!((row[2] - 0.4).abs() < 0.005);
}

#[test]
fn visit_frequencies_converge_to_stationary_law() {
    for (seed, n, alpha) in [(1u64, 20usize, 1.0), (2, 30, 0.5), (3, 25, 4.0)] {
        let g = random_connected(n, n / 2, seed).unwrap();
        let cfg = WalkConfig::new(alpha, seed).with_max_steps(1_000_000);
        let mut counts = vec![0usize; n];
        let mut total = 0usize;
        for s in sample_stream(&g, cfg).unwrap() {
            counts[s.unwrap().node] += 1;
            total += 1;
        }
        assert_eq!(total, 1_000_000);
        let pi = stationary_oracle(&g, alpha);
        let l1: f64 = counts.iter().zip(&pi).map(|(&c, p)| (c as f64 / total as f64 - p).abs()).sum();
        assert!(l1 < 0.01, "seed {seed}: L1 {l1}");
    }
}

#[test]
fn empirical_flow_is_balanced() {
    let g = random_connected(15, 10, 4).unwrap();
    let n = g.n();
    let alpha = 1.5;
    let steps = 1_000_000u64;
    let mut state = WalkState::new(0, 4);
    let mut flow = vec![0u64; n * n];
    let mut prev = 0;
    for _ in 0..steps {
        let next = state.step(&g, alpha).unwrap();
        flow[prev * n + next] += 1;
        prev = next;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (flow[i * n + j] as f64 - flow[j * n + i] as f64).abs() / steps as f64;
            assert!(diff < 0.005, "{i}->{j}: {diff}");
        }
    }
}

#[test]
fn star_hitting_without_jumps_from_uniform_start() {
    let g = star(3);
    let runs = 100_000u64;
    let mut total = 0u64;
    for seed in 0..runs {
        let cfg = WalkConfig::new(0.0, seed);
        match walk_until_hit(&g, &cfg, StartDist::Uniform, 0).unwrap() {
            HitOutcome::Hit(s) => total += s,
            HitOutcome::Timeout => panic!("timeout"),
        }
    }
    let mean = total as f64 / runs as f64;
    assert!((mean - 0.75).abs() < 0.01, "{mean}");
}

#[test]
fn thinned_star_frequencies() {
    let g = star(3);
    let cfg = WalkConfig::new(1.0, 12)
        .with_mode(SamplingMode::Thinned { transient: 100, q: 0.5 })
        .with_max_steps(u64::MAX);
    let mut counts = [0usize; 4];
    for s in sample_stream(&g, cfg).unwrap().take(1_000_000) {
        counts[s.unwrap().node] += 1;
    }
    for (c, want) in counts.iter().zip([0.4, 0.2, 0.2, 0.2]) {
        assert!((*c as f64 / 1e6 - want).abs() < 0.005, "{counts:?}");
    }
}

#[test]
fn thinning_rate() {
    let g = random_connected(50, 30, 9).unwrap();
    for q in [0.1, 0.5, 0.9] {
        let cfg = WalkConfig::new(2.0, 3)
            .with_mode(SamplingMode::Thinned { transient: 100, q })
            .with_max_steps(1_000_100);
        let mut stream = sample_stream(&g, cfg).unwrap();
        let emitted = stream.by_ref().count() as f64;
        assert_eq!(stream.raw_steps(), 1_000_100);
        assert!((emitted / 1e6 - q).abs() < 0.01, "q={q}: {}", emitted / 1e6);
    }
}

#[test]
fn thinned_with_q_one_and_no_transient_is_every_step() {
    let g = random_connected(40, 20, 5).unwrap();
    let base = WalkConfig::new(1.3, 77).with_max_steps(5_000);
    let a: Vec<_> = sample_stream(&g, base).unwrap().map(|s| s.unwrap()).collect();
    let thinned = base.with_mode(SamplingMode::Thinned { transient: 0, q: 1.0 });
    let b: Vec<_> = sample_stream(&g, thinned).unwrap().map(|s| s.unwrap()).collect();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn streams_are_deterministic_and_ordered(
        seed in any::<u64>(),
        alpha in 0.0f64..5.0,
        q in 0.05f64..=1.0,
        mode_pick in 0u8..3,
        max_steps in 1u64..3_000,
    ) {
        let g = random_connected(30, 15, seed ^ 0x55).unwrap();
        let mode = match mode_pick {
            0 => SamplingMode::EveryStep,
            1 => SamplingMode::Thinned { transient: 20, q },
            _ => SamplingMode::Restart { burn_in: 7 },
        };
        let cfg = WalkConfig::new(alpha, seed).with_mode(mode).with_max_steps(max_steps);
        let run = || {
            let mut stream = sample_stream(&g, cfg).unwrap();
            let samples: Vec<_> = stream.by_ref().map(|s| s.unwrap()).collect();
            (samples, stream.raw_steps())
        };
        let (a, steps) = run();
        prop_assert_eq!(&a, &run().0);
        prop_assert!(steps <= max_steps);
        prop_assert!(a.windows(2).all(|w| w[0].step_index <= w[1].step_index));
        prop_assert!(a.iter().all(|s| s.node < g.n() && s.step_index <= steps));
    }
}
