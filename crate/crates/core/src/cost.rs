//! Training-cost model: per-transition cost of expanding a subgoal, exact
//! expected total cost of a run via memoized recursion over intervention
//! sets, and a Monte Carlo estimator for cross-checking.

use std::collections::{BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{NodeKind, SubgoalGraph};
use crate::strategy::{Strategy, StrategyKind};
use crate::{Error, Result};

pub const EXACT_COST_MAX_NODES: usize = 20;

/// Cost coefficients: expanding a subgoal with |I| already-trained subgoals
/// costs T(|I|+2)w, and each newly reachable subgoal adds T'(|I|+2)w.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub t: f64,
    pub t_prime: f64,
    pub w: f64,
}

impl CostParams {
    pub fn unit() -> Self {
        CostParams { t: 1.0, t_prime: 1.0, w: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t_prime > 0.0 && self.w > 0.0) {
            return Err(Error::InvalidArgument("cost parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Cost of one expansion step: training the selected subgoal against the
/// current hierarchy plus initial training of every newly reachable subgoal.
pub fn transition_cost(params: &CostParams, i_old: usize, newly_reachable: usize) -> f64 {
    let scale = (i_old as f64 + 2.0) * params.w;
    params.t * scale + newly_reachable as f64 * params.t_prime * scale
}

/// Per-iteration environment-step accounting for a learning run.
#[derive(Debug, Clone, Default)]
pub struct IterationProbes {
    pub iteration: usize,
    pub x_sel: usize,
    pub intervention: u64,
    pub exploration: u64,
    pub training: u64,
}

/// Cumulative probe ledger split by phase.
#[derive(Debug, Clone, Default)]
pub struct CostLedger {
    pub intervention_probes: u64,
    pub exploration_probes: u64,
    pub training_probes: u64,
    pub per_iteration: Vec<IterationProbes>,
}

impl CostLedger {
    pub fn total(&self) -> u64 {
        self.intervention_probes + self.exploration_probes + self.training_probes
    }

    pub fn record(&mut self, iter: IterationProbes) {
        self.intervention_probes += iter.intervention;
        self.exploration_probes += iter.exploration;
        self.training_probes += iter.training;
        self.per_iteration.push(iter);
    }
}

fn controllable_mask(graph: &SubgoalGraph, trained: u32) -> u32 {
    let mut cs = 0u32;
    for i in 0..graph.n() {
        if trained >> i & 1 == 1 {
            continue;
        }
        let pa = graph.parents(i);
        let reachable = if pa.is_empty() {
            true
        } else {
            match graph.kind(i) {
                NodeKind::Or => pa.iter().any(|&p| trained >> p & 1 == 1),
                NodeKind::And => pa.iter().all(|&p| trained >> p & 1 == 1),
            }
        };
        if reachable {
            cs |= 1 << i;
        }
    }
    cs
}

fn step_cost(graph: &SubgoalGraph, trained: u32, x: usize, params: &CostParams) -> f64 {
    let cs_before = controllable_mask(graph, trained);
    let cs_after = controllable_mask(graph, trained | 1 << x);
    // CS never shrinks except by losing x itself, so the difference counts
    // the newly reachable subgoals.
    let newly = (cs_after.count_ones() + 1 - cs_before.count_ones()) as usize;
    transition_cost(params, trained.count_ones() as usize, newly)
}

fn exact_recurse(
    graph: &SubgoalGraph,
    trained: u32,
    params: &CostParams,
    memo: &mut HashMap<u32, f64>,
) -> f64 {
    if trained >> graph.final_goal() & 1 == 1 {
        return 0.0;
    }
    let cs = controllable_mask(graph, trained);
    if cs == 0 {
        return 0.0;
    }
    if let Some(&v) = memo.get(&trained) {
        return v;
    }
    let candidates: Vec<usize> = (0..graph.n()).filter(|&i| cs >> i & 1 == 1).collect();
    let mut total = 0.0;
    for &x in &candidates {
        total += step_cost(graph, trained, x, params)
            + exact_recurse(graph, trained | 1 << x, params, memo);
    }
    let v = total / candidates.len() as f64;
    memo.insert(trained, v);
    v
}

/// One full run of the abstract expansion process under the given strategy,
/// charging the transition cost each step. Deterministic for every strategy
/// except random, which draws from `rng`.
fn simulate_run(
    graph: &SubgoalGraph,
    kind: StrategyKind,
    params: &CostParams,
    rng_seed: u64,
) -> Result<f64> {
    let n = graph.n();
    let mut strategy = Strategy::new(kind, n, rng_seed);
    let roots = graph.roots();
    strategy.init_roots(&roots, graph);
    let mut trained: u32 = 0;
    let mut is = BTreeSet::new();
    let mut cost = 0.0;
    let target = graph.final_goal();
    let mut iteration = 0usize;
    while trained >> target & 1 == 0 {
        let cs_mask = controllable_mask(graph, trained);
        if cs_mask == 0 {
            break;
        }
        let cs: BTreeSet<usize> = (0..n).filter(|&i| cs_mask >> i & 1 == 1).collect();
        iteration += 1;
        let x = strategy.pick(&cs, graph, target, &is, iteration)?;
        cost += step_cost(graph, trained, x, params);
        trained |= 1 << x;
        is.insert(x);
        strategy.after_expand(x, graph, &is);
    }
    Ok(cost)
}

/// Exact expected total cost of reaching the final goal. The random strategy
/// averages uniformly over the controllable set at every state (memoized
/// over intervention-set bitmasks); the deterministic strategies follow
/// their single trajectory.
pub fn expected_cost_exact(
    graph: &SubgoalGraph,
    kind: StrategyKind,
    params: &CostParams,
) -> Result<f64> {
    params.validate()?;
    if graph.n() > EXACT_COST_MAX_NODES {
        return Err(Error::Capacity(format!(
            "exact cost supports at most {EXACT_COST_MAX_NODES} nodes, got {}",
            graph.n()
        )));
    }
    graph.ensure_acyclic("expected_cost_exact")?;
    match kind {
        StrategyKind::Random => {
            let mut memo = HashMap::new();
            Ok(exact_recurse(graph, 0, params, &mut memo))
        }
        _ => simulate_run(graph, kind, params, 0),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MonteCarloCost {
    pub mean: f64,
    pub stderr: f64,
    pub runs: usize,
}

/// Monte Carlo estimate of the expected total cost over independent runs.
pub fn monte_carlo_cost(
    graph: &SubgoalGraph,
    kind: StrategyKind,
    params: &CostParams,
    runs: usize,
    seed: u64,
) -> Result<MonteCarloCost> {
    params.validate()?;
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be >= 1".into()));
    }
    graph.ensure_acyclic("monte_carlo_cost")?;
    let mut seed_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(runs);
    for _ in 0..runs {
        let run_seed = rand::Rng::random::<u64>(&mut seed_rng);
        samples.push(simulate_run(graph, kind, params, run_seed)?);
    }
    let mean = samples.iter().sum::<f64>() / runs as f64;
    let var = if runs > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0)
    } else {
        0.0
    };
    let stderr = (var / runs as f64).sqrt();
    Ok(MonteCarloCost { mean, stderr, runs })
}

/// Ordinary-least-squares slope of y against x.
pub fn ols_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("slope needs at least two points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope undefined: all x equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Slope of ln(cost) against ln(n): the growth exponent of a cost curve.
pub fn log_log_slope(curve: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .map(|&(x, y)| {
            if x <= 0.0 || y <= 0.0 {
                Err(Error::InvalidArgument("log-log slope needs positive values".into()))
            } else {
                Ok((x.ln(), y.ln()))
            }
        })
        .collect::<Result<_>>()?;
    ols_slope(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{assign_kinds, gen_semi_er, KindMode};

    #[test]
    fn slope_helpers() {
        // y = x^2 on a log-log scale has slope 2.
        let curve: Vec<(f64, f64)> = [2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, x * x)).collect();
        assert!((log_log_slope(&curve).unwrap() - 2.0).abs() < 1e-12);
        assert!((ols_slope(&[(0.0, 1.0), (1.0, 3.0)]).unwrap() - 2.0).abs() < 1e-12);
        assert!(ols_slope(&[(1.0, 1.0)]).is_err());
        assert!(log_log_slope(&[(0.0, 1.0), (1.0, 2.0)]).is_err());
    }

    fn chain2() -> SubgoalGraph {
        SubgoalGraph::new(vec![vec![], vec![0]], vec![NodeKind::Or; 2], 1).unwrap()
    }

    fn mini_craft() -> SubgoalGraph {
        SubgoalGraph::new(
            vec![vec![], vec![], vec![0, 1]],
            vec![NodeKind::Or, NodeKind::Or, NodeKind::And],
            2,
        )
        .unwrap()
    }

    #[test]
    fn transition_cost_examples() {
        let p = CostParams::unit();
        // First expansion, nothing newly reachable: T * 2 * w.
        assert_eq!(transition_cost(&p, 0, 0), 2.0);
        // Second expansion unlocking one subgoal: T*3 + 1*T'*3.
        assert_eq!(transition_cost(&p, 1, 1), 6.0);
        // Coefficients scale linearly.
        let p2 = CostParams { t: 2.0, t_prime: 0.5, w: 3.0 };
        assert_eq!(transition_cost(&p2, 1, 2), 2.0 * 9.0 + 2.0 * 0.5 * 9.0);
    }

    #[test]
    fn exact_chain_value() {
        // Two-node chain, unit coefficients: 2 + 2 for the root step (one
        // newly reachable node), then 3 for the goal step; total 7.
        let cost = expected_cost_exact(&chain2(), StrategyKind::Random, &CostParams::unit())
            .unwrap();
        assert!((cost - 7.0).abs() < 1e-12, "chain cost {cost}");
    }

    #[test]
    fn exact_mini_craft_order_invariant() {
        // Both expansion orders (S,W or W,S) cost the same, so every
        // strategy agrees with the random expectation.
        let g = mini_craft();
        let p = CostParams::unit();
        let random = expected_cost_exact(&g, StrategyKind::Random, &p).unwrap();
        for kind in [StrategyKind::CausalEffect, StrategyKind::ShortestPath, StrategyKind::Hybrid]
        {
            let c = expected_cost_exact(&g, kind, &p).unwrap();
            assert!((c - random).abs() < 1e-12, "{kind:?}: {c} vs {random}");
        }
        // 2 (root, nothing unlocked) + 3+3 (second root unlocks pickaxe)
        // + 4 (goal) = 12.
        assert!((random - 12.0).abs() < 1e-12);
    }

    #[test]
    fn exact_monotone_in_coefficients() {
        let g = assign_kinds(&gen_semi_er(10, 0.6, 11).unwrap(), KindMode::Random, 2);
        let base = expected_cost_exact(&g, StrategyKind::Random, &CostParams::unit()).unwrap();
        for bump in [
            CostParams { t: 2.0, t_prime: 1.0, w: 1.0 },
            CostParams { t: 1.0, t_prime: 2.0, w: 1.0 },
            CostParams { t: 1.0, t_prime: 1.0, w: 2.0 },
        ] {
            let c = expected_cost_exact(&g, StrategyKind::Random, &bump).unwrap();
            assert!(c > base, "bumped {bump:?} gave {c} <= {base}");
        }
        // Doubling w doubles every term.
        let doubled = expected_cost_exact(
            &g,
            StrategyKind::Random,
            &CostParams { t: 1.0, t_prime: 1.0, w: 2.0 },
        )
        .unwrap();
        assert!((doubled - 2.0 * base).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_matches_exact_on_chain() {
        let g = chain2();
        let mc =
            monte_carlo_cost(&g, StrategyKind::Random, &CostParams::unit(), 32, 7).unwrap();
        assert!((mc.mean - 7.0).abs() < 1e-12);
        assert_eq!(mc.stderr, 0.0); // single trajectory, zero variance
    }

    #[test]
    fn monte_carlo_consistent_with_exact() {
        for seed in [1u64, 2, 3] {
            let g = assign_kinds(&gen_semi_er(9, 0.7, seed).unwrap(), KindMode::Random, seed);
            let exact =
                expected_cost_exact(&g, StrategyKind::Random, &CostParams::unit()).unwrap();
            let mc = monte_carlo_cost(&g, StrategyKind::Random, &CostParams::unit(), 400, seed)
                .unwrap();
            let band = 3.0 * mc.stderr.max(1e-9);
            assert!(
                (mc.mean - exact).abs() <= band,
                "seed {seed}: exact {exact} mc {} stderr {}",
                mc.mean,
                mc.stderr
            );
        }
    }

    #[test]
    fn exact_rejects_large_or_cyclic() {
        let big = assign_kinds(&gen_semi_er(21, 0.5, 0).unwrap(), KindMode::AllOr, 0);
        assert!(expected_cost_exact(&big, StrategyKind::Random, &CostParams::unit()).is_err());
        let bad = CostParams { t: 0.0, t_prime: 1.0, w: 1.0 };
        assert!(expected_cost_exact(&chain2(), StrategyKind::Random, &bad).is_err());
    }

    #[test]
    fn ledger_accumulates() {
        let mut ledger = CostLedger::default();
        ledger.record(IterationProbes {
            iteration: 1,
            x_sel: 0,
            intervention: 5,
            exploration: 10,
            training: 20,
        });
        ledger.record(IterationProbes {
            iteration: 2,
            x_sel: 1,
            intervention: 1,
            exploration: 2,
            training: 3,
        });
        assert_eq!(ledger.total(), 41);
        assert_eq!(ledger.intervention_probes, 6);
        assert_eq!(ledger.per_iteration.len(), 2);
    }
}
