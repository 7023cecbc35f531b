//! The hierarchical controller: abstract graph search over subgoal
//! structures, the full simulated learning loop (intervene, discover, level,
//! train), and a tabular-Q gridworld instantiation.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ascm::{collect_interventional, AscmConfig, AscmEnv};
use crate::cost::{transition_cost, CostLedger, CostParams, IterationProbes};
use crate::graph::{causal_order, HierarchicalStructure, NodeKind, SubgoalGraph};
use crate::grid::{Action, GridWorld, ALL_ACTIONS};
use crate::ssd::{discover, FitEngine, RecoveredGraph};
use crate::strategy::{dijkstra_to_goal, Strategy, StrategyKind};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Abstract graph search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GraphSearchConfig {
    pub strategy: StrategyKind,
    /// Model errors delay edge revelation: a revealable edge is withheld
    /// with probability 1/(1+t) at iteration t and retried later.
    pub reveal_error: bool,
    /// When set, every expansion is charged the transition cost.
    pub cost: Option<CostParams>,
    pub seed: u64,
}

impl GraphSearchConfig {
    pub fn new(strategy: StrategyKind, seed: u64) -> Self {
        GraphSearchConfig { strategy, reveal_error: false, cost: None, seed }
    }
}

#[derive(Debug, Clone)]
pub struct GraphSearchResult {
    pub reached: bool,
    pub expansion_order: Vec<usize>,
    pub intervention_set: BTreeSet<usize>,
    pub controllable_set: BTreeSet<usize>,
    /// Counter incremented on every controllable-set entry and every
    /// intervention-set entry; equals 2|IS| + |CS| throughout.
    pub additions: u64,
    pub cost: f64,
    pub iterations: usize,
}

fn reveal_round(
    truth: &SubgoalGraph,
    is: &BTreeSet<usize>,
    revealed: &mut BTreeSet<(usize, usize)>,
    reveal_error: bool,
    t: usize,
    rng: &mut ChaCha8Rng,
) {
    for i in 0..truth.n() {
        if is.contains(&i) {
            continue;
        }
        let pa = truth.parents(i);
        if pa.is_empty() {
            continue;
        }
        match truth.kind(i) {
            NodeKind::Or => {
                for &p in pa {
                    if is.contains(&p) && !revealed.contains(&(p, i)) {
                        let withheld = reveal_error && rng.random_bool(1.0 / (1.0 + t as f64));
                        if !withheld {
                            revealed.insert((p, i));
                        }
                    }
                }
            }
            NodeKind::And => {
                // Edges of an AND child reveal as a group once every parent
                // has been intervened on.
                if pa.iter().all(|p| is.contains(p)) && !revealed.contains(&(pa[0], i)) {
                    let withheld = reveal_error && rng.random_bool(1.0 / (1.0 + t as f64));
                    if !withheld {
                        for &p in pa {
                            revealed.insert((p, i));
                        }
                    }
                }
            }
        }
    }
}

/// True when some edge is eligible for revelation but still withheld.
fn reveal_pending(
    truth: &SubgoalGraph,
    is: &BTreeSet<usize>,
    revealed: &BTreeSet<(usize, usize)>,
) -> bool {
    (0..truth.n()).any(|i| {
        if is.contains(&i) {
            return false;
        }
        let pa = truth.parents(i);
        if pa.is_empty() {
            return false;
        }
        match truth.kind(i) {
            NodeKind::Or => {
                pa.iter().any(|&p| is.contains(&p) && !revealed.contains(&(p, i)))
            }
            NodeKind::And => {
                pa.iter().all(|p| is.contains(p)) && !revealed.contains(&(pa[0], i))
            }
        }
    })
}

fn controllable_from_revealed(
    truth: &SubgoalGraph,
    is: &BTreeSet<usize>,
    cs: &BTreeSet<usize>,
    revealed: &BTreeSet<(usize, usize)>,
) -> Vec<usize> {
    (0..truth.n())
        .filter(|&i| {
            if is.contains(&i) || cs.contains(&i) {
                return false;
            }
            let pa = truth.parents(i);
            if pa.is_empty() {
                return false;
            }
            match truth.kind(i) {
                NodeKind::Or => pa.iter().any(|&p| revealed.contains(&(p, i))),
                NodeKind::And => pa.iter().all(|&p| revealed.contains(&(p, i))),
            }
        })
        .collect()
}

/// Expand subgoals on the ground-truth structure until the final goal is
/// reached or nothing is controllable. Nodes become controllable through
/// revealed edges: an OR child needs one revealed edge from the intervention
/// set, an AND child needs all parents in the set (edges then reveal as a
/// group). The strategy scores candidates on the true graph.
pub fn graph_search(truth: &SubgoalGraph, cfg: &GraphSearchConfig) -> Result<GraphSearchResult> {
    truth.ensure_acyclic("graph_search")?;
    if let Some(params) = &cfg.cost {
        params.validate()?;
    }
    let n = truth.n();
    let target = truth.final_goal();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut strategy = Strategy::new(cfg.strategy, n, cfg.seed ^ 0x9e37_79b9);
    let roots = truth.roots();
    strategy.init_roots(&roots, truth);

    let mut is = BTreeSet::new();
    let mut cs: BTreeSet<usize> = roots.iter().copied().collect();
    let mut revealed: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut additions = cs.len() as u64;
    let mut cost = 0.0;
    let mut order = Vec::new();
    let mut t = 0usize;

    while !is.contains(&target) && !cs.is_empty() {
        t += 1;
        let x = strategy.pick(&cs, truth, target, &is, t)?;
        let is_before = is.len();
        cs.remove(&x);
        is.insert(x);
        additions += 1;
        order.push(x);
        strategy.after_expand(x, truth, &is);

        // Reveal edges out of the intervention set; retry withheld edges
        // (advancing the clock) whenever nothing is controllable yet.
        let mut new_cs = 0u64;
        loop {
            reveal_round(truth, &is, &mut revealed, cfg.reveal_error, t, &mut rng);
            for i in controllable_from_revealed(truth, &is, &cs, &revealed) {
                cs.insert(i);
                additions += 1;
                new_cs += 1;
            }
            if !cs.is_empty()
                || is.contains(&target)
                || !reveal_pending(truth, &is, &revealed)
            {
                break;
            }
            t += 1;
        }
        if let Some(params) = &cfg.cost {
            cost += transition_cost(params, is_before, new_cs as usize);
        }
        debug_assert_eq!(additions, 2 * is.len() as u64 + cs.len() as u64);
    }

    Ok(GraphSearchResult {
        reached: is.contains(&target),
        expansion_order: order,
        intervention_set: is,
        controllable_set: cs,
        additions,
        cost,
        iterations: t,
    })
}

// ---------------------------------------------------------------------------
// Simulated HRC loop
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscoveryMode {
    /// L1-regularized regression on interventional data.
    SsdL1,
    /// Exhaustive hypothesis enumeration on interventional data.
    SsdOracle,
    /// Edges reported directly from the true structure (OR edges per parent
    /// in IS; AND edges once all parents are in IS).
    Exact,
    /// Like Exact but each revelation is withheld with probability 1/(1+t).
    ExactWithError,
}

impl std::str::FromStr for DiscoveryMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssd-l1" => Ok(DiscoveryMode::SsdL1),
            "ssd-oracle" => Ok(DiscoveryMode::SsdOracle),
            "exact" => Ok(DiscoveryMode::Exact),
            "exact-error" => Ok(DiscoveryMode::ExactWithError),
            other => Err(Error::Parse(format!("unknown discovery mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HrcConfig {
    pub strategy: StrategyKind,
    pub discovery: DiscoveryMode,
    pub lambda: f64,
    /// Trajectories collected per intervention-sampling round.
    pub trajectories_per_round: usize,
    /// Success-ratio threshold for accepting a trained subgoal.
    pub phi_causal: f64,
    /// Probability of interleaving an unrelated trained subgoal during a
    /// training episode.
    pub mix_p: f64,
    pub train_episodes: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl HrcConfig {
    pub fn new(strategy: StrategyKind, discovery: DiscoveryMode, seed: u64) -> Self {
        HrcConfig {
            strategy,
            discovery,
            lambda: crate::ssd::DEFAULT_LAMBDA,
            trajectories_per_round: 10,
            phi_causal: 0.9,
            mix_p: 0.1,
            train_episodes: 10,
            seed,
            max_iterations: 0, // 0 = 4n default
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.phi_causal) || !(0.0..=1.0).contains(&self.mix_p) {
            return Err(Error::InvalidArgument("phi_causal and mix_p must lie in [0, 1]".into()));
        }
        if self.train_episodes == 0 || self.trajectories_per_round == 0 {
            return Err(Error::InvalidArgument(
                "train_episodes and trajectories_per_round must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunLogRow {
    pub iteration: usize,
    pub x_sel: usize,
    pub is_size: usize,
    pub cs_size: usize,
    pub ccs_size: usize,
    pub probes_iter: u64,
    pub probes_total: u64,
}

pub fn run_log_csv(rows: &[RunLogRow]) -> String {
    let mut s =
        String::from("t,x_sel,is_size,cs_size,ccs_size,probes_this_iter,cumulative_probes\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iteration, r.x_sel, r.is_size, r.cs_size, r.ccs_size, r.probes_iter, r.probes_total
        )
        .unwrap();
    }
    s
}

#[derive(Debug, Clone)]
pub struct HrcResult {
    pub reached: bool,
    pub expansion_order: Vec<usize>,
    pub recovered: RecoveredGraph,
    pub hierarchy: HierarchicalStructure,
    pub ledger: CostLedger,
    pub run_log: Vec<RunLogRow>,
    pub trained: BTreeSet<usize>,
    /// Total environment probes, for auditing against the ledger.
    pub env_probes: u64,
    pub decisions_csv: String,
}

fn merge_recovered(recovered: &mut RecoveredGraph, round: &RecoveredGraph, is: &BTreeSet<usize>) {
    for i in 0..recovered.n {
        if is.contains(&i) && recovered.evidence[i].is_none() && round.evidence[i].is_none() {
            continue;
        }
        if round.evidence[i].is_some() || !round.parents[i].is_empty() {
            let mut merged = recovered.parents[i].clone();
            merged.extend_from_slice(&round.parents[i]);
            merged.sort_unstable();
            merged.dedup();
            recovered.parents[i] = merged;
            recovered.kinds[i] = round.kinds[i];
            recovered.evidence[i] = round.evidence[i].clone();
        }
    }
}

/// Exact-engine edge revelation under the one-round reporting rule, with an
/// optional withholding probability applied per revelation event.
fn reveal_exact_round(
    truth: &SubgoalGraph,
    is: &BTreeSet<usize>,
    recovered: &mut RecoveredGraph,
    withhold_p: f64,
    rng: &mut ChaCha8Rng,
) {
    for i in 0..truth.n() {
        if is.contains(&i) {
            continue;
        }
        let pa = truth.parents(i);
        if pa.is_empty() {
            continue;
        }
        let mut newly: Vec<usize> = Vec::new();
        match truth.kind(i) {
            NodeKind::Or => {
                for &p in pa {
                    if is.contains(&p) && !recovered.parents[i].contains(&p) {
                        if withhold_p > 0.0 && rng.random_bool(withhold_p) {
                            continue;
                        }
                        newly.push(p);
                    }
                }
            }
            NodeKind::And => {
                if pa.iter().all(|p| is.contains(p)) && recovered.parents[i].len() < pa.len() {
                    if !(withhold_p > 0.0 && rng.random_bool(withhold_p)) {
                        newly.extend(pa.iter().filter(|p| !recovered.parents[i].contains(p)));
                    }
                }
            }
        }
        if !newly.is_empty() {
            recovered.parents[i].extend(newly);
            recovered.parents[i].sort_unstable();
            recovered.kinds[i] = truth.kind(i);
        }
    }
}

/// One simulated training round for `node`: achieve the recovered parents by
/// intervention (the trained-policy call), occasionally interleave an
/// unrelated trained subgoal, then give the mechanism a window to fire.
/// Roots train by direct intervention attempts.
fn train_subgoal_sim(
    env: &mut AscmEnv,
    node: usize,
    rec_parents: &[usize],
    trained: &BTreeSet<usize>,
    cfg: &HrcConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut successes = 0usize;
    let delta = env.config().explore_delta;
    for _ in 0..cfg.train_episodes {
        env.reset();
        if rec_parents.is_empty() {
            for _ in 0..delta {
                env.attempt_intervention(node)?;
                if env.achieved(node) {
                    break;
                }
            }
        } else {
            for &p in rec_parents {
                env.attempt_intervention(p)?;
                if cfg.mix_p > 0.0 && rng.random_bool(cfg.mix_p) {
                    let others: Vec<usize> =
                        trained.iter().copied().filter(|t| !rec_parents.contains(t)).collect();
                    if !others.is_empty() {
                        env.attempt_intervention(others[rng.random_range(0..others.len())])?;
                    }
                }
            }
            for _ in 0..delta {
                if env.achieved(node) {
                    break;
                }
                env.step();
            }
        }
        if env.achieved(node) {
            successes += 1;
        }
    }
    Ok(successes as f64 / cfg.train_episodes as f64)
}

/// The full loop on a simulated A-SCM: select a controllable subgoal, train
/// it if new, collect interventional data, refresh the recovered structure,
/// level newly explained subgoals and train them, until the final subgoal is
/// reached or nothing is left to try. The strategy only ever sees the
/// recovered structure.
pub fn run_hrc_simulated(
    truth: &SubgoalGraph,
    ascm: &AscmConfig,
    cfg: &HrcConfig,
) -> Result<HrcResult> {
    truth.ensure_acyclic("run_hrc_simulated")?;
    cfg.validate()?;
    let n = truth.n();
    let target = truth.final_goal();
    let mut env = AscmEnv::new(truth.clone(), *ascm, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5bd1_e995);
    let mut strategy = Strategy::new(cfg.strategy, n, cfg.seed ^ 0x9e37_79b9);

    let mut recovered = RecoveredGraph::empty(n);
    let mut hierarchy = HierarchicalStructure::new();
    let mut ledger = CostLedger::default();
    let mut run_log = Vec::new();

    let roots = truth.roots();
    for &r in &roots {
        hierarchy.update_node(r, &[])?;
    }
    let mut is: BTreeSet<usize> = BTreeSet::new();
    let mut cs: BTreeSet<usize> = roots.iter().copied().collect();
    let mut trained: BTreeSet<usize> = BTreeSet::new();
    let model0 = recovered.to_graph(target)?;
    strategy.init_roots(&roots, &model0);

    let max_iterations = if cfg.max_iterations == 0 { 4 * n } else { cfg.max_iterations };
    let mut order = Vec::new();
    let mut t = 0usize;
    while !is.contains(&target) && !cs.is_empty() && t < max_iterations {
        t += 1;
        let probes_at_start = env.probes();
        let model = recovered.to_graph(target)?;
        // Keep heuristics aligned with the evolving model.
        if cfg.strategy == StrategyKind::ShortestPath {
            for &g in &cs {
                strategy.astar.h_cost[g] = dijkstra_to_goal(&model, g);
            }
        }
        let x = strategy.pick(&cs, &model, target, &is, t)?;
        cs.remove(&x);
        is.insert(x);
        order.push(x);

        // Train the selected subgoal if it has no policy yet (roots).
        let mut training = 0u64;
        if !trained.contains(&x) {
            let before = env.probes();
            let parents = recovered.parents[x].clone();
            let ratio = train_subgoal_sim(&mut env, x, &parents, &trained, cfg, &mut rng)?;
            training += env.probes() - before;
            if ratio >= cfg.phi_causal {
                trained.insert(x);
            }
        }

        // Intervention sampling over the whole set.
        let before = env.probes();
        let is_vec: Vec<usize> = is.iter().copied().collect();
        let dataset = collect_interventional(&mut env, &is_vec, cfg.trajectories_per_round)?;
        let intervention = env.probes() - before;

        // Structure discovery (monotone across rounds).
        match cfg.discovery {
            DiscoveryMode::SsdL1 => {
                let round = discover(&dataset, &is_vec, n, cfg.lambda, FitEngine::L1);
                merge_recovered(&mut recovered, &round, &is);
            }
            DiscoveryMode::SsdOracle => {
                let round = discover(&dataset, &is_vec, n, cfg.lambda, FitEngine::Oracle);
                merge_recovered(&mut recovered, &round, &is);
            }
            DiscoveryMode::Exact => {
                reveal_exact_round(truth, &is, &mut recovered, 0.0, &mut rng);
            }
            DiscoveryMode::ExactWithError => {
                let p = 1.0 / (1.0 + t as f64);
                reveal_exact_round(truth, &is, &mut recovered, p, &mut rng);
            }
        }

        // Newly explained subgoals: children of IS whose recovered parents
        // all lie in IS.
        let ccs: Vec<usize> = (0..n)
            .filter(|&i| {
                !is.contains(&i)
                    && !cs.contains(&i)
                    && !recovered.parents[i].is_empty()
                    && recovered.parents[i].iter().all(|p| is.contains(p))
            })
            .collect();
        for &c in &ccs {
            hierarchy.update_node(c, &recovered.parents[c].clone())?;
        }

        // Subgoal training: the final goal alone when it just became
        // explained, otherwise every newly explained subgoal in level order.
        let queue: Vec<usize> = if ccs.contains(&target) {
            vec![target]
        } else {
            let mut q = ccs.clone();
            q.sort_by_key(|&c| (hierarchy.level(c).unwrap_or(0), c));
            q
        };
        for c in queue {
            let before = env.probes();
            let parents = recovered.parents[c].clone();
            let ratio = train_subgoal_sim(&mut env, c, &parents, &trained, cfg, &mut rng)?;
            training += env.probes() - before;
            if ratio >= cfg.phi_causal {
                trained.insert(c);
                cs.insert(c);
            } else {
                hierarchy.remove_node(c);
            }
        }

        let model_after = recovered.to_graph(target)?;
        strategy.after_expand(x, &model_after, &is);

        let probes_iter = env.probes() - probes_at_start;
        ledger.record(IterationProbes {
            iteration: t,
            x_sel: x,
            intervention,
            exploration: probes_iter - intervention - training,
            training,
        });
        run_log.push(RunLogRow {
            iteration: t,
            x_sel: x,
            is_size: is.len(),
            cs_size: cs.len(),
            ccs_size: ccs.len(),
            probes_iter,
            probes_total: env.probes(),
        });
    }

    Ok(HrcResult {
        reached: is.contains(&target) && trained.contains(&target),
        expansion_order: order,
        recovered,
        hierarchy,
        ledger,
        run_log,
        trained,
        env_probes: env.probes(),
        decisions_csv: strategy.decisions_csv(),
    })
}

// ---------------------------------------------------------------------------
// Gridworld instantiation (tabular Q subgoal policies)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GridHrcConfig {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub train_episodes: usize,
    pub max_episode_steps: usize,
    pub eval_episodes: usize,
    pub phi_causal: f64,
    pub lr: f64,
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub step_budget: u64,
}

impl GridHrcConfig {
    pub fn new(strategy: StrategyKind, seed: u64) -> Self {
        GridHrcConfig {
            strategy,
            seed,
            train_episodes: 400,
            max_episode_steps: 120,
            eval_episodes: 50,
            phi_causal: 0.9,
            lr: 0.1,
            gamma: 0.95,
            eps_start: 1.0,
            eps_end: 0.05,
            step_budget: 200_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct QTable {
    q: HashMap<u64, [f64; 6]>,
}

impl QTable {
    fn values(&self, key: u64) -> [f64; 6] {
        self.q.get(&key).copied().unwrap_or([0.0; 6])
    }

    fn greedy(&self, key: u64) -> Action {
        let vals = self.values(key);
        let mut best = 0usize;
        for (i, v) in vals.iter().enumerate() {
            if *v > vals[best] {
                best = i;
            }
        }
        ALL_ACTIONS[best]
    }

    fn max(&self, key: u64) -> f64 {
        self.values(key).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn update(&mut self, key: u64, action: Action, delta: f64) {
        let idx = ALL_ACTIONS.iter().position(|a| *a == action).unwrap();
        self.q.entry(key).or_insert([0.0; 6])[idx] += delta;
    }
}

fn run_policy(world: &mut GridWorld, q: &QTable, subgoal: usize, max_steps: usize) -> bool {
    for _ in 0..max_steps {
        if world.subgoal_achieved(subgoal) {
            return true;
        }
        world.step(q.greedy(world.state_key()));
    }
    world.subgoal_achieved(subgoal)
}

/// Q-learning for one subgoal policy. Each episode replays the policies of
/// the already-expanded subgoals (in expansion order) to reproduce the state
/// context the new policy will be invoked in, then learns with
/// epsilon-greedy primitive actions rewarded on subgoal achievement.
#[allow(clippy::too_many_arguments)]
fn train_grid_policy(
    world: &mut GridWorld,
    tables: &mut HashMap<usize, QTable>,
    subgoal: usize,
    prefix: &[usize],
    cfg: &GridHrcConfig,
    rng: &mut ChaCha8Rng,
) {
    let mut table = tables.remove(&subgoal).unwrap_or_default();
    for ep in 0..cfg.train_episodes {
        if world.probes() > cfg.step_budget {
            break;
        }
        world.reset();
        for &p in prefix {
            if let Some(pt) = tables.get(&p) {
                run_policy(world, pt, p, cfg.max_episode_steps);
            }
        }
        let frac = ep as f64 / cfg.train_episodes.max(1) as f64;
        let eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
        for _ in 0..cfg.max_episode_steps {
            if world.subgoal_achieved(subgoal) {
                break;
            }
            let s = world.state_key();
            let action = if rng.random_bool(eps) {
                ALL_ACTIONS[rng.random_range(0..ALL_ACTIONS.len())]
            } else {
                table.greedy(s)
            };
            world.step(action);
            let s2 = world.state_key();
            let achieved = world.subgoal_achieved(subgoal);
            let reward = achieved as u8 as f64;
            let bootstrap = if achieved { 0.0 } else { cfg.gamma * table.max(s2) };
            let idx = ALL_ACTIONS.iter().position(|a| *a == action).unwrap();
            let delta = cfg.lr * (reward + bootstrap - table.values(s)[idx]);
            table.update(s, action, delta);
        }
    }
    tables.insert(subgoal, table);
}

fn eval_grid(
    world: &mut GridWorld,
    tables: &HashMap<usize, QTable>,
    order: &[usize],
    target: usize,
    cfg: &GridHrcConfig,
) -> f64 {
    let mut successes = 0usize;
    for _ in 0..cfg.eval_episodes {
        world.reset();
        for &u in order {
            if let Some(t) = tables.get(&u) {
                run_policy(world, t, u, cfg.max_episode_steps);
            }
        }
        if world.subgoal_achieved(target) {
            successes += 1;
        }
    }
    successes as f64 / cfg.eval_episodes.max(1) as f64
}

#[derive(Debug, Clone)]
pub struct GridHrcResult {
    pub reached: bool,
    pub success_rate: f64,
    pub primitive_steps: u64,
    pub expansion_order: Vec<usize>,
    pub trained: BTreeSet<usize>,
    pub ledger: CostLedger,
}

/// HRC on a gridworld map: the selection strategy sees only the structure
/// revealed so far (children of intervened subgoals); subgoal policies are
/// tabular Q-learners trained lazily when a subgoal is first expanded or
/// newly explained. Returns the greedy evaluation success rate for the
/// final subgoal.
pub fn run_hrc_gridworld(map: &str, cfg: &GridHrcConfig) -> Result<GridHrcResult> {
    let mut world = GridWorld::from_ascii(map)?;
    let truth = world.truth_graph();
    let n = truth.n();
    let target = truth.final_goal();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5bd1_e995);
    let mut strategy = Strategy::new(cfg.strategy, n, cfg.seed ^ 0x9e37_79b9);
    let mut recovered = RecoveredGraph::empty(n);
    let mut hierarchy = HierarchicalStructure::new();
    let mut ledger = CostLedger::default();
    let mut tables: HashMap<usize, QTable> = HashMap::new();

    let roots = truth.roots();
    for &r in &roots {
        hierarchy.update_node(r, &[])?;
    }
    let mut is: BTreeSet<usize> = BTreeSet::new();
    let mut cs: BTreeSet<usize> = roots.iter().copied().collect();
    let mut trained: BTreeSet<usize> = BTreeSet::new();
    let model0 = recovered.to_graph(target)?;
    strategy.init_roots(&roots, &model0);

    let mut order: Vec<usize> = Vec::new();
    let mut t = 0usize;
    while !is.contains(&target) && !cs.is_empty() && world.probes() <= cfg.step_budget {
        t += 1;
        let model = recovered.to_graph(target)?;
        if cfg.strategy == StrategyKind::ShortestPath {
            for &g in &cs {
                strategy.astar.h_cost[g] = dijkstra_to_goal(&model, g);
            }
        }
        let x = strategy.pick(&cs, &model, target, &is, t)?;
        cs.remove(&x);
        is.insert(x);

        let mut training = 0u64;
        if !trained.contains(&x) {
            let before = world.probes();
            train_grid_policy(&mut world, &mut tables, x, &order, cfg, &mut rng);
            let check = eval_grid(&mut world, &tables, &[order.as_slice(), &[x]].concat(), x, cfg);
            training += world.probes() - before;
            if check >= cfg.phi_causal {
                trained.insert(x);
            }
        }
        order.push(x);

        // Exact revelation from the gridworld's true subgoal structure.
        reveal_exact_round(&truth, &is, &mut recovered, 0.0, &mut rng);
        let ccs: Vec<usize> = (0..n)
            .filter(|&i| {
                !is.contains(&i)
                    && !cs.contains(&i)
                    && !recovered.parents[i].is_empty()
                    && recovered.parents[i].iter().all(|p| is.contains(p))
            })
            .collect();
        for &c in &ccs {
            hierarchy.update_node(c, &recovered.parents[c].clone())?;
        }
        let queue: Vec<usize> = if ccs.contains(&target) {
            vec![target]
        } else {
            let mut q = ccs.clone();
            q.sort_by_key(|&c| (hierarchy.level(c).unwrap_or(0), c));
            q
        };
        for c in queue {
            let before = world.probes();
            train_grid_policy(&mut world, &mut tables, c, &order, cfg, &mut rng);
            let check = eval_grid(&mut world, &tables, &[order.as_slice(), &[c]].concat(), c, cfg);
            training += world.probes() - before;
            if check >= cfg.phi_causal {
                trained.insert(c);
                cs.insert(c);
            } else {
                hierarchy.remove_node(c);
            }
        }
        let model_after = recovered.to_graph(target)?;
        strategy.after_expand(x, &model_after, &is);
        ledger.record(IterationProbes {
            iteration: t,
            x_sel: x,
            intervention: 0,
            exploration: 0,
            training,
        });
    }

    let before_eval = world.probes();
    let eval_order: Vec<usize> = if hierarchy.level(target).is_some() {
        causal_order(&hierarchy, target)?
    } else {
        order.clone()
    };
    let success_rate = eval_grid(&mut world, &tables, &eval_order, target, cfg);
    ledger.record(IterationProbes {
        iteration: t + 1,
        x_sel: target,
        intervention: 0,
        exploration: world.probes() - before_eval,
        training: 0,
    });

    Ok(GridHrcResult {
        reached: is.contains(&target) && trained.contains(&target),
        success_rate,
        primitive_steps: world.probes(),
        expansion_order: order,
        trained,
        ledger,
    })
}
