//! The abstracted SCM over subgoal variables: X_i^{t+1} = theta_i(X^t) XOR eps,
//! with Bernoulli(rho) noise, persistent do-interventions, and interventional
//! data collection.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{NodeKind, SubgoalGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AscmMode {
    /// Achieved subgoals never revert: next = max(current, theta XOR eps).
    Persistent,
    /// Raw mechanism semantics: next = theta XOR eps.
    Noisy,
}

#[derive(Debug, Clone, Copy)]
pub struct AscmConfig {
    pub noise_rho: f64,
    pub mode: AscmMode,
    pub horizon: usize,
    pub explore_delta: usize,
    pub intervention_success: f64,
}

impl AscmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.noise_rho) {
            return Err(Error::InvalidArgument(format!("noise_rho {} outside [0, 0.5)", self.noise_rho)));
        }
        if self.horizon < 1 || self.explore_delta < 1 {
            return Err(Error::InvalidArgument("horizon and explore_delta must be >= 1".into()));
        }
        if !(self.intervention_success > 0.0 && self.intervention_success <= 1.0) {
            return Err(Error::InvalidArgument("intervention_success outside (0, 1]".into()));
        }
        Ok(())
    }

    pub fn persistent(noise_rho: f64) -> Self {
        AscmConfig {
            noise_rho,
            mode: AscmMode::Persistent,
            horizon: 200,
            explore_delta: 20,
            intervention_success: 1.0,
        }
    }
}

/// Mechanism value for node i: AND/OR over parent values; 0 for parentless
/// nodes (roots are achieved only via noise or intervention).
pub fn theta(graph: &SubgoalGraph, x: &[u8], i: usize) -> u8 {
    let ps = graph.parents(i);
    if ps.is_empty() {
        return 0;
    }
    let hit = match graph.kind(i) {
        NodeKind::And => ps.iter().all(|&p| x[p] == 1),
        NodeKind::Or => ps.iter().any(|&p| x[p] == 1),
    };
    hit as u8
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub x_before: Vec<u8>,
    pub x_after: Vec<u8>,
    /// Bit i set when node i was under active forcing during this step.
    pub forced_mask: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub n: usize,
    /// True when collected in persistent mode (enables the stickiness filter
    /// in design construction).
    pub persistent: bool,
    pub trajectories: Vec<Vec<Transition>>,
}

impl Dataset {
    pub fn transition_count(&self) -> usize {
        self.trajectories.iter().map(Vec::len).sum()
    }

    /// CSV serialization: one row per recorded state with the forcing active
    /// at the step that produced it (the t=0 row carries the pre-step mask 0).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("t,trajectory_id,forced_mask");
        for i in 0..self.n {
            write!(s, ",x_{i}").unwrap();
        }
        s.push('\n');
        for (tid, traj) in self.trajectories.iter().enumerate() {
            if let Some(first) = traj.first() {
                write_row(&mut s, 0, tid, 0, &first.x_before);
            }
            for (t, tr) in traj.iter().enumerate() {
                write_row(&mut s, t + 1, tid, tr.forced_mask, &tr.x_after);
            }
        }
        s
    }
}

fn write_row(s: &mut String, t: usize, tid: usize, mask: u64, x: &[u8]) {
    write!(s, "{t},{tid},{mask}").unwrap();
    for &v in x {
        write!(s, ",{v}").unwrap();
    }
    s.push('\n');
}

/// Single-threaded executable A-SCM with persistent forcing and a probe
/// counter that audits every step taken through the model.
#[derive(Debug, Clone)]
pub struct AscmEnv {
    graph: SubgoalGraph,
    config: AscmConfig,
    x: Vec<u8>,
    forced: Vec<Option<u8>>,
    t: usize,
    rng: ChaCha8Rng,
    probes: u64,
}

impl AscmEnv {
    pub fn new(graph: SubgoalGraph, config: AscmConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let n = graph.n();
        Ok(AscmEnv {
            graph,
            config,
            x: vec![0; n],
            forced: vec![None; n],
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            probes: 0,
        })
    }

    pub fn graph(&self) -> &SubgoalGraph {
        &self.graph
    }

    pub fn config(&self) -> &AscmConfig {
        &self.config
    }

    pub fn x(&self) -> &[u8] {
        &self.x
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }

    pub fn achieved(&self, node: usize) -> bool {
        self.x[node] == 1
    }

    /// Reset state and forcing; the RNG stream continues.
    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|v| *v = 0);
        self.forced.iter_mut().for_each(|f| *f = None);
        self.t = 0;
    }

    /// Register a persistent forcing that overrides the mechanism at every
    /// subsequent step until cleared.
    pub fn intervene(&mut self, node: usize, value: u8) -> Result<()> {
        if node >= self.graph.n() {
            return Err(Error::InvalidArgument(format!("node {node} out of range")));
        }
        if value > 1 {
            return Err(Error::InvalidArgument("intervention value must be 0 or 1".into()));
        }
        self.forced[node] = Some(value);
        Ok(())
    }

    pub fn clear_intervention(&mut self, node: usize) {
        self.forced[node] = None;
    }

    pub fn forced_mask(&self) -> u64 {
        let mut mask = 0u64;
        for (i, f) in self.forced.iter().enumerate() {
            if f.is_some() && i < 64 {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// One mechanism step; every call is one system probe.
    pub fn step(&mut self) -> Transition {
        let x_before = self.x.clone();
        let mut next = vec![0u8; self.graph.n()];
        for i in 0..self.graph.n() {
            next[i] = match self.forced[i] {
                Some(v) => v,
                None => {
                    let noise = self.config.noise_rho > 0.0
                        && self.rng.random_bool(self.config.noise_rho);
                    let value = theta(&self.graph, &x_before, i) ^ noise as u8;
                    match self.config.mode {
                        AscmMode::Noisy => value,
                        AscmMode::Persistent => x_before[i].max(value),
                    }
                }
            };
        }
        self.x = next;
        self.t += 1;
        self.probes += 1;
        Transition { x_before, x_after: self.x.clone(), forced_mask: self.forced_mask() }
    }

    /// Attempt do(node = 1): with probability intervention_success the forcing
    /// lands before the step; either way one step is taken and recorded.
    pub fn attempt_intervention(&mut self, node: usize) -> Result<Transition> {
        let success = self.config.intervention_success >= 1.0
            || self.rng.random_bool(self.config.intervention_success);
        if success {
            self.intervene(node, 1)?;
        }
        Ok(self.step())
    }
}

/// Algorithm-2-style interventional data collection: per trajectory,
/// repeatedly pick a uniformly random unachieved member of the intervention
/// set, attempt do(.=1), then record explore_delta exploration steps; the
/// trajectory ends when the horizon is reached or all members are achieved.
pub fn collect_interventional(
    env: &mut AscmEnv,
    intervention_set: &[usize],
    t_trajectories: usize,
) -> Result<Dataset> {
    if intervention_set.is_empty() {
        return Err(Error::InvalidArgument("intervention set must be nonempty".into()));
    }
    if env.graph.n() > 64 {
        return Err(Error::Capacity("datasets support n <= 64 (forced_mask width)".into()));
    }
    let mut trajectories = Vec::with_capacity(t_trajectories);
    for _ in 0..t_trajectories {
        env.reset();
        let mut traj = Vec::new();
        while env.t < env.config.horizon {
            let unachieved: Vec<usize> = intervention_set
                .iter()
                .copied()
                .filter(|&g| !env.achieved(g))
                .collect();
            if unachieved.is_empty() {
                break;
            }
            let pick = unachieved[env.rng.random_range(0..unachieved.len())];
            traj.push(env.attempt_intervention(pick)?);
            for _ in 0..env.config.explore_delta {
                if env.t >= env.config.horizon {
                    break;
                }
                traj.push(env.step());
            }
        }
        trajectories.push(traj);
    }
    Ok(Dataset {
        n: env.graph.n(),
        persistent: env.config.mode == AscmMode::Persistent,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_semi_er_with_p, SubgoalGraph};

    fn mini_craft() -> SubgoalGraph {
        SubgoalGraph::new(
            vec![vec![], vec![], vec![0, 1]],
            vec![NodeKind::Or, NodeKind::Or, NodeKind::And],
            2,
        )
        .unwrap()
    }

    fn cfg(mode: AscmMode, rho: f64) -> AscmConfig {
        AscmConfig {
            noise_rho: rho,
            mode,
            horizon: 100,
            explore_delta: 5,
            intervention_success: 1.0,
        }
    }

    #[test]
    fn theta_basic() {
        let g = mini_craft();
        assert_eq!(theta(&g, &[1, 1, 0], 2), 1);
        assert_eq!(theta(&g, &[1, 0, 0], 2), 0);
        assert_eq!(theta(&g, &[0, 0, 0], 0), 0);
        let org = crate::graph::assign_kinds(&g, crate::graph::KindMode::AllOr, 0);
        assert_eq!(theta(&org, &[0, 0, 0], 2), 0);
        assert_eq!(theta(&org, &[0, 1, 0], 2), 1);
    }

    #[test]
    fn persistent_value_never_reverts() {
        let g = mini_craft();
        let mut env = AscmEnv::new(g, cfg(AscmMode::Persistent, 0.3), 11).unwrap();
        env.intervene(0, 1).unwrap();
        env.step();
        env.clear_intervention(0);
        for _ in 0..50 {
            let tr = env.step();
            for i in 0..3 {
                if tr.x_before[i] == 1 {
                    assert_eq!(tr.x_after[i], 1);
                }
            }
        }
    }

    #[test]
    fn noisy_rho_zero_is_pure_theta_iteration() {
        let g = crate::graph::assign_kinds(
            &gen_semi_er_with_p(8, 0.5, 3).unwrap(),
            crate::graph::KindMode::Random,
            4,
        );
        let mut env = AscmEnv::new(g.clone(), cfg(AscmMode::Noisy, 0.0), 5).unwrap();
        env.intervene(0, 1).unwrap();
        let mut expect: Vec<u8> = vec![0; 8];
        for _ in 0..20 {
            let tr = env.step();
            let mut next: Vec<u8> = (0..8).map(|i| theta(&g, &expect, i)).collect();
            next[0] = 1;
            expect = next;
            assert_eq!(tr.x_after, expect);
        }
    }

    #[test]
    fn intervention_persists_and_clears() {
        let g = mini_craft();
        let mut env = AscmEnv::new(g, cfg(AscmMode::Noisy, 0.0), 0).unwrap();
        env.intervene(0, 1).unwrap();
        for _ in 0..5 {
            assert_eq!(env.step().x_after[0], 1);
        }
        // do(X=0) on an AND child whose parents are forced 1 keeps it 0.
        env.intervene(1, 1).unwrap();
        env.intervene(2, 0).unwrap();
        for _ in 0..3 {
            assert_eq!(env.step().x_after[2], 0);
        }
        // Clearing resumes the mechanism on the next step.
        env.clear_intervention(2);
        assert_eq!(env.step().x_after[2], 1);
        assert!(env.intervene(9, 1).is_err());
        assert!(env.intervene(0, 2).is_err());
    }

    #[test]
    fn collect_achieves_roots_and_fires_and_child() {
        let g = mini_craft();
        let mut env = AscmEnv::new(g, cfg(AscmMode::Persistent, 0.0), 9).unwrap();
        let data = collect_interventional(&mut env, &[0, 1], 10).unwrap();
        assert_eq!(data.trajectories.len(), 10);
        for traj in &data.trajectories {
            let last = traj.last().unwrap();
            // Both roots achieved and the AND child fired within the explore
            // window after both parents were 1.
            assert_eq!(&last.x_after[0..2], &[1, 1]);
            assert_eq!(last.x_after[2], 1);
            // Root flips 0 -> 1 exactly once per trajectory (persistence).
            let flips = traj
                .iter()
                .filter(|tr| tr.x_before[0] == 0 && tr.x_after[0] == 1)
                .count();
            assert_eq!(flips, 1);
        }
    }

    #[test]
    fn collect_empty_and_zero_trajectories() {
        let g = mini_craft();
        let mut env = AscmEnv::new(g, cfg(AscmMode::Persistent, 0.0), 0).unwrap();
        assert!(collect_interventional(&mut env, &[], 3).is_err());
        let data = collect_interventional(&mut env, &[0], 0).unwrap();
        assert!(data.trajectories.is_empty());
    }

    #[test]
    fn determinism_identical_seeds() {
        let g = crate::graph::assign_kinds(
            &gen_semi_er_with_p(6, 0.4, 2).unwrap(),
            crate::graph::KindMode::Random,
            2,
        );
        let c = cfg(AscmMode::Persistent, 0.1);
        let mut a = AscmEnv::new(g.clone(), c, 77).unwrap();
        let mut b = AscmEnv::new(g, c, 77).unwrap();
        let da = collect_interventional(&mut a, &[0, 1], 5).unwrap();
        let db = collect_interventional(&mut b, &[0, 1], 5).unwrap();
        assert_eq!(da, db);
        assert_eq!(a.probes(), b.probes());
    }

    #[test]
    fn flip_rate_matches_rho() {
        // All parents forced; unforced node flips at rate rho +- 3 stderr.
        let g = mini_craft();
        let rho = 0.2;
        let mut env = AscmEnv::new(g, cfg(AscmMode::Noisy, rho), 123).unwrap();
        env.intervene(0, 1).unwrap();
        env.intervene(1, 1).unwrap();
        let n_steps = 20000;
        let mut flips = 0usize;
        for _ in 0..n_steps {
            // theta for node 2 is 1 (both parents forced 1), so a flip means
            // x_after != 1.
            let tr = env.step();
            if tr.x_after[2] == 0 {
                flips += 1;
            }
        }
        let freq = flips as f64 / n_steps as f64;
        let tol = 3.0 * (rho * (1.0 - rho) / n_steps as f64).sqrt();
        assert!((freq - rho).abs() <= tol, "freq {freq} vs rho {rho} (tol {tol})");
    }

    #[test]
    fn csv_shape() {
        let g = mini_craft();
        let mut env = AscmEnv::new(g, cfg(AscmMode::Persistent, 0.0), 1).unwrap();
        let data = collect_interventional(&mut env, &[0, 1], 2).unwrap();
        let csv = data.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,trajectory_id,forced_mask,x_0,x_1,x_2");
        assert_eq!(csv.lines().count(), 1 + data.transition_count() + 2);
    }

    #[test]
    fn probe_counter_counts_every_step() {
        let g = mini_craft();
        let mut env = AscmEnv::new(g, cfg(AscmMode::Persistent, 0.0), 1).unwrap();
        let data = collect_interventional(&mut env, &[0, 1], 4).unwrap();
        assert_eq!(env.probes(), data.transition_count() as u64);
    }
}
