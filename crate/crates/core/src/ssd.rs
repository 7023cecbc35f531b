//! Causal subgoal-structure discovery from interventional data: an
//! L1-regularized threshold regression (logistic surrogate, coordinate
//! descent) and an exact hypothesis-enumeration oracle.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::ascm::Dataset;
use crate::graph::{NodeKind, SubgoalGraph};
use crate::{Error, Result};

pub const COEF_TOL: f64 = 1e-6;
pub const DEFAULT_LAMBDA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitEngine {
    L1,
    Oracle,
}

impl std::str::FromStr for FitEngine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(FitEngine::L1),
            "oracle" => Ok(FitEngine::Oracle),
            other => Err(Error::Parse(format!("unknown fit engine '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Coefficient per node index (zero outside the candidate set).
    pub beta: Vec<f64>,
    pub beta0: f64,
    /// Candidate nodes whose coefficient exceeds COEF_TOL.
    pub parents: Vec<usize>,
    pub kind_guess: NodeKind,
    pub empirical_loss: f64,
    pub converged: bool,
}

/// Supervised pairs for one target node, with duplicate feature/label rows
/// aggregated by weight (binary features make the support tiny).
#[derive(Debug, Clone, Default)]
pub struct DesignSet {
    pub n: usize,
    /// (full state vector, label, multiplicity)
    pub rows: Vec<(Vec<u8>, u8, u64)>,
}

impl DesignSet {
    pub fn total_weight(&self) -> u64 {
        self.rows.iter().map(|r| r.2).sum()
    }

    pub fn push(&mut self, x: &[u8], y: u8) {
        for row in &mut self.rows {
            if row.0 == x && row.1 == y {
                row.2 += 1;
                return;
            }
        }
        self.rows.push((x.to_vec(), y, 1));
    }
}

/// Emit (X^t, X_target^{t+1}) pairs. Pairs where the target is under active
/// forcing are dropped (interventions sever the mechanism); in persistent
/// data, pairs where the target is already 1 are dropped too, because the
/// transition is forced by stickiness rather than by the mechanism.
pub fn build_design(dataset: &Dataset, target: usize) -> Result<DesignSet> {
    if dataset.trajectories.iter().all(Vec::is_empty) {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if target >= dataset.n {
        return Err(Error::InvalidArgument(format!("target {target} out of range")));
    }
    let mut out = DesignSet { n: dataset.n, rows: Vec::new() };
    let target_bit = 1u64 << target.min(63);
    for traj in &dataset.trajectories {
        for tr in traj {
            if tr.forced_mask & target_bit != 0 {
                continue;
            }
            if dataset.persistent && tr.x_before[target] == 1 {
                continue;
            }
            out.push(&tr.x_before, tr.x_after[target]);
        }
    }
    Ok(out)
}

fn finalize(
    n: usize,
    beta: &BTreeMap<usize, f64>,
    beta0: f64,
    loss: f64,
    kind: Option<NodeKind>,
    converged: bool,
) -> FitResult {
    let mut full = vec![0.0; n];
    let mut parents = Vec::new();
    for (&j, &b) in beta {
        full[j] = b;
        if b > COEF_TOL {
            parents.push(j);
        }
    }
    let kind_guess = kind.unwrap_or_else(|| {
        // AND iff the largest single positive coefficient cannot clear the
        // intercept but the full sum can.
        let positives: Vec<f64> = parents.iter().map(|&j| full[j]).collect();
        let max = positives.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = positives.iter().sum();
        if !positives.is_empty() && beta0 + max <= 0.0 && beta0 + sum > 0.0 {
            NodeKind::And
        } else {
            NodeKind::Or
        }
    });
    FitResult { beta: full, beta0, parents, kind_guess, empirical_loss: loss, converged }
}

/// L1-regularized logistic regression over the candidate features, solved by
/// cyclic proximal coordinate descent. Non-convergence within the budget is
/// flagged on the result rather than silently ignored.
pub fn fit_l1(
    design: &DesignSet,
    candidates: &[usize],
    lambda: f64,
    budget: usize,
) -> Result<FitResult> {
    if design.rows.is_empty() {
        return Err(Error::InvalidArgument("empty design".into()));
    }
    let m = design.total_weight() as f64;
    let rows = &design.rows;
    let mut beta: BTreeMap<usize, f64> = candidates.iter().map(|&j| (j, 0.0)).collect();
    let mut beta0 = 0.0f64;
    // z = linear predictor per aggregated row.
    let mut z = vec![0.0f64; rows.len()];
    let mut converged = false;
    for _ in 0..budget {
        let mut max_delta = 0.0f64;
        // Intercept (unpenalized).
        let (mut grad, mut hess) = (0.0, 0.0);
        for (zi, (_, y, w)) in z.iter().zip(rows) {
            let p = sigmoid(*zi);
            grad += *w as f64 * (p - *y as f64);
            hess += *w as f64 * (p * (1.0 - p)).max(1e-4);
        }
        let step = -grad / hess;
        beta0 += step;
        z.iter_mut().for_each(|zi| *zi += step);
        max_delta = max_delta.max(step.abs());
        // Candidate coordinates with soft-thresholding.
        for &j in candidates {
            let bj = beta[&j];
            let (mut grad, mut hess) = (0.0, 0.0);
            for (zi, (x, y, w)) in z.iter().zip(rows) {
                if x[j] == 1 {
                    let p = sigmoid(*zi);
                    grad += *w as f64 * (p - *y as f64);
                    hess += *w as f64 * (p * (1.0 - p)).max(1e-4);
                }
            }
            if hess == 0.0 {
                continue;
            }
            let raw = bj - grad / hess;
            let new = soft_threshold(raw, lambda * m / hess);
            let delta = new - bj;
            if delta != 0.0 {
                beta.insert(j, new);
                for (zi, (x, _, _)) in z.iter_mut().zip(rows) {
                    if x[j] == 1 {
                        *zi += delta;
                    }
                }
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < 1e-7 {
            converged = true;
            break;
        }
    }
    let mut wrong = 0u64;
    for (zi, (_, y, w)) in z.iter().zip(rows) {
        let pred = (*zi > 0.0) as u8;
        if pred != *y {
            wrong += w;
        }
    }
    Ok(finalize(design.n, &beta, beta0, wrong as f64 / m, None, converged))
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

const ORACLE_NODE_CAP: usize = 20;
const ORACLE_PARENT_CAP: usize = 5;

/// Exact L0 fit: enumerate (parent subset up to max_parents) x {AND, OR}
/// plus the two constant predictors, score by weighted misclassification +
/// lambda * |set|; ties break toward the smaller set, then lexicographic
/// subsets, then OR before AND.
pub fn fit_oracle(
    design: &DesignSet,
    candidates: &[usize],
    lambda: f64,
    max_parents: usize,
) -> Result<FitResult> {
    if design.rows.is_empty() {
        return Err(Error::InvalidArgument("empty design".into()));
    }
    if design.n > ORACLE_NODE_CAP {
        return Err(Error::Capacity(format!("oracle fit supports n <= {ORACLE_NODE_CAP}")));
    }
    if max_parents > ORACLE_PARENT_CAP {
        return Err(Error::Capacity(format!("oracle fit supports max_parents <= {ORACLE_PARENT_CAP}")));
    }
    let m = design.total_weight() as f64;
    // Best = (loss+penalty, |S|, subset, kind_rank); kind_rank 0 = OR.
    let mut best: Option<(f64, usize, Vec<usize>, u8, f64)> = None;
    let mut consider = |subset: &[usize], kind: NodeKind, constant: Option<u8>| {
        let mut wrong = 0u64;
        for (x, y, w) in &design.rows {
            let pred = match constant {
                Some(v) => v,
                None => match kind {
                    NodeKind::And => subset.iter().all(|&j| x[j] == 1) as u8,
                    NodeKind::Or => subset.iter().any(|&j| x[j] == 1) as u8,
                },
            };
            if pred != *y {
                wrong += w;
            }
        }
        let loss = wrong as f64 / m;
        let score = loss + lambda * subset.len() as f64;
        let kind_rank = matches!(kind, NodeKind::And) as u8;
        let better = match &best {
            None => true,
            Some(b) => {
                if score < b.0 - 1e-12 {
                    true
                } else if score > b.0 + 1e-12 {
                    false
                } else {
                    (subset.len(), subset, kind_rank) < (b.1, b.2.as_slice(), b.3)
                }
            }
        };
        if better {
            best = Some((score, subset.len(), subset.to_vec(), kind_rank, loss));
        }
    };
    // Constant predictors (empty set): OR convention predicts 0, AND predicts 1.
    consider(&[], NodeKind::Or, Some(0));
    consider(&[], NodeKind::And, Some(1));
    let k = candidates.len();
    for mask in 1u32..(1u32 << k) {
        let size = mask.count_ones() as usize;
        if size > max_parents {
            continue;
        }
        let subset: Vec<usize> =
            (0..k).filter(|&b| mask >> b & 1 == 1).map(|b| candidates[b]).collect();
        consider(&subset, NodeKind::Or, None);
        if size > 1 {
            consider(&subset, NodeKind::And, None);
        }
    }
    let (_, _, subset, kind_rank, loss) = best.unwrap();
    let kind = if kind_rank == 1 { NodeKind::And } else { NodeKind::Or };
    // Represent the chosen hypothesis with unit coefficients for reporting.
    let beta: BTreeMap<usize, f64> = subset.iter().map(|&j| (j, 1.0)).collect();
    let beta0 = match kind {
        NodeKind::And => 0.5 - subset.len() as f64,
        NodeKind::Or => -0.5,
    };
    Ok(finalize(design.n, &beta, beta0, loss, Some(kind), true))
}

/// Estimated adjacency with per-node fit evidence.
#[derive(Debug, Clone, Default)]
pub struct RecoveredGraph {
    pub n: usize,
    pub parents: Vec<Vec<usize>>,
    pub kinds: Vec<NodeKind>,
    pub evidence: Vec<Option<FitResult>>,
}

impl RecoveredGraph {
    pub fn empty(n: usize) -> Self {
        RecoveredGraph {
            n,
            parents: vec![Vec::new(); n],
            kinds: vec![NodeKind::Or; n],
            evidence: vec![None; n],
        }
    }

    pub fn edges(&self) -> std::collections::BTreeSet<(usize, usize)> {
        let mut out = std::collections::BTreeSet::new();
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.insert((p, child));
            }
        }
        out
    }

    /// View as an executable graph (for ECE rollouts and A* bookkeeping).
    pub fn to_graph(&self, final_goal: usize) -> Result<SubgoalGraph> {
        SubgoalGraph::new(self.parents.clone(), self.kinds.clone(), final_goal)
    }

    pub fn to_text(&self, final_goal: usize) -> String {
        self.to_graph(final_goal).map(|g| g.to_text()).unwrap_or_default()
    }

    /// Per-node coefficient CSV for the nodes that carry fit evidence.
    pub fn evidence_csv(&self) -> String {
        let mut s = String::from("node,beta0,kind,loss,converged,coefficients\n");
        for (i, ev) in self.evidence.iter().enumerate() {
            if let Some(fit) = ev {
                let coefs: Vec<String> = fit
                    .beta
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.abs() > 0.0)
                    .map(|(j, b)| format!("{j}:{b:.6}"))
                    .collect();
                writeln!(
                    s,
                    "{},{:.6},{},{:.6},{},{}",
                    i,
                    fit.beta0,
                    fit.kind_guess.as_str(),
                    fit.empirical_loss,
                    fit.converged,
                    coefs.join(";")
                )
                .unwrap();
            }
        }
        s
    }
}

/// Fit every node outside the intervention set, with candidate regressors
/// restricted to intervention-set members (only interventions generate
/// exogenous variation). Per-node failures leave the node empty instead of
/// aborting the discovery.
pub fn discover(
    dataset: &Dataset,
    intervention_set: &[usize],
    n_all: usize,
    lambda: f64,
    engine: FitEngine,
) -> RecoveredGraph {
    let mut out = RecoveredGraph::empty(n_all);
    let mut is_sorted = intervention_set.to_vec();
    is_sorted.sort_unstable();
    is_sorted.dedup();
    for node in 0..n_all {
        if is_sorted.binary_search(&node).is_ok() {
            continue;
        }
        let candidates: Vec<usize> = is_sorted.iter().copied().filter(|&j| j != node).collect();
        if candidates.is_empty() {
            continue;
        }
        let design = match build_design(dataset, node) {
            Ok(d) if !d.rows.is_empty() => d,
            _ => continue,
        };
        let fit = match engine {
            FitEngine::L1 => fit_l1(&design, &candidates, lambda, 500),
            FitEngine::Oracle => {
                fit_oracle(&design, &candidates, lambda, candidates.len().min(ORACLE_PARENT_CAP))
            }
        };
        if let Ok(fit) = fit {
            out.parents[node] = fit.parents.clone();
            out.kinds[node] = fit.kind_guess;
            out.evidence[node] = Some(fit);
        }
    }
    out
}

/// Build a design set directly from explicit (state, label) samples; used by
/// theory tests that sample one-sided valid assignments.
pub fn design_from_samples(n: usize, samples: impl IntoIterator<Item = (Vec<u8>, u8)>) -> DesignSet {
    let mut out = DesignSet { n, rows: Vec::new() };
    for (x, y) in samples {
        out.push(&x, y);
    }
    out
}
