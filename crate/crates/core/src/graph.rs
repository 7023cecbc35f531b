//! Ground-truth subgoal graphs, random generators, hierarchical-structure
//! bookkeeping, discoverable-parent analysis, and graph metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    And,
    Or,
}

impl NodeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::And => "AND",
            NodeKind::Or => "OR",
        }
    }
}

/// Directed graph over subgoals with a per-node AND/OR mechanism and a
/// designated final subgoal. Generated graphs are DAGs with edges from lower
/// to higher index; hand-built graphs may in principle contain cycles, but
/// every algorithm in this crate that needs acyclicity checks and rejects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgoalGraph {
    parents: Vec<Vec<usize>>,
    kinds: Vec<NodeKind>,
    final_goal: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindMode {
    AllAnd,
    AllOr,
    Random,
}

impl std::str::FromStr for KindMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-and" => Ok(KindMode::AllAnd),
            "all-or" => Ok(KindMode::AllOr),
            "random" => Ok(KindMode::Random),
            other => Err(Error::Parse(format!("unknown kind mode '{other}'"))),
        }
    }
}

impl SubgoalGraph {
    pub fn new(parents: Vec<Vec<usize>>, kinds: Vec<NodeKind>, final_goal: usize) -> Result<Self> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::InvalidArgument("graph must have at least one node".into()));
        }
        if kinds.len() != n {
            return Err(Error::InvalidArgument("kinds length must match node count".into()));
        }
        if final_goal >= n {
            return Err(Error::InvalidArgument(format!("final node {final_goal} out of range")));
        }
        let mut parents = parents;
        for (i, ps) in parents.iter_mut().enumerate() {
            ps.sort_unstable();
            ps.dedup();
            if ps.iter().any(|&p| p == i) {
                return Err(Error::InvalidArgument(format!("self-loop at node {i}")));
            }
            if ps.iter().any(|&p| p >= n) {
                return Err(Error::InvalidArgument(format!("parent out of range at node {i}")));
            }
        }
        let g = SubgoalGraph { parents, kinds, final_goal };
        g.ensure_acyclic("graph construction")?;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn final_goal(&self) -> usize {
        self.final_goal
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    pub fn set_kind(&mut self, i: usize, kind: NodeKind) {
        self.kinds[i] = kind;
    }

    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.insert((p, child));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Child lists, index-sorted, computed once per call site.
    pub fn children_lists(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.n()];
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                ch[p].push(child);
            }
        }
        ch
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.parents[i].is_empty()).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm over parent lists.
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.parents[i].len()).collect();
        let children = self.children_lists();
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop() {
            seen += 1;
            for &c in &children[u] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push(c);
                }
            }
        }
        seen == n
    }

    pub fn ensure_acyclic(&self, context: &str) -> Result<()> {
        if self.is_acyclic() {
            Ok(())
        } else {
            Err(Error::Cyclic(context.into()))
        }
    }

    /// All strict ancestors of `node`.
    pub fn ancestors(&self, node: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = self.parents[node].to_vec();
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend_from_slice(&self.parents[u]);
            }
        }
        out
    }

    /// All nodes reachable from `node` by directed edges (strict descendants).
    pub fn descendants(&self, node: usize) -> BTreeSet<usize> {
        let children = self.children_lists();
        let mut out = BTreeSet::new();
        let mut stack = children[node].clone();
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend_from_slice(&children[u]);
            }
        }
        out
    }

    pub fn has_path(&self, from: usize, to: usize) -> bool {
        from == to || self.descendants(from).contains(&to)
    }

    /// Line-oriented text serialization; round-trips byte-stably.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "n={} final={}", self.n(), self.final_goal).unwrap();
        for i in 0..self.n() {
            let ps: Vec<String> = self.parents[i].iter().map(|p| p.to_string()).collect();
            writeln!(s, "node={} kind={} parents={}", i, self.kinds[i].as_str(), ps.join(",")).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty graph text".into()))?;
        let (n, final_goal) = parse_header(header)?;
        let mut parents = vec![Vec::new(); n];
        let mut kinds = vec![NodeKind::Or; n];
        let mut seen = vec![false; n];
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut node = None;
            let mut kind = None;
            let mut ps = None;
            for field in line.split_whitespace() {
                let (key, value) = field
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("bad field '{field}'")))?;
                match key {
                    "node" => node = Some(parse_usize(value)?),
                    "kind" => {
                        kind = Some(match value {
                            "AND" => NodeKind::And,
                            "OR" => NodeKind::Or,
                            other => return Err(Error::Parse(format!("unknown kind '{other}'"))),
                        })
                    }
                    "parents" => {
                        let mut list = Vec::new();
                        if !value.is_empty() {
                            for item in value.split(',') {
                                list.push(parse_usize(item)?);
                            }
                        }
                        ps = Some(list);
                    }
                    other => return Err(Error::Parse(format!("unknown key '{other}'"))),
                }
            }
            let node = node.ok_or_else(|| Error::Parse("missing node index".into()))?;
            if node >= n {
                return Err(Error::Parse(format!("node {node} out of range")));
            }
            if seen[node] {
                return Err(Error::Parse(format!("duplicate node {node}")));
            }
            seen[node] = true;
            kinds[node] = kind.ok_or_else(|| Error::Parse("missing kind".into()))?;
            parents[node] = ps.ok_or_else(|| Error::Parse("missing parents".into()))?;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Parse("missing node lines".into()));
        }
        SubgoalGraph::new(parents, kinds, final_goal)
    }
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut n = None;
    let mut final_goal = None;
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field '{field}'")))?;
        match key {
            "n" => n = Some(parse_usize(value)?),
            "final" => final_goal = Some(parse_usize(value)?),
            other => return Err(Error::Parse(format!("unknown header key '{other}'"))),
        }
    }
    Ok((
        n.ok_or_else(|| Error::Parse("header missing n".into()))?,
        final_goal.ok_or_else(|| Error::Parse("header missing final".into()))?,
    ))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad integer '{s}'")))
}

/// Rooted tree with breadth-first node numbering and branching factor `b`:
/// node i > 0 has parent (i-1)/b. The final subgoal is the deepest leaf with
/// the highest index, which under BFS numbering is node n-1. The structure is
/// deterministic; `_seed` is accepted for interface symmetry with the other
/// generator.
pub fn gen_tree(n: usize, b: usize, _seed: u64) -> Result<SubgoalGraph> {
    if n < 1 {
        return Err(Error::InvalidArgument("tree needs n >= 1".into()));
    }
    if b < 2 {
        return Err(Error::InvalidArgument("tree needs branching factor b >= 2".into()));
    }
    let mut parents = vec![Vec::new(); n];
    for (i, ps) in parents.iter_mut().enumerate().skip(1) {
        ps.push((i - 1) / b);
    }
    SubgoalGraph::new(parents, vec![NodeKind::Or; n], n - 1)
}

/// Upper-triangular random DAG: each edge (i -> j), i < j, appears
/// independently with probability p = c * ln(n) / (n - 1). The final subgoal
/// is node n-1 so that ancestors exist under the edge orientation.
pub fn gen_semi_er(n: usize, c: f64, seed: u64) -> Result<SubgoalGraph> {
    if n < 2 {
        return Err(Error::InvalidArgument("semi-ER needs n >= 2".into()));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("semi-ER density c={c} outside (0,1)")));
    }
    let p = c * (n as f64).ln() / (n as f64 - 1.0);
    gen_semi_er_with_p(n, p, seed)
}

/// Same generator with the edge probability given directly (p in [0,1]).
pub fn gen_semi_er_with_p(n: usize, p: f64, seed: u64) -> Result<SubgoalGraph> {
    if n < 2 {
        return Err(Error::InvalidArgument("semi-ER needs n >= 2".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parents = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                parents[j].push(i);
            }
        }
    }
    SubgoalGraph::new(parents, vec![NodeKind::Or; n], n - 1)
}

pub fn assign_kinds(graph: &SubgoalGraph, mode: KindMode, seed: u64) -> SubgoalGraph {
    let mut out = graph.clone();
    match mode {
        KindMode::AllAnd => {
            for i in 0..out.n() {
                out.set_kind(i, NodeKind::And);
            }
        }
        KindMode::AllOr => {
            for i in 0..out.n() {
                out.set_kind(i, NodeKind::Or);
            }
        }
        KindMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..out.n() {
                let kind = if rng.random_bool(0.5) { NodeKind::And } else { NodeKind::Or };
                out.set_kind(i, kind);
            }
        }
    }
    out
}

/// Recovered DAG plus level assignment driving subgoal training order and
/// multi-level policy recursion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HierarchicalStructure {
    parents: BTreeMap<usize, Vec<usize>>,
    level: BTreeMap<usize, u32>,
}

impl HierarchicalStructure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn level(&self, node: usize) -> Option<u32> {
        self.level.get(&node).copied()
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        self.parents.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn leveled_nodes(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.level.iter().map(|(&k, &v)| (k, v))
    }

    /// Level a node given its recovered parents (empty slice for roots).
    /// Parents must already be leveled. Re-leveling an existing node merges
    /// the parent lists and recomputes the level.
    pub fn update_node(&mut self, child: usize, parents: &[usize]) -> Result<()> {
        for &p in parents {
            if !self.level.contains_key(&p) {
                return Err(Error::InvalidArgument(format!(
                    "parent {p} of node {child} has no level yet"
                )));
            }
            if p == child {
                return Err(Error::InvalidArgument(format!("self-loop at node {child}")));
            }
        }
        let entry = self.parents.entry(child).or_default();
        entry.extend_from_slice(parents);
        entry.sort_unstable();
        entry.dedup();
        let level = if entry.is_empty() {
            0
        } else {
            1 + entry.iter().map(|p| self.level[p]).max().unwrap()
        };
        self.level.insert(child, level);
        Ok(())
    }

    /// Apply a batch of (parent, child) edges grouped per child.
    pub fn update(&mut self, new_parent_edges: &[(usize, usize)]) -> Result<()> {
        let mut grouped: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(parent, child) in new_parent_edges {
            grouped.entry(child).or_default().push(parent);
        }
        for (child, parents) in grouped {
            self.update_node(child, &parents)?;
        }
        Ok(())
    }

    pub fn remove_node(&mut self, node: usize) {
        self.parents.remove(&node);
        self.level.remove(&node);
    }

    /// Def 3.2 check: every leveled node's level exceeds all its parents'.
    pub fn is_consistent(&self) -> bool {
        self.level.iter().all(|(node, &lv)| {
            self.parents(*node).iter().all(|p| match self.level.get(p) {
                Some(&plv) => lv >= plv + 1,
                None => false,
            })
        })
    }
}

/// The queried node and all its ancestors in `hs`, sorted by increasing
/// level with ties broken by ascending index.
pub fn causal_order(hs: &HierarchicalStructure, g: usize) -> Result<Vec<usize>> {
    if hs.level(g).is_none() {
        return Err(Error::InvalidArgument(format!("node {g} is not leveled")));
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![g];
    while let Some(u) = stack.pop() {
        if seen.insert(u) {
            stack.extend_from_slice(hs.parents(u));
        }
    }
    let mut order: Vec<usize> = seen.into_iter().collect();
    order.sort_by_key(|&u| (hs.level(u).unwrap_or(0), u));
    Ok(order)
}

const ASSIGNMENT_CAP: usize = 20;

/// One-sided valid assignments of the graph: every achieved non-root node is
/// supported by its mechanism (OR: some parent achieved; AND: all parents
/// achieved). Parentless nodes are unconstrained — they model subgoals
/// achieved by intervention.
fn valid_assignments(graph: &SubgoalGraph) -> Result<Vec<u32>> {
    let n = graph.n();
    if n > ASSIGNMENT_CAP {
        return Err(Error::Capacity(format!(
            "assignment enumeration supports n <= {ASSIGNMENT_CAP}, got {n}"
        )));
    }
    let mut out = Vec::new();
    'outer: for x in 0u32..(1u32 << n) {
        for i in 0..n {
            if x >> i & 1 == 0 || graph.parents(i).is_empty() {
                continue;
            }
            let ok = match graph.kind(i) {
                NodeKind::Or => graph.parents(i).iter().any(|&p| x >> p & 1 == 1),
                NodeKind::And => graph.parents(i).iter().all(|&p| x >> p & 1 == 1),
            };
            if !ok {
                continue 'outer;
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// For each node, the subset of its parents that any discovery method could
/// identify: a parent is discoverable when the one-sided valid assignments
/// contain both settings of that parent with the node's other parents held at
/// the kind's reference pattern (all 0 for OR, all 1 for AND).
pub fn discoverable_parents(graph: &SubgoalGraph) -> Result<Vec<Vec<usize>>> {
    let assignments = valid_assignments(graph)?;
    let n = graph.n();
    let mut out = vec![Vec::new(); n];
    for i in 0..n {
        let ps = graph.parents(i);
        for &j in ps {
            let others_value = match graph.kind(i) {
                NodeKind::Or => 0u32,
                NodeKind::And => 1u32,
            };
            let matches = |x: u32, j_value: u32| -> bool {
                if x >> j & 1 != j_value {
                    return false;
                }
                ps.iter().filter(|&&p| p != j).all(|&p| x >> p & 1 == others_value)
            };
            let has_one = assignments.iter().any(|&x| matches(x, 1));
            let has_zero = assignments.iter().any(|&x| matches(x, 0));
            if has_one && has_zero {
                out[i].push(j);
            }
        }
    }
    Ok(out)
}

/// All one-sided valid assignments, exposed for oracle-exactness tests and
/// data generation: bit i of each entry is the value of node i.
pub fn one_sided_valid_assignments(graph: &SubgoalGraph) -> Result<Vec<u32>> {
    valid_assignments(graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShdReport {
    pub missing: usize,
    pub extra: usize,
    pub shd: usize,
}

pub fn shd(estimate: &BTreeSet<(usize, usize)>, truth: &BTreeSet<(usize, usize)>) -> ShdReport {
    let missing = truth.difference(estimate).count();
    let extra = estimate.difference(truth).count();
    ShdReport { missing, extra, shd: missing + extra }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mini_craft() -> SubgoalGraph {
        // 0 = stone (S), 1 = wood (W), 2 = pickaxe (P = S AND W).
        SubgoalGraph::new(
            vec![vec![], vec![], vec![0, 1]],
            vec![NodeKind::Or, NodeKind::Or, NodeKind::And],
            2,
        )
        .unwrap()
    }

    #[test]
    fn tree_degenerate_single_node() {
        let g = gen_tree(1, 3, 0).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.final_goal(), 0);
    }

    #[test]
    fn tree_one_full_level() {
        let g = gen_tree(4, 3, 0).unwrap();
        assert_eq!(g.parents(1), &[0]);
        assert_eq!(g.parents(2), &[0]);
        assert_eq!(g.parents(3), &[0]);
        assert_eq!(g.final_goal(), 3);
    }

    #[test]
    fn tree_perfect_ternary_depth_two() {
        // n=13 with b=3 is the perfect depth-2 ternary tree: root, three
        // internal nodes 1..3, nine leaves 4..12.
        let g = gen_tree(13, 3, 0).unwrap();
        assert_eq!(g.edge_count(), 12);
        for i in 1..4 {
            assert_eq!(g.parents(i), &[0]);
        }
        for i in 4..13 {
            assert_eq!(g.parents(i), &[(i - 1) / 3]);
        }
        // Depth of the final node is 2 <= log_3(13).
        let mut depth = 0;
        let mut node = g.final_goal();
        while !g.parents(node).is_empty() {
            node = g.parents(node)[0];
            depth += 1;
        }
        assert_eq!(depth, 2);
    }

    #[test]
    fn tree_invariants() {
        for (n, b) in [(13, 3), (40, 3), (7, 2), (25, 4)] {
            let g = gen_tree(n, b, 0).unwrap();
            assert_eq!(g.edge_count(), n - 1);
            let children = g.children_lists();
            assert!(children.iter().all(|c| c.len() <= b));
            // Every node reachable from the root.
            assert_eq!(g.descendants(0).len(), n - 1);
        }
        assert!(gen_tree(0, 3, 0).is_err());
        assert!(gen_tree(5, 1, 0).is_err());
    }

    #[test]
    fn semi_er_forced_probabilities() {
        let empty = gen_semi_er_with_p(5, 0.0, 7).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let full = gen_semi_er_with_p(5, 1.0, 7).unwrap();
        assert_eq!(full.edge_count(), 10);
        assert!(gen_semi_er(5, 0.0, 0).is_err());
        assert!(gen_semi_er(5, 1.0, 0).is_err());
    }

    #[test]
    fn semi_er_expected_edge_count() {
        // E[edges] = C(100,2) * 0.5 * ln(100)/99 ≈ 115.2.
        let mut total = 0usize;
        for seed in 0..1000 {
            total += gen_semi_er(100, 0.5, seed).unwrap().edge_count();
        }
        let mean = total as f64 / 1000.0;
        let expected = 4950.0 * 0.5 * (100f64).ln() / 99.0;
        assert!((mean - expected).abs() / expected < 0.05, "mean {mean} vs expected {expected}");
    }

    #[test]
    fn semi_er_upper_triangular_and_acyclic() {
        for seed in 0..50 {
            let g = gen_semi_er(30, 0.7, seed).unwrap();
            for (p, c) in g.edges() {
                assert!(p < c);
            }
            assert!(g.is_acyclic());
        }
    }

    #[test]
    fn assign_kinds_modes() {
        let g = mini_craft();
        let and = assign_kinds(&g, KindMode::AllAnd, 0);
        assert_eq!(and.kind(2), NodeKind::And);
        let or = assign_kinds(&g, KindMode::AllOr, 0);
        assert!((0..3).all(|i| or.kind(i) == NodeKind::Or));
        let big = gen_semi_er_with_p(1000, 0.0, 0).unwrap();
        let random = assign_kinds(&big, KindMode::Random, 42);
        let frac = (0..1000).filter(|&i| random.kind(i) == NodeKind::And).count() as f64 / 1000.0;
        assert!((0.45..=0.55).contains(&frac), "AND fraction {frac}");
    }

    #[test]
    fn hierarchy_mini_craft_levels() {
        let mut hs = HierarchicalStructure::new();
        hs.update_node(0, &[]).unwrap(); // S
        hs.update_node(1, &[]).unwrap(); // W
        hs.update(&[(0, 2), (1, 2)]).unwrap(); // P <- {S, W}
        assert_eq!(hs.level(0), Some(0));
        assert_eq!(hs.level(1), Some(0));
        assert_eq!(hs.level(2), Some(1));
        assert!(hs.is_consistent());
    }

    #[test]
    fn hierarchy_chain_levels() {
        // Chain W -> S -> P gives levels 0, 1, 2.
        let mut hs = HierarchicalStructure::new();
        hs.update_node(0, &[]).unwrap();
        hs.update(&[(0, 1)]).unwrap();
        hs.update(&[(1, 2)]).unwrap();
        assert_eq!(hs.level(0), Some(0));
        assert_eq!(hs.level(1), Some(1));
        assert_eq!(hs.level(2), Some(2));
    }

    #[test]
    fn hierarchy_empty_update_and_errors() {
        let mut hs = HierarchicalStructure::new();
        hs.update(&[]).unwrap();
        for node in 0..3 {
            hs.update_node(node, &[]).unwrap();
            assert_eq!(hs.level(node), Some(0));
        }
        // Parent without a level is rejected.
        let mut hs2 = HierarchicalStructure::new();
        assert!(hs2.update(&[(7, 1)]).is_err());
    }

    #[test]
    fn causal_order_examples() {
        let mut hs = HierarchicalStructure::new();
        hs.update_node(0, &[]).unwrap(); // S
        hs.update_node(1, &[]).unwrap(); // W
        hs.update(&[(0, 2), (1, 2)]).unwrap();
        assert_eq!(causal_order(&hs, 2).unwrap(), vec![0, 1, 2]);
        assert_eq!(causal_order(&hs, 0).unwrap(), vec![0]);

        let mut chain = HierarchicalStructure::new();
        chain.update_node(0, &[]).unwrap();
        chain.update(&[(0, 1)]).unwrap();
        chain.update(&[(1, 2)]).unwrap();
        assert_eq!(causal_order(&chain, 2).unwrap(), vec![0, 1, 2]);
        assert!(causal_order(&chain, 5).is_err());
    }

    #[test]
    fn discoverable_parents_undetectable_and_edge() {
        // X1 -> X2; {X1, X2} -> X3 with X3 AND: X2 = 1 forces X1 = 1, so no
        // valid assignment has X1 = 0 with X2 = 1 and X1's discoverability
        // pattern for the AND node never occurs. Only X2 is discoverable.
        let g = SubgoalGraph::new(
            vec![vec![], vec![0], vec![0, 1]],
            vec![NodeKind::Or, NodeKind::Or, NodeKind::And],
            2,
        )
        .unwrap();
        let dp = discoverable_parents(&g).unwrap();
        assert_eq!(dp[2], vec![1]);
        assert_eq!(dp[1], vec![0]);
    }

    #[test]
    fn discoverable_parents_simple_cases() {
        let isolated = gen_semi_er_with_p(3, 0.0, 0).unwrap();
        assert!(discoverable_parents(&isolated).unwrap().iter().all(Vec::is_empty));

        // OR node with two root parents: both discoverable.
        let g = mini_craft();
        let org = assign_kinds(&g, KindMode::AllOr, 0);
        assert_eq!(discoverable_parents(&org).unwrap()[2], vec![0, 1]);
        // AND variant of the same shape: both discoverable too (roots are free).
        assert_eq!(discoverable_parents(&g).unwrap()[2], vec![0, 1]);

        let big = gen_semi_er_with_p(21, 0.0, 0);
        assert!(big.is_ok());
        assert!(discoverable_parents(&big.unwrap()).is_err());
    }

    #[test]
    fn discoverable_subset_of_parents() {
        for seed in 0..40 {
            let g = assign_kinds(&gen_semi_er(8, 0.8, seed).unwrap(), KindMode::Random, seed);
            let dp = discoverable_parents(&g).unwrap();
            for i in 0..g.n() {
                assert!(dp[i].iter().all(|p| g.parents(i).contains(p)));
            }
        }
    }

    #[test]
    fn shd_examples() {
        let empty = BTreeSet::new();
        let ab: BTreeSet<_> = [(0, 1)].into_iter().collect();
        assert_eq!(shd(&ab, &ab), ShdReport { missing: 0, extra: 0, shd: 0 });
        assert_eq!(shd(&empty, &ab), ShdReport { missing: 1, extra: 0, shd: 1 });
        let truth: BTreeSet<_> = [(0, 1), (1, 2)].into_iter().collect();
        let est: BTreeSet<_> = [(0, 1), (0, 2)].into_iter().collect();
        assert_eq!(shd(&est, &truth), ShdReport { missing: 1, extra: 1, shd: 2 });
        // Symmetry: shd(A,B).missing == shd(B,A).extra.
        assert_eq!(shd(&est, &truth).missing, shd(&truth, &est).extra);
    }

    #[test]
    fn text_round_trip_byte_stable() {
        let g = assign_kinds(&gen_semi_er(9, 0.6, 3).unwrap(), KindMode::Random, 5);
        let text = g.to_text();
        let back = SubgoalGraph::from_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
        assert!(SubgoalGraph::from_text("garbage").is_err());
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert!(SubgoalGraph::new(vec![vec![0]], vec![NodeKind::Or], 0).is_err());
        assert!(SubgoalGraph::new(vec![vec![], vec![5]], vec![NodeKind::Or; 2], 0).is_err());
        assert!(SubgoalGraph::new(vec![vec![]], vec![NodeKind::Or], 3).is_err());
        // Cycles are rejected at construction.
        let cyclic =
            SubgoalGraph::new(vec![vec![1], vec![0]], vec![NodeKind::Or, NodeKind::Or], 1);
        assert!(matches!(cyclic, Err(Error::Cyclic(_))));
    }
}
