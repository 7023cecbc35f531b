//! Mini-craft gridworld: the agent moves on a small grid, picks up wood and
//! stone, and crafts a pickaxe. Subgoal achievement is sticky (an obtained
//! resource counts even after crafting consumes it).

use crate::graph::{NodeKind, SubgoalGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resource {
    Wood,
    Stone,
    Gem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Pick,
    Craft,
}

pub const ALL_ACTIONS: [Action; 6] =
    [Action::Up, Action::Down, Action::Left, Action::Right, Action::Pick, Action::Craft];

/// Default map with a distractor gem so that strategy comparisons are
/// non-vacuous: the gem subgoal is a root with no effect on the pickaxe.
pub const DEFAULT_MAP: &str = "A...W\n.....\n..G..\n.....\nS...W\n";

/// Three-subgoal map matching the plain mini-craft A-SCM (no gem).
pub const MINI_MAP: &str = "A..W\n....\n....\nS...\n";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridWorld {
    width: usize,
    height: usize,
    agent: (usize, usize),
    start: (usize, usize),
    cells: Vec<Option<Resource>>,
    start_cells: Vec<Option<Resource>>,
    wood: u32,
    stone: u32,
    gem: u32,
    pickaxe: u32,
    achieved: Vec<bool>,
    has_gem_cells: bool,
    steps: u64,
    probes: u64,
}

impl GridWorld {
    pub fn from_ascii(map: &str) -> Result<Self> {
        let rows: Vec<&str> = map.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::Parse("empty gridworld map".into()));
        }
        let height = rows.len();
        let width = rows[0].chars().count();
        let mut cells = vec![None; width * height];
        let mut agent = None;
        let mut has_gem = false;
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Parse("ragged gridworld map".into()));
            }
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '.' => {}
                    'W' => cells[r * width + c] = Some(Resource::Wood),
                    'S' => cells[r * width + c] = Some(Resource::Stone),
                    'G' => {
                        cells[r * width + c] = Some(Resource::Gem);
                        has_gem = true;
                    }
                    'A' => {
                        if agent.replace((r, c)).is_some() {
                            return Err(Error::Parse("multiple agent cells".into()));
                        }
                    }
                    other => return Err(Error::Parse(format!("unknown map glyph '{other}'"))),
                }
            }
        }
        let agent = agent.ok_or_else(|| Error::Parse("map has no agent cell 'A'".into()))?;
        let n_subgoals = if has_gem { 4 } else { 3 };
        Ok(GridWorld {
            width,
            height,
            agent,
            start: agent,
            start_cells: cells.clone(),
            cells,
            wood: 0,
            stone: 0,
            gem: 0,
            pickaxe: 0,
            achieved: vec![false; n_subgoals],
            has_gem_cells: has_gem,
            steps: 0,
            probes: 0,
        })
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        for r in 0..self.height {
            for c in 0..self.width {
                let ch = if (r, c) == self.agent {
                    'A'
                } else {
                    match self.cells[r * self.width + c] {
                        Some(Resource::Wood) => 'W',
                        Some(Resource::Stone) => 'S',
                        Some(Resource::Gem) => 'G',
                        None => '.',
                    }
                };
                s.push(ch);
            }
            s.push('\n');
        }
        s
    }

    /// Subgoal count: wood, stone, [gem], pickaxe (pickaxe always last/final).
    pub fn n_subgoals(&self) -> usize {
        self.achieved.len()
    }

    pub fn final_subgoal(&self) -> usize {
        self.n_subgoals() - 1
    }

    /// Ground-truth subgoal structure of this map: pickaxe is the AND child
    /// of wood and stone; gem (when present) is an isolated root.
    pub fn truth_graph(&self) -> SubgoalGraph {
        let n = self.n_subgoals();
        let mut parents = vec![Vec::new(); n];
        parents[n - 1] = vec![0, 1];
        let mut kinds = vec![NodeKind::Or; n];
        kinds[n - 1] = NodeKind::And;
        SubgoalGraph::new(parents, kinds, n - 1).unwrap()
    }

    pub fn agent(&self) -> (usize, usize) {
        self.agent
    }

    pub fn backpack(&self) -> (u32, u32, u32, u32) {
        (self.wood, self.stone, self.gem, self.pickaxe)
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Reset agent, cells, backpack and achievement flags; probes keep
    /// accumulating (they audit total environment traffic).
    pub fn reset(&mut self) {
        self.agent = self.start;
        self.cells = self.start_cells.clone();
        self.wood = 0;
        self.stone = 0;
        self.gem = 0;
        self.pickaxe = 0;
        self.achieved.iter_mut().for_each(|a| *a = false);
        self.steps = 0;
    }

    /// One primitive step; every call is one system probe. Invalid moves and
    /// unsatisfiable picks/crafts are no-ops. Returns true when the final
    /// subgoal (pickaxe) is achieved.
    pub fn step(&mut self, action: Action) -> bool {
        self.steps += 1;
        self.probes += 1;
        match action {
            Action::Up => self.agent.0 = self.agent.0.saturating_sub(1),
            Action::Down => self.agent.0 = (self.agent.0 + 1).min(self.height - 1),
            Action::Left => self.agent.1 = self.agent.1.saturating_sub(1),
            Action::Right => self.agent.1 = (self.agent.1 + 1).min(self.width - 1),
            Action::Pick => {
                let idx = self.agent.0 * self.width + self.agent.1;
                if let Some(res) = self.cells[idx].take() {
                    match res {
                        Resource::Wood => self.wood += 1,
                        Resource::Stone => self.stone += 1,
                        Resource::Gem => self.gem += 1,
                    }
                }
            }
            Action::Craft => {
                if self.wood >= 1 && self.stone >= 1 {
                    self.wood -= 1;
                    self.stone -= 1;
                    self.pickaxe += 1;
                }
            }
        }
        self.refresh_achievements();
        self.achieved[self.final_subgoal()]
    }

    fn refresh_achievements(&mut self) {
        // Sticky: once a count has reached 1 the subgoal stays achieved.
        if self.wood >= 1 {
            self.achieved[0] = true;
        }
        if self.stone >= 1 {
            self.achieved[1] = true;
        }
        if self.has_gem_cells && self.gem >= 1 {
            self.achieved[2] = true;
        }
        if self.pickaxe >= 1 {
            let f = self.final_subgoal();
            self.achieved[f] = true;
        }
    }

    pub fn subgoal_vector(&self) -> Vec<u8> {
        self.achieved.iter().map(|&a| a as u8).collect()
    }

    pub fn subgoal_achieved(&self, subgoal: usize) -> bool {
        self.achieved[subgoal]
    }

    /// Compact state key for tabular learners: agent cell plus a backpack
    /// signature (counts clamped to 0..3) plus remaining-resource bits.
    pub fn state_key(&self) -> u64 {
        let cell = (self.agent.0 * self.width + self.agent.1) as u64;
        let sig = (self.wood.min(3) as u64)
            | (self.stone.min(3) as u64) << 2
            | (self.gem.min(3) as u64) << 4
            | (self.pickaxe.min(3) as u64) << 6;
        let mut remaining = 0u64;
        let mut bit = 0;
        for (i, c) in self.start_cells.iter().enumerate() {
            if c.is_some() {
                if bit < 16 && self.cells[i].is_some() {
                    remaining |= 1 << bit;
                }
                bit += 1;
            }
        }
        cell | sig << 8 | remaining << 16
    }
}
