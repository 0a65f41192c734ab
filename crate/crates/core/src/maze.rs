//! One-dimensional maze tasks: partially observable (transient signal),
//! non-observable (hidden context), and both combined.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAZE_SIZE: usize = 15;
pub const DEFAULT_MAX_STEPS: usize = 100;

/// Reward for entering any cell that is not the active goal.
pub const STEP_REWARD: f64 = -1.0;
pub const GOAL_REWARD: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Po,
    No,
    Pono,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Po => "po",
            TaskKind::No => "no",
            TaskKind::Pono => "pono",
        })
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "po" => Ok(TaskKind::Po),
            "no" => Ok(TaskKind::No),
            "pono" => Ok(TaskKind::Pono),
            other => Err(Error::Config(format!("unknown task kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Cells `0` and `size - 1` are adjacent.
    #[default]
    Cycle,
    /// Bounded array; end cells have a single neighbour.
    Line,
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cycle" => Ok(Topology::Cycle),
            "line" => Ok(Topology::Line),
            other => Err(Error::Config(format!("unknown topology `{other}`"))),
        }
    }
}

/// Goal layout: `goals[context][signal]`. Tasks without signals carry a
/// single goal per context.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MazeTask {
    pub kind: TaskKind,
    pub size: usize,
    pub topology: Topology,
    pub signals: Vec<String>,
    pub goals: Vec<Vec<usize>>,
    /// Episodes between hidden context changes.
    pub switch_rate: usize,
    pub max_steps: usize,
}

impl MazeTask {
    pub fn new(
        kind: TaskKind,
        size: usize,
        signals: Vec<String>,
        goals: Vec<Vec<usize>>,
        switch_rate: usize,
    ) -> Result<Self> {
        let task = Self {
            kind,
            size,
            topology: Topology::Cycle,
            signals,
            goals,
            switch_rate,
            max_steps: DEFAULT_MAX_STEPS,
        };
        task.validate()?;
        Ok(task)
    }

    /// R→3, G→10, B→14 on 15 cells.
    pub fn po_default() -> Self {
        Self::new(
            TaskKind::Po,
            DEFAULT_MAZE_SIZE,
            names(&["R", "G", "B"]),
            vec![vec![3, 10, 14]],
            500,
        )
        .expect("valid preset")
    }

    /// One goal per context at 0, 4, 7, 10, 13.
    pub fn no_default() -> Self {
        Self::new(
            TaskKind::No,
            DEFAULT_MAZE_SIZE,
            Vec::new(),
            vec![vec![0], vec![4], vec![7], vec![10], vec![13]],
            500,
        )
        .expect("valid preset")
    }

    /// Context 0: R→2, G→5; context 1: R→8, G→13.
    pub fn pono_default() -> Self {
        Self::new(
            TaskKind::Pono,
            DEFAULT_MAZE_SIZE,
            names(&["R", "G"]),
            vec![vec![2, 5], vec![8, 13]],
            1000,
        )
        .expect("valid preset")
    }

    pub fn contexts(&self) -> usize {
        self.goals.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.size < 2 {
            return bad(format!("maze size must be at least 2, got {}", self.size));
        }
        if self.switch_rate == 0 {
            return bad("switch_rate must be at least 1".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if self.goals.is_empty() {
            return bad("at least one goal context is required".into());
        }
        let per_context = self.signals.len().max(1);
        for (c, row) in self.goals.iter().enumerate() {
            if row.len() != per_context {
                return bad(format!(
                    "context {c} lists {} goals, expected one per signal ({per_context})",
                    row.len()
                ));
            }
            if let Some(g) = row.iter().find(|&&g| g >= self.size) {
                return bad(format!("goal {g} outside maze of size {}", self.size));
            }
        }
        match self.kind {
            TaskKind::Po if self.contexts() != 1 || self.signals.is_empty() => {
                bad("PO tasks need one context and at least one signal".into())
            }
            TaskKind::No if !self.signals.is_empty() => bad("NO tasks carry no signals".into()),
            TaskKind::Pono if self.contexts() < 2 || self.signals.is_empty() => {
                bad("PONO tasks need at least two contexts and one signal".into())
            }
            _ => Ok(()),
        }
    }

    pub fn goal(&self, context: usize, signal: Option<usize>) -> Result<usize> {
        let undefined = || Error::UndefinedGoal {
            context,
            signal: signal.map(|s| self.signals.get(s).cloned().unwrap_or_else(|| s.to_string())),
        };
        let row = self.goals.get(context).ok_or_else(undefined)?;
        match (signal, self.signals.is_empty()) {
            (None, true) => Ok(row[0]),
            (Some(s), false) => row.get(s).copied().ok_or_else(undefined),
            _ => Err(undefined()),
        }
    }

    /// Hidden context active for `episode_index`.
    pub fn context_for(&self, episode_index: usize) -> usize {
        (episode_index / self.switch_rate) % self.contexts()
    }

    /// Neighbouring cells in fixed order: left then right.
    pub fn candidate_states(&self, position: usize) -> Vec<usize> {
        let n = self.size;
        match self.topology {
            Topology::Cycle => vec![(position + n - 1) % n, (position + 1) % n],
            Topology::Line => {
                let mut out = Vec::with_capacity(2);
                if position > 0 {
                    out.push(position - 1);
                }
                if position + 1 < n {
                    out.push(position + 1);
                }
                out
            }
        }
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        match self.topology {
            Topology::Cycle => {
                let n = self.size;
                ((a + n - b) % n).min((b + n - a) % n)
            }
            Topology::Line => a.abs_diff(b),
        }
    }

    /// Fewest moves from `start` to the goal of `(context, signal)`.
    pub fn optimal_steps(&self, start: usize, context: usize, signal: Option<usize>) -> Result<usize> {
        let g = self.goal(context, signal)?;
        Ok(self.distance(start, g))
    }

    /// Drops the agent at a uniform random cell and, when the task has
    /// signals, picks one uniformly. Consumes the generator in that order.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R, episode_index: usize) -> EpisodeState {
        let position = rng.random_range(0..self.size);
        let signal = (!self.signals.is_empty()).then(|| rng.random_range(0..self.signals.len()));
        let context = self.context_for(episode_index);
        EpisodeState {
            position,
            start: position,
            step_count: 0,
            signal,
            context,
            episode_index,
        }
    }

    pub fn step(&self, state: &mut EpisodeState, to: usize) -> Result<StepOutcome> {
        if !self.candidate_states(state.position).contains(&to) {
            return Err(Error::IllegalMove {
                from: state.position,
                to,
            });
        }
        state.position = to;
        state.step_count += 1;
        let at_goal = self.is_goal(state);
        Ok(StepOutcome {
            reward: if at_goal { GOAL_REWARD } else { STEP_REWARD },
            goal_token: at_goal,
            done: at_goal || state.step_count >= self.max_steps,
        })
    }

    pub fn is_goal(&self, state: &EpisodeState) -> bool {
        self.goal(state.context, state.signal)
            .is_ok_and(|g| g == state.position)
    }
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpisodeState {
    pub position: usize,
    pub start: usize,
    pub step_count: usize,
    /// Signal drawn for this episode; the agent only perceives it before its
    /// first move.
    pub signal: Option<usize>,
    pub context: usize,
    pub episode_index: usize,
}

impl EpisodeState {
    /// Signal visible to the agent right now.
    pub fn observed_signal(&self) -> Option<usize> {
        if self.step_count == 0 {
            self.signal
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub goal_token: bool,
    pub done: bool,
}

/// Breadth-first distance on the task's adjacency graph.
pub fn bfs_distance(task: &MazeTask, from: usize, to: usize) -> Option<usize> {
    let mut dist = vec![usize::MAX; task.size];
    let mut queue = VecDeque::from([from]);
    dist[from] = 0;
    while let Some(p) = queue.pop_front() {
        if p == to {
            return Some(dist[p]);
        }
        for q in task.candidate_states(p) {
            if dist[q] == usize::MAX {
                dist[q] = dist[p] + 1;
                queue.push_back(q);
            }
        }
    }
    None
}

/// Parses `"2,5;8,13"` into per-context goal rows.
pub fn parse_goals(s: &str) -> Result<Vec<Vec<usize>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|g| {
                    g.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad goal `{}` in `{s}`", g.trim())))
                })
                .collect()
        })
        .collect()
}

pub fn format_goals(goals: &[Vec<usize>]) -> String {
    goals
        .iter()
        .map(|row| row.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";")
}
