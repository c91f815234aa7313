//! The cleanup gridworld.
//!
//! Apples spawn on the orchard side and pay +1 to whoever walks onto them;
//! waste accumulates in the river and throttles the apple spawn rate down to
//! zero at the depletion threshold. An agent standing in the river can fire
//! a cleaning beam that clears all waste in its column from its row upward.
//! The dilemma: cleaning pays nothing directly, but without it the orchard
//! starves.
//!
//! Participation wrappers redistribute the per-step rewards: forced equal
//! split, an episode-wide allocation fixed by a pre-trade step, or an opt-in
//! common reward pool.

pub mod map;

use rand::{Rng, RngCore};

pub use map::{Cell, Grid, MapId, Pos};

use crate::error::{Error, Result};
use crate::shares::{common_pool_resolve, equal_split, pre_trade_resolve, ShareAllocation};

/// Observation channels: six cell kinds, self, other agents, trade phase.
pub const OBS_CHANNELS: usize = 9;

/// Environment actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CleanupAction {
    Left,
    Right,
    Up,
    Down,
    Noop,
    Clean,
}

impl CleanupAction {
    pub const COUNT: usize = 6;

    pub fn from_index(index: usize) -> Result<Self> {
        use CleanupAction::*;
        match index {
            0 => Ok(Left),
            1 => Ok(Right),
            2 => Ok(Up),
            3 => Ok(Down),
            4 => Ok(Noop),
            5 => Ok(Clean),
            _ => Err(Error::invalid(format!("no cleanup action {index}"))),
        }
    }
}

/// Tunable environment parameters.
#[derive(Debug, Clone)]
pub struct CleanupConfig {
    pub map: MapId,
    /// Environment steps per episode (the pre-trade step is extra).
    pub horizon: u32,
    /// Apple spawn probability per empty orchard cell at zero waste.
    pub apple_base_rate: f64,
    /// Probability per step that one clean river cell becomes waste.
    pub waste_spawn_prob: f64,
    /// Waste fraction of the river region at which apple spawning stops.
    pub depletion_threshold: f64,
    /// Agent start positions.
    pub spawns: Vec<Pos>,
}

impl CleanupConfig {
    pub fn for_map(map: MapId) -> Self {
        CleanupConfig {
            map,
            horizon: 50,
            apple_base_rate: 0.3,
            waste_spawn_prob: 0.75,
            depletion_threshold: 0.7,
            spawns: map.spawns(),
        }
    }

    pub fn agents(&self) -> usize {
        self.spawns.len()
    }

    pub fn observation_len(&self) -> usize {
        let grid = self.map.grid();
        OBS_CHANNELS * grid.width() * grid.height()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        for (name, p) in [
            ("apple_base_rate", self.apple_base_rate),
            ("waste_spawn_prob", self.waste_spawn_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} {p} not in [0, 1]")));
            }
        }
        if !(self.depletion_threshold > 0.0 && self.depletion_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "depletion_threshold {} not in (0, 1]",
                self.depletion_threshold
            )));
        }
        let grid = self.map.grid();
        if self.spawns.is_empty() {
            return Err(Error::invalid("need at least one agent"));
        }
        for (i, &spawn) in self.spawns.iter().enumerate() {
            if !grid.contains(spawn) || grid.get(spawn) == Cell::Wall {
                return Err(Error::invalid(format!("agent {i} spawn not on open floor")));
            }
            if self.spawns[..i].contains(&spawn) {
                return Err(Error::invalid(format!("agent {i} spawn collides")));
            }
        }
        Ok(())
    }
}

/// What one environment step produced.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// +1 per apple collected this step, per agent.
    pub rewards: Vec<f64>,
    pub done: bool,
}

/// Full environment state.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanupState {
    grid: Grid,
    positions: Vec<Pos>,
    step: u32,
    apples_collected: Vec<u32>,
    waste_cleared: Vec<u32>,
}

impl CleanupState {
    /// Fresh episode state from the configured layout.
    pub fn reset(config: &CleanupConfig) -> Result<CleanupState> {
        config.validate()?;
        Ok(CleanupState {
            grid: config.map.grid(),
            positions: config.spawns.clone(),
            step: 0,
            apples_collected: vec![0; config.agents()],
            waste_cleared: vec![0; config.agents()],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[cfg(test)]
    pub(crate) fn grid_mut(&mut self) -> &mut Grid {
        &mut self.grid
    }

    pub fn positions(&self) -> &[Pos] {
        &self.positions
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }

    /// Apples collected per agent since reset.
    pub fn apples_collected(&self) -> &[u32] {
        &self.apples_collected
    }

    /// Waste cells cleared per agent since reset.
    pub fn waste_cleared(&self) -> &[u32] {
        &self.waste_cleared
    }

    pub fn done(&self, config: &CleanupConfig) -> bool {
        self.step >= config.horizon
    }

    /// Waste cells as a fraction of the river region.
    pub fn waste_fraction(&self) -> f64 {
        let region = self.grid.count(Cell::is_river_region);
        if region == 0 {
            return 0.0;
        }
        self.grid.count(|c| c == Cell::Waste) as f64 / region as f64
    }

    fn occupied(&self, pos: Pos) -> bool {
        self.positions.contains(&pos)
    }

    /// Advance one step: agents act in index order (movement blocked by
    /// walls and occupied cells, first mover wins contested cells), then
    /// waste may spawn on one clean river cell, then apples spawn on empty,
    /// unoccupied orchard cells at the waste-throttled rate.
    pub fn step(
        &mut self,
        config: &CleanupConfig,
        actions: &[CleanupAction],
        rng: &mut dyn RngCore,
    ) -> Result<StepOutcome> {
        if actions.len() != self.positions.len() {
            return Err(Error::DimensionMismatch {
                expected: self.positions.len(),
                actual: actions.len(),
            });
        }
        if self.done(config) {
            return Err(Error::invalid("episode is over"));
        }

        let mut rewards = vec![0.0; self.positions.len()];
        for agent in 0..self.positions.len() {
            let pos = self.positions[agent];
            match actions[agent] {
                CleanupAction::Noop => {}
                CleanupAction::Clean => {
                    if self.grid.get(pos).is_river_region() {
                        let mut cleared = 0;
                        for row in 0..=pos.row {
                            let cell = Pos::new(row, pos.col);
                            if self.grid.get(cell) == Cell::Waste {
                                self.grid.set(cell, Cell::River);
                                cleared += 1;
                            }
                        }
                        self.waste_cleared[agent] += cleared;
                    }
                }
                direction => {
                    let Some(target) = step_towards(pos, direction, &self.grid) else {
                        continue;
                    };
                    if self.grid.get(target) == Cell::Wall || self.occupied(target) {
                        continue;
                    }
                    self.positions[agent] = target;
                    if self.grid.get(target) == Cell::Apple {
                        self.grid.set(target, Cell::Orchard);
                        rewards[agent] += 1.0;
                        self.apples_collected[agent] += 1;
                    }
                }
            }
        }

        if rng.gen::<f64>() < config.waste_spawn_prob {
            let clean: Vec<Pos> = self
                .grid
                .positions()
                .filter(|&p| self.grid.get(p) == Cell::River)
                .collect();
            if !clean.is_empty() {
                let pick = clean[rng.gen_range(0..clean.len())];
                self.grid.set(pick, Cell::Waste);
            }
        }

        let rate = config.apple_base_rate
            * (1.0 - self.waste_fraction() / config.depletion_threshold).max(0.0);
        if rate > 0.0 {
            let spawn_sites: Vec<Pos> = self
                .grid
                .positions()
                .filter(|&p| self.grid.get(p) == Cell::Orchard && !self.occupied(p))
                .collect();
            for site in spawn_sites {
                if rng.gen::<f64>() < rate {
                    self.grid.set(site, Cell::Apple);
                }
            }
        }

        self.step += 1;
        Ok(StepOutcome {
            rewards,
            done: self.done(config),
        })
    }

    /// Flattened one-hot grid observation for one agent: six mutually
    /// exclusive cell-kind planes, a self plane, an other-agents plane, and
    /// a trade-phase plane (all ones during the pre-trade decision step).
    pub fn observe(&self, agent: usize, trade_phase: bool) -> Vec<f64> {
        let plane = self.grid.width() * self.grid.height();
        let mut obs = vec![0.0; OBS_CHANNELS * plane];
        for pos in self.grid.positions() {
            let idx = pos.row * self.grid.width() + pos.col;
            obs[self.grid.get(pos).channel() * plane + idx] = 1.0;
        }
        for (i, &pos) in self.positions.iter().enumerate() {
            let idx = pos.row * self.grid.width() + pos.col;
            let channel = if i == agent { 6 } else { 7 };
            obs[channel * plane + idx] = 1.0;
        }
        if trade_phase {
            for v in &mut obs[8 * plane..9 * plane] {
                *v = 1.0;
            }
        }
        obs
    }
}

fn step_towards(pos: Pos, action: CleanupAction, grid: &Grid) -> Option<Pos> {
    let (row, col) = (pos.row as isize, pos.col as isize);
    let (row, col) = match action {
        CleanupAction::Left => (row, col - 1),
        CleanupAction::Right => (row, col + 1),
        CleanupAction::Up => (row - 1, col),
        CleanupAction::Down => (row + 1, col),
        _ => return None,
    };
    if row < 0 || col < 0 {
        return None;
    }
    let target = Pos::new(row as usize, col as usize);
    grid.contains(target).then_some(target)
}

/// How per-step rewards are redistributed across the episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticipationMode {
    /// Everyone keeps their own reward.
    NoParticipation,
    /// Rewards are pooled and split evenly every step.
    EqualSplit,
    /// An extra first step fixes an episode-wide allocation by the max rule
    /// over declared own-share levels; no rewards flow in that step.
    PreTrade,
    /// An extra first step lets each agent opt into a common pool (choices
    /// 0-2 stay out, 3-5 opt in); pooled rewards split evenly per step.
    CommonPool,
}

impl ParticipationMode {
    /// Whether episodes start with an extra decision step.
    pub fn has_trade_step(self) -> bool {
        matches!(self, ParticipationMode::PreTrade | ParticipationMode::CommonPool)
    }
}

/// Maps observations to action indices.
pub trait CleanupPolicy {
    fn choose(&mut self, obs: &[f64], rng: &mut dyn RngCore) -> usize;
}

impl<F: FnMut(&[f64], &mut dyn RngCore) -> usize> CleanupPolicy for F {
    fn choose(&mut self, obs: &[f64], rng: &mut dyn RngCore) -> usize {
        self(obs, rng)
    }
}

/// One agent-side transition streamed out of an episode.
pub struct CleanupTransition<'a> {
    pub agent: usize,
    pub obs: &'a [f64],
    pub action: usize,
    /// Post-participation reward.
    pub reward: f64,
    pub next_obs: &'a [f64],
    pub done: bool,
}

/// Per-episode aggregates.
#[derive(Debug, Clone)]
pub struct CleanupEpisode {
    pub env_rewards: Vec<f64>,
    pub effective_rewards: Vec<f64>,
    pub apples: Vec<u32>,
    pub waste_cleared: Vec<u32>,
    /// Trade-step choices, when the mode has a trade step.
    pub trade_choices: Option<Vec<usize>>,
    /// Episode allocation (pre-trade mode).
    pub allocation: Option<ShareAllocation>,
    /// Pool membership (common-pool mode).
    pub participants: Option<Vec<bool>>,
}

/// Play one episode, streaming every learning transition to `on_transition`.
///
/// Trades settle in the extra first step before any environment action;
/// that step is itself a learned decision with a phase-flagged observation
/// and zero reward.
pub fn run_cleanup_episode(
    config: &CleanupConfig,
    mode: ParticipationMode,
    policies: &mut [&mut dyn CleanupPolicy],
    rng: &mut dyn RngCore,
    mut on_transition: impl FnMut(&CleanupTransition),
) -> Result<CleanupEpisode> {
    let n = config.agents();
    if policies.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: policies.len(),
        });
    }
    let mut state = CleanupState::reset(config)?;

    let mut trade_choices = None;
    let mut allocation = None;
    let mut participants = None;
    let mut trade_step: Option<(Vec<Vec<f64>>, Vec<usize>)> = None;
    if mode.has_trade_step() {
        let obs: Vec<Vec<f64>> = (0..n).map(|i| state.observe(i, true)).collect();
        let choices: Vec<usize> = policies
            .iter_mut()
            .zip(&obs)
            .map(|(p, o)| p.choose(o, rng))
            .collect();
        if let Some(&bad) = choices.iter().find(|&&c| c >= CleanupAction::COUNT) {
            return Err(Error::invalid(format!("trade choice {bad} not in 0..=5")));
        }
        match mode {
            ParticipationMode::PreTrade => {
                let levels: Vec<u8> = choices.iter().map(|&c| c as u8).collect();
                allocation = Some(pre_trade_resolve(&levels)?);
            }
            ParticipationMode::CommonPool => {
                participants = Some(choices.iter().map(|&c| c >= 3).collect::<Vec<bool>>());
            }
            _ => unreachable!(),
        }
        trade_choices = Some(choices.clone());
        trade_step = Some((obs, choices));
    }

    let mut episode = CleanupEpisode {
        env_rewards: vec![0.0; n],
        effective_rewards: vec![0.0; n],
        apples: vec![0; n],
        waste_cleared: vec![0; n],
        trade_choices,
        allocation: allocation.clone(),
        participants: participants.clone(),
    };

    let mut obs: Vec<Vec<f64>> = (0..n).map(|i| state.observe(i, false)).collect();
    if let Some((trade_obs, choices)) = trade_step {
        for agent in 0..n {
            on_transition(&CleanupTransition {
                agent,
                obs: &trade_obs[agent],
                action: choices[agent],
                reward: 0.0,
                next_obs: &obs[agent],
                done: false,
            });
        }
    }

    while !state.done(config) {
        let actions_idx: Vec<usize> = policies
            .iter_mut()
            .zip(&obs)
            .map(|(p, o)| p.choose(o, rng))
            .collect();
        let actions: Vec<CleanupAction> = actions_idx
            .iter()
            .map(|&a| CleanupAction::from_index(a))
            .collect::<Result<_>>()?;
        let outcome = state.step(config, &actions, rng)?;

        let effective = match mode {
            ParticipationMode::NoParticipation => outcome.rewards.clone(),
            ParticipationMode::EqualSplit => equal_split(&outcome.rewards)?,
            ParticipationMode::PreTrade => allocation
                .as_ref()
                .expect("pre-trade resolved")
                .effective_rewards(&outcome.rewards)?,
            ParticipationMode::CommonPool => common_pool_resolve(
                participants.as_ref().expect("pool resolved"),
                &outcome.rewards,
            )?,
        };

        let next_obs: Vec<Vec<f64>> = (0..n).map(|i| state.observe(i, false)).collect();
        for agent in 0..n {
            episode.env_rewards[agent] += outcome.rewards[agent];
            episode.effective_rewards[agent] += effective[agent];
            on_transition(&CleanupTransition {
                agent,
                obs: &obs[agent],
                action: actions_idx[agent],
                reward: effective[agent],
                next_obs: &next_obs[agent],
                done: outcome.done,
            });
        }
        obs = next_obs;
    }

    episode.apples = state.apples_collected().to_vec();
    episode.waste_cleared = state.waste_cleared().to_vec();
    Ok(episode)
}
