//! Iterated prisoner's dilemma with reward participation.
//!
//! Five variants of the same 2x2 base game, differing in how (or whether)
//! rewards get redistributed: no participation, forced equal split, opt-in
//! sharing, and per-step share trading in 50% or 10% blocks. Each variant
//! exposes a discrete state encoding sized for tabular learners.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::shares::{equal_split, ShareAllocation, TradeDelta, TradeIntent, TradeOutcome};

/// Environment action in the base game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdAction {
    Cooperate,
    Defect,
}

impl PdAction {
    pub fn index(self) -> usize {
        match self {
            PdAction::Cooperate => 0,
            PdAction::Defect => 1,
        }
    }

    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            0 => Ok(PdAction::Cooperate),
            1 => Ok(PdAction::Defect),
            _ => Err(Error::invalid(format!("no environment action {index}"))),
        }
    }
}

/// Payoff row for one joint action: CC (-1,-1), CD (-3,0), DC (0,-3),
/// DD (-2,-2). Defection dominates the one-shot game.
pub fn pd_step(a1: PdAction, a2: PdAction) -> [f64; 2] {
    use PdAction::*;
    match (a1, a2) {
        (Cooperate, Cooperate) => [-1.0, -1.0],
        (Cooperate, Defect) => [-3.0, 0.0],
        (Defect, Cooperate) => [0.0, -3.0],
        (Defect, Defect) => [-2.0, -2.0],
    }
}

/// Participation variant of the iterated game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpdVariant {
    /// Plain IPD; everyone keeps their own reward.
    NoParticipation,
    /// Rewards are pooled and split evenly every step.
    EqualSplit,
    /// Each agent may offer to share; the pool splits only if both offer.
    ChooseShare,
    /// Per-step trading of 50% share blocks.
    Trade50,
    /// Per-step trading of 10% share blocks.
    Trade10,
}

impl IpdVariant {
    pub const ALL: [IpdVariant; 5] = [
        IpdVariant::NoParticipation,
        IpdVariant::EqualSplit,
        IpdVariant::ChooseShare,
        IpdVariant::Trade50,
        IpdVariant::Trade10,
    ];

    /// Number of distinct encoded states.
    pub fn state_count(self) -> usize {
        match self {
            IpdVariant::NoParticipation | IpdVariant::EqualSplit => 4,
            IpdVariant::ChooseShare => 8,
            IpdVariant::Trade50 => 36,
            IpdVariant::Trade10 => 132,
        }
    }

    /// Number of actions available to each agent.
    pub fn action_count(self) -> usize {
        match self {
            IpdVariant::NoParticipation | IpdVariant::EqualSplit => 2,
            IpdVariant::ChooseShare => 4,
            IpdVariant::Trade50 | IpdVariant::Trade10 => 6,
        }
    }

    /// Steps per episode. Trading variants get longer episodes so there is
    /// room to move shares before the payoffs accumulate.
    pub fn default_horizon(self) -> usize {
        match self {
            IpdVariant::Trade50 | IpdVariant::Trade10 => 40,
            _ => 5,
        }
    }

    pub fn trade_delta(self) -> Option<TradeDelta> {
        match self {
            IpdVariant::Trade50 => Some(TradeDelta::HALF),
            IpdVariant::Trade10 => Some(TradeDelta::TENTH),
            _ => None,
        }
    }

    /// Distinct own-share levels reachable on the variant's trade grid.
    fn own_share_levels(self) -> u64 {
        self.trade_delta()
            .map(|d| d.ticks_per_whole() + 1)
            .expect("only trading variants track share levels")
    }
}

/// One agent's view of the environment state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpdState {
    /// Last joint action, from the observing agent's perspective.
    Plain { my_last: PdAction, their_last: PdAction },
    /// Last joint action plus whether rewards were shared last step.
    Shared {
        shared: bool,
        my_last: PdAction,
        their_last: PdAction,
    },
    /// Last joint action, own-share level and last trade outcome.
    Trading {
        my_last: PdAction,
        their_last: PdAction,
        own_ticks: u64,
        outcome: TradeOutcome,
    },
}

impl IpdState {
    /// Canonical episode-start state: previous joint action defaults to
    /// (cooperate, cooperate), full own shares, no trade yet.
    pub fn initial(variant: IpdVariant) -> Self {
        use PdAction::Cooperate;
        match variant {
            IpdVariant::NoParticipation | IpdVariant::EqualSplit => IpdState::Plain {
                my_last: Cooperate,
                their_last: Cooperate,
            },
            IpdVariant::ChooseShare => IpdState::Shared {
                shared: false,
                my_last: Cooperate,
                their_last: Cooperate,
            },
            IpdVariant::Trade50 | IpdVariant::Trade10 => IpdState::Trading {
                my_last: Cooperate,
                their_last: Cooperate,
                own_ticks: variant.trade_delta().expect("trading variant").ticks_per_whole(),
                outcome: TradeOutcome::None,
            },
        }
    }
}

/// Encode a state as a mixed-radix index in `0..variant.state_count()`.
pub fn encode_state(variant: IpdVariant, state: &IpdState) -> Result<usize> {
    match (variant, state) {
        (
            IpdVariant::NoParticipation | IpdVariant::EqualSplit,
            IpdState::Plain { my_last, their_last },
        ) => Ok(my_last.index() * 2 + their_last.index()),
        (
            IpdVariant::ChooseShare,
            IpdState::Shared {
                shared,
                my_last,
                their_last,
            },
        ) => Ok(usize::from(*shared) * 4 + my_last.index() * 2 + their_last.index()),
        (
            IpdVariant::Trade50 | IpdVariant::Trade10,
            IpdState::Trading {
                my_last,
                their_last,
                own_ticks,
                outcome,
            },
        ) => {
            let levels = variant.own_share_levels();
            if *own_ticks >= levels {
                return Err(Error::invalid(format!(
                    "own-share level {own_ticks} out of range for {variant:?}"
                )));
            }
            let joint = my_last.index() * 2 + their_last.index();
            Ok((joint * levels as usize + *own_ticks as usize) * 3 + outcome.index())
        }
        _ => Err(Error::invalid(format!(
            "state {state:?} inconsistent with variant {variant:?}"
        ))),
    }
}

/// Inverse of [`encode_state`].
pub fn decode_state(variant: IpdVariant, index: usize) -> Result<IpdState> {
    if index >= variant.state_count() {
        return Err(Error::invalid(format!(
            "state index {index} out of range for {variant:?}"
        )));
    }
    let joint_actions = |joint: usize| -> (PdAction, PdAction) {
        (
            PdAction::from_index(joint / 2).expect("two actions"),
            PdAction::from_index(joint % 2).expect("two actions"),
        )
    };
    match variant {
        IpdVariant::NoParticipation | IpdVariant::EqualSplit => {
            let (my_last, their_last) = joint_actions(index);
            Ok(IpdState::Plain { my_last, their_last })
        }
        IpdVariant::ChooseShare => {
            let (my_last, their_last) = joint_actions(index % 4);
            Ok(IpdState::Shared {
                shared: index / 4 == 1,
                my_last,
                their_last,
            })
        }
        IpdVariant::Trade50 | IpdVariant::Trade10 => {
            let levels = variant.own_share_levels() as usize;
            let outcome = match index % 3 {
                0 => TradeOutcome::None,
                1 => TradeOutcome::OwnUp,
                _ => TradeOutcome::OwnDown,
            };
            let rest = index / 3;
            let (my_last, their_last) = joint_actions(rest / levels);
            Ok(IpdState::Trading {
                my_last,
                their_last,
                own_ticks: (rest % levels) as u64,
                outcome,
            })
        }
    }
}

/// A raw action index split into its variant-specific components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IpdMove {
    pub env: PdAction,
    /// Trading variants only; `Hold` elsewhere.
    pub trade: TradeIntent,
    /// Variant (iii) only; `false` elsewhere.
    pub share: bool,
}

/// Decompose an action index for the given variant.
pub fn decode_action(variant: IpdVariant, action: usize) -> Result<IpdMove> {
    if action >= variant.action_count() {
        return Err(Error::invalid(format!(
            "action {action} out of range for {variant:?}"
        )));
    }
    match variant {
        IpdVariant::NoParticipation | IpdVariant::EqualSplit => Ok(IpdMove {
            env: PdAction::from_index(action)?,
            trade: TradeIntent::Hold,
            share: false,
        }),
        IpdVariant::ChooseShare => Ok(IpdMove {
            env: PdAction::from_index(action / 2)?,
            trade: TradeIntent::Hold,
            share: action % 2 == 1,
        }),
        IpdVariant::Trade50 | IpdVariant::Trade10 => {
            let trade = match action % 3 {
                0 => TradeIntent::Hold,
                1 => TradeIntent::BuyOwn,
                _ => TradeIntent::BuyOther,
            };
            Ok(IpdMove {
                env: PdAction::from_index(action / 3)?,
                trade,
                share: false,
            })
        }
    }
}

/// Compose an action index from environment action and trade intent.
pub fn encode_action(variant: IpdVariant, mv: IpdMove) -> usize {
    match variant {
        IpdVariant::NoParticipation | IpdVariant::EqualSplit => mv.env.index(),
        IpdVariant::ChooseShare => mv.env.index() * 2 + usize::from(mv.share),
        IpdVariant::Trade50 | IpdVariant::Trade10 => {
            let trade = match mv.trade {
                TradeIntent::Hold => 0,
                TradeIntent::BuyOwn => 1,
                TradeIntent::BuyOther => 2,
            };
            mv.env.index() * 3 + trade
        }
    }
}

/// Anything that maps an encoded state to an action index.
pub trait IpdPolicy {
    fn choose(&mut self, state: usize, rng: &mut dyn RngCore) -> usize;
}

impl<F: FnMut(usize, &mut dyn RngCore) -> usize> IpdPolicy for F {
    fn choose(&mut self, state: usize, rng: &mut dyn RngCore) -> usize {
        self(state, rng)
    }
}

/// Everything that happened in one step, recorded per agent where views
/// differ.
#[derive(Debug, Clone)]
pub struct IpdStepRecord {
    /// Encoded state each agent acted from.
    pub states: [usize; 2],
    /// Raw action indices.
    pub actions: [usize; 2],
    pub env_rewards: [f64; 2],
    pub effective_rewards: [f64; 2],
    pub outcome: TradeOutcome,
    pub shared: bool,
    /// Own shares after the step's trade settled.
    pub own_shares: [f64; 2],
}

/// Full episode record.
#[derive(Debug, Clone)]
pub struct IpdEpisode {
    pub steps: Vec<IpdStepRecord>,
    /// Encoded state each agent would act from next; the bootstrap state for
    /// the final transition.
    pub final_states: [usize; 2],
    pub final_allocation: ShareAllocation,
}

/// Play one episode. The share allocation starts at identity every episode;
/// trades settle before the step's payoff is distributed.
pub fn run_ipd_episode(
    variant: IpdVariant,
    policies: [&mut dyn IpdPolicy; 2],
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<IpdEpisode> {
    let [policy1, policy2] = policies;
    let mut alloc = ShareAllocation::identity(2);
    let mut last = [PdAction::Cooperate, PdAction::Cooperate];
    let mut outcome = TradeOutcome::None;
    let mut shared = false;
    let mut steps = Vec::with_capacity(horizon);

    let view = |alloc: &ShareAllocation,
                last: [PdAction; 2],
                outcome: TradeOutcome,
                shared: bool,
                agent: usize|
     -> Result<usize> {
        let (mine, theirs) = (last[agent], last[1 - agent]);
        let state = match variant {
            IpdVariant::NoParticipation | IpdVariant::EqualSplit => IpdState::Plain {
                my_last: mine,
                their_last: theirs,
            },
            IpdVariant::ChooseShare => IpdState::Shared {
                shared,
                my_last: mine,
                their_last: theirs,
            },
            IpdVariant::Trade50 | IpdVariant::Trade10 => {
                let delta = variant.trade_delta().expect("trading variant");
                let own_ticks = alloc
                    .own_share_ticks(agent, delta)
                    .ok_or_else(|| Error::invalid("allocation left the trade grid"))?;
                IpdState::Trading {
                    my_last: mine,
                    their_last: theirs,
                    own_ticks,
                    outcome,
                }
            }
        };
        encode_state(variant, &state)
    };

    for _ in 0..horizon {
        let states = [
            view(&alloc, last, outcome, shared, 0)?,
            view(&alloc, last, outcome, shared, 1)?,
        ];
        let actions = [policy1.choose(states[0], rng), policy2.choose(states[1], rng)];
        let moves = [
            decode_action(variant, actions[0])?,
            decode_action(variant, actions[1])?,
        ];

        if let Some(delta) = variant.trade_delta() {
            let (next, o) = alloc.trade([moves[0].trade, moves[1].trade], delta)?;
            alloc = next;
            outcome = o;
        }
        shared = variant == IpdVariant::ChooseShare && moves[0].share && moves[1].share;

        let env_rewards = pd_step(moves[0].env, moves[1].env);
        let effective_rewards: [f64; 2] = match variant {
            IpdVariant::NoParticipation => env_rewards,
            IpdVariant::EqualSplit => equal_split(&env_rewards)?
                .try_into()
                .expect("two agents"),
            IpdVariant::ChooseShare => {
                if shared {
                    equal_split(&env_rewards)?.try_into().expect("two agents")
                } else {
                    env_rewards
                }
            }
            IpdVariant::Trade50 | IpdVariant::Trade10 => alloc
                .effective_rewards(&env_rewards)?
                .try_into()
                .expect("two agents"),
        };

        last = [moves[0].env, moves[1].env];
        steps.push(IpdStepRecord {
            states,
            actions,
            env_rewards,
            effective_rewards,
            outcome,
            shared,
            own_shares: [alloc.own_share(0), alloc.own_share(1)],
        });
    }

    let final_states = [
        view(&alloc, last, outcome, shared, 0)?,
        view(&alloc, last, outcome, shared, 1)?,
    ];
    Ok(IpdEpisode {
        steps,
        final_states,
        final_allocation: alloc,
    })
}
