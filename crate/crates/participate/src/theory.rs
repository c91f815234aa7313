//! Closed-form trading dynamics for the two-agent dilemma.
//!
//! Instead of reinforcement learning, this module iterates the exact update
//! equations for two agents with cooperation probabilities `theta1`,
//! `theta2` who hold cross shares `m` (agent 2's stake in agent 1's reward)
//! and `n` (agent 1's stake in agent 2's). A profit-less broker quotes the
//! price at which the seller of a share block is exactly indifferent; under
//! the convention that indifferent agents trade, shares flow until the cap
//! of 0.5 and cooperation becomes the preferred policy.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::rng::run_rng;

/// Policy and share state of the two-agent system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryState {
    /// Probability that agent 1 cooperates.
    pub theta1: f64,
    /// Probability that agent 2 cooperates.
    pub theta2: f64,
    /// Share of agent 1's reward held by agent 2, in [0, 0.5].
    pub m: f64,
    /// Share of agent 2's reward held by agent 1, in [0, 0.5].
    pub n: f64,
}

impl TheoryState {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        TheoryState {
            theta1,
            theta2,
            m: 0.0,
            n: 0.0,
        }
    }
}

/// Update-rule constants.
#[derive(Debug, Clone, Copy)]
pub struct TheoryParams {
    /// Discount factor in (0, 1).
    pub gamma: f64,
    /// Policy step size.
    pub alpha: f64,
    /// Share block traded per episode; shares stay on this grid.
    pub share_step: f64,
}

impl Default for TheoryParams {
    fn default() -> Self {
        TheoryParams {
            gamma: 0.9,
            alpha: 0.1,
            share_step: 0.05,
        }
    }
}

/// Cross holdings never exceed half of a reward stream.
pub const SHARE_CAP: f64 = 0.5;

/// How a share trade is priced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharePricing {
    /// No transfer. The buyer of a losing reward stream always refuses, so
    /// no trade ever happens from the initial state.
    Free,
    /// The broker quote is transferred per unit of share traded. Both sides
    /// are exactly indifferent and the block trades every episode.
    BrokerPerUnit,
    /// Alternative reading of the post-trade willingness expression with the
    /// block transfer discounted inside the value bracket; leaves the seller
    /// strictly unwilling, so shares never move.
    BrokerInsideBracket,
}

/// Joint-action probabilities (CC, CD, DC, DD).
pub fn joint_probs(theta1: f64, theta2: f64) -> [f64; 4] {
    [
        theta1 * theta2,
        theta1 * (1.0 - theta2),
        (1.0 - theta1) * theta2,
        (1.0 - theta1) * (1.0 - theta2),
    ]
}

/// Per-joint-action rewards for both agents, after share redistribution.
pub fn reward_vectors(m: f64, n: f64) -> ([f64; 4], [f64; 4]) {
    (
        [
            -1.0 + m - n,
            -3.0 + 3.0 * m,
            -3.0 * n,
            -2.0 + 2.0 * m - 2.0 * n,
        ],
        [
            -1.0 - m + n,
            -3.0 * m,
            -3.0 + 3.0 * n,
            -2.0 - 2.0 * m + 2.0 * n,
        ],
    )
}

fn check_gamma(gamma: f64) -> Result<f64> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(1.0 / (1.0 - gamma))
    } else {
        Err(Error::invalid(format!("discount {gamma} not in (0, 1)")))
    }
}

/// Discounted expected reward of one agent (0 or 1) under fixed policies.
pub fn value(theta1: f64, theta2: f64, m: f64, n: f64, gamma: f64, agent: usize) -> Result<f64> {
    let horizon = check_gamma(gamma)?;
    let probs = joint_probs(theta1, theta2);
    let (r1, r2) = reward_vectors(m, n);
    let rewards = match agent {
        0 => r1,
        1 => r2,
        _ => return Err(Error::invalid(format!("no agent {agent}"))),
    };
    Ok(horizon * dot(&probs, &rewards))
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One gradient step on both cooperation probabilities, clipped to [0, 1].
///
/// The gradients collapse to `2n + m - 1` for agent 1 and `2m + n - 1` for
/// agent 2: cooperation starts paying once enough of the reward stream is
/// cross-held.
pub fn policy_update(state: &TheoryState, params: &TheoryParams) -> Result<TheoryState> {
    let horizon = check_gamma(params.gamma)?;
    let scale = params.alpha * horizon;
    Ok(TheoryState {
        theta1: (state.theta1 + scale * (2.0 * state.n + state.m - 1.0)).clamp(0.0, 1.0),
        theta2: (state.theta2 + scale * (2.0 * state.m + state.n - 1.0)).clamp(0.0, 1.0),
        ..*state
    })
}

/// Expected discounted loss the seller sheds by giving away one unit of its
/// own reward stream (always >= 0 in this game).
fn seller_marginal(theta_seller: f64, theta_buyer: f64, gamma: f64) -> f64 {
    let bracket = theta_seller * theta_buyer
        + 3.0 * theta_seller * (1.0 - theta_buyer)
        + 2.0 * (1.0 - theta_seller) * (1.0 - theta_buyer);
    bracket / (1.0 - gamma)
}

/// Broker quote for one unit of the seller's reward stream: the price at
/// which the seller is exactly indifferent to the trade. Never positive,
/// since only loss streams are for sale here.
pub fn broker_price(theta_seller: f64, theta_buyer: f64, gamma: f64) -> f64 {
    -seller_marginal(theta_seller, theta_buyer, gamma)
}

fn grid_ticks(x: f64, step: f64) -> u32 {
    (x / step).round() as u32
}

fn side_trades(
    theta_seller: f64,
    theta_buyer: f64,
    held: f64,
    params: &TheoryParams,
    pricing: SharePricing,
) -> bool {
    let cap_ticks = ((SHARE_CAP + 1e-12) / params.share_step).floor() as u32;
    if grid_ticks(held, params.share_step) >= cap_ticks {
        return false;
    }
    let marginal = seller_marginal(theta_seller, theta_buyer, params.gamma);
    let price = match pricing {
        SharePricing::Free => 0.0,
        _ => broker_price(theta_seller, theta_buyer, params.gamma),
    };
    let seller_willing = match pricing {
        SharePricing::BrokerInsideBracket => {
            (params.share_step * price) / (1.0 - params.gamma) + marginal + price
        }
        _ => marginal + price,
    };
    let buyer_willing = -marginal - price;
    seller_willing >= 0.0 && buyer_willing >= 0.0
}

/// Attempt one share-block trade on each side.
///
/// A side trades when both its seller and its buyer value the block at or
/// above zero including the price transfer (indifference counts as willing)
/// and the cap of 0.5 is not exceeded. Holdings stay exact multiples of the
/// share step.
pub fn share_update(
    state: &TheoryState,
    params: &TheoryParams,
    pricing: SharePricing,
) -> Result<TheoryState> {
    check_gamma(params.gamma)?;
    if params.share_step <= 0.0 {
        return Err(Error::invalid("share step must be positive"));
    }
    let step = params.share_step;
    let mut next = *state;
    // m: agent 1 sells a block of its own stream, agent 2 buys.
    if side_trades(state.theta1, state.theta2, state.m, params, pricing) {
        next.m = f64::from(grid_ticks(state.m, step) + 1) * step;
    }
    // n: mirror image.
    if side_trades(state.theta2, state.theta1, state.n, params, pricing) {
        next.n = f64::from(grid_ticks(state.n, step) + 1) * step;
    }
    Ok(next)
}

/// One recorded episode of one run.
#[derive(Debug, Clone, Copy)]
pub struct TheoryPoint {
    pub episode: u32,
    pub m: f64,
    pub n: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Broker quote for the m-side block this episode traded at.
    pub price_m: f64,
    /// Expected joint reward per step under the episode-end policies.
    pub joint_reward: f64,
}

/// Time series of one seeded run.
#[derive(Debug, Clone)]
pub struct TheoryRun {
    pub run: u32,
    pub points: Vec<TheoryPoint>,
}

/// Expected per-step joint reward; the share terms cancel in the sum.
pub fn expected_joint_reward(state: &TheoryState) -> f64 {
    let probs = joint_probs(state.theta1, state.theta2);
    let (r1, r2) = reward_vectors(state.m, state.n);
    let joint = [r1[0] + r2[0], r1[1] + r2[1], r1[2] + r2[2], r1[3] + r2[3]];
    dot(&probs, &joint)
}

/// One simulated run: starting cooperation probabilities drawn uniformly
/// from [0.2, 0.8] out of `rng`, then one share update (both sides) followed
/// by one policy update per episode.
pub fn simulate_run(
    episodes: u32,
    params: &TheoryParams,
    pricing: SharePricing,
    rng: &mut dyn RngCore,
) -> Result<Vec<TheoryPoint>> {
    check_gamma(params.gamma)?;
    let mut state = TheoryState::new(rng.gen_range(0.2..=0.8), rng.gen_range(0.2..=0.8));
    let mut points = Vec::with_capacity(episodes as usize);
    for episode in 0..episodes {
        let price_m = broker_price(state.theta1, state.theta2, params.gamma);
        state = share_update(&state, params, pricing)?;
        state = policy_update(&state, params)?;
        points.push(TheoryPoint {
            episode,
            m: state.m,
            n: state.n,
            theta1: state.theta1,
            theta2: state.theta2,
            price_m,
            joint_reward: expected_joint_reward(&state),
        });
    }
    Ok(points)
}

/// Iterate [`simulate_run`] over several independent seed streams.
pub fn simulate(
    runs: u32,
    episodes: u32,
    params: &TheoryParams,
    pricing: SharePricing,
    master_seed: u64,
) -> Result<Vec<TheoryRun>> {
    (0..runs)
        .map(|run| {
            let mut rng = run_rng(master_seed, u64::from(run));
            Ok(TheoryRun {
                run,
                points: simulate_run(episodes, params, pricing, &mut rng)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(actual: &[f64], expected: &[f64]) {
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{actual:?} != {expected:?}");
        }
    }

    #[test]
    fn joint_probs_examples() {
        assert_close(&joint_probs(1.0, 1.0), &[1.0, 0.0, 0.0, 0.0]);
        assert_close(&joint_probs(0.5, 0.5), &[0.25, 0.25, 0.25, 0.25]);
        let p = joint_probs(0.3, 0.8);
        assert_close(&p, &[0.24, 0.06, 0.56, 0.14]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reward_vectors_examples() {
        let (r1, r2) = reward_vectors(0.0, 0.0);
        assert_close(&r1, &[-1.0, -3.0, 0.0, -2.0]);
        assert_close(&r2, &[-1.0, 0.0, -3.0, -2.0]);
        let (r1, _) = reward_vectors(0.5, 0.5);
        assert_close(&r1, &[-1.0, -1.5, -1.5, -2.0]);
        let (r1, _) = reward_vectors(0.1, 0.2);
        assert_close(&r1, &[-1.1, -2.7, -0.6, -2.2]);
    }

    #[test]
    fn value_examples() {
        assert!((value(1.0, 1.0, 0.0, 0.0, 0.9, 0).unwrap() + 10.0).abs() < 1e-9);
        assert!((value(0.0, 0.0, 0.0, 0.0, 0.9, 0).unwrap() + 20.0).abs() < 1e-9);
        assert!(value(0.5, 0.5, 0.0, 0.0, 1.0, 0).is_err());
        assert!(value(0.5, 0.5, 0.0, 0.0, 0.9, 2).is_err());
    }

    #[test]
    fn joint_value_ignores_share_split() {
        let (t1, t2, gamma) = (0.37, 0.81, 0.95);
        let base = value(t1, t2, 0.0, 0.0, gamma, 0).unwrap() + value(t1, t2, 0.0, 0.0, gamma, 1).unwrap();
        for (m, n) in [(0.1, 0.4), (0.5, 0.5), (0.25, 0.0)] {
            let v = value(t1, t2, m, n, gamma, 0).unwrap() + value(t1, t2, m, n, gamma, 1).unwrap();
            assert!((v - base).abs() < 1e-9);
        }
    }

    #[test]
    fn policy_update_examples() {
        let params = TheoryParams::default();
        let state = TheoryState {
            theta1: 0.5,
            theta2: 0.5,
            m: 0.5,
            n: 0.5,
        };
        let next = policy_update(&state, &params).unwrap();
        assert!((next.theta2 - 1.0).abs() < 1e-12);

        let state = TheoryState::new(0.5, 0.5);
        let next = policy_update(&state, &params).unwrap();
        assert_eq!(next.theta2, 0.0);

        // 2m + n = 1 is the zero-gradient boundary for agent 2.
        let state = TheoryState {
            theta1: 0.7,
            theta2: 0.31,
            m: 0.5,
            n: 0.0,
        };
        let next = policy_update(&state, &params).unwrap();
        assert_eq!(next.theta2, 0.31);
    }

    #[test]
    fn broker_price_examples() {
        assert!((broker_price(0.0, 0.0, 0.9) + 20.0).abs() < 1e-9);
        assert!((broker_price(1.0, 1.0, 0.9) + 10.0).abs() < 1e-9);
        assert_eq!(broker_price(0.0, 1.0, 0.9), 0.0);
        assert_eq!(broker_price(0.0, 1.0, 0.42), 0.0);
    }

    #[test]
    fn free_shares_never_move_from_the_initial_state() {
        let params = TheoryParams::default();
        let state = TheoryState::new(0.5, 0.5);
        let next = share_update(&state, &params, SharePricing::Free).unwrap();
        assert_eq!(next.m, 0.0);
        assert_eq!(next.n, 0.0);
    }

    #[test]
    fn broker_priced_block_trades_and_caps() {
        let params = TheoryParams::default();
        let mut state = TheoryState::new(0.5, 0.5);
        let next = share_update(&state, &params, SharePricing::BrokerPerUnit).unwrap();
        assert!((next.m - 0.05).abs() < 1e-15);
        assert!((next.n - 0.05).abs() < 1e-15);

        state.m = 0.5;
        state.n = 0.5;
        let capped = share_update(&state, &params, SharePricing::BrokerPerUnit).unwrap();
        assert_eq!(capped.m, 0.5);
        assert_eq!(capped.n, 0.5);
    }

    #[test]
    fn inside_bracket_reading_blocks_the_seller() {
        let params = TheoryParams::default();
        let state = TheoryState::new(0.5, 0.5);
        let next = share_update(&state, &params, SharePricing::BrokerInsideBracket).unwrap();
        assert_eq!(next.m, 0.0);
        assert_eq!(next.n, 0.0);
    }

    #[test]
    fn simulation_reaches_the_cooperative_equilibrium() {
        let params = TheoryParams::default();
        let runs = simulate(20, 100, &params, SharePricing::BrokerPerUnit, 17).unwrap();
        assert_eq!(runs.len(), 20);
        for run in &runs {
            let last = run.points.last().unwrap();
            assert!((last.m - 0.5).abs() <= 0.01, "run {} m {}", run.run, last.m);
            assert!((last.n - 0.5).abs() <= 0.01);
            assert!(last.theta1 >= 0.99 && last.theta2 >= 0.99);
            assert!((last.joint_reward + 2.0).abs() <= 0.05);
            // Shares only ever ratchet upward.
            let mut prev = 0.0;
            for p in &run.points {
                assert!(p.m >= prev - 1e-12);
                prev = p.m;
            }
        }
    }
}
