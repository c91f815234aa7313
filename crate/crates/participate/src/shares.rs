//! Share allocations and reward redistribution.
//!
//! Agents may hold fractions ("shares") of each other's environmental reward
//! streams. An allocation is a column-stochastic matrix: entry `(i, j)` is
//! the fraction of agent `j`'s reward owned by agent `i`. All redistribution
//! mechanisms in this crate reduce to applying such a matrix to the vector of
//! environmental rewards, which makes total reward conservation structural.
//!
//! Allocations are stored as integer ticks over a common denominator, so
//! repeated trades in fixed fractions stay on an exact grid instead of
//! accumulating float error.

use crate::error::{Error, Result};

/// Per-agent environmental rewards for one step.
pub type RewardVector = Vec<f64>;

/// One agent's trade choice for a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeIntent {
    /// Keep holdings as they are.
    Hold,
    /// Buy back a block of one's own shares.
    BuyOwn,
    /// Buy a block of the other agent's shares.
    BuyOther,
}

/// What a joint trade attempt resolved to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeOutcome {
    /// Intents did not match or the trade was infeasible.
    None,
    /// Both own-share entries rose by one block.
    OwnUp,
    /// Both own-share entries fell by one block.
    OwnDown,
}

impl TradeOutcome {
    /// Stable index used by state encodings: none=0, own_up=1, own_down=2.
    pub fn index(self) -> usize {
        match self {
            TradeOutcome::None => 0,
            TradeOutcome::OwnUp => 1,
            TradeOutcome::OwnDown => 2,
        }
    }
}

/// Size of one tradable share block, as the fraction `1 / ticks_per_whole`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TradeDelta {
    ticks_per_whole: u64,
}

impl TradeDelta {
    /// 50% blocks.
    pub const HALF: TradeDelta = TradeDelta { ticks_per_whole: 2 };
    /// 10% blocks.
    pub const TENTH: TradeDelta = TradeDelta { ticks_per_whole: 10 };

    pub fn new(ticks_per_whole: u64) -> Result<Self> {
        if ticks_per_whole == 0 {
            return Err(Error::invalid("trade delta must subdivide the whole"));
        }
        Ok(TradeDelta { ticks_per_whole })
    }

    pub fn ticks_per_whole(self) -> u64 {
        self.ticks_per_whole
    }

    pub fn fraction(self) -> f64 {
        1.0 / self.ticks_per_whole as f64
    }
}

/// Column-stochastic ownership matrix over agent reward streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareAllocation {
    n: usize,
    denom: u64,
    /// Row-major ticks; `ticks[i * n + j] / denom` is the share of agent
    /// `j`'s reward held by agent `i`.
    ticks: Vec<u64>,
}

impl ShareAllocation {
    /// Every agent holds 100% of its own shares.
    pub fn identity(n: usize) -> Self {
        let mut ticks = vec![0; n * n];
        for i in 0..n {
            ticks[i * n + i] = 1;
        }
        ShareAllocation { n, denom: 1, ticks }
    }

    /// Every agent holds `1/n` of every agent's shares.
    pub fn uniform(n: usize) -> Self {
        ShareAllocation {
            n,
            denom: n as u64,
            ticks: vec![1; n * n],
        }
    }

    /// Build from explicit ticks; every column must sum to `denom`.
    pub fn from_ticks(denom: u64, rows: Vec<Vec<u64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || denom == 0 {
            return Err(Error::invalid("allocation must be non-empty"));
        }
        let mut ticks = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            ticks.extend_from_slice(row);
        }
        let alloc = ShareAllocation { n, denom, ticks };
        for j in 0..n {
            let sum: u64 = (0..n).map(|i| alloc.tick(i, j)).sum();
            if sum != denom {
                return Err(Error::invalid(format!(
                    "column {j} sums to {sum}/{denom}, not 1"
                )));
            }
        }
        Ok(alloc)
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    fn tick(&self, i: usize, j: usize) -> u64 {
        self.ticks[i * self.n + j]
    }

    fn tick_mut(&mut self, i: usize, j: usize) -> &mut u64 {
        &mut self.ticks[i * self.n + j]
    }

    /// Share of agent `j`'s reward held by agent `i`.
    pub fn fraction(&self, i: usize, j: usize) -> f64 {
        self.tick(i, j) as f64 / self.denom as f64
    }

    /// Share an agent holds in its own reward.
    pub fn own_share(&self, i: usize) -> f64 {
        self.fraction(i, i)
    }

    /// Own share expressed in blocks of `delta` (exact while trades stay on
    /// the grid).
    pub fn own_share_ticks(&self, i: usize, delta: TradeDelta) -> Option<u64> {
        let scale = delta.ticks_per_whole;
        let t = self.tick(i, i) * scale;
        if t.is_multiple_of(self.denom) {
            Some(t / self.denom)
        } else {
            None
        }
    }

    /// Redistribute environmental rewards through the allocation.
    ///
    /// Agent `i` receives `sum_j w[i][j] * r[j]`; the total is conserved.
    pub fn effective_rewards(&self, rewards: &[f64]) -> Result<RewardVector> {
        if rewards.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: rewards.len(),
            });
        }
        let denom = self.denom as f64;
        Ok((0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.tick(i, j) as f64 * rewards[j])
                    .sum::<f64>()
                    / denom
            })
            .collect())
    }

    /// Exact-denominator change; `new_denom` must be a multiple of the
    /// current one.
    fn rescale(&self, new_denom: u64) -> Self {
        debug_assert_eq!(new_denom % self.denom, 0);
        let k = new_denom / self.denom;
        ShareAllocation {
            n: self.n,
            denom: new_denom,
            ticks: self.ticks.iter().map(|t| t * k).collect(),
        }
    }

    /// Execute a two-agent share trade.
    ///
    /// A block of size `delta` moves only when both agents pick the same
    /// direction and both own-share entries can absorb the move; any other
    /// combination leaves the allocation untouched. Column sums are
    /// preserved and own shares stay on the `delta` grid.
    pub fn trade(
        &self,
        intents: [TradeIntent; 2],
        delta: TradeDelta,
    ) -> Result<(Self, TradeOutcome)> {
        if self.n != 2 {
            return Err(Error::invalid(format!(
                "per-step share trading is defined for 2 agents, got {}",
                self.n
            )));
        }
        let denom = lcm(self.denom, delta.ticks_per_whole);
        let dt = denom / delta.ticks_per_whole;
        let scaled = self.rescale(denom);
        let feasible_up = scaled.tick(0, 0) + dt <= denom && scaled.tick(1, 1) + dt <= denom;
        let feasible_down = scaled.tick(0, 0) >= dt && scaled.tick(1, 1) >= dt;
        match intents {
            [TradeIntent::BuyOwn, TradeIntent::BuyOwn] if feasible_up => {
                let mut next = scaled;
                *next.tick_mut(0, 0) += dt;
                *next.tick_mut(1, 0) -= dt;
                *next.tick_mut(1, 1) += dt;
                *next.tick_mut(0, 1) -= dt;
                Ok((next, TradeOutcome::OwnUp))
            }
            [TradeIntent::BuyOther, TradeIntent::BuyOther] if feasible_down => {
                let mut next = scaled;
                *next.tick_mut(0, 0) -= dt;
                *next.tick_mut(1, 0) += dt;
                *next.tick_mut(1, 1) -= dt;
                *next.tick_mut(0, 1) += dt;
                Ok((next, TradeOutcome::OwnDown))
            }
            _ => Ok((self.clone(), TradeOutcome::None)),
        }
    }
}

/// Split the pooled reward evenly over all agents.
///
/// Equivalent to applying the uniform allocation.
pub fn equal_split(rewards: &[f64]) -> Result<RewardVector> {
    if rewards.is_empty() {
        return Err(Error::invalid("cannot split an empty reward vector"));
    }
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    Ok(vec![mean; rewards.len()])
}

/// Resolve a pre-trade round of own-share declarations.
///
/// Each agent declares a level in `0..=5`, i.e. an own share of 0%, 20%,
/// ..., 100%. The maximum declared level binds for everyone; the remainder
/// of each agent's reward is split equally over the other agents.
pub fn pre_trade_resolve(choices: &[u8]) -> Result<ShareAllocation> {
    let n = choices.len();
    if n < 2 {
        return Err(Error::invalid("pre-trade needs at least two agents"));
    }
    if let Some(&c) = choices.iter().find(|&&c| c > 5) {
        return Err(Error::invalid(format!("pre-trade choice {c} not in 0..=5")));
    }
    let own = u64::from(*choices.iter().max().expect("non-empty"));
    let others = (n - 1) as u64;
    let denom = 5 * others;
    let mut rows = vec![vec![5 - own; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = own * others;
    }
    ShareAllocation::from_ticks(denom, rows)
}

/// Pool participating agents' rewards and split the pool evenly among them.
///
/// Non-participants keep their own reward untouched. No participants means
/// the identity transform.
pub fn common_pool_resolve(participants: &[bool], rewards: &[f64]) -> Result<RewardVector> {
    if participants.len() != rewards.len() {
        return Err(Error::DimensionMismatch {
            expected: participants.len(),
            actual: rewards.len(),
        });
    }
    let count = participants.iter().filter(|&&p| p).count();
    if count == 0 {
        return Ok(rewards.to_vec());
    }
    let pool: f64 = rewards
        .iter()
        .zip(participants)
        .filter(|(_, &p)| p)
        .map(|(r, _)| r)
        .sum();
    let mean = pool / count as f64;
    Ok(rewards
        .iter()
        .zip(participants)
        .map(|(&r, &p)| if p { mean } else { r })
        .collect())
}

/// The allocation matrix equivalent to [`common_pool_resolve`].
pub fn common_pool_allocation(participants: &[bool]) -> ShareAllocation {
    let n = participants.len();
    let count = participants.iter().filter(|&&p| p).count() as u64;
    let denom = count.max(1);
    let mut rows = vec![vec![0; n]; n];
    for j in 0..n {
        if participants[j] {
            for (i, row) in rows.iter_mut().enumerate() {
                if participants[i] {
                    row[j] = 1;
                }
            }
        } else {
            rows[j][j] = denom;
        }
    }
    ShareAllocation::from_ticks(denom, rows).expect("pool matrix is column-stochastic")
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}
