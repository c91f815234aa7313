//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]`/`[FAIL]` line with the measured values (run with
//! `cargo test --test acceptance -- --nocapture` to see them all).
//!
//! Every threshold is pinned here, in code. Criteria 4 and 5 gate the final
//! share allocation of the trading variants; see the test bodies for the
//! measured behavior.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use participate::harness::{self, AgentTag, ExperimentConfig, ExperimentId, MetricsTable};
use participate::ipd::{decode_state, encode_state, IpdVariant};
use participate::learner::MlpPolicy;
use participate::shares::ShareAllocation;
use participate::theory::{simulate, SharePricing, TheoryParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn run_preset(
    id: ExperimentId,
    seeds: u32,
    episodes: u32,
    master_seed: u64,
) -> (MetricsTable, Duration) {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut config = ExperimentConfig::new(id, dir.path());
    config.seeds = seeds;
    config.episodes = episodes;
    config.master_seed = master_seed;
    config.workers = 2;
    let start = Instant::now();
    let output = harness::run(&config).expect("experiment runs");
    (output.metrics, start.elapsed())
}

fn tail_mean(series: &[f64], frac: f64) -> f64 {
    let n = ((series.len() as f64 * frac) as usize).max(1);
    let tail = &series[series.len() - n..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

fn verdict(name: &str, pass: bool, detail: String) -> bool {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

#[test]
fn criterion_1_ipd_no_participation_converges_to_mutual_defection() {
    let (table, elapsed) = run_preset(ExperimentId::IpdNone, 5, 10_000, 11);
    let mut ok_seeds = 0;
    let mut details = Vec::new();
    for seed in table.seeds() {
        let joint = tail_mean(&table.series(seed, AgentTag::Joint, "joint_reward"), 0.1);
        let defect1 = 1.0 - tail_mean(&table.series(seed, AgentTag::Agent(1), "coop_rate"), 0.1);
        let defect2 = 1.0 - tail_mean(&table.series(seed, AgentTag::Agent(2), "coop_rate"), 0.1);
        let ok = (-4.2..=-3.8).contains(&joint) && defect1 > 0.95 && defect2 > 0.95;
        ok_seeds += i32::from(ok);
        details.push(format!("seed {seed}: joint {joint:.2} defect {defect1:.3}/{defect2:.3}"));
    }
    let pass = ok_seeds >= 4 && elapsed < Duration::from_secs(60);
    assert!(
        verdict(
            "criterion 1 (ipd-i defects)",
            pass,
            format!("{ok_seeds}/5 seeds ok in {elapsed:.1?}; {}", details.join("; ")),
        ),
        "expected >= 4/5 seeds at joint in [-4.2,-3.8] with defection > 0.95 within 60s"
    );
}

#[test]
fn criterion_2_ipd_equal_split_converges_to_cooperation() {
    let (table, elapsed) = run_preset(ExperimentId::IpdEqual, 5, 50_000, 12);
    let mut ok_seeds = 0;
    let mut details = Vec::new();
    for seed in table.seeds() {
        let joint = tail_mean(&table.series(seed, AgentTag::Joint, "joint_reward"), 0.1);
        let coop1 = tail_mean(&table.series(seed, AgentTag::Agent(1), "coop_rate"), 0.1);
        let coop2 = tail_mean(&table.series(seed, AgentTag::Agent(2), "coop_rate"), 0.1);
        let ok = (-2.2..=-1.9).contains(&joint) && coop1 > 0.95 && coop2 > 0.95;
        ok_seeds += i32::from(ok);
        details.push(format!("seed {seed}: joint {joint:.2} coop {coop1:.3}/{coop2:.3}"));
    }
    let pass = ok_seeds >= 4 && elapsed < Duration::from_secs(60);
    assert!(
        verdict(
            "criterion 2 (ipd-ii cooperates)",
            pass,
            format!("{ok_seeds}/5 seeds ok in {elapsed:.1?}; {}", details.join("; ")),
        ),
        "expected >= 4/5 seeds at joint in [-2.2,-1.9] with cooperation > 0.95 within 60s"
    );
}

#[test]
fn criterion_3_ipd_opt_in_sharing_still_defects() {
    let (table, _) = run_preset(ExperimentId::IpdChoose, 5, 50_000, 13);
    let mut details = Vec::new();
    let mut all_ok = true;
    for seed in table.seeds() {
        let joint = tail_mean(&table.series(seed, AgentTag::Joint, "joint_reward"), 0.1);
        all_ok &= (-4.2..=-3.8).contains(&joint);
        details.push(format!("seed {seed}: joint {joint:.2}"));
    }
    assert!(
        verdict(
            "criterion 3 (ipd-iii defects without sharing)",
            all_ok,
            details.join("; "),
        ),
        "expected every seed's final joint reward in [-4.2,-3.8]"
    );
}

#[test]
fn criterion_4_ipd_trade50_reaches_cooperative_trading() {
    let (table, elapsed) = run_preset(ExperimentId::IpdTrade50, 10, 30_000, 14);
    let mut reward_ok = 0;
    let mut both_ok = 0;
    let mut details = Vec::new();
    for seed in table.seeds() {
        let joint = tail_mean(&table.series(seed, AgentTag::Joint, "joint_reward"), 0.1);
        let own = tail_mean(&table.series(seed, AgentTag::Agent(1), "own_share"), 0.1);
        let r_ok = (-2.3..=-1.8).contains(&joint);
        let s_ok = (0.4..=0.6).contains(&own);
        reward_ok += i32::from(r_ok);
        both_ok += i32::from(r_ok && s_ok);
        details.push(format!("seed {seed}: joint {joint:.2} own {own:.3}"));
    }
    let pass = both_ok >= 6 && elapsed < Duration::from_secs(600);
    assert!(
        verdict(
            "criterion 4 (ipd-iv cooperates at 50/50 cross-holding)",
            pass,
            format!(
                "reward gate {reward_ok}/10, reward+share gate {both_ok}/10 (need >= 6) in {elapsed:.1?}; {}",
                details.join("; ")
            ),
        ),
        "expected >= 6/10 seeds with joint in [-2.3,-1.8] and final own share in [0.4,0.6]; \
         the learned equilibrium trades all the way to a full swap of reward streams \
         (own share ~0, still cooperative), so the 50/50 share gate does not hold"
    );
}

#[test]
fn criterion_5_ipd_trade10_settles_at_partial_own_share() {
    let (table, _) = run_preset(ExperimentId::IpdTrade10, 5, 30_000, 15);
    // Converged: cooperative joint reward with sustained cooperation.
    let mut converged = Vec::new();
    let mut details = Vec::new();
    for seed in table.seeds() {
        let joint = tail_mean(&table.series(seed, AgentTag::Joint, "joint_reward"), 0.1);
        let coop = tail_mean(&table.series(seed, AgentTag::Agent(1), "coop_rate"), 0.1);
        let own = tail_mean(&table.series(seed, AgentTag::Agent(1), "own_share"), 0.1);
        let is_converged = (-2.5..=-1.8).contains(&joint) && coop >= 0.8;
        if is_converged {
            converged.push(own);
        }
        details.push(format!("seed {seed}: joint {joint:.2} coop {coop:.3} own {own:.3}"));
    }
    let pass = !converged.is_empty() && converged.iter().all(|own| (0.2..=0.6).contains(own));
    assert!(
        verdict(
            "criterion 5 (ipd-v own share settles in [0.2,0.6])",
            pass,
            format!("{} converged seeds; {}", converged.len(), details.join("; ")),
        ),
        "expected converged seeds to keep a mean own share in [0.2,0.6]; the learned \
         equilibrium keeps trading down to ~0.13 (deeper participation than the gate allows)"
    );
}

#[test]
fn criterion_6_analytic_dynamics_reach_the_cooperative_equilibrium() {
    let start = Instant::now();
    let runs = simulate(
        20,
        100,
        &TheoryParams::default(),
        SharePricing::BrokerPerUnit,
        16,
    )
    .expect("simulation runs");
    let elapsed = start.elapsed();
    let mut all_ok = true;
    let mut worst = String::new();
    for run in &runs {
        let last = run.points.last().expect("non-empty run");
        let ok = (last.m - 0.5).abs() <= 0.01
            && (last.n - 0.5).abs() <= 0.01
            && last.theta1 >= 0.99
            && last.theta2 >= 0.99
            && (last.joint_reward + 2.0).abs() <= 0.05;
        if !ok {
            all_ok = false;
            worst = format!(
                "run {}: m {:.3} n {:.3} theta {:.3}/{:.3} joint {:.3}",
                run.run, last.m, last.n, last.theta1, last.theta2, last.joint_reward
            );
        }
    }
    let pass = all_ok && elapsed < Duration::from_secs(5);
    assert!(
        verdict(
            "criterion 6 (analytic equilibrium)",
            pass,
            format!(
                "20 runs x 100 episodes in {elapsed:.1?}; all end at m=n=0.5, theta>=0.99, joint=-2{}",
                if worst.is_empty() { String::new() } else { format!("; first failure: {worst}") }
            ),
        ),
        "every run must end at m=n=0.5 +/- 0.01 with cooperation >= 0.99 and joint reward -2 +/- 0.05 in < 5s"
    );
}

/// Shared no-participation baseline for criteria 7 and 8.
fn cleanup_baseline() -> &'static (f64, Duration) {
    static BASELINE: OnceLock<(f64, Duration)> = OnceLock::new();
    BASELINE.get_or_init(|| {
        let (table, elapsed) = run_preset(ExperimentId::Cleanup2None, 3, 10_000, 17);
        let mut joints = Vec::new();
        for seed in table.seeds() {
            let series = table.series(seed, AgentTag::Joint, "joint_reward");
            let tail = &series[series.len() - 1000..];
            joints.push(tail.iter().sum::<f64>() / tail.len() as f64);
        }
        (joints.iter().sum::<f64>() / joints.len() as f64, elapsed)
    })
}

#[test]
fn criterion_7_cleanup_equal_split_triples_the_baseline_with_task_division() {
    let start = Instant::now();
    let &(baseline, baseline_elapsed) = cleanup_baseline();
    let (table, _) = run_preset(ExperimentId::Cleanup2Equal, 3, 10_000, 17);
    let mut joints = Vec::new();
    let mut shares = Vec::new();
    for seed in table.seeds() {
        let series = table.series(seed, AgentTag::Joint, "joint_reward");
        let tail = &series[series.len() - 1000..];
        joints.push(tail.iter().sum::<f64>() / tail.len() as f64);
        let w1: f64 = table.series(seed, AgentTag::Agent(1), "waste_cleared")[9000..]
            .iter()
            .sum();
        let w2: f64 = table.series(seed, AgentTag::Agent(2), "waste_cleared")[9000..]
            .iter()
            .sum();
        shares.push(w1.max(w2) / (w1 + w2).max(1e-9));
    }
    let equal = joints.iter().sum::<f64>() / joints.len() as f64;
    let division = shares.iter().all(|&s| s > 0.8);
    let elapsed = start.elapsed() + baseline_elapsed;
    let pass = equal >= 3.0 * baseline && division && elapsed < Duration::from_secs(1800);
    assert!(
        verdict(
            "criterion 7 (cleanup equal split)",
            pass,
            format!(
                "equal {equal:.2} vs baseline {baseline:.2} (need >= 3x), cleaner shares {:?}, total {elapsed:.0?}",
                shares.iter().map(|s| (s * 1000.0).round() / 1000.0).collect::<Vec<_>>()
            ),
        ),
        "equal-split joint reward must reach 3x the no-participation baseline with one \
         agent doing > 80% of the cleaning"
    );
}

#[test]
fn criterion_8_cleanup_pre_trade_doubles_the_baseline() {
    let &(baseline, _) = cleanup_baseline();
    let (table, _) = run_preset(ExperimentId::Cleanup2PreTrade, 3, 10_000, 17);
    let mut joints = Vec::new();
    for seed in table.seeds() {
        let series = table.series(seed, AgentTag::Joint, "joint_reward");
        let tail = &series[series.len() - 1000..];
        joints.push(tail.iter().sum::<f64>() / tail.len() as f64);
    }
    let pretrade = joints.iter().sum::<f64>() / joints.len() as f64;
    let pass = pretrade >= 2.0 * baseline;
    assert!(
        verdict(
            "criterion 8 (cleanup pre-trade)",
            pass,
            format!(
                "pretrade {pretrade:.2} vs baseline {baseline:.2} (need >= 2x); absolute level reported, not gated"
            ),
        ),
        "pre-trade joint reward must reach 2x the no-participation baseline"
    );
}

#[test]
fn criterion_9_oracles_and_properties() {
    let start = Instant::now();

    // Conservation of total reward under random allocations: 1e5 cases.
    let mut rng = ChaCha12Rng::seed_from_u64(900);
    for _ in 0..100_000 {
        let n = rng.gen_range(2..5usize);
        let denom = rng.gen_range(1..100u64);
        let mut rows = vec![vec![0u64; n]; n];
        #[allow(clippy::needless_range_loop)]
        for column in 0..n {
            let mut cuts: Vec<u64> = (0..n - 1).map(|_| rng.gen_range(0..=denom)).collect();
            cuts.sort_unstable();
            cuts.push(denom);
            let mut prev = 0;
            for (row, cut) in cuts.into_iter().enumerate() {
                rows[row][column] = cut - prev;
                prev = cut;
            }
        }
        let alloc = ShareAllocation::from_ticks(denom, rows).expect("column-stochastic");
        let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let effective = alloc.effective_rewards(&rewards).expect("same length");
        let env: f64 = rewards.iter().sum();
        let eff: f64 = effective.iter().sum();
        assert!(
            (env - eff).abs() <= 1e-12 * env.abs().max(1.0),
            "conservation violated: {env} vs {eff}"
        );
    }

    // State-encoding bijectivity, exhaustive over all four cardinalities.
    for variant in IpdVariant::ALL {
        let mut seen = vec![false; variant.state_count()];
        for (index, slot) in seen.iter_mut().enumerate() {
            let state = decode_state(variant, index).expect("valid index");
            assert_eq!(encode_state(variant, &state).expect("valid state"), index);
            assert!(!*slot);
            *slot = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    // MLP gradients against central finite differences, 100 seeds.
    for seed in 0..100u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let (input, hidden, actions) = (
            rng.gen_range(3..8usize),
            rng.gen_range(2..6usize),
            rng.gen_range(2..5usize),
        );
        let policy = MlpPolicy::init_uniform(input, hidden, actions, 0.5, &mut rng);
        let obs: Vec<f64> = (0..input).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let action = rng.gen_range(0..actions);
        let advantage = rng.gen_range(-2.0..2.0);
        let target = rng.gen_range(-2.0..2.0);
        let coef = rng.gen_range(0.1..10.0);
        let grad = policy
            .backward(&obs, action, advantage, target, coef)
            .expect("valid transition");
        let mut params = policy.params().to_vec();
        let h = 1e-6;
        for i in 0..params.len() {
            let orig = params[i];
            let objective = |params: &[f64]| {
                let p = MlpPolicy::from_params(input, hidden, actions, params.to_vec()).unwrap();
                let (probs, value) = p.forward(&obs).unwrap();
                advantage * probs[action].ln() - 0.5 * coef * (value - target) * (value - target)
            };
            params[i] = orig + h;
            let plus = objective(&params);
            params[i] = orig - h;
            let minus = objective(&params);
            params[i] = orig;
            let fd = (plus - minus) / (2.0 * h);
            let denom = grad[i].abs().max(fd.abs()).max(1e-6);
            assert!(
                (grad[i] - fd).abs() / denom < 1e-4,
                "seed {seed} param {i}: analytic {} vs fd {fd}",
                grad[i]
            );
        }
    }

    // Determinism: byte-identical metrics for repeated seeded runs, across
    // every learner family.
    for (id, seeds, episodes) in [
        (ExperimentId::IpdNone, 2, 200),
        (ExperimentId::Analytic, 2, 50),
        (ExperimentId::Cleanup2Equal, 1, 5),
    ] {
        let (a, _) = run_preset(id, seeds, episodes, 77);
        let (b, _) = run_preset(id, seeds, episodes, 77);
        assert_eq!(a.to_csv().into_bytes(), b.to_csv().into_bytes(), "{id} not reproducible");
    }

    let elapsed = start.elapsed();
    let pass = elapsed < Duration::from_secs(60);
    assert!(
        verdict(
            "criterion 9 (oracle and property suites)",
            pass,
            format!(
                "conservation 1e5 cases, bijectivity 4/8/36/132, gradients 100 seeds, determinism x3 in {elapsed:.1?}"
            ),
        ),
        "oracle suite must finish within 60s"
    );
}
