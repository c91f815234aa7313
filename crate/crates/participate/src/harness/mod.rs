//! Experiment orchestration: presets, seeded multi-run execution, metrics.
//!
//! A run executes `seeds` independent trainings (each on its own RNG
//! stream), merges their metric rows in seed order and writes everything
//! into one result directory:
//!
//! ```text
//! out/
//!   config.txt        resolved configuration, reloadable as overrides
//!   metrics.csv       long format: experiment,seed,episode,agent,metric,value
//!   map.txt           cleanup experiments: the playing field
//!   run0/agent1.snapshot ...
//! ```

pub mod config;
pub mod metrics;
pub mod plot;

use std::cell::RefCell;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

use rand::RngCore;

pub use config::{ExperimentConfig, ExperimentId, Params};
pub use metrics::{AgentTag, MetricRow, MetricsTable};

use crate::cleanup::{
    run_cleanup_episode, CleanupAction, CleanupConfig, CleanupPolicy, MapId, ParticipationMode,
};
use crate::error::{Error, Result};
use crate::ipd::{decode_action, run_ipd_episode, IpdVariant, PdAction};
use crate::learner::{
    ExplorationSchedule, MlpActorCritic, MlpPolicy, TabularActorCritic, Transition,
};
use crate::rng::run_rng;
use crate::snapshot::Snapshot;
use crate::theory::{simulate_run, TheoryParams};

/// One row of the preset table.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentInfo {
    pub id: ExperimentId,
    pub agents: usize,
    pub description: &'static str,
}

/// The preset table, in stable order.
pub fn list_experiments() -> Vec<ExperimentInfo> {
    ExperimentId::ALL
        .into_iter()
        .map(|id| ExperimentInfo {
            id,
            agents: id.cleanup_map().map_or(2, |m| m.agent_count()),
            description: id.description(),
        })
        .collect()
}

/// Everything `run` produced, with the merged metrics kept in memory.
pub struct RunOutput {
    pub dir: PathBuf,
    pub metrics: MetricsTable,
}

struct SeedResult {
    rows: Vec<MetricRow>,
    /// (path relative to the result directory, file content)
    snapshots: Vec<(String, String)>,
}

/// Execute all seeds of an experiment and write the result directory.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;

    let results = run_all_seeds(config)?;

    let mut table = MetricsTable::new(config.experiment.name());
    let mut snapshots = Vec::new();
    for result in results {
        table.rows.extend(result.rows);
        snapshots.extend(result.snapshots);
    }

    table.write_csv(&config.out_dir.join("metrics.csv"))?;
    let config_path = config.out_dir.join("config.txt");
    fs::write(&config_path, config.snapshot_text())
        .map_err(|e| Error::io(config_path.display().to_string(), e))?;
    if let Some(map) = config.experiment.cleanup_map() {
        let map_path = config.out_dir.join("map.txt");
        fs::write(&map_path, map.layout_text())
            .map_err(|e| Error::io(map_path.display().to_string(), e))?;
    }
    for (rel, text) in snapshots {
        let path = config.out_dir.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
        fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
    }

    Ok(RunOutput {
        dir: config.out_dir.clone(),
        metrics: table,
    })
}

/// Seeds are independent; execute up to `workers` of them concurrently and
/// return results in seed order regardless of scheduling.
fn run_all_seeds(config: &ExperimentConfig) -> Result<Vec<SeedResult>> {
    let seeds = config.seeds;
    let workers = config.workers.min(seeds as usize).max(1);
    if workers == 1 {
        return (0..seeds).map(|seed| run_seed(config, seed)).collect();
    }

    let next = AtomicU32::new(0);
    let slots: Mutex<Vec<Option<Result<SeedResult>>>> =
        Mutex::new((0..seeds).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let seed = next.fetch_add(1, Ordering::Relaxed);
                if seed >= seeds {
                    break;
                }
                let result = run_seed(config, seed);
                slots.lock().expect("result mutex")[seed as usize] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("result mutex")
        .into_iter()
        .map(|slot| slot.expect("every seed ran"))
        .collect()
}

fn run_seed(config: &ExperimentConfig, seed: u32) -> Result<SeedResult> {
    if let Some(variant) = config.experiment.ipd_variant() {
        ipd_seed(config, variant, seed)
    } else if let Some(map) = config.experiment.cleanup_map() {
        cleanup_seed(config, map, seed)
    } else {
        analytic_seed(config, seed)
    }
}

fn decay_episodes(config: &ExperimentConfig) -> usize {
    (f64::from(config.episodes) * config.params.eps_decay_frac).round() as usize
}

fn ipd_seed(config: &ExperimentConfig, variant: IpdVariant, seed: u32) -> Result<SeedResult> {
    let p = &config.params;
    let horizon = p
        .ipd_horizon
        .map_or(variant.default_horizon(), |h| h as usize);
    let mut rng = run_rng(config.master_seed, u64::from(seed));
    let schedule = ExplorationSchedule::new(p.eps_start, p.eps_end, decay_episodes(config));
    let mut learners = [
        TabularActorCritic::new(
            variant.state_count(),
            variant.action_count(),
            p.actor_lr,
            p.critic_lr,
            p.gamma,
        ),
        TabularActorCritic::new(
            variant.state_count(),
            variant.action_count(),
            p.actor_lr,
            p.critic_lr,
            p.gamma,
        ),
    ];

    let trading = variant.trade_delta().is_some();
    let mut rows = Vec::new();
    for episode in 0..config.episodes {
        let eps = schedule.epsilon(episode as usize);
        let record = {
            let (first, rest) = learners.split_at(1);
            let mut p0 = |s: usize, rng: &mut dyn RngCore| first[0].select(s, eps, rng);
            let mut p1 = |s: usize, rng: &mut dyn RngCore| rest[0].select(s, eps, rng);
            run_ipd_episode(variant, [&mut p0, &mut p1], horizon, &mut rng)?
        };

        for (agent, learner) in learners.iter_mut().enumerate() {
            for (t, step) in record.steps.iter().enumerate() {
                let done = t + 1 == record.steps.len();
                let next_state = if done {
                    record.final_states[agent]
                } else {
                    record.steps[t + 1].states[agent]
                };
                learner.update(&Transition {
                    state: step.states[agent],
                    action: step.actions[agent],
                    reward: step.effective_rewards[agent],
                    next_state,
                    done,
                });
            }
        }

        let steps = record.steps.len() as f64;
        let joint = record
            .steps
            .iter()
            .map(|s| s.effective_rewards.iter().sum::<f64>())
            .sum::<f64>()
            / steps;
        rows.push(MetricRow {
            seed,
            episode,
            agent: AgentTag::Joint,
            metric: "joint_reward",
            value: joint,
        });
        for agent in 0..2 {
            let tag = AgentTag::Agent(agent as u8 + 1);
            let coop = record
                .steps
                .iter()
                .filter(|s| {
                    decode_action(variant, s.actions[agent])
                        .map(|m| m.env == PdAction::Cooperate)
                        .unwrap_or(false)
                })
                .count() as f64
                / steps;
            rows.push(MetricRow {
                seed,
                episode,
                agent: tag,
                metric: "coop_rate",
                value: coop,
            });
            let effective = record
                .steps
                .iter()
                .map(|s| s.effective_rewards[agent])
                .sum::<f64>()
                / steps;
            rows.push(MetricRow {
                seed,
                episode,
                agent: tag,
                metric: "effective_reward",
                value: effective,
            });
            if trading {
                let own = record
                    .steps
                    .iter()
                    .map(|s| s.own_shares[agent])
                    .sum::<f64>()
                    / steps;
                rows.push(MetricRow {
                    seed,
                    episode,
                    agent: tag,
                    metric: "own_share",
                    value: own,
                });
            }
            if variant == IpdVariant::ChooseShare {
                let share_rate = record
                    .steps
                    .iter()
                    .filter(|s| {
                        decode_action(variant, s.actions[agent])
                            .map(|m| m.share)
                            .unwrap_or(false)
                    })
                    .count() as f64
                    / steps;
                rows.push(MetricRow {
                    seed,
                    episode,
                    agent: tag,
                    metric: "share_rate",
                    value: share_rate,
                });
            }
        }
    }

    let snapshots = learners
        .iter()
        .enumerate()
        .map(|(i, l)| {
            (
                format!("run{seed}/agent{}.snapshot", i + 1),
                Snapshot::of_tabular(l).to_text(),
            )
        })
        .collect();
    Ok(SeedResult { rows, snapshots })
}

fn cleanup_mode(id: ExperimentId) -> ParticipationMode {
    match id {
        ExperimentId::Cleanup2None | ExperimentId::Cleanup3None => {
            ParticipationMode::NoParticipation
        }
        ExperimentId::Cleanup2Equal | ExperimentId::Cleanup3Equal => ParticipationMode::EqualSplit,
        ExperimentId::Cleanup2PreTrade | ExperimentId::Cleanup3PreTrade => {
            ParticipationMode::PreTrade
        }
        ExperimentId::Cleanup3Pool => ParticipationMode::CommonPool,
        _ => unreachable!("not a cleanup experiment"),
    }
}

fn cleanup_seed(config: &ExperimentConfig, map: MapId, seed: u32) -> Result<SeedResult> {
    let p = &config.params;
    let mode = cleanup_mode(config.experiment);
    let mut env_cfg = CleanupConfig::for_map(map);
    env_cfg.horizon = p.cleanup_horizon;
    env_cfg.apple_base_rate = p.apple_base_rate;
    env_cfg.waste_spawn_prob = p.waste_spawn_prob;
    env_cfg.depletion_threshold = p.depletion_threshold;
    env_cfg.validate()?;

    let n = env_cfg.agents();
    let obs_len = env_cfg.observation_len();
    let mut rng = run_rng(config.master_seed, u64::from(seed));
    let learners: Vec<RefCell<MlpActorCritic>> = (0..n)
        .map(|_| {
            RefCell::new(MlpActorCritic::new(
                MlpPolicy::init_uniform(
                    obs_len,
                    p.mlp_hidden,
                    CleanupAction::COUNT,
                    p.init_scale,
                    &mut rng,
                ),
                p.actor_lr,
                p.critic_lr,
                p.gamma,
            ))
        })
        .collect();
    let schedule = ExplorationSchedule::new(p.eps_start, p.eps_end, decay_episodes(config));

    let mut rows = Vec::new();
    for episode in 0..config.episodes {
        let eps = schedule.epsilon(episode as usize);
        let summary = {
            let mut policies: Vec<_> = learners
                .iter()
                .map(|cell| {
                    move |obs: &[f64], rng: &mut dyn RngCore| {
                        cell.borrow()
                            .select(obs, eps, rng)
                            .expect("observation matches the network input")
                    }
                })
                .collect();
            let mut policy_refs: Vec<&mut (dyn CleanupPolicy + '_)> = policies
                .iter_mut()
                .map(|c| c as &mut (dyn CleanupPolicy + '_))
                .collect();
            run_cleanup_episode(&env_cfg, mode, &mut policy_refs, &mut rng, |t| {
                learners[t.agent]
                    .borrow_mut()
                    .update(t.obs, t.action, t.reward, t.next_obs, t.done)
                    .expect("transition matches the network");
            })?
        };

        rows.push(MetricRow {
            seed,
            episode,
            agent: AgentTag::Joint,
            metric: "joint_reward",
            value: summary.env_rewards.iter().sum(),
        });
        for agent in 0..n {
            let tag = AgentTag::Agent(agent as u8 + 1);
            rows.push(MetricRow {
                seed,
                episode,
                agent: tag,
                metric: "apples",
                value: f64::from(summary.apples[agent]),
            });
            rows.push(MetricRow {
                seed,
                episode,
                agent: tag,
                metric: "waste_cleared",
                value: f64::from(summary.waste_cleared[agent]),
            });
            rows.push(MetricRow {
                seed,
                episode,
                agent: tag,
                metric: "effective_reward",
                value: summary.effective_rewards[agent],
            });
            if let Some(alloc) = &summary.allocation {
                rows.push(MetricRow {
                    seed,
                    episode,
                    agent: tag,
                    metric: "own_share",
                    value: alloc.own_share(agent),
                });
            }
            if let Some(participants) = &summary.participants {
                rows.push(MetricRow {
                    seed,
                    episode,
                    agent: tag,
                    metric: "participation",
                    value: f64::from(u8::from(participants[agent])),
                });
            }
        }
    }

    let snapshots = learners
        .iter()
        .enumerate()
        .map(|(i, l)| {
            (
                format!("run{seed}/agent{}.snapshot", i + 1),
                Snapshot::of_mlp(&l.borrow().policy).to_text(),
            )
        })
        .collect();
    Ok(SeedResult { rows, snapshots })
}

fn analytic_seed(config: &ExperimentConfig, seed: u32) -> Result<SeedResult> {
    let p = &config.params;
    let params = TheoryParams {
        gamma: p.theory_gamma,
        alpha: p.theory_alpha,
        share_step: p.theory_share_step,
    };
    let mut rng = run_rng(config.master_seed, u64::from(seed));
    let points = simulate_run(config.episodes, &params, p.theory_pricing, &mut rng)?;
    let mut rows = Vec::with_capacity(points.len() * 6);
    for point in points {
        let episode = point.episode;
        for (agent, metric, value) in [
            (AgentTag::Joint, "m", point.m),
            (AgentTag::Joint, "n", point.n),
            (AgentTag::Agent(1), "theta", point.theta1),
            (AgentTag::Agent(2), "theta", point.theta2),
            (AgentTag::Joint, "price_m", point.price_m),
            (AgentTag::Joint, "joint_reward", point.joint_reward),
        ] {
            rows.push(MetricRow {
                seed,
                episode,
                agent,
                metric,
                value,
            });
        }
    }
    Ok(SeedResult {
        rows,
        snapshots: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(experiment: ExperimentId, dir: &std::path::Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(experiment, dir);
        config.seeds = 2;
        config.episodes = 20;
        config.workers = 2;
        config
    }

    #[test]
    fn preset_table_is_stable() {
        let table = list_experiments();
        assert_eq!(table.len(), 13);
        assert_eq!(table[0].id.name(), "ipd-i");
        assert_eq!(table.last().unwrap().id.name(), "analytic");
        assert!(table.iter().any(|e| e.agents == 3));
    }

    #[test]
    fn ipd_run_writes_the_result_directory() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(ExperimentId::IpdNone, dir.path());
        let output = run(&config).unwrap();
        assert!(dir.path().join("metrics.csv").is_file());
        assert!(dir.path().join("config.txt").is_file());
        assert!(dir.path().join("run0/agent1.snapshot").is_file());
        assert!(dir.path().join("run1/agent2.snapshot").is_file());
        // 20 episodes x 2 seeds x (1 joint + 2 agents x 2 metrics).
        assert_eq!(output.metrics.rows.len(), 20 * 2 * 5);
        let written = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(written, output.metrics.to_csv());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut config_a = tiny_config(ExperimentId::IpdTrade50, dir_a.path());
        config_a.master_seed = 7;
        let mut config_b = tiny_config(ExperimentId::IpdTrade50, dir_b.path());
        config_b.master_seed = 7;
        // Different worker counts must not change the bytes.
        config_b.workers = 1;
        run(&config_a).unwrap();
        run(&config_b).unwrap();
        let a = std::fs::read(dir_a.path().join("metrics.csv")).unwrap();
        let b = std::fs::read(dir_b.path().join("metrics.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cleanup_run_emits_env_metrics_and_map() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(ExperimentId::Cleanup2PreTrade, dir.path());
        config.seeds = 1;
        config.episodes = 3;
        config.params.cleanup_horizon = 10;
        config.params.mlp_hidden = 8;
        let output = run(&config).unwrap();
        assert!(dir.path().join("map.txt").is_file());
        let metrics: Vec<&str> = output.metrics.rows.iter().map(|r| r.metric).collect();
        for expected in ["joint_reward", "apples", "waste_cleared", "own_share"] {
            assert!(metrics.contains(&expected), "missing {expected}");
        }
        // Pre-trade own shares land on the declared 20% grid.
        for row in output.metrics.rows.iter().filter(|r| r.metric == "own_share") {
            let ticks = row.value / 0.2;
            assert!((ticks - ticks.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn analytic_run_saturates_the_share_cap() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::new(ExperimentId::Analytic, dir.path());
        config.seeds = 3;
        let output = run(&config).unwrap();
        for seed in 0..3 {
            let m = output.metrics.series(seed, AgentTag::Joint, "m");
            assert_eq!(m.len(), 100);
            assert!(m.windows(2).all(|w| w[1] >= w[0] - 1e-12), "m not monotone");
            assert!((m.last().unwrap() - 0.5).abs() <= 0.01);
        }
    }

    #[test]
    fn unwritable_output_directory_fails() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("occupied");
        std::fs::write(&blocker, "file, not a directory").unwrap();
        let config = tiny_config(ExperimentId::IpdNone, &blocker);
        assert!(matches!(run(&config), Err(Error::Io { .. })));
    }
}
