//! Self-play training: the Planner and the Executor take turns learning while the
//! other acts with frozen parameters.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{Categorical, NetInput, PolicyNet, Role};
use super::ppo::{ppo_update, Adam, LossStats, LossWeights, PpoSettings, Sample};
use crate::bench::{generate_dataset, ArrivalDist, DatasetSpec};
use crate::domain::{Task, WorldConfig};
use crate::env::{Decision, DecisionPolicy, StepOutcome, World};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Alternation cycles.
    pub cycles: usize,
    pub episodes_per_cycle: usize,
    pub learning_rate: f64,
    pub clip_eps: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Multiplies step rewards before they reach the learner.
    pub reward_scale: f64,
    pub max_grad_norm: f64,
    /// Number of distinct task lists cycled through during training.
    pub dataset_pool: usize,
    pub train_dist: String,
    pub train_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            cycles: 24,
            episodes_per_cycle: 40,
            learning_rate: 3e-4,
            clip_eps: 0.2,
            epochs: 4,
            minibatch: 32,
            entropy_coef: 0.001,
            value_coef: 0.0002,
            gamma: 0.99,
            gae_lambda: 0.95,
            reward_scale: 0.01,
            max_grad_norm: 0.5,
            dataset_pool: 20,
            train_dist: "gaussian".into(),
            train_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.cycles == 0 || self.episodes_per_cycle == 0 {
            return bad("cycles and episodes_per_cycle must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad("learning_rate must be positive and clip_eps in (0, 1)");
        }
        if self.epochs == 0 || self.minibatch == 0 || self.dataset_pool == 0 {
            return bad("epochs, minibatch and dataset_pool must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]");
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 || self.max_grad_norm < 0.0 {
            return bad("loss coefficients must be non-negative");
        }
        if !(self.reward_scale > 0.0) {
            return bad("reward_scale must be positive");
        }
        ArrivalDist::parse(&self.train_dist).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn ppo(&self) -> PpoSettings {
        PpoSettings {
            weights: LossWeights {
                clip_eps: self.clip_eps,
                entropy_coef: self.entropy_coef,
                value_coef: self.value_coef,
            },
            epochs: self.epochs,
            minibatch: self.minibatch,
            gamma: self.gamma,
            gae_lambda: self.gae_lambda,
            max_grad_norm: self.max_grad_norm,
        }
    }

    /// Even cycles train the Planner.
    pub fn active_role(cycle: usize) -> Role {
        if cycle.is_multiple_of(2) {
            Role::Planner
        } else {
            Role::Executor
        }
    }
}

/// The bi-level agent: the Planner picks a look-ahead slot, then the Executor picks a robot.
pub struct MrtAgent<'a> {
    planner: &'a PolicyNet,
    executor: &'a PolicyNet,
    rng: ChaCha8Rng,
    greedy: bool,
    record: Option<Role>,
    reward_scale: f64,
    samples: Vec<Sample>,
}

impl<'a> MrtAgent<'a> {
    pub fn new(planner: &'a PolicyNet, executor: &'a PolicyNet, seed: u64) -> Self {
        Self {
            planner,
            executor,
            rng: ChaCha8Rng::seed_from_u64(seed),
            greedy: false,
            record: None,
            reward_scale: 1.0,
            samples: Vec::new(),
        }
    }

    pub fn greedy(mut self, greedy: bool) -> Self {
        self.greedy = greedy;
        self
    }

    /// Stores trajectories for `role`; the other agent only acts.
    pub fn recording(mut self, role: Role, reward_scale: f64) -> Self {
        self.record = Some(role);
        self.reward_scale = reward_scale;
        self
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    fn choose(&mut self, dist: &Categorical) -> usize {
        if self.greedy {
            dist.argmax()
        } else {
            dist.sample(&mut self.rng)
        }
    }
}

impl DecisionPolicy for MrtAgent<'_> {
    fn decide(&mut self, world: &World) -> Result<Decision> {
        let obs = world.observation();
        let p_in = NetInput::planner(&obs);
        let p_out = self.planner.forward(&p_in)?;
        let p_dist = Categorical::from_logits(&p_out.logits)?;
        let task_index = self.choose(&p_dist);

        let e_in = NetInput::executor(&obs, task_index);
        let e_out = self.executor.forward(&e_in)?;
        let e_dist = Categorical::from_logits(&e_out.logits)?;
        let robot_id = self.choose(&e_dist);

        match self.record {
            Some(Role::Planner) => self.samples.push(Sample {
                input: p_in,
                action: task_index,
                log_prob: p_dist.log_probs[task_index],
                value: p_out.value,
                reward: 0.0,
            }),
            Some(Role::Executor) => self.samples.push(Sample {
                input: e_in,
                action: robot_id,
                log_prob: e_dist.log_probs[robot_id],
                value: e_out.value,
                reward: 0.0,
            }),
            None => {}
        }
        Ok(Decision { task_index, robot_id })
    }

    fn record_outcome(&mut self, outcome: &StepOutcome) {
        if self.record.is_some() {
            if let Some(s) = self.samples.last_mut() {
                s.reward = outcome.reward * self.reward_scale;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub episode: usize,
    pub cycle: usize,
    pub role: Role,
    /// Mean unscaled step reward.
    pub mean_reward: f64,
    pub total_cost: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

pub fn write_curve<W: Write>(mut out: W, rows: &[CurveRow]) -> Result<()> {
    writeln!(out, "episode,cycle,agent,mean_reward,total_cost,policy_loss,value_loss,entropy")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.episode, r.cycle, r.role, r.mean_reward, r.total_cost, r.policy_loss, r.value_loss, r.entropy
        )?;
    }
    Ok(())
}

fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(index)
}

pub struct Trainer {
    world: WorldConfig,
    cfg: TrainConfig,
    planner: PolicyNet,
    executor: PolicyNet,
    planner_opt: Adam,
    executor_opt: Adam,
    update_rng: ChaCha8Rng,
    pool: Vec<Vec<Task>>,
    episode: usize,
    cycle: usize,
    curve: Vec<CurveRow>,
}

impl Trainer {
    pub fn new(world: WorldConfig, cfg: TrainConfig) -> Result<Self> {
        world.validate()?;
        cfg.validate()?;
        let dist = ArrivalDist::parse(&cfg.train_dist)?;
        let pool = (0..cfg.dataset_pool as u64)
            .map(|i| {
                generate_dataset(&DatasetSpec {
                    n_tasks: world.episode_tasks,
                    arrival: dist,
                    width: world.width,
                    height: world.height,
                    seed: derive_seed(cfg.train_seed, 1, i),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            planner: PolicyNet::new(Role::Planner, derive_seed(cfg.train_seed, 2, 0)),
            executor: PolicyNet::new(Role::Executor, derive_seed(cfg.train_seed, 2, 1)),
            planner_opt: Adam::new(cfg.learning_rate),
            executor_opt: Adam::new(cfg.learning_rate),
            update_rng: ChaCha8Rng::seed_from_u64(derive_seed(cfg.train_seed, 3, 0)),
            pool,
            episode: 0,
            cycle: 0,
            curve: Vec::new(),
            world,
            cfg,
        })
    }

    pub fn planner(&self) -> &PolicyNet {
        &self.planner
    }

    pub fn executor(&self) -> &PolicyNet {
        &self.executor
    }

    pub fn curve(&self) -> &[CurveRow] {
        &self.curve
    }

    pub fn cycle(&self) -> usize {
        self.cycle
    }

    pub fn is_finished(&self) -> bool {
        self.cycle >= self.cfg.cycles
    }

    fn run_training_episode(&mut self, role: Role) -> Result<CurveRow> {
        let slot = self.episode % self.pool.len();
        let mut world_cfg = self.world.clone();
        world_cfg.seed = derive_seed(self.world.seed, 4, slot as u64);
        let tasks = self.pool[slot].clone();
        let agent_seed = derive_seed(self.cfg.train_seed, 5, self.episode as u64);
        let mut agent =
            MrtAgent::new(&self.planner, &self.executor, agent_seed).recording(role, self.cfg.reward_scale);
        let log = World::new(world_cfg, tasks)?.run(&mut agent)?;
        let samples = agent.into_samples();

        let (net, opt) = match role {
            Role::Planner => (&mut self.planner, &mut self.planner_opt),
            Role::Executor => (&mut self.executor, &mut self.executor_opt),
        };
        let stats: LossStats = ppo_update(net, opt, &samples, &self.cfg.ppo(), &mut self.update_rng)?;
        let n = log.decisions.len().max(1) as f64;
        Ok(CurveRow {
            episode: self.episode,
            cycle: self.cycle,
            role,
            mean_reward: log.total_reward() / n,
            total_cost: log.total_cost,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
        })
    }

    /// Runs one alternation cycle; only the active agent's parameters change.
    pub fn run_cycle(&mut self) -> Result<Role> {
        let role = TrainConfig::active_role(self.cycle);
        for _ in 0..self.cfg.episodes_per_cycle {
            let row = self.run_training_episode(role)?;
            log::debug!(
                "episode {} ({role}) cost {:.1} policy {:.4} value {:.4} entropy {:.3}",
                row.episode,
                row.total_cost,
                row.policy_loss,
                row.value_loss,
                row.entropy
            );
            self.curve.push(row);
            self.episode += 1;
        }
        self.cycle += 1;
        Ok(role)
    }

    pub fn run(mut self) -> Result<TrainOutcome> {
        while !self.is_finished() {
            self.run_cycle()?;
            log::info!("cycle {} of {} finished", self.cycle, self.cfg.cycles);
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> TrainOutcome {
        TrainOutcome {
            planner: self.planner,
            executor: self.executor,
            curve: self.curve,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub planner: PolicyNet,
    pub executor: PolicyNet,
    pub curve: Vec<CurveRow>,
}

pub fn self_play_train(world: &WorldConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    Trainer::new(world.clone(), cfg.clone())?.run()
}
