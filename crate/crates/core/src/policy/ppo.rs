//! PPO-Clip with GAE advantages and an Adam optimiser.

use rand::seq::SliceRandom;
use rand::Rng;

use super::net::{Categorical, NetInput, PolicyNet, PARAM_COUNT};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: NetInput,
    pub action: usize,
    /// Log-probability of `action` under the policy that collected the sample.
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub clip_eps: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
}

/// Generalised advantage estimates and rewards-to-go for one finished episode.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { 0.0 };
        let delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        adv[t] = next_adv;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shifts to zero mean and scales to unit variance; constant input becomes all zeros.
pub fn normalize(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for x in v.iter_mut() {
        *x = if std > 1e-12 { (*x - mean) / std } else { 0.0 };
    }
}

/// Mean PPO loss over `batch` and, when `grad` is given, its gradient (overwritten).
pub fn loss_and_grad(
    net: &PolicyNet,
    batch: &[&Sample],
    advantages: &[f64],
    returns: &[f64],
    w: &LossWeights,
    mut grad: Option<&mut [f64]>,
) -> Result<LossStats> {
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    if batch.is_empty() {
        return Ok(LossStats::default());
    }
    let n = batch.len() as f64;
    let mut stats = LossStats::default();
    for (k, s) in batch.iter().enumerate() {
        let trace = net.forward(&s.input)?;
        let dist = Categorical::from_logits(&trace.logits)?;
        let logp = dist.log_probs[s.action];
        if !logp.is_finite() {
            return Err(Error::InvalidDecision(format!("sample action {} has zero probability", s.action)));
        }
        let adv = advantages[k];
        let ratio = (logp - s.log_prob).exp();
        let clipped = ratio.clamp(1.0 - w.clip_eps, 1.0 + w.clip_eps);
        let unclipped_active = ratio * adv <= clipped * adv;
        let surrogate = if unclipped_active { ratio * adv } else { clipped * adv };
        let entropy = dist.entropy();
        let v_err = trace.value - returns[k];

        stats.policy_loss -= surrogate / n;
        stats.entropy += entropy / n;
        stats.value_loss += v_err * v_err / n;

        if let Some(g) = grad.as_deref_mut() {
            let d_logp = if unclipped_active { -ratio * adv / n } else { 0.0 };
            let dlogits: Vec<f64> = dist
                .probs
                .iter()
                .zip(&dist.log_probs)
                .enumerate()
                .map(|(i, (&p, &lp))| {
                    if p == 0.0 {
                        return 0.0;
                    }
                    let indicator = if i == s.action { 1.0 } else { 0.0 };
                    d_logp * (indicator - p) + w.entropy_coef * p * (lp + entropy) / n
                })
                .collect();
            let dvalue = 2.0 * w.value_coef * v_err / n;
            net.backward(&trace, &dlogits, dvalue, g);
        }
    }
    stats.total = stats.policy_loss - w.entropy_coef * stats.entropy + w.value_coef * stats.value_loss;
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; PARAM_COUNT],
            v: vec![0.0; PARAM_COUNT],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PpoSettings {
    pub weights: LossWeights,
    pub epochs: usize,
    pub minibatch: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Global gradient-norm cap; 0 disables it.
    pub max_grad_norm: f64,
}

/// Runs the configured epochs of minibatch updates over one episode's samples and
/// returns the loss statistics averaged over all minibatches.
///
/// On a non-finite loss the parameters are left as they were before that minibatch.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut PolicyNet,
    adam: &mut Adam,
    samples: &[Sample],
    settings: &PpoSettings,
    rng: &mut R,
) -> Result<LossStats> {
    if samples.is_empty() {
        return Ok(LossStats::default());
    }
    let rewards: Vec<f64> = samples.iter().map(|s| s.reward).collect();
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let (mut adv, returns) = gae(&rewards, &values, settings.gamma, settings.gae_lambda);
    normalize(&mut adv);

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grad = vec![0.0; PARAM_COUNT];
    let mut acc = LossStats::default();
    let mut count = 0usize;
    for _ in 0..settings.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(settings.minibatch.max(1)) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let a: Vec<f64> = chunk.iter().map(|&i| adv[i]).collect();
            let r: Vec<f64> = chunk.iter().map(|&i| returns[i]).collect();
            let stats = loss_and_grad(net, &batch, &a, &r, &settings.weights, Some(&mut grad))?;
            if !stats.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    policy_loss: stats.policy_loss,
                    value_loss: stats.value_loss,
                });
            }
            if settings.max_grad_norm > 0.0 {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > settings.max_grad_norm {
                    let s = settings.max_grad_norm / norm;
                    grad.iter_mut().for_each(|g| *g *= s);
                }
            }
            adam.step(net.params_mut(), &grad);
            acc.policy_loss += stats.policy_loss;
            acc.value_loss += stats.value_loss;
            acc.entropy += stats.entropy;
            acc.total += stats.total;
            count += 1;
        }
    }
    let c = count.max(1) as f64;
    Ok(LossStats {
        policy_loss: acc.policy_loss / c,
        value_loss: acc.value_loss / c,
        entropy: acc.entropy / c,
        total: acc.total / c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ObservationTensor;
    use crate::policy::net::Role;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(rng: &mut ChaCha8Rng, role: Role, n_tasks: usize, n_robots: usize) -> Sample {
        let mut c = || rng.random_range(0.0f64..64.0);
        let tasks: Vec<[f64; 6]> = (0..n_tasks).map(|_| [c(), c(), c(), c(), c(), c()]).collect();
        let robots: Vec<[f64; 4]> = (0..n_robots).map(|_| [c(), c(), c(), c() / 64.0]).collect();
        let obs = ObservationTensor {
            clock: 70.0,
            tasks,
            robots,
            robot_available: vec![true; n_robots],
        };
        let input = match role {
            Role::Planner => NetInput::planner(&obs),
            Role::Executor => NetInput::executor(&obs, n_tasks - 1),
        };
        let n = if role == Role::Planner { n_tasks } else { n_robots };
        Sample {
            input,
            action: rng.random_range(0..n),
            log_prob: -(n as f64).ln() + rng.random_range(-0.5..0.5),
            value: rng.random_range(-1.0..1.0),
            reward: rng.random_range(-1.0..0.0),
        }
    }

    fn weights() -> LossWeights {
        LossWeights {
            clip_eps: 0.2,
            entropy_coef: 0.001,
            value_coef: 0.0002,
        }
    }

    #[test]
    fn gae_matches_hand_computation() {
        let (adv, ret) = gae(&[1.0, 2.0], &[0.5, 0.25], 0.5, 0.5);
        // delta1 = 2 - 0.25; delta0 = 1 + 0.5 * 0.25 - 0.5.
        let d1 = 1.75;
        let d0 = 0.625;
        assert!((adv[1] - d1).abs() < 1e-15);
        assert!((adv[0] - (d0 + 0.25 * d1)).abs() < 1e-15);
        assert!((ret[0] - (adv[0] + 0.5)).abs() < 1e-15);
        let (adv, ret) = gae(&[1.0, 1.0, 1.0], &[0.0; 3], 1.0, 1.0);
        assert_eq!(adv, vec![3.0, 2.0, 1.0]);
        assert_eq!(ret, adv);
    }

    #[test]
    fn normalisation() {
        let mut v = vec![1.0, 2.0, 3.0, 4.0];
        normalize(&mut v);
        let mean: f64 = v.iter().sum::<f64>() / 4.0;
        let var: f64 = v.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-15 && (var - 1.0).abs() < 1e-12);
        let mut same = vec![5.0; 3];
        normalize(&mut same);
        assert_eq!(same, vec![0.0; 3]);
    }

    #[test]
    fn zero_advantage_leaves_only_entropy_and_value_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = PolicyNet::new(Role::Planner, 2);
        let samples: Vec<Sample> = (0..4).map(|_| sample(&mut rng, Role::Planner, 3, 2)).collect();
        let batch: Vec<&Sample> = samples.iter().collect();
        let zeros = vec![0.0; 4];
        let returns: Vec<f64> = samples.iter().map(|s| s.value).collect();
        let mut g = vec![0.0; PARAM_COUNT];
        let stats = loss_and_grad(&net, &batch, &zeros, &returns, &weights(), Some(&mut g)).unwrap();
        assert_eq!(stats.policy_loss, 0.0);

        let entropy_only = LossWeights { value_coef: 0.0, ..weights() };
        let mut ge = vec![0.0; PARAM_COUNT];
        loss_and_grad(&net, &batch, &zeros, &returns, &entropy_only, Some(&mut ge)).unwrap();
        let mut gv = vec![0.0; PARAM_COUNT];
        let value_only = LossWeights { entropy_coef: 0.0, ..weights() };
        loss_and_grad(&net, &batch, &zeros, &returns, &value_only, Some(&mut gv)).unwrap();
        for i in 0..PARAM_COUNT {
            assert!((g[i] - ge[i] - gv[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn clipped_sample_contributes_only_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = PolicyNet::new(Role::Executor, 4);
        let mut s = sample(&mut rng, Role::Executor, 2, 3);
        let trace = net.forward(&s.input).unwrap();
        let dist = Categorical::from_logits(&trace.logits).unwrap();
        // Ratio of e^1 is far outside [0.8, 1.2].
        s.log_prob = dist.log_probs[s.action] - 1.0;
        let ret = [trace.value];
        let mut g = vec![0.0; PARAM_COUNT];
        let w = LossWeights { value_coef: 0.0, ..weights() };
        let stats = loss_and_grad(&net, &[&s], &[2.0], &ret, &w, Some(&mut g)).unwrap();
        assert!((stats.policy_loss + 1.2 * 2.0).abs() < 1e-12);
        let mut ge = vec![0.0; PARAM_COUNT];
        loss_and_grad(&net, &[&s], &[0.0], &ret, &w, Some(&mut ge)).unwrap();
        assert_eq!(g, ge);
    }

    #[test]
    fn positive_advantage_raises_log_prob() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for role in [Role::Planner, Role::Executor] {
            let mut net = PolicyNet::new(role, 6);
            let mut s = sample(&mut rng, role, 3, 3);
            let before = Categorical::from_logits(&net.forward(&s.input).unwrap().logits).unwrap().log_probs[s.action];
            s.log_prob = before;
            let w = LossWeights { entropy_coef: 0.0, value_coef: 0.0, clip_eps: 0.2 };
            let mut adam = Adam::new(1e-3);
            let batch = vec![&s; 4];
            let mut g = vec![0.0; PARAM_COUNT];
            loss_and_grad(&net, &batch, &[1.0; 4], &[0.0; 4], &w, Some(&mut g)).unwrap();
            adam.step(net.params_mut(), &g);
            let after = Categorical::from_logits(&net.forward(&s.input).unwrap().logits).unwrap().log_probs[s.action];
            assert!(after > before, "{role}: {before} -> {after}");
        }
    }

    #[test]
    fn adam_first_step_has_learning_rate_size() {
        let mut adam = Adam::new(0.01);
        let mut p = vec![1.0; PARAM_COUNT];
        let mut g = vec![0.0; PARAM_COUNT];
        g[0] = 3.0;
        g[1] = -1e-3;
        adam.step(&mut p, &g);
        assert!((p[0] - 0.99).abs() < 1e-9);
        assert!((p[1] - 1.01).abs() < 1e-6);
        assert_eq!(p[2], 1.0);
    }

    fn check_gradient(role: Role, w: LossWeights, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = PolicyNet::new(role, seed + 1);
        let samples: Vec<Sample> = (0..6).map(|_| sample(&mut rng, role, 2, 2)).collect();
        let batch: Vec<&Sample> = samples.iter().collect();
        let adv: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ret: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut g = vec![0.0; PARAM_COUNT];
        loss_and_grad(&net, &batch, &adv, &ret, &w, Some(&mut g)).unwrap();
        let mut probe = net.clone();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..PARAM_COUNT {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + h;
            let up = loss_and_grad(&probe, &batch, &adv, &ret, &w, None).unwrap().total;
            probe.params_mut()[i] = orig - h;
            let down = loss_and_grad(&probe, &batch, &adv, &ret, &w, None).unwrap().total;
            probe.params_mut()[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn composed_gradient_matches_finite_differences() {
        for role in [Role::Planner, Role::Executor] {
            let strong = LossWeights { clip_eps: 0.2, entropy_coef: 0.1, value_coef: 0.5 };
            for w in [weights(), strong] {
                let worst = check_gradient(role, w, 40);
                assert!(worst <= 1e-4, "{role}: {worst}");
            }
        }
    }
}
