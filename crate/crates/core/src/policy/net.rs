//! The scoring network shared by the Planner and the Executor, with a hand-written
//! backward pass over its fixed graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{ROBOT_FEATURE_DIM, TASK_FEATURE_DIM};
use crate::env::ObservationTensor;
use crate::error::{Error, Result};

pub const EMBED: usize = 16;
pub const SCORER_HIDDEN: usize = 8;
pub const VALUE_HIDDEN: usize = 16;

const POS_SCALE: f64 = 64.0;
const TIME_SCALE: f64 = 100.0;
const STAMP_SCALE: f64 = 1000.0;
/// Availability times beyond this are treated alike; keeps masked robots finite.
const REMAINING_CAP: f64 = 1e4;

pub const N_LAYERS: usize = 12;

/// (inputs, outputs) of each linear layer, in parameter-vector order.
pub const SHAPES: [(usize, usize); N_LAYERS] = [
    (ROBOT_FEATURE_DIM, EMBED),
    (EMBED, EMBED),
    (TASK_FEATURE_DIM, EMBED),
    (EMBED, EMBED),
    (EMBED, EMBED),
    (EMBED, 1),
    (EMBED, EMBED),
    (EMBED, 1),
    (3 * EMBED, SCORER_HIDDEN),
    (SCORER_HIDDEN, 1),
    (2 * EMBED, VALUE_HIDDEN),
    (VALUE_HIDDEN, 1),
];

const ROBOT_1: usize = 0;
const ROBOT_2: usize = 1;
const TASK_1: usize = 2;
const TASK_2: usize = 3;
const ROBOT_ATT_1: usize = 4;
const ROBOT_ATT_2: usize = 5;
const TASK_ATT_1: usize = 6;
const TASK_ATT_2: usize = 7;
const SCORE_1: usize = 8;
const SCORE_2: usize = 9;
const VALUE_1: usize = 10;
const VALUE_2: usize = 11;

const fn layout() -> ([usize; N_LAYERS], usize) {
    let mut offsets = [0; N_LAYERS];
    let mut total = 0;
    let mut i = 0;
    while i < N_LAYERS {
        offsets[i] = total;
        total += SHAPES[i].0 * SHAPES[i].1 + SHAPES[i].1;
        i += 1;
    }
    (offsets, total)
}

const LAYOUT: ([usize; N_LAYERS], usize) = layout();
pub const PARAM_COUNT: usize = LAYOUT.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Planner,
    Executor,
}

impl Role {
    pub fn other(self) -> Self {
        match self {
            Role::Planner => Role::Executor,
            Role::Executor => Role::Planner,
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::Planner => "planner",
            Role::Executor => "executor",
        })
    }
}

/// Weights are stored row-major (`outputs` rows of `inputs`), followed by the bias.
#[derive(Clone, Copy)]
struct Linear {
    inputs: usize,
    outputs: usize,
    offset: usize,
}

impl Linear {
    const fn at(layer: usize) -> Self {
        Self {
            inputs: SHAPES[layer].0,
            outputs: SHAPES[layer].1,
            offset: LAYOUT.0[layer],
        }
    }

    fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        let w = &params[self.offset..self.offset + self.inputs * self.outputs];
        let b = &params[self.offset + self.inputs * self.outputs..][..self.outputs];
        (0..self.outputs)
            .map(|o| {
                let row = &w[o * self.inputs..(o + 1) * self.inputs];
                b[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    /// Accumulates parameter gradients and returns dL/dx.
    fn backward(&self, params: &[f64], grad: &mut [f64], x: &[f64], dy: &[f64]) -> Vec<f64> {
        let n_w = self.inputs * self.outputs;
        let w = &params[self.offset..self.offset + n_w];
        let mut dx = vec![0.0; self.inputs];
        {
            let gw = &mut grad[self.offset..self.offset + n_w];
            for o in 0..self.outputs {
                if dy[o] == 0.0 {
                    continue;
                }
                for i in 0..self.inputs {
                    gw[o * self.inputs + i] += dy[o] * x[i];
                    dx[i] += w[o * self.inputs + i] * dy[o];
                }
            }
        }
        let gb = &mut grad[self.offset + n_w..self.offset + n_w + self.outputs];
        for (g, d) in gb.iter_mut().zip(dy) {
            *g += d;
        }
        dx
    }
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Network input with fixed feature scaling applied.
#[derive(Clone, Debug, PartialEq)]
pub struct NetInput {
    pub tasks: Vec<[f64; TASK_FEATURE_DIM]>,
    pub robots: Vec<[f64; ROBOT_FEATURE_DIM]>,
    pub available: Vec<bool>,
    /// Look-ahead slot already chosen by the Planner; set for Executor inputs only.
    pub selected: Option<usize>,
}

impl NetInput {
    fn scaled(obs: &ObservationTensor, selected: Option<usize>) -> Self {
        let tasks = obs
            .tasks
            .iter()
            .map(|t| {
                [
                    t[0] / POS_SCALE,
                    t[1] / POS_SCALE,
                    t[2] / POS_SCALE,
                    t[3] / POS_SCALE,
                    t[4] / POS_SCALE,
                    t[5] / STAMP_SCALE,
                ]
            })
            .collect();
        // The Executor sees robots relative to the chosen pickup point.
        let (cx, cy) = match selected.and_then(|s| obs.tasks.get(s)) {
            Some(t) => (t[0], t[1]),
            None => (0.0, 0.0),
        };
        let robots = obs
            .robots
            .iter()
            .map(|r| {
                [
                    (r[0] - cx) / POS_SCALE,
                    (r[1] - cy) / POS_SCALE,
                    r[2].min(REMAINING_CAP) / TIME_SCALE,
                    r[3],
                ]
            })
            .collect();
        Self {
            tasks,
            robots,
            available: obs.robot_available.clone(),
            selected,
        }
    }

    pub fn planner(obs: &ObservationTensor) -> Self {
        Self::scaled(obs, None)
    }

    pub fn executor(obs: &ObservationTensor, slot: usize) -> Self {
        Self::scaled(obs, Some(slot))
    }
}

struct Entity {
    x: Vec<f64>,
    h: Vec<f64>,
    e: Vec<f64>,
    g: Vec<f64>,
    a: f64,
}

struct EntityLayers {
    l1: Linear,
    l2: Linear,
    att1: Linear,
    att2: Linear,
}

const ROBOT_LAYERS: EntityLayers = EntityLayers {
    l1: Linear::at(ROBOT_1),
    l2: Linear::at(ROBOT_2),
    att1: Linear::at(ROBOT_ATT_1),
    att2: Linear::at(ROBOT_ATT_2),
};

const TASK_LAYERS: EntityLayers = EntityLayers {
    l1: Linear::at(TASK_1),
    l2: Linear::at(TASK_2),
    att1: Linear::at(TASK_ATT_1),
    att2: Linear::at(TASK_ATT_2),
};

impl EntityLayers {
    fn forward(&self, params: &[f64], x: &[f64]) -> Entity {
        let h = relu(self.l1.forward(params, x));
        let e = self.l2.forward(params, &h);
        let g: Vec<f64> = self.att1.forward(params, &e).into_iter().map(f64::tanh).collect();
        let a = sigmoid(self.att2.forward(params, &g)[0]);
        Entity { x: x.to_vec(), h, e, g, a }
    }

    fn backward(&self, params: &[f64], grad: &mut [f64], ent: &Entity, de: &[f64], da: f64) {
        let ds = da * ent.a * (1.0 - ent.a);
        let dg = self.att2.backward(params, grad, &ent.g, &[ds]);
        let dg_pre: Vec<f64> = dg.iter().zip(&ent.g).map(|(d, g)| d * (1.0 - g * g)).collect();
        let de_att = self.att1.backward(params, grad, &ent.e, &dg_pre);
        let de_total: Vec<f64> = de.iter().zip(&de_att).map(|(a, b)| a + b).collect();
        let dh = self.l2.backward(params, grad, &ent.h, &de_total);
        let dh_pre: Vec<f64> = dh.iter().zip(&ent.h).map(|(d, h)| if *h > 0.0 { *d } else { 0.0 }).collect();
        self.l1.backward(params, grad, &ent.x, &dh_pre);
    }
}

struct Candidate {
    input: Vec<f64>,
    hidden: Vec<f64>,
}

/// Everything the backward pass needs from one forward evaluation.
pub struct Trace {
    robots: Vec<Option<Entity>>,
    tasks: Vec<Entity>,
    candidates: Vec<Option<Candidate>>,
    context: Vec<f64>,
    value_hidden: Vec<f64>,
    selected: Option<usize>,
    pub logits: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    role: Role,
    params: Vec<f64>,
}

impl PolicyNet {
    /// Uniform fan-in initialisation.
    pub fn new(role: Role, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; PARAM_COUNT];
        for layer in 0..N_LAYERS {
            let l = Linear::at(layer);
            let bound = 1.0 / (l.inputs as f64).sqrt();
            for p in &mut params[l.offset..l.offset + l.inputs * l.outputs + l.outputs] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Self { role, params }
    }

    pub fn from_params(role: Role, params: Vec<f64>) -> Result<Self> {
        if params.len() != PARAM_COUNT {
            return Err(Error::ShapeMismatch(format!(
                "expected {PARAM_COUNT} parameters, got {}",
                params.len()
            )));
        }
        Ok(Self { role, params })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, input: &NetInput) -> Result<()> {
        if input.tasks.is_empty() {
            return Err(Error::InvalidDecision("look-ahead queue is empty".into()));
        }
        if input.available.len() != input.robots.len() {
            return Err(Error::ShapeMismatch("mask length differs from robot count".into()));
        }
        match (self.role, input.selected) {
            (Role::Planner, None) => {}
            (Role::Executor, Some(s)) if s < input.tasks.len() => {}
            (Role::Executor, Some(s)) => {
                return Err(Error::InvalidDecision(format!("selected slot {s} out of range")))
            }
            (role, _) => return Err(Error::ShapeMismatch(format!("input does not suit the {role}"))),
        }
        if !input.available.iter().any(|&a| a) {
            return Err(Error::AllMasked);
        }
        Ok(())
    }

    pub fn forward(&self, input: &NetInput) -> Result<Trace> {
        self.check_input(input)?;
        let p = &self.params;
        let robots: Vec<Option<Entity>> = input
            .robots
            .iter()
            .zip(&input.available)
            .map(|(x, &ok)| ok.then(|| ROBOT_LAYERS.forward(p, x)))
            .collect();
        let tasks: Vec<Entity> = input.tasks.iter().map(|x| TASK_LAYERS.forward(p, x)).collect();

        let mut context = vec![0.0; 2 * EMBED];
        for r in robots.iter().flatten() {
            for k in 0..EMBED {
                context[k] += r.a * r.e[k];
            }
        }
        for t in &tasks {
            for k in 0..EMBED {
                context[EMBED + k] += t.a * t.e[k];
            }
        }

        let score_1 = Linear::at(SCORE_1);
        let score_2 = Linear::at(SCORE_2);
        let candidate = |middle: &[f64], own: &[f64]| {
            let mut input = Vec::with_capacity(3 * EMBED);
            input.extend_from_slice(&context[..EMBED]);
            input.extend_from_slice(middle);
            input.extend_from_slice(own);
            let hidden = relu(score_1.forward(p, &input));
            let logit = score_2.forward(p, &hidden)[0];
            (Candidate { input, hidden }, logit)
        };
        let mut candidates = Vec::new();
        let mut logits = Vec::new();
        match input.selected {
            None => {
                for t in &tasks {
                    let (c, l) = candidate(&context[EMBED..], &t.e);
                    candidates.push(Some(c));
                    logits.push(l);
                }
            }
            Some(s) => {
                for r in &robots {
                    match r {
                        Some(r) => {
                            let (c, l) = candidate(&tasks[s].e, &r.e);
                            candidates.push(Some(c));
                            logits.push(l);
                        }
                        None => {
                            candidates.push(None);
                            logits.push(f64::NEG_INFINITY);
                        }
                    }
                }
            }
        }

        let value_hidden = relu(Linear::at(VALUE_1).forward(p, &context));
        let value = Linear::at(VALUE_2).forward(p, &value_hidden)[0];
        Ok(Trace {
            robots,
            tasks,
            candidates,
            context,
            value_hidden,
            selected: input.selected,
            logits,
            value,
        })
    }

    /// Accumulates dL/dθ into `grad` given dL/dlogits (masked entries ignored) and dL/dvalue.
    pub fn backward(&self, trace: &Trace, dlogits: &[f64], dvalue: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), PARAM_COUNT);
        let p = &self.params;
        let mut d_context = vec![0.0; 2 * EMBED];
        let mut d_robot: Vec<Vec<f64>> = vec![vec![0.0; EMBED]; trace.robots.len()];
        let mut d_task: Vec<Vec<f64>> = vec![vec![0.0; EMBED]; trace.tasks.len()];

        let score_1 = Linear::at(SCORE_1);
        let score_2 = Linear::at(SCORE_2);
        for (k, (cand, &dl)) in trace.candidates.iter().zip(dlogits).enumerate() {
            let Some(cand) = cand else { continue };
            if dl == 0.0 {
                continue;
            }
            let dh = score_2.backward(p, grad, &cand.hidden, &[dl]);
            let dh_pre: Vec<f64> = dh
                .iter()
                .zip(&cand.hidden)
                .map(|(d, h)| if *h > 0.0 { *d } else { 0.0 })
                .collect();
            let dc = score_1.backward(p, grad, &cand.input, &dh_pre);
            for i in 0..EMBED {
                d_context[i] += dc[i];
            }
            match trace.selected {
                None => {
                    for i in 0..EMBED {
                        d_context[EMBED + i] += dc[EMBED + i];
                        d_task[k][i] += dc[2 * EMBED + i];
                    }
                }
                Some(s) => {
                    for i in 0..EMBED {
                        d_task[s][i] += dc[EMBED + i];
                        d_robot[k][i] += dc[2 * EMBED + i];
                    }
                }
            }
        }

        if dvalue != 0.0 {
            let dh = Linear::at(VALUE_2).backward(p, grad, &trace.value_hidden, &[dvalue]);
            let dh_pre: Vec<f64> = dh
                .iter()
                .zip(&trace.value_hidden)
                .map(|(d, h)| if *h > 0.0 { *d } else { 0.0 })
                .collect();
            let du = Linear::at(VALUE_1).backward(p, grad, &trace.context, &dh_pre);
            for (d, u) in d_context.iter_mut().zip(&du) {
                *d += u;
            }
        }

        for (j, r) in trace.robots.iter().enumerate() {
            let Some(r) = r else { continue };
            let mut da = 0.0;
            for i in 0..EMBED {
                d_robot[j][i] += r.a * d_context[i];
                da += d_context[i] * r.e[i];
            }
            ROBOT_LAYERS.backward(p, grad, r, &d_robot[j], da);
        }
        for (i, t) in trace.tasks.iter().enumerate() {
            let mut da = 0.0;
            for k in 0..EMBED {
                d_task[i][k] += t.a * d_context[EMBED + k];
                da += d_context[EMBED + k] * t.e[k];
            }
            TASK_LAYERS.backward(p, grad, t, &d_task[i], da);
        }
    }
}

/// A categorical distribution over candidates; masked candidates carry probability 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Categorical {
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl Categorical {
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        let max = logits
            .iter()
            .copied()
            .filter(|l| l.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::AllMasked);
        }
        let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        let log_z = max + sum.ln();
        let log_probs: Vec<f64> = logits.iter().map(|l| l - log_z).collect();
        let probs = log_probs.iter().map(|l| l.exp()).collect();
        Ok(Self { probs, log_probs })
    }

    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .zip(&self.log_probs)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, l)| -p * l)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = i;
                if u < acc {
                    return i;
                }
            }
        }
        last
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

pub fn forward_planner(obs: &ObservationTensor, net: &PolicyNet) -> Result<(Categorical, f64)> {
    let trace = net.forward(&NetInput::planner(obs))?;
    Ok((Categorical::from_logits(&trace.logits)?, trace.value))
}

pub fn forward_executor(obs: &ObservationTensor, slot: usize, net: &PolicyNet) -> Result<(Categorical, f64)> {
    let trace = net.forward(&NetInput::executor(obs, slot))?;
    Ok((Categorical::from_logits(&trace.logits)?, trace.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn obs(tasks: Vec<[f64; 6]>, robots: Vec<[f64; 4]>) -> ObservationTensor {
        let n = robots.len();
        ObservationTensor {
            clock: 100.0,
            tasks,
            robots,
            robot_available: vec![true; n],
        }
    }

    fn random_obs(rng: &mut ChaCha8Rng, n_tasks: usize, n_robots: usize) -> ObservationTensor {
        let mut c = || rng.random_range(0.0f64..64.0);
        let tasks = (0..n_tasks)
            .map(|_| {
                let (a, b, x, y) = (c(), c(), c(), c());
                [a, b, x, y, ((x - a).powi(2) + (y - b).powi(2)).sqrt(), c()]
            })
            .collect();
        let robots = (0..n_robots).map(|_| [c(), c(), c(), c() / 64.0]).collect();
        obs(tasks, robots)
    }

    #[test]
    fn parameter_count_matches_layer_list() {
        let expected: usize = SHAPES.iter().map(|(i, o)| i * o + o).sum();
        assert_eq!(PARAM_COUNT, expected);
        assert_eq!(SHAPES[8], (48, 8));
        assert_eq!(SHAPES[0], (4, 16));
        assert_eq!(SHAPES[2], (6, 16));
    }

    #[test]
    fn identical_tasks_share_probability() {
        let net = PolicyNet::new(Role::Planner, 3);
        let t = [1.0, 2.0, 30.0, 40.0, 45.0, 90.0];
        let o = obs(vec![t, t], vec![[5.0, 5.0, 0.0, 0.8], [50.0, 9.0, 3.0, 0.5]]);
        let (dist, _) = forward_planner(&o, &net).unwrap();
        assert_eq!(dist.probs[0], dist.probs[1]);
        assert!((dist.probs[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_robots_share_probability() {
        let net = PolicyNet::new(Role::Executor, 4);
        let r = [12.0, 30.0, 4.0, 0.6];
        let o = obs(vec![[1.0, 2.0, 30.0, 40.0, 45.0, 90.0]], vec![r, r]);
        let (dist, _) = forward_executor(&o, 0, &net).unwrap();
        assert_eq!(dist.probs[0], dist.probs[1]);
    }

    #[test]
    fn masked_robot_gets_zero_probability() {
        let net = PolicyNet::new(Role::Executor, 5);
        let mut o = obs(vec![[1.0, 2.0, 30.0, 40.0, 45.0, 90.0]], vec![[1.0, 1.0, 0.0, 1.0], [2.0, 2.0, 1e9, 1.0]]);
        o.robot_available = vec![true, false];
        let (dist, _) = forward_executor(&o, 0, &net).unwrap();
        assert_eq!(dist.probs[1], 0.0);
        assert_eq!(dist.probs[0], 1.0);
        o.robot_available = vec![false, false];
        assert!(matches!(forward_executor(&o, 0, &net), Err(Error::AllMasked)));
    }

    #[test]
    fn distributions_are_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..50 {
            let planner = PolicyNet::new(Role::Planner, seed);
            let executor = PolicyNet::new(Role::Executor, seed + 1000);
            let o = random_obs(&mut rng, 1 + seed as usize % 5, 1 + seed as usize % 7);
            let (p, v) = forward_planner(&o, &planner).unwrap();
            let (e, w) = forward_executor(&o, 0, &executor).unwrap();
            for d in [&p, &e] {
                assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                for (pr, lp) in d.probs.iter().zip(&d.log_probs) {
                    assert!((pr.ln() - lp).abs() < 1e-9);
                }
            }
            assert!(v.is_finite() && w.is_finite());
        }
    }

    #[test]
    fn planner_ignores_robot_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let net = PolicyNet::new(Role::Planner, 11);
        for _ in 0..20 {
            let o = random_obs(&mut rng, 4, 6);
            let mut shuffled = o.clone();
            shuffled.robots.reverse();
            shuffled.robots.swap(0, 3);
            let (a, va) = forward_planner(&o, &net).unwrap();
            let (b, vb) = forward_planner(&shuffled, &net).unwrap();
            for (x, y) in a.probs.iter().zip(&b.probs) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!((va - vb).abs() < 1e-12);
            assert_eq!(a.argmax(), b.argmax());
        }
    }

    #[test]
    fn executor_ignores_task_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let net = PolicyNet::new(Role::Executor, 13);
        for _ in 0..20 {
            let o = random_obs(&mut rng, 5, 4);
            let mut shuffled = o.clone();
            shuffled.tasks.rotate_left(2);
            // Slot 1 of the original sits at slot 4 after rotating by two.
            let (a, _) = forward_executor(&o, 1, &net).unwrap();
            let (b, _) = forward_executor(&shuffled, 4, &net).unwrap();
            for (x, y) in a.probs.iter().zip(&b.probs) {
                assert!((x - y).abs() < 1e-9);
            }
            assert_eq!(a.argmax(), b.argmax());
        }
    }

    #[test]
    fn wrong_inputs_are_rejected() {
        let planner = PolicyNet::new(Role::Planner, 1);
        let executor = PolicyNet::new(Role::Executor, 1);
        let o = obs(vec![[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]], vec![[1.0, 1.0, 0.0, 1.0]]);
        assert!(executor.forward(&NetInput::planner(&o)).is_err());
        assert!(planner.forward(&NetInput::executor(&o, 0)).is_err());
        assert!(executor.forward(&NetInput::executor(&o, 3)).is_err());
        let empty = obs(vec![], vec![[1.0, 1.0, 0.0, 1.0]]);
        assert!(planner.forward(&NetInput::planner(&empty)).is_err());
        assert!(PolicyNet::from_params(Role::Planner, vec![0.0; 3]).is_err());
    }

    #[test]
    fn sampling_follows_probabilities() {
        let d = Categorical::from_logits(&[0.0, f64::NEG_INFINITY, (3.0f64).ln()]).unwrap();
        assert!((d.probs[2] - 0.75).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            counts[d.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        let frac = counts[2] as f64 / 20_000.0;
        assert!((frac - 0.75).abs() < 0.02, "{frac}");
        assert_eq!(d.argmax(), 2);
    }

    #[test]
    fn linear_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let net = PolicyNet::new(Role::Planner, 22);
        let l = Linear::at(SCORE_1);
        let x: Vec<f64> = (0..l.inputs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dy: Vec<f64> = (0..l.outputs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |params: &[f64], x: &[f64]| -> f64 {
            l.forward(params, x).iter().zip(&dy).map(|(y, d)| y * d).sum()
        };
        let mut grad = vec![0.0; PARAM_COUNT];
        let dx = l.backward(net.params(), &mut grad, &x, &dy);
        let h = 1e-6;
        for i in 0..l.inputs {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (f(net.params(), &xp) - f(net.params(), &xm)) / (2.0 * h);
            assert!((fd - dx[i]).abs() < 1e-8);
        }
        let mut p = net.params().to_vec();
        for k in l.offset..l.offset + l.inputs * l.outputs + l.outputs {
            let orig = p[k];
            p[k] = orig + h;
            let up = f(&p, &x);
            p[k] = orig - h;
            let down = f(&p, &x);
            p[k] = orig;
            assert!(((up - down) / (2.0 * h) - grad[k]).abs() < 1e-8);
        }
    }
}
