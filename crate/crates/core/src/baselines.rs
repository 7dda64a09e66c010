//! Reference dispatchers: brute-force optimal pairing and FIFO.

use crate::domain::RobotId;
use crate::env::{Decision, DecisionPolicy, World};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairEstimate {
    pub task_index: usize,
    pub robot_id: RobotId,
    pub est_start: f64,
    /// Wait, travel to origin and delivery, measured from the current clock.
    pub est_exec_duration: f64,
}

/// Every feasible (task, robot) pair, in (task_index, robot_id) order.
pub fn pair_estimates(world: &World) -> Vec<PairEstimate> {
    let mut out = Vec::new();
    for (i, task) in world.la().iter().enumerate() {
        for r in world.available_robots() {
            if let Ok(plan) = world.plan(r.state.id, task) {
                out.push(PairEstimate {
                    task_index: i,
                    robot_id: r.state.id,
                    est_start: plan.t_exec,
                    est_exec_duration: plan.completion - world.clock(),
                });
            }
        }
    }
    out
}

fn no_choice(world: &World) -> Error {
    if world.available_robots().next().is_none() {
        Error::AllMasked
    } else {
        Error::InvalidDecision("no feasible task/robot pair".into())
    }
}

pub fn bfo_decide(world: &World) -> Result<Decision> {
    let mut best: Option<PairEstimate> = None;
    for e in pair_estimates(world) {
        // Strict comparison keeps the first pair in (task_index, robot_id) order on ties.
        if best.is_none_or(|b| e.est_exec_duration < b.est_exec_duration) {
            best = Some(e);
        }
    }
    best.map(|b| Decision { task_index: b.task_index, robot_id: b.robot_id })
        .ok_or_else(|| no_choice(world))
}

pub fn fifo_decide(world: &World) -> Result<Decision> {
    let (task_index, task) = world
        .la()
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.arrival_time.total_cmp(&b.arrival_time).then(a.id.cmp(&b.id)))
        .ok_or_else(|| Error::InvalidDecision("look-ahead queue is empty".into()))?;
    let mut best: Option<(f64, RobotId)> = None;
    for r in world.available_robots() {
        if let Ok(plan) = world.plan(r.state.id, task) {
            if best.is_none_or(|(c, _)| plan.completion < c) {
                best = Some((plan.completion, r.state.id));
            }
        }
    }
    best.map(|(_, robot_id)| Decision { task_index, robot_id })
        .ok_or_else(|| no_choice(world))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Bfo;

impl DecisionPolicy for Bfo {
    fn decide(&mut self, world: &World) -> Result<Decision> {
        bfo_decide(world)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Fifo;

impl DecisionPolicy for Fifo {
    fn decide(&mut self, world: &World) -> Result<Decision> {
        fifo_decide(world)
    }
}
