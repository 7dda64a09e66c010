//! The warehouse simulation: arrivals, the look-ahead queue, robot itineraries,
//! charging, reward accounting and the episode loop.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    robot_feature, sort_tasks, task_feature, Phase, Point, RobotId, RobotState, Task, TaskId,
    TaskStatus, WorldConfig, ROBOT_FEATURE_DIM, TASK_FEATURE_DIM,
};
use crate::error::{invalid, Error, Result};
use crate::nav::{apf_forces, control_with_force, step_dynamics, FleetSnapshot, Kinematics, LqrGain, TrajectoryRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LegKind {
    ToOrigin(TaskId),
    ToDestination(TaskId),
    ToDock,
    Charge,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    pub kind: LegKind,
    /// Movement target; for dock legs it is only meaningful once `dock` is set.
    pub target: Point,
    pub dock: Option<usize>,
}

impl Leg {
    fn task(kind: LegKind, target: Point) -> Self {
        Self { kind, target, dock: None }
    }

    fn dock_legs() -> [Leg; 2] {
        [
            Leg { kind: LegKind::ToDock, target: Point::zeros(), dock: None },
            Leg { kind: LegKind::Charge, target: Point::zeros(), dock: None },
        ]
    }

    fn phase(&self) -> Phase {
        match self.kind {
            LegKind::ToOrigin(_) => Phase::ToOrigin,
            LegKind::ToDestination(_) => Phase::ToDestination,
            LegKind::ToDock => Phase::ToDock,
            LegKind::Charge => Phase::Charging,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Robot {
    pub state: RobotState,
    legs: VecDeque<Leg>,
}

impl Robot {
    pub fn legs(&self) -> impl Iterator<Item = &Leg> {
        self.legs.iter()
    }

    fn waiting_for_dock(&self) -> bool {
        matches!(self.legs.front(), Some(Leg { kind: LegKind::ToDock, dock: None, .. }))
    }

    fn is_moving(&self) -> bool {
        self.state.phase.is_moving() && !self.waiting_for_dock()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub task_index: usize,
    pub robot_id: RobotId,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub trto: f64,
    pub ttgt: f64,
    pub t_exec: f64,
    pub t_stamp: f64,
}

/// Projected end state of a robot's itinerary at nominal speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub free_at: f64,
    pub position: Point,
    pub soc: f64,
}

/// What assigning a given task to a given robot would entail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssignmentPlan {
    pub robot_id: RobotId,
    pub charge_first: bool,
    /// Where the travel-to-origin leg starts.
    pub start: Point,
    /// Time the travel-to-origin leg starts.
    pub t_exec: f64,
    pub trto: f64,
    /// Projected delivery time.
    pub completion: f64,
    pub soc_at_completion: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationTensor {
    pub clock: f64,
    /// One row per look-ahead slot.
    pub tasks: Vec<[f64; TASK_FEATURE_DIM]>,
    /// One row per robot, ordered by id.
    pub robots: Vec<[f64; ROBOT_FEATURE_DIM]>,
    /// `true` for robots that may be selected.
    pub robot_available: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRecord {
    pub index: usize,
    pub clock: f64,
    pub task_id: TaskId,
    pub task_slot: usize,
    pub robot_id: RobotId,
    pub observation: ObservationTensor,
    pub outcome: StepOutcome,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeLog {
    pub decisions: Vec<DecisionRecord>,
    pub sum_trto: f64,
    pub sum_ttgt: f64,
    pub total_cost: f64,
    /// Time of the last delivery.
    pub span: f64,
    pub min_separation: f64,
    pub alpha: f64,
}

impl EpisodeLog {
    fn push(&mut self, record: DecisionRecord) {
        self.sum_trto += record.outcome.trto;
        self.sum_ttgt += record.outcome.ttgt;
        self.total_cost = self.sum_trto + self.alpha * self.sum_ttgt;
        self.decisions.push(record);
    }

    pub fn total_reward(&self) -> f64 {
        -self.total_cost
    }

    /// Line-delimited export: one JSON object per decision, then a summary object.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for d in &self.decisions {
            let v = serde_json::json!({
                "decision": d.index,
                "clock": d.clock,
                "task": d.task_id,
                "robot": d.robot_id,
                "trto": d.outcome.trto,
                "ttgt": d.outcome.ttgt,
                "reward": d.outcome.reward,
            });
            out.push_str(&v.to_string());
            out.push('\n');
        }
        let summary = serde_json::json!({
            "summary": true,
            "total_cost": self.total_cost,
            "sum_trto": self.sum_trto,
            "sum_ttgt": self.sum_ttgt,
            "span": self.span,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

/// Anything that can pick a (task, robot) pair from the current world.
pub trait DecisionPolicy {
    fn decide(&mut self, world: &World) -> Result<Decision>;

    /// Called with the outcome of the decision just returned.
    fn record_outcome(&mut self, _outcome: &StepOutcome) {}

    /// Called once after the last decision of an episode.
    fn end_episode(&mut self) {}
}

pub struct World {
    cfg: WorldConfig,
    gain: LqrGain,
    docks: Vec<Point>,
    steps: u64,
    clock: f64,
    upcoming: VecDeque<Task>,
    buffer: VecDeque<Task>,
    la: Vec<Task>,
    active: BTreeMap<TaskId, Task>,
    robots: Vec<Robot>,
    total_tasks: usize,
    completed: usize,
    in_flight: usize,
    next_duplicate_id: TaskId,
    log: EpisodeLog,
    trace: Option<Vec<TrajectoryRecord>>,
}

impl World {
    pub fn new(cfg: WorldConfig, tasks: Vec<Task>) -> Result<Self> {
        cfg.validate()?;
        let gain = LqrGain::from_config(&cfg)?;
        let mut tasks = tasks;
        for t in &tasks {
            t.check_bounds(cfg.width, cfg.height)?;
            if t.is_duplicate {
                return Err(invalid("datasets cannot contain duplicates"));
            }
        }
        sort_tasks(&mut tasks);
        let next_duplicate_id = tasks.iter().map(|t| t.id + 1).max().unwrap_or(0);
        let robots = initial_robots(&cfg);
        let log = EpisodeLog {
            min_separation: f64::INFINITY,
            alpha: cfg.alpha,
            ..Default::default()
        };
        let mut world = Self {
            docks: cfg.docks(),
            gain,
            steps: 0,
            clock: 0.0,
            total_tasks: tasks.len(),
            upcoming: tasks.into(),
            buffer: VecDeque::new(),
            la: Vec::new(),
            active: BTreeMap::new(),
            robots,
            completed: 0,
            in_flight: 0,
            next_duplicate_id,
            log,
            trace: None,
            cfg,
        };
        world.log.min_separation = world.fleet().min_pairwise_distance();
        world.refresh_robots();
        Ok(world)
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn gain(&self) -> &LqrGain {
        &self.gain
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn la(&self) -> &[Task] {
        &self.la
    }

    pub fn buffer(&self) -> impl Iterator<Item = &Task> {
        self.buffer.iter()
    }

    pub fn robots(&self) -> &[Robot] {
        &self.robots
    }

    pub fn robot(&self, id: RobotId) -> Result<&Robot> {
        self.robots.get(id).ok_or_else(|| invalid(format!("no robot {id}")))
    }

    pub fn docks(&self) -> &[Point] {
        &self.docks
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight
    }

    pub fn completed(&self) -> usize {
        self.completed
    }

    pub fn is_done(&self) -> bool {
        self.completed == self.total_tasks
    }

    pub fn available_robots(&self) -> impl Iterator<Item = &Robot> {
        self.robots.iter().filter(|r| !r.state.failed)
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<TrajectoryRecord> {
        self.trace.take().unwrap_or_default()
    }

    /// Test and scenario hook: places a robot at a given state.
    pub fn set_robot(&mut self, id: RobotId, position: Point, velocity: Point, soc: f64) -> Result<()> {
        if !self.cfg.contains(&position) || !(0.0..=1.0).contains(&soc) {
            return Err(invalid("robot state out of range"));
        }
        let r = self.robots.get_mut(id).ok_or_else(|| invalid(format!("no robot {id}")))?;
        r.state.position = position;
        r.state.velocity = velocity;
        r.state.soc = soc;
        self.refresh_robots();
        Ok(())
    }

    pub fn fleet(&self) -> FleetSnapshot {
        FleetSnapshot {
            robots: self
                .robots
                .iter()
                .map(|r| Kinematics {
                    id: r.state.id,
                    position: r.state.position,
                    velocity: r.state.velocity,
                })
                .collect(),
        }
    }

    fn nearest_dock(&self, p: &Point) -> usize {
        let mut best = 0;
        for (i, d) in self.docks.iter().enumerate() {
            if (d - p).norm() < (self.docks[best] - p).norm() {
                best = i;
            }
        }
        best
    }

    /// Projects a robot's itinerary forward at nominal speed.
    pub fn project(&self, robot: &Robot) -> Projection {
        let v = self.cfg.v_max;
        let rho = self.cfg.discharge_rate;
        let mut t = self.clock;
        let mut pos = robot.state.position;
        let mut soc = robot.state.soc;
        let mut dock_at = None;
        for leg in &robot.legs {
            match leg.kind {
                LegKind::ToOrigin(_) | LegKind::ToDestination(_) => {
                    let dt = (leg.target - pos).norm() / v;
                    t += dt;
                    soc -= rho * dt;
                    pos = leg.target;
                }
                LegKind::ToDock => {
                    let dock = leg.dock.unwrap_or_else(|| self.nearest_dock(&pos));
                    let target = self.docks[dock];
                    let dt = (target - pos).norm() / v;
                    t += dt;
                    soc -= rho * dt;
                    pos = target;
                    dock_at = Some(target);
                }
                LegKind::Charge => {
                    let dock = leg.dock.map(|d| self.docks[d]).or(dock_at).unwrap_or(pos);
                    let travel = (dock - pos).norm() / v;
                    t += travel + (1.0 - soc).max(0.0) / self.cfg.charge_rate();
                    pos = dock;
                    soc = 1.0;
                }
            }
        }
        Projection {
            free_at: t.max(self.clock),
            position: pos,
            soc: soc.max(0.0),
        }
    }

    /// Works out the timeline of serving `task` with robot `robot_id` after its current
    /// commitments, including a charging detour when the projected charge is low.
    pub fn plan(&self, robot_id: RobotId, task: &Task) -> Result<AssignmentPlan> {
        let robot = self.robot(robot_id)?;
        if robot.state.failed {
            return Err(Error::InvalidDecision(format!("robot {robot_id} is masked")));
        }
        let v = self.cfg.v_max;
        let rho = self.cfg.discharge_rate;
        let proj = self.project(robot);
        let (mut t, mut pos, mut soc) = (proj.free_at, proj.position, proj.soc);
        let charge_first = soc < self.cfg.charge_threshold;
        if charge_first {
            let dock = self.docks[self.nearest_dock(&pos)];
            let travel = (dock - pos).norm() / v;
            soc -= rho * travel;
            t += travel + (1.0 - soc).max(0.0) / self.cfg.charge_rate();
            pos = dock;
            soc = 1.0;
        }
        let trto = (task.origin - pos).norm();
        let travel = (trto + task.length()) / v;
        let soc_at_completion = soc - rho * travel;
        if soc_at_completion < 0.0 {
            return Err(Error::InvalidDecision(format!(
                "robot {robot_id} would run flat serving task {}",
                task.id
            )));
        }
        Ok(AssignmentPlan {
            robot_id,
            charge_first,
            start: pos,
            t_exec: t,
            trto,
            completion: t + travel,
            soc_at_completion,
        })
    }

    /// A decision is due while the look-ahead holds work and fewer tasks are in
    /// flight than there are usable robots.
    pub fn decision_pending(&self) -> bool {
        !self.la.is_empty() && self.in_flight < self.available_robots().count()
    }

    /// Moves arrived tasks into the buffer and refills the look-ahead queue.
    pub fn ingest_arrivals(&mut self) {
        while let Some(t) = self.upcoming.front() {
            if t.arrival_time > self.clock {
                break;
            }
            let t = self.upcoming.pop_front().expect("front exists");
            self.buffer.push_back(t);
        }
        self.refill_la();
    }

    fn refill_la(&mut self) {
        let la_len = self.cfg.la_len;
        while !self.buffer.is_empty() {
            if self.la.len() < la_len {
                let mut t = self.buffer.pop_front().expect("non-empty");
                t.la_time = Some(self.clock);
                t.status = TaskStatus::InLa;
                self.la.push(t);
            } else if let Some(pos) = self.la.iter().rposition(|t| t.is_duplicate) {
                // Padding copies give way to real work.
                self.la.remove(pos);
            } else {
                break;
            }
        }
        if self.buffer.is_empty() && !self.la.is_empty() {
            while self.la.len() < la_len {
                let oldest = self
                    .la
                    .iter()
                    .filter(|t| !t.is_duplicate)
                    .min_by(|a, b| a.t_stamp().total_cmp(&b.t_stamp()).then(a.id.cmp(&b.id)))
                    .expect("look-ahead holds its sources");
                let dup = oldest.duplicate(self.next_duplicate_id);
                self.next_duplicate_id += 1;
                self.la.push(dup);
            }
        }
    }

    pub fn observation(&self) -> ObservationTensor {
        ObservationTensor {
            clock: self.clock,
            tasks: self.la.iter().map(|t| task_feature(t).to_array()).collect(),
            robots: self
                .robots
                .iter()
                .map(|r| robot_feature(&r.state, self.clock).to_array())
                .collect(),
            robot_available: self.robots.iter().map(|r| !r.state.failed).collect(),
        }
    }

    pub fn apply_decision(&mut self, d: Decision) -> Result<StepOutcome> {
        let picked = self
            .la
            .get(d.task_index)
            .ok_or_else(|| Error::InvalidDecision(format!("task index {} out of range", d.task_index)))?;
        let family = picked.family();
        let task_id = picked.id;
        let source = self
            .la
            .iter()
            .find(|t| t.id == family)
            .cloned()
            .ok_or_else(|| Error::InvalidDecision(format!("source of task {task_id} is not queued")))?;
        let plan = self.plan(d.robot_id, &source)?;

        let observation = self.observation();
        self.la.retain(|t| t.family() != family);

        let t_stamp = source.t_stamp();
        let ttgt = plan.t_exec - t_stamp;
        debug_assert!(ttgt >= 0.0);
        let outcome = StepOutcome {
            reward: -plan.trto - self.cfg.alpha * ttgt,
            trto: plan.trto,
            ttgt,
            t_exec: plan.t_exec,
            t_stamp,
        };

        let robot = &mut self.robots[d.robot_id];
        if plan.charge_first {
            robot.legs.extend(Leg::dock_legs());
        }
        robot.legs.push_back(Leg::task(LegKind::ToOrigin(source.id), source.origin));
        robot.legs.push_back(Leg::task(LegKind::ToDestination(source.id), source.destination));

        let mut source = source;
        source.set_status(TaskStatus::Assigned)?;
        self.active.insert(source.id, source);
        self.in_flight += 1;

        let index = self.log.decisions.len();
        self.log.push(DecisionRecord {
            index,
            clock: self.clock,
            task_id: family,
            task_slot: d.task_index,
            robot_id: d.robot_id,
            observation,
            outcome,
        });
        self.refill_la();
        self.refresh_robots();
        Ok(outcome)
    }

    fn reserved_docks(&self) -> Vec<bool> {
        let mut reserved = vec![false; self.docks.len()];
        for r in &self.robots {
            if let Some(Leg { kind: LegKind::ToDock | LegKind::Charge, dock: Some(d), .. }) = r.legs.front() {
                reserved[*d] = true;
            }
        }
        reserved
    }

    fn leg_complete(&self, i: usize) -> bool {
        let r = &self.robots[i];
        let Some(leg) = r.legs.front() else { return false };
        match leg.kind {
            LegKind::Charge => r.state.soc >= 1.0,
            LegKind::ToDock if leg.dock.is_none() => false,
            _ => {
                let dist = (r.state.position - leg.target).norm();
                let slow = r.state.velocity.norm() < self.cfg.arrival_speed;
                if dist < self.cfg.arrival_radius && slow {
                    return true;
                }
                // Another robot parked on the target keeps us out of the arrival radius.
                slow && dist < self.cfg.d_min
                    && self.robots.iter().enumerate().any(|(j, o)| {
                        j != i && (o.state.position - r.state.position).norm() < self.cfg.d_min
                    })
            }
        }
    }

    fn complete_leg(&mut self, i: usize) -> Result<()> {
        let leg = self.robots[i].legs.pop_front().expect("leg exists");
        match leg.kind {
            LegKind::ToOrigin(id) => {
                if let Some(t) = self.active.get_mut(&id) {
                    t.set_status(TaskStatus::Executing)?;
                }
            }
            LegKind::ToDestination(id) => {
                let mut t = self
                    .active
                    .remove(&id)
                    .ok_or_else(|| invalid(format!("delivered unknown task {id}")))?;
                t.set_status(TaskStatus::Done)?;
                self.completed += 1;
                self.in_flight -= 1;
                self.log.span = self.clock;
                let robot = &mut self.robots[i];
                let next_is_dock = matches!(robot.legs.front(), Some(Leg { kind: LegKind::ToDock, .. }));
                if robot.state.soc < self.cfg.charge_threshold && !next_is_dock {
                    for leg in Leg::dock_legs().into_iter().rev() {
                        robot.legs.push_front(leg);
                    }
                }
            }
            LegKind::ToDock => {
                if let Some(next) = self.robots[i].legs.front_mut() {
                    if next.kind == LegKind::Charge {
                        next.dock = leg.dock;
                        next.target = leg.target;
                    }
                }
            }
            LegKind::Charge => {}
        }
        Ok(())
    }

    /// Integrates one time step for the whole fleet and processes leg transitions.
    pub fn advance(&mut self) -> Result<()> {
        let fleet = self.fleet();
        let forces = apf_forces(&fleet, self.cfg.d_min, self.cfg.k_rep)?;
        let commands: Vec<_> = self
            .robots
            .iter()
            .zip(&fleet.robots)
            .zip(&forces)
            .map(|((r, k), f)| {
                let target = match r.legs.front() {
                    Some(Leg { kind: LegKind::ToDock, dock: None, .. }) | None => None,
                    Some(leg) => Some(leg.target),
                };
                control_with_force(k, target, *f, &self.gain, &self.cfg)
            })
            .collect();
        let next = step_dynamics(&fleet, &commands, &self.cfg);

        self.steps += 1;
        self.clock = self.steps as f64 * self.cfg.dt;
        let dt = self.cfg.dt;
        for (r, k) in self.robots.iter_mut().zip(&next.robots) {
            let moving = r.is_moving();
            r.state.position = k.position;
            r.state.velocity = k.velocity;
            if moving {
                r.state.soc = (r.state.soc - self.cfg.discharge_rate * dt).max(0.0);
            } else if let Some(Leg { kind: LegKind::Charge, target, .. }) = r.legs.front() {
                if (r.state.position - target).norm() <= self.cfg.dock_radius {
                    r.state.soc = (r.state.soc + self.cfg.charge_rate() * dt).min(1.0);
                }
            }
        }
        self.log.min_separation = self.log.min_separation.min(next.min_pairwise_distance());
        if let Some(trace) = self.trace.as_mut() {
            for (k, c) in next.robots.iter().zip(&commands) {
                trace.push(TrajectoryRecord {
                    t: self.clock,
                    id: k.id,
                    position: k.position,
                    velocity: k.velocity,
                    u: c.u,
                });
            }
        }

        for i in 0..self.robots.len() {
            while self.leg_complete(i) {
                self.complete_leg(i)?;
            }
            let threshold = self.cfg.charge_threshold;
            let robot = &mut self.robots[i];
            if robot.legs.is_empty() && robot.state.soc < threshold && !robot.state.failed {
                robot.legs.extend(Leg::dock_legs());
            }
            if self.robots[i].waiting_for_dock() {
                let reserved = self.reserved_docks();
                let pos = self.robots[i].state.position;
                let free = (0..self.docks.len())
                    .filter(|d| !reserved[*d])
                    .min_by(|a, b| {
                        (self.docks[*a] - pos)
                            .norm()
                            .total_cmp(&(self.docks[*b] - pos).norm())
                            .then(a.cmp(b))
                    });
                if let Some(d) = free {
                    let leg = self.robots[i].legs.front_mut().expect("dock leg");
                    leg.dock = Some(d);
                    leg.target = self.docks[d];
                }
            }
        }
        self.refresh_robots();
        Ok(())
    }

    fn refresh_robots(&mut self) {
        let projections: Vec<_> = self.robots.iter().map(|r| self.project(r)).collect();
        for (r, p) in self.robots.iter_mut().zip(projections) {
            r.state.phase = r.legs.front().map_or(Phase::Idle, Leg::phase);
            r.state.free_at = p.free_at;
            r.state.free_position = p.position;
            r.state.assignment = r.legs.iter().find_map(|l| match l.kind {
                LegKind::ToOrigin(id) | LegKind::ToDestination(id) => Some(id),
                _ => None,
            });
        }
    }

    /// Runs the decide/advance loop until every dataset task has been delivered.
    pub fn run(mut self, policy: &mut dyn DecisionPolicy) -> Result<EpisodeLog> {
        self.run_in_place(policy)?;
        Ok(self.log)
    }

    /// Like [`World::run`] but keeps the world for inspection.
    pub fn run_in_place(&mut self, policy: &mut dyn DecisionPolicy) -> Result<()> {
        loop {
            self.ingest_arrivals();
            while self.decision_pending() {
                let d = policy.decide(self)?;
                let outcome = self.apply_decision(d)?;
                policy.record_outcome(&outcome);
            }
            if self.is_done() {
                break;
            }
            if self.clock > self.cfg.horizon {
                return Err(Error::Livelock {
                    horizon: self.cfg.horizon,
                    clock: self.clock,
                    outstanding: self.total_tasks - self.completed,
                });
            }
            self.advance()?;
        }
        policy.end_episode();
        Ok(())
    }
}

fn initial_robots(cfg: &WorldConfig) -> Vec<Robot> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let margin = 1.0f64.min(cfg.width / 4.0).min(cfg.height / 4.0);
    let mut placed: Vec<Point> = Vec::with_capacity(cfg.n_robots);
    let mut robots = Vec::with_capacity(cfg.n_robots);
    for id in 0..cfg.n_robots {
        let mut p = Point::zeros();
        for attempt in 0..10_000 {
            p = Point::new(
                rng.random_range(margin..=cfg.width - margin),
                rng.random_range(margin..=cfg.height - margin),
            );
            let clearance = if attempt < 5_000 { cfg.d_min } else { cfg.collision_radius };
            if placed.iter().all(|q| (q - p).norm() >= clearance) {
                break;
            }
        }
        placed.push(p);
        let soc = if cfg.initial_soc_max > cfg.initial_soc_min {
            rng.random_range(cfg.initial_soc_min..cfg.initial_soc_max)
        } else {
            cfg.initial_soc_max
        };
        let mut state = RobotState::new(id, p, soc);
        state.failed = cfg.failed_robots.contains(&id);
        robots.push(Robot {
            state,
            legs: VecDeque::new(),
        });
    }
    robots
}

pub fn run_episode(tasks: Vec<Task>, policy: &mut dyn DecisionPolicy, cfg: &WorldConfig) -> Result<EpisodeLog> {
    World::new(cfg.clone(), tasks)?.run(policy)
}
