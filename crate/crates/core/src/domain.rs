//! Core value types shared by the simulator, the agents and the baselines.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point (or displacement) in warehouse units.
pub type Point = Vector2<f64>;

/// Remaining-time value reported for robots that are masked as failed.
pub const R_MASK: f64 = 1e9;

pub const TASK_FEATURE_DIM: usize = 6;
pub const ROBOT_FEATURE_DIM: usize = 4;

pub type TaskId = u64;
pub type RobotId = usize;

/// Euclidean distance between two points.
pub fn distance(a: &Point, b: &Point) -> Result<f64> {
    if !(a.x.is_finite() && a.y.is_finite() && b.x.is_finite() && b.y.is_finite()) {
        return Err(invalid(format!("non-finite point in distance: {a:?}, {b:?}")));
    }
    Ok((a - b).norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskStatus {
    Pending,
    InLa,
    Assigned,
    Executing,
    Done,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub origin: Point,
    pub destination: Point,
    pub arrival_time: f64,
    /// Time the task (or, for a duplicate, its source) entered the look-ahead queue.
    pub la_time: Option<f64>,
    pub status: TaskStatus,
    pub is_duplicate: bool,
    pub source_id: Option<TaskId>,
}

impl Task {
    pub fn new(id: TaskId, origin: Point, destination: Point, arrival_time: f64) -> Result<Self> {
        for v in [origin.x, origin.y, destination.x, destination.y, arrival_time] {
            if !v.is_finite() {
                return Err(invalid(format!("task {id} has a non-finite field")));
            }
        }
        if arrival_time < 0.0 {
            return Err(invalid(format!("task {id} arrives at negative time {arrival_time}")));
        }
        Ok(Self {
            id,
            origin,
            destination,
            arrival_time,
            la_time: None,
            status: TaskStatus::Pending,
            is_duplicate: false,
            source_id: None,
        })
    }

    /// Id shared by a task and all of its duplicates.
    pub fn family(&self) -> TaskId {
        self.source_id.unwrap_or(self.id)
    }

    /// The timestamp used for the waiting-time term: look-ahead entry when known,
    /// otherwise the dataset arrival time.
    pub fn t_stamp(&self) -> f64 {
        self.la_time.unwrap_or(self.arrival_time)
    }

    pub fn length(&self) -> f64 {
        (self.destination - self.origin).norm()
    }

    pub fn duplicate(&self, id: TaskId) -> Task {
        Task {
            id,
            is_duplicate: true,
            source_id: Some(self.family()),
            ..self.clone()
        }
    }

    pub fn set_status(&mut self, next: TaskStatus) -> Result<()> {
        if next < self.status {
            return Err(invalid(format!(
                "task {} cannot move from {:?} back to {:?}",
                self.id, self.status, next
            )));
        }
        if self.is_duplicate && next >= TaskStatus::Executing {
            return Err(invalid(format!("duplicate task {} cannot execute on its own", self.id)));
        }
        self.status = next;
        Ok(())
    }

    pub fn check_bounds(&self, width: f64, height: f64) -> Result<()> {
        for p in [&self.origin, &self.destination] {
            if p.x < 0.0 || p.x > width || p.y < 0.0 || p.y > height {
                return Err(invalid(format!(
                    "task {} has point ({}, {}) outside [0, {width}]x[0, {height}]",
                    self.id, p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskFeature {
    pub origin: Point,
    pub destination: Point,
    pub length: f64,
    pub stamp: f64,
}

impl TaskFeature {
    pub fn to_array(&self) -> [f64; TASK_FEATURE_DIM] {
        [
            self.origin.x,
            self.origin.y,
            self.destination.x,
            self.destination.y,
            self.length,
            self.stamp,
        ]
    }
}

pub fn task_feature(t: &Task) -> TaskFeature {
    TaskFeature {
        origin: t.origin,
        destination: t.destination,
        length: t.length(),
        stamp: t.t_stamp(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    ToOrigin,
    ToDestination,
    ToDock,
    Charging,
}

impl Phase {
    pub fn is_moving(self) -> bool {
        matches!(self, Phase::ToOrigin | Phase::ToDestination | Phase::ToDock)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Idle => "idle",
            Phase::ToOrigin => "to-origin",
            Phase::ToDestination => "to-destination",
            Phase::ToDock => "to-dock",
            Phase::Charging => "charging",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotState {
    pub id: RobotId,
    pub position: Point,
    pub velocity: Point,
    /// State of charge in [0, 1].
    pub soc: f64,
    /// Absolute time at which all current commitments are projected to end.
    pub free_at: f64,
    /// Projected position once current commitments end.
    pub free_position: Point,
    pub assignment: Option<TaskId>,
    pub phase: Phase,
    pub failed: bool,
}

impl RobotState {
    pub fn new(id: RobotId, position: Point, soc: f64) -> Self {
        Self {
            id,
            position,
            velocity: Point::zeros(),
            soc,
            free_at: 0.0,
            free_position: position,
            assignment: None,
            phase: Phase::Idle,
            failed: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotFeature {
    pub position: Point,
    pub remaining: f64,
    pub soc: f64,
}

impl RobotFeature {
    pub fn to_array(&self) -> [f64; ROBOT_FEATURE_DIM] {
        [self.position.x, self.position.y, self.remaining, self.soc]
    }
}

pub fn robot_feature(rs: &RobotState, clock: f64) -> RobotFeature {
    let remaining = if rs.failed {
        R_MASK
    } else {
        (rs.free_at - clock).max(0.0)
    };
    RobotFeature {
        position: rs.free_position,
        remaining,
        soc: rs.soc,
    }
}

/// Simulation parameters. Every field has a default; see [`WorldConfig::default`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub width: f64,
    pub height: f64,
    pub n_robots: usize,
    pub la_len: usize,
    pub episode_tasks: usize,
    pub v_max: f64,
    pub u_max: f64,
    pub dt: f64,
    pub charge_threshold: f64,
    /// SOC fraction lost per time unit of motion.
    pub discharge_rate: f64,
    /// SOC fraction gained per time unit at a dock; 16x the discharge rate when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charge_rate: Option<f64>,
    pub dock_positions: Vec<[f64; 2]>,
    pub dock_radius: f64,
    pub alpha: f64,
    pub d_min: f64,
    pub k_rep: f64,
    pub apf_force_cap: f64,
    pub q_diag: [f64; 4],
    pub r_diag: [f64; 2],
    pub arrival_radius: f64,
    pub arrival_speed: f64,
    pub collision_radius: f64,
    pub initial_soc_min: f64,
    pub initial_soc_max: f64,
    pub failed_robots: Vec<RobotId>,
    pub horizon: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width: 64.0,
            height: 64.0,
            n_robots: 10,
            la_len: 5,
            episode_tasks: 505,
            v_max: 2.0,
            u_max: 4.0,
            dt: 0.1,
            charge_threshold: 0.30,
            discharge_rate: 0.0005,
            charge_rate: None,
            dock_positions: vec![[2.0, 2.0], [62.0, 2.0], [2.0, 62.0], [62.0, 62.0]],
            dock_radius: 1.0,
            alpha: 1.0,
            d_min: 2.0,
            k_rep: 200.0,
            apf_force_cap: 1e3,
            q_diag: [10.0, 10.0, 1.0, 1.0],
            r_diag: [1.0, 1.0],
            arrival_radius: 0.3,
            arrival_speed: 0.1,
            collision_radius: 0.5,
            initial_soc_min: 0.4,
            initial_soc_max: 1.0,
            failed_robots: Vec::new(),
            horizon: 50_000.0,
            seed: 0,
        }
    }
}

impl WorldConfig {
    pub fn charge_rate(&self) -> f64 {
        self.charge_rate.unwrap_or(16.0 * self.discharge_rate)
    }

    pub fn docks(&self) -> Vec<Point> {
        self.dock_positions.iter().map(|d| Point::new(d[0], d[1])).collect()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("v_max", self.v_max),
            ("u_max", self.u_max),
            ("dt", self.dt),
            ("d_min", self.d_min),
            ("arrival_radius", self.arrival_radius),
            ("arrival_speed", self.arrival_speed),
            ("dock_radius", self.dock_radius),
            ("apf_force_cap", self.apf_force_cap),
            ("horizon", self.horizon),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.la_len < 1 {
            return Err(Error::Config("la_len must be at least 1".into()));
        }
        if self.n_robots < 1 {
            return Err(Error::Config("n_robots must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.charge_threshold) {
            return Err(Error::Config(format!(
                "charge_threshold must lie in [0, 1), got {}",
                self.charge_threshold
            )));
        }
        if self.discharge_rate < 0.0 || self.charge_rate() <= 0.0 {
            return Err(Error::Config("charge/discharge rates must be non-negative".into()));
        }
        if self.alpha < 0.0 || self.k_rep < 0.0 {
            return Err(Error::Config("alpha and k_rep must be non-negative".into()));
        }
        if self.dock_positions.is_empty() {
            return Err(Error::Config("at least one dock is required".into()));
        }
        for d in self.docks() {
            if !self.contains(&d) {
                return Err(Error::Config(format!("dock ({}, {}) lies outside the warehouse", d.x, d.y)));
            }
        }
        if !(0.0 <= self.initial_soc_min
            && self.initial_soc_min <= self.initial_soc_max
            && self.initial_soc_max <= 1.0)
        {
            return Err(Error::Config("initial SOC range must satisfy 0 <= min <= max <= 1".into()));
        }
        if self.q_diag.iter().any(|q| *q < 0.0) || self.r_diag.iter().any(|r| *r <= 0.0) {
            return Err(Error::Config("q_diag must be >= 0 and r_diag > 0".into()));
        }
        if let Some(&bad) = self.failed_robots.iter().find(|&&id| id >= self.n_robots) {
            return Err(Error::Config(format!("failed robot id {bad} out of range")));
        }
        if self.failed_robots.len() >= self.n_robots {
            return Err(Error::Config("every robot is marked failed".into()));
        }
        Ok(())
    }
}

/// One line of a dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: TaskId,
    pub ox: f64,
    pub oy: f64,
    pub dx: f64,
    pub dy: f64,
    pub t: f64,
}

impl From<&Task> for TaskRecord {
    fn from(t: &Task) -> Self {
        Self {
            id: t.id,
            ox: t.origin.x,
            oy: t.origin.y,
            dx: t.destination.x,
            dy: t.destination.y,
            t: t.arrival_time,
        }
    }
}

impl TaskRecord {
    pub fn into_task(self) -> Result<Task> {
        Task::new(
            self.id,
            Point::new(self.ox, self.oy),
            Point::new(self.dx, self.dy),
            self.t,
        )
    }
}

/// Sorts tasks by arrival time, ties broken by id.
pub fn sort_tasks(tasks: &mut [Task]) {
    tasks.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time).then(a.id.cmp(&b.id)));
}

pub fn write_dataset<W: Write>(mut out: W, tasks: &[Task]) -> Result<()> {
    for t in tasks {
        let line = serde_json::to_string(&TaskRecord::from(t)).map_err(|e| invalid(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<Task>> {
    let mut tasks: Vec<Task> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let rec: TaskRecord = serde_json::from_str(trimmed).map_err(|e| Error::Dataset {
            line: i + 1,
            message: e.to_string(),
        })?;
        let task = rec.into_task().map_err(|e| Error::Dataset {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(task.id) {
            return Err(Error::Dataset {
                line: i + 1,
                message: format!("duplicate task id {}", task.id),
            });
        }
        if let Some(prev) = tasks.last() {
            if (prev.arrival_time, prev.id) > (task.arrival_time, task.id) {
                return Err(Error::Dataset {
                    line: i + 1,
                    message: "records are not sorted by (t, id)".into(),
                });
            }
        }
        tasks.push(task);
    }
    Ok(tasks)
}

pub fn load_dataset(path: &Path) -> Result<Vec<Task>> {
    let file = std::fs::File::open(path)?;
    read_dataset(std::io::BufReader::new(file))
}

pub fn save_dataset(path: &Path, tasks: &[Task]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    write_dataset(&mut out, tasks)?;
    out.flush()?;
    Ok(())
}
