//! Dataset generation, configuration files, batch evaluation and reports.

use std::io::{BufRead, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{Bfo, Fifo};
use crate::domain::{sort_tasks, Point, Task, WorldConfig};
use crate::env::{run_episode, EpisodeLog};
use crate::error::{invalid, Error, Result};
use crate::policy::{MrtAgent, PolicyNet, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalDist {
    Gaussian { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
}

impl ArrivalDist {
    pub const GAUSSIAN: Self = Self::Gaussian { mean: 600.0, std: 50.0 };
    pub const UNIFORM: Self = Self::Uniform { low: 0.0, high: 1000.0 };

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::GAUSSIAN),
            "uniform" => Ok(Self::UNIFORM),
            other => Err(invalid(format!("unknown arrival distribution {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetSpec {
    pub n_tasks: usize,
    pub arrival: ArrivalDist,
    pub width: f64,
    pub height: f64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(n_tasks: usize, arrival: ArrivalDist, seed: u64) -> Self {
        Self { n_tasks, arrival, width: 64.0, height: 64.0, seed }
    }
}

/// Draws a dataset; ids follow arrival order.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Vec<Task>> {
    if !(spec.width > 0.0 && spec.height > 0.0) {
        return Err(invalid("warehouse dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = match spec.arrival {
        ArrivalDist::Gaussian { mean, std } => {
            Some(Normal::new(mean, std).map_err(|e| invalid(e.to_string()))?)
        }
        ArrivalDist::Uniform { low, high } => {
            if !(low >= 0.0 && high > low) {
                return Err(invalid("uniform arrival bounds must satisfy 0 <= low < high"));
            }
            None
        }
    };
    let mut raw = Vec::with_capacity(spec.n_tasks);
    for _ in 0..spec.n_tasks {
        let t = match (spec.arrival, &normal) {
            (ArrivalDist::Gaussian { .. }, Some(n)) => loop {
                let t = n.sample(&mut rng);
                if t >= 0.0 {
                    break t;
                }
            },
            (ArrivalDist::Uniform { low, high }, _) => rng.random_range(low..high),
            _ => unreachable!(),
        };
        let origin = Point::new(rng.random_range(0.0..=spec.width), rng.random_range(0.0..=spec.height));
        let dest = Point::new(rng.random_range(0.0..=spec.width), rng.random_range(0.0..=spec.height));
        raw.push((t, origin, dest));
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tasks = raw
        .into_iter()
        .enumerate()
        .map(|(i, (t, o, d))| Task::new(i as u64, o, d, t))
        .collect::<Result<Vec<_>>>()?;
    sort_tasks(&mut tasks);
    Ok(tasks)
}

/// World and training parameters read from one flat key-value file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub train: TrainConfig,
}

fn keys_of<T: Serialize>(value: &T) -> Result<Vec<String>> {
    match toml::Value::try_from(value).map_err(|e| Error::Config(e.to_string()))? {
        toml::Value::Table(t) => Ok(t.keys().cloned().collect()),
        _ => Err(Error::Config("expected a table".into())),
    }
}

impl ExperimentConfig {
    /// Parses flat TOML; every key must name a world or training field.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut world_keys = keys_of(&WorldConfig::default())?;
        world_keys.push("charge_rate".into());
        let train_keys = keys_of(&TrainConfig::default())?;
        let mut world = toml::Table::new();
        let mut train = toml::Table::new();
        for (k, v) in table {
            if world_keys.contains(&k) {
                world.insert(k, v);
            } else if train_keys.contains(&k) {
                train.insert(k, v);
            } else {
                return Err(Error::Config(format!("unknown key {k:?}")));
            }
        }
        let world: WorldConfig = world.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let train: TrainConfig = train.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        world.validate()?;
        train.validate()?;
        Ok(Self { world, train })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        let mut table = toml::Table::try_from(&self.world).map_err(|e| Error::Config(e.to_string()))?;
        let train = toml::Table::try_from(&self.train).map_err(|e| Error::Config(e.to_string()))?;
        table.extend(train);
        toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))
    }
}

/// A dispatcher under evaluation.
#[derive(Clone, Debug)]
pub enum PolicyKind {
    MrtAgent { planner: PolicyNet, executor: PolicyNet, greedy: bool },
    Bfo,
    Fifo,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MrtAgent { .. } => "mrtagent",
            Self::Bfo => "bfo",
            Self::Fifo => "fifo",
        }
    }

    /// Sampling agents vary with the evaluation seed; greedy agents and baselines do not.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Self::MrtAgent { greedy: false, .. })
    }

    pub fn run(&self, tasks: Vec<Task>, world: &WorldConfig, seed: u64) -> Result<EpisodeLog> {
        match self {
            Self::MrtAgent { planner, executor, greedy } => {
                let mut agent = MrtAgent::new(planner, executor, seed).greedy(*greedy);
                run_episode(tasks, &mut agent, world)
            }
            Self::Bfo => run_episode(tasks, &mut Bfo, world),
            Self::Fifo => run_episode(tasks, &mut Fifo, world),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NamedDataset {
    pub name: String,
    pub tasks: Vec<Task>,
}

/// One episode of one policy on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: String,
    pub dataset: String,
    pub seed: u64,
    pub stochastic: bool,
    pub total_cost: f64,
    pub sum_trto: f64,
    pub sum_ttgt: f64,
    pub span: f64,
    pub decisions: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub policy: String,
    pub dataset: String,
    pub runs: usize,
    pub cost_mean: f64,
    /// Only set for stochastic policies.
    pub cost_std: Option<f64>,
    pub trto_mean: f64,
    pub ttgt_mean: f64,
}

impl ReportRow {
    /// Cost in thousands, e.g. `13.49 ± 0.44` or `13.49`.
    pub fn cost_cell(&self) -> String {
        match self.cost_std {
            Some(s) => format!("{:.2} ± {:.2}", self.cost_mean / 1e3, s / 1e3),
            None => format!("{:.2}", self.cost_mean / 1e3),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentReport {
    pub runs: Vec<RunRecord>,
    pub runtime: Duration,
}

const CSV_HEADER: &str = "policy,dataset,seed,stochastic,total_cost,sum_trto,sum_ttgt,span,decisions";

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

impl ExperimentReport {
    /// Aggregates runs per (policy, dataset), in first-seen order.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut keys: Vec<(&str, &str)> = Vec::new();
        for r in &self.runs {
            if !keys.contains(&(r.policy.as_str(), r.dataset.as_str())) {
                keys.push((&r.policy, &r.dataset));
            }
        }
        keys.into_iter()
            .map(|(p, d)| {
                let runs: Vec<&RunRecord> =
                    self.runs.iter().filter(|r| r.policy == p && r.dataset == d).collect();
                let cost: Vec<f64> = runs.iter().map(|r| r.total_cost).collect();
                let trto: Vec<f64> = runs.iter().map(|r| r.sum_trto).collect();
                let ttgt: Vec<f64> = runs.iter().map(|r| r.sum_ttgt).collect();
                ReportRow {
                    policy: p.to_string(),
                    dataset: d.to_string(),
                    runs: runs.len(),
                    cost_mean: mean(&cost),
                    cost_std: runs[0].stochastic.then(|| sample_std(&cost)),
                    trto_mean: mean(&trto),
                    ttgt_mean: mean(&ttgt),
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.runs {
            if r.policy.contains(',') || r.dataset.contains(',') {
                return Err(Error::Report(format!("name {:?} contains a comma", r.dataset)));
            }
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.policy, r.dataset, r.seed, r.stochastic, r.total_cost, r.sum_trto, r.sum_ttgt, r.span, r.decisions
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != CSV_HEADER {
            return Err(Error::Report("missing or unexpected CSV header".into()));
        }
        let mut runs = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Report(format!("line {}: bad {what}", i + 2));
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 9 {
                return Err(bad("field count"));
            }
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
            runs.push(RunRecord {
                policy: f[0].to_string(),
                dataset: f[1].to_string(),
                seed: f[2].parse().map_err(|_| bad("seed"))?,
                stochastic: f[3].parse().map_err(|_| bad("stochastic flag"))?,
                total_cost: num(f[4], "total_cost")?,
                sum_trto: num(f[5], "sum_trto")?,
                sum_ttgt: num(f[6], "sum_ttgt")?,
                span: num(f[7], "span")?,
                decisions: f[8].parse().map_err(|_| bad("decisions"))?,
            });
        }
        Ok(Self { runs, runtime: Duration::ZERO })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn merge(reports: impl IntoIterator<Item = ExperimentReport>) -> Self {
        let mut out = Self::default();
        for r in reports {
            out.runs.extend(r.runs);
            out.runtime += r.runtime;
        }
        out
    }

    /// Human-readable table, costs in thousands.
    pub fn table(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|r| r.dataset.len()).max().unwrap_or(0).max(7);
        let mut s = format!(
            "{:<10} {:<width$} {:>16} {:>12} {:>12}\n",
            "policy", "dataset", "cost (x10^3)", "trto", "ttgt"
        );
        for r in rows {
            s += &format!(
                "{:<10} {:<width$} {:>16} {:>12.1} {:>12.1}\n",
                r.policy,
                r.dataset,
                r.cost_cell(),
                r.trto_mean,
                r.ttgt_mean
            );
        }
        s
    }
}

/// Runs every (dataset, seed) pair in parallel; output order follows the inputs.
/// Deterministic policies run once per dataset.
pub fn evaluate(
    policy: &PolicyKind,
    datasets: &[NamedDataset],
    world: &WorldConfig,
    seeds: &[u64],
) -> Result<ExperimentReport> {
    world.validate()?;
    if datasets.is_empty() {
        return Err(invalid("no datasets to evaluate"));
    }
    let seeds: Vec<u64> = if policy.is_stochastic() {
        if seeds.is_empty() {
            return Err(invalid("a sampling policy needs at least one evaluation seed"));
        }
        seeds.to_vec()
    } else {
        vec![seeds.first().copied().unwrap_or(0)]
    };
    let jobs: Vec<(&NamedDataset, u64)> =
        datasets.iter().flat_map(|d| seeds.iter().map(move |&s| (d, s))).collect();
    let start = Instant::now();
    let runs = jobs
        .par_iter()
        .map(|&(d, seed)| {
            let log = policy.run(d.tasks.clone(), world, seed)?;
            Ok(RunRecord {
                policy: policy.name().to_string(),
                dataset: d.name.clone(),
                seed,
                stochastic: policy.is_stochastic(),
                total_cost: log.total_cost,
                sum_trto: log.sum_trto,
                sum_ttgt: log.sum_ttgt,
                span: log.span,
                decisions: log.decisions.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { runs, runtime: start.elapsed() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetOrdering {
    pub dataset: String,
    /// Policies by mean cost, cheapest first; equal costs share a rank.
    pub ranking: Vec<(usize, String, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub policies: Vec<String>,
    pub orderings: Vec<DatasetOrdering>,
    /// `wins[a][b]`: datasets where policy a costs strictly less than policy b.
    pub wins: Vec<Vec<usize>>,
    pub ties: Vec<Vec<usize>>,
    /// Datasets where BFO costs more than FIFO.
    pub anomalies: Vec<String>,
}

/// Per-dataset orderings and pairwise win counts.
pub fn compare(report: &ExperimentReport) -> Result<Comparison> {
    let rows = report.rows();
    let mut policies: Vec<String> = Vec::new();
    let mut datasets: Vec<String> = Vec::new();
    for r in &rows {
        if !policies.contains(&r.policy) {
            policies.push(r.policy.clone());
        }
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
    }
    if policies.len() < 2 {
        return Err(Error::Report("comparison needs at least two policies".into()));
    }
    let cost = |p: &str, d: &str| rows.iter().find(|r| r.policy == p && r.dataset == d).map(|r| r.cost_mean);
    for p in &policies {
        let missing: Vec<&String> = datasets.iter().filter(|d| cost(p, d).is_none()).collect();
        if !missing.is_empty() {
            return Err(Error::Report(format!("policy {p} has no result for datasets {missing:?}")));
        }
    }
    let n = policies.len();
    let mut wins = vec![vec![0; n]; n];
    let mut ties = vec![vec![0; n]; n];
    let mut orderings = Vec::new();
    let mut anomalies = Vec::new();
    for d in &datasets {
        let c: Vec<f64> = policies.iter().map(|p| cost(p, d).unwrap()).collect();
        for a in 0..n {
            for b in 0..n {
                if a != b && c[a] < c[b] {
                    wins[a][b] += 1;
                } else if a != b && c[a] == c[b] {
                    ties[a][b] += 1;
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
        let ranking = order
            .iter()
            .map(|&i| (1 + c.iter().filter(|&&x| x < c[i]).count(), policies[i].clone(), c[i]))
            .collect();
        orderings.push(DatasetOrdering { dataset: d.clone(), ranking });
        if let (Some(b), Some(f)) = (cost("bfo", d), cost("fifo", d)) {
            if b > f {
                anomalies.push(d.clone());
            }
        }
    }
    Ok(Comparison { policies, orderings, wins, ties, anomalies })
}

impl Comparison {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for o in &self.orderings {
            let parts: Vec<String> =
                o.ranking.iter().map(|(rank, p, c)| format!("{rank}. {p} {:.2}", c / 1e3)).collect();
            s += &format!("{}: {}\n", o.dataset, parts.join("  "));
        }
        let total = self.orderings.len();
        for (a, pa) in self.policies.iter().enumerate() {
            for (b, pb) in self.policies.iter().enumerate().skip(a + 1) {
                s += &format!(
                    "{pa} vs {pb}: {} wins, {} losses, {} ties over {total} datasets\n",
                    self.wins[a][b], self.wins[b][a], self.ties[a][b]
                );
            }
        }
        for d in &self.anomalies {
            s += &format!("anomaly: bfo costs more than fifo on {d}\n");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::write_dataset;
    use crate::policy::Role;

    fn gaussian(n: usize, seed: u64) -> Vec<Task> {
        generate_dataset(&DatasetSpec::new(n, ArrivalDist::GAUSSIAN, seed)).unwrap()
    }

    #[test]
    fn gaussian_mean_within_three_standard_errors() {
        let tasks = gaussian(505, 7);
        assert_eq!(tasks.len(), 505);
        let m = tasks.iter().map(|t| t.arrival_time).sum::<f64>() / 505.0;
        // 3 * 50 / sqrt(505)
        let bound = 6.674_916_5;
        assert!((m - 600.0).abs() < bound, "mean {m}");
        assert!(tasks.iter().all(|t| t.arrival_time >= 0.0));
    }

    #[test]
    fn uniform_passes_ks_test() {
        let n = 2005;
        let tasks = generate_dataset(&DatasetSpec::new(n, ArrivalDist::UNIFORM, 3)).unwrap();
        let mut t: Vec<f64> = tasks.iter().map(|t| t.arrival_time).collect();
        t.sort_by(f64::total_cmp);
        assert!(t[0] >= 0.0 && t[n - 1] <= 1000.0);
        let d = t
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = x / 1000.0;
                (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
            })
            .fold(0.0, f64::max);
        assert!(d < 1.63 / (n as f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn generation_is_sorted_in_bounds_and_deterministic() {
        let a = gaussian(200, 11);
        let b = gaussian(200, 11);
        let (mut fa, mut fb) = (Vec::new(), Vec::new());
        write_dataset(&mut fa, &a).unwrap();
        write_dataset(&mut fb, &b).unwrap();
        assert_eq!(fa, fb);
        assert_ne!(a, gaussian(200, 12));
        for w in a.windows(2) {
            assert!(w[0].arrival_time <= w[1].arrival_time);
        }
        for t in &a {
            for p in [t.origin, t.destination] {
                assert!((0.0..=64.0).contains(&p.x) && (0.0..=64.0).contains(&p.y));
            }
        }
    }

    #[test]
    fn config_splits_flat_keys_and_rejects_unknown() {
        let cfg = ExperimentConfig::from_toml("n_robots = 4\nla_len = 3\nlearning_rate = 0.003\ncycles = 2\n").unwrap();
        assert_eq!(cfg.world.n_robots, 4);
        assert_eq!(cfg.world.la_len, 3);
        assert_eq!(cfg.train.learning_rate, 0.003);
        assert_eq!(cfg.train.cycles, 2);
        assert_eq!(cfg.world.alpha, WorldConfig::default().alpha);

        let err = ExperimentConfig::from_toml("n_robot = 4\n").unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("n_robot")));
        assert!(ExperimentConfig::from_toml("la_len = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("charge_rate = 0.01\n").unwrap().world.charge_rate == Some(0.01));
    }

    #[test]
    fn shipped_configs_parse() {
        let desk = ExperimentConfig::from_toml(include_str!("../../../configs/desk.toml")).unwrap();
        assert_eq!((desk.world.n_robots, desk.world.la_len, desk.world.episode_tasks), (4, 3, 50));
        assert_eq!(desk.train.cycles * desk.train.episodes_per_cycle, 200);
        let full = ExperimentConfig::from_toml(include_str!("../../../configs/full.toml")).unwrap();
        assert_eq!(full.train, TrainConfig::default());
        assert_eq!(full.world, WorldConfig::default());
    }

    #[test]
    fn config_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.world.failed_robots = vec![1, 2];
        cfg.train.minibatch = 16;
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    fn small_world() -> WorldConfig {
        WorldConfig { n_robots: 4, la_len: 3, episode_tasks: 30, ..WorldConfig::default() }
    }

    fn named(n: usize) -> Vec<NamedDataset> {
        (0..n)
            .map(|i| NamedDataset { name: format!("d{i}"), tasks: gaussian(30, 100 + i as u64) })
            .collect()
    }

    fn untrained(greedy: bool) -> PolicyKind {
        PolicyKind::MrtAgent {
            planner: PolicyNet::new(Role::Planner, 1),
            executor: PolicyNet::new(Role::Executor, 2),
            greedy,
        }
    }

    #[test]
    fn deterministic_policy_gives_single_values() {
        let data = named(3);
        let report = evaluate(&PolicyKind::Fifo, &data, &small_world(), &[4, 5, 6]).unwrap();
        let rows = report.rows();
        assert_eq!(rows.len(), 3);
        for (row, d) in rows.iter().zip(&data) {
            assert_eq!(row.dataset, d.name);
            assert_eq!(row.runs, 1);
            assert!(row.cost_std.is_none());
            assert!(!row.cost_cell().contains('±'));
            let log = run_episode(d.tasks.clone(), &mut Fifo, &small_world()).unwrap();
            assert_eq!(row.cost_mean, log.total_cost);
        }
    }

    #[test]
    fn stochastic_policy_reports_mean_and_std() {
        let data = named(2);
        let report = evaluate(&untrained(false), &data, &small_world(), &[1, 2, 3, 4]).unwrap();
        assert_eq!(report.runs.len(), 8);
        let seeds: Vec<u64> = report.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, [1, 2, 3, 4, 1, 2, 3, 4]);
        let row = &report.rows()[0];
        assert_eq!(row.runs, 4);
        assert!(row.cost_std.unwrap() > 0.0);
        let cell = row.cost_cell();
        let (m, s) = cell.split_once(" ± ").unwrap();
        assert_eq!(m.split('.').nth(1).unwrap().len(), 2);
        assert_eq!(s.split('.').nth(1).unwrap().len(), 2);

        let again = evaluate(&untrained(false), &data, &small_world(), &[1, 2, 3, 4]).unwrap();
        assert_eq!(again.runs, report.runs);
        assert!(!untrained(true).is_stochastic());
    }

    #[test]
    fn failed_robots_need_no_retraining() {
        let mut world = small_world();
        world.n_robots = 6;
        world.failed_robots = vec![0, 3];
        let report = evaluate(&untrained(false), &named(1), &world, &[0]).unwrap();
        assert_eq!(report.runs[0].decisions, 30);
    }

    #[test]
    fn csv_round_trip() {
        let report = evaluate(&PolicyKind::Bfo, &named(2), &small_world(), &[]).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let back = ExperimentReport::read_csv(&buf[..]).unwrap();
        assert_eq!(back.runs, report.runs);
        assert!(ExperimentReport::read_csv(&b"nope\n"[..]).is_err());
    }

    #[test]
    fn compare_counts_wins_and_flags_inversions() {
        let data = named(3);
        let world = small_world();
        let bfo = evaluate(&PolicyKind::Bfo, &data, &world, &[]).unwrap();
        let fifo = evaluate(&PolicyKind::Fifo, &data, &world, &[]).unwrap();
        let cmp = compare(&ExperimentReport::merge([bfo.clone(), fifo.clone()])).unwrap();
        assert_eq!(cmp.policies, ["bfo", "fifo"]);
        assert_eq!(cmp.wins[0][1] + cmp.wins[1][0] + cmp.ties[0][1], 3);
        let inverted = bfo.runs.iter().zip(&fifo.runs).filter(|(b, f)| b.total_cost > f.total_cost).count();
        assert_eq!(cmp.anomalies.len(), inverted);
        assert!(cmp.summary().contains("bfo vs fifo"));

        let mut fake = fifo.clone();
        for r in &mut fake.runs {
            r.policy = "bfo".into();
            r.total_cost += 1.0;
        }
        let cmp = compare(&ExperimentReport::merge([fake, fifo.clone()])).unwrap();
        assert_eq!(cmp.anomalies.len(), 3);
    }

    #[test]
    fn identical_policies_tie_everywhere() {
        let fifo = evaluate(&PolicyKind::Fifo, &named(3), &small_world(), &[]).unwrap();
        let mut twin = fifo.clone();
        for r in &mut twin.runs {
            r.policy = "fifo2".into();
        }
        let cmp = compare(&ExperimentReport::merge([fifo, twin])).unwrap();
        assert_eq!(cmp.wins, vec![vec![0, 0], vec![0, 0]]);
        assert_eq!(cmp.ties[0][1], 3);
        assert!(cmp.orderings.iter().all(|o| o.ranking.iter().all(|r| r.0 == 1)));
    }

    #[test]
    fn compare_rejects_mismatched_datasets() {
        let world = small_world();
        let a = evaluate(&PolicyKind::Fifo, &named(3), &world, &[]).unwrap();
        let b = evaluate(&PolicyKind::Bfo, &named(2), &world, &[]).unwrap();
        assert!(matches!(compare(&ExperimentReport::merge([a.clone(), b])), Err(Error::Report(_))));
        assert!(matches!(compare(&a), Err(Error::Report(_))));
    }
}
