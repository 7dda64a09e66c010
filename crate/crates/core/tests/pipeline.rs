use mrta_core::bench::{
    compare, evaluate, generate_dataset, ArrivalDist, DatasetSpec, ExperimentConfig, ExperimentReport, NamedDataset,
    PolicyKind,
};
use mrta_core::domain::{load_dataset, save_dataset};
use mrta_core::policy::{load_checkpoint, save_checkpoint, Trainer};

const CONFIG: &str = "n_robots = 3\nla_len = 2\nepisode_tasks = 15\ncycles = 2\nepisodes_per_cycle = 2\ndataset_pool = 2\n";

#[test]
fn files_round_trip_through_training_and_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(CONFIG).unwrap();

    let mut datasets = Vec::new();
    for seed in 0..2u64 {
        let path = dir.path().join(format!("u{seed}.jsonl"));
        let tasks = generate_dataset(&DatasetSpec::new(15, ArrivalDist::UNIFORM, seed)).unwrap();
        save_dataset(&path, &tasks).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, tasks);
        datasets.push(NamedDataset { name: format!("u{seed}"), tasks: back });
    }

    let trained = Trainer::new(cfg.world.clone(), cfg.train.clone()).unwrap().run().unwrap();
    let ckpt = dir.path().join("agent.ckpt");
    save_checkpoint(&ckpt, &trained.planner, &trained.executor).unwrap();
    let (planner, executor) = load_checkpoint(&ckpt).unwrap();
    assert_eq!(planner, trained.planner);
    assert_eq!(executor, trained.executor);

    let agent = PolicyKind::MrtAgent { planner, executor, greedy: false };
    let mut reports = Vec::new();
    for (i, kind) in [agent, PolicyKind::Fifo].iter().enumerate() {
        let report = evaluate(kind, &datasets, &cfg.world, &[7, 8]).unwrap();
        let path = dir.path().join(format!("r{i}.csv"));
        report.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
        let back = ExperimentReport::load_csv(&path).unwrap();
        assert_eq!(back.runs, report.runs);
        reports.push(back);
    }
    assert_eq!(reports[0].runs.len(), 4);
    assert_eq!(reports[1].runs.len(), 2);
    let cmp = compare(&ExperimentReport::merge(reports)).unwrap();
    assert_eq!(cmp.policies, ["mrtagent", "fifo"]);
    assert_eq!(cmp.orderings.len(), 2);
    assert_eq!(cmp.wins[0][1] + cmp.wins[1][0] + cmp.ties[0][1], 2);
}
