use privgnn::accountant::{pate_budget_with, privgnn_budget_with, AccountantOptions, PrivacyParams};
use privgnn::error::Error;
use privgnn::exec::{Executor, JobOrder};
use privgnn::gnn::{ModelConfig, ModelKind};
use privgnn::harness::{generate_sbm, SbmSpec};
use privgnn::pipeline::{
    pate_run, privgnn_run, random_partition, run_baseline, Baseline, PateConfig, PrivGnnConfig, PrivateGraph,
    PublicData, RunOptions, TABLE_HEADER,
};

fn small_data(seed: u64) -> (PrivateGraph, PublicData) {
    let spec = SbmSpec {
        num_classes: 3,
        nodes_per_class: 40,
        intra_p: 0.15,
        inter_p: 0.01,
        feature_dim: 6,
        ..SbmSpec::default()
    };
    let d = generate_sbm(&spec, seed).unwrap();
    (
        PrivateGraph::new(d.private.clone()).unwrap(),
        PublicData::from_dataset(&d),
    )
}

fn small_config(lambda: f64) -> PrivGnnConfig {
    let model = ModelConfig::gnn().with_epochs(30);
    let model = ModelConfig {
        hidden_dim: 16,
        ..model
    };
    PrivGnnConfig {
        privacy: PrivacyParams::new(0.5, lambda, 12, 1e-4).unwrap(),
        k_neighbors: 15,
        teacher: model.clone(),
        student: model,
        master_seed: 5,
        ..PrivGnnConfig::default()
    }
}

fn opts(executor: Executor, order: JobOrder) -> RunOptions {
    RunOptions { executor, order }
}

#[test]
fn results_ignore_schedule() {
    let (private, public) = small_data(0);
    let cfg = small_config(0.5);
    let base = privgnn_run(&private, &public, &cfg, RunOptions::default()).unwrap();
    for (ex, order) in [
        (Executor::Sequential, JobOrder::Forward),
        (Executor::Parallel, JobOrder::Reverse),
        (Executor::Sequential, JobOrder::Shuffled(3)),
        (Executor::Parallel, JobOrder::Shuffled(99)),
    ] {
        let other = privgnn_run(&private, &public, &cfg, opts(ex, order)).unwrap();
        assert_eq!(other.queries, base.queries);
        assert_eq!(other.report.deterministic_record(), base.report.deterministic_record());
        assert_eq!(other.student.parameters(), base.student.parameters());
    }
}

#[test]
fn private_graph_untouched_after_seal() {
    let (private, public) = small_data(1);
    let out = privgnn_run(&private, &public, &small_config(0.5), RunOptions::default()).unwrap();
    assert!(private.is_sealed());
    assert_eq!(private.accesses_after_seal().total(), 0);
    assert_eq!(out.report.private_accesses_during_student, 0);
    assert!(out.report.private_accesses.labels > 0);
    // Each teacher reads exactly its KNN labels.
    let expected: u64 = out.queries.iter().map(|q| q.teacher_subgraph_size as u64).sum();
    assert_eq!(out.report.private_accesses.labels, expected);
    assert!(out.queries.iter().all(|q| q.teacher_subgraph_size <= 15));
}

#[test]
fn report_budget_matches_accountant() {
    let (private, public) = small_data(2);
    let cfg = small_config(0.4);
    let out = privgnn_run(&private, &public, &cfg, RunOptions::default()).unwrap();
    let b = privgnn_budget_with(&cfg.privacy, &AccountantOptions::default()).unwrap();
    assert_eq!(out.report.epsilon, Some(b.tight.epsilon));
    assert_eq!(out.report.optimal_alpha, Some(b.tight.optimal_order));
    assert_eq!(out.report.crude_epsilon, Some(b.crude));
    assert_eq!(out.report.num_queries, 12);
    let row = out.report.table_row();
    assert_eq!(row.split(',').count(), TABLE_HEADER.split(',').count());
}

#[test]
fn vanishing_noise_matches_clean_distillation() {
    let (private, public) = small_data(3);
    let mut clean = small_config(0.5);
    clean.noiseless = true;
    let clean_out = privgnn_run(&private, &public, &clean, RunOptions::default()).unwrap();
    assert_eq!(clean_out.report.epsilon, None);
    for q in &clean_out.queries {
        let best = q.posterior.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc },
        );
        assert_eq!(q.pseudo_label, best.0);
    }
    let almost = privgnn_run(&private, &public, &small_config(1e12), RunOptions::default()).unwrap();
    let a: Vec<usize> = almost.queries.iter().map(|q| q.pseudo_label).collect();
    let c: Vec<usize> = clean_out.queries.iter().map(|q| q.pseudo_label).collect();
    assert_eq!(a, c);
    assert_eq!(almost.student.parameters(), clean_out.student.parameters());
}

#[test]
fn shared_sample_mode_uses_one_sample() {
    let (private, public) = small_data(4);
    let mut cfg = small_config(0.5);
    cfg.resample_per_query = false;
    let out = privgnn_run(&private, &public, &cfg, RunOptions::default()).unwrap();
    let sizes: Vec<usize> = out.queries.iter().map(|q| q.sample_size).collect();
    assert!(sizes.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn failing_query_reports_its_index() {
    let (private, public) = small_data(5);
    let mut cfg = small_config(0.5);
    cfg.privacy.gamma = 0.0;
    match privgnn_run(&private, &public, &cfg, RunOptions::default()) {
        Err(Error::Query { query, source, .. }) => {
            assert!(query < 12);
            assert!(matches!(*source, Error::EmptyCandidates));
        }
        other => panic!("expected a query error, got {other:?}"),
    }
}

#[test]
fn too_many_queries_is_a_config_error() {
    let (private, public) = small_data(6);
    let mut cfg = small_config(0.5);
    cfg.privacy.num_queries = 10_000;
    assert!(matches!(
        privgnn_run(&private, &public, &cfg, RunOptions::default()),
        Err(Error::Config(_))
    ));
}

#[test]
fn pate_runs_and_accounts() {
    let (private, public) = small_data(7);
    let cfg = small_config(0.2);
    for kind in [ModelKind::Gnn, ModelKind::Mlp] {
        let pate = PateConfig::from_privgnn(&cfg, 5, kind);
        let a = pate_run(&private, &public, &pate, RunOptions::default()).unwrap();
        let b = pate_run(&private, &public, &pate, opts(Executor::Sequential, JobOrder::Reverse)).unwrap();
        assert_eq!(a.pseudo_labels, b.pseudo_labels);
        assert_eq!(a.report.deterministic_record(), b.report.deterministic_record());
        assert_eq!(a.report.method, pate.method_name());
        assert!(a.votes.iter().all(|v| v.iter().sum::<u64>() == 5));
        let g = pate_budget_with(0.2, 12, 1e-4, &pate.accountant).unwrap();
        assert_eq!(a.report.epsilon, Some(g.epsilon));
        assert_eq!(private.accesses_after_seal().total(), 0);
    }
}

#[test]
fn partition_is_disjoint_and_complete() {
    let parts = random_partition(23, 4, 1).unwrap();
    let mut all: Vec<usize> = parts.iter().flat_map(|p| p.as_slice().to_vec()).collect();
    all.sort_unstable();
    assert_eq!(all, (0..23).collect::<Vec<_>>());
    assert!(parts.iter().all(|p| p.len() == 5 || p.len() == 6));
    assert!(random_partition(5, 4, 1).is_err());
}

#[test]
fn baselines_are_deterministic_and_unprivate() {
    let (private, public) = small_data(8);
    let model = ModelConfig::gnn().with_epochs(100);
    let b1 = run_baseline(Baseline::B1, &private, &public, &model, 2).unwrap();
    let again = run_baseline(Baseline::B1, &private, &public, &model, 2).unwrap();
    assert_eq!(b1.report.deterministic_record(), again.report.deterministic_record());
    assert_eq!(b1.report.epsilon, None);
    assert!(b1.report.accuracy >= 0.9, "{}", b1.report.accuracy);
    let b2 = run_baseline(Baseline::B2, &private, &public, &model, 2).unwrap();
    assert_eq!(b2.report.private_accesses.total(), 0);
    assert!(b2.report.accuracy >= 0.8, "{}", b2.report.accuracy);
    assert_eq!("b2".parse::<Baseline>().unwrap(), Baseline::B2);
}
