use privgnn::config::DatasetSource;
use privgnn::dataset::{load_dataset, save_dataset};
use privgnn::exec::Executor;
use privgnn::gnn::ModelConfig;
use privgnn::graph::{l_hop_neighborhood, Graph, Role};
use privgnn::harness::{
    compare_with_accountant, generate_sbm, read_sweep_csv, reference_budgets, run_sweep, sample_sbm, write_sweep_csv,
    Axes, SbmSpec, SweepSpec,
};
use privgnn::pipeline::{privgnn_run, run_baseline, Baseline, PrivGnnConfig, PrivateGraph, PublicData, RunOptions};
use privgnn::seed::StreamRng;
use rand::SeedableRng;

fn nearest_mean_accuracy(spec: &SbmSpec, seed: u64) -> f64 {
    let draw = sample_sbm(spec, &mut StreamRng::seed_from_u64(seed)).unwrap();
    let c = spec.num_classes;
    let mut means = vec![vec![0.0; spec.feature_dim]; c];
    for (v, &y) in draw.labels.iter().enumerate() {
        for (m, x) in means[y].iter_mut().zip(draw.features.row(v)) {
            *m += x / spec.nodes_per_class as f64;
        }
    }
    let hits = draw
        .labels
        .iter()
        .enumerate()
        .filter(|&(v, &y)| {
            let row = draw.features.row(v);
            let dist = |m: &Vec<f64>| m.iter().zip(row).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            (0..c)
                .min_by(|&a, &b| dist(&means[a]).total_cmp(&dist(&means[b])))
                .unwrap()
                == y
        })
        .count();
    hits as f64 / spec.num_nodes() as f64
}

#[test]
fn communities_disconnect_without_cross_edges() {
    let spec = SbmSpec {
        num_classes: 3,
        nodes_per_class: 30,
        intra_p: 0.3,
        inter_p: 0.0,
        ..SbmSpec::default()
    };
    let draw = sample_sbm(&spec, &mut StreamRng::seed_from_u64(0)).unwrap();
    assert!(draw.edges.iter().all(|&(u, v)| draw.labels[u] == draw.labels[v]));
    let g = Graph::new(
        90,
        draw.edges,
        draw.features,
        Some(draw.labels.clone()),
        3,
        Role::Public,
    )
    .unwrap();
    let reach = l_hop_neighborhood(&g, 0, 90).unwrap();
    assert!(reach.iter().all(|u| draw.labels[u] == draw.labels[0]));
}

#[test]
fn feature_purity_tracks_separation() {
    let flat = SbmSpec {
        class_mean_separation: 0.0,
        ..SbmSpec::default()
    };
    let acc = nearest_mean_accuracy(&flat, 1);
    assert!((acc - 0.25).abs() < 0.08, "{acc}");
    let sharp = nearest_mean_accuracy(&SbmSpec::default(), 1);
    assert!(sharp > 0.7, "{sharp}");
}

#[test]
fn generated_split_is_well_formed() {
    let spec = SbmSpec::default();
    let d = generate_sbm(&spec, 0).unwrap();
    assert_eq!(d.private.num_nodes(), 400);
    assert_eq!(d.public.num_nodes(), 400);
    assert_eq!(d.public_train.len(), 200);
    assert_eq!(d.public_test.len(), 200);
    assert!(d.public_train.is_disjoint(&d.public_test));
    assert_eq!(d.private.role(), Role::Private);
    let again = generate_sbm(&spec, 0).unwrap();
    assert_eq!(d.private, again.private);
    assert_ne!(d.private, generate_sbm(&spec, 1).unwrap().private);
}

#[test]
fn public_baseline_learns_default_sbm() {
    let d = generate_sbm(&SbmSpec::default(), 0).unwrap();
    let private = PrivateGraph::new(d.private.clone()).unwrap();
    let public = PublicData::from_dataset(&d);
    let model = ModelConfig::gnn().with_epochs(200);
    let out = run_baseline(Baseline::B2, &private, &public, &model, 0).unwrap();
    assert!(out.report.accuracy >= 0.85, "{}", out.report.accuracy);
}

#[test]
fn dataset_round_trips_through_disk() {
    let spec = SbmSpec {
        nodes_per_class: 20,
        ..SbmSpec::default()
    };
    let d = generate_sbm(&spec, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&d, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.private, d.private);
    assert_eq!(back.public.features(), d.public.features());
    assert_eq!(back.public.num_edges(), d.public.num_edges());
    assert_eq!(back.public_train, d.public_train);
    assert_eq!(back.public_test, d.public_test);
}

fn tiny_base() -> PrivGnnConfig {
    let model = ModelConfig {
        hidden_dim: 16,
        ..ModelConfig::gnn().with_epochs(20)
    };
    let mut base = PrivGnnConfig {
        k_neighbors: 10,
        teacher: model.clone(),
        student: model,
        ..PrivGnnConfig::default()
    };
    base.privacy.num_queries = 8;
    base.privacy.gamma = 0.5;
    base
}

fn tiny_spec() -> SbmSpec {
    SbmSpec {
        num_classes: 2,
        nodes_per_class: 30,
        intra_p: 0.2,
        inter_p: 0.01,
        feature_dim: 4,
        ..SbmSpec::default()
    }
}

#[test]
fn single_cell_sweep_equals_direct_run() {
    let spec = SweepSpec {
        version: 1,
        dataset: Some(DatasetSource::synthetic(tiny_spec(), 2)),
        base: tiny_base(),
        axes: Axes {
            lambda: vec![0.3],
            ..Axes::default()
        },
        seeds: vec![3],
        budget_only: false,
        parallel_cells: false,
    };
    let d = spec.dataset.as_ref().unwrap().materialize(None).unwrap();
    let rows = run_sweep(&spec, Some(&d), Executor::Parallel).unwrap();
    assert_eq!(rows.len(), 1);
    let cell = spec.cells().unwrap()[0];
    let private = PrivateGraph::new(d.private.clone()).unwrap();
    let direct = privgnn_run(
        &private,
        &PublicData::from_dataset(&d),
        &cell.apply(&spec.base, 3),
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(rows[0].accuracy_mean, Some(direct.report.accuracy));
    assert_eq!(rows[0].accuracy_std, Some(0.0));
    assert_eq!(rows[0].epsilon, direct.report.epsilon);
}

#[test]
fn multi_seed_cells_share_one_budget() {
    let spec = SweepSpec {
        version: 1,
        dataset: Some(DatasetSource::synthetic(tiny_spec(), 0)),
        base: tiny_base(),
        axes: Axes {
            lambda: vec![0.2, 0.6],
            ..Axes::default()
        },
        seeds: vec![0, 1, 2],
        budget_only: false,
        parallel_cells: true,
    };
    let d = spec.dataset.as_ref().unwrap().materialize(None).unwrap();
    let par = run_sweep(&spec, Some(&d), Executor::Parallel).unwrap();
    let seq = run_sweep(&spec, Some(&d), Executor::Sequential).unwrap();
    assert_eq!(par, seq);
    assert!(par
        .iter()
        .all(|r| r.error.is_none() && r.num_seeds == 3 && r.accuracy_std.is_some()));
}

#[test]
fn budget_grid_increases_along_both_axes() {
    let text = "version = 1\nbudget_only = true\n[axes]\nlambda = [0.1, 0.5]\ngamma = [0.1, 0.4]\n";
    let spec = SweepSpec::from_toml_str(text).unwrap();
    let rows = run_sweep(&spec, None, Executor::Sequential).unwrap();
    assert_eq!(rows.len(), 4);
    let eps = |l: f64, g: f64| {
        rows.iter()
            .find(|r| r.lambda == l && r.gamma == g)
            .and_then(|r| r.epsilon)
            .unwrap()
    };
    assert!(eps(0.1, 0.1) < eps(0.5, 0.1));
    assert!(eps(0.1, 0.4) < eps(0.5, 0.4));
    assert!(eps(0.1, 0.1) < eps(0.1, 0.4));
    assert!(eps(0.5, 0.1) < eps(0.5, 0.4));
    assert!(rows.iter().all(|r| r.accuracy_mean.is_none()));
}

#[test]
fn sweep_csv_round_trips() {
    let text = "version = 1\nbudget_only = true\n[axes]\nlambda = [0.1, 0.2, 0.3]\nquery_count = [100, 200]\n";
    let rows = run_sweep(&SweepSpec::from_toml_str(text).unwrap(), None, Executor::Parallel).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).unwrap();
    assert_eq!(read_sweep_csv(buf.as_slice()).unwrap(), rows);
}

#[test]
fn missing_dataset_gives_error_rows() {
    let spec = SweepSpec::from_toml_str("version = 1\n[axes]\nlambda = [0.1]\n").unwrap();
    let rows = run_sweep(&spec, None, Executor::Sequential).unwrap();
    assert!(rows[0].error.is_some());
}

#[test]
fn comparison_covers_every_reference_tuple() {
    let refs = reference_budgets().unwrap();
    let rows = compare_with_accountant(&Default::default()).unwrap();
    assert_eq!(rows.len(), refs.len());
    for r in &rows {
        assert!(r.ours_tight.unwrap() <= r.ours_crude.unwrap());
        let ratio = r.ratio_tight.unwrap();
        assert!(ratio > 0.0 && ratio.is_finite());
    }
}
