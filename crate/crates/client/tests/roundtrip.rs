use std::time::Duration;

use tensorhpo_api::{JobState, MaxvolRequest, ModelParamsRequest, OptimizeRequest, QuantumRequest};
use tensorhpo_client::Client;
use tensorhpo_core::benchmarks::BenchmarkKind;
use tensorhpo_core::harness::Method;
use tensorhpo_core::model::Variant;
use tensorhpo_core::AxisSpec;
use tensorhpo_server::AppState;

async fn spawn() -> Client {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(tensorhpo_server::serve(listener, AppState::new(1), std::future::pending()));
    Client::new(format!("http://{addr}/"))
}

const CONFIG: &str = r#"
[experiment]
method = "tt"
objective = "schwefel"
trials = 3
base_seed = 5
output_path = "tt.csv"

[space]
dims = [3, 6]
points = 4
"#;

#[tokio::test]
async fn experiment_round_trip() {
    let client = spawn().await;
    assert_eq!(client.health().await.unwrap().status, "ok");
    let job = client.submit_toml(CONFIG).await.unwrap();
    assert_eq!(job.trials_total, 6);
    let mut seen = 0;
    let done = client
        .wait(job.id, Duration::from_millis(5), |_| seen += 1)
        .await
        .unwrap();
    assert!(seen >= 1);
    assert_eq!(done.state, JobState::Completed);

    let report = client.report(job.id).await.unwrap();
    assert_eq!(report.groups.iter().map(|g| g.d).collect::<Vec<_>>(), [3, 6]);
    let csv = client.csv(job.id).await.unwrap();
    assert_eq!(csv, report.to_csv_string());

    let cmp = client.compare(report.clone(), report).await.unwrap();
    assert!(cmp.comparison.rows.iter().all(|r| r.mean_delta == 0.0));
    assert_eq!(client.experiments().await.unwrap().len(), 1);
}

#[tokio::test]
async fn structured_errors() {
    let client = spawn().await;
    let err = client.submit_toml("[experiment]\nmethod = \"bogus\"").await.unwrap_err();
    assert_eq!(err.api().unwrap().kind, "ConfigInvalid");
    let err = client.status(uuid::Uuid::nil()).await.unwrap_err();
    assert_eq!(err.api().unwrap().kind, "NotFound");
}

#[tokio::test]
async fn synchronous_operations() {
    let client = spawn().await;
    let grids = client
        .discretize(vec![AxisSpec::integer("k", 1.0, 3.0, 3)])
        .await
        .unwrap();
    assert_eq!(grids.grids, [vec![1.0, 2.0, 3.0]]);

    let sel = client
        .maxvol(&MaxvolRequest {
            rows: vec![vec![0.1], vec![-3.0], vec![2.0]],
            tol: None,
            max_iters: None,
        })
        .await
        .unwrap();
    assert_eq!(sel.picked, [1]);

    let axes = (0..3).map(|i| AxisSpec::continuous(format!("x{i}"), -500.0, 500.0, 4)).collect();
    let opt = client
        .optimize(&OptimizeRequest {
            method: Method::Gs,
            kind: BenchmarkKind::Schwefel,
            instance_seed: 0,
            axes,
            tt: None,
            gs: None,
        })
        .await
        .unwrap();
    assert_eq!(opt.report.distinct_evals, 64);
    assert!((opt.best_fitness + 541.76).abs() < 0.01);

    let q = QuantumRequest {
        qubits: 2,
        depth: 1,
        schedule: Default::default(),
        x: vec![0.0, 0.0],
        theta: vec![0.0, 0.0],
    };
    let f = client.quantum_forward(&q).await.unwrap();
    assert_eq!(f.expectations.len(), 2);
    let j = client.quantum_gradient(&q).await.unwrap();
    assert_eq!(j.wrt_inputs.len(), 4);

    let p = client
        .model_params(&ModelParamsRequest {
            variant: Variant::Hybrid,
            n: 13,
            width: 4,
            classes: 2,
        })
        .await
        .unwrap();
    assert_eq!((p.param_count, p.variational_count), (6749, 52));
}
