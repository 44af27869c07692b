mod common;

use std::fs;
use std::sync::Arc;
use std::time::Duration;

use serde_json::json;

use common::{reference_handler, Reply, Stub};
use halluc_core::corpus::{load_eval_records, EvalRecord, TokenSeq};
use halluc_core::eval::evaluate_records;
use halluc_core::infill::{InfillRequest, Infiller, RemoteInfiller};
use halluc_core::noising::NoisedSeq;
use halluc_core::pipeline::{cmd_evaluate, cmd_predict, cmd_synthesize, InfillerChoice, PipelineConfig, Task};
use halluc_core::remote::RemoteClient;
use halluc_core::rng::{record_rng, Stream};
use halluc_core::Error;

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

#[test]
fn health_gating() {
    let ready = Stub::start(reference_handler);
    assert!(RemoteClient::new(&ready.url).health().unwrap());

    let loading = Stub::start(|_| Reply::status(503, "loading"));
    assert!(!RemoteClient::new(&loading.url).health().unwrap());

    let not_ready = Stub::start(|_| Reply::json(json!({ "ready": false })));
    assert!(!RemoteClient::new(&not_ready.url).health().unwrap());
}

#[test]
fn sentinel_free_infill_echoes() {
    let stub = Stub::start(reference_handler);
    let client = RemoteClient::new(&stub.url);
    let input = toks("the cat sat");
    assert_eq!(client.infill(&input, 4, 3.0).unwrap(), input);
}

#[test]
fn decoding_parameters_are_sent() {
    let stub = Stub::start(reference_handler);
    let client = Arc::new(RemoteClient::new(&stub.url));
    let noised = NoisedSeq::from_rendered(["a", "<mask>", "c"]);
    let req = InfillRequest::new(noised);
    let out = RemoteInfiller::new(client)
        .infill(&req, &mut record_rng(0, 0, Stream::Infill))
        .unwrap();
    assert_eq!(out.filled.tokens(), toks("a filled c").as_slice());
    let bodies = stub.bodies("/infill");
    assert_eq!(bodies.len(), 1);
    assert_eq!(
        bodies[0],
        json!({ "tokens": ["a", "<mask>", "c"], "beam_size": 4, "length_penalty": 3.0 })
    );
}

#[test]
fn malformed_response_is_protocol_error() {
    let stub = Stub::start(|_| Reply::json(json!({ "tok": [] })));
    let err = RemoteClient::new(&stub.url).infill(&toks("a"), 4, 3.0).unwrap_err();
    assert!(matches!(err, Error::Protocol { .. }), "{err:?}");
    assert_eq!(err.exit_code(), 2);

    let garbage = Stub::start(|_| Reply::status(200, "not json"));
    let err = RemoteClient::new(&garbage.url).predict("a", "b", None).unwrap_err();
    assert!(matches!(err, Error::Protocol { .. }));
}

#[test]
fn server_error_is_transport_error() {
    let stub = Stub::start(|_| Reply::status(500, "boom"));
    let err = RemoteClient::new(&stub.url).infill(&toks("a"), 4, 3.0).unwrap_err();
    assert!(matches!(err, Error::Transport { .. }), "{err:?}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn sentinel_in_output_is_rejected() {
    let stub = Stub::start(|_| Reply::json(json!({ "tokens": ["a", "<mask>"] })));
    let err = RemoteClient::new(&stub.url)
        .infill(&toks("a <mask>"), 4, 3.0)
        .unwrap_err();
    assert!(matches!(err, Error::SentinelInOutput { position: 1 }), "{err:?}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn one_prob_per_target_token() {
    let stub = Stub::start(reference_handler);
    let probs = RemoteClient::new(&stub.url)
        .predict("the cat sat", "the dog sat down", Some("the cat sat"))
        .unwrap();
    assert_eq!(probs, vec![0.1, 0.9, 0.1, 0.9]);
    let body = &stub.bodies("/predict")[0];
    assert_eq!(body["reference"], "the cat sat");

    let short = Stub::start(|_| Reply::json(json!({ "probs": [0.5] })));
    let err = RemoteClient::new(&short.url).predict("s", "a b", None).unwrap_err();
    assert!(matches!(err, Error::Protocol { .. }));

    let out_of_range = Stub::start(|_| Reply::json(json!({ "probs": [1.5] })));
    assert!(RemoteClient::new(&out_of_range.url).predict("s", "a", None).is_err());
}

#[test]
fn in_flight_requests_are_bounded() {
    let stub = Stub::start_with_delay(reference_handler, Duration::from_millis(30));
    let client = Arc::new(RemoteClient::with_options(&stub.url, 2, Duration::from_secs(10)));
    std::thread::scope(|s| {
        for _ in 0..8 {
            let c = client.clone();
            s.spawn(move || c.infill(&toks("x y"), 4, 3.0).unwrap());
        }
    });
    let peak = stub.peak_in_flight.load(std::sync::atomic::Ordering::SeqCst);
    assert!((1..=2).contains(&peak), "peak {peak}");
}

#[test]
fn synthesize_through_the_service() {
    let stub = Stub::start(reference_handler);
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bitext.tsv");
    fs::write(
        &input,
        "ein kleiner test\ta small test\nnoch einer\tone more sentence here\n",
    )
    .unwrap();
    let mut cfg = PipelineConfig::for_task(Task::Mt, 5, &input, dir.path().join("out"));
    cfg.infiller = InfillerChoice::Remote {
        endpoint: stub.url.clone(),
    };
    cfg.workers = 2;
    let summary = cmd_synthesize(&cfg).unwrap();
    assert_eq!(summary.stats.records, 2);
    for body in stub.bodies("/infill") {
        assert_eq!(body["beam_size"], 4);
        assert_eq!(body["length_penalty"], 3.0);
    }
    let train = fs::read_to_string(dir.path().join("out/train.jsonl")).unwrap();
    assert_eq!(train.lines().count(), 2);
}

#[test]
fn synthesize_refuses_an_unready_service() {
    let stub = Stub::start(|_| Reply::status(503, ""));
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bitext.tsv");
    fs::write(&input, "a\tb\n").unwrap();
    let mut cfg = PipelineConfig::for_task(Task::Mt, 0, &input, dir.path().join("out"));
    cfg.infiller = InfillerChoice::Remote {
        endpoint: stub.url.clone(),
    };
    let err = cmd_synthesize(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(stub.bodies("/infill").is_empty());
}

/// Predictions fetched from the service reach the report exactly as a
/// direct evaluation of the same probabilities.
#[test]
fn ingested_predictions_flow_through_evaluation_unchanged() {
    let stub = Stub::start(reference_handler);
    let dir = tempfile::tempdir().unwrap();
    let gold_path = dir.path().join("gold.jsonl");
    let rows = [
        ("the cat sat", "the dog sat", vec![0u8, 1, 0]),
        ("a b c", "a b c d", vec![0, 0, 0, 1]),
        ("x y", "z z y", vec![1, 1, 0]),
        ("p q r", "p q s", vec![0, 0, 0]),
    ];
    let mut text = String::new();
    for (i, (s, o, g)) in rows.iter().enumerate() {
        let mut r = EvalRecord::new(
            TokenSeq::from_whitespace(s).unwrap(),
            TokenSeq::from_whitespace(o).unwrap(),
        );
        r.id = Some(i as u64);
        r.gold_labels = Some(g.clone());
        text.push_str(&serde_json::to_string(&r).unwrap());
        text.push('\n');
    }
    fs::write(&gold_path, text).unwrap();
    let pred_path = dir.path().join("pred.jsonl");
    let client = RemoteClient::new(&stub.url);
    assert_eq!(cmd_predict(&gold_path, &pred_path, &client, 3).unwrap(), 4);

    let filled = load_eval_records(&pred_path).unwrap();
    let via_cli = cmd_evaluate(&gold_path, Some(&pred_path), None).unwrap();
    let direct = evaluate_records(&filled).unwrap();
    assert_eq!(via_cli, direct);
    assert_eq!(filled[0].pred_probs.as_deref(), Some(&[0.1, 0.9, 0.1][..]));
    // pred: [0,1,0] [0,0,0,1] [1,1,0] [0,0,1]
    assert_eq!((via_cli.tp, via_cli.fp, via_cli.fn_), (Some(4), Some(1), Some(0)));
}
