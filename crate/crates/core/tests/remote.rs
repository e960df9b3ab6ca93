mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use common::{indexed_rows, probs_body, Reply, StubServer};
use epida::augment::IdentityAugmenter;
use epida::classifier::Scorer;
use epida::pipeline::remote::{RemoteConfig, RemoteScorer};
use epida::seas::{epida_augment, SeasConfig};
use epida::{Error, Sample, TokenizedText};

fn fast(url: &str) -> RemoteConfig {
    RemoteConfig {
        backoff: Duration::from_millis(10),
        ..RemoteConfig::new(url)
    }
}

fn texts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i}")).collect()
}

#[test]
fn small_batches_keep_order() {
    let stub = StubServer::start(|t| Reply::Json(200, probs_body(&indexed_rows(t))));
    let scorer = RemoteScorer::new(RemoteConfig { batch_size: 7, ..fast(&stub.url) }, 2).unwrap();
    let out = scorer.score(&texts(50)).unwrap();
    for (i, p) in out.iter().enumerate() {
        assert_eq!(p.as_slice()[0], (i as f64 + 1.0) / 1000.0);
    }
    assert_eq!(stub.requests().len(), 8);
    assert!(scorer.score(&[]).unwrap().is_empty());
}

#[test]
fn length_mismatch_is_a_protocol_error() {
    let stub = StubServer::start(|t| Reply::Json(200, probs_body(&indexed_rows(&t[1..]))));
    let err = RemoteScorer::new(fast(&stub.url), 2).unwrap().score(&texts(4)).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
}

#[test]
fn wrong_width_is_a_protocol_error() {
    let stub = StubServer::start(|t| Reply::Json(200, probs_body(&vec![vec![0.5, 0.5]; t.len()])));
    let err = RemoteScorer::new(fast(&stub.url), 3).unwrap().score(&texts(2)).unwrap_err();
    assert!(matches!(&err, Error::Protocol(m) if m.contains("distribution 0")), "{err}");
}

#[test]
fn malformed_body_and_client_errors_are_fatal() {
    let garbage = StubServer::start(|_| Reply::Json(200, "{\"probs\": 3}".into()));
    let err = RemoteScorer::new(fast(&garbage.url), 2).unwrap().score(&texts(2)).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
    assert_eq!(garbage.requests().len(), 1);

    let refused = StubServer::start(|_| Reply::Json(400, "{}".into()));
    let err = RemoteScorer::new(fast(&refused.url), 2).unwrap().score(&texts(2)).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
    assert_eq!(refused.requests().len(), 1);
}

#[test]
fn server_errors_are_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = Arc::clone(&calls);
    let stub = StubServer::start(move |t| {
        if seen.fetch_add(1, Ordering::SeqCst) == 0 {
            Reply::Json(503, "{}".into())
        } else {
            Reply::Json(200, probs_body(&indexed_rows(t)))
        }
    });
    let out = RemoteScorer::new(fast(&stub.url), 2).unwrap().score(&texts(3)).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!(calls.load(Ordering::SeqCst), 2);

    let down = StubServer::start(|_| Reply::Json(500, "{}".into()));
    let err = RemoteScorer::new(fast(&down.url), 2).unwrap().score(&texts(3)).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
    assert_eq!(down.requests().len(), 3);
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let config = RemoteConfig {
        max_attempts: 2,
        ..fast(&format!("http://127.0.0.1:{port}"))
    };
    let err = RemoteScorer::new(config, 2).unwrap().score(&texts(1)).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
}

#[test]
fn rejects_bad_configuration() {
    assert!(RemoteScorer::new(RemoteConfig { batch_size: 0, ..RemoteConfig::new("http://x") }, 2).is_err());
    assert!(RemoteScorer::new(RemoteConfig::new("http://x"), 1).is_err());
}

#[test]
fn drives_selection_as_a_scorer() {
    let stub = StubServer::start(|t| Reply::Json(200, probs_body(&vec![vec![0.7, 0.3]; t.len()])));
    let scorer = RemoteScorer::new(fast(&stub.url), 2).unwrap();
    assert_eq!(scorer.num_classes(), 2);
    let sample = Sample::new(TokenizedText::parse("some words here").unwrap(), 0);
    let picked = epida_augment(&scorer, &sample, 0, &IdentityAugmenter, &SeasConfig::default(), 0).unwrap();
    assert_eq!(picked.len(), 3);
    let requests = stub.requests();
    assert_eq!(requests.len(), 1);
    assert_eq!(requests[0].len(), 10);
    assert!(requests[0].iter().all(|t| t == "some words here"));
}
