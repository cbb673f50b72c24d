mod common;

use std::time::Duration;

use common::server::FixtureServer;
use proofline::urls::{check_url, resolve_citation_urls};
use proofline::verification::{structural_prechecks, CheckOptions};
use proofline_core::{parse_proof_document, CitationBlock, PhaseId, UrlStatus, Verdict};

const T: Duration = Duration::from_secs(5);

fn citation(id: &str, url: Option<String>) -> CitationBlock {
    CitationBlock {
        id: id.into(),
        statement: "s".into(),
        source_title: "t".into(),
        authors: "a".into(),
        location: "l".into(),
        url,
        conditions_check: "c".into(),
    }
}

#[test]
fn status_codes() {
    let server = FixtureServer::start();
    assert_eq!(check_url(&server.url("/ok"), T), UrlStatus::Yes);
    assert_eq!(check_url(&server.url("/missing"), T), UrlStatus::No);
}

#[test]
fn at_most_three_redirects() {
    let server = FixtureServer::start();
    assert_eq!(check_url(&server.url("/hop/3"), T), UrlStatus::Yes);
    assert_eq!(check_url(&server.url("/hop/4"), T), UrlStatus::No);
}

#[test]
fn unreachable_host_is_no() {
    let closed = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/x", closed.local_addr().unwrap());
    drop(closed);
    assert_eq!(check_url(&url, Duration::from_secs(2)), UrlStatus::No);
    assert_eq!(check_url("not a url", T), UrlStatus::No);
}

#[test]
fn offline_makes_no_requests() {
    let server = FixtureServer::start();
    let cites = [citation("c1", Some(server.url("/ok"))), citation("c2", Some(server.url("/missing")))];
    let verdicts = resolve_citation_urls(&cites, false, T);
    assert!(verdicts.iter().all(|v| v.url_resolves == UrlStatus::Skipped));
    assert_eq!(server.requests(), 0);
}

#[test]
fn online_checks_each_url_once() {
    let server = FixtureServer::start();
    let cites = [citation("c1", Some(server.url("/ok"))), citation("c2", Some(server.url("/missing"))), citation("c3", None)];
    let got: Vec<UrlStatus> = resolve_citation_urls(&cites, true, T).into_iter().map(|v| v.url_resolves).collect();
    assert_eq!(got, [UrlStatus::Yes, UrlStatus::No, UrlStatus::Skipped]);
    assert_eq!(server.requests(), 2);
}

#[test]
fn dead_citation_url_fails_phase_three() {
    let server = FixtureServer::start();
    let doc = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/documents/02.md"),
    )
    .unwrap()
    .replace("https://example.org/c1", &server.url("/missing"));
    let doc = parse_proof_document(&doc).unwrap();
    let problem = "For every integer n >= 1, the sum of the first n odd numbers equals n^2.";
    let options = CheckOptions { network_allowed: true, url_timeout: T, ..CheckOptions::default() };
    let (phases, urls) = structural_prechecks(problem, &doc, &options);
    let p3 = phases.iter().find(|p| p.phase == PhaseId::Citations).unwrap();
    assert_eq!(p3.verdict, Verdict::Fail);
    assert_eq!(p3.findings[0].code, "UrlUnresolved");
    assert_eq!(urls[0].url_resolves, UrlStatus::No);
}
