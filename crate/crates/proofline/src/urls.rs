//! Citation URL reachability: status below 400 after at most three redirects.

use std::time::Duration;

use proofline_core::{CitationBlock, CitationVerdict, UrlStatus};

pub const OFFLINE_ENV: &str = "PROOFLINE_OFFLINE";
pub const MAX_REDIRECTS: u32 = 3;

/// True when `PROOFLINE_OFFLINE` is set to anything but empty or `0`.
pub fn forced_offline() -> bool {
    std::env::var(OFFLINE_ENV).is_ok_and(|v| !v.is_empty() && v != "0")
}

pub fn check_url(url: &str, timeout: Duration) -> UrlStatus {
    let config = ureq::Agent::config_builder()
        .max_redirects(MAX_REDIRECTS)
        .max_redirects_will_error(true)
        .http_status_as_error(false)
        .timeout_global(Some(timeout))
        .proxy(None)
        .build();
    let agent = ureq::Agent::new_with_config(config);
    match agent.get(url).call() {
        Ok(response) if response.status().as_u16() < 400 => UrlStatus::Yes,
        _ => UrlStatus::No,
    }
}

/// One verdict per citation, in document order; only `url_resolves` is set.
pub fn resolve_citation_urls(citations: &[CitationBlock], network_allowed: bool, timeout: Duration) -> Vec<CitationVerdict> {
    let online = network_allowed && !forced_offline();
    citations
        .iter()
        .map(|c| {
            let status = match (&c.url, online) {
                (Some(url), true) => check_url(url, timeout),
                _ => UrlStatus::Skipped,
            };
            CitationVerdict::url_only(c.id.clone(), status)
        })
        .collect()
}
