//! Blocking HTTP page fetcher used by the optional online webfeat path.

use std::time::Duration;

use shopmatch_core::webfeat::Fetch;

pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(timeout: Duration, user_agent: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .user_agent(user_agent)
            .build();
        Self {
            agent: config.new_agent(),
        }
    }
}

impl Fetch for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<String, String> {
        let mut response = self
            .agent
            .get(url)
            .call()
            .map_err(|e| format!("GET {url}: {e}"))?;
        response
            .body_mut()
            .read_to_string()
            .map_err(|e| format!("reading {url}: {e}"))
    }
}
