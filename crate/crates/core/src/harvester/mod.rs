//! README harvesting: fetch a repository's README, find its outgoing URLs,
//! and cut a plain-text context around each one.

mod context;
mod extract;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{retry, Attempt, HttpResponse, HttpTransport, RetryPolicy, TransportError};
use crate::pool::bounded_map;

pub use context::{build_context, BuiltContext, ContextConfig};
pub use extract::{extract_urls, trim_bare_url, ExtractConfig, ExtractedUrl, UrlKind};

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("invalid repository reference `{0}`")]
    InvalidRepo(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("rate limited by {host}{}", retry_after.map(|d| format!(", retry after {}s", d.as_secs())).unwrap_or_default())]
    RateLimited {
        host: String,
        retry_after: Option<Duration>,
    },
    #[error("HTTP {status} from {url}: {excerpt}")]
    Http { status: u16, url: String, excerpt: String },
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: TransportOrStatus },
    #[error("span [{start}, {end}) is out of bounds or crosses a block boundary")]
    SpanOutOfBounds { start: usize, end: usize },
    #[error("unexpected response: {0}")]
    Protocol(String),
}

/// Last transient failure seen before retries ran out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportOrStatus {
    Transport(TransportError),
    Status(u16),
}

impl fmt::Display for TransportOrStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportOrStatus::Transport(e) => write!(f, "{e}"),
            TransportOrStatus::Status(s) => write!(f, "HTTP {s}"),
        }
    }
}

/// A repository reference, canonically `host/owner/name`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RepoRef {
    pub host: String,
    pub owner: String,
    pub name: String,
    pub git_ref: Option<String>,
}

impl RepoRef {
    pub fn new(host: &str, owner: &str, name: &str) -> Result<Self, HarvestError> {
        if owner.is_empty() || name.is_empty() || host.is_empty() {
            return Err(HarvestError::InvalidRepo(format!("{host}/{owner}/{name}")));
        }
        Ok(Self {
            host: host.to_ascii_lowercase(),
            owner: owner.to_string(),
            name: name.to_string(),
            git_ref: None,
        })
    }

    pub fn canonical(&self) -> String {
        format!("{}/{}/{}", self.host, self.owner, self.name)
    }
}

impl fmt::Display for RepoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())?;
        if let Some(r) = &self.git_ref {
            write!(f, "@{r}")?;
        }
        Ok(())
    }
}

impl FromStr for RepoRef {
    type Err = HarvestError;

    /// Accepts `owner/name`, `host/owner/name`, full `https://` URLs
    /// (optionally with `.git` or `/tree/<ref>`), and an `@ref` suffix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || HarvestError::InvalidRepo(s.to_string());
        let trimmed = s.trim();
        let (body, at_ref) = match trimmed.rsplit_once('@') {
            Some((_, "")) => return Err(invalid()),
            Some((b, r)) => (b, Some(r.to_string())),
            None => (trimmed, None),
        };
        let body = body
            .strip_prefix("https://")
            .or_else(|| body.strip_prefix("http://"))
            .unwrap_or(body)
            .trim_end_matches('/');
        let parts: Vec<&str> = body.split('/').filter(|p| !p.is_empty()).collect();
        let (host, rest) = match parts.as_slice() {
            [host, rest @ ..] if host.contains('.') => (*host, rest.to_vec()),
            [owner, name] => ("github.com", vec![*owner, *name]),
            _ => return Err(invalid()),
        };
        if rest.len() < 2 {
            return Err(invalid());
        }
        let owner = rest[0];
        let name = rest[1].trim_end_matches(".git");
        let mut repo = RepoRef::new(host, owner, name).map_err(|_| invalid())?;
        repo.git_ref = match (rest.get(2), rest.get(3)) {
            (Some(&"tree"), Some(r)) | (Some(&"blob"), Some(r)) => Some(r.to_string()),
            (None, _) => None,
            _ => return Err(invalid()),
        };
        if at_ref.is_some() {
            repo.git_ref = at_ref;
        }
        Ok(repo)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchConfig {
    /// Repository metadata API, used to resolve the default branch.
    pub api_base: String,
    /// Raw file endpoint: `{raw_base}/{owner}/{name}/{ref}/{file}`.
    pub raw_base: String,
    /// Environment variable holding an auth token, if any.
    pub token_env: Option<String>,
    pub readme_names: Vec<String>,
    #[serde(with = "crate::http::millis")]
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            api_base: "https://api.github.com".into(),
            raw_base: "https://raw.githubusercontent.com".into(),
            token_env: Some("GITHUB_TOKEN".into()),
            readme_names: [
                "README.md",
                "readme.md",
                "Readme.md",
                "README.markdown",
                "README.rst",
                "README.txt",
                "README",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            timeout: Duration::from_secs(20),
            retry: RetryPolicy::default(),
            max_in_flight: 4,
        }
    }
}

impl FetchConfig {
    fn headers(&self) -> Vec<(String, String)> {
        let mut h = vec![("accept".to_string(), "application/vnd.github+json".to_string())];
        if let Some(token) = self
            .token_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|t| !t.is_empty())
        {
            h.push(("authorization".to_string(), format!("Bearer {token}")));
        }
        h
    }
}

fn rate_limit(resp: &HttpResponse) -> Option<Option<Duration>> {
    let exhausted = resp.header("x-ratelimit-remaining") == Some("0");
    if resp.status == 429 || (resp.status == 403 && exhausted) {
        let after = resp
            .header("retry-after")
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        Some(after)
    } else {
        None
    }
}

/// GET with transient-failure retries (transport errors and 5xx). Any
/// other response, 404 included, is handed back for the caller to judge.
fn get_with_retry(transport: &dyn HttpTransport, url: &str, cfg: &FetchConfig) -> Result<HttpResponse, HarvestError> {
    let headers = cfg.headers();
    let resp = retry(&cfg.retry, |_| match transport.get(url, &headers, cfg.timeout) {
        Err(e) => Attempt::Retry(TransportOrStatus::Transport(e)),
        Ok(resp) if resp.status >= 500 => Attempt::Retry(TransportOrStatus::Status(resp.status)),
        Ok(resp) => Attempt::<_, TransportOrStatus>::Done(resp),
    })
    .map_err(|(last, attempts, _)| HarvestError::Exhausted { attempts, last })?;
    if let Some(retry_after) = rate_limit(&resp) {
        let host = url.split('/').nth(2).unwrap_or(url).to_string();
        return Err(HarvestError::RateLimited { host, retry_after });
    }
    Ok(resp)
}

/// Fetches a repository's raw README markdown, resolving the default
/// branch first when the reference names none.
pub fn fetch_readme(repo: &RepoRef, cfg: &FetchConfig, transport: &dyn HttpTransport) -> Result<String, HarvestError> {
    let branch = match &repo.git_ref {
        Some(r) => r.clone(),
        None => {
            let url = format!("{}/repos/{}/{}", cfg.api_base, repo.owner, repo.name);
            let resp = get_checked(transport, &url, cfg)?;
            if resp.status == 404 {
                return Err(HarvestError::NotFound(format!("repository {}", repo.canonical())));
            }
            let meta: serde_json::Value = serde_json::from_str(&resp.body)
                .map_err(|e| HarvestError::Protocol(format!("repository metadata: {e}")))?;
            meta.get("default_branch")
                .and_then(|b| b.as_str())
                .ok_or_else(|| HarvestError::Protocol("metadata lacks default_branch".into()))?
                .to_string()
        }
    };
    for name in &cfg.readme_names {
        let url = format!("{}/{}/{}/{}/{}", cfg.raw_base, repo.owner, repo.name, branch, name);
        let resp = get_checked(transport, &url, cfg)?;
        if resp.status != 404 {
            return Ok(resp.body);
        }
    }
    Err(HarvestError::NotFound(format!(
        "README in {}@{branch}",
        repo.canonical()
    )))
}

fn get_checked(transport: &dyn HttpTransport, url: &str, cfg: &FetchConfig) -> Result<HttpResponse, HarvestError> {
    let resp = get_with_retry(transport, url, cfg)?;
    if resp.is_success() || resp.status == 404 {
        Ok(resp)
    } else {
        Err(HarvestError::Http {
            status: resp.status,
            url: url.to_string(),
            excerpt: resp.body.chars().take(200).collect(),
        })
    }
}

/// Fetches many READMEs with at most `cfg.max_in_flight` requests in flight.
pub fn fetch_all(
    repos: &[RepoRef],
    cfg: &FetchConfig,
    transport: &dyn HttpTransport,
) -> Vec<Result<String, HarvestError>> {
    bounded_map(repos, cfg.max_in_flight, |_, repo| fetch_readme(repo, cfg, transport))
}

/// One unannotated mention in harvester output. `label` is always empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestedMention {
    pub url: String,
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub kind: UrlKind,
}

/// A context record awaiting annotation, in the corpus line schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestedRecord {
    pub id: String,
    pub repo: String,
    pub context: String,
    pub mentions: Vec<HarvestedMention>,
}

/// Extracts every URL from `markdown` and builds its context. URLs whose
/// contexts come out identical share one record.
pub fn harvest_markdown(
    repo: &str,
    markdown: &str,
    extract: &ExtractConfig,
    context: &ContextConfig,
) -> Result<Vec<HarvestedRecord>, HarvestError> {
    let mut records: Vec<HarvestedRecord> = Vec::new();
    for u in extract_urls(markdown, extract) {
        let built = build_context(markdown, u.start, u.end, context)?;
        let mention = HarvestedMention {
            url: u.url,
            start: built.start,
            end: built.end,
            label: String::new(),
            kind: u.kind,
        };
        match records.iter_mut().find(|r| r.context == built.context) {
            Some(r) => {
                if !r
                    .mentions
                    .iter()
                    .any(|m| m.start < mention.end && mention.start < m.end)
                {
                    r.mentions.push(mention);
                    r.mentions.sort_by_key(|m| m.start);
                }
            }
            None => {
                let id = format!("{repo}#{}", records.len() + 1);
                records.push(HarvestedRecord {
                    id,
                    repo: repo.to_string(),
                    context: built.context,
                    mentions: vec![mention],
                });
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;
    use std::sync::Mutex;

    struct Scripted {
        responses: Mutex<VecDeque<Result<HttpResponse, TransportError>>>,
        seen: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(r: Vec<Result<HttpResponse, TransportError>>) -> Self {
            Self {
                responses: Mutex::new(r.into()),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    fn resp(status: u16, body: &str) -> Result<HttpResponse, TransportError> {
        Ok(HttpResponse {
            status,
            headers: vec![],
            body: body.into(),
        })
    }

    impl HttpTransport for Scripted {
        fn get(&self, url: &str, _: &[(String, String)], _: Duration) -> Result<HttpResponse, TransportError> {
            self.seen.lock().unwrap().push(url.to_string());
            self.responses.lock().unwrap().pop_front().expect("script exhausted")
        }
        fn post_json(
            &self,
            _: &str,
            _: &[(String, String)],
            _: &str,
            _: Duration,
        ) -> Result<HttpResponse, TransportError> {
            unimplemented!()
        }
    }

    fn cfg(retries: u32) -> FetchConfig {
        FetchConfig {
            api_base: "http://api".into(),
            raw_base: "http://raw".into(),
            token_env: None,
            readme_names: vec!["README.md".into(), "README.rst".into()],
            retry: RetryPolicy::no_delay(retries),
            ..Default::default()
        }
    }

    #[test]
    fn parses_repo_refs() {
        let r: RepoRef = "louiseGAN514/Hidden-Entity".parse().unwrap();
        assert_eq!(r.canonical(), "github.com/louiseGAN514/Hidden-Entity");
        let r: RepoRef = "https://github.com/a/b.git".parse().unwrap();
        assert_eq!((r.owner.as_str(), r.name.as_str()), ("a", "b"));
        let r: RepoRef = "https://github.com/a/b/tree/dev".parse().unwrap();
        assert_eq!(r.git_ref.as_deref(), Some("dev"));
        let r: RepoRef = "github.com/a/b@v1.2".parse().unwrap();
        assert_eq!(r.git_ref.as_deref(), Some("v1.2"));
        assert_eq!(r.to_string(), "github.com/a/b@v1.2");
        assert!("justone".parse::<RepoRef>().is_err());
        assert!("github.com/a".parse::<RepoRef>().is_err());
    }

    #[test]
    fn resolves_default_branch_then_fetches() {
        let t = Scripted::new(vec![resp(200, r#"{"default_branch":"main"}"#), resp(200, "# Hello")]);
        let repo: RepoRef = "o/n".parse().unwrap();
        assert_eq!(fetch_readme(&repo, &cfg(0), &t).unwrap(), "# Hello");
        assert_eq!(
            *t.seen.lock().unwrap(),
            ["http://api/repos/o/n", "http://raw/o/n/main/README.md"]
        );
    }

    #[test]
    fn missing_readme_is_not_found() {
        let t = Scripted::new(vec![resp(404, ""), resp(404, "")]);
        let mut repo: RepoRef = "o/n".parse().unwrap();
        repo.git_ref = Some("main".into());
        assert!(matches!(
            fetch_readme(&repo, &cfg(0), &t),
            Err(HarvestError::NotFound(_))
        ));
        let t = Scripted::new(vec![resp(404, "")]);
        repo.git_ref = None;
        assert!(matches!(
            fetch_readme(&repo, &cfg(0), &t),
            Err(HarvestError::NotFound(_))
        ));
    }

    #[test]
    fn transient_failures_exhaust_retry_cap() {
        let t = Scripted::new(vec![
            Err(TransportError::Timeout),
            resp(503, ""),
            Err(TransportError::Timeout),
            resp(200, "never reached"),
        ]);
        let mut repo: RepoRef = "o/n".parse().unwrap();
        repo.git_ref = Some("main".into());
        match fetch_readme(&repo, &cfg(2), &t) {
            Err(HarvestError::Exhausted { attempts, last }) => {
                assert_eq!(attempts, 3);
                assert_eq!(last, TransportOrStatus::Transport(TransportError::Timeout));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(t.seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn rate_limit_surfaces_retry_after() {
        let t = Scripted::new(vec![Ok(HttpResponse {
            status: 429,
            headers: vec![("Retry-After".into(), "42".into())],
            body: String::new(),
        })]);
        let mut repo: RepoRef = "o/n".parse().unwrap();
        repo.git_ref = Some("main".into());
        match fetch_readme(&repo, &cfg(3), &t) {
            Err(HarvestError::RateLimited { retry_after, .. }) => {
                assert_eq!(retry_after, Some(Duration::from_secs(42)))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn harvest_groups_shared_contexts() {
        let md = "Gowalla https://snap.stanford.edu/data/loc-gowalla.html : the pre-processed data that we used in the paper can be downloaded here http://dawenl.github.io/data/gowalla_pro.zip .\n\nLicense: see https://opensource.org/licenses/MIT for the full terms of the license that applies.\n";
        let recs = harvest_markdown(
            "github.com/o/n",
            md,
            &ExtractConfig::default(),
            &ContextConfig::default(),
        )
        .unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].mentions.len(), 2);
        assert!(recs.iter().flat_map(|r| &r.mentions).all(|m| m.label.is_empty()));
        for r in &recs {
            for m in &r.mentions {
                let s: String = r.context.chars().skip(m.start).take(m.end - m.start).collect();
                assert_eq!(s, m.url);
            }
        }
    }
}
