use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{normalize_scores, Level, ScoreError, Scorer, Scores, UNKNOWN_SCORE};
use crate::perception::build_prompt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTemplate {
    /// "Among <prompt>, can you give the scores ...": the reply is used as is.
    #[default]
    Generative,
    /// The two question-answering templates; replies are usually normalised.
    Question,
}

impl PromptTemplate {
    pub fn render(self, goal: &str, candidates: &[String], level: Level) -> String {
        let listing = build_prompt(candidates, &[]).unwrap_or_default();
        let question = match (self, level) {
            (PromptTemplate::Generative, Level::Object) => {
                format!("Among {listing} can you give the scores of likelihood to find a {goal} nearby?")
            }
            (PromptTemplate::Generative, Level::Room) => {
                format!("Among {listing} can you give the scores of likelihood to find a {goal} inside?")
            }
            (PromptTemplate::Question, Level::Object) => {
                format!("What is a {goal} likely to be near? Candidates: {listing}")
            }
            (PromptTemplate::Question, Level::Room) => {
                format!("If you want to find a {goal}, where should you go? Candidates: {listing}")
            }
        };
        format!("{question}\nAnswer with one line per candidate, formatted as `<candidate>: <score>`.")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmEndpointConfig {
    /// Either the API root (`.../v1`) or the full chat-completions URL.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub timeout_secs: f64,
    pub cache_path: Option<PathBuf>,
    pub template: PromptTemplate,
    /// Min-max normalise parsed scores per request.
    pub normalize: bool,
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1".into(),
            model: "gpt-3.5-turbo".into(),
            token_env: Some("SOFTNAV_LLM_TOKEN".into()),
            timeout_secs: 30.0,
            cache_path: None,
            template: PromptTemplate::Generative,
            normalize: false,
        }
    }
}

impl LlmEndpointConfig {
    pub fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ScoreError::Http {
                endpoint: self.endpoint(),
                message: format!("timeout must be positive, got {}", self.timeout_secs),
            });
        }
        Ok(())
    }
}

/// Chat request body for one prompt.
pub fn request_body(cfg: &LlmEndpointConfig, prompt: &str) -> String {
    json!({
        "model": cfg.model,
        "messages": [{"role": "user", "content": prompt}],
    })
    .to_string()
}

/// Cache key: hex SHA-256 of the request body.
pub fn request_key(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// Sends a JSON body and returns the raw response text.
pub trait ChatTransport: Send + Sync {
    fn post_json(&self, url: &str, token: Option<&str>, body: &str, timeout: Duration) -> Result<String, String>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct UreqTransport;

impl ChatTransport for UreqTransport {
    fn post_json(&self, url: &str, token: Option<&str>, body: &str, timeout: Duration) -> Result<String, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        let mut req = agent.post(url).header("Content-Type", "application/json");
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        resp.body_mut().read_to_string().map_err(|e| e.to_string())
    }
}

fn canonical(label: &str) -> String {
    label
        .trim()
        .trim_matches(|c: char| matches!(c, '*' | '`' | '"' | '\'' | '.'))
        .trim()
        .to_lowercase()
        .replace('_', " ")
}

fn strip_list_marker(line: &str) -> &str {
    let t = line.trim_start();
    let t = t.trim_start_matches(['-', '*', '•']).trim_start();
    let digits = t.len() - t.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            if r.starts_with(' ') {
                return r.trim_start();
            }
        }
    }
    t
}

fn first_number(s: &str) -> Option<f64> {
    let start = s.find(|c: char| c.is_ascii_digit())?;
    let tail = &s[start..];
    let end = tail
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(tail.len());
    tail[..end].trim_end_matches('.').parse().ok()
}

/// Parse `<candidate>: <number>` lines. Numbers above 1 are read as
/// percentages; candidates the reply leaves out get [`UNKNOWN_SCORE`].
pub fn parse_reply(raw: &str, candidates: &[String]) -> Result<Scores, ScoreError> {
    let wanted: BTreeMap<String, &String> = candidates.iter().map(|c| (canonical(c), c)).collect();
    let mut found = Scores::new();
    for line in raw.lines() {
        let line = strip_list_marker(line);
        let Some((name, rest)) = line.split_once(':') else {
            continue;
        };
        let Some(&label) = wanted.get(&canonical(name)) else {
            continue;
        };
        let Some(mut v) = first_number(rest) else { continue };
        if v > 1.0 {
            v /= 100.0;
        }
        found.entry(label.clone()).or_insert(v.clamp(0.0, 1.0));
    }
    if found.is_empty() {
        return Err(ScoreError::Unparseable { raw: raw.to_string() });
    }
    Ok(candidates
        .iter()
        .map(|c| (c.clone(), found.get(c).copied().unwrap_or(UNKNOWN_SCORE)))
        .collect())
}

fn reply_text(endpoint: &str, response: &str) -> Result<String, ScoreError> {
    let v: serde_json::Value = serde_json::from_str(response).map_err(|e| ScoreError::Http {
        endpoint: endpoint.to_string(),
        message: format!("invalid JSON response: {e}"),
    })?;
    v["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| ScoreError::Http {
            endpoint: endpoint.to_string(),
            message: format!("response has no choices[0].message.content: {response}"),
        })
}

/// Scorer backed by a chat-completion endpoint with a persistent reply cache.
pub struct LlmScorer<T> {
    cfg: LlmEndpointConfig,
    transport: T,
    cache: Mutex<BTreeMap<String, String>>,
    calls: AtomicUsize,
}

impl<T: ChatTransport> LlmScorer<T> {
    /// Loads the cache file if it exists.
    pub fn new(cfg: LlmEndpointConfig, transport: T) -> Result<Self, ScoreError> {
        cfg.validate()?;
        let cache = match &cfg.cache_path {
            Some(p) if p.exists() => {
                let file_err = |message: String| ScoreError::File {
                    path: p.display().to_string(),
                    message,
                };
                let text = std::fs::read_to_string(p).map_err(|e| file_err(e.to_string()))?;
                serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))?
            }
            _ => BTreeMap::new(),
        };
        Ok(Self {
            cfg,
            transport,
            cache: Mutex::new(cache),
            calls: AtomicUsize::new(0),
        })
    }

    /// Number of network requests issued so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn cached_replies(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    fn persist(&self, cache: &BTreeMap<String, String>) -> Result<(), ScoreError> {
        let Some(path) = &self.cfg.cache_path else {
            return Ok(());
        };
        let file_err = |e: std::io::Error| ScoreError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_string_pretty(cache).expect("cache serialises");
        std::fs::write(&tmp, text).map_err(file_err)?;
        std::fs::rename(&tmp, path).map_err(file_err)
    }

    /// Raw parsed scores for one request, served from cache when possible.
    pub fn fetch(&self, goal: &str, candidates: &[String], level: Level) -> Result<Scores, ScoreError> {
        if candidates.is_empty() {
            return Err(ScoreError::NoCandidates);
        }
        let prompt = self.cfg.template.render(goal, candidates, level);
        let body = request_body(&self.cfg, &prompt);
        let key = request_key(&body);
        let cached = self.cache.lock().unwrap().get(&key).cloned();
        let reply = match cached {
            Some(r) => r,
            None => {
                let endpoint = self.cfg.endpoint();
                let token = self.cfg.token_env.as_deref().and_then(|v| std::env::var(v).ok());
                self.calls.fetch_add(1, Ordering::SeqCst);
                let response = self
                    .transport
                    .post_json(
                        &endpoint,
                        token.as_deref(),
                        &body,
                        Duration::from_secs_f64(self.cfg.timeout_secs),
                    )
                    .map_err(|message| ScoreError::Http {
                        endpoint: endpoint.clone(),
                        message,
                    })?;
                let text = reply_text(&endpoint, &response)?;
                // only cache replies that parse
                parse_reply(&text, candidates)?;
                let mut cache = self.cache.lock().unwrap();
                cache.insert(key, text.clone());
                self.persist(&cache)?;
                text
            }
        };
        parse_reply(&reply, candidates)
    }
}

impl<T: ChatTransport> Scorer for LlmScorer<T> {
    fn score_candidates(&self, goal: &str, candidates: &[String], level: Level) -> Result<Scores, ScoreError> {
        let raw = self.fetch(goal, candidates, level)?;
        Ok(if self.cfg.normalize {
            normalize_scores(&raw)
        } else {
            raw
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    struct Canned {
        reply: String,
        seen: Mutex<Vec<String>>,
    }

    impl ChatTransport for Canned {
        fn post_json(&self, _: &str, _: Option<&str>, body: &str, _: Duration) -> Result<String, String> {
            self.seen.lock().unwrap().push(body.to_string());
            Ok(json!({"choices": [{"message": {"role": "assistant", "content": self.reply}}]}).to_string())
        }
    }

    struct Down;

    impl ChatTransport for Down {
        fn post_json(&self, _: &str, _: Option<&str>, _: &str, _: Duration) -> Result<String, String> {
            Err("connection refused".into())
        }
    }

    fn canned(reply: &str) -> Canned {
        Canned {
            reply: reply.into(),
            seen: Mutex::new(Vec::new()),
        }
    }

    #[test]
    fn parser_examples() {
        let c = s(&["bathroom", "kitchen"]);
        let m = parse_reply("bathroom: 0.9\nkitchen: 0.1", &c).unwrap();
        assert_eq!((m["bathroom"], m["kitchen"]), (0.9, 0.1));
        let m = parse_reply("bathroom: 90\nkitchen: 10", &c).unwrap();
        assert!((m["bathroom"] - 0.9).abs() < 1e-12 && (m["kitchen"] - 0.1).abs() < 1e-12);
        let c = s(&["bathroom", "gym"]);
        let m = parse_reply("Sure!\n1. **Bathroom**: 0.8\n", &c).unwrap();
        assert_eq!((m["bathroom"], m["gym"]), (0.8, 0.5));
        let m = parse_reply("- living_room: 70%", &s(&["living room"])).unwrap();
        assert!((m["living room"] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn unparseable_reply_keeps_raw_text() {
        match parse_reply("I cannot answer that.", &s(&["gym"])) {
            Err(ScoreError::Unparseable { raw }) => assert_eq!(raw, "I cannot answer that."),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn request_shape() {
        let cfg = LlmEndpointConfig::default();
        let body: serde_json::Value = serde_json::from_str(&request_body(&cfg, "hi")).unwrap();
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "hi");
        assert_eq!(cfg.endpoint(), "http://localhost:8000/v1/chat/completions");
        let prompt = PromptTemplate::Generative.render("toilet", &s(&["bathroom", "gym"]), Level::Room);
        assert!(
            prompt.starts_with("Among bathroom. gym. can you give the scores of likelihood to find a toilet inside?")
        );
    }

    #[test]
    fn second_call_served_from_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = LlmEndpointConfig {
            cache_path: Some(dir.path().join("cache.json")),
            token_env: None,
            ..LlmEndpointConfig::default()
        };
        let scorer = LlmScorer::new(cfg.clone(), canned("bathroom: 95\nkitchen: 5")).unwrap();
        let c = s(&["bathroom", "kitchen"]);
        let a = scorer.score_candidates("toilet", &c, Level::Room).unwrap();
        let b = scorer.score_candidates("toilet", &c, Level::Room).unwrap();
        assert_eq!(a, b);
        assert_eq!(scorer.calls(), 1);
        // a fresh scorer with a dead endpoint falls back to the cache file
        let offline = LlmScorer::new(cfg, Down).unwrap();
        assert_eq!(offline.score_candidates("toilet", &c, Level::Room).unwrap(), a);
        assert_eq!(offline.calls(), 0);
        // uncached request surfaces the endpoint
        match offline.score_candidates("bed", &c, Level::Room) {
            Err(ScoreError::Http { endpoint, .. }) => assert!(endpoint.ends_with("/chat/completions")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn optional_normalisation() {
        let cfg = LlmEndpointConfig {
            normalize: true,
            token_env: None,
            ..LlmEndpointConfig::default()
        };
        let scorer = LlmScorer::new(cfg, canned("a: 0.2\nb: 0.4\nc: 0.6")).unwrap();
        let m = scorer
            .score_candidates("g", &s(&["a", "b", "c"]), Level::Object)
            .unwrap();
        assert!((m["a"]).abs() < 1e-12 && (m["b"] - 0.5).abs() < 1e-12 && (m["c"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_timeout_rejected() {
        let cfg = LlmEndpointConfig {
            timeout_secs: 0.0,
            ..LlmEndpointConfig::default()
        };
        assert!(LlmScorer::new(cfg, Down).is_err());
    }
}
