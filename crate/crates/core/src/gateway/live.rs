use std::collections::BTreeMap;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{ChatBackend, ChatRequest, GatewayError, RoleTag};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub api_key: String,
    pub default_model: String,
    pub role_models: BTreeMap<RoleTag, String>,
    pub retries: u32,
    pub backoff_base: Duration,
    pub requests_per_minute: Option<u32>,
    pub timeout: Duration,
}

impl LiveConfig {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        LiveConfig {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            default_model: DEFAULT_MODEL.into(),
            role_models: BTreeMap::new(),
            retries: 3,
            backoff_base: Duration::from_secs(1),
            requests_per_minute: None,
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads `CHRONOQA_ENDPOINT`, `CHRONOQA_API_KEY` (or `OPENAI_API_KEY`),
    /// `CHRONOQA_MODEL` and per-role `CHRONOQA_MODEL_<ROLE>`.
    pub fn from_env() -> Result<Self, GatewayError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, GatewayError> {
        let key = get("CHRONOQA_API_KEY")
            .or_else(|| get("OPENAI_API_KEY"))
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| {
                GatewayError::Auth("set CHRONOQA_API_KEY or OPENAI_API_KEY for live calls".into())
            })?;
        let mut cfg = LiveConfig::new(get("CHRONOQA_ENDPOINT").unwrap_or_else(|| DEFAULT_ENDPOINT.into()), key);
        if let Some(m) = get("CHRONOQA_MODEL") {
            cfg.default_model = m;
        }
        for role in RoleTag::ALL {
            if let Some(m) = get(&format!("CHRONOQA_MODEL_{}", role.as_str().to_uppercase())) {
                cfg.role_models.insert(role, m);
            }
        }
        Ok(cfg)
    }

    pub fn model_for(&self, role: RoleTag) -> &str {
        self.role_models.get(&role).unwrap_or(&self.default_model)
    }
}

/// Token bucket allowing a burst of `per_minute` requests.
#[derive(Debug)]
pub struct RateLimiter {
    per_minute: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(per_minute: u32) -> Self {
        let cap = per_minute.max(1) as f64;
        RateLimiter { per_minute: cap, state: Mutex::new((cap, Instant::now())) }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                let refill = now.duration_since(s.1).as_secs_f64() * self.per_minute / 60.0;
                s.0 = (s.0 + refill).min(self.per_minute);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - s.0) * 60.0 / self.per_minute)
            };
            thread::sleep(wait);
        }
    }
}

/// OpenAI-compatible chat-completions client.
pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    limiter: Option<RateLimiter>,
}

enum Failure {
    Transient(String),
    Fatal(GatewayError),
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let limiter = config.requests_per_minute.map(RateLimiter::new);
        Ok(LiveBackend { config, client, limiter })
    }

    fn body(&self, req: &ChatRequest) -> Value {
        let messages: Vec<Value> = req
            .messages
            .iter()
            .map(|m| {
                let role = match m.speaker.as_str() {
                    "system" | "assistant" => m.speaker.as_str(),
                    _ => "user",
                };
                json!({"role": role, "content": m.text})
            })
            .collect();
        json!({
            "model": self.config.model_for(req.role_tag),
            "messages": messages,
            "temperature": req.decoding.temperature,
            "max_tokens": req.decoding.max_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Failure> {
        if let Some(l) = &self.limiter {
            l.acquire();
        }
        let resp = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.config.api_key)
            .json(body)
            .send()
            .map_err(|e| Failure::Transient(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Failure::Transient(e.to_string()))?;
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(Failure::Fatal(GatewayError::Auth(format!("HTTP {status}"))));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Failure::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(GatewayError::Transport(format!("HTTP {status}: {text}"))));
        }
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(GatewayError::Transport(format!("bad response JSON: {e}"))))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Failure::Fatal(GatewayError::Transport("response has no message content".into())))
    }
}

impl ChatBackend for LiveBackend {
    fn name(&self) -> &str {
        "live"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let body = self.body(req);
        let mut last = String::new();
        for i in 0..=self.config.retries {
            if i > 0 {
                let delay = self.config.backoff_base * 2u32.saturating_pow(i - 1);
                log::warn!("{} request failed ({last}); retrying in {delay:?}", req.role_tag);
                thread::sleep(delay);
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(msg)) => last = msg,
            }
        }
        Err(GatewayError::Transport(format!(
            "{} retries exhausted, last error: {last}",
            self.config.retries
        )))
    }
}
