//! Model access for every prompting stage, behind one [`ChatBackend`] trait.
//!
//! Replay runs never touch the network: responses come from a directory of
//! fixtures keyed by a digest of the request.

mod live;
mod scripted;
mod store;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use live::{LiveBackend, LiveConfig, RateLimiter};
pub use scripted::{ScriptRule, ScriptedBackend};
pub use store::{Fixture, FixtureMeta, FixtureStore, RecordBackend, ReplayBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleTag {
    Mem,
    Retrieval,
    Code,
    Select,
    Extract,
    Link,
    Create,
}

impl RoleTag {
    pub const ALL: [RoleTag; 7] = [
        RoleTag::Mem,
        RoleTag::Retrieval,
        RoleTag::Code,
        RoleTag::Select,
        RoleTag::Extract,
        RoleTag::Link,
        RoleTag::Create,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleTag::Mem => "mem",
            RoleTag::Retrieval => "retrieval",
            RoleTag::Code => "code",
            RoleTag::Select => "select",
            RoleTag::Extract => "extract",
            RoleTag::Link => "link",
            RoleTag::Create => "create",
        }
    }
}

impl fmt::Display for RoleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoleTag::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role tag {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    /// `system`, `user` or `assistant`.
    pub speaker: String,
    pub text: String,
}

impl Message {
    pub fn system(text: impl Into<String>) -> Self {
        Message { speaker: "system".into(), text: text.into() }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Message { speaker: "user".into(), text: text.into() }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Message { speaker: "assistant".into(), text: text.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_max_tokens() -> u32 {
    1024
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding { temperature: 0.0, max_tokens: default_max_tokens() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub role_tag: RoleTag,
    pub messages: Vec<Message>,
    #[serde(default)]
    pub decoding: Decoding,
}

impl ChatRequest {
    pub fn new(role_tag: RoleTag, messages: Vec<Message>) -> Self {
        ChatRequest { role_tag, messages, decoding: Decoding::default() }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("request has no messages".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 over the request re-serialized in a fixed field order, so
    /// key equality depends only on content.
    pub fn key(&self) -> String {
        let canonical = serde_json::json!([
            self.role_tag.as_str(),
            self.messages.iter().map(|m| [&m.speaker, &m.text]).collect::<Vec<_>>(),
            self.decoding.temperature,
            self.decoding.max_tokens,
        ]);
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    /// Concatenated message text, used by scripted rules.
    pub fn text(&self) -> String {
        self.messages.iter().map(|m| m.text.as_str()).collect::<Vec<_>>().join("\n")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("no fixture for {role_tag} request {key}")]
    MissingFixture { role_tag: RoleTag, key: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("fixture store: {0}")]
    Store(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no script rule matches {role_tag} request {key}")]
    NoScriptRule { role_tag: RoleTag, key: String },
}

/// A source of completions. Implementations are shared across worker threads.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError>;
}
