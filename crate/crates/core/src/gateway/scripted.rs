use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest, GatewayError, RoleTag};

/// Returns `response` for requests of `role_tag` whose text contains every
/// string in `contains`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub role_tag: RoleTag,
    #[serde(default)]
    pub contains: Vec<String>,
    /// Matches only when the text contains none of these.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excludes: Vec<String>,
    pub response: String,
}

impl ScriptRule {
    pub fn new(role_tag: RoleTag, contains: &[&str], response: impl Into<String>) -> Self {
        ScriptRule {
            role_tag,
            contains: contains.iter().map(|s| s.to_string()).collect(),
            excludes: Vec::new(),
            response: response.into(),
        }
    }

    pub fn excluding(mut self, excludes: &[&str]) -> Self {
        self.excludes = excludes.iter().map(|s| s.to_string()).collect();
        self
    }

    fn matches(&self, req: &ChatRequest, text: &str) -> bool {
        self.role_tag == req.role_tag
            && self.contains.iter().all(|c| text.contains(c.as_str()))
            && !self.excludes.iter().any(|c| text.contains(c.as_str()))
    }
}

/// A rule-driven stand-in for a model, used to author replay fixtures.
/// The first matching rule wins.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    rules: Vec<ScriptRule>,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptRule>) -> Self {
        ScriptedBackend { rules }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(ScriptedBackend { rules: serde_json::from_str(text)? })
    }
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let text = req.text();
        self.rules
            .iter()
            .find(|r| r.matches(req, &text))
            .map(|r| r.response.clone())
            .ok_or_else(|| GatewayError::NoScriptRule { role_tag: req.role_tag, key: req.key() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Message;

    #[test]
    fn first_matching_rule_wins() {
        let b = ScriptedBackend::new(vec![
            ScriptRule::new(RoleTag::Code, &["q1", "ParseError"], "fixed"),
            ScriptRule::new(RoleTag::Code, &["q1"], "broken").excluding(&["ParseError"]),
        ]);
        let first = ChatRequest::new(RoleTag::Code, vec![Message::user("q1")]);
        let retry = ChatRequest::new(RoleTag::Code, vec![Message::user("q1"), Message::user("ParseError at ...")]);
        assert_eq!(b.complete(&first).unwrap(), "broken");
        assert_eq!(b.complete(&retry).unwrap(), "fixed");
        let other = ChatRequest::new(RoleTag::Select, vec![Message::user("q1")]);
        assert!(matches!(b.complete(&other), Err(GatewayError::NoScriptRule { .. })));
    }
}
