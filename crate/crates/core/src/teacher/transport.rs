use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use super::{TeacherConfig, Usage};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatReply {
    pub content: String,
    /// Usage as reported by the endpoint, if it reported any.
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransportError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited")]
    RateLimited,
    #[error("server error {status}: {body}")]
    Server { status: u16, body: String },
    #[error("request rejected with status {status}: {body}")]
    Client { status: u16, body: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
}

impl TransportError {
    /// Transport failures and rate limits are worth retrying.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Self::RateLimited | Self::Server { .. } | Self::Network(_))
    }
}

/// Sends one chat completion request. Implementations must be shareable
/// across worker threads.
pub trait Transport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, TransportError>;
}

/// Chat-completion endpoint over HTTP.
pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    api_key: String,
}

impl HttpTransport {
    pub fn new(cfg: &TeacherConfig, api_key: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .build()
            .into();
        Self {
            agent,
            url: cfg.endpoint_url.clone(),
            api_key: api_key.into(),
        }
    }

    /// Key from the environment variable named in the config.
    pub fn from_env(cfg: &TeacherConfig) -> Result<Self, TransportError> {
        let key = std::env::var(&cfg.api_key_env)
            .map_err(|_| TransportError::Auth(format!("environment variable {} is not set", cfg.api_key_env)))?;
        Ok(Self::new(cfg, key))
    }
}

impl Transport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, TransportError> {
        let body = serde_json::json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [{ "role": "user", "content": request.prompt }],
        });
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        match status {
            200..=299 => parse_reply(&text),
            401 | 403 => Err(TransportError::Auth(text)),
            429 => Err(TransportError::RateLimited),
            500..=599 => Err(TransportError::Server { status, body: text }),
            _ => Err(TransportError::Client { status, body: text }),
        }
    }
}

/// Read `choices[0].message.content` and `usage` from a response body.
pub fn parse_reply(body: &str) -> Result<ChatReply, TransportError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| TransportError::Protocol(e.to_string()))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .ok_or_else(|| TransportError::Protocol("missing choices[0].message.content".into()))?
        .to_string();
    let usage = match (
        v.pointer("/usage/prompt_tokens").and_then(|x| x.as_u64()),
        v.pointer("/usage/completion_tokens").and_then(|x| x.as_u64()),
    ) {
        (Some(prompt_tokens), Some(completion_tokens)) => Some(Usage {
            prompt_tokens,
            completion_tokens,
        }),
        _ => None,
    };
    Ok(ChatReply { content, usage })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_with_and_without_usage() {
        let r = parse_reply(r#"{"choices":[{"message":{"content":"('a', 'b')"}}],"usage":{"prompt_tokens":3,"completion_tokens":4}}"#).unwrap();
        assert_eq!(r.content, "('a', 'b')");
        assert_eq!(r.usage, Some(Usage { prompt_tokens: 3, completion_tokens: 4 }));
        let r = parse_reply(r#"{"choices":[{"message":{"content":"x"}}]}"#).unwrap();
        assert_eq!(r.usage, None);
        assert!(matches!(parse_reply("{}"), Err(TransportError::Protocol(_))));
        assert!(matches!(parse_reply("nope"), Err(TransportError::Protocol(_))));
    }

    #[test]
    fn retryable_kinds() {
        assert!(TransportError::RateLimited.is_retryable());
        assert!(TransportError::Network("x".into()).is_retryable());
        assert!(!TransportError::Auth("x".into()).is_retryable());
        assert!(!TransportError::Client { status: 400, body: String::new() }.is_retryable());
    }
}
