//! Chat-completions style HTTP provider.
//!
//! Request: `{"model", "messages": [{"role": "user", "content"}], "temperature", "max_tokens"[, "stop"]}`
//! with a bearer credential. The completion is `choices[0].message.content`.

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use super::{BackendError, CompletionRequest, Provider};

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint_url: String,
    pub api_key: String,
    pub timeout: Duration,
}

pub struct HttpProvider {
    config: HttpConfig,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop: Option<&'a [String]>,
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self { config, agent }
    }

    pub fn endpoint(&self) -> &str {
        &self.config.endpoint_url
    }
}

/// Maps a non-success HTTP status to the retry taxonomy.
pub(crate) fn classify_status(status: u16, body: &str) -> BackendError {
    let message = error_message(body).unwrap_or_else(|| body.chars().take(200).collect());
    match status {
        401 | 403 => BackendError::Auth(message),
        429 => BackendError::RateLimit(message),
        408 | 500..=599 => BackendError::Transport(format!("HTTP {status}: {message}")),
        _ => BackendError::Provider { status, message },
    }
}

fn error_message(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.pointer("/error/message")
        .and_then(Value::as_str)
        .map(str::to_string)
}

pub(crate) fn extract_content(body: &str) -> Result<String, BackendError> {
    let malformed = |why: &str| BackendError::Provider {
        status: 200,
        message: format!("malformed completion response: {why}"),
    };
    let v: Value = serde_json::from_str(body).map_err(|e| malformed(&e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| malformed("missing choices[0].message.content"))
}

impl Provider for HttpProvider {
    fn id(&self) -> &str {
        "http"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let payload = ChatRequest {
            model: &request.params.model_id,
            messages: [Message {
                role: "user",
                content: &request.prompt.final_text,
            }],
            temperature: request.params.temperature,
            max_tokens: request.params.max_tokens,
            stop: request.params.stop.as_deref(),
        };
        let body = serde_json::to_vec(&payload).map_err(|e| BackendError::Transport(e.to_string()))?;
        let mut response = self
            .agent
            .post(&self.config.endpoint_url)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .header("Content-Type", "application/json")
            .send(&body[..])
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &text));
        }
        extract_content(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_classification() {
        assert!(matches!(classify_status(401, ""), BackendError::Auth(_)));
        assert!(matches!(classify_status(429, ""), BackendError::RateLimit(_)));
        assert!(classify_status(408, "").is_retryable());
        assert!(classify_status(503, "").is_retryable());
        let e = classify_status(400, r#"{"error":{"message":"bad model"}}"#);
        assert_eq!(
            e,
            BackendError::Provider {
                status: 400,
                message: "bad model".into()
            }
        );
        assert!(!e.is_retryable());
    }

    #[test]
    fn content_extraction() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"Class: Perfect translation"}}]}"#;
        assert_eq!(extract_content(body).unwrap(), "Class: Perfect translation");
        assert!(extract_content(r#"{"choices":[]}"#).is_err());
    }
}
