use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, TranslateError, TranslationResult, Translator};

#[derive(Debug, Serialize)]
pub struct TranslateRequest<'a> {
    pub question: &'a str,
    pub num_beams: u32,
}

#[derive(Debug, Deserialize)]
pub struct TranslateResponse {
    pub logical_form: String,
    #[serde(default)]
    pub beams: Vec<String>,
}

/// Client for a model server exposing `POST /translate`.
#[derive(Debug, Clone)]
pub struct NeuralTranslator {
    endpoint: String,
    num_beams: u32,
    agent: ureq::Agent,
}

impl NeuralTranslator {
    /// `server_url` is the server root; `/translate` is appended.
    pub fn new(server_url: &str, num_beams: u32, timeout: Duration) -> Self {
        Self {
            endpoint: format!("{}/translate", server_url.trim_end_matches('/')),
            num_beams: num_beams.max(1),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

/// Maps a wire response to a result; alternatives drop empty beams and
/// repeats of the primary form.
pub fn from_response(response: TranslateResponse) -> Result<TranslationResult, TranslateError> {
    let logical_form = response.logical_form.trim().to_string();
    if logical_form.is_empty() {
        return Err(TranslateError::MalformedServerResponse("empty logical_form".into()));
    }
    let mut alternatives: Vec<String> = Vec::new();
    for beam in response.beams.iter().skip(1) {
        let beam = beam.trim();
        if !beam.is_empty() && beam != logical_form && !alternatives.iter().any(|a| a == beam) {
            alternatives.push(beam.to_string());
        }
    }
    Ok(TranslationResult {
        logical_form,
        alternatives,
        backend: Backend::Neural,
        used_fallback: false,
    })
}

impl Translator for NeuralTranslator {
    fn translate(&self, question: &str) -> Result<TranslationResult, TranslateError> {
        if question.trim().is_empty() {
            return Err(TranslateError::EmptyQuestion);
        }
        let request = TranslateRequest {
            question,
            num_beams: self.num_beams,
        };
        let response = match self.agent.post(&self.endpoint).send_json(&request) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                let body: String = r.into_string().unwrap_or_default().chars().take(200).collect();
                return Err(TranslateError::BackendUnavailable(format!(
                    "{} answered HTTP {status}: {body}",
                    self.endpoint
                )));
            }
            Err(ureq::Error::Transport(t)) => {
                return Err(TranslateError::BackendUnavailable(format!("{}: {t}", self.endpoint)))
            }
        };
        let parsed: TranslateResponse = response
            .into_json()
            .map_err(|e| TranslateError::MalformedServerResponse(e.to_string()))?;
        from_response(parsed)
    }
}
