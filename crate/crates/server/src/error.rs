use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ransomgame_core::Violation;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("invalid request")]
    Invalid(Vec<Violation>),
    #[error("no session {0}")]
    UnknownSession(String),
    #[error("not found")]
    NotFound,
    #[error("session {0} has ended")]
    SessionEnded(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Serialize)]
struct Body<'a> {
    error: String,
    #[serde(skip_serializing_if = "<[Violation]>::is_empty")]
    violations: &'a [Violation],
}

impl ApiError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError::Invalid(vec![Violation::new(path, message)])
    }

    /// Prefixes every violation path with `prefix.`.
    pub fn nest(self, prefix: &str) -> Self {
        match self {
            ApiError::Invalid(v) => ApiError::Invalid(
                v.into_iter()
                    .map(|x| {
                        let path = if x.path.is_empty() || x.path == "." {
                            prefix.to_string()
                        } else if x.path.starts_with('[') {
                            format!("{prefix}{}", x.path)
                        } else {
                            format!("{prefix}.{}", x.path)
                        };
                        Violation::new(path, x.message)
                    })
                    .collect(),
            ),
            other => other,
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Invalid(_) => StatusCode::BAD_REQUEST,
            ApiError::UnknownSession(_) | ApiError::NotFound => StatusCode::NOT_FOUND,
            ApiError::SessionEnded(_) => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<ransomgame_core::Error> for ApiError {
    fn from(e: ransomgame_core::Error) -> Self {
        use ransomgame_core::Error as E;
        match e {
            E::InvalidInstance(v) => ApiError::Invalid(v),
            E::ReputationLength { .. } | E::Probability { .. } => ApiError::invalid("reputation", e.to_string()),
            E::Scenario(m) => ApiError::invalid("", m),
            E::DecayTable(m) => ApiError::invalid("decay", m),
            E::ZeroRounds => ApiError::invalid("n", e.to_string()),
            E::SearchBudget { .. } | E::EnumerationBudget { .. } | E::LpDimension(_) => {
                ApiError::invalid("", e.to_string())
            }
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let violations: &[Violation] = match &self {
            ApiError::Invalid(v) => v,
            _ => &[],
        };
        let body = Body {
            error: self.to_string(),
            violations,
        };
        (self.status(), Json(body)).into_response()
    }
}

/// Parses JSON, reporting the failing field as a path like `instance.ransoms[2]`.
pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ApiError::invalid(path, e.into_inner().to_string())
    })
}
