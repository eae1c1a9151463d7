//! Static bearer tokens, provisioned offline.

use std::collections::HashMap;
use std::path::Path;

use axum::extract::FromRequestParts;
use axum::http::request::Parts;
use axum::http::header::AUTHORIZATION;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::state::AppState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Student,
    Instructor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    pub user_id: String,
    pub role: Role,
}

impl Principal {
    pub fn is_instructor(&self) -> bool {
        self.role == Role::Instructor
    }

    /// May this principal read `user`'s records?
    pub fn can_read(&self, user: &str) -> bool {
        self.is_instructor() || self.user_id == user
    }

    pub fn require_instructor(&self) -> Result<(), ApiError> {
        if self.is_instructor() {
            Ok(())
        } else {
            Err(ApiError::forbidden("instructor role required"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEntry {
    pub token: String,
    pub user_id: String,
    pub role: Role,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenFile {
    pub tokens: Vec<TokenEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum TokenError {
    #[error("cannot access token file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("token file {path} is malformed: {message}")]
    Malformed { path: String, message: String },
    #[error("user {0} appears more than once")]
    DuplicateUser(String),
}

/// 32 random bytes, hex encoded.
pub fn new_token<R: RngCore>(rng: &mut R) -> String {
    let mut bytes = [0u8; 32];
    rng.fill_bytes(&mut bytes);
    hex::encode(bytes)
}

impl TokenFile {
    pub fn load(path: &Path) -> Result<Self, TokenError> {
        let text = std::fs::read_to_string(path).map_err(|source| TokenError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: Self = serde_json::from_str(&text).map_err(|e| TokenError::Malformed {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        file.check()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), TokenError> {
        let io = |source| TokenError::Io {
            path: path.display().to_string(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut text = serde_json::to_string_pretty(self).expect("tokens serialize");
        text.push('\n');
        std::fs::write(path, text).map_err(io)
    }

    fn check(&self) -> Result<(), TokenError> {
        let mut seen = std::collections::HashSet::new();
        for t in &self.tokens {
            if !seen.insert(t.user_id.as_str()) {
                return Err(TokenError::DuplicateUser(t.user_id.clone()));
            }
        }
        Ok(())
    }

    /// Add a fresh token for each user not already present; returns the new
    /// entries.
    pub fn provision<R: RngCore>(
        &mut self,
        rng: &mut R,
        users: impl IntoIterator<Item = (String, Role)>,
    ) -> Result<Vec<TokenEntry>, TokenError> {
        let mut added = Vec::new();
        for (user_id, role) in users {
            if self.tokens.iter().any(|t| t.user_id == user_id) {
                return Err(TokenError::DuplicateUser(user_id));
            }
            let entry = TokenEntry {
                token: new_token(rng),
                user_id,
                role,
            };
            self.tokens.push(entry.clone());
            added.push(entry);
        }
        Ok(added)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tokens {
    by_token: HashMap<String, Principal>,
}

impl Tokens {
    pub fn lookup(&self, token: &str) -> Option<&Principal> {
        self.by_token.get(token)
    }
}

impl From<&TokenFile> for Tokens {
    fn from(f: &TokenFile) -> Self {
        Self {
            by_token: f
                .tokens
                .iter()
                .map(|t| {
                    (
                        t.token.clone(),
                        Principal {
                            user_id: t.user_id.clone(),
                            role: t.role,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl FromRequestParts<AppState> for Principal {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let header = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
        let token = header
            .strip_prefix("Bearer ")
            .map(str::trim)
            .ok_or_else(|| ApiError::unauthorized("expected `Authorization: Bearer <token>`"))?;
        state
            .tokens
            .lookup(token)
            .cloned()
            .ok_or_else(|| ApiError::unauthorized("unknown token"))
    }
}
