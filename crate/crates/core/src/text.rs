use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A whitespace-tokenized text together with the raw string it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizedText {
    tokens: Vec<String>,
    original: String,
}

impl TokenizedText {
    /// Splits on whitespace. Fails on input with no tokens.
    pub fn parse(raw: &str) -> Result<Self> {
        let tokens: Vec<String> = raw.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            return Err(Error::Domain("text has no tokens".into()));
        }
        Ok(Self {
            tokens,
            original: raw.to_owned(),
        })
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Domain("text has no tokens".into()));
        }
        if tokens.iter().any(|t| t.is_empty() || t.contains(char::is_whitespace)) {
            return Err(Error::Domain("tokens must be non-empty and whitespace-free".into()));
        }
        let original = tokens.join(" ");
        Ok(Self { tokens, original })
    }

    /// Keeps `original` but replaces the token sequence; used by augmenters
    /// whose output is always non-empty by construction.
    pub(crate) fn with_tokens(&self, tokens: Vec<String>) -> Self {
        debug_assert!(!tokens.is_empty());
        Self {
            tokens,
            original: self.original.clone(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn original(&self) -> &str {
        &self.original
    }

    /// Tokens joined by single spaces.
    pub fn canonical(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for TokenizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// A text with its class index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub text: TokenizedText,
    pub label: usize,
}

impl Sample {
    pub fn new(text: TokenizedText, label: usize) -> Self {
        Self { text, label }
    }
}
