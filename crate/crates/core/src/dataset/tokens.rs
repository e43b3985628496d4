use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PAD: &str = "<pad>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
pub const PAD_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const DEFAULT_MAX_LEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("token {token:?} at offset {pos} is not in the vocabulary")]
    OutOfVocabulary { token: String, pos: usize },
    #[error("sequence of {len} tokens exceeds maximum length {max}")]
    Overlength { len: usize, max: usize },
    #[error("unterminated bracket atom at offset {0}")]
    Unterminated(usize),
    #[error("token id {0} out of range")]
    BadId(u32),
}

/// Split a SMILES string into tokens: bracket atoms, two-letter halogens and
/// `%nn` ring labels are single tokens, everything else is one character.
pub fn split_tokens(s: &str) -> Result<Vec<&str>, TokenError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let len = match b[i] {
            b'[' => match s[i..].find(']') {
                Some(end) => end + 1,
                None => return Err(TokenError::Unterminated(i)),
            },
            b'B' if b.get(i + 1) == Some(&b'r') => 2,
            b'C' if b.get(i + 1) == Some(&b'l') => 2,
            b'%' if i + 2 < b.len() && b[i + 1].is_ascii_digit() && b[i + 2].is_ascii_digit() => 3,
            _ => s[i..].chars().next().map(char::len_utf8).unwrap_or(1),
        };
        out.push(&s[i..i + len]);
        i += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    max_len: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Specials first, then corpus tokens in sorted order.
    pub fn build<'a>(corpus: impl IntoIterator<Item = &'a str>, max_len: usize) -> Result<Self, TokenError> {
        let mut set = BTreeSet::new();
        for s in corpus {
            for t in split_tokens(s)? {
                set.insert(t.to_string());
            }
        }
        let mut tokens = vec![PAD.to_string(), BOS.to_string(), EOS.to_string()];
        tokens.extend(set);
        Ok(Self::from_tokens(tokens, max_len))
    }

    pub fn from_tokens(tokens: Vec<String>, max_len: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, max_len, index }
    }

    /// Rebuild the lookup table after deserialization.
    pub fn reindex(mut self) -> Self {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Token ids without the start/end markers; length counted on these.
    pub fn tokenize(&self, s: &str) -> Result<Vec<u32>, TokenError> {
        let parts = split_tokens(s)?;
        if parts.len() > self.max_len {
            return Err(TokenError::Overlength {
                len: parts.len(),
                max: self.max_len,
            });
        }
        let mut pos = 0;
        let mut out = Vec::with_capacity(parts.len());
        for t in parts {
            match self.id(t) {
                Some(id) if id > EOS_ID => out.push(id),
                _ => {
                    return Err(TokenError::OutOfVocabulary {
                        token: t.to_string(),
                        pos,
                    })
                }
            }
            pos += t.len();
        }
        Ok(out)
    }

    /// Concatenate tokens, stopping at the end marker and skipping pad/start.
    pub fn detokenize(&self, ids: &[u32]) -> Result<String, TokenError> {
        let mut s = String::new();
        for &id in ids {
            match id {
                EOS_ID => break,
                PAD_ID | BOS_ID => continue,
                _ => s.push_str(self.token(id).ok_or(TokenError::BadId(id))?),
            }
        }
        Ok(s)
    }
}
