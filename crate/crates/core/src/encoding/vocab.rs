use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::{EncodingError, BOTTOM_TOKEN, PAD_TOKEN, UNK, UNK_TOKEN};

pub const DEFAULT_MAX_SIZE: usize = 10_000;
pub const DEFAULT_MIN_COUNT: usize = 2;

/// Frozen token → index map. Indices 0..3 are PAD, UNK and BOTTOM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Count tokens over the corpus and keep those seen at least `min_count`
    /// times, most frequent first (ties lexicographic), up to `max_size`
    /// entries besides the reserved ones.
    pub fn build<'a, I>(corpus: I, max_size: usize, min_count: usize) -> Result<Self, EncodingError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for t in corpus {
            *freq.entry(t).or_default() += 1;
        }
        if freq.is_empty() {
            return Err(EncodingError::EmptyCorpus);
        }
        let reserved = [PAD_TOKEN, UNK_TOKEN, BOTTOM_TOKEN];
        let mut ranked: Vec<(&str, usize)> = freq
            .into_iter()
            .filter(|(t, c)| *c >= min_count && !reserved.contains(t))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(max_size);
        let mut v = Vocabulary {
            tokens: Vec::new(),
            counts: Vec::new(),
            index: HashMap::new(),
        };
        for t in reserved {
            v.push(t.to_string(), 0);
        }
        for (t, c) in ranked {
            v.push(t.to_string(), c);
        }
        Ok(v)
    }

    fn push(&mut self, token: String, count: usize) {
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.counts.push(count);
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Training-corpus frequency of the token at `index` (0 for reserved).
    pub fn count(&self, index: usize) -> usize {
        self.counts[index]
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.get(t.as_ref())).collect()
    }

    /// `{token: index}` in index order.
    pub fn to_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), serde_json::Value::from(i)))
            .collect();
        serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EncodingError> {
        let bad = |m: &str| EncodingError::BadVocabulary(m.to_string());
        let map: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
        let mut tokens = vec![None; map.len()];
        for (t, i) in map {
            let i = i.as_u64().ok_or_else(|| bad("index is not an integer"))? as usize;
            let slot = tokens.get_mut(i).ok_or_else(|| bad("indices are not dense"))?;
            if slot.replace(t).is_some() {
                return Err(bad("duplicate index"));
            }
        }
        let tokens: Vec<String> = tokens
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| bad("indices are not dense"))?;
        if tokens.len() < 3 || tokens[..3] != [PAD_TOKEN, UNK_TOKEN, BOTTOM_TOKEN] {
            return Err(bad("reserved tokens missing"));
        }
        let mut v = Vocabulary {
            tokens: Vec::new(),
            counts: Vec::new(),
            index: HashMap::new(),
        };
        for t in tokens {
            v.push(t, 0);
        }
        Ok(v)
    }

    /// Hex SHA-256 of the JSON form; datasets and checkpoints refer to a
    /// vocabulary by this hash.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}
