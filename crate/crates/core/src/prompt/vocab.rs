use std::collections::HashMap;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::scenes::{Color, Shape, Texture};

pub const PAD: &str = "<pad>";
pub const BOS: &str = "<bos>";
pub const REGION: &str = "<region>";
pub const INS_OPEN: &str = "<ins>";
pub const INS_CLOSE: &str = "</ins>";

/// Reserved tokens occupy ids `0..RESERVED.len()` in this order.
pub const RESERVED: [&str; 5] = [PAD, BOS, REGION, INS_OPEN, INS_CLOSE];

/// Words used by the built-in prompt templates and synonym table.
const FUNCTION_WORDS: &[&str] = &[
    "the", "what", "which", "texture", "is", "does", "have", "of", "in", "scene", "describe",
    "tell", "me", "name", "object", "?",
];
const NOUN_SYNONYMS: &[&str] = &["disk", "ring", "box", "block", "wedge", "pyramid"];

/// Bijective token ↔ id table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    /// Reserved tokens followed by `words` (duplicates and reserved words
    /// are skipped).
    pub fn new<S: AsRef<str>>(words: &[S]) -> Self {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            ids: HashMap::new(),
        };
        for w in RESERVED.iter().copied().chain(words.iter().map(AsRef::as_ref)) {
            if !v.ids.contains_key(w) {
                v.ids.insert(w.to_string(), v.tokens.len());
                v.tokens.push(w.to_string());
            }
        }
        v
    }

    /// The vocabulary covering every word the scene generator can emit.
    pub fn standard() -> Self {
        let mut words: Vec<&str> = FUNCTION_WORDS.to_vec();
        words.extend(Shape::ALL.iter().map(|s| s.word()));
        words.extend(Color::ALL.iter().map(|s| s.word()));
        words.extend(Texture::ALL.iter().map(|s| s.word()));
        words.extend(NOUN_SYNONYMS);
        Self::new(&words)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn require(&self, token: &str) -> Result<usize> {
        self.id(token)
            .ok_or_else(|| Error::OutOfVocabulary(token.to_string()))
    }

    pub fn pad_id(&self) -> usize {
        0
    }

    pub fn bos_id(&self) -> usize {
        1
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// JSON object `{token: id}` with keys in id order.
    pub fn to_json(&self) -> String {
        let mut map = Map::new();
        for (id, t) in self.tokens.iter().enumerate() {
            map.insert(t.clone(), Value::from(id));
        }
        serde_json::to_string_pretty(&Value::Object(map)).expect("string keys serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: Map<String, Value> = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("vocabulary JSON: {e}")))?;
        let mut slots: Vec<Option<String>> = vec![None; map.len()];
        for (token, id) in map {
            let id = id
                .as_u64()
                .ok_or_else(|| Error::invalid(format!("id of {token:?} is not an integer")))?
                as usize;
            match slots.get_mut(id) {
                Some(slot @ None) => *slot = Some(token),
                _ => return Err(Error::invalid(format!("ids are not a permutation (at {id})"))),
            }
        }
        let tokens: Vec<String> = slots.into_iter().map(|s| s.expect("filled")).collect();
        for (i, r) in RESERVED.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*r) {
                return Err(Error::invalid(format!("reserved token {r} must have id {i}")));
            }
        }
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary { tokens, ids })
    }
}
