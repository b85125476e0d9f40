//! Vocabulary, tokenization and the rule-based prompt refiner: replace the
//! `<region>` placeholder with a minimal referring expression and tag its
//! head noun with `<ins>` … `</ins>`.

mod refine;
mod synonyms;
mod vocab;

pub use refine::{
    count_matches, mark_noun, nlref_lite, replace_placeholder, strip_markers, tokenize_and_locate,
    Located, PromptRecord, ReferringExpression, Replaced,
};
pub use synonyms::{perturb_synonyms, Perturbed, SynonymTable};
pub use vocab::{Vocabulary, BOS, INS_CLOSE, INS_OPEN, PAD, REGION, RESERVED};
