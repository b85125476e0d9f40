use std::collections::BTreeMap;

use crate::error::Result;
use crate::numerics::SeededRng;
use crate::scenes::Shape;

use super::refine::split_tagged;
use super::vocab::{INS_CLOSE, INS_OPEN};

/// Interchangeable surface forms per noun. Every member of a group maps to
/// the other members, so a perturbed prompt can be perturbed again.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SynonymTable {
    map: BTreeMap<String, Vec<String>>,
}

impl SynonymTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a table from groups of equivalent forms (multi-word forms are
    /// space-separated).
    pub fn from_groups<S: AsRef<str>>(groups: &[Vec<S>]) -> Self {
        let mut map = BTreeMap::new();
        for group in groups {
            let forms: Vec<String> = group.iter().map(|s| s.as_ref().to_string()).collect();
            for f in &forms {
                let others: Vec<String> = forms.iter().filter(|o| *o != f).cloned().collect();
                if !others.is_empty() {
                    map.insert(f.clone(), others);
                }
            }
        }
        Self { map }
    }

    /// One group per shape: the canonical word first, then its synonyms.
    pub fn standard() -> Self {
        Self::from_groups(&Self::standard_groups())
    }

    pub fn standard_groups() -> Vec<Vec<&'static str>> {
        vec![
            vec![Shape::Circle.word(), "disk", "ring"],
            vec![Shape::Square.word(), "box", "block"],
            vec![Shape::Triangle.word(), "wedge", "pyramid"],
        ]
    }

    pub fn synonyms(&self, form: &str) -> &[String] {
        self.map.get(form).map_or(&[], Vec::as_slice)
    }

    /// The shape a surface form refers to, if it is a canonical shape word
    /// or one of its standard synonyms.
    pub fn shape_of(form: &str) -> Option<Shape> {
        Self::standard_groups()
            .into_iter()
            .find(|g| g.contains(&form))
            .and_then(|g| Shape::from_word(g[0]))
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// A perturbed prompt; `changed` is false when the tagged noun had no synonym.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Perturbed {
    pub text: String,
    pub changed: bool,
}

/// Replaces the `<ins>`-tagged noun with a randomly chosen synonym, keeping
/// the markers around the new form and every other token untouched.
pub fn perturb_synonyms(refined: &str, table: &SynonymTable, rng: &mut SeededRng) -> Result<Perturbed> {
    let (_, span) = split_tagged(refined)?;
    let tokens: Vec<&str> = refined.split_whitespace().collect();
    let open = tokens.iter().position(|t| *t == INS_OPEN).expect("validated");
    let close = tokens.iter().position(|t| *t == INS_CLOSE).expect("validated");
    debug_assert_eq!(close - open - 1, span.1 - span.0 + 1);
    let noun = tokens[open + 1..close].join(" ");
    let Some(choice) = rng.choose(table.synonyms(&noun)) else {
        return Ok(Perturbed {
            text: refined.to_string(),
            changed: false,
        });
    };
    let mut out: Vec<&str> = Vec::with_capacity(tokens.len() + 2);
    out.extend_from_slice(&tokens[..=open]);
    out.extend(choice.split_whitespace());
    out.extend_from_slice(&tokens[close..]);
    Ok(Perturbed {
        text: out.join(" "),
        changed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{tokenize_and_locate, Vocabulary};
    use proptest::prelude::*;

    #[test]
    fn swaps_tagged_noun() {
        let table = SynonymTable::from_groups(&[vec!["circle", "disk"]]);
        let mut rng = SeededRng::new(0);
        let p = perturb_synonyms("<ins> circle </ins>", &table, &mut rng).unwrap();
        assert_eq!(p.text, "<ins> disk </ins>");
        assert!(p.changed);
    }

    #[test]
    fn empty_table_leaves_prompt_alone() {
        let mut rng = SeededRng::new(0);
        let p = perturb_synonyms("the <ins> circle </ins> ?", &SynonymTable::empty(), &mut rng).unwrap();
        assert_eq!(p.text, "the <ins> circle </ins> ?");
        assert!(!p.changed);
    }

    #[test]
    fn deterministic_under_seed() {
        let table = SynonymTable::standard();
        let run = |seed| {
            let mut rng = SeededRng::new(seed);
            (0..20)
                .map(|_| perturb_synonyms("what texture is the <ins> circle </ins> ?", &table, &mut rng).unwrap().text)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn multi_word_synonym_widens_span() {
        let table = SynonymTable::from_groups(&[vec!["cup", "coffee cup"]]);
        let vocab = Vocabulary::new(&["the", "cup", "coffee", "?"]);
        let mut rng = SeededRng::new(1);
        let p = perturb_synonyms("the <ins> cup </ins> ?", &table, &mut rng).unwrap();
        assert_eq!(p.text, "the <ins> coffee cup </ins> ?");
        assert_eq!(tokenize_and_locate(&p.text, &vocab).unwrap().span, (1, 2));
    }

    #[test]
    fn standard_synonyms_keep_shape_class() {
        let table = SynonymTable::standard();
        for shape in Shape::ALL {
            for s in table.synonyms(shape.word()) {
                assert_eq!(SynonymTable::shape_of(s), Some(*shape));
                assert!(Vocabulary::standard().id(s).is_some());
            }
        }
    }

    proptest! {
        #[test]
        fn only_the_span_changes(seed in 0u64..500, before in 0usize..4, after in 0usize..4) {
            let pre: Vec<&str> = ["what", "texture", "is", "the"][..before].to_vec();
            let post: Vec<&str> = ["in", "the", "scene", "?"][..after].to_vec();
            let text = [pre.clone(), vec!["<ins>", "square", "</ins>"], post.clone()].concat().join(" ");
            let mut rng = SeededRng::new(seed);
            let p = perturb_synonyms(&text, &SynonymTable::standard(), &mut rng).unwrap();
            let toks: Vec<&str> = p.text.split_whitespace().collect();
            prop_assert_eq!(&toks[..before], &pre[..]);
            prop_assert_eq!(&toks[toks.len() - after..], &post[..]);
            prop_assert_eq!(toks[before], "<ins>");
            prop_assert_eq!(toks[before + 2], "</ins>");
            prop_assert!(["box", "block"].contains(&toks[before + 1]));
        }
    }
}
