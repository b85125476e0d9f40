use crate::error::{Error, Result};
use crate::scenes::Attributes;

use super::vocab::{Vocabulary, INS_CLOSE, INS_OPEN, REGION};

/// Which optional attributes a referring expression mentions besides the
/// shape noun.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Descriptor {
    texture: bool,
    color: bool,
}

impl Descriptor {
    fn matches(self, target: &Attributes, other: &Attributes) -> bool {
        other.shape == target.shape
            && (!self.color || other.color == target.color)
            && (!self.texture || other.texture == target.texture)
    }

    fn words(self, target: &Attributes) -> Vec<&'static str> {
        let mut w = vec!["the"];
        if self.texture {
            w.push(target.texture.word());
        }
        if self.color {
            w.push(target.color.word());
        }
        w.push(target.shape.word());
        w
    }
}

// Shortest first; colour before texture at equal length.
const DESCRIPTORS: [Descriptor; 4] = [
    Descriptor { texture: false, color: false },
    Descriptor { texture: false, color: true },
    Descriptor { texture: true, color: false },
    Descriptor { texture: true, color: true },
];

/// A referring expression and the noun it is about.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferringExpression {
    pub text: String,
    pub noun: String,
}

/// Number of scene objects an expression built from `target` with the given
/// attribute words would match.
pub fn count_matches(target: &Attributes, uses_color: bool, uses_texture: bool, scene: &[Attributes]) -> usize {
    let d = Descriptor {
        texture: uses_texture,
        color: uses_color,
    };
    scene.iter().filter(|o| d.matches(target, o)).count()
}

/// Builds the shortest phrase `the [texture] [color] <shape>` that matches
/// exactly one object of `scene` (which must contain the target). The shape
/// word is the noun.
pub fn nlref_lite(target: &Attributes, scene: &[Attributes]) -> Result<ReferringExpression> {
    if !scene.contains(target) {
        return Err(Error::invalid("target is not part of the scene"));
    }
    let d = DESCRIPTORS
        .iter()
        .copied()
        .find(|d| scene.iter().filter(|o| d.matches(target, o)).count() == 1)
        .ok_or(Error::AmbiguousReferent)?;
    Ok(ReferringExpression {
        text: d.words(target).join(" "),
        noun: target.shape.word().to_string(),
    })
}

/// Result of substituting the placeholder: the new prompt and the token range
/// occupied by the inserted expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replaced {
    pub text: String,
    pub expr_start: usize,
    pub expr_len: usize,
}

/// Replaces the single `<region>` token of `raw` with `expr`.
pub fn replace_placeholder(raw: &str, expr: &str) -> Result<Replaced> {
    let tokens: Vec<&str> = raw.split_whitespace().collect();
    let hits: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == REGION)
        .map(|(i, _)| i)
        .collect();
    if hits.len() != 1 {
        return Err(Error::Placeholder(hits.len()));
    }
    let at = hits[0];
    let expr_tokens: Vec<&str> = expr.split_whitespace().collect();
    let mut out: Vec<&str> = Vec::with_capacity(tokens.len() + expr_tokens.len());
    out.extend_from_slice(&tokens[..at]);
    out.extend_from_slice(&expr_tokens);
    out.extend_from_slice(&tokens[at + 1..]);
    Ok(Replaced {
        text: out.join(" "),
        expr_start: at,
        expr_len: expr_tokens.len(),
    })
}

/// Wraps the occurrence of `noun` inside the inserted expression with
/// `<ins>` … `</ins>`. When the noun occurs more than once in the expression
/// the last occurrence (the head noun) is tagged.
pub fn mark_noun(replaced: &Replaced, noun: &str) -> Result<String> {
    let tokens: Vec<&str> = replaced.text.split_whitespace().collect();
    let noun_tokens: Vec<&str> = noun.split_whitespace().collect();
    let (lo, hi) = (replaced.expr_start, replaced.expr_start + replaced.expr_len);
    if noun_tokens.is_empty() || hi > tokens.len() || noun_tokens.len() > replaced.expr_len {
        return Err(Error::NounNotFound(noun.to_string()));
    }
    let start = (lo..=hi - noun_tokens.len())
        .rev()
        .find(|&s| tokens[s..s + noun_tokens.len()] == noun_tokens[..])
        .ok_or_else(|| Error::NounNotFound(noun.to_string()))?;
    let end = start + noun_tokens.len();
    let mut out: Vec<&str> = Vec::with_capacity(tokens.len() + 2);
    out.extend_from_slice(&tokens[..start]);
    out.push(INS_OPEN);
    out.extend_from_slice(&tokens[start..end]);
    out.push(INS_CLOSE);
    out.extend_from_slice(&tokens[end..]);
    Ok(out.join(" "))
}

/// Token ids of a refined prompt with the markers removed, plus the
/// inclusive index range of the tagged tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located {
    pub ids: Vec<usize>,
    pub span: (usize, usize),
}

/// Splits a refined prompt into `(words without markers, tagged span)`.
pub(crate) fn split_tagged(refined: &str) -> Result<(Vec<&str>, (usize, usize))> {
    let mut words = Vec::new();
    let mut open: Option<usize> = None;
    let mut span: Option<(usize, usize)> = None;
    for tok in refined.split_whitespace() {
        match tok {
            INS_OPEN => {
                if open.is_some() || span.is_some() {
                    return Err(Error::UnbalancedMarkers);
                }
                open = Some(words.len());
            }
            INS_CLOSE => {
                let start = open.take().ok_or(Error::UnbalancedMarkers)?;
                if words.len() == start {
                    return Err(Error::UnbalancedMarkers);
                }
                span = Some((start, words.len() - 1));
            }
            w => words.push(w),
        }
    }
    if open.is_some() {
        return Err(Error::UnbalancedMarkers);
    }
    let span = span.ok_or(Error::NoTaggedNoun)?;
    Ok((words, span))
}

/// Tokenizes a refined prompt. Markers are consumed, not emitted.
pub fn tokenize_and_locate(refined: &str, vocab: &Vocabulary) -> Result<Located> {
    let (words, span) = split_tagged(refined)?;
    let ids = words
        .iter()
        .map(|w| vocab.require(w))
        .collect::<Result<Vec<_>>>()?;
    Ok(Located { ids, span })
}

/// Returns the prompt with markers stripped (the model-facing text).
pub fn strip_markers(refined: &str) -> String {
    refined
        .split_whitespace()
        .filter(|t| *t != INS_OPEN && *t != INS_CLOSE)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The full refined-prompt record for one target object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptRecord {
    pub raw_human: String,
    pub response: Attributes,
    pub referring_expr: String,
    pub noun: String,
    pub refined_human: String,
    pub noun_span: (usize, usize),
}

impl PromptRecord {
    /// Runs the refinement pipeline: expression → placeholder substitution
    /// → noun tagging → span location. `noun_form` optionally replaces the
    /// canonical shape word with a synonym before tagging.
    pub fn build(
        raw_human: &str,
        target: &Attributes,
        scene: &[Attributes],
        noun_form: Option<&str>,
        vocab: &Vocabulary,
    ) -> Result<Self> {
        let mut expr = nlref_lite(target, scene)?;
        if let Some(form) = noun_form {
            let head = expr
                .text
                .rsplit_once(' ')
                .map_or("", |(h, _)| h)
                .to_string();
            expr.text = if head.is_empty() {
                form.to_string()
            } else {
                format!("{head} {form}")
            };
            expr.noun = form.to_string();
        }
        let replaced = replace_placeholder(raw_human, &expr.text)?;
        let refined = mark_noun(&replaced, &expr.noun)?;
        let located = tokenize_and_locate(&refined, vocab)?;
        Ok(PromptRecord {
            raw_human: raw_human.split_whitespace().collect::<Vec<_>>().join(" "),
            response: *target,
            referring_expr: expr.text,
            noun: expr.noun,
            refined_human: refined,
            noun_span: located.span,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenes::{Color, Shape, Texture};

    fn attrs(shape: Shape, color: Color, texture: Texture) -> Attributes {
        Attributes { shape, color, texture }
    }

    #[test]
    fn unique_red_circle() {
        let target = attrs(Shape::Circle, Color::Red, Texture::Plain);
        let scene = [target, attrs(Shape::Circle, Color::Blue, Texture::Plain), attrs(Shape::Square, Color::Red, Texture::Plain)];
        let e = nlref_lite(&target, &scene).unwrap();
        assert_eq!(e.text, "the red circle");
        assert_eq!(e.noun, "circle");
    }

    #[test]
    fn single_object_uses_shape_only() {
        let target = attrs(Shape::Triangle, Color::Green, Texture::Dotted);
        let e = nlref_lite(&target, &[target]).unwrap();
        assert_eq!(e.text, "the triangle");
        assert_eq!(e.noun, "triangle");
    }

    #[test]
    fn texture_needed_for_twin_red_circles() {
        let target = attrs(Shape::Circle, Color::Red, Texture::Striped);
        let scene = [
            target,
            attrs(Shape::Circle, Color::Red, Texture::Plain),
            attrs(Shape::Circle, Color::Blue, Texture::Striped),
        ];
        // every shorter phrase is ambiguous
        assert_eq!(count_matches(&target, false, false, &scene), 3);
        assert_eq!(count_matches(&target, true, false, &scene), 2);
        assert_eq!(count_matches(&target, false, true, &scene), 2);
        let e = nlref_lite(&target, &scene).unwrap();
        assert_eq!(e.text, "the striped red circle");
        assert_eq!(e.noun, "circle");
    }

    #[test]
    fn identical_twins_are_ambiguous() {
        let target = attrs(Shape::Square, Color::Red, Texture::Plain);
        assert!(matches!(nlref_lite(&target, &[target, target]), Err(Error::AmbiguousReferent)));
    }

    #[test]
    fn replace_examples() {
        let r = replace_placeholder("describe <region> in the scene", "the red circle").unwrap();
        assert_eq!(r.text, "describe the red circle in the scene");
        assert_eq!((r.expr_start, r.expr_len), (1, 3));

        let r = replace_placeholder("<region> is here", "the disk").unwrap();
        assert_eq!(r.text, "the disk is here");
        assert_eq!(r.expr_start, 0);

        assert!(matches!(replace_placeholder("no slot here", "x"), Err(Error::Placeholder(0))));
        assert!(matches!(replace_placeholder("<region> and <region>", "x"), Err(Error::Placeholder(2))));
    }

    #[test]
    fn mark_examples() {
        let r = replace_placeholder("describe <region> in the scene", "the red circle").unwrap();
        assert_eq!(mark_noun(&r, "circle").unwrap(), "describe the red <ins> circle </ins> in the scene");

        // the word also appears before the expression; only the inserted one is tagged
        let r = replace_placeholder("circle <region>", "the red circle").unwrap();
        assert_eq!(mark_noun(&r, "circle").unwrap(), "circle the red <ins> circle </ins>");

        // and after it
        let r = replace_placeholder("<region> near a circle", "the circle").unwrap();
        assert_eq!(mark_noun(&r, "circle").unwrap(), "the <ins> circle </ins> near a circle");

        assert!(matches!(mark_noun(&r, "square"), Err(Error::NounNotFound(_))));
    }

    #[test]
    fn tokenize_examples() {
        let v = Vocabulary::standard();
        let l = tokenize_and_locate("the <ins> circle </ins>", &v).unwrap();
        assert_eq!(l.ids, vec![v.id("the").unwrap(), v.id("circle").unwrap()]);
        assert_eq!(l.span, (1, 1));

        assert!(matches!(tokenize_and_locate("the circle", &v), Err(Error::NoTaggedNoun)));
        assert!(matches!(tokenize_and_locate("the <ins> circle", &v), Err(Error::UnbalancedMarkers)));
        assert!(matches!(tokenize_and_locate("the </ins> circle <ins>", &v), Err(Error::UnbalancedMarkers)));
        assert!(matches!(tokenize_and_locate("<ins> </ins> circle", &v), Err(Error::UnbalancedMarkers)));
        assert!(matches!(
            tokenize_and_locate("the <ins> zebra </ins>", &v),
            Err(Error::OutOfVocabulary(w)) if w == "zebra"
        ));

        let v2 = Vocabulary::new(&["what", "is", "the", "coffee", "cup", "?"]);
        let l = tokenize_and_locate("what is the <ins> coffee cup </ins> ?", &v2).unwrap();
        assert_eq!(l.span, (3, 4));
        assert_eq!(l.ids.len(), 6);
    }

    #[test]
    fn record_pipeline_round_trip() {
        let v = Vocabulary::standard();
        let target = attrs(Shape::Circle, Color::Red, Texture::Striped);
        let scene = [target, attrs(Shape::Circle, Color::Blue, Texture::Plain)];
        let rec = PromptRecord::build("what texture is <region> ?", &target, &scene, None, &v).unwrap();
        assert_eq!(rec.refined_human, "what texture is the red <ins> circle </ins> ?");
        assert_eq!(rec.noun_span, (5, 5));
        let l = tokenize_and_locate(&rec.refined_human, &v).unwrap();
        assert_eq!(v.token(l.ids[l.span.0]), Some("circle"));

        let rec = PromptRecord::build("what texture is <region> ?", &target, &scene, Some("disk"), &v).unwrap();
        assert_eq!(rec.referring_expr, "the red disk");
        assert_eq!(rec.refined_human, "what texture is the red <ins> disk </ins> ?");
    }
}
