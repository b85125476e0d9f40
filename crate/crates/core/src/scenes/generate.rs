use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::prompt::{count_matches, PromptRecord, SynonymTable, Vocabulary};

use super::mask::InstanceMask;
use super::object::{Attributes, Color, Scene, SceneObject, Shape, Texture};

/// Placement attempts per object before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100;

/// Smallest footprint edge; every object covers at least `MIN_EDGE²` cells.
pub const MIN_EDGE: usize = 2;
pub const MAX_EDGE: usize = 3;

/// Scene and prompt generation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub grid_h: usize,
    pub grid_w: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    /// Raw prompt templates, each with exactly one `<region>`.
    pub templates: Vec<String>,
    /// Probability that the tagged noun uses a synonym of the shape word.
    pub synonym_rate: f64,
    /// Probability that a later object copies the first object's shape
    /// (and, independently, its color), creating near-miss distractors.
    pub distractor_share: f64,
    /// Frames per sample. Only single-frame samples are supported.
    pub frames: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            grid_h: 12,
            grid_w: 12,
            min_objects: 3,
            max_objects: 5,
            templates: vec![
                "what texture is <region> ?".into(),
                "which texture does <region> have ?".into(),
                "tell me the texture of <region> in the scene ?".into(),
            ],
            synonym_rate: 0.3,
            distractor_share: 0.5,
            frames: 1,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_h < 4 || self.grid_w < 4 {
            return Err(Error::invalid(format!(
                "grid must be at least 4x4, got {}x{}",
                self.grid_h, self.grid_w
            )));
        }
        if self.min_objects == 0 || self.min_objects > self.max_objects {
            return Err(Error::invalid(format!(
                "invalid object range {}..={}",
                self.min_objects, self.max_objects
            )));
        }
        if self.templates.is_empty() {
            return Err(Error::invalid("no prompt templates"));
        }
        if !(0.0..=1.0).contains(&self.synonym_rate) || !(0.0..=1.0).contains(&self.distractor_share) {
            return Err(Error::invalid("probabilities must lie in [0, 1]"));
        }
        if self.frames != 1 {
            return Err(Error::invalid("only single-frame samples are supported"));
        }
        Ok(())
    }
}

/// One dataset tuple: scene, refined prompt, answer and instance mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetRecord {
    pub id: u64,
    pub scene: Scene,
    pub prompt: PromptRecord,
    pub answer: String,
    pub mask: InstanceMask,
}

impl DatasetRecord {
    /// The model-facing part of the record; the mask is not reachable
    /// from it.
    pub fn input(&self) -> ModelInput<'_> {
        ModelInput {
            scene: &self.scene,
            refined_prompt: &self.prompt.refined_human,
        }
    }
}

/// What the model is allowed to see at inference time.
#[derive(Clone, Copy, Debug)]
pub struct ModelInput<'a> {
    pub scene: &'a Scene,
    pub refined_prompt: &'a str,
}

fn random_attrs(rng: &mut SeededRng) -> Attributes {
    Attributes {
        shape: Shape::ALL[rng.below(Shape::ALL.len())],
        color: Color::ALL[rng.below(Color::ALL.len())],
        texture: Texture::ALL[rng.below(Texture::ALL.len())],
    }
}

fn has_unique_object(attrs: &[Attributes]) -> bool {
    attrs
        .iter()
        .any(|a| attrs.iter().filter(|b| *b == a).count() == 1)
}

/// Places `n_objects` (drawn uniformly from the configured range)
/// non-touching rectangular footprints and assigns attributes so that at
/// least one object has a unique attribute triple.
pub fn generate_scene(rng: &mut SeededRng, config: &GenConfig) -> Result<Scene> {
    config.validate()?;
    let n = rng.between(config.min_objects, config.max_objects);
    let (gh, gw) = (config.grid_h, config.grid_w);

    // Occupancy including a one-cell halo so objects never touch.
    let mut blocked = vec![false; gh * gw];
    let mut footprints = Vec::with_capacity(n);
    for _ in 0..n {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let h = rng.between(MIN_EDGE, MAX_EDGE).min(gh);
            let w = rng.between(MIN_EDGE, MAX_EDGE).min(gw);
            let r0 = rng.between(0, gh - h);
            let c0 = rng.between(0, gw - w);
            let free = (r0..r0 + h).all(|r| (c0..c0 + w).all(|c| !blocked[r * gw + c]));
            if free {
                placed = Some((r0, c0, h, w));
                break;
            }
        }
        let (r0, c0, h, w) = placed.ok_or(Error::SceneTooCrowded)?;
        for r in r0.saturating_sub(1)..(r0 + h + 1).min(gh) {
            for c in c0.saturating_sub(1)..(c0 + w + 1).min(gw) {
                blocked[r * gw + c] = true;
            }
        }
        let cells: Vec<(usize, usize)> = (r0..r0 + h)
            .flat_map(|r| (c0..c0 + w).map(move |c| (r, c)))
            .collect();
        footprints.push(cells);
    }

    let mut attrs: Vec<Attributes> = Vec::new();
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        attrs.clear();
        for k in 0..n {
            let mut a = random_attrs(rng);
            if k > 0 {
                if rng.bernoulli(config.distractor_share) {
                    a.shape = attrs[0].shape;
                }
                if rng.bernoulli(config.distractor_share) {
                    a.color = attrs[0].color;
                }
            }
            attrs.push(a);
        }
        if has_unique_object(&attrs) {
            break;
        }
    }
    if !has_unique_object(&attrs) {
        return Err(Error::AmbiguousReferent);
    }

    let objects = attrs
        .into_iter()
        .zip(footprints)
        .map(|(attrs, cells)| SceneObject { attrs, cells })
        .collect();
    let scene = Scene {
        grid_h: gh,
        grid_w: gw,
        objects,
    };
    debug_assert!(scene.validate().is_ok());
    Ok(scene)
}

/// Picks a describable target, fills a template with its referring
/// expression, tags the noun and attaches the texture answer and mask.
///
/// Targets whose minimal expression would not mention texture are preferred,
/// so the question cannot be answered by copying a prompt word.
pub fn generate_record(
    rng: &mut SeededRng,
    id: u64,
    scene: &Scene,
    config: &GenConfig,
    vocab: &Vocabulary,
) -> Result<DatasetRecord> {
    let attrs = scene.attributes();
    let describable: Vec<usize> = (0..attrs.len())
        .filter(|&k| attrs.iter().filter(|b| **b == attrs[k]).count() == 1)
        .collect();
    if describable.is_empty() {
        return Err(Error::AmbiguousReferent);
    }
    let texture_free: Vec<usize> = describable
        .iter()
        .copied()
        .filter(|&k| count_matches(&attrs[k], true, false, &attrs) == 1)
        .collect();
    let pool = if texture_free.is_empty() {
        &describable
    } else {
        &texture_free
    };
    let target = pool[rng.below(pool.len())];
    let t = &attrs[target];

    let template = &config.templates[rng.below(config.templates.len())];
    let table = SynonymTable::standard();
    let noun_form = if rng.bernoulli(config.synonym_rate) {
        rng.choose(table.synonyms(t.shape.word())).cloned()
    } else {
        None
    };
    let prompt = PromptRecord::build(template, t, &attrs, noun_form.as_deref(), vocab)?;
    let mask = InstanceMask::from_cells(scene.grid_h, scene.grid_w, &scene.objects[target].cells)?;
    Ok(DatasetRecord {
        id,
        scene: scene.clone(),
        prompt,
        answer: t.texture.word().to_string(),
        mask,
    })
}

/// `count` records from one seed; record `i` uses the `i`-th forked stream,
/// so a prefix of a larger dataset equals the smaller dataset.
pub fn generate_dataset(config: &GenConfig, count: usize, seed: u64, vocab: &Vocabulary) -> Result<Vec<DatasetRecord>> {
    config.validate()?;
    let mut root = SeededRng::new(seed);
    (0..count)
        .map(|i| {
            let mut rng = root.fork();
            let id = i as u64;
            generate_scene(&mut rng, config)
                .and_then(|scene| generate_record(&mut rng, id, &scene, config, vocab))
                .map_err(|e| Error::Sample { id, source: Box::new(e) })
        })
        .collect()
}
