//! JSONL persistence: one record per line.
//!
//! ```text
//! {"id":0,"grid":{"h":12,"w":12},"objects":[{"shape":"circle","color":"red",
//!  "texture":"striped","cells":[[0,0],[0,1]]}],"prompt_raw":"what texture is <region> ?",
//!  "prompt_refined":"what texture is the red <ins> circle </ins> ?","noun_span":[5,5],
//!  "answer":"striped","mask_rle":[[0,2]]}
//! ```
//!
//! The referring expression, noun and target attributes are not stored; they
//! are recovered from the raw/refined prompt pair and the mask on load.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompt::{strip_markers, PromptRecord, INS_CLOSE, INS_OPEN, REGION};

use super::generate::DatasetRecord;
use super::mask::InstanceMask;
use super::object::{Attributes, Color, Scene, SceneObject, Shape, Texture};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Grid {
    h: usize,
    w: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectLine {
    shape: Shape,
    color: Color,
    texture: Texture,
    cells: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: u64,
    grid: Grid,
    objects: Vec<ObjectLine>,
    prompt_raw: String,
    prompt_refined: String,
    noun_span: [usize; 2],
    answer: String,
    mask_rle: Vec<[usize; 2]>,
}

impl From<&DatasetRecord> for RecordLine {
    fn from(r: &DatasetRecord) -> Self {
        RecordLine {
            id: r.id,
            grid: Grid {
                h: r.scene.grid_h,
                w: r.scene.grid_w,
            },
            objects: r
                .scene
                .objects
                .iter()
                .map(|o| ObjectLine {
                    shape: o.attrs.shape,
                    color: o.attrs.color,
                    texture: o.attrs.texture,
                    cells: o.cells.iter().map(|&(r, c)| [r, c]).collect(),
                })
                .collect(),
            prompt_raw: r.prompt.raw_human.clone(),
            prompt_refined: r.prompt.refined_human.clone(),
            noun_span: [r.prompt.noun_span.0, r.prompt.noun_span.1],
            answer: r.answer.clone(),
            mask_rle: r.mask.to_rle().into_iter().map(|(s, l)| [s, l]).collect(),
        }
    }
}

impl RecordLine {
    fn into_record(self) -> std::result::Result<DatasetRecord, String> {
        let scene = Scene {
            grid_h: self.grid.h,
            grid_w: self.grid.w,
            objects: self
                .objects
                .into_iter()
                .map(|o| SceneObject {
                    attrs: Attributes {
                        shape: o.shape,
                        color: o.color,
                        texture: o.texture,
                    },
                    cells: o.cells.into_iter().map(|[r, c]| (r, c)).collect(),
                })
                .collect(),
        };
        scene.validate().map_err(|e| e.to_string())?;
        let runs: Vec<(usize, usize)> = self.mask_rle.iter().map(|&[s, l]| (s, l)).collect();
        let mask = InstanceMask::from_rle(scene.grid_h, scene.grid_w, &runs).map_err(|e| e.to_string())?;
        let target = scene
            .objects
            .iter()
            .find(|o| o.cells == mask.cells())
            .ok_or("mask does not equal any object footprint")?;

        let raw: Vec<&str> = self.prompt_raw.split_whitespace().collect();
        let at = raw
            .iter()
            .position(|t| *t == REGION)
            .ok_or("raw prompt has no <region>")?;
        let stripped = strip_markers(&self.prompt_refined);
        let words: Vec<&str> = stripped.split_whitespace().collect();
        let expr_len = (words.len() + 1)
            .checked_sub(raw.len())
            .filter(|l| *l > 0)
            .ok_or("refined prompt is shorter than the raw prompt")?;
        let referring_expr = words[at..at + expr_len].join(" ");

        let refined: Vec<&str> = self.prompt_refined.split_whitespace().collect();
        let open = refined.iter().position(|t| *t == INS_OPEN).ok_or("no <ins> marker")?;
        let close = refined.iter().position(|t| *t == INS_CLOSE).ok_or("no </ins> marker")?;
        if close <= open + 1 {
            return Err("empty or reversed <ins> span".into());
        }
        let noun = refined[open + 1..close].join(" ");
        let span = (open, close - 2);
        if [span.0, span.1] != self.noun_span {
            return Err(format!(
                "noun_span {:?} disagrees with the markers ({}, {})",
                self.noun_span, span.0, span.1
            ));
        }

        Ok(DatasetRecord {
            id: self.id,
            prompt: PromptRecord {
                raw_human: self.prompt_raw,
                response: target.attrs,
                referring_expr,
                noun,
                refined_human: self.prompt_refined,
                noun_span: span,
            },
            answer: self.answer,
            mask,
            scene,
        })
    }
}

/// Serializes one record as a single JSON line (without the newline).
pub fn record_to_line(record: &DatasetRecord) -> String {
    serde_json::to_string(&RecordLine::from(record)).expect("record serializes")
}

pub fn write_dataset(records: &[DatasetRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        writeln!(out, "{}", record_to_line(r)).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

pub(crate) fn parse_dataset(text: &str, path: &Path) -> Result<Vec<DatasetRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fail = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let parsed: RecordLine = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
        out.push(parsed.into_record().map_err(fail)?);
    }
    Ok(out)
}
