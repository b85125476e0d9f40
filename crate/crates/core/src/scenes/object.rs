use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor2D;

macro_rules! word_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $word:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn word(self) -> &'static str {
                match self {
                    $($name::$variant => $word),+
                }
            }

            pub fn from_word(word: &str) -> Option<Self> {
                match word {
                    $($word => Some($name::$variant),)+
                    _ => None,
                }
            }

            pub fn index(self) -> usize {
                Self::ALL.iter().position(|v| *v == self).expect("listed variant")
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.word())
            }
        }
    };
}

word_enum!(
    /// Semantic object class. Footprints are rectangles regardless of shape.
    Shape { Circle => "circle", Square => "square", Triangle => "triangle" }
);
word_enum!(Color { Red => "red", Green => "green", Blue => "blue", Yellow => "yellow" });
word_enum!(Texture { Plain => "plain", Striped => "striped", Dotted => "dotted" });

/// The describable attributes of one object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attributes {
    pub shape: Shape,
    pub color: Color,
    pub texture: Texture,
}

/// Per-cell visual feature length: one-hot color, shape, texture, then
/// normalized (row, col).
pub const FEATURE_DIM: usize = 4 + 3 + 3 + 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SceneObject {
    pub attrs: Attributes,
    /// Occupied cells, row-major sorted.
    pub cells: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scene {
    pub grid_h: usize,
    pub grid_w: usize,
    pub objects: Vec<SceneObject>,
}

impl Scene {
    /// Checks footprints are non-empty, in bounds and pairwise disjoint.
    pub fn validate(&self) -> Result<()> {
        let mut owner = vec![usize::MAX; self.grid_h * self.grid_w];
        for (k, obj) in self.objects.iter().enumerate() {
            if obj.cells.is_empty() {
                return Err(Error::invalid(format!("object {k} has an empty footprint")));
            }
            for &(r, c) in &obj.cells {
                if r >= self.grid_h || c >= self.grid_w {
                    return Err(Error::invalid(format!("object {k} cell ({r},{c}) out of grid")));
                }
                let slot = &mut owner[r * self.grid_w + c];
                if *slot != usize::MAX {
                    return Err(Error::invalid(format!(
                        "objects {} and {k} overlap at ({r},{c})",
                        *slot
                    )));
                }
                *slot = k;
            }
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn attributes(&self) -> Vec<Attributes> {
        self.objects.iter().map(|o| o.attrs).collect()
    }

    /// Visual tokens, one row per cell in row-major order. Empty cells are
    /// all-zero rows.
    pub fn features(&self) -> Tensor2D {
        let mut out = Tensor2D::zeros(self.num_cells(), FEATURE_DIM);
        let norm = |v: usize, extent: usize| {
            if extent > 1 {
                v as f64 / (extent - 1) as f64
            } else {
                0.0
            }
        };
        for obj in &self.objects {
            for &(r, c) in &obj.cells {
                let row = out.row_mut(r * self.grid_w + c);
                row[obj.attrs.color.index()] = 1.0;
                row[4 + obj.attrs.shape.index()] = 1.0;
                row[7 + obj.attrs.texture.index()] = 1.0;
                row[10] = norm(r, self.grid_h);
                row[11] = norm(c, self.grid_w);
            }
        }
        out
    }

    /// Recovers objects from a feature grid by grouping 4-connected cells
    /// with identical attributes. Exact for scenes produced by the generator,
    /// which keeps a one-cell gap between objects.
    pub fn decode_features(grid_h: usize, grid_w: usize, features: &Tensor2D) -> Result<Vec<SceneObject>> {
        if features.shape() != (grid_h * grid_w, FEATURE_DIM) {
            return Err(Error::shape("feature grid does not match the scene grid"));
        }
        let argmax = |row: &[f64]| row.iter().position(|&v| v == 1.0);
        let mut attrs = vec![None; grid_h * grid_w];
        for (k, slot) in attrs.iter_mut().enumerate() {
            let row = features.row(k);
            if row.iter().all(|&v| v == 0.0) {
                continue;
            }
            let (Some(c), Some(s), Some(t)) = (argmax(&row[0..4]), argmax(&row[4..7]), argmax(&row[7..10])) else {
                return Err(Error::invalid(format!("cell {k} is not one-hot")));
            };
            *slot = Some(Attributes {
                color: Color::ALL[c],
                shape: Shape::ALL[s],
                texture: Texture::ALL[t],
            });
        }
        let mut seen = vec![false; attrs.len()];
        let mut objects = Vec::new();
        for start in 0..attrs.len() {
            let Some(a) = attrs[start] else { continue };
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut cells = Vec::new();
            while let Some(k) = stack.pop() {
                let (r, c) = (k / grid_w, k % grid_w);
                cells.push((r, c));
                let mut visit = |nr: usize, nc: usize| {
                    let nk = nr * grid_w + nc;
                    if !seen[nk] && attrs[nk] == Some(a) {
                        seen[nk] = true;
                        stack.push(nk);
                    }
                };
                if r > 0 {
                    visit(r - 1, c);
                }
                if r + 1 < grid_h {
                    visit(r + 1, c);
                }
                if c > 0 {
                    visit(r, c - 1);
                }
                if c + 1 < grid_w {
                    visit(r, c + 1);
                }
            }
            cells.sort_unstable();
            objects.push(SceneObject { attrs: a, cells });
        }
        Ok(objects)
    }
}
