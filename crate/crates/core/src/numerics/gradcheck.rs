//! Central finite-difference checking of graph gradients.

use super::{Graph, NodeId, SeededRng, Tensor2D};
use crate::error::Result;

/// Worst disagreement found by [`check_gradients`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub checked: usize,
}

impl GradCheck {
    pub fn merge(self, other: GradCheck) -> GradCheck {
        GradCheck {
            max_rel_err: self.max_rel_err.max(other.max_rel_err),
            max_abs_err: self.max_abs_err.max(other.max_abs_err),
            checked: self.checked + other.checked,
        }
    }
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            max_rel_err: 0.0,
            max_abs_err: 0.0,
            checked: 0,
        }
    }
}

/// Relative error with an absolute floor so that two near-zero gradients
/// are not reported as disagreeing.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares the tape gradient of a scalar function of `inputs` with central
/// differences of step `h`. `build` receives fresh parameter nodes, one per
/// input, and returns the scalar root.
///
/// `stride` > 1 checks every `stride`-th coordinate of each input, which keeps
/// the cost bounded on large parameter sets.
pub fn check_gradients<F>(inputs: &[Tensor2D], h: f64, stride: usize, build: F) -> Result<GradCheck>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    let eval = |values: &[Tensor2D]| -> Result<f64> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = values.iter().map(|t| g.param(t.clone())).collect();
        let root = build(&mut g, &ids)?;
        Ok(g.scalar(root))
    };

    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let root = build(&mut g, &ids)?;
    g.backward(root)?;
    let analytic: Vec<Tensor2D> = ids
        .iter()
        .zip(inputs)
        .map(|(id, t)| {
            g.grad(*id)
                .cloned()
                .unwrap_or_else(|| Tensor2D::zeros(t.rows(), t.cols()))
        })
        .collect();

    let mut report = GradCheck::default();
    let mut work: Vec<Tensor2D> = inputs.to_vec();
    for (which, grad) in analytic.iter().enumerate() {
        for k in (0..grad.len()).step_by(stride.max(1)) {
            let orig = work[which].data()[k];
            work[which].data_mut()[k] = orig + h;
            let plus = eval(&work)?;
            work[which].data_mut()[k] = orig - h;
            let minus = eval(&work)?;
            work[which].data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = grad.data()[k];
            report.max_rel_err = report.max_rel_err.max(relative_error(a, numeric));
            report.max_abs_err = report.max_abs_err.max((a - numeric).abs());
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Finite-difference step used for the op-level suites.
pub const OP_STEP: f64 = 1e-4;

fn random(rng: &mut SeededRng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor2D {
    let data = (0..rows * cols).map(|_| rng.uniform_in(lo, hi)).collect();
    Tensor2D::from_raw(rows, cols, data)
}

/// Fixed random weights turning a matrix-valued node into a scalar, so every
/// output coordinate contributes a distinct gradient.
fn project(g: &mut Graph, x: NodeId, rng: &mut SeededRng) -> NodeId {
    let (r, c) = g.value(x).shape();
    let w = g.constant(random(rng, r, c, -1.0, 1.0));
    let p = g.mul(x, w);
    g.sum(p)
}

type OpCase = (&'static str, fn(&mut SeededRng) -> Vec<Tensor2D>, fn(&mut Graph, &[NodeId], &mut SeededRng) -> NodeId);

fn op_cases() -> Vec<OpCase> {
    vec![
        ("add", |r| vec![random(r, 3, 4, -1.0, 1.0), random(r, 3, 4, -1.0, 1.0)], |g, x, r| {
            let y = g.add(x[0], x[1]);
            project(g, y, r)
        }),
        ("sub", |r| vec![random(r, 3, 4, -1.0, 1.0), random(r, 3, 4, -1.0, 1.0)], |g, x, r| {
            let y = g.sub(x[0], x[1]);
            project(g, y, r)
        }),
        ("mul", |r| vec![random(r, 3, 4, -1.0, 1.0), random(r, 3, 4, -1.0, 1.0)], |g, x, r| {
            let y = g.mul(x[0], x[1]);
            project(g, y, r)
        }),
        ("div", |r| vec![random(r, 3, 4, -1.0, 1.0), random(r, 3, 4, 0.5, 2.0)], |g, x, r| {
            let y = g.div(x[0], x[1]);
            project(g, y, r)
        }),
        ("add_row", |r| vec![random(r, 3, 4, -1.0, 1.0), random(r, 1, 4, -1.0, 1.0)], |g, x, r| {
            let y = g.add_row(x[0], x[1]);
            project(g, y, r)
        }),
        ("mul_row", |r| vec![random(r, 3, 4, -1.0, 1.0), random(r, 1, 4, -1.0, 1.0)], |g, x, r| {
            let y = g.mul_row(x[0], x[1]);
            project(g, y, r)
        }),
        ("scale_offset", |r| vec![random(r, 2, 3, -1.0, 1.0)], |g, x, r| {
            let y = g.scale(x[0], -1.7);
            let y = g.offset(y, 0.3);
            project(g, y, r)
        }),
        ("matmul", |r| vec![random(r, 3, 5, -1.0, 1.0), random(r, 5, 2, -1.0, 1.0)], |g, x, r| {
            let y = g.matmul(x[0], x[1]);
            project(g, y, r)
        }),
        ("matmul_bt", |r| vec![random(r, 3, 5, -1.0, 1.0), random(r, 4, 5, -1.0, 1.0)], |g, x, r| {
            let y = g.matmul_bt(x[0], x[1]);
            project(g, y, r)
        }),
        ("softmax", |r| vec![random(r, 3, 6, -3.0, 3.0)], |g, x, r| {
            let y = g.softmax(x[0]);
            project(g, y, r)
        }),
        ("causal_softmax", |r| vec![random(r, 4, 4, -3.0, 3.0)], |g, x, r| {
            let y = g.causal_softmax(x[0]);
            project(g, y, r)
        }),
        ("layer_norm", |r| vec![random(r, 3, 6, -2.0, 2.0)], |g, x, r| {
            let y = g.layer_norm(x[0]);
            project(g, y, r)
        }),
        ("gelu", |r| vec![random(r, 3, 4, -3.0, 3.0)], |g, x, r| {
            let y = g.gelu(x[0]);
            project(g, y, r)
        }),
        ("log", |r| vec![random(r, 3, 4, 0.2, 2.0)], |g, x, r| {
            let y = g.log(x[0]);
            project(g, y, r)
        }),
        ("exp", |r| vec![random(r, 3, 4, -2.0, 2.0)], |g, x, r| {
            let y = g.exp(x[0]);
            project(g, y, r)
        }),
        ("powf", |r| vec![random(r, 3, 4, 0.2, 2.0)], |g, x, r| {
            let y = g.powf(x[0], 2.5);
            project(g, y, r)
        }),
        ("clamp", |r| vec![random(r, 3, 4, 0.1, 0.9)], |g, x, r| {
            // values stay strictly inside the bounds, away from the kink
            let y = g.clamp(x[0], 0.05, 0.95);
            project(g, y, r)
        }),
        ("sum_mean", |r| vec![random(r, 3, 4, -1.0, 1.0)], |g, x, _| {
            let sq = g.mul(x[0], x[0]);
            let s = g.sum(sq);
            let m = g.mean(x[0]);
            g.add(s, m)
        }),
        ("slice_concat", |r| vec![random(r, 3, 6, -1.0, 1.0)], |g, x, r| {
            let a = g.slice_cols(x[0], 0, 2);
            let b = g.slice_cols(x[0], 3, 3);
            let c = g.concat_cols(&[b, a]);
            let c = g.mul(c, c);
            project(g, c, r)
        }),
        ("gather_rows", |r| vec![random(r, 4, 3, -1.0, 1.0)], |g, x, r| {
            let y = g.gather_rows(x[0], &[2, 0, 2, 3]);
            let y = g.mul(y, y);
            project(g, y, r)
        }),
        ("reshape_resize", |r| vec![random(r, 1, 6, -1.0, 1.0)], |g, x, r| {
            let m = g.reshape(x[0], 2, 3);
            let up = g.resize(m, 4, 5).expect("valid resize");
            let up = g.mul(up, up);
            project(g, up, r)
        }),
        ("mean_of", |r| vec![random(r, 2, 3, -1.0, 1.0), random(r, 2, 3, -1.0, 1.0), random(r, 2, 3, -1.0, 1.0)], |g, x, r| {
            let y = g.mean_of(x);
            let y = g.mul(y, y);
            project(g, y, r)
        }),
        ("max_of", |r| {
            // separate the operands so no coordinate sits on a tie
            let a = random(r, 2, 3, 0.0, 1.0);
            let b = a.map(|v| v + 0.5);
            let mut c = random(r, 2, 3, 0.0, 1.0);
            for (k, v) in c.data_mut().iter_mut().enumerate() {
                if k % 2 == 0 {
                    *v += 2.0;
                }
            }
            vec![a, b, c]
        }, |g, x, r| {
            let y = g.max_of(x);
            project(g, y, r)
        }),
        ("cross_entropy", |r| vec![random(r, 1, 7, -2.0, 2.0)], |g, x, r| {
            let target = r.below(7);
            g.cross_entropy(x[0], target)
        }),
    ]
}

/// Finite-difference check of every differentiable graph op over `trials`
/// seeded random instances. Returns the worst result per op.
pub fn numerics_suite(trials: usize, seed: u64) -> Result<Vec<(&'static str, GradCheck)>> {
    let mut out = Vec::new();
    for (name, inputs, build) in op_cases() {
        let mut worst = GradCheck::default();
        for trial in 0..trials {
            let mut rng = SeededRng::new(seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let xs = inputs(&mut rng);
            let weights_seed = rng.next_u64();
            let res = check_gradients(&xs, OP_STEP, 1, |g, ids| {
                let mut wr = SeededRng::new(weights_seed);
                Ok(build(g, ids, &mut wr))
            })?;
            worst = worst.merge(res);
        }
        out.push((name, worst));
    }
    Ok(out)
}
