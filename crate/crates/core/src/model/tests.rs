use super::*;
use crate::error::Error;
use crate::numerics::{check_gradients, Graph, SeededRng, Tensor2D};
use crate::prompt::Vocabulary;
use crate::scenes::{generate_dataset, GenConfig, FEATURE_DIM};

fn small() -> ModelConfig {
    ModelConfig {
        d: 8,
        n_layers: 2,
        n_heads: 2,
        ffn_mult: 2,
        vocab_size: 10,
        visual_feature_dim: 5,
        max_text_len: 6,
    }
}

fn random(rows: usize, cols: usize, rng: &mut SeededRng) -> Tensor2D {
    Tensor2D::new(rows, cols, (0..rows * cols).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).unwrap()
}

fn run(params: &ModelParams, ids: &[usize], feats: &Tensor2D) -> (Graph, ForwardTrace) {
    let mut g = Graph::new();
    let bound = BoundParams::frozen(&mut g, params);
    let trace = forward(&mut g, &bound, params.config(), ids, feats).unwrap();
    (g, trace)
}

#[test]
fn single_visual_token_gets_all_attention() {
    let mut rng = SeededRng::new(0);
    let p = ModelParams::init(small(), &mut rng).unwrap();
    let (g, t) = run(&p, &[1, 4, 5], &random(1, 5, &mut rng));
    for layer in t.attention_values(&g) {
        for head in layer {
            assert_eq!(head.shape(), (3, 1));
            assert!(head.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
    }
}

#[test]
fn zero_cross_projections_give_uniform_rows() {
    let mut rng = SeededRng::new(1);
    let mut p = ModelParams::init(small(), &mut rng).unwrap();
    for l in 0..2 {
        for name in ["cross_q", "cross_k"] {
            let t = p.get_mut(&format!("layer{l}.{name}")).unwrap();
            *t = Tensor2D::zeros(8, 8);
        }
    }
    let (g, t) = run(&p, &[1, 2, 3, 4], &random(9, 5, &mut rng));
    for layer in t.attention_values(&g) {
        for head in layer {
            assert!(head.data().iter().all(|&v| (v - 1.0 / 9.0).abs() < 1e-12));
        }
    }
}

#[test]
fn attention_rows_sum_to_one() {
    let mut rng = SeededRng::new(2);
    let p = ModelParams::init(small(), &mut rng).unwrap();
    let (g, t) = run(&p, &[1, 2, 3, 4, 5, 6], &random(16, 5, &mut rng));
    for layer in t.attention_values(&g) {
        for head in layer {
            for r in 0..head.rows() {
                let s: f64 = head.row(r).iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn earlier_positions_ignore_later_tokens() {
    let mut rng = SeededRng::new(3);
    let p = ModelParams::init(small(), &mut rng).unwrap();
    let feats = random(4, 5, &mut rng);
    let (ga, a) = run(&p, &[1, 2, 3, 4], &feats);
    let (gb, b) = run(&p, &[1, 2, 7, 8], &feats);
    for (la, lb) in a.attention_values(&ga).iter().zip(b.attention_values(&gb)) {
        for (ha, hb) in la.iter().zip(lb) {
            for r in 0..2 {
                for (x, y) in ha.row(r).iter().zip(hb.row(r)) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn permuting_visual_tokens_permutes_attention() {
    let mut rng = SeededRng::new(4);
    let p = ModelParams::init(small(), &mut rng).unwrap();
    let feats = random(5, 5, &mut rng);
    let perm = [3, 0, 4, 1, 2];
    let permuted = Tensor2D::from_rows(&perm.iter().map(|&i| feats.row(i).to_vec()).collect::<Vec<_>>()).unwrap();
    let (ga, a) = run(&p, &[1, 2, 3], &feats);
    let (gb, b) = run(&p, &[1, 2, 3], &permuted);
    let (la, lb) = (ga.value(a.logits), gb.value(b.logits));
    for (x, y) in la.data().iter().zip(lb.data()) {
        assert!((x - y).abs() < 1e-10);
    }
    for (xa, xb) in a.attention_values(&ga).iter().zip(b.attention_values(&gb)) {
        for (ha, hb) in xa.iter().zip(xb) {
            for r in 0..ha.rows() {
                for (j, &src) in perm.iter().enumerate() {
                    assert!((hb.get(r, j) - ha.get(r, src)).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let mut rng = SeededRng::new(5);
    let p = ModelParams::init(small(), &mut rng).unwrap();
    let mut g = Graph::new();
    let b = BoundParams::frozen(&mut g, &p);
    let f = random(3, 5, &mut rng);
    assert!(forward(&mut g, &b, p.config(), &[1; 7], &f).is_err());
    assert!(forward(&mut g, &b, p.config(), &[], &f).is_err());
    assert!(forward(&mut g, &b, p.config(), &[10], &f).is_err());
    assert!(matches!(forward(&mut g, &b, p.config(), &[1], &random(3, 4, &mut rng)), Err(Error::Shape(_))));
}

#[test]
fn uniform_logits_cross_entropy_is_log_vocab() {
    let mut g = Graph::new();
    let l = g.constant(Tensor2D::zeros(1, 4));
    let loss = task_loss(&mut g, l, 2).unwrap();
    assert!((g.scalar(loss) - 4f64.ln()).abs() < 1e-12);
    assert!(task_loss(&mut g, l, 4).is_err());
}

#[test]
fn full_model_gradients_match_finite_differences() {
    let cfg = small();
    let mut rng = SeededRng::new(6);
    let p = ModelParams::init(cfg, &mut rng).unwrap();
    let feats = random(9, 5, &mut rng);
    let ids = [1, 5, 2, 7];
    let report = check_gradients(p.tensors(), 1e-5, 1, |g, nodes| {
        let bound = BoundParams::from_nodes(&cfg, nodes.to_vec())?;
        let t = forward(g, &bound, &cfg, &ids, &feats)?;
        task_loss(g, t.logits, 3)
    })
    .unwrap();
    assert!(report.max_rel_err < 1e-3, "{report:?}");
    assert_eq!(report.checked, p.num_scalars());
}

#[test]
fn params_round_trip_bit_exact() {
    let p = ModelParams::init(small(), &mut SeededRng::new(7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.swim");
    save_params(&p, &path).unwrap();
    let q = load_params(&path).unwrap();
    assert_eq!(p, q);
    for (a, b) in p.tensors().iter().zip(q.tensors()) {
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn corrupt_files_rejected() {
    let p = ModelParams::init(small(), &mut SeededRng::new(8)).unwrap();
    let bytes = encode_params(&p);
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_params(&bad), Err(Error::Format(_))));
    let mut v2 = bytes.clone();
    v2[4] = 2;
    assert!(matches!(decode_params(&v2), Err(Error::UnsupportedVersion { found: 2, .. })));
    assert!(decode_params(&bytes[..bytes.len() - 3]).is_err());
    // d field changed: shapes no longer match the config
    let mut shape = bytes.clone();
    shape[8] = 4;
    assert!(decode_params(&shape).is_err());
}

#[test]
fn encodes_dataset_records() {
    let vocab = Vocabulary::standard();
    let data = generate_dataset(&GenConfig::default(), 5, 0, &vocab).unwrap();
    for r in &data {
        let e = encode_input(r.input(), &vocab).unwrap();
        assert_eq!(e.features.shape(), (144, FEATURE_DIM));
        assert_eq!(vocab.token(e.ids[e.span.0]).unwrap().split(' ').count(), 1);
        assert!(e.ids.iter().all(|&i| i != vocab.id("<ins>").unwrap()));
    }
}
