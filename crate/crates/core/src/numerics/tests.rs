use super::gradcheck::numerics_suite;
use super::*;
use crate::error::Error;

#[test]
fn sum_gives_all_ones() {
    let mut g = Graph::new();
    let w = g.param(Tensor2D::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap());
    let s = g.sum(w);
    g.backward(s).unwrap();
    assert_eq!(g.grad(w).unwrap().data(), &[1.0; 4]);
}

#[test]
fn softmax_first_component_gradient() {
    let mut g = Graph::new();
    let x = g.param(Tensor2D::row_vector(vec![0.0, 0.0]));
    let p = g.softmax(x);
    let first = g.slice_cols(p, 0, 1);
    g.backward(first).unwrap();
    let grad = g.grad(x).unwrap();
    assert!((grad.data()[0] - 0.25).abs() < 1e-15);
    assert!((grad.data()[1] + 0.25).abs() < 1e-15);
}

#[test]
fn non_scalar_root_is_rejected() {
    let mut g = Graph::new();
    let w = g.param(Tensor2D::zeros(2, 2));
    assert!(matches!(
        g.backward(w),
        Err(Error::NonScalarRoot { rows: 2, cols: 2 })
    ));
}

#[test]
fn repeated_backward_accumulates() {
    let mut g = Graph::new();
    let w = g.param(Tensor2D::row_vector(vec![1.0, 2.0]));
    let sq = g.mul(w, w);
    let s = g.sum(sq);
    g.backward(s).unwrap();
    g.backward(s).unwrap();
    assert_eq!(g.grad(w).unwrap().data(), &[4.0, 8.0]);
    g.zero_grad();
    assert!(g.grad(w).is_none());
}

#[test]
fn constants_receive_no_gradient() {
    let mut g = Graph::new();
    let c = g.constant(Tensor2D::row_vector(vec![1.0, 2.0]));
    let w = g.param(Tensor2D::row_vector(vec![3.0, 4.0]));
    let p = g.mul(c, w);
    let s = g.sum(p);
    g.backward(s).unwrap();
    assert!(g.grad(c).is_none());
    assert_eq!(g.grad(w).unwrap().data(), &[1.0, 2.0]);
}

#[test]
fn detach_blocks_gradient() {
    let mut g = Graph::new();
    let w = g.param(Tensor2D::row_vector(vec![1.5]));
    let d = g.detach(w);
    let twice = g.scale(d, 2.0);
    let flipped = g.sub(twice, w); // value w, gradient -1
    g.backward(flipped).unwrap();
    assert_eq!(g.value(flipped).data(), &[1.5]);
    assert_eq!(g.grad(w).unwrap().data(), &[-1.0]);
}

#[test]
fn every_op_passes_finite_differences() {
    for (name, res) in numerics_suite(100, 11).unwrap() {
        assert!(res.max_rel_err < 1e-4, "{name}: {res:?}");
        assert!(res.checked > 0);
    }
}

#[test]
fn causal_softmax_masks_future() {
    let mut g = Graph::new();
    let x = g.constant(Tensor2D::filled(3, 3, 0.0));
    let p = g.causal_softmax(x);
    let v = g.value(p);
    assert_eq!(v.row(0), &[1.0, 0.0, 0.0]);
    assert_eq!(v.row(1), &[0.5, 0.5, 0.0]);
    assert!((v.row(2)[2] - 1.0 / 3.0).abs() < 1e-15);
}
