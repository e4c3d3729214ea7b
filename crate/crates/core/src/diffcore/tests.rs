use super::*;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Reduces any output to a scalar through a fixed random weighting so every
/// output coordinate contributes to the checked gradient.
fn weighted_sum(tape: &mut Tape, out: Var, seed: u64) -> Result<Var> {
    let shape = tape.value(out).shape().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = tape.constant(rand_tensor(&mut rng, &shape, -1.0, 1.0));
    let prod = tape.mul(out, w)?;
    tape.sum(prod)
}

#[test]
fn softmax_of_zeros_is_uniform() {
    let mut t = Tape::new();
    let x = t.constant(Tensor::vector(vec![0.0, 0.0]).unwrap());
    let y = t.softmax_rows(x).unwrap();
    assert_eq!(t.value(y).data(), &[0.5, 0.5]);
}

#[test]
fn sigmoid_at_zero() {
    let mut t = Tape::new();
    let x = t.constant(Tensor::scalar(0.0));
    let y = t.sigmoid(x).unwrap();
    assert_eq!(t.value(y).item(), 0.5);
}

#[test]
fn conv1d_right_shift() {
    let mut t = Tape::new();
    let x = t.constant(Tensor::vector(vec![1.0, 0.0, 0.0, 0.0]).unwrap());
    // kernel offsets l = -1, 0, +1
    let k = t.constant(Tensor::vector(vec![0.0, 0.0, 1.0]).unwrap());
    let y = t.conv1d(x, k).unwrap();
    assert_eq!(t.value(y).data(), &[0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn shape_errors_name_both_shapes() {
    let mut t = Tape::new();
    let a = t.constant(Tensor::zeros(&[2, 3]));
    let b = t.constant(Tensor::zeros(&[2, 3]));
    match t.matmul(a, b) {
        Err(Error::Shape { left, right, .. }) => {
            assert_eq!(left, vec![2, 3]);
            assert_eq!(right, vec![2, 3]);
        }
        other => panic!("expected shape error, got {other:?}"),
    }
    let c = t.constant(Tensor::zeros(&[3]));
    assert!(matches!(t.add(a, c), Err(Error::Shape { .. })));
}

#[test]
fn grad_of_square() {
    let mut t = Tape::new();
    let w = t.param(Tensor::scalar(3.0));
    let y = t.mul(w, w).unwrap();
    let g = t.grad(y).unwrap();
    assert_eq!(g.wrt(w).item(), 6.0);
}

#[test]
fn grad_of_sigmoid_at_zero() {
    let mut t = Tape::new();
    let w = t.param(Tensor::scalar(0.0));
    let y = t.sigmoid(w).unwrap();
    let g = t.grad(y).unwrap();
    assert_eq!(g.wrt(w).item(), 0.25);
}

#[test]
fn grad_rejects_non_scalar_loss() {
    let mut t = Tape::new();
    let w = t.param(Tensor::zeros(&[2]));
    let y = t.tanh(w).unwrap();
    assert!(matches!(t.grad(y), Err(Error::Contract(_))));
}

#[test]
fn unused_parameter_gets_exact_zeros() {
    let mut t = Tape::new();
    let used = t.param(Tensor::vector(vec![1.0, 2.0]).unwrap());
    let unused = t.param(Tensor::vector(vec![5.0, -1.0, 0.5]).unwrap());
    let _dead = t.tanh(unused).unwrap();
    let y = t.sum(used).unwrap();
    let g = t.grad(y).unwrap();
    assert_eq!(g.wrt(unused).data(), &[0.0, 0.0, 0.0]);
    assert_eq!(g.wrt(used).data(), &[1.0, 1.0]);
}

#[test]
fn replayed_gradients_are_bitwise_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut t = Tape::new();
    let a = t.param(rand_tensor(&mut rng, &[3, 4], -1.0, 1.0));
    let b = t.param(rand_tensor(&mut rng, &[4, 2], -1.0, 1.0));
    let m = t.matmul(a, b).unwrap();
    let s = t.softmax_rows(m).unwrap();
    let l = t.log(s).unwrap();
    let y = t.mean(l).unwrap();
    let g1 = t.grad(y).unwrap();
    let g2 = t.grad(y).unwrap();
    assert_eq!(g1.wrt(a), g2.wrt(a));
    assert_eq!(g1.wrt(b), g2.wrt(b));
}

#[test]
fn check_gradients_exact_for_linear() {
    let f = |t: &mut Tape, p: &[Var]| t.scale(p[0], 3.0);
    let r = check_gradients(f, &[Tensor::scalar(0.7)], 1e-5).unwrap();
    assert!(r.max_rel_error <= 1e-10, "{}", r.max_rel_error);
}

#[test]
fn check_gradients_propagates_non_finite() {
    let f = |t: &mut Tape, p: &[Var]| {
        let big = t.scale(p[0], 1e308)?;
        let bigger = t.scale(big, 1e10)?;
        t.sum(bigger)
    };
    assert!(check_gradients(f, &[Tensor::scalar(1.0)], 1e-5).is_err());
}

#[test]
fn two_layer_tanh_network_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for draw in 0..20 {
        let x = rand_tensor(&mut rng, &[3, 4], -1.0, 1.0);
        let params = vec![
            rand_tensor(&mut rng, &[4, 5], -1.0, 1.0),
            rand_tensor(&mut rng, &[5], -0.5, 0.5),
            rand_tensor(&mut rng, &[5, 2], -1.0, 1.0),
        ];
        let f = |t: &mut Tape, p: &[Var]| {
            let xv = t.constant(x.clone());
            let h = t.matmul(xv, p[0])?;
            let h = t.add_bias(h, p[1])?;
            let h = t.tanh(h)?;
            let o = t.matmul(h, p[2])?;
            let o = t.tanh(o)?;
            weighted_sum(t, o, draw)
        };
        let r = check_gradients(f, &params, 1e-5).unwrap();
        assert!(r.max_rel_error <= 1e-6, "draw {draw}: {r:?}");
    }
}

fn check_primitive<F>(name: &str, shapes: &[&[usize]], lo: f64, hi: f64, f: F)
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(name.len() as u64);
    for draw in 0..100u64 {
        let params: Vec<Tensor> = shapes.iter().map(|s| rand_tensor(&mut rng, s, lo, hi)).collect();
        let g = |t: &mut Tape, p: &[Var]| {
            let out = f(t, p)?;
            weighted_sum(t, out, draw)
        };
        let r = check_gradients(g, &params, 1e-5).unwrap();
        assert!(r.max_rel_error <= 1e-6, "{name} draw {draw}: {r:?}");
    }
}

#[test]
fn every_primitive_adjoint_matches_finite_differences() {
    check_primitive("matmul", &[&[3, 4], &[4, 2]], -1.0, 1.0, |t, p| t.matmul(p[0], p[1]));
    check_primitive("matvec", &[&[3, 4], &[4]], -1.0, 1.0, |t, p| t.matvec(p[0], p[1]));
    check_primitive("add", &[&[2, 3], &[2, 3]], -1.0, 1.0, |t, p| t.add(p[0], p[1]));
    check_primitive("add_bias", &[&[2, 3], &[3]], -1.0, 1.0, |t, p| t.add_bias(p[0], p[1]));
    check_primitive("sub", &[&[2, 3], &[2, 3]], -1.0, 1.0, |t, p| t.sub(p[0], p[1]));
    check_primitive("mul", &[&[2, 3], &[2, 3]], -1.0, 1.0, |t, p| t.mul(p[0], p[1]));
    check_primitive("scale", &[&[4]], -1.0, 1.0, |t, p| t.scale(p[0], -2.5));
    check_primitive("sigmoid", &[&[2, 3]], -3.0, 3.0, |t, p| t.sigmoid(p[0]));
    check_primitive("tanh", &[&[2, 3]], -2.0, 2.0, |t, p| t.tanh(p[0]));
    check_primitive("softmax_rows", &[&[3, 4]], -2.0, 2.0, |t, p| t.softmax_rows(p[0]));
    check_primitive("log", &[&[2, 3]], 0.2, 2.0, |t, p| t.log(p[0]));
    check_primitive("conv1d", &[&[2, 6], &[3]], -1.0, 1.0, |t, p| t.conv1d(p[0], p[1]));
    check_primitive("conv1d_wide", &[&[1, 5], &[5]], -1.0, 1.0, |t, p| t.conv1d(p[0], p[1]));
    check_primitive("concat", &[&[2, 3], &[2, 1]], -1.0, 1.0, |t, p| t.concat(&[p[0], p[1]]));
    check_primitive("transpose", &[&[2, 3]], -1.0, 1.0, |t, p| t.transpose(p[0]));
    check_primitive("sum", &[&[2, 3]], -1.0, 1.0, |t, p| t.sum(p[0]));
    check_primitive("mean", &[&[2, 3]], -1.0, 1.0, |t, p| t.mean(p[0]));
    check_primitive("select_rows", &[&[4, 3]], -1.0, 1.0, |t, p| t.select_rows(p[0], &[2, 0, 2]));
    check_primitive("gather", &[&[6]], -1.0, 1.0, |t, p| {
        t.gather(p[0], vec![Some(5), None, Some(1), Some(1)], &[2, 2])
    });
    let target = Tensor::vector(vec![1.0, 0.0, 0.3, 0.0]).unwrap();
    check_primitive("bce", &[&[4]], 0.05, 0.95, |t, p| t.bce(&target, p[0]));
}

#[test]
fn bce_values() {
    let one = |v: f64| Tensor::vector(vec![v]).unwrap();
    let ln2 = std::f64::consts::LN_2;
    assert!((bce(&one(1.0), &one(0.5)).unwrap() - ln2).abs() < 1e-15);
    assert!((bce(&one(0.5), &one(0.5)).unwrap() - ln2).abs() < 1e-15);
    let t = Tensor::vector(vec![1.0, 0.0]).unwrap();
    let p = Tensor::vector(vec![0.9, 0.1]).unwrap();
    let expected = -(0.9f64.ln() + 0.9f64.ln()) / 2.0;
    assert!((bce(&t, &p).unwrap() - expected).abs() < 1e-15);
    assert!((expected - 0.105_361).abs() < 1e-6);
}

#[test]
fn bce_saturated_predictions_stay_finite() {
    let t = Tensor::vector(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
    let p = Tensor::vector(vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let v = bce(&t, &p).unwrap();
    assert!(v.is_finite());
    assert!((v - 2.0 * (-(LOG_EPS.ln())) / 4.0).abs() < 1e-9);
    // exact matches contribute exactly zero
    let exact = bce(&Tensor::vector(vec![1.0, 0.0]).unwrap(), &Tensor::vector(vec![1.0, 0.0]).unwrap());
    assert_eq!(exact.unwrap(), 0.0);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn softmax_rows_are_distributions(vals in proptest::collection::vec(-50.0f64..50.0, 12)) {
            let mut t = Tape::new();
            let x = t.constant(Tensor::matrix(3, 4, vals).unwrap());
            let y = t.softmax_rows(x).unwrap();
            let out = t.value(y);
            for i in 0..3 {
                let s: f64 = out.row(i).iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
                prop_assert!(out.row(i).iter().all(|&v| v >= 0.0));
            }
        }

        #[test]
        fn rmsprop_zero_grad_keeps_param(p in -10.0f64..10.0, s in 0.0f64..5.0) {
            let mut param = Tensor::vector(vec![p]).unwrap();
            let mut st = OptimizerState::new(&[1], RmsPropConfig::default()).unwrap();
            st.s = Tensor::vector(vec![s]).unwrap();
            rmsprop_step(&mut param, &Tensor::zeros(&[1]), &mut st).unwrap();
            prop_assert_eq!(param.item(), p);
            prop_assert!(st.s.item() >= 0.0);
        }
    }
}
