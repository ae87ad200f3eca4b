//! Reverse-mode gradients against central finite differences.

#[path = "support/gradcheck.rs"]
mod gradcheck;

use gradcheck::{
    bind, objective_fd_error, penalty_only_error, primitive_errors, symbolic_penalty_error,
    FIRST_ORDER_TOL, PENALTY_TOL,
};
use lipad::autodiff::{Graph, LeafKind};
use lipad::Tensor;

#[test]
fn primitive_gradients_match_central_differences() {
    for seed in 0..10 {
        for (name, err) in primitive_errors(seed) {
            assert!(
                err < FIRST_ORDER_TOL,
                "{name}, seed {seed}: relative error {err:e}"
            );
        }
    }
}

#[test]
fn symbolic_input_gradient_is_differentiable() {
    for seed in 0..10 {
        let err = symbolic_penalty_error(seed);
        assert!(err < PENALTY_TOL, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn critic_objective_first_order_part() {
    for seed in 0..10 {
        let err = objective_fd_error(seed, 0.0);
        assert!(err < FIRST_ORDER_TOL, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn critic_objective_with_penalty() {
    for seed in 0..10 {
        let err = objective_fd_error(seed, 10.0);
        assert!(err < PENALTY_TOL, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn penalty_gradient_alone_matches_differences() {
    for seed in 0..10 {
        let err = penalty_only_error(seed);
        assert!(err < PENALTY_TOL, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn constants_receive_no_gradient() {
    let mut g = Graph::new();
    let x = g.input("x");
    let c = g.constant("c", Tensor::scalar(3.0));
    let s = g.sum(x);
    let y = g.add(s, c);
    g.set_output(y);
    g.forward(&bind(vec![("x", Tensor::zeros(2, 2))])).unwrap();
    let grads = g.backward_for(y, |k| k != LeafKind::Const).unwrap();
    assert!(grads.get("c").is_none());
    assert!(grads.get("x").unwrap().data().iter().all(|&v| v == 1.0));
}
