mod common;

use common::gradcheck::{check_batch, tiny_arch};
use sokoshape::agent::A2CHyper;

#[test]
fn tiny_architecture_is_valid() {
    assert!(tiny_arch().param_count().unwrap() > 100);
}

#[test]
fn full_loss_matches_finite_differences() {
    let r = check_batch(1, 2, &A2CHyper::default());
    assert!(r.within as f64 >= 0.99 * r.checked as f64, "{}/{} worst {}", r.within, r.checked, r.worst);
}

#[test]
fn each_term_alone_matches_finite_differences() {
    let base = A2CHyper::default();
    let only_policy = A2CHyper { value_loss_coef: 0.0, entropy_coef: 0.0, ..base };
    let only_value = A2CHyper { entropy_coef: 0.0, ..base };
    let only_entropy = A2CHyper { value_loss_coef: 0.0, entropy_coef: 1.0, ..base };
    for (i, h) in [only_policy, only_value, only_entropy].iter().enumerate() {
        let r = check_batch(10 + i as u64, 3, h);
        assert!(r.within as f64 >= 0.99 * r.checked as f64, "term {i}: {}/{} worst {}", r.within, r.checked, r.worst);
    }
}
