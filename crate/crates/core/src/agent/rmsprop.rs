use super::{A2CHyper, PolicyParams};

/// Scales `grad` so its global L2 norm is at most `max_norm`. Returns the norm
/// before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

/// One RMSprop update in place:
/// `acc = alpha * acc + (1 - alpha) * g^2`, `theta -= lr * g / (sqrt(acc) + eps)`.
pub fn rmsprop_step(params: &mut PolicyParams, grad: &[f64], hyper: &A2CHyper) {
    assert_eq!(grad.len(), params.theta.len(), "gradient length");
    let (alpha, lr, eps) = (hyper.rmsprop_alpha, hyper.learning_rate, hyper.rmsprop_eps);
    for ((theta, acc), g) in params.theta.iter_mut().zip(params.accum.iter_mut()).zip(grad) {
        *acc = alpha * *acc + (1.0 - alpha) * g * g;
        *theta -= lr * g / (acc.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ArchSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> PolicyParams {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        PolicyParams::init(ArchSpec::symbolic(5, 5), &mut rng).unwrap()
    }

    #[test]
    fn zero_gradient_only_decays_accumulators() {
        let mut p = params();
        p.accum.iter_mut().for_each(|a| *a = 2.0);
        let before = p.theta.clone();
        let zeros = vec![0.0; p.len()];
        rmsprop_step(&mut p, &zeros, &A2CHyper::default());
        assert_eq!(p.theta, before);
        assert!(p.accum.iter().all(|a| (*a - 1.98).abs() < 1e-15));
    }

    #[test]
    fn first_step_closed_form() {
        let mut p = params();
        let before = p.theta.clone();
        let ones = vec![1.0; p.len()];
        rmsprop_step(&mut p, &ones, &A2CHyper::default());
        let want = -7e-4 / (0.01f64.sqrt() + 1e-5);
        assert!((want + 6.9993e-3).abs() < 1e-7);
        for (a, b) in p.theta.iter().zip(&before) {
            assert!((a - b - want).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_gradient_shrinks_step() {
        let mut p = params();
        let g = vec![0.3; p.len()];
        let h = A2CHyper::default();
        let t0 = p.theta[0];
        rmsprop_step(&mut p, &g, &h);
        let t1 = p.theta[0];
        rmsprop_step(&mut p, &g, &h);
        let t2 = p.theta[0];
        assert!((t2 - t1).abs() < (t1 - t0).abs());
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 0.5), 5.0);
        assert!((g[0] - 0.3).abs() < 1e-15 && (g[1] - 0.4).abs() < 1e-15);
        let mut small = vec![0.1, 0.1];
        clip_grad_norm(&mut small, 0.5);
        assert_eq!(small, vec![0.1, 0.1]);
    }
}
