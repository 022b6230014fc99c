//! Central finite-difference oracle for the A2C loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sokoshape::agent::{loss_with_fixed_advantages, A2CHyper, ArchSpec, ConvSpec, PolicyParams};

pub const H: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-4;
/// Denominator floor so that gradients at rounding-noise scale are
/// compared absolutely.
pub const FLOOR: f64 = 1e-6;

pub fn tiny_arch() -> ArchSpec {
    ArchSpec {
        input: (7, 5, 5),
        convs: vec![
            ConvSpec { out_channels: 3, kernel: 3, stride: 1, padding: 0 },
            ConvSpec { out_channels: 2, kernel: 2, stride: 1, padding: 1 },
        ],
        hidden: 6,
        n_actions: 5,
    }
}

pub struct GradReport {
    /// parameters whose perturbation switched a rectified unit; central
    /// differences straddle a kink there and are not compared
    pub kinks: usize,
    pub checked: usize,
    pub within: usize,
    pub worst: f64,
}

/// Compares analytic and numeric gradients on one random batch.
pub fn check_batch(seed: u64, batch: usize, hyper: &A2CHyper) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = PolicyParams::init(tiny_arch(), &mut rng).unwrap();
    // larger heads than the init so every loss term is far from degenerate
    for v in params.theta.iter_mut() {
        *v += rng.gen_range(-0.3..0.3);
    }
    let per = params.arch().input_len();
    let obs: Vec<f64> = (0..batch * per).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let actions: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..5)).collect();
    let returns: Vec<f64> = (0..batch).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let advantages: Vec<f64> = (0..batch).map(|_| rng.gen_range(-2.0..2.0)).collect();

    let analytic = loss_with_fixed_advantages(&params, &obs, &actions, &returns, &advantages, hyper)
        .unwrap()
        .grad;
    let mut report = GradReport { kinks: 0, checked: 0, within: 0, worst: 0.0 };
    for i in 0..params.len() {
        let orig = params.theta[i];
        params.theta[i] = orig + H;
        let up = loss_with_fixed_advantages(&params, &obs, &actions, &returns, &advantages, hyper).unwrap().loss;
        let up_pattern = params.forward(&obs).unwrap().relu_pattern();
        params.theta[i] = orig - H;
        let down = loss_with_fixed_advantages(&params, &obs, &actions, &returns, &advantages, hyper).unwrap().loss;
        let down_pattern = params.forward(&obs).unwrap().relu_pattern();
        params.theta[i] = orig;
        if up_pattern != down_pattern {
            report.kinks += 1;
            continue;
        }
        let numeric = (up - down) / (2.0 * H);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
        report.checked += 1;
        if rel <= REL_TOL {
            report.within += 1;
        }
        report.worst = report.worst.max(rel);
    }
    report
}
