//! Network gradients against central finite differences, and a capacity
//! check on a tiny training set.

use pmsm_moo::design_space::DesignSpec;
use pmsm_moo::sampling::{lhs_feasible, SamplingConfig};
use pmsm_moo::surrogate::{build_dataset, fit, Architecture, HeadSpec, Network, Scaler, TrainConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
/// Denominator floor for parameters whose gradient is numerically zero.
const REL_FLOOR: f64 = 1e-6;

fn max_rel_gradient_error(net: &Network, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let (_, analytic) = net.loss_and_gradient(xs, ys);
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for i in 0..net.params.len() {
        let p0 = net.params[i];
        probe.params[i] = p0 + STEP;
        let up = probe.loss(xs, ys);
        probe.params[i] = p0 - STEP;
        let down = probe.loss(xs, ys);
        probe.params[i] = p0;
        let numeric = (up - down) / (2.0 * STEP);
        let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(REL_FLOOR);
        worst = worst.max(rel);
    }
    worst
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, d_in: usize, d_out: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let xs = (0..n).map(|_| (0..d_in).map(|_| rng.gen::<f64>()).collect()).collect();
    let ys = (0..n).map(|_| (0..d_out).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    (xs, ys)
}

#[test]
fn gradient_check_default_architecture() {
    let arch = Architecture::default_machine();
    let net = Network::init(arch.clone(), 21);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (xs, ys) = random_batch(&mut rng, 5, arch.inputs, arch.outputs());
    let worst = max_rel_gradient_error(&net, &xs, &ys);
    println!("max relative gradient error {worst:.3e}");
    assert!(worst < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]
    #[test]
    fn gradient_check_random_networks(
        seed in any::<u64>(),
        inputs in 1usize..5,
        trunk in prop::collection::vec(1usize..7, 0..3),
        heads in prop::collection::vec((prop::collection::vec(1usize..6, 0..2), 1usize..5), 1..4),
    ) {
        let arch = Architecture {
            inputs,
            trunk,
            heads: heads.into_iter().map(|(hidden, outputs)| HeadSpec { hidden, outputs }).collect(),
        };
        let net = Network::init(arch.clone(), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let (xs, ys) = random_batch(&mut rng, 5, arch.inputs, arch.outputs());
        let worst = max_rel_gradient_error(&net, &xs, &ys);
        prop_assert!(worst < 1e-4, "{:?}: {}", arch, worst);
    }
}

#[test]
fn overfits_sixteen_designs() {
    let spec = DesignSpec::double_v();
    let designs = lhs_feasible(&SamplingConfig::new(16, 77), &spec).unwrap();
    let ds = build_dataset(&designs);
    let raw: Vec<Vec<f64>> = ds.records.iter().map(|r| r.measures.to_flat()).collect();
    let scaler = Scaler::fit(&spec, &raw);
    let xs: Vec<Vec<f64>> = designs.iter().map(|v| scaler.scale_input(v.as_slice())).collect();
    let ys: Vec<Vec<f64>> = raw.iter().map(|y| scaler.scale_output(y)).collect();
    let cfg = TrainConfig {
        seed: 3,
        max_epochs: 2000,
        patience: None,
        ..Default::default()
    };
    let (net, _) = fit(Network::init(Architecture::default_machine(), 3), &xs, &ys, &[], &[], &cfg).unwrap();
    let mse = net.loss(&xs, &ys);
    println!("16-sample training MSE {mse:.3e}");
    assert!(mse < 1e-4);
}
