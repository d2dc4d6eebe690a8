mod common;

use bourgan_core::nn::{Layer, Mlp, OutputActivation};
use bourgan_core::rng;
use bourgan_core::train::{
    discriminator_gradients, dist_loss_pairs, gan_losses, generator_gradients, random_pairing,
};
use bourgan_core::MetricKind;
use common::*;
use ndarray::{arr1, Array1, Array2};
use rand::Rng;

const TOL: f64 = 1e-4;

fn flat(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

fn random_net(rng: &mut impl Rng, output: OutputActivation) -> Mlp {
    let depth = rng.random_range(1..=3);
    let mut dims = vec![rng.random_range(1..=6)];
    for _ in 0..depth {
        dims.push(rng.random_range(1..=16));
    }
    jitter(Mlp::new(&dims, output, rng.random()).unwrap(), rng)
}

#[test]
fn backward_matches_finite_differences() {
    let mut r = rng::stream(11, 0, 0);
    for case in 0..30 {
        let output = [OutputActivation::Identity, OutputActivation::Tanh, OutputActivation::Sigmoid][case % 3];
        let net = random_net(&mut r, output);
        let batch = r.random_range(1..=5);
        let x = random_matrix(batch, net.input_dim(), &mut r);
        let up = random_matrix(batch, net.output_dim(), &mut r);
        let loss = |n: &Mlp, x: &Array2<f64>| (n.forward(x.view()).unwrap() * &up).sum();

        let (grads, dx) = net.backward(x.view(), up.view()).unwrap();
        let err = max_rel_err(&grads.flat(), &numeric_param_grad(&net, |n| loss(n, &x)));
        assert!(err <= TOL, "parameter gradient: {err:e}");
        let err = max_rel_err(&flat(&dx), &flat(&numeric_input_grad(&x, |x| loss(&net, x))));
        assert!(err <= TOL, "input gradient: {err:e}");
    }
}

#[test]
fn dist_loss_gradient_wrt_samples() {
    let mut r = rng::stream(12, 0, 0);
    for metric in [MetricKind::Euclidean, MetricKind::Manhattan] {
        for _ in 0..20 {
            let batch = 2 * r.random_range(1..=6);
            let g = random_matrix(batch, r.random_range(1..=4), &mut r);
            let z = random_matrix(batch, r.random_range(1..=5), &mut r);
            let pairs = random_pairing(batch, &mut r).unwrap();
            let (_, grad) = dist_loss_pairs(g.view(), z.view(), &pairs, metric).unwrap();
            let numeric = numeric_input_grad(&g, |g| dist_loss_pairs(g.view(), z.view(), &pairs, metric).unwrap().0);
            let err = max_rel_err(&flat(&grad), &flat(&numeric));
            assert!(err <= TOL, "{}: {err:e}", metric.name());
        }
    }
}

#[test]
fn generator_objective_gradient() {
    let mut r = rng::stream(13, 0, 0);
    for case in 0..12 {
        let (zd, xd) = (r.random_range(1..=5), r.random_range(1..=3));
        let gen = jitter(Mlp::new(&[zd, 8, 8, xd], OutputActivation::Identity, r.random()).unwrap(), &mut r);
        let disc = jitter(Mlp::new(&[xd, 8, 1], OutputActivation::Sigmoid, r.random()).unwrap(), &mut r);
        let batch = 8;
        let z = random_matrix(batch, zd, &mut r);
        let pairs = random_pairing(batch, &mut r).unwrap();
        let beta = [0.0, 0.2, 1.5][case % 3];
        let step = generator_gradients(&gen, &disc, z.view(), &pairs, beta, MetricKind::Euclidean).unwrap();
        let objective = |g: &Mlp| {
            let x = g.forward(z.view()).unwrap();
            let p = disc.forward(x.view()).unwrap();
            let g_loss = -p.iter().map(|v| v.ln()).sum::<f64>() / batch as f64;
            let d = dist_loss_pairs(x.view(), z.view(), &pairs, MetricKind::Euclidean).unwrap().0;
            g_loss + beta * d
        };
        assert!((objective(&gen) - step.g_loss - beta * step.dist_loss).abs() < 1e-12);
        let err = max_rel_err(&step.grads.flat(), &numeric_param_grad(&gen, objective));
        assert!(err <= TOL, "generator: {err:e}");
    }
}

#[test]
fn discriminator_objective_gradient() {
    let mut r = rng::stream(14, 0, 0);
    for _ in 0..12 {
        let xd = r.random_range(1..=4);
        let disc = jitter(Mlp::new(&[xd, 10, 6, 1], OutputActivation::Sigmoid, r.random()).unwrap(), &mut r);
        let real = random_matrix(6, xd, &mut r);
        let fake = random_matrix(4, xd, &mut r);
        let (d_loss, grads) = discriminator_gradients(&disc, real.view(), fake.view()).unwrap();
        let objective = |d: &Mlp| {
            let pr = d.forward(real.view()).unwrap();
            let pf = d.forward(fake.view()).unwrap();
            gan_losses(pr.as_slice().unwrap(), pf.as_slice().unwrap()).unwrap().0
        };
        assert!((objective(&disc) - d_loss).abs() < 1e-15);
        let err = max_rel_err(&grads.flat(), &numeric_param_grad(&disc, objective));
        assert!(err <= TOL, "discriminator: {err:e}");
    }
}

#[test]
fn diagonal_generator_matches_hand_formula() {
    let mut r = rng::stream(15, 0, 0);
    let a = [0.5, 2.0, 3.0];
    let gen = Mlp::from_layers(
        vec![Layer { w: Array2::from_diag(&arr1(&a)), b: Array1::zeros(3) }],
        OutputActivation::Identity,
    )
    .unwrap();
    let z = random_matrix(10, 3, &mut r);
    let pairs = random_pairing(10, &mut r).unwrap();
    let x = gen.forward(z.view()).unwrap();
    let got = dist_loss_pairs(x.view(), z.view(), &pairs, MetricKind::Euclidean).unwrap().0;
    let mut want = 0.0;
    for &(i, j) in &pairs {
        let (mut gz, mut zz) = (0.0, 0.0);
        for k in 0..3 {
            let d = z[[i, k]] - z[[j, k]];
            gz += (a[k] * d).powi(2);
            zz += d * d;
        }
        want += (0.5 * (gz / zz).ln()).powi(2);
    }
    want /= pairs.len() as f64;
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn scaled_generator_costs_log2_squared() {
    let mut r = rng::stream(16, 0, 0);
    let z = random_matrix(12, 4, &mut r);
    let pairs = random_pairing(12, &mut r).unwrap();
    for c in [2.0f64, 10.0, 0.25] {
        let v = dist_loss_pairs((&z * c).view(), z.view(), &pairs, MetricKind::Euclidean).unwrap().0;
        let in_bits = v / std::f64::consts::LN_2.powi(2);
        assert!((in_bits - c.log2().powi(2)).abs() < 1e-12);
        let v2 = dist_loss_pairs((&z * c * 7.0).view(), (&z * 7.0).view(), &pairs, MetricKind::Euclidean).unwrap().0;
        assert!((v - v2).abs() < 1e-9);
    }
}
