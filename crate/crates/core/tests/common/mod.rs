#![allow(dead_code)]

use std::collections::BTreeSet;

use entstruct::features::{features_composed, features_dense, FeatureVector};
use entstruct::mlp::{loss_and_gradients, MlpModel, Sample};
use entstruct::qcore::{dense_compose, dense_seed_state};
use entstruct::seeds::{sample_seed_params, SeedParams};
use entstruct::structure::{enumerate_compositions, Composition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A uniformly chosen composition of `n` with witness-valid seed parameters.
pub fn random_draw<R: Rng>(n: usize, rng: &mut R) -> (Composition, Vec<SeedParams>) {
    let comps = enumerate_compositions(n).unwrap();
    let c = comps[rng.random_range(0..comps.len())].clone();
    let params = c
        .blocks()
        .iter()
        .map(|&b| sample_seed_params(b, rng).unwrap())
        .collect();
    (c, params)
}

pub fn dense_features(c: &Composition, params: &[SeedParams]) -> FeatureVector {
    let blocks: Vec<_> = c
        .blocks()
        .iter()
        .zip(params)
        .map(|(&b, &p)| dense_seed_state(b, p).unwrap())
        .collect();
    features_dense(&dense_compose(&blocks).unwrap()).unwrap()
}

/// Largest closed-form vs dense discrepancy over `draws` random draws.
pub fn composed_oracle_gap(n: usize, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws)
        .map(|_| {
            let (c, params) = random_draw(n, &mut rng);
            features_composed(n, &c, &params)
                .unwrap()
                .max_abs_diff(&dense_features(&c, &params))
        })
        .fold(0.0, f64::max)
}

/// (block count, largest block) over all set partitions of `n` labelled
/// elements, via restricted growth strings.
pub fn set_partition_classes(n: usize) -> BTreeSet<(usize, usize)> {
    fn walk(rgs: &mut Vec<usize>, n: usize, out: &mut BTreeSet<(usize, usize)>) {
        if rgs.len() == n {
            let blocks = rgs.iter().max().unwrap() + 1;
            let largest = (0..blocks)
                .map(|b| rgs.iter().filter(|&&x| x == b).count())
                .max()
                .unwrap();
            out.insert((blocks, largest));
            return;
        }
        let next = rgs.iter().max().map_or(0, |m| m + 1);
        for v in 0..=next {
            rgs.push(v);
            walk(rgs, n, out);
            rgs.pop();
        }
    }
    let mut out = BTreeSet::new();
    walk(&mut Vec::new(), n, &mut out);
    out
}

pub fn random_batch(size: usize, classes: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| Sample {
            x: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
            label: rng.random_range(0..classes),
        })
        .collect()
}

fn param_mut(m: &mut MlpModel, layer: usize, bias: bool, i: usize) -> &mut f64 {
    let l = &mut m.layers_mut()[layer];
    if bias {
        &mut l.bias_mut()[i]
    } else {
        &mut l.weights_mut()[i]
    }
}

/// Signs of every hidden pre-activation over the batch.
fn relu_pattern(model: &MlpModel, batch: &[Sample]) -> Vec<bool> {
    let layers = model.layers();
    let mut out = Vec::new();
    for s in batch {
        let mut x = s.x.to_vec();
        for l in &layers[..layers.len() - 1] {
            x = (0..l.outputs())
                .map(|o| {
                    let row = &l.weights()[o * l.inputs()..(o + 1) * l.inputs()];
                    l.bias()[o] + row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect();
            out.extend(x.iter().map(|&v| v > 0.0));
            x.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
    out
}

pub struct GradientCheck {
    /// `‖g − g_fd‖ / (‖g‖ + ‖g_fd‖)` over the compared parameters.
    pub relative_error: f64,
    pub compared: usize,
    /// Parameters whose ±h probe moved a hidden unit across the ReLU kink,
    /// where central differences are meaningless.
    pub skipped: usize,
}

/// Backprop against central differences over every parameter.
pub fn gradient_check(model: &MlpModel, batch: &[Sample], weight_decay: f64) -> GradientCheck {
    const H: f64 = 1e-6;
    let (_, grads) = loss_and_gradients(model, batch, weight_decay).unwrap();
    let analytic = grads.flatten();
    let loss = |m: &MlpModel| loss_and_gradients(m, batch, weight_decay).unwrap().0;
    let mut pairs = Vec::with_capacity(analytic.len());
    let mut skipped = 0;
    let mut probe = model.clone();
    let mut flat = 0;
    for li in 0..model.layers().len() {
        for bias in [false, true] {
            let len = if bias {
                model.layers()[li].bias().len()
            } else {
                model.layers()[li].weights().len()
            };
            for i in 0..len {
                let orig = *param_mut(&mut probe, li, bias, i);
                *param_mut(&mut probe, li, bias, i) = orig + H;
                let (up, up_pattern) = (loss(&probe), relu_pattern(&probe, batch));
                *param_mut(&mut probe, li, bias, i) = orig - H;
                let (down, down_pattern) = (loss(&probe), relu_pattern(&probe, batch));
                *param_mut(&mut probe, li, bias, i) = orig;
                if up_pattern == down_pattern {
                    pairs.push((analytic[flat], (up - down) / (2.0 * H)));
                } else {
                    skipped += 1;
                }
                flat += 1;
            }
        }
    }
    let diff = pairs.iter().map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = pairs.iter().map(|(a, _)| a * a).sum::<f64>().sqrt()
        + pairs.iter().map(|(_, b)| b * b).sum::<f64>().sqrt();
    GradientCheck {
        relative_error: if scale == 0.0 { 0.0 } else { diff / scale },
        compared: pairs.len(),
        skipped,
    }
}
