use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MadError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Inverse regularisation strength; the Pegasos `lambda` is `1 / (c * n)`.
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, epochs: 50 }
    }
}

/// Linear decision function `w . x + b`, positive for morphs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// Labels: `true` = morph (+1), `false` = bona fide (-1).
///
/// Pegasos on per-feature standardised inputs with a constant bias feature,
/// shuffled each epoch by a seeded ChaCha8 stream. The returned model is the
/// average of the iterates of the final epoch, mapped back to raw features.
pub fn train_linear_svm(features: &[Vec<f64>], labels: &[bool], params: SvmParams, seed: u64) -> Result<LinearModel> {
    if features.len() != labels.len() {
        return Err(MadError::Config(format!("{} feature vectors for {} labels", features.len(), labels.len())));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(MadError::SingleClass);
    }
    if !(params.c > 0.0 && params.c.is_finite()) || params.epochs == 0 {
        return Err(MadError::Config("SVM needs C > 0 and at least one epoch".into()));
    }
    let dim = features[0].len();
    if let Some(i) = features.iter().position(|f| f.len() != dim) {
        return Err(MadError::FeatureLength { index: i, got: features[i].len(), want: dim });
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MadError::Config("non-finite feature value".into()));
    }

    let n = features.len();
    let mut mean = vec![0.0; dim];
    for f in features {
        mean.iter_mut().zip(f).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut inv_std = vec![0.0; dim];
    for f in features {
        inv_std.iter_mut().zip(f.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m) * (v - m));
    }
    // Constant features get scale 0 and drop out.
    for s in &mut inv_std {
        let sd = (*s / n as f64).sqrt();
        *s = if sd > 1e-12 { 1.0 / sd } else { 0.0 };
    }
    let z: Vec<Vec<f64>> = features
        .iter()
        .map(|f| {
            let mut v: Vec<f64> = f.iter().zip(&mean).zip(&inv_std).map(|((x, m), s)| (x - m) * s).collect();
            v.push(1.0);
            v
        })
        .collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    let lambda = 1.0 / (params.c * n as f64);
    let mut w = vec![0.0; dim + 1];
    let mut avg = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let last = epoch + 1 == params.epochs;
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = y[i] * dot(&w, &z[i]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                let step = eta * y[i];
                w.iter_mut().zip(&z[i]).for_each(|(v, x)| *v += step * x);
            }
            // Optional Pegasos projection onto the ball of radius 1/sqrt(lambda).
            let norm = dot(&w, &w).sqrt();
            let radius = 1.0 / lambda.sqrt();
            if norm > radius {
                w.iter_mut().for_each(|v| *v *= radius / norm);
            }
            if last {
                avg.iter_mut().zip(&w).for_each(|(a, v)| *a += v);
            }
        }
    }
    avg.iter_mut().for_each(|a| *a /= n as f64);

    let weights: Vec<f64> = avg[..dim].iter().zip(&inv_std).map(|(w, s)| w * s).collect();
    let bias = avg[dim] - weights.iter().zip(&mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearModel { weights, bias })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
