use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{combine_latents, CombineMode, FeatureExtractor, Generator, LatentCode, LatentError, Result};
use crate::raster::Raster;

/// Optimiser settings for [`embed`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Per-layer loss weights; empty means 1 for every layer.
    pub lambda: Vec<f64>,
    pub seed: u64,
    /// Standard deviation of the Gaussian initialisation around zero.
    pub init_sigma: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            learning_rate: 0.01,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
            lambda: Vec::new(),
            seed: 0,
            init_sigma: 0.01,
        }
    }
}

impl EmbedConfig {
    fn validate(&self, layers: usize) -> Result<Vec<f64>> {
        let bad = |m: String| Err(LatentError::Config(m));
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad(format!("betas must lie in [0, 1): {} {}", self.beta1, self.beta2));
        }
        if !(self.learning_rate > 0.0) || !(self.epsilon >= 0.0) || !(self.init_sigma >= 0.0) {
            return bad("learning_rate must be positive; epsilon and init_sigma non-negative".into());
        }
        resolve_lambda(&self.lambda, layers)
    }
}

fn resolve_lambda(lambda: &[f64], layers: usize) -> Result<Vec<f64>> {
    if lambda.is_empty() {
        return Ok(vec![1.0; layers]);
    }
    if lambda.len() != layers {
        return Err(LatentError::Config(format!(
            "{} lambda weights for {layers} feature layers",
            lambda.len()
        )));
    }
    Ok(lambda.to_vec())
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// `sum_j (lambda_j / N_j) ||F_j(candidate) - F_j(target)||^2`.
pub fn perceptual_loss(
    candidate: &Raster,
    target: &Raster,
    feats: &dyn FeatureExtractor,
    lambda: &[f64],
) -> Result<f64> {
    if candidate.shape() != target.shape() {
        return Err(LatentError::ImageShape {
            got: candidate.shape(),
            want: target.shape(),
        });
    }
    let lambda = resolve_lambda(lambda, feats.layer_count())?;
    let fc = feats.features(candidate)?;
    let ft = feats.features(target)?;
    Ok(loss_from_features(&fc, &ft, &lambda))
}

fn loss_from_features(fc: &[Vec<f64>], ft: &[Vec<f64>], lambda: &[f64]) -> f64 {
    fc.iter()
        .zip(ft)
        .zip(lambda)
        .map(|((a, b), l)| {
            let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            l / a.len() as f64 * sq
        })
        .sum()
}

/// Loss and its gradient with respect to the latent code.
pub fn latent_gradient(
    latent: &LatentCode,
    target: &Raster,
    gen: &dyn Generator,
    feats: &dyn FeatureExtractor,
    lambda: &[f64],
) -> Result<(f64, LatentCode)> {
    let lambda = resolve_lambda(lambda, feats.layer_count())?;
    let ft = feats.features(target)?;
    loss_and_grad(latent, &ft, gen, feats, &lambda)
}

fn loss_and_grad(
    latent: &LatentCode,
    target_features: &[Vec<f64>],
    gen: &dyn Generator,
    feats: &dyn FeatureExtractor,
    lambda: &[f64],
) -> Result<(f64, LatentCode)> {
    let img = gen.synthesize(latent)?;
    let fc = feats.features(&img)?;
    let loss = loss_from_features(&fc, target_features, lambda);
    let cotangents: Vec<Vec<f64>> = fc
        .iter()
        .zip(target_features)
        .zip(lambda)
        .map(|((a, b), l)| {
            let k = 2.0 * l / a.len() as f64;
            a.iter().zip(b).map(|(x, y)| k * (x - y)).collect()
        })
        .collect();
    let image_grad = feats.features_grad(&img, &cotangents)?;
    Ok((loss, gen.synthesize_grad(latent, &image_grad)?))
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub latent: LatentCode,
    /// Loss before each update and after the last one (`steps + 1` entries).
    pub loss_trace: Vec<f64>,
}

impl Embedding {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace is never empty")
    }
}

/// Seeded starting point: zeros plus `N(0, init_sigma^2)` noise.
pub fn initial_latent(shape: (usize, usize), cfg: &EmbedConfig) -> LatentCode {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.init_sigma).expect("validated sigma");
    let values = (0..shape.0 * shape.1).map(|_| noise.sample(&mut rng)).collect();
    LatentCode {
        layers: shape.0,
        dims: shape.1,
        values,
    }
}

/// Fits a latent code so that `gen` reproduces `target` under the
/// perceptual loss, running `cfg.steps` Adam updates directly on the
/// `layers x dims` code.
pub fn embed(
    target: &Raster,
    gen: &dyn Generator,
    feats: &dyn FeatureExtractor,
    cfg: &EmbedConfig,
) -> Result<Embedding> {
    let lambda = cfg.validate(feats.layer_count())?;
    gen.check_image(target)?;
    let target_features = feats.features(target)?;

    let mut latent = initial_latent(gen.latent_shape(), cfg);
    let mut adam = Adam::new(latent.values.len(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut trace = Vec::with_capacity(cfg.steps + 1);
    for step in 0..cfg.steps {
        let (loss, grad) = loss_and_grad(&latent, &target_features, gen, feats, &lambda)?;
        if !loss.is_finite() {
            return Err(LatentError::NonFinite { what: "loss", step });
        }
        if grad.values.iter().any(|g| !g.is_finite()) {
            return Err(LatentError::NonFinite { what: "gradient", step });
        }
        trace.push(loss);
        adam.step(&mut latent.values, &grad.values);
        if latent.values.iter().any(|v| !v.is_finite()) {
            return Err(LatentError::NonFinite { what: "latent", step });
        }
    }
    let img = gen.synthesize(&latent)?;
    let last = loss_from_features(&feats.features(&img)?, &target_features, &lambda);
    if !last.is_finite() {
        return Err(LatentError::NonFinite { what: "loss", step: cfg.steps });
    }
    trace.push(last);
    Ok(Embedding { latent, loss_trace: trace })
}

#[derive(Debug, Clone)]
pub struct LatentMorph {
    pub image: Raster,
    pub latent: LatentCode,
    pub embeddings: [Embedding; 2],
}

impl LatentMorph {
    pub fn embedding_losses(&self) -> [f64; 2] {
        [self.embeddings[0].final_loss(), self.embeddings[1].final_loss()]
    }
}

/// Embeds both images, combines the codes with `(w1, w2)` and synthesises
/// the morph.
#[allow(clippy::too_many_arguments)]
pub fn generate_latent_morph(
    img1: &Raster,
    img2: &Raster,
    gen: &dyn Generator,
    feats: &dyn FeatureExtractor,
    cfg: &EmbedConfig,
    w1: f64,
    w2: f64,
    mode: CombineMode,
) -> Result<LatentMorph> {
    let e1 = embed(img1, gen, feats, cfg)?;
    let e2 = embed(img2, gen, feats, cfg)?;
    let latent = combine_latents(&e1.latent, &e2.latent, w1, w2, mode)?;
    let image = gen.synthesize(&latent)?;
    Ok(LatentMorph {
        image,
        latent,
        embeddings: [e1, e2],
    })
}
