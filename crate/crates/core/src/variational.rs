//! Diagonal Gaussians, Gaussian mixtures and the KL machinery of the
//! variational captioner objective.
//!
//! Argument order convention: every divergence `f(first, second)` computes
//! `KL(first ‖ second)`, i.e. the expectation is taken under `first`. The loss
//! assembly passes `(posterior, prior)`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    mean: Vec<f64>,
    log_var: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::invalid("Gaussian dimension must be at least 1"));
        }
        if mean.len() != log_var.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: log_var.len(),
            });
        }
        if mean.iter().chain(&log_var).any(|x| !x.is_finite()) {
            return Err(Error::invalid("Gaussian parameters must be finite"));
        }
        Ok(DiagGaussian { mean, log_var })
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn log_var(&self) -> &[f64] {
        &self.log_var
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.log_var)
            .map(|((&xi, &m), &lv)| {
                let d = xi - m;
                -0.5 * (LN_2PI + lv + d * d * (-lv).exp())
            })
            .sum())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.log_var)
            .map(|(&m, &lv)| {
                let eps: f64 = rng.sample(StandardNormal);
                m + (0.5 * lv).exp() * eps
            })
            .collect()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&g| (g - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mixture of diagonal Gaussians with weights `softmax(weight_logits)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gmm {
    components: Vec<DiagGaussian>,
    weight_logits: Vec<f64>,
}

impl Gmm {
    pub fn new(components: Vec<DiagGaussian>, weight_logits: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        check_dim(components.len(), weight_logits.len())?;
        let d = components[0].dim();
        for c in &components {
            check_dim(d, c.dim())?;
        }
        if weight_logits.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("weight logits must be finite"));
        }
        let gmm = Gmm {
            components,
            weight_logits,
        };
        if gmm.weights().iter().any(|&w| w <= 0.0) {
            return Err(Error::invalid(
                "weight logits too spread: a component weight underflows to 0",
            ));
        }
        Ok(gmm)
    }

    pub fn components(&self) -> &[DiagGaussian] {
        &self.components
    }

    pub fn weight_logits(&self) -> &[f64] {
        &self.weight_logits
    }

    pub fn weights(&self) -> Vec<f64> {
        softmax(&self.weight_logits)
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let terms: Vec<f64> = self
            .weights()
            .iter()
            .zip(&self.components)
            .map(|(w, c)| Ok(w.ln() + c.log_density(x)?))
            .collect::<Result<_>>()?;
        Ok(log_sum_exp(&terms))
    }
}

pub fn gmm_density(x: &[f64], gmm: &Gmm) -> Result<f64> {
    Ok(gmm.log_density(x)?.exp())
}

/// Closed-form `KL(q ‖ p)` between diagonal Gaussians.
pub fn kl_diag_gaussian(q: &DiagGaussian, p: &DiagGaussian) -> Result<f64> {
    check_dim(q.dim(), p.dim())?;
    let mut total = 0.0;
    for i in 0..q.dim() {
        let (lvq, lvp) = (q.log_var[i], p.log_var[i]);
        let dm = q.mean[i] - p.mean[i];
        total += 0.5 * ((lvp - lvq) + ((lvq).exp() + dm * dm) / lvp.exp() - 1.0);
    }
    if !total.is_finite() {
        return Err(Error::Numerical("KL divergence overflowed".into()));
    }
    Ok(total.max(0.0))
}

/// Gradients of `KL(q ‖ p)` with respect to `q.mean` and `q.log_var`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlGradient {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

pub fn grad_kl_diag_gaussian(q: &DiagGaussian, p: &DiagGaussian) -> Result<KlGradient> {
    check_dim(q.dim(), p.dim())?;
    let mut mean = Vec::with_capacity(q.dim());
    let mut log_var = Vec::with_capacity(q.dim());
    for i in 0..q.dim() {
        let var_p = p.log_var[i].exp();
        mean.push((q.mean[i] - p.mean[i]) / var_p);
        log_var.push(0.5 * (q.log_var[i].exp() / var_p - 1.0));
    }
    Ok(KlGradient { mean, log_var })
}

/// The two summands of the chain-rule bound
/// `KL(p ‖ q) ≤ KL(ω ‖ ω̃) + Σ_k ω_k KL(p_k ‖ q_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlBreakdown {
    pub weight_term: f64,
    pub component_terms: Vec<f64>,
    /// Weights `ω` of the first mixture, used to combine `component_terms`.
    pub weights: Vec<f64>,
    pub total: f64,
}

impl KlBreakdown {
    /// Single-Gaussian case: no weight term and one component.
    pub fn single(kl: f64) -> Self {
        KlBreakdown {
            weight_term: 0.0,
            component_terms: vec![kl],
            weights: vec![1.0],
            total: kl,
        }
    }
}

/// Upper bound on `KL(p ‖ q)` with components matched by index.
pub fn gmm_kl_upper_bound(p: &Gmm, q: &Gmm) -> Result<KlBreakdown> {
    if p.num_components() != q.num_components() {
        return Err(Error::invalid(format!(
            "component count mismatch: {} vs {}",
            p.num_components(),
            q.num_components()
        )));
    }
    check_dim(p.dim(), q.dim())?;
    let w = p.weights();
    let w_tilde = q.weights();
    let weight_term = w
        .iter()
        .zip(&w_tilde)
        .map(|(a, b)| a * (a.ln() - b.ln()))
        .sum::<f64>()
        .max(0.0);
    let component_terms: Vec<f64> = p
        .components
        .iter()
        .zip(&q.components)
        .map(|(pk, qk)| kl_diag_gaussian(pk, qk))
        .collect::<Result<_>>()?;
    let total = weight_term + w.iter().zip(&component_terms).map(|(a, c)| a * c).sum::<f64>();
    Ok(KlBreakdown {
        weight_term,
        component_terms,
        weights: w,
        total,
    })
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Minimum sample count accepted by [`mc_gmm_kl`].
pub const MIN_MC_SAMPLES: usize = 10_000;

/// Monte-Carlo `KL(p ‖ q)`: mean of `log p(x) − log q(x)` over `x ~ p`.
/// Draws from stream 0 of `seed`.
pub fn mc_gmm_kl(p: &Gmm, q: &Gmm, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::invalid(format!(
            "Monte-Carlo KL needs at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    check_dim(p.dim(), q.dim())?;
    let mut rng = rng::stream(seed, 0);
    let picker = WeightedIndex::new(p.weights()).map_err(|e| Error::Numerical(e.to_string()))?;
    // Welford accumulation
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..samples {
        let k = picker.sample(&mut rng);
        let x = p.components[k].sample(&mut rng);
        let v = p.log_density(&x)? - q.log_density(&x)?;
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(McEstimate {
        estimate: mean,
        stderr: (var / samples as f64).sqrt(),
    })
}

/// Per-dimension kernel choice: `dims` independent draws from
/// `categorical(softmax(g))`, stream 0 of `seed`.
pub fn agmm_select_kernels(gmm: &Gmm, dims: usize, seed: u64) -> Result<Vec<usize>> {
    if dims == 0 {
        return Err(Error::invalid("need at least one latent dimension"));
    }
    let picker = WeightedIndex::new(gmm.weights()).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut rng = rng::stream(seed, 0);
    Ok((0..dims).map(|_| picker.sample(&mut rng)).collect())
}

/// Mean over sequence positions of `KL(posterior_t ‖ prior)`.
pub fn iip_kl(posteriors: &[DiagGaussian], prior: &DiagGaussian) -> Result<f64> {
    if posteriors.is_empty() {
        return Err(Error::invalid("need at least one posterior position"));
    }
    let sum = posteriors
        .iter()
        .map(|q| kl_diag_gaussian(q, prior))
        .sum::<Result<f64>>()?;
    Ok(sum / posteriors.len() as f64)
}

/// `z = μ + exp(log_var / 2) ⊙ noise`.
pub fn reparam_sample(q: &DiagGaussian, noise: &[f64]) -> Result<Vec<f64>> {
    check_dim(q.dim(), noise.len())?;
    Ok(q.mean
        .iter()
        .zip(&q.log_var)
        .zip(noise)
        .map(|((&m, &lv), &e)| m + (0.5 * lv).exp() * e)
        .collect())
}

/// `recon_nll + beta · kl.total`.
pub fn vat_loss(recon_nll: f64, kl: &KlBreakdown, beta: f64) -> Result<f64> {
    if !recon_nll.is_finite() || !beta.is_finite() || !kl.total.is_finite() {
        return Err(Error::invalid("loss inputs must be finite"));
    }
    if recon_nll < 0.0 {
        return Err(Error::invalid(format!(
            "reconstruction NLL must be >= 0, got {recon_nll}"
        )));
    }
    if beta < 0.0 {
        return Err(Error::invalid(format!("beta must be >= 0, got {beta}")));
    }
    Ok(recon_nll + beta * kl.total)
}

/// Random mixture with `k` components in `d` dimensions: means in [-2, 2),
/// log-variances in [-1, 1), weight logits in [-1, 1).
pub fn random_gmm<R: Rng>(rng: &mut R, k: usize, d: usize) -> Result<Gmm> {
    let components = (0..k)
        .map(|_| {
            DiagGaussian::new(
                (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
        })
        .collect::<Result<_>>()?;
    Gmm::new(components, (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect())
}
