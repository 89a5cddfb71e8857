//! self-CIDEr: diversity of a caption set read off the spectrum of its
//! pairwise CIDEr kernel.
//!
//! With σ₁ ≥ … ≥ σ_K the singular values of the symmetrized kernel and
//! `r = σ₁ / Σσᵢ`, the score is `−ln r / ln K` clamped to `[0, 1]`. A set of
//! identical captions has a rank-one kernel (`r = 1`, score 0); a set of
//! vocabulary-disjoint captions has an isotropic kernel (`r = 1/K`, score 1).
//! The ratio is scale-free, so whether the kernel is on the ×10 CIDEr scale
//! does not matter.

use crate::corpus::CaptionSet;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::ngram_metrics::{cider_from_vectors, CiderVector, DfStats};

/// Largest caption set the dense eigensolver is used for.
pub const MAX_KERNEL_SIZE: usize = 512;

/// Symmetric K × K matrix of pairwise caption similarities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl KernelMatrix {
    /// Builds a kernel from row-major entries, checking shape, finiteness,
    /// non-negativity and symmetry (within 1e-9).
    pub fn from_entries(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                got: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid("kernel entries must be finite and non-negative"));
        }
        for i in 0..size {
            for j in (i + 1)..size {
                if (entries[i * size + j] - entries[j * size + i]).abs() > 1e-9 {
                    return Err(Error::invalid(format!("kernel is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(KernelMatrix { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_entries(self.size, self.entries.iter().map(|x| x * factor).collect())
    }
}

/// `M[i][j] = cider(c_i, {c_j})`, averaged with its transpose.
pub fn cider_kernel(set: &CaptionSet, df: &DfStats) -> Result<KernelMatrix> {
    let k = set.k();
    if k < 2 {
        return Err(Error::invalid(format!(
            "self-CIDEr needs at least 2 captions, set {:?} has {k}",
            set.image_id
        )));
    }
    if k > MAX_KERNEL_SIZE {
        return Err(Error::invalid(format!(
            "caption set {:?} has {k} captions, above the supported {MAX_KERNEL_SIZE}",
            set.image_id
        )));
    }
    let vectors: Vec<Option<CiderVector>> = set
        .captions
        .iter()
        .map(|c| (!c.is_empty()).then(|| CiderVector::new(c, df)))
        .collect();
    let mut raw = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            if let (Some(a), Some(b)) = (&vectors[i], &vectors[j]) {
                raw[i * k + j] = cider_from_vectors(a, &[b]);
            }
        }
    }
    let mut entries = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            entries[i * k + j] = 0.5 * (raw[i * k + j] + raw[j * k + i]);
        }
    }
    KernelMatrix::from_entries(k, entries)
}

/// Singular values of the kernel, descending. The kernel is symmetric, so
/// these are its eigenvalues with negative ones clamped to zero.
pub fn kernel_spectrum(kernel: &KernelMatrix) -> Result<Vec<f64>> {
    let eig = symmetric_eigenvalues(kernel.entries(), kernel.size())?;
    Ok(eig.into_iter().map(|x| x.max(0.0)).collect())
}

pub fn self_cider_from_kernel(kernel: &KernelMatrix) -> Result<f64> {
    let k = kernel.size();
    if k < 2 {
        return Err(Error::invalid("self-CIDEr needs at least 2 captions"));
    }
    let spectrum = kernel_spectrum(kernel)?;
    let total: f64 = spectrum.iter().sum();
    if total <= 0.0 {
        return Err(Error::Numerical(
            "kernel has no positive singular value (degenerate captions)".into(),
        ));
    }
    let ratio = spectrum[0] / total;
    let score = -ratio.ln() / (k as f64).ln();
    // also maps the -0.0 of a rank-one kernel to 0.0
    Ok(if score > 0.0 { score.min(1.0) } else { 0.0 })
}

pub fn self_cider(set: &CaptionSet, df: &DfStats) -> Result<f64> {
    self_cider_from_kernel(&cider_kernel(set, df)?)
}
