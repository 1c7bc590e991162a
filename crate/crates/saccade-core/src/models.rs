//! The weak generative models: one Bernoulli-gated 3D Gaussian per
//! (class, viewpoint) cell, a per-class univariate Gaussian over the root
//! scaling coefficient, training from labeled images, log-likelihood
//! evaluation, posterior inference and a versioned binary container.
//!
//! All probability arithmetic runs in log domain with log-sum-exp
//! normalization; 266 summed log-likelihoods underflow linear-domain
//! products.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::haar::{CoeffTriplet, Geometry, Viewpoint, WaveletPyramid};
use crate::mnist::LabeledImage;

/// Smallest admissible variance / covariance eigenvalue.
pub const VAR_FLOOR: f64 = 1e-6;
/// Minimum non-null sample count for a class-specific Gaussian fit; below
/// this the viewpoint's pooled class-agnostic Gaussian is used instead.
pub const MIN_FIT: usize = 10;
/// Relative ridge added to covariances: lambda = max(COV_REG_REL * tr/3, VAR_FLOOR).
pub const COV_REG_REL: f64 = 1e-2;

const BANK_MAGIC: &[u8; 8] = b"SACCBANK";
const BANK_VERSION: u32 = 1;

const LN_2PI: f64 = 1.8378770664093453;

/// A 3D Gaussian with its Cholesky factor and log normalizer cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian3 {
    mu: [f64; 3],
    sigma: [f64; 9], // row-major, symmetric
    chol: [f64; 9],  // lower-triangular L with L L^T = sigma
    log_norm: f64,   // -(3/2) ln 2pi - (1/2) ln det sigma
}

impl Gaussian3 {
    pub fn new(mu: [f64; 3], sigma: [f64; 9]) -> Result<Self> {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let a = sigma[i * 3 + j];
            let b = sigma[j * 3 + i];
            if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::Numeric("covariance not symmetric".into()));
            }
        }
        let chol = cholesky3(&sigma)
            .ok_or_else(|| Error::Numeric("covariance not positive definite".into()))?;
        let log_det = 2.0 * (chol[0].ln() + chol[4].ln() + chol[8].ln());
        Ok(Gaussian3 {
            mu,
            sigma,
            chol,
            log_norm: -1.5 * LN_2PI - 0.5 * log_det,
        })
    }

    pub fn mu(&self) -> [f64; 3] {
        self.mu
    }

    pub fn sigma(&self) -> [f64; 9] {
        self.sigma
    }

    pub fn log_pdf(&self, x: [f64; 3]) -> f64 {
        let d = [x[0] - self.mu[0], x[1] - self.mu[1], x[2] - self.mu[2]];
        // solve L y = d, quadratic form = |y|^2
        let l = &self.chol;
        let y0 = d[0] / l[0];
        let y1 = (d[1] - l[3] * y0) / l[4];
        let y2 = (d[2] - l[6] * y0 - l[7] * y1) / l[8];
        self.log_norm - 0.5 * (y0 * y0 + y1 * y1 + y2 * y2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        let z: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let l = &self.chol;
        [
            self.mu[0] + l[0] * z[0],
            self.mu[1] + l[3] * z[0] + l[4] * z[1],
            self.mu[2] + l[6] * z[0] + l[7] * z[1] + l[8] * z[2],
        ]
    }
}

fn cholesky3(s: &[f64; 9]) -> Option<[f64; 9]> {
    let mut l = [0.0; 9];
    let d0 = s[0];
    if d0 <= 0.0 {
        return None;
    }
    l[0] = d0.sqrt();
    l[3] = s[3] / l[0];
    l[6] = s[6] / l[0];
    let d1 = s[4] - l[3] * l[3];
    if d1 <= 0.0 {
        return None;
    }
    l[4] = d1.sqrt();
    l[7] = (s[7] - l[6] * l[3]) / l[4];
    let d2 = s[8] - l[6] * l[6] - l[7] * l[7];
    if d2 <= 0.0 {
        return None;
    }
    l[8] = d2.sqrt();
    Some(l)
}

/// Ridge-regularizes a raw covariance in place and returns it.
fn regularize(mut sigma: [f64; 9]) -> [f64; 9] {
    let trace = sigma[0] + sigma[4] + sigma[8];
    let lambda = (COV_REG_REL * trace / 3.0).max(VAR_FLOOR);
    sigma[0] += lambda;
    sigma[4] += lambda;
    sigma[8] += lambda;
    sigma
}

/// Per-(class, viewpoint) generative model: probability `rho` that the
/// triplet is non-null, and a Gaussian over non-null triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakModel {
    rho: f64,
    n_nonnull: u64,
    gaussian: Gaussian3,
}

impl WeakModel {
    pub fn new(rho: f64, n_nonnull: u64, mu: [f64; 3], sigma: [f64; 9]) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Argument(format!("rho must lie in (0,1), got {rho}")));
        }
        Ok(WeakModel {
            rho,
            n_nonnull,
            gaussian: Gaussian3::new(mu, sigma)?,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n_nonnull(&self) -> u64 {
        self.n_nonnull
    }

    pub fn gaussian(&self) -> &Gaussian3 {
        &self.gaussian
    }

    /// Log-likelihood of one observed triplet under this model.
    pub fn loglik(&self, x: &CoeffTriplet) -> f64 {
        if x.is_null() {
            (1.0 - self.rho).ln()
        } else {
            self.rho.ln() + self.gaussian.log_pdf(x.as_array())
        }
    }

    /// Mode of the Bernoulli-gated distribution: the null triplet when the
    /// null branch is more probable, the Gaussian mean otherwise.
    pub fn predict(&self) -> CoeffTriplet {
        if self.rho < 0.5 {
            CoeffTriplet::ZERO
        } else {
            let m = self.gaussian.mu();
            CoeffTriplet::new(m[0], m[1], m[2])
        }
    }

    /// Draws a triplet from the gated generative process.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CoeffTriplet {
        if rng.gen::<f64>() < self.rho {
            let x = self.gaussian.sample(rng);
            CoeffTriplet::new(x[0], x[1], x[2])
        } else {
            CoeffTriplet::ZERO
        }
    }
}

/// Per-class univariate Gaussian over the root scaling coefficient, used to
/// form the initial guess before any saccade.
#[derive(Debug, Clone, PartialEq)]
pub struct RootModel {
    means: Vec<f64>,
    vars: Vec<f64>,
}

impl RootModel {
    pub fn new(means: Vec<f64>, vars: Vec<f64>) -> Result<Self> {
        if means.len() != vars.len() || means.is_empty() {
            return Err(Error::Argument("root model needs one (mean, var) per class".into()));
        }
        if vars.iter().any(|v| *v < VAR_FLOOR) {
            return Err(Error::Argument(format!("root variances must be >= {VAR_FLOOR}")));
        }
        Ok(RootModel { means, vars })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn vars(&self) -> &[f64] {
        &self.vars
    }

    fn log_pdf(&self, class: usize, root: f64) -> f64 {
        let d = root - self.means[class];
        -0.5 * ((2.0 * std::f64::consts::PI * self.vars[class]).ln() + d * d / self.vars[class])
    }
}

/// The full trained model: `n_classes` x `viewpoint_count` weak models plus
/// the root model. Immutable once trained; safe to share across threads.
#[derive(Debug)]
pub struct ModelBank {
    geometry: Geometry,
    n_classes: usize,
    n_train_examples: u64,
    weak: Vec<WeakModel>, // index: class * viewpoint_count + viewpoint id
    root: RootModel,
    posterior_evals: AtomicU64,
}

impl PartialEq for ModelBank {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
            && self.n_classes == other.n_classes
            && self.n_train_examples == other.n_train_examples
            && self.weak == other.weak
            && self.root == other.root
    }
}

/// Moment accumulator for one training chunk.
struct Moments {
    class_counts: Vec<u64>,
    nonnull: Vec<u64>,   // per (z, u)
    sum: Vec<[f64; 3]>,  // per (z, u)
    sumsq: Vec<[f64; 6]>, // per (z, u): xx, xy, xz, yy, yz, zz
    root_sum: Vec<f64>,
    root_sumsq: Vec<f64>,
}

impl Moments {
    fn new(n_classes: usize, n_viewpoints: usize) -> Self {
        let cells = n_classes * n_viewpoints;
        Moments {
            class_counts: vec![0; n_classes],
            nonnull: vec![0; cells],
            sum: vec![[0.0; 3]; cells],
            sumsq: vec![[0.0; 6]; cells],
            root_sum: vec![0.0; n_classes],
            root_sumsq: vec![0.0; n_classes],
        }
    }

    fn absorb_image(
        &mut self,
        geom: &Geometry,
        n_viewpoints: usize,
        example: &LabeledImage,
    ) -> Result<()> {
        let pyramid = WaveletPyramid::forward(geom, example.pixels)?;
        let z = example.label;
        self.class_counts[z] += 1;
        self.root_sum[z] += pyramid.root();
        self.root_sumsq[z] += pyramid.root() * pyramid.root();
        for (vid, vp) in geom.viewpoints().enumerate() {
            let t = pyramid.triplet(vp).expect("viewpoint from geometry");
            if t.is_null() {
                continue;
            }
            let cell = z * n_viewpoints + vid;
            self.nonnull[cell] += 1;
            let x = t.as_array();
            let s = &mut self.sum[cell];
            s[0] += x[0];
            s[1] += x[1];
            s[2] += x[2];
            let q = &mut self.sumsq[cell];
            q[0] += x[0] * x[0];
            q[1] += x[0] * x[1];
            q[2] += x[0] * x[2];
            q[3] += x[1] * x[1];
            q[4] += x[1] * x[2];
            q[5] += x[2] * x[2];
        }
        Ok(())
    }

    fn merge(&mut self, other: &Moments) {
        for (a, b) in self.class_counts.iter_mut().zip(&other.class_counts) {
            *a += b;
        }
        for (a, b) in self.nonnull.iter_mut().zip(&other.nonnull) {
            *a += b;
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            for k in 0..6 {
                a[k] += b[k];
            }
        }
        for (a, b) in self.root_sum.iter_mut().zip(&other.root_sum) {
            *a += b;
        }
        for (a, b) in self.root_sumsq.iter_mut().zip(&other.root_sumsq) {
            *a += b;
        }
    }
}

/// (mu, raw covariance) from accumulated sums, or None when count is zero.
fn moments_to_gaussian(count: u64, sum: &[f64; 3], sumsq: &[f64; 6]) -> Option<([f64; 3], [f64; 9])> {
    if count == 0 {
        return None;
    }
    let n = count as f64;
    let mu = [sum[0] / n, sum[1] / n, sum[2] / n];
    let c = |e: f64, i: usize, j: usize| e / n - mu[i] * mu[j];
    let sigma = [
        c(sumsq[0], 0, 0),
        c(sumsq[1], 0, 1),
        c(sumsq[2], 0, 2),
        c(sumsq[1], 0, 1),
        c(sumsq[3], 1, 1),
        c(sumsq[4], 1, 2),
        c(sumsq[2], 0, 2),
        c(sumsq[4], 1, 2),
        c(sumsq[5], 2, 2),
    ];
    Some((mu, sigma))
}

impl ModelBank {
    /// Trains the full bank from labeled images. Every class must be
    /// represented; moments are accumulated in fixed-size chunks and merged
    /// in order, so the result is independent of the worker count.
    pub fn train(geometry: &Geometry, n_classes: usize, examples: &[LabeledImage]) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Argument("training needs at least one example".into()));
        }
        if n_classes == 0 {
            return Err(Error::Argument("training needs at least one class".into()));
        }
        if let Some(bad) = examples.iter().find(|e| e.label >= n_classes) {
            return Err(Error::Training(format!(
                "label {} out of range for {} classes",
                bad.label, n_classes
            )));
        }
        let n_viewpoints = geometry.viewpoint_count();

        let chunked: Vec<Result<Moments>> = examples
            .par_chunks(1024)
            .map(|chunk| {
                let mut acc = Moments::new(n_classes, n_viewpoints);
                for example in chunk {
                    acc.absorb_image(geometry, n_viewpoints, example)?;
                }
                Ok(acc)
            })
            .collect();
        let mut total = Moments::new(n_classes, n_viewpoints);
        for acc in chunked {
            total.merge(&acc?);
        }

        if let Some(z) = total.class_counts.iter().position(|&c| c == 0) {
            return Err(Error::Training(format!("class {z} has no training examples")));
        }

        // pooled per-viewpoint moments (class-agnostic fallback)
        let mut pooled_count = vec![0u64; n_viewpoints];
        let mut pooled_sum = vec![[0.0f64; 3]; n_viewpoints];
        let mut pooled_sumsq = vec![[0.0f64; 6]; n_viewpoints];
        let mut global_count = 0u64;
        let mut global_sum = [0.0f64; 3];
        let mut global_sumsq = [0.0f64; 6];
        for z in 0..n_classes {
            for vid in 0..n_viewpoints {
                let cell = z * n_viewpoints + vid;
                pooled_count[vid] += total.nonnull[cell];
                global_count += total.nonnull[cell];
                for k in 0..3 {
                    pooled_sum[vid][k] += total.sum[cell][k];
                    global_sum[k] += total.sum[cell][k];
                }
                for k in 0..6 {
                    pooled_sumsq[vid][k] += total.sumsq[cell][k];
                    global_sumsq[k] += total.sumsq[cell][k];
                }
            }
        }
        let global = moments_to_gaussian(global_count, &global_sum, &global_sumsq)
            .unwrap_or(([0.0; 3], [0.0; 9]));

        let mut weak = Vec::with_capacity(n_classes * n_viewpoints);
        for z in 0..n_classes {
            for vid in 0..n_viewpoints {
                let cell = z * n_viewpoints + vid;
                let n_nonnull = total.nonnull[cell];
                let rho = (n_nonnull as f64 + 1.0) / (total.class_counts[z] as f64 + 2.0);
                // class fit, then pooled viewpoint fit, then global fit
                let (mu, sigma) = if n_nonnull >= MIN_FIT as u64 {
                    moments_to_gaussian(n_nonnull, &total.sum[cell], &total.sumsq[cell]).unwrap()
                } else if pooled_count[vid] >= MIN_FIT as u64 {
                    moments_to_gaussian(pooled_count[vid], &pooled_sum[vid], &pooled_sumsq[vid])
                        .unwrap()
                } else {
                    global
                };
                weak.push(WeakModel::new(rho, n_nonnull, mu, regularize(sigma))?);
            }
        }

        let mut root_means = Vec::with_capacity(n_classes);
        let mut root_vars = Vec::with_capacity(n_classes);
        for z in 0..n_classes {
            let n = total.class_counts[z] as f64;
            let mean = total.root_sum[z] / n;
            let var = (total.root_sumsq[z] / n - mean * mean).max(VAR_FLOOR);
            root_means.push(mean);
            root_vars.push(var);
        }

        Ok(ModelBank {
            geometry: geometry.clone(),
            n_classes,
            n_train_examples: examples.len() as u64,
            weak,
            root: RootModel::new(root_means, root_vars)?,
            posterior_evals: AtomicU64::new(0),
        })
    }

    /// Assembles a bank from explicit parts (used for hand-built synthetic
    /// banks in tests and benchmarks).
    pub fn from_parts(
        geometry: Geometry,
        n_classes: usize,
        weak: Vec<WeakModel>,
        root: RootModel,
        n_train_examples: u64,
    ) -> Result<Self> {
        let expected = n_classes * geometry.viewpoint_count();
        if weak.len() != expected {
            return Err(Error::Argument(format!(
                "expected {expected} weak models, got {}",
                weak.len()
            )));
        }
        if root.means().len() != n_classes {
            return Err(Error::Argument("root model class count mismatch".into()));
        }
        Ok(ModelBank {
            geometry,
            n_classes,
            n_train_examples,
            weak,
            root,
            posterior_evals: AtomicU64::new(0),
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_train_examples(&self) -> u64 {
        self.n_train_examples
    }

    pub fn root_model(&self) -> &RootModel {
        &self.root
    }

    pub fn weak_model(&self, class: usize, vp: Viewpoint) -> Result<&WeakModel> {
        let vid = self.geometry.viewpoint_id(vp)?;
        Ok(self.weak_by_id(class, vid))
    }

    pub(crate) fn weak_by_id(&self, class: usize, vid: usize) -> &WeakModel {
        &self.weak[class * self.geometry.viewpoint_count() + vid]
    }

    /// Log-likelihood of one triplet observation under class `class`.
    pub fn triplet_loglik(&self, class: usize, vp: Viewpoint, x: &CoeffTriplet) -> Result<f64> {
        if class >= self.n_classes {
            return Err(Error::Argument(format!("class {class} out of range")));
        }
        Ok(self.weak_model(class, vp)?.loglik(x))
    }

    /// Posterior over classes after conditionally-independent triplet
    /// observations, starting from `prior`.
    pub fn posterior_from_observation(
        &self,
        observations: &[(Viewpoint, CoeffTriplet)],
        prior: &Belief,
    ) -> Result<Belief> {
        if observations.is_empty() {
            return Err(Error::Argument("observation list is empty".into()));
        }
        let ids: Vec<(usize, CoeffTriplet)> = observations
            .iter()
            .map(|(vp, t)| Ok((self.geometry.viewpoint_id(*vp)?, *t)))
            .collect::<Result<_>>()?;
        self.posterior_by_ids(&ids, prior)
    }

    pub(crate) fn posterior_by_ids(
        &self,
        observations: &[(usize, CoeffTriplet)],
        prior: &Belief,
    ) -> Result<Belief> {
        if prior.n_classes() != self.n_classes {
            return Err(Error::Argument(format!(
                "prior has {} classes, bank has {}",
                prior.n_classes(),
                self.n_classes
            )));
        }
        let mut log_w = vec![0.0; self.n_classes];
        for (z, lw) in log_w.iter_mut().enumerate() {
            let p = prior.probs()[z];
            if p <= 0.0 {
                *lw = f64::NEG_INFINITY;
                continue;
            }
            let mut acc = p.ln();
            for &(vid, ref t) in observations {
                acc += self.weak_by_id(z, vid).loglik(t);
            }
            *lw = acc;
        }
        self.posterior_evals
            .fetch_add(self.n_classes as u64, Ordering::Relaxed);
        Belief::from_log_weights(&log_w)
    }

    /// Initial guess from the root scaling coefficient alone: softmax of the
    /// per-class univariate Gaussian log-likelihoods.
    pub fn root_prior(&self, root: f64) -> Belief {
        let log_w: Vec<f64> = (0..self.n_classes)
            .map(|z| self.root.log_pdf(z, root))
            .collect();
        Belief::from_log_weights(&log_w).expect("root log-likelihoods are finite")
    }

    /// Number of per-class likelihood-column evaluations performed inside
    /// posterior computations so far (one posterior costs `n_classes`).
    pub fn posterior_eval_count(&self) -> u64 {
        self.posterior_evals.load(Ordering::Relaxed)
    }

    // ── persistence ─────────────────────────────────────────────────────

    /// Writes the bank to its single-file container (fixed-layout header,
    /// root block, weak-model blocks in (class-major, viewpoint-minor)
    /// order, trailing SHA-256). See docs/model-format.md.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut body = Vec::new();
        body.extend_from_slice(BANK_MAGIC);
        body.write_u32::<LittleEndian>(BANK_VERSION)?;
        body.write_u32::<LittleEndian>(self.n_classes as u32)?;
        body.write_u32::<LittleEndian>(self.geometry.rows() as u32)?;
        body.write_u32::<LittleEndian>(self.geometry.cols() as u32)?;
        body.write_u32::<LittleEndian>(self.geometry.levels() as u32)?;
        body.write_u32::<LittleEndian>(self.geometry.viewpoint_count() as u32)?;
        body.write_u64::<LittleEndian>(self.n_train_examples)?;
        body.write_f64::<LittleEndian>(crate::haar::NULL_EPS)?;
        body.write_f64::<LittleEndian>(VAR_FLOOR)?;
        body.write_f64::<LittleEndian>(COV_REG_REL)?;
        body.write_u32::<LittleEndian>(MIN_FIT as u32)?;
        for z in 0..self.n_classes {
            body.write_f64::<LittleEndian>(self.root.means()[z])?;
            body.write_f64::<LittleEndian>(self.root.vars()[z])?;
        }
        for model in &self.weak {
            body.write_f64::<LittleEndian>(model.rho)?;
            body.write_u64::<LittleEndian>(model.n_nonnull)?;
            for v in model.gaussian.mu() {
                body.write_f64::<LittleEndian>(v)?;
            }
            for v in model.gaussian.sigma() {
                body.write_f64::<LittleEndian>(v)?;
            }
        }
        let digest = Sha256::digest(&body);
        let mut file = File::create(path)?;
        file.write_all(&body)?;
        file.write_all(&digest)?;
        Ok(())
    }

    /// Loads a bank written by [`ModelBank::save`], verifying the format
    /// version and the trailing checksum.
    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < BANK_MAGIC.len() + 4 + 32 {
            return Err(Error::Corruption("file shorter than header".into()));
        }
        if &bytes[..8] != BANK_MAGIC {
            return Err(Error::Corruption("bad magic".into()));
        }
        let version = (&bytes[8..12]).read_u32::<LittleEndian>()?;
        if version != BANK_VERSION {
            return Err(Error::Version {
                expected: BANK_VERSION,
                found: version,
            });
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 32);
        let digest = Sha256::digest(body);
        if digest.as_slice() != trailer {
            return Err(Error::Corruption("checksum mismatch".into()));
        }

        let mut cur = &body[12..];
        let read_u32 = |cur: &mut &[u8]| -> Result<u32> {
            cur.read_u32::<LittleEndian>()
                .map_err(|_| Error::Corruption("truncated header".into()))
        };
        let read_u64 = |cur: &mut &[u8]| -> Result<u64> {
            cur.read_u64::<LittleEndian>()
                .map_err(|_| Error::Corruption("truncated body".into()))
        };
        let read_f64 = |cur: &mut &[u8]| -> Result<f64> {
            cur.read_f64::<LittleEndian>()
                .map_err(|_| Error::Corruption("truncated body".into()))
        };

        let n_classes = read_u32(&mut cur)? as usize;
        let rows = read_u32(&mut cur)? as usize;
        let cols = read_u32(&mut cur)? as usize;
        let levels = read_u32(&mut cur)? as usize;
        let n_viewpoints = read_u32(&mut cur)? as usize;
        let n_train_examples = read_u64(&mut cur)?;
        let _null_eps = read_f64(&mut cur)?;
        let _var_floor = read_f64(&mut cur)?;
        let _cov_reg = read_f64(&mut cur)?;
        let _min_fit = read_u32(&mut cur)?;

        let geometry = Geometry::new(rows, cols, levels)
            .map_err(|e| Error::Corruption(format!("bad geometry in header: {e}")))?;
        if geometry.viewpoint_count() != n_viewpoints {
            return Err(Error::Corruption(format!(
                "header claims {n_viewpoints} viewpoints, geometry has {}",
                geometry.viewpoint_count()
            )));
        }

        let mut means = Vec::with_capacity(n_classes);
        let mut vars = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            means.push(read_f64(&mut cur)?);
            vars.push(read_f64(&mut cur)?);
        }
        let mut weak = Vec::with_capacity(n_classes * n_viewpoints);
        for _ in 0..n_classes * n_viewpoints {
            let rho = read_f64(&mut cur)?;
            let n_nonnull = read_u64(&mut cur)?;
            let mut mu = [0.0; 3];
            for v in &mut mu {
                *v = read_f64(&mut cur)?;
            }
            let mut sigma = [0.0; 9];
            for v in &mut sigma {
                *v = read_f64(&mut cur)?;
            }
            weak.push(
                WeakModel::new(rho, n_nonnull, mu, sigma)
                    .map_err(|e| Error::Corruption(format!("bad weak model: {e}")))?,
            );
        }
        if !cur.is_empty() {
            return Err(Error::Corruption(format!("{} trailing bytes", cur.len())));
        }
        let root =
            RootModel::new(means, vars).map_err(|e| Error::Corruption(format!("bad root: {e}")))?;
        ModelBank::from_parts(geometry, n_classes, weak, root, n_train_examples)
    }
}
