//! A from-scratch feed-forward network with tanh activations on every
//! layer, trained by full-batch gradient descent with momentum.
//!
//! The default identity classifier is five layers deep — input, hidden
//! 100/50/10, output — with one output unit per enrolled subject. Targets
//! are +0.9 for the true class and -0.9 elsewhere, keeping the loss away
//! from tanh's saturated tails. All arithmetic is plain `f64` loops with a
//! fixed summation order, so a given seed, dataset, and config always
//! produce bit-identical parameters.

use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("network needs at least 2 layers of width >= 1, got {0:?}")]
    BadDims(Vec<usize>),
    #[error("input length {got} does not match layer width {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("sample label {label} outside the {classes}-class output layer")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("loss or gradient became non-finite at epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("malformed model file: {0}")]
    FormatError(String),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

/// Hyperparameters for [`train`]; also carries the ± targets used by
/// [`MlpModel::loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub target_hi: f64,
    pub target_lo: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 300,
            target_hi: 0.9,
            target_lo: -0.9,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), MlpError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(MlpError::BadConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(MlpError::BadConfig(format!(
                "momentum {} must lie in [0, 1)",
                self.momentum
            )));
        }
        if self.epochs == 0 {
            return Err(MlpError::BadConfig("epoch count must be positive".into()));
        }
        if !(self.target_hi.is_finite() && self.target_lo.is_finite()) {
            return Err(MlpError::BadConfig("targets must be finite".into()));
        }
        Ok(())
    }
}

/// One feature vector with its class index.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Full-batch gradient of the mean loss, shaped like the model parameters.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    pub weight_grads: Vec<Vec<f64>>,
    pub bias_grads: Vec<Vec<f64>>,
    pub loss: f64,
}

/// Feed-forward tanh network. `weights[l]` maps layer `l` (width
/// `dims[l]`) to layer `l+1` as a row-major `dims[l+1] x dims[l]` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    seed: u64,
}

/// The architecture used throughout the pipeline: three hidden layers of
/// 100, 50, and 10 units between the feature input and the class output.
pub fn default_dims(d_in: usize, d_out: usize) -> Vec<usize> {
    vec![d_in, 100, 50, 10, d_out]
}

const MAGIC: &[u8; 4] = b"MLP1";

impl MlpModel {
    /// Builds a network with weights drawn uniformly from
    /// `[-1/sqrt(fan_in), +1/sqrt(fan_in)]` by a seeded ChaCha8 generator
    /// and all biases zero.
    pub fn new(dims: &[usize], seed: u64) -> Result<Self, MlpError> {
        if dims.len() < 2 || dims.iter().any(|&d| d < 1) {
            return Err(MlpError::BadDims(dims.to_vec()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let fan_in = dims[l];
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w: Vec<f64> = (0..dims[l + 1] * fan_in)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect();
            weights.push(w);
            biases.push(vec![0.0; dims[l + 1]]);
        }
        Ok(Self {
            dims: dims.to_vec(),
            weights,
            biases,
            seed,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    pub fn output_len(&self) -> usize {
        *self.dims.last().expect("dims never empty")
    }

    pub fn param_count(&self) -> usize {
        (0..self.dims.len() - 1)
            .map(|l| self.dims[l + 1] * self.dims[l] + self.dims[l + 1])
            .sum()
    }

    /// All parameters flattened layer by layer, weights (row-major) before
    /// biases — the same order as the file format.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.weights.len() {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
        out
    }

    /// A copy of the model with parameters replaced from a flat slice laid
    /// out as in [`MlpModel::params_flat`].
    pub fn with_params_flat(&self, flat: &[f64]) -> Result<Self, MlpError> {
        if flat.len() != self.param_count() {
            return Err(MlpError::DimMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut model = self.clone();
        let mut at = 0;
        for l in 0..model.weights.len() {
            let wn = model.weights[l].len();
            model.weights[l].copy_from_slice(&flat[at..at + wn]);
            at += wn;
            let bn = model.biases[l].len();
            model.biases[l].copy_from_slice(&flat[at..at + bn]);
            at += bn;
        }
        Ok(model)
    }

    /// Activations of every layer for input `x`; element 0 is `x` itself.
    fn forward_trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, MlpError> {
        if x.len() != self.dims[0] {
            return Err(MlpError::DimMismatch {
                expected: self.dims[0],
                got: x.len(),
            });
        }
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(x.to_vec());
        for l in 0..self.weights.len() {
            let (n_out, n_in) = (self.dims[l + 1], self.dims[l]);
            let prev = &acts[l];
            let mut next = Vec::with_capacity(n_out);
            for row in 0..n_out {
                let mut z = self.biases[l][row];
                let w_row = &self.weights[l][row * n_in..(row + 1) * n_in];
                for (w, a) in w_row.iter().zip(prev) {
                    z += w * a;
                }
                next.push(z.tanh());
            }
            acts.push(next);
        }
        Ok(acts)
    }

    /// Output activations in (-1, 1) per unit; tanh on every layer,
    /// including the last.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        Ok(self.forward_trace(x)?.pop().expect("trace is non-empty"))
    }

    /// Argmax over output activations; ties resolve to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, MlpError> {
        let out = self.forward(x)?;
        let mut best = 0;
        for (i, &v) in out.iter().enumerate().skip(1) {
            if v > out[best] {
                best = i;
            }
        }
        Ok(best)
    }

    fn targets(&self, label: usize, cfg: &TrainConfig) -> Result<Vec<f64>, MlpError> {
        let classes = self.output_len();
        if label >= classes {
            return Err(MlpError::LabelOutOfRange { label, classes });
        }
        let mut t = vec![cfg.target_lo; classes];
        t[label] = cfg.target_hi;
        Ok(t)
    }

    /// Mean over samples of `0.5 * ||forward(x) - t||^2` with ±targets from
    /// `cfg`.
    pub fn loss(&self, samples: &[LabeledSample], cfg: &TrainConfig) -> Result<f64, MlpError> {
        if samples.is_empty() {
            return Err(MlpError::EmptyDataset);
        }
        let mut total = 0.0;
        for s in samples {
            let out = self.forward(&s.features)?;
            let t = self.targets(s.label, cfg)?;
            total += 0.5
                * out
                    .iter()
                    .zip(&t)
                    .map(|(o, t)| (o - t) * (o - t))
                    .sum::<f64>();
        }
        Ok(total / samples.len() as f64)
    }

    /// Backpropagated gradient of [`MlpModel::loss`] over the whole batch.
    pub fn batch_gradient(
        &self,
        samples: &[LabeledSample],
        cfg: &TrainConfig,
    ) -> Result<BatchGradient, MlpError> {
        if samples.is_empty() {
            return Err(MlpError::EmptyDataset);
        }
        let mut weight_grads: Vec<Vec<f64>> =
            self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut bias_grads: Vec<Vec<f64>> =
            self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut total_loss = 0.0;

        for s in samples {
            let acts = self.forward_trace(&s.features)?;
            let t = self.targets(s.label, cfg)?;
            let out = acts.last().expect("trace is non-empty");
            total_loss += 0.5
                * out
                    .iter()
                    .zip(&t)
                    .map(|(o, t)| (o - t) * (o - t))
                    .sum::<f64>();

            // output delta: (a - t) * tanh'(z), with tanh'(z) = 1 - a^2
            let mut delta: Vec<f64> = out
                .iter()
                .zip(&t)
                .map(|(a, t)| (a - t) * (1.0 - a * a))
                .collect();

            for l in (0..self.weights.len()).rev() {
                let n_in = self.dims[l];
                let prev = &acts[l];
                for (row, d) in delta.iter().enumerate() {
                    bias_grads[l][row] += d;
                    let w_row = &mut weight_grads[l][row * n_in..(row + 1) * n_in];
                    for (g, a) in w_row.iter_mut().zip(prev) {
                        *g += d * a;
                    }
                }
                if l > 0 {
                    // delta for layer l: (W^T delta) * (1 - a^2)
                    let mut next_delta = vec![0.0; n_in];
                    for (row, d) in delta.iter().enumerate() {
                        let w_row = &self.weights[l][row * n_in..(row + 1) * n_in];
                        for (nd, w) in next_delta.iter_mut().zip(w_row) {
                            *nd += w * d;
                        }
                    }
                    for (nd, a) in next_delta.iter_mut().zip(prev) {
                        *nd *= 1.0 - a * a;
                    }
                    delta = next_delta;
                }
            }
        }

        let n = samples.len() as f64;
        for layer in weight_grads.iter_mut().chain(bias_grads.iter_mut()) {
            for g in layer {
                *g /= n;
            }
        }
        Ok(BatchGradient {
            weight_grads,
            bias_grads,
            loss: total_loss / samples.len() as f64,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), MlpError> {
        Ok(fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, MlpError> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Serializes as: magic `MLP1`, little-endian u32 layer count, u32
    /// dims, then per layer row-major f64 weights followed by f64 biases,
    /// then the u64 seed.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.param_count() * 8 + 4 * self.dims.len() + 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for l in 0..self.weights.len() {
            for w in &self.weights[l] {
                out.extend_from_slice(&w.to_le_bytes());
            }
            for b in &self.biases[l] {
                out.extend_from_slice(&b.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MlpError> {
        let mut cursor = Cursor { bytes, at: 0 };
        let magic = cursor.take(4)?;
        if magic != MAGIC {
            return Err(MlpError::FormatError(format!(
                "bad magic {:?}",
                &magic[..4]
            )));
        }
        let layer_count = cursor.u32()? as usize;
        if layer_count < 2 {
            return Err(MlpError::FormatError(format!(
                "layer count {layer_count} below minimum 2"
            )));
        }
        let mut dims = Vec::with_capacity(layer_count);
        for _ in 0..layer_count {
            let d = cursor.u32()? as usize;
            if d < 1 {
                return Err(MlpError::FormatError("zero-width layer".into()));
            }
            dims.push(d);
        }
        let mut weights = Vec::with_capacity(layer_count - 1);
        let mut biases = Vec::with_capacity(layer_count - 1);
        for l in 0..layer_count - 1 {
            weights.push(cursor.f64s(dims[l + 1] * dims[l])?);
            biases.push(cursor.f64s(dims[l + 1])?);
        }
        let seed = cursor.u64()?;
        if cursor.at != bytes.len() {
            return Err(MlpError::FormatError(format!(
                "{} trailing bytes",
                bytes.len() - cursor.at
            )));
        }
        if weights
            .iter()
            .chain(biases.iter())
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(MlpError::FormatError("non-finite parameter".into()));
        }
        Ok(Self {
            dims,
            weights,
            biases,
            seed,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MlpError> {
        if self.at + n > self.bytes.len() {
            return Err(MlpError::FormatError(format!(
                "truncated at byte {} (wanted {} more)",
                self.at, n
            )));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, MlpError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, MlpError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, MlpError> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Trains a copy of `model` by full-batch gradient descent with momentum:
/// per epoch, `v = momentum*v - learning_rate*grad; params += v`, with the
/// velocity starting at zero. Sample order is fixed, so the result is
/// deterministic. Aborts with the epoch index if the loss or any gradient
/// stops being finite.
pub fn train(
    model: &MlpModel,
    samples: &[LabeledSample],
    cfg: &TrainConfig,
) -> Result<MlpModel, MlpError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    let mut m = model.clone();
    let mut vel_w: Vec<Vec<f64>> = m.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut vel_b: Vec<Vec<f64>> = m.biases.iter().map(|b| vec![0.0; b.len()]).collect();

    for epoch in 0..cfg.epochs {
        let grad = m.batch_gradient(samples, cfg)?;
        let finite = grad.loss.is_finite()
            && grad
                .weight_grads
                .iter()
                .chain(grad.bias_grads.iter())
                .flatten()
                .all(|g| g.is_finite());
        if !finite {
            return Err(MlpError::NonFinite { epoch });
        }
        for l in 0..m.weights.len() {
            for (i, v) in vel_w[l].iter_mut().enumerate() {
                *v = cfg.momentum * *v - cfg.learning_rate * grad.weight_grads[l][i];
                m.weights[l][i] += *v;
            }
            for (i, v) in vel_b[l].iter_mut().enumerate() {
                *v = cfg.momentum * *v - cfg.learning_rate * grad.bias_grads[l][i];
                m.biases[l][i] += *v;
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeroed(dims: &[usize]) -> MlpModel {
        let m = MlpModel::new(dims, 0).unwrap();
        let flat = vec![0.0; m.param_count()];
        m.with_params_flat(&flat).unwrap()
    }

    fn toy_samples(seed: u64, n: usize, d: usize, classes: usize) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = i % classes;
                let features = (0..d)
                    .map(|j| {
                        let center = if j == label % d { 2.0 } else { -1.0 };
                        center + rng.gen_range(-0.3..0.3)
                    })
                    .collect();
                LabeledSample { features, label }
            })
            .collect()
    }

    #[test]
    fn new_network_shapes_and_zero_biases() {
        let m = MlpModel::new(&[2, 1], 7).unwrap();
        assert_eq!(m.weights[0].len(), 2);
        assert_eq!(m.biases[0], vec![0.0]);
        assert_eq!(m.param_count(), 3);
    }

    #[test]
    fn default_architecture_parameter_count() {
        let m = MlpModel::new(&default_dims(4, 7), 0).unwrap();
        assert_eq!(
            m.param_count(),
            4 * 100 + 100 + 100 * 50 + 50 + 50 * 10 + 10 + 10 * 7 + 7
        );
        assert_eq!(m.param_count(), 6137);
    }

    #[test]
    fn same_seed_is_bit_identical_different_seed_is_not() {
        let a = MlpModel::new(&[3, 5, 2], 42).unwrap();
        let b = MlpModel::new(&[3, 5, 2], 42).unwrap();
        let c = MlpModel::new(&[3, 5, 2], 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn init_respects_fan_in_bounds() {
        let m = MlpModel::new(&[16, 8, 4], 9).unwrap();
        for (l, w) in m.weights.iter().enumerate() {
            let bound = 1.0 / (m.dims[l] as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() <= bound), "layer {l}");
        }
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(matches!(MlpModel::new(&[4], 0), Err(MlpError::BadDims(_))));
        assert!(matches!(
            MlpModel::new(&[4, 0, 2], 0),
            Err(MlpError::BadDims(_))
        ));
    }

    #[test]
    fn forward_zero_network_is_zero() {
        let m = zeroed(&[3, 4, 2]);
        assert_eq!(m.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn forward_scalar_identity_weight() {
        let m = zeroed(&[1, 1]).with_params_flat(&[1.0, 0.0]).unwrap();
        let out = m.forward(&[1.0]).unwrap();
        assert!((out[0] - 0.7615941559557649).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let m = zeroed(&[3, 2]);
        assert!(matches!(
            m.forward(&[1.0, 2.0]),
            Err(MlpError::DimMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn outputs_stay_inside_unit_interval() {
        let m = MlpModel::new(&[4, 100, 50, 10, 7], 3).unwrap();
        let out = m.forward(&[100.0, -50.0, 3.0, 0.0]).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn predict_argmax_with_low_index_ties() {
        let m = zeroed(&[2, 3]);
        // zero network: all outputs equal -> class 0
        assert_eq!(m.predict(&[1.0, 1.0]).unwrap(), 0);

        // weight unit 2 to respond positively
        let mut flat = vec![0.0; m.param_count()];
        flat[2 * 2] = 1.0; // weights row-major: unit 2, input 0
        let m = m.with_params_flat(&flat).unwrap();
        assert_eq!(m.predict(&[5.0, 0.0]).unwrap(), 2);
    }

    #[test]
    fn loss_of_zero_network_single_class() {
        let m = zeroed(&[2, 1]);
        let s = vec![LabeledSample {
            features: vec![0.0, 0.0],
            label: 0,
        }];
        let cfg = TrainConfig::default();
        assert!((m.loss(&s, &cfg).unwrap() - 0.405).abs() < 1e-15);
    }

    #[test]
    fn loss_is_permutation_invariant_and_zero_at_targets() {
        let m = MlpModel::new(&[3, 5, 3], 11).unwrap();
        let cfg = TrainConfig::default();
        let mut samples = toy_samples(1, 9, 3, 3);
        let a = m.loss(&samples, &cfg).unwrap();
        samples.reverse();
        let b = m.loss(&samples, &cfg).unwrap();
        assert!((a - b).abs() < 1e-12);

        // outputs that exactly equal the targets give zero loss: a zero
        // network emits 0, so zero targets fit it perfectly
        let m1 = zeroed(&[2, 1]);
        let zero_cfg = TrainConfig {
            target_hi: 0.0,
            target_lo: 0.0,
            ..TrainConfig::default()
        };
        let s = vec![LabeledSample {
            features: vec![1.0, 2.0],
            label: 0,
        }];
        assert_eq!(m1.loss(&s, &zero_cfg).unwrap(), 0.0);
    }

    #[test]
    fn loss_rejects_empty_and_bad_labels() {
        let m = zeroed(&[2, 2]);
        let cfg = TrainConfig::default();
        assert!(matches!(m.loss(&[], &cfg), Err(MlpError::EmptyDataset)));
        let s = vec![LabeledSample {
            features: vec![0.0, 0.0],
            label: 5,
        }];
        assert!(matches!(
            m.loss(&s, &cfg),
            Err(MlpError::LabelOutOfRange {
                label: 5,
                classes: 2
            })
        ));
    }

    /// Central finite differences over every parameter.
    fn fd_gradient(m: &MlpModel, samples: &[LabeledSample], cfg: &TrainConfig) -> Vec<f64> {
        let h = 1e-5;
        let base = m.params_flat();
        (0..base.len())
            .map(|i| {
                let mut plus = base.clone();
                plus[i] += h;
                let mut minus = base.clone();
                minus[i] -= h;
                let lp = m.with_params_flat(&plus).unwrap().loss(samples, cfg).unwrap();
                let lm = m
                    .with_params_flat(&minus)
                    .unwrap()
                    .loss(samples, cfg)
                    .unwrap();
                (lp - lm) / (2.0 * h)
            })
            .collect()
    }

    fn flat_gradient(g: &BatchGradient) -> Vec<f64> {
        let mut out = Vec::new();
        for l in 0..g.weight_grads.len() {
            out.extend_from_slice(&g.weight_grads[l]);
            out.extend_from_slice(&g.bias_grads[l]);
        }
        out
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let cfg = TrainConfig::default();
        let m = MlpModel::new(&[3, 4, 2], 5).unwrap();
        let samples = toy_samples(8, 5, 3, 2);
        let analytic = flat_gradient(&m.batch_gradient(&samples, &cfg).unwrap());
        let numeric = fd_gradient(&m, &samples, &cfg);
        let mut worst = 0.0f64;
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-3);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-6, "max relative error {worst}");
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        // zero weights and zero targets: outputs hit the targets exactly,
        // so the batch gradient vanishes and training is a no-op
        let m = zeroed(&[3, 4, 2]);
        let cfg = TrainConfig {
            target_hi: 0.0,
            target_lo: 0.0,
            epochs: 5,
            ..TrainConfig::default()
        };
        let samples = toy_samples(2, 6, 3, 2);
        let trained = train(&m, &samples, &cfg).unwrap();
        assert_eq!(trained, m);
    }

    #[test]
    fn momentum_zero_equals_plain_gradient_descent() {
        let cfg = TrainConfig {
            momentum: 0.0,
            epochs: 17,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let m = MlpModel::new(&[3, 5, 2], 21).unwrap();
        let samples = toy_samples(3, 8, 3, 2);

        // independent plain-GD path: params -= lr * grad each epoch
        let mut reference = m.clone();
        for _ in 0..cfg.epochs {
            let g = reference.batch_gradient(&samples, &cfg).unwrap();
            let flat: Vec<f64> = reference
                .params_flat()
                .iter()
                .zip(flat_gradient(&g))
                .map(|(p, g)| p - cfg.learning_rate * g)
                .collect();
            reference = reference.with_params_flat(&flat).unwrap();
        }

        let trained = train(&m, &samples, &cfg).unwrap();
        assert_eq!(trained.to_bytes(), reference.to_bytes());
    }

    #[test]
    fn momentum_accumulates_velocity() {
        // two epochs by hand on a tiny model:
        // v1 = -lr*g1; p1 = p0 + v1; v2 = mu*v1 - lr*g2; p2 = p1 + v2
        let cfg = TrainConfig {
            momentum: 0.5,
            learning_rate: 0.1,
            epochs: 2,
            ..TrainConfig::default()
        };
        let m = MlpModel::new(&[2, 2], 33).unwrap();
        let samples = toy_samples(4, 4, 2, 2);

        let g1 = flat_gradient(&m.batch_gradient(&samples, &cfg).unwrap());
        let p0 = m.params_flat();
        let v1: Vec<f64> = g1.iter().map(|g| -cfg.learning_rate * g).collect();
        let p1: Vec<f64> = p0.iter().zip(&v1).map(|(p, v)| p + v).collect();
        let m1 = m.with_params_flat(&p1).unwrap();
        let g2 = flat_gradient(&m1.batch_gradient(&samples, &cfg).unwrap());
        let p2: Vec<f64> = p1
            .iter()
            .zip(v1.iter().zip(&g2))
            .map(|(p, (v, g))| p + (cfg.momentum * v - cfg.learning_rate * g))
            .collect();

        let trained = train(&m, &samples, &cfg).unwrap();
        assert_eq!(trained.params_flat(), p2);
    }

    #[test]
    fn small_steps_decrease_loss_on_separable_toy() {
        let cfg = TrainConfig {
            momentum: 0.0,
            learning_rate: 1e-3,
            epochs: 1,
            ..TrainConfig::default()
        };
        let mut m = MlpModel::new(&[2, 4, 2], 13).unwrap();
        let samples: Vec<LabeledSample> = (0..8)
            .map(|i| {
                let label = i % 2;
                let sign = if label == 0 { 1.0 } else { -1.0 };
                LabeledSample {
                    features: vec![sign * (1.0 + 0.1 * i as f64), -sign],
                    label,
                }
            })
            .collect();
        let initial = m.loss(&samples, &cfg).unwrap();
        let mut last = initial;
        for _ in 0..10 {
            m = train(&m, &samples, &cfg).unwrap();
            let now = m.loss(&samples, &cfg).unwrap();
            assert!(now <= last + 1e-15, "loss rose from {last} to {now}");
            last = now;
        }
        assert!(last < initial);
    }

    #[test]
    fn train_validates_config() {
        let m = zeroed(&[2, 2]);
        let samples = toy_samples(0, 4, 2, 2);
        for bad in [
            TrainConfig {
                learning_rate: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                momentum: 1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
        ] {
            assert!(matches!(
                train(&m, &samples, &bad),
                Err(MlpError::BadConfig(_))
            ));
        }
        assert!(matches!(
            train(&m, &[], &TrainConfig::default()),
            Err(MlpError::EmptyDataset)
        ));
    }

    #[test]
    fn non_finite_forward_aborts_with_epoch() {
        let m = zeroed(&[2, 1])
            .with_params_flat(&[f64::MAX, f64::MAX, 0.0])
            .unwrap();
        let samples = vec![LabeledSample {
            features: vec![2.0, -2.0], // MAX*2 overflows to inf, inf - inf = NaN
            label: 0,
        }];
        let cfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&m, &samples, &cfg),
            Err(MlpError::NonFinite { epoch: 0 })
        ));
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.mlp");
        let m = MlpModel::new(&[3, 7, 4, 2], 99).unwrap();
        m.save(&path).unwrap();
        let loaded = MlpModel::load(&path).unwrap();
        assert_eq!(loaded, m);
        let second = dir.path().join("model2.mlp");
        loaded.save(&second).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&second).unwrap()
        );
    }

    #[test]
    fn load_rejects_bad_magic_truncation_and_trailing() {
        let m = MlpModel::new(&[2, 2], 1).unwrap();
        let bytes = m.to_bytes();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            MlpModel::from_bytes(&bad_magic),
            Err(MlpError::FormatError(_))
        ));

        assert!(matches!(
            MlpModel::from_bytes(&bytes[..bytes.len() - 3]),
            Err(MlpError::FormatError(_))
        ));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(
            MlpModel::from_bytes(&trailing),
            Err(MlpError::FormatError(_))
        ));
    }

    #[test]
    fn load_rejects_non_finite_parameters() {
        let m = zeroed(&[2, 1]);
        let nan = m
            .with_params_flat(&[f64::NAN, 0.0, 0.0])
            .unwrap()
            .to_bytes();
        assert!(matches!(
            MlpModel::from_bytes(&nan),
            Err(MlpError::FormatError(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            epochs: 25,
            ..TrainConfig::default()
        };
        let samples = toy_samples(7, 12, 3, 3);
        let a = train(&MlpModel::new(&[3, 6, 3], 77).unwrap(), &samples, &cfg).unwrap();
        let b = train(&MlpModel::new(&[3, 6, 3], 77).unwrap(), &samples, &cfg).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }
}
