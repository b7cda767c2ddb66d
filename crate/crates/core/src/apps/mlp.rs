// SPDX-License-Identifier: Apache-2.0

//! Fixed-point multilayer perceptron over a pluggable MAC datapath.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AppError, ArithConfig, Datapath, Fixed, FixedPointFormat};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    /// Full scale (1.0, saturated) when the pre-activation reaches `threshold`, else 0.
    HardThreshold { threshold: f64 },
    /// Eight linear segments over `[-4, 4)`, clamped outside.
    PwlSigmoid,
}

/// Knots of the piecewise-linear sigmoid, in output LSBs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmoidLut {
    knots: [i64; 9],
    frac: u32,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl SigmoidLut {
    pub fn new(format: &FixedPointFormat) -> Self {
        let top = ((1i64 << format.frac) - 1).min(format.max_magnitude() as i64).max(0);
        let mut knots = [0i64; 9];
        for (k, y) in knots.iter_mut().enumerate() {
            *y = (format.quantize(sigmoid(k as f64 - 4.0)).mag as i64).min(top);
        }
        SigmoidLut {
            knots,
            frac: format.frac,
        }
    }

    pub fn knots(&self) -> &[i64; 9] {
        &self.knots
    }

    /// `z` is a pre-activation in units of `2^-frac`.
    pub fn eval(&self, z: i64) -> u64 {
        let unit = 1i64 << self.frac;
        let u = z.saturating_add(4 * unit);
        if u < 0 {
            return self.knots[0] as u64;
        }
        if u >= 8 * unit {
            return self.knots[8] as u64;
        }
        let k = (u >> self.frac) as usize;
        let r = u & (unit - 1);
        (self.knots[k] + (((self.knots[k + 1] - self.knots[k]) * r) >> self.frac)) as u64
    }
}

/// Layer sizes plus fixed-point weights; `weights[l]` is row-major per neuron
/// with the bias weight last in each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub topology: Vec<usize>,
    pub format: FixedPointFormat,
    pub activation: Activation,
    pub weights: Vec<Vec<Fixed>>,
}

impl MlpModel {
    pub fn zeros(topology: &[usize], format: FixedPointFormat, activation: Activation) -> Result<Self, AppError> {
        let m = MlpModel {
            topology: topology.to_vec(),
            format,
            activation,
            weights: topology
                .windows(2)
                .map(|w| vec![Fixed::default(); w[1] * (w[0] + 1)])
                .collect(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        self.format.validate()?;
        if self.topology.len() < 2 || self.topology.contains(&0) {
            return Err(AppError::Shape(format!(
                "topology {:?} needs ≥ 2 non-empty layers",
                self.topology
            )));
        }
        if self.weights.len() != self.topology.len() - 1 {
            return Err(AppError::Shape("one weight matrix per layer transition".into()));
        }
        for (l, w) in self.topology.windows(2).enumerate() {
            if self.weights[l].len() != w[1] * (w[0] + 1) {
                return Err(AppError::Shape(format!(
                    "layer {l} holds {} weights, topology needs {}",
                    self.weights[l].len(),
                    w[1] * (w[0] + 1)
                )));
            }
        }
        let max = self.format.max_magnitude();
        if self.weights.iter().flatten().any(|w| w.mag > max) {
            return Err(AppError::Shape("weight magnitude exceeds the format".into()));
        }
        Ok(())
    }

    /// Largest number of MAC terms of any neuron (inputs plus bias).
    pub fn max_terms(&self) -> usize {
        self.topology[..self.topology.len() - 1]
            .iter()
            .map(|n| n + 1)
            .max()
            .unwrap_or(1)
    }

    /// Builds the datapath this model runs on.
    pub fn datapath(&self, cfg: &ArithConfig) -> Result<Datapath, AppError> {
        Datapath::new(cfg, self.format, self.format.frac, self.max_terms())
    }

    fn activate(&self, z: i64, lut: &SigmoidLut) -> Fixed {
        let mag = match self.activation {
            Activation::HardThreshold { threshold } => {
                let t = (threshold * (self.format.frac as f64).exp2()).round() as i64;
                if z >= t {
                    self.format.one().mag
                } else {
                    0
                }
            }
            Activation::PwlSigmoid => lut.eval(z),
        };
        Fixed {
            neg: false,
            mag: mag.min(self.format.max_magnitude()),
        }
    }
}

/// Per-layer record of one forward pass.
#[derive(Debug, Clone)]
struct Trace {
    /// `inputs[l]` feeds layer transition `l` and includes the bias input.
    inputs: Vec<Vec<Fixed>>,
    /// Pre-activations in units of `2^-frac`.
    pre: Vec<Vec<i64>>,
    output: Vec<Fixed>,
}

fn neuron_key(sample_key: u64, layer: usize, neuron: usize) -> u64 {
    rng::combine(rng::combine(sample_key, layer as u64), neuron as u64)
}

fn forward_trace(model: &MlpModel, input: &[Fixed], dp: &Datapath, key: u64) -> Result<Trace, AppError> {
    if input.len() != model.topology[0] {
        return Err(AppError::Shape(format!(
            "input has {} values, topology expects {}",
            input.len(),
            model.topology[0]
        )));
    }
    let lut = SigmoidLut::new(&model.format);
    let one = model.format.one();
    let mut x: Vec<Fixed> = input.to_vec();
    let mut inputs = Vec::with_capacity(model.weights.len());
    let mut pre = Vec::with_capacity(model.weights.len());
    for (l, w) in model.topology.windows(2).enumerate() {
        x.push(one);
        let fan = w[0] + 1;
        let mut z = Vec::with_capacity(w[1]);
        let mut y = Vec::with_capacity(w[1]);
        for n in 0..w[1] {
            let r = dp.mac(&x, &model.weights[l][n * fan..(n + 1) * fan], neuron_key(key, l, n))?;
            z.push(r.value);
            y.push(model.activate(r.value, &lut));
        }
        inputs.push(std::mem::replace(&mut x, y));
        pre.push(z);
    }
    Ok(Trace { inputs, pre, output: x })
}

/// Forward pass on a prebuilt datapath; `key` selects the fault streams.
pub fn mlp_forward_with(model: &MlpModel, input: &[Fixed], dp: &Datapath, key: u64) -> Result<Vec<Fixed>, AppError> {
    Ok(forward_trace(model, input, dp, key)?.output)
}

pub fn mlp_forward(model: &MlpModel, input: &[Fixed], cfg: &ArithConfig, key: u64) -> Result<Vec<Fixed>, AppError> {
    model.validate()?;
    mlp_forward_with(model, input, &model.datapath(cfg)?, key)
}

/// Labelled samples with real-valued features in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub classes: usize,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn validate(&self) -> Result<(), AppError> {
        if self.inputs.is_empty() || self.inputs.len() != self.labels.len() {
            return Err(AppError::Shape(
                "dataset needs one label per non-empty input list".into(),
            ));
        }
        let dim = self.inputs[0].len();
        if self.inputs.iter().any(|x| x.len() != dim) {
            return Err(AppError::Shape("inputs differ in length".into()));
        }
        if let Some(l) = self.labels.iter().find(|&&l| l >= self.classes) {
            return Err(AppError::Shape(format!("label {l} outside {} classes", self.classes)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn quantized(&self, format: &FixedPointFormat) -> Vec<Vec<Fixed>> {
        self.inputs
            .iter()
            .map(|x| x.iter().map(|&v| format.quantize(v)).collect())
            .collect()
    }

    /// Synthetic blobs: one random centre per class in
    /// `[0.15, 0.85]^dim`, points spread uniformly by `±spread` around it and
    /// clipped to `[0, 1)`. Classes are interleaved.
    pub fn blobs(classes: usize, dim: usize, per_class: usize, spread: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centres: Vec<Vec<f64>> = (0..classes)
            .map(|_| (0..dim).map(|_| rng.gen_range(0.15..0.85)).collect())
            .collect();
        let mut inputs = Vec::with_capacity(classes * per_class);
        let mut labels = Vec::with_capacity(classes * per_class);
        for _ in 0..per_class {
            for (c, centre) in centres.iter().enumerate() {
                inputs.push(
                    centre
                        .iter()
                        .map(|&m| (m + rng.gen_range(-spread..=spread)).clamp(0.0, 0.999))
                        .collect(),
                );
                labels.push(c);
            }
        }
        Dataset {
            classes,
            inputs,
            labels,
        }
    }
}

fn one_hot(label: usize, classes: usize) -> impl Iterator<Item = f64> {
    (0..classes).map(move |c| if c == label { 1.0 } else { 0.0 })
}

fn argmax(v: &[Fixed]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.raw() > v[best].raw() {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub mse: f64,
    pub correct_percent: f64,
}

fn sample_key(base: u64, i: usize) -> u64 {
    rng::combine(base, i as u64)
}

/// Argmax classification and output MSE against one-hot targets.
pub fn classify_metrics_with(
    model: &MlpModel,
    dataset: &Dataset,
    dp: &Datapath,
    key: u64,
) -> Result<ClassifyReport, AppError> {
    dataset.validate()?;
    let classes = *model.topology.last().expect("validated topology");
    if dataset.classes != classes {
        return Err(AppError::Shape(format!(
            "dataset has {} classes, model {classes}",
            dataset.classes
        )));
    }
    let xs = dataset.quantized(&model.format);
    let mut sq = 0.0;
    let mut correct = 0usize;
    for (i, (x, &label)) in xs.iter().zip(&dataset.labels).enumerate() {
        let y = mlp_forward_with(model, x, dp, sample_key(key, i))?;
        sq += y
            .iter()
            .zip(one_hot(label, classes))
            .map(|(v, t)| (model.format.to_f64(*v) - t).powi(2))
            .sum::<f64>();
        correct += (argmax(&y) == label) as usize;
    }
    let n = dataset.len() as f64;
    Ok(ClassifyReport {
        mse: sq / (n * classes as f64),
        correct_percent: 100.0 * correct as f64 / n,
    })
}

pub fn classify_metrics(
    model: &MlpModel,
    dataset: &Dataset,
    cfg: &ArithConfig,
    key: u64,
) -> Result<ClassifyReport, AppError> {
    model.validate()?;
    classify_metrics_with(model, dataset, &model.datapath(cfg)?, key)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub target_mse: f64,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            target_mse: 0.01,
            max_epochs: 200,
            learning_rate: 0.3,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// MSE of the trained model over the training set.
    pub final_mse: f64,
    /// Epochs run (TE#).
    pub epochs: usize,
    /// Mean output MSE seen during each epoch.
    pub trace: Vec<f64>,
    pub correct_percent: f64,
    pub converged: bool,
}

/// Quantization-aware SGD. Real-valued shadow weights are updated from
/// gradients of the quantized forward pass (straight-through estimator, with
/// the smooth sigmoid's derivative at the pipeline's pre-activation).
pub fn mlp_train(
    dataset: &Dataset,
    topology: &[usize],
    format: FixedPointFormat,
    cfg: &ArithConfig,
    params: &TrainParams,
) -> Result<(MlpModel, TrainReport), AppError> {
    dataset.validate()?;
    if params.max_epochs == 0 {
        return Err(AppError::Training("max epochs must be at least 1".into()));
    }
    if topology.first() != Some(&dataset.dim()) || topology.last() != Some(&dataset.classes) {
        return Err(AppError::Shape(format!(
            "topology {topology:?} does not match {} inputs and {} classes",
            dataset.dim(),
            dataset.classes
        )));
    }
    let mut model = MlpModel::zeros(topology, format, Activation::PwlSigmoid)?;
    let dp = model.datapath(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let limit = format.max_value();
    let mut shadow: Vec<Vec<f64>> = topology
        .windows(2)
        .map(|w| {
            let r = 1.0 / ((w[0] + 1) as f64).sqrt();
            (0..w[1] * (w[0] + 1))
                .map(|_| rng.gen_range(-r..r).clamp(-limit, limit))
                .collect()
        })
        .collect();
    let requantize = |model: &mut MlpModel, shadow: &[Vec<f64>]| {
        for (q, s) in model.weights.iter_mut().zip(shadow) {
            for (qw, &sw) in q.iter_mut().zip(s) {
                *qw = format.quantize(sw);
            }
        }
    };
    requantize(&mut model, &shadow);

    let xs = dataset.quantized(&format);
    let classes = dataset.classes;
    let scale = (format.frac as f64).exp2();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = Vec::new();
    let mut converged = false;
    for epoch in 0..params.max_epochs {
        order.shuffle(&mut rng);
        let mut sq = 0.0;
        for &i in &order {
            let key = rng::combine(params.seed ^ 0x7472_6169_6e00_0000, (epoch * dataset.len() + i) as u64);
            let t = forward_trace(&model, &xs[i], &dp, key)?;
            let layers = model.weights.len();
            let mut delta: Vec<f64> = t
                .output
                .iter()
                .zip(one_hot(dataset.labels[i], classes))
                .zip(&t.pre[layers - 1])
                .map(|((y, target), &z)| {
                    let e = format.to_f64(*y) - target;
                    sq += e * e;
                    let s = sigmoid(z as f64 / scale);
                    e * s * (1.0 - s)
                })
                .collect();
            for l in (0..layers).rev() {
                let fan = topology[l] + 1;
                let back: Option<Vec<f64>> = (l > 0).then(|| {
                    (0..topology[l])
                        .map(|h| {
                            let s = sigmoid(t.pre[l - 1][h] as f64 / scale);
                            let g: f64 = delta.iter().enumerate().map(|(n, d)| shadow[l][n * fan + h] * d).sum();
                            g * s * (1.0 - s)
                        })
                        .collect()
                });
                for (n, d) in delta.iter().enumerate() {
                    for (k, x) in t.inputs[l].iter().enumerate() {
                        let w = &mut shadow[l][n * fan + k];
                        *w = (*w - params.learning_rate * d * format.to_f64(*x)).clamp(-limit, limit);
                    }
                }
                if let Some(b) = back {
                    delta = b;
                }
            }
            requantize(&mut model, &shadow);
        }
        let mse = sq / (dataset.len() * classes) as f64;
        if !mse.is_finite() {
            return Err(AppError::Training(format!("mse diverged at epoch {}", epoch + 1)));
        }
        trace.push(mse);
        if mse <= params.target_mse {
            converged = true;
            break;
        }
    }
    let eval = classify_metrics_with(&model, dataset, &dp, params.seed)?;
    let report = TrainReport {
        final_mse: eval.mse,
        epochs: trace.len(),
        trace,
        correct_percent: eval.correct_percent,
        converged,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::min_acc_width;

    fn fmt() -> FixedPointFormat {
        FixedPointFormat::new(9, 8).unwrap()
    }

    #[test]
    fn lut_is_monotone_and_below_one() {
        for f in [
            fmt(),
            FixedPointFormat::new(9, 9).unwrap(),
            FixedPointFormat::new(6, 3).unwrap(),
        ] {
            let lut = SigmoidLut::new(&f);
            let unit = 1i64 << f.frac;
            let mut prev = 0;
            for z in -6 * unit..6 * unit {
                let y = lut.eval(z);
                assert!(y >= prev && y < unit as u64, "{f:?} z={z}");
                prev = y;
            }
        }
        let lut = SigmoidLut::new(&fmt());
        assert_eq!(lut.eval(0), 128);
    }

    #[test]
    fn hard_threshold_neuron() {
        let f = fmt();
        let mut m = MlpModel::zeros(&[1, 1], f, Activation::HardThreshold { threshold: 0.5 }).unwrap();
        m.weights[0][0] = f.quantize(1.0);
        let cfg = ArithConfig::precise(9, min_acc_width(9, 2));
        assert_eq!(mlp_forward(&m, &[f.quantize(0.75)], &cfg, 0).unwrap(), vec![f.one()]);
        assert_eq!(
            mlp_forward(&m, &[f.quantize(0.25)], &cfg, 0).unwrap(),
            vec![Fixed::default()]
        );
        assert!(mlp_forward(&m, &[], &cfg, 0).is_err());
    }

    #[test]
    fn exact_and_constant_models_classify_as_expected() {
        let f = fmt();
        let cfg = ArithConfig::precise(9, min_acc_width(9, 3));
        let mut m = MlpModel::zeros(&[2, 2], f, Activation::HardThreshold { threshold: 0.5 }).unwrap();
        m.weights[0][0] = f.quantize(1.0);
        m.weights[0][4] = f.quantize(1.0);
        let ds = Dataset {
            classes: 2,
            inputs: vec![vec![0.99, 0.0], vec![0.0, 0.99]],
            labels: vec![0, 1],
        };
        let r = classify_metrics(&m, &ds, &cfg, 0).unwrap();
        assert_eq!((r.mse, r.correct_percent), (0.0, 100.0));
        let c = MlpModel::zeros(&[2, 2], f, Activation::PwlSigmoid).unwrap();
        assert_eq!(classify_metrics(&c, &ds, &cfg, 0).unwrap().correct_percent, 50.0);
    }

    #[test]
    fn training_reaches_target_on_blobs() {
        let ds = Dataset::blobs(2, 16, 32, 0.3, 5);
        let cfg = ArithConfig::precise(9, min_acc_width(9, 17));
        let p = TrainParams {
            max_epochs: 200,
            ..TrainParams::default()
        };
        let (m, r) = mlp_train(&ds, &[16, 4, 2], fmt(), &cfg, &p).unwrap();
        assert!(r.converged, "{:?}", r.trace);
        assert!(r.epochs <= 200 && r.trace.len() == r.epochs);
        assert_eq!(r.correct_percent, 100.0);
        let (m2, r2) = mlp_train(&ds, &[16, 4, 2], fmt(), &cfg, &p).unwrap();
        assert_eq!((m, r), (m2, r2));
    }

    #[test]
    fn zero_epochs_rejected() {
        let ds = Dataset::blobs(2, 4, 4, 0.1, 1);
        let cfg = ArithConfig::precise(9, min_acc_width(9, 5));
        let p = TrainParams {
            max_epochs: 0,
            ..TrainParams::default()
        };
        assert!(matches!(
            mlp_train(&ds, &[4, 2], fmt(), &cfg, &p),
            Err(AppError::Training(_))
        ));
    }

    #[test]
    fn degenerate_bic_forward_equals_precise() {
        let f = fmt();
        let acc = min_acc_width(9, 9);
        let ds = Dataset::blobs(2, 8, 32, 0.2, 9);
        let (m, _) = mlp_train(
            &ds,
            &[8, 4, 2],
            f,
            &ArithConfig::precise(9, acc),
            &TrainParams::default(),
        )
        .unwrap();
        let p = m.datapath(&ArithConfig::precise(9, acc)).unwrap();
        let b = m.datapath(&ArithConfig::bic(9, acc, 0, 0, 0)).unwrap();
        for x in ds.quantized(&f) {
            assert_eq!(
                mlp_forward_with(&m, &x, &p, 0).unwrap(),
                mlp_forward_with(&m, &x, &b, 0).unwrap()
            );
        }
    }
}
