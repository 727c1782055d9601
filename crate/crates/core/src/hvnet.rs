//! DeepSets hypervolume regressor: `rho(sum_i phi(s_i))`.
//!
//! The model works in the canonical frame: points in `[0, 1]^m`, implicit
//! reference point `(1, ..., 1)`. `phi` maps each point to a feature vector,
//! the features are summed in stored point order and `rho` maps the sum to
//! a value in (0, 1).

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{init_params, Activation, AdamConfig, AdamState, DenseLayer, LayerSpec, Mlp};
use crate::pareto::SolutionSet;
use crate::rng;

pub const DEFAULT_HIDDEN: usize = 128;
const HIDDEN_LAYERS: usize = 3;
const MODEL_FORMAT: &str = "hvnet-model";
const MODEL_VERSION: u32 = 1;

/// Anything that maps a canonical-frame set to a hypervolume estimate.
pub trait SetRegressor {
    fn dim(&self) -> usize;
    fn predict(&self, set: &SolutionSet) -> Result<f64>;
}

/// A solution set with its exact hypervolume for reference point (1, ..., 1).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub set: SolutionSet,
    pub hv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub m: usize,
    pub hidden: usize,
    pub seed: u64,
    pub config_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HvNetModel {
    pub phi: Mlp,
    pub rho: Mlp,
    pub meta: ModelMeta,
}

/// Layer layout of `phi` and `rho`: three hidden ReLU layers each; `phi`
/// ends in a ReLU feature layer, `rho` in a single sigmoid unit.
pub fn architecture(m: usize, hidden: usize) -> (Vec<LayerSpec>, Vec<LayerSpec>) {
    let mut phi = vec![LayerSpec::new(m, hidden, Activation::Relu)];
    let mut rho = vec![LayerSpec::new(hidden, hidden, Activation::Relu)];
    for _ in 1..HIDDEN_LAYERS {
        phi.push(LayerSpec::new(hidden, hidden, Activation::Relu));
        rho.push(LayerSpec::new(hidden, hidden, Activation::Relu));
    }
    phi.push(LayerSpec::new(hidden, hidden, Activation::Relu));
    rho.push(LayerSpec::new(hidden, 1, Activation::Sigmoid));
    (phi, rho)
}

impl HvNetModel {
    /// Freshly initialized model for `m` objectives.
    pub fn new(m: usize, hidden: usize, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::TooFewObjectives(m));
        }
        let (phi, rho) = architecture(m, hidden);
        let phi = init_params(&phi, seed)?;
        let rho = init_params(&rho, seed.wrapping_add(1))?;
        Self::from_parts(phi, rho, ModelMeta { m, hidden, seed, config_digest: None })
    }

    pub fn from_parts(phi: Mlp, rho: Mlp, meta: ModelMeta) -> Result<Self> {
        if phi.inputs() != meta.m {
            return Err(Error::ShapeMismatch(format!(
                "phi takes {} inputs but the model declares m = {}",
                phi.inputs(),
                meta.m
            )));
        }
        if phi.outputs() != rho.inputs() {
            return Err(Error::ShapeMismatch(format!(
                "phi emits {} features but rho expects {}",
                phi.outputs(),
                rho.inputs()
            )));
        }
        if rho.outputs() != 1 {
            return Err(Error::ShapeMismatch(format!("rho must emit 1 value, not {}", rho.outputs())));
        }
        Ok(Self { phi, rho, meta })
    }

    pub fn param_lengths(&self) -> Vec<usize> {
        let mut lengths = self.phi.param_lengths();
        lengths.extend(self.rho.param_lengths());
        lengths
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut slices = self.phi.param_slices();
        slices.extend(self.rho.param_slices());
        slices
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut slices = self.phi.param_slices_mut();
        slices.extend(self.rho.param_slices_mut());
        slices
    }

    fn check_set(&self, set: &SolutionSet) -> Result<()> {
        if set.dim() != self.meta.m {
            return Err(Error::DimensionMismatch { expected: self.meta.m, found: set.dim() });
        }
        set.contains_in_unit_box()
    }

    /// Estimated hypervolume of a canonical-frame set, in (0, 1).
    pub fn predict(&self, set: &SolutionSet) -> Result<f64> {
        self.check_set(set)?;
        let x = stack(&[set]);
        let features = self.phi.infer_batch(x.view())?;
        let pooled = sum_pool(features.view(), &[set.len()]);
        let out = self.rho.infer_batch(pooled.view())?;
        Ok(out[[0, 0]].clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }
}

impl SetRegressor for HvNetModel {
    fn dim(&self) -> usize {
        self.meta.m
    }

    fn predict(&self, set: &SolutionSet) -> Result<f64> {
        HvNetModel::predict(self, set)
    }
}

/// Rows of all sets, concatenated in order.
fn stack(sets: &[&SolutionSet]) -> Array2<f64> {
    let m = sets[0].dim();
    let rows: usize = sets.iter().map(|s| s.len()).sum();
    let data: Vec<f64> = sets
        .iter()
        .flat_map(|s| s.iter().flat_map(|p| p.coords().iter().copied()))
        .collect();
    Array2::from_shape_vec((rows, m), data).expect("consistent dimensions")
}

/// Sums consecutive runs of rows, one run per set, in row order.
fn sum_pool(features: ArrayView2<f64>, sizes: &[usize]) -> Array2<f64> {
    let mut pooled = Array2::zeros((sizes.len(), features.ncols()));
    let mut row = 0;
    for (i, &n) in sizes.iter().enumerate() {
        let mut acc = pooled.row_mut(i);
        for r in row..row + n {
            acc += &features.row(r);
        }
        row += n;
    }
    pooled
}

// ---------------------------------------------------------------------------
// Losses

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    /// Squared difference of natural logarithms.
    LogMse,
    Mse,
    /// Absolute percentage error.
    Mape,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::LogMse => "log-mse",
            Loss::Mse => "mse",
            Loss::Mape => "mape",
        }
    }

    pub fn value(self, pred: f64, target: f64) -> Result<f64> {
        match self {
            Loss::LogMse => loss_log_mse(pred, target),
            Loss::Mse => Ok(loss_mse(pred, target)),
            Loss::Mape => loss_mape(pred, target),
        }
    }

    /// Derivative of [`Loss::value`] with respect to `pred`.
    pub fn derivative(self, pred: f64, target: f64) -> f64 {
        match self {
            Loss::LogMse => 2.0 * (pred.ln() - target.ln()) / pred,
            Loss::Mse => 2.0 * (pred - target),
            Loss::Mape => {
                let diff = pred - target;
                if diff == 0.0 {
                    0.0
                } else {
                    diff.signum() / target.abs()
                }
            }
        }
    }

    /// Mean loss over paired predictions and targets.
    pub fn mean(self, preds: &[f64], targets: &[f64]) -> Result<f64> {
        if preds.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: targets.len(), found: preds.len() });
        }
        if preds.is_empty() {
            return Err(Error::Empty);
        }
        let total = preds
            .iter()
            .zip(targets)
            .map(|(&p, &t)| self.value(p, t))
            .sum::<Result<f64>>()?;
        Ok(total / preds.len() as f64)
    }
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log-mse" | "log_mse" => Ok(Loss::LogMse),
            "mse" => Ok(Loss::Mse),
            "mape" => Ok(Loss::Mape),
            other => Err(Error::InvalidArgument(format!("unknown loss '{other}'"))),
        }
    }
}

pub fn loss_log_mse(pred: f64, target: f64) -> Result<f64> {
    if !(pred > 0.0) || !(target > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log loss needs positive values, got pred {pred}, target {target}"
        )));
    }
    Ok((pred.ln() - target.ln()).powi(2))
}

pub fn loss_mse(pred: f64, target: f64) -> f64 {
    (pred - target).powi(2)
}

pub fn loss_mape(pred: f64, target: f64) -> Result<f64> {
    if target == 0.0 {
        return Err(Error::InvalidArgument("relative error against a zero target".into()));
    }
    Ok((pred - target).abs() / target.abs())
}

// ---------------------------------------------------------------------------
// Gradients and training

/// Mean loss over `batch` and its gradient for every parameter tensor
/// (ordered as [`HvNetModel::param_slices`]). Sets may differ in size.
///
/// Uses the raw sigmoid output, not the clamped value [`HvNetModel::predict`]
/// reports.
pub fn batch_gradients(model: &HvNetModel, batch: &[&LabeledSet], loss: Loss) -> Result<(f64, Vec<Vec<f64>>)> {
    if batch.is_empty() {
        return Err(Error::Empty);
    }
    let sets: Vec<&SolutionSet> = batch.iter().map(|b| &b.set).collect();
    for s in &sets {
        if s.dim() != model.meta.m {
            return Err(Error::DimensionMismatch { expected: model.meta.m, found: s.dim() });
        }
    }
    let sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let x = stack(&sets);

    let (features, phi_cache) = model.phi.forward_batch(x.view())?;
    let pooled = sum_pool(features.view(), &sizes);
    let (out, rho_cache) = model.rho.forward_batch(pooled.view())?;

    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    let mut d_out = Array2::zeros((batch.len(), 1));
    for (i, item) in batch.iter().enumerate() {
        let pred = out[[i, 0]];
        total += loss.value(pred, item.hv).unwrap_or(f64::INFINITY);
        d_out[[i, 0]] = loss.derivative(pred, item.hv) * scale;
    }
    let mean = total * scale;

    let (rho_grads, d_pooled) = model.rho.backward(&rho_cache, d_out.view())?;
    let mut d_features = Array2::zeros(features.dim());
    let mut row = 0;
    for (i, &n) in sizes.iter().enumerate() {
        for r in row..row + n {
            d_features.row_mut(r).assign(&d_pooled.row(i));
        }
        row += n;
    }
    let (phi_grads, _) = model.phi.backward(&phi_cache, d_features.view())?;

    let grads = phi_grads
        .slices()
        .into_iter()
        .chain(rho_grads.slices())
        .map(<[f64]>::to_vec)
        .collect();
    Ok((mean, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub hidden: usize,
    pub train_path: Option<PathBuf>,
    pub valid_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: Loss::LogMse,
            learning_rate: 1e-4,
            batch_size: 100,
            epochs: 100,
            seed: 0,
            hidden: DEFAULT_HIDDEN,
            train_path: None,
            valid_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("need at least one epoch".into()));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden width must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("bad learning rate {}", self.learning_rate)));
        }
        Ok(())
    }

    /// SHA-256 of the configuration's JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&bytes)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: HvNetModel,
    /// Mean training loss of each epoch.
    pub trace: Vec<f64>,
}

/// Batches of indices: sets grouped by cardinality, each group shuffled and
/// chunked, then the batch order shuffled.
fn epoch_batches(groups: &BTreeMap<usize, Vec<usize>>, batch_size: usize, rng: &mut rng::Rng) -> Vec<Vec<usize>> {
    let mut batches = Vec::new();
    for members in groups.values() {
        let mut members = members.clone();
        members.shuffle(rng);
        batches.extend(members.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    batches
}

/// Minibatch Adam on `data`. Deterministic for a given config and data.
pub fn train(config: &TrainConfig, data: &[LabeledSet]) -> Result<TrainOutcome> {
    train_with(config, data, |_, _| {})
}

/// [`train`], calling `on_epoch(epoch, mean_loss)` after every epoch.
pub fn train_with<F: FnMut(usize, f64)>(config: &TrainConfig, data: &[LabeledSet], mut on_epoch: F) -> Result<TrainOutcome> {
    config.validate()?;
    let m = data.first().ok_or(Error::Empty)?.set.dim();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, item) in data.iter().enumerate() {
        if item.set.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, found: item.set.dim() });
        }
        if !(item.hv > 0.0) || !item.hv.is_finite() {
            return Err(Error::InvalidArgument(format!("set {i} has non-positive target {}", item.hv)));
        }
        groups.entry(item.set.len()).or_default().push(i);
    }

    let mut model = HvNetModel::new(m, config.hidden, config.seed)?;
    model.meta.config_digest = Some(config.digest());
    let adam_config = AdamConfig { learning_rate: config.learning_rate, ..AdamConfig::default() };
    let mut adam = AdamState::new(adam_config, &model.param_lengths());
    let mut rng = rng::stream(config.seed, 1);
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut total = 0.0;
        for (b, indices) in epoch_batches(&groups, config.batch_size, &mut rng).iter().enumerate() {
            let batch: Vec<&LabeledSet> = indices.iter().map(|&i| &data[i]).collect();
            let (loss, grads) = batch_gradients(&model, &batch, config.loss)?;
            if !loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, batch: b, loss });
            }
            total += loss * batch.len() as f64;
            let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            adam.step(&mut model.param_slices_mut(), &grad_refs)?;
        }
        let mean = total / data.len() as f64;
        on_epoch(epoch, mean);
        trace.push(mean);
    }
    Ok(TrainOutcome { model, trace })
}

/// Writes `epoch,mean_loss` rows (epochs numbered from 1).
pub fn write_trace<W: Write>(out: W, trace: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "mean_loss"])?;
    for (i, loss) in trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{loss:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Model files

/// JSON formatter that prints every float with 17 significant digits.
pub(crate) struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub(crate) fn to_json_17<T: Serialize, W: io::Write>(writer: W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    m: usize,
    hidden: usize,
    seed: u64,
    config_digest: Option<String>,
    phi: Vec<LayerFile>,
    rho: Vec<LayerFile>,
}

fn layers_to_file(mlp: &Mlp) -> Vec<LayerFile> {
    mlp.layers()
        .iter()
        .map(|l| LayerFile {
            inputs: l.inputs(),
            outputs: l.outputs(),
            activation: l.activation,
            weights: l.weights.iter().copied().collect(),
            biases: l.biases.to_vec(),
        })
        .collect()
}

fn layers_from_file(layers: Vec<LayerFile>) -> Result<Mlp> {
    let layers = layers
        .into_iter()
        .map(|l| {
            let weights = Array2::from_shape_vec((l.outputs, l.inputs), l.weights)
                .map_err(|e| Error::Format(format!("layer weights: {e}")))?;
            if l.biases.len() != l.outputs {
                return Err(Error::Format(format!("{} biases for {} outputs", l.biases.len(), l.outputs)));
            }
            DenseLayer::new(weights, l.biases.into(), l.activation)
        })
        .collect::<Result<Vec<_>>>()?;
    Mlp::new(layers)
}

pub fn model_to_bytes(model: &HvNetModel) -> Result<Vec<u8>> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        m: model.meta.m,
        hidden: model.meta.hidden,
        seed: model.meta.seed,
        config_digest: model.meta.config_digest.clone(),
        phi: layers_to_file(&model.phi),
        rho: layers_to_file(&model.rho),
    };
    let mut bytes = Vec::new();
    to_json_17(&mut bytes, &file)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<HvNetModel> {
    let file: ModelFile = serde_json::from_slice(bytes)?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Format(format!("expected format '{MODEL_FORMAT}', found '{}'", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::Format(format!("version {} is not supported (expected {MODEL_VERSION})", file.version)));
    }
    let meta = ModelMeta { m: file.m, hidden: file.hidden, seed: file.seed, config_digest: file.config_digest };
    HvNetModel::from_parts(layers_from_file(file.phi)?, layers_from_file(file.rho)?, meta)
}

pub fn save_model(model: &HvNetModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_bytes(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<HvNetModel> {
    model_from_bytes(&fs::read(path)?)
}

/// SHA-256 of the serialized model, hex encoded.
pub fn model_digest(model: &HvNetModel) -> Result<String> {
    Ok(hex_digest(&model_to_bytes(model)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::hv_exact;
    use crate::pareto::{front_indices, ReferencePoint};
    use rand::Rng;

    fn random_set(rng: &mut rng::Rng, m: usize, n: usize) -> SolutionSet {
        loop {
            let rows: Vec<Vec<f64>> = (0..n * 4).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
            let front = front_indices(&rows).swap_remove(0);
            if front.len() >= n {
                return SolutionSet::from_rows(front.into_iter().take(n).map(|i| rows[i].clone())).unwrap();
            }
        }
    }

    fn labeled(set: SolutionSet) -> LabeledSet {
        let hv = hv_exact(&set, &ReferencePoint::unit(set.dim())).unwrap();
        LabeledSet { set, hv }
    }

    #[test]
    fn architecture_shapes() {
        let model = HvNetModel::new(3, 128, 0).unwrap();
        assert_eq!(model.phi.inputs(), 3);
        assert_eq!(model.phi.layers().len(), 4);
        assert_eq!(model.phi.outputs(), 128);
        assert_eq!(model.rho.inputs(), 128);
        assert_eq!(model.rho.layers().len(), 4);
        assert_eq!(model.rho.outputs(), 1);
        assert_eq!(model.rho.layers()[3].activation, Activation::Sigmoid);
    }

    #[test]
    fn predictions_are_order_independent_and_in_range() {
        let mut rng = rng::seeded(1);
        let model = HvNetModel::new(3, 16, 4).unwrap();
        let set = random_set(&mut rng, 3, 3);
        let a = model.predict(&set).unwrap();
        let b = model.predict(&set.permuted(&[2, 0, 1])).unwrap();
        assert!((a - b).abs() <= 1e-9 * a);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn predict_rejects_bad_input() {
        let model = HvNetModel::new(2, 8, 0).unwrap();
        let outside = SolutionSet::from_rows([[0.5, 1.5]]).unwrap();
        assert!(matches!(model.predict(&outside), Err(Error::OutOfUnitBox { .. })));
        let wrong_dim = SolutionSet::from_rows([[0.5, 0.5, 0.5]]).unwrap();
        assert!(matches!(model.predict(&wrong_dim), Err(Error::DimensionMismatch { .. })));
    }

    fn hand_layer(w: &[&[f64]], b: &[f64], act: Activation) -> DenseLayer {
        let rows = w.len();
        let cols = w[0].len();
        let data: Vec<f64> = w.iter().flat_map(|r| r.iter().copied()).collect();
        DenseLayer::new(Array2::from_shape_vec((rows, cols), data).unwrap(), b.to_vec().into(), act).unwrap()
    }

    #[test]
    fn tiny_model_matches_hand_evaluation() {
        use Activation::*;
        let phi = Mlp::new(vec![
            hand_layer(&[&[1.0, -1.0], &[0.5, 2.0]], &[0.1, 0.0], Relu),
            hand_layer(&[&[1.0, 0.0], &[-1.0, 1.0]], &[0.0, 0.2], Relu),
            hand_layer(&[&[2.0, 1.0], &[0.0, -1.0]], &[0.0, 1.0], Relu),
            hand_layer(&[&[1.0, 1.0], &[1.0, -1.0]], &[0.0, 0.0], Relu),
        ])
        .unwrap();
        let rho = Mlp::new(vec![
            hand_layer(&[&[0.5, 0.0], &[0.0, 0.5]], &[0.0, 0.0], Relu),
            hand_layer(&[&[1.0, -1.0], &[1.0, 1.0]], &[0.0, 0.0], Relu),
            hand_layer(&[&[1.0, 0.0], &[0.0, 1.0]], &[-1.0, 0.0], Relu),
            hand_layer(&[&[1.0, -0.5]], &[0.25], Sigmoid),
        ])
        .unwrap();
        let model = HvNetModel::from_parts(phi, rho, ModelMeta { m: 2, hidden: 2, seed: 0, config_digest: None }).unwrap();
        let set = SolutionSet::from_rows([[0.2, 0.6], [0.8, 0.1]]).unwrap();

        // (0.2, 0.6): [0, 1.3] -> [0, 1.5] -> [1.5, 0] -> [1.5, 1.5]
        // (0.8, 0.1): [0.8, 0.6] -> [0.8, 0.0] -> [1.6, 1.0] -> [2.6, 0.6]
        // pooled [4.1, 2.1] -> [2.05, 1.05] -> [1.0, 3.1] -> [0.0, 3.1]
        // logit 0 - 1.55 + 0.25 = -1.3
        let expected = 1.0 / (1.0 + 1.3f64.exp());
        assert!((model.predict(&set).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn loss_values() {
        assert_eq!(loss_log_mse(0.3, 0.3).unwrap(), 0.0);
        let t = 0.01;
        assert!((loss_log_mse(std::f64::consts::E * t, t).unwrap() - 1.0).abs() < 1e-14);
        let l = loss_log_mse(1e-4, 1e-6).unwrap();
        assert!((l - 21.2076).abs() < 1e-3, "{l}");
        assert!(loss_log_mse(0.0, 0.5).is_err());
        assert!(loss_log_mse(0.5, -1.0).is_err());

        assert_eq!(loss_mse(0.5, 0.25), 0.0625);
        assert_eq!(loss_mse(0.4, 0.4), 0.0);
        assert!((loss_mse(1e-4, 1e-6) - 9.801e-9).abs() < 1e-15);

        assert_eq!(loss_mape(0.5, 1.0).unwrap(), 0.5);
        assert!((loss_mape(1e-4, 1e-6).unwrap() - 99.0).abs() < 1e-9);
        assert_eq!(loss_mape(0.7, 0.7).unwrap(), 0.0);
        assert!(loss_mape(0.7, 0.0).is_err());

        assert_eq!(Loss::Mse.mean(&[0.5, 0.25], &[0.25, 0.25]).unwrap(), 0.03125);
        assert!(Loss::Mse.mean(&[0.5], &[0.25, 0.25]).is_err());
    }

    #[test]
    fn loss_derivatives_match_differences() {
        for loss in [Loss::LogMse, Loss::Mse, Loss::Mape] {
            for (p, t) in [(0.3, 0.2), (0.05, 0.4), (0.9, 0.1)] {
                let h = 1e-7;
                let num = (loss.value(p + h, t).unwrap() - loss.value(p - h, t).unwrap()) / (2.0 * h);
                let ana = loss.derivative(p, t);
                assert!((num - ana).abs() <= 1e-5 * ana.abs().max(1.0), "{loss:?} {p} {t}");
            }
        }
    }

    #[test]
    fn composed_gradients_match_central_differences() {
        let mut rng = rng::seeded(3);
        let data: Vec<LabeledSet> = [1usize, 3, 5].iter().map(|&n| labeled(random_set(&mut rng, 3, n))).collect();
        let batch: Vec<&LabeledSet> = data.iter().collect();
        for loss in [Loss::LogMse, Loss::Mse, Loss::Mape] {
            let mut model = HvNetModel::new(3, 4, 11).unwrap();
            for t in model.param_slices_mut() {
                for x in t.iter_mut() {
                    *x += rng.random_range(-0.1..0.1);
                }
            }
            let (_, grads) = batch_gradients(&model, &batch, loss).unwrap();
            let h = 1e-5;
            let lengths = model.param_lengths();
            for (t, &len) in lengths.iter().enumerate() {
                for j in 0..len {
                    let orig = model.param_slices()[t][j];
                    model.param_slices_mut()[t][j] = orig + h;
                    let up = batch_gradients(&model, &batch, loss).unwrap().0;
                    model.param_slices_mut()[t][j] = orig - h;
                    let down = batch_gradients(&model, &batch, loss).unwrap().0;
                    model.param_slices_mut()[t][j] = orig;
                    let num = (up - down) / (2.0 * h);
                    let ana = grads[t][j];
                    assert!(
                        (num - ana).abs() <= 1e-4 * num.abs().max(ana.abs()) + 1e-6,
                        "{loss:?} tensor {t} index {j}: {ana} vs {num}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_alone() {
        let mut rng = rng::seeded(5);
        let data: Vec<LabeledSet> = (1..=6).map(|n| labeled(random_set(&mut rng, 3, n))).collect();
        let config = TrainConfig { learning_rate: 0.0, epochs: 1, hidden: 8, batch_size: 2, seed: 9, ..TrainConfig::default() };
        let out = train(&config, &data).unwrap();
        assert_eq!(out.trace.len(), 1);
        let fresh = HvNetModel::new(3, 8, 9).unwrap();
        assert_eq!(out.model.phi, fresh.phi);
        assert_eq!(out.model.rho, fresh.rho);
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let mut rng = rng::seeded(6);
        let data: Vec<LabeledSet> = (0..60).map(|i| labeled(random_set(&mut rng, 2, 1 + i % 4))).collect();
        let config = TrainConfig { learning_rate: 1e-2, epochs: 15, hidden: 8, batch_size: 8, seed: 2, ..TrainConfig::default() };
        let a = train(&config, &data).unwrap();
        let b = train(&config, &data).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.trace, b.trace);
        assert!(a.trace.last().unwrap() < &a.trace[0]);
    }

    #[test]
    fn training_rejects_bad_input() {
        let config = TrainConfig::default();
        assert!(matches!(train(&config, &[]), Err(Error::Empty)));
        let set = SolutionSet::from_rows([[0.5, 0.5]]).unwrap();
        let bad = [LabeledSet { set, hv: 0.0 }];
        assert!(train(&config, &bad).is_err());
        let zero_batch = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(zero_batch.validate().is_err());
        let zero_epochs = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(zero_epochs.validate().is_err());
    }

    #[test]
    fn divergence_is_reported() {
        // A target of 1e-300 against a sigmoid output pushes the log loss past
        // what Adam can recover from with this learning rate.
        let set = SolutionSet::from_rows([[0.5, 0.5]]).unwrap();
        let data = [LabeledSet { set, hv: f64::MIN_POSITIVE }];
        let config = TrainConfig { learning_rate: 1e6, epochs: 50, hidden: 4, batch_size: 1, ..TrainConfig::default() };
        assert!(matches!(train(&config, &data), Err(Error::Diverged { .. })));
    }

    #[test]
    fn model_files_round_trip() {
        let mut rng = rng::seeded(8);
        let mut model = HvNetModel::new(3, 16, 21).unwrap();
        for t in model.param_slices_mut() {
            for x in t.iter_mut() {
                *x += rng.random_range(-1e-3..1e-3);
            }
        }
        model.meta.config_digest = Some(TrainConfig::default().digest());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, model);
        for n in 1..=20 {
            let set = random_set(&mut rng, 3, n);
            assert_eq!(loaded.predict(&set).unwrap().to_bits(), model.predict(&set).unwrap().to_bits());
        }
        let first = fs::read(&path).unwrap();
        save_model(&model, &path).unwrap();
        assert_eq!(hex_digest(&first), hex_digest(&fs::read(&path).unwrap()));
        assert_eq!(model_digest(&model).unwrap(), hex_digest(&first));
    }

    #[test]
    fn model_files_reject_mismatches() {
        let model = HvNetModel::new(3, 4, 0).unwrap();
        let text = String::from_utf8(model_to_bytes(&model).unwrap()).unwrap();
        let wrong_m = text.replacen("\"m\":3", "\"m\":4", 1);
        assert!(matches!(model_from_bytes(wrong_m.as_bytes()), Err(Error::ShapeMismatch(_))));
        let wrong_version = text.replacen("\"version\":1", "\"version\":2", 1);
        assert!(matches!(model_from_bytes(wrong_version.as_bytes()), Err(Error::Format(_))));
        assert!(model_from_bytes(b"{not json").is_err());
    }

    #[test]
    fn trace_csv() {
        let mut out = Vec::new();
        write_trace(&mut out, &[0.5, 0.25]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("epoch,mean_loss\n1,5.0000000000000000e-1\n2,"));
    }
}
