use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{mse, Network};
use super::{MlpError, MlpModel};
use crate::features::fit_scaler;
use crate::model::Gesture;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Hidden layer widths; input and output widths come from the data.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub target_mse: f64,
    /// Fraction held out for early stopping. Zero monitors the training MSE.
    pub validation_fraction: f64,
    pub patience: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![40],
            learning_rate: 0.1,
            momentum: 0.9,
            max_epochs: 300,
            target_mse: 1e-3,
            validation_fraction: 0.2,
            patience: 40,
            rng_seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MlpError> {
        let bad = |m: String| Err(MlpError::Config(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return bad(format!(
                "validation_fraction must lie in [0, 0.5], got {}",
                self.validation_fraction
            ));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive".into());
        }
        if self.patience == 0 {
            return bad("patience must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        if !(self.target_mse >= 0.0) {
            return bad(format!("target_mse must be non-negative, got {}", self.target_mse));
        }
        Ok(())
    }
}

/// Losses after each epoch. Entry 0 is the untrained network.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    NoImprovement,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    pub stop: StopReason,
}

impl TrainHistory {
    /// The loss used for model selection at `epoch`.
    pub fn monitored(&self, epoch: usize) -> f64 {
        let r = &self.epochs[epoch];
        r.val_mse.unwrap_or(r.train_mse)
    }

    pub fn best_mse(&self) -> f64 {
        self.monitored(self.best_epoch)
    }
}

type Sample = (Vec<f64>, Vec<f64>);

fn dataset_mse(net: &Network, data: &[Sample]) -> f64 {
    data.iter().map(|(x, t)| mse(&net.output(x), t)).sum::<f64>() / data.len() as f64
}

/// Stochastic gradient descent with momentum on raw (input, target) pairs.
///
/// Parameters are initialized and samples shuffled from `cfg.rng_seed`;
/// `cfg.hidden` and `cfg.validation_fraction` are ignored here since the
/// topology and validation set are explicit. The returned network is the one
/// with the lowest monitored loss (validation MSE when `val` is non-empty,
/// training MSE otherwise).
pub fn train_network(
    layer_sizes: &[usize],
    train: &[Sample],
    val: &[Sample],
    cfg: &TrainConfig,
) -> Result<(Network, TrainHistory), MlpError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    train_network_with(layer_sizes, train, val, cfg, &mut rng)
}

fn train_network_with(
    layer_sizes: &[usize],
    train: &[Sample],
    val: &[Sample],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Network, TrainHistory), MlpError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(MlpError::Config(format!("bad topology {layer_sizes:?}")));
    }
    let (n_in, n_out) = (layer_sizes[0], layer_sizes[layer_sizes.len() - 1]);
    for (x, t) in train.iter().chain(val) {
        if x.len() != n_in {
            return Err(MlpError::Dimension { expected: n_in, found: x.len() });
        }
        if t.len() != n_out {
            return Err(MlpError::Dimension { expected: n_out, found: t.len() });
        }
    }

    let mut net = Network::random(layer_sizes, rng);
    let mut velocity_w: Vec<Vec<f64>> = net.weights().iter().map(|w| vec![0.0; w.len()]).collect();
    let mut velocity_b: Vec<Vec<f64>> = net.biases().iter().map(|b| vec![0.0; b.len()]).collect();

    let record = |net: &Network, epoch| EpochRecord {
        epoch,
        train_mse: dataset_mse(net, train),
        val_mse: (!val.is_empty()).then(|| dataset_mse(net, val)),
    };
    let first = record(&net, 0);
    let mut best_loss = first.val_mse.unwrap_or(first.train_mse);
    let mut best = (net.clone(), 0);
    let mut epochs = vec![first];
    let mut stop = StopReason::MaxEpochs;

    if best_loss < cfg.target_mse {
        stop = StopReason::TargetReached;
    } else {
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut stale = 0;
        for epoch in 1..=cfg.max_epochs {
            order.shuffle(rng);
            for &i in &order {
                let (x, t) = &train[i];
                let g = net.gradients(x, t);
                for (v, gl) in velocity_w.iter_mut().zip(&g.weights) {
                    for (vi, gi) in v.iter_mut().zip(gl) {
                        *vi = cfg.momentum * *vi - cfg.learning_rate * gi;
                    }
                }
                for (v, gl) in velocity_b.iter_mut().zip(&g.biases) {
                    for (vi, gi) in v.iter_mut().zip(gl) {
                        *vi = cfg.momentum * *vi - cfg.learning_rate * gi;
                    }
                }
                for (w, v) in net.weights_mut().iter_mut().zip(&velocity_w) {
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi += vi);
                }
                for (b, v) in net.biases_mut().iter_mut().zip(&velocity_b) {
                    b.iter_mut().zip(v).for_each(|(bi, vi)| *bi += vi);
                }
            }

            let rec = record(&net, epoch);
            let loss = rec.val_mse.unwrap_or(rec.train_mse);
            epochs.push(rec);
            if !loss.is_finite() {
                return Err(MlpError::Invalid(format!("training diverged at epoch {epoch}")));
            }
            if loss < best_loss {
                best_loss = loss;
                best = (net.clone(), epoch);
                stale = 0;
            } else {
                stale += 1;
            }
            if loss < cfg.target_mse {
                stop = StopReason::TargetReached;
                break;
            }
            if stale >= cfg.patience {
                stop = StopReason::NoImprovement;
                break;
            }
        }
    }

    let (net, best_epoch) = best;
    Ok((
        net,
        TrainHistory {
            epochs,
            best_epoch,
            stop,
        },
    ))
}

/// Train a gesture classifier on labelled feature vectors.
///
/// Classes are the distinct labels in canonical gesture order. A seeded
/// validation subset is held out, the scaler is fit on the rest, and the
/// network is trained on one-hot targets.
pub fn train<V: AsRef<[f64]>>(
    dataset: &[(V, Gesture)],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainHistory), MlpError> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    let dim = dataset[0].0.as_ref().len();
    if let Some((v, _)) = dataset.iter().find(|(v, _)| v.as_ref().len() != dim) {
        return Err(MlpError::Dimension { expected: dim, found: v.as_ref().len() });
    }
    let mut classes: Vec<Gesture> = dataset.iter().map(|(_, g)| *g).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(MlpError::SingleClass(classes[0]));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (cfg.validation_fraction * dataset.len() as f64).round() as usize;
    let n_val = n_val.min(dataset.len().saturating_sub(2));
    let (val_idx, train_idx) = order.split_at(n_val);

    let train_vecs: Vec<&[f64]> = train_idx.iter().map(|&i| dataset[i].0.as_ref()).collect();
    let scaler = fit_scaler(&train_vecs)?;

    let encode = |idx: &[usize]| -> Result<Vec<Sample>, MlpError> {
        idx.iter()
            .map(|&i| {
                let (v, g) = &dataset[i];
                let x = scaler.apply(v.as_ref())?;
                let t = classes.iter().map(|c| if c == g { 1.0 } else { 0.0 }).collect();
                Ok((x, t))
            })
            .collect()
    };
    let train_set = encode(train_idx)?;
    let val_set = encode(val_idx)?;

    let mut sizes = Vec::with_capacity(cfg.hidden.len() + 2);
    sizes.push(dim);
    sizes.extend(&cfg.hidden);
    sizes.push(classes.len());

    let (net, history) = train_network_with(&sizes, &train_set, &val_set, cfg, &mut rng)?;
    Ok((MlpModel::new(net, scaler, classes)?, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::GestureClassifier;

    fn xor() -> Vec<Sample> {
        vec![
            (vec![0.0, 0.0], vec![0.0]),
            (vec![0.0, 1.0], vec![1.0]),
            (vec![1.0, 0.0], vec![1.0]),
            (vec![1.0, 1.0], vec![0.0]),
        ]
    }

    fn xor_cfg() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.5,
            momentum: 0.9,
            max_epochs: 5000,
            target_mse: 0.05,
            validation_fraction: 0.0,
            patience: 5000,
            rng_seed: 1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_xor() {
        let (net, hist) = train_network(&[2, 4, 1], &xor(), &[], &xor_cfg()).unwrap();
        assert!(hist.best_mse() < 0.05, "{}", hist.best_mse());
        assert!(hist.epochs.len() <= 5001);
        assert_eq!(hist.stop, StopReason::TargetReached);
        for (x, t) in xor() {
            assert!((net.output(&x)[0] - t[0]).abs() < 0.5);
        }
    }

    #[test]
    fn overfits_single_sample() {
        let cfg = TrainConfig {
            max_epochs: 2000,
            target_mse: 1e-3,
            validation_fraction: 0.0,
            patience: 2000,
            learning_rate: 0.5,
            ..TrainConfig::default()
        };
        let data = vec![(vec![0.3, -0.2, 0.9], vec![1.0, 0.0])];
        let (_, hist) = train_network(&[3, 5, 2], &data, &[], &cfg).unwrap();
        assert!(hist.best_mse() < 1e-3, "{}", hist.best_mse());
    }

    #[test]
    fn deterministic() {
        let a = train_network(&[2, 4, 1], &xor(), &[], &xor_cfg()).unwrap();
        let b = train_network(&[2, 4, 1], &xor(), &[], &xor_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn best_is_no_worse_than_initial() {
        let cfg = TrainConfig { max_epochs: 20, validation_fraction: 0.0, ..xor_cfg() };
        let (_, hist) = train_network(&[2, 3, 1], &xor(), &[], &cfg).unwrap();
        assert!(hist.best_mse() <= hist.monitored(0));
    }

    #[test]
    fn rejects_single_class_and_bad_dims() {
        let data = vec![(vec![1.0, 2.0], Gesture::Fist), (vec![3.0, 4.0], Gesture::Fist)];
        assert_eq!(
            train(&data, &TrainConfig::default()).unwrap_err(),
            MlpError::SingleClass(Gesture::Fist)
        );
        let data = vec![(vec![1.0, 2.0], Gesture::Fist), (vec![3.0], Gesture::WaveIn)];
        assert!(matches!(train(&data, &TrainConfig::default()), Err(MlpError::Dimension { .. })));
        assert!(matches!(
            train_network(&[2, 1], &[(vec![1.0], vec![0.0])], &[], &xor_cfg()),
            Err(MlpError::Dimension { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        ok.validate().unwrap();
        for bad in [
            TrainConfig { learning_rate: 0.0, ..ok.clone() },
            TrainConfig { momentum: 1.0, ..ok.clone() },
            TrainConfig { validation_fraction: 0.6, ..ok.clone() },
            TrainConfig { max_epochs: 0, ..ok.clone() },
            TrainConfig { hidden: vec![0], ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(MlpError::Config(_))));
        }
    }

    #[test]
    fn separates_two_clusters() {
        let data: Vec<(Vec<f64>, Gesture)> = (0..40)
            .map(|i| {
                let s = (i as f64 * 0.37).sin() * 0.2;
                if i % 2 == 0 {
                    (vec![1.0 + s, 2.0 - s], Gesture::Fist)
                } else {
                    (vec![-1.0 - s, 0.5 + s], Gesture::WaveOut)
                }
            })
            .collect();
        let cfg = TrainConfig { hidden: vec![4], learning_rate: 0.5, ..TrainConfig::default() };
        let (model, hist) = train(&data, &cfg).unwrap();
        assert_eq!(model.classes(), &[Gesture::Fist, Gesture::WaveOut]);
        assert!(hist.epochs[0].val_mse.is_some());
        for (x, g) in &data {
            assert_eq!(model.classify(x).unwrap().gesture, *g);
        }
    }
}
