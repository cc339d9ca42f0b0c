//! MSE loss, AdamW and the full-graph training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::model::{forward, HybridNetParams, Mode};
use crate::tensor::{Real, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub grad_clip_norm: f64,
    /// Epoch interval for the progress callback's checkpoint flag; 0 disables.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            seed: 7,
            grad_clip_norm: 5.0,
            log_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.epochs < 1 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.eps > 0.0) || !(self.weight_decay >= 0.0) || !(self.grad_clip_norm > 0.0) {
            return bad(
                "eps and grad_clip_norm must be positive, weight_decay non-negative".into(),
            );
        }
        Ok(())
    }
}

/// Adam moments for each parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(tensors: &[Tensor<T>]) -> Self {
        OptimizerState {
            m: tensors.iter().map(|t| vec![T::zero(); t.numel()]).collect(),
            v: tensors.iter().map(|t| vec![T::zero(); t.numel()]).collect(),
            t: 0,
        }
    }
}

/// Mean squared error between an `N`-vector on the tape and `target`.
pub fn mse_loss<T: Real>(tape: &mut Tape<T>, pred: Var, target: &[T]) -> Result<Var> {
    let n = tape.value(pred).len();
    if n != target.len() || n == 0 {
        return Err(Error::shape(
            "mse_loss",
            format!("{n} predictions, {} targets", target.len()),
        ));
    }
    let shape = tape.shape(pred).to_vec();
    let y = tape.constant(shape, target.to_vec())?;
    let diff = tape.sub(pred, y)?;
    let sq = tape.mul(diff, diff)?;
    tape.mean(sq)
}

/// One AdamW update of every tensor that requires a gradient.
///
/// Decay is decoupled and skipped where `decay[i]` is false.
pub fn adamw_step<T: Real>(
    tensors: &mut [Tensor<T>],
    decay: &[bool],
    state: &mut OptimizerState<T>,
    cfg: &TrainConfig,
) -> Result<()> {
    if decay.len() != tensors.len() || state.m.len() != tensors.len() {
        return Err(Error::shape(
            "adamw_step",
            format!(
                "{} tensors, {} decay flags, {} moments",
                tensors.len(),
                decay.len(),
                state.m.len()
            ),
        ));
    }
    for (i, t) in tensors.iter().enumerate() {
        if t.requires_grad && t.grad.is_none() {
            return Err(Error::MissingGrad(format!("parameter {i}")));
        }
    }
    state.t += 1;
    let f = T::from_f64_lossy;
    let (b1, b2) = (f(cfg.beta1), f(cfg.beta2));
    let t = state.t as i32;
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let (lr, eps) = (f(cfg.lr), f(cfg.eps));
    for (i, tensor) in tensors.iter_mut().enumerate() {
        if !tensor.requires_grad {
            continue;
        }
        let wd = if decay[i] {
            f(cfg.weight_decay)
        } else {
            T::zero()
        };
        let grad = tensor.grad.take().expect("checked above");
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, theta) in tensor.data_mut().iter_mut().enumerate() {
            let g = grad[j];
            m[j] = b1 * m[j] + (T::one() - b1) * g;
            v[j] = b2 * v[j] + (T::one() - b2) * g * g;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            *theta = *theta - lr * (m_hat / (v_hat.sqrt() + eps) + wd * *theta);
        }
        tensor.grad = Some(grad);
    }
    Ok(())
}

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<T: Real>(tensors: &mut [Tensor<T>], max_norm: f64) -> f64 {
    let mut sq = 0.0f64;
    for g in tensors.iter().filter_map(|t| t.grad.as_ref()) {
        for &v in g {
            let v = v.to_f64().expect("float");
            sq += v * v;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm {
        let s = T::from_f64_lossy(max_norm / norm);
        for g in tensors.iter_mut().filter_map(|t| t.grad.as_mut()) {
            g.iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}

/// Forward, loss and backward for one sample. Gradients land in `params`.
pub fn loss_and_grad<T: Real>(
    params: &mut HybridNetParams<T>,
    sample: &Sample<T>,
    mode: Mode,
) -> Result<f64> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.tensors.iter().map(|t| tape.leaf(t)).collect();
    let pred = forward(&mut tape, &vars, &params.config, &sample.graph, mode)?;
    let loss = mse_loss(&mut tape, pred, &sample.target)?;
    tape.backward(loss)?;
    for (t, &v) in params.tensors.iter_mut().zip(&vars) {
        if t.requires_grad {
            // A branch absent from the graph still gets an explicit zero gradient.
            t.grad = Some(
                tape.grad(v)
                    .map_or_else(|| vec![T::zero(); t.numel()], <[T]>::to_vec),
            );
        }
    }
    Ok(tape.value(loss)[0].to_f64().expect("float"))
}

/// Per-epoch progress passed to the training callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    /// True on every `log_every`-th epoch and on the last one.
    pub checkpoint: bool,
}

/// Trains `params` in place and returns the per-epoch mean loss.
///
/// Parameters of branches unused by `mode` are frozen first. Each epoch
/// visits the samples in an order shuffled from `cfg.seed`.
pub fn train<T: Real>(
    params: &mut HybridNetParams<T>,
    samples: &[Sample<T>],
    mode: Mode,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochReport, &HybridNetParams<T>) -> Result<()>,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no training samples".into()));
    }
    params.freeze_for(mode);
    let decay: Vec<bool> = params.specs.iter().map(|s| !s.is_bias).collect();
    let mut state = OptimizerState::new(&params.tensors);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let loss = loss_and_grad(params, &samples[i], mode)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    design: samples[i].name.clone(),
                });
            }
            total += loss;
            clip_grad_norm(&mut params.tensors, cfg.grad_clip_norm);
            adamw_step(&mut params.tensors, &decay, &mut state, cfg)?;
            params.tensors.iter_mut().for_each(Tensor::zero_grad);
        }
        let mean_loss = total / samples.len() as f64;
        curve.push(mean_loss);
        let checkpoint = epoch == cfg.epochs || (cfg.log_every > 0 && epoch % cfg.log_every == 0);
        on_epoch(
            &EpochReport {
                epoch,
                mean_loss,
                checkpoint,
            },
            params,
        )?;
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_analytic() {
        let mut tape = Tape::<f64>::new();
        let p = tape.constant(vec![2], vec![0.0, 0.0]).unwrap();
        let l = mse_loss(&mut tape, p, &[1.0, 3.0]).unwrap();
        assert_eq!(tape.value(l)[0], 5.0);
        assert!(mse_loss(&mut tape, p, &[1.0]).is_err());
    }

    #[test]
    fn adamw_scalar_step() {
        let mut t = vec![Tensor::<f64>::scalar(0.0).with_grad()];
        t[0].grad = Some(vec![1.0]);
        let mut st = OptimizerState::new(&t);
        adamw_step(&mut t, &[true], &mut st, &TrainConfig::default()).unwrap();
        let want = -2e-4 / (1.0 + 1e-8);
        assert!((t[0].data()[0] - want).abs() < 1e-12);
    }

    #[test]
    fn adamw_missing_grad_errors() {
        let mut t = vec![Tensor::<f64>::scalar(1.0).with_grad()];
        let mut st = OptimizerState::new(&t);
        assert!(matches!(
            adamw_step(&mut t, &[true], &mut st, &TrainConfig::default()),
            Err(Error::MissingGrad(_))
        ));
    }

    #[test]
    fn clipping_bounds_the_norm() {
        let mut t = vec![Tensor::<f64>::zeros(vec![3]).with_grad()];
        t[0].grad = Some(vec![3.0, 4.0, 12.0]);
        let before = clip_grad_norm(&mut t, 5.0);
        assert_eq!(before, 13.0);
        let after: f64 = t[0]
            .grad
            .as_ref()
            .unwrap()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        assert!(after <= 5.0 + 1e-6);
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
