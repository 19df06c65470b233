//! Multinomial logistic regression and ridge regression trained by
//! full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Strength α of the (α/2)·‖W‖² penalty added to the summed
    /// cross-entropy. The bias is not penalized.
    pub l2_strength: f64,
    pub max_iters: usize,
    pub learning_rate: f64,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
    /// Early stopping: iterations without a dev-accuracy improvement.
    pub patience: usize,
    /// Unused by the deterministic optimizer; kept so a run's config is
    /// recorded in full.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            l2_strength: 0.01,
            max_iters: 500,
            learning_rate: 0.1,
            tolerance: 1e-6,
            patience: 100,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_strength >= 0.0 && self.l2_strength.is_finite()) {
            return Err(Error::InvalidConfig("l2_strength must be a finite non-negative number".into()));
        }
        if self.max_iters == 0 || self.patience == 0 {
            return Err(Error::InvalidConfig("max_iters and patience must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Rows of sparse features sharing one dimensionality.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    rows: Vec<SparseVector>,
    n_features: usize,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<SparseVector>, n_features: usize) -> Result<FeatureMatrix> {
        for (i, r) in rows.iter().enumerate() {
            if r.max_index().is_some_and(|m| m >= n_features) {
                return Err(Error::InvalidInput(format!(
                    "row {i} has a feature index beyond dimension {n_features}"
                )));
            }
            if r.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} has a non-finite feature")));
            }
        }
        Ok(FeatureMatrix { rows, n_features })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<FeatureMatrix> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::InvalidInput("dense rows differ in length".into()));
        }
        let sparse = rows
            .iter()
            .map(|r| SparseVector::from_pairs(r.iter().copied().enumerate()))
            .collect();
        FeatureMatrix::new(sparse, n_features)
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Row subset, repeating rows as listed.
    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            n_features: self.n_features,
        }
    }
}

/// `(1/n)·[Σ cross-entropy + (α/2)·‖W‖²]` over a flat parameter vector: the
/// weight matrix row-major (`n_labels × n_features`), then one bias per label.
/// The `1/n` scale leaves the minimizer unchanged and keeps step sizes
/// independent of the training set size.
pub struct Objective<'a> {
    x: &'a FeatureMatrix,
    y: &'a [usize],
    n_labels: usize,
    l2: f64,
}

impl<'a> Objective<'a> {
    pub fn new(x: &'a FeatureMatrix, y: &'a [usize], n_labels: usize, l2: f64) -> Result<Objective<'a>> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature rows for {} targets",
                x.len(),
                y.len()
            )));
        }
        if y.iter().any(|&c| c >= n_labels) {
            return Err(Error::InvalidInput("target index out of range".into()));
        }
        Ok(Objective { x, y, n_labels, l2 })
    }

    pub fn n_params(&self) -> usize {
        self.n_labels * (self.x.n_features + 1)
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.evaluate(params, false).0
    }

    pub fn loss_and_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        self.evaluate(params, true)
    }

    fn evaluate(&self, params: &[f64], with_grad: bool) -> (f64, Vec<f64>) {
        let (nl, nf) = (self.n_labels, self.x.n_features);
        let bias = &params[nl * nf..];
        let mut grad = if with_grad { vec![0.0; params.len()] } else { Vec::new() };
        let mut logits = vec![0.0; nl];
        let mut loss = 0.0;
        for (row, &target) in self.x.rows.iter().zip(self.y) {
            scores_into(params, bias, nf, row, &mut logits);
            let lse = log_sum_exp(&logits);
            loss += lse - logits[target];
            if with_grad {
                for c in 0..nl {
                    let g = (logits[c] - lse).exp() - f64::from(c == target);
                    for (j, v) in row.iter() {
                        grad[c * nf + j] += g * v;
                    }
                    grad[nl * nf + c] += g;
                }
            }
        }
        let w = &params[..nl * nf];
        loss += 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        if with_grad {
            for (g, wv) in grad.iter_mut().zip(w) {
                *g += self.l2 * wv;
            }
        }
        let n = self.x.len() as f64;
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss, grad)
    }
}

fn scores_into(params: &[f64], bias: &[f64], nf: usize, row: &SparseVector, out: &mut [f64]) {
    for (c, o) in out.iter_mut().enumerate() {
        *o = bias[c] + row.dot(&params[c * nf..(c + 1) * nf]);
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `n_labels` rows of `n_features` weights.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub label_order: Vec<String>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Position in the model's `label_order`.
    pub label: usize,
    pub probabilities: Vec<f64>,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn flat(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.weights.iter().flatten().copied().collect();
        p.extend_from_slice(&self.bias);
        p
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<Prediction>> {
        predict(self, x)
    }

    pub fn predict_labels(&self, x: &FeatureMatrix) -> Result<Vec<&str>> {
        Ok(predict(self, x)?
            .into_iter()
            .map(|p| self.label_order[p.label].as_str())
            .collect())
    }
}

/// Softmax probabilities and argmax labels; ties go to the label earlier in
/// `label_order`.
pub fn predict(model: &LinearModel, x: &FeatureMatrix) -> Result<Vec<Prediction>> {
    if x.n_features != model.n_features() {
        return Err(Error::InvalidInput(format!(
            "features have dimension {}, model expects {}",
            x.n_features,
            model.n_features()
        )));
    }
    let params = model.flat();
    Ok(predict_flat(&params, model.label_order.len(), x))
}

fn predict_flat(params: &[f64], nl: usize, x: &FeatureMatrix) -> Vec<Prediction> {
    let nf = x.n_features;
    let bias = &params[nl * nf..];
    let mut logits = vec![0.0; nl];
    x.rows
        .iter()
        .map(|row| {
            scores_into(params, bias, nf, row, &mut logits);
            let lse = log_sum_exp(&logits);
            let probabilities: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
            let mut label = 0;
            for c in 1..nl {
                if logits[c] > logits[label] {
                    label = c;
                }
            }
            Prediction { label, probabilities }
        })
        .collect()
}

fn accuracy_flat(params: &[f64], nl: usize, x: &FeatureMatrix, y: &[Option<usize>]) -> f64 {
    let hits = predict_flat(params, nl, x)
        .iter()
        .zip(y)
        .filter(|(p, t)| Some(p.label) == **t)
        .count();
    hits as f64 / y.len() as f64
}

/// Plain gradient descent with step halving whenever a step would raise the
/// loss, so the training loss never increases. Returns the final parameters,
/// whether the gradient tolerance was met, and the iteration count.
fn descend(
    objective: &Objective<'_>,
    config: &ModelConfig,
    mut on_step: impl FnMut(usize, &[f64]) -> bool,
) -> (Vec<f64>, bool, usize) {
    let mut params = vec![0.0; objective.n_params()];
    let (mut loss, mut grad) = objective.loss_and_grad(&params);
    let mut lr = config.learning_rate;
    let mut converged = false;
    let mut iters = 0;
    while iters < config.max_iters {
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < config.tolerance {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lr > 1e-12 {
            let cand: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - lr * g).collect();
            let (cl, cg) = objective.loss_and_grad(&cand);
            if cl <= loss {
                (params, loss, grad) = (cand, cl, cg);
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        iters += 1;
        if !accepted {
            // No descent step exists at machine precision: a stationary point.
            converged = true;
            break;
        }
        if on_step(iters, &params) {
            break;
        }
    }
    (params, converged, iters)
}

/// Trains a multinomial logistic regression. `labels` must hold at least two
/// distinct values; label order is ascending. With a dev set, training stops
/// after `patience` iterations without a dev-accuracy gain and the
/// parameters with the best dev accuracy (earliest on ties) are kept. Dev
/// labels unseen in training count as errors.
pub fn train_linear_model(
    x: &FeatureMatrix,
    labels: &[String],
    config: &ModelConfig,
    dev: Option<(&FeatureMatrix, &[String])>,
) -> Result<LinearModel> {
    config.validate()?;
    let mut label_order: Vec<String> = labels.to_vec();
    label_order.sort();
    label_order.dedup();
    if label_order.len() < 2 {
        return Err(Error::InvalidInput("training needs at least 2 distinct labels".into()));
    }
    let index = |l: &String| label_order.binary_search(l).ok();
    let y: Vec<usize> = labels.iter().map(|l| index(l).expect("own label")).collect();
    let nl = label_order.len();
    let objective = Objective::new(x, &y, nl, config.l2_strength)?;

    let dev = match dev {
        Some((dx, dl)) if !dx.is_empty() => {
            if dx.n_features != x.n_features || dx.len() != dl.len() {
                return Err(Error::InvalidInput("dev features do not match training features".into()));
            }
            Some((dx, dl.iter().map(index).collect::<Vec<_>>()))
        }
        _ => None,
    };

    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let (params, converged, iterations) = match &dev {
        None => descend(&objective, config, |_, _| false),
        Some((dx, dy)) => {
            let zero = vec![0.0; objective.n_params()];
            best = Some((accuracy_flat(&zero, nl, dx, dy), zero, 0));
            descend(&objective, config, |it, p| {
                let acc = accuracy_flat(p, nl, dx, dy);
                let b = best.as_mut().expect("initialized");
                if acc > b.0 {
                    *b = (acc, p.to_vec(), it);
                }
                it - b.2 >= config.patience
            })
        }
    };
    let (params, iterations) = match best {
        Some((_, p, it)) => (p, it.max(1).min(iterations)),
        None => (params, iterations),
    };

    let nf = x.n_features;
    Ok(LinearModel {
        weights: (0..nl).map(|c| params[c * nf..(c + 1) * nf].to_vec()).collect(),
        bias: params[nl * nf..].to_vec(),
        label_order,
        converged,
        iterations,
    })
}

/// Linear least-squares regressor with an (α/2)·‖w‖² penalty, for the RMSE
/// metric path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

impl RidgeModel {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.n_features != self.weights.len() {
            return Err(Error::InvalidInput("feature dimension mismatch".into()));
        }
        Ok(x.rows.iter().map(|r| self.bias + r.dot(&self.weights)).collect())
    }
}

/// Minimizes `(1/n)·[Σ squared error / 2 + (α/2)·‖w‖²]` by gradient descent
/// with the same step-halving rule as the classifier.
pub fn train_ridge(x: &FeatureMatrix, targets: &[f64], config: &ModelConfig) -> Result<RidgeModel> {
    config.validate()?;
    if x.is_empty() || x.len() != targets.len() {
        return Err(Error::InvalidInput("ridge needs one target per non-empty feature row".into()));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("non-finite regression target".into()));
    }
    let nf = x.n_features;
    let n = x.len() as f64;
    let eval = |p: &[f64]| -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; nf + 1];
        let mut loss = 0.0;
        for (row, &t) in x.rows.iter().zip(targets) {
            let r = p[nf] + row.dot(&p[..nf]) - t;
            loss += 0.5 * r * r;
            for (j, v) in row.iter() {
                grad[j] += r * v;
            }
            grad[nf] += r;
        }
        loss += 0.5 * config.l2_strength * p[..nf].iter().map(|v| v * v).sum::<f64>();
        for j in 0..nf {
            grad[j] += config.l2_strength * p[j];
        }
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss, grad)
    };

    let mut p = vec![0.0; nf + 1];
    let (mut loss, mut grad) = eval(&p);
    let mut lr = config.learning_rate;
    let mut converged = false;
    for _ in 0..config.max_iters {
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < config.tolerance {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lr > 1e-12 {
            let cand: Vec<f64> = p.iter().zip(&grad).map(|(a, g)| a - lr * g).collect();
            let (cl, cg) = eval(&cand);
            if cl <= loss {
                (p, loss, grad) = (cand, cl, cg);
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if !accepted {
            converged = true;
            break;
        }
    }
    Ok(RidgeModel {
        weights: p[..nf].to_vec(),
        bias: p[nf],
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn separable_toy() {
        let x = FeatureMatrix::from_dense(&[vec![1.0, 0.0], vec![0.9, 0.1], vec![0.0, 1.0], vec![0.1, 0.9]]).unwrap();
        let y = labels(&["a", "a", "b", "b"]);
        let m = train_linear_model(&x, &y, &ModelConfig::default(), None).unwrap();
        assert_eq!(m.predict_labels(&x).unwrap(), vec!["a", "a", "b", "b"]);
    }

    #[test]
    fn zero_model_ties_to_first() {
        let m = LinearModel {
            weights: vec![vec![0.0; 2]; 3],
            bias: vec![0.0; 3],
            label_order: labels(&["x", "y", "z"]),
            converged: true,
            iterations: 0,
        };
        let x = FeatureMatrix::from_dense(&[vec![0.3, -2.0]]).unwrap();
        let p = &m.predict(&x).unwrap()[0];
        assert_eq!(p.label, 0);
        for q in &p.probabilities {
            assert!((q - 1.0 / 3.0).abs() < 1e-15);
        }
        let wrong = FeatureMatrix::from_dense(&[vec![0.3]]).unwrap();
        assert!(m.predict(&wrong).is_err());
    }

    #[test]
    fn heavy_penalty_predicts_prior() {
        let x = FeatureMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let y = labels(&["a", "b", "b", "b"]);
        let cfg = ModelConfig {
            l2_strength: 1e6,
            ..Default::default()
        };
        let m = train_linear_model(&x, &y, &cfg, None).unwrap();
        assert!(m.weights.iter().flatten().all(|w| w.abs() < 1e-4));
        assert_eq!(m.predict_labels(&x).unwrap(), vec!["b"; 4]);
    }

    #[test]
    fn loss_never_increases() {
        let x = FeatureMatrix::from_dense(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, -2.0], vec![0.0, 1.0]]).unwrap();
        let y = vec![0, 1, 2, 1];
        let obj = Objective::new(&x, &y, 3, 0.01).unwrap();
        let cfg = ModelConfig {
            learning_rate: 5.0,
            ..Default::default()
        };
        let mut last = obj.loss(&vec![0.0; obj.n_params()]);
        descend(&obj, &cfg, |_, p| {
            let l = obj.loss(p);
            assert!(l <= last);
            last = l;
            false
        });
    }

    #[test]
    fn single_label_is_error() {
        let x = FeatureMatrix::from_dense(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(train_linear_model(&x, &labels(&["a", "a"]), &ModelConfig::default(), None).is_err());
        assert!(FeatureMatrix::from_dense(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn ridge_fits_line() {
        let x = FeatureMatrix::from_dense(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let cfg = ModelConfig {
            l2_strength: 0.0,
            max_iters: 5000,
            ..Default::default()
        };
        let m = train_ridge(&x, &[1.0, 3.0, 5.0, 7.0], &cfg).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-3 && (m.bias - 1.0).abs() < 1e-3);
    }
}
