//! AdaBoost.R2 (Drucker) with weighted bootstrap resampling.

use rand::Rng as _;

use super::tree::{tree_fit, RegressionTree};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Confidence assigned to a learner with zero training error; its
/// aggregation weight is `ln(1 / BETA_FLOOR)`.
pub const BETA_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Linear,
    Square,
    Exponential,
}

impl Loss {
    /// Per-sample loss from `error / max_error`.
    pub fn apply(self, scaled: f64) -> f64 {
        match self {
            Loss::Linear => scaled,
            Loss::Square => scaled * scaled,
            Loss::Exponential => 1.0 - (-scaled).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Loss::Linear => "linear",
            Loss::Square => "square",
            Loss::Exponential => "exponential",
        }
    }
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Loss::Linear),
            "square" => Ok(Loss::Square),
            "exponential" => Ok(Loss::Exponential),
            other => Err(Error::InvalidArgument(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub loss: Loss,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self { rounds: 100, max_depth: 4, min_leaf: 5, loss: Loss::Linear }
    }
}

/// Outcome of one reweighting step.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundUpdate {
    pub max_error: f64,
    pub losses: Vec<f64>,
    pub avg_loss: f64,
    pub beta: f64,
    pub new_weights: Vec<f64>,
}

/// What a round decided given the learner's absolute errors.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundOutcome {
    /// Zero error everywhere: keep the learner with `BETA_FLOOR` and stop.
    Perfect,
    /// Average loss reached 0.5: discard the learner and stop.
    Rejected { avg_loss: f64 },
    Accepted(RoundUpdate),
}

/// Drucker's weight update: `l_i = loss(e_i / D)`, `Lbar = sum w_i l_i`,
/// `beta = Lbar / (1 - Lbar)`, `w_i <- w_i * beta^(1 - l_i)`, renormalized.
pub fn drucker_update(weights: &[f64], abs_errors: &[f64], loss: Loss) -> RoundOutcome {
    let max_error = abs_errors.iter().copied().fold(0.0, f64::max);
    if max_error == 0.0 {
        return RoundOutcome::Perfect;
    }
    let losses: Vec<f64> = abs_errors.iter().map(|e| loss.apply(e / max_error)).collect();
    let avg_loss: f64 = weights.iter().zip(&losses).map(|(w, l)| w * l).sum();
    if avg_loss >= 0.5 {
        return RoundOutcome::Rejected { avg_loss };
    }
    let beta = avg_loss / (1.0 - avg_loss);
    let mut new_weights: Vec<f64> = weights.iter().zip(&losses).map(|(w, l)| w * beta.powf(1.0 - l)).collect();
    let total: f64 = new_weights.iter().sum();
    for w in &mut new_weights {
        *w /= total;
    }
    RoundOutcome::Accepted(RoundUpdate { max_error, losses, avg_loss, beta, new_weights })
}

/// Draw `n` indices with replacement, index `i` with probability `weights[i]`.
pub fn weighted_bootstrap(weights: &[f64], n: usize, rng: &mut Rng) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cdf.partition_point(|&c| c <= u).min(weights.len() - 1)
        })
        .collect()
}

/// Per-round diagnostics kept alongside the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub avg_loss: f64,
    pub beta: f64,
    /// Sample weights after this round's update.
    pub weights_after: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub rounds: Vec<RoundRecord>,
    pub stopped_early: bool,
}

/// Learners and their confidences, before a target is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedBoost {
    pub learners: Vec<RegressionTree>,
    pub betas: Vec<f64>,
    pub trace: FitTrace,
}

impl FittedBoost {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if self.learners.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let preds: Vec<f64> = self.learners.iter().map(|t| t.predict(x)).collect();
        let weights: Vec<f64> = self.betas.iter().map(|b| (1.0 / b).ln()).collect();
        Ok(weighted_median(&preds, &weights))
    }
}

/// Fit AdaBoost.R2 with resampling draws from a ChaCha stream seeded by `seed`.
pub fn adaboost_fit(x: &[Vec<f64>], y: &[f64], params: &BoostParams, seed: u64) -> Result<FittedBoost> {
    let mut rng = rng_from_seed(seed);
    adaboost_fit_with(x, y, params, |w, n| weighted_bootstrap(w, n, &mut rng))
}

/// Same as [`adaboost_fit`] with a caller-supplied resampler `draw(weights, n)`.
pub fn adaboost_fit_with<F>(x: &[Vec<f64>], y: &[f64], params: &BoostParams, mut draw: F) -> Result<FittedBoost>
where
    F: FnMut(&[f64], usize) -> Vec<usize>,
{
    let n = y.len();
    if n == 0 || x.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if n < 2 {
        return Err(Error::InvalidArgument("boosting needs at least 2 samples".into()));
    }
    if params.rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be at least 1".into()));
    }

    let mut weights = vec![1.0 / n as f64; n];
    let mut learners = Vec::new();
    let mut betas = Vec::new();
    let mut trace = FitTrace { rounds: Vec::new(), stopped_early: false };

    for _ in 0..params.rounds {
        let sample = draw(&weights, n);
        let xs: Vec<Vec<f64>> = sample.iter().map(|&i| x[i].clone()).collect();
        let ys: Vec<f64> = sample.iter().map(|&i| y[i]).collect();
        let ws = vec![1.0 / n as f64; n];
        let tree = tree_fit(&xs, &ys, &ws, params.max_depth, params.min_leaf)?;

        let errors: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| (tree.predict(xi) - yi).abs()).collect();
        match drucker_update(&weights, &errors, params.loss) {
            RoundOutcome::Perfect => {
                learners.push(tree);
                betas.push(BETA_FLOOR);
                trace.rounds.push(RoundRecord { avg_loss: 0.0, beta: BETA_FLOOR, weights_after: weights.clone() });
                trace.stopped_early = learners.len() < params.rounds;
                break;
            }
            RoundOutcome::Rejected { avg_loss } => {
                if learners.is_empty() {
                    return Err(Error::NoLearnerAccepted { avg_loss });
                }
                trace.stopped_early = true;
                break;
            }
            RoundOutcome::Accepted(update) => {
                learners.push(tree);
                betas.push(update.beta);
                weights = update.new_weights;
                trace.rounds.push(RoundRecord { avg_loss: update.avg_loss, beta: update.beta, weights_after: weights.clone() });
            }
        }
    }
    Ok(FittedBoost { learners, betas, trace })
}

/// Weighted median: sort predictions ascending (stable), return the first
/// whose cumulative weight reaches half the total. An exact half tie
/// resolves to the lower prediction.
pub fn weighted_median(predictions: &[f64], weights: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[a].total_cmp(&predictions[b]).then(a.cmp(&b)));
    let total: f64 = weights.iter().sum();
    let mut cum = 0.0;
    for &j in &order {
        cum += weights[j];
        if 2.0 * cum >= total {
            return predictions[j];
        }
    }
    predictions[*order.last().expect("non-empty predictions")]
}
