use serde::{Deserialize, Serialize};

use crate::Scalar;

use super::columns::Columns;
use super::split::split_indices;
use super::tree::{grow, RegressionTree};
use super::{FeatureRow, GbrtError, GbrtParams};

/// Boosted ensemble. Only the first `best_round` trees contribute to
/// predictions; later trees are kept for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GbrtModel<T> {
    pub base_score: T,
    pub learning_rate: T,
    pub trees: Vec<RegressionTree<T>>,
    pub trained_rounds: usize,
    pub best_round: usize,
    pub feature_dim: usize,
    /// Update-set RMSE after each completed round.
    pub update_rmse: Vec<T>,
    /// Validation RMSE after each completed round.
    pub validation_rmse: Vec<T>,
    pub n_update: usize,
    pub n_validation: usize,
}

impl<T: Scalar> GbrtModel<T> {
    /// Ensemble without trees; predicts `base_score` everywhere.
    pub fn constant(base_score: T, feature_dim: usize) -> Self {
        GbrtModel {
            base_score,
            learning_rate: T::one(),
            trees: Vec::new(),
            trained_rounds: 0,
            best_round: 0,
            feature_dim,
            update_rmse: Vec::new(),
            validation_rmse: Vec::new(),
            n_update: 0,
            n_validation: 0,
        }
    }

    pub fn predict<R: FeatureRow<T> + ?Sized>(&self, x: &R) -> Result<T, GbrtError> {
        if x.dim() != self.feature_dim {
            return Err(GbrtError::DimensionMismatch {
                expected: self.feature_dim,
                got: x.dim(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked<R: FeatureRow<T> + ?Sized>(&self, x: &R) -> T {
        let sum = self.trees[..self.best_round]
            .iter()
            .fold(T::zero(), |acc, tree| acc + tree.predict(x));
        self.base_score + self.learning_rate * sum
    }

    /// Validation RMSE of the returned ensemble.
    pub fn best_validation_rmse(&self) -> Option<T> {
        self.best_round.checked_sub(1).map(|i| self.validation_rmse[i])
    }
}

pub fn predict<T: Scalar, R: FeatureRow<T> + ?Sized>(model: &GbrtModel<T>, x: &R) -> Result<T, GbrtError> {
    model.predict(x)
}

fn rmse<T: Scalar>(labels: &[T], base: T, lr: T, sums: &[T]) -> T {
    let sq = labels.iter().zip(sums).fold(T::zero(), |acc, (&y, &s)| {
        let e = y - (base + lr * s);
        acc + e * e
    });
    (sq / T::from_usize_lossy(labels.len())).sqrt()
}

/// Boosts squared-error trees on a seeded 8:2-style update/validation split
/// and stops after `early_stop_rounds` rounds without validation improvement.
pub fn train<T: Scalar, R: FeatureRow<T>>(
    rows: &[R],
    labels: &[T],
    params: &GbrtParams,
) -> Result<GbrtModel<T>, GbrtError> {
    params.validate()?;
    if rows.len() != labels.len() {
        return Err(GbrtError::LengthMismatch {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    let (update, validation) = split_indices(rows.len(), params.split_fraction, params.rng_seed)?;
    let dim = rows[0].dim();
    if let Some(bad) = rows.iter().find(|r| r.dim() != dim) {
        return Err(GbrtError::DimensionMismatch {
            expected: dim,
            got: bad.dim(),
        });
    }

    let y_upd: Vec<T> = update.iter().map(|&i| labels[i]).collect();
    let y_val: Vec<T> = validation.iter().map(|&i| labels[i]).collect();
    let base = y_upd.iter().fold(T::zero(), |a, &y| a + y) / T::from_usize_lossy(y_upd.len());
    let lr = T::from_f64_lossy(params.learning_rate);
    let columns = Columns::build(rows, &update);

    // Running sums of tree outputs, in the same order `predict` adds them.
    let mut sum_upd = vec![T::zero(); update.len()];
    let mut sum_val = vec![T::zero(); validation.len()];
    let mut resid: Vec<T> = y_upd.iter().map(|&y| y - base).collect();

    let mut model = GbrtModel {
        base_score: base,
        learning_rate: lr,
        trees: Vec::new(),
        trained_rounds: 0,
        best_round: 0,
        feature_dim: dim,
        update_rmse: Vec::new(),
        validation_rmse: Vec::new(),
        n_update: update.len(),
        n_validation: validation.len(),
    };
    let mut best: Option<(usize, T)> = None;
    for round in 1..=params.num_rounds {
        let tree = grow(&columns, &resid, params);
        if round > 1 && tree.is_stump_without_effect(&resid) {
            // Converged: no split clears the gain floor and the shift is
            // rounding noise. Every later round would repeat this tree.
            break;
        }
        for (k, &i) in update.iter().enumerate() {
            sum_upd[k] = sum_upd[k] + tree.predict(&rows[i]);
            resid[k] = y_upd[k] - (base + lr * sum_upd[k]);
        }
        for (k, &i) in validation.iter().enumerate() {
            sum_val[k] = sum_val[k] + tree.predict(&rows[i]);
        }
        model.trees.push(tree);
        model.trained_rounds = round;
        model.update_rmse.push(rmse(&y_upd, base, lr, &sum_upd));
        let val = rmse(&y_val, base, lr, &sum_val);
        model.validation_rmse.push(val);
        if best.is_none_or(|(_, b)| val < b) {
            best = Some((round, val));
        }
        let (best_round, _) = best.unwrap();
        model.best_round = best_round;
        if round - best_round >= params.early_stop_rounds {
            break;
        }
    }
    Ok(model)
}
