use serde::{Deserialize, Serialize};

use super::SeqLearnError;
use crate::data::EventSequence;

/// Relative pivot floor for the normal-equation solve: a remaining pivot at
/// or below `PIVOT_TOLERANCE * max diagonal` marks its column as dependent.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// `y_t = intercept + sum_k coefficients[k] * y_{t-1-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArParams {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl ArParams {
    /// One-step prediction from the most recent `order` outcomes, newest last.
    pub fn predict(&self, history: &[f64]) -> Option<f64> {
        if history.len() < self.order {
            return None;
        }
        let tail = &history[history.len() - self.order..];
        Some(self.intercept + self.coefficients.iter().zip(tail.iter().rev()).map(|(c, y)| c * y).sum::<f64>())
    }
}

fn outcomes(seq: &EventSequence, k: usize) -> Result<Vec<f64>, SeqLearnError> {
    if seq.q != 1 {
        return Err(SeqLearnError::Shape(format!("sequence {k} has q = {}, AR needs q = 1", seq.q)));
    }
    seq.events
        .iter()
        .enumerate()
        .map(|(t, e)| match e.y.as_deref() {
            Some([y]) => Ok(*y),
            _ => Err(SeqLearnError::Shape(format!("sequence {k} step {t} has no scalar outcome"))),
        })
        .collect()
}

/// Pooled ordinary least squares of `y_t` on `[1, y_{t-1}, .., y_{t-order}]`.
///
/// The normal equations are factored by Cholesky with symmetric diagonal
/// pivoting. Columns whose remaining pivot falls below [`PIVOT_TOLERANCE`]
/// (relative to the largest diagonal entry) are linearly dependent on the
/// ones already chosen and get coefficient zero, which still yields a least
/// squares solution. Fewer pooled rows than parameters is a rank error.
pub fn fit_ar(sequences: &[EventSequence], order: usize) -> Result<ArParams, SeqLearnError> {
    if order == 0 {
        return Err(SeqLearnError::Argument("order must be at least 1".into()));
    }
    let p = order + 1;
    let mut ata = vec![0.0; p * p];
    let mut aty = vec![0.0; p];
    let mut rows = 0usize;
    let mut row = vec![0.0; p];
    for (k, seq) in sequences.iter().enumerate() {
        let ys = outcomes(seq, k)?;
        if ys.len() <= order {
            return Err(SeqLearnError::Shape(format!(
                "sequence {k} has {} steps, order {order} needs more",
                ys.len()
            )));
        }
        for t in order..ys.len() {
            row[0] = 1.0;
            for lag in 1..=order {
                row[lag] = ys[t - lag];
            }
            for i in 0..p {
                aty[i] += row[i] * ys[t];
                for j in 0..p {
                    ata[i * p + j] += row[i] * row[j];
                }
            }
            rows += 1;
        }
    }
    if rows < p {
        return Err(SeqLearnError::Rank(format!("{rows} pooled rows cannot determine {p} parameters")));
    }
    let beta = solve_pivoted(ata, aty, p);
    Ok(ArParams { order, intercept: beta[0], coefficients: beta[1..].to_vec() })
}

/// Least-squares solution of the symmetric positive semi-definite system
/// `a x = b` via diagonally pivoted Cholesky; dependent columns get zero.
fn solve_pivoted(mut a: Vec<f64>, b: Vec<f64>, p: usize) -> Vec<f64> {
    let mut perm: Vec<usize> = (0..p).collect();
    let scale = (0..p).map(|i| a[i * p + i]).fold(0.0, f64::max);
    let tol = PIVOT_TOLERANCE * scale;
    let mut rank = 0;
    for k in 0..p {
        let best = (k..p).max_by(|&i, &j| a[i * p + i].total_cmp(&a[j * p + j])).expect("non-empty range");
        if a[best * p + best] <= tol {
            break;
        }
        if best != k {
            perm.swap(k, best);
            for c in 0..p {
                a.swap(k * p + c, best * p + c);
            }
            for r in 0..p {
                a.swap(r * p + k, r * p + best);
            }
        }
        let pivot = a[k * p + k].sqrt();
        a[k * p + k] = pivot;
        for i in k + 1..p {
            a[i * p + k] /= pivot;
        }
        for i in k + 1..p {
            for j in k + 1..=i {
                let v = a[i * p + j] - a[i * p + k] * a[j * p + k];
                a[i * p + j] = v;
                a[j * p + i] = v;
            }
        }
        rank += 1;
    }
    // forward then backward substitution on the leading rank x rank block
    let mut z: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
    for i in 0..rank {
        for j in 0..i {
            z[i] -= a[i * p + j] * z[j];
        }
        z[i] /= a[i * p + i];
    }
    for i in (0..rank).rev() {
        for j in i + 1..rank {
            z[i] -= a[j * p + i] * z[j];
        }
        z[i] /= a[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in 0..rank {
        x[perm[i]] = z[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Event;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, Normal};

    fn scalar_sequence(ys: &[f64]) -> EventSequence {
        let mut s = EventSequence::new(1, 1, true);
        for (t, y) in ys.iter().enumerate() {
            s.events.push(Event { t: t as f64, x: vec![0.0], y: Some(vec![*y]), generated: false });
        }
        s
    }

    #[test]
    fn noiseless_first_order_is_exact() {
        let ys: Vec<f64> = (0..30).map(|t| 2.0 * 0.5f64.powi(t)).collect();
        let fit = fit_ar(&[scalar_sequence(&ys)], 1).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-9);
        assert!(fit.intercept.abs() < 1e-9);
    }

    #[test]
    fn constant_sequence_is_reproduced() {
        for c in [0.0, 0.3, 4.0] {
            let fit = fit_ar(&[scalar_sequence(&[c; 12])], 1).unwrap();
            assert!((fit.predict(&[c]).unwrap() - c).abs() < 1e-9, "c = {c}: {fit:?}");
        }
    }

    #[test]
    fn noisy_second_order_recovers_coefficients() {
        let mut rng = stream_rng(5, 0);
        let noise = Normal::new(0.0, 1e-2).unwrap();
        let mut ys = vec![0.0, 0.0];
        for t in 2..10_000 {
            let y = 0.6 * ys[t - 1] - 0.2 * ys[t - 2] + noise.sample(&mut rng);
            ys.push(y);
        }
        let fit = fit_ar(&[scalar_sequence(&ys)], 2).unwrap();
        assert!((fit.coefficients[0] - 0.6).abs() < 0.02, "{fit:?}");
        assert!((fit.coefficients[1] + 0.2).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn pooling_uses_every_sequence() {
        let a = scalar_sequence(&[1.0, 0.5, 0.25]);
        let b = scalar_sequence(&[-4.0, -2.0, -1.0, -0.5]);
        let fit = fit_ar(&[a, b], 1).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
    }

    #[test]
    fn too_few_rows_is_a_rank_error() {
        let s = scalar_sequence(&[1.0, 2.0, 3.0]);
        assert!(matches!(fit_ar(&[s], 2), Err(SeqLearnError::Rank(_))));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(fit_ar(&[scalar_sequence(&[1.0, 2.0])], 0), Err(SeqLearnError::Argument(_))));
        assert!(matches!(fit_ar(&[scalar_sequence(&[1.0])], 1), Err(SeqLearnError::Shape(_))));
        let mut s = scalar_sequence(&[1.0, 2.0, 3.0]);
        s.events[1].y = None;
        assert!(matches!(fit_ar(&[s], 1), Err(SeqLearnError::Shape(_))));
    }
}
