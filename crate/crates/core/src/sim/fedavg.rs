use alloc::vec;
use alloc::vec::Vec;

use super::SimError;

/// One local model contribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub client_id: usize,
    pub weights: Vec<f64>,
    pub n_samples: usize,
}

/// Sample-weighted mean `sum (n_k / N) w_k`, summed in ascending client id
/// order whatever the input order.
pub fn fedavg_aggregate(updates: &[Update]) -> Result<Vec<f64>, SimError> {
    let first = updates.first().ok_or(SimError::EmptyUpdate)?;
    let d = first.weights.len();
    if let Some(bad) = updates.iter().find(|u| u.weights.len() != d) {
        return Err(SimError::DimensionMismatch { expected: d, found: bad.weights.len() });
    }
    let total: usize = updates.iter().map(|u| u.n_samples).sum();
    if total == 0 {
        return Err(SimError::EmptyUpdate);
    }
    let mut order: Vec<&Update> = updates.iter().collect();
    order.sort_by_key(|u| u.client_id);
    let mut out = vec![0.0; d];
    for u in order {
        let share = u.n_samples as f64 / total as f64;
        for (o, w) in out.iter_mut().zip(&u.weights) {
            *o += share * w;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn update(id: usize, w: &[f64], n: usize) -> Update {
        Update { client_id: id, weights: w.to_vec(), n_samples: n }
    }

    #[test]
    fn single_update_is_identity() {
        let w = [0.1, -3.5, 7.25];
        assert_eq!(fedavg_aggregate(&[update(4, &w, 17)]).unwrap(), w);
    }

    #[test]
    fn opposite_updates_cancel() {
        let out = fedavg_aggregate(&[update(0, &[1.5, -2.0], 10), update(1, &[-1.5, 2.0], 10)]).unwrap();
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn weighting_and_order_independence() {
        let a = [update(2, &[3.0], 30), update(0, &[0.0], 10)];
        let b = [update(0, &[0.0], 10), update(2, &[3.0], 30)];
        assert_eq!(fedavg_aggregate(&a).unwrap(), [2.25]);
        assert_eq!(fedavg_aggregate(&a).unwrap(), fedavg_aggregate(&b).unwrap());
    }

    #[test]
    fn errors() {
        assert_eq!(fedavg_aggregate(&[]), Err(SimError::EmptyUpdate));
        assert!(matches!(
            fedavg_aggregate(&[update(0, &[1.0], 1), update(1, &[1.0, 2.0], 1)]),
            Err(SimError::DimensionMismatch { .. })
        ));
    }
}
