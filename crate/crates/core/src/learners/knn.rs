use serde::{Deserialize, Serialize};

use super::argmax;

/// k-nearest neighbours over precomputed distances. Prediction input is one
/// row of distances from the query to every stored reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    /// Class index of each reference point.
    pub reference_labels: Vec<usize>,
}

impl KnnModel {
    /// Uniform vote among the `k` closest references. Equal distances resolve
    /// to the lower reference index, equal votes to the lower class index.
    pub fn predict(&self, n_classes: usize, distances: &[f64]) -> usize {
        let mut order: Vec<usize> = (0..distances.len()).collect();
        order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
        let mut votes = vec![0.0; n_classes];
        for &i in order.iter().take(self.k.min(distances.len())) {
            votes[self.reference_labels[i]] += 1.0;
        }
        argmax(&votes)
    }
}
