//! Agreement between a clustering and known classes.

use alloc::vec;
use alloc::vec::Vec;

/// `counts[class][cluster]`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(truth: &[usize], predicted: &[usize]) -> Self {
        assert_eq!(truth.len(), predicted.len(), "label vectors differ in length");
        let classes = truth.iter().max().map_or(0, |m| m + 1);
        let clusters = predicted.iter().max().map_or(0, |m| m + 1);
        Self::with_dims(truth, predicted, classes, clusters)
    }

    pub fn with_dims(truth: &[usize], predicted: &[usize], classes: usize, clusters: usize) -> Self {
        let mut counts = vec![vec![0; clusters]; classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            counts[t][p] += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    fn cluster_sizes(&self) -> Vec<usize> {
        let k = self.counts.first().map_or(0, Vec::len);
        (0..k).map(|c| self.counts.iter().map(|r| r[c]).sum()).collect()
    }

    /// Share of points whose cluster's majority class equals their own.
    pub fn purity(&self) -> f64 {
        let k = self.counts.first().map_or(0, Vec::len);
        let majority: usize = (0..k)
            .map(|c| self.counts.iter().map(|r| r[c]).max().unwrap_or(0))
            .sum();
        majority as f64 / self.total().max(1) as f64
    }

    /// Cluster holding the most members of `class`.
    pub fn plurality_cluster(&self, class: usize) -> usize {
        crate::numeric::argmax(&self.counts[class].iter().map(|&c| c as f64).collect::<Vec<_>>())
    }

    /// Share of `class` that lands in its plurality cluster.
    pub fn class_recall(&self, class: usize) -> f64 {
        let row = &self.counts[class];
        let total: usize = row.iter().sum();
        if total == 0 {
            return 0.0;
        }
        row[self.plurality_cluster(class)] as f64 / total as f64
    }

    /// Share of the plurality cluster of `class` that belongs to `class`.
    pub fn plurality_precision(&self, class: usize) -> f64 {
        let c = self.plurality_cluster(class);
        let size = self.cluster_sizes()[c];
        if size == 0 {
            return 0.0;
        }
        self.counts[class][c] as f64 / size as f64
    }

    /// The smaller of [`class_recall`](Self::class_recall) and
    /// [`plurality_precision`](Self::plurality_precision).
    pub fn class_purity(&self, class: usize) -> f64 {
        self.class_recall(class).min(self.plurality_precision(class))
    }
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Hubert-Arabie adjusted Rand index.
pub fn adjusted_rand_index(truth: &[usize], predicted: &[usize]) -> f64 {
    let cm = ConfusionMatrix::new(truth, predicted);
    let n = cm.total();
    let index: f64 = cm.counts.iter().flatten().map(|&c| choose2(c)).sum();
    let rows: f64 = cm.counts.iter().map(|r| choose2(r.iter().sum())).sum();
    let cols: f64 = cm.cluster_sizes().into_iter().map(choose2).sum();
    let total = choose2(n);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
