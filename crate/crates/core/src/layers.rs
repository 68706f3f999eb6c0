//! Depth layers: half-open depth intervals `[d_l, d_{l+1})` whose members
//! interact physically with each other and with nobody else.

use std::collections::BTreeMap;

use thiserror::Error;

/// Upper bound on the number of layers derived from the body count.
pub const MAX_LAYERS: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum LayerError {
    #[error("layer count override must be at least 1, got {0}")]
    InvalidOverride(usize),
}

/// Layer count for `n_dynamic` moving bodies: `clamp(ceil(n / 2), 1, 8)`,
/// unless an explicit override is given.
pub fn compute_layer_count(n_dynamic: usize, layer_override: Option<usize>) -> Result<usize, LayerError> {
    match layer_override {
        Some(0) => Err(LayerError::InvalidOverride(0)),
        Some(l) => Ok(l),
        None => Ok(n_dynamic.div_ceil(2).clamp(1, MAX_LAYERS)),
    }
}

/// Splits the depth axis into at most `layers` intervals by 1-D k-means on
/// the given depths. Cluster edges sit at midpoints between adjacent
/// cluster means; the outermost boundaries are ±∞.
///
/// The requested count collapses to the number of distinct depths.
pub fn partition_depths(depths: &[f64], layers: usize) -> Vec<f64> {
    let mut distinct: Vec<f64> = depths.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let k = layers.min(distinct.len()).max(1);
    let mut boundaries = vec![f64::NEG_INFINITY];
    if k > 1 {
        let means = kmeans_1d(depths, &distinct, k);
        for pair in means.windows(2) {
            let edge = 0.5 * (pair[0] + pair[1]);
            if edge > *boundaries.last().expect("nonempty") {
                boundaries.push(edge);
            }
        }
    }
    boundaries.push(f64::INFINITY);
    boundaries
}

/// Optimal 1-D k-means by dynamic programming over the sorted distinct
/// depths (weighted by multiplicity). Contiguous clusters are optimal in one
/// dimension, so this finds the global minimum of the within-cluster sum of
/// squares. Returns the ascending cluster means.
fn kmeans_1d(depths: &[f64], distinct: &[f64], k: usize) -> Vec<f64> {
    let m = distinct.len();
    let mut weight = vec![0.0; m];
    for &d in depths {
        let i = distinct.partition_point(|&x| x < d);
        weight[i] += 1.0;
    }
    // Prefix sums of w, w·x and w·x² for O(1) cluster costs.
    let mut w = vec![0.0; m + 1];
    let mut wx = vec![0.0; m + 1];
    let mut wxx = vec![0.0; m + 1];
    for i in 0..m {
        w[i + 1] = w[i] + weight[i];
        wx[i + 1] = wx[i] + weight[i] * distinct[i];
        wxx[i + 1] = wxx[i] + weight[i] * distinct[i] * distinct[i];
    }
    let cost = |i: usize, j: usize| {
        let n = w[j] - w[i];
        let s = wx[j] - wx[i];
        (wxx[j] - wxx[i] - s * s / n).max(0.0)
    };

    // best[c][j]: cost of splitting the first j values into c clusters.
    let mut best = vec![vec![f64::INFINITY; m + 1]; k + 1];
    let mut cut = vec![vec![0usize; m + 1]; k + 1];
    best[0][0] = 0.0;
    for c in 1..=k {
        for j in c..=m {
            for i in (c - 1)..j {
                let v = best[c - 1][i] + cost(i, j);
                // Strict comparison keeps the earliest cut on ties.
                if v < best[c][j] {
                    best[c][j] = v;
                    cut[c][j] = i;
                }
            }
        }
    }
    let mut means = vec![0.0; k];
    let mut j = m;
    for c in (1..=k).rev() {
        let i = cut[c][j];
        means[c - 1] = (wx[j] - wx[i]) / (w[j] - w[i]);
        j = i;
    }
    means
}

/// The unique `l` with `boundaries[l] <= depth < boundaries[l + 1]`.
pub fn assign_layer(depth: f64, boundaries: &[f64]) -> usize {
    let last = boundaries.len().saturating_sub(2);
    // Number of finite interior boundaries at or below `depth`.
    boundaries[1..boundaries.len() - 1]
        .partition_point(|&b| b <= depth)
        .min(last)
}

/// Layer boundaries plus the layer of every body.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSet {
    boundaries: Vec<f64>,
    membership: BTreeMap<String, usize>,
    pinned: BTreeMap<String, usize>,
}

impl LayerSet {
    /// Builds the partition from the dynamic bodies' depths and assigns every
    /// body. Static bodies keep their initial layer forever.
    pub fn new<'a>(
        dynamic: impl IntoIterator<Item = (&'a str, f64)>,
        statics: impl IntoIterator<Item = (&'a str, f64)>,
        layer_count: usize,
    ) -> LayerSet {
        let dynamic: Vec<(&str, f64)> = dynamic.into_iter().collect();
        let depths: Vec<f64> = dynamic.iter().map(|&(_, d)| d).collect();
        let boundaries = partition_depths(&depths, layer_count);
        let membership = dynamic
            .iter()
            .map(|&(id, d)| (id.to_string(), assign_layer(d, &boundaries)))
            .collect();
        let pinned = statics
            .into_iter()
            .map(|(id, d)| (id.to_string(), assign_layer(d, &boundaries)))
            .collect();
        LayerSet {
            boundaries,
            membership,
            pinned,
        }
    }

    pub fn from_boundaries(boundaries: Vec<f64>) -> LayerSet {
        assert!(
            boundaries.len() >= 2 && boundaries.windows(2).all(|w| w[0] < w[1]),
            "layer boundaries must be strictly increasing"
        );
        LayerSet {
            boundaries,
            membership: BTreeMap::new(),
            pinned: BTreeMap::new(),
        }
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn layer_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn layer_of(&self, id: &str) -> Option<usize> {
        self.membership
            .get(id)
            .or_else(|| self.pinned.get(id))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.membership.len() + self.pinned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every body's layer, sorted by id.
    pub fn snapshot(&self) -> BTreeMap<String, usize> {
        let mut all = self.membership.clone();
        all.extend(self.pinned.iter().map(|(k, v)| (k.clone(), *v)));
        all
    }

    /// Recomputes dynamic membership from current absolute depths. Bodies not
    /// listed keep their previous layer; static bodies never move.
    pub fn reassign<'a>(&self, depths: impl IntoIterator<Item = (&'a str, f64)>) -> LayerSet {
        let mut next = self.clone();
        for (id, d) in depths {
            if let Some(slot) = next.membership.get_mut(id) {
                *slot = assign_layer(d, &next.boundaries);
            }
        }
        next
    }
}
