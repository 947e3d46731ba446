use serde::{Deserialize, Serialize};

use super::FeaturizeError;
use crate::data::GraphDataset;

/// Per-column mean and population standard deviation. A column whose
/// deviation is below `1e-12 * max(1, |mean|)` counts as constant: its std
/// is recorded as 0 and its values are left untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub node: ColumnStats,
    pub edge: ColumnStats,
}

fn column_stats<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, width: usize) -> ColumnStats {
    let count = rows.clone().count();
    let mut mean = vec![0.0; width];
    let mut std = vec![0.0; width];
    if count == 0 {
        return ColumnStats { mean, std };
    }
    for r in rows.clone() {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    for r in rows {
        for c in 0..width {
            std[c] += (r[c] - mean[c]) * (r[c] - mean[c]);
        }
    }
    for c in 0..width {
        std[c] = (std[c] / count as f64).sqrt();
        if std[c] <= 1e-12 * mean[c].abs().max(1.0) {
            std[c] = 0.0;
        }
    }
    ColumnStats { mean, std }
}

fn apply_columns(values: &mut [f64], stats: &ColumnStats) {
    for (c, v) in values.iter_mut().enumerate() {
        if stats.std[c] > 0.0 {
            *v = (*v - stats.mean[c]) / stats.std[c];
        }
    }
}

/// Applies previously computed statistics.
pub fn apply_stats(ds: &GraphDataset, stats: &NormStats) -> Result<GraphDataset, FeaturizeError> {
    if stats.node.mean.len() != ds.dims.m || stats.edge.mean.len() != ds.dims.p {
        return Err(FeaturizeError::Invalid("statistics do not match the dataset dimensions".into()));
    }
    let mut out = ds.clone();
    for g in &mut out.graphs {
        g.nodes.iter_mut().for_each(|n| apply_columns(&mut n.features, &stats.node));
        g.edges.iter_mut().for_each(|e| apply_columns(&mut e.features, &stats.edge));
    }
    Ok(out)
}

/// Z-scores node and edge feature columns using statistics of `train` only,
/// then applies the same statistics to every dataset in `others`.
pub fn normalize_features(
    train: &GraphDataset,
    others: &[&GraphDataset],
) -> Result<(GraphDataset, Vec<GraphDataset>, NormStats), FeaturizeError> {
    if train.is_empty() {
        return Err(FeaturizeError::EmptyInput("training set is empty".into()));
    }
    let nodes = train.graphs.iter().flat_map(|g| g.nodes.iter().map(|n| n.features.as_slice()));
    let edges = train.graphs.iter().flat_map(|g| g.edges.iter().map(|e| e.features.as_slice()));
    let stats = NormStats { node: column_stats(nodes, train.dims.m), edge: column_stats(edges, train.dims.p) };
    let rest = others.iter().map(|d| apply_stats(d, &stats)).collect::<Result<Vec<_>, _>>()?;
    Ok((apply_stats(train, &stats)?, rest, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{gen_graph_dataset, GraphGenConfig};

    fn data() -> GraphDataset {
        let mut ds = gen_graph_dataset(&GraphGenConfig { n: 10, k: 6, ..Default::default() }, 2).unwrap();
        for g in &mut ds.graphs {
            g.nodes.iter_mut().for_each(|n| n.features[1] = 0.1);
        }
        ds
    }

    #[test]
    fn train_columns_are_standardized() {
        let (train, _, stats) = normalize_features(&data(), &[]).unwrap();
        assert_eq!(stats.node.std[1], 0.0);
        let vals = |c: usize| -> Vec<f64> { train.graphs.iter().flat_map(|g| g.nodes.iter().map(move |n| n.features[c])).collect() };
        assert!(vals(1).iter().all(|v| *v == 0.1));
        for c in [0, 2, 3] {
            let v = vals(c);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64).sqrt();
            assert!(mean.abs() < 1e-9 && (std - 1.0).abs() < 1e-9, "column {c}: {mean} {std}");
        }
    }

    #[test]
    fn normalizing_twice_is_idempotent() {
        let (once, _, _) = normalize_features(&data(), &[]).unwrap();
        let (twice, _, _) = normalize_features(&once, &[]).unwrap();
        for (a, b) in once.graphs.iter().zip(&twice.graphs) {
            for (x, y) in a.nodes.iter().zip(&b.nodes) {
                for (u, v) in x.features.iter().zip(&y.features) {
                    assert!((u - v).abs() < 1e-9);
                }
            }
            for (x, y) in a.edges.iter().zip(&b.edges) {
                for (u, v) in x.features.iter().zip(&y.features) {
                    assert!((u - v).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn empty_train_is_rejected() {
        let ds = data();
        assert!(normalize_features(&ds.with_graphs(vec![]), &[&ds]).is_err());
    }
}
