use std::sync::Arc;

use super::layers::{fourier_features, rbf_expand};
use super::HybridNetConfig;
use crate::graph::{FeatureMatrix, MultiViewGraph};
use crate::tensor::{Real, Tensor};
use crate::{Error, Result};

/// Model-ready constants for one design: feature tensors, the coordinate
/// encoding, radial-basis edge features and edge index arrays.
///
/// Topology edges gain one self-edge per node here.
#[derive(Debug, Clone)]
pub struct PreparedGraph<T> {
    pub n: usize,
    pub x_t: Tensor<T>,
    pub x_g: Tensor<T>,
    pub pe_input: Tensor<T>,
    /// Radial basis of each undirected geometry edge.
    pub rbf: Tensor<T>,
    /// For each directed geometry edge, its row in `rbf`.
    pub geo_pair: Arc<[usize]>,
    pub topo_src: Arc<[usize]>,
    pub topo_dst: Arc<[usize]>,
    pub geo_src: Arc<[usize]>,
    pub geo_dst: Arc<[usize]>,
}

fn matrix<T: Real>(m: &FeatureMatrix, n: usize, cols: usize, what: &str) -> Result<Tensor<T>> {
    if m.rows != n || m.cols != cols {
        return Err(Error::shape(
            "prepare",
            format!("{what} is {}x{}, expected {n}x{cols}", m.rows, m.cols),
        ));
    }
    Tensor::from_f64(vec![n, cols], &m.data)
}

impl<T: Real> PreparedGraph<T> {
    pub fn new(g: &MultiViewGraph, config: &HybridNetConfig) -> Result<Self> {
        config.validate()?;
        let n = g.n_nodes();
        if g.topo.n_nodes != n || g.geo.n_nodes != n {
            return Err(Error::shape(
                "prepare",
                format!(
                    "views have {} and {} nodes, coords {n}",
                    g.topo.n_nodes, g.geo.n_nodes
                ),
            ));
        }
        let check = |edges: &[(usize, usize)]| match edges.iter().find(|&&(a, b)| a >= n || b >= n)
        {
            Some(&(a, b)) => Err(Error::IndexOutOfRange {
                op: "prepare",
                index: a.max(b),
                bound: n,
            }),
            None => Ok(()),
        };
        check(&g.topo.edges)?;
        check(&g.geo.edges)?;

        let mut topo_src: Vec<usize> = g.topo.sources();
        let mut topo_dst: Vec<usize> = g.topo.targets();
        topo_src.extend(0..n);
        topo_dst.extend(0..n);

        let dist = g
            .geo
            .edge_attr
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("geometry graph has no distances".into()))?;
        if dist.len() != g.geo.edges.len() {
            return Err(Error::shape(
                "prepare",
                format!("{} distances for {} edges", dist.len(), g.geo.edges.len()),
            ));
        }
        // Both directions of an edge share one filter row.
        let mut pair_of = std::collections::HashMap::new();
        let mut pair_dist = Vec::new();
        let geo_pair: Vec<usize> = g
            .geo
            .edges
            .iter()
            .zip(dist)
            .map(|(&(a, b), &d)| {
                *pair_of.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    pair_dist.push(d);
                    pair_dist.len() - 1
                })
            })
            .collect();
        let k = config.rbf_k;
        let rbf = Tensor::from_f64(
            vec![pair_dist.len(), k],
            &rbf_expand(&pair_dist, k, config.cutoff),
        )?;
        let pe = fourier_features(&g.coords, config.fourier_bands, config.pe_fourier)?;
        Ok(PreparedGraph {
            n,
            x_t: matrix(&g.x_t, n, config.topo_features, "x_t")?,
            x_g: matrix(&g.x_g, n, config.geo_features, "x_g")?,
            pe_input: Tensor::from_f64(vec![n, config.pe_input_width()], &pe)?,
            rbf,
            geo_pair: geo_pair.into(),
            topo_src: topo_src.into(),
            topo_dst: topo_dst.into(),
            geo_src: g.geo.sources().into(),
            geo_dst: g.geo.targets().into(),
        })
    }
}
