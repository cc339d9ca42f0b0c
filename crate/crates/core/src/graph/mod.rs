//! The two graph views of a placed netlist and their node features.
//!
//! The topology view links cells that share a net; the geometry view links
//! cells whose centers are Delaunay neighbors. The two are built from
//! disjoint inputs: nets only for the former, coordinates only for the latter.

pub mod delaunay;
mod features;

pub use delaunay::{delaunay_triangulate, triangle_edges, Triangle};
pub use features::{
    density_grids, topology_node_features, DensityGrids, TOPO_FEATURES, TOPO_FEATURE_NAMES,
};

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{GridSpec, Netlist, Placement};
use crate::{Error, Result};

/// Feature width of the geometry view: topology features plus two coordinates.
pub const GEO_FEATURES: usize = TOPO_FEATURES + 2;

/// Default net size above which clique expansion falls back to a star.
pub const DEFAULT_CLIQUE_CAP: usize = 16;

/// Directed graph over `n_nodes` with an optional scalar per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub edge_attr: Option<Vec<f64>>,
}

impl Graph {
    pub fn sources(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.0).collect()
    }

    pub fn targets(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.1).collect()
    }

    /// Debug text: one `edge src dst [dist]` line per edge.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            match &self.edge_attr {
                Some(attr) => writeln!(s, "edge {a} {b} {}", attr[k]),
                None => writeln!(s, "edge {a} {b}"),
            }
            .expect("write to string");
        }
        s
    }
}

/// Dense row-major matrix of node features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows<const F: usize>(rows: &[[f64; F]]) -> Self {
        FeatureMatrix {
            rows: rows.len(),
            cols: F,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Text export: `mat N F` then one row per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("mat {} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Both views of one design, ready for the model.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewGraph {
    pub topo: Graph,
    pub x_t: FeatureMatrix,
    /// Delaunay graph; `edge_attr` holds center distances in layout units.
    pub geo: Graph,
    pub x_g: FeatureMatrix,
    /// Cell centers normalized by the die to `[0, 1]^2`.
    pub coords: Vec<(f64, f64)>,
}

impl MultiViewGraph {
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    /// Relabels node `i` as `perm[i]` in every component.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n_nodes();
        assert_eq!(perm.len(), n, "permutation length");
        let move_rows = |m: &FeatureMatrix| {
            let mut data = vec![0.0; m.data.len()];
            for (old, &new) in perm.iter().enumerate() {
                data[new * m.cols..(new + 1) * m.cols].copy_from_slice(m.row(old));
            }
            FeatureMatrix { data, ..*m }
        };
        let relabel = |g: &Graph| Graph {
            n_nodes: g.n_nodes,
            edges: g.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect(),
            edge_attr: g.edge_attr.clone(),
        };
        let mut coords = vec![(0.0, 0.0); n];
        for (old, &new) in perm.iter().enumerate() {
            coords[new] = self.coords[old];
        }
        MultiViewGraph {
            topo: relabel(&self.topo),
            x_t: move_rows(&self.x_t),
            geo: relabel(&self.geo),
            x_g: move_rows(&self.x_g),
            coords,
        }
    }
}

/// Topology edges from net membership.
///
/// Nets with at most `clique_cap` pins become cliques; larger nets become a
/// star centered on the first-listed cell. Both directions are emitted and
/// the union over all nets is deduplicated and sorted.
pub fn build_topology_edges(netlist: &Netlist, clique_cap: usize) -> Result<Graph> {
    if clique_cap < 2 {
        return Err(Error::InvalidArgument(format!(
            "clique cap must be >= 2, got {clique_cap}"
        )));
    }
    let mut edges = Vec::new();
    for net in &netlist.nets {
        let cells = net.cells();
        if net.pins.len() <= clique_cap {
            for &a in &cells {
                for &b in &cells {
                    if a != b {
                        edges.push((a, b));
                    }
                }
            }
        } else {
            let driver = cells[0];
            for &c in &cells[1..] {
                edges.push((driver, c));
                edges.push((c, driver));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(Graph {
        n_nodes: netlist.cells.len(),
        edges,
        edge_attr: None,
    })
}

fn jitter(id: usize, magnitude: f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(id as u64);
    (
        rng.gen_range(-1.0..=1.0) * magnitude,
        rng.gen_range(-1.0..=1.0) * magnitude,
    )
}

/// Delaunay graph over cell centers with Euclidean distance per edge.
///
/// Coincident centers get a deterministic per-cell jitter of `1e-6` die
/// widths before triangulation (all centers are jittered if the set is
/// still degenerate). Distances use the original centers and are clamped
/// below at `1e-9` die widths.
pub fn build_geometry_graph(netlist: &Netlist, placement: &Placement) -> Result<Graph> {
    let n = netlist.cells.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "geometry graph needs >= 3 cells, got {n}"
        )));
    }
    let die_w = placement.die.width();
    let centers: Vec<(f64, f64)> = netlist
        .cells
        .iter()
        .map(|c| placement.cell_center(c))
        .collect();

    let mut pts = centers.clone();
    let mut seen = std::collections::HashSet::new();
    for (i, p) in pts.iter_mut().enumerate() {
        if !seen.insert((p.0.to_bits(), p.1.to_bits())) {
            let (jx, jy) = jitter(i, 1e-6 * die_w);
            *p = (p.0 + jx, p.1 + jy);
        }
    }
    let tris = match delaunay_triangulate(&pts) {
        Err(Error::DegeneratePointSet(_)) => {
            let all: Vec<(f64, f64)> = centers
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let (jx, jy) = jitter(i, 1e-6 * die_w);
                    (p.0 + jx, p.1 + jy)
                })
                .collect();
            delaunay_triangulate(&all)?
        }
        other => other?,
    };

    let floor = 1e-9 * die_w;
    let mut edges = Vec::new();
    for (a, b) in triangle_edges(&tris) {
        edges.push((a, b));
        edges.push((b, a));
    }
    edges.sort_unstable();
    let attr = edges
        .iter()
        .map(|&(a, b)| {
            let d = (centers[a].0 - centers[b].0).hypot(centers[a].1 - centers[b].1);
            d.max(floor)
        })
        .collect();
    Ok(Graph {
        n_nodes: n,
        edges,
        edge_attr: Some(attr),
    })
}

/// Builds both views and their feature matrices.
///
/// `x_g` is `x_t` with the normalized cell-center coordinates appended.
pub fn assemble_multiview(
    netlist: &Netlist,
    placement: &Placement,
    grid: &GridSpec,
    clique_cap: usize,
) -> Result<MultiViewGraph> {
    let grids = density_grids(netlist, placement, grid);
    let rows = topology_node_features(netlist, placement, &grids);
    let die = placement.die;
    let coords: Vec<(f64, f64)> = netlist
        .cells
        .iter()
        .map(|c| {
            let (x, y) = placement.cell_center(c);
            ((x - die.x0) / die.width(), (y - die.y0) / die.height())
        })
        .collect();
    let geo_rows: Vec<[f64; GEO_FEATURES]> = rows
        .iter()
        .zip(&coords)
        .map(|(r, &(x, y))| {
            let mut g = [0.0; GEO_FEATURES];
            g[..TOPO_FEATURES].copy_from_slice(r);
            g[TOPO_FEATURES] = x;
            g[TOPO_FEATURES + 1] = y;
            g
        })
        .collect();
    Ok(MultiViewGraph {
        topo: build_topology_edges(netlist, clique_cap)?,
        x_t: FeatureMatrix::from_rows(&rows),
        geo: build_geometry_graph(netlist, placement)?,
        x_g: FeatureMatrix::from_rows(&geo_rows),
        coords,
    })
}
