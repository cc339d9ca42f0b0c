//! Turning placed designs into standardized model samples.

use crate::circuit::{sample_labels_at_cells, LabelGrid, Netlist, Placement};
use crate::graph::{assemble_multiview, FeatureMatrix, MultiViewGraph};
use crate::model::{HybridNetConfig, PreparedGraph};
use crate::tensor::Real;
use crate::Result;

/// Spreads below this are treated as zero and left unscaled.
const MIN_STD: f64 = 1e-12;

/// A placed design with its label grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub name: String,
    pub netlist: Netlist,
    pub placement: Placement,
    pub labels: LabelGrid,
}

impl Design {
    /// Raw per-cell congestion targets.
    pub fn cell_targets(&self) -> Result<Vec<f64>> {
        sample_labels_at_cells(&self.labels, &self.netlist, &self.placement)
    }

    /// Both graph views, featurized on the label grid's tiling.
    pub fn multiview(&self, clique_cap: usize) -> Result<MultiViewGraph> {
        assemble_multiview(
            &self.netlist,
            &self.placement,
            &self.labels.grid,
            clique_cap,
        )
    }
}

/// Mean and (population) standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count().max(1) as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        Moments {
            mean,
            std: if std < MIN_STD { 1.0 } else { std },
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }
}

/// Standardizes every column in place and returns the per-column moments.
pub fn standardize_columns(m: &mut FeatureMatrix) -> Vec<Moments> {
    let cols = m.cols;
    (0..cols)
        .map(|c| {
            let mom = Moments::of(m.data.iter().skip(c).step_by(cols).copied());
            for v in m.data.iter_mut().skip(c).step_by(cols) {
                *v = mom.apply(*v);
            }
            mom
        })
        .collect()
}

/// One design ready for training or evaluation.
///
/// Features and targets are standardized with statistics of this design
/// alone, so a test design never sees numbers from another design.
#[derive(Debug, Clone)]
pub struct Sample<T> {
    pub name: String,
    pub graph: PreparedGraph<T>,
    pub target: Vec<T>,
    pub raw_target: Vec<f64>,
}

impl<T: Real> Sample<T> {
    pub fn new(
        name: &str,
        mvg: &MultiViewGraph,
        raw_target: Vec<f64>,
        config: &HybridNetConfig,
    ) -> Result<Self> {
        let mut g = mvg.clone();
        standardize_columns(&mut g.x_t);
        standardize_columns(&mut g.x_g);
        let mom = Moments::of(raw_target.iter().copied());
        let target = raw_target
            .iter()
            .map(|&v| T::from_f64_lossy(mom.apply(v)))
            .collect();
        Ok(Sample {
            name: name.to_string(),
            graph: PreparedGraph::new(&g, config)?,
            target,
            raw_target,
        })
    }

    pub fn from_design(
        design: &Design,
        clique_cap: usize,
        config: &HybridNetConfig,
    ) -> Result<Self> {
        let mvg = design.multiview(clique_cap)?;
        Self::new(&design.name, &mvg, design.cell_targets()?, config)
    }

    pub fn target_f64(&self) -> Vec<f64> {
        self.target
            .iter()
            .map(|v| v.to_f64().expect("float"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_become_zero_mean_unit_variance() {
        let mut m = FeatureMatrix {
            rows: 4,
            cols: 2,
            data: vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0],
        };
        let mom = standardize_columns(&mut m);
        assert_eq!(mom[0].mean, 2.5);
        assert_eq!(mom[1].std, 1.0);
        let col0: Vec<f64> = m.data.iter().step_by(2).copied().collect();
        let mean: f64 = col0.iter().sum::<f64>() / 4.0;
        let var: f64 = col0.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-15);
        assert!((var - 1.0).abs() < 1e-12);
        assert!(m.data.iter().skip(1).step_by(2).all(|&v| v == 0.0));
    }
}
