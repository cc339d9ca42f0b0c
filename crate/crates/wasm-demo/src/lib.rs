//! Browser bindings: generate a placed design, inspect both graph views and
//! the RUDY map, then train a small model in the page and score it.

use hybridnet::circuit::{generate_synthetic, rudy_label_grid, suggested_die_side, GridSpec};
use hybridnet::data::{Design, Sample};
use hybridnet::graph::{MultiViewGraph, DEFAULT_CLIQUE_CAP};
use hybridnet::metrics::Correlations;
use hybridnet::model::{predict, HybridNetConfig, HybridNetParams, Mode};
use hybridnet::tensor::Tensor;
use hybridnet::train::{adamw_step, clip_grad_norm, loss_and_grad, OptimizerState, TrainConfig};
use wasm_bindgen::prelude::*;

const TILES: usize = 16;
const TRAIN_DESIGNS: u64 = 3;

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn make_design(seed: u64, cells: usize) -> Result<Design, JsError> {
    let side = suggested_die_side(cells, 0.7);
    let (netlist, placement) = generate_synthetic(seed, cells, 0.6, side).map_err(err)?;
    let grid = GridSpec::covering(&placement.die, TILES, TILES).map_err(err)?;
    let labels = rudy_label_grid(&netlist, &placement, &grid);
    Ok(Design {
        name: format!("d{seed}"),
        netlist,
        placement,
        labels,
    })
}

fn parse_mode(mode: &str) -> Result<Mode, JsError> {
    Mode::ALL
        .into_iter()
        .find(|m| m.as_str() == mode)
        .ok_or_else(|| JsError::new(&format!("unknown mode {mode:?}")))
}

struct Trainer {
    params: HybridNetParams<f32>,
    state: OptimizerState<f32>,
    decay: Vec<bool>,
    cfg: TrainConfig,
    mode: Mode,
    train: Vec<Sample<f32>>,
    shown: Sample<f32>,
}

/// One displayed design plus an optional model being trained on others.
#[wasm_bindgen]
pub struct Demo {
    seed: u64,
    cells: usize,
    design: Design,
    views: MultiViewGraph,
    trainer: Option<Trainer>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, cells: usize) -> Result<Demo, JsError> {
        let seed = u64::from(seed);
        let design = make_design(seed, cells)?;
        let views = design.multiview(DEFAULT_CLIQUE_CAP).map_err(err)?;
        Ok(Demo {
            seed,
            cells,
            design,
            views,
            trainer: None,
        })
    }

    pub fn die_side(&self) -> f64 {
        self.design.placement.die.width()
    }

    /// `[x, y, w, h]` per cell.
    pub fn cell_rects(&self) -> Vec<f64> {
        let p = &self.design.placement;
        self.design
            .netlist
            .cells
            .iter()
            .zip(&p.positions)
            .flat_map(|(c, &(x, y))| [x, y, c.width, c.height])
            .collect()
    }

    /// Undirected topology edges as `[a, b, ...]`.
    pub fn topo_edges(&self) -> Vec<u32> {
        undirected(&self.views.topo.edges)
    }

    /// Undirected Delaunay edges as `[a, b, ...]`.
    pub fn geo_edges(&self) -> Vec<u32> {
        undirected(&self.views.geo.edges)
    }

    pub fn grid_side(&self) -> usize {
        TILES
    }

    /// RUDY map, row 0 at the bottom.
    pub fn rudy(&self) -> Vec<f64> {
        self.design.labels.values.clone()
    }

    pub fn targets(&self) -> Result<Vec<f64>, JsError> {
        self.design.cell_targets().map_err(err)
    }

    /// Starts a fresh model on designs generated from other seeds.
    pub fn start_training(&mut self, mode: &str, hidden: usize, lr: f64) -> Result<(), JsError> {
        let mode = parse_mode(mode)?;
        let config = HybridNetConfig {
            layers: 2,
            hidden,
            heads: 2,
            out_width: hidden,
            rbf_k: 8,
            cutoff: 8.0 * self.design.labels.grid.tile_w,
            ..HybridNetConfig::default()
        };
        let train = (1..=TRAIN_DESIGNS)
            .map(|k| {
                let d = make_design(self.seed.wrapping_add(1000 * k), self.cells)?;
                Sample::from_design(&d, DEFAULT_CLIQUE_CAP, &config).map_err(err)
            })
            .collect::<Result<Vec<_>, JsError>>()?;
        let shown = Sample::from_design(&self.design, DEFAULT_CLIQUE_CAP, &config).map_err(err)?;
        let mut params = HybridNetParams::<f32>::init(&config, self.seed).map_err(err)?;
        params.freeze_for(mode);
        let decay = params.specs.iter().map(|s| !s.is_bias).collect();
        let state = OptimizerState::new(&params.tensors);
        self.trainer = Some(Trainer {
            params,
            state,
            decay,
            cfg: TrainConfig {
                lr,
                ..TrainConfig::default()
            },
            mode,
            train,
            shown,
        });
        Ok(())
    }

    /// Runs one epoch over the training designs; returns the mean loss.
    pub fn train_epoch(&mut self) -> Result<f64, JsError> {
        let t = self
            .trainer
            .as_mut()
            .ok_or_else(|| JsError::new("call start_training first"))?;
        let mut total = 0.0;
        for s in &t.train {
            total += loss_and_grad(&mut t.params, s, t.mode).map_err(err)?;
            clip_grad_norm(&mut t.params.tensors, t.cfg.grad_clip_norm);
            adamw_step(&mut t.params.tensors, &t.decay, &mut t.state, &t.cfg).map_err(err)?;
            t.params.tensors.iter_mut().for_each(Tensor::zero_grad);
        }
        Ok(total / t.train.len() as f64)
    }

    /// Standardized per-cell predictions on the displayed design.
    pub fn predict(&self) -> Result<Vec<f64>, JsError> {
        let t = self
            .trainer
            .as_ref()
            .ok_or_else(|| JsError::new("call start_training first"))?;
        let y = predict(&t.params, &t.shown.graph, t.mode).map_err(err)?;
        Ok(y.into_iter().map(f64::from).collect())
    }

    /// `[pearson, spearman, kendall]` of the predictions on the displayed design.
    pub fn score(&self) -> Result<Vec<f64>, JsError> {
        let pred = self.predict()?;
        let c = Correlations::of(&pred, &self.targets()?).map_err(err)?;
        Ok(vec![c.pearson, c.spearman, c.kendall])
    }
}

fn undirected(edges: &[(usize, usize)]) -> Vec<u32> {
    edges
        .iter()
        .filter(|(a, b)| a < b)
        .flat_map(|&(a, b)| [a as u32, b as u32])
        .collect()
}
