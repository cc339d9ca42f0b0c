use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{CfVars, FusionVars, GatVars, PeVars};
use super::{BoundParams, HybridNetConfig, Mode};
use crate::tensor::{load_checkpoint, save_checkpoint, CheckpointManifest, Real, Tensor, Var};
use crate::{Error, Result};

/// Part of the network a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Topo,
    Geo,
    Head,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub branch: Branch,
    pub is_bias: bool,
}

/// Every parameter tensor in a fixed order, with its layout description.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridNetParams<T> {
    pub config: HybridNetConfig,
    pub specs: Vec<ParamSpec>,
    pub tensors: Vec<Tensor<T>>,
}

pub(super) fn param_specs(c: &HybridNetConfig) -> Vec<ParamSpec> {
    let mut specs = Vec::new();
    let mut add = |name: String, shape: Vec<usize>, branch: Branch, is_bias: bool| {
        specs.push(ParamSpec {
            name,
            shape,
            branch,
            is_bias,
        })
    };
    let (d, dh) = (c.hidden, c.hidden / c.heads);
    for i in 0..c.layers {
        let d_in = if i == 0 { c.topo_features } else { d };
        add(format!("gat{i}.w"), vec![d_in, d], Branch::Topo, false);
        add(
            format!("gat{i}.a_src"),
            vec![c.heads, dh],
            Branch::Topo,
            false,
        );
        add(
            format!("gat{i}.a_dst"),
            vec![c.heads, dh],
            Branch::Topo,
            false,
        );
        add(format!("gat{i}.b"), vec![d], Branch::Topo, true);
    }
    for i in 0..c.layers {
        let d_in = if i == 0 { c.geo_features } else { d };
        add(format!("cf{i}.w_in"), vec![d_in, d], Branch::Geo, false);
        if i == 0 {
            add(format!("cf{i}.w_res"), vec![d_in, d], Branch::Geo, false);
        }
        add(
            format!("cf{i}.filter1.w"),
            vec![c.rbf_k, d],
            Branch::Geo,
            false,
        );
        add(format!("cf{i}.filter1.b"), vec![d], Branch::Geo, true);
        add(format!("cf{i}.filter2.w"), vec![d, d], Branch::Geo, false);
        add(format!("cf{i}.filter2.b"), vec![d], Branch::Geo, true);
        add(format!("cf{i}.w_out"), vec![d, d], Branch::Geo, false);
        add(format!("cf{i}.b_out"), vec![d], Branch::Geo, true);
    }
    add(
        "pe.w1".into(),
        vec![c.pe_input_width(), d],
        Branch::Geo,
        false,
    );
    add("pe.b1".into(), vec![d], Branch::Geo, true);
    add("pe.w2".into(), vec![d, d], Branch::Geo, false);
    add("pe.b2".into(), vec![d], Branch::Geo, true);
    add(
        "fuse_t.w".into(),
        vec![d + c.topo_features, d],
        Branch::Topo,
        false,
    );
    add("fuse_t.b".into(), vec![d], Branch::Topo, true);
    add(
        "fuse_g.w".into(),
        vec![d + c.geo_features, d],
        Branch::Geo,
        false,
    );
    add("fuse_g.b".into(), vec![d], Branch::Geo, true);
    add(
        "out1.w".into(),
        vec![2 * d, c.out_width],
        Branch::Head,
        false,
    );
    add("out1.b".into(), vec![c.out_width], Branch::Head, true);
    add("out2.w".into(), vec![c.out_width, 1], Branch::Head, false);
    add("out2.b".into(), vec![1], Branch::Head, true);
    specs
}

/// Groups leaves (in [`param_specs`] order) by layer.
pub(super) fn bind(c: &HybridNetConfig, vars: &[Var]) -> Result<BoundParams> {
    let expected = param_specs(c).len();
    if vars.len() != expected {
        return Err(Error::shape(
            "bind",
            format!("{} parameter leaves, expected {expected}", vars.len()),
        ));
    }
    let mut it = vars.iter().copied();
    let mut next = || it.next().expect("length checked");
    let gat = (0..c.layers)
        .map(|_| GatVars {
            w: next(),
            a_src: next(),
            a_dst: next(),
            bias: next(),
        })
        .collect();
    let cf = (0..c.layers)
        .map(|i| {
            let w_in = next();
            let w_res = if i == 0 { Some(next()) } else { None };
            CfVars {
                w_in,
                w_res,
                filter1_w: next(),
                filter1_b: next(),
                filter2_w: next(),
                filter2_b: next(),
                w_out: next(),
                b_out: next(),
            }
        })
        .collect();
    let pe = PeVars {
        w1: next(),
        b1: next(),
        w2: next(),
        b2: next(),
    };
    let fusion = FusionVars {
        t_w: next(),
        t_b: next(),
        g_w: next(),
        g_b: next(),
        o1_w: next(),
        o1_b: next(),
        o2_w: next(),
        o2_b: next(),
    };
    Ok(BoundParams {
        gat,
        cf,
        pe,
        fusion,
    })
}

impl<T: Real> HybridNetParams<T> {
    /// Glorot-uniform weights and zero biases, drawn in layout order from `seed`.
    pub fn init(config: &HybridNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let specs = param_specs(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = specs
            .iter()
            .map(|s| {
                let n: usize = s.shape.iter().product();
                let data = if s.is_bias {
                    vec![0.0; n]
                } else {
                    let lim = (6.0 / (s.shape[0] + s.shape[1]) as f64).sqrt();
                    (0..n).map(|_| rng.gen_range(-lim..=lim)).collect()
                };
                Tensor::from_f64(s.shape.clone(), &data).map(Tensor::with_grad)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HybridNetParams {
            config: config.clone(),
            specs,
            tensors,
        })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.index_of(name).map(move |i| &mut self.tensors[i])
    }

    /// Marks parameters of branches unused by `mode` as frozen.
    pub fn freeze_for(&mut self, mode: Mode) {
        for (s, t) in self.specs.iter().zip(&mut self.tensors) {
            t.requires_grad = mode.uses(s.branch);
        }
    }

    pub fn cast<U: Real>(&self) -> HybridNetParams<U> {
        HybridNetParams {
            config: self.config.clone(),
            specs: self.specs.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<CheckpointManifest> {
        let named: Vec<(&str, &Tensor<T>)> = self
            .specs
            .iter()
            .map(|s| s.name.as_str())
            .zip(self.tensors.iter())
            .collect();
        save_checkpoint(path, &named)
    }

    /// Loads tensors for `config`, checking names and shapes against its layout.
    pub fn load(config: &HybridNetConfig, path: &Path) -> Result<Self> {
        config.validate()?;
        let specs = param_specs(config);
        let loaded = load_checkpoint::<T>(path)?;
        if loaded.len() != specs.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} tensors, config expects {}",
                loaded.len(),
                specs.len()
            )));
        }
        let mut tensors = Vec::with_capacity(specs.len());
        for (s, (name, t)) in specs.iter().zip(loaded) {
            if *name != s.name || t.shape() != s.shape.as_slice() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} {:?} does not match expected {} {:?}",
                    t.shape(),
                    s.name,
                    s.shape
                )));
            }
            tensors.push(t.with_grad());
        }
        Ok(HybridNetParams {
            config: config.clone(),
            specs,
            tensors,
        })
    }
}
