//! The dual-branch congestion model.
//!
//! The topology branch stacks graph-attention layers over the net graph. The
//! geometry branch encodes cell positions, then stacks continuous-filter
//! convolutions over the Delaunay graph. A fusion head concatenates each
//! branch output with its raw features and regresses one value per cell.

mod layers;
mod params;
mod prepared;

pub use layers::{
    cfconv_layer, fourier_features, fusion_head, gat_layer, positional_encoding, rbf_expand,
    CfVars, FusionVars, GatVars, GeoEdges, PeVars,
};
pub use params::{Branch, HybridNetParams, ParamSpec};
pub use prepared::PreparedGraph;

use serde::{Deserialize, Serialize};

use crate::graph::{GEO_FEATURES, TOPO_FEATURES};
use crate::tensor::{Real, Tape, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridNetConfig {
    /// Layers per branch.
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub rbf_k: usize,
    /// Distance cutoff of the radial basis, in layout units.
    pub cutoff: f64,
    pub fourier_bands: usize,
    /// Feed sine/cosine features of the coordinates to the position MLP. When
    /// false the MLP sees raw coordinates only.
    pub pe_fourier: bool,
    pub leaky_slope: f64,
    pub out_width: usize,
    pub topo_features: usize,
    pub geo_features: usize,
}

impl Default for HybridNetConfig {
    fn default() -> Self {
        HybridNetConfig {
            layers: 3,
            hidden: 64,
            heads: 4,
            rbf_k: 16,
            cutoff: 8.0,
            fourier_bands: 4,
            pe_fourier: true,
            leaky_slope: 0.2,
            out_width: 64,
            topo_features: TOPO_FEATURES,
            geo_features: GEO_FEATURES,
        }
    }
}

impl HybridNetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.layers < 1 {
            return bad("layers must be at least 1".into());
        }
        if self.hidden == 0 || self.heads == 0 || !self.hidden.is_multiple_of(self.heads) {
            return bad(format!(
                "hidden {} must be a positive multiple of heads {}",
                self.hidden, self.heads
            ));
        }
        if self.rbf_k < 2 {
            return bad(format!("rbf_k must be at least 2, got {}", self.rbf_k));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return bad(format!("cutoff must be positive, got {}", self.cutoff));
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return bad(format!(
                "leaky_slope must be non-negative, got {}",
                self.leaky_slope
            ));
        }
        if self.out_width == 0 || self.topo_features == 0 || self.geo_features == 0 {
            return bad("widths must be positive".into());
        }
        Ok(())
    }

    /// Width of the coordinate encoding fed to the position MLP.
    pub fn pe_input_width(&self) -> usize {
        if self.pe_fourier {
            2 + 4 * self.fourier_bands
        } else {
            2
        }
    }
}

/// Which branches take part in the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    /// Geometry branch output replaced by zeros.
    Topo,
    /// Topology branch output replaced by zeros.
    Geo,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Full, Mode::Topo, Mode::Geo];

    pub fn uses(self, branch: Branch) -> bool {
        match (self, branch) {
            (_, Branch::Head) | (Mode::Full, _) => true,
            (Mode::Topo, b) => b == Branch::Topo,
            (Mode::Geo, b) => b == Branch::Geo,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Topo => "topo",
            Mode::Geo => "geo",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "topo" | "topo_only" => Ok(Mode::Topo),
            "geo" | "geo_only" => Ok(Mode::Geo),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode {s:?} (expected full, topo or geo)"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters bound to tape leaves, grouped by layer.
#[derive(Debug, Clone)]
pub struct BoundParams {
    pub gat: Vec<GatVars>,
    pub cf: Vec<CfVars>,
    pub pe: PeVars,
    pub fusion: FusionVars,
}

/// Runs the model on one prepared design. `vars` holds one tape leaf per
/// parameter tensor, in [`HybridNetParams`] order. Returns an `N`-vector.
pub fn forward<T: Real>(
    tape: &mut Tape<T>,
    vars: &[Var],
    config: &HybridNetConfig,
    g: &PreparedGraph<T>,
    mode: Mode,
) -> Result<Var> {
    let p = params::bind(config, vars)?;
    let slope = T::from_f64_lossy(config.leaky_slope);
    let x_t = tape.frozen(&g.x_t);
    let x_g = tape.frozen(&g.x_g);

    let h_t = if mode.uses(Branch::Topo) {
        let mut h = x_t;
        for (i, layer) in p.gat.iter().enumerate() {
            let last = i + 1 == p.gat.len();
            h = gat_layer(
                tape,
                h,
                layer,
                &g.topo_src,
                &g.topo_dst,
                config.heads,
                slope,
                !last,
            )?;
        }
        Some(h)
    } else {
        None
    };

    let h_g = if mode.uses(Branch::Geo) {
        let pe_in = tape.frozen(&g.pe_input);
        let pe = positional_encoding(tape, pe_in, &p.pe, slope)?;
        let rbf = tape.frozen(&g.rbf);
        let edges = GeoEdges {
            src: &g.geo_src,
            dst: &g.geo_dst,
            pair: &g.geo_pair,
        };
        let mut h = x_g;
        for (i, layer) in p.cf.iter().enumerate() {
            let inject = if i == 0 { Some(pe) } else { None };
            h = cfconv_layer(tape, h, layer, edges, rbf, inject)?;
        }
        Some(h)
    } else {
        None
    };

    fusion_head(tape, h_t, h_g, x_t, x_g, &p.fusion, slope)
}

/// Convenience wrapper: binds `params` on a fresh tape and returns predictions.
pub fn predict<T: Real>(
    params: &HybridNetParams<T>,
    g: &PreparedGraph<T>,
    mode: Mode,
) -> Result<Vec<T>> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.tensors.iter().map(|t| tape.frozen(t)).collect();
    let y = forward(&mut tape, &vars, &params.config, g, mode)?;
    Ok(tape.value(y).to_vec())
}
