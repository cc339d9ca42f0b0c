use crate::circuit::{clamp_rect, net_bbox, splat_rect, GridSpec, Netlist, Placement};

/// Number of topology features per cell.
pub const TOPO_FEATURES: usize = 7;

/// Feature column names, in order.
pub const TOPO_FEATURE_NAMES: [&str; TOPO_FEATURES] = [
    "pin_density",
    "cell_density",
    "net_density",
    "cell_area",
    "pin_count",
    "degree",
    "fanout_sum",
];

/// Row-major `ny x nx` density maps over a tile grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrids {
    pub grid: GridSpec,
    pub pin: Vec<f64>,
    pub cell: Vec<f64>,
    pub net: Vec<f64>,
}

impl DensityGrids {
    fn at(&self, values: &[f64], x: f64, y: f64) -> f64 {
        match self.grid.tile_of(x, y) {
            Some((ix, iy)) => values[iy * self.grid.nx + ix],
            None => 0.0,
        }
    }
}

/// Pin count per tile, fractional cell coverage per tile, and net coverage.
///
/// Net coverage counts each net's pin bounding box (widened to at least one
/// tile) by the fraction of the tile it covers. Unlike RUDY it carries no
/// wirelength-per-area weight, so it is not the congestion label itself.
pub fn density_grids(netlist: &Netlist, placement: &Placement, grid: &GridSpec) -> DensityGrids {
    let mut pin = vec![0.0; grid.len()];
    for c in &netlist.cells {
        let (x0, y0) = placement.positions[c.id];
        for &(dx, dy) in &c.pin_offsets {
            if let Some((ix, iy)) = grid.tile_of(x0 + dx, y0 + dy) {
                pin[iy * grid.nx + ix] += 1.0;
            }
        }
    }
    let mut cell = vec![0.0; grid.len()];
    for c in &netlist.cells {
        splat_rect(&mut cell, grid, &placement.cell_rect(c), 1.0);
    }
    let mut net = vec![0.0; grid.len()];
    for n in &netlist.nets {
        let bbox = clamp_rect(&net_bbox(netlist, placement, n), grid.tile_w);
        splat_rect(&mut net, grid, &bbox, 1.0);
    }
    DensityGrids {
        grid: *grid,
        pin,
        cell,
        net,
    }
}

/// Per-cell rows of [`TOPO_FEATURE_NAMES`].
pub fn topology_node_features(
    netlist: &Netlist,
    placement: &Placement,
    grids: &DensityGrids,
) -> Vec<[f64; TOPO_FEATURES]> {
    let incident = netlist.incident_nets();
    netlist
        .cells
        .iter()
        .map(|c| {
            let (cx, cy) = placement.cell_center(c);
            let fanout: usize = incident[c.id]
                .iter()
                .map(|&n| netlist.nets[n].pins.len())
                .sum();
            [
                grids.at(&grids.pin, cx, cy),
                grids.at(&grids.cell, cx, cy),
                grids.at(&grids.net, cx, cy),
                c.area(),
                c.pin_offsets.len() as f64,
                incident[c.id].len() as f64,
                fanout as f64,
            ]
        })
        .collect()
}
