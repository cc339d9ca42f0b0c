use super::{GridSpec, LabelGrid, Net, Netlist, Placement, Rect};
use crate::{Error, Result};

/// Pin bounding box of a net.
pub(crate) fn net_bbox(netlist: &Netlist, placement: &Placement, net: &Net) -> Rect {
    let mut r = Rect::new(
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for &p in &net.pins {
        let (x, y) = placement.pin_location(netlist, p);
        r.x0 = r.x0.min(x);
        r.y0 = r.y0.min(y);
        r.x1 = r.x1.max(x);
        r.y1 = r.y1.max(y);
    }
    r
}

/// Widens any side shorter than `eps` to `eps`, keeping the center fixed.
pub(crate) fn clamp_rect(r: &Rect, eps: f64) -> Rect {
    let widen = |lo: f64, hi: f64| {
        if hi - lo < eps {
            let c = 0.5 * (lo + hi);
            (c - 0.5 * eps, c + 0.5 * eps)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = widen(r.x0, r.x1);
    let (y0, y1) = widen(r.y0, r.y1);
    Rect::new(x0, y0, x1, y1)
}

/// Adds `weight * overlap(rect, tile) / tile_area` to every tile `rect` touches.
pub(crate) fn splat_rect(values: &mut [f64], grid: &GridSpec, rect: &Rect, weight: f64) {
    let Some(((ix0, ix1), (iy0, iy1))) = grid.tile_span(rect) else {
        return;
    };
    let inv_area = 1.0 / grid.tile_area();
    for iy in iy0..=iy1 {
        for ix in ix0..=ix1 {
            let ov = grid.tile_rect(ix, iy).overlap_area(rect);
            if ov > 0.0 {
                values[iy * grid.nx + ix] += weight * ov * inv_area;
            }
        }
    }
}

/// RUDY routing-demand map.
///
/// Each net spreads `(w + h) / (max(w, eps) * max(h, eps))` over its pin
/// bounding box, weighted by the fraction of each tile the box covers, with
/// `eps` one tile width. Boxes thinner than `eps` are widened to `eps` about
/// their center before rasterization.
pub fn rudy_label_grid(netlist: &Netlist, placement: &Placement, grid: &GridSpec) -> LabelGrid {
    let mut labels = LabelGrid::zeros(*grid);
    let eps = grid.tile_w;
    for net in &netlist.nets {
        let bbox = net_bbox(netlist, placement, net);
        let (w, h) = (bbox.width(), bbox.height());
        let density = (w + h) / (w.max(eps) * h.max(eps));
        splat_rect(&mut labels.values, grid, &clamp_rect(&bbox, eps), density);
    }
    labels
}

/// Per-cell target: the label of the tile containing each cell's center.
pub fn sample_labels_at_cells(
    labels: &LabelGrid,
    netlist: &Netlist,
    placement: &Placement,
) -> Result<Vec<f64>> {
    netlist
        .cells
        .iter()
        .map(|cell| {
            let (cx, cy) = placement.cell_center(cell);
            let (ix, iy) = labels
                .grid
                .tile_of(cx, cy)
                .ok_or_else(|| Error::OutsideDie(cell.name.clone()))?;
            Ok(labels.get(ix, iy))
        })
        .collect()
}
