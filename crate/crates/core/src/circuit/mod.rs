//! Circuit data model: cells, nets, placements, tile grids and label maps.

mod io;
mod rudy;
mod synth;

pub use io::{
    netlist_to_json, parse_label_grid, parse_netlist, parse_placement, placement_to_json,
};
pub(crate) use rudy::{clamp_rect, net_bbox, splat_rect};
pub use rudy::{rudy_label_grid, sample_labels_at_cells};
pub use synth::{generate_synthetic, suggested_die_side, MEAN_CELL_WIDTH};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A standard cell or macro instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub name: String,
    pub width: f64,
    pub height: f64,
    /// Pin locations relative to the cell's lower-left corner.
    pub pin_offsets: Vec<(f64, f64)>,
    pub fixed: bool,
}

impl Cell {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidCell {
            cell: self.name.clone(),
            reason: reason.to_string(),
        };
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(bad("width and height must be positive"));
        }
        if self.pin_offsets.is_empty() {
            return Err(bad("cell has no pins"));
        }
        for &(dx, dy) in &self.pin_offsets {
            if !(0.0..=self.width).contains(&dx) || !(0.0..=self.height).contains(&dy) {
                return Err(bad("pin offset outside cell outline"));
            }
        }
        Ok(())
    }
}

/// Reference to pin `pin` of cell `cell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PinRef {
    pub cell: usize,
    pub pin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub id: usize,
    pub name: String,
    pub pins: Vec<PinRef>,
}

impl Net {
    /// Distinct cells on the net, in first-listed order.
    pub fn cells(&self) -> Vec<usize> {
        let mut seen = Vec::with_capacity(self.pins.len());
        for p in &self.pins {
            if !seen.contains(&p.cell) {
                seen.push(p.cell);
            }
        }
        seen
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub name: String,
    pub cells: Vec<Cell>,
    pub nets: Vec<Net>,
}

impl Netlist {
    /// Checks every structural invariant: contiguous ids, valid cells,
    /// resolvable and unique pin references, and nets of at least two pins.
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.cells.iter().enumerate() {
            if c.id != i {
                return Err(Error::InvalidArgument(format!(
                    "cell \"{}\" has id {} at position {}",
                    c.name, c.id, i
                )));
            }
            c.validate()?;
        }
        for (i, n) in self.nets.iter().enumerate() {
            if n.id != i {
                return Err(Error::InvalidArgument(format!(
                    "net \"{}\" has id {} at position {}",
                    n.name, n.id, i
                )));
            }
            if n.pins.len() < 2 {
                return Err(Error::NetArity {
                    net: n.name.clone(),
                    pins: n.pins.len(),
                });
            }
            let mut seen = std::collections::HashSet::new();
            for p in &n.pins {
                let cell = self
                    .cells
                    .get(p.cell)
                    .ok_or_else(|| Error::UnknownCell(format!("#{}", p.cell)))?;
                if p.pin >= cell.pin_offsets.len() {
                    return Err(Error::DanglingPin {
                        net: n.name.clone(),
                        cell: cell.name.clone(),
                        pin: p.pin,
                    });
                }
                if !seen.insert(*p) {
                    return Err(Error::DuplicatePin {
                        net: n.name.clone(),
                        cell: cell.name.clone(),
                        pin: p.pin,
                    });
                }
            }
        }
        Ok(())
    }

    /// Nets incident to each cell (each net listed once per cell).
    pub fn incident_nets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cells.len()];
        for net in &self.nets {
            for c in net.cells() {
                out[c].push(net.id);
            }
        }
        out
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Area of the intersection with `other` (zero when disjoint).
    pub fn overlap_area(&self, other: &Rect) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Lower-left corner of every cell, index-aligned with `Netlist::cells`.
    pub positions: Vec<(f64, f64)>,
    pub die: Rect,
}

impl Placement {
    pub fn validate(&self, netlist: &Netlist) -> Result<()> {
        if !(self.die.x1 > self.die.x0 && self.die.y1 > self.die.y0) {
            return Err(Error::InvalidArgument("die has non-positive extent".into()));
        }
        if self.positions.len() != netlist.cells.len() {
            return Err(Error::PlacementIncomplete {
                expected: netlist.cells.len(),
                found: self.positions.len(),
            });
        }
        for (cell, _) in netlist.cells.iter().zip(&self.positions) {
            if !self.die.contains_rect(&self.cell_rect(cell)) {
                return Err(Error::OutsideDie(cell.name.clone()));
            }
        }
        Ok(())
    }

    pub fn cell_rect(&self, cell: &Cell) -> Rect {
        let (x, y) = self.positions[cell.id];
        Rect::new(x, y, x + cell.width, y + cell.height)
    }

    pub fn cell_center(&self, cell: &Cell) -> (f64, f64) {
        let (x, y) = self.positions[cell.id];
        (x + 0.5 * cell.width, y + 0.5 * cell.height)
    }

    pub fn pin_location(&self, netlist: &Netlist, pin: PinRef) -> (f64, f64) {
        let (x, y) = self.positions[pin.cell];
        let (dx, dy) = netlist.cells[pin.cell].pin_offsets[pin.pin];
        (x + dx, y + dy)
    }
}

/// Uniform tile grid anchored at `origin`.
///
/// Coordinates exactly on a tile boundary belong to the tile with the larger
/// index; anything at or beyond the far edge falls in the last tile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: (f64, f64),
    pub tile_w: f64,
    pub tile_h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Grid of `nx x ny` equal tiles spanning `die` exactly.
    pub fn covering(die: &Rect, nx: usize, ny: usize) -> Result<Self> {
        Self::new(
            (die.x0, die.y0),
            die.width() / nx.max(1) as f64,
            die.height() / ny.max(1) as f64,
            nx,
            ny,
        )
    }

    /// Grid with the given tile size; the last row/column may overhang the die.
    pub fn with_tile(die: &Rect, tile_w: f64, tile_h: f64) -> Result<Self> {
        if !(tile_w > 0.0 && tile_h > 0.0) {
            return Err(Error::InvalidArgument("tile size must be positive".into()));
        }
        let nx = ((die.width() / tile_w) - 1e-9).ceil().max(1.0) as usize;
        let ny = ((die.height() / tile_h) - 1e-9).ceil().max(1.0) as usize;
        Self::new((die.x0, die.y0), tile_w, tile_h, nx, ny)
    }

    pub fn new(origin: (f64, f64), tile_w: f64, tile_h: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(tile_w > 0.0) || !(tile_h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid grid {nx}x{ny} with tile {tile_w}x{tile_h}"
            )));
        }
        Ok(GridSpec {
            origin,
            tile_w,
            tile_h,
            nx,
            ny,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tile_area(&self) -> f64 {
        self.tile_w * self.tile_h
    }

    pub fn tile_rect(&self, ix: usize, iy: usize) -> Rect {
        let x0 = self.origin.0 + ix as f64 * self.tile_w;
        let y0 = self.origin.1 + iy as f64 * self.tile_h;
        Rect::new(x0, y0, x0 + self.tile_w, y0 + self.tile_h)
    }

    pub fn extent(&self) -> Rect {
        Rect::new(
            self.origin.0,
            self.origin.1,
            self.origin.0 + self.nx as f64 * self.tile_w,
            self.origin.1 + self.ny as f64 * self.tile_h,
        )
    }

    fn axis_index(v: f64, origin: f64, tile: f64, n: usize) -> Option<usize> {
        if !(v >= origin) {
            return None;
        }
        let mut i = ((v - origin) / tile).floor() as usize;
        // floor can land one tile low when v sits exactly on a boundary
        if origin + (i + 1) as f64 * tile <= v {
            i += 1;
        }
        if i >= n {
            // the far edge of the grid is inclusive
            if v <= origin + n as f64 * tile {
                return Some(n - 1);
            }
            return None;
        }
        Some(i)
    }

    /// Tile containing `(x, y)`, or `None` outside the grid.
    pub fn tile_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let ix = Self::axis_index(x, self.origin.0, self.tile_w, self.nx)?;
        let iy = Self::axis_index(y, self.origin.1, self.tile_h, self.ny)?;
        Some((ix, iy))
    }

    /// Inclusive tile index ranges overlapped by `r` (clamped to the grid).
    pub fn tile_span(&self, r: &Rect) -> Option<((usize, usize), (usize, usize))> {
        let e = self.extent();
        if r.x1 <= e.x0 || r.y1 <= e.y0 || r.x0 >= e.x1 || r.y0 >= e.y1 {
            return None;
        }
        let clampx = |v: f64| {
            (((v - self.origin.0) / self.tile_w).floor().max(0.0) as usize).min(self.nx - 1)
        };
        let clampy = |v: f64| {
            (((v - self.origin.1) / self.tile_h).floor().max(0.0) as usize).min(self.ny - 1)
        };
        Some(((clampx(r.x0), clampx(r.x1)), (clampy(r.y0), clampy(r.y1))))
    }
}

/// Row-major `ny x nx` grid of non-negative congestion scores; row 0 is the bottom row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl LabelGrid {
    pub fn zeros(grid: GridSpec) -> Self {
        LabelGrid {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn get_mut(&mut self, ix: usize, iy: usize) -> &mut f64 {
        &mut self.values[iy * self.grid.nx + ix]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.len() {
            return Err(Error::shape(
                "label grid",
                format!(
                    "{} values for {}x{} grid",
                    self.values.len(),
                    self.grid.nx,
                    self.grid.ny
                ),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "label grid values must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Text form: `grid x0 y0 tile_w tile_h nx ny`, then `ny` rows starting at the bottom.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut s = format!(
            "grid {} {} {} {} {} {}\n",
            g.origin.0, g.origin.1, g.tile_w, g.tile_h, g.nx, g.ny
        );
        for row in self.values.chunks(g.nx) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_coordinates_go_to_higher_tile() {
        let g = GridSpec::new((0.0, 0.0), 1.0, 1.0, 4, 4).unwrap();
        assert_eq!(g.tile_of(1.0, 0.5), Some((1, 0)));
        assert_eq!(g.tile_of(0.999, 2.0), Some((0, 2)));
        assert_eq!(g.tile_of(4.0, 4.0), Some((3, 3)));
        assert_eq!(g.tile_of(4.01, 1.0), None);
        assert_eq!(g.tile_of(-0.01, 1.0), None);
    }

    #[test]
    fn tile_of_handles_inexact_boundaries() {
        let die = Rect::new(0.0, 0.0, 3.3, 3.3);
        let g = GridSpec::covering(&die, 33, 33).unwrap();
        for k in 0..33 {
            let x = k as f64 * g.tile_w;
            let (ix, _) = g.tile_of(x, 0.0).unwrap();
            assert!(ix == k || (ix + 1 == k && g.origin.0 + k as f64 * g.tile_w > x));
        }
    }

    #[test]
    fn overlap_area_of_disjoint_rects_is_zero() {
        let a = Rect::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(a.overlap_area(&Rect::new(1.0, 0.0, 2.0, 1.0)), 0.0);
        assert_eq!(a.overlap_area(&Rect::new(0.5, 0.5, 2.0, 2.0)), 0.25);
    }

    #[test]
    fn with_tile_counts_partial_tiles() {
        let die = Rect::new(0.0, 0.0, 10.0, 4.0);
        let g = GridSpec::with_tile(&die, 3.0, 2.0).unwrap();
        assert_eq!((g.nx, g.ny), (4, 2));
    }
}
