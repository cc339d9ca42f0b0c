use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Cell, GridSpec, LabelGrid, Net, Netlist, PinRef, Placement, Rect};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct NetlistFile {
    name: String,
    cells: Vec<CellEntry>,
    nets: Vec<NetEntry>,
}

#[derive(Serialize, Deserialize)]
struct CellEntry {
    name: String,
    w: f64,
    h: f64,
    pins: Vec<PinOffset>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    fixed: bool,
}

#[derive(Serialize, Deserialize)]
struct PinOffset {
    dx: f64,
    dy: f64,
}

#[derive(Serialize, Deserialize)]
struct NetEntry {
    name: String,
    pins: Vec<NetPin>,
}

#[derive(Serialize, Deserialize)]
struct NetPin {
    cell: String,
    pin: usize,
}

#[derive(Serialize, Deserialize)]
struct PlacementFile {
    die: [f64; 4],
    cells: Vec<PlacedCell>,
}

#[derive(Serialize, Deserialize)]
struct PlacedCell {
    name: String,
    x: f64,
    y: f64,
}

/// Parses the JSON netlist format; ids follow file order.
pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let file: NetlistFile = serde_json::from_str(text)?;
    let mut by_name = HashMap::with_capacity(file.cells.len());
    let mut cells = Vec::with_capacity(file.cells.len());
    for (id, c) in file.cells.into_iter().enumerate() {
        if by_name.insert(c.name.clone(), id).is_some() {
            return Err(Error::DuplicateCell(c.name));
        }
        let cell = Cell {
            id,
            name: c.name,
            width: c.w,
            height: c.h,
            pin_offsets: c.pins.iter().map(|p| (p.dx, p.dy)).collect(),
            fixed: c.fixed,
        };
        cell.validate()?;
        cells.push(cell);
    }
    let mut nets = Vec::with_capacity(file.nets.len());
    for (id, n) in file.nets.into_iter().enumerate() {
        let mut pins = Vec::with_capacity(n.pins.len());
        for p in n.pins {
            let &cell = by_name
                .get(&p.cell)
                .ok_or_else(|| Error::UnknownCell(p.cell.clone()))?;
            pins.push(PinRef { cell, pin: p.pin });
        }
        nets.push(Net {
            id,
            name: n.name,
            pins,
        });
    }
    let netlist = Netlist {
        name: file.name,
        cells,
        nets,
    };
    netlist.validate()?;
    Ok(netlist)
}

pub fn netlist_to_json(netlist: &Netlist) -> String {
    let file = NetlistFile {
        name: netlist.name.clone(),
        cells: netlist
            .cells
            .iter()
            .map(|c| CellEntry {
                name: c.name.clone(),
                w: c.width,
                h: c.height,
                pins: c
                    .pin_offsets
                    .iter()
                    .map(|&(dx, dy)| PinOffset { dx, dy })
                    .collect(),
                fixed: c.fixed,
            })
            .collect(),
        nets: netlist
            .nets
            .iter()
            .map(|n| NetEntry {
                name: n.name.clone(),
                pins: n
                    .pins
                    .iter()
                    .map(|p| NetPin {
                        cell: netlist.cells[p.cell].name.clone(),
                        pin: p.pin,
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("netlist serializes")
}

/// Parses the JSON placement format against an already-parsed netlist.
pub fn parse_placement(text: &str, netlist: &Netlist) -> Result<Placement> {
    let file: PlacementFile = serde_json::from_str(text)?;
    let [x0, y0, x1, y1] = file.die;
    let die = Rect::new(x0, y0, x1, y1);
    let by_name: HashMap<&str, usize> = netlist
        .cells
        .iter()
        .map(|c| (c.name.as_str(), c.id))
        .collect();
    let mut positions: Vec<Option<(f64, f64)>> = vec![None; netlist.cells.len()];
    for row in &file.cells {
        let &id = by_name
            .get(row.name.as_str())
            .ok_or_else(|| Error::UnknownCell(row.name.clone()))?;
        if positions[id].replace((row.x, row.y)).is_some() {
            return Err(Error::DuplicatePlacement(row.name.clone()));
        }
    }
    let found = positions.iter().filter(|p| p.is_some()).count();
    if found != netlist.cells.len() {
        return Err(Error::PlacementIncomplete {
            expected: netlist.cells.len(),
            found,
        });
    }
    let placement = Placement {
        positions: positions.into_iter().flatten().collect(),
        die,
    };
    placement.validate(netlist)?;
    Ok(placement)
}

pub fn placement_to_json(placement: &Placement, netlist: &Netlist) -> String {
    let d = placement.die;
    let file = PlacementFile {
        die: [d.x0, d.y0, d.x1, d.y1],
        cells: netlist
            .cells
            .iter()
            .zip(&placement.positions)
            .map(|(c, &(x, y))| PlacedCell {
                name: c.name.clone(),
                x,
                y,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("placement serializes")
}

/// Parses the text label-grid format written by [`LabelGrid::to_text`].
pub fn parse_label_grid(text: &str) -> Result<LabelGrid> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let syntax = |line: usize, message: &str| Error::Syntax {
        line: line + 1,
        message: message.to_string(),
    };
    let (hl, header) = lines.next().ok_or_else(|| syntax(0, "empty label grid"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 7 || fields[0] != "grid" {
        return Err(syntax(hl, "expected `grid x0 y0 tile_w tile_h nx ny`"));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| syntax(hl, "bad number in header"))
    };
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| syntax(hl, "bad count in header"))
    };
    let grid = GridSpec::new(
        (num(fields[1])?, num(fields[2])?),
        num(fields[3])?,
        num(fields[4])?,
        int(fields[5])?,
        int(fields[6])?,
    )?;
    let mut values = Vec::with_capacity(grid.len());
    let mut rows = 0;
    for (ln, line) in lines {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| syntax(ln, "bad value")))
            .collect::<Result<_>>()?;
        if row.len() != grid.nx {
            return Err(syntax(
                ln,
                &format!("expected {} values, got {}", grid.nx, row.len()),
            ));
        }
        values.extend(row);
        rows += 1;
    }
    if rows != grid.ny {
        return Err(syntax(
            hl,
            &format!("expected {} rows, got {rows}", grid.ny),
        ));
    }
    let labels = LabelGrid { grid, values };
    labels.validate()?;
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_CELLS: &str = r#"{
        "name": "tiny",
        "cells": [
            {"name": "u1", "w": 1, "h": 1, "pins": [{"dx": 0.5, "dy": 0.5}]},
            {"name": "u2", "w": 2, "h": 1, "pins": [{"dx": 0, "dy": 0}, {"dx": 2, "dy": 1}]}
        ],
        "nets": [{"name": "n1", "pins": [{"cell": "u1", "pin": 0}, {"cell": "u2", "pin": 1}]}]
    }"#;

    #[test]
    fn parses_minimal_netlist() {
        let n = parse_netlist(TWO_CELLS).unwrap();
        assert_eq!(n.cells.len(), 2);
        assert_eq!(n.nets.len(), 1);
        assert_eq!(n.nets[0].pins[1], PinRef { cell: 1, pin: 1 });
    }

    #[test]
    fn rejects_unknown_cell() {
        let text = TWO_CELLS.replace(r#"{"cell": "u2", "pin": 1}"#, r#"{"cell": "u9", "pin": 0}"#);
        let err = parse_netlist(&text).unwrap_err();
        assert!(err.to_string().contains("unknown cell"), "{err}");
    }

    #[test]
    fn rejects_single_pin_net() {
        let text = TWO_CELLS.replace(r#", {"cell": "u2", "pin": 1}"#, "");
        let err = parse_netlist(&text).unwrap_err();
        assert!(err.to_string().contains("net arity < 2"), "{err}");
    }

    #[test]
    fn rejects_dangling_and_duplicate_pins() {
        let dangling = TWO_CELLS.replace(r#""pin": 1}"#, r#""pin": 5}"#);
        assert!(matches!(
            parse_netlist(&dangling),
            Err(Error::DanglingPin { .. })
        ));
        let dup = TWO_CELLS.replace(r#"{"cell": "u1", "pin": 0}"#, r#"{"cell": "u2", "pin": 1}"#);
        assert!(matches!(
            parse_netlist(&dup),
            Err(Error::DuplicatePin { .. })
        ));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_netlist("{\n\"name\": \"x\",\n\"cells\": [,]\n}").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn placement_checks() {
        let n = parse_netlist(TWO_CELLS).unwrap();
        let ok = r#"{"die": [0, 0, 10, 10], "cells": [{"name": "u1", "x": 0, "y": 0}, {"name": "u2", "x": 3, "y": 4}]}"#;
        let p = parse_placement(ok, &n).unwrap();
        assert_eq!(p.positions, vec![(0.0, 0.0), (3.0, 4.0)]);

        let outside = ok.replace(r#""x": 3"#, r#""x": 10"#);
        let err = parse_placement(&outside, &n).unwrap_err();
        assert!(err.to_string().contains("outside die"), "{err}");

        let missing = r#"{"die": [0, 0, 10, 10], "cells": [{"name": "u1", "x": 0, "y": 0}]}"#;
        let err = parse_placement(missing, &n).unwrap_err();
        assert!(err.to_string().contains("placement incomplete"), "{err}");

        let dup = r#"{"die": [0, 0, 10, 10], "cells": [{"name": "u1", "x": 0, "y": 0}, {"name": "u1", "x": 1, "y": 0}]}"#;
        assert!(matches!(
            parse_placement(dup, &n),
            Err(Error::DuplicatePlacement(_))
        ));
    }

    #[test]
    fn label_grid_text_round_trip() {
        let grid = GridSpec::new((0.0, 0.0), 0.5, 0.25, 3, 2).unwrap();
        let labels = LabelGrid {
            grid,
            values: vec![0.0, 1.5, 2.0, 0.125, 3.0, 1e-7],
        };
        let text = labels.to_text();
        assert!(text.starts_with("grid 0 0 0.5 0.25 3 2\n0 1.5 2\n"));
        assert_eq!(parse_label_grid(&text).unwrap(), labels);
    }

    #[test]
    fn label_grid_rejects_short_rows() {
        assert!(parse_label_grid("grid 0 0 1 1 2 2\n1 2\n3\n").is_err());
        assert!(parse_label_grid("grid 0 0 1 1 2 2\n1 2\n").is_err());
    }
}
