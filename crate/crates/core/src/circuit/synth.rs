use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Cell, Net, Netlist, PinRef, Placement, Rect};
use crate::{Error, Result};

const ROW_HEIGHT: f64 = 1.0;
const MAX_FANOUT: usize = 32;
const FANOUT_EXPONENT: f64 = 2.2;
/// Fraction of nets that ignore locality and span a large part of the die.
const GLOBAL_NET_RATE: f64 = 0.03;
/// Net generation stops once this fraction of all pins is still unconnected.
const FREE_PIN_TARGET: f64 = 0.15;

/// Mean cell width produced by the generator, in row heights.
pub const MEAN_CELL_WIDTH: f64 = 2.0;

/// Die side giving roughly `utilization` for `n_cells` generated cells.
pub fn suggested_die_side(n_cells: usize, utilization: f64) -> f64 {
    (n_cells as f64 * MEAN_CELL_WIDTH * ROW_HEIGHT / utilization)
        .sqrt()
        .ceil()
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

struct Hotspot {
    x: f64,
    y: f64,
    sigma2: f64,
    amp: f64,
}

fn density(spots: &[Hotspot], x: f64, y: f64) -> f64 {
    1.0 + spots
        .iter()
        .map(|s| s.amp * (-((x - s.x).powi(2) + (y - s.y).powi(2)) / (2.0 * s.sigma2)).exp())
        .sum::<f64>()
}

/// Row-major legal placement with gaps shrinking where the density field
/// peaks. Returns `None` when the cells do not fit.
fn place_rows(
    cells: &[Cell],
    spots: &[Hotspot],
    side: f64,
    base_gap: f64,
) -> Option<Vec<(f64, f64)>> {
    let rows = (side / ROW_HEIGHT).floor() as usize;
    let mut out = Vec::with_capacity(cells.len());
    let (mut row, mut x) = (0usize, 0.0f64);
    for c in cells {
        if x + c.width > side {
            row += 1;
            x = 0.0;
        }
        if row >= rows || c.width > side {
            return None;
        }
        let y = row as f64 * ROW_HEIGHT;
        out.push((x, y));
        x = round3(x + c.width + base_gap / density(spots, x + c.width, y + 0.5));
    }
    Some(out)
}

/// Uniform bucket index over cell centers for radius queries.
struct Buckets {
    size: f64,
    n: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(centers: &[(f64, f64)], side: f64, size: f64) -> Self {
        let n = ((side / size).ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); n * n];
        for (i, &(x, y)) in centers.iter().enumerate() {
            let bx = ((x / size) as usize).min(n - 1);
            let by = ((y / size) as usize).min(n - 1);
            cells[by * n + bx].push(i);
        }
        Buckets { size, n, cells }
    }

    fn within(&self, centers: &[(f64, f64)], c: (f64, f64), r: f64, out: &mut Vec<usize>) {
        out.clear();
        let lo = |v: f64| (((v - r) / self.size).floor().max(0.0) as usize).min(self.n - 1);
        let hi = |v: f64| (((v + r) / self.size).floor().max(0.0) as usize).min(self.n - 1);
        for by in lo(c.1)..=hi(c.1) {
            for bx in lo(c.0)..=hi(c.0) {
                for &i in &self.cells[by * self.n + bx] {
                    let (x, y) = centers[i];
                    if (x - c.0).powi(2) + (y - c.1).powi(2) <= r * r {
                        out.push(i);
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

fn sample_fanout(rng: &mut ChaCha8Rng) -> usize {
    // inverse-CDF sampling of a truncated discrete power law on [2, MAX_FANOUT]
    let weights: Vec<f64> = (2..=MAX_FANOUT)
        .map(|k| (k as f64).powf(-FANOUT_EXPONENT))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i + 2;
        }
        u -= w;
    }
    MAX_FANOUT
}

/// Generates a synthetic placed design.
///
/// Cells are one row tall, 1 to 4 units wide, with 2 to 6 pins. They are
/// packed row by row with gaps modulated by a few random density hotspots.
/// Nets draw their fanout from a power law on `[2, 32]` and pick sinks near
/// the driver; the search radius grows with fanout as `fanout^rent_p`.
pub fn generate_synthetic(
    seed: u64,
    n_cells: usize,
    rent_p: f64,
    die_side: f64,
) -> Result<(Netlist, Placement)> {
    if n_cells < 4 {
        return Err(Error::InvalidArgument(format!(
            "n_cells must be at least 4, got {n_cells}"
        )));
    }
    if !(rent_p > 0.0 && rent_p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rent_p must lie in (0, 1), got {rent_p}"
        )));
    }
    if !(die_side > 0.0) || !die_side.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "die side must be positive, got {die_side}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let cells: Vec<Cell> = (0..n_cells)
        .map(|id| {
            let width = match rng.gen_range(0..10) {
                0..=3 => 1.0,
                4..=6 => 2.0,
                7..=8 => 3.0,
                _ => 4.0,
            };
            let n_pins = rng.gen_range(2..=6);
            let pin_offsets = (0..n_pins)
                .map(|_| {
                    (
                        round3(rng.gen_range(0.0..=width)),
                        round3(rng.gen_range(0.0..=ROW_HEIGHT)),
                    )
                })
                .collect();
            Cell {
                id,
                name: format!("c{id}"),
                width,
                height: ROW_HEIGHT,
                pin_offsets,
                fixed: false,
            }
        })
        .collect();

    let spots: Vec<Hotspot> = (0..rng.gen_range(3..=6))
        .map(|_| {
            let sigma = rng.gen_range(0.06..0.16) * die_side;
            Hotspot {
                x: rng.gen_range(0.0..die_side),
                y: rng.gen_range(0.0..die_side),
                sigma2: sigma * sigma,
                amp: rng.gen_range(1.0..4.0),
            }
        })
        .collect();

    // widest base gap that still fits every cell
    let too_small =
        || Error::InvalidArgument(format!("die side {die_side} too small for {n_cells} cells"));
    let mut best = place_rows(&cells, &spots, die_side, 0.0).ok_or_else(too_small)?;
    let (mut lo, mut hi) = (0.0, die_side);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        match place_rows(&cells, &spots, die_side, mid) {
            Some(p) => {
                best = p;
                lo = mid;
            }
            None => hi = mid,
        }
    }
    let placement = Placement {
        positions: best,
        die: Rect::new(0.0, 0.0, die_side, die_side),
    };

    let centers: Vec<(f64, f64)> = cells.iter().map(|c| placement.cell_center(c)).collect();
    let pitch = (die_side * die_side / n_cells as f64).sqrt();
    let buckets = Buckets::new(&centers, die_side, 2.0 * pitch);
    let mut free: Vec<Vec<usize>> = cells
        .iter()
        .map(|c| {
            let mut pins: Vec<usize> = (0..c.pin_offsets.len()).collect();
            pins.shuffle(&mut rng);
            pins
        })
        .collect();
    let total_pins: usize = free.iter().map(Vec::len).sum();
    let mut free_count = total_pins;

    let mut drivers: Vec<usize> = (0..n_cells).collect();
    drivers.shuffle(&mut rng);
    let mut nets = Vec::new();
    let mut candidates = Vec::new();
    'outer: for round in 0..6 {
        for &d in &drivers {
            if (free_count as f64) < FREE_PIN_TARGET * total_pins as f64 {
                break 'outer;
            }
            if free[d].is_empty() || (round == 0 && free[d].len() < 2 && rng.gen_bool(0.5)) {
                continue;
            }
            let fanout = sample_fanout(&mut rng);
            let mut radius = if rng.gen_bool(GLOBAL_NET_RATE) {
                0.5 * die_side
            } else {
                1.5 * pitch * ((fanout - 1) as f64).powf(rent_p)
            };
            for _ in 0..6 {
                buckets.within(&centers, centers[d], radius, &mut candidates);
                candidates.retain(|&c| c != d && !free[c].is_empty());
                if candidates.len() >= fanout - 1 {
                    break;
                }
                radius *= 1.6;
            }
            if candidates.is_empty() {
                continue;
            }
            let sinks: Vec<usize> = candidates
                .choose_multiple(&mut rng, (fanout - 1).min(candidates.len()))
                .copied()
                .collect();
            let mut pins = Vec::with_capacity(sinks.len() + 1);
            for c in std::iter::once(d).chain(sinks) {
                let pin = free[c].pop().expect("candidate has a free pin");
                free_count -= 1;
                pins.push(PinRef { cell: c, pin });
            }
            let id = nets.len();
            nets.push(Net {
                id,
                name: format!("n{id}"),
                pins,
            });
        }
    }

    let netlist = Netlist {
        name: format!("synth_s{seed}_n{n_cells}"),
        cells,
        nets,
    };
    netlist.validate()?;
    placement.validate(&netlist)?;
    Ok((netlist, placement))
}
