use std::fmt::Write as _;

/// Plain-text graymap of a row-major grid whose row 0 is the bottom row.
///
/// Values are min-max scaled to 0..=255; a flat grid maps to all zeros.
pub fn to_pgm(values: &[f64], nx: usize, ny: usize) -> String {
    assert_eq!(values.len(), nx * ny, "grid size");
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut s = format!("P2\n{nx} {ny}\n255\n");
    for iy in (0..ny).rev() {
        let row: Vec<String> = values[iy * nx..(iy + 1) * nx]
            .iter()
            .map(|&v| {
                let g = if span > 0.0 {
                    ((v - lo) / span * 255.0).round()
                } else {
                    0.0
                };
                (g as u8).to_string()
            })
            .collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_row_first_and_scaled() {
        let p = to_pgm(&[0.0, 1.0, 2.0, 4.0], 2, 2);
        assert_eq!(p, "P2\n2 2\n255\n128 255\n0 64\n");
        assert_eq!(to_pgm(&[3.0; 4], 2, 2), "P2\n2 2\n255\n0 0\n0 0\n");
    }
}
