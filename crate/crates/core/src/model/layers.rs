use std::f64::consts::PI;
use std::sync::Arc;

use crate::tensor::{Real, Tape, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GatVars {
    pub w: Var,
    pub a_src: Var,
    pub a_dst: Var,
    pub bias: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct CfVars {
    pub w_in: Var,
    /// Learned skip projection; `None` means identity skip.
    pub w_res: Option<Var>,
    pub filter1_w: Var,
    pub filter1_b: Var,
    pub filter2_w: Var,
    pub filter2_b: Var,
    pub w_out: Var,
    pub b_out: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct PeVars {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct FusionVars {
    pub t_w: Var,
    pub t_b: Var,
    pub g_w: Var,
    pub g_b: Var,
    pub o1_w: Var,
    pub o1_b: Var,
    pub o2_w: Var,
    pub o2_b: Var,
}

fn linear<T: Real>(tape: &mut Tape<T>, x: Var, w: Var, b: Var) -> Result<Var> {
    let y = tape.matmul(x, w)?;
    tape.add_bias(y, b)
}

/// Multi-head additive attention over the edges `src -> dst`.
///
/// The edge list must already contain one self-edge per node. Heads are
/// concatenated; `activate` applies a leaky ReLU to the output.
#[allow(clippy::too_many_arguments)]
pub fn gat_layer<T: Real>(
    tape: &mut Tape<T>,
    h: Var,
    p: &GatVars,
    src: &Arc<[usize]>,
    dst: &Arc<[usize]>,
    heads: usize,
    slope: T,
    activate: bool,
) -> Result<Var> {
    let n = tape.shape(h)[0];
    let z = tape.matmul(h, p.w)?;
    if tape.shape(p.a_src)[0] != heads {
        return Err(Error::shape(
            "gat_layer",
            format!("a_src {:?} for {heads} heads", tape.shape(p.a_src)),
        ));
    }
    let s_src = tape.head_dot(z, p.a_src)?;
    let s_dst = tape.head_dot(z, p.a_dst)?;
    let e_src = tape.gather_rows(s_src, src.clone())?;
    let e_dst = tape.gather_rows(s_dst, dst.clone())?;
    let score = tape.add(e_src, e_dst)?;
    let score = tape.leaky_relu(score, slope)?;
    let alpha = tape.segment_softmax(score, dst.clone(), n)?;
    let agg = tape.attend(z, alpha, src.clone(), dst.clone(), n)?;
    let out = tape.add_bias(agg, p.bias)?;
    if activate {
        tape.leaky_relu(out, slope)
    } else {
        Ok(out)
    }
}

/// Gaussian radial basis of each distance: `E x K`, row-major.
pub fn rbf_expand(dist: &[f64], k: usize, cutoff: f64) -> Vec<f64> {
    let step = cutoff / (k - 1) as f64;
    let gamma = 1.0 / (step * step);
    let mut out = Vec::with_capacity(dist.len() * k);
    for &d in dist {
        let d = d.min(cutoff);
        for j in 0..k {
            let diff = d - j as f64 * step;
            out.push((-gamma * diff * diff).exp());
        }
    }
    out
}

/// Edge index arrays of the geometry graph.
///
/// `pair[e]` selects the radial-basis row of directed edge `e`, letting both
/// directions of an undirected edge share one filter evaluation.
#[derive(Debug, Clone, Copy)]
pub struct GeoEdges<'a> {
    pub src: &'a Arc<[usize]>,
    pub dst: &'a Arc<[usize]>,
    pub pair: &'a Arc<[usize]>,
}

/// Continuous-filter convolution over the edges `src -> dst`.
///
/// `inject` is added to both the message projection and the skip term.
pub fn cfconv_layer<T: Real>(
    tape: &mut Tape<T>,
    h: Var,
    p: &CfVars,
    edges: GeoEdges<'_>,
    rbf: Var,
    inject: Option<Var>,
) -> Result<Var> {
    let n = tape.shape(h)[0];
    let GeoEdges { src, dst, pair } = edges;
    if pair.len() != src.len() || dst.len() != src.len() {
        return Err(Error::shape(
            "cfconv_layer",
            format!(
                "{} sources, {} targets, {} pair ids",
                src.len(),
                dst.len(),
                pair.len()
            ),
        ));
    }
    let mut m = tape.matmul(h, p.w_in)?;
    let mut skip = match p.w_res {
        Some(w) => tape.matmul(h, w)?,
        None => h,
    };
    if let Some(e) = inject {
        m = tape.add(m, e)?;
        skip = tape.add(skip, e)?;
    }
    let f = linear(tape, rbf, p.filter1_w, p.filter1_b)?;
    let f = tape.shifted_softplus(f)?;
    let filt = linear(tape, f, p.filter2_w, p.filter2_b)?;
    let agg = tape.edge_filter(m, filt, src.clone(), dst.clone(), pair.clone(), n)?;
    let y = linear(tape, agg, p.w_out, p.b_out)?;
    let y = tape.add(y, skip)?;
    tape.shifted_softplus(y)
}

/// Encoding of normalized coordinates: `[x, y]` followed, when `fourier` is
/// set, by `sin(2^b pi x), cos(2^b pi x), sin(2^b pi y), cos(2^b pi y)` per band.
pub fn fourier_features(coords: &[(f64, f64)], bands: usize, fourier: bool) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-6;
    let width = if fourier { 2 + 4 * bands } else { 2 };
    let mut out = Vec::with_capacity(coords.len() * width);
    for (i, &(x, y)) in coords.iter().enumerate() {
        if !(-TOL..=1.0 + TOL).contains(&x) || !(-TOL..=1.0 + TOL).contains(&y) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {i} = ({x}, {y}) outside the unit square"
            )));
        }
        out.push(x);
        out.push(y);
        if fourier {
            for b in 0..bands {
                let f = (1u64 << b) as f64 * PI;
                out.extend_from_slice(&[
                    (f * x).sin(),
                    (f * x).cos(),
                    (f * y).sin(),
                    (f * y).cos(),
                ]);
            }
        }
    }
    Ok(out)
}

/// Two-layer MLP over the coordinate encoding.
pub fn positional_encoding<T: Real>(
    tape: &mut Tape<T>,
    enc: Var,
    p: &PeVars,
    slope: T,
) -> Result<Var> {
    let hid = linear(tape, enc, p.w1, p.b1)?;
    let hid = tape.leaky_relu(hid, slope)?;
    linear(tape, hid, p.w2, p.b2)
}

/// Concat-MLP fusion. A missing branch contributes a zero block in place of
/// its whole fused embedding.
pub fn fusion_head<T: Real>(
    tape: &mut Tape<T>,
    h_t: Option<Var>,
    h_g: Option<Var>,
    x_t: Var,
    x_g: Var,
    p: &FusionVars,
    slope: T,
) -> Result<Var> {
    let n = tape.shape(x_t)[0];
    if tape.shape(x_g)[0] != n {
        return Err(Error::shape(
            "fusion_head",
            format!("{n} vs {} rows", tape.shape(x_g)[0]),
        ));
    }
    let d = tape.shape(p.t_b)[0];
    let branch = |tape: &mut Tape<T>, h: Option<Var>, x: Var, w: Var, b: Var| -> Result<Var> {
        match h {
            Some(h) => {
                let cat = tape.concat(&[h, x], 1)?;
                let z = linear(tape, cat, w, b)?;
                tape.leaky_relu(z, slope)
            }
            None => tape.constant(vec![n, d], vec![T::zero(); n * d]),
        }
    };
    let z_t = branch(tape, h_t, x_t, p.t_w, p.t_b)?;
    let z_g = branch(tape, h_g, x_g, p.g_w, p.g_b)?;
    let cat = tape.concat(&[z_t, z_g], 1)?;
    let hid = linear(tape, cat, p.o1_w, p.o1_b)?;
    let hid = tape.leaky_relu(hid, slope)?;
    let y = linear(tape, hid, p.o2_w, p.o2_b)?;
    tape.reshape(y, vec![n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rbf_analytic_points() {
        let r = rbf_expand(&[0.0], 5, 4.0);
        assert_eq!(r[0], 1.0);
        let r = rbf_expand(&[4.0, 9.0], 5, 4.0);
        assert_eq!(r[4], 1.0);
        assert_eq!(r[9], 1.0);
        let r = rbf_expand(&[1.0], 3, 2.0);
        assert_eq!(r[1], 1.0);
        assert!((r[0] - (-1f64).exp()).abs() < 1e-15);
        assert!((r[2] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn fourier_at_origin() {
        let f = fourier_features(&[(0.0, 0.0)], 2, true).unwrap();
        assert_eq!(f, vec![0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(
            fourier_features(&[(0.5, 0.25)], 3, false).unwrap(),
            vec![0.5, 0.25]
        );
        assert!(fourier_features(&[(1.1, 0.0)], 1, true).is_err());
    }
}
