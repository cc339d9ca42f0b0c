use super::{Tape, Tensor, Var};
use crate::{Error, Result};

/// Compares the tape gradient of `f` at `x` against central differences.
///
/// Returns the largest `|analytic - numeric| / max(1, |analytic|, |numeric|)`
/// over all coordinates of `x`.
pub fn grad_check<F>(f: F, x: &Tensor<f64>, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, Var) -> Result<Var>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let eval = |t: &Tensor<f64>| -> Result<(f64, Tape<f64>, Var, Var)> {
        let mut tape = Tape::new();
        let v = tape.leaf(t);
        let out = f(&mut tape, v)?;
        let val = tape.value(out);
        if val.len() != 1 {
            return Err(Error::NotScalar(tape.shape(out).to_vec()));
        }
        Ok((val[0], tape, v, out))
    };

    let (_, mut tape, v, out) = eval(&x.clone().with_grad())?;
    tape.backward(out)?;
    let analytic = tape
        .grad(v)
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; x.numel()]);

    let mut worst = 0.0f64;
    let mut probe = x.clone();
    probe.requires_grad = false;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + eps;
        let (plus, ..) = eval(&probe)?;
        probe.data_mut()[i] = orig - eps;
        let (minus, ..) = eval(&probe)?;
        probe.data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        if !numeric.is_finite() {
            return Err(Error::NonFinite { op: "grad_check" });
        }
        let err = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
        worst = worst.max(err);
    }
    Ok(worst)
}
