//! Plain-loop matrix kernels. All accumulate into `out` in a fixed order.

use super::Real;

/// `out[m x n] += a[m x k] * b[k x n]`
pub(super) fn matmul_acc<T: Real>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == T::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out[m x k] += g[m x n] * b[k x n]^T`
pub(super) fn matmul_bt_acc<T: Real>(
    g: &[T],
    b: &[T],
    m: usize,
    n: usize,
    k: usize,
    out: &mut [T],
) {
    // Transposing b turns the per-output dot products into row updates that
    // vectorize; each output still sums over j in ascending order.
    let mut bt = vec![T::zero(); n * k];
    for p in 0..k {
        for j in 0..n {
            bt[j * k + p] = b[p * n + j];
        }
    }
    matmul_acc(g, &bt, m, n, k, out);
}

/// `out[k x n] += a[m x k]^T * g[m x n]`
pub(super) fn matmul_at_acc<T: Real>(
    a: &[T],
    g: &[T],
    m: usize,
    k: usize,
    n: usize,
    out: &mut [T],
) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == T::zero() {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, &gv) in orow.iter_mut().zip(grow) {
                *o += av * gv;
            }
        }
    }
}

#[cfg(test)]
fn shifted_softplus<T: Real>(x: T) -> T {
    // ln(0.5 e^x + 0.5) = softplus(x) - ln 2, evaluated without overflow
    let softplus = x.max(T::zero()) + (-x.abs()).exp().ln_1p();
    softplus - T::from_f64_lossy(std::f64::consts::LN_2)
}

/// `ln(0.5 e^x + 0.5)` together with its derivative `sigmoid(x)`, sharing one exponential.
pub(super) fn shifted_softplus_with_slope<T: Real>(x: T) -> (T, T) {
    let e = (-x.abs()).exp();
    let y = x.max(T::zero()) + (T::one() + e).ln() - T::from_f64_lossy(std::f64::consts::LN_2);
    let inv = T::one() / (T::one() + e);
    let s = if x >= T::zero() { inv } else { e * inv };
    (y, s)
}

pub(super) fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_agree_with_naive_products() {
        let a: Vec<f64> = (0..6).map(|v| v as f64 - 2.0).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|v| (v as f64) * 0.5).collect(); // 3x4
        let mut c = vec![0.0; 8];
        matmul_acc(&a, &b, 2, 3, 4, &mut c);
        for i in 0..2 {
            for j in 0..4 {
                let want: f64 = (0..3).map(|p| a[i * 3 + p] * b[p * 4 + j]).sum();
                assert_eq!(c[i * 4 + j], want);
            }
        }
        // g (2x4) * b^T (4x3) -> 2x3
        let mut gbt = vec![0.0; 6];
        matmul_bt_acc(&c, &b, 2, 4, 3, &mut gbt);
        for i in 0..2 {
            for p in 0..3 {
                let want: f64 = (0..4).map(|j| c[i * 4 + j] * b[p * 4 + j]).sum();
                assert!((gbt[i * 3 + p] - want).abs() < 1e-12);
            }
        }
        // a^T (3x2) * c (2x4) -> 3x4
        let mut atg = vec![0.0; 12];
        matmul_at_acc(&a, &c, 2, 3, 4, &mut atg);
        for p in 0..3 {
            for j in 0..4 {
                let want: f64 = (0..2).map(|i| a[i * 3 + p] * c[i * 4 + j]).sum();
                assert!((atg[p * 4 + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shifted_softplus_is_stable() {
        assert_eq!(shifted_softplus(0.0f64), 0.0);
        assert!((shifted_softplus(800.0f64) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
        assert!((shifted_softplus(-800.0f64) + std::f64::consts::LN_2).abs() < 1e-12);
        let x = 0.3f64;
        assert!((shifted_softplus(x) - (0.5 * x.exp() + 0.5).ln()).abs() < 1e-15);
        for x in [-30.0f64, -1.5, 0.0, 0.2, 7.0] {
            let (y, s) = shifted_softplus_with_slope(x);
            assert!((y - shifted_softplus(x)).abs() < 1e-15);
            assert!((s - sigmoid(x)).abs() < 1e-15);
        }
    }
}
