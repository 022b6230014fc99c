//! Dense kernels on row-major `f64` buffers.

/// `c = op(a) * op(b) (+ c if accumulate)`, where `op(a)` is `m x k` and
/// `op(b)` is `k x n`. With `a_t` set, `a` is stored as `k x m`; with `b_t`
/// set, `b` is stored as `n x k`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_t: bool,
    b: &[f64],
    b_t: bool,
    c: &mut [f64],
    accumulate: bool,
) {
    assert_eq!(a.len(), m * k, "lhs size");
    assert_eq!(b.len(), k * n, "rhs size");
    assert_eq!(c.len(), m * n, "output size");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c.fill(0.0);
        }
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the asserts above guarantee every index the kernel touches
    // through these strides lies inside the three slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeometry {
    pub in_c: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    pub fn patch_len(&self) -> usize {
        self.in_c * self.kernel * self.kernel
    }

    /// Input coordinate feeding output `(oy, ox)` through kernel tap `(ky, kx)`.
    #[inline]
    fn source(&self, oy: usize, ox: usize, ky: usize, kx: usize) -> Option<(usize, usize)> {
        let y = (oy * self.stride + ky).checked_sub(self.padding)?;
        let x = (ox * self.stride + kx).checked_sub(self.padding)?;
        (y < self.in_h && x < self.in_w).then_some((y, x))
    }
}

/// Unfolds a `[C][N][H][W]` input into `[C*K*K][N*OH*OW]` patches.
pub(crate) fn im2col(input: &[f64], batch: usize, g: &ConvGeometry) -> Vec<f64> {
    let cols = batch * g.out_h * g.out_w;
    let mut out = vec![0.0; g.patch_len() * cols];
    let plane = g.in_h * g.in_w;
    for c in 0..g.in_c {
        for ky in 0..g.kernel {
            for kx in 0..g.kernel {
                let row = (c * g.kernel + ky) * g.kernel + kx;
                let dst = &mut out[row * cols..(row + 1) * cols];
                for n in 0..batch {
                    let src = &input[(c * batch + n) * plane..(c * batch + n + 1) * plane];
                    for oy in 0..g.out_h {
                        for ox in 0..g.out_w {
                            if let Some((y, x)) = g.source(oy, ox, ky, kx) {
                                dst[(n * g.out_h + oy) * g.out_w + ox] = src[y * g.in_w + x];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Adjoint of [`im2col`]: folds patch gradients back onto a `[C][N][H][W]` input.
pub(crate) fn col2im(dcols: &[f64], batch: usize, g: &ConvGeometry) -> Vec<f64> {
    let cols = batch * g.out_h * g.out_w;
    let plane = g.in_h * g.in_w;
    let mut out = vec![0.0; g.in_c * batch * plane];
    for c in 0..g.in_c {
        for ky in 0..g.kernel {
            for kx in 0..g.kernel {
                let row = (c * g.kernel + ky) * g.kernel + kx;
                let src = &dcols[row * cols..(row + 1) * cols];
                for n in 0..batch {
                    let dst = &mut out[(c * batch + n) * plane..(c * batch + n + 1) * plane];
                    for oy in 0..g.out_h {
                        for ox in 0..g.out_w {
                            if let Some((y, x)) = g.source(oy, ox, ky, kx) {
                                dst[y * g.in_w + x] += src[(n * g.out_h + oy) * g.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}
