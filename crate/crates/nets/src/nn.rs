//! Batched layer primitives with hand-written backward passes.
//!
//! Tensors are `n × c × h × w`, row-major, f64.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self {
            n,
            c,
            h,
            w,
            data: vec![0.0; n * c * h * w],
        }
    }

    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * c * h * w, "tensor data length");
        Self { n, c, h, w, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    pub fn sample(&self, b: usize) -> &[f64] {
        let s = self.c * self.plane();
        &self.data[b * s..(b + 1) * s]
    }

    pub fn same_shape(&self, o: &Tensor) -> bool {
        (self.n, self.c, self.h, self.w) == (o.n, o.c, o.h, o.w)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `c = a · b` (or `c += a · b` when `accumulate`), with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    c: &mut [f64],
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c[..m * n].fill(0.0);
        }
        return;
    }
    // SAFETY: callers pass buffers whose extents cover every strided index of
    // the m×k, k×n and m×n (row-major, rsc = n) operands.
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
            if accumulate { 1.0 } else { 0.0 },
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvSpec {
    pub fn same(cin: usize, cout: usize, k: usize) -> Self {
        Self {
            cin,
            cout,
            k,
            stride: 1,
            pad: k / 2,
        }
    }

    pub fn strided(cin: usize, cout: usize, k: usize, stride: usize) -> Self {
        Self {
            cin,
            cout,
            k,
            stride,
            pad: k / 2,
        }
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [self.cout, self.cin, self.k, self.k]
    }

    pub fn fan_in(&self) -> usize {
        self.cin * self.k * self.k
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.k) / self.stride + 1,
            (w + 2 * self.pad - self.k) / self.stride + 1,
        )
    }
}

/// Saved im2col matrix for the backward pass.
pub struct ConvCache {
    cols: Vec<f64>,
    in_shape: (usize, usize, usize, usize),
    out_hw: (usize, usize),
}

fn im2col(x: &Tensor, s: &ConvSpec, ho: usize, wo: usize) -> Vec<f64> {
    let k = s.k;
    let ncols = x.n * ho * wo;
    let mut cols = vec![0.0; s.fan_in() * ncols];
    for ci in 0..s.cin {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * ncols..(row + 1) * ncols];
                for b in 0..x.n {
                    let src = &x.data[(b * x.c + ci) * x.plane()..(b * x.c + ci + 1) * x.plane()];
                    for oy in 0..ho {
                        let iy = (oy * s.stride + ky) as isize - s.pad as isize;
                        if iy < 0 || iy >= x.h as isize {
                            continue;
                        }
                        let srow = &src[iy as usize * x.w..(iy as usize + 1) * x.w];
                        let base = (b * ho + oy) * wo;
                        for ox in 0..wo {
                            let ix = (ox * s.stride + kx) as isize - s.pad as isize;
                            if ix >= 0 && ix < x.w as isize {
                                dst[base + ox] = srow[ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im(dcols: &[f64], s: &ConvSpec, shape: (usize, usize, usize, usize), ho: usize, wo: usize) -> Tensor {
    let (n, c, h, w) = shape;
    let mut dx = Tensor::zeros(n, c, h, w);
    let k = s.k;
    let ncols = n * ho * wo;
    for ci in 0..s.cin {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &dcols[row * ncols..(row + 1) * ncols];
                for b in 0..n {
                    let plane = (b * c + ci) * h * w;
                    for oy in 0..ho {
                        let iy = (oy * s.stride + ky) as isize - s.pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let base = (b * ho + oy) * wo;
                        for ox in 0..wo {
                            let ix = (ox * s.stride + kx) as isize - s.pad as isize;
                            if ix >= 0 && ix < w as isize {
                                dx.data[plane + iy as usize * w + ix as usize] += src[base + ox];
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

pub fn conv_forward(x: &Tensor, s: &ConvSpec, weight: &[f64], bias: &[f64]) -> (Tensor, ConvCache) {
    assert_eq!(x.c, s.cin, "conv input channels");
    let (ho, wo) = s.out_dims(x.h, x.w);
    let cols = im2col(x, s, ho, wo);
    let ncols = x.n * ho * wo;
    let kk = s.fan_in();
    let mut mat = vec![0.0; s.cout * ncols];
    gemm(s.cout, kk, ncols, weight, (kk as isize, 1), &cols, (ncols as isize, 1), &mut mat, false);
    let mut y = Tensor::zeros(x.n, s.cout, ho, wo);
    let p = ho * wo;
    for b in 0..x.n {
        for co in 0..s.cout {
            let src = &mat[co * ncols + b * p..co * ncols + (b + 1) * p];
            let dst = &mut y.data[(b * s.cout + co) * p..(b * s.cout + co + 1) * p];
            for (d, v) in dst.iter_mut().zip(src) {
                *d = v + bias[co];
            }
        }
    }
    (
        y,
        ConvCache {
            cols,
            in_shape: (x.n, x.c, x.h, x.w),
            out_hw: (ho, wo),
        },
    )
}

/// Accumulates weight and bias gradients; returns the input gradient when asked.
pub fn conv_backward(
    dy: &Tensor,
    cache: &ConvCache,
    s: &ConvSpec,
    weight: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    need_input_grad: bool,
) -> Option<Tensor> {
    let (ho, wo) = cache.out_hw;
    let n = cache.in_shape.0;
    let p = ho * wo;
    let ncols = n * p;
    let kk = s.fan_in();
    let mut dmat = vec![0.0; s.cout * ncols];
    for b in 0..n {
        for co in 0..s.cout {
            let src = &dy.data[(b * s.cout + co) * p..(b * s.cout + co + 1) * p];
            dmat[co * ncols + b * p..co * ncols + (b + 1) * p].copy_from_slice(src);
        }
    }
    for co in 0..s.cout {
        dbias[co] += dmat[co * ncols..(co + 1) * ncols].iter().sum::<f64>();
    }
    // dW[cout, kk] += dmat[cout, ncols] · colsᵀ[ncols, kk]
    gemm(s.cout, ncols, kk, &dmat, (ncols as isize, 1), &cache.cols, (1, ncols as isize), dweight, true);
    if !need_input_grad {
        return None;
    }
    // dcols[kk, ncols] = Wᵀ[kk, cout] · dmat[cout, ncols]
    let mut dcols = vec![0.0; kk * ncols];
    gemm(kk, s.cout, ncols, weight, (1, kk as isize), &dmat, (ncols as isize, 1), &mut dcols, false);
    Some(col2im(&dcols, s, cache.in_shape, ho, wo))
}

pub fn relu(x: &mut Tensor) {
    for v in &mut x.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes `dy` where the (post-activation) output was not positive.
pub fn relu_backward(dy: &mut Tensor, out: &Tensor) {
    for (g, y) in dy.data.iter_mut().zip(&out.data) {
        if *y <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Max over each cell of a `rows × cols` grid laid over every plane; cell
/// edges at `floor(i·h/rows)`. Returns the pooled tensor and argmax indices.
pub fn grid_max_pool(x: &Tensor, rows: usize, cols: usize) -> (Tensor, Vec<usize>) {
    assert!(rows >= 1 && cols >= 1 && rows <= x.h && cols <= x.w, "pool grid larger than input");
    let mut y = Tensor::zeros(x.n, x.c, rows, cols);
    let mut idx = vec![0; y.len()];
    let p = x.plane();
    for plane in 0..x.n * x.c {
        let src = &x.data[plane * p..(plane + 1) * p];
        for gr in 0..rows {
            let (r0, r1) = (gr * x.h / rows, (gr + 1) * x.h / rows);
            for gc in 0..cols {
                let (c0, c1) = (gc * x.w / cols, (gc + 1) * x.w / cols);
                let mut best = r0 * x.w + c0;
                for r in r0..r1 {
                    for c in c0..c1 {
                        let i = r * x.w + c;
                        if src[i] > src[best] {
                            best = i;
                        }
                    }
                }
                let o = plane * rows * cols + gr * cols + gc;
                y.data[o] = src[best];
                idx[o] = plane * p + best;
            }
        }
    }
    (y, idx)
}

/// 2×2, stride-2 max pooling (odd trailing rows/columns are dropped).
pub fn max_pool2(x: &Tensor) -> (Tensor, Vec<usize>) {
    let (h, w) = (x.h / 2, x.w / 2);
    let mut y = Tensor::zeros(x.n, x.c, h, w);
    let mut idx = vec![0; y.len()];
    let p = x.plane();
    for plane in 0..x.n * x.c {
        let base = plane * p;
        for r in 0..h {
            for c in 0..w {
                let cands = [
                    (2 * r) * x.w + 2 * c,
                    (2 * r) * x.w + 2 * c + 1,
                    (2 * r + 1) * x.w + 2 * c,
                    (2 * r + 1) * x.w + 2 * c + 1,
                ];
                let mut best = cands[0];
                for &i in &cands[1..] {
                    if x.data[base + i] > x.data[base + best] {
                        best = i;
                    }
                }
                let o = plane * h * w + r * w + c;
                y.data[o] = x.data[base + best];
                idx[o] = base + best;
            }
        }
    }
    (y, idx)
}

/// Routes pooled gradients back to the winning positions.
pub fn pool_backward(dy: &Tensor, idx: &[usize], in_shape: (usize, usize, usize, usize)) -> Tensor {
    let (n, c, h, w) = in_shape;
    let mut dx = Tensor::zeros(n, c, h, w);
    for (g, &i) in dy.data.iter().zip(idx) {
        dx.data[i] += g;
    }
    dx
}

/// Nearest-neighbour ×2 upsampling.
pub fn upsample2(x: &Tensor) -> Tensor {
    let (h, w) = (x.h * 2, x.w * 2);
    let mut y = Tensor::zeros(x.n, x.c, h, w);
    for plane in 0..x.n * x.c {
        for r in 0..h {
            for c in 0..w {
                y.data[plane * h * w + r * w + c] = x.data[plane * x.plane() + (r / 2) * x.w + c / 2];
            }
        }
    }
    y
}

pub fn upsample2_backward(dy: &Tensor) -> Tensor {
    let (h, w) = (dy.h / 2, dy.w / 2);
    let mut dx = Tensor::zeros(dy.n, dy.c, h, w);
    for plane in 0..dy.n * dy.c {
        for r in 0..dy.h {
            for c in 0..dy.w {
                dx.data[plane * h * w + (r / 2) * w + c / 2] += dy.data[plane * dy.plane() + r * dy.w + c];
            }
        }
    }
    dx
}

/// Inverted dropout: returns the scale mask (0 or 1/(1−p)) it applied.
pub fn dropout(x: &mut Tensor, p: f64, rng: &mut impl Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    for (v, m) in x.data.iter_mut().zip(&mask) {
        *v *= m;
    }
    mask
}

pub fn apply_mask(dy: &mut Tensor, mask: &[f64]) {
    for (g, m) in dy.data.iter_mut().zip(mask) {
        *g *= m;
    }
}

/// `y[n, fout] = x[n, fin] · Wᵀ + b`.
pub fn linear_forward(x: &[f64], n: usize, fin: usize, fout: usize, weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n * fout];
    gemm(n, fin, fout, x, (fin as isize, 1), weight, (1, fin as isize), &mut y, false);
    for row in y.chunks_mut(fout) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
    y
}

/// Accumulates `dW += dyᵀ · x`, `db += Σ dy`; returns `dx = dy · W`.
#[allow(clippy::too_many_arguments)]
pub fn linear_backward(
    dy: &[f64],
    x: &[f64],
    n: usize,
    fin: usize,
    fout: usize,
    weight: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    for row in dy.chunks(fout) {
        for (d, g) in dbias.iter_mut().zip(row) {
            *d += g;
        }
    }
    gemm(fout, n, fin, dy, (1, fout as isize), x, (fin as isize, 1), dweight, true);
    let mut dx = vec![0.0; n * fin];
    gemm(n, fout, fin, dy, (fout as isize, 1), weight, (fin as isize, 1), &mut dx, false);
    dx
}

/// Softmax over `k` scores, numerically stabilized.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

/// Sum of per-position cross-entropies for logits laid out `n × k × p`
/// (class-major per sample), and the gradient of that sum.
pub fn softmax_cross_entropy(logits: &[f64], n: usize, k: usize, p: usize, labels: &[usize]) -> (f64, Vec<f64>) {
    assert_eq!(logits.len(), n * k * p);
    assert_eq!(labels.len(), n * p);
    let mut total = 0.0;
    let mut grad = vec![0.0; logits.len()];
    let mut scores = vec![0.0; k];
    for b in 0..n {
        for j in 0..p {
            for (c, s) in scores.iter_mut().enumerate() {
                *s = logits[(b * k + c) * p + j];
            }
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
            let lse = m + z.ln();
            let y = labels[b * p + j];
            total += lse - scores[y];
            for (c, s) in scores.iter().enumerate() {
                let prob = (s - lse).exp();
                grad[(b * k + c) * p + j] = prob - if c == y { 1.0 } else { 0.0 };
            }
        }
    }
    (total, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_conv(x: &Tensor, s: &ConvSpec, w: &[f64], b: &[f64]) -> Tensor {
        let (ho, wo) = s.out_dims(x.h, x.w);
        let mut y = Tensor::zeros(x.n, s.cout, ho, wo);
        for n in 0..x.n {
            for co in 0..s.cout {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = b[co];
                        for ci in 0..s.cin {
                            for ky in 0..s.k {
                                for kx in 0..s.k {
                                    let iy = (oy * s.stride + ky) as isize - s.pad as isize;
                                    let ix = (ox * s.stride + kx) as isize - s.pad as isize;
                                    if iy < 0 || ix < 0 || iy >= x.h as isize || ix >= x.w as isize {
                                        continue;
                                    }
                                    acc += w[((co * s.cin + ci) * s.k + ky) * s.k + kx]
                                        * x.data[((n * x.c + ci) * x.h + iy as usize) * x.w + ix as usize];
                                }
                            }
                        }
                        y.data[((n * s.cout + co) * ho + oy) * wo + ox] = acc;
                    }
                }
            }
        }
        y
    }

    fn pseudo(n: usize, seed: u64) -> Vec<f64> {
        (0..n)
            .map(|i| (((i as u64 * 2654435761 + seed * 97) % 1000) as f64 / 500.0) - 1.0)
            .collect()
    }

    #[test]
    fn conv_matches_direct_loops() {
        for (stride, h, w) in [(1, 5, 7), (2, 8, 6), (2, 7, 7)] {
            let s = ConvSpec::strided(3, 4, 3, stride);
            let x = Tensor::from_vec(2, 3, h, w, pseudo(2 * 3 * h * w, 1));
            let wt = pseudo(4 * 27, 2);
            let b = pseudo(4, 3);
            let (y, _) = conv_forward(&x, &s, &wt, &b);
            let z = naive_conv(&x, &s, &wt, &b);
            assert_eq!((y.h, y.w), (z.h, z.w));
            for (a, b) in y.data.iter().zip(&z.data) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn upsample_is_nearest() {
        let x = Tensor::from_vec(1, 1, 2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = upsample2(&x);
        assert_eq!(y.h, 4);
        for r in 0..4 {
            for c in 0..6 {
                assert_eq!(y.data[r * 6 + c], x.data[(r / 2) * 3 + c / 2]);
            }
        }
        let back = upsample2_backward(&y);
        assert_eq!(back.data, x.data.iter().map(|v| v * 4.0).collect::<Vec<_>>());
    }

    #[test]
    fn pooling_picks_maxima() {
        let x = Tensor::from_vec(1, 1, 2, 4, vec![1.0, 5.0, 2.0, 0.0, 3.0, 4.0, 9.0, 1.0]);
        let (y, _) = max_pool2(&x);
        assert_eq!(y.data, vec![5.0, 9.0]);
        let (g, _) = grid_max_pool(&x, 1, 2);
        assert_eq!(g.data, vec![5.0, 9.0]);
        let (g, _) = grid_max_pool(&x, 1, 1);
        assert_eq!(g.data, vec![9.0]);
    }

    #[test]
    fn uniform_logits_give_log_k() {
        let (loss, _) = softmax_cross_entropy(&[0.0; 12], 2, 3, 2, &[0, 1, 2, 0]);
        assert!((loss - 4.0 * 3f64.ln()).abs() < 1e-12);
        let p = softmax(&[1000.0, 1000.0, -1000.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
