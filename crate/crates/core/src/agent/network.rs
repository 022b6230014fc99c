use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::game::{Action, Encoding};

use super::linalg::{col2im, gemm, im2col, ConvGeometry};
use super::AgentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

/// Shape of the actor-critic network: convolutions, one hidden fully
/// connected layer, then a policy head and a value head. ReLU everywhere
/// except the heads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    /// `(channels, height, width)` of one observation.
    pub input: (usize, usize, usize),
    pub convs: Vec<ConvSpec>,
    pub hidden: usize,
    pub n_actions: usize,
}

impl ArchSpec {
    /// Desk-scale network for one-hot boards: 3x3/1 conv (32), 3x3/1 conv (64), FC 256.
    pub fn symbolic(height: usize, width: usize) -> Self {
        let conv = |out_channels| ConvSpec {
            out_channels,
            kernel: 3,
            stride: 1,
            padding: 0,
        };
        Self {
            input: Encoding::Symbolic.shape(height, width),
            convs: vec![conv(32), conv(64)],
            hidden: 256,
            n_actions: Action::COUNT,
        }
    }

    /// Pixel network: 8x8/4 (32), 4x4/2 (64), 3x3/1 (64), FC 512.
    pub fn pixel(height: usize, width: usize) -> Self {
        let conv = |out_channels, kernel, stride| ConvSpec {
            out_channels,
            kernel,
            stride,
            padding: 0,
        };
        Self {
            input: Encoding::Pixel.shape(height, width),
            convs: vec![conv(32, 8, 4), conv(64, 4, 2), conv(64, 3, 1)],
            hidden: 512,
            n_actions: Action::COUNT,
        }
    }

    pub fn for_encoding(encoding: Encoding, height: usize, width: usize) -> Self {
        match encoding {
            Encoding::Symbolic => Self::symbolic(height, width),
            Encoding::Pixel => Self::pixel(height, width),
        }
    }

    pub fn input_len(&self) -> usize {
        self.input.0 * self.input.1 * self.input.2
    }

    fn geometries(&self) -> Result<Vec<ConvGeometry>, AgentError> {
        let (mut c, mut h, mut w) = self.input;
        let mut out = Vec::with_capacity(self.convs.len());
        for (i, spec) in self.convs.iter().enumerate() {
            let span = |size: usize| {
                let padded = size + 2 * spec.padding;
                (spec.stride > 0 && padded >= spec.kernel)
                    .then(|| (padded - spec.kernel) / spec.stride + 1)
            };
            let (Some(oh), Some(ow)) = (span(h), span(w)) else {
                return Err(AgentError::Architecture(format!(
                    "conv layer {i} ({}x{} stride {}) does not fit a {h}x{w} input",
                    spec.kernel, spec.kernel, spec.stride
                )));
            };
            out.push(ConvGeometry {
                in_c: c,
                in_h: h,
                in_w: w,
                kernel: spec.kernel,
                stride: spec.stride,
                padding: spec.padding,
                out_h: oh,
                out_w: ow,
            });
            (c, h, w) = (spec.out_channels, oh, ow);
        }
        Ok(out)
    }

    fn layout(&self) -> Result<Layout, AgentError> {
        let geoms = self.geometries()?;
        let mut offset = 0;
        let mut take = |len: usize| {
            let at = offset;
            offset += len;
            at
        };
        let mut convs = Vec::new();
        for (spec, g) in self.convs.iter().zip(&geoms) {
            let w = take(spec.out_channels * g.patch_len());
            let b = take(spec.out_channels);
            convs.push(DenseSlot { w, b, rows: spec.out_channels, cols: g.patch_len() });
        }
        let flat = match (self.convs.last(), geoms.last()) {
            (Some(spec), Some(g)) => spec.out_channels * g.out_h * g.out_w,
            _ => self.input_len(),
        };
        let fc = DenseSlot { w: take(self.hidden * flat), b: take(self.hidden), rows: self.hidden, cols: flat };
        let policy = DenseSlot {
            w: take(self.n_actions * self.hidden),
            b: take(self.n_actions),
            rows: self.n_actions,
            cols: self.hidden,
        };
        let value = DenseSlot { w: take(self.hidden), b: take(1), rows: 1, cols: self.hidden };
        Ok(Layout { geoms, convs, fc, policy, value, total: offset })
    }

    pub fn param_count(&self) -> Result<usize, AgentError> {
        Ok(self.layout()?.total)
    }
}

#[derive(Debug, Clone, Copy)]
struct DenseSlot {
    w: usize,
    b: usize,
    rows: usize,
    cols: usize,
}

impl DenseSlot {
    fn weights<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        &theta[self.w..self.w + self.rows * self.cols]
    }

    fn bias<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        &theta[self.b..self.b + self.rows]
    }
}

#[derive(Debug, Clone)]
struct Layout {
    geoms: Vec<ConvGeometry>,
    convs: Vec<DenseSlot>,
    fc: DenseSlot,
    policy: DenseSlot,
    value: DenseSlot,
    total: usize,
}

/// Network weights plus the RMSprop accumulators, both flat.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    arch: ArchSpec,
    pub theta: Vec<f64>,
    pub accum: Vec<f64>,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub batch: usize,
    /// `[batch][n_actions]`
    pub logits: Vec<f64>,
    /// `[batch]`
    pub values: Vec<f64>,
    cols: Vec<Vec<f64>>,
    conv_out: Vec<Vec<f64>>,
    flat: Vec<f64>,
    hidden: Vec<f64>,
}

impl ForwardPass {
    /// Which rectified units are active, in layer order. Two passes with
    /// different patterns lie on different linear pieces of the network.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.conv_out.iter().flatten().chain(&self.hidden).map(|&v| v > 0.0).collect()
    }
}

/// Box-Muller standard normal sample.
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Writes a `rows x cols` matrix with orthonormal rows (or columns, whichever
/// is fewer) scaled by `gain`.
fn orthogonal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, gain: f64, out: &mut [f64]) {
    let (short, long) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| standard_normal(rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain
                * if rows <= cols {
                    basis[r][c]
                } else {
                    basis[c][r]
                };
        }
    }
}

fn relu_in_place(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

fn add_row_bias(x: &mut [f64], cols: usize, bias: &[f64]) {
    for (row, b) in x.chunks_mut(cols).zip(bias) {
        row.iter_mut().for_each(|v| *v += b);
    }
}

fn add_col_bias(x: &mut [f64], cols: usize, bias: &[f64]) {
    for row in x.chunks_mut(cols) {
        row.iter_mut().zip(bias).for_each(|(v, b)| *v += b);
    }
}

pub const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
pub const HEAD_GAIN: f64 = 0.01;

impl PolicyParams {
    /// Orthogonal initialization: gain sqrt(2) for hidden layers, 0.01 for
    /// both heads, zero biases.
    pub fn init<R: Rng + ?Sized>(arch: ArchSpec, rng: &mut R) -> Result<Self, AgentError> {
        let layout = arch.layout()?;
        let mut theta = vec![0.0; layout.total];
        for slot in layout.convs.iter().chain(std::iter::once(&layout.fc)) {
            let w = &mut theta[slot.w..slot.w + slot.rows * slot.cols];
            orthogonal(rng, slot.rows, slot.cols, HIDDEN_GAIN, w);
        }
        for slot in [layout.policy, layout.value] {
            let w = &mut theta[slot.w..slot.w + slot.rows * slot.cols];
            orthogonal(rng, slot.rows, slot.cols, HEAD_GAIN, w);
        }
        let accum = vec![0.0; layout.total];
        Ok(Self { arch, theta, accum })
    }

    pub fn from_parts(arch: ArchSpec, theta: Vec<f64>, accum: Vec<f64>) -> Result<Self, AgentError> {
        let total = arch.param_count()?;
        if theta.len() != total || accum.len() != total {
            return Err(AgentError::Shape(format!(
                "architecture needs {total} parameters, got {} weights and {} accumulators",
                theta.len(),
                accum.len()
            )));
        }
        Ok(Self { arch, theta, accum })
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Zeroes both output heads (weights and biases).
    pub fn zero_heads(&mut self) {
        let layout = self.arch.layout().expect("validated at construction");
        for slot in [layout.policy, layout.value] {
            self.theta[slot.w..slot.w + slot.rows * slot.cols].fill(0.0);
            self.theta[slot.b..slot.b + slot.rows].fill(0.0);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.theta.iter().chain(&self.accum).all(|v| v.is_finite())
    }

    /// Batched forward pass over `obs`, laid out `[batch][C][H][W]`.
    pub fn forward(&self, obs: &[f64]) -> Result<ForwardPass, AgentError> {
        let per = self.arch.input_len();
        if per == 0 || !obs.len().is_multiple_of(per) {
            return Err(AgentError::Shape(format!(
                "observation buffer of {} values is not a multiple of {per}",
                obs.len()
            )));
        }
        let batch = obs.len() / per;
        let layout = self.arch.layout()?;
        let theta = &self.theta;

        let mut cols = Vec::with_capacity(layout.geoms.len());
        let mut conv_out: Vec<Vec<f64>> = Vec::with_capacity(layout.geoms.len());
        if !layout.geoms.is_empty() {
            // [N][C][H][W] -> [C][N][H][W]
            let (c, h, w) = self.arch.input;
            let plane = h * w;
            let mut x = vec![0.0; obs.len()];
            for n in 0..batch {
                for ch in 0..c {
                    let src = &obs[(n * c + ch) * plane..(n * c + ch + 1) * plane];
                    x[(ch * batch + n) * plane..(ch * batch + n + 1) * plane].copy_from_slice(src);
                }
            }
            for (g, slot) in layout.geoms.iter().zip(&layout.convs) {
                let input = conv_out.last().unwrap_or(&x);
                let patches = im2col(input, batch, g);
                let width = batch * g.out_h * g.out_w;
                let mut out = vec![0.0; slot.rows * width];
                gemm(slot.rows, slot.cols, width, slot.weights(theta), false, &patches, false, &mut out, false);
                add_row_bias(&mut out, width, slot.bias(theta));
                relu_in_place(&mut out);
                cols.push(patches);
                conv_out.push(out);
            }
        }

        let flat_len = layout.fc.cols;
        let flat = match (conv_out.last(), layout.geoms.last()) {
            (Some(last), Some(g)) => {
                let plane = g.out_h * g.out_w;
                let channels = flat_len / plane;
                let mut f = vec![0.0; batch * flat_len];
                for ch in 0..channels {
                    for n in 0..batch {
                        let src = &last[(ch * batch + n) * plane..(ch * batch + n + 1) * plane];
                        f[n * flat_len + ch * plane..n * flat_len + (ch + 1) * plane].copy_from_slice(src);
                    }
                }
                f
            }
            _ => obs.to_vec(),
        };

        let hdim = layout.fc.rows;
        let mut hidden = vec![0.0; batch * hdim];
        gemm(batch, flat_len, hdim, &flat, false, layout.fc.weights(theta), true, &mut hidden, false);
        add_col_bias(&mut hidden, hdim, layout.fc.bias(theta));
        relu_in_place(&mut hidden);

        let na = layout.policy.rows;
        let mut logits = vec![0.0; batch * na];
        gemm(batch, hdim, na, &hidden, false, layout.policy.weights(theta), true, &mut logits, false);
        add_col_bias(&mut logits, na, layout.policy.bias(theta));

        let mut values = vec![0.0; batch];
        gemm(batch, hdim, 1, &hidden, false, layout.value.weights(theta), true, &mut values, false);
        let vb = layout.value.bias(theta)[0];
        values.iter_mut().for_each(|v| *v += vb);

        Ok(ForwardPass { batch, logits, values, cols, conv_out, flat, hidden })
    }

    /// Gradient of a scalar loss given its gradients with respect to the
    /// logits (`[batch][n_actions]`) and values (`[batch]`).
    pub fn backward(&self, pass: &ForwardPass, dlogits: &[f64], dvalues: &[f64]) -> Vec<f64> {
        let layout = self.arch.layout().expect("validated at construction");
        let theta = &self.theta;
        let batch = pass.batch;
        let mut grad = vec![0.0; layout.total];
        let (hdim, na) = (layout.fc.rows, layout.policy.rows);
        assert_eq!(dlogits.len(), batch * na);
        assert_eq!(dvalues.len(), batch);

        // heads
        let p = layout.policy;
        gemm(na, batch, hdim, dlogits, true, &pass.hidden, false, &mut grad[p.w..p.w + na * hdim], false);
        for row in dlogits.chunks(na) {
            grad[p.b..p.b + na].iter_mut().zip(row).for_each(|(g, d)| *g += d);
        }
        let v = layout.value;
        gemm(1, batch, hdim, dvalues, false, &pass.hidden, false, &mut grad[v.w..v.w + hdim], false);
        grad[v.b] = dvalues.iter().sum();

        let mut dhidden = vec![0.0; batch * hdim];
        gemm(batch, na, hdim, dlogits, false, p.weights(theta), false, &mut dhidden, false);
        gemm(batch, 1, hdim, dvalues, false, v.weights(theta), false, &mut dhidden, true);
        dhidden.iter_mut().zip(&pass.hidden).for_each(|(d, h)| {
            if *h <= 0.0 {
                *d = 0.0;
            }
        });

        // fully connected
        let fc = layout.fc;
        let flat_len = fc.cols;
        gemm(hdim, batch, flat_len, &dhidden, true, &pass.flat, false, &mut grad[fc.w..fc.w + hdim * flat_len], false);
        for row in dhidden.chunks(hdim) {
            grad[fc.b..fc.b + hdim].iter_mut().zip(row).for_each(|(g, d)| *g += d);
        }
        if layout.geoms.is_empty() {
            return grad;
        }
        let mut dflat = vec![0.0; batch * flat_len];
        gemm(batch, hdim, flat_len, &dhidden, false, fc.weights(theta), false, &mut dflat, false);

        // back to [C][N][H][W]
        let last = layout.geoms.last().unwrap();
        let plane = last.out_h * last.out_w;
        let channels = flat_len / plane;
        let mut dout = vec![0.0; batch * flat_len];
        for ch in 0..channels {
            for n in 0..batch {
                dout[(ch * batch + n) * plane..(ch * batch + n + 1) * plane]
                    .copy_from_slice(&dflat[n * flat_len + ch * plane..n * flat_len + (ch + 1) * plane]);
            }
        }

        for i in (0..layout.geoms.len()).rev() {
            let g = &layout.geoms[i];
            let slot = layout.convs[i];
            dout.iter_mut().zip(&pass.conv_out[i]).for_each(|(d, a)| {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            });
            let width = batch * g.out_h * g.out_w;
            gemm(
                slot.rows,
                width,
                slot.cols,
                &dout,
                false,
                &pass.cols[i],
                true,
                &mut grad[slot.w..slot.w + slot.rows * slot.cols],
                false,
            );
            for (gb, row) in grad[slot.b..slot.b + slot.rows].iter_mut().zip(dout.chunks(width)) {
                *gb = row.iter().sum();
            }
            if i == 0 {
                break;
            }
            let mut dcols = vec![0.0; slot.cols * width];
            gemm(slot.cols, slot.rows, width, slot.weights(theta), true, &dout, false, &mut dcols, false);
            dout = col2im(&dcols, batch, g);
        }
        grad
    }

    /// Logits and value for a single observation.
    pub fn forward_one(&self, obs: &[f64]) -> Result<([f64; Action::COUNT], f64), AgentError> {
        if obs.len() != self.arch.input_len() {
            return Err(AgentError::Shape(format!(
                "expected {} observation values, got {}",
                self.arch.input_len(),
                obs.len()
            )));
        }
        let pass = self.forward(obs)?;
        let mut logits = [0.0; Action::COUNT];
        logits.copy_from_slice(&pass.logits[..Action::COUNT]);
        Ok((logits, pass.values[0]))
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `log softmax`, computed without forming the probabilities first.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// Index of the largest logit; ties go to the lowest index.
pub fn greedy(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, l) in logits.iter().enumerate() {
        if *l > logits[best] {
            best = i;
        }
    }
    best
}

/// Samples an index from `softmax(logits)`.
pub fn sample<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> usize {
    let probs = softmax(logits);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symbolic_layout_sizes() {
        let arch = ArchSpec::symbolic(7, 7);
        // conv1 32x63+32, conv2 64x288+64, fc 256x576+256, pi 5x256+5, v 256+1
        let expected = 32 * 63 + 32 + 64 * 288 + 64 + 256 * 576 + 256 + 5 * 256 + 5 + 256 + 1;
        assert_eq!(arch.param_count().unwrap(), expected);
    }

    #[test]
    fn pixel_arch_on_ten_by_ten() {
        let arch = ArchSpec::pixel(10, 10);
        assert_eq!(arch.input, (3, 80, 80));
        let layout = arch.layout().unwrap();
        let last = layout.geoms.last().unwrap();
        assert_eq!((last.out_h, last.out_w), (6, 6));
    }

    #[test]
    fn too_small_input_rejected() {
        let arch = ArchSpec::symbolic(3, 3);
        assert!(matches!(arch.param_count(), Err(AgentError::Architecture(_))));
    }

    #[test]
    fn zero_heads_give_uniform_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = PolicyParams::init(ArchSpec::symbolic(7, 7), &mut rng).unwrap();
        params.zero_heads();
        let obs: Vec<f64> = (0..params.arch().input_len()).map(|i| (i % 3) as f64).collect();
        let (logits, value) = params.forward_one(&obs).unwrap();
        assert!(logits.iter().all(|l| *l == 0.0));
        assert_eq!(value, 0.0);
        for p in softmax(&logits) {
            assert!((p - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn batched_forward_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = PolicyParams::init(ArchSpec::symbolic(6, 7), &mut rng).unwrap();
        let per = params.arch().input_len();
        let obs: Vec<f64> = (0..3 * per).map(|_| rng.gen_range(0.0..1.0)).collect();
        let pass = params.forward(&obs).unwrap();
        for n in 0..3 {
            let (l, v) = params.forward_one(&obs[n * per..(n + 1) * per]).unwrap();
            for a in 0..5 {
                assert!((pass.logits[n * 5 + a] - l[a]).abs() < 1e-12);
            }
            assert!((pass.values[n] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = PolicyParams::init(ArchSpec::symbolic(7, 7), &mut rng).unwrap();
        assert!(matches!(params.forward(&[0.0; 10]), Err(AgentError::Shape(_))));
    }

    #[test]
    fn orthogonal_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut w = vec![0.0; 4 * 9];
        orthogonal(&mut rng, 4, 9, 1.0, &mut w);
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..9).map(|k| w[i * 9 + k] * w[j * 9 + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn greedy_breaks_ties_low() {
        assert_eq!(greedy(&[0.0, 1.0, 1.0, 0.5, 1.0]), 1);
        assert_eq!(greedy(&[0.0; 5]), 0);
    }

    proptest! {
        #[test]
        fn softmax_normalised(logits in proptest::collection::vec(-50.0f64..50.0, 5)) {
            let p = softmax(&logits);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let lp = log_softmax(&logits);
            for (a, b) in p.iter().zip(&lp) {
                prop_assert!((a.ln() - b).abs() < 1e-9 || *a < 1e-300);
            }
        }
    }
}
