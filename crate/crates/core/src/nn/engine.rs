//! Forward and backward passes over flat 64-bit parameter buffers.
//!
//! Activations are stored channel-major (`[c][y][x]`). All arithmetic is
//! in `f64`; only the persisted parameters are `f32`.

use rayon::prelude::*;

use super::model::{layout, Model, ModelConfig, TensorSpec, INPUT_CHANNELS};
use crate::error::{Error, Result};
use crate::image::ImageTensor;

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(z)` against `y`, without forming the
/// probability.
#[inline]
pub(crate) fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Gradients in the parameter layout of the model they were computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<TensorSpec>,
    pub values: Vec<f64>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .map(|t| &self.values[t.range()])
    }
}

/// Offsets of every tensor, resolved once per pass.
struct Plan {
    side: usize,
    k: usize,
    channels: Vec<usize>,
    conv_w: Vec<usize>,
    conv_b: Vec<usize>,
    hidden: Option<(usize, usize, usize)>,
    head_w: usize,
    head_b: usize,
    n_params: usize,
}

impl Plan {
    fn new(cfg: &ModelConfig) -> Self {
        let specs = layout(cfg);
        let at = |name: &str| specs.iter().find(|s| s.name == name).map(|s| s.offset);
        let blocks = cfg.channels_per_block.len();
        let mut channels = vec![INPUT_CHANNELS];
        channels.extend_from_slice(&cfg.channels_per_block);
        Plan {
            side: cfg.input_side,
            k: cfg.kernel_size,
            channels,
            conv_w: (0..blocks).map(|i| at(&format!("conv{i}.weight")).unwrap()).collect(),
            conv_b: (0..blocks).map(|i| at(&format!("conv{i}.bias")).unwrap()).collect(),
            hidden: at("hidden.weight").map(|w| (w, at("hidden.bias").unwrap(), cfg.dense_hidden)),
            head_w: at("head.weight").unwrap(),
            head_b: at("head.bias").unwrap(),
            n_params: specs.last().map_or(0, |s| s.offset + s.len()),
        }
    }

    fn blocks(&self) -> usize {
        self.conv_w.len()
    }

    fn features(&self) -> usize {
        *self.channels.last().unwrap()
    }
}

/// Everything the backward pass needs from one image's forward pass.
struct Trace {
    /// Input of each block, `channels[b] x side_b x side_b`.
    inputs: Vec<Vec<f64>>,
    /// Post-ReLU conv output of each block.
    activations: Vec<Vec<f64>>,
    /// Winning index inside the block's activation plane for each pooled cell.
    argmax: Vec<Vec<u32>>,
    pooled_last: usize,
    features: Vec<f64>,
    hidden: Vec<f64>,
    logit: f64,
}

/// Unrolls zero-padded `k x k` patches into a `[c_in * k * k, s * s]`
/// row-major matrix; row `(c, ky, kx)` holds the shifted plane.
fn im2col(input: &[f64], c_in: usize, s: usize, k: usize) -> Vec<f64> {
    let p = k / 2;
    let plane = s * s;
    let mut col = vec![0.0; c_in * k * k * plane];
    for c in 0..c_in {
        let src = &input[c * plane..(c + 1) * plane];
        for ky in 0..k {
            let (y_lo, y_hi) = (p.saturating_sub(ky), (s + p).saturating_sub(ky).min(s));
            for kx in 0..k {
                let (x_lo, x_hi) = (p.saturating_sub(kx), (s + p).saturating_sub(kx).min(s));
                if x_lo >= x_hi {
                    continue;
                }
                let row = &mut col[((c * k + ky) * k + kx) * plane..][..plane];
                for y in y_lo..y_hi {
                    let sy = y + ky - p;
                    row[y * s + x_lo..y * s + x_hi]
                        .copy_from_slice(&src[sy * s + x_lo + kx - p..sy * s + x_hi + kx - p]);
                }
            }
        }
    }
    col
}

/// Adjoint of [`im2col`]: scatters patch rows back onto the input planes.
fn col2im(col: &[f64], c_in: usize, s: usize, k: usize, dx: &mut [f64]) {
    let p = k / 2;
    let plane = s * s;
    for c in 0..c_in {
        let dplane = &mut dx[c * plane..(c + 1) * plane];
        for ky in 0..k {
            let (y_lo, y_hi) = (p.saturating_sub(ky), (s + p).saturating_sub(ky).min(s));
            for kx in 0..k {
                let (x_lo, x_hi) = (p.saturating_sub(kx), (s + p).saturating_sub(kx).min(s));
                if x_lo >= x_hi {
                    continue;
                }
                let row = &col[((c * k + ky) * k + kx) * plane..][..plane];
                for y in y_lo..y_hi {
                    let sy = y + ky - p;
                    let d = &mut dplane[sy * s + x_lo + kx - p..sy * s + x_hi + kx - p];
                    for (dv, gv) in d.iter_mut().zip(&row[y * s + x_lo..y * s + x_hi]) {
                        *dv += gv;
                    }
                }
            }
        }
    }
}

/// `C = alpha * A B + beta * C` for strided f64 matrices `A: m x kk`, `B: kk x n`,
/// with `C` row-major.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, kk: usize, n: usize, a: &[f64], (rsa, csa): (isize, isize), b: &[f64], (rsb, csb): (isize, isize), beta: f64, c: &mut [f64]) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: every index reached through the strides lies inside the
    // respective slice; callers pass full matrices of the stated shapes.
    unsafe {
        matrixmultiply::dgemm(
            m, kk, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// Same-padded stride-1 convolution of CHW planes of side `s`.
fn conv_forward(input: &[f64], c_in: usize, s: usize, w: &[f64], b: &[f64], c_out: usize, k: usize) -> Vec<f64> {
    let plane = s * s;
    let r = c_in * k * k;
    let col = im2col(input, c_in, s, k);
    let mut out = vec![0.0; c_out * plane];
    for (o, dst) in out.chunks_exact_mut(plane).enumerate() {
        dst.fill(b[o]);
    }
    gemm(c_out, r, plane, w, (r as isize, 1), &col, (plane as isize, 1), 1.0, &mut out);
    out
}

/// Accumulates weight, bias and (optionally) input gradients of a conv layer.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    dz: &[f64],
    c_in: usize,
    s: usize,
    w: &[f64],
    c_out: usize,
    k: usize,
    dw: &mut [f64],
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let plane = s * s;
    let r = c_in * k * k;
    for (o, g) in dz.chunks_exact(plane).enumerate() {
        db[o] += g.iter().sum::<f64>();
    }
    let col = im2col(input, c_in, s, k);
    // dW[o, r] += sum_p dz[o, p] col[r, p]
    gemm(c_out, plane, r, dz, (plane as isize, 1), &col, (1, plane as isize), 1.0, dw);
    if let Some(dx) = dx {
        // dcol[r, p] = sum_o W[o, r] dz[o, p]
        let mut dcol = col;
        gemm(r, c_out, plane, w, (1, r as isize), dz, (plane as isize, 1), 0.0, &mut dcol);
        col2im(&dcol, c_in, s, k, dx);
    }
}

/// 2x2 stride-2 max pooling; ties keep the first cell in row-major order.
fn max_pool(a: &[f64], c: usize, s: usize) -> (Vec<f64>, Vec<u32>) {
    let h = s / 2;
    let mut out = Vec::with_capacity(c * h * h);
    let mut arg = Vec::with_capacity(c * h * h);
    for ch in 0..c {
        let base = ch * s * s;
        for y in 0..h {
            for x in 0..h {
                let cells = [
                    (2 * y) * s + 2 * x,
                    (2 * y) * s + 2 * x + 1,
                    (2 * y + 1) * s + 2 * x,
                    (2 * y + 1) * s + 2 * x + 1,
                ];
                let mut best = cells[0];
                for &i in &cells[1..] {
                    if a[base + i] > a[base + best] {
                        best = i;
                    }
                }
                out.push(a[base + best]);
                arg.push(best as u32);
            }
        }
    }
    (out, arg)
}

fn forward_one(plan: &Plan, params: &[f64], input: Vec<f64>) -> Trace {
    let mut inputs = Vec::with_capacity(plan.blocks());
    let mut activations = Vec::with_capacity(plan.blocks());
    let mut argmax = Vec::with_capacity(plan.blocks());
    let mut x = input;
    let mut s = plan.side;
    for b in 0..plan.blocks() {
        let (c_in, c_out) = (plan.channels[b], plan.channels[b + 1]);
        let w = &params[plan.conv_w[b]..plan.conv_w[b] + c_out * c_in * plan.k * plan.k];
        let bias = &params[plan.conv_b[b]..plan.conv_b[b] + c_out];
        let mut a = conv_forward(&x, c_in, s, w, bias, c_out, plan.k);
        for v in &mut a {
            *v = v.max(0.0);
        }
        let (pooled, arg) = max_pool(&a, c_out, s);
        inputs.push(std::mem::replace(&mut x, pooled));
        activations.push(a);
        argmax.push(arg);
        s /= 2;
    }
    let c = plan.features();
    let area = (s * s) as f64;
    let features: Vec<f64> = (0..c)
        .map(|ch| x[ch * s * s..(ch + 1) * s * s].iter().sum::<f64>() / area)
        .collect();
    let (hidden, top) = match plan.hidden {
        Some((w, b, n)) => {
            let h: Vec<f64> = (0..n)
                .map(|j| {
                    let row = &params[w + j * c..w + (j + 1) * c];
                    let z = params[b + j] + row.iter().zip(&features).map(|(a, b)| a * b).sum::<f64>();
                    z.max(0.0)
                })
                .collect();
            (h.clone(), h)
        }
        None => (Vec::new(), features.clone()),
    };
    let head = &params[plan.head_w..plan.head_w + top.len()];
    let logit = params[plan.head_b] + head.iter().zip(&top).map(|(a, b)| a * b).sum::<f64>();
    Trace {
        inputs,
        activations,
        argmax,
        pooled_last: s,
        features,
        hidden,
        logit,
    }
}

/// Adds `dlogit`-scaled parameter gradients of one image into `grad`.
fn backward_one(plan: &Plan, params: &[f64], t: &Trace, dlogit: f64, grad: &mut [f64]) {
    let top: &[f64] = if plan.hidden.is_some() { &t.hidden } else { &t.features };
    let nt = top.len();
    grad[plan.head_b] += dlogit;
    for (g, v) in grad[plan.head_w..plan.head_w + nt].iter_mut().zip(top) {
        *g += dlogit * v;
    }
    let head = &params[plan.head_w..plan.head_w + nt];
    let c = plan.features();
    let dfeat: Vec<f64> = match plan.hidden {
        Some((w, b, n)) => {
            let mut df = vec![0.0; c];
            for j in 0..n {
                if t.hidden[j] <= 0.0 {
                    continue;
                }
                let dh = dlogit * head[j];
                grad[b + j] += dh;
                for i in 0..c {
                    grad[w + j * c + i] += dh * t.features[i];
                    df[i] += dh * params[w + j * c + i];
                }
            }
            df
        }
        None => head.iter().map(|h| dlogit * h).collect(),
    };
    let s_last = t.pooled_last;
    let area = (s_last * s_last) as f64;
    let mut dpool: Vec<f64> = dfeat
        .iter()
        .flat_map(|&d| std::iter::repeat_n(d / area, s_last * s_last))
        .collect();
    for b in (0..plan.blocks()).rev() {
        let (c_in, c_out) = (plan.channels[b], plan.channels[b + 1]);
        let s = plan.side >> b;
        let h = s / 2;
        let act = &t.activations[b];
        let mut dz = vec![0.0; c_out * s * s];
        for ch in 0..c_out {
            for cell in 0..h * h {
                let i = ch * s * s + t.argmax[b][ch * h * h + cell] as usize;
                if act[i] > 0.0 {
                    dz[i] += dpool[ch * h * h + cell];
                }
            }
        }
        let nw = c_out * c_in * plan.k * plan.k;
        let w = &params[plan.conv_w[b]..plan.conv_w[b] + nw];
        let (lo, hi) = grad.split_at_mut(plan.conv_b[b]);
        let dw = &mut lo[plan.conv_w[b]..plan.conv_w[b] + nw];
        let db = &mut hi[..c_out];
        if b > 0 {
            let mut dx = vec![0.0; c_in * s * s];
            conv_backward(&t.inputs[b], &dz, c_in, s, w, c_out, plan.k, dw, db, Some(&mut dx));
            dpool = dx;
        } else {
            conv_backward(&t.inputs[b], &dz, c_in, s, w, c_out, plan.k, dw, db, None);
        }
    }
}

/// Channel-major copy of an image, checked against the model input.
fn to_planes(img: &ImageTensor, side: usize) -> Result<Vec<f64>> {
    let (h, w, c) = img.shape();
    if h != side || w != side || c != INPUT_CHANNELS {
        return Err(Error::ShapeMismatch(format!(
            "model expects {side}x{side}x{INPUT_CHANNELS}, got {h}x{w}x{c}"
        )));
    }
    let data = img.data();
    let plane = side * side;
    let mut out = vec![0.0; c * plane];
    for (i, px) in data.chunks_exact(c).enumerate() {
        for (ch, v) in px.iter().enumerate() {
            out[ch * plane + i] = *v;
        }
    }
    Ok(out)
}

fn check_params(plan: &Plan, params: &[f64]) -> Result<()> {
    if params.len() != plan.n_params {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters supplied, architecture needs {}",
            params.len(),
            plan.n_params
        )));
    }
    Ok(())
}

/// Logits for a batch under explicit 64-bit parameters.
pub fn logits_with(cfg: &ModelConfig, params: &[f64], batch: &[ImageTensor]) -> Result<Vec<f64>> {
    let plan = Plan::new(cfg);
    check_params(&plan, params)?;
    let planes = batch
        .iter()
        .map(|img| to_planes(img, plan.side))
        .collect::<Result<Vec<_>>>()?;
    Ok(planes
        .into_par_iter()
        .map(|x| forward_one(&plan, params, x).logit)
        .collect())
}

/// Mean fused BCE and its gradient for a batch under explicit parameters.
/// Per-image work runs in parallel; contributions are summed in batch order.
pub fn loss_and_gradients(
    cfg: &ModelConfig,
    params: &[f64],
    batch: &[ImageTensor],
    labels: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if batch.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "batch and labels",
            left: batch.len(),
            right: labels.len(),
        });
    }
    if batch.is_empty() {
        return Err(Error::EmptyDataset("empty batch".into()));
    }
    let plan = Plan::new(cfg);
    check_params(&plan, params)?;
    let planes = batch
        .iter()
        .map(|img| to_planes(img, plan.side))
        .collect::<Result<Vec<_>>>()?;
    let n = batch.len() as f64;
    let parts: Vec<(f64, Vec<f64>)> = planes
        .into_par_iter()
        .zip(labels.par_iter())
        .map(|(x, &y)| {
            let trace = forward_one(&plan, params, x);
            let mut g = vec![0.0; plan.n_params];
            backward_one(&plan, params, &trace, (sigmoid(trace.logit) - y) / n, &mut g);
            (bce_from_logit(trace.logit, y), g)
        })
        .collect();
    let mut loss = 0.0;
    let mut grad = vec![0.0; plan.n_params];
    for (l, g) in parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    Ok((loss / n, grad))
}

/// Probabilities for a batch of prepared images.
pub fn forward(model: &Model, batch: &[ImageTensor]) -> Result<Vec<f64>> {
    let logits = logits_with(model.config(), &model.params_f64(), batch)?;
    Ok(logits.into_iter().map(sigmoid).collect())
}

/// Gradients of the mean BCE over `batch` with respect to every parameter.
pub fn backward(model: &Model, batch: &[ImageTensor], labels: &[u8]) -> Result<Gradients> {
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let (_, values) = loss_and_gradients(model.config(), &model.params_f64(), batch, &y)?;
    Ok(Gradients {
        tensors: model.tensors().to_vec(),
        values,
    })
}
