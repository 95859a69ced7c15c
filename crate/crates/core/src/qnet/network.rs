//! The convolutional Q-network: a 3×3 same-padded convolution over the 4×d
//! state, ReLU, a hidden affine layer with ReLU, and a scalar affine output.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::QNetError;
use crate::embeddings::StateMatrix;

pub const CHANNELS: usize = 32;
pub const KERNEL: usize = 3;
pub const DEFAULT_HIDDEN: usize = 256;
const ROWS: usize = StateMatrix::ROWS;
const KERNEL_LEN: usize = CHANNELS * KERNEL * KERNEL;

// Batch items per gradient chunk. Chunks are summed in order, so gradients do
// not depend on how rayon schedules them.
const GRAD_CHUNK: usize = 32;

/// Network parameters `[kernels, W, b1, H, b2]`, all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetworkParams {
    pub(crate) dimension: usize,
    pub(crate) hidden: usize,
    /// `[CHANNELS, 1, 3, 3]`
    pub kernels: Vec<f64>,
    /// `[CHANNELS * 4 * d, hidden]`
    pub w: Vec<f64>,
    /// `[hidden]`
    pub b1: Vec<f64>,
    /// `[hidden, 1]`
    pub h: Vec<f64>,
    /// `[1]`
    pub b2: Vec<f64>,
}

impl QNetworkParams {
    pub const TENSOR_NAMES: [&'static str; 5] = ["kernels", "W", "b1", "H", "b2"];

    /// All-zero parameters of the right shapes.
    pub fn zeros(dimension: usize, hidden: usize) -> Self {
        let flat = CHANNELS * ROWS * dimension;
        QNetworkParams {
            dimension,
            hidden,
            kernels: vec![0.0; KERNEL_LEN],
            w: vec![0.0; flat * hidden],
            b1: vec![0.0; hidden],
            h: vec![0.0; hidden],
            b2: vec![0.0; 1],
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn flattened_conv_size(&self) -> usize {
        CHANNELS * ROWS * self.dimension
    }

    pub fn shapes(&self) -> [Vec<usize>; 5] {
        [
            vec![CHANNELS, 1, KERNEL, KERNEL],
            vec![self.flattened_conv_size(), self.hidden],
            vec![self.hidden],
            vec![self.hidden, 1],
            vec![1],
        ]
    }

    pub fn tensors(&self) -> [&[f64]; 5] {
        [&self.kernels, &self.w, &self.b1, &self.h, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [&mut self.kernels, &mut self.w, &mut self.b1, &mut self.h, &mut self.b2]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, m: &StateMatrix) -> Result<(), QNetError> {
        if m.dimension() != self.dimension {
            return Err(QNetError::ShapeMismatch {
                what: "state matrix".into(),
                expected: vec![ROWS, self.dimension],
                found: vec![ROWS, m.dimension()],
            });
        }
        Ok(())
    }

    pub(crate) fn check_same_shape(&self, other: &QNetworkParams) -> Result<(), QNetError> {
        if self.dimension != other.dimension || self.hidden != other.hidden {
            return Err(QNetError::ShapeMismatch {
                what: "parameters".into(),
                expected: vec![self.dimension, self.hidden],
                found: vec![other.dimension, other.hidden],
            });
        }
        Ok(())
    }
}

/// Glorot-uniform weights and zero biases, deterministic in `seed`.
pub fn init_network(dimension: usize, hidden: usize, seed: u64) -> Result<QNetworkParams, QNetError> {
    if dimension < 2 || hidden == 0 {
        return Err(QNetError::InvalidShape(format!("need d >= 2 and hidden >= 1, got d={dimension} hidden={hidden}")));
    }
    let mut params = QNetworkParams::zeros(dimension, hidden);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let receptive = KERNEL * KERNEL;
    let mut glorot = |values: &mut [f64], fan_in: usize, fan_out: usize| {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("valid Glorot range");
        values.iter_mut().for_each(|v| *v = dist.sample(&mut rng));
    };
    glorot(&mut params.kernels, receptive, CHANNELS * receptive);
    let flat = params.flattened_conv_size();
    glorot(&mut params.w, flat, hidden);
    glorot(&mut params.h, hidden, 1);
    Ok(params)
}

/// Intermediate values of one forward pass.
struct Activations {
    conv: Vec<f64>,
    hidden: Vec<f64>,
    output: f64,
}

fn convolve(kernels: &[f64], input: &[f64], d: usize, out: &mut [f64]) {
    for k in 0..CHANNELS {
        let kernel = &kernels[k * KERNEL * KERNEL..(k + 1) * KERNEL * KERNEL];
        let plane = &mut out[k * ROWS * d..(k + 1) * ROWS * d];
        for r in 0..ROWS {
            for c in 0..d {
                let mut acc = 0.0;
                for ki in 0..KERNEL {
                    let rr = r + ki;
                    if !(1..=ROWS).contains(&rr) {
                        continue;
                    }
                    let row = &input[(rr - 1) * d..rr * d];
                    for kj in 0..KERNEL {
                        let cc = c + kj;
                        if cc < 1 || cc > d {
                            continue;
                        }
                        acc += kernel[ki * KERNEL + kj] * row[cc - 1];
                    }
                }
                plane[r * d + c] = acc.max(0.0);
            }
        }
    }
}

fn forward_activations(p: &QNetworkParams, m: &StateMatrix) -> Activations {
    let d = p.dimension;
    let mut conv = vec![0.0; p.flattened_conv_size()];
    convolve(&p.kernels, m.as_slice(), d, &mut conv);

    let mut hidden = p.b1.clone();
    for (i, &a) in conv.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let row = &p.w[i * p.hidden..(i + 1) * p.hidden];
        for (z, w) in hidden.iter_mut().zip(row) {
            *z += a * w;
        }
    }
    hidden.iter_mut().for_each(|z| *z = z.max(0.0));

    let output = p.b2[0] + hidden.iter().zip(&p.h).map(|(a, h)| a * h).sum::<f64>();
    Activations { conv, hidden, output }
}

/// Q-value of one state.
pub fn forward(params: &QNetworkParams, m: &StateMatrix) -> Result<f64, QNetError> {
    params.check_input(m)?;
    Ok(forward_activations(params, m).output)
}

/// Q-values of many states, evaluated in parallel; each value is bit-identical
/// to a separate [`forward`] call.
pub fn forward_batch(params: &QNetworkParams, states: &[StateMatrix]) -> Result<Vec<f64>, QNetError> {
    states.iter().try_for_each(|m| params.check_input(m))?;
    let blocks: Vec<Vec<f64>> = states.par_chunks(FORWARD_BLOCK).map(|block| forward_block(params, block)).collect();
    Ok(blocks.concat())
}

const FORWARD_BLOCK: usize = 16;

// Same arithmetic, in the same order, as `forward_activations` per state, but
// each row of W is read once for the whole block.
fn forward_block(p: &QNetworkParams, block: &[StateMatrix]) -> Vec<f64> {
    let d = p.dimension;
    let convs: Vec<Vec<f64>> = block
        .iter()
        .map(|m| {
            let mut conv = vec![0.0; p.flattened_conv_size()];
            convolve(&p.kernels, m.as_slice(), d, &mut conv);
            conv
        })
        .collect();
    let mut hidden: Vec<Vec<f64>> = vec![p.b1.clone(); block.len()];
    for i in 0..p.flattened_conv_size() {
        let row = &p.w[i * p.hidden..(i + 1) * p.hidden];
        for (conv, h) in convs.iter().zip(hidden.iter_mut()) {
            let a = conv[i];
            if a == 0.0 {
                continue;
            }
            for (z, w) in h.iter_mut().zip(row) {
                *z += a * w;
            }
        }
    }
    hidden
        .into_iter()
        .map(|mut h| {
            h.iter_mut().for_each(|z| *z = z.max(0.0));
            p.b2[0] + h.iter().zip(&p.h).map(|(a, h)| a * h).sum::<f64>()
        })
        .collect()
}

/// Accumulates `scale * d(output)/d(params)` for one item into `grads`.
fn backward_into(p: &QNetworkParams, m: &StateMatrix, act: &Activations, scale: f64, grads: &mut QNetworkParams) {
    let d = p.dimension;
    let hidden = p.hidden;
    grads.b2[0] += scale;

    let mut d_hidden = vec![0.0; hidden];
    for (j, &a) in act.hidden.iter().enumerate() {
        grads.h[j] += scale * a;
        if a > 0.0 {
            d_hidden[j] = scale * p.h[j];
        }
    }
    for (g, dz) in grads.b1.iter_mut().zip(&d_hidden) {
        *g += dz;
    }

    let mut d_conv = vec![0.0; act.conv.len()];
    for (i, &a) in act.conv.iter().enumerate() {
        if a <= 0.0 {
            continue;
        }
        let w_row = &p.w[i * hidden..(i + 1) * hidden];
        let g_row = &mut grads.w[i * hidden..(i + 1) * hidden];
        let mut back = 0.0;
        for j in 0..hidden {
            g_row[j] += a * d_hidden[j];
            back += w_row[j] * d_hidden[j];
        }
        d_conv[i] = back;
    }

    let input = m.as_slice();
    for k in 0..CHANNELS {
        let plane = &d_conv[k * ROWS * d..(k + 1) * ROWS * d];
        let g_kernel = &mut grads.kernels[k * KERNEL * KERNEL..(k + 1) * KERNEL * KERNEL];
        for r in 0..ROWS {
            for c in 0..d {
                let g = plane[r * d + c];
                if g == 0.0 {
                    continue;
                }
                for ki in 0..KERNEL {
                    let rr = r + ki;
                    if !(1..=ROWS).contains(&rr) {
                        continue;
                    }
                    for kj in 0..KERNEL {
                        let cc = c + kj;
                        if cc < 1 || cc > d {
                            continue;
                        }
                        g_kernel[ki * KERNEL + kj] += g * input[(rr - 1) * d + cc - 1];
                    }
                }
            }
        }
    }
}

fn add_assign(acc: &mut QNetworkParams, other: &QNetworkParams) {
    for (a, b) in acc.tensors_mut().into_iter().zip(other.tensors()) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
    }
}

/// Mean squared error between targets and Q-values over the batch, with exact
/// gradients.
pub fn loss_and_gradients(
    params: &QNetworkParams,
    batch: &[(StateMatrix, f64)],
) -> Result<(f64, QNetworkParams), QNetError> {
    if batch.is_empty() {
        return Err(QNetError::EmptyBatch);
    }
    batch.iter().try_for_each(|(m, _)| params.check_input(m))?;
    let n = batch.len() as f64;
    let partials: Vec<(f64, QNetworkParams)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grads = QNetworkParams::zeros(params.dimension, params.hidden);
            let mut loss = 0.0;
            for (m, y) in chunk {
                let act = forward_activations(params, m);
                let residual = act.output - y;
                loss += residual * residual;
                backward_into(params, m, &act, 2.0 * residual / n, &mut grads);
            }
            (loss, grads)
        })
        .collect();
    let mut iter = partials.into_iter();
    let (mut loss, mut grads) = iter.next().expect("nonempty batch");
    for (l, g) in iter {
        loss += l;
        add_assign(&mut grads, &g);
    }
    Ok((loss / n, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(d: usize, seed: u64) -> StateMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new(-1.0, 1.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..d).map(|_| dist.sample(&mut rng)).collect()).collect();
        StateMatrix::from_rows([&rows[0], &rows[1], &rows[2], &rows[3]])
    }

    #[test]
    fn init_shapes_and_determinism() {
        let p = init_network(32, 256, 7).unwrap();
        assert_eq!(p.w.len(), 4096 * 256);
        assert_eq!(p.kernels.len(), 32 * 9);
        assert!(p.b1.iter().all(|&b| b == 0.0) && p.b2 == vec![0.0]);
        assert_eq!(p, init_network(32, 256, 7).unwrap());
        assert_ne!(p, init_network(32, 256, 8).unwrap());
        assert_eq!(p.num_parameters(), 288 + 4096 * 256 + 256 + 256 + 1);
        assert!(init_network(1, 8, 0).is_err());
    }

    #[test]
    fn zero_input_yields_output_bias() {
        let mut p = init_network(6, 10, 1).unwrap();
        p.b2[0] = 0.25;
        let zero = StateMatrix::from_rows([&[0.0; 6], &[0.0; 6], &[0.0; 6], &[0.0; 6]]);
        assert_eq!(forward(&p, &zero).unwrap(), 0.25);
    }

    #[test]
    fn output_layer_is_affine() {
        let mut p = init_network(6, 10, 2).unwrap();
        p.b2[0] = 0.1;
        let m = state(6, 3);
        let base = forward(&p, &m).unwrap();
        p.h.iter_mut().for_each(|h| *h *= 3.0);
        p.b2[0] *= 3.0;
        assert!((forward(&p, &m).unwrap() - 3.0 * base).abs() < 1e-12);
    }

    #[test]
    fn batch_matches_single() {
        let p = init_network(8, 16, 4).unwrap();
        let states: Vec<_> = (0..20).map(|s| state(8, s)).collect();
        let batch = forward_batch(&p, &states).unwrap();
        for (m, v) in states.iter().zip(batch) {
            assert_eq!(forward(&p, m).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn shape_mismatch() {
        let p = init_network(8, 16, 4).unwrap();
        assert!(matches!(forward(&p, &state(6, 0)), Err(QNetError::ShapeMismatch { .. })));
        assert!(matches!(loss_and_gradients(&p, &[]), Err(QNetError::EmptyBatch)));
    }

    #[test]
    fn exact_targets_give_zero_loss_and_gradients() {
        let p = init_network(6, 12, 5).unwrap();
        let m = state(6, 9);
        let y = forward(&p, &m).unwrap();
        let (loss, grads) = loss_and_gradients(&p, &[(m, y)]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.tensors().iter().all(|t| t.iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn duplicated_batch_is_mean_invariant() {
        let p = init_network(6, 12, 5).unwrap();
        let batch: Vec<_> = (0..3).map(|s| (state(6, s), s as f64)).collect();
        let doubled: Vec<_> = batch.iter().chain(batch.iter()).cloned().collect();
        let (l1, g1) = loss_and_gradients(&p, &batch).unwrap();
        let (l2, g2) = loss_and_gradients(&p, &doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}
