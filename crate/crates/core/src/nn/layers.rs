//! Layer primitives with hand-written backward passes.

use rand::Rng;

use crate::error::{Error, Result};

pub const KERNEL_WIDTH: usize = 3;

/// Channel-major 1-D feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1d {
    pub channels: usize,
    pub length: usize,
    pub data: Vec<f64>,
}

impl Tensor1d {
    pub fn zeros(channels: usize, length: usize) -> Self {
        Self {
            channels,
            length,
            data: vec![0.0; channels * length],
        }
    }

    pub fn new(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * length {
            return Err(Error::shape(format!(
                "{} values cannot fill {channels}x{length}",
                data.len()
            )));
        }
        Ok(Self { channels, length, data })
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.length)
    }
}

/// Trainable values with a same-shape gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn zeros(len: usize) -> Self {
        Self {
            value: vec![0.0; len],
            grad: vec![0.0; len],
        }
    }

    pub fn uniform<R: Rng>(len: usize, bound: f64, rng: &mut R) -> Self {
        Self {
            value: (0..len).map(|_| rng.random_range(-bound..=bound)).collect(),
            grad: vec![0.0; len],
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Width-3 convolution with zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    pub padding: usize,
    /// `[out][in][k]`
    pub kernel: Param,
    pub bias: Param,
}

impl Conv1d {
    pub fn zeros(in_channels: usize, out_channels: usize, stride: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            stride,
            padding: 1,
            kernel: Param::zeros(out_channels * in_channels * KERNEL_WIDTH),
            bias: Param::zeros(out_channels),
        }
    }

    /// He-uniform weights, zero bias.
    pub fn init<R: Rng>(in_channels: usize, out_channels: usize, stride: usize, rng: &mut R) -> Self {
        let fan_in = (in_channels * KERNEL_WIDTH) as f64;
        Self {
            kernel: Param::uniform(out_channels * in_channels * KERNEL_WIDTH, (6.0 / fan_in).sqrt(), rng),
            ..Self::zeros(in_channels, out_channels, stride)
        }
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len + 2 * self.padding - KERNEL_WIDTH) / self.stride + 1
    }

    /// Input tap matrix `[in][k][t] = x_padded[in, t*stride + k]` (im2col).
    fn taps(&self, x: &Tensor1d, out_len: usize) -> Vec<f64> {
        let mut taps = vec![0.0; self.in_channels * KERNEL_WIDTH * out_len];
        for ic in 0..self.in_channels {
            let xin = x.channel(ic);
            for k in 0..KERNEL_WIDTH {
                let row = &mut taps[(ic * KERNEL_WIDTH + k) * out_len..][..out_len];
                for (t, v) in row.iter_mut().enumerate() {
                    let i = (t * self.stride + k).wrapping_sub(self.padding);
                    if let Some(&xv) = xin.get(i) {
                        *v = xv;
                    }
                }
            }
        }
        taps
    }

    pub fn forward(&self, x: &Tensor1d) -> Result<Tensor1d> {
        if x.channels != self.in_channels {
            return Err(Error::shape(format!(
                "convolution expects {} input channels, got input of shape {}x{}",
                self.in_channels, x.channels, x.length
            )));
        }
        if self.stride > 1 && !x.length.is_multiple_of(self.stride) {
            return Err(Error::shape(format!(
                "stride-{} convolution needs a length divisible by {}, got {}",
                self.stride, self.stride, x.length
            )));
        }
        let out_len = self.output_len(x.length);
        let taps = self.taps(x, out_len);
        let fan = self.in_channels * KERNEL_WIDTH;
        let mut out = Tensor1d::zeros(self.out_channels, out_len);
        for (oc, row) in out.data.chunks_exact_mut(out_len).enumerate() {
            row.iter_mut().for_each(|v| *v = self.bias.value[oc]);
            let w = &self.kernel.value[oc * fan..(oc + 1) * fan];
            for (&wk, tap) in w.iter().zip(taps.chunks_exact(out_len)) {
                for (o, &xv) in row.iter_mut().zip(tap) {
                    *o += wk * xv;
                }
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients; returns the input gradient when requested.
    pub fn backward(&mut self, x: &Tensor1d, grad_out: &Tensor1d, want_input_grad: bool) -> Option<Tensor1d> {
        let out_len = grad_out.length;
        let taps = self.taps(x, out_len);
        let fan = self.in_channels * KERNEL_WIDTH;
        let mut grad_taps = want_input_grad.then(|| vec![0.0; fan * out_len]);
        for (oc, g) in grad_out.data.chunks_exact(out_len).enumerate() {
            self.bias.grad[oc] += g.iter().sum::<f64>();
            let wgrad = &mut self.kernel.grad[oc * fan..(oc + 1) * fan];
            for (wg, tap) in wgrad.iter_mut().zip(taps.chunks_exact(out_len)) {
                *wg += g.iter().zip(tap).map(|(a, b)| a * b).sum::<f64>();
            }
            if let Some(gt) = grad_taps.as_mut() {
                let w = &self.kernel.value[oc * fan..(oc + 1) * fan];
                for (&wk, gtap) in w.iter().zip(gt.chunks_exact_mut(out_len)) {
                    for (d, &gv) in gtap.iter_mut().zip(g) {
                        *d += wk * gv;
                    }
                }
            }
        }
        grad_taps.map(|gt| {
            let mut gi = Tensor1d::zeros(self.in_channels, x.length);
            for ic in 0..self.in_channels {
                let gin = &mut gi.data[ic * x.length..(ic + 1) * x.length];
                for k in 0..KERNEL_WIDTH {
                    let row = &gt[(ic * KERNEL_WIDTH + k) * out_len..][..out_len];
                    for (t, &v) in row.iter().enumerate() {
                        let i = (t * self.stride + k).wrapping_sub(self.padding);
                        if let Some(slot) = gin.get_mut(i) {
                            *slot += v;
                        }
                    }
                }
            }
            gi
        })
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.kernel, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.kernel, &mut self.bias]
    }
}

/// Fully connected layer, weights `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Param,
    pub bias: Param,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weight: Param::zeros(inputs * outputs),
            bias: Param::zeros(outputs),
        }
    }

    pub fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self {
            weight: Param::uniform(inputs * outputs, (3.0 / inputs as f64).sqrt(), rng),
            ..Self::zeros(inputs, outputs)
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::shape(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs,
                x.len()
            )));
        }
        Ok((0..self.outputs)
            .map(|o| {
                let w = &self.weight.value[o * self.inputs..(o + 1) * self.inputs];
                self.bias.value[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect())
    }

    pub fn backward(&mut self, x: &[f64], grad_out: &[f64]) -> Vec<f64> {
        let mut grad_in = vec![0.0; self.inputs];
        for (o, &g) in grad_out.iter().enumerate() {
            self.bias.grad[o] += g;
            let row = o * self.inputs;
            for i in 0..self.inputs {
                self.weight.grad[row + i] += g * x[i];
                grad_in[i] += g * self.weight.value[row + i];
            }
        }
        grad_in
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

pub fn relu(mut x: Tensor1d) -> Tensor1d {
    x.data.iter_mut().for_each(|v| *v = v.max(0.0));
    x
}

/// Masks `grad` by the positive entries of the rectifier's output.
pub fn relu_backward(activated: &Tensor1d, mut grad: Tensor1d) -> Tensor1d {
    for (g, a) in grad.data.iter_mut().zip(&activated.data) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
    grad
}

/// Stacks `b`'s channels after `a`'s.
pub fn concat_channels(a: &Tensor1d, b: &Tensor1d) -> Result<Tensor1d> {
    if a.length != b.length {
        return Err(Error::shape(format!(
            "cannot concatenate feature maps of length {} and {} ({}x{} with {}x{})",
            a.length, b.length, a.channels, a.length, b.channels, b.length
        )));
    }
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Ok(Tensor1d {
        channels: a.channels + b.channels,
        length: a.length,
        data,
    })
}

/// Splits a gradient of a concatenation back into its two inputs.
pub fn split_channels(grad: &Tensor1d, first_channels: usize) -> (Tensor1d, Tensor1d) {
    let cut = first_channels * grad.length;
    (
        Tensor1d {
            channels: first_channels,
            length: grad.length,
            data: grad.data[..cut].to_vec(),
        },
        Tensor1d {
            channels: grad.channels - first_channels,
            length: grad.length,
            data: grad.data[cut..].to_vec(),
        },
    )
}

pub fn global_avg_pool(x: &Tensor1d) -> Result<Vec<f64>> {
    if x.length == 0 || x.channels == 0 {
        return Err(Error::shape("global average pooling of an empty feature map"));
    }
    Ok((0..x.channels)
        .map(|c| x.channel(c).iter().sum::<f64>() / x.length as f64)
        .collect())
}

pub fn global_avg_pool_backward(grad: &[f64], length: usize) -> Tensor1d {
    let mut out = Tensor1d::zeros(grad.len(), length);
    for (c, g) in grad.iter().enumerate() {
        out.data[c * length..(c + 1) * length].iter_mut().for_each(|v| *v = g / length as f64);
    }
    out
}

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::shape("softmax of an empty vector"));
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

pub fn cross_entropy(p: &[f64], label: usize) -> Result<f64> {
    let pl = p
        .get(label)
        .ok_or_else(|| Error::shape(format!("label {label} out of range for {} classes", p.len())))?;
    if pl.is_nan() {
        return Ok(f64::NAN);
    }
    Ok(-pl.max(f64::MIN_POSITIVE).ln())
}

/// Gradient of `cross_entropy(softmax(z), label)` with respect to `z`.
pub fn softmax_cross_entropy_grad(p: &[f64], label: usize) -> Vec<f64> {
    let mut g = p.to_vec();
    g[label] -= 1.0;
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_conv(conv: &Conv1d, x: &Tensor1d) -> Tensor1d {
        let out_len = conv.output_len(x.length);
        let mut out = Tensor1d::zeros(conv.out_channels, out_len);
        for c in 0..conv.out_channels {
            for t in 0..out_len {
                let mut acc = conv.bias.value[c];
                for i in 0..conv.in_channels {
                    for k in 0..KERNEL_WIDTH {
                        let pos = (t * conv.stride + k) as i64 - conv.padding as i64;
                        if pos >= 0 && (pos as usize) < x.length {
                            acc += conv.kernel.value[(c * conv.in_channels + i) * KERNEL_WIDTH + k]
                                * x.data[i * x.length + pos as usize];
                        }
                    }
                }
                out.data[c * out_len + t] = acc;
            }
        }
        out
    }

    fn random_tensor(c: usize, l: usize, rng: &mut ChaCha8Rng) -> Tensor1d {
        Tensor1d::new(c, l, (0..c * l).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut conv = Conv1d::zeros(1, 1, 1);
        conv.kernel.value = vec![0.0, 1.0, 0.0];
        let x = Tensor1d::new(1, 5, vec![1.0, -2.0, 3.0, 0.5, 4.0]).unwrap();
        assert_eq!(conv.forward(&x).unwrap(), x);
    }

    #[test]
    fn stride_two_halves_length() {
        let conv = Conv1d::zeros(2, 4, 2);
        let out = conv.forward(&Tensor1d::zeros(2, 256)).unwrap();
        assert_eq!(out.shape(), (4, 128));
    }

    #[test]
    fn channel_mismatch_reports_both_shapes() {
        let conv = Conv1d::zeros(3, 4, 1);
        match conv.forward(&Tensor1d::zeros(2, 8)) {
            Err(Error::Shape(msg)) => assert!(msg.contains('3') && msg.contains("2x8"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conv_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for stride in [1, 2] {
            let mut conv = Conv1d::init(3, 5, stride, &mut rng);
            conv.bias = Param::uniform(5, 0.5, &mut rng);
            let x = random_tensor(3, 16, &mut rng);
            let fast = conv.forward(&x).unwrap();
            let slow = naive_conv(&conv, &x);
            for (a, b) in fast.data.iter().zip(&slow.data) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn concat_contract() {
        let a = Tensor1d::zeros(32, 128);
        let b = Tensor1d::zeros(2, 128);
        assert_eq!(concat_channels(&a, &b).unwrap().shape(), (34, 128));
        assert!(matches!(concat_channels(&a, &Tensor1d::zeros(2, 64)), Err(Error::Shape(_))));
    }

    #[test]
    fn concat_gradient_splits_exactly() {
        // f(a, b) = Σ w · concat(a, b); ∂f/∂a and ∂f/∂b checked by finite differences.
        let a = Tensor1d::new(1, 3, vec![0.3, -1.0, 2.0]).unwrap();
        let b = Tensor1d::new(1, 3, vec![1.5, 0.2, -0.7]).unwrap();
        let w = [0.5, -1.0, 2.0, 3.0, -0.25, 1.0];
        let f = |a: &Tensor1d, b: &Tensor1d| -> f64 {
            concat_channels(a, b).unwrap().data.iter().zip(&w).map(|(x, y)| x * y).sum()
        };
        let grad = Tensor1d::new(2, 3, w.to_vec()).unwrap();
        let (ga, gb) = split_channels(&grad, 1);
        let eps = 1e-6;
        for i in 0..3 {
            let mut ap = a.clone();
            ap.data[i] += eps;
            let mut am = a.clone();
            am.data[i] -= eps;
            assert!(((f(&ap, &b) - f(&am, &b)) / (2.0 * eps) - ga.data[i]).abs() < 1e-8);
            let mut bp = b.clone();
            bp.data[i] += eps;
            let mut bm = b.clone();
            bm.data[i] -= eps;
            assert!(((f(&a, &bp) - f(&a, &bm)) / (2.0 * eps) - gb.data[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn softmax_properties() {
        let p = softmax(&[0.7; 16]).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 16.0).abs() < 1e-15));
        let z = [1.0, -2.0, 0.5, 3.0];
        let shifted: Vec<f64> = z.iter().map(|v| v + 100.0).collect();
        let (a, b) = (softmax(&z).unwrap(), softmax(&shifted).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(softmax(&[]).is_err());
        let big = softmax(&[1000.0, 0.0]).unwrap();
        assert!(big[0].is_finite() && (big[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let z = vec![0.2, -1.3, 0.8, 0.05];
        let label = 2;
        let loss = |z: &[f64]| cross_entropy(&softmax(z).unwrap(), label).unwrap();
        let g = softmax_cross_entropy_grad(&softmax(&z).unwrap(), label);
        let eps = 1e-5;
        for i in 0..z.len() {
            let mut zp = z.clone();
            zp[i] += eps;
            let mut zm = z.clone();
            zm[i] -= eps;
            let fd = (loss(&zp) - loss(&zm)) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-6);
        }
        assert!(cross_entropy(&[0.0, 1.0], 1).unwrap().abs() < 1e-15);
        assert!(cross_entropy(&[0.5, 0.5], 0).unwrap() > 0.0);
    }

    #[test]
    fn pooling_rejects_empty() {
        assert!(global_avg_pool(&Tensor1d::zeros(0, 4)).is_err());
        assert_eq!(global_avg_pool(&Tensor1d::new(1, 2, vec![1.0, 3.0]).unwrap()).unwrap(), vec![2.0]);
    }
}
