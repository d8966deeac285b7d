use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Elementwise activation applied after the affine part of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation output `y`.
    /// ReLU uses a subgradient of 0 at the kink.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "none",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Parameter gradients of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Same-length 1-D convolution: `M` filters of `C` channels with odd kernel
/// `K`, zero padding `(K-1)/2` on both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    pub weight: Tensor,
    pub bias: Tensor,
    pub relu: bool,
}

impl ConvLayer {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, relu: bool) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::contract("conv layer needs at least one channel"));
        }
        if kernel.is_multiple_of(2) {
            return Err(Error::contract(format!("conv kernel must be odd, got {kernel}")));
        }
        Ok(ConvLayer {
            in_channels,
            out_channels,
            kernel,
            weight: Tensor::zeros(&[out_channels, in_channels, kernel]),
            bias: Tensor::zeros(&[out_channels]),
            relu,
        })
    }

    pub fn with_params(weight: Tensor, bias: Tensor, relu: bool) -> Result<Self> {
        let &[m, c, k] = weight.shape() else {
            return Err(Error::contract("conv weight must be rank 3 [M, C, K]"));
        };
        let mut layer = ConvLayer::new(c, m, k, relu)?;
        if bias.shape() != [m] {
            return Err(Error::contract(format!(
                "conv bias shape {:?} does not match {m} filters",
                bias.shape()
            )));
        }
        layer.weight = weight;
        layer.bias = bias;
        Ok(layer)
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    pub fn activation(&self) -> Activation {
        if self.relu {
            Activation::Relu
        } else {
            Activation::Identity
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// Returns `(batch, length)` for a `[C, n]` or `[B, C, n]` input.
    fn batch_dims(&self, input: &Tensor) -> Result<(usize, usize)> {
        let (batch, channels, len) = match *input.shape() {
            [c, n] => (1, c, n),
            [b, c, n] => (b, c, n),
            _ => {
                return Err(Error::contract(format!(
                    "conv input must be [C, n] or [B, C, n], got {:?}",
                    input.shape()
                )))
            }
        };
        if channels != self.in_channels {
            return Err(Error::contract(format!(
                "conv expects {} input channels, got {channels}",
                self.in_channels
            )));
        }
        if len == 0 {
            return Err(Error::contract("conv input length must be at least 1"));
        }
        Ok((batch, len))
    }

    fn output_shape(input: &Tensor, m: usize) -> Vec<usize> {
        let mut shape = input.shape().to_vec();
        let last = shape.len() - 2;
        shape[last] = m;
        shape
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let (batch, n) = self.batch_dims(input)?;
        input.ensure_finite("conv input")?;
        let (c_in, m_out, k_len) = (self.in_channels, self.out_channels, self.kernel);
        let pad = self.padding() as isize;
        let w = self.weight.data();
        let x = input.data();
        let mut out = vec![0.0; batch * m_out * n];
        for b in 0..batch {
            // Position tiles keep every input channel of a tile in L1 while
            // the output channels are swept.
            for t0 in (0..n).step_by(CONV_TILE) {
                let t1 = (t0 + CONV_TILE).min(n);
                for m in 0..m_out {
                    let row = &mut out[(b * m_out + m) * n..(b * m_out + m + 1) * n];
                    row[t0..t1].fill(self.bias.data()[m]);
                    for c in 0..c_in {
                        let xrow = &x[(b * c_in + c) * n..(b * c_in + c + 1) * n];
                        for k in 0..k_len {
                            let wv = w[(m * c_in + c) * k_len + k];
                            let off = k as isize - pad;
                            let (j0, j1) = valid_span(n, off);
                            let (j0, j1) = (j0.max(t0), j1.min(t1));
                            if j0 >= j1 {
                                // tap lies in the padding for this tile
                                continue;
                            }
                            let src = &xrow[(j0 as isize + off) as usize..(j1 as isize + off) as usize];
                            for (o, &xi) in row[j0..j1].iter_mut().zip(src) {
                                *o += wv * xi;
                            }
                        }
                    }
                    if self.relu {
                        row[t0..t1].iter_mut().for_each(|v| *v = v.max(0.0));
                    }
                }
            }
        }
        Tensor::new(Self::output_shape(input, m_out), out)
    }

    /// Backpropagates `grad_out` (w.r.t. this layer's activated output).
    pub fn backward(&self, input: &Tensor, output: &Tensor, grad_out: &Tensor) -> Result<(LayerGrad, Tensor)> {
        let (batch, n) = self.batch_dims(input)?;
        if !output.same_shape(grad_out) {
            return Err(Error::contract("conv gradient shape mismatch"));
        }
        let (c_in, m_out, k_len) = (self.in_channels, self.out_channels, self.kernel);
        let pad = self.padding() as isize;
        let act = self.activation();
        let gz: Vec<f64> = grad_out
            .data()
            .iter()
            .zip(output.data())
            .map(|(&g, &y)| g * act.derivative_from_output(y))
            .collect();
        let w = self.weight.data();
        let x = input.data();
        let mut gw = vec![0.0; w.len()];
        let mut gb = vec![0.0; m_out];
        let mut gx = vec![0.0; x.len()];
        for b in 0..batch {
            for m in 0..m_out {
                let grow = &gz[(b * m_out + m) * n..(b * m_out + m + 1) * n];
                gb[m] += grow.iter().sum::<f64>();
                for c in 0..c_in {
                    let base = (b * c_in + c) * n;
                    for k in 0..k_len {
                        let widx = (m * c_in + c) * k_len + k;
                        let off = k as isize - pad;
                        let (j0, j1) = valid_span(n, off);
                        if j0 == j1 {
                            // tap lies entirely in the padding
                            continue;
                        }
                        let lo = (j0 as isize + off) as usize + base;
                        let hi = (j1 as isize + off) as usize + base;
                        let mut acc = 0.0;
                        for (&g, &xi) in grow[j0..j1].iter().zip(&x[lo..hi]) {
                            acc += g * xi;
                        }
                        gw[widx] += acc;
                        let wv = w[widx];
                        for (dx, &g) in gx[lo..hi].iter_mut().zip(&grow[j0..j1]) {
                            *dx += wv * g;
                        }
                    }
                }
            }
        }
        Ok((
            LayerGrad {
                weight: Tensor::new(self.weight.shape().to_vec(), gw)?,
                bias: Tensor::new(vec![m_out], gb)?,
            },
            Tensor::new(input.shape().to_vec(), gx)?,
        ))
    }
}

/// Positions per tile in the conv forward pass.
const CONV_TILE: usize = 128;

/// Output positions `j0..j1` whose tap at offset `off` reads inside `0..n`.
#[inline]
fn valid_span(n: usize, off: isize) -> (usize, usize) {
    let j0 = (-off).clamp(0, n as isize) as usize;
    let j1 = (n as isize - off).clamp(0, n as isize) as usize;
    (j0.min(j1), j1)
}

/// Fully connected layer `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_width: usize,
    out_width: usize,
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(in_width: usize, out_width: usize, activation: Activation) -> Result<Self> {
        if in_width == 0 || out_width == 0 {
            return Err(Error::contract("dense layer widths must be positive"));
        }
        Ok(DenseLayer {
            in_width,
            out_width,
            weight: Tensor::zeros(&[out_width, in_width]),
            bias: Tensor::zeros(&[out_width]),
            activation,
        })
    }

    pub fn with_params(weight: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        let &[out_w, in_w] = weight.shape() else {
            return Err(Error::contract("dense weight must be rank 2 [out, in]"));
        };
        let mut layer = DenseLayer::new(in_w, out_w, activation)?;
        if bias.shape() != [out_w] {
            return Err(Error::contract(format!(
                "dense bias shape {:?} does not match width {out_w}",
                bias.shape()
            )));
        }
        layer.weight = weight;
        layer.bias = bias;
        Ok(layer)
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn batch(&self, input: &Tensor) -> Result<usize> {
        let (batch, width) = match *input.shape() {
            [w] => (1, w),
            [b, w] => (b, w),
            _ => {
                return Err(Error::contract(format!(
                    "dense input must be [in] or [B, in], got {:?}",
                    input.shape()
                )))
            }
        };
        if width != self.in_width {
            return Err(Error::contract(format!(
                "dense layer expects width {}, got {width}",
                self.in_width
            )));
        }
        Ok(batch)
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let batch = self.batch(input)?;
        input.ensure_finite("dense input")?;
        let (iw, ow) = (self.in_width, self.out_width);
        let w = self.weight.data();
        let mut out = vec![0.0; batch * ow];
        for (xrow, yrow) in input.data().chunks_exact(iw).zip(out.chunks_exact_mut(ow)) {
            for (o, y) in yrow.iter_mut().enumerate() {
                let wrow = &w[o * iw..(o + 1) * iw];
                let z = self.bias.data()[o] + wrow.iter().zip(xrow).map(|(a, b)| a * b).sum::<f64>();
                *y = self.activation.apply(z);
            }
        }
        let shape = if input.rank() == 1 { vec![ow] } else { vec![batch, ow] };
        Tensor::new(shape, out)
    }

    pub fn backward(&self, input: &Tensor, output: &Tensor, grad_out: &Tensor) -> Result<(LayerGrad, Tensor)> {
        self.batch(input)?;
        if !output.same_shape(grad_out) {
            return Err(Error::contract("dense gradient shape mismatch"));
        }
        let (iw, ow) = (self.in_width, self.out_width);
        let w = self.weight.data();
        let mut gw = vec![0.0; w.len()];
        let mut gb = vec![0.0; ow];
        let mut gx = vec![0.0; input.len()];
        for ((xrow, (yrow, grow)), dxrow) in input
            .data()
            .chunks_exact(iw)
            .zip(output.data().chunks_exact(ow).zip(grad_out.data().chunks_exact(ow)))
            .zip(gx.chunks_exact_mut(iw))
        {
            for o in 0..ow {
                let gz = grow[o] * self.activation.derivative_from_output(yrow[o]);
                if gz == 0.0 {
                    continue;
                }
                gb[o] += gz;
                let wrow = &w[o * iw..(o + 1) * iw];
                for ((gwi, dx), (&xi, &wi)) in gw[o * iw..(o + 1) * iw]
                    .iter_mut()
                    .zip(dxrow.iter_mut())
                    .zip(xrow.iter().zip(wrow))
                {
                    *gwi += gz * xi;
                    *dx += gz * wi;
                }
            }
        }
        Ok((
            LayerGrad {
                weight: Tensor::new(vec![ow, iw], gw)?,
                bias: Tensor::new(vec![ow], gb)?,
            },
            Tensor::new(input.shape().to_vec(), gx)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(w: &[f64], b: f64, relu: bool) -> ConvLayer {
        ConvLayer::with_params(
            Tensor::new(vec![1, 1, w.len()], w.to_vec()).unwrap(),
            Tensor::from_vec(vec![b]),
            relu,
        )
        .unwrap()
    }

    fn run(layer: &ConvLayer, x: &[f64]) -> Vec<f64> {
        let input = Tensor::new(vec![1, x.len()], x.to_vec()).unwrap();
        layer.forward(&input).unwrap().into_data()
    }

    /// Direct summation over the zero-padded window.
    fn conv_oracle(w: &[f64], b: f64, relu: bool, x: &[f64]) -> Vec<f64> {
        let p = (w.len() - 1) / 2;
        let mut padded = vec![0.0; p];
        padded.extend_from_slice(x);
        padded.extend(std::iter::repeat_n(0.0, p));
        (0..x.len())
            .map(|j| {
                let z: f64 = b + (0..w.len()).map(|k| w[k] * padded[j + k]).sum::<f64>();
                if relu {
                    z.max(0.0)
                } else {
                    z
                }
            })
            .collect()
    }

    #[test]
    fn identity_kernel() {
        assert_eq!(
            run(&conv(&[0.0, 1.0, 0.0], 0.0, false), &[1.0, -1.0, 2.0]),
            vec![1.0, -1.0, 2.0]
        );
    }

    #[test]
    fn box_kernel_matches_padded_sum() {
        let expected = conv_oracle(&[1.0, 1.0, 1.0], 0.0, false, &[1.0, 1.0, 1.0]);
        assert_eq!(expected, vec![2.0, 3.0, 2.0]);
        assert_eq!(run(&conv(&[1.0, 1.0, 1.0], 0.0, false), &[1.0, 1.0, 1.0]), expected);
    }

    #[test]
    fn bias_inside_relu() {
        let expected = conv_oracle(&[0.0, 1.0, 0.0], -2.0, true, &[1.0, 3.0, 1.0]);
        assert_eq!(expected, vec![0.0, 1.0, 0.0]);
        assert_eq!(run(&conv(&[0.0, 1.0, 0.0], -2.0, true), &[1.0, 3.0, 1.0]), expected);
    }

    #[test]
    fn wide_kernel_on_short_input() {
        let w = [0.5, -1.0, 2.0, 0.25, 1.5];
        let x = [0.3, -0.7];
        let got = run(&conv(&w, 0.1, false), &x);
        let want = conv_oracle(&w, 0.1, false, &x);
        for (g, e) in got.iter().zip(&want) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn conv_shape_errors() {
        let layer = ConvLayer::new(2, 3, 3, true).unwrap();
        assert!(matches!(
            layer.forward(&Tensor::zeros(&[1, 5])),
            Err(Error::Contract(_))
        ));
        assert!(ConvLayer::new(1, 1, 4, true).is_err());
        let bad = Tensor::new(vec![1, 2], vec![f64::INFINITY, 0.0]).unwrap();
        assert!(matches!(
            conv(&[0.0, 1.0, 0.0], 0.0, false).forward(&bad),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn dense_examples() {
        let ident = DenseLayer::with_params(
            Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Tensor::zeros(&[2]),
            Activation::Identity,
        )
        .unwrap();
        assert_eq!(
            ident.forward(&Tensor::from_vec(vec![3.0, -1.0])).unwrap().data(),
            &[3.0, -1.0]
        );

        let sig = DenseLayer::with_params(
            Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap(),
            Tensor::zeros(&[1]),
            Activation::Sigmoid,
        )
        .unwrap();
        assert_eq!(sig.forward(&Tensor::from_vec(vec![0.0, 0.0])).unwrap().data(), &[0.5]);

        let relu = DenseLayer::with_params(
            Tensor::new(vec![1, 1], vec![2.0]).unwrap(),
            Tensor::from_vec(vec![1.0]),
            Activation::Relu,
        )
        .unwrap();
        assert_eq!(relu.forward(&Tensor::from_vec(vec![-2.0])).unwrap().data(), &[0.0]);
        assert!(relu.forward(&Tensor::from_vec(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn sigmoid_is_stable_for_large_inputs() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
