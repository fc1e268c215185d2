//! Fully connected tanh networks evaluated over a flat parameter slice.

use super::params::LayerShape;
use crate::error::{check_len, Result};

/// Layer sizes `[in, h1, …, out]`. Hidden layers use tanh; the output layer is
/// affine unless `activate_output` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activate_output: bool,
}

/// Activations recorded by [`Mlp::forward`]; `values[0]` is the input.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    values: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        &self.values[0]
    }
}

impl Mlp {
    pub fn new(sizes: Vec<usize>, activate_output: bool) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        Self {
            sizes,
            activate_output,
        }
    }

    /// `input → hidden… → output`.
    pub fn with_hidden(input: usize, hidden: &[usize], output: usize, activate_output: bool) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        Self::new(sizes, activate_output)
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        self.sizes
            .windows(2)
            .map(|w| LayerShape::new(w[0], w[1]))
            .collect()
    }

    pub fn param_len(&self) -> usize {
        self.layers().iter().map(LayerShape::len).sum()
    }

    fn activated(&self, layer: usize) -> bool {
        layer + 2 < self.sizes.len() || self.activate_output
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Result<Tape> {
        check_len("Mlp::forward params", self.param_len(), params.len())?;
        check_len("Mlp::forward input", self.input_dim(), input.len())?;
        let mut values = Vec::with_capacity(self.sizes.len());
        values.push(input.to_vec());
        let mut offset = 0;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &params[offset..offset + fan_in * fan_out];
            let bias = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let x = values.last().unwrap();
            let act = self.activated(l);
            let y: Vec<f64> = weights
                .chunks_exact(fan_in)
                .zip(bias)
                .map(|(row, b)| {
                    let pre = b + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
                    if act {
                        pre.tanh()
                    } else {
                        pre
                    }
                })
                .collect();
            values.push(y);
        }
        Ok(Tape { values })
    }

    /// Reverse pass for `⟨cotangent, output⟩`.
    ///
    /// Parameter gradients are accumulated into `grad` when given; the input
    /// gradient is returned.
    pub fn backward(
        &self,
        params: &[f64],
        tape: &Tape,
        cotangent: &[f64],
        mut grad: Option<&mut [f64]>,
    ) -> Result<Vec<f64>> {
        check_len("Mlp::backward cotangent", self.output_dim(), cotangent.len())?;
        if let Some(g) = grad.as_deref() {
            check_len("Mlp::backward grad", self.param_len(), g.len())?;
        }
        let layers = self.layers();
        let mut offsets = Vec::with_capacity(layers.len());
        let mut acc = 0;
        for l in &layers {
            offsets.push(acc);
            acc += l.len();
        }
        let mut delta = cotangent.to_vec();
        for l in (0..layers.len()).rev() {
            let LayerShape { fan_in, fan_out } = layers[l];
            let y = &tape.values[l + 1];
            if self.activated(l) {
                for (d, y) in delta.iter_mut().zip(y) {
                    *d *= 1.0 - y * y;
                }
            }
            let x = &tape.values[l];
            let off = offsets[l];
            let weights = &params[off..off + fan_in * fan_out];
            if let Some(g) = grad.as_deref_mut() {
                let (gw, gb) = g[off..off + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
                for ((row, d), b) in gw.chunks_exact_mut(fan_in).zip(&delta).zip(gb.iter_mut()) {
                    *b += d;
                    if *d != 0.0 {
                        for (gwi, xi) in row.iter_mut().zip(x) {
                            *gwi += d * xi;
                        }
                    }
                }
            }
            let mut dx = vec![0.0; fan_in];
            for (row, d) in weights.chunks_exact(fan_in).zip(&delta) {
                if *d != 0.0 {
                    for (dxi, w) in dx.iter_mut().zip(row) {
                        *dxi += d * w;
                    }
                }
            }
            delta = dx;
        }
        Ok(delta)
    }
}
