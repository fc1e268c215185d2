use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// `(fan_in, fan_out)` of one affine layer; stored as row-major weights then bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
}

impl LayerShape {
    pub const fn new(fan_in: usize, fan_out: usize) -> Self {
        Self { fan_in, fan_out }
    }

    pub const fn len(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }
}

/// Flat parameters of one network with the layer layout that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    layers: Vec<LayerShape>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(layers: Vec<LayerShape>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = layers.iter().map(LayerShape::len).sum();
        if expected != values.len() {
            return Err(Error::Shape {
                context: "ParamVector layout",
                expected,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite parameter at index {i}")));
        }
        Ok(Self { layers, values })
    }

    pub fn zeros(layers: Vec<LayerShape>) -> Self {
        let n = layers.iter().map(LayerShape::len).sum();
        Self {
            layers,
            values: vec![0.0; n],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(layers: Vec<LayerShape>, rng: &mut R) -> Self {
        let mut values = Vec::with_capacity(layers.iter().map(LayerShape::len).sum());
        for l in &layers {
            let a = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
            values.extend((0..l.fan_in * l.fan_out).map(|_| rng.gen_range(-a..a)));
            values.extend(std::iter::repeat(0.0).take(l.fan_out));
        }
        Self { layers, values }
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Replaces the values, keeping the layout.
    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::Shape {
                context: "ParamVector::set_values",
                expected: self.values.len(),
                got: values.len(),
            });
        }
        self.values = values;
        Ok(())
    }

    /// `self -= step * grad`.
    pub fn descend(&mut self, step: f64, grad: &[f64]) {
        for (p, g) in self.values.iter_mut().zip(grad) {
            *p -= step * g;
        }
    }

    /// Offset of the first parameter of layer `index`.
    pub fn layer_offset(&self, index: usize) -> usize {
        self.layers[..index].iter().map(LayerShape::len).sum()
    }

    /// SHA-256 over the little-endian bytes of every value.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}
