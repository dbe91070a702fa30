//! Fully connected network with tanh hidden layers and a linear output,
//! stored as one flat parameter vector.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths including input and output.
    pub sizes: Vec<usize>,
    /// Per layer, the row-major `out × in` weight matrix followed by the bias.
    pub params: Vec<f64>,
}

/// Activations of one forward pass, input first.
#[derive(Debug, Clone)]
pub struct Cache {
    pub acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map_or(&[], Vec::as_slice)
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "bad layer sizes");
        Self { sizes: sizes.to_vec(), params: vec![0.0; param_count(sizes)] }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let mut off = 0;
        for w in sizes.windows(2) {
            let (i, o) = (w[0], w[1]);
            let lim = math::sqrt(6.0 / (i + o) as f64);
            for p in &mut net.params[off..off + i * o] {
                *p = rng.random_range(-lim..=lim);
            }
            off += i * o + o;
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut off = 0;
        self.sizes.windows(2).map(move |w| {
            let start = off;
            off += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    /// Scales the last layer's weights and bias, e.g. by zero for a symmetric start.
    pub fn scale_output_layer(&mut self, s: f64) {
        let (start, i, o) = self.layers().last().unwrap();
        for p in &mut self.params[start..start + i * o + o] {
            *p *= s;
        }
    }

    pub fn forward_cache(&self, x: &[f64]) -> Result<Cache> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), got: x.len() });
        }
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        for (l, (start, i, o)) in self.layers().enumerate() {
            let w = &self.params[start..start + i * o];
            let b = &self.params[start + i * o..start + i * o + o];
            let prev = &acts[l];
            let mut z = b.to_vec();
            for r in 0..o {
                let row = &w[r * i..(r + 1) * i];
                z[r] += row.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>();
            }
            if l + 1 < n_layers {
                for v in &mut z {
                    *v = math::tanh(*v);
                }
            }
            acts.push(z);
        }
        Ok(Cache { acts })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cache(x)?.acts.pop().unwrap())
    }

    /// Reverse pass for upstream gradient `dout` on the output. Parameter
    /// gradients are added into `grad`; the input gradient is returned.
    pub fn backward(&self, cache: &Cache, dout: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        if dout.len() != self.output_dim() {
            return Err(Error::ShapeMismatch { expected: self.output_dim(), got: dout.len() });
        }
        if grad.len() != self.num_params() {
            return Err(Error::ShapeMismatch { expected: self.num_params(), got: grad.len() });
        }
        let layers: Vec<_> = self.layers().collect();
        let n_layers = layers.len();
        let mut delta = dout.to_vec();
        for l in (0..n_layers).rev() {
            let (start, i, o) = layers[l];
            if l + 1 < n_layers {
                // Hidden output went through tanh.
                for (d, a) in delta.iter_mut().zip(&cache.acts[l + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let input = &cache.acts[l];
            let w = &self.params[start..start + i * o];
            let (gw, gb) = grad[start..start + i * o + o].split_at_mut(i * o);
            let mut dprev = vec![0.0; i];
            for r in 0..o {
                let d = delta[r];
                gb[r] += d;
                let row = &w[r * i..(r + 1) * i];
                let grow = &mut gw[r * i..(r + 1) * i];
                for c in 0..i {
                    grow[c] += d * input[c];
                    dprev[c] += d * row[c];
                }
            }
            delta = dprev;
        }
        Ok(delta)
    }

    /// θ ← τ·src + (1−τ)·θ.
    pub fn soft_update_from(&mut self, src: &Mlp, tau: f64) {
        debug_assert_eq!(self.sizes, src.sizes);
        for (t, s) in self.params.iter_mut().zip(&src.params) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}
