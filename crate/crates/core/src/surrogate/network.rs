//! Dense multi-branch network with a shared tanh trunk and linear heads.
//!
//! All weights and biases live in one flat parameter vector so the
//! optimizer, gradient checks and persistence all see the same layout:
//! layer by layer (trunk first, then each head in order), each layer's
//! weight matrix row-major `[n_out][n_in]` followed by its bias.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadSpec {
    /// Widths of the tanh hidden layers of this head.
    pub hidden: Vec<usize>,
    /// Number of linear outputs.
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub inputs: usize,
    /// Widths of the shared tanh trunk layers.
    pub trunk: Vec<usize>,
    pub heads: Vec<HeadSpec>,
}

impl Architecture {
    /// 14 → 64 → 64 trunk, flux head 32 → 162, scalar head 32 → 3.
    pub fn default_machine() -> Self {
        Self {
            inputs: 14,
            trunk: vec![64, 64],
            heads: vec![
                HeadSpec {
                    hidden: vec![32],
                    outputs: 162,
                },
                HeadSpec {
                    hidden: vec![32],
                    outputs: 3,
                },
            ],
        }
    }

    pub fn outputs(&self) -> usize {
        self.heads.iter().map(|h| h.outputs).sum()
    }
}

/// Dot product with independent partial sums; fixed order, so results are
/// reproducible.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub offset: usize,
    pub tanh: bool,
}

impl Dense {
    fn len(&self) -> usize {
        self.n_in * self.n_out + self.n_out
    }

    #[inline]
    fn forward(&self, params: &[f64], input: &[f64], out: &mut [f64]) {
        let w = &params[self.offset..self.offset + self.n_in * self.n_out];
        let b = &params[self.offset + self.n_in * self.n_out..self.offset + self.len()];
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &w[o * self.n_in..(o + 1) * self.n_in];
            let z = b[o] + dot(row, input);
            *slot = if self.tanh { z.tanh() } else { z };
        }
    }

    /// `delta` is dL/d(pre-activation). Accumulates parameter gradients and
    /// writes dL/d(input) into `delta_in` when given.
    #[inline]
    fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        delta: &[f64],
        grad: &mut [f64],
        delta_in: Option<&mut [f64]>,
    ) {
        let nw = self.n_in * self.n_out;
        let (gw, gb) = grad[self.offset..self.offset + self.len()].split_at_mut(nw);
        for (o, &d) in delta.iter().enumerate() {
            gb[o] += d;
            for (g, x) in gw[o * self.n_in..(o + 1) * self.n_in].iter_mut().zip(input) {
                *g += d * x;
            }
        }
        if let Some(delta_in) = delta_in {
            let w = &params[self.offset..self.offset + nw];
            delta_in.iter_mut().for_each(|x| *x = 0.0);
            for (o, &d) in delta.iter().enumerate() {
                for (di, a) in delta_in.iter_mut().zip(&w[o * self.n_in..(o + 1) * self.n_in]) {
                    *di += a * d;
                }
            }
        }
    }
}

/// Network weights plus the layer map derived from the architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub arch: Architecture,
    pub params: Vec<f64>,
    trunk: Vec<Dense>,
    heads: Vec<Vec<Dense>>,
}

/// Per-sample activations kept for back-propagation.
#[derive(Debug, Clone)]
pub(crate) struct Tape {
    trunk: Vec<Vec<f64>>,
    heads: Vec<Vec<Vec<f64>>>,
}

impl Network {
    pub fn param_count(arch: &Architecture) -> usize {
        Self::layout(arch).0.iter().chain(Self::layout(arch).1.iter().flatten()).map(|l| l.len()).sum()
    }

    fn layout(arch: &Architecture) -> (Vec<Dense>, Vec<Vec<Dense>>) {
        let mut offset = 0;
        let mut make = |n_in: usize, n_out: usize, tanh: bool| {
            let l = Dense {
                n_in,
                n_out,
                offset,
                tanh,
            };
            offset += l.len();
            l
        };
        let mut width = arch.inputs;
        let mut trunk = Vec::new();
        for &w in &arch.trunk {
            trunk.push(make(width, w, true));
            width = w;
        }
        let heads = arch
            .heads
            .iter()
            .map(|h| {
                let mut layers = Vec::new();
                let mut hw = width;
                for &w in &h.hidden {
                    layers.push(make(hw, w, true));
                    hw = w;
                }
                layers.push(make(hw, h.outputs, false));
                layers
            })
            .collect();
        (trunk, heads)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let (trunk, heads) = Self::layout(&arch);
        let total = trunk.iter().chain(heads.iter().flatten()).map(|l| l.len()).sum();
        let mut params = vec![0.0; total];
        let mut rng = substream(seed, Purpose::Init, 0);
        for l in trunk.iter().chain(heads.iter().flatten()) {
            let limit = (6.0 / (l.n_in + l.n_out) as f64).sqrt();
            for w in &mut params[l.offset..l.offset + l.n_in * l.n_out] {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Self {
            arch,
            params,
            trunk,
            heads,
        }
    }

    /// Rebuild from stored parameters; `None` when the count does not
    /// match the architecture.
    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Option<Self> {
        let (trunk, heads) = Self::layout(&arch);
        let total: usize = trunk.iter().chain(heads.iter().flatten()).map(|l| l.len()).sum();
        (total == params.len()).then_some(Self {
            arch,
            params,
            trunk,
            heads,
        })
    }

    pub(crate) fn new_tape(&self) -> Tape {
        Tape {
            trunk: self.trunk.iter().map(|l| vec![0.0; l.n_out]).collect(),
            heads: self
                .heads
                .iter()
                .map(|h| h.iter().map(|l| vec![0.0; l.n_out]).collect())
                .collect(),
        }
    }

    /// Forward pass of one sample; head outputs are concatenated in order.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut tape = self.new_tape();
        self.forward_tape(&self.params, x, &mut tape);
        tape.heads.iter().flat_map(|h| h.last().unwrap().iter().copied()).collect()
    }

    pub(crate) fn forward_tape(&self, params: &[f64], x: &[f64], tape: &mut Tape) {
        let mut input: &[f64] = x;
        for (l, out) in self.trunk.iter().zip(tape.trunk.iter_mut()) {
            l.forward(params, input, out);
            input = out;
        }
        for (layers, acts) in self.heads.iter().zip(tape.heads.iter_mut()) {
            let mut hin: &[f64] = input;
            for (l, out) in layers.iter().zip(acts.iter_mut()) {
                l.forward(params, hin, out);
                hin = out;
            }
        }
    }

    /// Loss of one sample and its gradient accumulated into `grad`.
    ///
    /// The loss is the mean over heads of each head's mean squared error,
    /// scaled by `1 / batch` so that summing over a batch gives the batch
    /// mean.
    pub(crate) fn accumulate(
        &self,
        x: &[f64],
        target: &[f64],
        batch: usize,
        tape: &mut Tape,
        grad: &mut [f64],
    ) -> f64 {
        self.forward_tape(&self.params, x, tape);
        let n_heads = self.heads.len() as f64;
        let last_trunk = tape.trunk.last().map(|v| v.len()).unwrap_or(x.len());
        let mut trunk_delta = vec![0.0; last_trunk];
        let trunk_out: Vec<f64> = tape.trunk.last().cloned().unwrap_or_else(|| x.to_vec());
        let mut loss = 0.0;
        let mut t_off = 0;
        for (h, layers) in self.heads.iter().enumerate() {
            let acts = &tape.heads[h];
            let out = acts.last().unwrap();
            let scale = 1.0 / (n_heads * batch as f64 * out.len() as f64);
            let mut delta: Vec<f64> = out
                .iter()
                .zip(&target[t_off..t_off + out.len()])
                .map(|(y, t)| {
                    let e = y - t;
                    loss += scale * e * e;
                    2.0 * scale * e
                })
                .collect();
            t_off += out.len();
            for k in (0..layers.len()).rev() {
                let input: &[f64] = if k == 0 { &trunk_out } else { &acts[k - 1] };
                let mut din = vec![0.0; layers[k].n_in];
                layers[k].backward(&self.params, input, &delta, grad, Some(&mut din));
                if k == 0 {
                    trunk_delta.iter_mut().zip(&din).for_each(|(t, d)| *t += d);
                } else {
                    // through the tanh of the previous head layer
                    delta = din
                        .iter()
                        .zip(&acts[k - 1])
                        .map(|(d, a)| d * (1.0 - a * a))
                        .collect();
                }
            }
        }
        let mut delta: Vec<f64> = trunk_delta
            .iter()
            .zip(&trunk_out)
            .map(|(d, a)| if self.trunk.is_empty() { *d } else { d * (1.0 - a * a) })
            .collect();
        for k in (0..self.trunk.len()).rev() {
            let input: &[f64] = if k == 0 { x } else { &tape.trunk[k - 1] };
            if k == 0 {
                self.trunk[k].backward(&self.params, input, &delta, grad, None);
            } else {
                let mut din = vec![0.0; self.trunk[k].n_in];
                self.trunk[k].backward(&self.params, input, &delta, grad, Some(&mut din));
                delta = din
                    .iter()
                    .zip(&tape.trunk[k - 1])
                    .map(|(d, a)| d * (1.0 - a * a))
                    .collect();
            }
        }
        loss
    }

    /// Batch loss (same definition as [`Network::accumulate`]) without
    /// gradients.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        let n_heads = self.heads.len() as f64;
        let mut total = 0.0;
        for (x, t) in xs.iter().zip(ys) {
            let y = self.forward(x);
            let mut off = 0;
            for h in &self.arch.heads {
                let sse: f64 = y[off..off + h.outputs]
                    .iter()
                    .zip(&t[off..off + h.outputs])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                total += sse / (h.outputs as f64 * n_heads);
                off += h.outputs;
            }
        }
        total / xs.len() as f64
    }

    /// Mean batch loss and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut tape = self.new_tape();
        let loss = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| self.accumulate(x, y, xs.len(), &mut tape, &mut grad))
            .sum();
        (loss, grad)
    }
}
