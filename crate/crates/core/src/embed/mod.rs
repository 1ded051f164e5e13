//! Explicit edge embedding.
//!
//! Each layer sees, per edge, its own representation and the mean of its
//! neighbors' representations scaled by the adjacency weight `β`:
//!
//! ```text
//! self   = h_e
//! neigh  = mean over N(e) of β(e, e') · h_e'       (zero when N(e) is empty)
//! h_e'   = dropout(relu(W · [self ; neigh] + b))
//! ```
//!
//! Two such layers feed a linear two-way head. `β(e, e')` is the cosine
//! similarity between the attributes of the two outer endpoints (the
//! endpoints of `e` and `e'` other than the shared one) and is not trained.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{BehaviorGraph, EdgeAdjacencyIndex};
use crate::linalg::{cosine, Matrix};
use crate::rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

mod backward;

pub use backward::{backward, Gradients};

/// Precomputed `β` per adjacency entry, in [`EdgeAdjacencyIndex::entries`]
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    pub beta: Vec<f64>,
}

/// Cosine similarity of the outer endpoints for every adjacency entry.
pub fn compute_adjacency_weights(g: &BehaviorGraph, adj: &EdgeAdjacencyIndex) -> Result<EdgeWeights> {
    if g.nodes().iter().any(|n| n.attr.is_empty()) {
        return Err(Error::DimensionMismatch(
            "node attributes must be populated before computing adjacency weights".into(),
        ));
    }
    let beta = adj
        .entries()
        .iter()
        .map(|a| cosine(&g.node(a.outer_e).attr, &g.node(a.outer_neighbor).attr))
        .collect();
    Ok(EdgeWeights { beta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AblationFlags {
    pub use_weights: bool,
    pub use_disentangle: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self {
            use_weights: true,
            use_disentangle: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct NetConfig {
    pub dropout_rate: f64,
    pub use_weights: bool,
    pub use_disentangle: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            dropout_rate: 0.1,
            use_weights: true,
            use_disentangle: true,
        }
    }
}

impl NetConfig {
    pub fn flags(&self) -> AblationFlags {
        AblationFlags {
            use_weights: self.use_weights,
            use_disentangle: self.use_disentangle,
        }
    }
}

/// `W` maps `[self ; neigh]` (width `2 · input`) to the layer output.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LayerParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn input_dim(&self) -> usize {
        self.weight.cols / 2
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows
    }

    fn glorot(input: usize, output: usize, rng: &mut rng::Rng) -> Self {
        let cols = 2 * input;
        let a = libm::sqrt(6.0 / (cols + output) as f64);
        let data = (0..output * cols)
            .map(|_| rng.random_range(-a..=a))
            .collect();
        Self {
            weight: Matrix {
                rows: output,
                cols,
                data,
            },
            bias: alloc::vec![0.0; output],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EdgeEmbedNet {
    pub layer1: LayerParams,
    pub layer2: LayerParams,
    /// `2 × layer2_out`, applied as `head · h + head_bias`.
    pub head: Matrix,
    pub head_bias: Vec<f64>,
    pub dropout_rate: f64,
    pub flags: AblationFlags,
}

/// Hidden widths for an input of `edge_dim`: a quarter, then half of that,
/// rounded up.
pub fn layer_dims(edge_dim: usize) -> (usize, usize) {
    let first = edge_dim.div_ceil(4).max(1);
    (first, first.div_ceil(2).max(1))
}

impl EdgeEmbedNet {
    /// Glorot-uniform weights, zero biases.
    pub fn new(edge_dim: usize, cfg: &NetConfig, seed: u64) -> Result<Self> {
        if edge_dim == 0 {
            return Err(Error::DimensionMismatch("edge_dim must be positive".into()));
        }
        if !(0.0..1.0).contains(&cfg.dropout_rate) {
            return Err(Error::InvalidConfig(alloc::format!(
                "dropout rate {} outside [0, 1)",
                cfg.dropout_rate
            )));
        }
        let (h1, h2) = layer_dims(edge_dim);
        let mut rng = rng::stream(seed, rng::purpose::INIT);
        let layer1 = LayerParams::glorot(edge_dim, h1, &mut rng);
        let layer2 = LayerParams::glorot(h1, h2, &mut rng);
        let a = libm::sqrt(6.0 / (h2 + 2) as f64);
        let head = Matrix {
            rows: 2,
            cols: h2,
            data: (0..2 * h2).map(|_| rng.random_range(-a..=a)).collect(),
        };
        Ok(Self {
            layer1,
            layer2,
            head,
            head_bias: alloc::vec![0.0; 2],
            dropout_rate: cfg.dropout_rate,
            flags: cfg.flags(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer1.input_dim()
    }

    /// Checks the dimension chain `input → layer1 → layer2 → 2`.
    pub fn validate(&self) -> Result<()> {
        let mismatch = |what: &str| Err(Error::DimensionMismatch(what.into()));
        let l1 = &self.layer1;
        let l2 = &self.layer2;
        if !l1.weight.cols.is_multiple_of(2) || l1.weight.data.len() != l1.weight.rows * l1.weight.cols {
            return mismatch("layer1 weight shape");
        }
        if l1.bias.len() != l1.output_dim() {
            return mismatch("layer1 bias");
        }
        if l2.weight.cols != 2 * l1.output_dim()
            || l2.weight.data.len() != l2.weight.rows * l2.weight.cols
        {
            return mismatch("layer2 weight shape");
        }
        if l2.bias.len() != l2.output_dim() {
            return mismatch("layer2 bias");
        }
        if self.head.rows != 2
            || self.head.cols != l2.output_dim()
            || self.head.data.len() != 2 * self.head.cols
            || self.head_bias.len() != 2
        {
            return mismatch("head shape");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return mismatch("dropout rate");
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Parameter tensors in a fixed order: W1, b1, W2, b2, head, head bias.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            &self.layer1.weight.data,
            &self.layer1.bias,
            &self.layer2.weight.data,
            &self.layer2.bias,
            &self.head.data,
            &self.head_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            &mut self.layer1.weight.data,
            &mut self.layer1.bias,
            &mut self.layer2.weight.data,
            &mut self.layer2.bias,
            &mut self.head.data,
            &mut self.head_bias,
        ]
    }

    /// FNV-1a over parameter bits and configuration; identifies the exact
    /// parameter state a forward pass ran with.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        };
        for t in self.tensors() {
            eat(t.len() as u64);
            for v in t {
                eat(v.to_bits());
            }
        }
        eat(self.dropout_rate.to_bits());
        eat(self.flags.use_weights as u64 | (self.flags.use_disentangle as u64) << 1);
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Neighbor aggregation operator: `neigh[e] = Σ coef · h[nbr]` over `e`'s
/// entries, with `coef = β / |N(e)|` (or `1 / |N(e)|` without weights).
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    offsets: Vec<usize>,
    neighbor: Vec<u32>,
    coef: Vec<f64>,
}

impl Aggregation {
    pub fn new(adj: &EdgeAdjacencyIndex, weights: &EdgeWeights, use_weights: bool) -> Result<Self> {
        if weights.beta.len() != adj.total_entries() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} weights for {} adjacency entries",
                weights.beta.len(),
                adj.total_entries()
            )));
        }
        let mut offsets = Vec::with_capacity(adj.edge_count() + 1);
        offsets.push(0);
        let mut neighbor = Vec::with_capacity(adj.total_entries());
        let mut coef = Vec::with_capacity(adj.total_entries());
        for e in 0..adj.edge_count() {
            let range = adj.range(crate::EdgeId(e as u32));
            let inv = if range.is_empty() {
                0.0
            } else {
                1.0 / range.len() as f64
            };
            for i in range {
                neighbor.push(adj.entries()[i].neighbor.0);
                let beta = if use_weights { weights.beta[i] } else { 1.0 };
                coef.push(beta * inv);
            }
            offsets.push(neighbor.len());
        }
        Ok(Self {
            offsets,
            neighbor,
            coef,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn apply(&self, h: &[f64], width: usize, out: &mut [f64]) {
        out.fill(0.0);
        for e in 0..self.edge_count() {
            let dst = &mut out[e * width..(e + 1) * width];
            for i in self.offsets[e]..self.offsets[e + 1] {
                let c = self.coef[i];
                if c == 0.0 {
                    continue;
                }
                let n = self.neighbor[i] as usize;
                for (d, s) in dst.iter_mut().zip(&h[n * width..(n + 1) * width]) {
                    *d += c * s;
                }
            }
        }
    }

    /// Adjoint of [`Self::apply`]: `grad_h[nbr] += coef · grad_neigh[e]`.
    fn apply_transpose(&self, grad_neigh: &[f64], width: usize, grad_h: &mut [f64]) {
        for e in 0..self.edge_count() {
            let src = &grad_neigh[e * width..(e + 1) * width];
            for i in self.offsets[e]..self.offsets[e + 1] {
                let c = self.coef[i];
                if c == 0.0 {
                    continue;
                }
                let n = self.neighbor[i] as usize;
                for (d, s) in grad_h[n * width..(n + 1) * width].iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    /// Per-edge `[self ; neigh]`, row-major `E × 2·in`.
    pub(crate) input: Vec<f64>,
    pub(crate) pre_activation: Vec<f64>,
    /// Inverted-dropout multipliers; empty in eval mode.
    pub(crate) mask: Vec<f64>,
}

/// Intermediate values of one forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) fingerprint: u64,
    pub(crate) mode: Mode,
    pub(crate) agg: Arc<Aggregation>,
    pub(crate) layers: [LayerCache; 2],
    pub(crate) hidden: Vec<f64>,
}

impl ForwardCache {
    pub fn mode(&self) -> Mode {
        self.mode
    }
}

pub type Logits = Vec<[f64; 2]>;

/// Full-graph forward pass.
pub fn forward(
    net: &EdgeEmbedNet,
    g: &BehaviorGraph,
    adj: &EdgeAdjacencyIndex,
    weights: &EdgeWeights,
    mode: Mode,
    seed: u64,
) -> Result<(Logits, ForwardCache)> {
    let inputs = EdgeInputs::new(g, adj, weights, net.flags.use_weights)?;
    forward_with(net, &inputs, mode, seed)
}

/// Row-major `E × edge_dim` attribute block.
pub fn edge_attr_matrix(g: &BehaviorGraph) -> Vec<f64> {
    g.edges().iter().flat_map(|e| e.attr.iter().copied()).collect()
}

/// Everything about the graph a forward pass needs, prepared once: the
/// attribute block, the aggregation operator and the aggregated attributes
/// feeding the first layer.
#[derive(Debug, Clone)]
pub struct EdgeInputs {
    attrs: Vec<f64>,
    neigh: Vec<f64>,
    width: usize,
    agg: Arc<Aggregation>,
}

impl EdgeInputs {
    pub fn new(g: &BehaviorGraph, adj: &EdgeAdjacencyIndex, weights: &EdgeWeights, use_weights: bool) -> Result<Self> {
        Self::from_parts(edge_attr_matrix(g), g.edge_dim(), Aggregation::new(adj, weights, use_weights)?)
    }

    /// `attrs` is row-major `E × width`.
    pub fn from_parts(attrs: Vec<f64>, width: usize, agg: Aggregation) -> Result<Self> {
        if attrs.len() != agg.edge_count() * width {
            return Err(Error::DimensionMismatch(alloc::format!(
                "attribute block of {} values for {} edges of width {}",
                attrs.len(),
                agg.edge_count(),
                width
            )));
        }
        let mut neigh = alloc::vec![0.0; attrs.len()];
        agg.apply(&attrs, width, &mut neigh);
        Ok(Self {
            attrs,
            neigh,
            width,
            agg: Arc::new(agg),
        })
    }

    pub fn edge_count(&self) -> usize {
        self.agg.edge_count()
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// Forward pass over prepared inputs. `seed` drives the dropout masks in
/// train mode and is ignored in eval mode.
pub fn forward_with(net: &EdgeEmbedNet, inputs: &EdgeInputs, mode: Mode, seed: u64) -> Result<(Logits, ForwardCache)> {
    net.validate()?;
    let edges = inputs.edge_count();
    if inputs.width != net.input_dim() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "inputs of width {} for a network expecting {}",
            inputs.width,
            net.input_dim()
        )));
    }
    let agg = &inputs.agg;
    let mut rng = rng::stream(seed, rng::purpose::DROPOUT);
    let (h1, c1) = layer_forward(net, &net.layer1, &inputs.attrs, Some(&inputs.neigh), agg, mode, &mut rng);
    let (h2, c2) = layer_forward(net, &net.layer2, &h1, None, agg, mode, &mut rng);
    let width = net.layer2.output_dim();
    let logits = (0..edges)
        .map(|e| {
            let mut out = [0.0; 2];
            net.head
                .affine_into(&h2[e * width..(e + 1) * width], &net.head_bias, &mut out);
            out
        })
        .collect();
    Ok((
        logits,
        ForwardCache {
            fingerprint: net.fingerprint(),
            mode,
            agg: agg.clone(),
            layers: [c1, c2],
            hidden: h2,
        },
    ))
}

fn layer_forward(
    net: &EdgeEmbedNet,
    layer: &LayerParams,
    h: &[f64],
    neigh: Option<&[f64]>,
    agg: &Aggregation,
    mode: Mode,
    rng: &mut rng::Rng,
) -> (Vec<f64>, LayerCache) {
    let edges = agg.edge_count();
    let width = layer.input_dim();
    let out_dim = layer.output_dim();
    let computed: Vec<f64>;
    let neigh = match neigh {
        Some(n) => n,
        None => {
            let mut buf = alloc::vec![0.0; edges * width];
            agg.apply(h, width, &mut buf);
            computed = buf;
            &computed
        }
    };

    let mut input = alloc::vec![0.0; edges * 2 * width];
    for e in 0..edges {
        let row = &mut input[e * 2 * width..(e + 1) * 2 * width];
        let own = if net.flags.use_disentangle {
            &h[e * width..(e + 1) * width]
        } else {
            &neigh[e * width..(e + 1) * width]
        };
        row[..width].copy_from_slice(own);
        row[width..].copy_from_slice(&neigh[e * width..(e + 1) * width]);
    }

    let mut pre = alloc::vec![0.0; edges * out_dim];
    for e in 0..edges {
        layer.weight.affine_into(
            &input[e * 2 * width..(e + 1) * 2 * width],
            &layer.bias,
            &mut pre[e * out_dim..(e + 1) * out_dim],
        );
    }

    let mut out: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
    let mask = match mode {
        Mode::Eval => Vec::new(),
        Mode::Train => {
            let keep = 1.0 - net.dropout_rate;
            let mask: Vec<f64> = (0..out.len())
                .map(|_| {
                    if net.dropout_rate == 0.0 || rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect();
            for (o, m) in out.iter_mut().zip(&mask) {
                *o *= m;
            }
            mask
        }
    };
    (
        out,
        LayerCache {
            input,
            pre_activation: pre,
            mask,
        },
    )
}

/// Probability of the anomalous class, `softmax(logits)[1]`.
#[inline]
pub fn anomaly_probability(logits: [f64; 2]) -> f64 {
    1.0 / (1.0 + libm::exp(logits[0] - logits[1]))
}
