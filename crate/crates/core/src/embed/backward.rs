use alloc::vec::Vec;

use super::{Aggregation, EdgeEmbedNet, ForwardCache, LayerCache, LayerParams, Mode};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Gradients with the same shapes as [`EdgeEmbedNet`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layer1: LayerParams,
    pub layer2: LayerParams,
    pub head: Matrix,
    pub head_bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &EdgeEmbedNet) -> Self {
        let zero_layer = |l: &LayerParams| LayerParams {
            weight: Matrix::zeros(l.weight.rows, l.weight.cols),
            bias: alloc::vec![0.0; l.bias.len()],
        };
        Self {
            layer1: zero_layer(&net.layer1),
            layer2: zero_layer(&net.layer2),
            head: Matrix::zeros(net.head.rows, net.head.cols),
            head_bias: alloc::vec![0.0; 2],
        }
    }

    /// Same order as [`EdgeEmbedNet::tensors`].
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
}

/// Exact gradients of `Σ_e grad_logits[e] · logits[e]` with respect to every
/// parameter, under the dropout masks recorded in `cache`. `β` is constant.
pub fn backward(net: &EdgeEmbedNet, cache: &ForwardCache, grad_logits: &[[f64; 2]]) -> Result<Gradients> {
    if cache.fingerprint != net.fingerprint() || cache.mode != Mode::Train {
        return Err(Error::StaleCache);
    }
    let edges = cache.agg.edge_count();
    if grad_logits.len() != edges {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} logit gradients for {} edges",
            grad_logits.len(),
            edges
        )));
    }
    let mut grads = Gradients::zeros_like(net);

    let h2_dim = net.layer2.output_dim();
    let mut grad_h2 = alloc::vec![0.0; edges * h2_dim];
    for (e, g) in grad_logits.iter().enumerate() {
        if g[0] == 0.0 && g[1] == 0.0 {
            continue;
        }
        let h = &cache.hidden[e * h2_dim..(e + 1) * h2_dim];
        grads.head.add_outer(g, h);
        grads.head_bias[0] += g[0];
        grads.head_bias[1] += g[1];
        net.head
            .transpose_mul_add(g, &mut grad_h2[e * h2_dim..(e + 1) * h2_dim]);
    }

    let grad_h1 = layer_backward(
        net,
        &net.layer2,
        &cache.layers[1],
        &cache.agg,
        &mut grad_h2,
        &mut grads.layer2,
        true,
    );
    let mut grad_h1 = grad_h1.expect("input gradient requested");
    layer_backward(
        net,
        &net.layer1,
        &cache.layers[0],
        &cache.agg,
        &mut grad_h1,
        &mut grads.layer1,
        false,
    );
    Ok(grads)
}

/// Accumulates the layer's parameter gradients from `grad_out` (overwritten)
/// and, if asked, returns the gradient with respect to the layer input.
fn layer_backward(
    net: &EdgeEmbedNet,
    layer: &LayerParams,
    cache: &LayerCache,
    agg: &Aggregation,
    grad_out: &mut [f64],
    grads: &mut LayerParams,
    want_input: bool,
) -> Option<Vec<f64>> {
    let edges = agg.edge_count();
    let width = layer.input_dim();
    let out_dim = layer.output_dim();

    // through dropout and relu
    for (i, g) in grad_out.iter_mut().enumerate() {
        let m = cache.mask.get(i).copied().unwrap_or(1.0);
        *g = if cache.pre_activation[i] > 0.0 { *g * m } else { 0.0 };
    }

    let mut grad_input = if want_input {
        Some(alloc::vec![0.0; edges * 2 * width])
    } else {
        None
    };
    for e in 0..edges {
        let dz = &grad_out[e * out_dim..(e + 1) * out_dim];
        if dz.iter().all(|&v| v == 0.0) {
            continue;
        }
        let x = &cache.input[e * 2 * width..(e + 1) * 2 * width];
        grads.weight.add_outer(dz, x);
        for (b, d) in grads.bias.iter_mut().zip(dz) {
            *b += d;
        }
        if let Some(gi) = grad_input.as_mut() {
            layer
                .weight
                .transpose_mul_add(dz, &mut gi[e * 2 * width..(e + 1) * 2 * width]);
        }
    }

    let grad_input = grad_input?;
    let mut grad_h = alloc::vec![0.0; edges * width];
    let mut grad_neigh = alloc::vec![0.0; edges * width];
    for e in 0..edges {
        let row = &grad_input[e * 2 * width..(e + 1) * 2 * width];
        let (own, neigh) = row.split_at(width);
        let gn = &mut grad_neigh[e * width..(e + 1) * width];
        gn.copy_from_slice(neigh);
        if net.flags.use_disentangle {
            grad_h[e * width..(e + 1) * width].copy_from_slice(own);
        } else {
            for (a, b) in gn.iter_mut().zip(own) {
                *a += b;
            }
        }
    }
    agg.apply_transpose(&grad_neigh, width, &mut grad_h);
    Some(grad_h)
}
