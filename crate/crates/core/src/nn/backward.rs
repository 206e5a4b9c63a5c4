//! Exact gradients of the joint objective.
//!
//! The ranking term depends on the true losses only through `sign(l_j - l_k)`,
//! which is piecewise constant, so the true losses act as constants and the
//! ranking gradient reaches the classifier only through the head's input `h`.

use super::loss::{bce_loss, joint_loss, sign, RankingPair};
use super::network::{forward, Dense, ForwardTrace, NetworkParams};
use crate::{Error, Result};

/// Upstream scalars for one sample's backward pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleContext {
    /// Weight of this sample's BCE term in the objective (`1/|B|` in a batch).
    pub bce_scale: f64,
    /// d(objective)/d(predicted loss rank), when the ranking term is active.
    pub head_upstream: Option<f64>,
}

fn check_trace(params: &NetworkParams, trace: &ForwardTrace, y: &[u8]) -> Result<()> {
    if trace.inputs.len() != params.layers.len() || trace.pre.len() != params.layers.len() {
        return Err(Error::Shape(format!(
            "trace has {} layers, network has {}",
            trace.inputs.len(),
            params.layers.len()
        )));
    }
    for (layer, (input, pre)) in params
        .layers
        .iter()
        .zip(trace.inputs.iter().zip(&trace.pre))
    {
        if input.len() != layer.inputs || pre.len() != layer.outputs {
            return Err(Error::Dimension {
                expected: layer.inputs,
                got: input.len(),
            });
        }
    }
    if y.len() != params.num_classes() {
        return Err(Error::Dimension {
            expected: params.num_classes(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Accumulates `delta ⊗ input` into the weights and `delta` into the bias.
fn accumulate(grad: &mut Dense, delta: &[f64], input: &[f64]) {
    for (o, &d) in delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let row = &mut grad.weights[o * grad.inputs..(o + 1) * grad.inputs];
        for (g, &x) in row.iter_mut().zip(input) {
            *g += d * x;
        }
        grad.bias[o] += d;
    }
}

/// `W^T delta`.
fn pull_back(layer: &Dense, delta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layer.inputs];
    for (o, &d) in delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for (acc, &w) in out.iter_mut().zip(layer.row(o)) {
            *acc += w * d;
        }
    }
    out
}

/// Adds one sample's gradient into `grads`.
///
/// With `detach_head` the head still receives its full gradient but nothing
/// flows from the head back into the classifier.
pub fn backward(
    params: &NetworkParams,
    trace: &ForwardTrace,
    y: &[u8],
    ctx: SampleContext,
    detach_head: bool,
    grads: &mut NetworkParams,
) -> Result<()> {
    check_trace(params, trace, y)?;
    let last = params.layers.len() - 1;

    let mut delta: Vec<f64> = trace
        .probs
        .iter()
        .zip(y)
        .map(|(&p, &t)| ctx.bce_scale * (p - f64::from(t)))
        .collect();
    accumulate(&mut grads.layers[last], &delta, &trace.inputs[last]);
    if last == 0 {
        // single-layer network: the head (if any) sits on the raw input
        head_backward(params, trace, ctx, grads)?;
        return Ok(());
    }
    let mut upstream = pull_back(&params.layers[last], &delta);
    if let Some(dh) = head_backward(params, trace, ctx, grads)? {
        if !detach_head {
            for (u, d) in upstream.iter_mut().zip(dh) {
                *u += d;
            }
        }
    }

    for i in (0..last).rev() {
        delta = upstream
            .iter()
            .zip(&trace.pre[i])
            .map(|(&u, &z)| if z > 0.0 { u } else { 0.0 })
            .collect();
        accumulate(&mut grads.layers[i], &delta, &trace.inputs[i]);
        if i > 0 {
            upstream = pull_back(&params.layers[i], &delta);
        }
    }
    Ok(())
}

/// Backpropagates the ranking signal through the head; returns d/dh.
fn head_backward(
    params: &NetworkParams,
    trace: &ForwardTrace,
    ctx: SampleContext,
    grads: &mut NetworkParams,
) -> Result<Option<Vec<f64>>> {
    let Some(g) = ctx.head_upstream else {
        return Ok(None);
    };
    let head = params.head.as_ref().ok_or(Error::MissingHead)?;
    let head_trace = trace.head.as_ref().ok_or(Error::MissingHead)?;
    let head_grads = grads.head.as_mut().ok_or(Error::MissingHead)?;
    let h = trace.penultimate();
    let hidden: Vec<f64> = head_trace.pre.iter().map(|&z| z.max(0.0)).collect();
    accumulate(&mut head_grads.fc2, &[g], &hidden);
    let dz1: Vec<f64> = head
        .fc2
        .row(0)
        .iter()
        .zip(&head_trace.pre)
        .map(|(&w, &z)| if z > 0.0 { g * w } else { 0.0 })
        .collect();
    accumulate(&mut head_grads.fc1, &dz1, h);
    Ok(Some(pull_back(&head.fc1, &dz1)))
}

/// Objective value and gradient over one minibatch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchGradients {
    pub loss: f64,
    pub grads: NetworkParams,
}

/// Evaluates the joint objective on a batch and its gradient w.r.t. every
/// parameter. `pairs` index into `batch` and must number `floor(|B|/2)`.
/// The ranking term is active only when `lambda > 0` and the network has a
/// head; otherwise this is plain mean-BCE backprop.
pub fn batch_gradients(
    params: &NetworkParams,
    batch: &[(&[f64], &[u8])],
    pairs: &[(usize, usize)],
    lambda: f64,
    margin: f64,
    detach_head: bool,
) -> Result<BatchGradients> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch.len();
    let ranking = lambda > 0.0 && params.has_head();
    if ranking && (pairs.len() != n / 2 || pairs.iter().any(|&(j, k)| j >= n || k >= n || j == k)) {
        return Err(Error::Shape(format!("invalid pairing for a batch of {n}")));
    }

    let traces = batch
        .iter()
        .map(|(x, _)| forward(params, x, ranking))
        .collect::<Result<Vec<_>>>()?;
    let losses = traces
        .iter()
        .zip(batch)
        .map(|(t, (_, y))| bce_loss(&t.probs, y))
        .collect::<Result<Vec<_>>>()?;

    let mut head_upstream = vec![0.0; n];
    let loss = if ranking {
        let predicted = |i: usize| traces[i].head_value().unwrap_or(0.0);
        let scale = lambda * 2.0 / n as f64;
        let mut ranking_pairs = Vec::with_capacity(pairs.len());
        for &(j, k) in pairs {
            let pair = RankingPair {
                losses: (losses[j], losses[k]),
                predicted: (predicted(j), predicted(k)),
            };
            let s = sign(pair.losses.0 - pair.losses.1);
            if -s * (pair.predicted.0 - pair.predicted.1) + margin > 0.0 {
                head_upstream[j] -= scale * s;
                head_upstream[k] += scale * s;
            }
            ranking_pairs.push(pair);
        }
        joint_loss(&losses, &ranking_pairs, lambda, margin)?
    } else {
        losses.iter().sum::<f64>() / n as f64
    };

    let mut grads = params.zeros_like();
    let bce_scale = 1.0 / n as f64;
    for (i, (trace, (_, y))) in traces.iter().zip(batch).enumerate() {
        let ctx = SampleContext {
            bce_scale,
            head_upstream: ranking.then_some(head_upstream[i]),
        };
        backward(params, trace, y, ctx, detach_head, &mut grads)?;
    }
    Ok(BatchGradients { loss, grads })
}
