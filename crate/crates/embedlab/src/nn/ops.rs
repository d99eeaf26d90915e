//! Forward and backward passes for the layers used by the embedding model
//! and the article classifier. All passes are plain dense `f64` math; each
//! backward returns the exact analytic gradient of its forward.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Guard added inside `log` in the cross-entropy loss.
pub const LOG_EPS: f64 = 1e-12;

/// `y = Wx + b` for `W: [out, in]`, `b: [out]`, `x: [in]`.
pub fn dense_forward(w: &Tensor, b: &Tensor, x: &Tensor) -> Result<Tensor> {
    if w.shape().len() != 2 || w.cols() != x.len() || w.rows() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("W [out, in] with in = {}, b [out]", x.len()),
            actual: format!("W {:?}, b {:?}", w.shape(), b.shape()),
        });
    }
    let out = w.rows();
    let mut y = Tensor::zeros(&[out]);
    for i in 0..out {
        let row = w.row(i);
        let mut acc = b.data()[i];
        for (wij, xj) in row.iter().zip(x.data()) {
            acc += wij * xj;
        }
        y.data_mut()[i] = acc;
    }
    debug_assert!(y.all_finite());
    Ok(y)
}

/// Gradients of `y = Wx + b` given upstream `dy`: returns `(dW, db, dx)`.
pub fn dense_backward(dy: &Tensor, w: &Tensor, x: &Tensor) -> (Tensor, Tensor, Tensor) {
    let out = w.rows();
    let inp = w.cols();
    let mut dw = Tensor::zeros(&[out, inp]);
    let mut dx = Tensor::zeros(&[inp]);
    for i in 0..out {
        let g = dy.data()[i];
        let w_row = w.row(i);
        let dw_row = dw.row_mut(i);
        for j in 0..inp {
            dw_row[j] = g * x.data()[j];
            dx.data_mut()[j] += g * w_row[j];
        }
    }
    (dw, dy.clone(), dx)
}

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::from_vec(x.shape(), data).expect("same shape")
}

/// `dx_i = dy_i * [x_i > 0]` with `x` the pre-activation input.
pub fn relu_backward(dy: &Tensor, x: &Tensor) -> Tensor {
    let data = dy
        .data()
        .iter()
        .zip(x.data())
        .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(x.shape(), data).expect("same shape")
}

/// Max-shifted softmax over a 1-D tensor.
pub fn softmax(z: &Tensor) -> Tensor {
    let max = z.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut exps: Vec<f64> = z.data().iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    for e in &mut exps {
        *e /= sum;
    }
    let p = Tensor::from_vec(z.shape(), exps).expect("same shape");
    debug_assert!(p.all_finite());
    p
}

/// `-sum_i y_i * ln(p_i + eps)` for a probability vector `p` and target
/// distribution `y`.
pub fn cross_entropy(p: &Tensor, y: &Tensor) -> f64 {
    debug_assert_eq!(p.shape(), y.shape());
    -p.data()
        .iter()
        .zip(y.data())
        .map(|(&pi, &yi)| yi * (pi + LOG_EPS).ln())
        .sum::<f64>()
}

/// Gradient of `cross_entropy(softmax(z), y)` with respect to the logits z.
pub fn softmax_ce_backward(p: &Tensor, y: &Tensor) -> Tensor {
    let data = p
        .data()
        .iter()
        .zip(y.data())
        .map(|(&pi, &yi)| pi - yi)
        .collect();
    Tensor::from_vec(p.shape(), data).expect("same shape")
}

/// Valid (no padding) 1-D cross-correlation.
///
/// `x: [T, C]`, `kernels: [F, K, C]`, `bias: [F]` -> `[T - K + 1, F]`.
pub fn conv1d_forward(x: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (t, c) = (x.shape()[0], x.shape()[1]);
    let (f, k, kc) = (kernels.shape()[0], kernels.shape()[1], kernels.shape()[2]);
    if kc != c || bias.len() != f {
        return Err(Error::ShapeMismatch {
            expected: format!("kernels [F, K, {c}], bias [F]"),
            actual: format!("kernels {:?}, bias {:?}", kernels.shape(), bias.shape()),
        });
    }
    if t < k {
        return Err(Error::InvalidInput(format!(
            "sequence length {t} shorter than kernel size {k}"
        )));
    }
    let t_out = t - k + 1;
    let mut y = Tensor::zeros(&[t_out, f]);
    for pos in 0..t_out {
        for fi in 0..f {
            let mut acc = bias.data()[fi];
            for ki in 0..k {
                let x_row = x.row(pos + ki);
                let ker = &kernels.data()[(fi * k + ki) * c..(fi * k + ki + 1) * c];
                for (xv, kv) in x_row.iter().zip(ker) {
                    acc += xv * kv;
                }
            }
            y.set2(pos, fi, acc);
        }
    }
    debug_assert!(y.all_finite());
    Ok(y)
}

/// Gradients of `conv1d_forward`: returns `(dx, dkernels, dbias)`.
pub fn conv1d_backward(dy: &Tensor, x: &Tensor, kernels: &Tensor) -> (Tensor, Tensor, Tensor) {
    let (t, c) = (x.shape()[0], x.shape()[1]);
    let (f, k) = (kernels.shape()[0], kernels.shape()[1]);
    let t_out = t - k + 1;
    let mut dx = Tensor::zeros(&[t, c]);
    let mut dker = Tensor::zeros(&[f, k, c]);
    let mut dbias = Tensor::zeros(&[f]);
    for pos in 0..t_out {
        for fi in 0..f {
            let g = dy.at2(pos, fi);
            dbias.data_mut()[fi] += g;
            for ki in 0..k {
                let base = (fi * k + ki) * c;
                let x_row = &x.data()[(pos + ki) * c..(pos + ki + 1) * c];
                let ker_row = &kernels.data()[base..base + c];
                let dker_row = &mut dker.data_mut()[base..base + c];
                for (dk, &xv) in dker_row.iter_mut().zip(x_row) {
                    *dk += g * xv;
                }
                let dx_row = &mut dx.data_mut()[(pos + ki) * c..(pos + ki + 1) * c];
                for (dxv, &kv) in dx_row.iter_mut().zip(ker_row) {
                    *dxv += g * kv;
                }
            }
        }
    }
    (dx, dker, dbias)
}

/// Per-filter max over the time axis; `x: [T, F]` -> `([F], argmax per filter)`.
/// Ties resolve to the earliest timestep.
pub fn global_max_pool(x: &Tensor) -> (Tensor, Vec<usize>) {
    let (t, f) = (x.shape()[0], x.shape()[1]);
    let mut best = vec![f64::NEG_INFINITY; f];
    let mut arg = vec![0usize; f];
    for pos in 0..t {
        let row = x.row(pos);
        for ((b, a), &v) in best.iter_mut().zip(arg.iter_mut()).zip(row) {
            if v > *b {
                *b = v;
                *a = pos;
            }
        }
    }
    (Tensor::from_vec(&[f], best).expect("len f"), arg)
}

/// Routes `dy` back to the argmax timestep of each filter.
pub fn global_max_pool_backward(dy: &Tensor, argmax: &[usize], t: usize) -> Tensor {
    let f = dy.len();
    let mut dx = Tensor::zeros(&[t, f]);
    for (fi, (&pos, &g)) in argmax.iter().zip(dy.data()).enumerate() {
        dx.set2(pos, fi, g);
    }
    dx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Eval,
}

/// Inverted dropout. Returns `(y, mask)` where `mask` holds the per-element
/// scale factor (0 or 1/(1-rate)); eval mode is the identity with a mask of
/// ones. The mask feeds `dropout_backward`.
pub fn dropout(
    x: &Tensor,
    rate: f64,
    mode: DropoutMode,
    rng: &mut ChaCha8Rng,
) -> Result<(Tensor, Tensor)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidInput(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if mode == DropoutMode::Eval || rate == 0.0 {
        return Ok((x.clone(), Tensor::filled(x.shape(), 1.0)));
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let mut mask = Tensor::zeros(x.shape());
    for m in mask.data_mut() {
        if rng.gen::<f64>() >= rate {
            *m = scale;
        }
    }
    let data = x
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&v, &m)| v * m)
        .collect();
    Ok((Tensor::from_vec(x.shape(), data).expect("same shape"), mask))
}

pub fn dropout_backward(dy: &Tensor, mask: &Tensor) -> Tensor {
    let data = dy
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&g, &m)| g * m)
        .collect();
    Tensor::from_vec(dy.shape(), data).expect("same shape")
}
