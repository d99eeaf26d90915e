use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Per-parameter Adam optimizer state with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Tensor,
    v: Tensor,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lr: f64,
}

impl AdamState {
    pub fn new(shape: &[usize], lr: f64) -> Self {
        AdamState {
            m: Tensor::zeros(shape),
            v: Tensor::zeros(shape),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update: moments, bias correction, parameter step.
pub fn adam_step(param: &mut Tensor, grad: &Tensor, state: &mut AdamState) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.m.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", param.shape()),
            actual: format!("grad {:?}, state {:?}", grad.shape(), state.m.shape()),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for i in 0..param.len() {
        let g = grad.data()[i];
        let m = state.beta1 * state.m.data()[i] + (1.0 - state.beta1) * g;
        let v = state.beta2 * state.v.data()[i] + (1.0 - state.beta2) * g * g;
        state.m.data_mut()[i] = m;
        state.v.data_mut()[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        param.data_mut()[i] -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    debug_assert!(param.all_finite());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_param_unchanged() {
        let mut p = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let before = p.clone();
        let g = Tensor::zeros(&[3]);
        let mut st = AdamState::new(&[3], 0.01);
        adam_step(&mut p, &g, &mut st).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // At t=1 the bias-corrected ratio m_hat/sqrt(v_hat) is 1 for any
        // constant gradient, so the update is -lr (up to epsilon).
        let mut p = Tensor::from_vec(&[1], vec![0.0]).unwrap();
        let g = Tensor::from_vec(&[1], vec![1.0]).unwrap();
        let mut st = AdamState::new(&[1], 0.01);
        adam_step(&mut p, &g, &mut st).unwrap();
        assert!((p.data()[0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut p = Tensor::from_vec(&[2], vec![0.3, -0.7]).unwrap();
            let mut st = AdamState::new(&[2], 0.01);
            for step in 0..25 {
                let g = Tensor::from_vec(&[2], vec![0.1 * step as f64, -0.05]).unwrap();
                adam_step(&mut p, &g, &mut st).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_errors() {
        let mut p = Tensor::zeros(&[2]);
        let g = Tensor::zeros(&[3]);
        let mut st = AdamState::new(&[2], 0.01);
        assert!(adam_step(&mut p, &g, &mut st).is_err());
    }
}
