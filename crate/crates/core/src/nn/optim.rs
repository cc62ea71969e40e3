use crate::error::{Error, Result};
use crate::nn::{Gradient, ModelParams};
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

/// First and second moment estimates of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: u32,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
        }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }
}

fn check_lengths<T: Scalar>(model: &ModelParams<T>, grad: &Gradient<T>) -> Result<()> {
    if grad.len() != model.param_count() {
        return Err(Error::Dimension(format!(
            "gradient has {} entries, model has {}",
            grad.len(),
            model.param_count()
        )));
    }
    Ok(())
}

/// `weights - lr * grad`.
pub fn sgd_step<T: Scalar>(model: &ModelParams<T>, grad: &Gradient<T>, learning_rate: f64) -> Result<ModelParams<T>> {
    check_lengths(model, grad)?;
    let lr = T::of(learning_rate);
    let w = model
        .weights()
        .iter()
        .zip(&grad.values)
        .map(|(&w, &g)| w - lr * g)
        .collect();
    model.with_weights(w)
}

/// One bias-corrected Adam update.
pub fn adam_step<T: Scalar>(
    model: &ModelParams<T>,
    grad: &Gradient<T>,
    learning_rate: f64,
    state: &mut AdamState<T>,
) -> Result<ModelParams<T>> {
    check_lengths(model, grad)?;
    if state.m.len() != model.param_count() {
        *state = AdamState::new(model.param_count());
    }
    state.t += 1;
    let b1 = T::of(ADAM_BETA1);
    let b2 = T::of(ADAM_BETA2);
    let eps = T::of(ADAM_EPS);
    let lr = T::of(learning_rate);
    let c1 = T::one() - b1.powi(state.t as i32);
    let c2 = T::one() - b2.powi(state.t as i32);
    let mut w = model.weights().to_vec();
    for (((wi, &g), m), v) in w.iter_mut().zip(&grad.values).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        *wi -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
    }
    model.with_weights(w)
}

/// An update rule plus whatever state it carries between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    adam: Option<AdamState<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind) -> Self {
        Self { kind, adam: None }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Forgets accumulated moments.
    pub fn reset(&mut self) {
        self.adam = None;
    }

    pub fn step(&mut self, model: &ModelParams<T>, grad: &Gradient<T>, learning_rate: f64) -> Result<ModelParams<T>> {
        match self.kind {
            OptimizerKind::Sgd => sgd_step(model, grad, learning_rate),
            OptimizerKind::Adam => {
                let state = self
                    .adam
                    .get_or_insert_with(|| AdamState::new(model.param_count()));
                adam_step(model, grad, learning_rate, state)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};

    fn two_params(a: f64, b: f64) -> ModelParams<f64> {
        ModelParams::new(vec![LayerSpec::new(1, 1, Activation::Identity)], vec![a, b]).unwrap()
    }

    #[test]
    fn sgd_zero_gradient_is_fixed_point() {
        let m = two_params(1.0, 2.0);
        let next = sgd_step(&m, &Gradient::zeros(2), 0.3).unwrap();
        assert_eq!(next, m);
    }

    #[test]
    fn sgd_arithmetic() {
        let m = two_params(1.0, 2.0);
        let g = Gradient { values: vec![0.5, -1.0] };
        let next = sgd_step(&m, &g, 0.1).unwrap();
        assert_eq!(next.weights(), &[1.0 - 0.1 * 0.5, 2.0 + 0.1 * 1.0]);
        approx::assert_relative_eq!(next.weights()[0], 0.95, epsilon = 1e-15);
        approx::assert_relative_eq!(next.weights()[1], 2.1, epsilon = 1e-15);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
        let m = two_params(0.0, 0.0);
        let g = Gradient { values: vec![3.0, -0.02] };
        let mut st = AdamState::new(2);
        let next = adam_step(&m, &g, 0.01, &mut st).unwrap();
        let expect0 = -0.01 * 3.0 / (3.0 + 1e-8);
        let expect1 = 0.01 * 0.02 / (0.02 + 1e-8);
        approx::assert_relative_eq!(next.weights()[0], expect0, epsilon = 1e-15);
        approx::assert_relative_eq!(next.weights()[1], expect1, epsilon = 1e-15);
        assert!((next.weights()[0] + 0.01).abs() < 1e-9);
        assert!((next.weights()[1] - 0.01).abs() < 1e-8);
        assert_eq!(st.steps(), 1);
    }

    #[test]
    fn overflowing_update_is_reported() {
        let m = two_params(f64::MAX, 0.0);
        let g = Gradient { values: vec![-f64::MAX, 0.0] };
        assert!(matches!(sgd_step(&m, &g, 10.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn optimizer_reset_restarts_bias_correction() {
        let m = two_params(0.0, 0.0);
        let g = Gradient { values: vec![1.0, 1.0] };
        let mut opt = Optimizer::new(OptimizerKind::Adam);
        let a = opt.step(&m, &g, 0.1).unwrap();
        opt.reset();
        let b = opt.step(&m, &g, 0.1).unwrap();
        assert_eq!(a, b);
    }
}
