//! Multilayer perceptrons with hand-written backpropagation.
//!
//! Parameters live in one flat vector. Each layer stores its weight matrix
//! (`output_size` rows of `input_size` entries, row-major) followed by its
//! bias vector. Gradients share that layout.

mod loss;
mod optim;
mod snapshot;

pub use loss::{
    backward, clamp_probability, discriminator_loss, discriminator_loss_on_samples,
    generator_loss, LossSpec, PROB_CLAMP,
};
pub use optim::{adam_step, sgd_step, AdamState, Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use snapshot::{ModelSnapshot, Role};

pub(crate) use loss::mean_log;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// `n` latent vectors drawn from `N(0, I)`.
pub fn sample_latent<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize) -> Matrix<T> {
    let data = (0..n * dim)
        .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    Matrix::from_vec(n, dim, data).expect("shape matches")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            // cheaper than libm tanh; absolute error stays near machine epsilon
            Activation::Tanh => {
                let two = T::one() + T::one();
                T::one() - two / ((two * x).exp() + T::one())
            }
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_at_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Tanh => T::one() - y * y,
            Activation::Sigmoid => y * (T::one() - y),
            Activation::Identity => T::one(),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub input_size: usize,
    pub output_size: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_size: usize, output_size: usize, activation: Activation) -> Self {
        Self {
            input_size,
            output_size,
            activation,
        }
    }

    #[inline]
    pub fn param_count(&self) -> usize {
        self.input_size * self.output_size + self.output_size
    }
}

/// Builds the layer list of a fully connected network.
///
/// `sizes` lists every width from input to output; hidden layers use
/// `hidden` and the last layer uses `output`.
pub fn mlp_layers(sizes: &[usize], hidden: Activation, output: Activation) -> Vec<LayerSpec> {
    let n = sizes.len().saturating_sub(1);
    sizes
        .windows(2)
        .enumerate()
        .map(|(i, w)| LayerSpec::new(w[0], w[1], if i + 1 == n { output } else { hidden }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    layers: Vec<LayerSpec>,
    weights: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub values: Vec<T>,
}

impl<T: Scalar> Gradient<T> {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![T::zero(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Layer inputs and outputs recorded by [`ModelParams::forward_trace`].
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    pub activations: Vec<Matrix<T>>,
}

impl<T> ForwardTrace<T> {
    pub fn output(&self) -> &Matrix<T> {
        self.activations.last().expect("trace holds the input")
    }
}

fn validate_layers(layers: &[LayerSpec]) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::Config("network needs at least one layer".into()));
    }
    for (i, l) in layers.iter().enumerate() {
        if l.input_size == 0 || l.output_size == 0 {
            return Err(Error::Config(format!("layer {i} has a zero-sized side")));
        }
        if i > 0 && layers[i - 1].output_size != l.input_size {
            return Err(Error::Config(format!(
                "layer {i} expects {} inputs but layer {} emits {}",
                l.input_size,
                i - 1,
                layers[i - 1].output_size
            )));
        }
    }
    Ok(())
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(layers: Vec<LayerSpec>, weights: Vec<T>) -> Result<Self> {
        validate_layers(&layers)?;
        let expected: usize = layers.iter().map(LayerSpec::param_count).sum();
        if weights.len() != expected {
            return Err(Error::Dimension(format!(
                "expected {expected} parameters, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("parameter construction"));
        }
        Ok(Self { layers, weights })
    }

    pub fn zeros(layers: Vec<LayerSpec>) -> Result<Self> {
        let n = layers.iter().map(LayerSpec::param_count).sum();
        Self::new(layers, vec![T::zero(); n])
    }

    /// Weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases likewise.
    pub fn init_uniform<R: Rng + ?Sized>(layers: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        validate_layers(&layers)?;
        let mut weights = Vec::with_capacity(layers.iter().map(LayerSpec::param_count).sum());
        for l in &layers {
            let bound = 1.0 / (l.input_size as f64).sqrt();
            for _ in 0..l.param_count() {
                weights.push(T::of(rng.random_range(-bound..=bound)));
            }
        }
        Ok(Self { layers, weights })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].output_size
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    /// Same network in another precision.
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            layers: self.layers.clone(),
            weights: self.weights.iter().map(|w| U::of(w.as_f64())).collect(),
        }
    }

    /// Replaces the weights, keeping the architecture.
    pub fn with_weights(&self, weights: Vec<T>) -> Result<Self> {
        if weights.len() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("parameter update"));
        }
        Ok(Self {
            layers: self.layers.clone(),
            weights,
        })
    }

    pub fn forward(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(input)?;
        let mut x = input.clone();
        let mut offset = 0;
        for layer in &self.layers {
            x = self.layer_forward(layer, offset, &x);
            offset += layer.param_count();
        }
        Ok(x)
    }

    pub fn forward_trace(&self, input: &Matrix<T>) -> Result<ForwardTrace<T>> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.clone());
        let mut offset = 0;
        for layer in &self.layers {
            let next = self.layer_forward(layer, offset, activations.last().unwrap());
            activations.push(next);
            offset += layer.param_count();
        }
        Ok(ForwardTrace { activations })
    }

    /// Backpropagates `grad_output` (dL/d output) through a recorded pass.
    ///
    /// Returns the parameter gradient and dL/d input.
    pub fn backprop(&self, trace: &ForwardTrace<T>, grad_output: &Matrix<T>) -> Result<(Gradient<T>, Matrix<T>)> {
        let out = trace.output();
        if grad_output.rows() != out.rows() || grad_output.cols() != out.cols() {
            return Err(Error::Dimension(format!(
                "output gradient is {}x{}, output is {}x{}",
                grad_output.rows(),
                grad_output.cols(),
                out.rows(),
                out.cols()
            )));
        }
        let mut grad = Gradient::zeros(self.weights.len());
        let mut upstream = grad_output.clone();
        let mut offset = self.weights.len();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            offset -= layer.param_count();
            let x = &trace.activations[l];
            let y = &trace.activations[l + 1];
            let (n_in, n_out) = (layer.input_size, layer.output_size);
            let w = &self.weights[offset..offset + n_in * n_out];
            let (gw, gb) = grad.values[offset..offset + layer.param_count()].split_at_mut(n_in * n_out);

            let mut delta = upstream;
            for (d, &yv) in delta.as_mut_slice().iter_mut().zip(y.as_slice()) {
                *d *= layer.activation.derivative_at_output(yv);
            }
            let mut grad_x = Matrix::zeros(x.rows(), n_in);
            for r in 0..x.rows() {
                let xr = x.row(r);
                let dr = delta.row(r);
                let gx = grad_x.row_mut(r);
                for o in 0..n_out {
                    let dv = dr[o];
                    if dv == T::zero() {
                        continue;
                    }
                    gb[o] += dv;
                    let wrow = &w[o * n_in..(o + 1) * n_in];
                    let grow = &mut gw[o * n_in..(o + 1) * n_in];
                    for (g, &xv) in grow.iter_mut().zip(xr) {
                        *g += dv * xv;
                    }
                    for (g, &wv) in gx.iter_mut().zip(wrow) {
                        *g += dv * wv;
                    }
                }
            }
            upstream = grad_x;
        }
        Ok((grad, upstream))
    }

    fn check_input(&self, input: &Matrix<T>) -> Result<()> {
        if input.cols() != self.input_size() {
            return Err(Error::Dimension(format!(
                "network expects width {}, got {}",
                self.input_size(),
                input.cols()
            )));
        }
        Ok(())
    }

    fn layer_forward(&self, layer: &LayerSpec, offset: usize, x: &Matrix<T>) -> Matrix<T> {
        let (n_in, n_out) = (layer.input_size, layer.output_size);
        let w = &self.weights[offset..offset + n_in * n_out];
        let b = &self.weights[offset + n_in * n_out..offset + layer.param_count()];
        let mut y = Matrix::zeros(x.rows(), n_out);
        for r in 0..x.rows() {
            let xr = x.row(r);
            let yr = y.row_mut(r);
            for o in 0..n_out {
                let wrow = &w[o * n_in..(o + 1) * n_in];
                yr[o] = layer.activation.apply(b[o] + dot(wrow, xr));
            }
        }
        y
    }
}

// Four independent accumulators so the loop vectorizes.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn zero_network_tanh_outputs_zero() {
        let layers = mlp_layers(&[3, 4, 2], Activation::Tanh, Activation::Tanh);
        let m = ModelParams::<f64>::zeros(layers).unwrap();
        let x = Matrix::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.1, 9.0]).unwrap();
        let y = m.forward(&x).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_network_sigmoid_outputs_half() {
        let layers = mlp_layers(&[2, 5, 1], Activation::Tanh, Activation::Sigmoid);
        let m = ModelParams::<f32>::zeros(layers).unwrap();
        let x = Matrix::from_vec(3, 2, vec![1.0, 2.0, -3.0, 4.0, 100.0, -100.0]).unwrap();
        let y = m.forward(&x).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layers = vec![LayerSpec::new(3, 3, Activation::Identity)];
        let mut w = vec![0.0; 12];
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        let m = ModelParams::new(layers, w).unwrap();
        let x = Matrix::from_vec(1, 3, vec![0.25, -7.0, 3.5]).unwrap();
        assert_eq!(m.forward(&x).unwrap(), x);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let m = ModelParams::<f64>::zeros(mlp_layers(&[2, 2], Activation::Tanh, Activation::Tanh)).unwrap();
        let x = Matrix::zeros(1, 3);
        assert!(matches!(m.forward(&x), Err(Error::Dimension(_))));
    }

    #[test]
    fn parameter_count_and_layer_chaining_are_checked() {
        let layers = mlp_layers(&[2, 3], Activation::Tanh, Activation::Tanh);
        assert!(ModelParams::<f64>::new(layers.clone(), vec![0.0; 8]).is_err());
        assert!(ModelParams::<f64>::new(layers, vec![0.0; 9]).is_ok());
        let broken = vec![
            LayerSpec::new(2, 3, Activation::Tanh),
            LayerSpec::new(4, 1, Activation::Tanh),
        ];
        assert!(ModelParams::<f64>::zeros(broken).is_err());
        assert!(ModelParams::<f64>::zeros(vec![LayerSpec::new(0, 1, Activation::Tanh)]).is_err());
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let layers = mlp_layers(&[16, 4, 1], Activation::Tanh, Activation::Sigmoid);
        let m = ModelParams::<f64>::init_uniform(layers, &mut seed::rng(3)).unwrap();
        let first = &m.weights()[..16 * 4 + 4];
        assert!(first.iter().all(|w| w.abs() <= 0.25));
        let second = &m.weights()[16 * 4 + 4..];
        assert!(second.iter().all(|w| w.abs() <= 0.5));
    }

    #[test]
    fn backprop_shapes_match_parameters() {
        let layers = mlp_layers(&[2, 4, 2], Activation::Tanh, Activation::Identity);
        let m = ModelParams::<f64>::init_uniform(layers, &mut seed::rng(1)).unwrap();
        let x = Matrix::from_vec(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let trace = m.forward_trace(&x).unwrap();
        let (g, gx) = m.backprop(&trace, &Matrix::from_vec(2, 2, vec![1.0; 4]).unwrap()).unwrap();
        assert_eq!(g.len(), m.param_count());
        assert_eq!((gx.rows(), gx.cols()), (2, 2));
    }
}
