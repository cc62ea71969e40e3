//! Binary cross-entropy GAN losses with log as the measuring function.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{Activation, Gradient, ModelParams};
use crate::scalar::Scalar;

/// Discriminator probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before any log.
pub const PROB_CLAMP: f64 = 1e-7;

/// Clamps a probability. The second value is false when the clamp was active,
/// in which case the loss is flat in that probability.
#[inline]
pub fn clamp_probability<T: Scalar>(p: T) -> (T, bool) {
    let lo = T::of(PROB_CLAMP);
    let hi = T::one() - lo;
    if p <= lo {
        (lo, false)
    } else if p >= hi {
        (hi, false)
    } else {
        (p, true)
    }
}

/// Which loss to differentiate and the frozen material it is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum LossSpec<'a, T> {
    /// Two-term BCE of a discriminator on real and generated samples.
    Discriminator { real: &'a Matrix<T>, fake: &'a Matrix<T> },
    /// `0.5 * mean(log(1 - D(G(z))))` for the generator, `D` frozen.
    Generator { discriminator: &'a ModelParams<T>, latent: &'a Matrix<T> },
}

fn check_discriminator<T: Scalar>(d: &ModelParams<T>) -> Result<()> {
    if d.output_size() != 1 || d.output_activation() != Activation::Sigmoid {
        return Err(Error::Config(
            "discriminator must end in a single sigmoid unit".into(),
        ));
    }
    Ok(())
}

fn check_batch<T: Scalar>(m: &Matrix<T>, what: &str) -> Result<()> {
    if m.rows() == 0 {
        return Err(Error::Dimension(format!("{what} batch is empty")));
    }
    Ok(())
}

/// Mean of `log p` (or `log(1 - p)` when `complement`) over clamped probabilities.
pub(crate) fn mean_log<T: Scalar>(probs: &Matrix<T>, complement: bool) -> T {
    let n = T::of_usize(probs.rows());
    probs
        .as_slice()
        .iter()
        .map(|&p| {
            let (p, _) = clamp_probability(p);
            if complement { (T::one() - p).ln() } else { p.ln() }
        })
        .sum::<T>()
        / n
}

/// `-(mean log D(real) + mean log(1 - D(fake)))`.
pub fn discriminator_loss<T: Scalar>(d: &ModelParams<T>, real: &Matrix<T>, fake: &Matrix<T>) -> Result<T> {
    check_discriminator(d)?;
    check_batch(real, "real")?;
    check_batch(fake, "fake")?;
    let pr = d.forward(real)?;
    let pf = d.forward(fake)?;
    Ok(-(mean_log(&pr, false) + mean_log(&pf, true)))
}

/// Discriminator loss where the fake batch is produced by `g` from `latent`.
pub fn discriminator_loss_on_samples<T: Scalar>(
    d: &ModelParams<T>,
    g: &ModelParams<T>,
    real: &Matrix<T>,
    latent: &Matrix<T>,
) -> Result<T> {
    let fake = g.forward(latent)?;
    discriminator_loss(d, real, &fake)
}

/// `0.5 * mean log(1 - D(G(z)))`.
pub fn generator_loss<T: Scalar>(g: &ModelParams<T>, d: &ModelParams<T>, latent: &Matrix<T>) -> Result<T> {
    check_discriminator(d)?;
    check_batch(latent, "latent")?;
    if g.output_size() != d.input_size() {
        return Err(Error::Dimension(format!(
            "generator emits width {}, discriminator reads {}",
            g.output_size(),
            d.input_size()
        )));
    }
    let fake = g.forward(latent)?;
    let pf = d.forward(&fake)?;
    Ok(T::of(0.5) * mean_log(&pf, true))
}

/// Loss value and its gradient with respect to `model`'s own parameters.
/// The adversary named in `spec` is only read.
pub fn backward<T: Scalar>(model: &ModelParams<T>, spec: LossSpec<'_, T>) -> Result<(T, Gradient<T>)> {
    let (loss, grad) = match spec {
        LossSpec::Discriminator { real, fake } => {
            check_discriminator(model)?;
            check_batch(real, "real")?;
            check_batch(fake, "fake")?;
            let tr = model.forward_trace(real)?;
            let tf = model.forward_trace(fake)?;
            let nr = T::of_usize(real.rows());
            let nf = T::of_usize(fake.rows());

            let mut gr = Matrix::zeros(real.rows(), 1);
            let mut lr = T::zero();
            for (i, &p) in tr.output().as_slice().iter().enumerate() {
                let (pc, live) = clamp_probability(p);
                lr += pc.ln();
                if live {
                    gr.as_mut_slice()[i] = -T::one() / (nr * pc);
                }
            }
            let mut gf = Matrix::zeros(fake.rows(), 1);
            let mut lf = T::zero();
            for (i, &p) in tf.output().as_slice().iter().enumerate() {
                let (pc, live) = clamp_probability(p);
                lf += (T::one() - pc).ln();
                if live {
                    gf.as_mut_slice()[i] = T::one() / (nf * (T::one() - pc));
                }
            }
            let (mut grad, _) = model.backprop(&tr, &gr)?;
            let (grad_f, _) = model.backprop(&tf, &gf)?;
            for (a, b) in grad.values.iter_mut().zip(grad_f.values) {
                *a += b;
            }
            (-(lr / nr + lf / nf), grad)
        }
        LossSpec::Generator { discriminator, latent } => {
            check_discriminator(discriminator)?;
            check_batch(latent, "latent")?;
            if model.output_size() != discriminator.input_size() {
                return Err(Error::Dimension(format!(
                    "generator emits width {}, discriminator reads {}",
                    model.output_size(),
                    discriminator.input_size()
                )));
            }
            let tg = model.forward_trace(latent)?;
            let td = discriminator.forward_trace(tg.output())?;
            let n = T::of_usize(latent.rows());
            let half = T::of(0.5);
            let mut gp = Matrix::zeros(latent.rows(), 1);
            let mut total = T::zero();
            for (i, &p) in td.output().as_slice().iter().enumerate() {
                let (pc, live) = clamp_probability(p);
                total += (T::one() - pc).ln();
                if live {
                    gp.as_mut_slice()[i] = -half / (n * (T::one() - pc));
                }
            }
            let (_, grad_fake) = discriminator.backprop(&td, &gp)?;
            let (grad, _) = model.backprop(&tg, &grad_fake)?;
            (half * total / n, grad)
        }
    };
    if !loss.is_finite() || !grad.is_finite() {
        return Err(Error::NonFinite("loss evaluation"));
    }
    Ok((loss, grad))
}
