use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    shapes: Vec<Vec<usize>>,
}

impl Adam {
    /// Fresh state for parameters of the given shapes.
    pub fn new<'a>(shapes: impl IntoIterator<Item = &'a [usize]>, learning_rate: f64) -> Self {
        let shapes: Vec<Vec<usize>> = shapes.into_iter().map(<[usize]>::to_vec).collect();
        let zeros = |s: &Vec<usize>| vec![0.0; s.iter().product()];
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: shapes.iter().map(zeros).collect(),
            second: shapes.iter().map(zeros).collect(),
            shapes,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update `θ ← θ - lr · m̂ / (√v̂ + ε)`.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if params.len() != self.shapes.len() || grads.len() != self.shapes.len() {
            return Err(Error::contract(format!(
                "adam: expected {} parameter tensors, got {} params / {} grads",
                self.shapes.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), shape) in params.iter().zip(grads).zip(&self.shapes) {
            if p.shape() != shape.as_slice() || g.shape() != shape.as_slice() {
                return Err(Error::contract(format!(
                    "adam: shape mismatch, state {shape:?}, param {:?}, grad {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (((theta, &gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *theta -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Tensor::from_vec(vec![0.3, -1.2]);
        let g = Tensor::zeros(&[2]);
        let mut adam = Adam::new([p.shape()], 0.001);
        for _ in 0..5 {
            adam.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert_eq!(p.data(), &[0.3, -1.2]);
    }

    #[test]
    fn first_step_closed_form() {
        let mut p = Tensor::from_vec(vec![0.0]);
        let g = Tensor::from_vec(vec![1.0]);
        let mut adam = Adam::new([p.shape()], 0.001);
        adam.step(&mut [&mut p], &[&g]).unwrap();
        // m̂ = g, v̂ = g², so the step is lr · g / (|g| + ε)
        assert!((p.data()[0] + 0.001).abs() < 1e-6);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn symmetric_params_stay_equal() {
        let mut p = Tensor::from_vec(vec![0.7, 0.7]);
        let mut adam = Adam::new([p.shape()], 0.01);
        for k in 0..20 {
            let g = Tensor::from_vec(vec![(k as f64).sin(), (k as f64).sin()]);
            adam.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert_eq!(p.data()[0], p.data()[1]);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Tensor::from_vec(vec![0.0, 0.0]);
        let g = Tensor::from_vec(vec![1.0]);
        let mut adam = Adam::new([p.shape()], 0.001);
        assert!(matches!(adam.step(&mut [&mut p], &[&g]), Err(Error::Contract(_))));
        assert_eq!(adam.step_count(), 0);
    }
}
