use super::Matrix;

/// Adam with L2 regularisation added to the gradient (`g + wd * w`).
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Adam {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    /// One update of every parameter. State is lazily sized on the first call.
    pub fn step(&mut self, params: &mut [Matrix], grads: &[Matrix]) {
        self.step_params(params.iter_mut(), grads);
    }

    /// [`Adam::step`] over borrowed parameters (in a fixed order).
    pub fn step_params<'m>(&mut self, params: impl Iterator<Item = &'m mut Matrix>, grads: &[Matrix]) {
        let params: Vec<&mut Matrix> = params.collect();
        assert_eq!(params.len(), grads.len(), "one gradient per parameter");
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            debug_assert_eq!(p.shape(), g.shape());
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (i, w) in p.data_mut().iter_mut().enumerate() {
                let grad = g.data()[i] + self.weight_decay * *w;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * grad;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * grad * grad;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_no_decay_is_noop() {
        let mut p = vec![Matrix::new(1, 2, vec![0.3, -1.0]).unwrap()];
        let before = p.clone();
        let mut opt = Adam::new(0.01, 0.0);
        opt.step(&mut p, &[Matrix::zeros(1, 2)]);
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_is_lr() {
        let mut p = vec![Matrix::scalar(2.0)];
        let mut opt = Adam::new(0.01, 0.0);
        opt.step(&mut p, &[Matrix::scalar(1.0)]);
        let delta = p[0].item() - 2.0;
        // m_hat / sqrt(v_hat) = 1, so the step is lr / (1 + eps).
        assert!((delta + 0.01 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_enters_gradient() {
        let mut a = vec![Matrix::scalar(1.0)];
        let mut b = vec![Matrix::scalar(1.0)];
        Adam::new(0.1, 0.5).step(&mut a, &[Matrix::scalar(0.0)]);
        Adam::new(0.1, 0.0).step(&mut b, &[Matrix::scalar(0.5)]);
        assert_eq!(a, b);
    }
}
