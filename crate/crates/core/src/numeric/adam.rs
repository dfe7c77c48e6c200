use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment buffers for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        lr: f64,
        cfg: &AdamConfig,
    ) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::invalid(format!(
                "adam shape mismatch: params {}, grads {}, state {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        if !(lr > 0.0) {
            return Err(Error::invalid(format!("learning rate must be > 0, got {lr}")));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![0.3, -1.0];
        let mut st = AdamState::new(2);
        st.step(&mut p, &[0.0, 0.0], 1e-3, &AdamConfig::default()).unwrap();
        assert_eq!(p, vec![0.3, -1.0]);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let mut p = vec![0.0];
        let mut st = AdamState::new(1);
        st.step(&mut p, &[1.0], 1e-3, &AdamConfig::default()).unwrap();
        // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
        assert!((p[0] + 1e-3).abs() < 1e-10);
    }

    #[test]
    fn first_step_bounded_by_lr_over_one_minus_beta1() {
        let cfg = AdamConfig::default();
        let grads = [5.0, -1e-4, 0.3, -70.0];
        let mut p = vec![0.0; 4];
        let mut st = AdamState::new(4);
        st.step(&mut p, &grads, 1e-2, &cfg).unwrap();
        for x in p {
            assert!(x.abs() <= 1e-2 / (1.0 - cfg.beta1));
        }
    }

    #[test]
    fn deterministic_and_shape_checked() {
        let run = || {
            let mut p = vec![1.0, 2.0, 3.0];
            let mut st = AdamState::new(3);
            for _ in 0..5 {
                st.step(&mut p, &[0.1, -0.2, 0.3], 1e-3, &AdamConfig::default()).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
        let mut st = AdamState::new(2);
        assert!(st.step(&mut [0.0; 2], &[0.0; 3], 1e-3, &AdamConfig::default()).is_err());
        assert!(st.step(&mut [0.0; 2], &[0.0; 2], 0.0, &AdamConfig::default()).is_err());
    }
}
