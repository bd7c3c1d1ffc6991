use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homp::ModelState;
use crate::numerics::{DenseMatrix, Gradients};

fn d_lr() -> f64 {
    0.01
}
fn d_step() -> usize {
    50
}
fn d_gamma() -> f64 {
    0.5
}
fn d_beta1() -> f64 {
    0.9
}
fn d_beta2() -> f64 {
    0.999
}
fn d_eps() -> f64 {
    1e-8
}

/// Adaptive-moment optimizer with a step learning-rate schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "d_step")]
    pub step_size: usize,
    #[serde(default = "d_gamma")]
    pub gamma: f64,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_eps")]
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { lr: d_lr(), step_size: d_step(), gamma: d_gamma(), beta1: d_beta1(), beta2: d_beta2(), eps: d_eps() }
    }
}

impl OptimizerConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            out.push("optimizer.lr must be positive".into());
        }
        if self.step_size == 0 {
            out.push("optimizer.step_size must be >= 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            out.push("optimizer.gamma must lie in (0, 1]".into());
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                out.push(format!("optimizer.{name} must lie in [0, 1)"));
            }
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            out.push("optimizer.eps must be positive".into());
        }
        out
    }

    /// `lr · gamma^floor(epoch / step_size)` for a zero-based epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr * self.gamma.powi((epoch / self.step_size) as i32)
    }
}

/// Moment estimates for every parameter.
#[derive(Clone, Debug)]
pub struct Adam {
    cfg: OptimizerConfig,
    m: HashMap<String, DenseMatrix>,
    v: HashMap<String, DenseMatrix>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: OptimizerConfig) -> Self {
        Self { cfg, m: HashMap::new(), v: HashMap::new(), t: 0 }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One bias-corrected update at the learning rate scheduled for `epoch`.
    /// Parameters without a gradient entry are left alone.
    pub fn step(&mut self, state: &mut ModelState, grads: &Gradients, epoch: usize) -> Result<()> {
        for (id, g) in grads.iter() {
            if let Some(i) = g.data().iter().position(|v| !v.is_finite()) {
                return Err(Error::Aborted(format!("non-finite gradient in {id}[{i}]")));
            }
            let p = state
                .get(id)
                .ok_or_else(|| Error::shape("optimizer", format!("gradient for unknown parameter {id}")))?;
            if p.value.shape() != g.shape() {
                return Err(Error::shape("optimizer", format!("gradient shape mismatch for {id}")));
            }
        }
        self.t += 1;
        let lr = self.cfg.lr_at(epoch);
        let (b1, b2, eps) = (self.cfg.beta1, self.cfg.beta2, self.cfg.eps);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for (id, g) in grads.iter() {
            let p = state.get_mut(id).expect("checked above");
            if !p.requires_grad {
                continue;
            }
            let m = self.m.entry(id.clone()).or_insert_with(|| DenseMatrix::zeros(g.rows(), g.cols()));
            let v = self.v.entry(id.clone()).or_insert_with(|| DenseMatrix::zeros(g.rows(), g.cols()));
            let w = p.value.data_mut();
            for (((wi, mi), vi), gi) in w.iter_mut().zip(m.data_mut()).zip(v.data_mut()).zip(g.data()) {
                *mi = b1 * *mi + (1.0 - b1) * gi;
                *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *wi -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Parameter;

    fn scalar_state(w: f64) -> ModelState {
        ModelState::from_params(vec![Parameter::new("w", DenseMatrix::filled(1, 1, w))]).unwrap()
    }

    fn grad(g: f64) -> Gradients {
        Gradients([("w".to_string(), DenseMatrix::filled(1, 1, g))].into_iter().collect())
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut s = scalar_state(1.0);
        let mut opt = Adam::new(OptimizerConfig { lr: 0.1, ..Default::default() });
        opt.step(&mut s, &grad(1.0), 0).unwrap();
        let w = s.get("w").unwrap().value.get(0, 0);
        assert!(((1.0 - w) - 0.1).abs() <= 1e-7, "{w}");
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut s = scalar_state(0.25);
        let mut opt = Adam::new(OptimizerConfig::default());
        opt.step(&mut s, &grad(0.0), 0).unwrap();
        assert_eq!(s.get("w").unwrap().value.get(0, 0), 0.25);
    }

    #[test]
    fn step_schedule() {
        let c = OptimizerConfig { lr: 0.01, ..Default::default() };
        assert_eq!(c.lr_at(49), 0.01);
        assert_eq!(c.lr_at(50), 0.005);
        assert_eq!(c.lr_at(100), 0.0025);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut s = scalar_state(0.0);
        let err = Adam::new(OptimizerConfig::default()).step(&mut s, &grad(f64::NAN), 0).unwrap_err();
        assert!(err.to_string().contains('w'));
    }
}
