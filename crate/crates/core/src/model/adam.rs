use super::{GradientSet, Scalar, ScoreModel};
use crate::error::{Error, Result};

/// Adaptive-moment optimizer state: first and second moment estimates and
/// the step counter used for bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F: Scalar = f32> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<F>,
    pub v: Vec<F>,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(num_params: usize) -> Self {
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![F::zero(); num_params],
            v: vec![F::zero(); num_params],
        }
    }

    pub fn for_model(model: &ScoreModel<F>) -> Self {
        Self::new(model.num_params())
    }

    /// One bias-corrected update of `model` in place.
    pub fn step(&mut self, model: &mut ScoreModel<F>, grads: &GradientSet<F>, lr: f64) -> Result<()> {
        let n = model.num_params();
        if grads.values.len() != n || self.m.len() != n || self.v.len() != n {
            return Err(Error::Domain(format!(
                "optimizer/gradient shapes ({}, {}) do not match {n} parameters",
                self.m.len(),
                grads.values.len()
            )));
        }
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let (fb1, fb2) = (F::of(b1), F::of(b2));
        let (f1b1, f1b2) = (F::of(1.0 - b1), F::of(1.0 - b2));
        let step_size = F::of(lr / c1);
        let inv_sqrt_c2 = F::of(1.0 / c2.sqrt());
        let eps = F::of(self.eps);
        for (((p, &g), m), v) in model
            .params_mut()
            .iter_mut()
            .zip(&grads.values)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = fb1 * *m + f1b1 * g;
            *v = fb2 * *v + f1b2 * g * g;
            *p -= step_size * *m / ((*v).sqrt() * inv_sqrt_c2 + eps);
        }
        Ok(())
    }
}

/// Functional form: consumes and returns the model and optimizer state.
pub fn optimizer_step<F: Scalar>(
    mut model: ScoreModel<F>,
    grads: &GradientSet<F>,
    mut state: AdamState<F>,
    lr: f64,
) -> Result<(ScoreModel<F>, AdamState<F>)> {
    state.step(&mut model, grads, lr)?;
    Ok((model, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn model() -> ScoreModel<f32> {
        ScoreModel::init(ModelConfig::new(6, 2).hidden(4).blocks(1).time_embed(2), 5).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let m = model();
        let g = GradientSet::zeros(m.num_params());
        let (m2, st) = optimizer_step(m.clone(), &g, AdamState::for_model(&m), 1e-2).unwrap();
        assert_eq!(m.params(), m2.params());
        assert_eq!(st.step, 1);
    }

    #[test]
    fn repeated_steps_are_deterministic() {
        let m = model();
        let g = GradientSet { values: (0..m.num_params()).map(|i| (i as f32 * 0.37).sin()).collect() };
        let run = || {
            let mut st = AdamState::for_model(&m);
            let mut mm = m.clone();
            st.step(&mut mm, &g, 1e-3).unwrap();
            st.step(&mut mm, &g, 1e-3).unwrap();
            mm
        };
        assert_eq!(run().params(), run().params());
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // with bias correction the first update is lr * sign(g)
        let m = model();
        let g = GradientSet { values: vec![0.5; m.num_params()] };
        let mut st = AdamState::for_model(&m);
        let mut mm = m.clone();
        st.step(&mut mm, &g, 1e-2).unwrap();
        for (a, b) in m.params().iter().zip(mm.params()) {
            assert!(((a - b) - 1e-2).abs() < 1e-6);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut m = model();
        let g = GradientSet::zeros(3);
        assert!(AdamState::for_model(&m).step(&mut m, &g, 1e-3).is_err());
    }
}
