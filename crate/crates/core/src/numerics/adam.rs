use crate::error::{Error, Result};

/// Adam moment estimates and hyperparameters for one flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lr: f64,
}

impl AdamState {
    pub const DEFAULT_BETA1: f64 = 0.9;
    pub const DEFAULT_BETA2: f64 = 0.999;
    pub const DEFAULT_EPS: f64 = 1e-8;

    pub fn new(n_params: usize, lr: f64) -> Self {
        AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            beta1: Self::DEFAULT_BETA1,
            beta2: Self::DEFAULT_BETA2,
            eps: Self::DEFAULT_EPS,
            lr,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || state.m.len() != state.v.len()
    {
        return Err(Error::shape(
            "adam_step",
            format!("{} params/grads/moments", params.len()),
            format!(
                "grads={} m={} v={}",
                grads.len(),
                state.m.len(),
                state.v.len()
            ),
        ));
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = state.beta1 * *m + (1.0 - state.beta1) * g;
        *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("adam_step"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut w = [0.0];
        let mut st = AdamState::new(1, 0.015);
        adam_step(&mut w, &[1.0], &mut st).unwrap();
        assert!((w[0] + 0.015).abs() < 1e-6);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut w = [0.3, -1.2];
        let mut st = AdamState::new(2, 0.015);
        for _ in 0..10 {
            adam_step(&mut w, &[0.0, 0.0], &mut st).unwrap();
        }
        assert_eq!(w, [0.3, -1.2]);
        assert_eq!(st.t, 10);
    }

    #[test]
    fn deterministic_bitwise() {
        let run = || {
            let mut w = vec![0.1, -0.2, 0.3];
            let mut st = AdamState::new(3, 0.015);
            for i in 0..5 {
                let g: Vec<f64> = w.iter().map(|x| x * 1.7 + i as f64 * 0.01).collect();
                adam_step(&mut w, &g, &mut st).unwrap();
            }
            (w, st)
        };
        let (w1, s1) = run();
        let (w2, s2) = run();
        assert_eq!(
            w1.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            w2.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(s1, s2);
        assert!(s1.v.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let mut w = [0.0; 2];
        let mut st = AdamState::new(2, 0.01);
        assert!(matches!(
            adam_step(&mut w, &[1.0], &mut st),
            Err(Error::Shape { .. })
        ));
        assert_eq!(st.t, 0);
    }
}
