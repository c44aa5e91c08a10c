use super::mlp::Real;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            step: 0,
        }
    }

    /// One bias-corrected update of `params` against `grad`.
    pub fn update(&mut self, params: &mut [T], grad: &[T], lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::from_f64(BETA1), T::from_f64(BETA2));
        let (c1, c2) = (T::one() - b1, T::one() - b2);
        let step = T::from_f64(lr / (1.0 - BETA1.powi(t)));
        let v_corr = T::from_f64(1.0 / (1.0 - BETA2.powi(t)));
        let eps = T::from_f64(EPSILON);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + c1 * g;
            *v = b2 * *v + c2 * g * g;
            *p = *p - step * *m / ((*v * v_corr).sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        // bias correction makes the first step ±lr per coordinate
        let mut s = AdamState::<f64>::new(3);
        let mut p = vec![1.0, -2.0, 0.5];
        s.update(&mut p, &[0.3, -4.0, 1e-3], 0.01);
        assert!((p[0] - 0.99).abs() < 1e-9);
        assert!((p[1] + 1.99).abs() < 1e-9);
        assert!((p[2] - 0.49).abs() < 1e-6);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut s = AdamState::<f64>::new(2);
        let mut p = vec![3.0, -1.5];
        for _ in 0..3000 {
            let g = [2.0 * p[0], 8.0 * p[1]];
            s.update(&mut p, &g, 0.01);
        }
        assert!(p[0].abs() < 1e-2 && p[1].abs() < 1e-2);
    }
}
