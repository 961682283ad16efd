use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// One named parameter tensor with its Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamArray<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<T>,
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> ParamArray<T> {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, value: Vec<T>) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(value.len(), n, "parameter length must match its shape");
        ParamArray {
            name: name.into(),
            shape,
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            value,
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Ordered collection of parameter arrays sharing one Adam step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    pub arrays: Vec<ParamArray<T>>,
    pub step: u64,
}

/// Gradients laid out like a [`ParamSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<T> {
    pub arrays: Vec<Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl<T: Scalar> ParamSet<T> {
    pub fn new(arrays: Vec<ParamArray<T>>) -> Self {
        ParamSet { arrays, step: 0 }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.arrays.iter().position(|a| a.name == name)
    }

    pub fn get(&self, name: &str) -> &ParamArray<T> {
        let i = self
            .index_of(name)
            .unwrap_or_else(|| panic!("no parameter array named `{name}`"));
        &self.arrays[i]
    }

    pub fn num_params(&self) -> usize {
        self.arrays.iter().map(|a| a.len()).sum()
    }

    pub fn zero_grads(&self) -> Grads<T> {
        Grads {
            arrays: self.arrays.iter().map(|a| vec![T::zero(); a.len()]).collect(),
        }
    }

    pub fn same_layout(&self, other: &ParamSet<T>) -> bool {
        self.arrays.len() == other.arrays.len()
            && self
                .arrays
                .iter()
                .zip(&other.arrays)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape)
    }

    /// Flat view of coordinate `i` across all arrays, in order.
    pub fn locate(&self, mut i: usize) -> (usize, usize) {
        for (k, a) in self.arrays.iter().enumerate() {
            if i < a.len() {
                return (k, i);
            }
            i -= a.len();
        }
        panic!("flat parameter index out of range");
    }

    /// Bias-corrected Adam update in place; increments the step counter.
    pub fn adam_step(&mut self, grads: &Grads<T>, cfg: &AdamConfig) {
        assert_eq!(grads.arrays.len(), self.arrays.len(), "gradient layout mismatch");
        self.step += 1;
        let t = self.step as i32;
        let b1 = T::from_f64_lossy(cfg.beta1);
        let b2 = T::from_f64_lossy(cfg.beta2);
        let one = T::one();
        let lr = T::from_f64_lossy(cfg.lr);
        let eps = T::from_f64_lossy(cfg.eps);
        let bc1 = one - b1.powi(t);
        let bc2 = one - b2.powi(t);
        for (arr, g) in self.arrays.iter_mut().zip(&grads.arrays) {
            assert_eq!(arr.len(), g.len(), "gradient shape mismatch for `{}`", arr.name);
            for i in 0..g.len() {
                let gi = g[i];
                arr.m[i] = b1 * arr.m[i] + (one - b1) * gi;
                arr.v[i] = b2 * arr.v[i] + (one - b2) * gi * gi;
                let m_hat = arr.m[i] / bc1;
                let v_hat = arr.v[i] / bc2;
                arr.value[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }

    /// `self <- tau * source + (1 - tau) * self`, elementwise.
    pub fn soft_update_from(&mut self, source: &ParamSet<T>, tau: T) {
        assert!(self.same_layout(source), "soft update between mismatched parameter sets");
        let keep = T::one() - tau;
        for (dst, src) in self.arrays.iter_mut().zip(&source.arrays) {
            for (d, &s) in dst.value.iter_mut().zip(&src.value) {
                *d = tau * s + keep * *d;
            }
        }
    }

    /// Copies values (not optimizer state) from `source`.
    pub fn copy_values_from(&mut self, source: &ParamSet<T>) {
        assert!(self.same_layout(source), "copy between mismatched parameter sets");
        for (dst, src) in self.arrays.iter_mut().zip(&source.arrays) {
            dst.value.copy_from_slice(&src.value);
        }
    }

    pub fn max_abs_diff(&self, other: &ParamSet<T>) -> T {
        let mut m = T::zero();
        for (a, b) in self.arrays.iter().zip(&other.arrays) {
            for (&x, &y) in a.value.iter().zip(&b.value) {
                m = m.max((x - y).abs());
            }
        }
        m
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        let conv = |v: &Vec<T>| v.iter().map(|x| U::from_f64_lossy(x.to_f64_lossy())).collect();
        ParamSet {
            arrays: self
                .arrays
                .iter()
                .map(|a| ParamArray {
                    name: a.name.clone(),
                    shape: a.shape.clone(),
                    value: conv(&a.value),
                    m: conv(&a.m),
                    v: conv(&a.v),
                })
                .collect(),
            step: self.step,
        }
    }
}

/// Soft target update: `target <- tau * source + (1 - tau) * target`.
pub fn soft_update<T: Scalar>(target: &mut ParamSet<T>, source: &ParamSet<T>, tau: T) {
    target.soft_update_from(source, tau);
}

impl<T: Scalar> Grads<T> {
    pub fn add_assign(&mut self, other: &Grads<T>) {
        for (a, b) in self.arrays.iter_mut().zip(&other.arrays) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.arrays {
            for x in a.iter_mut() {
                *x *= s;
            }
        }
    }

    pub fn flat(&self) -> Vec<T> {
        self.arrays.iter().flatten().copied().collect()
    }

    pub fn max_abs(&self) -> T {
        self.arrays
            .iter()
            .flatten()
            .fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(values: &[&[f64]]) -> ParamSet<f64> {
        ParamSet::new(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| ParamArray::new(format!("p{i}"), vec![v.len()], v.to_vec()))
                .collect(),
        )
    }

    #[test]
    fn first_adam_step_moves_by_lr() {
        let mut p = set(&[&[0.5, -2.0, 3.0]]);
        let g = Grads {
            arrays: vec![vec![1.0; 3]],
        };
        p.adam_step(&g, &AdamConfig::default());
        let expected_move = 1e-3 * (1.0 / (1.0 + 1e-8));
        for (x, x0) in p.arrays[0].value.iter().zip([0.5, -2.0, 3.0]) {
            assert!(((x0 - x) - expected_move).abs() < 1e-15);
        }
        assert!((expected_move - 9.99999990e-4).abs() < 1e-12);
        assert_eq!(p.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_values() {
        let mut p = set(&[&[0.5, -2.0]]);
        let before = p.clone();
        p.adam_step(&p.zero_grads(), &AdamConfig::default());
        assert_eq!(p.arrays[0].value, before.arrays[0].value);
        assert_eq!(p.step, 1);
    }

    #[test]
    fn opposite_gradients_move_symmetrically() {
        let mut p = set(&[&[0.0, 0.0]]);
        let g = Grads {
            arrays: vec![vec![1.0, -1.0]],
        };
        p.adam_step(&g, &AdamConfig::default());
        assert_eq!(p.arrays[0].value[0], -p.arrays[0].value[1]);
    }

    #[test]
    fn soft_update_cases() {
        let src = set(&[&[1.0, 1.0]]);
        let mut dst = set(&[&[0.0, 0.0]]);
        soft_update(&mut dst, &src, 0.005);
        assert_eq!(dst.arrays[0].value, vec![0.005, 0.005]);

        let mut dst = set(&[&[0.3, -4.0]]);
        soft_update(&mut dst, &src, 1.0);
        assert_eq!(dst.arrays[0].value, src.arrays[0].value);

        // tau*x + (1-tau)*x can round by one ulp; the blend formula is kept literal.
        let mut same = set(&[&[0.25, -4.0, 0.1, 7.3]]);
        let copy = same.clone();
        soft_update(&mut same, &copy, 0.005);
        for (a, b) in same.arrays[0].value.iter().zip(&copy.arrays[0].value) {
            assert!((a - b).abs() <= 2.0 * f64::EPSILON * b.abs());
        }
    }

    #[test]
    fn locate_walks_arrays() {
        let p = set(&[&[1.0, 2.0], &[3.0, 4.0, 5.0]]);
        assert_eq!(p.locate(0), (0, 0));
        assert_eq!(p.locate(2), (1, 0));
        assert_eq!(p.locate(4), (1, 2));
    }
}
