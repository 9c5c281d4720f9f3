use crate::{Error, Result};

/// A named, shaped block of parameters (a kernel, a bias vector, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl ParamArray {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Ordered collection of parameter arrays. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParams {
    arrays: Vec<ParamArray>,
}

impl ModelParams {
    pub fn new(arrays: Vec<ParamArray>) -> Result<Self> {
        for a in &arrays {
            let n: usize = a.shape.iter().product();
            if n != a.data.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{}: shape {:?} holds {n} values, data has {}",
                    a.name,
                    a.shape,
                    a.data.len()
                )));
            }
        }
        Ok(Self { arrays })
    }

    pub fn push(&mut self, array: ParamArray) -> usize {
        self.arrays.push(array);
        self.arrays.len() - 1
    }

    pub fn arrays(&self) -> &[ParamArray] {
        &self.arrays
    }

    pub fn array(&self, i: usize) -> &[f64] {
        &self.arrays[i].data
    }

    pub fn array_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.arrays[i].data
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.arrays.iter().map(ParamArray::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// ‖C‖², the sum of squares of every entry.
    pub fn squared_norm(&self) -> f64 {
        self.arrays
            .iter()
            .flat_map(|a| a.data.iter())
            .map(|v| v * v)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.arrays
            .iter()
            .all(|a| a.data.iter().all(|v| v.is_finite()))
    }

    /// Same layout, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            arrays: self
                .arrays
                .iter()
                .map(|a| ParamArray::zeros(a.name.clone(), &a.shape))
                .collect(),
        }
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.arrays.len() == other.arrays.len()
            && self
                .arrays
                .iter()
                .zip(&other.arrays)
                .all(|(a, b)| a.shape == b.shape)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        assert!(self.same_layout(other), "parameter layouts differ");
        for (a, b) in self.arrays.iter_mut().zip(&other.arrays) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.arrays {
            for x in &mut a.data {
                *x *= alpha;
            }
        }
    }

    /// Reads the `i`-th scalar in flattened order.
    pub fn get_flat(&self, mut i: usize) -> f64 {
        for a in &self.arrays {
            if i < a.data.len() {
                return a.data[i];
            }
            i -= a.data.len();
        }
        panic!("flat index out of range");
    }

    pub fn set_flat(&mut self, mut i: usize, v: f64) {
        for a in &mut self.arrays {
            if i < a.data.len() {
                a.data[i] = v;
                return;
            }
            i -= a.data.len();
        }
        panic!("flat index out of range");
    }

    pub fn flat(&self) -> Vec<f64> {
        self.arrays
            .iter()
            .flat_map(|a| a.data.iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelParams {
        ModelParams::new(vec![
            ParamArray {
                name: "w".into(),
                shape: vec![2, 2],
                data: vec![1.0, -2.0, 3.0, 0.5],
            },
            ParamArray {
                name: "b".into(),
                shape: vec![1],
                data: vec![-1.5],
            },
        ])
        .unwrap()
    }

    #[test]
    fn squared_norm_sums_every_entry() {
        let p = sample();
        assert_eq!(p.squared_norm(), 1.0 + 4.0 + 9.0 + 0.25 + 2.25);
        assert_eq!(p.len(), 5);
    }

    #[test]
    fn flat_access() {
        let mut p = sample();
        assert_eq!(p.get_flat(4), -1.5);
        p.set_flat(2, 7.0);
        assert_eq!(p.flat(), vec![1.0, -2.0, 7.0, 0.5, -1.5]);
    }

    #[test]
    fn axpy_and_shape_check() {
        let mut p = sample();
        let q = sample();
        p.axpy(-1.0, &q);
        assert_eq!(p.squared_norm(), 0.0);
        assert!(ModelParams::new(vec![ParamArray {
            name: "x".into(),
            shape: vec![3],
            data: vec![0.0; 2],
        }])
        .is_err());
    }
}
