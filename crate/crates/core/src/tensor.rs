//! Dense f64 tensors with paired gradient buffers, the named parameter
//! store, and plain SGD with global-norm gradient clipping.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::rng::Rng;

/// A dense array of f64 values with a same-shaped gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    grads: Vec<f64>,
    requires_grad: bool,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            values: vec![0.0; len],
            grads: vec![0.0; len],
            requires_grad: true,
        }
    }

    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Self {
        let len: usize = shape.iter().product();
        assert_eq!(values.len(), len, "value buffer does not match shape");
        Tensor {
            shape: shape.to_vec(),
            grads: vec![0.0; len],
            values,
            requires_grad: true,
        }
    }

    /// Uniform init in ±sqrt(6 / (fan_in + fan_out)) for a (rows × cols)
    /// weight matrix, reading fan-in/fan-out from the shape.
    pub fn xavier(rows: usize, cols: usize, rng: &mut Rng) -> Self {
        let bound = math::sqrt(6.0 / (rows + cols) as f64);
        let values = (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect();
        Tensor::from_values(&[rows, cols], values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn grads(&self) -> &[f64] {
        &self.grads
    }

    pub fn grads_mut(&mut self) -> &mut [f64] {
        &mut self.grads
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn set_requires_grad(&mut self, on: bool) {
        self.requires_grad = on;
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Row `r` of a rank-2 tensor.
    pub fn row(&self, r: usize) -> &[f64] {
        assert_eq!(self.shape.len(), 2, "row() needs a rank-2 tensor");
        let cols = self.shape[1];
        &self.values[r * cols..(r + 1) * cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        assert_eq!(self.shape.len(), 2, "row_mut() needs a rank-2 tensor");
        let cols = self.shape[1];
        &mut self.values[r * cols..(r + 1) * cols]
    }
}

/// Handle to a tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Error raised when an update encounters a non-finite gradient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonFiniteGrad {
    pub param: String,
}

impl fmt::Display for NonFiniteGrad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "non-finite gradient in parameter `{}`", self.param)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NonFiniteGrad {}

/// All trainable tensors of a model, addressable by name and by [`ParamId`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> ParamId {
        assert!(
            !self.names.iter().any(|n| n == name),
            "duplicate parameter name `{name}`"
        );
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names
            .iter()
            .zip(&self.tensors)
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn zero_grads(&mut self) {
        for t in &mut self.tensors {
            t.zero_grads();
        }
    }

    /// Global L2 norm over the gradients of trainable tensors.
    pub fn grad_norm(&self) -> f64 {
        let mut sq = 0.0;
        for t in &self.tensors {
            if t.requires_grad {
                for g in &t.grads {
                    sq += g * g;
                }
            }
        }
        math::sqrt(sq)
    }

    /// One SGD step over every trainable tensor.
    ///
    /// If the global gradient norm exceeds `clip_norm`, all gradients are
    /// scaled by `clip_norm / norm` first. Gradients are zeroed afterwards.
    /// Pass `f64::INFINITY` to disable clipping.
    pub fn sgd_step(&mut self, lr: f64, clip_norm: f64) -> Result<(), NonFiniteGrad> {
        for (name, t) in self.names.iter().zip(&self.tensors) {
            if t.requires_grad && !math::all_finite(&t.grads) {
                return Err(NonFiniteGrad {
                    param: name.clone(),
                });
            }
        }
        let norm = self.grad_norm();
        let scale = if norm > clip_norm { clip_norm / norm } else { 1.0 };
        for t in &mut self.tensors {
            if t.requires_grad {
                for (v, g) in t.values.iter_mut().zip(&t.grads) {
                    *v -= lr * scale * g;
                }
            }
            t.zero_grads();
        }
        Ok(())
    }
}
