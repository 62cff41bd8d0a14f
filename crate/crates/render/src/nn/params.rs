use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sua_core::io::{self, RawTensor};
use sua_core::{Error, Result};

/// Handle to one tensor inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// Ordered collection of named tensors. Gradients and optimizer moments
/// reuse the type with identical names and shapes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<ArrayD<f64>>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: ArrayD<f64>) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn add_normal(&mut self, name: impl Into<String>, shape: &[usize], std: f64, rng: &mut impl Rng) -> ParamId {
        let normal = Normal::new(0.0, std).expect("positive std");
        let value = ArrayD::from_shape_simple_fn(IxDyn(shape), || normal.sample(rng));
        self.add(name, value)
    }

    pub fn add_filled(&mut self, name: impl Into<String>, shape: &[usize], v: f64) -> ParamId {
        self.add(name, ArrayD::from_elem(IxDyn(shape), v))
    }

    #[inline]
    pub fn get(&self, id: ParamId) -> &ArrayD<f64> {
        &self.values[id.0]
    }

    #[inline]
    pub fn get_mut(&mut self, id: ParamId) -> &mut ArrayD<f64> {
        &mut self.values[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ArrayD<f64>)> {
        self.names.iter().map(String::as_str).zip(self.values.iter())
    }

    /// Total number of scalars.
    pub fn count(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            names: self.names.clone(),
            values: self.values.iter().map(|v| ArrayD::zeros(v.raw_dim())).collect(),
        }
    }

    pub fn fill(&mut self, v: f64) {
        for a in &mut self.values {
            a.fill(v);
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &ParamSet, factor: f64) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a.scaled_add(factor, b);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.values {
            a.mapv_inplace(|v| v * factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|a| a.iter().all(|v| v.is_finite()))
    }

    /// Named single-precision records for the tensor archive.
    pub fn to_records(&self, prefix: &str) -> Vec<(String, RawTensor)> {
        self.iter()
            .map(|(n, v)| (format!("{prefix}{n}"), RawTensor::from_array_f32(&v.mapv(|x| x as f32))))
            .collect()
    }

    /// Overwrites values from archive records; every name must be present
    /// with the expected shape.
    pub fn load_records(&mut self, records: &[(String, RawTensor)], prefix: &str) -> Result<()> {
        for (name, value) in self.names.iter().zip(self.values.iter_mut()) {
            let key = format!("{prefix}{name}");
            let (_, t) = records
                .iter()
                .find(|(n, _)| *n == key)
                .ok_or_else(|| Error::Format(format!("weights archive lacks {key}")))?;
            let a = t.to_array_f32()?;
            if a.shape() != value.shape() {
                return Err(Error::Shape(format!(
                    "{key}: archive shape {:?}, expected {:?}",
                    a.shape(),
                    value.shape()
                )));
            }
            *value = a.mapv(f64::from);
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::save_archive(&self.to_records(""), path)
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: ParamSet,
    v: ParamSet,
    t: i32,
}

impl Adam {
    pub fn new(params: &ParamSet, beta1: f64, beta2: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps: 1e-8,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for i in 0..params.values.len() {
            let p = &mut params.values[i];
            let g = &grads.values[i];
            let m = &mut self.m.values[i];
            let v = &mut self.v.values[i];
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
    }
}
