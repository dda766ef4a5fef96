use super::{Matrix, Scalar};

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A named trainable matrix together with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Matrix<T>,
    pub grad: Matrix<T>,
}

/// Ordered collection of named parameters.
///
/// Insertion order is stable and is the order in which checkpoints store
/// parameter blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    params: Vec<Parameter<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    /// Registers a parameter. Panics on a duplicate name, which is a
    /// programming error in model construction.
    pub fn add(&mut self, name: impl Into<String>, value: Matrix<T>) -> ParamId {
        let name = name.into();
        assert!(
            self.find(&name).is_none(),
            "duplicate parameter name {name:?}"
        );
        let (r, c) = value.shape();
        self.params.push(Parameter {
            name,
            value,
            grad: Matrix::zeros(r, c),
        });
        ParamId(self.params.len() - 1)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Matrix<T> {
        &self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<T>> {
        self.params.iter_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            let (r, c) = p.value.shape();
            p.grad = Matrix::zeros(r, c);
        }
    }

    /// Total number of scalar weights.
    pub fn num_weights(&self) -> usize {
        self.params.iter().map(|p| p.value.as_slice().len()).sum()
    }
}
