//! Dense vector, vector set, and database types.
//!
//! These are the raw search corpus: a database holds `n` vector sets, each
//! set holds `m >= 1` vectors, and every vector shares the database
//! dimensionality `d`. All types are immutable after construction, so they
//! can be shared freely across threads.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A dense embedding vector with finite 32-bit components.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    components: Vec<f32>,
}

impl Vector {
    /// Builds a vector, rejecting empty or non-finite input.
    pub fn new(components: Vec<f32>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty { what: "vector" });
        }
        if let Some(i) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(
                "components",
                format!("non-finite component at index {i}"),
            ));
        }
        Ok(Vector { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f32] {
        &self.components
    }

    /// L2 norm, accumulated in f64.
    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .map(|&c| {
                let c = c as f64;
                c * c
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Returns a unit-norm copy. Zero-norm vectors are returned unchanged;
    /// callers that require a direction must check [`Vector::norm`] first.
    pub fn l2_normalized(&self) -> Vector {
        let norm = self.norm();
        if norm == 0.0 {
            return self.clone();
        }
        Vector {
            components: self
                .components
                .iter()
                .map(|&c| (c as f64 / norm) as f32)
                .collect(),
        }
    }
}

/// A nonempty set of vectors sharing one dimensionality, with a u64 id.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    id: u64,
    vectors: Vec<Vector>,
}

impl VectorSet {
    pub fn new(id: u64, vectors: Vec<Vector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Empty { what: "vector set" });
        }
        let dim = vectors[0].dim();
        for v in &vectors[1..] {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
        }
        Ok(VectorSet { id, vectors })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    /// Number of member vectors (`m` in the cardinality sense).
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        false // m >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }
}

/// A nonempty collection of vector sets with unique ids and uniform
/// dimensionality. Lookup by id is O(1).
#[derive(Debug, Clone)]
pub struct VectorSetDatabase {
    dim: usize,
    sets: Vec<VectorSet>,
    id_index: HashMap<u64, usize>,
}

impl VectorSetDatabase {
    pub fn new(sets: Vec<VectorSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::Empty { what: "database" });
        }
        let dim = sets[0].dim();
        let mut id_index = HashMap::with_capacity(sets.len());
        for (pos, set) in sets.iter().enumerate() {
            if set.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: set.dim(),
                });
            }
            if id_index.insert(set.id(), pos).is_some() {
                return Err(Error::invalid(
                    "sets",
                    format!("duplicate set id {}", set.id()),
                ));
            }
        }
        Ok(VectorSetDatabase {
            dim,
            sets,
            id_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of sets (`n`).
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn sets(&self) -> &[VectorSet] {
        &self.sets
    }

    pub fn get(&self, position: usize) -> Option<&VectorSet> {
        self.sets.get(position)
    }

    /// Position of the set with the given id, if present.
    pub fn position_of(&self, id: u64) -> Option<usize> {
        self.id_index.get(&id).copied()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.sets.iter().map(|s| s.id()).collect()
    }

    /// Total number of vectors across all sets.
    pub fn total_vectors(&self) -> usize {
        self.sets.iter().map(|s| s.len()).sum()
    }
}
