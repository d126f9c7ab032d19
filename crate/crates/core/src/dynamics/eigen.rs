use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use nalgebra::DVector;

use crate::error::Result;
use crate::spin::{CMatrix, CVector, Operator, C64};

/// Spectral decomposition `H = V diag(E) V^dag` of a Hermitian operator,
/// eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub energies: DVector<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    pub fn new(h: &Operator) -> Result<Self> {
        h.ensure_hermitian()?;
        let eig = h.hermitize().into_matrix().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies =
            DVector::from_iterator(order.len(), order.iter().map(|&k| eig.eigenvalues[k]));
        let vectors = CMatrix::from_columns(
            &order
                .iter()
                .map(|&k| eig.eigenvectors.column(k).into_owned())
                .collect::<Vec<_>>(),
        );
        Ok(Eigensystem { energies, vectors })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Phase factors `exp(-i 2 pi E_k t)`.
    pub fn phases(&self, t: f64) -> CVector {
        CVector::from_iterator(
            self.dim(),
            self.energies
                .iter()
                .map(|&e| C64::from_polar(1.0, -std::f64::consts::TAU * e * t)),
        )
    }

    /// `exp(-i 2 pi H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let ph = self.phases(t);
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= ph[k];
        }
        scaled * self.vectors.adjoint()
    }

    /// Rotates an operator into the eigenbasis, `V^dag A V`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * a * &self.vectors
    }
}

/// Thread-safe cache of eigendecompositions keyed by Hamiltonian content.
///
/// Lookups compare the stored Hamiltonian exactly, so hash collisions can
/// never return a wrong decomposition.
/// Operators sharing a hash, with their decompositions.
type Bucket = Vec<(Operator, Arc<Eigensystem>)>;

#[derive(Debug, Default)]
pub struct EigenCache {
    entries: Mutex<HashMap<u64, Bucket>>,
    capacity: usize,
}

impl EigenCache {
    pub fn new(capacity: usize) -> Self {
        EigenCache {
            entries: Mutex::new(HashMap::new()),
            capacity,
        }
    }

    fn key(h: &Operator) -> u64 {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        h.dim().hash(&mut hasher);
        for z in h.matrix().iter() {
            z.re.to_bits().hash(&mut hasher);
            z.im.to_bits().hash(&mut hasher);
        }
        hasher.finish()
    }

    pub fn len(&self) -> usize {
        self.entries
            .lock()
            .map(|m| m.values().map(Vec::len).sum())
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_compute(&self, h: &Operator) -> Result<Arc<Eigensystem>> {
        let key = Self::key(h);
        if let Ok(map) = self.entries.lock() {
            if let Some(hit) = map.get(&key).and_then(|b| b.iter().find(|(k, _)| k == h)) {
                return Ok(hit.1.clone());
            }
        }
        // Decompose outside the lock so parallel workers do not serialize.
        let eig = Arc::new(Eigensystem::new(h)?);
        if let Ok(mut map) = self.entries.lock() {
            if self.capacity > 0 && map.values().map(Vec::len).sum::<usize>() >= self.capacity {
                map.clear();
            }
            let bucket = map.entry(key).or_default();
            if !bucket.iter().any(|(k, _)| k == h) {
                bucket.push((h.clone(), eig.clone()));
            }
        }
        Ok(eig)
    }
}
