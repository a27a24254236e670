use super::lattice::{self, IntVec};
use super::{DiophantineError, PeriodicVector};
use num_traits::{ToPrimitive, Zero};

/// The integer module `{k : k·ω_i = 0 for all i}` and its real span.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceModule {
    n: usize,
    omegas: Vec<PeriodicVector>,
    generators: Vec<IntVec>,
    span_basis: Vec<Vec<f64>>,
}

impl ResonanceModule {
    /// The module of the empty frequency list: all of `Z^n`.
    pub fn full(n: usize) -> Self {
        resonance_module(n, &[]).expect("empty list is independent")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn omegas(&self) -> &[PeriodicVector] {
        &self.omegas
    }

    /// A Z-basis in Hermite normal form.
    pub fn generators(&self) -> &[IntVec] {
        &self.generators
    }

    pub fn generators_i64(&self) -> Vec<Vec<i64>> {
        self.generators
            .iter()
            .map(|g| g.iter().map(|x| x.to_i64().expect("generator fits in i64")).collect())
            .collect()
    }

    /// Orthonormal basis of the real span.
    pub fn span_basis(&self) -> &[Vec<f64>] {
        &self.span_basis
    }

    /// Exact membership test `k·ω_i = 0` for every defining frequency.
    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.n && self.omegas.iter().all(|w| w.is_resonant(k))
    }

    pub fn contains_big(&self, k: &[num_bigint::BigInt]) -> bool {
        self.omegas.iter().all(|w| lattice::dot(k, w.numerator()).is_zero())
    }

    /// Membership in the integer span of the generators.
    pub fn in_lattice(&self, k: &[i64]) -> bool {
        lattice::hnf_contains(&self.generators, &lattice::to_big(k))
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for e in &self.span_basis {
            let c: f64 = e.iter().zip(x).map(|(a, b)| a * b).sum();
            for (o, ei) in out.iter_mut().zip(e) {
                *o += c * ei;
            }
        }
        out
    }

    pub fn project_perp(&self, x: &[f64]) -> Vec<f64> {
        let p = self.project(x);
        x.iter().zip(p).map(|(a, b)| a - b).collect()
    }
}

/// Builds the resonance module of linearly independent periodic vectors in `R^n`.
pub fn resonance_module(n: usize, omegas: &[PeriodicVector]) -> Result<ResonanceModule, DiophantineError> {
    let mut rows: Vec<IntVec> = Vec::with_capacity(omegas.len());
    for (index, w) in omegas.iter().enumerate() {
        if w.dim() != n {
            return Err(DiophantineError::DimensionMismatch { expected: n, got: w.dim() });
        }
        rows.push(w.numerator().to_vec());
        if lattice::rank(&rows, n) != rows.len() {
            return Err(DiophantineError::Dependent { index });
        }
    }
    let generators = if rows.is_empty() {
        (0..n)
            .map(|i| {
                let mut e = vec![num_bigint::BigInt::zero(); n];
                e[i] = 1.into();
                e
            })
            .collect()
    } else {
        lattice::integer_kernel(&rows, n)
    };
    let span_basis = orthonormalize(&generators);
    Ok(ResonanceModule { n, omegas: omegas.to_vec(), generators, span_basis })
}

/// Orthogonal projection of `x` onto the span of the module.
pub fn project_onto(module: &ResonanceModule, x: &[f64]) -> Result<Vec<f64>, DiophantineError> {
    if x.len() != module.dim() {
        return Err(DiophantineError::DimensionMismatch { expected: module.dim(), got: x.len() });
    }
    Ok(module.project(x))
}

/// Gram-Schmidt with one reorthogonalization pass.
pub(crate) fn orthonormalize(vectors: &[IntVec]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut u: Vec<f64> = v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        for _ in 0..2 {
            for e in &basis {
                let c: f64 = e.iter().zip(&u).map(|(a, b)| a * b).sum();
                u.iter_mut().zip(e).for_each(|(ui, ei)| *ui -= c * ei);
            }
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            basis.push(u.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}
