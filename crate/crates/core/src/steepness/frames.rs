use crate::diophantine::lattice::{self, IntVec};
use crate::diophantine::resonance::orthonormalize;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use std::collections::BTreeMap;

/// A subspace `Λ` of dimension `k` whose orthogonal complement is spanned by
/// integer vectors of ℓ¹-norm at most `level`, with adapted orthonormal bases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceFrame {
    pub n: usize,
    pub k: usize,
    /// Smallest `L` for which the subspace belongs to `G^L(n, k)`.
    pub level: u32,
    pub complement_generators: Vec<Vec<i64>>,
    /// Hermite normal form of the saturated complement lattice.
    pub key: Vec<Vec<i64>>,
    pub basis_e: Vec<Vec<f64>>,
    pub basis_f: Vec<Vec<f64>>,
}

impl SubspaceFrame {
    /// The frame `Λ = R^n`, with an empty complement.
    pub fn full(n: usize) -> Self {
        Self::from_generators(n, Vec::new(), 1)
    }

    pub fn from_generators(n: usize, gens: Vec<Vec<i64>>, level: u32) -> Self {
        let rows: Vec<IntVec> = gens.iter().map(|g| lattice::to_big(g)).collect();
        let key = if rows.is_empty() { Vec::new() } else { lattice::saturate(&rows, n) };
        let lambda = lattice::integer_kernel(&rows, n);
        Self {
            n,
            k: lambda.len(),
            level,
            key: key.iter().map(|r| to_i64(r)).collect(),
            basis_e: orthonormalize(&lambda),
            basis_f: orthonormalize(&rows),
            complement_generators: gens,
        }
    }

    /// Coordinates `(α, β)` to actions: `Σ α_i e_i + Σ β_j f_j`.
    pub fn to_actions(&self, alpha: &[f64], beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (a, e) in alpha.iter().zip(&self.basis_e) {
            out.iter_mut().zip(e).for_each(|(o, x)| *o += a * x);
        }
        for (b, f) in beta.iter().zip(&self.basis_f) {
            out.iter_mut().zip(f).for_each(|(o, x)| *o += b * x);
        }
        out
    }

    /// `E^T v`, the coordinates of the projection of `v` onto `Λ`.
    pub fn project_alpha(&self, v: &[f64]) -> Vec<f64> {
        self.basis_e.iter().map(|e| e.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `F^T v`.
    pub fn project_beta(&self, v: &[f64]) -> Vec<f64> {
        self.basis_f.iter().map(|f| f.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn label(&self) -> String {
        if self.complement_generators.is_empty() {
            return "R^n".to_string();
        }
        let gens: Vec<String> = self
            .complement_generators
            .iter()
            .map(|g| format!("({})", g.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        format!("perp[{}]", gens.join(" "))
    }
}

fn to_i64(v: &[BigInt]) -> Vec<i64> {
    v.iter().map(|x| x.to_i64().expect("small lattice entry")).collect()
}

/// Nonzero integer vectors with `|v|₁ ≤ l`, one per `±` pair, primitive only,
/// ordered by ℓ¹-norm.
pub fn primitive_vectors(n: usize, l: u32) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut v = vec![0i64; n];
    fn rec(i: usize, budget: i64, v: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if i == v.len() {
            let first = v.iter().find(|x| **x != 0);
            if matches!(first, Some(x) if *x > 0) && v.iter().fold(0i64, |g, x| num_integer::gcd(g, *x)) == 1 {
                out.push(v.clone());
            }
            return;
        }
        for x in -budget..=budget {
            v[i] = x;
            rec(i + 1, budget - x.abs(), v, out);
        }
        v[i] = 0;
    }
    rec(0, l as i64, &mut v, &mut out);
    out.sort_by_key(|v| (v.iter().map(|x| x.abs()).sum::<i64>(), std::cmp::Reverse(v.clone())));
    out
}

fn l1(v: &[i64]) -> u32 {
    v.iter().map(|x| x.unsigned_abs() as u32).sum()
}

/// All of `G^L(n, k)` for the given `L`, one frame per distinct subspace.
///
/// Each subspace carries the generating set of smallest maximal ℓ¹-norm found,
/// and its `level` is that norm.
pub fn enumerate_subspaces(n: usize, k: usize, l: u32) -> Vec<SubspaceFrame> {
    assert!(k >= 1 && k <= n && l >= 1, "need 1 <= k <= n and L >= 1");
    if k == n {
        return vec![SubspaceFrame::full(n)];
    }
    let c = n - k;
    let vecs = primitive_vectors(n, l);
    let mut best: BTreeMap<Vec<IntVec>, (u32, Vec<Vec<i64>>)> = BTreeMap::new();
    let mut idx: Vec<usize> = (0..c).collect();
    if vecs.len() < c {
        return Vec::new();
    }
    loop {
        let gens: Vec<Vec<i64>> = idx.iter().map(|&i| vecs[i].clone()).collect();
        let rows: Vec<IntVec> = gens.iter().map(|g| lattice::to_big(g)).collect();
        if lattice::rank(&rows, n) == c {
            let level = gens.iter().map(|g| l1(g)).max().unwrap_or(1);
            let key = lattice::saturate(&rows, n);
            let e = best.entry(key).or_insert((level, gens.clone()));
            if level < e.0 {
                *e = (level, gens);
            }
        }
        // Next combination in lexicographic order.
        let mut i = c;
        loop {
            if i == 0 {
                let mut frames: Vec<SubspaceFrame> =
                    best.into_values().map(|(lv, g)| SubspaceFrame::from_generators(n, g, lv)).collect();
                frames.sort_by(|a, b| a.level.cmp(&b.level).then_with(|| a.key.cmp(&b.key)));
                return frames;
            }
            i -= 1;
            if idx[i] < vecs.len() - c + i {
                idx[i] += 1;
                for j in i + 1..c {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Every frame of every dimension `1..=n` with level at most `l_max`.
pub fn all_frames(n: usize, l_max: u32) -> Vec<SubspaceFrame> {
    (1..=n).flat_map(|k| enumerate_subspaces(n, k, l_max)).collect()
}
