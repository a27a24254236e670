//! Integer lattice routines: unimodular column reduction, integer kernels and
//! row-style Hermite normal forms over arbitrary-precision integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type IntVec = Vec<BigInt>;

/// Extended gcd with a non-negative gcd: `s*a + t*b = g`.
fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

pub fn to_big(v: &[i64]) -> IntVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gcd of all entries (zero for the zero vector).
pub fn content(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Divides out the content and fixes the sign so the first nonzero entry is positive.
pub fn primitive(v: &[BigInt]) -> IntVec {
    let g = content(v);
    if g.is_zero() {
        return v.to_vec();
    }
    let mut out: IntVec = v.iter().map(|x| x / &g).collect();
    if let Some(first) = out.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            out.iter_mut().for_each(|x| *x = -x.clone());
        }
    }
    out
}

/// Column reduction of an `m x n` integer matrix.
///
/// Returns `(rank, u)` where `u` is an `n x n` unimodular matrix (stored as
/// columns) such that `rows * u` has nonzero entries only in its first `rank`
/// columns. The trailing `n - rank` columns of `u` are then a basis of the
/// integer kernel, and the kernel lattice is saturated because `u` is
/// unimodular.
pub fn column_reduce(rows: &[IntVec], n: usize) -> (usize, Vec<IntVec>) {
    let mut a: Vec<IntVec> = rows.to_vec();
    // u[j] is column j.
    let mut u: Vec<IntVec> = (0..n)
        .map(|j| {
            let mut c = vec![BigInt::zero(); n];
            c[j] = BigInt::one();
            c
        })
        .collect();
    let mut pivot = 0usize;
    for i in 0..a.len() {
        if pivot == n {
            break;
        }
        loop {
            let nz: Vec<usize> = (pivot..n).filter(|&j| !a[i][j].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&j) = nz.first() {
                    swap_cols(&mut a, &mut u, pivot, j);
                    pivot += 1;
                }
                break;
            }
            let (j0, j1) = (nz[0], nz[1]);
            let x = a[i][j0].clone();
            let y = a[i][j1].clone();
            let (g, s, t) = ext_gcd(&x, &y);
            let xg = &x / &g;
            let yg = &y / &g;
            // [c0, c1] <- [s*c0 + t*c1, -yg*c0 + xg*c1], determinant 1.
            combine_cols(&mut a, &mut u, j0, j1, &s, &t, &(-yg), &xg);
        }
    }
    (pivot, u)
}

fn swap_cols(a: &mut [IntVec], u: &mut [IntVec], j0: usize, j1: usize) {
    if j0 == j1 {
        return;
    }
    for row in a.iter_mut() {
        row.swap(j0, j1);
    }
    u.swap(j0, j1);
}

#[allow(clippy::too_many_arguments)]
fn combine_cols(
    a: &mut [IntVec],
    u: &mut [IntVec],
    j0: usize,
    j1: usize,
    c00: &BigInt,
    c01: &BigInt,
    c10: &BigInt,
    c11: &BigInt,
) {
    for row in a.iter_mut() {
        let (x, y) = (row[j0].clone(), row[j1].clone());
        row[j0] = c00 * &x + c01 * &y;
        row[j1] = c10 * &x + c11 * &y;
    }
    let (x, y) = (u[j0].clone(), u[j1].clone());
    u[j0] = x.iter().zip(&y).map(|(p, q)| c00 * p + c01 * q).collect();
    u[j1] = x.iter().zip(&y).map(|(p, q)| c10 * p + c11 * q).collect();
}

pub fn rank(rows: &[IntVec], n: usize) -> usize {
    column_reduce(rows, n).0
}

/// Saturated integer kernel `{k in Z^n : rows * k = 0}` as a basis in Hermite
/// normal form.
pub fn integer_kernel(rows: &[IntVec], n: usize) -> Vec<IntVec> {
    let (r, u) = column_reduce(rows, n);
    let basis: Vec<IntVec> = u[r..].to_vec();
    hermite_normal_form(&basis)
}

/// Saturation `span_R(rows) ∩ Z^n`, canonicalized by Hermite normal form.
pub fn saturate(rows: &[IntVec], n: usize) -> Vec<IntVec> {
    let kernel = integer_kernel(rows, n);
    integer_kernel(&kernel, n)
}

/// Row-style Hermite normal form of the lattice generated by `rows`.
///
/// Pivots are positive, entries above each pivot are reduced into
/// `[0, pivot)`, and zero rows are dropped. Two generating sets span the same
/// lattice iff their normal forms are equal.
pub fn hermite_normal_form(rows: &[IntVec]) -> Vec<IntVec> {
    let mut m: Vec<IntVec> = rows.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
    if m.is_empty() {
        return m;
    }
    let n = m[0].len();
    let mut top = 0usize;
    for col in 0..n {
        if top == m.len() {
            break;
        }
        loop {
            let nz: Vec<usize> = (top..m.len()).filter(|&i| !m[i][col].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&i) = nz.first() {
                    m.swap(top, i);
                    if m[top][col].is_negative() {
                        m[top].iter_mut().for_each(|x| *x = -x.clone());
                    }
                    let piv = m[top][col].clone();
                    for i in 0..top {
                        let q = m[i][col].div_floor(&piv);
                        if !q.is_zero() {
                            let pivot_row = m[top].clone();
                            for (x, p) in m[i].iter_mut().zip(&pivot_row) {
                                *x -= &q * p;
                            }
                        }
                    }
                    top += 1;
                }
                break;
            }
            let (i0, i1) = (nz[0], nz[1]);
            let x = m[i0][col].clone();
            let y = m[i1][col].clone();
            let (g, s, t) = ext_gcd(&x, &y);
            let xg = &x / &g;
            let yg = &y / &g;
            let r0 = m[i0].clone();
            let r1 = m[i1].clone();
            m[i0] = r0.iter().zip(&r1).map(|(p, q)| &s * p + &t * q).collect();
            m[i1] = r0.iter().zip(&r1).map(|(p, q)| -&yg * p + &xg * q).collect();
        }
    }
    m.truncate(top);
    m
}

/// Membership of `v` in the lattice spanned by a Hermite-normal-form basis.
pub fn hnf_contains(hnf: &[IntVec], v: &[BigInt]) -> bool {
    let mut rem = v.to_vec();
    for row in hnf {
        let Some(col) = row.iter().position(|x| !x.is_zero()) else {
            continue;
        };
        let (q, r) = rem[col].div_rem(&row[col]);
        if !r.is_zero() {
            return false;
        }
        for (x, p) in rem.iter_mut().zip(row) {
            *x -= &q * p;
        }
    }
    rem.iter().all(Zero::is_zero)
}
