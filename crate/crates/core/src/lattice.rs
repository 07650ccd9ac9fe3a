//! Even positive-definite lattices, the `k`-fold direct sum `L = K^{⊕k}`,
//! the cyclic block shift `ν`, eigenspace projections, short-vector
//! enumeration and dual-coset representatives.
//!
//! Vectors of `L` use the copy-major basis: coordinate `p * d + j` is the
//! `j`-th basis coefficient of the copy `α_{p+1}`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exact::{floor_sqrt, rat, rat_int, Cyc, Rat, RootField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("gram matrix is not square of size {0}")]
    Shape(usize),
    #[error("gram matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("lattice not even (diagonal entry {0})")]
    NotEven(usize),
    #[error("lattice not positive definite (leading minor {0})")]
    NotPositiveDefinite(usize),
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
}

/// Integer coordinate vector in the lattice basis.
pub type LatVec = Vec<i64>;

/// Vector of `𝔥 = C ⊗ L` with cyclotomic coordinates.
pub type AmbVec = Vec<Cyc>;

/// Rational coordinate vector, used for `Q ⊗ L` (dual vectors, `P₀L`).
pub type QVec = Vec<Rat>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    name: String,
    gram: Vec<Vec<i64>>,
}

impl Lattice {
    /// Builds a lattice from its Gram matrix and checks that it is even and
    /// positive definite.
    pub fn new(name: impl Into<String>, gram: Vec<Vec<i64>>) -> Result<Self, LatticeError> {
        let n = gram.len();
        if n == 0 || gram.iter().any(|r| r.len() != n) {
            return Err(LatticeError::Shape(n));
        }
        for i in 0..n {
            for j in 0..i {
                if gram[i][j] != gram[j][i] {
                    return Err(LatticeError::NotSymmetric(i, j));
                }
            }
        }
        for (i, row) in gram.iter().enumerate() {
            if row[i] % 2 != 0 {
                return Err(LatticeError::NotEven(i));
            }
        }
        for m in 1..=n {
            let minor: Vec<Vec<Rat>> = (0..m)
                .map(|i| (0..m).map(|j| rat_int(gram[i][j])).collect())
                .collect();
            if !det_rat(minor).is_positive() {
                return Err(LatticeError::NotPositiveDefinite(m));
            }
        }
        Ok(Lattice { name: name.into(), gram })
    }

    /// The root lattice `A₁`, Gram `[2]`.
    pub fn a1() -> Self {
        Self::new("A1", vec![vec![2]]).unwrap()
    }

    /// The root lattice `A₂`, Gram `[[2,1],[1,2]]`.
    pub fn a2() -> Self {
        Self::new("A2", vec![vec![2, 1], vec![1, 2]]).unwrap()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn det(&self) -> Rat {
        det_rat(self.gram_rat())
    }

    fn gram_rat(&self) -> Vec<Vec<Rat>> {
        self.gram
            .iter()
            .map(|r| r.iter().map(|&x| rat_int(x)).collect())
            .collect()
    }

    /// Exact inverse of the Gram matrix.
    pub fn gram_inverse(&self) -> Vec<Vec<Rat>> {
        invert_rat(self.gram_rat()).expect("positive definite gram is invertible")
    }

    pub fn inner_int(&self, a: &[i64], b: &[i64]) -> i64 {
        let mut s = 0;
        for (i, ai) in a.iter().enumerate() {
            if *ai == 0 {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                s += ai * self.gram[i][j] * bj;
            }
        }
        s
    }

    pub fn norm_int(&self, a: &[i64]) -> i64 {
        self.inner_int(a, a)
    }

    pub fn inner_rat(&self, a: &[Rat], b: &[Rat]) -> Rat {
        let mut s = Rat::zero();
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if self.gram[i][j] != 0 && !bj.is_zero() {
                    s += ai * bj * rat_int(self.gram[i][j]);
                }
            }
        }
        s
    }

    /// The bilinear form extended to cyclotomic coordinates.
    pub fn inner(&self, a: &[Cyc], b: &[Cyc]) -> Result<Cyc, LatticeError> {
        let n = self.rank();
        if a.len() != n {
            return Err(LatticeError::RankMismatch(a.len(), n));
        }
        if b.len() != n {
            return Err(LatticeError::RankMismatch(b.len(), n));
        }
        let order = a.first().map(|c| c.order()).unwrap_or(1);
        let mut s = Cyc::zero(order);
        for i in 0..n {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if self.gram[i][j] != 0 && !b[j].is_zero() {
                    s += &(&a[i] * &b[j]).scale(&rat_int(self.gram[i][j]));
                }
            }
        }
        Ok(s)
    }

    /// Orthogonal direct sum of `k` copies, in the copy-major basis.
    pub fn direct_sum_power(&self, k: usize) -> Lattice {
        let d = self.rank();
        let mut g = vec![vec![0; k * d]; k * d];
        for p in 0..k {
            for i in 0..d {
                for j in 0..d {
                    g[p * d + i][p * d + j] = self.gram[i][j];
                }
            }
        }
        Lattice { name: format!("{}^{}", self.name, k), gram: g }
    }

    /// All `α` with `⟨α,α⟩ ≤ 2·bound`, lexicographically sorted.
    pub fn enumerate_up_to_norm(&self, bound: &Rat) -> Vec<LatVec> {
        let shift = vec![Rat::zero(); self.rank()];
        self.enumerate_shifted(&shift, &(bound * rat_int(2)))
            .into_iter()
            .map(|(x, _)| x)
            .collect()
    }

    /// All vectors `y = x + shift` with `x` integral and `⟨y,y⟩ ≤ max_norm`.
    ///
    /// Exact Fincke–Pohst: the Gram matrix is decomposed as
    /// `Q(y) = Σ_i q_ii (y_i + Σ_{j>i} q_ij y_j)²` over `Q`, and each
    /// coordinate range is bounded with integer square roots and then
    /// filtered exactly. Returns `(x, ⟨y,y⟩)` pairs sorted by `x`.
    pub fn enumerate_shifted(&self, shift: &[Rat], max_norm: &Rat) -> Vec<(LatVec, Rat)> {
        let n = self.rank();
        if max_norm.is_negative() {
            return Vec::new();
        }
        let q = self.fincke_pohst_form();
        let mut out = Vec::new();
        let mut y = vec![Rat::zero(); n];
        let mut x = vec![0i64; n];
        self.fp_recurse(n, &q, shift, max_norm.clone(), &mut x, &mut y, &mut out);
        out.sort();
        out
    }

    fn fincke_pohst_form(&self) -> Vec<Vec<Rat>> {
        let n = self.rank();
        let mut q = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            let mut d = rat_int(self.gram[i][i]);
            for k in 0..i {
                d -= &q[k][k] * &q[k][i] * &q[k][i];
            }
            q[i][i] = d;
            for j in i + 1..n {
                let mut v = rat_int(self.gram[i][j]);
                for k in 0..i {
                    v -= &q[k][k] * &q[k][i] * &q[k][j];
                }
                q[i][j] = v / &q[i][i];
            }
        }
        q
    }

    #[allow(clippy::too_many_arguments)]
    fn fp_recurse(
        &self,
        level: usize,
        q: &[Vec<Rat>],
        shift: &[Rat],
        remaining: Rat,
        x: &mut Vec<i64>,
        y: &mut Vec<Rat>,
        out: &mut Vec<(LatVec, Rat)>,
    ) {
        if level == 0 {
            let norm = self.inner_rat(y, y);
            out.push((x.clone(), norm));
            return;
        }
        let i = level - 1;
        let n = self.rank();
        let mut center = Rat::zero();
        for j in i + 1..n {
            center -= &q[i][j] * &y[j];
        }
        // (y_i - center)^2 ≤ remaining / q_ii with y_i = x_i + shift_i
        let radius2 = &remaining / &q[i][i];
        let r = floor_sqrt(&radius2) + BigInt::one();
        let mid = &center - &shift[i];
        let lo = (mid.floor().to_integer() - &r).to_i64().expect("coordinate range");
        let hi = (mid.ceil().to_integer() + &r).to_i64().expect("coordinate range");
        for xi in lo..=hi {
            let yi = rat_int(xi) + &shift[i];
            let t = &yi - &center;
            let used = &q[i][i] * &t * &t;
            if used > remaining {
                continue;
            }
            x[i] = xi;
            y[i] = yi;
            self.fp_recurse(level - 1, q, shift, &remaining - &used, x, y, out);
        }
    }

    /// One representative of each class of `K*/K`, first the zero class.
    ///
    /// A diagonalisation `U G V = diag(d_1, …, d_n)` with unimodular `U, V`
    /// identifies `K*/K` with `⊕ Z/d_i`; the representative for `(c_i)` is
    /// `V (c_i / d_i)` reduced into `[0,1)` coordinate-wise.
    pub fn dual_coset_reps(&self) -> Vec<QVec> {
        let (diag, v) = smith_diagonalize(&self.gram);
        let n = self.rank();
        let moduli: Vec<i64> = diag.iter().map(|d| d.abs()).collect();
        let mut reps = Vec::new();
        let mut c = vec![0i64; n];
        loop {
            let mut rep = vec![Rat::zero(); n];
            for i in 0..n {
                for j in 0..n {
                    if c[j] != 0 {
                        rep[i] += rat(v[i][j] * c[j], moduli[j]);
                    }
                }
            }
            for r in rep.iter_mut() {
                *r = &*r - r.floor();
            }
            reps.push(rep);
            // odometer over ∏ Z/d_i
            let mut idx = 0;
            loop {
                if idx == n {
                    return reps;
                }
                c[idx] += 1;
                if c[idx] < moduli[idx] {
                    break;
                }
                c[idx] = 0;
                idx += 1;
            }
        }
    }
}

/// The cyclic isometry `ν(α₁, …, α_k) = (α₂, …, α_k, α₁)` of `K^{⊕k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicIsometry {
    pub k: usize,
    pub d: usize,
}

impl CyclicIsometry {
    pub fn new(k: usize, d: usize) -> Self {
        assert!(k >= 1 && d >= 1);
        CyclicIsometry { k, d }
    }

    pub fn rank(&self) -> usize {
        self.k * self.d
    }

    /// `ν^power v`: block `i` of the result is block `i + power (mod k)` of `v`.
    pub fn apply<T: Clone>(&self, v: &[T], power: i64) -> Vec<T> {
        assert_eq!(v.len(), self.rank(), "vector rank does not match k*d");
        let k = self.k as i64;
        let mut out = Vec::with_capacity(v.len());
        for i in 0..k {
            let src = (i + power).rem_euclid(k) as usize;
            out.extend_from_slice(&v[src * self.d..(src + 1) * self.d]);
        }
        out
    }

    /// The block (copy) `p` of `v`, zero-based.
    pub fn block<'a, T>(&self, v: &'a [T], p: usize) -> &'a [T] {
        &v[p * self.d..(p + 1) * self.d]
    }

    /// Embeds `α ∈ K` into copy `p` of `L`.
    pub fn embed(&self, alpha: &[i64], p: usize) -> LatVec {
        let mut v = vec![0; self.rank()];
        v[p * self.d..(p + 1) * self.d].copy_from_slice(alpha);
        v
    }

    /// Sum of the copies, `Σ_p α_p ∈ K`.
    pub fn block_sum(&self, v: &[i64]) -> LatVec {
        let mut s = vec![0; self.d];
        for p in 0..self.k {
            for j in 0..self.d {
                s[j] += v[p * self.d + j];
            }
        }
        s
    }

    /// `Σ_{j=0}^{k-1} ν^j α`, the diagonal vector `(Σα_p, …, Σα_p)`.
    pub fn orbit_sum(&self, v: &[i64]) -> LatVec {
        let s = self.block_sum(v);
        (0..self.k).flat_map(|_| s.iter().copied()).collect()
    }

    /// `h_(n) = (1/k) Σ_j η^{-nj} ν^j h`, the component of `h` in the
    /// `η^n`-eigenspace of `ν`.
    pub fn eigenprojection(&self, field: &RootField, v: &[Cyc], n: i64) -> AmbVec {
        let k = self.k as i64;
        let mut acc: AmbVec = vec![field.zero(); self.rank()];
        for j in 0..k {
            let phase = field.eta(-n * j);
            let shifted = self.apply(v, j);
            for (a, s) in acc.iter_mut().zip(&shifted) {
                *a += &(&phase * s);
            }
        }
        let inv_k = rat(1, k);
        acc.iter().map(|c| c.scale(&inv_k)).collect()
    }
}

pub fn to_amb(field: &RootField, v: &[i64]) -> AmbVec {
    v.iter().map(|&x| field.int(x)).collect()
}

pub fn det_rat(mut m: Vec<Vec<Rat>>) -> Rat {
    let n = m.len();
    let mut det = Rat::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &p;
            for c in col..n {
                let sub = &f * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

pub fn invert_rat(m: Vec<Vec<Rat>>) -> Option<Vec<Vec<Rat>>> {
    let n = m.len();
    let mut a: Vec<Vec<Rat>> = m
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(piv, col);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..2 * n {
                    let sub = &f * &a[col][c];
                    a[r][c] -= sub;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Diagonalises a nonsingular integer matrix by unimodular row and column
/// operations, returning the diagonal and the accumulated column transform
/// `V` with `U A V = diag`.
pub fn smith_diagonalize(a: &[Vec<i64>]) -> (Vec<i64>, Vec<Vec<i64>>) {
    let n = a.len();
    let mut m: Vec<Vec<i64>> = a.to_vec();
    let mut v: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();
    for t in 0..n {
        loop {
            // pivot: smallest nonzero |entry| in the trailing block
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if m[i][j] != 0
                        && best.is_none_or(|(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let (pi, pj) = best.expect("matrix is nonsingular");
            m.swap(t, pi);
            for row in m.iter_mut() {
                row.swap(t, pj);
            }
            for row in v.iter_mut() {
                row.swap(t, pj);
            }
            let p = m[t][t];
            let mut clean = true;
            for i in t + 1..n {
                let f = Integer::div_floor(&m[i][t], &p);
                if f != 0 {
                    for c in t..n {
                        m[i][c] -= f * m[t][c];
                    }
                }
                if m[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..n {
                let f = Integer::div_floor(&m[t][j], &p);
                if f != 0 {
                    for row in m.iter_mut() {
                        row[j] -= f * row[t];
                    }
                    for row in v.iter_mut() {
                        row[j] -= f * row[t];
                    }
                }
                if m[t][j] != 0 {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
    }
    ((0..n).map(|i| m[i][i]).collect(), v)
}

/// Row-style Hermite normal form of the integer row span of `rows`, with
/// zero rows dropped. Two generating sets span the same lattice iff their
/// normal forms agree.
pub fn hermite_normal_form(rows: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut out_rows = 0;
    for col in 0..ncols {
        // Euclid on column `col` among rows out_rows..
        loop {
            let mut best: Option<usize> = None;
            for r in out_rows..m.len() {
                if !m[r][col].is_zero()
                    && best.is_none_or(|b| m[r][col].abs() < m[b][col].abs())
                {
                    best = Some(r);
                }
            }
            let Some(b) = best else { break };
            m.swap(out_rows, b);
            let mut done = true;
            for r in out_rows + 1..m.len() {
                if m[r][col].is_zero() {
                    continue;
                }
                let f = m[r][col].div_floor(&m[out_rows][col]);
                let pivot_row = m[out_rows].clone();
                for (x, p) in m[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * p;
                }
                if !m[r][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if out_rows < m.len() && !m[out_rows][col].is_zero() {
            if m[out_rows][col].is_negative() {
                for x in m[out_rows].iter_mut() {
                    *x = -&*x;
                }
            }
            let pivot_row = m[out_rows].clone();
            for r in 0..out_rows {
                let f = m[r][col].div_floor(&pivot_row[col]);
                if !f.is_zero() {
                    for (x, p) in m[r].iter_mut().zip(&pivot_row) {
                        *x -= &f * p;
                    }
                }
            }
            out_rows += 1;
        }
    }
    m.truncate(out_rows);
    m
}
