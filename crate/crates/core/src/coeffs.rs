//! Coefficient engines: the constants `c_{mnr}` and the operator `Δ_x` of
//! the space-time construction, the constants `a_j` and the change of
//! variables `E_f` of the worldsheet construction.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::exact::{binom_rat, lemma_root_sum, rat, rat_int, Cyc, Exp, Rat, RootField};
use crate::fock::{FockError, Model, Sector, StateVector};

/// Truncated power series in two variables, `Σ_{m+n ≤ order} c[m][n] x^m y^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiSeries {
    order: usize,
    coeffs: Vec<Vec<Cyc>>,
}

impl BiSeries {
    pub fn zero(field: &RootField, order: usize) -> Self {
        let coeffs = (0..=order)
            .map(|m| vec![field.zero(); order + 1 - m])
            .collect();
        BiSeries { order, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `x^m y^n`; zero beyond the truncation.
    pub fn get(&self, m: usize, n: usize) -> Option<&Cyc> {
        if m + n > self.order {
            None
        } else {
            Some(&self.coeffs[m][n])
        }
    }

    fn mul(&self, other: &BiSeries) -> BiSeries {
        let order = self.order;
        let f_zero = self.coeffs[0][0].clone() - self.coeffs[0][0].clone();
        let mut out = BiSeries {
            order,
            coeffs: (0..=order).map(|m| vec![f_zero.clone(); order + 1 - m]).collect(),
        };
        for m1 in 0..=order {
            for n1 in 0..=order - m1 {
                let a = &self.coeffs[m1][n1];
                if a.is_zero() {
                    continue;
                }
                for m2 in 0..=order - m1 - n1 {
                    for n2 in 0..=order - m1 - n1 - m2 {
                        let b = &other.coeffs[m2][n2];
                        if !b.is_zero() {
                            out.coeffs[m1 + m2][n1 + n2] += &(a * b);
                        }
                    }
                }
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &BiSeries, s: &Cyc) {
        for (ra, rb) in self.coeffs.iter_mut().zip(&other.coeffs) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += &(b * s);
            }
        }
    }
}

/// Coefficients of `(1+x)^{1/k} - 1` through degree `order`.
fn root_minus_one(k: usize, order: usize) -> Vec<Rat> {
    let e = rat(1, k as i64);
    (0..=order)
        .map(|i| if i == 0 { Rat::zero() } else { binom_rat(&e, i as u32) })
        .collect()
}

/// `log(((1+x)^{1/k} - η^{-r}(1+y)^{1/k}) / (1 - η^{-r}))` for `r ≢ 0`,
/// through total degree `order`.
pub fn log_series(field: &RootField, r: i64, order: usize) -> BiSeries {
    let k = field.k() as usize;
    let a = root_minus_one(k, order);
    let w = field.eta(-r);
    let denom_inv = (&field.one() - &w)
        .inv()
        .expect("η^{-r} ≠ 1 for r ≢ 0 mod k");
    // u = (A(x) - η^{-r} A(y)) / (1 - η^{-r}), no constant term
    let mut u = BiSeries::zero(field, order);
    for i in 1..=order {
        u.coeffs[i][0] += &denom_inv.scale(&a[i]);
        u.coeffs[0][i] -= &(&w * &denom_inv).scale(&a[i]);
    }
    let mut out = BiSeries::zero(field, order);
    let mut pow = u.clone();
    for t in 1..=order {
        let sign = if t % 2 == 1 { 1 } else { -1 };
        out.add_scaled(&pow, &field.from_rat(rat(sign, t as i64)));
        if t < order {
            pow = pow.mul(&u);
        }
    }
    out
}

/// The constants `c_{mnr}` for all `r`, through total degree `order`.
#[derive(Debug, Clone)]
pub struct CTable {
    k: usize,
    order: usize,
    series: Vec<BiSeries>,
}

impl CTable {
    pub fn new(field: &RootField, order: usize) -> Self {
        let k = field.k() as usize;
        let logs: Vec<BiSeries> = (1..k as i64).map(|r| log_series(field, r, order)).collect();
        let half = field.from_rat(rat(1, 2));
        let mut c0 = BiSeries::zero(field, order);
        for l in &logs {
            c0.add_scaled(l, &-&half);
        }
        let mut series = vec![c0];
        for l in &logs {
            let mut s = BiSeries::zero(field, order);
            s.add_scaled(l, &half);
            series.push(s);
        }
        CTable { k, order, series }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `c_{mnr}`; `None` beyond the truncation.
    pub fn c(&self, m: usize, n: usize, r: usize) -> Option<&Cyc> {
        self.series[r % self.k].get(m, n)
    }

    pub fn series(&self, r: usize) -> &BiSeries {
        &self.series[r % self.k]
    }
}

pub fn c_coeffs(k: usize, r: usize, order: usize) -> BiSeries {
    CTable::new(&RootField::new(k as u32), order).series(r).clone()
}

/// `-(1/2k²) Σ_{j=1}^{k-1} η^{-j}/(1-η^{-j})²`, evaluated in `Q(ζ_{2k})`.
pub fn c110_root_sum(field: &RootField) -> Cyc {
    let k = field.k() as i64;
    let one = field.one();
    let mut acc = field.zero();
    for j in 1..k {
        let z = field.eta(-j);
        let d = &(&one - &z) * &(&one - &z);
        acc += &(&z * &d.inv().expect("nonzero"));
    }
    acc.scale(&rat(-1, 2 * k * k))
}

/// `c₁₁₀` through the root-of-unity sum identity:
/// `-(1/2k²) · (-(k²-1)/12)`, with the sum evaluated in `Q(ζ_k)`.
pub fn c110_via_lemma(k: usize) -> Rat {
    let s = lemma_root_sum(k as u32)
        .as_rat()
        .expect("the root sum is rational");
    s * rat(-1, 2 * (k * k) as i64)
}

/// `(k²-1)/24k²`.
pub fn c110_expected(k: usize) -> Rat {
    let k = k as i64;
    rat(k * k - 1, 24 * k * k)
}

/// Applies `exp(-Σ_j a_j x^{j+1} d/dx)` to `x`, truncated at degree
/// `max_deg`. Entry `i` of the result is the coefficient of `x^i`.
pub fn exp_vector_field_on_x(a: &[Rat], max_deg: usize) -> Vec<Rat> {
    let mut term = vec![Rat::zero(); max_deg + 1];
    if max_deg >= 1 {
        term[1] = Rat::one();
    }
    let mut total = term.clone();
    let mut n = 1i64;
    loop {
        // D p = -Σ a_j x^{j+1} p'
        let mut next = vec![Rat::zero(); max_deg + 1];
        for (i, c) in term.iter().enumerate() {
            if c.is_zero() || i == 0 {
                continue;
            }
            let deriv = c * rat_int(i as i64);
            for (j, aj) in a.iter().enumerate() {
                let deg = i - 1 + j + 2;
                if deg > max_deg {
                    break;
                }
                next[deg] -= aj * &deriv;
            }
        }
        if next.iter().all(|c| c.is_zero()) {
            break;
        }
        for c in next.iter_mut() {
            *c = &*c / rat_int(n);
        }
        for (t, c) in total.iter_mut().zip(&next) {
            *t += c;
        }
        term = next;
        n += 1;
    }
    total
}

/// `(1/k)(1+x)^k - 1/k` through degree `max_deg`.
pub fn a_target(k: usize, max_deg: usize) -> Vec<Rat> {
    (0..=max_deg)
        .map(|i| {
            if i == 0 {
                Rat::zero()
            } else {
                binom_rat(&rat_int(k as i64), i as u32) / rat_int(k as i64)
            }
        })
        .collect()
}

/// The unique `a_1, …, a_count` with
/// `exp(-Σ a_j x^{j+1} d/dx) x = (1/k)(1+x)^k - 1/k` through degree
/// `count + 1`, solved one degree at a time.
pub fn a_coeffs(k: usize, count: usize) -> Vec<Rat> {
    let target = a_target(k, count + 1);
    let mut a: Vec<Rat> = Vec::with_capacity(count);
    for j in 1..=count {
        a.push(Rat::zero());
        let got = exp_vector_field_on_x(&a, j + 1);
        // a_j enters the degree j+1 coefficient as -a_j
        a[j - 1] = &got[j + 1] - &target[j + 1];
    }
    a
}

/// Finite Laurent polynomial in a formal variable with rational exponents
/// and state-vector coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct XPolyOp {
    sector: Sector,
    terms: BTreeMap<Exp, StateVector>,
}

impl XPolyOp {
    pub fn zero(sector: Sector) -> Self {
        XPolyOp { sector, terms: BTreeMap::new() }
    }

    pub fn constant(v: StateVector) -> Self {
        let mut p = Self::zero(v.sector());
        p.add(Exp::zero(), &v);
        p
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn add(&mut self, e: Exp, v: &StateVector) {
        if v.is_zero() {
            return;
        }
        let slot = self
            .terms
            .entry(e)
            .or_insert_with(|| StateVector::zero(v.sector()));
        slot.add_assign(v);
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add_poly(&mut self, other: &XPolyOp) {
        for (e, v) in &other.terms {
            self.add(*e, v);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &StateVector)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: Exp) -> StateVector {
        self.terms
            .get(&e)
            .cloned()
            .unwrap_or_else(|| StateVector::zero(self.sector))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale_rat(&self, r: &Rat) -> XPolyOp {
        let mut out = XPolyOp::zero(self.sector);
        for (e, v) in &self.terms {
            out.add(*e, &v.scale_rat(r));
        }
        out
    }

    /// Applies a linear map to every coefficient, shifting exponents by
    /// the returned amount.
    pub fn try_map<F>(&self, sector: Sector, mut f: F) -> Result<XPolyOp, FockError>
    where
        F: FnMut(&StateVector) -> Result<XPolyOp, FockError>,
    {
        let mut out = XPolyOp::zero(sector);
        for (e, v) in &self.terms {
            let img = f(v)?;
            for (e2, w) in img.terms() {
                out.add(*e + *e2, w);
            }
        }
        Ok(out)
    }
}

/// `Δ_x v = Σ_{m,n ≥ 0} Σ_r c_{mnr} Σ_p Σ_{a,a'} G^{-1}_{aa'} b_a^{p+r}(m) b_{a'}^p(n) x^{-m-n} v`
/// on `V_L`, i.e. the defining sum over an orthonormal basis rewritten with
/// a basis and its dual.
pub fn delta_apply(model: &Model, table: &CTable, v: &StateVector) -> Result<XPolyOp, FockError> {
    if v.sector() != Sector::L {
        return Err(FockError::SectorMismatch { expected: Sector::L, found: v.sector() });
    }
    let (k, d) = (model.k(), model.d());
    let top = v.max_level().to_integer() as usize;
    if top > table.order() {
        return Err(FockError::Unsupported(format!(
            "state level {top} exceeds coefficient truncation {}",
            table.order()
        )));
    }
    let ginv = model.gram_inv_k();
    let mut out = XPolyOp::zero(Sector::L);
    for total in 1..=top {
        let mut acc = StateVector::zero(Sector::L);
        for m in 0..=total {
            let n = total - m;
            for p in 0..k {
                for a2 in 0..d {
                    // b_{a'}^p(n) first, then b_a^{p+r}(m); they commute
                    let w = model.apply_mode(p * d + a2, Exp::from_integer(n as i64), v)?;
                    if w.is_zero() {
                        continue;
                    }
                    for r in 0..k {
                        let c = table.c(m, n, r).expect("within truncation");
                        if c.is_zero() {
                            continue;
                        }
                        let q = (p + r) % k;
                        for a1 in 0..d {
                            let g = &ginv[a1][a2];
                            if g.is_zero() {
                                continue;
                            }
                            let w2 = model.apply_mode(q * d + a1, Exp::from_integer(m as i64), &w)?;
                            acc.add_scaled(&w2, &c.scale(g));
                        }
                    }
                }
            }
        }
        out.add(-Exp::from_integer(total as i64), &acc);
    }
    Ok(out)
}

/// `e^{Δ_x} v`, summed until the weight-lowering series terminates.
pub fn exp_delta_apply(model: &Model, table: &CTable, v: &StateVector) -> Result<XPolyOp, FockError> {
    let mut total = XPolyOp::constant(v.clone());
    let mut term = XPolyOp::constant(v.clone());
    let mut n = 1i64;
    while !term.is_zero() {
        term = term.try_map(Sector::L, |s| delta_apply(model, table, s))?;
        term = term.scale_rat(&rat(1, n));
        total.add_poly(&term);
        n += 1;
    }
    Ok(total)
}

/// Splits a `V_K` or `V_L` state into homogeneous components by weight.
pub fn by_weight(model: &Model, v: &StateVector) -> BTreeMap<Exp, StateVector> {
    let mut out: BTreeMap<Exp, StateVector> = BTreeMap::new();
    for (m, c) in v.terms() {
        let w = model.mono_weight(v.sector(), m);
        out.entry(w)
            .or_insert_with(|| StateVector::zero(v.sector()))
            .add_term(m.clone(), c.clone());
    }
    out
}

/// `exp(s Σ_j a_j y^{-j} L(j)) v` on `V_K` with `y = x^{var}`; `s = ±1`.
fn exp_virasoro_sum(
    model: &Model,
    a: &[Rat],
    var: Exp,
    sign: i64,
    v: &StateVector,
) -> Result<XPolyOp, FockError> {
    let mut total = XPolyOp::constant(v.clone());
    let mut term = XPolyOp::constant(v.clone());
    let mut n = 1i64;
    while !term.is_zero() {
        term = term.try_map(Sector::K, |s| {
            let mut out = XPolyOp::zero(Sector::K);
            let top = s.max_level().to_integer()
                + s.terms()
                    .map(|(m, _)| model.ground_weight(Sector::K, &m.ground).to_integer())
                    .max()
                    .unwrap_or(0);
            for j in 1..=top {
                let aj = a.get(j as usize - 1).ok_or_else(|| {
                    FockError::Unsupported(format!("a_{j} beyond the computed table"))
                })?;
                if aj.is_zero() {
                    continue;
                }
                let w = model.virasoro_l(j, s)?;
                out.add(-var * Exp::from_integer(j), &w.scale_rat(&(aj * rat_int(sign))));
            }
            Ok(out)
        })?;
        term = term.scale_rat(&rat(1, n));
        total.add_poly(&term);
        n += 1;
    }
    Ok(total)
}

/// The worldsheet change-of-variables operator
/// `E_f(y) = exp(Σ_j a_j y^{-j} L(j)) k^{-L(0)} y^{(1-k)L(0)}` applied to
/// `v ∈ V_K`, with `y = x^{var}` (so `var = 1/k` gives `E_f(x^{1/k})`).
pub fn ef_apply(model: &Model, a: &[Rat], var: Exp, v: &StateVector) -> Result<XPolyOp, FockError> {
    if v.sector() != Sector::K {
        return Err(FockError::SectorMismatch { expected: Sector::K, found: v.sector() });
    }
    let k = model.k() as i64;
    let mut out = XPolyOp::zero(Sector::K);
    for (w, comp) in by_weight(model, v) {
        let wi = w.to_integer();
        let scaled = comp.scale_rat(&Rat::from_integer(num_bigint::BigInt::from(k).pow(wi as u32)).recip());
        let shift = var * Exp::from_integer(1 - k) * w;
        let e = exp_virasoro_sum(model, a, var, 1, &scaled)?;
        for (e2, s) in e.terms() {
            out.add(*e2 + shift, s);
        }
    }
    Ok(out)
}

/// `E_f(y)^{-1} = y^{(k-1)L(0)} k^{L(0)} exp(-Σ_j a_j y^{-j} L(j))` applied to
/// `v ∈ V_K`, with `y = x^{var}`.
pub fn ef_inverse_apply(model: &Model, a: &[Rat], var: Exp, v: &StateVector) -> Result<XPolyOp, FockError> {
    if v.sector() != Sector::K {
        return Err(FockError::SectorMismatch { expected: Sector::K, found: v.sector() });
    }
    let k = model.k() as i64;
    let e = exp_virasoro_sum(model, a, var, -1, v)?;
    let mut out = XPolyOp::zero(Sector::K);
    for (e1, s) in e.terms() {
        for (w, comp) in by_weight(model, s) {
            let wi = w.to_integer();
            let scaled = comp.scale_rat(&Rat::from_integer(num_bigint::BigInt::from(k).pow(wi as u32)));
            out.add(*e1 + var * Exp::from_integer(k - 1) * w, &scaled);
        }
    }
    Ok(out)
}

/// Applies [`ef_inverse_apply`] to every coefficient of an
/// [`XPolyOp`], multiplying exponents.
pub fn ef_inverse_poly(model: &Model, a: &[Rat], var: Exp, p: &XPolyOp) -> Result<XPolyOp, FockError> {
    p.try_map(Sector::K, |s| ef_inverse_apply(model, a, var, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use proptest::prelude::*;

    #[test]
    fn c_table_basics() {
        for k in 1..=6 {
            let f = RootField::new(k as u32);
            let t = CTable::new(&f, 6);
            for r in 0..k {
                assert!(t.c(0, 0, r).unwrap().is_zero());
            }
            assert_eq!(t.c(1, 1, 0).unwrap().as_rat(), Some(c110_expected(k)), "k = {k}");
            assert_eq!(c110_root_sum(&f).as_rat(), Some(c110_expected(k)));
            assert_eq!(c110_via_lemma(k), c110_expected(k));
        }
        let f1 = RootField::new(1);
        let t1 = CTable::new(&f1, 5);
        for m in 0..=5 {
            for n in 0..=5 - m {
                assert!(t1.c(m, n, 0).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn c_symmetry() {
        // c_{mnr} = c_{nm,-r} follows from swapping x and y in the log
        // up to the constant log(-η^{-r}) - which only affects (0,0);
        // c_{mn0} is symmetric
        for k in 2..=5 {
            let f = RootField::new(k as u32);
            let t = CTable::new(&f, 5);
            for m in 0..=5 {
                for n in 0..=5 - m {
                    assert_eq!(t.c(m, n, 0), t.c(n, m, 0));
                    for r in 1..k {
                        assert_eq!(t.c(m, n, r), t.c(n, m, k - r), "k={k} m={m} n={n} r={r}");
                    }
                }
            }
            // Σ_s (η^{rs} + η^{-rs}) = 0 for r ≢ 0
            for r in 1..k as i64 {
                let mut s = f.zero();
                for j in 0..k as i64 {
                    s += &(&f.eta(r * j) + &f.eta(-r * j));
                }
                assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn a_examples() {
        for k in 1..=6usize {
            let a = a_coeffs(k, 9);
            let ki = k as i64;
            assert_eq!(a[0], rat(1 - ki, 2));
            assert_eq!(a[1], rat(ki * ki - 1, 12));
            if k == 1 {
                assert!(a.iter().all(|x| x.is_zero()));
            }
            assert_eq!(exp_vector_field_on_x(&a, 10), a_target(k, 10), "k = {k}");
        }
    }

    fn model(k: usize, a2: bool) -> std::sync::Arc<Model> {
        Model::new(&if a2 { Lattice::a2() } else { Lattice::a1() }, k)
    }

    #[test]
    fn exp_delta_examples() {
        for (k, a2) in [(2, false), (3, false), (2, true), (3, true)] {
            let m = model(k, a2);
            let f = m.field();
            let t = CTable::new(f, 6);
            let vac = m.vacuum(Sector::L);
            assert_eq!(exp_delta_apply(&m, &t, &vac).unwrap(), XPolyOp::constant(vac.clone()));
            let w = m.omega(Sector::L);
            let got = exp_delta_apply(&m, &t, &w).unwrap();
            let kd = (k * m.d()) as i64;
            let mut want = XPolyOp::constant(w.clone());
            want.add(
                Exp::from_integer(-2),
                &vac.scale_rat(&(c110_expected(k) * rat_int(kd))),
            );
            assert_eq!(got, want);
            for (e, _) in got.terms() {
                assert!(e.is_integer() && *e <= Exp::zero());
            }
        }
    }

    #[test]
    fn ef_examples() {
        for (k, a2) in [(2, false), (3, false), (2, true)] {
            let m = model(k, a2);
            let f = m.field();
            let a = a_coeffs(k, 8);
            let kk = k as i64;
            let var = Exp::new(1, kk);
            let vac = m.vacuum(Sector::K);
            assert_eq!(ef_apply(&m, &a, var, &vac).unwrap(), XPolyOp::constant(vac.clone()));
            let s = m.apply_mode(0, -Exp::one(), &vac).unwrap();
            let mut want = XPolyOp::zero(Sector::K);
            want.add(Exp::new(1, kk) - Exp::one(), &s.scale_rat(&rat(1, kk)));
            assert_eq!(ef_apply(&m, &a, var, &s).unwrap(), want);
            let w = m.omega(Sector::K);
            let d = m.d() as i64;
            let mut want = XPolyOp::zero(Sector::K);
            want.add(Exp::from_integer(2 * kk - 2), &w.scale_rat(&rat_int(kk * kk)));
            want.add(Exp::from_integer(-2), &vac.scale_rat(&rat(-(kk * kk - 1) * d, 24)));
            assert_eq!(ef_inverse_apply(&m, &a, Exp::one(), &w).unwrap(), want);
            let _ = f;
        }
    }

    #[test]
    fn ef_roundtrip_on_basis() {
        for (k, a2) in [(2, false), (3, false), (2, true)] {
            let m = model(k, a2);
            let a = a_coeffs(k, 8);
            let cutoff = if a2 { 3 } else { 4 };
            for var in [Exp::new(1, k as i64), Exp::one()] {
                for mono in m.basis(Sector::K, Exp::from_integer(cutoff)) {
                    let v = m.mono_state(Sector::K, mono);
                    let fwd = ef_apply(&m, &a, var, &v).unwrap();
                    let back = ef_inverse_poly(&m, &a, var, &fwd).unwrap();
                    assert_eq!(back, XPolyOp::constant(v.clone()));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn a_roundtrip(k in 1usize..9, count in 1usize..10) {
            let a = a_coeffs(k, count);
            prop_assert_eq!(exp_vector_field_on_x(&a, count + 1), a_target(k, count + 1));
        }
    }
}
