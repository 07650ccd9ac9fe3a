//! The central extensions `L̂` and `L̂_ν` of `L = K^{⊕k}` by `⟨η₀⟩`, their
//! commutator maps, the lift `ν̂`, the character `τ` of `N̂` and the scalar
//! `σ(α)`.
//!
//! Both extensions are realised on pairs `(α, s)` with `s` an exponent of
//! `ζ_{2k}`, and multiplication `(α,s)(β,t) = (α+β, s+t+ε(α,β))` for a
//! bimultiplicative section `ε`. The untwisted `ε₀` is triangular on the
//! standard basis; the twisted section is `ε₀ - ψ` with
//! `ψ(α,β) = Σ_{0<j<k/2} (k+2j) ⟨ν^{-j}α, β⟩`, so that the identity map on
//! pairs is the natural set-theoretic identification of the two groups.

use thiserror::Error;

use crate::exact::{rat, rat_int, Cyc, Rat, RootField};
use crate::lattice::{hermite_normal_form, CyclicIsometry, LatVec, Lattice};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CocycleError {
    #[error("element with base {0:?} is neither central nor in N = (1-ν)L")]
    NotInN(LatVec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Section {
    Untwisted,
    Twisted,
}

/// Element `(base, ζ_{2k}^phase)` of a central extension, relative to a
/// fixed section.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CentralElem {
    pub base: LatVec,
    pub phase: i64,
}

impl CentralElem {
    pub fn new(base: LatVec, phase: i64) -> Self {
        CentralElem { base, phase }
    }
}

/// Cocycle data for `L = K^{⊕k}` with the cyclic shift `ν`.
#[derive(Debug, Clone)]
pub struct Extension {
    k_lattice: Lattice,
    lattice: Lattice,
    nu: CyclicIsometry,
    field: RootField,
    eps0: Vec<Vec<i64>>,
    eps_tw: Vec<Vec<i64>>,
}

impl Extension {
    pub fn new(k_lattice: &Lattice, k: usize) -> Self {
        let d = k_lattice.rank();
        let lattice = k_lattice.direct_sum_power(k);
        let nu = CyclicIsometry::new(k, d);
        let field = RootField::new(k as u32);
        let n = lattice.rank();
        let mut ext = Extension {
            k_lattice: k_lattice.clone(),
            lattice,
            nu,
            field,
            eps0: vec![vec![0; n]; n],
            eps_tw: vec![vec![0; n]; n],
        };
        let basis: Vec<LatVec> = (0..n).map(|i| unit(n, i)).collect();
        for i in 0..n {
            for j in 0..i {
                ext.eps0[i][j] = ext.c0_exp(&basis[i], &basis[j]);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let psi = ext.psi_exp(&basis[i], &basis[j]);
                ext.eps_tw[i][j] = ext.field.reduce(ext.eps0[i][j] - psi);
            }
        }
        ext
    }

    pub fn k(&self) -> usize {
        self.nu.k
    }

    pub fn d(&self) -> usize {
        self.nu.d
    }

    pub fn field(&self) -> &RootField {
        &self.field
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn k_lattice(&self) -> &Lattice {
        &self.k_lattice
    }

    pub fn nu(&self) -> &CyclicIsometry {
        &self.nu
    }

    /// Exponent of `ζ_{2k}` for `C₀(α,β) = (-1)^{⟨α,β⟩}`.
    pub fn c0_exp(&self, a: &[i64], b: &[i64]) -> i64 {
        self.field.reduce(self.field.minus_one_exp() * self.lattice.inner_int(a, b))
    }

    /// Exponent of `ζ_{2k}` for `C(α,β) = ∏_{j=0}^{k-1} (-η^j)^{⟨ν^jα,β⟩}`.
    pub fn c_exp(&self, a: &[i64], b: &[i64]) -> i64 {
        let k = self.k() as i64;
        let mut e = 0;
        for j in 0..k {
            e += (k + 2 * j) * self.lattice.inner_int(&self.nu.apply(a, j), b);
        }
        self.field.reduce(e)
    }

    pub fn commutator_c0(&self, a: &[i64], b: &[i64]) -> Cyc {
        self.field.zeta(self.c0_exp(a, b))
    }

    pub fn commutator_c(&self, a: &[i64], b: &[i64]) -> Cyc {
        self.field.zeta(self.c_exp(a, b))
    }

    /// Exponent of `∏_{0<j<k/2} (-η^j)^{⟨ν^{-j}α,β⟩}`, the ratio of the two
    /// group laws.
    pub fn psi_exp(&self, a: &[i64], b: &[i64]) -> i64 {
        let k = self.k() as i64;
        let mut e = 0;
        let mut j = 1;
        while 2 * j < k {
            e += (k + 2 * j) * self.lattice.inner_int(&self.nu.apply(a, -j), b);
            j += 1;
        }
        self.field.reduce(e)
    }

    pub fn eps(&self, section: Section, a: &[i64], b: &[i64]) -> i64 {
        let table = match section {
            Section::Untwisted => &self.eps0,
            Section::Twisted => &self.eps_tw,
        };
        let mut e = 0;
        for (i, ai) in a.iter().enumerate() {
            if *ai == 0 {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                e += ai * bj * table[i][j];
            }
        }
        self.field.reduce(e)
    }

    pub fn ext_mul(&self, section: Section, a: &CentralElem, b: &CentralElem) -> CentralElem {
        let base = a.base.iter().zip(&b.base).map(|(x, y)| x + y).collect();
        let phase = self
            .field
            .reduce(a.phase + b.phase + self.eps(section, &a.base, &b.base));
        CentralElem { base, phase }
    }

    pub fn ext_inv(&self, section: Section, a: &CentralElem) -> CentralElem {
        // (α,s)(-α,t) = (0, s + t - ε(α,α))
        let base = a.base.iter().map(|x| -x).collect();
        let phase = self
            .field
            .reduce(-a.phase + self.eps(section, &a.base, &a.base));
        CentralElem { base, phase }
    }

    pub fn identity(&self) -> CentralElem {
        CentralElem::new(vec![0; self.lattice.rank()], 0)
    }

    /// Phase exponent of the group commutator `aba⁻¹b⁻¹`.
    pub fn group_commutator_exp(&self, section: Section, a: &CentralElem, b: &CentralElem) -> i64 {
        let ab = self.ext_mul(section, a, b);
        let ab_ai = self.ext_mul(section, &ab, &self.ext_inv(section, a));
        let c = self.ext_mul(section, &ab_ai, &self.ext_inv(section, b));
        debug_assert!(c.base.iter().all(|&x| x == 0));
        c.phase
    }

    /// Exponent of the defect `ε(να,νβ) - ε(α,β)` of the section-transport
    /// map `(α,s) ↦ (να,s)`; it is a homomorphism iff this vanishes.
    pub fn transport_defect(&self, section: Section, a: &[i64], b: &[i64]) -> i64 {
        let na = self.nu.apply(a, 1);
        let nb = self.nu.apply(b, 1);
        self.field
            .reduce(self.eps(section, &na, &nb) - self.eps(section, a, b))
    }

    /// The automorphism `ν̂` of `L̂_ν` (also of `L̂`).
    ///
    /// Both section tables are invariant under `ν` (see
    /// [`Extension::transport_defect`]), so the transport map
    /// `(α,s) ↦ (να,s)` is already an automorphism; it fixes every element
    /// over a diagonal vector and satisfies `ν̂^k = 1`. No correcting
    /// character is needed.
    pub fn nu_hat(&self, a: &CentralElem) -> CentralElem {
        CentralElem {
            base: self.nu.apply(&a.base, 1),
            phase: self.field.reduce(a.phase),
        }
    }

    pub fn nu_hat_pow(&self, a: &CentralElem, p: usize) -> CentralElem {
        (0..p).fold(a.clone(), |acc, _| self.nu_hat(&acc))
    }

    /// `σ(α) = ∏_{0<j<k/2} (1-η^{-j})^{⟨ν^jα,α⟩}`, times
    /// `2^{⟨ν^{k/2}α,α⟩/2}` for even `k`.
    pub fn sigma(&self, alpha: &[i64]) -> Cyc {
        let k = self.k() as i64;
        let f = &self.field;
        let mut acc = f.one();
        let mut j = 1;
        while 2 * j < k {
            let e = self.lattice.inner_int(&self.nu.apply(alpha, j), alpha);
            let base = &f.one() - &f.eta(-j);
            acc = &acc * &base.pow(e);
            j += 1;
        }
        if k % 2 == 0 {
            let e = self.lattice.inner_int(&self.nu.apply(alpha, k / 2), alpha);
            debug_assert!(e % 2 == 0);
            let two = rat_int(2);
            let p = num_traits::pow::Pow::pow(&two, (e / 2) as i32);
            acc = acc.scale(&p);
        }
        acc
    }

    /// Whether `β` lies in `N = (1 - P₀)𝔥 ∩ L`, i.e. its copies sum to zero.
    pub fn in_n(&self, beta: &[i64]) -> bool {
        self.nu.block_sum(beta).iter().all(|&x| x == 0)
    }

    /// The unique `α` with `(1-ν)α = β` and first copy zero.
    pub fn solve_one_minus_nu(&self, beta: &[i64]) -> Option<LatVec> {
        if !self.in_n(beta) {
            return None;
        }
        let d = self.d();
        let k = self.k();
        let mut alpha = vec![0; k * d];
        // ((1-ν)α)_p = α_p - α_{p+1}
        for p in 0..k - 1 {
            for j in 0..d {
                alpha[(p + 1) * d + j] = alpha[p * d + j] - beta[p * d + j];
            }
        }
        Some(alpha)
    }

    /// `τ` on `N̂` as an exponent of `ζ_{2k}`: `τ(η₀) = η₀` and
    /// `τ(a ν̂(a)⁻¹) = η^{-k⟨ā₍₀₎,ā₍₀₎⟩/2}`.
    pub fn tau_exp(&self, a: &CentralElem) -> Result<i64, CocycleError> {
        let alpha = self
            .solve_one_minus_nu(&a.base)
            .ok_or_else(|| CocycleError::NotInN(a.base.clone()))?;
        let lift = CentralElem::new(alpha.clone(), 0);
        let m = self.ext_mul(
            Section::Twisted,
            &lift,
            &self.ext_inv(Section::Twisted, &self.nu_hat(&lift)),
        );
        debug_assert_eq!(m.base, a.base);
        // k⟨ā₍₀₎,ā₍₀₎⟩ = ⟨Σ_j ν^j α, α⟩, always even
        let s = self.lattice.inner_int(&self.nu.orbit_sum(&alpha), &alpha);
        debug_assert!(s % 2 == 0);
        Ok(self
            .field
            .reduce(self.field.eta_exp(-s / 2) + a.phase - m.phase))
    }

    pub fn tau(&self, a: &CentralElem) -> Result<Cyc, CocycleError> {
        Ok(self.field.zeta(self.tau_exp(a)?))
    }

    /// Generators `b_j^p - b_j^k` (`p < k`) of `N`.
    pub fn n_generators(&self) -> Vec<LatVec> {
        let (k, d) = (self.k(), self.d());
        let mut out = Vec::new();
        for p in 0..k.saturating_sub(1) {
            for j in 0..d {
                let mut v = vec![0; k * d];
                v[p * d + j] = 1;
                v[(k - 1) * d + j] = -1;
                out.push(v);
            }
        }
        out
    }

    /// Generators `(1-ν) b_j^p` of `M = (1-ν)L`.
    pub fn m_generators(&self) -> Vec<LatVec> {
        let n = self.lattice.rank();
        (0..n)
            .map(|i| {
                let e = unit(n, i);
                let ne = self.nu.apply(&e, 1);
                e.iter().zip(&ne).map(|(a, b)| a - b).collect()
            })
            .collect()
    }

    /// `N = M` as sublattices of `L`, compared through Hermite normal forms.
    pub fn n_equals_m(&self) -> bool {
        let n = self.n_generators();
        let m = self.m_generators();
        if n.is_empty() {
            return m.iter().all(|v| v.iter().all(|&x| x == 0));
        }
        hermite_normal_form(&n) == hermite_normal_form(&m)
    }

    /// `k⟨ā₍₀₎,ā₍₀₎⟩/2` as a rational, for `ā = α`.
    pub fn diag_norm_half(&self, alpha: &[i64]) -> Rat {
        let s = self.lattice.inner_int(&self.nu.orbit_sum(alpha), alpha);
        rat(s, 2 * self.k() as i64)
    }
}

pub fn unit(n: usize, i: usize) -> LatVec {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exts() -> Vec<Extension> {
        let mut v = Vec::new();
        for k in 1..=6 {
            v.push(Extension::new(&Lattice::a1(), k));
            v.push(Extension::new(&Lattice::a2(), k));
        }
        v
    }

    #[test]
    fn commutator_examples() {
        let e = Extension::new(&Lattice::a1(), 2);
        assert!(e.commutator_c0(&[1, 0], &[1, 0]).is_one());
        assert!(e.commutator_c(&[1, 0], &[0, 1]).is_one());
        let e1 = Extension::new(&Lattice::a2(), 1);
        assert_eq!(e1.commutator_c0(&[1, 0], &[0, 1]), e1.field().int(-1));
        assert!(e1.commutator_c0(&[1, 0], &[0, 0]).is_one());
    }

    #[test]
    fn c_oracle_term_by_term() {
        for e in exts() {
            let f = e.field();
            let n = e.lattice().rank();
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (unit(n, i), unit(n, j));
                    let mut prod = f.one();
                    for p in 0..e.k() as i64 {
                        let base = -f.eta(p);
                        let ex = e.lattice().inner_int(&e.nu().apply(&a, p), &b);
                        prod = &prod * &base.pow(ex);
                    }
                    assert_eq!(e.commutator_c(&a, &b), prod);
                }
            }
        }
    }

    #[test]
    fn section_commutators_on_basis() {
        for e in exts() {
            let n = e.lattice().rank();
            for i in 0..n {
                for j in 0..n {
                    let a = CentralElem::new(unit(n, i), 0);
                    let b = CentralElem::new(unit(n, j), 0);
                    assert_eq!(
                        e.group_commutator_exp(Section::Untwisted, &a, &b),
                        e.c0_exp(&a.base, &b.base)
                    );
                    assert_eq!(
                        e.group_commutator_exp(Section::Twisted, &a, &b),
                        e.c_exp(&a.base, &b.base)
                    );
                }
            }
        }
    }

    #[test]
    fn n_is_radical_and_equals_m() {
        for e in exts() {
            assert!(e.n_equals_m(), "k = {}", e.k());
            let gens = e.n_generators();
            for a in &gens {
                for b in &gens {
                    assert_eq!(e.c_exp(a, b), 0);
                }
            }
        }
    }

    #[test]
    fn nu_hat_lift_properties() {
        for e in exts() {
            let n = e.lattice().rank();
            for i in 0..n {
                for j in 0..n {
                    for s in [Section::Untwisted, Section::Twisted] {
                        assert_eq!(e.transport_defect(s, &unit(n, i), &unit(n, j)), 0);
                    }
                }
                let a = CentralElem::new(unit(n, i), 1);
                assert_eq!(e.nu_hat_pow(&a, e.k()), a);
            }
            let d = e.d();
            let diag: LatVec = (0..n).map(|i| if i % d == 0 { 2 } else { -1 }).collect();
            let a = CentralElem::new(diag, 1);
            assert_eq!(e.nu_hat(&a), a);
        }
    }

    #[test]
    fn sigma_examples() {
        let e1 = Extension::new(&Lattice::a1(), 1);
        assert!(e1.sigma(&[1]).is_one());
        let e = Extension::new(&Lattice::a1(), 2);
        assert!(e.sigma(&[1, 0]).is_one());
        assert_eq!(e.sigma(&[1, 1]), e.field().int(4));
        for e in exts() {
            let n = e.lattice().rank();
            let a: LatVec = (0..n as i64).map(|i| (i * 7 % 5) - 2).collect();
            assert_eq!(e.sigma(&e.nu().apply(&a, 1)), e.sigma(&a));
        }
    }

    #[test]
    fn tau_examples() {
        for e in exts() {
            let f = e.field();
            let id = e.identity();
            assert!(e.tau(&id).unwrap().is_one());
            let eta0 = CentralElem::new(id.base.clone(), f.eta0_exp());
            assert_eq!(e.tau(&eta0).unwrap(), f.eta0());
            if e.k() > 1 {
                assert!(e.tau(&CentralElem::new(unit(e.lattice().rank(), 0), 0)).is_err());
            }
        }
    }

    fn arb_ext_vec() -> impl Strategy<Value = (usize, bool, Vec<i64>, Vec<i64>, Vec<i64>)> {
        (1usize..7, any::<bool>()).prop_flat_map(|(k, a2)| {
            let n = k * if a2 { 2 } else { 1 };
            (
                Just(k),
                Just(a2),
                proptest::collection::vec(-3i64..4, n),
                proptest::collection::vec(-3i64..4, n),
                proptest::collection::vec(-3i64..4, n),
            )
        })
    }

    fn ext_for(k: usize, a2: bool) -> Extension {
        Extension::new(&if a2 { Lattice::a2() } else { Lattice::a1() }, k)
    }

    proptest! {
        #[test]
        fn commutator_maps((k, a2, a, b, c) in arb_ext_vec()) {
            let e = ext_for(k, a2);
            let f = e.field();
            prop_assert_eq!(e.c_exp(&a, &a), 0);
            prop_assert_eq!(e.c0_exp(&a, &a), 0);
            prop_assert_eq!(f.reduce(e.c_exp(&a, &b) + e.c_exp(&b, &a)), 0);
            let bc: LatVec = b.iter().zip(&c).map(|(x, y)| x + y).collect();
            prop_assert_eq!(e.c_exp(&a, &bc), f.reduce(e.c_exp(&a, &b) + e.c_exp(&a, &c)));
            prop_assert_eq!(e.c_exp(&e.nu().apply(&a, 1), &e.nu().apply(&b, 1)), e.c_exp(&a, &b));
            prop_assert_eq!(e.c0_exp(&e.nu().apply(&a, 1), &e.nu().apply(&b, 1)), e.c0_exp(&a, &b));
        }

        #[test]
        fn group_laws((k, a2, a, b, c) in arb_ext_vec(), s in 0i64..12, t in 0i64..12) {
            let e = ext_for(k, a2);
            let x = CentralElem::new(a.clone(), s);
            let y = CentralElem::new(b.clone(), t);
            let z = CentralElem::new(c.clone(), 0);
            for sec in [Section::Untwisted, Section::Twisted] {
                let l = e.ext_mul(sec, &e.ext_mul(sec, &x, &y), &z);
                let r = e.ext_mul(sec, &x, &e.ext_mul(sec, &y, &z));
                prop_assert_eq!(l, r);
                let inv = e.ext_inv(sec, &x);
                let mut xr = x.clone();
                xr.phase = e.field().reduce(xr.phase);
                prop_assert_eq!(e.ext_mul(sec, &x, &inv), e.identity());
                prop_assert_eq!(e.ext_mul(sec, &inv, &x), e.identity());
                // ν̂ is an automorphism
                prop_assert_eq!(
                    e.nu_hat(&e.ext_mul(sec, &x, &y)),
                    e.ext_mul(sec, &e.nu_hat(&x), &e.nu_hat(&y))
                );
            }
            let commutator = e.group_commutator_exp(Section::Twisted, &x, &y);
            prop_assert_eq!(commutator, e.c_exp(&a, &b));
            // ratio of the two group laws
            let u = e.ext_mul(Section::Untwisted, &x, &y);
            let w = e.ext_mul(Section::Twisted, &x, &y);
            let mut oracle = 0;
            for j in 1..k as i64 {
                if 2 * j < k as i64 {
                    oracle += (k as i64 + 2 * j) * e.lattice().inner_int(&e.nu().apply(&a, -j), &b);
                }
            }
            prop_assert_eq!(e.field().reduce(u.phase - w.phase), e.field().reduce(oracle));
        }

        #[test]
        fn tau_character((k, a2, a, b, _c) in arb_ext_vec(), s in 0i64..12, t in 0i64..12) {
            let e = ext_for(k, a2);
            let f = e.field();
            // project into N by a ↦ (1-ν)a
            let into_n = |v: &LatVec| -> LatVec {
                let nv = e.nu().apply(v, 1);
                v.iter().zip(&nv).map(|(x, y)| x - y).collect()
            };
            let x = CentralElem::new(into_n(&a), 2 * s);
            let y = CentralElem::new(into_n(&b), 2 * t);
            let xy = e.ext_mul(Section::Twisted, &x, &y);
            prop_assert_eq!(
                e.tau_exp(&xy).unwrap(),
                f.reduce(e.tau_exp(&x).unwrap() + e.tau_exp(&y).unwrap())
            );
            // defining value on a ν̂(a)⁻¹, for a lift of an arbitrary α
            let lift = CentralElem::new(a.clone(), s);
            let m = e.ext_mul(Section::Twisted, &lift, &e.ext_inv(Section::Twisted, &e.nu_hat(&lift)));
            let norm = e.lattice().inner_int(&e.nu().orbit_sum(&a), &a);
            prop_assert_eq!(e.tau_exp(&m).unwrap(), f.eta_exp(-norm / 2));
        }
    }
}
