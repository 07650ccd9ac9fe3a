//! Fock spaces: `V_K`, `V_L` and the twisted space `V_L^T = S[ν] ⊗ U_T`.
//!
//! A state is a finite combination of monomials `b_{i₁}(n₁)…b_{i_r}(n_r) ⊗ g`
//! with creation modes `n < 0` and a ground label `g`:
//!
//! * `V_K`: `g = α ∈ K` stands for `ι(e_α)`, modes `b_j(n)` with
//!   `[b_i(m), b_j(n)] = ⟨b_i,b_j⟩ m δ_{m+n,0}`.
//! * `V_L`: the same over `L = K^{⊕k}` in the copy-major basis.
//! * `V_L^T`: `g = κ ∈ K` stands for `u_κ = e_{(κ,0,…,0)} ⊗ 1 ∈ U_T`, whose
//!   `𝔥₍₀₎`-weight is `(1/k)(κ,…,κ)`; modes are
//!   `t_j(n) = (b_j^1)_{(kn)}(n)` for `n ∈ (1/k)Z`, with
//!   `[t_i(m), t_j(n)] = (⟨b_i,b_j⟩/k) m δ_{m+n,0}`.
//!
//! Every operator here acts exactly on finite states.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::cocycle::{CentralElem, Extension, Section};
use crate::exact::{exp_to_rat, rat, rat_int, Cyc, Exp, Rat, RootField};
use crate::lattice::{LatVec, Lattice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sector {
    /// `V_K`, one tensor factor.
    K,
    /// `V_L = V_K^{⊗k}`.
    L,
    /// The twisted module `V_L^T`.
    Twisted,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::K => "V_K",
            Sector::L => "V_L",
            Sector::Twisted => "V_L^T",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FockError {
    #[error("sector mismatch: expected {expected}, found {found}")]
    SectorMismatch { expected: Sector, found: Sector },
    #[error("mode {0} is not allowed in {1}")]
    BadMode(Exp, Sector),
    #[error("state is not homogeneous")]
    NotHomogeneous,
    #[error("operator input is not supported: {0}")]
    Unsupported(String),
}

/// A Heisenberg mode `b_idx(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode {
    pub n: Exp,
    pub idx: usize,
}

/// A Fock monomial: creation modes (sorted) on a ground label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono {
    pub modes: Vec<Mode>,
    pub ground: LatVec,
}

impl Mono {
    pub fn ground(ground: LatVec) -> Self {
        Mono { modes: Vec::new(), ground }
    }

    /// Excitation level `Σ -n` over the creation modes.
    pub fn level(&self) -> Exp {
        self.modes.iter().fold(Exp::zero(), |acc, m| acc - m.n)
    }
}

/// A finite linear combination of monomials in one sector.
#[derive(Clone, PartialEq, Eq)]
pub struct StateVector {
    sector: Sector,
    terms: BTreeMap<Mono, Cyc>,
}

impl StateVector {
    pub fn zero(sector: Sector) -> Self {
        StateVector { sector, terms: BTreeMap::new() }
    }

    pub fn from_mono(sector: Sector, mono: Mono, coeff: Cyc) -> Self {
        let mut s = Self::zero(sector);
        s.add_term(mono, coeff);
        s
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Cyc)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, mono: &Mono) -> Option<&Cyc> {
        self.terms.get(mono)
    }

    pub fn add_term(&mut self, mono: Mono, coeff: Cyc) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &StateVector) {
        assert_eq!(self.sector, other.sector, "adding states of different sectors");
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn add_scaled(&mut self, other: &StateVector, s: &Cyc) {
        assert_eq!(self.sector, other.sector, "adding states of different sectors");
        if s.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
    }

    pub fn scale(&self, s: &Cyc) -> StateVector {
        let mut out = Self::zero(self.sector);
        out.add_scaled(self, s);
        out
    }

    pub fn scale_rat(&self, r: &Rat) -> StateVector {
        StateVector {
            sector: self.sector,
            terms: if r.is_zero() {
                BTreeMap::new()
            } else {
                self.terms.iter().map(|(m, c)| (m.clone(), c.scale(r))).collect()
            },
        }
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn plus(&self, other: &StateVector) -> StateVector {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    /// Maximal excitation level among the monomials.
    pub fn max_level(&self) -> Exp {
        self.terms.keys().map(|m| m.level()).max().unwrap_or_else(Exp::zero)
    }

    /// Applies `f` to every monomial and sums the scaled results.
    pub fn map_monos<F>(&self, sector: Sector, mut f: F) -> StateVector
    where
        F: FnMut(&Mono) -> StateVector,
    {
        let mut out = StateVector::zero(sector);
        for (m, c) in &self.terms {
            let img = f(m);
            out.add_scaled(&img, c);
        }
        out
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c)?;
            for md in &m.modes {
                write!(f, " b{}({})", md.idx, md.n)?;
            }
            write!(f, " |{:?}>", m.ground)?;
        }
        Ok(())
    }
}

/// Shared data for all three Fock spaces of one `(K, k)` pair.
#[derive(Debug)]
pub struct Model {
    k: usize,
    d: usize,
    k_lattice: Lattice,
    ext: Extension,
    gram_inv_k: Vec<Vec<Rat>>,
    eps_k: Vec<Vec<i64>>,
    vacuum_shift: Exp,
}

impl Model {
    pub fn new(k_lattice: &Lattice, k: usize) -> Arc<Self> {
        let d = k_lattice.rank();
        let ext = Extension::new(k_lattice, k);
        let field = ext.field().clone();
        let mut eps_k = vec![vec![0; d]; d];
        for (i, row) in eps_k.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate().take(i) {
                *e = field.reduce(field.minus_one_exp() * k_lattice.gram()[i][j]);
            }
        }
        let kk = k as i64;
        Arc::new(Model {
            k,
            d,
            k_lattice: k_lattice.clone(),
            gram_inv_k: k_lattice.gram_inverse(),
            ext,
            eps_k,
            vacuum_shift: Exp::new((kk * kk - 1) * d as i64, 24 * kk),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn field(&self) -> &RootField {
        self.ext.field()
    }

    pub fn k_lattice(&self) -> &Lattice {
        &self.k_lattice
    }

    pub fn l_lattice(&self) -> &Lattice {
        self.ext.lattice()
    }

    pub fn ext(&self) -> &Extension {
        &self.ext
    }

    pub fn gram_inv_k(&self) -> &[Vec<Rat>] {
        &self.gram_inv_k
    }

    /// `(k²-1)d/24k`, the weight of the twisted vacuum.
    pub fn vacuum_shift(&self) -> Exp {
        self.vacuum_shift
    }

    /// Number of Heisenberg generators in `sector`.
    pub fn n_gens(&self, sector: Sector) -> usize {
        match sector {
            Sector::K | Sector::Twisted => self.d,
            Sector::L => self.k * self.d,
        }
    }

    /// Number of coordinates of the ground label and of field vectors
    /// (`d` for `V_K`, `kd` for `V_L` and `V_L^T`).
    pub fn vec_len(&self, sector: Sector) -> usize {
        match sector {
            Sector::K => self.d,
            Sector::L | Sector::Twisted => self.k * self.d,
        }
    }

    /// Spacing of the mode grid.
    pub fn step(&self, sector: Sector) -> Exp {
        match sector {
            Sector::Twisted => Exp::new(1, self.k as i64),
            _ => Exp::one(),
        }
    }

    pub fn on_grid(&self, sector: Sector, n: Exp) -> bool {
        (n / self.step(sector)).is_integer()
    }

    /// Structure constant `B_ij` in `[b_i(m), b_j(-m)] = B_ij m`.
    pub fn bracket(&self, sector: Sector, i: usize, j: usize) -> Rat {
        match sector {
            Sector::K => rat_int(self.k_lattice.gram()[i][j]),
            Sector::L => rat_int(self.l_lattice().gram()[i][j]),
            Sector::Twisted => rat(self.k_lattice.gram()[i][j], self.k as i64),
        }
    }

    /// Eigenvalue of the zero mode `b_idx(0)` on a ground label.
    pub fn zero_mode_value(&self, sector: Sector, idx: usize, ground: &[i64]) -> Rat {
        match sector {
            Sector::K => rat_int(self.k_lattice.inner_int(&unit(self.d, idx), ground)),
            Sector::L => rat_int(self.l_lattice().inner_int(&unit(self.k * self.d, idx), ground)),
            Sector::Twisted => rat(
                self.k_lattice.inner_int(&unit(self.d, idx), ground),
                self.k as i64,
            ),
        }
    }

    /// `⟨h, label⟩` for an integral `h` in the sector's vector coordinates:
    /// the exponent produced by `x^h`. In `V_L^T` the label is
    /// `(1/k)(κ,…,κ)`, so this is `⟨Σ_p h_p, κ⟩/k`.
    pub fn label_pairing(&self, sector: Sector, h: &[i64], ground: &[i64]) -> Exp {
        match sector {
            Sector::K => Exp::from_integer(self.k_lattice.inner_int(h, ground)),
            Sector::L => Exp::from_integer(self.l_lattice().inner_int(h, ground)),
            Sector::Twisted => Exp::new(
                self.k_lattice.inner_int(&self.ext.nu().block_sum(h), ground),
                self.k as i64,
            ),
        }
    }

    /// Conformal weight of a ground label (excluding the twisted shift).
    pub fn ground_weight(&self, sector: Sector, ground: &[i64]) -> Exp {
        match sector {
            Sector::K => Exp::new(self.k_lattice.norm_int(ground), 2),
            Sector::L => Exp::new(self.l_lattice().norm_int(ground), 2),
            Sector::Twisted => Exp::new(self.k_lattice.norm_int(ground), 2 * self.k as i64),
        }
    }

    pub fn vacuum(&self, sector: Sector) -> StateVector {
        self.ground_state(sector, vec![0; self.ground_len(sector)])
    }

    pub fn ground_len(&self, sector: Sector) -> usize {
        match sector {
            Sector::K | Sector::Twisted => self.d,
            Sector::L => self.k * self.d,
        }
    }

    pub fn ground_state(&self, sector: Sector, ground: LatVec) -> StateVector {
        StateVector::from_mono(sector, Mono::ground(ground), self.field().one())
    }

    pub fn mono_state(&self, sector: Sector, mono: Mono) -> StateVector {
        StateVector::from_mono(sector, mono, self.field().one())
    }

    fn check(&self, sector: Sector, v: &StateVector) -> Result<(), FockError> {
        if v.sector() != sector {
            return Err(FockError::SectorMismatch { expected: sector, found: v.sector() });
        }
        Ok(())
    }

    /// The basis mode `b_idx(n)` applied to `v`.
    pub fn apply_mode(&self, idx: usize, n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        let sector = v.sector();
        if !self.on_grid(sector, n) {
            return Err(FockError::BadMode(n, sector));
        }
        let mut out = StateVector::zero(sector);
        for (m, c) in v.terms() {
            self.apply_mode_mono(sector, idx, n, m, c, &mut out);
        }
        Ok(out)
    }

    fn apply_mode_mono(&self, sector: Sector, idx: usize, n: Exp, m: &Mono, c: &Cyc, out: &mut StateVector) {
        if n < Exp::zero() {
            let mut modes = m.modes.clone();
            let md = Mode { n, idx };
            let pos = modes.partition_point(|x| *x < md);
            modes.insert(pos, md);
            out.add_term(Mono { modes, ground: m.ground.clone() }, c.clone());
        } else if n.is_zero() {
            let z = self.zero_mode_value(sector, idx, &m.ground);
            if !z.is_zero() {
                out.add_term(m.clone(), c.scale(&z));
            }
        } else {
            let nr = exp_to_rat(n);
            let mut prev: Option<Mode> = None;
            for (q, md) in m.modes.iter().enumerate() {
                if md.n != -n {
                    continue;
                }
                let b = self.bracket(sector, idx, md.idx);
                if b.is_zero() {
                    continue;
                }
                // equal neighbours give the same monomial; count multiplicity
                if prev == Some(*md) {
                    continue;
                }
                prev = Some(*md);
                let mult = m.modes[q..].iter().take_while(|x| *x == md).count();
                let mut modes = m.modes.clone();
                modes.remove(q);
                let s = &b * &nr * rat_int(mult as i64);
                out.add_term(Mono { modes, ground: m.ground.clone() }, c.scale(&s));
            }
        }
    }

    /// The mode `h(n)` of a vector `h` given in the sector's vector
    /// coordinates. In `V_L^T` this is `h^T(n) = h_{(kn)}(n)`, i.e.
    /// `Σ_{p,j} h_{p,j} η^{-knp} t_j(n)`.
    pub fn apply_vec_mode(&self, h: &[Cyc], n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        let sector = v.sector();
        let coeffs = self.vec_mode_coeffs(sector, h, n)?;
        let mut out = StateVector::zero(sector);
        for (idx, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let part = self.apply_mode(idx, n, v)?;
            out.add_scaled(&part, c);
        }
        Ok(out)
    }

    /// Coefficients of `h(n)` on the basis modes of `sector`.
    pub fn vec_mode_coeffs(&self, sector: Sector, h: &[Cyc], n: Exp) -> Result<Vec<Cyc>, FockError> {
        if !self.on_grid(sector, n) {
            return Err(FockError::BadMode(n, sector));
        }
        match sector {
            Sector::K | Sector::L => Ok(h.to_vec()),
            Sector::Twisted => {
                let f = self.field();
                let r = (n * Exp::from_integer(self.k as i64)).to_integer();
                let mut out = vec![f.zero(); self.d];
                for p in 0..self.k {
                    let phase = f.eta(-r * p as i64);
                    for (j, o) in out.iter_mut().enumerate() {
                        let c = &h[p * self.d + j];
                        if !c.is_zero() {
                            *o += &(&phase * c);
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// The lattice part `a · g` of an operator: `e_β ι(e_γ) = ε(β,γ) ι(e_{β+γ})`
    /// in `V_K` and `V_L`, and the induced action on `U_T` in `V_L^T`.
    pub fn apply_group(&self, a: &CentralElem, v: &StateVector) -> StateVector {
        let sector = v.sector();
        let mut out = StateVector::zero(sector);
        for (m, c) in v.terms() {
            let (ground, phase) = self.group_on_ground(sector, a, &m.ground);
            out.add_term(
                Mono { modes: m.modes.clone(), ground },
                c * &self.field().zeta(phase),
            );
        }
        out
    }

    /// Image of a ground label under `a`, with the phase as an exponent of
    /// `ζ_{2k}`.
    pub fn group_on_ground(&self, sector: Sector, a: &CentralElem, ground: &[i64]) -> (LatVec, i64) {
        let f = self.field();
        match sector {
            Sector::K => {
                let mut e = a.phase;
                for (i, ai) in a.base.iter().enumerate() {
                    for (j, gj) in ground.iter().enumerate() {
                        e += ai * gj * self.eps_k[i][j];
                    }
                }
                let g = a.base.iter().zip(ground).map(|(x, y)| x + y).collect();
                (g, f.reduce(e))
            }
            Sector::L => {
                let e = a.phase + self.ext.eps(Section::Untwisted, &a.base, ground);
                let g = a.base.iter().zip(ground).map(|(x, y)| x + y).collect();
                (g, f.reduce(e))
            }
            Sector::Twisted => {
                let nu = self.ext.nu();
                let rep = CentralElem::new(nu.embed(ground, 0), 0);
                let prod = self.ext.ext_mul(Section::Twisted, a, &rep);
                let kappa: LatVec = ground
                    .iter()
                    .zip(nu.block_sum(&a.base))
                    .map(|(x, y)| x + y)
                    .collect();
                let new_rep = CentralElem::new(nu.embed(&kappa, 0), 0);
                let n = self.ext.ext_mul(
                    Section::Twisted,
                    &self.ext.ext_inv(Section::Twisted, &new_rep),
                    &prod,
                );
                let t = self
                    .ext
                    .tau_exp(&n)
                    .expect("coset representatives differ by an element of N");
                (kappa, t)
            }
        }
    }

    /// Conformal weight of a homogeneous state; includes the vacuum shift in
    /// the twisted sector.
    pub fn weight(&self, v: &StateVector) -> Result<Rat, FockError> {
        let mut w: Option<Exp> = None;
        for (m, _) in v.terms() {
            let wm = self.mono_weight(v.sector(), m);
            if w.is_some_and(|x| x != wm) {
                return Err(FockError::NotHomogeneous);
            }
            w = Some(wm);
        }
        let w = w.unwrap_or_else(Exp::zero);
        Ok(exp_to_rat(w))
    }

    pub fn mono_weight(&self, sector: Sector, m: &Mono) -> Exp {
        let base = m.level() + self.ground_weight(sector, &m.ground);
        match sector {
            Sector::Twisted => base + self.vacuum_shift,
            _ => base,
        }
    }

    /// Sugawara `L(j) = ½ Σ G^{-1}_{ab} Σ_m :b_a(m) b_b(j-m):` on `V_K` or `V_L`.
    pub fn virasoro_l(&self, j: i64, v: &StateVector) -> Result<StateVector, FockError> {
        let sector = v.sector();
        if sector == Sector::Twisted {
            return Err(FockError::SectorMismatch { expected: Sector::K, found: sector });
        }
        let ginv = self.gram_inverse(sector);
        let n = ginv.len();
        let top = v.max_level().to_integer();
        let half = rat(1, 2);
        let mut out = StateVector::zero(sector);
        for m in (j - top - 1)..=(top + 1) {
            let (lo, hi) = if m <= j - m { (m, j - m) } else { (j - m, m) };
            if hi > 0 && hi > top {
                continue;
            }
            for b in 0..n {
                // the mode with the larger index acts first
                let first_is_b = hi == j - m;
                let first_idx_mode = Exp::from_integer(hi);
                let second_mode = Exp::from_integer(lo);
                let mut part_b = StateVector::zero(sector);
                for a in 0..n {
                    if ginv[a][b].is_zero() {
                        continue;
                    }
                    let (first, second) = if first_is_b { (b, a) } else { (a, b) };
                    let w1 = self.apply_mode(first, first_idx_mode, v)?;
                    if w1.is_zero() {
                        continue;
                    }
                    let w2 = self.apply_mode(second, second_mode, &w1)?;
                    part_b.add_assign(&w2.scale_rat(&(&ginv[a][b] * &half)));
                }
                out.add_assign(&part_b);
            }
        }
        Ok(out)
    }

    fn gram_inverse(&self, sector: Sector) -> Vec<Vec<Rat>> {
        match sector {
            Sector::K | Sector::Twisted => self.gram_inv_k.clone(),
            Sector::L => {
                let d = self.d;
                let mut g = vec![vec![Rat::zero(); self.k * d]; self.k * d];
                for p in 0..self.k {
                    for i in 0..d {
                        for j in 0..d {
                            g[p * d + i][p * d + j] = self.gram_inv_k[i][j].clone();
                        }
                    }
                }
                g
            }
        }
    }

    /// `L^ν̂(0) = ½ Σ_i Σ_{n ∈ (1/k)Z} β_i^T(-|n|) (β_i^*)^T(|n|) + (k²-1)d/24k`
    /// over a basis `{β_i}` of `𝔥` and its dual basis, evaluated through the
    /// twisted modes (not through the grading).
    pub fn twisted_l0(&self, v: &StateVector) -> Result<StateVector, FockError> {
        self.check(Sector::Twisted, v)?;
        let f = self.field();
        let kd = self.k * self.d;
        let ginv = self.gram_inverse(Sector::L);
        let top = v.max_level();
        let step = self.step(Sector::Twisted);
        let mut out = v.scale_rat(&exp_to_rat(self.vacuum_shift));
        for i in 0..kd {
            let beta: Vec<Cyc> = (0..kd).map(|x| if x == i { f.one() } else { f.zero() }).collect();
            let dual: Vec<Cyc> = (0..kd).map(|x| f.from_rat(ginv[i][x].clone())).collect();
            // zero modes, weight ½
            let z = self.apply_vec_mode(&dual, Exp::zero(), v)?;
            let z = self.apply_vec_mode(&beta, Exp::zero(), &z)?;
            out.add_assign(&z.scale_rat(&rat(1, 2)));
            let mut n = step;
            while n <= top {
                let w = self.apply_vec_mode(&dual, n, v)?;
                if !w.is_zero() {
                    let w = self.apply_vec_mode(&beta, -n, &w)?;
                    out.add_assign(&w);
                }
                n += step;
            }
        }
        Ok(out)
    }

    /// The conformal vector `ω = ½ Σ G^{-1}_{ab} b_a(-1) b_b(-1) 𝟏` of `V_K`
    /// or `V_L`.
    pub fn omega(&self, sector: Sector) -> StateVector {
        let ginv = self.gram_inverse(sector);
        let mut out = StateVector::zero(sector);
        let vac = self.vacuum(sector);
        for (a, row) in ginv.iter().enumerate() {
            for (b, g) in row.iter().enumerate() {
                if g.is_zero() {
                    continue;
                }
                let s = self
                    .apply_mode(b, -Exp::one(), &vac)
                    .and_then(|s| self.apply_mode(a, -Exp::one(), &s))
                    .expect("integral modes");
                out.add_assign(&s.scale_rat(&(g * rat(1, 2))));
            }
        }
        out
    }

    /// Embeds a `V_K` state into tensor slot `slot` (zero-based) of `V_L`.
    pub fn to_slot(&self, v: &StateVector, slot: usize) -> Result<StateVector, FockError> {
        self.check(Sector::K, v)?;
        let nu = self.ext.nu();
        let mut out = StateVector::zero(Sector::L);
        for (m, c) in v.terms() {
            let modes = m
                .modes
                .iter()
                .map(|md| Mode { n: md.n, idx: slot * self.d + md.idx })
                .collect();
            out.add_term(Mono { modes, ground: nu.embed(&m.ground, slot) }, c.clone());
        }
        Ok(out)
    }

    /// The automorphism `ν̂` of `V_L`: it sends slot `p+1` to slot `p`.
    pub fn nu_hat_state(&self, v: &StateVector) -> Result<StateVector, FockError> {
        self.check(Sector::L, v)?;
        let nu = self.ext.nu();
        let (k, d) = (self.k, self.d);
        let mut out = StateVector::zero(Sector::L);
        for (m, c) in v.terms() {
            let mut modes: Vec<Mode> = m
                .modes
                .iter()
                .map(|md| {
                    let (p, j) = (md.idx / d, md.idx % d);
                    Mode { n: md.n, idx: ((p + k - 1) % k) * d + j }
                })
                .collect();
            modes.sort();
            let g = self.ext.nu_hat(&CentralElem::new(m.ground.clone(), 0));
            let phase = self.field().zeta(g.phase);
            out.add_term(Mono { modes, ground: nu.apply(&m.ground, 1) }, c * &phase);
        }
        Ok(out)
    }

    /// All monomials of `sector` whose weight (excluding the twisted vacuum
    /// shift) is at most `cutoff`, sorted.
    pub fn basis(&self, sector: Sector, cutoff: Exp) -> Vec<Mono> {
        let step = self.step(sector);
        let grounds: Vec<LatVec> = match sector {
            Sector::K | Sector::Twisted => {
                let scale = if sector == Sector::Twisted { self.k as i64 } else { 1 };
                self.k_lattice
                    .enumerate_up_to_norm(&(exp_to_rat(cutoff) * rat_int(scale)))
            }
            Sector::L => self.l_lattice().enumerate_up_to_norm(&exp_to_rat(cutoff)),
        };
        let ngen = self.n_gens(sector);
        let mut out = Vec::new();
        for g in grounds {
            let budget = cutoff - self.ground_weight(sector, &g);
            if budget < Exp::zero() {
                continue;
            }
            let units = (budget / step).to_integer();
            let mut acc = Vec::new();
            mode_multisets(units, units, ngen, &mut acc, &mut |modes_units| {
                let modes = modes_units
                    .iter()
                    .rev()
                    .map(|&(u, idx)| Mode { n: -step * Exp::from_integer(u), idx })
                    .collect::<Vec<_>>();
                let mut modes = modes;
                modes.sort();
                out.push(Mono { modes, ground: g.clone() });
            });
        }
        out.sort();
        out
    }
}

/// Enumerates multisets of `(units, idx)` pairs in non-increasing order with
/// total units at most `budget` and each part at most `max_part`.
fn mode_multisets<F: FnMut(&[(i64, usize)])>(
    budget: i64,
    max_part: i64,
    ngen: usize,
    acc: &mut Vec<(i64, usize)>,
    emit: &mut F,
) {
    emit(acc);
    let last = acc.last().copied();
    for u in (1..=max_part.min(budget)).rev() {
        for idx in 0..ngen {
            if let Some((lu, li)) = last {
                if (u, idx) > (lu, li) {
                    continue;
                }
            }
            acc.push((u, idx));
            mode_multisets(budget - u, u, ngen, acc, emit);
            acc.pop();
        }
    }
}

pub fn unit(n: usize, i: usize) -> LatVec {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// `Σ_{j=1}^{k-1} j(k-j)`.
pub fn weight_identity_lhs(k: i64) -> i64 {
    (1..k).map(|j| j * (k - j)).sum()
}

/// Sign-free helper: `true` if `r` is a nonnegative integer.
pub fn is_natural(r: &Rat) -> bool {
    r.is_integer() && !r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(k: usize, a2: bool) -> Arc<Model> {
        Model::new(&if a2 { Lattice::a2() } else { Lattice::a1() }, k)
    }

    fn e(n: i64, d: i64) -> Exp {
        Exp::new(n, d)
    }

    #[test]
    fn twisted_bracket_example() {
        for k in 1..=4 {
            let m = model(k, false);
            let f = m.field();
            let vac = m.vacuum(Sector::Twisted);
            let s = m.apply_mode(0, e(-1, k as i64), &vac).unwrap();
            let s = m.apply_mode(0, e(1, k as i64), &s).unwrap();
            // ⟨b,b⟩/k · (1/k) with ⟨b,b⟩ = 2
            assert_eq!(s, vac.scale(&f.from_rat(rat(2, (k * k) as i64))));
        }
    }

    #[test]
    fn twisted_bracket_from_projections() {
        // ⟨(b_i^1)_{(r)}, (b_j^1)_{(-r)}⟩ computed in ambient coordinates
        for (k, a2) in [(2, false), (3, true), (4, false)] {
            let m = model(k, a2);
            let f = m.field();
            let nu = m.ext().nu();
            let l = m.l_lattice();
            for r in 0..k as i64 {
                for i in 0..m.d() {
                    for j in 0..m.d() {
                        let bi = crate::lattice::to_amb(f, &nu.embed(&unit(m.d(), i), 0));
                        let bj = crate::lattice::to_amb(f, &nu.embed(&unit(m.d(), j), 0));
                        let pi = nu.eigenprojection(f, &bi, r);
                        let pj = nu.eigenprojection(f, &bj, -r);
                        let ip = l.inner(&pi, &pj).unwrap();
                        assert_eq!(ip, f.from_rat(m.bracket(Sector::Twisted, i, j)));
                    }
                }
            }
        }
    }

    #[test]
    fn untwisted_examples() {
        let m = model(2, false);
        let f = m.field();
        let vac = m.vacuum(Sector::L);
        let s = m.apply_mode(0, e(-1, 1), &vac).unwrap();
        let s = m.apply_mode(0, e(1, 1), &s).unwrap();
        assert_eq!(s, vac.scale(&f.int(2)));
        let g = m.ground_state(Sector::K, vec![3]);
        let z = m.apply_mode(0, Exp::zero(), &g).unwrap();
        assert_eq!(z, g.scale(&f.int(6)));
        assert!(m.apply_mode(0, e(1, 2), &g).is_err());
    }

    #[test]
    fn weights() {
        let m = model(3, false);
        assert_eq!(m.weight(&m.vacuum(Sector::Twisted)).unwrap(), rat(1, 9));
        assert_eq!(m.weight(&m.ground_state(Sector::K, vec![1])).unwrap(), rat_int(1));
        let m2 = model(2, false);
        let s = m2.apply_mode(0, e(-1, 2), &m2.vacuum(Sector::Twisted)).unwrap();
        assert_eq!(m2.weight(&s).unwrap(), rat(9, 16));
        let mixed = m2.vacuum(Sector::K).plus(&m2.ground_state(Sector::K, vec![1]));
        assert_eq!(m2.weight(&mixed), Err(FockError::NotHomogeneous));
        for k in 1..=12i64 {
            assert_eq!(weight_identity_lhs(k), k * (k * k - 1) / 6);
        }
    }

    #[test]
    fn virasoro_examples() {
        for a2 in [false, true] {
            let m = model(2, a2);
            let f = m.field();
            let d = m.d() as i64;
            let g = m.ground_state(Sector::K, if a2 { vec![1, -1] } else { vec![1] });
            let l0 = m.virasoro_l(0, &g).unwrap();
            assert_eq!(l0, g.scale(&f.from_rat(m.weight(&g).unwrap())));
            for j in 1..4 {
                assert!(m.virasoro_l(j, &g).unwrap().is_zero());
            }
            let w = m.omega(Sector::K);
            assert_eq!(m.virasoro_l(2, &w).unwrap(), m.vacuum(Sector::K).scale(&f.from_rat(rat(d, 2))));
            assert!(m.virasoro_l(1, &w).unwrap().is_zero());
            assert_eq!(m.virasoro_l(0, &w).unwrap(), w.scale(&f.int(2)));
        }
    }

    #[test]
    fn twisted_l0_examples() {
        for (k, a2) in [(2, false), (3, false), (2, true), (3, true)] {
            let m = model(k, a2);
            let f = m.field();
            for mono in m.basis(Sector::Twisted, e(2, 1)) {
                let v = m.mono_state(Sector::Twisted, mono);
                let w = m.weight(&v).unwrap();
                assert_eq!(m.twisted_l0(&v).unwrap(), v.scale(&f.from_rat(w)));
            }
        }
    }

    #[test]
    fn basis_counts() {
        let m = model(2, false);
        // V_{A1}: weight ≤ 1 → 1, b(-1), e^{±α}
        assert_eq!(m.basis(Sector::K, e(1, 1)).len(), 4);
        // twisted, k=2: levels 0, 1/2 (t(-1/2), u_{±1} has weight 1/2)
        assert_eq!(m.basis(Sector::Twisted, e(1, 2)).len(), 4);
    }

    #[test]
    fn u_t_relations() {
        // ν̂a = a η^{-k ā₍₀₎ - k⟨ā₍₀₎,ā₍₀₎⟩/2} on U_T
        for (k, a2) in [(2, false), (3, false), (4, false), (2, true), (3, true)] {
            let m = model(k, a2);
            let f = m.field();
            let ext = m.ext();
            let kd = k * m.d();
            let grounds = m.k_lattice().enumerate_up_to_norm(&rat_int(2));
            let bases = m.l_lattice().enumerate_up_to_norm(&rat_int(1));
            for base in &bases {
                let a = CentralElem::new(base.clone(), 0);
                let na = ext.nu_hat(&a);
                let sum = ext.nu().block_sum(base);
                for g in &grounds {
                    let u = m.ground_state(Sector::Twisted, g.clone());
                    let lhs = m.apply_group(&na, &u);
                    // η^{-k ā₍₀₎} on u_κ: ⟨k ā₍₀₎, label⟩ = ⟨Σ_p ā_p, κ⟩
                    let e1 = -m.k_lattice().inner_int(&sum, g);
                    let norm = ext.lattice().inner_int(&ext.nu().orbit_sum(base), base);
                    let phase = f.eta(e1 - norm / 2);
                    let rhs = m.apply_group(&a, &u.scale(&phase));
                    assert_eq!(lhs, rhs, "k={k} base={base:?} ground={g:?}");
                }
                // U_T action is an action of the twisted group
                for b in bases.iter().take(5) {
                    let bb = CentralElem::new(b.clone(), 1);
                    let ab = ext.ext_mul(Section::Twisted, &a, &bb);
                    let u = m.ground_state(Sector::Twisted, vec![0; m.d()]);
                    assert_eq!(
                        m.apply_group(&ab, &u),
                        m.apply_group(&a, &m.apply_group(&bb, &u))
                    );
                }
            }
            let _ = kd;
        }
    }
}
