//! Mode extraction for the vertex operators: the untwisted `Y` on `V_K` and
//! `V_L`, the space-time twisted `Y^ν̂` on `V_L^T`, the worldsheet twisted
//! `Y_ν̂` on `V_K`, and the operators `Y_K^ν̂` obtained back from either one.
//!
//! Every operator is exposed as `u_n v`, the coefficient of `x^{-n-1}` in
//! `Y(u,x)v`. All three families are instances of one normal-ordered
//! template
//!
//! ```text
//! c x^s ∘ ∏_i ∂^{(s_i-1)}α_i(x) · exp(Σ_{n>0} β(-n)x^n/n) exp(-Σ_{n>0} β(n)x^{-n}/n) · a · x^h ∘
//! ```
//!
//! whose coefficients are finite on finite states.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::cocycle::CentralElem;
use crate::coeffs::{a_coeffs, ef_apply, ef_inverse_apply, exp_delta_apply, CTable, XPolyOp};
use crate::exact::{binom_rat, exp_to_rat, rat_to_exp, Cyc, Exp, Rat};
use crate::fock::{FockError, Mode, Model, Mono, Sector, StateVector};
use crate::lattice::LatVec;

/// Default truncation for the coefficient tables.
pub const DEFAULT_TRUNCATION: usize = 8;

/// One normal-ordered monomial operator.
#[derive(Debug, Clone)]
struct Template {
    scalar: Cyc,
    shift: Exp,
    /// `(vector, s)`: the field `∂^{(s-1)} α(x) = Σ_m binom(-m-1, s-1) α(m) x^{-m-s}`.
    fields: Vec<(Vec<Cyc>, u32)>,
    beta: Vec<Cyc>,
    group: CentralElem,
    h: LatVec,
}

/// Vertex-operator engine for one `(K, k)` pair, holding the coefficient
/// tables.
#[derive(Debug, Clone)]
pub struct VertexOps {
    model: Arc<Model>,
    ctable: CTable,
    a: Vec<Rat>,
}

impl VertexOps {
    pub fn new(model: Arc<Model>) -> Self {
        Self::with_truncation(model, DEFAULT_TRUNCATION)
    }

    pub fn with_truncation(model: Arc<Model>, order: usize) -> Self {
        let ctable = CTable::new(model.field(), order);
        let a = a_coeffs(model.k(), order);
        VertexOps { model, ctable, a }
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn ctable(&self) -> &CTable {
        &self.ctable
    }

    pub fn a(&self) -> &[Rat] {
        &self.a
    }

    /// `u_n v` for the vertex operator algebra `V_K` or `V_L`.
    pub fn untwisted_mode(&self, u: &StateVector, n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        let sector = u.sector();
        if sector == Sector::Twisted {
            return Err(FockError::SectorMismatch { expected: Sector::K, found: sector });
        }
        check(sector, v)?;
        let f = self.model.field();
        let mut out = StateVector::zero(sector);
        for (m, c) in u.terms() {
            let beta: Vec<Cyc> = m.ground.iter().map(|&x| f.int(x)).collect();
            let t = Template {
                scalar: c.clone(),
                shift: Exp::zero(),
                fields: self.fields_of(m),
                beta,
                group: CentralElem::new(m.ground.clone(), 0),
                h: m.ground.clone(),
            };
            out.add_assign(&self.template_mode(&t, n, v)?);
        }
        Ok(out)
    }

    /// `W(w,x)` coefficient for `w ∈ V_L` acting on `V_L^T`.
    fn w_mode(&self, w: &StateVector, n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        let model = &self.model;
        let ext = model.ext();
        let f = model.field();
        let k = model.k() as i64;
        let mut out = StateVector::zero(Sector::Twisted);
        for (m, c) in w.terms() {
            let abar = &m.ground;
            let norm = model.l_lattice().norm_int(abar);
            let kpow = Rat::from_integer(num_bigint::BigInt::from(k).pow((norm / 2) as u32));
            let scalar = (c * &ext.sigma(abar)).scale(&kpow.recip());
            let diag = rat_to_exp(&ext.diag_norm_half(abar)).expect("small exponent");
            let t = Template {
                scalar,
                shift: diag - Exp::new(norm, 2),
                fields: self.fields_of(m),
                beta: abar.iter().map(|&x| f.int(x)).collect(),
                group: CentralElem::new(abar.clone(), 0),
                h: abar.clone(),
            };
            out.add_assign(&self.template_mode(&t, n, v)?);
        }
        Ok(out)
    }

    /// `u^ν̂_n v` for `u ∈ V_L`, `v ∈ V_L^T`, through `Y^ν̂(u,x) = W(e^{Δ_x}u, x)`.
    pub fn spacetime_twisted_mode(&self, u: &StateVector, n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        check(Sector::L, u)?;
        check(Sector::Twisted, v)?;
        let expd = exp_delta_apply(&self.model, &self.ctable, u)?;
        let mut out = StateVector::zero(Sector::Twisted);
        for (e, w) in expd.terms() {
            // x^e W(w,x): the x^{-n-1} coefficient is W's mode n + e
            out.add_assign(&self.w_mode(w, n + *e, v)?);
        }
        Ok(out)
    }

    /// `Y_ν̂(u,x)` mode on `V_K` for `u ∈ V_L` a sum of single-slot states.
    ///
    /// Slot `j` (zero-based) holds `u^{j+1} = ν̂^{-j} u^1`, whose operator is
    /// `Y_ν̂(u^1,x)` with `x^{1/k} ↦ η^j x^{1/k}`; on the `x^{-n-1}`
    /// coefficient this is the factor `η^{-jkn}`.
    pub fn worldsheet_twisted_mode(&self, u: &StateVector, n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        check(Sector::L, u)?;
        check(Sector::K, v)?;
        if !self.model.on_grid(Sector::Twisted, n) {
            return Ok(StateVector::zero(Sector::K));
        }
        let kn = (n * Exp::from_integer(self.model.k() as i64)).to_integer();
        let mut out = StateVector::zero(Sector::K);
        for (slot, part) in self.split_slots(u)? {
            let w = self.worldsheet_first_slot_mode(&part, n, v)?;
            out.add_scaled(&w, &self.model.field().eta(-(slot as i64) * kn));
        }
        Ok(out)
    }

    /// `Y_ν̂(u^1,x) = Y_K(E_f(x^{1/k})u, x^{1/k})` for `u ∈ V_K`.
    fn worldsheet_first_slot_mode(&self, u: &StateVector, n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        let k = Exp::from_integer(self.model.k() as i64);
        let efu = ef_apply(&self.model, &self.a, Exp::new(1, *k.numer()), u)?;
        let mut out = StateVector::zero(Sector::K);
        for (e, ue) in efu.terms() {
            // x^e Y_K(u_e, x^{1/k}): (u_e)_m with e - (m+1)/k = -n-1
            let m = k * (n + Exp::one() + *e) - Exp::one();
            if m.is_integer() {
                out.add_assign(&self.untwisted_mode(ue, m, v)?);
            }
        }
        Ok(out)
    }

    /// `Y_K^ν̂(u,x) = Y^ν̂((E_f(x)^{-1}u)^1, x^k)` on `V_L^T`, for `u ∈ V_K`.
    pub fn k_mode_on_twisted(&self, u: &StateVector, n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        check(Sector::Twisted, v)?;
        let mut out = StateVector::zero(Sector::Twisted);
        for (m, ue) in self.inverse_ef_terms(u, n)? {
            let u1 = self.model.to_slot(&ue, 0)?;
            out.add_assign(&self.spacetime_twisted_mode(&u1, m, v)?);
        }
        Ok(out)
    }

    /// `Y_K^ν̂(u,x) = Y_ν̂((E_f(x)^{-1}u)^1, x^k)` on `V_K`, for `u ∈ V_K`.
    pub fn k_mode_on_worldsheet(&self, u: &StateVector, n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        check(Sector::K, v)?;
        let mut out = StateVector::zero(Sector::K);
        for (m, ue) in self.inverse_ef_terms(u, n)? {
            let u1 = self.model.to_slot(&ue, 0)?;
            out.add_assign(&self.worldsheet_twisted_mode(&u1, m, v)?);
        }
        Ok(out)
    }

    /// Pairs `(m, u_e)` with `E_f(x)^{-1}u = Σ x^e u_e` and
    /// `e - k(m+1) = -n-1`.
    fn inverse_ef_terms(&self, u: &StateVector, n: Exp) -> Result<Vec<(Exp, StateVector)>, FockError> {
        let k = Exp::from_integer(self.model.k() as i64);
        let p = ef_inverse_apply(&self.model, &self.a, Exp::one(), u)?;
        let mut out = Vec::new();
        for (e, ue) in p.terms() {
            let m = (n + Exp::one() + *e) / k - Exp::one();
            if self.model.on_grid(Sector::Twisted, m) {
                out.push((m, ue.clone()));
            }
        }
        Ok(out)
    }

    /// Splits a `V_L` state into `V_K` states by occupied tensor slot.
    pub fn split_slots(&self, u: &StateVector) -> Result<BTreeMap<usize, StateVector>, FockError> {
        let (k, d) = (self.model.k(), self.model.d());
        let mut out: BTreeMap<usize, StateVector> = BTreeMap::new();
        for (m, c) in u.terms() {
            let mut slots: Vec<usize> = m.modes.iter().map(|md| md.idx / d).collect();
            for p in 0..k {
                if m.ground[p * d..(p + 1) * d].iter().any(|&x| x != 0) {
                    slots.push(p);
                }
            }
            slots.sort();
            slots.dedup();
            let slot = match slots.as_slice() {
                [] => 0,
                [s] => *s,
                _ => {
                    return Err(FockError::Unsupported(
                        "worldsheet operators take single-slot inputs".into(),
                    ))
                }
            };
            let modes = m.modes.iter().map(|md| Mode { n: md.n, idx: md.idx % d }).collect();
            let ground = m.ground[slot * d..(slot + 1) * d].to_vec();
            out.entry(slot)
                .or_insert_with(|| StateVector::zero(Sector::K))
                .add_term(Mono { modes, ground }, c.clone());
        }
        Ok(out)
    }

    fn fields_of(&self, m: &Mono) -> Vec<(Vec<Cyc>, u32)> {
        let f = self.model.field();
        let len = m.ground.len();
        m.modes
            .iter()
            .map(|md| {
                let vec = (0..len).map(|i| if i == md.idx { f.one() } else { f.zero() }).collect();
                (vec, (-md.n).to_integer() as u32)
            })
            .collect()
    }

    /// Coefficient of `x^{-n-1}` of a template operator applied to `v`.
    fn template_mode(&self, t: &Template, n: Exp, v: &StateVector) -> Result<StateVector, FockError> {
        let model = &self.model;
        let sector = v.sector();
        let step = model.step(sector);
        let f = model.field();

        // x^h, then E⁺
        let mut right = XPolyOp::zero(sector);
        for (m, c) in v.terms() {
            let e = model.label_pairing(sector, &t.h, &m.ground);
            let w = StateVector::from_mono(sector, m.clone(), c.clone());
            for (dd, wd) in self.exp_plus(&t.beta, &w)? {
                right.add(e - dd, &wd);
            }
        }

        let r = t.fields.len();
        let mut out = StateVector::zero(sector);
        for mask in 0u32..(1 << r) {
            let created: Vec<usize> = (0..r).filter(|i| mask & (1 << i) != 0).collect();
            // annihilation parts of the remaining fields
            let mut cur = right.clone();
            for i in (0..r).filter(|i| mask & (1 << i) == 0) {
                let (vec, s) = &t.fields[i];
                let mut next = XPolyOp::zero(sector);
                for (e, w) in cur.terms() {
                    let mut m = Exp::zero();
                    let top = w.max_level();
                    while m <= top {
                        let coeff = binom_rat(&(-exp_to_rat(m) - Rat::one()), s - 1);
                        if !coeff.is_zero() {
                            let img = model.apply_vec_mode(vec, m, w)?;
                            next.add(*e - m - Exp::from_integer(*s as i64), &img.scale_rat(&coeff));
                        }
                        m += step;
                    }
                }
                cur = next;
            }
            // the group element
            let mut grouped = XPolyOp::zero(sector);
            for (e, w) in cur.terms() {
                grouped.add(*e, &model.apply_group(&t.group, w));
            }
            // creation parts and E⁻ carry the remaining exponent
            for (e, w) in grouped.terms() {
                let s_sum: i64 = created.iter().map(|&i| t.fields[i].1 as i64).sum();
                let total = -n - Exp::one() - t.shift - *e + Exp::from_integer(s_sum);
                if !(total / step).is_integer() {
                    continue;
                }
                let units = (total / step).to_integer();
                if units < created.len() as i64 {
                    continue;
                }
                let minus = self.exp_minus(&t.beta, w, units)?;
                let mut acc = StateVector::zero(sector);
                self.distribute(t, &created, 0, units, &minus, &mut acc, &f.one())?;
                out.add_scaled(&acc, &t.scalar);
            }
        }
        Ok(out)
    }

    /// Assigns creation modes to fields `created[pos..]` with `units` grid
    /// steps left; what remains goes to `E⁻`.
    #[allow(clippy::too_many_arguments)]
    fn distribute(
        &self,
        t: &Template,
        created: &[usize],
        pos: usize,
        units: i64,
        minus: &[StateVector],
        acc: &mut StateVector,
        coeff: &Cyc,
    ) -> Result<(), FockError> {
        if pos == created.len() {
            acc.add_scaled(&minus[units as usize], coeff);
            return Ok(());
        }
        // Apply the remaining fields after E⁻; creation operators commute, so
        // we apply each field to the finished E⁻ part in a second pass.
        let step = self.model.step(acc.sector());
        let rest = (created.len() - pos - 1) as i64;
        let (vec, s) = &t.fields[created[pos]];
        for u in 1..=units - rest {
            let m = -step * Exp::from_integer(u);
            let c = binom_rat(&(-exp_to_rat(m) - Rat::one()), s - 1);
            if c.is_zero() {
                continue;
            }
            let mut sub = StateVector::zero(acc.sector());
            self.distribute(t, created, pos + 1, units - u, minus, &mut sub, &coeff.scale(&c))?;
            if !sub.is_zero() {
                acc.add_assign(&self.model.apply_vec_mode(vec, m, &sub)?);
            }
        }
        Ok(())
    }

    /// `E⁺_D w` for `D = 0, step, 2·step, …` until it vanishes, where
    /// `exp(-Σ_{n>0} β(n) x^{-n}/n) = Σ_D E⁺_D x^{-D}`.
    fn exp_plus(&self, beta: &[Cyc], w: &StateVector) -> Result<Vec<(Exp, StateVector)>, FockError> {
        let sector = w.sector();
        let step = self.model.step(sector);
        let top = (w.max_level() / step).to_integer();
        let mut terms: Vec<StateVector> = vec![w.clone()];
        let mut out = vec![(Exp::zero(), w.clone())];
        for units in 1..=top {
            // D E_D = -Σ_{0<j≤D} β(j) E_{D-j}
            let mut acc = StateVector::zero(sector);
            for j in 1..=units {
                let prev = &terms[(units - j) as usize];
                if prev.is_zero() {
                    continue;
                }
                let img = self.model.apply_vec_mode(beta, step * Exp::from_integer(j), prev)?;
                acc.add_assign(&img);
            }
            let d = exp_to_rat(step * Exp::from_integer(units));
            let e = acc.scale_rat(&(-d.recip()));
            out.push((step * Exp::from_integer(units), e.clone()));
            terms.push(e);
        }
        Ok(out.into_iter().filter(|(_, s)| !s.is_zero()).collect())
    }

    /// `E⁻_D w` for `D = 0, …, units·step`, where
    /// `exp(Σ_{n>0} β(-n) x^n/n) = Σ_D E⁻_D x^D`.
    fn exp_minus(&self, beta: &[Cyc], w: &StateVector, units: i64) -> Result<Vec<StateVector>, FockError> {
        let sector = w.sector();
        let step = self.model.step(sector);
        let mut terms: Vec<StateVector> = vec![w.clone()];
        for u in 1..=units {
            let mut acc = StateVector::zero(sector);
            for j in 1..=u {
                let prev = &terms[(u - j) as usize];
                if prev.is_zero() {
                    continue;
                }
                acc.add_assign(&self.model.apply_vec_mode(beta, -step * Exp::from_integer(j), prev)?);
            }
            let d = exp_to_rat(step * Exp::from_integer(u));
            terms.push(acc.scale_rat(&d.recip()));
        }
        Ok(terms)
    }
}

fn check(sector: Sector, v: &StateVector) -> Result<(), FockError> {
    if v.sector() != sector {
        return Err(FockError::SectorMismatch { expected: sector, found: v.sector() });
    }
    Ok(())
}
