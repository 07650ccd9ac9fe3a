//! The normalized isomorphism `F: V_L^T → V_K` between the space-time and
//! worldsheet twisted modules, its inverse, and the intertwining checks.
//!
//! `F` is defined by the mode rule `t_j(n) ↦ (1/k) b_j(kn)`, the ground rule
//! `u_κ ↦ ι(e_κ)` and `F(𝟏) = 𝟏`; the intertwining property
//! `Y_ν̂(u,x) F(v) = F(Y^ν̂(u,x) v)` is verified mode by mode.

use std::fmt;
use std::sync::Arc;

use num_traits::One;

use crate::exact::{rat, rat_int, Cyc, Exp};
use crate::fock::{FockError, Mode, Model, Mono, Sector, StateVector};
use crate::vertexops::VertexOps;

/// The map `F` for one `(K, k)`.
#[derive(Debug, Clone)]
pub struct F {
    model: Arc<Model>,
}

impl F {
    pub fn new(model: Arc<Model>) -> Self {
        F { model }
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector, FockError> {
        f_apply(&self.model, v)
    }

    pub fn inverse(&self, v: &StateVector) -> Result<StateVector, FockError> {
        f_inverse_apply(&self.model, v)
    }
}

/// `F(v)` for `v ∈ V_L^T`.
pub fn f_apply(model: &Model, v: &StateVector) -> Result<StateVector, FockError> {
    if v.sector() != Sector::Twisted {
        return Err(FockError::SectorMismatch { expected: Sector::Twisted, found: v.sector() });
    }
    let k = model.k() as i64;
    let mut out = StateVector::zero(Sector::K);
    for (m, c) in v.terms() {
        let mut modes: Vec<Mode> = m
            .modes
            .iter()
            .map(|md| Mode { n: md.n * Exp::from_integer(k), idx: md.idx })
            .collect();
        modes.sort();
        let s = rat(1, k).pow(m.modes.len() as i32);
        out.add_term(Mono { modes, ground: m.ground.clone() }, c.scale(&s));
    }
    Ok(out)
}

/// `F^{-1}(v)` for `v ∈ V_K`.
pub fn f_inverse_apply(model: &Model, v: &StateVector) -> Result<StateVector, FockError> {
    if v.sector() != Sector::K {
        return Err(FockError::SectorMismatch { expected: Sector::K, found: v.sector() });
    }
    let k = model.k() as i64;
    let mut out = StateVector::zero(Sector::Twisted);
    for (m, c) in v.terms() {
        let mut modes: Vec<Mode> = m
            .modes
            .iter()
            .map(|md| Mode { n: md.n / Exp::from_integer(k), idx: md.idx })
            .collect();
        modes.sort();
        let s = rat_int(k).pow(m.modes.len() as i32);
        out.add_term(Mono { modes, ground: m.ground.clone() }, c.scale(&s));
    }
    Ok(out)
}

/// `F ∘ α^T(n) ∘ F^{-1} = Σ_j coeffs[j] b_j(mode)` on `V_K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeImage {
    pub mode: Exp,
    pub coeffs: Vec<Cyc>,
}

impl ModeImage {
    pub fn apply(&self, model: &Model, v: &StateVector) -> Result<StateVector, FockError> {
        model.apply_vec_mode(&self.coeffs, self.mode, v)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// The conjugated mode `F ∘ (α₁,…,α_k)^T(n) ∘ F^{-1}`, read off from
/// `(1/k) x^{1/k-1} Σ_j η^{j-1} α_j(η^{j-1} x^{1/k})`: it is
/// `(1/k) Σ_j η^{-(j-1)kn} α_j(kn)`.
pub fn general_mode_image(model: &Model, alphas: &[Vec<i64>], n: Exp) -> Result<ModeImage, FockError> {
    let (k, d) = (model.k(), model.d());
    if alphas.len() != k || alphas.iter().any(|a| a.len() != d) {
        return Err(FockError::Unsupported(format!("expected {k} vectors of length {d}")));
    }
    if !model.on_grid(Sector::Twisted, n) {
        return Err(FockError::BadMode(n, Sector::Twisted));
    }
    let f = model.field();
    let kn = (n * Exp::from_integer(k as i64)).to_integer();
    let inv_k = rat(1, k as i64);
    let mut coeffs = vec![f.zero(); d];
    for (p, a) in alphas.iter().enumerate() {
        let ph = f.eta(-(p as i64) * kn).scale(&inv_k);
        for (c, &x) in coeffs.iter_mut().zip(a) {
            *c += &ph.scale(&rat_int(x));
        }
    }
    Ok(ModeImage { mode: n * Exp::from_integer(k as i64), coeffs })
}

/// Outcome of comparing both sides of the intertwining relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Intertwine {
    Equal { modes_checked: usize },
    Differs { n: Exp, worldsheet: StateVector, spacetime: StateVector },
}

impl Intertwine {
    pub fn passed(&self) -> bool {
        matches!(self, Intertwine::Equal { .. })
    }
}

impl fmt::Display for Intertwine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intertwine::Equal { modes_checked } => write!(f, "equal on {modes_checked} modes"),
            Intertwine::Differs { n, worldsheet, spacetime } => write!(
                f,
                "mode {n}: Y_ν̂(u)F(v) = {worldsheet}, F(Y^ν̂(u)v) = {spacetime}"
            ),
        }
    }
}

/// Modes `n ∈ (1/k)Z` with `|n| ≤ bound`.
pub fn mode_range(k: usize, bound: Exp) -> Vec<Exp> {
    let k = k as i64;
    let top = (bound * Exp::from_integer(k)).floor().to_integer();
    (-top..=top).map(|j| Exp::new(j, k)).collect()
}

/// Compares `Y_ν̂(u,x) F(v)` with `F(Y^ν̂(u,x) v)` at each mode in `modes`.
pub fn intertwine_check(ops: &VertexOps, u: &StateVector, v: &StateVector, modes: &[Exp]) -> Result<Intertwine, FockError> {
    let model = ops.model();
    let fv = f_apply(model, v)?;
    for &n in modes {
        let ws = ops.worldsheet_twisted_mode(u, n, &fv)?;
        let st = f_apply(model, &ops.spacetime_twisted_mode(u, n, v)?)?;
        if ws != st {
            return Ok(Intertwine::Differs { n, worldsheet: ws, spacetime: st });
        }
    }
    Ok(Intertwine::Equal { modes_checked: modes.len() })
}

/// Permutes tensor slots of a `V_L` state: slot `p` goes to `perm[p]`.
pub fn permute_slots(model: &Model, u: &StateVector, perm: &[usize]) -> Result<StateVector, FockError> {
    let (k, d) = (model.k(), model.d());
    if u.sector() != Sector::L {
        return Err(FockError::SectorMismatch { expected: Sector::L, found: u.sector() });
    }
    if perm.len() != k || {
        let mut s = perm.to_vec();
        s.sort();
        s != (0..k).collect::<Vec<_>>()
    } {
        return Err(FockError::Unsupported(format!("{perm:?} is not a permutation of 0..{k}")));
    }
    let mut out = StateVector::zero(Sector::L);
    for (m, c) in u.terms() {
        let mut modes: Vec<Mode> = m
            .modes
            .iter()
            .map(|md| Mode { n: md.n, idx: perm[md.idx / d] * d + md.idx % d })
            .collect();
        modes.sort();
        let mut ground = vec![0; k * d];
        for p in 0..k {
            ground[perm[p] * d..(perm[p] + 1) * d].copy_from_slice(&m.ground[p * d..(p + 1) * d]);
        }
        // single-slot inputs carry no reordering sign
        out.add_term(Mono { modes, ground }, c.clone());
    }
    Ok(out)
}

/// `Y_{μ̂ν̂μ̂^{-1}}(u,x) = Y_ν̂(μ̂u, x)` on `V_K`, the worldsheet operator for
/// the conjugate cycle, as an input relabeling.
pub fn conjugate_worldsheet_mode(
    ops: &VertexOps,
    mu: &[usize],
    u: &StateVector,
    n: Exp,
    v: &StateVector,
) -> Result<StateVector, FockError> {
    let mu_u = permute_slots(ops.model(), u, mu)?;
    ops.worldsheet_twisted_mode(&mu_u, n, v)
}

/// The inverse permutation.
pub fn inverse_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (p, &q) in perm.iter().enumerate() {
        inv[q] = p;
    }
    inv
}

/// `μ̂^{-1} ν̂ μ̂` as a slot permutation, where `ν̂` sends slot `p+1` to `p`.
pub fn conjugate_cycle(mu: &[usize]) -> Vec<usize> {
    let k = mu.len();
    let inv = inverse_perm(mu);
    (0..k).map(|p| inv[(mu[p] + k - 1) % k]).collect()
}

/// Checks that the relabeled operators are twisted by the conjugate cycle
/// `g = μ̂^{-1}ν̂μ̂`: `Y'(g u, x)` is `Y'(u,x)` with `x^{1/k} ↦ η^{-1}x^{1/k}`,
/// i.e. `(g u)'_n = η^{kn} u'_n`.
pub fn conjugate_equivariance(
    ops: &VertexOps,
    mu: &[usize],
    u: &StateVector,
    v: &StateVector,
    modes: &[Exp],
) -> Result<Intertwine, FockError> {
    let model = ops.model();
    let g = conjugate_cycle(mu);
    let gu = permute_slots(model, u, &g)?;
    let k = Exp::from_integer(model.k() as i64);
    for &n in modes {
        let lhs = conjugate_worldsheet_mode(ops, mu, &gu, n, v)?;
        let rhs = conjugate_worldsheet_mode(ops, mu, u, n, v)?
            .scale(&model.field().eta((n * k).to_integer()));
        if lhs != rhs {
            return Ok(Intertwine::Differs { n, worldsheet: lhs, spacetime: rhs });
        }
    }
    Ok(Intertwine::Equal { modes_checked: modes.len() })
}

/// The generators used by the intertwining suite: `(α(-1)ι(1))^{j}` for
/// every slot, `ω` of `V_L`, and `(e_α)^1` for a minimal vector `α`.
pub fn generators(model: &Model) -> Vec<(String, StateVector)> {
    let (k, d) = (model.k(), model.d());
    let mut out = Vec::new();
    let vac = model.vacuum(Sector::K);
    for j in 0..d {
        let s = model.apply_mode(j, -Exp::one(), &vac).expect("integral mode");
        for p in 0..k {
            out.push((
                format!("(b{}(-1)1)^{}", j + 1, p + 1),
                model.to_slot(&s, p).expect("V_K input"),
            ));
        }
    }
    out.push(("omega".to_string(), model.omega(Sector::L)));
    let alpha = minimal_vector(model);
    out.push((
        format!("(e_{alpha:?})^1"),
        model
            .to_slot(&model.ground_state(Sector::K, alpha), 0)
            .expect("V_K input"),
    ));
    out
}

/// A nonzero vector of minimal norm in `K`, the first in enumeration order.
pub fn minimal_vector(model: &Model) -> Vec<i64> {
    let lat = model.k_lattice();
    let mut best: Option<(i64, Vec<i64>)> = None;
    for v in lat.enumerate_up_to_norm(&rat_int(lat.gram().iter().enumerate().map(|(i, r)| r[i]).min().unwrap_or(2) / 2)) {
        if v.iter().all(|&x| x == 0) {
            continue;
        }
        let nrm = lat.norm_int(&v);
        if best.as_ref().map_or(true, |(b, bv)| nrm < *b || (nrm == *b && v > *bv)) {
            best = Some((nrm, v));
        }
    }
    best.map(|(_, v)| v).unwrap_or_else(|| vec![0; model.d()])
}

/// `k L^ν̂(0) v - ((k²-1)d/24) v` on `V_L^T`.
pub fn l0_relation_rhs(model: &Model, v: &StateVector) -> Result<StateVector, FockError> {
    let k = model.k() as i64;
    let d = model.d() as i64;
    let l0 = model.twisted_l0(v)?;
    Ok(l0.scale_rat(&rat_int(k)).sub(&v.scale_rat(&rat((k * k - 1) * d, 24))))
}

/// Checks `L_K^ν̂(0) = k L^ν̂(0) - (k²-1)d/24` on `v ∈ V_L^T`, with
/// `L_K^ν̂(0)` the `x^{-2}` coefficient of `Y_K^ν̂(ω_K, x)`.
pub fn l0_relation_holds(ops: &VertexOps, v: &StateVector) -> Result<bool, FockError> {
    let model = ops.model();
    let w = model.omega(Sector::K);
    let lhs = ops.k_mode_on_twisted(&w, Exp::one(), v)?;
    Ok(lhs == l0_relation_rhs(model, v)?)
}
