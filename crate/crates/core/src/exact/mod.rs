//! Exact scalars: arbitrary-precision rationals and elements of cyclotomic
//! fields.
//!
//! Every scalar in the crate is either a [`Rat`] or a [`Cyc`]; there is no
//! floating point anywhere. The twisted constructions for a `k`-cycle all
//! live in the single field `Q(ζ_{2k})`, which [`RootField`] packages
//! together with the distinguished roots of unity `η` and `η₀`.

mod cyc;

pub use cyc::{cyclotomic_polynomial, euler_phi, Cyc, ExactError};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
pub type Rat = BigRational;

/// Small exact rational used for mode indices and formal-variable exponents.
pub type Exp = num_rational::Rational64;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn exp_to_rat(e: Exp) -> Rat {
    rat(*e.numer(), *e.denom())
}

/// Converts a rational with machine-sized numerator and denominator into an
/// [`Exp`]. Returns `None` on overflow.
pub fn rat_to_exp(r: &Rat) -> Option<Exp> {
    Some(Exp::new(r.numer().to_i64()?, r.denom().to_i64()?))
}

/// `binom(top, n)` for a rational `top`, i.e. `top (top-1) ... (top-n+1) / n!`.
pub fn binom_rat(top: &Rat, n: u32) -> Rat {
    let mut acc = Rat::one();
    for i in 0..n {
        acc = acc * (top - rat_int(i as i64)) / rat_int(i as i64 + 1);
    }
    acc
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `floor(sqrt(r))` for a nonnegative rational.
pub fn floor_sqrt(r: &Rat) -> BigInt {
    assert!(!r.is_negative(), "floor_sqrt of a negative rational");
    let fl = r.numer().div_floor(r.denom());
    fl.sqrt()
}

/// The field `Q(ζ_{2k})` together with the roots of unity used by the
/// twisted constructions: `η = ζ_{2k}²` (a primitive `k`-th root) and
/// `η₀ = (-1)^k η`.
///
/// Roots of unity are handled as exponents of `ζ_{2k}` modulo `2k`; the table
/// of powers is built once.
#[derive(Clone, Debug)]
pub struct RootField {
    k: u32,
    powers: Vec<Cyc>,
}

impl RootField {
    pub fn new(k: u32) -> Self {
        assert!(k >= 1, "cycle length must be positive");
        let order = 2 * k;
        let powers = (0..order as i64).map(|e| Cyc::zeta_pow(order, e)).collect();
        RootField { k, powers }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Order `2k` of the ambient cyclotomic field.
    pub fn order(&self) -> u32 {
        2 * self.k
    }

    pub fn modulus(&self) -> i64 {
        2 * self.k as i64
    }

    pub fn reduce(&self, e: i64) -> i64 {
        e.rem_euclid(self.modulus())
    }

    /// `ζ_{2k}^e`.
    pub fn zeta(&self, e: i64) -> Cyc {
        self.powers[self.reduce(e) as usize].clone()
    }

    /// Exponent of `ζ_{2k}` representing `η^j`.
    pub fn eta_exp(&self, j: i64) -> i64 {
        self.reduce(2 * j)
    }

    /// Exponent of `ζ_{2k}` representing `-1`.
    pub fn minus_one_exp(&self) -> i64 {
        self.k as i64
    }

    /// Exponent of `ζ_{2k}` representing `η₀ = (-1)^k η`.
    pub fn eta0_exp(&self) -> i64 {
        if self.k % 2 == 1 {
            self.reduce(self.k as i64 + 2)
        } else {
            self.eta_exp(1)
        }
    }

    pub fn eta(&self, j: i64) -> Cyc {
        self.zeta(self.eta_exp(j))
    }

    pub fn eta0(&self) -> Cyc {
        self.zeta(self.eta0_exp())
    }

    pub fn from_rat(&self, r: Rat) -> Cyc {
        Cyc::from_rat(self.order(), r)
    }

    pub fn int(&self, n: i64) -> Cyc {
        self.from_rat(rat_int(n))
    }

    pub fn zero(&self) -> Cyc {
        Cyc::zero(self.order())
    }

    pub fn one(&self) -> Cyc {
        Cyc::one(self.order())
    }
}

/// `Σ_{j=1}^{m-1} ζ^{-j} / (1 - ζ^{-j})²` for `ζ = ζ_m`, evaluated exactly in
/// `Q(ζ_m)`. The value is always the rational `-(m² - 1)/12`.
pub fn lemma_root_sum(m: u32) -> Cyc {
    assert!(m >= 1, "root order must be positive");
    let mut acc = Cyc::zero(m);
    let one = Cyc::one(m);
    for j in 1..m as i64 {
        let z = Cyc::zeta_pow(m, -j);
        let denom = &(&one - &z) * &(&one - &z);
        let inv = denom
            .inv()
            .expect("1 - ζ^{-j} is nonzero for 0 < j < m");
        acc = &acc + &(&z * &inv);
    }
    acc
}

/// Closed form `-(m² - 1)/12` of [`lemma_root_sum`].
pub fn lemma_root_sum_closed(m: u32) -> Rat {
    let m = m as i64;
    rat(-(m * m - 1), 12)
}
