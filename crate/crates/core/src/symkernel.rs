//! Exact polynomial algebra in the expansion variable `Y = G'/G`.
//!
//! Coefficients of a [`YPoly`] are multivariate polynomials ([`MPoly`]) over a
//! closed set of eight symbols with exact rational coefficients. The only
//! calculus supported is the formal ξ-derivative induced by the auxiliary
//! equation `G'' + λG' + μG = 0`, under which `dY/dξ = -(Y² + λY + μ)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number, always stored in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Build a rational from a small numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// The symbols that can appear in a coefficient polynomial.
///
/// `W` stands for the phase rate `Ω'(t)` and `Gamma` for the aggregate load
/// `γ(t)·q(0,t)`; both are constant with respect to ξ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    A0,
    A1,
    Lambda,
    Mu,
    K,
    W,
    Gamma,
    C,
}

pub const NUM_SYMS: usize = 8;

impl Sym {
    pub const ALL: [Sym; NUM_SYMS] = [
        Sym::A0,
        Sym::A1,
        Sym::Lambda,
        Sym::Mu,
        Sym::K,
        Sym::W,
        Sym::Gamma,
        Sym::C,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Sym::A0 => "a0",
            Sym::A1 => "a1",
            Sym::Lambda => "lambda",
            Sym::Mu => "mu",
            Sym::K => "k",
            Sym::W => "W",
            Sym::Gamma => "Gamma",
            Sym::C => "C",
        }
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dense exponent vector over [`Sym::ALL`].
///
/// Ordered graded-lexicographically: total degree first, then exponents
/// compared in symbol order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub [u32; NUM_SYMS]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0; NUM_SYMS]);

    pub fn var(sym: Sym) -> Self {
        Self::power(sym, 1)
    }

    pub fn power(sym: Sym, exp: u32) -> Self {
        let mut e = [0; NUM_SYMS];
        e[sym.index()] = exp;
        Monomial(e)
    }

    pub fn from_powers(powers: &[(Sym, u32)]) -> Self {
        let mut e = [0; NUM_SYMS];
        for &(s, p) in powers {
            e[s.index()] += p;
        }
        Monomial(e)
    }

    #[inline]
    pub fn exponent(&self, sym: Sym) -> u32 {
        self.0[sym.index()]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        Monomial(e)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a = a.checked_sub(*b)?;
        }
        Some(Monomial(e))
    }

    /// Componentwise minimum, i.e. the monomial gcd.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a = (*a).min(*b);
        }
        Monomial(e)
    }

    fn without(&self, sym: Sym) -> Monomial {
        let mut e = self.0;
        e[sym.index()] = 0;
        Monomial(e)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for sym in Sym::ALL {
            let e = self.exponent(sym);
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("·")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{sym}")?;
            } else {
                write!(f, "{sym}^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// Multivariate polynomial over [`Sym`] with exact rational coefficients.
///
/// Zero coefficients are never stored, so derived equality is structural
/// equality of canonical forms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl MPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(c, Monomial::ONE)
    }

    pub fn int(c: i64) -> Self {
        Self::constant(rat(c, 1))
    }

    pub fn var(sym: Sym) -> Self {
        Self::term(Rational::one(), Monomial::var(sym))
    }

    pub fn term(coef: Rational, mono: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !coef.is_zero() {
            terms.insert(mono, coef);
        }
        MPoly { terms }
    }

    /// Shorthand for `num/den · Π sym^exp`.
    pub fn monomial(num: i64, den: i64, powers: &[(Sym, u32)]) -> Self {
        Self::term(rat(num, den), Monomial::from_powers(powers))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending canonical order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mono: &Monomial) -> Rational {
        self.terms.get(mono).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn degree_in(&self, sym: Sym) -> Option<u32> {
        self.terms.keys().map(|m| m.exponent(sym)).max()
    }

    pub fn contains(&self, sym: Sym) -> bool {
        self.terms.keys().any(|m| m.exponent(sym) > 0)
    }

    fn add_term(&mut self, mono: Monomial, coef: Rational) {
        if coef.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> MPoly {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly {
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> MPoly {
        let mut acc = MPoly::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Coefficients with respect to `sym`: entry `i` multiplies `sym^i`.
    pub fn coeffs_in(&self, sym: Sym) -> Vec<MPoly> {
        let deg = match self.degree_in(sym) {
            Some(d) => d as usize,
            None => return Vec::new(),
        };
        let mut out = vec![MPoly::zero(); deg + 1];
        for (m, c) in &self.terms {
            out[m.exponent(sym) as usize].add_term(m.without(sym), c.clone());
        }
        out
    }

    /// Replace every occurrence of `sym` by `value`.
    pub fn substitute(&self, sym: Sym, value: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        let mut powers: Vec<MPoly> = vec![MPoly::one()];
        for (i, coeff) in self.coeffs_in(sym).into_iter().enumerate() {
            while powers.len() <= i {
                let next = powers.last().unwrap() * value;
                powers.push(next);
            }
            out = &out + &(&coeff * &powers[i]);
        }
        out
    }

    /// The single term of a one-term polynomial.
    pub fn as_term(&self) -> Option<(&Monomial, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// Exact division by a single-term polynomial; `None` if `divisor` has
    /// more than one term or does not divide every term.
    pub fn div_by_term(&self, divisor: &MPoly) -> Option<MPoly> {
        let (dm, dc) = divisor.as_term()?;
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.div(dm)?, c / dc);
        }
        Some(out)
    }

    /// Square root of a single-term polynomial with a perfect-square
    /// coefficient and even exponents; the root returned has positive sign.
    pub fn sqrt_term(&self) -> Option<MPoly> {
        let (m, c) = self.as_term()?;
        if c.is_negative() {
            return None;
        }
        let num = exact_isqrt(c.numer())?;
        let den = exact_isqrt(c.denom())?;
        let mut e = [0; NUM_SYMS];
        for (dst, src) in e.iter_mut().zip(m.0.iter()) {
            if src % 2 != 0 {
                return None;
            }
            *dst = src / 2;
        }
        Some(MPoly::term(Rational::new(num, den), Monomial(e)))
    }

    /// Evaluate at an exact point given per symbol.
    pub fn eval(&self, point: &[Rational; NUM_SYMS]) -> Rational {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for sym in Sym::ALL {
                let e = m.exponent(sym);
                if e > 0 {
                    v *= num_traits::pow(point[sym.index()].clone(), e as usize);
                }
            }
            acc += v;
        }
        acc
    }

    /// Human-readable factored form: rational content, common monomial,
    /// then the primitive remainder. `k^3/2·(lambda^2 - 4·mu)` rather
    /// than `1/2·lambda^2·k^3 - 2·mu·k^3`.
    pub fn factored(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut content: Option<Rational> = None;
        let mut common: Option<Monomial> = None;
        for (m, c) in &self.terms {
            content = Some(match content {
                None => c.abs(),
                Some(g) => rational_gcd(&g, c),
            });
            common = Some(match common {
                None => *m,
                Some(g) => g.gcd(m),
            });
        }
        let mut content = content.unwrap();
        let common = common.unwrap();
        // Make the leading displayed term of the remainder positive.
        let (_, lead) = self.terms.iter().next_back().unwrap();
        if lead.is_negative() {
            content = -content;
        }
        let rest = self
            .div_by_term(&MPoly::term(content.clone(), common))
            .expect("content and monomial gcd divide every term");

        let sign = if content.is_negative() { "-" } else { "" };
        let num = content.numer().abs();
        let den = content.denom().clone();
        let mono = (!common.is_one()).then(|| common.to_string());

        let mut head = match (mono, den.is_one()) {
            (None, true) => {
                if num.is_one() {
                    String::new()
                } else {
                    num.to_string()
                }
            }
            (None, false) => format!("{num}/{den}"),
            (Some(mono), true) => {
                if num.is_one() {
                    mono
                } else {
                    format!("{num}·{mono}")
                }
            }
            (Some(_), false) => {
                // Put one symbol over the denominator, k preferred: (k/2)·lambda.
                let lead_sym = if common.exponent(Sym::K) > 0 {
                    Sym::K
                } else {
                    *Sym::ALL.iter().find(|s| common.exponent(**s) > 0).unwrap()
                };
                let lead = Monomial::power(lead_sym, common.exponent(lead_sym));
                let tail = common.div(&lead).unwrap();
                let numer = if num.is_one() {
                    lead.to_string()
                } else {
                    format!("{num}·{lead}")
                };
                if tail.is_one() {
                    format!("({numer}/{den})")
                } else {
                    format!("({numer}/{den})·{tail}")
                }
            }
        };
        if rest != MPoly::one() {
            let body = if rest.num_terms() > 1 {
                format!("({rest})")
            } else {
                rest.to_string()
            };
            head = if head.is_empty() {
                body
            } else {
                format!("{head}·{body}")
            };
        } else if head.is_empty() {
            head = "1".to_string();
        }
        format!("{sign}{head}")
    }
}

fn exact_isqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

fn rational_gcd(a: &Rational, b: &Rational) -> Rational {
    use num_integer::Integer;
    let num = a.numer().gcd(b.numer());
    let den = a.denom().lcm(b.denom());
    Rational::new(num, den)
}

impl fmt::Display for MPoly {
    /// Terms in descending canonical order, e.g. `-2·a1^3·k + 2·a1·k^3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}·{m}")?;
            }
        }
        Ok(())
    }
}

impl Add for &MPoly {
    type Output = MPoly;
    fn add(self, rhs: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, c.clone());
        }
        out
    }
}

impl Sub for &MPoly {
    type Output = MPoly;
    fn sub(self, rhs: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }
}

impl Mul for &MPoly {
    type Output = MPoly;
    fn mul(self, rhs: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        self.scale(&-Rational::one())
    }
}

macro_rules! forward_owned_binops {
    ($ty:ty) => {
        impl Add for $ty {
            type Output = $ty;
            fn add(self, rhs: $ty) -> $ty {
                &self + &rhs
            }
        }
        impl Sub for $ty {
            type Output = $ty;
            fn sub(self, rhs: $ty) -> $ty {
                &self - &rhs
            }
        }
        impl Mul for $ty {
            type Output = $ty;
            fn mul(self, rhs: $ty) -> $ty {
                &self * &rhs
            }
        }
        impl Neg for $ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                -&self
            }
        }
    };
}

forward_owned_binops!(MPoly);
forward_owned_binops!(YPoly);

/// Polynomial in `Y = G'/G` with [`MPoly`] coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct YPoly {
    coeffs: BTreeMap<u32, MPoly>,
}

impl YPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(MPoly::one())
    }

    pub fn constant(c: MPoly) -> Self {
        Self::monomial(c, 0)
    }

    /// The expansion variable `Y` itself.
    pub fn y() -> Self {
        Self::monomial(MPoly::one(), 1)
    }

    /// `c·Y^power`.
    pub fn monomial(c: MPoly, power: u32) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(power, c);
        }
        YPoly { coeffs }
    }

    /// Build from `(power, coefficient)` pairs, summing repeated powers.
    pub fn from_coeffs<I: IntoIterator<Item = (u32, MPoly)>>(items: I) -> Self {
        let mut out = YPoly::zero();
        for (p, c) in items {
            out.add_coeff(p, &c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, power: u32) -> MPoly {
        self.coeffs.get(&power).cloned().unwrap_or_default()
    }

    /// Stored `(power, coefficient)` pairs in ascending power.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (u32, &MPoly)> {
        self.coeffs.iter().map(|(p, c)| (*p, c))
    }

    fn add_coeff(&mut self, power: u32, c: &MPoly) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(power).or_default();
        *slot = &*slot + c;
        if slot.is_zero() {
            self.coeffs.remove(&power);
        }
    }

    /// Multiply every coefficient by `c`.
    pub fn scale(&self, c: &MPoly) -> YPoly {
        YPoly::from_coeffs(self.coeffs.iter().map(|(p, v)| (*p, v * c)))
    }

    pub fn pow(&self, exp: u32) -> YPoly {
        let mut acc = YPoly::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Formal ξ-derivative with `dY/dξ = -(Y² + λY + μ)`, where `lambda`
    /// and `mu` name the auxiliary-equation coefficients. Coefficients are
    /// treated as ξ-constants.
    pub fn dxi(&self, lambda: Sym, mu: Sym) -> YPoly {
        let lam = MPoly::var(lambda);
        let mu = MPoly::var(mu);
        let mut out = YPoly::zero();
        for (&n, c) in &self.coeffs {
            if n == 0 {
                continue;
            }
            let nc = c.scale(&rat(-(n as i64), 1));
            // n·Y^(n-1)·(-(Y² + λY + μ))
            out.add_coeff(n + 1, &nc);
            out.add_coeff(n, &(&nc * &lam));
            out.add_coeff(n - 1, &(&nc * &mu));
        }
        out
    }

    /// Replace `sym` in every coefficient.
    pub fn substitute(&self, sym: Sym, value: &MPoly) -> YPoly {
        YPoly::from_coeffs(self.coeffs.iter().map(|(p, c)| (*p, c.substitute(sym, value))))
    }
}

impl Add for &YPoly {
    type Output = YPoly;
    fn add(self, rhs: &YPoly) -> YPoly {
        let mut out = self.clone();
        for (p, c) in &rhs.coeffs {
            out.add_coeff(*p, c);
        }
        out
    }
}

impl Sub for &YPoly {
    type Output = YPoly;
    fn sub(self, rhs: &YPoly) -> YPoly {
        self + &(-rhs)
    }
}

impl Mul for &YPoly {
    type Output = YPoly;
    fn mul(self, rhs: &YPoly) -> YPoly {
        let mut out = YPoly::zero();
        for (pa, ca) in &self.coeffs {
            for (pb, cb) in &rhs.coeffs {
                out.add_coeff(pa + pb, &(ca * cb));
            }
        }
        out
    }
}

impl Neg for &YPoly {
    type Output = YPoly;
    fn neg(self) -> YPoly {
        self.scale(&MPoly::int(-1))
    }
}

impl fmt::Display for YPoly {
    /// Descending powers of `(G'/G)`, one bracketed coefficient per power.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (p, c)) in self.coeffs.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            match p {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})·(G'/G)")?,
                _ => write!(f, "({c})·(G'/G)^{p}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BalanceError {
    #[error("NoIntegerBalance: m·{nonlinear_power} = m + {derivative_order} has no positive integer solution")]
    NoIntegerBalance {
        nonlinear_power: u32,
        derivative_order: u32,
    },
}

/// Homogeneous balance: the `m` for which `q^p` and `d^n q/dξ^n` reach the
/// same degree in `Y`, i.e. `m·p = m + n`.
pub fn balance_degree(nonlinear_power: u32, derivative_order: u32) -> Result<u32, BalanceError> {
    let err = BalanceError::NoIntegerBalance {
        nonlinear_power,
        derivative_order,
    };
    if nonlinear_power < 2 || derivative_order < 1 {
        return Err(err);
    }
    let den = nonlinear_power - 1;
    if derivative_order % den == 0 {
        Ok(derivative_order / den)
    } else {
        Err(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: Sym) -> MPoly {
        MPoly::var(s)
    }

    #[test]
    fn add_cancels_and_identity() {
        let a = &YPoly::y() + &YPoly::one();
        let b = -&YPoly::y();
        assert_eq!(&a + &b, YPoly::one());
        assert_eq!(&a + &YPoly::zero(), a);
    }

    #[test]
    fn mul_difference_of_squares() {
        let p = &YPoly::y() + &YPoly::one();
        let m = &YPoly::y() - &YPoly::one();
        let expected = &YPoly::y().pow(2) - &YPoly::one();
        assert_eq!(&p * &m, expected);
        assert_eq!(&p * &YPoly::one(), p);
    }

    #[test]
    fn cube_of_linear_ansatz() {
        let q = &YPoly::monomial(v(Sym::A1), 1) + &YPoly::constant(v(Sym::A0));
        let cube = q.pow(3);
        let expected = YPoly::from_coeffs([
            (3, MPoly::monomial(1, 1, &[(Sym::A1, 3)])),
            (2, MPoly::monomial(3, 1, &[(Sym::A1, 2), (Sym::A0, 1)])),
            (1, MPoly::monomial(3, 1, &[(Sym::A1, 1), (Sym::A0, 2)])),
            (0, MPoly::monomial(1, 1, &[(Sym::A0, 3)])),
        ]);
        assert_eq!(cube, expected);
    }

    #[test]
    fn dxi_of_y_and_constant() {
        let d = YPoly::y().dxi(Sym::Lambda, Sym::Mu);
        let expected = YPoly::from_coeffs([
            (2, MPoly::int(-1)),
            (1, -v(Sym::Lambda)),
            (0, -v(Sym::Mu)),
        ]);
        assert_eq!(d, expected);
        assert!(YPoly::constant(v(Sym::A0)).dxi(Sym::Lambda, Sym::Mu).is_zero());
    }

    #[test]
    fn second_derivative_of_ansatz() {
        let q = &YPoly::monomial(v(Sym::A1), 1) + &YPoly::constant(v(Sym::A0));
        let d2 = q.dxi(Sym::Lambda, Sym::Mu).dxi(Sym::Lambda, Sym::Mu);
        let expected = YPoly::from_coeffs([
            (3, MPoly::monomial(2, 1, &[(Sym::A1, 1)])),
            (2, MPoly::monomial(3, 1, &[(Sym::A1, 1), (Sym::Lambda, 1)])),
            (
                1,
                &MPoly::monomial(2, 1, &[(Sym::A1, 1), (Sym::Mu, 1)])
                    + &MPoly::monomial(1, 1, &[(Sym::A1, 1), (Sym::Lambda, 2)]),
            ),
            (0, MPoly::monomial(1, 1, &[(Sym::A1, 1), (Sym::Lambda, 1), (Sym::Mu, 1)])),
        ]);
        assert_eq!(d2, expected);
    }

    #[test]
    fn balance_cases() {
        assert_eq!(balance_degree(3, 2), Ok(1));
        assert_eq!(balance_degree(2, 2), Ok(2));
        assert_eq!(balance_degree(2, 1), Ok(1));
        assert!(balance_degree(3, 1).is_err());
        assert!(balance_degree(1, 2).is_err());
        assert!(balance_degree(4, 0).is_err());
    }

    #[test]
    fn graded_lex_order() {
        let lo = Monomial::from_powers(&[(Sym::K, 3), (Sym::A1, 1)]);
        let hi = Monomial::from_powers(&[(Sym::K, 1), (Sym::A1, 3)]);
        assert!(hi > lo);
        assert!(Monomial::var(Sym::C) < lo);
    }

    #[test]
    fn display_forms() {
        let p = &MPoly::monomial(-2, 1, &[(Sym::K, 1), (Sym::A1, 3)])
            + &MPoly::monomial(2, 1, &[(Sym::K, 3), (Sym::A1, 1)]);
        assert_eq!(p.to_string(), "-2·a1^3·k + 2·a1·k^3");
        let a0 = MPoly::monomial(1, 2, &[(Sym::K, 1), (Sym::Lambda, 1)]);
        assert_eq!(a0.factored(), "(k/2)·lambda");
        assert_eq!(a0.scale(&rat(-1, 1)).factored(), "-(k/2)·lambda");
        let drift = &MPoly::monomial(1, 2, &[(Sym::K, 3), (Sym::Lambda, 2)])
            + &MPoly::monomial(-2, 1, &[(Sym::K, 3), (Sym::Mu, 1)]);
        assert_eq!(drift.factored(), "(k^3/2)·(lambda^2 - 4·mu)");
        assert_eq!(v(Sym::K).factored(), "k");
        assert_eq!((-v(Sym::K)).factored(), "-k");
        assert_eq!(MPoly::zero().factored(), "0");
        assert_eq!(MPoly::int(3).factored(), "3");
    }

    #[test]
    fn substitution_and_division() {
        // (a1² k) with a1 := 2k  ->  4k³
        let p = MPoly::monomial(1, 1, &[(Sym::A1, 2), (Sym::K, 1)]);
        let s = p.substitute(Sym::A1, &MPoly::monomial(2, 1, &[(Sym::K, 1)]));
        assert_eq!(s, MPoly::monomial(4, 1, &[(Sym::K, 3)]));
        let q = s.div_by_term(&MPoly::monomial(2, 1, &[(Sym::K, 1)])).unwrap();
        assert_eq!(q, MPoly::monomial(2, 1, &[(Sym::K, 2)]));
        assert!(s.div_by_term(&v(Sym::Mu)).is_none());
        assert_eq!(q.scale(&rat(2, 1)).sqrt_term(), Some(MPoly::monomial(2, 1, &[(Sym::K, 1)])));
        assert!(v(Sym::K).sqrt_term().is_none());
    }
}
