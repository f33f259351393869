//! Truncated-digit p-adic scalars and exact `p`-power phases.
//!
//! [`PadicScalar`] models an element of `Q_p` as `p^v * u` with a unit `u`
//! known to finitely many base-`p` digits.  Precision is a property of the
//! value, not of a global context: cancellation in addition shortens the
//! digit vector, and an operation that would need digits nobody has fails
//! with [`Error::PrecisionExhausted`] instead of fabricating zeros.
//!
//! [`PPhase`] is the exact value group of the standard additive character:
//! a rational `a / p^k` modulo 1.  The character itself is
//! `chi(x) = e^{2 pi i {x}_p}` where `{x}_p` is the p-power fractional part;
//! its kernel is exactly the ring of integers.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::cyclo::{Cyc, Rat};
use crate::error::{Error, Result};

/// Default number of tracked unit digits.
pub const DEFAULT_PRECISION: usize = 24;

/// Exact phase `num / p^k` modulo 1 (the value group of the standard
/// character).  Always reduced: `p` does not divide `num` unless the phase
/// is zero, in which case `k = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PPhase {
    p: u64,
    k: u32,
    num: u128,
}

fn p_pow_u128(p: u64, k: u32) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..k {
        acc = acc.checked_mul(p as u128).expect("phase denominator overflows u128");
    }
    acc
}

impl PPhase {
    pub fn zero(p: u64) -> Self {
        PPhase { p, k: 0, num: 0 }
    }

    pub fn new(p: u64, k: u32, num: u128) -> Self {
        let mut k = k;
        let mut num = num % p_pow_u128(p, k);
        while k > 0 && num % p as u128 == 0 {
            num /= p as u128;
            k -= 1;
        }
        if num == 0 {
            k = 0;
        }
        PPhase { p, k, num }
    }

    /// The p-power fractional part of a rational: the unique `a / p^k` mod 1
    /// with `r - a/p^k` p-integral.
    pub fn from_rat(p: u64, r: &Rat) -> Self {
        if r.is_zero() {
            return PPhase::zero(p);
        }
        let (vn, nu) = split_p_power(r.numer(), p);
        let (vd, du) = split_p_power(r.denom(), p);
        if vd <= vn {
            return PPhase::zero(p);
        }
        let k = vd - vn;
        let pk = BigInt::from(p).pow(k);
        let a = modulo(&(nu * inverse_mod(&du, &pk)), &pk);
        PPhase::new(p, k, a.to_u128().expect("phase numerator fits u128"))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Denominator exponent: the phase is `num / p^k`.
    pub fn level(&self) -> u32 {
        self.k
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn add(&self, other: &PPhase) -> PPhase {
        assert_eq!(self.p, other.p, "phase primes must match");
        let k = self.k.max(other.k);
        let a = self.num * p_pow_u128(self.p, k - self.k);
        let b = other.num * p_pow_u128(self.p, k - other.k);
        PPhase::new(self.p, k, a + b)
    }

    pub fn neg(&self) -> PPhase {
        if self.num == 0 {
            return *self;
        }
        PPhase { p: self.p, k: self.k, num: p_pow_u128(self.p, self.k) - self.num }
    }

    pub fn sub(&self, other: &PPhase) -> PPhase {
        self.add(&other.neg())
    }

    pub fn scale_int(&self, m: i64) -> PPhase {
        PPhase::from_rat(self.p, &(self.as_rat() * Rat::from_integer(BigInt::from(m))))
    }

    pub fn as_rat(&self) -> Rat {
        Rat::new(BigInt::from(self.num), BigInt::from(p_pow_u128(self.p, self.k)))
    }

    /// The character value `e^{2 pi i num / p^k}` on the exact track.
    pub fn to_cyc(&self) -> Cyc {
        if self.num == 0 {
            return Cyc::one();
        }
        let order = p_pow_u128(self.p, self.k);
        let order = u64::try_from(order).expect("character order fits u64");
        Cyc::root_of_unity(order, self.num as i64)
    }
}

impl fmt::Display for PPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}^{}", self.num, self.p, self.k)
        }
    }
}

/// Split `n = p^v * u`; returns `(v, u)` with `u` coprime to `p`.
fn split_p_power(n: &BigInt, p: u64) -> (u32, BigInt) {
    if n.is_zero() {
        return (0, BigInt::zero());
    }
    let p = BigInt::from(p);
    let mut v = 0;
    let mut u = n.clone();
    while (&u % &p).is_zero() {
        u /= &p;
        v += 1;
    }
    (v, u)
}

fn modulo(a: &BigInt, m: &BigInt) -> BigInt {
    ((a % m) + m) % m
}

/// Modular inverse of `a` modulo `m` (panics unless coprime).
fn inverse_mod(a: &BigInt, m: &BigInt) -> BigInt {
    let e = num_integer::Integer::extended_gcd(&modulo(a, m), m);
    assert!(e.gcd.is_one(), "inverse_mod: arguments not coprime");
    modulo(&e.x, m)
}

/// A p-adic number: exactly zero, or `p^val * unit` with the unit known to
/// `digits.len()` base-`p` digits (`digits[0] != 0`).
#[derive(Clone, PartialEq, Eq)]
pub struct PadicScalar {
    p: u64,
    form: Form,
}

#[derive(Clone, PartialEq, Eq)]
enum Form {
    Zero,
    Finite { val: i64, digits: Vec<u32> },
}

impl PadicScalar {
    pub fn zero(p: u64) -> Self {
        PadicScalar { p, form: Form::Zero }
    }

    /// Build from explicit digit data (used by parsers and tests).
    pub fn from_unit_digits(p: u64, val: i64, digits: Vec<u32>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::invalid("empty digit vector"));
        }
        if digits[0] == 0 {
            return Err(Error::invalid("leading digit of the unit part must be nonzero"));
        }
        if digits.iter().any(|&d| d as u64 >= p) {
            return Err(Error::invalid(format!("digit out of range for p = {p}")));
        }
        Ok(PadicScalar { p, form: Form::Finite { val, digits } })
    }

    pub fn from_integer(p: u64, n: i64, precision: usize) -> Self {
        PadicScalar::from_rational(p, &Rat::from_integer(BigInt::from(n)), precision)
    }

    /// Exact digits of a rational, truncated to `precision` unit digits.
    pub fn from_rational(p: u64, r: &Rat, precision: usize) -> Self {
        assert!(precision > 0, "precision must be positive");
        if r.is_zero() {
            return PadicScalar::zero(p);
        }
        let (vn, nu) = split_p_power(r.numer(), p);
        let (vd, du) = split_p_power(r.denom(), p);
        let val = vn as i64 - vd as i64;
        let pk = BigInt::from(p).pow(precision as u32);
        let unit = modulo(&(nu * inverse_mod(&du, &pk)), &pk);
        let digits = digits_of(&unit, p, precision);
        PadicScalar { p, form: Form::Finite { val, digits } }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.form, Form::Zero)
    }

    /// `None` for the exact zero (valuation +infinity).
    pub fn valuation(&self) -> Option<i64> {
        match &self.form {
            Form::Zero => None,
            Form::Finite { val, .. } => Some(*val),
        }
    }

    /// Number of known unit digits (`usize::MAX` for the exact zero).
    pub fn precision(&self) -> usize {
        match &self.form {
            Form::Zero => usize::MAX,
            Form::Finite { digits, .. } => digits.len(),
        }
    }

    pub fn digits(&self) -> &[u32] {
        match &self.form {
            Form::Zero => &[],
            Form::Finite { digits, .. } => digits,
        }
    }

    fn unit_big(&self) -> BigUint {
        let mut acc = BigUint::zero();
        for &d in self.digits().iter().rev() {
            acc = acc * self.p + d;
        }
        acc
    }

    /// `|x| = q^{-v}` as an exact rational (`0` for the zero element).
    /// The exact rational carried by the finite digit expansion,
    /// `sum_i d_i p^{v+i}` (zero for the exact zero).
    pub fn as_rat(&self) -> Rat {
        match &self.form {
            Form::Zero => Rat::zero(),
            Form::Finite { val, digits } => {
                let mut acc = BigInt::zero();
                for &d in digits.iter().rev() {
                    acc = acc * BigInt::from(self.p) + BigInt::from(d);
                }
                let scale = if *val >= 0 {
                    Rat::from_integer(BigInt::from(self.p).pow(*val as u32))
                } else {
                    Rat::new(BigInt::one(), BigInt::from(self.p).pow((-*val) as u32))
                };
                Rat::from_integer(acc) * scale
            }
        }
    }

    pub fn module_rat(&self) -> Rat {
        match self.valuation() {
            None => Rat::zero(),
            Some(v) if v >= 0 => Rat::new(BigInt::one(), BigInt::from(self.p).pow(v as u32)),
            Some(v) => Rat::from_integer(BigInt::from(self.p).pow((-v) as u32)),
        }
    }

    pub fn add(&self, other: &PadicScalar) -> Result<PadicScalar> {
        assert_eq!(self.p, other.p, "primes must match");
        let p = self.p;
        match (&self.form, &other.form) {
            (Form::Zero, _) => Ok(other.clone()),
            (_, Form::Zero) => Ok(self.clone()),
            (Form::Finite { val: a, digits: da }, Form::Finite { val: b, digits: db }) => {
                let lo = (*a).min(*b);
                let horizon = (a + da.len() as i64).min(b + db.len() as i64);
                if horizon <= lo {
                    return Err(Error::PrecisionExhausted(
                        "operands share no digit window".into(),
                    ));
                }
                let width = (horizon - lo) as usize;
                let pk = BigInt::from(p).pow(width as u32);
                let ua = BigInt::from(self.unit_big());
                let ub = BigInt::from(other.unit_big());
                let sa = ua * BigInt::from(p).pow((a - lo) as u32);
                let sb = ub * BigInt::from(p).pow((b - lo) as u32);
                let sum = modulo(&(sa + sb), &pk);
                if sum.is_zero() {
                    return Err(Error::PrecisionExhausted(format!(
                        "all {width} known digits cancelled in addition"
                    )));
                }
                let (shift, unit) = split_p_power(&sum, p);
                let digits = digits_of(&unit, p, width - shift as usize);
                Ok(PadicScalar {
                    p,
                    form: Form::Finite { val: lo + shift as i64, digits },
                })
            }
        }
    }

    pub fn neg(&self) -> PadicScalar {
        match &self.form {
            Form::Zero => self.clone(),
            Form::Finite { val, digits } => {
                let pk = BigInt::from(self.p).pow(digits.len() as u32);
                let unit = modulo(&(-BigInt::from(self.unit_big())), &pk);
                PadicScalar {
                    p: self.p,
                    form: Form::Finite { val: *val, digits: digits_of(&unit, self.p, digits.len()) },
                }
            }
        }
    }

    pub fn sub(&self, other: &PadicScalar) -> Result<PadicScalar> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &PadicScalar) -> Result<PadicScalar> {
        assert_eq!(self.p, other.p, "primes must match");
        match (&self.form, &other.form) {
            (Form::Zero, _) | (_, Form::Zero) => Ok(PadicScalar::zero(self.p)),
            (Form::Finite { val: a, digits: da }, Form::Finite { val: b, digits: db }) => {
                let width = da.len().min(db.len());
                let pk = BigUint::from(self.p).pow(width as u32);
                let unit = (self.unit_big() * other.unit_big()) % pk;
                let unit = BigInt::from(unit);
                Ok(PadicScalar {
                    p: self.p,
                    form: Form::Finite { val: a + b, digits: digits_of(&unit, self.p, width) },
                })
            }
        }
    }

    pub fn inv(&self) -> Result<PadicScalar> {
        match &self.form {
            Form::Zero => Err(Error::DivisionByZero),
            Form::Finite { val, digits } => {
                let pk = BigInt::from(self.p).pow(digits.len() as u32);
                let unit = inverse_mod(&BigInt::from(self.unit_big()), &pk);
                Ok(PadicScalar {
                    p: self.p,
                    form: Form::Finite { val: -val, digits: digits_of(&unit, self.p, digits.len()) },
                })
            }
        }
    }

    pub fn div(&self, other: &PadicScalar) -> Result<PadicScalar> {
        self.mul(&other.inv()?)
    }

    /// The p-power fractional part `{x}_p` as an exact phase.  Needs the
    /// digits at the negative powers of `p`, so the valuation must satisfy
    /// `-val <= precision`.
    pub fn frac_part(&self) -> Result<PPhase> {
        match &self.form {
            Form::Zero => Ok(PPhase::zero(self.p)),
            Form::Finite { val, digits } => {
                if *val >= 0 {
                    return Ok(PPhase::zero(self.p));
                }
                let k = (-*val) as usize;
                if k > digits.len() {
                    return Err(Error::PrecisionExhausted(format!(
                        "fractional part needs {k} digits, only {} known",
                        digits.len()
                    )));
                }
                let mut num: u128 = 0;
                for &d in digits[..k].iter().rev() {
                    num = num * self.p as u128 + d as u128;
                }
                Ok(PPhase::new(self.p, k as u32, num))
            }
        }
    }

    /// The standard character `chi(x) = e^{2 pi i {x}_p}`, exact.
    pub fn character(&self) -> Result<Cyc> {
        Ok(self.frac_part()?.to_cyc())
    }

    /// Digit-window agreement: equal prime, equal valuation (or both zero),
    /// and identical digits on the common precision window.
    pub fn agrees_with(&self, other: &PadicScalar) -> bool {
        if self.p != other.p {
            return false;
        }
        match (&self.form, &other.form) {
            (Form::Zero, Form::Zero) => true,
            (Form::Finite { val: a, digits: da }, Form::Finite { val: b, digits: db }) => {
                a == b && {
                    let w = da.len().min(db.len());
                    da[..w] == db[..w]
                }
            }
            _ => false,
        }
    }
}

fn digits_of(unit: &BigInt, p: u64, width: usize) -> Vec<u32> {
    let mut u = unit.to_biguint().expect("digits_of expects a reduced nonnegative unit");
    let p = BigUint::from(p);
    let mut out = Vec::with_capacity(width);
    for _ in 0..width {
        let d = (&u % &p).to_u32().unwrap();
        out.push(d);
        u /= &p;
    }
    out
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            Form::Zero => write!(f, "0"),
            Form::Finite { val, digits } => {
                let body: Vec<String> = digits.iter().map(|d| d.to_string()).collect();
                write!(f, "{}^{} * ({})", self.p, val, body.join(","))
            }
        }
    }
}

impl fmt::Debug for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parse the display format `p^v * (d0,d1,...)` (or `0`).
pub fn parse_scalar(s: &str, p_hint: u64) -> Result<PadicScalar> {
    let s = s.trim();
    if s == "0" {
        return Ok(PadicScalar::zero(p_hint));
    }
    let (head, tail) = s
        .split_once('*')
        .ok_or_else(|| Error::invalid(format!("bad scalar literal {s:?}")))?;
    let (p_str, v_str) = head
        .trim()
        .split_once('^')
        .ok_or_else(|| Error::invalid("expected p^v prefix"))?;
    let p: u64 = p_str.trim().parse().map_err(|_| Error::invalid("bad prime"))?;
    let val: i64 = v_str.trim().parse().map_err(|_| Error::invalid("bad valuation"))?;
    let tail = tail.trim();
    let inner = tail
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::invalid("expected digit tuple"))?;
    let digits: std::result::Result<Vec<u32>, _> =
        inner.split(',').map(|d| d.trim().parse::<u32>()).collect();
    let digits = digits.map_err(|_| Error::invalid("bad digit"))?;
    PadicScalar::from_unit_digits(p, val, digits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::{rat, rint};
    use proptest::prelude::*;

    #[test]
    fn inverse_of_two_mod_5_pow_24() {
        // Frozen oracle: 1/2 in Z_5 has digits 3,2,2,2,... because
        // 2 * (3 + 2*5 + 2*5^2 + ...) = 6 + 4*5 + ... telescopes to 1.
        let two = PadicScalar::from_integer(5, 2, 24);
        let inv = two.inv().unwrap();
        assert_eq!(inv.valuation(), Some(0));
        let mut expected = vec![2u32; 24];
        expected[0] = 3;
        assert_eq!(inv.digits(), &expected[..]);
        let one = two.mul(&inv).unwrap();
        assert!(one.agrees_with(&PadicScalar::from_integer(5, 1, 24)));
    }

    #[test]
    fn fractional_part_reads_negative_digits() {
        // 7/9 = 3^{-2} * 7: fractional part 7/9, character zeta_9^7.
        let x = PadicScalar::from_rational(3, &rat(7, 9), 24);
        assert_eq!(x.valuation(), Some(-2));
        let ph = x.frac_part().unwrap();
        assert_eq!(ph.as_rat(), rat(7, 9));
        assert_eq!(x.character().unwrap(), Cyc::root_of_unity(9, 7));
        // Integral values sit in the kernel of the character.
        let y = PadicScalar::from_rational(3, &rat(5, 7), 24);
        assert_eq!(y.character().unwrap(), Cyc::one());
    }

    #[test]
    fn cancellation_is_an_error_not_a_zero() {
        let a = PadicScalar::from_integer(7, 123, 12);
        let b = a.neg();
        match a.add(&b) {
            Err(Error::PrecisionExhausted(_)) => {}
            other => panic!("expected precision exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn addition_tracks_lost_precision() {
        // (1 + 3^20) - 1 has valuation 20 and only 4 remaining digits.
        let one = PadicScalar::from_integer(3, 1, 24);
        let x = PadicScalar::from_rational(3, &(rint(1) + rint(3).pow(20)), 24);
        let d = x.sub(&one).unwrap();
        assert_eq!(d.valuation(), Some(20));
        assert_eq!(d.precision(), 4);
        assert_eq!(d.digits()[0], 1);
    }

    #[test]
    fn frac_part_needs_enough_digits() {
        let x = PadicScalar::from_unit_digits(3, -30, vec![1; 24]).unwrap();
        assert!(matches!(x.frac_part(), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn module_is_q_to_minus_v() {
        let x = PadicScalar::from_rational(5, &rat(50, 3), 24);
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.module_rat(), rat(1, 25));
        assert_eq!(PadicScalar::zero(5).module_rat(), Rat::zero());
    }

    #[test]
    fn display_roundtrip() {
        let x = PadicScalar::from_rational(3, &rat(7, 9), 6);
        let s = x.to_string();
        assert_eq!(s, "3^-2 * (1,2,0,0,0,0)");
        let y = parse_scalar(&s, 3).unwrap();
        assert_eq!(x, y);
        assert_eq!(parse_scalar("0", 3).unwrap(), PadicScalar::zero(3));
    }

    #[test]
    fn phase_arithmetic_matches_rationals() {
        let a = PPhase::from_rat(5, &rat(3, 25));
        let b = PPhase::from_rat(5, &rat(7, 5));
        let s = a.add(&b);
        // 3/25 + 7/5 = 38/25 = 13/25 mod 1.
        assert_eq!(s.as_rat(), rat(13, 25));
        assert_eq!(a.neg().add(&a), PPhase::zero(5));
        // The p-fractional part ignores prime-to-p denominators: 1/6 at p=3
        // is (1/2)*(1/3) and 1/2 = 2 mod 3, so the phase is 2/3.
        assert_eq!(PPhase::from_rat(3, &rat(1, 6)).as_rat(), rat(2, 3));
    }

    proptest! {
        #[test]
        fn rational_model_agrees(num in -200i64..200, den in 1i64..200, m in -100i64..100) {
            for p in [2u64, 3, 5] {
                let r1 = rat(num, den);
                let r2 = rat(m, 7);
                let x = PadicScalar::from_rational(p, &r1, 20);
                let y = PadicScalar::from_rational(p, &r2, 20);
                let direct = PadicScalar::from_rational(p, &(&r1 * &r2), 20);
                prop_assert!(x.mul(&y).unwrap().agrees_with(&direct));
                let sum = &r1 + &r2;
                match x.add(&y) {
                    Ok(s) => prop_assert!(s.agrees_with(&PadicScalar::from_rational(p, &sum, 20))),
                    Err(_) => prop_assert!(sum.is_zero()),
                }
            }
        }

        #[test]
        fn character_is_additive(num in -50i64..50, den in 1i64..50, num2 in -50i64..50) {
            let p = 3u64;
            let r1 = rat(num, den);
            let r2 = rat(num2, if den % 3 == 0 { 9 } else { den });
            let lhs = PPhase::from_rat(p, &(&r1 + &r2));
            let rhs = PPhase::from_rat(p, &r1).add(&PPhase::from_rat(p, &r2));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
