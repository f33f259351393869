//! Exact cyclotomic numbers and the two-track value type.
//!
//! [`Cyc`] is an element of the cyclotomic field `Q(zeta_N)`, stored
//! sparsely in the canonical tensor basis: for each prime power `l^a || N`
//! the local exponent is kept below `phi(l^a)`, using the minimal-polynomial
//! relation
//!
//! ```text
//!   zeta^{r + (l-1) l^{a-1}} = - sum_{i=0}^{l-2} zeta^{r + i l^{a-1}}
//! ```
//!
//! and local exponents are glued by the Chinese remainder theorem.  The
//! canonical form (after dropping zero coefficients and shrinking the order
//! by the common exponent divisor) is unique per value, so equality is
//! structural and hashing/ordering are sound.
//!
//! Everything the library ever needs to keep exact lives here: roots of
//! unity of order `2^a p^b`, rationals, and `sqrt(p)` via the quadratic
//! Gauss sum, hence all half-integral powers of `q`.  [`Value`] is the
//! two-track wrapper: exact cyclotomic, or a complex double for data that
//! enters through floats.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Arbitrary-precision rational; the coefficient field of everything exact.
pub type Rat = Ratio<BigInt>;

/// Convenience constructor for small rationals.
pub fn rat(num: i64, den: i64) -> Rat {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

/// Convenience constructor for small integers as rationals.
pub fn rint(n: i64) -> Rat {
    Ratio::from_integer(BigInt::from(n))
}

/// Parse `"a"` or `"a/b"` into a rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::invalid(format!("bad rational numerator {num:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::invalid(format!("bad rational denominator {den:?}")))?;
    if d.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(Ratio::new(n, d))
}

/// Format a rational as `a` or `a/b`.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

fn lcm_u64(a: u64, b: u64) -> u64 {
    num_integer::lcm(a, b)
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Modular inverse for u64 moduli (panics if not coprime; callers only pass
/// coprime pairs by construction).
fn mod_inverse(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    assert!(old_r == 1, "mod_inverse: arguments not coprime");
    (old_s.rem_euclid(m as i128)) as u64
}

fn factorize(mut n: u64) -> SmallVec<[(u64, u32); 4]> {
    let mut out = SmallVec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut a = 0;
            while n % d == 0 {
                n /= d;
                a += 1;
            }
            out.push((d, a));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Rewrite `zeta_n^e` as a signed combination of canonical-basis monomials.
fn reduce_exponent(n: u64, factors: &[(u64, u32)], e: u64) -> SmallVec<[(i8, u64); 8]> {
    if n == 1 {
        return smallvec![(1, 0)];
    }
    let e = e % n;
    let mut acc: SmallVec<[(i8, u64); 8]> = smallvec![(1i8, 0u64)];
    for &(l, a) in factors {
        let la = l.pow(a);
        let cofactor = n / la;
        // local exponent: zeta_{l^a} = zeta_n^{cofactor}
        let t = mulmod(e % la, mod_inverse(cofactor % la, la), la);
        let step = la / l; // l^{a-1}
        let phi = step * (l - 1);
        let local: SmallVec<[(i8, u64); 8]> = if t < phi {
            smallvec![(1, t)]
        } else {
            let r = t - (l - 1) * step;
            (0..l - 1).map(|i| (-1i8, r + i * step)).collect()
        };
        let mut next = SmallVec::new();
        for &(s0, e0) in &acc {
            for &(s1, t1) in &local {
                next.push((s0 * s1, (e0 + mulmod(t1, cofactor, n)) % n));
            }
        }
        acc = next;
    }
    acc
}

/// An exact cyclotomic number in canonical form.
#[derive(Clone, PartialEq, Eq)]
pub struct Cyc {
    order: u64,
    terms: BTreeMap<u64, Rat>,
}

impl Cyc {
    pub fn zero() -> Self {
        Cyc { order: 1, terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Cyc::from_rat(Rat::one())
    }

    pub fn from_rat(r: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(0, r);
        }
        Cyc { order: 1, terms }
    }

    pub fn from_int(n: i64) -> Self {
        Cyc::from_rat(rint(n))
    }

    /// `zeta_n^e`, the standard primitive root `exp(2 pi i / n)` to the `e`.
    pub fn root_of_unity(n: u64, e: i64) -> Self {
        assert!(n >= 1, "root order must be positive");
        let e = e.rem_euclid(n as i64) as u64;
        let factors = factorize(n);
        let mut terms = BTreeMap::new();
        add_reduced(&mut terms, n, &factors, e, &Rat::one());
        Cyc { order: n, terms }.normalized()
    }

    /// `e^{2 pi i r}` for a rational `r` whose denominator is arbitrary.
    pub fn unit_phase(r: &Rat) -> Self {
        let den = r.denom().to_u64().expect("phase denominator too large");
        let num = (r.numer() % BigInt::from(den) + BigInt::from(den)) % BigInt::from(den);
        Cyc::root_of_unity(den, num.to_i64().expect("phase numerator too large"))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &Rat)> {
        self.terms.iter().map(|(&e, c)| (e, c))
    }

    /// The value as a rational, if it is one.
    pub fn as_rat(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    fn normalized(mut self) -> Self {
        self.terms.retain(|_, c| !c.is_zero());
        if self.terms.is_empty() {
            self.order = 1;
            return self;
        }
        loop {
            let mut g = self.order;
            for (&e, _) in &self.terms {
                g = gcd_u64(g, e);
                if g == 1 {
                    break;
                }
            }
            if g == 1 {
                return self;
            }
            let n = self.order / g;
            let factors = factorize(n);
            let mut terms = BTreeMap::new();
            for (e, c) in std::mem::take(&mut self.terms) {
                add_reduced(&mut terms, n, &factors, e / g, &c);
            }
            terms.retain(|_, c: &mut Rat| !c.is_zero());
            self.order = n;
            self.terms = terms;
            if self.terms.is_empty() {
                self.order = 1;
                return self;
            }
        }
    }

    fn lifted_terms(&self, n: u64, factors: &[(u64, u32)], out: &mut BTreeMap<u64, Rat>) {
        let scale = n / self.order;
        for (&e, c) in &self.terms {
            add_reduced(out, n, factors, e * scale, c);
        }
    }

    pub fn add(&self, other: &Cyc) -> Cyc {
        let n = lcm_u64(self.order, other.order);
        let factors = factorize(n);
        let mut terms = BTreeMap::new();
        self.lifted_terms(n, &factors, &mut terms);
        other.lifted_terms(n, &factors, &mut terms);
        Cyc { order: n, terms }.normalized()
    }

    pub fn sub(&self, other: &Cyc) -> Cyc {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Cyc {
        Cyc {
            order: self.order,
            terms: self.terms.iter().map(|(&e, c)| (e, -c.clone())).collect(),
        }
    }

    pub fn scale(&self, r: &Rat) -> Cyc {
        if r.is_zero() {
            return Cyc::zero();
        }
        Cyc {
            order: self.order,
            terms: self.terms.iter().map(|(&e, c)| (e, c * r)).collect(),
        }
    }

    pub fn mul(&self, other: &Cyc) -> Cyc {
        if self.is_zero() || other.is_zero() {
            return Cyc::zero();
        }
        if let Some(r) = self.as_rat() {
            return other.scale(&r);
        }
        if let Some(r) = other.as_rat() {
            return self.scale(&r);
        }
        let n = lcm_u64(self.order, other.order);
        let factors = factorize(n);
        let (sa, sb) = (n / self.order, n / other.order);
        let mut terms = BTreeMap::new();
        for (&e1, c1) in &self.terms {
            for (&e2, c2) in &other.terms {
                let e = (e1 * sa + e2 * sb) % n;
                add_reduced(&mut terms, n, &factors, e, &(c1 * c2));
            }
        }
        Cyc { order: n, terms }.normalized()
    }

    /// Complex conjugation, i.e. `zeta -> zeta^{-1}` on every root.
    pub fn conj(&self) -> Cyc {
        let n = self.order;
        let factors = factorize(n);
        let mut terms = BTreeMap::new();
        for (&e, c) in &self.terms {
            add_reduced(&mut terms, n, &factors, (n - e) % n, c);
        }
        Cyc { order: n, terms }.normalized()
    }

    pub fn pow(&self, mut k: u64) -> Cyc {
        let mut base = self.clone();
        let mut acc = Cyc::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `|self|^2 = self * conj(self)`, exact.
    pub fn modulus_squared(&self) -> Cyc {
        self.mul(&self.conj())
    }

    /// Inverse, available whenever `self * conj(self)` is a nonzero rational
    /// (true for every unit the library produces: roots of unity, powers of
    /// `sqrt(p)`, oscillator factors, theta values, and their rational
    /// multiples).
    pub fn inv(&self) -> Result<Cyc> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let conj = self.conj();
        let m = self.mul(&conj);
        match m.as_rat() {
            Some(r) if !r.is_zero() => Ok(conj.scale(&(Rat::one() / r))),
            _ => Err(Error::Unsupported(
                "inverse requires |v|^2 rational; general cyclotomic division is out of scope"
                    .into(),
            )),
        }
    }

    /// The positive square root of a prime, exactly:
    /// `sqrt(2) = zeta_8 + zeta_8^{-1}`, and for odd `p` the quadratic Gauss
    /// sum `g = sum_t (t|p) zeta_p^t`, which is `sqrt(p)` for `p = 1 mod 4`
    /// and `i sqrt(p)` for `p = 3 mod 4`.
    pub fn sqrt_prime(p: u64) -> Cyc {
        if p == 2 {
            return Cyc::root_of_unity(8, 1).add(&Cyc::root_of_unity(8, -1));
        }
        assert!(p % 2 == 1 && p > 1, "sqrt_prime expects a prime");
        let mut g = Cyc::zero();
        for t in 1..p {
            let chi = legendre(t, p);
            let term = Cyc::root_of_unity(p, t as i64);
            g = if chi == 1 { g.add(&term) } else { g.sub(&term) };
        }
        if p % 4 == 1 {
            g
        } else {
            // g = i sqrt(p); multiply by -i.
            g.mul(&Cyc::root_of_unity(4, -1))
        }
    }

    /// `q^{h/2}` for `q = p`, as an exact value (`h` may be negative or odd).
    pub fn q_half_pow(p: u64, h: i64) -> Cyc {
        let k = h.div_euclid(2);
        let r = h.rem_euclid(2);
        let int_part = if k >= 0 {
            Cyc::from_rat(Ratio::from_integer(BigInt::from(p).pow(k as u32)))
        } else {
            Cyc::from_rat(Ratio::new(BigInt::one(), BigInt::from(p).pow((-k) as u32)))
        };
        if r == 0 {
            int_part
        } else {
            int_part.mul(&Cyc::sqrt_prime(p))
        }
    }

    /// Render on the float track.
    pub fn to_c64(&self) -> Complex64 {
        let mut z = Complex64::new(0.0, 0.0);
        for (&e, c) in &self.terms {
            let arg = 2.0 * std::f64::consts::PI * (e as f64) / (self.order as f64);
            let coeff = c.to_f64().unwrap_or(f64::NAN);
            z += Complex64::new(arg.cos() * coeff, arg.sin() * coeff);
        }
        z
    }

    /// Decompose as `c * zeta_order^e` (a rational times a root of unity),
    /// if the value has that shape.  The float argument only guides the
    /// candidate exponent; the decomposition is verified exactly.
    pub fn monomial_decompose(&self) -> Option<(Rat, u64, u64)> {
        if self.is_zero() {
            return Some((Rat::zero(), 1, 0));
        }
        if self.terms.len() == 1 {
            let (&e, c) = self.terms.iter().next().unwrap();
            return Some((c.clone(), self.order, e));
        }
        // |v|^2 must be the square of a rational.
        let m = self.modulus_squared().as_rat()?;
        let c = rat_sqrt(&m)?;
        let n = self.order;
        let z = self.to_c64();
        let turns = z.arg() / (2.0 * std::f64::consts::PI) * n as f64;
        // A negative coefficient shifts the argument by half a turn.
        let candidates = [
            (c.clone(), turns.round() as i64),
            (-c.clone(), (turns - n as f64 / 2.0).round() as i64),
        ];
        for (coeff, guess) in candidates {
            for delta in [0i64, 1, -1] {
                let e = guess + delta;
                if Cyc::root_of_unity(n, e).scale(&coeff) == *self {
                    return Some((coeff, n, e.rem_euclid(n as i64) as u64));
                }
            }
        }
        None
    }

    /// Deterministic sign choice used to pin square-root branches: the
    /// canonical representative of `{v, -v}` is the one whose first
    /// canonical-basis coefficient is positive.
    pub fn canonical_sign_rep(&self) -> Cyc {
        match self.terms.values().next() {
            Some(c) if c.is_negative() => self.neg(),
            _ => self.clone(),
        }
    }

    /// Serialize into a stable JSON value (order + sorted term list).
    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(&e, c)| serde_json::json!([e, format_rat(c)]))
            .collect();
        serde_json::json!({ "order": self.order, "terms": terms })
    }
}

/// Linear-time accumulator for large sums of scaled roots of unity.
///
/// Folding thousands of terms through [`Cyc::add`] clones the growing term
/// map at every step; this builder keeps one mutable map and normalizes
/// once at the end.
pub struct CycSum {
    order: u64,
    factors: SmallVec<[(u64, u32); 4]>,
    terms: BTreeMap<u64, Rat>,
}

impl CycSum {
    pub fn new() -> Self {
        CycSum { order: 1, factors: factorize(1), terms: BTreeMap::new() }
    }

    /// Enlarge the working order to a multiple of `n`, relifting stored
    /// terms once.
    fn grow(&mut self, n: u64) {
        if self.order % n == 0 {
            return;
        }
        let m = lcm_u64(self.order, n);
        let factors = factorize(m);
        let scale = m / self.order;
        for (e, c) in std::mem::take(&mut self.terms) {
            add_reduced(&mut self.terms, m, &factors, e * scale, &c);
        }
        self.order = m;
        self.factors = factors;
    }

    /// Add `coeff * zeta_n^e`.
    pub fn add_root(&mut self, n: u64, e: i64, coeff: &Rat) {
        if coeff.is_zero() {
            return;
        }
        self.grow(n);
        let scale = self.order / n;
        let e = (e.rem_euclid(n as i64) as u64) * scale % self.order;
        add_reduced(&mut self.terms, self.order, &self.factors, e, coeff);
    }

    /// Add `coeff * e^{2 pi i r}`.
    pub fn add_phase(&mut self, r: &Rat, coeff: &Rat) {
        let den = r.denom().to_u64().expect("phase denominator too large");
        let num = (r.numer() % BigInt::from(den) + BigInt::from(den)) % BigInt::from(den);
        self.add_root(den, num.to_i64().expect("phase numerator too large"), coeff);
    }

    /// Add `coeff * v` for a full cyclotomic value.
    pub fn add_cyc(&mut self, v: &Cyc, coeff: &Rat) {
        if coeff.is_zero() || v.is_zero() {
            return;
        }
        self.grow(v.order);
        let scale = self.order / v.order;
        for (&e, c) in &v.terms {
            add_reduced(&mut self.terms, self.order, &self.factors, e * scale % self.order, &(c * coeff));
        }
    }

    /// The accumulated value in canonical form.
    pub fn finish(self) -> Cyc {
        Cyc { order: self.order, terms: self.terms }.normalized()
    }
}

impl Default for CycSum {
    fn default() -> Self {
        Self::new()
    }
}

fn add_reduced(terms: &mut BTreeMap<u64, Rat>, n: u64, factors: &[(u64, u32)], e: u64, c: &Rat) {
    if c.is_zero() {
        return;
    }
    for (sign, exp) in reduce_exponent(n, factors, e) {
        let entry = terms.entry(exp).or_insert_with(Rat::zero);
        if sign > 0 {
            *entry += c;
        } else {
            *entry -= c;
        }
        if entry.is_zero() {
            terms.remove(&exp);
        }
    }
}

/// Legendre symbol `(a|p)` for odd prime `p`, `a` not divisible by `p`.
pub fn legendre(a: u64, p: u64) -> i32 {
    let mut result = 1u64;
    let mut base = a % p;
    let mut exp = (p - 1) / 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mulmod(result, base, p);
        }
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    if result == 1 {
        1
    } else if result == p - 1 {
        -1
    } else {
        0
    }
}

/// Exact square root of a nonnegative rational, if it is rational.
pub fn rat_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(Ratio::new(ns, ds))
    } else {
        None
    }
}

impl fmt::Display for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&e, c) in &self.terms {
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if e == 0 {
                write!(f, "{}", format_rat(&mag))?;
            } else {
                if !mag.is_one() {
                    write!(f, "{}*", format_rat(&mag))?;
                }
                write!(f, "z[{}/{}]", e, self.order)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Two-track value: exact cyclotomic, or complex double.
///
/// Mixed-track arithmetic demotes to floats; exact stays exact.
#[derive(Clone, Debug)]
pub enum Value {
    Exact(Cyc),
    Approx(Complex64),
}

/// Tolerance used whenever a comparison involves the float track.
pub const FLOAT_TOL: f64 = 1e-9;

impl Value {
    pub fn zero() -> Self {
        Value::Exact(Cyc::zero())
    }

    pub fn one() -> Self {
        Value::Exact(Cyc::one())
    }

    pub fn from_rat(r: Rat) -> Self {
        Value::Exact(Cyc::from_rat(r))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn approx(&self) -> Complex64 {
        match self {
            Value::Exact(c) => c.to_c64(),
            Value::Approx(z) => *z,
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a.add(b)),
            _ => Value::Approx(self.approx() + other.approx()),
        }
    }

    pub fn sub(&self, other: &Value) -> Value {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a.mul(b)),
            _ => Value::Approx(self.approx() * other.approx()),
        }
    }

    pub fn neg(&self) -> Value {
        match self {
            Value::Exact(a) => Value::Exact(a.neg()),
            Value::Approx(z) => Value::Approx(-z),
        }
    }

    pub fn conj(&self) -> Value {
        match self {
            Value::Exact(a) => Value::Exact(a.conj()),
            Value::Approx(z) => Value::Approx(z.conj()),
        }
    }

    pub fn scale(&self, r: &Rat) -> Value {
        match self {
            Value::Exact(a) => Value::Exact(a.scale(r)),
            Value::Approx(z) => Value::Approx(z * r.to_f64().unwrap_or(f64::NAN)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(a) => a.is_zero(),
            Value::Approx(z) => z.norm() <= FLOAT_TOL,
        }
    }

    /// Equality: bit-exact when both operands are exact, `1e-9` otherwise.
    pub fn eq_tol(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a == b,
            _ => (self.approx() - other.approx()).norm() <= FLOAT_TOL,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Exact(c) => serde_json::json!({ "exact": c.to_json() }),
            Value::Approx(z) => serde_json::json!({ "re": z.re, "im": z.im }),
        }
    }
}
