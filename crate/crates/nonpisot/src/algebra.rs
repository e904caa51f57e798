//! Exact arithmetic in the ring Z[lambda] and the field Q(lambda), where
//! lambda = (1 + sqrt(13))/2 satisfies lambda^2 = lambda + 3.
//!
//! Elements are stored on the basis {1, lambda}. Integer components use
//! machine words and promote automatically to arbitrary precision once a
//! checked operation overflows. Sign decisions are exact: a + b*lambda is
//! compared against zero through the norm form, never through floats.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// sqrt(13) to 40 digits; only used to derive the float embedding of lambda.
pub const SQRT13_DECIMAL: &str = "3.605551275463989293119221267470495946251";

/// Float embedding of lambda = (1 + sqrt(13))/2.
pub const LAMBDA: f64 = 2.302775637731994646559610633735247973125;

/// Float embedding of the algebraic conjugate lambda' = 1 - lambda.
pub const LAMBDA_CONJ: f64 = 1.0 - LAMBDA;

/// An integer that lives in a machine word while it fits and transparently
/// promotes to a big integer afterwards. The representation is canonical:
/// a value that fits in an `i64` is always stored as `Small`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Int {
    Small(i64),
    Big(BigInt),
}

impl PartialOrd for Int {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Int {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Int::Small(a), Int::Small(b)) => a.cmp(b),
            // Representation is canonical, so a Big value never fits in i64:
            // its sign alone decides the comparison against any Small.
            (Int::Big(a), Int::Small(_)) => {
                if a.is_positive() { Ordering::Greater } else { Ordering::Less }
            }
            (Int::Small(_), Int::Big(b)) => {
                if b.is_positive() { Ordering::Less } else { Ordering::Greater }
            }
            (Int::Big(a), Int::Big(b)) => a.cmp(b),
        }
    }
}

impl Int {
    pub fn zero() -> Self {
        Int::Small(0)
    }

    pub fn one() -> Self {
        Int::Small(1)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        match v.to_i64() {
            Some(s) => Int::Small(s),
            None => Int::Big(v),
        }
    }

    pub fn to_bigint(&self) -> BigInt {
        match self {
            Int::Small(s) => BigInt::from(*s),
            Int::Big(b) => b.clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Int::Small(s) => *s as f64,
            Int::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Int::Small(0))
    }

    pub fn signum(&self) -> i32 {
        match self {
            Int::Small(s) => (*s).signum() as i32,
            Int::Big(b) => {
                if b.is_positive() {
                    1
                } else if b.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn abs(&self) -> Int {
        match self {
            Int::Small(s) => match s.checked_abs() {
                Some(a) => Int::Small(a),
                None => Int::from_bigint(-BigInt::from(*s)),
            },
            Int::Big(b) => Int::from_bigint(b.abs()),
        }
    }

    pub fn checked_i64(&self) -> Option<i64> {
        match self {
            Int::Small(s) => Some(*s),
            Int::Big(_) => None,
        }
    }
}

impl From<i64> for Int {
    fn from(v: i64) -> Self {
        Int::Small(v)
    }
}

impl From<BigInt> for Int {
    fn from(v: BigInt) -> Self {
        Int::from_bigint(v)
    }
}

impl fmt::Display for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Int::Small(s) => write!(f, "{s}"),
            Int::Big(b) => write!(f, "{b}"),
        }
    }
}

macro_rules! int_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for &Int {
            type Output = Int;
            fn $method(self, rhs: &Int) -> Int {
                if let (Int::Small(a), Int::Small(b)) = (self, rhs) {
                    if let Some(r) = a.$checked(*b) {
                        return Int::Small(r);
                    }
                }
                Int::from_bigint(self.to_bigint().$method(rhs.to_bigint()))
            }
        }
        impl $trait for Int {
            type Output = Int;
            fn $method(self, rhs: Int) -> Int {
                (&self).$method(&rhs)
            }
        }
    };
}

int_binop!(Add, add, checked_add);
int_binop!(Sub, sub, checked_sub);
int_binop!(Mul, mul, checked_mul);

impl Neg for &Int {
    type Output = Int;
    fn neg(self) -> Int {
        match self {
            Int::Small(s) => match s.checked_neg() {
                Some(r) => Int::Small(r),
                None => Int::from_bigint(-BigInt::from(*s)),
            },
            Int::Big(b) => Int::from_bigint(-b.clone()),
        }
    }
}

impl Neg for Int {
    type Output = Int;
    fn neg(self) -> Int {
        -&self
    }
}

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        // JSON numbers are only faithful up to 53 bits; larger components are
        // serialised as decimal strings.
        match self {
            Int::Small(s) if s.unsigned_abs() < (1u64 << 53) => serializer.serialize_i64(*s),
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(i64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(n) => Ok(Int::Small(n)),
            Repr::Str(s) => {
                let b: BigInt = s
                    .parse()
                    .map_err(|_| D::Error::custom(format!("invalid integer literal {s:?}")))?;
                Ok(Int::from_bigint(b))
            }
        }
    }
}

/// An element a + b*lambda of Z[lambda].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZLambda {
    pub a: Int,
    pub b: Int,
}

impl ZLambda {
    pub fn new(a: impl Into<Int>, b: impl Into<Int>) -> Self {
        ZLambda { a: a.into(), b: b.into() }
    }

    pub fn zero() -> Self {
        ZLambda::new(0, 0)
    }

    pub fn one() -> Self {
        ZLambda::new(1, 0)
    }

    pub fn lambda() -> Self {
        ZLambda::new(0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Algebraic conjugate: lambda -> 1 - lambda.
    pub fn conj(&self) -> ZLambda {
        ZLambda { a: &self.a + &self.b, b: -&self.b }
    }

    /// Field norm N(a + b*lambda) = a^2 + a*b - 3*b^2.
    pub fn norm(&self) -> Int {
        &(&(&self.a * &self.a) + &(&self.a * &self.b)) - &(&(&self.b * &self.b) * &Int::from(3))
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64() + self.b.to_f64() * LAMBDA
    }

    /// Image under the conjugation embedding, a + b*lambda'.
    pub fn conj_f64(&self) -> f64 {
        self.a.to_f64() + self.b.to_f64() * LAMBDA_CONJ
    }

    /// Exact sign of a + b*lambda. Writing the value as (s + t*sqrt(13))/2
    /// with s = 2a + b and t = b, the sign is decided by integer comparisons
    /// of s^2 against 13 t^2.
    pub fn sign(&self) -> i32 {
        let s = &(&self.a + &self.a) + &self.b;
        let t = &self.b;
        let ss = s.signum();
        let ts = t.signum();
        if ss >= 0 && ts >= 0 {
            if ss == 0 && ts == 0 {
                return 0;
            }
            return 1;
        }
        if ss <= 0 && ts <= 0 {
            return -1;
        }
        // Mixed signs: compare s^2 with 13 t^2.
        let s2 = s.to_bigint().pow(2);
        let t2_13 = t.to_bigint().pow(2) * 13;
        match (s2.cmp(&t2_13), ss > 0) {
            (Ordering::Greater, true) | (Ordering::Less, false) => 1,
            (Ordering::Less, true) | (Ordering::Greater, false) => -1,
            // s^2 = 13 t^2 is impossible for t != 0 since 13 is squarefree.
            (Ordering::Equal, _) => 0,
        }
    }

    /// Exact total order induced by the real embedding.
    pub fn cmp_real(&self, other: &ZLambda) -> Ordering {
        match (self - other).sign() {
            x if x < 0 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    pub fn abs_real(&self) -> ZLambda {
        if self.sign() < 0 {
            -self
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for ZLambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*lambda", self.a, self.b)
    }
}

impl Add for &ZLambda {
    type Output = ZLambda;
    fn add(self, rhs: &ZLambda) -> ZLambda {
        ZLambda { a: &self.a + &rhs.a, b: &self.b + &rhs.b }
    }
}

impl Sub for &ZLambda {
    type Output = ZLambda;
    fn sub(self, rhs: &ZLambda) -> ZLambda {
        ZLambda { a: &self.a - &rhs.a, b: &self.b - &rhs.b }
    }
}

impl Neg for &ZLambda {
    type Output = ZLambda;
    fn neg(self) -> ZLambda {
        ZLambda { a: -&self.a, b: -&self.b }
    }
}

/// (a1 + b1 L)(a2 + b2 L) = a1 a2 + 3 b1 b2 + (a1 b2 + a2 b1 + b1 b2) L,
/// reducing with L^2 = L + 3.
pub fn zl_mul(x: &ZLambda, y: &ZLambda) -> ZLambda {
    let three = Int::from(3);
    let bb = &x.b * &y.b;
    ZLambda {
        a: &(&x.a * &y.a) + &(&bb * &three),
        b: &(&(&x.a * &y.b) + &(&x.b * &y.a)) + &bb,
    }
}

impl Mul for &ZLambda {
    type Output = ZLambda;
    fn mul(self, rhs: &ZLambda) -> ZLambda {
        zl_mul(self, rhs)
    }
}

macro_rules! zl_owned_ops {
    ($($trait:ident/$method:ident/$assign:ident/$assign_m:ident),*) => {$(
        impl $trait for ZLambda {
            type Output = ZLambda;
            fn $method(self, rhs: ZLambda) -> ZLambda { (&self).$method(&rhs) }
        }
        impl $assign<&ZLambda> for ZLambda {
            fn $assign_m(&mut self, rhs: &ZLambda) { *self = (&*self).$method(rhs); }
        }
    )*};
}
zl_owned_ops!(Add/add/AddAssign/add_assign, Sub/sub/SubAssign/sub_assign, Mul/mul/MulAssign/mul_assign);

impl Neg for ZLambda {
    type Output = ZLambda;
    fn neg(self) -> ZLambda {
        -&self
    }
}

/// An element p + q*lambda of Q(lambda), with rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QLambda {
    pub p: BigRational,
    pub q: BigRational,
}

impl QLambda {
    pub fn new(p: BigRational, q: BigRational) -> Self {
        QLambda { p, q }
    }

    pub fn from_integers(p: i64, q: i64) -> Self {
        QLambda {
            p: BigRational::from_integer(BigInt::from(p)),
            q: BigRational::from_integer(BigInt::from(q)),
        }
    }

    pub fn from_rationals(pn: i64, pd: i64, qn: i64, qd: i64) -> Self {
        QLambda {
            p: BigRational::new(BigInt::from(pn), BigInt::from(pd)),
            q: BigRational::new(BigInt::from(qn), BigInt::from(qd)),
        }
    }

    pub fn from_zlambda(z: &ZLambda) -> Self {
        QLambda {
            p: BigRational::from_integer(z.a.to_bigint()),
            q: BigRational::from_integer(z.b.to_bigint()),
        }
    }

    pub fn zero() -> Self {
        QLambda::from_integers(0, 0)
    }

    pub fn one() -> Self {
        QLambda::from_integers(1, 0)
    }

    pub fn lambda() -> Self {
        QLambda::from_integers(0, 1)
    }

    /// lambda^{-1} = (lambda - 1)/3.
    pub fn inv_lambda() -> Self {
        QLambda::from_rationals(-1, 3, 1, 3)
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn conj(&self) -> QLambda {
        QLambda { p: &self.p + &self.q, q: -self.q.clone() }
    }

    /// N(p + q*lambda) = p^2 + p q - 3 q^2, a rational number.
    pub fn norm(&self) -> BigRational {
        &self.p * &self.p + &self.p * &self.q - BigRational::from_integer(BigInt::from(3)) * &self.q * &self.q
    }

    pub fn inv(&self) -> Option<QLambda> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        let c = self.conj();
        Some(QLambda { p: c.p / &n, q: c.q / &n })
    }

    pub fn to_f64(&self) -> f64 {
        self.p.to_f64().unwrap_or(f64::NAN) + self.q.to_f64().unwrap_or(f64::NAN) * LAMBDA
    }

    /// Returns the element as an integer point of Z[lambda] when both
    /// coordinates are integers.
    pub fn as_zlambda(&self) -> Option<ZLambda> {
        if self.p.is_integer() && self.q.is_integer() {
            Some(ZLambda {
                a: Int::from_bigint(self.p.to_integer()),
                b: Int::from_bigint(self.q.to_integer()),
            })
        } else {
            None
        }
    }

    pub fn scale(&self, r: &BigRational) -> QLambda {
        QLambda { p: &self.p * r, q: &self.q * r }
    }

    pub fn sign(&self) -> i32 {
        // Clear denominators, then reuse the exact integer sign test.
        let d = self.p.denom() * self.q.denom();
        let p = (&self.p * BigRational::from_integer(d.clone())).to_integer();
        let q = (&self.q * BigRational::from_integer(d)).to_integer();
        ZLambda::new(Int::from_bigint(p), Int::from_bigint(q)).sign()
    }
}

impl fmt::Display for QLambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*lambda", self.p, self.q)
    }
}

impl Add for &QLambda {
    type Output = QLambda;
    fn add(self, rhs: &QLambda) -> QLambda {
        QLambda { p: &self.p + &rhs.p, q: &self.q + &rhs.q }
    }
}

impl Sub for &QLambda {
    type Output = QLambda;
    fn sub(self, rhs: &QLambda) -> QLambda {
        QLambda { p: &self.p - &rhs.p, q: &self.q - &rhs.q }
    }
}

impl Neg for &QLambda {
    type Output = QLambda;
    fn neg(self) -> QLambda {
        QLambda { p: -self.p.clone(), q: -self.q.clone() }
    }
}

impl Mul for &QLambda {
    type Output = QLambda;
    fn mul(self, rhs: &QLambda) -> QLambda {
        let three = BigRational::from_integer(BigInt::from(3));
        let qq = &self.q * &rhs.q;
        QLambda {
            p: &self.p * &rhs.p + &three * &qq,
            q: &self.p * &rhs.q + &self.q * &rhs.p + qq,
        }
    }
}

macro_rules! ql_owned_ops {
    ($($trait:ident/$method:ident),*) => {$(
        impl $trait for QLambda {
            type Output = QLambda;
            fn $method(self, rhs: QLambda) -> QLambda { (&self).$method(&rhs) }
        }
    )*};
}
ql_owned_ops!(Add/add, Sub/sub, Mul/mul);

impl Neg for QLambda {
    type Output = QLambda;
    fn neg(self) -> QLambda {
        -&self
    }
}

/// lambda^n = a_n * lambda + b_n with integer coefficients, computed by the
/// recursion a_{n+1} = a_n + b_n, b_{n+1} = 3 a_n starting from (a_0, b_0) = (0, 1).
pub fn lambda_power_coeffs(n: u32) -> (Int, Int) {
    let mut a = BigInt::zero();
    let mut b = BigInt::one();
    for _ in 0..n {
        let a_next = &a + &b;
        b = BigInt::from(3) * &a;
        a = a_next;
    }
    (Int::from_bigint(a), Int::from_bigint(b))
}

/// lambda^n as an element of Z[lambda] (basis order a + b*lambda).
pub fn lambda_power(n: u32) -> ZLambda {
    let (a, b) = lambda_power_coeffs(n);
    // lambda^n = a_n * lambda + b_n, so the constant coordinate is b_n.
    ZLambda { a: b, b: a }
}

/// Greatest common divisor with the convention gcd(0, k) = |k|.
pub fn gcd_big(x: &BigInt, y: &BigInt) -> BigInt {
    let mut a = x.abs();
    let mut b = y.abs();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// Verifies the arithmetic facts about the coefficient sequences of
/// lambda^n = a_n lambda + b_n for 1 <= n <= n_max:
/// a_n = 1 mod 3, b_n = 0 mod 3, gcd(a_n, a_{n+1}) = 1, gcd(b_n, b_{n+1}) = 3.
pub fn gcd_facts_check(n_max: u32) -> Result<(), String> {
    let three = BigInt::from(3);
    let mut coeffs = Vec::with_capacity(n_max as usize + 2);
    for n in 0..=(n_max + 1) {
        let (a, b) = lambda_power_coeffs(n);
        coeffs.push((a.to_bigint(), b.to_bigint()));
    }
    for n in 1..=(n_max as usize) {
        let (a, b) = &coeffs[n];
        if ((a % &three) + &three) % &three != BigInt::one() {
            return Err(format!("a_{n} = {a} is not 1 mod 3"));
        }
        if !(b % &three).is_zero() {
            return Err(format!("b_{n} = {b} is not 0 mod 3"));
        }
        let (a_next, b_next) = &coeffs[n + 1];
        if gcd_big(a, a_next) != BigInt::one() {
            return Err(format!("gcd(a_{n}, a_{}) != 1", n + 1));
        }
        if gcd_big(b, b_next) != three {
            return Err(format!("gcd(b_{n}, b_{}) != 3", n + 1));
        }
    }
    Ok(())
}

/// Perron-Frobenius data of the substitution matrix M = [[1, 1], [3, 0]].
#[derive(Clone, Debug)]
pub struct PFData {
    /// Substitution matrix, M[i][j] = number of letters i in the image of j.
    pub matrix: [[i64; 2]; 2],
    /// PF eigenvalue lambda.
    pub lambda: f64,
    /// Right PF eigenvector (nu_0, nu_1), the letter frequencies, exact.
    pub freq: [QLambda; 2],
    /// Left PF eigenvector (lambda, 1), proportional to the tile lengths.
    pub left: [QLambda; 2],
    /// Point density of the geometric point set, (6 + lambda)/13.
    pub density: QLambda,
}

/// Letter frequencies: nu_0 = 1/lambda = (lambda - 1)/3 and
/// nu_1 = 3/lambda^2 = (4 - lambda)/3; density = (6 + lambda)/13.
pub fn pf_data() -> PFData {
    PFData {
        matrix: [[1, 1], [3, 0]],
        lambda: LAMBDA,
        freq: [
            QLambda::from_rationals(-1, 3, 1, 3),
            QLambda::from_rationals(4, 3, -1, 3),
        ],
        left: [QLambda::lambda(), QLambda::one()],
        density: QLambda::from_rationals(6, 13, 1, 13),
    }
}
