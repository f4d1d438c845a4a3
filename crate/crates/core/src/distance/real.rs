//! Dyadic fixed-point reals with a tracked error bound, and a deterministic logarithm.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `mantissa / 2^frac_bits`, within `err_ulps / 2^frac_bits` of the true value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ApproxReal {
    mantissa: BigInt,
    frac_bits: u32,
    err_ulps: u128,
}

impl ApproxReal {
    pub fn new(mantissa: BigInt, frac_bits: u32, err_ulps: u128) -> Self {
        ApproxReal { mantissa, frac_bits, err_ulps }
    }

    pub fn zero(frac_bits: u32) -> Self {
        Self::new(BigInt::zero(), frac_bits, 0)
    }

    pub fn from_int(v: impl Into<BigInt>, frac_bits: u32) -> Self {
        Self::new(v.into() << frac_bits, frac_bits, 0)
    }

    /// The exact dyadic `num / 2^shift`, expressed at `frac_bits ≥ shift`.
    pub fn from_dyadic(num: impl Into<BigInt>, shift: u32, frac_bits: u32) -> Self {
        assert!(frac_bits >= shift);
        Self::new(num.into() << (frac_bits - shift), frac_bits, 0)
    }

    /// Nearest dyadic to a rational, error half an ulp rounded up to one.
    pub fn from_rational(x: &BigRational, frac_bits: u32) -> Self {
        let scaled = x * BigRational::from_integer(BigInt::one() << frac_bits);
        let m = (scaled + BigRational::new(1.into(), 2.into())).floor().to_integer();
        Self::new(m, frac_bits, 1)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn err_ulps(&self) -> u128 {
        self.err_ulps
    }

    pub fn with_extra_err(mut self, ulps: u128) -> Self {
        self.err_ulps = self.err_ulps.checked_add(ulps).expect("error bound overflow");
        self
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.mantissa, self.frac_bits)
    }

    pub fn err_bound_f64(&self) -> f64 {
        self.err_ulps as f64 * (-(self.frac_bits as f64)).exp2()
    }

    /// Whether `err_bound < 2^-k`.
    pub fn err_below_pow2(&self, k: u32) -> bool {
        if k >= self.frac_bits {
            return self.err_ulps == 0;
        }
        let lim = self.frac_bits - k;
        lim >= 128 || self.err_ulps < (1u128 << lim)
    }

    /// The exact represented value as a rational.
    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.mantissa.clone(), BigInt::one() << self.frac_bits)
    }

    /// Lower and upper end of the certified interval.
    pub fn interval(&self) -> (BigRational, BigRational) {
        let den = BigInt::one() << self.frac_bits;
        let e = BigInt::from(self.err_ulps);
        (
            BigRational::new(&self.mantissa - &e, den.clone()),
            BigRational::new(&self.mantissa + &e, den),
        )
    }

    /// Same value at `frac_bits ≥ self.frac_bits`, exactly.
    pub fn widen(&self, frac_bits: u32) -> Self {
        assert!(frac_bits >= self.frac_bits);
        let s = frac_bits - self.frac_bits;
        Self::new(&self.mantissa << s, frac_bits, shl_err(self.err_ulps, s))
    }

    /// Round to `frac_bits` (nearest, ties up); increases the error accordingly.
    pub fn round_to(&self, frac_bits: u32) -> Self {
        if frac_bits >= self.frac_bits {
            return self.widen(frac_bits);
        }
        let s = self.frac_bits - frac_bits;
        let half = BigInt::one() << (s - 1);
        let m = (&self.mantissa + &half) >> s;
        // err_new = ceil((err_old + 2^(s-1)) / 2^s)
        let err = if s >= 128 {
            1
        } else {
            let e = self.err_ulps + (1u128 << (s - 1));
            e.div_ceil(1u128 << s)
        };
        Self::new(m, frac_bits, err)
    }

    /// Common precision: the finer one, unless widening an error bound would overflow.
    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u32, u128, u128) {
        let hi = self.frac_bits.max(other.frac_bits);
        let fits = |x: &Self| x.err_ulps == 0 || hi - x.frac_bits < x.err_ulps.leading_zeros();
        let f = if fits(self) && fits(other) { hi } else { self.frac_bits.min(other.frac_bits) };
        let a = self.round_to(f);
        let b = other.round_to(f);
        (a.mantissa, b.mantissa, f, a.err_ulps, b.err_ulps)
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.frac_bits == other.frac_bits {
            return Self::new(&self.mantissa + &other.mantissa, self.frac_bits, add_err(self.err_ulps, other.err_ulps));
        }
        let (a, b, f, ea, eb) = self.aligned(other);
        Self::new(a + b, f, add_err(ea, eb))
    }

    pub fn sub(&self, other: &Self) -> Self {
        if self.frac_bits == other.frac_bits {
            return Self::new(&self.mantissa - &other.mantissa, self.frac_bits, add_err(self.err_ulps, other.err_ulps));
        }
        let (a, b, f, ea, eb) = self.aligned(other);
        Self::new(a - b, f, add_err(ea, eb))
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.mantissa, self.frac_bits, self.err_ulps)
    }

    /// Exact halving.
    pub fn half(&self) -> Self {
        Self::new(self.mantissa.clone(), self.frac_bits + 1, self.err_ulps)
    }

    /// Exact division by `2^k`.
    pub fn shr(&self, k: u32) -> Self {
        Self::new(self.mantissa.clone(), self.frac_bits + k, self.err_ulps)
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        let e = k.abs().to_u128().and_then(|k| k.checked_mul(self.err_ulps)).expect("error bound overflow");
        Self::new(&self.mantissa * k, self.frac_bits, e)
    }

    /// Division by a non-zero integer, rounded to nearest at the same precision.
    pub fn div_int(&self, k: &BigInt) -> Self {
        assert!(!k.is_zero());
        let two = BigInt::from(2);
        let m = (&two * &self.mantissa + k.abs()).div_floor(&(&two * k.abs()));
        let m = if k.is_negative() { -m } else { m };
        let ka = k.abs().to_u128().unwrap_or(u128::MAX);
        Self::new(m, self.frac_bits, self.err_ulps.div_ceil(ka) + 1)
    }

    /// Product of two approximations, rounded to `frac_bits`.
    pub fn mul(&self, other: &Self, frac_bits: u32) -> Self {
        // |xy − x'y'| ≤ |x||e_y| + |y||e_x| + e_x e_y
        let f = self.frac_bits + other.frac_bits;
        let m = &self.mantissa * &other.mantissa;
        let ax = self.mantissa.abs() + BigInt::from(self.err_ulps);
        let ay = other.mantissa.abs();
        let e = &ax * BigInt::from(other.err_ulps) + &ay * BigInt::from(self.err_ulps);
        let exact = Self::new(m, f, 0);
        let r = exact.round_to(frac_bits);
        let shift = f.saturating_sub(frac_bits);
        let e_scaled: BigInt = (e + (BigInt::one() << shift) - 1) >> shift;
        let e_scaled = e_scaled.to_u128().expect("error bound overflow");
        r.with_extra_err(e_scaled)
    }

    /// Exact comparison of the represented values.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        if self.frac_bits == other.frac_bits {
            return self.mantissa.cmp(&other.mantissa);
        }
        let f = self.frac_bits.max(other.frac_bits);
        (&self.mantissa << (f - self.frac_bits)).cmp(&(&other.mantissa << (f - other.frac_bits)))
    }

    /// `self > other` by more than the two error bounds together.
    ///
    /// Distances are logarithms of algebraic numbers, so a difference that the bounds cannot
    /// separate from a quarter-grid point is, in the only exact case, zero; it then counts as "at".
    pub fn gt_beyond_err(&self, other: &Self) -> bool {
        let (a, b, _, ea, eb) = self.aligned(other);
        a - b > BigInt::from(ea) + BigInt::from(eb)
    }

    /// Compare against the dyadic `num / 2^shift`.
    pub fn cmp_dyadic(&self, num: &BigInt, shift: u32) -> Ordering {
        if shift <= self.frac_bits {
            self.mantissa.cmp(&(num << (self.frac_bits - shift)))
        } else {
            (&self.mantissa << (shift - self.frac_bits)).cmp(num)
        }
    }

    pub fn floor(&self) -> BigInt {
        &self.mantissa >> self.frac_bits
    }

    /// Nearest integer to the represented value, ties to even.
    pub fn round_half_even(&self) -> BigInt {
        if self.frac_bits == 0 {
            return self.mantissa.clone();
        }
        let fl = self.floor();
        let rem = &self.mantissa - (&fl << self.frac_bits);
        let half = BigInt::one() << (self.frac_bits - 1);
        match rem.cmp(&half) {
            Ordering::Less => fl,
            Ordering::Greater => fl + 1,
            Ordering::Equal => {
                if fl.is_even() {
                    fl
                } else {
                    fl + 1
                }
            }
        }
    }

    /// The mantissa at exactly `frac_bits` as an `i128`, when that is exact.
    pub fn to_fixed_i128(&self, frac_bits: u32) -> Option<i128> {
        if frac_bits < self.frac_bits {
            return None;
        }
        (&self.mantissa << (frac_bits - self.frac_bits)).to_i128()
    }

    /// Whether `|self − other| ≤ tol` is consistent with both error bounds.
    pub fn abs_diff_f64(&self, other: &Self) -> f64 {
        self.sub(other).to_f64().abs()
    }
}

impl fmt::Display for ApproxReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.3e}", self.to_f64(), self.err_bound_f64())
    }
}

#[derive(Serialize, Deserialize)]
struct ApproxRealRepr {
    mantissa: String,
    frac_bits: u32,
    err_ulps: String,
    approx: f64,
}

impl Serialize for ApproxReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ApproxRealRepr {
            mantissa: self.mantissa.to_string(),
            frac_bits: self.frac_bits,
            err_ulps: self.err_ulps.to_string(),
            approx: self.to_f64(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ApproxReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ApproxRealRepr::deserialize(d)?;
        let m = r.mantissa.parse().map_err(serde::de::Error::custom)?;
        let e = r.err_ulps.parse().map_err(serde::de::Error::custom)?;
        Ok(ApproxReal::new(m, r.frac_bits, e))
    }
}

fn add_err(a: u128, b: u128) -> u128 {
    a.checked_add(b).expect("error bound overflow")
}

fn shl_err(e: u128, s: u32) -> u128 {
    if e == 0 {
        return 0;
    }
    assert!(s < e.leading_zeros(), "error bound overflow");
    e << s
}

pub(crate) fn ratio_to_f64(m: &BigInt, frac_bits: u32) -> f64 {
    let bits = m.bits();
    if bits <= 1000 && frac_bits <= 1000 {
        let (shift, top) = if bits > 64 { (bits - 64, m >> (bits - 64)) } else { (0, m.clone()) };
        top.to_f64().unwrap() * ((shift as f64) - frac_bits as f64).exp2()
    } else {
        let shift = bits.saturating_sub(64);
        let top = m >> shift;
        top.to_f64().unwrap() * ((shift as f64) - frac_bits as f64).exp2()
    }
}

thread_local! {
    static LN2: RefCell<HashMap<u32, BigInt>> = RefCell::new(HashMap::new());
}

/// `floor(2^w · Σ u^(2j+1)/(2j+1))` style series for `atanh(u)` with `U = u·2^w`.
fn atanh_fixed(u: &BigInt, w: u32) -> BigInt {
    let u2 = (u * u) >> w;
    let mut p = u.clone();
    let mut acc = BigInt::zero();
    let mut j: u64 = 0;
    while !p.is_zero() {
        acc += &p / BigInt::from(2 * j + 1);
        p = trunc_shr(&(&p * &u2), w);
        j += 1;
    }
    acc
}

fn trunc_shr(x: &BigInt, w: u32) -> BigInt {
    let m = x.magnitude() >> w;
    BigInt::from_biguint(if x.sign() == Sign::Minus { Sign::Minus } else { Sign::Plus }, m)
}

fn ln2_fixed(w: u32) -> BigInt {
    LN2.with(|c| {
        c.borrow_mut()
            .entry(w)
            .or_insert_with(|| {
                let u = (BigInt::one() << w) / BigInt::from(3);
                atanh_fixed(&u, w) << 1
            })
            .clone()
    })
}

/// `ln(num/den)` to within `2^-frac_bits`; deterministic.
pub fn approx_ln_ratio(num: &BigUint, den: &BigUint, frac_bits: u32) -> Result<ApproxReal> {
    if num.is_zero() || den.is_zero() {
        return Err(Error::InvalidArgument("approx_ln requires x > 0".into()));
    }
    let mut n = BigInt::from(num.clone());
    let mut d = BigInt::from(den.clone());
    let mut k: i64 = num.bits() as i64 - den.bits() as i64;
    if k > 0 {
        d <<= k as u64;
    } else if k < 0 {
        n <<= (-k) as u64;
    }
    // bring n/d into [1/√2, √2)
    loop {
        let n2 = &n * &n;
        let d2 = &d * &d;
        if n2 >= &d2 * 2u32 {
            d <<= 1;
            k += 1;
        } else if &n2 * 2u32 < d2 {
            n <<= 1;
            k -= 1;
        } else {
            break;
        }
    }
    let kbits = 64 - k.unsigned_abs().leading_zeros();
    let w = frac_bits + 24 + kbits;
    let u = ((&n - &d) << w).div_floor(&(&n + &d));
    let mut r = atanh_fixed(&u, w) << 1;
    if k != 0 {
        r += ln2_fixed(w) * BigInt::from(k);
    }
    let s = w - frac_bits;
    let m = (r + (BigInt::one() << (s - 1))) >> s;
    Ok(ApproxReal::new(m, frac_bits, 1))
}

pub fn approx_ln(x: &BigRational, frac_bits: u32) -> Result<ApproxReal> {
    if !x.is_positive() {
        return Err(Error::InvalidArgument("approx_ln requires x > 0".into()));
    }
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    approx_ln_ratio(n, d, frac_bits)
}
