//! Indefinite binary quadratic forms of positive non-square discriminant.
//!
//! Every comparison against `sqrt(Δ)` is decided with integer squaring, so
//! reducedness never depends on floating point.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug)]
struct DiscInner {
    value: BigInt,
    isqrt: BigInt,
}

/// A positive non-square integer congruent to 0 or 1 mod 4.
#[derive(Clone, Debug)]
pub struct Discriminant(Arc<DiscInner>);

impl Discriminant {
    pub fn new(value: impl Into<BigInt>) -> Result<Self> {
        let value: BigInt = value.into();
        let fail = |reason| Error::InvalidDiscriminant { value: value.to_string(), reason };
        if !value.is_positive() {
            return Err(fail("must be positive"));
        }
        let r = value.mod_floor(&BigInt::from(4));
        if !(r.is_zero() || r.is_one()) {
            return Err(fail("must be congruent to 0 or 1 mod 4"));
        }
        let isqrt = value.sqrt();
        if &isqrt * &isqrt == value {
            return Err(fail("must not be a perfect square"));
        }
        Ok(Discriminant(Arc::new(DiscInner { value, isqrt })))
    }

    pub fn value(&self) -> &BigInt {
        &self.0.value
    }

    /// `floor(sqrt(Δ))`.
    pub fn isqrt(&self) -> &BigInt {
        &self.0.isqrt
    }

    pub fn bits(&self) -> u64 {
        self.0.value.bits()
    }

    pub fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self.0.value).unwrap_or(f64::INFINITY)
    }

    pub fn to_u64(&self) -> Option<u64> {
        num_traits::ToPrimitive::to_u64(&self.0.value)
    }

    /// Natural log of Δ in double precision, for sizing decisions only.
    pub fn ln_f64(&self) -> f64 {
        let bits = self.bits();
        if bits < 1000 {
            self.to_f64().ln()
        } else {
            let shift = bits - 64;
            let top = &self.0.value >> shift;
            num_traits::ToPrimitive::to_f64(&top).unwrap().ln() + shift as f64 * std::f64::consts::LN_2
        }
    }

    /// `sqrt(Δ) > t`.
    pub fn sqrt_gt(&self, t: &BigInt) -> bool {
        t.is_negative() || t * t < self.0.value
    }

    /// `sqrt(Δ) < t`.
    pub fn sqrt_lt(&self, t: &BigInt) -> bool {
        t.is_positive() && t * t > self.0.value
    }

    /// Whether `|t| < sqrt(Δ)`.
    pub fn abs_below_sqrt(&self, t: &BigInt) -> bool {
        t * t < self.0.value
    }
}

impl PartialEq for Discriminant {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.value == other.0.value
    }
}

impl Eq for Discriminant {}

impl std::hash::Hash for Discriminant {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.value.hash(state)
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.value)
    }
}

impl FromStr for Discriminant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v = BigInt::from_str(s.trim()).map_err(|e| Error::Parse(format!("discriminant {s:?}: {e}")))?;
        Discriminant::new(v)
    }
}

impl Serialize for Discriminant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.value.to_string())
    }
}

impl<'de> Deserialize<'de> for Discriminant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A primitive form `aX² + bXY + cY²` with `b² − 4ac = Δ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Form {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    disc: Discriminant,
}

impl Form {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>, c: impl Into<BigInt>, disc: &Discriminant) -> Result<Self> {
        let (a, b, c) = (a.into(), b.into(), c.into());
        if &b * &b - BigInt::from(4) * &a * &c != *disc.value() {
            return Err(Error::InvalidForm(format!(
                "b² − 4ac = Δ violated for ({a}, {b}, {c}) with Δ = {disc}"
            )));
        }
        if !a.gcd(&b).gcd(&c).is_one() {
            return Err(Error::InvalidForm(format!("gcd(a, b, c) = 1 violated for ({a}, {b}, {c})")));
        }
        Ok(Form { a, b, c, disc: disc.clone() })
    }

    /// The form `(a, b, (b² − Δ)/(4a))`, if that quotient is integral.
    pub fn from_ab(a: impl Into<BigInt>, b: impl Into<BigInt>, disc: &Discriminant) -> Result<Self> {
        let (a, b) = (a.into(), b.into());
        if a.is_zero() {
            return Err(Error::InvalidForm("a = 0".into()));
        }
        let num = &b * &b - disc.value();
        let den = BigInt::from(4) * &a;
        let (c, r) = num.div_rem(&den);
        if !r.is_zero() {
            return Err(Error::InvalidForm(format!("(b² − Δ)/(4a) is not integral for a = {a}, b = {b}")));
        }
        Form::new(a, b, c, disc)
    }

    /// Internal constructor for values already known to be valid.
    pub(crate) fn raw(a: BigInt, b: BigInt, c: BigInt, disc: &Discriminant) -> Self {
        debug_assert_eq!(&b * &b - BigInt::from(4) * &a * &c, *disc.value());
        Form { a, b, c, disc: disc.clone() }
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn c(&self) -> &BigInt {
        &self.c
    }

    pub fn disc(&self) -> &Discriminant {
        &self.disc
    }

    pub fn is_reduced(&self) -> bool {
        is_reduced_ab(&self.a, &self.b, &self.disc)
    }

    /// Γ-orbit equality: same `a` and `b ≡ b′ (mod 2a)`.
    pub fn same_orbit(&self, other: &Form) -> bool {
        self.disc == other.disc
            && self.a == other.a
            && (&self.b - &other.b).mod_floor(&(BigInt::from(2) * self.a.abs())).is_zero()
    }

    /// Text form `Δ:a,b,c`.
    pub fn to_text(&self) -> String {
        format!("{}:{},{},{}", self.disc, self.a, self.b, self.c)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

impl FromStr for Form {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (d, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected `Δ:a,b,c`, got {s:?}")))?;
        let disc: Discriminant = d.parse()?;
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected three coefficients, got {}", parts.len())));
        }
        let mut v = Vec::with_capacity(3);
        for p in parts {
            v.push(BigInt::from_str(p).map_err(|e| Error::Parse(format!("coefficient {p:?}: {e}")))?);
        }
        let c = v.pop().unwrap();
        let b = v.pop().unwrap();
        let a = v.pop().unwrap();
        Form::new(a, b, c, &disc)
    }
}

fn is_reduced_ab(a: &BigInt, b: &BigInt, disc: &Discriminant) -> bool {
    if !b.is_positive() || a.is_zero() || !disc.abs_below_sqrt(b) {
        return false;
    }
    let two_a = BigInt::from(2) * a.abs();
    // |√Δ − 2|a|| < b  ⇔  2|a| − b < √Δ < 2|a| + b
    disc.sqrt_gt(&(&two_a - b)) && disc.sqrt_lt(&(&two_a + b))
}

/// A form satisfying `|sqrt(Δ) − 2|a|| < b < sqrt(Δ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReducedForm(Form);

impl ReducedForm {
    pub fn new(f: Form) -> Result<Self> {
        if f.is_reduced() {
            Ok(ReducedForm(f))
        } else {
            Err(Error::InvalidForm(format!("|√Δ − 2|a|| < b < √Δ violated for {f} with Δ = {}", f.disc)))
        }
    }

    pub fn form(&self) -> &Form {
        &self.0
    }

    pub fn into_form(self) -> Form {
        self.0
    }
}

impl Deref for ReducedForm {
    type Target = Form;
    fn deref(&self) -> &Form {
        &self.0
    }
}

impl fmt::Display for ReducedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for ReducedForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ReducedForm::new(s.parse()?)
    }
}

/// A reduced form with `a > 0`; the values of Reg and PIP live here.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PositiveReducedForm(ReducedForm);

impl PositiveReducedForm {
    pub fn new(f: ReducedForm) -> Result<Self> {
        if f.a.is_positive() {
            Ok(PositiveReducedForm(f))
        } else {
            Err(Error::InvalidForm(format!("a > 0 violated for {f}")))
        }
    }

    pub fn reduced(&self) -> &ReducedForm {
        &self.0
    }

    pub fn into_reduced(self) -> ReducedForm {
        self.0
    }
}

impl Deref for PositiveReducedForm {
    type Target = ReducedForm;
    fn deref(&self) -> &ReducedForm {
        &self.0
    }
}

impl fmt::Display for PositiveReducedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for PositiveReducedForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PositiveReducedForm::new(s.parse()?)
    }
}

pub fn unit_form(disc: &Discriminant) -> PositiveReducedForm {
    let d = disc.value();
    let mut b = disc.isqrt().clone();
    if (&b - d).is_odd() {
        b -= 1;
    }
    let c = (&b * &b - d) / BigInt::from(4);
    PositiveReducedForm(ReducedForm(Form::raw(BigInt::one(), b, c, disc)))
}

/// Choose `B ≡ −b (mod 2|c|)` per the normalization of the ρ step.
fn rho_b(b: &BigInt, c: &BigInt, disc: &Discriminant) -> BigInt {
    let m = BigInt::from(2) * c.abs();
    let r = (-b).mod_floor(&m);
    if disc.abs_below_sqrt(c) {
        // largest B < √Δ in the class: (√Δ − 2|c|, √Δ)
        let s = disc.isqrt();
        &r + &m * (s - &r).div_floor(&m)
    } else if r > c.abs() {
        r - m
    } else {
        r
    }
}

/// One ρ step on an arbitrary form.
pub fn rho_form(f: &Form) -> Form {
    let bb = rho_b(&f.b, &f.c, &f.disc);
    let num = &bb * &bb - f.disc.value();
    let aa = num / (BigInt::from(4) * &f.c);
    Form::raw(f.c.clone(), bb, aa, &f.disc)
}

pub fn rho(f: &ReducedForm) -> ReducedForm {
    let g = rho_form(&f.0);
    debug_assert!(g.is_reduced());
    ReducedForm(g)
}

pub fn rho_inv(f: &ReducedForm) -> ReducedForm {
    let bb = rho_b(&f.b, &f.a, &f.disc);
    let num = &bb * &bb - f.disc.value();
    let aa = num / (BigInt::from(4) * &f.a);
    let g = Form::raw(aa, bb, f.a.clone(), &f.disc);
    debug_assert!(g.is_reduced());
    ReducedForm(g)
}

/// Reduce `f`, returning the reduced form and the `b` coefficient of each
/// form a ρ step was taken from.
pub fn reduce_traced(f: &Form) -> (ReducedForm, Vec<BigInt>) {
    let mut cur = f.clone();
    let mut trace = Vec::new();
    while !cur.is_reduced() {
        trace.push(cur.b.clone());
        cur = rho_form(&cur);
    }
    (ReducedForm(cur), trace)
}

pub fn reduce(f: &Form) -> (ReducedForm, usize) {
    let (r, t) = reduce_traced(f);
    (r, t.len())
}

/// Composition of two forms of the same discriminant; `b` is normalized into `(−|a|, |a|]`.
pub fn compose(f1: &Form, f2: &Form) -> Result<Form> {
    if f1.disc != f2.disc {
        return Err(Error::DiscriminantMismatch(f1.disc.to_string(), f2.disc.to_string()));
    }
    let disc = &f1.disc;
    let (a1, b1) = (&f1.a, &f1.b);
    let (a2, b2) = (&f2.a, &f2.b);
    let s = (b1 + b2) / BigInt::from(2);
    // j a2 + k a1 = g1, then u g1 + l s = m
    let e1 = a2.extended_gcd(a1);
    let e2 = e1.gcd.extended_gcd(&s);
    let m = e2.gcd;
    let j = &e1.x * &e2.x;
    let k = &e1.y * &e2.x;
    let l = e2.y;
    let a = a1 * a2 / (&m * &m);
    let num = &j * a2 * b1 + &k * a1 * b2 + &l * ((b1 * b2 + disc.value()) / BigInt::from(2));
    let b = normalize_b(&(num / &m), &a);
    let c = (&b * &b - disc.value()) / (BigInt::from(4) * &a);
    let out = Form::raw(a, b, c, disc);
    debug_assert!(out.a.gcd(&out.b).gcd(&out.c).is_one());
    Ok(out)
}

fn normalize_b(b: &BigInt, a: &BigInt) -> BigInt {
    let m = BigInt::from(2) * a.abs();
    let r = b.mod_floor(&m);
    if r > a.abs() {
        r - m
    } else {
        r
    }
}

pub fn to_positive_rep(f: &ReducedForm) -> PositiveReducedForm {
    if f.a.is_positive() {
        PositiveReducedForm(f.clone())
    } else {
        PositiveReducedForm(rho(f))
    }
}

/// The ρ² successor inside the set of positive reduced forms.
pub fn next_positive(f: &PositiveReducedForm) -> PositiveReducedForm {
    PositiveReducedForm(rho(&rho(f)))
}

pub fn prev_positive(f: &PositiveReducedForm) -> PositiveReducedForm {
    PositiveReducedForm(rho_inv(&rho_inv(f)))
}

/// All reduced forms of discriminant Δ, ordered by `(b, a)`.
pub fn reduced_forms(disc: &Discriminant) -> Vec<ReducedForm> {
    let d = disc.value();
    let s = disc.isqrt();
    let mut out = Vec::new();
    let mut b = if (s - d).is_odd() { s - 1 } else { s.clone() };
    let mut bs = Vec::new();
    while b.is_positive() {
        bs.push(b.clone());
        b -= 2;
    }
    bs.reverse();
    for b in bs {
        let n = (d - &b * &b) / BigInt::from(4);
        let mut divs = Vec::new();
        let mut t = BigInt::one();
        while &t * &t <= n {
            if (&n % &t).is_zero() {
                divs.push(t.clone());
                let o = &n / &t;
                if o != t {
                    divs.push(o);
                }
            }
            t += 1;
        }
        divs.sort();
        for a in divs.iter().flat_map(|x| [-x.clone(), x.clone()]) {
            let c = -(&n / &a);
            if is_reduced_ab(&a, &b, disc) && a.gcd(&b).gcd(&c).is_one() {
                out.push(ReducedForm(Form::raw(a, b.clone(), c, disc)));
            }
        }
    }
    out.sort_by(|x, y| match x.b.cmp(&y.b) {
        Ordering::Equal => x.a.cmp(&y.a),
        o => o,
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: i64) -> Discriminant {
        Discriminant::new(v).unwrap()
    }

    fn f(a: i64, b: i64, c: i64, disc: i64) -> Form {
        Form::new(a, b, c, &d(disc)).unwrap()
    }

    #[test]
    fn discriminant_validation() {
        assert!(Discriminant::new(7).is_err());
        assert!(Discriminant::new(16).is_err());
        assert!(Discriminant::new(0).is_err());
        assert!(Discriminant::new(-3).is_err());
        assert!(Discriminant::new(12).is_ok());
        assert_eq!(d(40).isqrt(), &BigInt::from(6));
    }

    #[test]
    fn unit_forms() {
        assert_eq!(unit_form(&d(8)).form(), &f(1, 2, -1, 8));
        assert_eq!(unit_form(&d(13)).form(), &f(1, 3, -1, 13));
        assert_eq!(unit_form(&d(5)).form(), &f(1, 1, -1, 5));
    }

    #[test]
    fn rho_examples() {
        let u8 = unit_form(&d(8));
        let r = rho(&u8);
        assert_eq!(r.form(), &f(-1, 2, 1, 8));
        assert_eq!(rho(&r).form(), u8.form());
        assert_eq!(rho_inv(&r).form(), u8.form());
        let u13 = unit_form(&d(13));
        assert_eq!(rho(&u13).form(), &f(-1, 3, 1, 13));
        assert_eq!(rho_inv(&rho(&u13)).form(), u13.form());
    }

    #[test]
    fn positive_rep() {
        let r = ReducedForm::new(f(-1, 2, 1, 8)).unwrap();
        assert_eq!(to_positive_rep(&r).form(), &f(1, 2, -1, 8));
        let u = unit_form(&d(8));
        assert_eq!(to_positive_rep(&u).form(), u.form());
    }

    #[test]
    fn reduce_into_cycle_delta_8() {
        let disc = d(8);
        let cycle = [f(1, 2, -1, 8), f(-1, 2, 1, 8)];
        for (a, b) in [(7, 6), (17, 10), (-23, 10), (2, 0), (97, 40)] {
            let Ok(g) = Form::from_ab(a, b, &disc) else { continue };
            let (r, _) = reduce(&g);
            assert!(cycle.iter().any(|c| c.same_orbit(&r)), "{g} -> {r}");
        }
    }

    #[test]
    fn reduce_idempotent() {
        for r in reduced_forms(&d(60)) {
            let (s, n) = reduce(&r);
            assert_eq!(n, 0);
            assert_eq!(s, r);
        }
    }

    #[test]
    fn compose_with_unit() {
        for disc in [8, 13, 40, 60, 316] {
            let dd = d(disc);
            let u = unit_form(&dd);
            for r in reduced_forms(&dd) {
                let (x, _) = reduce(&compose(&u, &r).unwrap());
                // same proper class: x lies on r's ρ-cycle
                let mut cur = r.clone();
                let mut found = false;
                loop {
                    if cur.same_orbit(&x) {
                        found = true;
                        break;
                    }
                    cur = rho(&cur);
                    if cur == r {
                        break;
                    }
                }
                assert!(found, "Δ={disc}: unit*{r} reduced to {x}");
            }
        }
    }

    #[test]
    fn compose_ambiguous_square_is_principal() {
        let dd = d(40);
        let g = ReducedForm::new(f(2, 4, -3, 40)).unwrap();
        let (sq, _) = reduce(&compose(&g, &g).unwrap());
        let u = unit_form(&dd);
        let mut cur = u.reduced().clone();
        let mut on_cycle = false;
        for _ in 0..16 {
            if cur.same_orbit(&sq) {
                on_cycle = true;
            }
            cur = rho(&cur);
        }
        assert!(on_cycle, "{sq}");
    }

    #[test]
    fn text_round_trip_and_errors() {
        let g: Form = "8:1,2,-1".parse().unwrap();
        assert_eq!(g.to_text(), "8:1,2,-1");
        let e = "8:1,2,1".parse::<Form>().unwrap_err().to_string();
        assert!(e.contains("b² − 4ac = Δ"), "{e}");
        let e = "7:1,1,-1".parse::<Form>().unwrap_err().to_string();
        assert!(e.contains("0 or 1 mod 4"), "{e}");
        let e = "40:2,0,-5".parse::<ReducedForm>().unwrap_err().to_string();
        assert!(e.contains("< b <"), "{e}");
        assert!("40:2,4".parse::<Form>().is_err());
    }

    #[test]
    fn reduced_form_counts() {
        // Δ = 8: (±1, 2, ∓1) only
        assert_eq!(reduced_forms(&d(8)).len(), 2);
        for r in reduced_forms(&d(1001)) {
            assert!(r.is_reduced());
            assert!((r.a() * r.c()).is_negative());
        }
    }
}
