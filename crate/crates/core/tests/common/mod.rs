//! Independent reference values for the integration tests.
#![allow(dead_code)]

use dashu_float::{round::mode::Zero, FBig};
use dashu_int::IBig;
use num_bigint::BigInt;
use qinfra::ApproxReal;

pub type Big = FBig<Zero, 2>;

pub const PREC: usize = 400;

pub fn big_int(v: &BigInt) -> Big {
    let i: IBig = v.to_string().parse().unwrap();
    Big::from(i).with_precision(PREC).value()
}

pub fn big_approx(x: &ApproxReal) -> Big {
    let i: IBig = x.mantissa().to_string().parse().unwrap();
    Big::from_parts(i, -(x.frac_bits() as isize)).with_precision(PREC).value()
}

pub fn to_f64(x: &Big) -> f64 {
    x.to_f64().value()
}

/// Fundamental unit of the order of discriminant Δ from the continued fraction
/// of `(s + √Δ)/2`, returned as `(x, y, norm)` with `ε = x + y√Δ/2 ... ` encoded
/// as the pair `(p − q s/2, q/2)` doubled: `2ε = u + v√Δ`.
pub fn pell_unit(delta: i64) -> (BigInt, BigInt, i32) {
    let d = BigInt::from(delta);
    let s = BigInt::from(delta.rem_euclid(2));
    let r = d.sqrt();
    let (mut p, mut q) = (s.clone(), BigInt::from(2));
    let (mut h1, mut h2) = (BigInt::from(1), BigInt::from(0));
    let (mut k1, mut k2) = (BigInt::from(0), BigInt::from(1));
    loop {
        let a = (&p + &r) / &q;
        let h = &a * &h1 + &h2;
        let k = &a * &k1 + &k2;
        h2 = std::mem::replace(&mut h1, h.clone());
        k2 = std::mem::replace(&mut k1, k.clone());
        // N(h − k ω̄) = h² − h k s + k² (s² − Δ)/4
        let norm = &h * &h - &h * &k * &s + &k * &k * (&s * &s - &d) / 4;
        if norm == BigInt::from(1) || norm == BigInt::from(-1) {
            let u = BigInt::from(2) * &h - &k * &s;
            let sign = if norm == BigInt::from(1) { 1 } else { -1 };
            return (u, k, sign);
        }
        p = &a * &q - &p;
        q = (&d - &p * &p) / &q;
    }
}

/// `R⁺ = ln ε` for a norm-one fundamental unit, `2 ln ε` otherwise.
pub fn pell_regulator(delta: i64) -> Big {
    let (u, v, norm) = pell_unit(delta);
    let sd = big_int(&BigInt::from(delta)).sqrt();
    let eps = (big_int(&u) + big_int(&v) * sd) / Big::from(2);
    let l = eps.ln();
    if norm == 1 {
        l
    } else {
        l * Big::from(2)
    }
}

pub fn abs_diff(x: &ApproxReal, y: &Big) -> f64 {
    to_f64(&(big_approx(x) - y.clone())).abs()
}

pub fn big_abs(x: Big) -> Big {
    if x < Big::ZERO {
        -x
    } else {
        x
    }
}
