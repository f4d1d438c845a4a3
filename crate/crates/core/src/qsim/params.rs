use num_bigint::{BigInt, BigUint};
use num_traits::One;
use serde::Serialize;

use crate::distance::{approx_ln_ratio, ApproxReal};
use crate::error::{Error, Result};
use crate::forms::{Discriminant, PositiveReducedForm};

/// `Δ (ln Δ)²` with a certified error.
pub fn delta_ln_sq(disc: &Discriminant) -> ApproxReal {
    let l = approx_ln_ratio(&disc.value().magnitude().clone(), &BigUint::one(), 96).unwrap();
    l.mul(&l, 96).mul_int(disc.value())
}

/// Position of `v` relative to the integer `n`, if the error bound decides it.
fn cmp_certified(v: &ApproxReal, n: &BigInt) -> Option<std::cmp::Ordering> {
    let (lo, hi) = v.interval();
    let n = num_rational::BigRational::from_integer(n.clone());
    if hi < n {
        Some(std::cmp::Ordering::Less)
    } else if lo > n {
        Some(std::cmp::Ordering::Greater)
    } else {
        None
    }
}

fn undecided(what: &str) -> Error {
    Error::Sizing(format!("{what} is too close to a power of two to decide"))
}

#[derive(Clone, Debug, Serialize)]
pub struct DualParams1D {
    pub disc: Discriminant,
    pub q: u64,
    pub relaxed: bool,
}

impl DualParams1D {
    /// The power of two with `q/2 ≤ 5Δ(ln Δ)² < q`.
    pub fn new(disc: &Discriminant) -> Result<Self> {
        let v = delta_ln_sq(disc).mul_int(&BigInt::from(5));
        let mut q = BigInt::one();
        loop {
            match cmp_certified(&v, &q) {
                Some(std::cmp::Ordering::Less) => break,
                Some(_) => q <<= 1,
                None => return Err(undecided("5Δ(ln Δ)²")),
            }
        }
        let q = u64::try_from(q).map_err(|_| Error::Sizing("q does not fit in 64 bits".into()))?;
        Ok(DualParams1D { disc: disc.clone(), q, relaxed: false })
    }

    pub fn with_q(disc: &Discriminant, q: u64, relaxed: bool) -> Result<Self> {
        if !q.is_power_of_two() || q < 2 {
            return Err(Error::InvalidArgument(format!("q = {q} must be a power of two ≥ 2")));
        }
        let p = DualParams1D { disc: disc.clone(), q, relaxed };
        if !relaxed && !p.satisfies_constraint() {
            return Err(Error::Precondition(format!("q = {q} violates q/2 ≤ 5Δ(ln Δ)² < q; pass the relaxed flag to override")));
        }
        Ok(p)
    }

    pub fn satisfies_constraint(&self) -> bool {
        let v = delta_ln_sq(&self.disc).mul_int(&BigInt::from(5));
        let q = BigInt::from(self.q);
        matches!(cmp_certified(&v, &q), Some(std::cmp::Ordering::Less))
            && matches!(cmp_certified(&v, &(q / 2)), Some(std::cmp::Ordering::Greater | std::cmp::Ordering::Equal))
    }

    /// DFT length `4q`.
    pub fn modulus(&self) -> u64 {
        4 * self.q
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DualParams2D {
    pub disc: Discriminant,
    #[serde(serialize_with = "ser_form")]
    pub g: PositiveReducedForm,
    pub q: u64,
    pub relaxed: bool,
}

fn ser_form<S: serde::Serializer>(f: &PositiveReducedForm, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_text())
}

impl DualParams2D {
    /// A power of two with `2q < Δ(ln Δ)² < 4q`.
    pub fn new(disc: &Discriminant, g: &PositiveReducedForm) -> Result<Self> {
        let v = delta_ln_sq(disc);
        let mut q = BigInt::one();
        loop {
            let four_q = &q << 2;
            match cmp_certified(&v, &four_q) {
                Some(std::cmp::Ordering::Less) => break,
                Some(_) => q <<= 1,
                None => return Err(undecided("Δ(ln Δ)²")),
            }
        }
        let q = u64::try_from(q).map_err(|_| Error::Sizing("q does not fit in 64 bits".into()))?;
        let p = DualParams2D { disc: disc.clone(), g: g.clone(), q, relaxed: false };
        if !p.satisfies_constraint() {
            return Err(undecided("Δ(ln Δ)²"));
        }
        Ok(p)
    }

    pub fn with_q(disc: &Discriminant, g: &PositiveReducedForm, q: u64, relaxed: bool) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidArgument(format!("q = {q} must be at least 2")));
        }
        let p = DualParams2D { disc: disc.clone(), g: g.clone(), q, relaxed };
        if !relaxed && !p.satisfies_constraint() {
            return Err(Error::Precondition(format!("q = {q} violates 2q < Δ(ln Δ)² < 4q; pass the relaxed flag to override")));
        }
        Ok(p)
    }

    pub fn satisfies_constraint(&self) -> bool {
        let v = delta_ln_sq(&self.disc);
        let q = BigInt::from(self.q);
        matches!(cmp_certified(&v, &(&q * 2)), Some(std::cmp::Ordering::Greater))
            && matches!(cmp_certified(&v, &(&q * 4)), Some(std::cmp::Ordering::Less))
    }

    /// DFT length per axis, `8q`.
    pub fn modulus(&self) -> u64 {
        8 * self.q
    }
}
