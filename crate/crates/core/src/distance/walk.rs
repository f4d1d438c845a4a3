use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::real::{approx_ln_ratio, ApproxReal};
use crate::error::{Error, Result};
use crate::forms::{
    compose, next_positive, prev_positive, reduce_traced, rho, unit_form, Discriminant, Form, PositiveReducedForm,
    ReducedForm,
};

/// Precision sizing for a walk over `x < x_limit`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrecisionBudget {
    pub delta_bits: u64,
    pub op_count_bound: u64,
    pub frac_bits: u32,
    #[serde(serialize_with = "ser_bigint")]
    pub x_limit: BigInt,
}

fn ser_bigint<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl PrecisionBudget {
    pub fn min_frac_bits(disc: &Discriminant) -> u32 {
        let ops = 8 * 10 * disc.bits();
        let lg = 64 - (ops - 1).leading_zeros();
        (lg + 32).max(64)
    }

    /// Default budget: `x < Δ²`.
    pub fn new(disc: &Discriminant) -> Self {
        let x_limit = disc.value() * disc.value();
        Self::with_x_limit(disc, x_limit)
    }

    /// Budget for an explicit bound on `x`; the operation count grows with `log₂ x`.
    pub fn with_x_limit(disc: &Discriminant, x_limit: BigInt) -> Self {
        let delta_bits = disc.bits();
        let op_count_bound = 10 * delta_bits.max(x_limit.bits().div_ceil(2));
        let lg = 64 - (8 * op_count_bound - 1).leading_zeros();
        let frac_bits = (lg + 32).max(Self::min_frac_bits(disc));
        PrecisionBudget { delta_bits, op_count_bound, frac_bits, x_limit }
    }

    pub fn with_frac_bits(mut self, frac_bits: u32) -> Result<Self> {
        let lg = 64 - (8 * self.op_count_bound - 1).leading_zeros();
        if frac_bits < lg + 3 {
            return Err(Error::Sizing(format!(
                "{frac_bits} fractional bits cannot meet the 1/8 contract for {} operations",
                self.op_count_bound
            )));
        }
        self.frac_bits = frac_bits;
        Ok(self)
    }

    /// `per_log_precision = 2^-frac_bits`; the invariant is `per_log_precision · op_count_bound ≤ 1/8`.
    pub fn invariant_holds(&self) -> bool {
        (self.op_count_bound as f64) * (-(self.frac_bits as f64)).exp2() <= 0.125
    }

    pub fn check_x(&self, x: &BigInt) -> Result<()> {
        if x.is_negative() {
            return Err(Error::InvalidArgument(format!("x = {x} must be non-negative")));
        }
        if x >= &self.x_limit {
            return Err(Error::Sizing(format!("x = {x} is not below the budget limit {}", self.x_limit)));
        }
        Ok(())
    }
}

/// A positive reduced form with its accumulated approximate distance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WalkState {
    #[serde(serialize_with = "ser_form")]
    pub form: PositiveReducedForm,
    pub dist: ApproxReal,
}

fn ser_form<S: serde::Serializer>(f: &PositiveReducedForm, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_text())
}

/// Signed distance of one ρ step taken from a form with middle coefficient `b`:
/// `½ ln |(b + √Δ)/(b − √Δ)|`, evaluated as `ln(√Δ + |b|) − ½ ln |Δ − b²|`.
fn signed_step(disc: &Discriminant, sqrt_w: &BigInt, w: u32, b: &BigInt, frac_bits: u32) -> ApproxReal {
    if b.is_zero() {
        return ApproxReal::zero(frac_bits);
    }
    let t = b.abs();
    let inner = frac_bits + 4;
    let num = (sqrt_w + (&t << w)).to_biguint().unwrap();
    let den = BigUint::one() << w;
    let a = approx_ln_ratio(&num, &den, inner).unwrap();
    let n2 = (disc.value() - &t * &t).abs().to_biguint().unwrap();
    let l = approx_ln_ratio(&n2, &BigUint::one(), inner).unwrap();
    // the truncated square root perturbs the first log by < 2^-w
    let r = a.widen(inner + 1).sub(&l.half()).with_extra_err(1).round_to(frac_bits);
    if b.is_negative() {
        r.neg()
    } else {
        r
    }
}

fn sqrt_fixed(disc: &Discriminant, w: u32) -> BigInt {
    (disc.value() << (2 * w)).sqrt()
}

/// Distance from `f` to `ρ(f)`, within `2^-frac_bits`.
pub fn step_distance(f: &ReducedForm, frac_bits: u32) -> ApproxReal {
    let w = frac_bits + 8;
    let s = sqrt_fixed(f.disc(), w);
    signed_step(f.disc(), &s, w, f.b(), frac_bits)
}

/// Walk engine for one discriminant at fixed precision; caches step distances by `b`.
pub struct Infra {
    disc: Discriminant,
    budget: PrecisionBudget,
    w: u32,
    sqrt_w: BigInt,
    cache: Mutex<HashMap<BigInt, ApproxReal>>,
    base: Mutex<Option<WalkState>>,
    ln_delta: ApproxReal,
    gap_floor: BigInt,
}

impl Infra {
    pub fn new(disc: &Discriminant, budget: PrecisionBudget) -> Self {
        let f = budget.frac_bits;
        let w = f + 8;
        let sqrt_w = sqrt_fixed(disc, w);
        let ln_delta = approx_ln_ratio(&disc.value().to_biguint().unwrap(), &BigUint::one(), f).unwrap();
        // ln 2 − 1/4 > 0.443
        let gap_floor = (BigInt::from(443) << f) / BigInt::from(1000);
        Infra {
            disc: disc.clone(),
            budget,
            w,
            sqrt_w,
            cache: Mutex::new(HashMap::new()),
            base: Mutex::new(None),
            ln_delta,
            gap_floor,
        }
    }

    pub fn with_default_budget(disc: &Discriminant) -> Self {
        Self::new(disc, PrecisionBudget::new(disc))
    }

    pub fn disc(&self) -> &Discriminant {
        &self.disc
    }

    pub fn budget(&self) -> &PrecisionBudget {
        &self.budget
    }

    pub fn frac_bits(&self) -> u32 {
        self.budget.frac_bits
    }

    /// Signed step distance for middle coefficient `b`.
    pub fn step_b(&self, b: &BigInt) -> ApproxReal {
        let key = b.abs();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return if b.is_negative() { v.neg() } else { v.clone() };
        }
        let v = signed_step(&self.disc, &self.sqrt_w, self.w, &key, self.budget.frac_bits);
        self.cache.lock().unwrap().insert(key, v.clone());
        if b.is_negative() {
            v.neg()
        } else {
            v
        }
    }

    pub fn step(&self, f: &Form) -> ApproxReal {
        self.step_b(f.b())
    }

    /// Distance from a positive reduced form to its ρ² successor.
    pub fn double_step(&self, f: &PositiveReducedForm) -> ApproxReal {
        let r = rho(f);
        self.step(f).add(&self.step(&r))
    }

    pub fn unit_state(&self) -> WalkState {
        WalkState { form: unit_form(&self.disc), dist: ApproxReal::zero(self.budget.frac_bits) }
    }

    /// `ρ²(unit)` with its distance; the base of the double-and-add walk.
    pub fn base_state(&self) -> WalkState {
        let mut g = self.base.lock().unwrap();
        if let Some(s) = g.as_ref() {
            return s.clone();
        }
        let s = self.next(&self.unit_state());
        *g = Some(s.clone());
        s
    }

    fn check_gap(&self, d: &ApproxReal) {
        debug_assert!(
            d.mantissa() > &self.gap_floor,
            "successor gap {} below ln 2 − 1/4",
            d.to_f64()
        );
    }

    pub fn next(&self, s: &WalkState) -> WalkState {
        let d = self.double_step(&s.form);
        self.check_gap(&d);
        WalkState { form: next_positive(&s.form), dist: s.dist.add(&d) }
    }

    pub fn prev(&self, s: &WalkState) -> WalkState {
        let p = prev_positive(&s.form);
        let d = self.double_step(&p);
        self.check_gap(&d);
        WalkState { form: p, dist: s.dist.sub(&d) }
    }

    /// Reduce `f` from distance `d0`, landing on a positive form; returns the state and δ′.
    pub fn reduce_from(&self, f: &Form, d0: &ApproxReal) -> (WalkState, ApproxReal) {
        let (r, trace) = reduce_traced(f);
        let mut corr = ApproxReal::zero(self.budget.frac_bits);
        for b in &trace {
            corr = corr.add(&self.step_b(b));
        }
        let form = if r.a().is_positive() {
            crate::forms::PositiveReducedForm::new(r).unwrap()
        } else {
            corr = corr.add(&self.step(&r));
            crate::forms::PositiveReducedForm::new(rho(&r)).unwrap()
        };
        (WalkState { form, dist: d0.add(&corr) }, corr)
    }

    /// Compose and reduce, tracking `δ(f1) + δ(f2) + δ′`.
    pub fn giant_step(&self, s1: &WalkState, s2: &WalkState) -> WalkState {
        let c = compose(&s1.form, &s2.form).expect("same discriminant");
        let (s, corr) = self.reduce_from(&c, &s1.dist.add(&s2.dist));
        debug_assert!(
            corr.mantissa().abs() <= self.ln_delta.mantissa() + BigInt::from(corr.err_ulps() + 2),
            "|δ′| = {} exceeds ln Δ",
            corr.to_f64()
        );
        s
    }

    /// Square-and-multiply power of `base`; the distance is `x · base.dist` plus all corrections.
    pub fn power(&self, base: &WalkState, x: &BigUint) -> WalkState {
        let mut acc = self.unit_state();
        let bits = x.bits();
        for i in (0..bits).rev() {
            acc = self.giant_step(&acc, &acc);
            if x.bit(i) {
                acc = self.giant_step(&acc, base);
            }
        }
        acc
    }

    /// A principal state within a few steps of `target`, by halving: near `T/2`, square, walk.
    ///
    /// Squaring a fixed power instead would double the reduction offset at every level.
    fn principal_near(&self, target: &ApproxReal) -> WalkState {
        let far = self.ln_delta.mul_int(&BigInt::from(4));
        if target.mantissa().abs() <= *far.mantissa() {
            return self.walk_to(self.unit_state(), target);
        }
        let half = self.principal_near(&target.div_int(&BigInt::from(2)));
        self.walk_to(self.giant_step(&half, &half), target)
    }

    fn walk_to(&self, mut cur: WalkState, target: &ApproxReal) -> WalkState {
        while cur.dist.gt_beyond_err(target) {
            cur = self.prev(&cur);
        }
        loop {
            let n = self.next(&cur);
            if n.dist.gt_beyond_err(target) {
                return cur;
            }
            cur = n;
        }
    }

    /// Move from `s` (in its class cycle) to the last positive form with `dist ≤ target`.
    pub fn advance_to(&self, s: &WalkState, target: &ApproxReal) -> WalkState {
        let mut cur = s.clone();
        let ahead = target.sub(&cur.dist);
        if ahead.mantissa().abs() > *self.ln_delta.mul_int(&BigInt::from(4)).mantissa() {
            let jump = self.principal_near(&ahead);
            cur = self.giant_step(&cur, &jump);
        }
        while cur.dist.gt_beyond_err(target) {
            cur = self.prev(&cur);
        }
        loop {
            let n = self.next(&cur);
            if n.dist.gt_beyond_err(target) {
                return cur;
            }
            cur = n;
        }
    }

    fn check_contract(&self, s: WalkState) -> Result<WalkState> {
        if !s.dist.err_below_pow2(3) {
            return Err(Error::Sizing(format!(
                "accumulated distance error {:e} is not below 1/8",
                s.dist.err_bound_f64()
            )));
        }
        Ok(s)
    }

    /// Reg: the positive principal form left of or at `x/4`.
    pub fn form_left_of(&self, x_quarters: &BigInt) -> Result<WalkState> {
        self.budget.check_x(x_quarters)?;
        let target = quarter(x_quarters, self.budget.frac_bits);
        let s = self.advance_to(&self.unit_state(), &target);
        self.check_contract(s)
    }

    /// `g^x` in the frame where the unreduced power sits at distance 0.
    pub fn power_form(&self, g: &PositiveReducedForm, x: &BigUint) -> WalkState {
        let base = WalkState { form: g.clone(), dist: ApproxReal::zero(self.budget.frac_bits) };
        self.power(&base, x)
    }

    /// PIP: the last positive form of `g^x`'s cycle left of or at `δ(g^x) + y/4`.
    pub fn pip_eval(&self, g: &PositiveReducedForm, x: &BigInt, y: &BigInt) -> Result<WalkState> {
        self.budget.check_x(x)?;
        self.budget.check_x(y)?;
        let p = self.power_form(g, &x.to_biguint().unwrap());
        let target = quarter(y, self.budget.frac_bits);
        let s = self.advance_to(&p, &target);
        self.check_contract(s)
    }

    /// One lap of `f`'s class cycle of positive forms, with distances from `f`.
    pub fn cycle_from(&self, f: &PositiveReducedForm, cap: u64) -> Result<(Vec<WalkState>, ApproxReal)> {
        let mut out = Vec::new();
        let mut cur = WalkState { form: f.clone(), dist: ApproxReal::zero(self.budget.frac_bits) };
        loop {
            out.push(cur.clone());
            if out.len() as u64 > cap {
                return Err(Error::CapExceeded { what: "class cycle length".into(), cap });
            }
            let n = self.next(&cur);
            if n.form == *f {
                return Ok((out, n.dist));
            }
            cur = n;
        }
    }
}

/// `x / 4` at `frac_bits`.
pub fn quarter(x: &BigInt, frac_bits: u32) -> ApproxReal {
    ApproxReal::from_dyadic(x.clone(), 2, frac_bits)
}
