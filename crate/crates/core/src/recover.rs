//! Classical post-processing of dual samples and the two end-to-end pipelines.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distance::{ApproxReal, Infra, PrecisionBudget, WalkState};
use crate::error::{Error, Result};
use crate::forms::{to_positive_rep, unit_form, Discriminant, ReducedForm};
use crate::oracle;
use crate::qsim::{DualParams1D, DualParams2D, PipDual, RegulatorDual, SAMPLE_2D_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Regulator,
    PipDistance,
    NotPrincipal,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    Classical,
    Quantum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Success,
    ContinuedFraction,
    GcdNotOne,
    Refinement,
    Verification,
    Oracle,
    Sampling,
}

/// One attempt of a pipeline: the samples drawn and where it stopped.
#[derive(Clone, Debug, Serialize)]
pub struct Attempt {
    pub index: u32,
    /// Signed sample values; one entry per accepted sample.
    pub ys: Vec<Vec<i64>>,
    /// Samples rejected as zero or duplicate before this attempt could proceed.
    pub resamples: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<(i64, i64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gcd: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<f64>,
    pub outcome: Step,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Attempt {
    fn new(index: u32) -> Self {
        Attempt { index, ys: Vec::new(), resamples: 0, z: None, gcd: None, candidate: None, outcome: Step::Success, note: None }
    }

    fn stop(mut self, outcome: Step, note: impl Into<String>) -> Self {
        self.outcome = outcome;
        self.note = Some(note.into());
        self
    }
}

/// The independent check of a pipeline's answer against the cycle oracle.
#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub source: &'static str,
    pub value: Option<f64>,
    pub principal: Option<bool>,
    pub abs_diff: Option<f64>,
    pub agrees: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryResult {
    pub kind: Kind,
    pub value: Option<ApproxReal>,
    pub z_pair: Option<(i64, i64)>,
    pub attempts: u32,
    pub path: Path,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    pub relaxed: bool,
    pub diagnostics: Vec<Attempt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheck>,
}

impl RecoveryResult {
    fn classical(kind: Kind, value: Option<ApproxReal>) -> Self {
        RecoveryResult {
            kind,
            value,
            z_pair: None,
            attempts: 0,
            path: Path::Classical,
            q: None,
            relaxed: false,
            diagnostics: Vec::new(),
            oracle: None,
        }
    }

    /// Successful attempts over attempts made; `None` on the classical path.
    pub fn success_rate(&self) -> Option<f64> {
        if self.path == Path::Classical || self.diagnostics.is_empty() {
            return None;
        }
        let ok = self.diagnostics.iter().filter(|a| a.outcome == Step::Success).count();
        Some(ok as f64 / self.diagnostics.len() as f64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoverConfig {
    pub seed: u64,
    pub max_attempts: u32,
    pub cycle_cap: u64,
    pub q_override: Option<u64>,
    /// Allows a `q` outside the algorithm's constraint.
    pub relaxed: bool,
    /// Skip the small-regulator shortcut.
    pub force_quantum: bool,
    /// Target error `2^-tolerance_bits` of returned values.
    pub tolerance_bits: u32,
    /// Cross-check against the cycle oracle when the cycle fits the cap.
    pub oracle: bool,
    /// Keep drawing after a success; used to measure per-attempt success rates.
    pub exhaust_attempts: bool,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        RecoverConfig {
            seed: 0,
            max_attempts: 64,
            cycle_cap: 10_000_000,
            q_override: None,
            relaxed: false,
            force_quantum: false,
            tolerance_bits: 40,
            oracle: true,
            exhaust_attempts: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CfFailure {
    /// No convergent with denominator in the window meets `|y₁/y₂ − z₁/z₂| ≤ 1/(2z₂²)`.
    NoConvergent,
}

/// Largest denominator allowed by `z₂ ≤ √q/2`.
pub fn cf_window(q: u64) -> u64 {
    q.sqrt() / 2
}

/// The convergent `z₁/z₂` of `y₁/y₂` with `|y₁/y₂ − z₁/z₂| ≤ 1/(2z₂²)` and the largest `z₂ ≤ √q/2`.
pub fn cf_recover(y1: u64, y2: u64, q: u64) -> Result<std::result::Result<(u64, u64), CfFailure>> {
    if y2 == 0 {
        return Err(Error::InvalidArgument("y₂ = 0".into()));
    }
    if y1 == 0 || y1 > y2 {
        return Err(Error::InvalidArgument(format!("need 0 < y₁ ≤ y₂, got {y1}, {y2}")));
    }
    let window = cf_window(q) as u128;
    let (a, b) = (y1 as u128, y2 as u128);
    let (mut num, mut den) = (a, b);
    let (mut h0, mut h1) = (0u128, 1u128);
    let (mut k0, mut k1) = (1u128, 0u128);
    let mut best = None;
    while den != 0 {
        let t = num / den;
        (num, den) = (den, num - t * den);
        let h = t * h1 + h0;
        let k = t * k1 + k0;
        (h0, h1, k0, k1) = (h1, h, k1, k);
        if k > window {
            break;
        }
        // |a/b − h/k| ≤ 1/(2k²)  ⇔  2k·|ak − hb| ≤ b
        let diff = (a * k).abs_diff(h * b);
        if 2 * k * diff <= b && h > 0 {
            best = Some((h as u64, k as u64));
        }
    }
    Ok(best.ok_or(CfFailure::NoConvergent))
}

/// `(g, k₁, k₂)` with `k₁a + k₂b = g = gcd(a, b) ≥ 0`.
pub fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

#[derive(Clone, Debug)]
pub struct PipRecovery {
    pub s_prime: ApproxReal,
    pub z2: BigInt,
    pub z2p: BigInt,
    pub k: (BigInt, BigInt),
    pub p: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PipFailure {
    GcdNotOne { z2: BigInt, z2p: BigInt, gcd: BigInt },
}

/// `z₂ = ⌈y₂R⁺/(2q)⌋`, Bézout on `(z₂, z₂′)`, then `S′ = pR⁺/(8q)` with `p = y₁k₁ + y₁′k₂ mod 8q`.
///
/// Sample coordinates are signed: `y₂` above `4q` stands for `y₂ − 8q`.
pub fn pip_recover(y: (u64, u64), y_prime: (u64, u64), q: u64, r_plus: &ApproxReal) -> std::result::Result<PipRecovery, PipFailure> {
    let m = 8 * q;
    let signed = |v: u64| -> BigInt {
        if v >= m / 2 {
            BigInt::from(v) - m
        } else {
            BigInt::from(v)
        }
    };
    let z_of = |y2: u64| r_plus.mul_int(&signed(y2 % m)).div_int(&BigInt::from(2 * q)).round_half_even();
    let z2 = z_of(y.1);
    let z2p = z_of(y_prime.1);
    let (g, k1, k2) = ext_gcd(&z2, &z2p);
    if !g.is_one() {
        return Err(PipFailure::GcdNotOne { z2, z2p, gcd: g });
    }
    let p = (BigInt::from(y.0) * &k1 + BigInt::from(y_prime.0) * &k2).mod_floor(&BigInt::from(m));
    let pu = p.to_u64().unwrap();
    let s_prime = r_plus.mul_int(&p).div_int(&BigInt::from(m));
    Ok(PipRecovery { s_prime, z2, z2p, k: (k1, k2), p: pu })
}

fn infra_for(disc: &Discriminant, x_limit: BigInt, frac_bits: u32) -> Result<Infra> {
    let b = PrecisionBudget::with_x_limit(disc, x_limit);
    let frac = b.frac_bits.max(frac_bits);
    Ok(Infra::new(disc, b.with_frac_bits(frac)?))
}

fn ceil_quarters(v: &ApproxReal) -> BigInt {
    let four = BigInt::from(4);
    -(v.mul_int(&four).neg().floor())
}

/// States of `anchor.form` on its cycle between `lo` and `hi`, walking forward from `Reg(4·lo)`.
fn occurrences(infra: &Infra, form: &crate::forms::PositiveReducedForm, lo: &ApproxReal, hi: &ApproxReal) -> Result<Vec<WalkState>> {
    let mut x = lo.mul_int(&BigInt::from(4)).floor();
    if x.is_negative() {
        x = BigInt::zero();
    }
    let mut cur = infra.form_left_of(&x)?;
    let mut out = Vec::new();
    loop {
        if cur.form == *form && !lo.gt_beyond_err(&cur.dist) {
            out.push(cur.clone());
        }
        cur = infra.next(&cur);
        if cur.dist.gt_beyond_err(hi) {
            return Ok(out);
        }
    }
}

/// The distance of `anchor.form` on the principal cycle nearest to `target`, to within `2^-tolerance_bits`.
///
/// `target` must be within 1 of a position of `anchor.form`.
pub fn refine_distance(disc: &Discriminant, anchor: &WalkState, target: &ApproxReal, tolerance_bits: u32) -> Result<ApproxReal> {
    let one = ApproxReal::from_int(1, target.frac_bits());
    let lo = target.sub(&one);
    let hi = target.add(&one);
    let x_limit: BigInt = ceil_quarters(&hi) + 8;
    let mut bits = tolerance_bits + 16;
    for _ in 0..4 {
        let infra = infra_for(disc, x_limit.clone(), bits)?;
        let found = occurrences(&infra, &anchor.form, &lo, &hi)?;
        let best = found
            .into_iter()
            .min_by(|a, b| a.dist.sub(target).mantissa().abs().cmp(&b.dist.sub(target).mantissa().abs()));
        let Some(best) = best else {
            return Err(Error::Divergence(format!("{} does not occur within 1 of {}", anchor.form, target.to_f64())));
        };
        if best.dist.err_below_pow2(tolerance_bits) {
            return Ok(best.dist);
        }
        bits += 32;
    }
    Err(Error::Divergence(format!("error bound does not reach 2^-{tolerance_bits}")))
}

/// Step 1 of the regulator algorithm: walk to `bound` and return `R⁺` if the unit form recurs before it.
pub fn small_regulator(disc: &Discriminant, bound: f64, frac_bits: u32, cap: u64) -> Result<Option<ApproxReal>> {
    let bound = ApproxReal::from_rational(&BigRational::from_float(bound).unwrap(), frac_bits);
    let infra = infra_for(disc, ceil_quarters(&bound) + 8, frac_bits)?;
    let unit = unit_form(disc);
    let mut cur = infra.next(&infra.unit_state());
    let mut steps = 1u64;
    loop {
        if cur.dist.gt_beyond_err(&bound) {
            return Ok(None);
        }
        if cur.form == unit {
            return Ok(Some(cur.dist));
        }
        steps += 1;
        if steps > cap {
            return Err(Error::CapExceeded { what: "principal cycle walk".into(), cap });
        }
        cur = infra.next(&cur);
    }
}

fn signed_1d(y: u64, modulus: u64) -> i64 {
    if y > modulus / 2 {
        y as i64 - modulus as i64
    } else {
        y as i64
    }
}

fn oracle_regulator(disc: &Discriminant, value: &ApproxReal, cap: u64) -> Option<OracleCheck> {
    let c = oracle::enumerate_cycle(disc, cap).ok()?;
    let d = (value.to_f64() - c.r_f64()).abs();
    Some(OracleCheck { source: "principal cycle enumeration", value: Some(c.r_f64()), principal: None, abs_diff: Some(d), agrees: d < 1.0 })
}

/// Locate the unit form within `window` of `candidate`, at positive distance.
fn unit_near(disc: &Discriminant, candidate: &ApproxReal, window: &ApproxReal, frac_bits: u32) -> Result<Option<WalkState>> {
    let lo = candidate.sub(window);
    let hi = candidate.add(window);
    let infra = infra_for(disc, ceil_quarters(&hi) + 8, frac_bits)?;
    let unit = unit_form(disc);
    let zero = ApproxReal::zero(frac_bits);
    let found = occurrences(&infra, &unit, &lo, &hi)?;
    Ok(found
        .into_iter()
        .filter(|s| s.dist.gt_beyond_err(&zero))
        .min_by(|a, b| a.dist.sub(candidate).mantissa().abs().cmp(&b.dist.sub(candidate).mantissa().abs())))
}

/// Regulator end to end: classical when `R⁺ < 32 ln Δ`, otherwise dual sampling and continued fractions.
pub fn regulator_pipeline(disc: &Discriminant, config: &RecoverConfig) -> Result<RecoveryResult> {
    let bits = config.tolerance_bits + 16;
    let ln_delta = disc.ln_f64();
    if !config.force_quantum {
        if let Some(r) = small_regulator(disc, 32.0 * ln_delta, bits, config.cycle_cap)? {
            let unit = WalkState { form: unit_form(disc), dist: r.clone() };
            let v = refine_distance(disc, &unit, &r, config.tolerance_bits)?;
            let mut out = RecoveryResult::classical(Kind::Regulator, Some(v.clone()));
            if config.oracle {
                out.oracle = oracle_regulator(disc, &v, config.cycle_cap);
            }
            return Ok(out);
        }
    }

    let params = match config.q_override {
        Some(q) => DualParams1D::with_q(disc, q, config.relaxed)?,
        None => DualParams1D::new(disc)?,
    };
    let q = params.q;
    let budget = PrecisionBudget::with_x_limit(disc, BigInt::from(q));
    let sim = RegulatorDual::new(&params, &budget, config.cycle_cap)?;
    let modulus = sim.modulus();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut diagnostics = Vec::new();
    let mut found: Option<(ApproxReal, (i64, i64))> = None;
    let small_k = 16u64;

    for index in 1..=config.max_attempts {
        let mut at = Attempt::new(index);
        // two different non-zero samples
        let mut ys: Vec<u64> = Vec::new();
        while ys.len() < 2 {
            let y = signed_1d(sim.sample(&mut rng).y, modulus).unsigned_abs();
            if y == 0 || ys.contains(&y) {
                at.resamples += 1;
                if at.resamples > 1000 {
                    break;
                }
                continue;
            }
            ys.push(y);
        }
        if ys.len() < 2 {
            diagnostics.push(at.stop(Step::Sampling, "no two distinct non-zero samples"));
            continue;
        }
        ys.sort_unstable();
        at.ys = ys.iter().map(|&y| vec![y as i64]).collect();
        let (y1, y2) = (ys[0], ys[1]);
        let (z1, z2) = match cf_recover(y1, y2, q)? {
            Ok(z) => z,
            Err(_) => {
                diagnostics.push(at.stop(Step::ContinuedFraction, "no convergent meets the bound"));
                continue;
            }
        };
        at.z = Some((z1 as i64, z2 as i64));
        // q·z₁/y₁, off by at most R⁺/(2y₁) ≈ candidate/(2z₁·…); searched over that window
        let cand = BigRational::new(BigInt::from(q) * BigInt::from(z1), BigInt::from(y1));
        let candidate = ApproxReal::from_rational(&cand, bits);
        at.candidate = Some(candidate.to_f64());
        let win = BigRational::new(BigInt::from(q) * BigInt::from(z1), BigInt::from(2 * y1 * y1)) + BigRational::one();
        let window = ApproxReal::from_rational(&win, bits);
        let Some(hit) = unit_near(disc, &candidate, &window, bits)? else {
            diagnostics.push(at.stop(Step::Refinement, "unit form not found near q·z₁/y₁"));
            continue;
        };
        // smallest period: divide while the unit form recurs at D/k
        let mut d = hit.dist;
        'outer: loop {
            for k in 2..=small_k {
                let part = d.div_int(&BigInt::from(k));
                let half = ApproxReal::from_dyadic(1, 1, bits);
                if part.cmp_value(&half).is_lt() {
                    break 'outer;
                }
                if let Some(s) = unit_near(disc, &part, &half, bits)? {
                    d = s.dist;
                    continue 'outer;
                }
            }
            break;
        }
        let unit = WalkState { form: unit_form(disc), dist: d.clone() };
        let value = refine_distance(disc, &unit, &d, config.tolerance_bits)?;
        if config.oracle {
            if let Some(o) = oracle_regulator(disc, &value, config.cycle_cap) {
                if !o.agrees {
                    diagnostics.push(at.stop(Step::Oracle, format!("oracle disagrees by {:?}", o.abs_diff)));
                    continue;
                }
            }
        }
        diagnostics.push(at);
        if found.is_none() {
            found = Some((value, (z1 as i64, z2 as i64)));
        }
        if !config.exhaust_attempts {
            break;
        }
    }

    let attempts = diagnostics.len() as u32;
    let mut out = RecoveryResult {
        kind: Kind::Fail,
        value: None,
        z_pair: None,
        attempts,
        path: Path::Quantum,
        q: Some(q),
        relaxed: params.relaxed,
        diagnostics,
        oracle: None,
    };
    if let Some((v, z)) = found {
        out.kind = Kind::Regulator;
        if config.oracle {
            out.oracle = oracle_regulator(disc, &v, config.cycle_cap);
        }
        out.value = Some(v);
        out.z_pair = Some(z);
    }
    Ok(out)
}

/// `Reg(x + s)` lands on `g` for some slack `s ∈ {−1, 0, 1}`.
fn verify_s_prime(infra: &Infra, g: &crate::forms::PositiveReducedForm, s_prime: &ApproxReal) -> Result<Option<WalkState>> {
    let x = s_prime.mul_int(&BigInt::from(4)).round_half_even();
    for s in [0i64, -1, 1] {
        let xs = &x + s;
        if xs.is_negative() {
            continue;
        }
        let w = infra.form_left_of(&xs)?;
        if w.form == *g {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

fn oracle_pip(g: &ReducedForm, value: Option<&ApproxReal>, cap: u64) -> Option<OracleCheck> {
    let c = oracle::enumerate_cycle(g.disc(), cap).ok()?;
    let (principal, dist) = oracle::principal_test_bruteforce(g, &c);
    let abs_diff = match (value, &dist) {
        (Some(v), Some(d)) => {
            let r = c.r_f64();
            let e = (v.to_f64() - d.to_f64()).rem_euclid(r);
            Some(e.min(r - e))
        }
        _ => None,
    };
    let agrees = match value {
        Some(_) => principal && abs_diff.is_some_and(|e| e <= 0.125),
        None => !principal,
    };
    Some(OracleCheck { source: "principal cycle enumeration", value: dist.map(|d| d.to_f64()), principal: Some(principal), abs_diff, agrees })
}

/// PIP end to end: classical when `R⁺ < 64 ln Δ`, otherwise dual sampling and extended gcd.
///
/// `not_principal` once every candidate `S′` that reached verification missed `g`; `fail` when
/// no attempt got that far (gcd or sampling failures throughout).
pub fn pip_pipeline(g: &ReducedForm, r_plus: &ApproxReal, config: &RecoverConfig) -> Result<RecoveryResult> {
    let disc = g.disc().clone();
    let gp = to_positive_rep(g);
    let ln_delta = disc.ln_f64();
    let bits = config.tolerance_bits + 16;

    if !config.force_quantum && r_plus.to_f64() < 64.0 * ln_delta {
        let hi = r_plus.add(&ApproxReal::from_int(1, r_plus.frac_bits()));
        let infra = infra_for(&disc, ceil_quarters(&hi) + 8, bits)?;
        let zero = ApproxReal::zero(bits);
        // one lap of the principal cycle, [0, R⁺)
        let found = occurrences(&infra, &gp, &zero, r_plus)?
            .into_iter()
            .find(|s| r_plus.gt_beyond_err(&s.dist) || s.dist.mantissa().is_zero());
        let mut out = match found {
            Some(s) => {
                let v = refine_distance(&disc, &s, &s.dist, config.tolerance_bits)?;
                RecoveryResult::classical(Kind::PipDistance, Some(v))
            }
            None => RecoveryResult::classical(Kind::NotPrincipal, None),
        };
        if config.oracle {
            out.oracle = oracle_pip(g, out.value.as_ref(), config.cycle_cap);
        }
        return Ok(out);
    }

    let params = match config.q_override {
        Some(q) => DualParams2D::with_q(&disc, &gp, q, config.relaxed)?,
        None => DualParams2D::new(&disc, &gp)?,
    };
    let q = params.q;
    if q > SAMPLE_2D_CAP {
        return Err(Error::CapExceeded { what: format!("2-D sampling at q = {q}"), cap: SAMPLE_2D_CAP });
    }
    // R⁺ to within 1/(32q) before rounding z₂
    let need = 5 + 64 - (q.leading_zeros() + 1) + 8;
    let r = if r_plus.err_below_pow2(need) {
        r_plus.clone()
    } else {
        let unit = WalkState { form: unit_form(&disc), dist: r_plus.clone() };
        refine_distance(&disc, &unit, r_plus, need)?
    };
    let budget = PrecisionBudget::with_x_limit(&disc, BigInt::from(q));
    let sim = PipDual::new(&params, &budget, config.cycle_cap)?;
    let vinfra = infra_for(&disc, ceil_quarters(&r) + 16, bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = sim.modulus();
    let mut diagnostics = Vec::new();
    let mut result: Option<(Kind, Option<ApproxReal>, Option<(i64, i64)>)> = None;

    for index in 1..=config.max_attempts {
        let mut at = Attempt::new(index);
        let mut ys: Vec<(u64, u64)> = Vec::new();
        while ys.len() < 2 {
            let y = sim.sample(&mut rng)?.y;
            if y == (0, 0) || ys.contains(&y) {
                at.resamples += 1;
                if at.resamples > 1000 {
                    break;
                }
                continue;
            }
            ys.push(y);
        }
        if ys.len() < 2 {
            diagnostics.push(at.stop(Step::Sampling, "no two distinct non-zero samples"));
            continue;
        }
        at.ys = ys.iter().map(|&(a, b)| vec![signed_1d(a, m), signed_1d(b, m)]).collect();
        let rec = match pip_recover(ys[0], ys[1], q, &r) {
            Ok(rec) => rec,
            Err(PipFailure::GcdNotOne { z2, z2p, gcd }) => {
                at.z = Some((z2.to_i64().unwrap_or(0), z2p.to_i64().unwrap_or(0)));
                at.gcd = gcd.to_i64();
                diagnostics.push(at.stop(Step::GcdNotOne, format!("gcd(z₂, z₂′) = {gcd}")));
                continue;
            }
        };
        at.z = Some((rec.z2.to_i64().unwrap_or(0), rec.z2p.to_i64().unwrap_or(0)));
        at.gcd = Some(1);
        at.candidate = Some(rec.s_prime.to_f64());
        match verify_s_prime(&vinfra, &gp, &rec.s_prime)? {
            Some(w) => {
                let v = refine_distance(&disc, &w, &w.dist, config.tolerance_bits)?;
                diagnostics.push(at);
                if result.is_none() {
                    result = Some((Kind::PipDistance, Some(v), Some((rec.z2.to_i64().unwrap_or(0), rec.z2p.to_i64().unwrap_or(0)))));
                }
            }
            None => {
                diagnostics.push(at.stop(Step::Verification, "Reg(round(4S′) ± 1) misses g"));
                continue;
            }
        }
        if !config.exhaust_attempts {
            break;
        }
    }

    // not principal once every verified candidate missed g; fail if none got that far
    let verified = diagnostics.iter().any(|a: &Attempt| matches!(a.outcome, Step::Success | Step::Verification));
    let (kind, value, z_pair) = result.unwrap_or(if verified { (Kind::NotPrincipal, None, None) } else { (Kind::Fail, None, None) });
    let mut out = RecoveryResult {
        kind,
        value,
        z_pair,
        attempts: diagnostics.len() as u32,
        path: Path::Quantum,
        q: Some(q),
        relaxed: params.relaxed,
        diagnostics,
        oracle: None,
    };
    if config.oracle {
        out.oracle = oracle_pip(g, out.value.as_ref(), config.cycle_cap);
    }
    Ok(out)
}

/// `round(qz/R)` samples of the dual lattice, shifted by `ω`; used to construct recovery instances.
pub fn dual_point(q: u64, z: u64, r: &BigRational, omega: &BigRational) -> BigInt {
    let v = BigRational::from_integer(BigInt::from(q) * BigInt::from(z)) / r + omega;
    v.round().to_integer()
}
