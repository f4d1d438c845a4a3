//! Brute-force ground truth: principal cycle, regulator, principality, class group.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::distance::{ApproxReal, Infra, PrecisionBudget, WalkState};
use crate::error::{Error, Result};
use crate::forms::{rho, to_positive_rep, unit_form, Discriminant, Form, PositiveReducedForm, ReducedForm};

pub const DEFAULT_CYCLE_CAP: u64 = 10_000_000;
pub const ORACLE_FRAC_BITS: u32 = 160;

fn key(f: &Form) -> (BigInt, BigInt) {
    (f.a().clone(), f.b().clone())
}

/// The positive forms of the principal cycle with distances from the unit form.
#[derive(Clone, Debug)]
pub struct PrincipalCycle {
    pub disc: Discriminant,
    pub forms: Vec<PositiveReducedForm>,
    pub dists: Vec<ApproxReal>,
    pub regulator_narrow: ApproxReal,
    /// Number of ρ steps around the full cycle (both signs of `a`).
    pub rho_steps: usize,
    index: HashMap<(BigInt, BigInt), usize>,
}

impl PrincipalCycle {
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn index_of(&self, f: &Form) -> Option<usize> {
        if f.disc() != &self.disc {
            return None;
        }
        if let Some(&i) = self.index.get(&key(f)) {
            return Some(i);
        }
        // Γ-orbit lookup for forms whose b is not the reduced representative
        self.forms.iter().position(|g| g.same_orbit(f))
    }

    /// Whether the reduced form `f` lies on the principal cycle.
    pub fn contains(&self, f: &ReducedForm) -> bool {
        self.index_of(to_positive_rep(f).form()).is_some()
    }

    pub fn dist_of(&self, f: &ReducedForm) -> Option<&ApproxReal> {
        self.index_of(to_positive_rep(f).form()).map(|i| &self.dists[i])
    }

    /// Distance of `value` reduced into `[0, R⁺)`.
    pub fn reduce_mod_r(&self, value: &ApproxReal) -> ApproxReal {
        let r = self.regulator_narrow.round_to(value.frac_bits().max(self.regulator_narrow.frac_bits()));
        let v = value.widen(r.frac_bits().max(value.frac_bits()));
        let k = v.mantissa().div_floor_big(r.mantissa());
        v.sub(&r.mul_int(&k))
    }

    pub fn r_f64(&self) -> f64 {
        self.regulator_narrow.to_f64()
    }
}

trait DivFloorBig {
    fn div_floor_big(&self, other: &BigInt) -> BigInt;
}

impl DivFloorBig for BigInt {
    fn div_floor_big(&self, other: &BigInt) -> BigInt {
        num_integer::Integer::div_floor(self, other)
    }
}

pub fn enumerate_cycle(disc: &Discriminant, cap: u64) -> Result<PrincipalCycle> {
    enumerate_cycle_at(disc, cap, ORACLE_FRAC_BITS)
}

pub fn enumerate_cycle_at(disc: &Discriminant, cap: u64, frac_bits: u32) -> Result<PrincipalCycle> {
    let budget = PrecisionBudget::new(disc).with_frac_bits(frac_bits)?;
    let infra = Infra::new(disc, budget);
    let u = unit_form(disc);
    let mut forms = Vec::new();
    let mut dists = Vec::new();
    let mut cur: ReducedForm = u.reduced().clone();
    let mut d = ApproxReal::zero(frac_bits);
    let mut steps = 0usize;
    loop {
        if cur.a().is_positive() {
            forms.push(PositiveReducedForm::new(cur.clone()).unwrap());
            dists.push(d.clone());
        }
        d = d.add(&infra.step(&cur));
        cur = rho(&cur);
        steps += 1;
        if steps as u64 > cap {
            return Err(Error::CapExceeded { what: format!("principal cycle of Δ = {disc}"), cap });
        }
        if cur == *u.reduced() {
            break;
        }
    }
    let index = forms.iter().enumerate().map(|(i, f)| (key(f), i)).collect();
    Ok(PrincipalCycle { disc: disc.clone(), forms, dists, regulator_narrow: d, rho_steps: steps, index })
}

/// `R⁺` within `2^-target_bits`.
pub fn regulator_classical(disc: &Discriminant, target_bits: u32, cap: u64) -> Result<ApproxReal> {
    let c = enumerate_cycle_at(disc, cap, target_bits + 40)?;
    Ok(c.regulator_narrow.round_to(target_bits + 2))
}

/// Principality of `g` and its distance when principal.
pub fn principal_test_bruteforce(g: &ReducedForm, cycle: &PrincipalCycle) -> (bool, Option<ApproxReal>) {
    match cycle.dist_of(g) {
        Some(d) => (true, Some(d.clone())),
        None => (false, None),
    }
}

/// Proper-equivalence classes of reduced forms (the ρ-cycles).
#[derive(Clone, Debug)]
pub struct ClassGroup {
    pub disc: Discriminant,
    pub cycles: Vec<Vec<ReducedForm>>,
    /// Number of classes once `(a, b, c)` and `(−a, b, −c)` are identified.
    pub wide_class_number: usize,
}

impl ClassGroup {
    pub fn narrow_class_number(&self) -> usize {
        self.cycles.len()
    }

    pub fn class_of(&self, f: &ReducedForm) -> Option<usize> {
        self.cycles.iter().position(|c| c.iter().any(|g| g.same_orbit(f)))
    }
}

pub fn class_group(disc: &Discriminant) -> ClassGroup {
    let all = crate::forms::reduced_forms(disc);
    let mut id: HashMap<(BigInt, BigInt), usize> = HashMap::new();
    let mut cycles: Vec<Vec<ReducedForm>> = Vec::new();
    for f in &all {
        if id.contains_key(&key(f)) {
            continue;
        }
        let n = cycles.len();
        let mut cyc = Vec::new();
        let mut cur = f.clone();
        loop {
            id.insert(key(&cur), n);
            cyc.push(cur.clone());
            cur = rho(&cur);
            if cur == *f {
                break;
            }
        }
        cycles.push(cyc);
    }
    // union cycles related by (a, b, c) ↦ (−a, b, −c)
    let mut parent: Vec<usize> = (0..cycles.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for (i, cyc) in cycles.iter().enumerate() {
        let f = &cyc[0];
        let neg = (-f.a().clone(), f.b().clone());
        let j = id[&neg];
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
        }
    }
    let mut roots: Vec<usize> = (0..cycles.len()).map(|i| find(&mut parent, i)).collect();
    roots.sort_unstable();
    roots.dedup();
    ClassGroup { disc: disc.clone(), cycles, wide_class_number: roots.len() }
}

/// Order `n` of `g`'s class and the distance `S` of the unreduced `gⁿ`, reduced mod `R⁺`.
///
/// `S = δ(reduced gⁿ) − δ′` where `δ′` is the correction accumulated while
/// reducing the powers, so that `PIP(x₁ + n, x₂ − 4S) = PIP(x₁, x₂)`.
pub fn order_and_s(g: &ReducedForm, cycle: &PrincipalCycle, cap: u64) -> Result<(u64, ApproxReal)> {
    let disc = g.disc();
    let frac = cycle.regulator_narrow.frac_bits();
    let budget = PrecisionBudget::new(disc).with_frac_bits(frac)?;
    let infra = Infra::new(disc, budget);
    let gp = to_positive_rep(g);
    let base = WalkState { form: gp, dist: ApproxReal::zero(frac) };
    let mut p = base.clone();
    let mut n = 1u64;
    loop {
        if let Some(i) = cycle.index_of(p.form.form()) {
            let s = cycle.dists[i].sub(&p.dist);
            return Ok((n, cycle.reduce_mod_r(&s)));
        }
        if n >= cap {
            return Err(Error::CapExceeded { what: "class order".into(), cap });
        }
        p = infra.giant_step(&p, &base);
        n += 1;
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct CycleRecord {
    pub a: String,
    pub b: String,
    pub c: String,
    pub dist_mantissa: String,
    pub dist_frac_bits: u32,
}

/// JSON lines, one record per positive form of the cycle.
pub fn dump_cycle(cycle: &PrincipalCycle) -> String {
    let mut out = String::new();
    for (f, d) in cycle.forms.iter().zip(&cycle.dists) {
        let r = CycleRecord {
            a: f.a().to_string(),
            b: f.b().to_string(),
            c: f.c().to_string(),
            dist_mantissa: d.mantissa().to_string(),
            dist_frac_bits: d.frac_bits(),
        };
        out.push_str(&serde_json::to_string(&r).unwrap());
        out.push('\n');
    }
    out
}

pub fn parse_cycle_dump(text: &str) -> Result<Vec<CycleRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(format!("cycle dump line: {e}"))))
        .collect()
}
