//! Reg and PIP tabulated as runs of constant value over laps of the class cycles.

use std::collections::HashMap;

use num_bigint::BigInt;
use serde::Serialize;

use crate::distance::{ApproxReal, Infra, PrecisionBudget, WalkState};
use crate::error::{Error, Result};
use crate::forms::{unit_form, Form, PositiveReducedForm};

use super::params::{DualParams1D, DualParams2D};

/// Largest table side the simulator accepts.
pub const TABLE_CAP: u64 = 1 << 24;

fn key(f: &Form) -> (BigInt, BigInt) {
    (f.a().clone(), f.b().clone())
}

/// One lap of a class cycle in fixed point: form `j` of lap `l` sits at `pos[j] + l·period`.
#[derive(Clone, Debug)]
pub struct ClassLap {
    pub forms: Vec<PositiveReducedForm>,
    pos: Vec<i128>,
    pos_err: Vec<u128>,
    period: i128,
    period_err: u128,
    frac_bits: u32,
    index: HashMap<(BigInt, BigInt), usize>,
}

fn fixed(v: &ApproxReal, frac: u32) -> Result<i128> {
    v.to_fixed_i128(frac).ok_or_else(|| Error::Sizing("distance does not fit the fixed-point table".into()))
}

impl ClassLap {
    pub fn new(infra: &Infra, start: &PositiveReducedForm, cap: u64) -> Result<Self> {
        let frac_bits = infra.frac_bits();
        let (states, lap) = infra.cycle_from(start, cap)?;
        let mut forms = Vec::with_capacity(states.len());
        let mut pos = Vec::with_capacity(states.len());
        let mut pos_err = Vec::with_capacity(states.len());
        for s in states {
            pos.push(fixed(&s.dist, frac_bits)?);
            pos_err.push(s.dist.err_ulps());
            forms.push(s.form);
        }
        let index = forms.iter().enumerate().map(|(i, f)| (key(f), i)).collect();
        Ok(ClassLap { forms, pos, pos_err, period: fixed(&lap, frac_bits)?, period_err: lap.err_ulps(), frac_bits, index })
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn index_of(&self, f: &Form) -> Option<usize> {
        self.index.get(&key(f)).copied()
    }

    pub fn period(&self) -> ApproxReal {
        ApproxReal::new(BigInt::from(self.period), self.frac_bits, self.period_err)
    }

    pub fn position(&self, j: usize) -> ApproxReal {
        ApproxReal::new(BigInt::from(self.pos[j]), self.frac_bits, self.pos_err[j])
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    fn at(&self, l: i128, j: usize) -> (i128, u128) {
        (self.pos[j] + l * self.period, self.pos_err[j] + (l.unsigned_abs()) * self.period_err)
    }

    /// Calls `f(form, start, len, complete)` for every maximal run of `x ↦ form left of or at x/4 + offset`
    /// on `[0, q)`, where positions are shifted by `−offset`.
    pub fn for_each_run(&self, offset: i128, offset_err: u128, q: u64, margin: &mut Margin, mut f: impl FnMut(usize, u64, u64, bool)) {
        let n = self.len();
        let mut l = offset.div_euclid(self.period) - 1;
        let mut j = 0usize;
        let step = |l: &mut i128, j: &mut usize| {
            *j += 1;
            if *j == n {
                *j = 0;
                *l += 1;
            }
        };
        let boundary = |l: i128, j: usize, margin: &mut Margin| -> i128 {
            let (p, e) = self.at(l, j);
            margin.observe(p - offset, e + offset_err, self.frac_bits)
        };
        let mut b = boundary(l, j, margin);
        let q = q as i128;
        loop {
            let (mut nl, mut nj) = (l, j);
            step(&mut nl, &mut nj);
            let nb = boundary(nl, nj, margin);
            if nb > 0 {
                let lo = b.max(0);
                let hi = nb.min(q);
                if hi > lo {
                    f(j, lo as u64, (hi - lo) as u64, b >= 0 && nb <= q);
                }
            }
            if nb >= q {
                return;
            }
            (l, j, b) = (nl, nj, nb);
        }
    }

    /// Runs of the single form `j`, in increasing order.
    pub fn for_each_run_of(&self, j: usize, offset: i128, offset_err: u128, q: u64, mut f: impl FnMut(u64, u64, bool)) {
        let n = self.len();
        let q = q as i128;
        let mut margin = Margin::default();
        let mut l = (offset - self.pos[j]).div_euclid(self.period) - 1;
        loop {
            let (p, e) = self.at(l, j);
            let b = margin.observe(p - offset, e + offset_err, self.frac_bits);
            let (pn, en) = if j + 1 == n { self.at(l + 1, 0) } else { self.at(l, j + 1) };
            let nb = margin.observe(pn - offset, en + offset_err, self.frac_bits);
            if b >= q {
                return;
            }
            if nb > 0 {
                let lo = b.max(0);
                let hi = nb.min(q);
                if hi > lo {
                    f(lo as u64, (hi - lo) as u64, b >= 0 && nb <= q);
                }
            }
            l += 1;
        }
    }
}

/// Smallest distance between a form position and the quarter grid, against its error bound.
///
/// A position within its error bound of a grid point is taken to be on it, matching the walk
/// engine. That is exact for the grid point `0`, the only one a distance can hit exactly; hits
/// elsewhere are counted as uncertified.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Margin {
    /// Minimum of `dist to grid − error` over unsnapped positions, in units of `2^-frac_bits`.
    pub min_slack_ulps: Option<i128>,
    pub snapped_at_zero: u64,
    pub uncertified: u64,
}

impl Margin {
    /// Returns `⌈4·v⌉` for the fixed-point `v` and records its certification slack.
    fn observe(&mut self, v: i128, err: u128, frac: u32) -> i128 {
        let s = 1i128 << (frac - 2);
        let fl = v.div_euclid(s);
        let r = v.rem_euclid(s);
        let err = err as i128;
        if r <= err {
            if v.abs() <= err {
                self.snapped_at_zero += 1;
            } else if r != 0 || err > 0 {
                self.uncertified += 1;
            }
            return fl;
        }
        if s - r <= err {
            self.uncertified += 1;
            return fl + 1;
        }
        let slack = r.min(s - r) - err;
        self.min_slack_ulps = Some(self.min_slack_ulps.map_or(slack, |m| m.min(slack)));
        fl + 1
    }

    pub fn merge(&mut self, o: &Margin) {
        self.uncertified += o.uncertified;
        self.snapped_at_zero += o.snapped_at_zero;
        if let Some(s) = o.min_slack_ulps {
            self.min_slack_ulps = Some(self.min_slack_ulps.map_or(s, |m| m.min(s)));
        }
    }

    pub fn certified(&self) -> bool {
        self.uncertified == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Run {
    pub form: u32,
    pub start: u64,
    pub len: u32,
    /// False for runs cut by `0` or `q`.
    pub complete: bool,
}

/// `Reg(x)` for `0 ≤ x < q` as a sorted run list.
#[derive(Clone, Debug)]
pub struct RegTable {
    pub q: u64,
    pub lap: ClassLap,
    pub runs: Vec<Run>,
    pub margin: Margin,
    by_form: Vec<Vec<u32>>,
}

impl RegTable {
    pub fn forms(&self) -> &[PositiveReducedForm] {
        &self.lap.forms
    }

    pub fn form_id(&self, x: u64) -> Option<usize> {
        if x >= self.q {
            return None;
        }
        let i = self.runs.partition_point(|r| r.start <= x) - 1;
        Some(self.runs[i].form as usize)
    }

    pub fn get(&self, x: u64) -> Option<&PositiveReducedForm> {
        self.form_id(x).map(|j| &self.lap.forms[j])
    }

    /// Runs of form `j`.
    pub fn runs_of(&self, j: usize) -> impl Iterator<Item = &Run> + '_ {
        self.by_form[j].iter().map(move |&i| &self.runs[i as usize])
    }

    /// `p = card {x : Reg(x) = form j}`.
    pub fn support_size(&self, j: usize) -> u64 {
        self.runs_of(j).map(|r| r.len as u64).sum()
    }

    /// Form ids that occur in the table.
    pub fn occurring(&self) -> Vec<usize> {
        (0..self.lap.len()).filter(|&j| !self.by_form[j].is_empty()).collect()
    }

    /// Dense `x ↦ form id`.
    pub fn values(&self) -> Vec<u32> {
        let mut v = Vec::with_capacity(self.q as usize);
        for r in &self.runs {
            v.extend(std::iter::repeat(r.form).take(r.len as usize));
        }
        v
    }
}

fn check_side(q: u64) -> Result<()> {
    if q > TABLE_CAP {
        return Err(Error::CapExceeded { what: format!("table side q = {q}"), cap: TABLE_CAP });
    }
    Ok(())
}

/// Reg on `[0, q)`, walked once around the principal cycle and extended by whole laps.
pub fn tabulate_reg(params: &DualParams1D, budget: &PrecisionBudget, cycle_cap: u64) -> Result<RegTable> {
    check_side(params.q)?;
    let infra = Infra::new(&params.disc, budget.clone());
    let lap = ClassLap::new(&infra, &unit_form(&params.disc), cycle_cap)?;
    let mut runs = Vec::new();
    let mut margin = Margin::default();
    lap.for_each_run(0, 0, params.q, &mut margin, |j, start, len, complete| {
        runs.push(Run { form: j as u32, start, len: len as u32, complete });
    });
    let mut by_form = vec![Vec::new(); lap.len()];
    for (i, r) in runs.iter().enumerate() {
        by_form[r.form as usize].push(i as u32);
    }
    Ok(RegTable { q: params.q, lap, runs, margin, by_form })
}

/// One row `x₁` of PIP: the class of `g^{x₁}` and the shift between its lap frame and the `g`-frame.
#[derive(Clone, Copy, Debug)]
pub struct RowShift {
    pub class: u32,
    pub offset: i128,
    pub offset_err: u128,
}

/// `PIP(x₁, x₂)` for `0 ≤ x₁, x₂ < q`, stored as one lap per class of `⟨g⟩` and a shift per row.
#[derive(Clone, Debug)]
pub struct PipRows {
    pub q: u64,
    /// Order of `g` in the class group.
    pub n: u64,
    pub laps: Vec<ClassLap>,
    pub rows: Vec<RowShift>,
    /// Global id of form `j` of class `r` is `base[r] + j`.
    pub base: Vec<usize>,
    pub frac_bits: u32,
}

impl PipRows {
    pub fn form_count(&self) -> usize {
        self.laps.iter().map(|l| l.len()).sum()
    }

    pub fn split_id(&self, id: usize) -> (usize, usize) {
        let r = self.base.partition_point(|&b| b <= id) - 1;
        (r, id - self.base[r])
    }

    pub fn form(&self, id: usize) -> &PositiveReducedForm {
        let (r, j) = self.split_id(id);
        &self.laps[r].forms[j]
    }

    pub fn id_of(&self, f: &Form) -> Option<usize> {
        self.laps.iter().enumerate().find_map(|(r, l)| l.index_of(f).map(|j| self.base[r] + j))
    }

    /// Runs `(form id, start, len, complete)` of row `x₁`.
    pub fn for_each_run_in_row(&self, x1: u64, margin: &mut Margin, mut f: impl FnMut(usize, u64, u64, bool)) {
        let rs = self.rows[x1 as usize];
        let b = self.base[rs.class as usize];
        self.laps[rs.class as usize].for_each_run(rs.offset, rs.offset_err, self.q, margin, |j, s, l, c| f(b + j, s, l, c));
    }

    /// Runs of one form in row `x₁`; empty when the row lies in another class.
    pub fn for_each_run_of(&self, id: usize, x1: u64, f: impl FnMut(u64, u64, bool)) {
        let (r, j) = self.split_id(id);
        let rs = self.rows[x1 as usize];
        if rs.class as usize != r {
            return;
        }
        self.laps[r].for_each_run_of(j, rs.offset, rs.offset_err, self.q, f);
    }

    pub fn get(&self, x1: u64, x2: u64) -> usize {
        let mut out = usize::MAX;
        let mut m = Margin::default();
        self.for_each_run_in_row(x1, &mut m, |id, s, l, _| {
            if (s..s + l).contains(&x2) {
                out = id;
            }
        });
        out
    }

    /// Dense row-major `q × q` table of form ids.
    pub fn dense(&self) -> Result<Vec<u32>> {
        if self.q > 4096 {
            return Err(Error::CapExceeded { what: "dense PIP table side".into(), cap: 4096 });
        }
        let mut out = Vec::with_capacity((self.q * self.q) as usize);
        let mut m = Margin::default();
        for x1 in 0..self.q {
            self.for_each_run_in_row(x1, &mut m, |id, _, l, _| out.extend(std::iter::repeat(id as u32).take(l as usize)));
        }
        Ok(out)
    }

    /// Certification of every boundary in the table.
    pub fn margin(&self) -> Margin {
        let mut m = Margin::default();
        for x1 in 0..self.q {
            self.for_each_run_in_row(x1, &mut m, |_, _, _, _| {});
        }
        m
    }
}

/// Extra fractional bits so that `q` incremental giant steps stay inside the contract.
fn row_frac_bits(budget: &PrecisionBudget, q: u64) -> u32 {
    budget.frac_bits + 64 - q.leading_zeros() + 8
}

/// PIP for `g` on `[0, q)²`; rows are reached by successive giant steps with `g`.
pub fn tabulate_pip(params: &DualParams2D, budget: &PrecisionBudget, cycle_cap: u64) -> Result<PipRows> {
    check_side(params.q)?;
    let disc = &params.disc;
    let frac = row_frac_bits(budget, params.q);
    let infra = Infra::new(disc, budget.clone().with_frac_bits(frac)?);
    let g0 = WalkState { form: params.g.clone(), dist: ApproxReal::zero(frac) };
    let principal = ClassLap::new(&infra, &unit_form(disc), cycle_cap)?;
    // classes of g^0, g^1, …, g^{n−1}
    let mut laps = vec![principal];
    let mut cur = infra.giant_step(&infra.unit_state(), &g0);
    let mut n = 1u64;
    while laps[0].index_of(&cur.form).is_none() {
        if n >= cycle_cap {
            return Err(Error::CapExceeded { what: "order of g".into(), cap: cycle_cap });
        }
        laps.push(ClassLap::new(&infra, &cur.form, cycle_cap)?);
        cur = infra.giant_step(&cur, &g0);
        n += 1;
    }
    let mut base = Vec::with_capacity(laps.len());
    let mut acc = 0;
    for l in &laps {
        base.push(acc);
        acc += l.len();
    }
    let mut rows = Vec::with_capacity(params.q as usize);
    let mut s = infra.unit_state();
    for x1 in 0..params.q {
        let class = (x1 % n) as usize;
        let lap = &laps[class];
        let j = lap.index_of(&s.form).ok_or_else(|| Error::Divergence(format!("row {x1} left the class of g^{class}")))?;
        let o = lap.position(j).sub(&s.dist);
        if !o.err_below_pow2(4) {
            return Err(Error::Sizing(format!("row shift error {:e} too large at x₁ = {x1}", o.err_bound_f64())));
        }
        rows.push(RowShift { class: class as u32, offset: fixed(&o, frac)?, offset_err: o.err_ulps() });
        if x1 + 1 < params.q {
            s = infra.giant_step(&s, &g0);
        }
    }
    Ok(PipRows { q: params.q, n, laps, rows, base, frac_bits: frac })
}

/// Pointwise PIP through the walk engine, for cross-checks.
pub fn pip_pointwise(infra: &Infra, g: &PositiveReducedForm, x1: u64, x2: u64) -> Result<PositiveReducedForm> {
    Ok(infra.pip_eval(g, &BigInt::from(x1), &BigInt::from(x2))?.form)
}

/// Pointwise Reg through the walk engine, for cross-checks.
pub fn reg_pointwise(infra: &Infra, x: u64) -> Result<PositiveReducedForm> {
    Ok(infra.form_left_of(&BigInt::from(x))?.form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Discriminant;
    use rand::{Rng, SeedableRng};

    fn disc(v: i64) -> Discriminant {
        Discriminant::new(v).unwrap()
    }

    #[test]
    fn reg_table_matches_pointwise() {
        let d = disc(316);
        let p = DualParams1D::with_q(&d, 4096, true).unwrap();
        let budget = PrecisionBudget::new(&d);
        let t = tabulate_reg(&p, &budget, 10_000).unwrap();
        assert!(t.margin.certified());
        assert_eq!(t.get(0).unwrap(), &unit_form(&d));
        let infra = Infra::new(&d, budget);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = rng.gen_range(0..p.q);
            assert_eq!(t.get(x).unwrap(), &reg_pointwise(&infra, x).unwrap(), "x = {x}");
        }
        let total: u64 = t.occurring().iter().map(|&j| t.support_size(j)).sum();
        assert_eq!(total, p.q);
        assert_eq!(t.values().len() as u64, p.q);
    }

    #[test]
    fn reg_table_delta_8_blocks() {
        let d = disc(8);
        let p = DualParams1D::with_q(&d, 512, true).unwrap();
        let t = tabulate_reg(&p, &PrecisionBudget::new(&d), 100).unwrap();
        // one positive form, so the table is constant
        assert_eq!(t.runs.len(), (p.q as f64 / (4.0 * (3.0 + 2.0 * 2f64.sqrt()).ln())).ceil() as usize);
        for r in t.runs.iter().filter(|r| r.complete) {
            assert!(r.len == 7 || r.len == 8, "{r:?}");
        }
    }

    #[test]
    fn pip_rows_match_pointwise() {
        for (dv, g) in [(40i64, "40:2,4,-3"), (60, "60:2,6,-3"), (316, "316:1,16,-15")] {
            let d = disc(dv);
            let g: PositiveReducedForm = g.parse().unwrap();
            let p = DualParams2D::with_q(&d, &g, 64, true).unwrap();
            let budget = PrecisionBudget::new(&d);
            let rows = tabulate_pip(&p, &budget, 10_000).unwrap();
            let m = rows.margin();
            assert!(m.certified(), "Δ = {dv}: {m:?}");
            let infra = Infra::new(&d, budget);
            let dense = rows.dense().unwrap();
            for x1 in 0..p.q {
                for x2 in (0..p.q).step_by(5) {
                    let f = pip_pointwise(&infra, &g, x1, x2).unwrap();
                    let id = dense[(x1 * p.q + x2) as usize] as usize;
                    assert_eq!(rows.form(id), &f, "Δ = {dv}, x = ({x1}, {x2})");
                }
            }
        }
    }

    #[test]
    fn pip_order_delta_40() {
        let d = disc(40);
        let g: PositiveReducedForm = "40:2,4,-3".parse().unwrap();
        let p = DualParams2D::with_q(&d, &g, 16, true).unwrap();
        let rows = tabulate_pip(&p, &PrecisionBudget::new(&d), 100).unwrap();
        assert_eq!(rows.n, 2);
        assert_eq!(rows.laps.len(), 2);
        assert!(rows.rows.iter().enumerate().all(|(i, r)| r.class as usize == i % 2));
    }
}
