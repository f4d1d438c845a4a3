//! Exhaustive scans of the block structure of Reg and PIP against the cycle oracle.

use num_bigint::BigInt;
use qinfra::forms::to_positive_rep;
use qinfra::oracle::{class_group, enumerate_cycle, order_and_s, PrincipalCycle};
use qinfra::{Discriminant, Infra, PositiveReducedForm, PrecisionBudget, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Counterexamples kept per clause; the count is always complete.
const KEEP: usize = 20;

#[derive(Clone, Debug)]
pub struct LemmaConfig {
    /// Periods of Reg scanned (after the first).
    pub periods: u32,
    /// Evaluate gated clauses even when their precondition fails.
    pub relaxed: bool,
    pub cycle_cap: u64,
    /// Forms for the PIP lattice scan; one per class of order ≤ `max_order` when `None`.
    pub pip_forms: Option<Vec<PositiveReducedForm>>,
    pub max_order: u64,
    pub max_classes: usize,
    /// Largest PIP window, in evaluated points, per form.
    pub pip_point_cap: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig { periods: 3, relaxed: false, cycle_cap: 1_000_000, pip_forms: None, max_order: 4, max_classes: 4, pip_point_cap: 400_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct Clause {
    pub lemma: u8,
    pub clause: &'static str,
    pub status: Status,
    pub checked: u64,
    pub violations: u64,
    pub counterexamples: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Clause {
    fn new(lemma: u8, clause: &'static str) -> Self {
        Clause { lemma, clause, status: Status::Pass, checked: 0, violations: 0, counterexamples: Vec::new(), note: None }
    }

    fn skipped(lemma: u8, clause: &'static str, why: impl Into<String>) -> Self {
        Clause { status: Status::Skipped, note: Some(why.into()), ..Clause::new(lemma, clause) }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> Value) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            self.status = Status::Fail;
            if self.counterexamples.len() < KEEP {
                self.counterexamples.push(witness());
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub disc: Discriminant,
    pub r_plus: f64,
    pub ln_delta: f64,
    /// `R⁺ / ln Δ`.
    pub ratio: f64,
    pub periods: u32,
    /// `R⁺ > 5 ln Δ`.
    pub precondition_holds: bool,
    pub relaxed: bool,
    pub cycle_len: usize,
    /// Observed `m` (run length − 1) over scanned Reg runs.
    pub m_range: Option<(u64, u64)>,
    pub pip_forms: Vec<String>,
    pub clauses: Vec<Clause>,
}

impl LemmaReport {
    pub fn failed(&self) -> bool {
        self.clauses.iter().any(|c| c.status == Status::Fail)
    }

    pub fn clause(&self, lemma: u8, prefix: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.lemma == lemma && c.clause.starts_with(prefix))
    }
}

#[derive(Clone, Copy, Debug)]
struct RunOf {
    start: u64,
    len: u64,
    form: usize,
}

fn runs<T: PartialEq + Copy>(vals: &[T], lo: u64, id: impl Fn(T) -> usize) -> Vec<RunOf> {
    let mut out: Vec<RunOf> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match out.last_mut() {
            Some(r) if r.form == id(v) => r.len += 1,
            _ => out.push(RunOf { start: lo + i as u64, len: 1, form: id(v) }),
        }
    }
    out
}

pub fn verify_lemmas(disc: &Discriminant, cfg: &LemmaConfig) -> Result<LemmaReport> {
    let cycle = enumerate_cycle(disc, cfg.cycle_cap)?;
    let r = cycle.r_f64();
    let ln_d = disc.ln_f64();
    let pre = r > 5.0 * ln_d;
    let mut clauses = Vec::new();
    let m_range = reg_scan(disc, &cycle, cfg, pre, &mut clauses)?;

    let forms = match &cfg.pip_forms {
        Some(f) => f.clone(),
        None => class_group(disc)
            .cycles
            .iter()
            .filter_map(|c| c.first().map(to_positive_rep))
            .filter_map(|g| order_and_s(g.reduced(), &cycle, cfg.max_order).ok().map(|_| g))
            .take(cfg.max_classes)
            .collect(),
    };
    let mut l4 = [
        Clause::new(4, "if: every lattice translate of a run start begins a run of the same form, |ε| < 1"),
        Clause::new(4, "only if: every run of the form starts at a lattice translate"),
        Clause::new(4, "1 ≤ m ≤ ln Δ + 3"),
        Clause::new(4, "max |m − m′| ≤ 4 over lattice translates"),
    ];
    let mut scanned = Vec::new();
    for g in &forms {
        match pip_scan(disc, &cycle, g, cfg, &mut l4)? {
            true => scanned.push(g.to_text()),
            false => {
                let note = format!("{}: window exceeds {} points", g.to_text(), cfg.pip_point_cap);
                for c in l4.iter_mut() {
                    c.note = Some(c.note.take().map_or(note.clone(), |n| format!("{n}; {note}")));
                }
            }
        }
    }
    let [a, b, mut c, mut d] = l4;
    if scanned.is_empty() {
        clauses.extend([a, b, c, d].into_iter().map(|x| Clause::skipped(4, x.clause, x.note.unwrap_or_else(|| "no form scanned".into()))));
    } else {
        if !pre && !cfg.relaxed {
            c = Clause::skipped(4, c.clause, "precondition unmet: R⁺ ≤ 5 ln Δ");
            d = Clause::skipped(4, d.clause, "precondition unmet: R⁺ ≤ 5 ln Δ");
        }
        clauses.extend([a, b, c, d]);
    }

    Ok(LemmaReport {
        disc: disc.clone(),
        r_plus: r,
        ln_delta: ln_d,
        ratio: r / ln_d,
        periods: cfg.periods,
        precondition_holds: pre,
        relaxed: cfg.relaxed,
        cycle_len: cycle.len(),
        m_range,
        pip_forms: scanned,
        clauses,
    })
}

/// Lemmas 1 and 2 over periods `1..=periods` of Reg.
fn reg_scan(disc: &Discriminant, cycle: &PrincipalCycle, cfg: &LemmaConfig, pre: bool, out: &mut Vec<Clause>) -> Result<Option<(u64, u64)>> {
    let r = cycle.r_f64();
    let ln_d = disc.ln_f64();
    let len = cycle.len();
    let lo = ((4.0 * r).floor() as i64 - 8).max(0) as u64;
    let hi = (4.0 * r * (cfg.periods as f64 + 2.0)).ceil() as u64 + 16;
    let infra = Infra::new(disc, PrecisionBudget::with_x_limit(disc, BigInt::from(hi + 1)));

    let mut principal = Clause::new(1, "Reg(x) is a principal form");
    let mut vals = Vec::with_capacity((hi - lo) as usize);
    for x in lo..hi {
        let s = infra.form_left_of(&BigInt::from(x))?;
        let i = cycle.index_of(s.form.form());
        principal.check(i.is_some(), || json!({"x": x, "form": s.form.to_text()}));
        vals.push(i.unwrap_or(usize::MAX));
    }
    let rs = runs(&vals, lo, |v| v);

    let mut l1 = Clause::new(1, "|ε| ≤ 1 and Reg(x − 1) = ρ⁻²(g) at x = 4δ(g) + 1/2 + 4kR⁺ + ε");
    let mut l2a = Clause::new(2, "(1)-(2) Reg(x + m + 1) = ρ²(g) after the run Reg(x..=x+m) = g");
    let mut l2b = Clause::new(2, "1 ≤ m < ln Δ + 3");
    let mut l2c = Clause::new(2, "max |m_k − m_k′| ≤ 4");
    let mut m_range: Option<(u64, u64)> = None;

    if len == 1 {
        // ρ² fixes the only form: every x starts a run and ε always exists
        l1.note = Some("single-form cycle; Reg is constant".into());
        l1.checked = cfg.periods as u64;
        l2a = Clause::skipped(2, l2a.clause, "single-form cycle; runs are unbounded");
        l2b = Clause::skipped(2, l2b.clause, "single-form cycle; runs are unbounded");
        l2c = Clause::skipped(2, l2c.clause, "single-form cycle; runs are unbounded");
    } else {
        for (i, g) in cycle.forms.iter().enumerate() {
            let d = cycle.dists[i].to_f64();
            let prev = (i + len - 1) % len;
            let next = (i + 1) % len;
            let mut ms = Vec::new();
            for k in 1..=cfg.periods as u64 {
                let y = 4.0 * d + 0.5 + 4.0 * k as f64 * r;
                let Some(pos) = rs
                    .iter()
                    .enumerate()
                    .filter(|(j, run)| run.form == i && *j > 0)
                    .min_by(|a, b| (a.1.start as f64 - y).abs().total_cmp(&(b.1.start as f64 - y).abs()))
                    .map(|(j, _)| j)
                else {
                    l1.check(false, || json!({"form": g.to_text(), "k": k, "y": y, "reason": "no run of g in the window"}));
                    continue;
                };
                let run = rs[pos];
                let eps = run.start as f64 - y;
                let before = rs[pos - 1].form;
                l1.check(eps.abs() <= 1.0 && before == prev, || {
                    json!({"form": g.to_text(), "k": k, "x": run.start, "epsilon": eps, "reg_x_minus_1_is_rho_inv2": before == prev})
                });
                if pos + 1 >= rs.len() {
                    continue;
                }
                let m = run.len - 1;
                m_range = Some(m_range.map_or((m, m), |(a, b)| (a.min(m), b.max(m))));
                ms.push(m);
                let after = rs[pos + 1].form;
                l2a.check(after == next, || json!({"form": g.to_text(), "k": k, "x": run.start, "m": m}));
                l2b.check(m >= 1 && (m as f64) < ln_d + 3.0, || {
                    json!({"form": g.to_text(), "k": k, "x": run.start, "m": m, "bound": ln_d + 3.0})
                });
            }
            if let (Some(a), Some(b)) = (ms.iter().min(), ms.iter().max()) {
                l2c.check(b - a <= 4, || json!({"form": g.to_text(), "m_per_period": ms}));
            }
        }
        if !pre && !cfg.relaxed {
            let why = "precondition unmet: R⁺ ≤ 5 ln Δ";
            l2a = Clause::skipped(2, l2a.clause, why);
            l2b = Clause::skipped(2, l2b.clause, why);
            l2c = Clause::skipped(2, l2c.clause, why);
        }
    }
    out.extend([principal, l1, l2a, l2b, l2c]);
    Ok(m_range)
}

/// Lemma 4 for one `g`: rows `x₁ ∈ [0, 3n)`, one period of run starts in rows `[0, n)`, lattice
/// shifts `(x₁, x₂) ∈ {0,1,2}²`. Returns false when the window exceeds the point cap.
fn pip_scan(disc: &Discriminant, cycle: &PrincipalCycle, g: &PositiveReducedForm, cfg: &LemmaConfig, cl: &mut [Clause; 4]) -> Result<bool> {
    let (n, s) = order_and_s(g.reduced(), cycle, cfg.cycle_cap)?;
    let s = s.to_f64();
    let r = cycle.r_f64();
    let ln_d = disc.ln_f64();
    let base_lo = (8.0 * s).ceil() as u64 + 8;
    let base_hi = base_lo + (4.0 * r).ceil() as u64;
    let cols = (8.0 * s + 12.0 * r).ceil() as u64 + 32 + (8.0 * ln_d).ceil() as u64 + 16;
    let rows = 3 * n;
    if rows * cols > cfg.pip_point_cap {
        return Ok(false);
    }
    let infra = Infra::new(disc, PrecisionBudget::with_x_limit(disc, BigInt::from(cols.max(rows) + 1)));
    let mut table: Vec<Vec<RunOf>> = Vec::with_capacity(rows as usize);
    let mut ids: Vec<PositiveReducedForm> = Vec::new();
    for x1 in 0..rows {
        let mut vals = Vec::with_capacity(cols as usize);
        for x2 in 0..cols {
            let f = infra.pip_eval(g, &BigInt::from(x1), &BigInt::from(x2))?.form;
            let id = match ids.iter().position(|h| *h == f) {
                Some(i) => i,
                None => {
                    ids.push(f);
                    ids.len() - 1
                }
            };
            vals.push(id);
        }
        table.push(runs(&vals, 0, |v| v));
    }

    let [c_if, c_only, c_m, c_var] = cl;
    for x1p in 0..n {
        for run in table[x1p as usize].iter().filter(|u| u.start >= base_lo && u.start < base_hi) {
            let f = run.form;
            let mut ms = vec![run.len - 1];
            for sx1 in 0..3u64 {
                for sx2 in 0..3u64 {
                    if sx1 == 0 && sx2 == 0 {
                        continue;
                    }
                    let t = run.start as f64 - 4.0 * sx1 as f64 * s + 4.0 * sx2 as f64 * r;
                    let row = &table[(x1p + sx1 * n) as usize];
                    let hit = row.iter().find(|u| u.form == f && (u.start as f64 - t).abs() < 1.0 && u.start > 0);
                    c_if.check(hit.is_some(), || {
                        json!({"g": g.to_text(), "x1'": x1p, "x2'": run.start, "shift": [sx1, sx2], "target": t, "form": ids[f].to_text()})
                    });
                    if let Some(u) = hit {
                        // runs cut by the right edge carry no m
                        if u.start + u.len < cols {
                            let m = u.len - 1;
                            ms.push(m);
                            c_m.check(m >= 1 && m as f64 <= ln_d + 3.0, || {
                                json!({"g": g.to_text(), "x1": x1p + sx1 * n, "x2": u.start, "m": m, "bound": ln_d + 3.0})
                            });
                        }
                    }
                }
            }
            let (a, b) = (ms.iter().min().unwrap(), ms.iter().max().unwrap());
            c_var.check(b - a <= 4, || json!({"g": g.to_text(), "x1'": x1p, "x2'": run.start, "m": ms}));

            // converse: every run of f anywhere in the window sits on a translate
            for (rr, row) in table.iter().enumerate() {
                for u in row.iter().filter(|u| u.form == f && u.start > 0 && u.start + u.len < cols) {
                    let da = rr as i64 - x1p as i64;
                    let ok = da.rem_euclid(n as i64) == 0 && {
                        let x1 = (da / n as i64) as f64;
                        let c = u.start as f64 - run.start as f64 + 4.0 * x1 * s;
                        let k = (c / (4.0 * r)).round();
                        (c - 4.0 * k * r).abs() < 1.0
                    };
                    c_only.check(ok, || json!({"g": g.to_text(), "x1'": x1p, "x2'": run.start, "x1": rr, "x2": u.start}));
                }
            }
        }
    }
    Ok(true)
}
