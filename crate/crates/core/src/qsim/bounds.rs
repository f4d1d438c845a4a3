//! The probability lower bounds of the two subroutines, checked against exact distributions.

use serde::Serialize;

use super::dist::DualDistribution;
use super::phase::KahanSum;
use super::target::{TargetSet1D, TargetSet2D};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
    NotEvaluated,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Precondition {
    pub name: &'static str,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub dimension: u8,
    #[serde(serialize_with = "ser_form")]
    pub measured_form: crate::forms::PositiveReducedForm,
    pub preconditions: Vec<Precondition>,
    pub relaxed: bool,
    /// `Σ_{y∈Y} Pr(y | g)`.
    pub y_mass: f64,
    pub card_y: usize,
    pub m_min: u64,
    pub m_max: u64,
    pub support_size: u64,
    pub checks: Vec<BoundCheck>,
}

fn ser_form<S: serde::Serializer>(f: &crate::forms::PositiveReducedForm, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_text())
}

impl BoundReport {
    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn preconditions_hold(&self) -> bool {
        self.preconditions.iter().all(|p| p.holds)
    }

    pub fn any_failed(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Fail)
    }
}

fn ge(name: &'static str, measured: f64, bound: f64, gated: bool) -> BoundCheck {
    let verdict = if !gated {
        Verdict::NotApplicable
    } else if measured >= bound {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    BoundCheck { name, measured, bound, verdict, note: None }
}

/// Width of the shortest arc of `Z/N` containing all residues, from the largest cyclic gap.
pub fn arc_width(residues: &mut [u64], modulus: u64) -> u64 {
    if residues.is_empty() {
        return 0;
    }
    residues.sort_unstable();
    let mut gap = residues[0] + modulus - residues[residues.len() - 1];
    for w in residues.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    modulus - gap
}

/// Largest support for which the exact phase-arc test is run.
pub const ARC_SUPPORT_CAP: u64 = 1 << 24;

/// Whether every phase `x·y/N` for `x` in the support lies in a quarter turn.
fn arc_ok(support: &[u64], y: u64, modulus: u64) -> bool {
    let mut r: Vec<u64> = support.iter().map(|&x| ((x as u128 * y as u128) % modulus as u128) as u64).collect();
    // arc measured between extreme phases; a quarter turn is N/4
    4 * arc_width(&mut r, modulus) <= modulus
}

/// Bounds of Regulator-Dual for one measured form, `dist` holding at least the bins of `target`.
///
/// `support` lists the `x` with this form value. `relaxed` marks a `q` outside the algorithm's constraint.
pub fn verify_probability_bounds_1d(dist: &DualDistribution, target: &TargetSet1D, support: &[u64], relaxed: bool) -> BoundReport {
    let q = target.q as f64;
    let p = dist.support_size as f64;
    let r = target.r_plus;
    let pre = vec![
        Precondition { name: "R+ > 32 ln Δ", holds: r > 32.0 * target.ln_delta },
        Precondition { name: "q/2 ≤ 5Δ(ln Δ)² < q", holds: !relaxed },
    ];
    let gated = pre.iter().all(|c| c.holds);
    let ys = target.ys();
    let probs: Vec<f64> = ys.iter().map(|&y| dist.prob(y)).collect();
    let mass = probs.iter().copied().collect::<KahanSum>().value();
    let (m_min, m_max) = (target.stats.m_min as f64, target.stats.m_max as f64);
    let mut checks = Vec::new();

    // structural: phase arc and the per-element bound it implies
    let mut arc_fail = 0usize;
    let mut elem_fail = 0usize;
    let mut elem_min = f64::INFINITY;
    for (&y, &pr) in ys.iter().zip(&probs) {
        elem_min = elem_min.min(pr);
        if arc_ok(support, y, dist.modulus) {
            if pr < p / (8.0 * q) {
                elem_fail += 1;
            }
        } else {
            arc_fail += 1;
        }
    }
    checks.push(BoundCheck {
        name: "phase_arc",
        measured: arc_fail as f64,
        bound: 0.0,
        verdict: if arc_fail == 0 { Verdict::Pass } else { Verdict::Fail },
        note: Some(format!("{arc_fail} of {} elements of Y have phases outside a quarter turn", ys.len())),
    });
    let mut c = ge("per_element", elem_min, p / (8.0 * q), true);
    if elem_fail > 0 {
        c.verdict = Verdict::Fail;
    }
    c.note = Some("min over Y of Pr(y); the bound p/(8q) is asserted where the phase arc holds".into());
    checks.push(c);

    checks.push(ge("p_lower", p, q / (8.0 * r) * (m_min + 1.0), gated));
    checks.push(ge("card_y", ys.len() as f64, r / (8.0 * (m_max + 1.0)), gated));
    checks.push(ge("mass_chain", mass, (m_min + 1.0) / (512.0 * (m_max + 1.0)), gated));
    checks.push(ge("chain_final", (m_min + 1.0) / (512.0 * (m_max + 1.0)), (-11f64).exp2(), gated));
    checks.push(ge("y_mass", mass, (-11f64).exp2(), gated));

    BoundReport {
        dimension: 1,
        measured_form: dist.measured_form.clone(),
        preconditions: pre,
        relaxed,
        y_mass: mass,
        card_y: ys.len(),
        m_min: target.stats.m_min,
        m_max: target.stats.m_max,
        support_size: dist.support_size,
        checks,
    }
}

/// Bounds of AlgPIP-Dual for one measured form. `support` may be `None` when it is too large to list.
pub fn verify_probability_bounds_2d(dist: &DualDistribution, target: &TargetSet2D, support: Option<&[(u64, u64)]>, relaxed: bool) -> BoundReport {
    let q = target.q as f64;
    let n = target.n as f64;
    let p = dist.support_size as f64;
    let r = target.r_plus;
    let pre = vec![
        Precondition { name: "R+ ≥ 64 ln Δ", holds: r >= 64.0 * target.ln_delta },
        Precondition { name: "2q < Δ(ln Δ)² < 4q", holds: !relaxed },
    ];
    let gated = pre.iter().all(|c| c.holds);
    let ys = target.ys();
    let probs: Vec<f64> = ys.iter().map(|&(a, b)| dist.prob2(a, b)).collect();
    let mass = probs.iter().copied().collect::<KahanSum>().value();
    let (m_min, m_max) = (target.stats.m_min as f64, target.stats.m_max as f64);
    let elem_bound = p / (128.0 * q * q);
    let mut checks = Vec::new();
    let elem_min = probs.iter().copied().fold(f64::INFINITY, f64::min);

    match support {
        Some(sup) => {
            let nn = dist.modulus;
            let mut arc_fail = 0;
            let mut elem_fail = 0;
            for (&(y1, y2), &pr) in ys.iter().zip(&probs) {
                let mut res: Vec<u64> = sup
                    .iter()
                    .map(|&(x1, x2)| ((x1 as u128 * y1 as u128 + x2 as u128 * y2 as u128) % nn as u128) as u64)
                    .collect();
                if 4 * arc_width(&mut res, nn) <= nn {
                    if pr < elem_bound {
                        elem_fail += 1;
                    }
                } else {
                    arc_fail += 1;
                }
            }
            checks.push(BoundCheck {
                name: "phase_arc",
                measured: arc_fail as f64,
                bound: 0.0,
                verdict: if arc_fail == 0 { Verdict::Pass } else { Verdict::Fail },
                note: None,
            });
            let mut c = ge("per_element", elem_min, elem_bound, true);
            if elem_fail > 0 {
                c.verdict = Verdict::Fail;
            }
            checks.push(c);
        }
        None => {
            checks.push(BoundCheck {
                name: "phase_arc",
                measured: f64::NAN,
                bound: 0.0,
                verdict: Verdict::NotEvaluated,
                note: Some("support too large to list".into()),
            });
            checks.push(ge("per_element", elem_min, elem_bound, true));
        }
    }
    checks.push(ge("p_lower", p, (q / n) * (q / (8.0 * r)) * (m_min + 1.0), gated));
    checks.push(ge("card_y", ys.len() as f64, n * r / (8.0 * (m_max + 2.0)), gated));
    checks.push(ge("y_mass", mass, (-16f64).exp2(), gated));

    BoundReport {
        dimension: 2,
        measured_form: dist.measured_form.clone(),
        preconditions: pre,
        relaxed,
        y_mass: mass,
        card_y: ys.len(),
        m_min: target.stats.m_min,
        m_max: target.stats.m_max,
        support_size: dist.support_size,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_width_wraps() {
        assert_eq!(arc_width(&mut [0, 1, 2], 16), 2);
        assert_eq!(arc_width(&mut [15, 0, 1], 16), 2);
        assert_eq!(arc_width(&mut [0, 8], 16), 8);
        assert_eq!(arc_width(&mut [5], 16), 0);
    }
}
