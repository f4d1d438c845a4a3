//! The target sets `Y` of the two subroutines, from the oracle's `R⁺`, `n` and `S`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::distance::ApproxReal;
use crate::forms::PositiveReducedForm;

use super::dist::{PipDual, RegulatorDual};

fn rat(v: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Nearest integers `y` with `|y − c| ≤ 1/2`; both when `c` is a half-integer.
fn within_half(c: &BigRational) -> Vec<BigInt> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let lo = (c - &half).ceil().to_integer();
    let hi = (c + &half).floor().to_integer();
    let mut out = Vec::new();
    let mut y = lo;
    while y <= hi {
        out.push(y.clone());
        y += 1;
    }
    out
}

/// Run-length statistics `m = len − 1` over complete runs.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RunStats {
    pub m_min: u64,
    pub m_max: u64,
    pub complete_runs: u64,
}

impl RunStats {
    fn push(&mut self, len: u64) {
        let m = len - 1;
        if self.complete_runs == 0 {
            self.m_min = m;
            self.m_max = m;
        } else {
            self.m_min = self.m_min.min(m);
            self.m_max = self.m_max.max(m);
        }
        self.complete_runs += 1;
    }
}

/// `Y` for one measured form of Regulator-Dual.
#[derive(Clone, Debug, Serialize)]
pub struct TargetSet1D {
    pub form_id: usize,
    #[serde(serialize_with = "ser_form")]
    pub form: PositiveReducedForm,
    pub q: u64,
    pub r_plus: f64,
    pub ln_delta: f64,
    pub stats: RunStats,
    pub support_size: u64,
    /// `q/(4(m_max+1))`.
    pub y_max: f64,
    /// `(y, z)` with `|y − qz/R⁺| ≤ 1/2`.
    pub members: Vec<(u64, u64)>,
}

fn ser_form<S: serde::Serializer>(f: &PositiveReducedForm, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_text())
}

impl TargetSet1D {
    pub fn ys(&self) -> Vec<u64> {
        self.members.iter().map(|m| m.0).collect()
    }

    pub fn card(&self) -> usize {
        self.members.len()
    }
}

/// `Y = {0 ≤ y ≤ q/(4(m_max+1)) : y/(4q) = z/(4R⁺) + ω, |ω| ≤ 1/(8q)}` for form `j`.
pub fn target_set_1d(sim: &RegulatorDual, j: usize, r_plus: &ApproxReal) -> TargetSet1D {
    let q = sim.params.q;
    let mut stats = RunStats::default();
    let mut p = 0;
    for r in sim.table.runs_of(j) {
        p += r.len as u64;
        if r.complete {
            stats.push(r.len as u64);
        }
    }
    let r = r_plus.to_rational();
    // y ≤ q/(4(m_max+1)) ⇔ 4(m_max+1)·y ≤ q
    let cap = BigInt::from(q) / BigInt::from(4 * (stats.m_max + 1));
    let mut members = Vec::new();
    let mut z = BigInt::zero();
    loop {
        let c = BigRational::from_integer(BigInt::from(q) * &z) / &r;
        if c.floor().to_integer() > &cap + 1 {
            break;
        }
        for y in within_half(&c) {
            if !y.is_negative() && y <= cap {
                members.push((y.to_u64().unwrap(), z.to_u64().unwrap()));
            }
        }
        z += 1;
    }
    members.dedup_by_key(|m| m.0);
    TargetSet1D {
        form_id: j,
        form: sim.table.forms()[j].clone(),
        q,
        r_plus: r_plus.to_f64(),
        ln_delta: sim.params.disc.ln_f64(),
        stats,
        support_size: p,
        y_max: q as f64 / (4.0 * (stats.m_max + 1) as f64),
        members,
    }
}

/// `Y` for one measured form of AlgPIP-Dual.
#[derive(Clone, Debug, Serialize)]
pub struct TargetSet2D {
    pub form_id: usize,
    #[serde(serialize_with = "ser_form")]
    pub form: PositiveReducedForm,
    pub q: u64,
    pub n: u64,
    pub r_plus: f64,
    pub s: f64,
    pub ln_delta: f64,
    pub stats: RunStats,
    pub support_size: u64,
    /// `(y₁, y₂, z₁, z₂)`.
    pub members: Vec<(u64, u64, i64, u64)>,
    pub dual_basis: DualBasisCheck,
}

impl TargetSet2D {
    pub fn ys(&self) -> Vec<(u64, u64)> {
        self.members.iter().map(|m| (m.0, m.1)).collect()
    }

    pub fn card(&self) -> usize {
        self.members.len()
    }
}

/// Exact check that `[[1/n, 0], [S/(nR⁺), 1/(4R⁺)]]` is dual to the period lattice
/// `⟨(n, −4S), (0, 4R⁺)⟩`, and the residual of every member against it.
#[derive(Clone, Debug, Serialize)]
pub struct DualBasisCheck {
    pub pairing_is_identity: bool,
    /// `max |y/(8q) − (z₁b₁ + z₂b₂)|` over members, per axis, times `16q` (so `≤ 1` is in contract).
    pub max_residual_16q: (f64, f64),
}

/// Run statistics and `p` for form `id` over all rows.
pub fn pip_run_stats(sim: &PipDual, id: usize) -> (RunStats, u64) {
    let mut stats = RunStats::default();
    let mut p = 0;
    for x1 in 0..sim.params.q {
        sim.rows.for_each_run_of(id, x1, |_, l, complete| {
            p += l;
            if complete {
                stats.push(l);
            }
        });
    }
    (stats, p)
}

/// `Y` of AlgPIP-Dual for form `id`, with `S` the distance of `gⁿ` (so the `x₂`-period shift is `4S`).
pub fn target_set_2d(sim: &PipDual, id: usize, n: u64, s: &ApproxReal, r_plus: &ApproxReal) -> TargetSet2D {
    let (stats, p) = pip_run_stats(sim, id);
    target_set_2d_with(sim, id, n, s, r_plus, stats, p)
}

pub fn target_set_2d_with(sim: &PipDual, id: usize, n: u64, s: &ApproxReal, r_plus: &ApproxReal, stats: RunStats, p: u64) -> TargetSet2D {
    let q = sim.params.q;
    let eight_q = rat(8 * q as i128);
    let r = r_plus.to_rational();
    let sr = s.to_rational();
    let nn = rat(n as i128);
    let b1 = (BigRational::one() / &nn, BigRational::zero());
    let b2 = (&sr / (&nn * &r), BigRational::one() / (rat(4) * &r));
    let g1 = (nn.clone(), -(rat(4) * &sr));
    let g2 = (BigRational::zero(), rat(4) * &r);
    let dot = |a: &(BigRational, BigRational), b: &(BigRational, BigRational)| &a.0 * &b.0 + &a.1 * &b.1;
    let pairing_is_identity =
        dot(&b1, &g1).is_one() && dot(&b1, &g2).is_zero() && dot(&b2, &g1).is_zero() && dot(&b2, &g2).is_one();

    // 0 ≤ y₂ < q/(m_max+2)
    let y2_bound = rat(q as i128) / rat(stats.m_max as i128 + 2);
    let mut members = Vec::new();
    let mut res = (0.0f64, 0.0f64);
    let mut z2 = BigInt::zero();
    let step = &eight_q / &nn;
    loop {
        let c2 = &eight_q * &b2.1 * BigRational::from_integer(z2.clone());
        if c2 > &y2_bound + BigRational::one() {
            break;
        }
        for y2 in within_half(&c2) {
            let y2r = BigRational::from_integer(y2.clone());
            if y2.is_negative() || y2r >= y2_bound {
                continue;
            }
            // centres 8q(z₁/n + z₂S/(nR⁺)) for all z₁, reduced into [0, 8q)
            let t = &eight_q * &b2.0 * BigRational::from_integer(z2.clone());
            let k0 = (&t / &step).floor().to_integer();
            let base = &t - &step * BigRational::from_integer(k0.clone());
            for k in -1..=(n as i64) {
                let c1 = &base + &step * rat(k as i128);
                for y1 in within_half(&c1) {
                    if y1.is_negative() || BigRational::from_integer(y1.clone()) >= eight_q {
                        continue;
                    }
                    let z1 = -&k0 + BigInt::from(k);
                    let y1u = y1.to_u64().unwrap();
                    let y2u = y2.to_u64().unwrap();
                    if members.iter().any(|m: &(u64, u64, i64, u64)| m.0 == y1u && m.1 == y2u) {
                        continue;
                    }
                    let e1 = (BigRational::from_integer(y1.clone()) - &c1) / &eight_q;
                    let e2 = (&y2r - &c2) / &eight_q;
                    let k16 = 16.0 * q as f64;
                    res.0 = res.0.max(e1.to_f64().unwrap().abs() * k16);
                    res.1 = res.1.max(e2.to_f64().unwrap().abs() * k16);
                    members.push((y1u, y2u, z1.to_i64().unwrap(), z2.to_u64().unwrap()));
                }
            }
        }
        z2 += 1;
    }
    TargetSet2D {
        form_id: id,
        form: sim.rows.form(id).clone(),
        q,
        n,
        r_plus: r_plus.to_f64(),
        s: s.to_f64(),
        ln_delta: sim.params.disc.ln_f64(),
        stats,
        support_size: p,
        members,
        dual_basis: DualBasisCheck { pairing_is_identity, max_residual_16q: res },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::PrecisionBudget;
    use crate::forms::Discriminant;
    use crate::oracle::{enumerate_cycle, order_and_s};
    use crate::qsim::params::{DualParams1D, DualParams2D};

    #[test]
    fn one_d_members_are_near_multiples() {
        let d = Discriminant::new(1009).unwrap();
        let p = DualParams1D::with_q(&d, 1 << 14, true).unwrap();
        let sim = RegulatorDual::new(&p, &PrecisionBudget::new(&d), 100_000).unwrap();
        let cyc = enumerate_cycle(&d, 100_000).unwrap();
        for (j, _) in sim.measured_forms().into_iter().take(5) {
            let t = target_set_1d(&sim, j, &cyc.regulator_narrow);
            assert_eq!(t.members[0], (0, 0));
            for &(y, z) in &t.members {
                assert!((y as f64 - p.q as f64 * z as f64 / cyc.r_f64()).abs() <= 0.5);
                assert!(y as f64 <= t.y_max);
            }
        }
    }

    #[test]
    fn two_d_members() {
        let d = Discriminant::new(40).unwrap();
        let g: PositiveReducedForm = "40:2,4,-3".parse().unwrap();
        let p = DualParams2D::with_q(&d, &g, 64, true).unwrap();
        let sim = PipDual::new(&p, &PrecisionBudget::new(&d), 1000).unwrap();
        let cyc = enumerate_cycle(&d, 1000).unwrap();
        let (n, s) = order_and_s(g.reduced(), &cyc, 1000).unwrap();
        let (id, _) = sim.measured_forms()[0];
        let t = target_set_2d(&sim, id, n, &s, &cyc.regulator_narrow);
        assert!(t.dual_basis.pairing_is_identity);
        assert!(t.members.iter().any(|m| m.0 == 0 && m.1 == 0));
        assert!(t.dual_basis.max_residual_16q.0 <= 1.0 && t.dual_basis.max_residual_16q.1 <= 1.0);
        // n = 2: two y₁ per y₂ up to the boundary
        assert_eq!(t.members.iter().filter(|m| m.1 == 0).count(), 2);
    }
}
