mod common;

use common::{abs_diff, pell_regulator, to_f64};
use qinfra::oracle::{class_group, enumerate_cycle, regulator_classical, DEFAULT_CYCLE_CAP};
use qinfra::Discriminant;

fn discs(up_to: i64) -> impl Iterator<Item = Discriminant> {
    (5..=up_to).filter_map(|v| Discriminant::new(v).ok())
}

#[test]
fn spot_values() {
    let r8 = pell_regulator(8);
    assert!((to_f64(&r8) - (3.0 + 2.0 * 2f64.sqrt()).ln()).abs() < 1e-15);
    let r13 = pell_regulator(13);
    assert!((to_f64(&r13) - ((11.0 + 3.0 * 13f64.sqrt()) / 2.0).ln()).abs() < 1e-15);
    for v in [5, 8, 13] {
        let c = enumerate_cycle(&Discriminant::new(v).unwrap(), DEFAULT_CYCLE_CAP).unwrap();
        assert!(abs_diff(&c.regulator_narrow, &pell_regulator(v)) < 1e-40, "Δ={v}");
    }
}

#[test]
fn cycle_matches_pell_below_2000() {
    for disc in discs(2000) {
        let v = disc.to_u64().unwrap() as i64;
        let c = enumerate_cycle(&disc, DEFAULT_CYCLE_CAP).unwrap();
        assert!(abs_diff(&c.regulator_narrow, &pell_regulator(v)) < 1e-20, "Δ={v}");
        let rc = regulator_classical(&disc, 80, DEFAULT_CYCLE_CAP).unwrap();
        assert!(abs_diff(&rc, &pell_regulator(v)) < 1e-20, "Δ={v}");
    }
}

#[test]
fn cycle_invariants() {
    for disc in discs(1500) {
        let c = enumerate_cycle(&disc, DEFAULT_CYCLE_CAP).unwrap();
        let sd = disc.to_f64().sqrt();
        assert_eq!(c.dists[0].to_f64(), 0.0);
        for i in 0..c.len() {
            let next = if i + 1 < c.len() { c.dists[i + 1].clone() } else { c.regulator_narrow.clone() };
            let gap = next.sub(&c.dists[i]).to_f64();
            assert!(gap > std::f64::consts::LN_2, "Δ={disc} gap {gap}");
            assert!(gap < 2.0 * sd.ln());
        }
        assert!(c.dists[0].err_below_pow2(100));
        assert!(c.regulator_narrow.err_below_pow2(100));
        for (i, f) in c.forms.iter().enumerate() {
            for g in &c.forms[i + 1..] {
                assert!(!f.same_orbit(g));
            }
        }
    }
}

/// `|Cl| R⁺ < √Δ (ln √Δ + 1)/2` holds with the wide class number only when the
/// fundamental unit has norm +1; with norm −1 it holds for `R = R⁺/2`.
#[test]
fn class_number_regulator_bound() {
    let mut narrow_violations = Vec::new();
    for disc in discs(3000) {
        let v = disc.to_u64().unwrap() as i64;
        let c = enumerate_cycle(&disc, DEFAULT_CYCLE_CAP).unwrap();
        let cg = class_group(&disc);
        let sd = disc.to_f64().sqrt();
        let rhs = sd * (sd.ln() + 1.0) / 2.0;
        let (_, _, norm) = common::pell_unit(v);
        let r_wide = if norm == 1 { c.r_f64() } else { c.r_f64() / 2.0 };
        assert!(cg.wide_class_number as f64 * r_wide < rhs, "Δ={disc}");
        if cg.wide_class_number as f64 * c.r_f64() >= rhs {
            assert_eq!(norm, -1, "Δ={disc}");
            narrow_violations.push(v);
        }
        assert_eq!(cg.narrow_class_number(), if norm == 1 { 2 * cg.wide_class_number } else { cg.wide_class_number }, "Δ={disc}");
    }
    assert_eq!(narrow_violations.first(), Some(&73));
    println!("|Cl|·R⁺ bound fails for {} discriminants below 3000 (all with a norm −1 unit)", narrow_violations.len());
}
