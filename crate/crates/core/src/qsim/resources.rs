//! Qubit counts for the two subroutines.

use serde::Serialize;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Regulator,
    Pip,
}

/// `a·log Δ + b·log ln Δ + c·N + d`, logs to base 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Linear {
    pub log_delta: f64,
    pub log_ln_delta: f64,
    pub n: f64,
    pub constant: f64,
}

impl Linear {
    pub const fn new(log_delta: f64, log_ln_delta: f64, n: f64, constant: f64) -> Self {
        Linear { log_delta, log_ln_delta, n, constant }
    }

    pub fn eval(&self, log_delta: f64, log_ln_delta: f64, n: f64) -> f64 {
        self.log_delta * log_delta + self.log_ln_delta * log_ln_delta + self.n * n + self.constant
    }

    pub fn plus(&self, o: &Linear) -> Linear {
        Linear::new(self.log_delta + o.log_delta, self.log_ln_delta + o.log_ln_delta, self.n + o.n, self.constant + o.constant)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Register {
    pub name: &'static str,
    pub formula: Linear,
    pub qubits: f64,
    /// `⌈qubits⌉`.
    pub allocated: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResourceReport {
    pub which: Which,
    pub delta: String,
    pub log_delta: f64,
    pub log_ln_delta: f64,
    /// Footnote bound `N < 10.5 log Δ`, lower-order terms dropped.
    pub n_bound: f64,
    pub registers: Vec<Register>,
    /// The stated total as a formula and evaluated with `N = n_bound`.
    pub total_formula: Linear,
    pub total: f64,
    /// The sum of the register formulas; differs from the stated total for `pip`.
    pub register_sum_formula: Linear,
    pub register_sum: f64,
}

/// Counts for a discriminant of the size of `delta`; only the size matters, so any `Δ ≥ 3` is accepted.
pub fn estimate_qubits(delta: &BigInt, which: Which) -> ResourceReport {
    assert!(delta > &BigInt::from(2), "Δ must exceed 2");
    let ld = log2(delta);
    let lld = (ld * std::f64::consts::LN_2).log2();
    let n_bound = 10.5 * ld;
    let form = Linear::new(1.0, 0.0, 0.0, 2.0);
    let temp = Linear::new(0.0, 0.0, 1.0, 0.0);
    let (regs, total_formula) = match which {
        Which::Regulator => (
            vec![("x", Linear::new(1.0, 2.0, 0.0, 5.0)), ("form", form), ("temporary", temp)],
            Linear::new(2.0, 2.0, 1.0, 7.0),
        ),
        Which::Pip => (
            vec![
                ("x1", Linear::new(1.0, 2.0, 0.0, 0.0)),
                ("x2", Linear::new(1.0, 2.0, 0.0, 0.0)),
                ("form", form),
                ("temporary", temp),
            ],
            Linear::new(3.0, 4.0, 1.0, 0.0),
        ),
    };
    let registers: Vec<Register> = regs
        .into_iter()
        .map(|(name, formula)| {
            let qubits = formula.eval(ld, lld, n_bound);
            Register { name, formula, qubits, allocated: qubits.ceil() as u64 }
        })
        .collect();
    let register_sum_formula = registers.iter().fold(Linear::new(0.0, 0.0, 0.0, 0.0), |a, r| a.plus(&r.formula));
    ResourceReport {
        which,
        delta: delta.to_string(),
        log_delta: ld,
        log_ln_delta: lld,
        n_bound,
        total: total_formula.eval(ld, lld, n_bound),
        total_formula,
        register_sum: register_sum_formula.eval(ld, lld, n_bound),
        register_sum_formula,
        registers,
    }
}

/// `log₂ x`, exact for powers of two.
fn log2(x: &BigInt) -> f64 {
    let x = x.abs();
    let bits = x.bits();
    let shift = bits.saturating_sub(53);
    let top = (&x >> shift).to_f64().unwrap();
    top.log2() + shift as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regulator_2_10() {
        let d = BigInt::from(1024);
        let r = estimate_qubits(&d, Which::Regulator);
        assert_eq!(r.log_delta, 10.0);
        assert_eq!(r.registers[1].qubits, 12.0);
        assert_eq!(r.register_sum_formula, r.total_formula);
        let p = estimate_qubits(&d, Which::Pip);
        assert_eq!(p.register_sum_formula.constant - p.total_formula.constant, 2.0);
    }
}
