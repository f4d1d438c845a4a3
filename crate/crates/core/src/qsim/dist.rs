//! Output distributions of the two dual-lattice subroutines.
//!
//! The state before the Fourier transform is `(x, f(x))` with `x` uniform, so after measuring
//! the form register the first register is uniform on `{x : f(x) = g}`. Each such group is
//! transformed on its own; no state vector over all registers is built.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::distance::PrecisionBudget;
use crate::error::{Error, Result};
use crate::forms::PositiveReducedForm;

use super::params::{DualParams1D, DualParams2D};
use super::phase::{KahanSum, RunSum, Twiddle};
use super::table::{tabulate_pip, tabulate_reg, PipRows, RegTable};

/// Largest `q` for a dense 2-D transform (`8q × 8q` bins per group).
pub const DENSE_2D_CAP: u64 = 128;
/// Largest `q` for sampling the 2-D distribution exactly (one length-`8q` FFT per row).
pub const SAMPLE_2D_CAP: u64 = 1 << 13;
/// Largest `q` for the direct `O(p·N)` reference transform.
pub const NAIVE_CAP: u64 = 1 << 10;

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Probs {
    Dense(Vec<f64>),
    /// Flattened index `y` or `y₁·modulus + y₂`.
    Sparse(BTreeMap<u64, f64>),
}

/// Distribution of `y` conditioned on one measured form.
#[derive(Clone, Debug, Serialize)]
pub struct DualDistribution {
    pub dimension: u8,
    pub modulus: u64,
    pub q: u64,
    #[serde(serialize_with = "ser_form")]
    pub measured_form: PositiveReducedForm,
    /// `p`, the number of `x` with this form value.
    pub support_size: u64,
    /// Probability of measuring this form, `p/q` resp. `p/q²`.
    pub weight: f64,
    #[serde(skip)]
    pub probs: Probs,
}

fn ser_form<S: serde::Serializer>(f: &PositiveReducedForm, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_text())
}

impl DualDistribution {
    pub fn prob(&self, idx: u64) -> f64 {
        match &self.probs {
            Probs::Dense(v) => v[idx as usize],
            Probs::Sparse(m) => m.get(&idx).copied().unwrap_or(0.0),
        }
    }

    pub fn prob2(&self, y1: u64, y2: u64) -> f64 {
        self.prob(y1 * self.modulus + y2)
    }

    /// Compensated total.
    pub fn total(&self) -> f64 {
        match &self.probs {
            Probs::Dense(v) => v.iter().copied().collect::<KahanSum>().value(),
            Probs::Sparse(m) => m.values().copied().collect::<KahanSum>().value(),
        }
    }

    pub fn len(&self) -> u64 {
        match self.dimension {
            1 => self.modulus,
            _ => self.modulus * self.modulus,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = (u64, f64)> + '_> {
        match &self.probs {
            Probs::Dense(v) => Box::new(v.iter().enumerate().map(|(i, &p)| (i as u64, p))),
            Probs::Sparse(m) => Box::new(m.iter().map(|(&i, &p)| (i, p))),
        }
    }
}

/// Inverse-CDF draw from unnormalized cumulative weights.
fn draw(cdf: &[f64], rng: &mut impl Rng) -> u64 {
    let total = *cdf.last().unwrap();
    let u = rng.gen::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u64
}

fn cumulative(p: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = KahanSum::default();
    p.map(|v| {
        acc.add(v);
        acc.value()
    })
    .collect()
}

/// Cache of per-form CDFs, bounded by entry count.
struct CdfCache {
    cap: usize,
    map: Mutex<(HashMap<usize, Arc<Vec<f64>>>, Vec<usize>)>,
}

impl CdfCache {
    fn new(cap: usize) -> Self {
        CdfCache { cap, map: Mutex::new((HashMap::new(), Vec::new())) }
    }

    fn get_or(&self, k: usize, f: impl FnOnce() -> Vec<f64>) -> Arc<Vec<f64>> {
        if let Some(v) = self.map.lock().unwrap().0.get(&k) {
            return v.clone();
        }
        let v = Arc::new(f());
        let mut g = self.map.lock().unwrap();
        if g.1.len() >= self.cap {
            let old = g.1.remove(0);
            g.0.remove(&old);
        }
        g.0.insert(k, v.clone());
        g.1.push(k);
        v
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Sample1D {
    pub x: u64,
    pub form_id: usize,
    pub y: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Sample2D {
    pub x: (u64, u64),
    pub form_id: usize,
    pub y: (u64, u64),
}

/// Regulator-Dual: `x ∈ [0, q)`, form register `Reg(x)`, transform of length `4q`.
pub struct RegulatorDual {
    pub params: DualParams1D,
    pub table: RegTable,
    tw: Twiddle,
    cdfs: CdfCache,
}

impl RegulatorDual {
    pub fn new(params: &DualParams1D, budget: &PrecisionBudget, cycle_cap: u64) -> Result<Self> {
        let table = tabulate_reg(params, budget, cycle_cap)?;
        Ok(RegulatorDual { params: params.clone(), table, tw: Twiddle::new(params.modulus()), cdfs: CdfCache::new(4) })
    }

    pub fn modulus(&self) -> u64 {
        self.params.modulus()
    }

    /// `(form id, p)` for every form that occurs.
    pub fn measured_forms(&self) -> Vec<(usize, u64)> {
        self.table.occurring().into_iter().map(|j| (j, self.table.support_size(j))).collect()
    }

    fn wrap(&self, j: usize, probs: Probs) -> DualDistribution {
        let p = self.table.support_size(j);
        DualDistribution {
            dimension: 1,
            modulus: self.modulus(),
            q: self.params.q,
            measured_form: self.table.forms()[j].clone(),
            support_size: p,
            weight: p as f64 / self.params.q as f64,
            probs,
        }
    }

    /// `|FFT|²/(4qp)` of the zero-padded indicator of form `j`.
    pub fn conditional(&self, j: usize) -> DualDistribution {
        let n = self.modulus() as usize;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for r in self.table.runs_of(j) {
            for x in r.start..r.start + r.len as u64 {
                buf[x as usize].re = 1.0;
            }
        }
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let norm = 1.0 / (n as f64 * self.table.support_size(j) as f64);
        self.wrap(j, Probs::Dense(buf.iter().map(|c| c.norm_sqr() * norm).collect()))
    }

    /// Reference transform, one direct sum per bin.
    pub fn conditional_naive(&self, j: usize) -> Result<DualDistribution> {
        if self.params.q > NAIVE_CAP {
            return Err(Error::CapExceeded { what: "naive transform size q".into(), cap: NAIVE_CAP });
        }
        let xs: Vec<u64> = self.table.runs_of(j).flat_map(|r| r.start..r.start + r.len as u64).collect();
        let n = self.modulus();
        let norm = 1.0 / (n as f64 * xs.len() as f64);
        let probs = (0..n)
            .map(|y| {
                let (mut re, mut im) = (KahanSum::default(), KahanSum::default());
                for &x in &xs {
                    let w = self.tw.mul(x, y);
                    re.add(w.re);
                    im.add(w.im);
                }
                (re.value().powi(2) + im.value().powi(2)) * norm
            })
            .collect();
        Ok(self.wrap(j, Probs::Dense(probs)))
    }

    /// Unnormalized amplitude `Σ_{Reg(x)=g} e^{2πixy/4q}` from the run geometric sums.
    pub fn amplitude_sum(&self, j: usize, y: u64) -> Complex64 {
        let mut rs = RunSum::new(&self.tw, y, 64);
        let mut acc = Complex64::new(0.0, 0.0);
        for r in self.table.runs_of(j) {
            acc += rs.run(r.start, r.len as u64);
        }
        acc
    }

    pub fn prob(&self, j: usize, y: u64) -> f64 {
        let p = self.table.support_size(j) as f64;
        self.amplitude_sum(j, y).norm_sqr() / (self.modulus() as f64 * p)
    }

    /// Sparse distribution restricted to `ys`.
    pub fn restricted(&self, j: usize, ys: &[u64]) -> DualDistribution {
        self.wrap(j, Probs::Sparse(ys.iter().map(|&y| (y, self.prob(j, y))).collect()))
    }

    /// Every conditional distribution in turn.
    pub fn full(&self, mut f: impl FnMut(DualDistribution)) {
        for (j, _) in self.measured_forms() {
            f(self.conditional(j));
        }
    }

    /// `Σ_g (p_g/q) Pr(y | g)`.
    pub fn mixture(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.modulus() as usize];
        self.full(|d| {
            for (i, p) in d.iter() {
                out[i as usize] += d.weight * p;
            }
        });
        out
    }

    /// Uniform `x`, then `Reg(x)`, then `y` from that group's distribution.
    pub fn sample(&self, rng: &mut impl Rng) -> Sample1D {
        let x = rng.gen_range(0..self.params.q);
        let j = self.table.form_id(x).unwrap();
        let cdf = self.cdfs.get_or(j, || match self.conditional(j).probs {
            Probs::Dense(v) => cumulative(v.into_iter()),
            Probs::Sparse(_) => unreachable!(),
        });
        Sample1D { x, form_id: j, y: draw(&cdf, rng) }
    }
}

/// AlgPIP-Dual: `(x₁, x₂) ∈ [0, q)²`, form register `PIP(x₁, x₂)`, transform of size `8q × 8q`.
pub struct PipDual {
    pub params: DualParams2D,
    pub rows: PipRows,
    tw: Twiddle,
    cdfs: CdfCache,
}

impl PipDual {
    pub fn new(params: &DualParams2D, budget: &PrecisionBudget, cycle_cap: u64) -> Result<Self> {
        let rows = tabulate_pip(params, budget, cycle_cap)?;
        Ok(PipDual { params: params.clone(), rows, tw: Twiddle::new(params.modulus()), cdfs: CdfCache::new(4) })
    }

    pub fn modulus(&self) -> u64 {
        self.params.modulus()
    }

    /// `p` for form `id`.
    pub fn support_size(&self, id: usize) -> u64 {
        let mut p = 0;
        for x1 in 0..self.params.q {
            self.rows.for_each_run_of(id, x1, |_, l, _| p += l);
        }
        p
    }

    /// `(form id, p)` for every form that occurs; walks the whole table.
    pub fn measured_forms(&self) -> Vec<(usize, u64)> {
        let mut counts = vec![0u64; self.rows.form_count()];
        let mut m = super::table::Margin::default();
        for x1 in 0..self.params.q {
            self.rows.for_each_run_in_row(x1, &mut m, |id, _, l, _| counts[id] += l);
        }
        counts.into_iter().enumerate().filter(|&(_, c)| c > 0).collect()
    }

    fn wrap(&self, id: usize, p: u64, probs: Probs) -> DualDistribution {
        let q = self.params.q as f64;
        DualDistribution {
            dimension: 2,
            modulus: self.modulus(),
            q: self.params.q,
            measured_form: self.rows.form(id).clone(),
            support_size: p,
            weight: p as f64 / (q * q),
            probs,
        }
    }

    /// Dense `|FFT₂|²/(64q²p)` of the zero-padded indicator.
    pub fn conditional(&self, id: usize) -> Result<DualDistribution> {
        if self.params.q > DENSE_2D_CAP {
            return Err(Error::CapExceeded { what: "dense 2-D transform side q".into(), cap: DENSE_2D_CAP });
        }
        let n = self.modulus() as usize;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let mut grid = vec![Complex64::new(0.0, 0.0); n * n];
        let mut p = 0;
        for x1 in 0..self.params.q as usize {
            let row = &mut grid[x1 * n..(x1 + 1) * n];
            self.rows.for_each_run_of(id, x1 as u64, |s, l, _| {
                p += l;
                for x2 in s..s + l {
                    row[x2 as usize].re = 1.0;
                }
            });
            fft.process(row);
        }
        // columns: transpose, transform, read back transposed
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        let norm = 1.0 / ((n * n) as f64 * p as f64);
        let mut probs = vec![0.0; n * n];
        for y2 in 0..n {
            for x1 in 0..n {
                col[x1] = grid[x1 * n + y2];
            }
            fft.process(&mut col);
            for y1 in 0..n {
                probs[y1 * n + y2] = col[y1].norm_sqr() * norm;
            }
        }
        Ok(self.wrap(id, p, Probs::Dense(probs)))
    }

    /// Reference 2-D transform by direct sums.
    pub fn conditional_naive(&self, id: usize) -> Result<DualDistribution> {
        if self.params.q > 16 {
            return Err(Error::CapExceeded { what: "naive 2-D transform side q".into(), cap: 16 });
        }
        let mut xs = Vec::new();
        for x1 in 0..self.params.q {
            self.rows.for_each_run_of(id, x1, |s, l, _| xs.extend((s..s + l).map(|x2| (x1, x2))));
        }
        let n = self.modulus();
        let norm = 1.0 / ((n * n) as f64 * xs.len() as f64);
        let mut probs = Vec::with_capacity((n * n) as usize);
        for y1 in 0..n {
            for y2 in 0..n {
                let (mut re, mut im) = (KahanSum::default(), KahanSum::default());
                for &(x1, x2) in &xs {
                    let r = ((x1 as u128 * y1 as u128 + x2 as u128 * y2 as u128) % n as u128) as u64;
                    let w = self.tw.get(r);
                    re.add(w.re);
                    im.add(w.im);
                }
                probs.push((re.value().powi(2) + im.value().powi(2)) * norm);
            }
        }
        Ok(self.wrap(id, xs.len() as u64, Probs::Dense(probs)))
    }

    /// `B_{x₁}(y₂) = Σ_{x₂ : PIP(x₁,x₂)=g} e^{2πi x₂y₂/8q}` for every row, and `p`.
    pub fn row_sums(&self, id: usize, y2: u64) -> (Vec<Complex64>, u64) {
        let mut rs = RunSum::new(&self.tw, y2, 64);
        let mut p = 0;
        let out = (0..self.params.q)
            .map(|x1| {
                let mut acc = Complex64::new(0.0, 0.0);
                self.rows.for_each_run_of(id, x1, |s, l, _| {
                    p += l;
                    acc += rs.run(s, l);
                });
                acc
            })
            .collect();
        (out, p)
    }

    /// Exact probabilities at the listed `(y₁, y₂)`, grouped by `y₂`.
    pub fn restricted(&self, id: usize, ys: &[(u64, u64)]) -> DualDistribution {
        let n = self.modulus();
        let mut by_y2: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for &(y1, y2) in ys {
            by_y2.entry(y2).or_default().push(y1);
        }
        // one pass over the rows for all requested y₂
        let groups: Vec<(u64, Vec<u64>)> = by_y2.into_iter().collect();
        let mut sums: Vec<RunSum> = groups.iter().map(|(y2, _)| RunSum::new(&self.tw, *y2, 64)).collect();
        let mut accs: Vec<Vec<Complex64>> = groups.iter().map(|(_, y1s)| vec![Complex64::new(0.0, 0.0); y1s.len()]).collect();
        let mut b = vec![Complex64::new(0.0, 0.0); groups.len()];
        let mut p = 0;
        for x1 in 0..self.params.q {
            b.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            self.rows.for_each_run_of(id, x1, |s, l, _| {
                p += l;
                for (v, rs) in b.iter_mut().zip(sums.iter_mut()) {
                    *v += rs.run(s, l);
                }
            });
            for ((v, (_, y1s)), acc) in b.iter().zip(&groups).zip(accs.iter_mut()) {
                if v.re != 0.0 || v.im != 0.0 {
                    for (a, &y1) in acc.iter_mut().zip(y1s) {
                        *a += self.tw.mul(x1, y1) * v;
                    }
                }
            }
        }
        let mut probs = BTreeMap::new();
        for ((y2, y1s), acc) in groups.iter().zip(&accs) {
            for (&y1, a) in y1s.iter().zip(acc) {
                probs.insert(y1 * n + y2, a.norm_sqr());
            }
        }
        let norm = if p == 0 { 0.0 } else { 1.0 / ((n * n) as f64 * p as f64) };
        for v in probs.values_mut() {
            *v *= norm;
        }
        self.wrap(id, p, Probs::Sparse(probs))
    }

    /// Marginal of `y₂`: `Σ_{x₁} |B_{x₁}(y₂)|² / (8qp)`, by Parseval over `y₁`.
    pub fn marginal_y2(&self, id: usize) -> Result<Vec<f64>> {
        if self.params.q > SAMPLE_2D_CAP {
            return Err(Error::CapExceeded { what: "2-D sampling side q".into(), cap: SAMPLE_2D_CAP });
        }
        let n = self.modulus() as usize;
        let fft = FftPlanner::new().plan_fft_forward(n);
        let mut acc = vec![0.0; n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut p = 0;
        for x1 in 0..self.params.q {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            let mut any = false;
            self.rows.for_each_run_of(id, x1, |s, l, _| {
                any = true;
                p += l;
                for x2 in s..s + l {
                    buf[x2 as usize].re = 1.0;
                }
            });
            if !any {
                continue;
            }
            fft.process(&mut buf);
            for (a, c) in acc.iter_mut().zip(&buf) {
                *a += c.norm_sqr();
            }
        }
        let norm = 1.0 / (n as f64 * p as f64);
        Ok(acc.into_iter().map(|v| v * norm).collect())
    }

    /// `Pr(y₁ | y₂, g)` over all `y₁`.
    pub fn conditional_y1(&self, id: usize, y2: u64) -> Vec<f64> {
        let n = self.modulus() as usize;
        let (b, _) = self.row_sums(id, y2);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..b.len()].copy_from_slice(&b);
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let w: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
        let t: f64 = w.iter().copied().collect::<KahanSum>().value();
        w.into_iter().map(|v| v / t).collect()
    }

    /// Uniform `(x₁, x₂)`, the measured form, then `y₂` from its marginal and `y₁` given `y₂`.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<Sample2D> {
        let x1 = rng.gen_range(0..self.params.q);
        let x2 = rng.gen_range(0..self.params.q);
        let id = self.rows.get(x1, x2);
        if self.params.q > SAMPLE_2D_CAP {
            return Err(Error::CapExceeded { what: "2-D sampling side q".into(), cap: SAMPLE_2D_CAP });
        }
        let cdf = self.cdfs.get_or(id, || cumulative(self.marginal_y2(id).expect("within cap").into_iter()));
        let y2 = draw(&cdf, rng);
        let c = cumulative(self.conditional_y1(id, y2).into_iter());
        let y1 = draw(&c, rng);
        Ok(Sample2D { x: (x1, x2), form_id: id, y: (y1, y2) })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Sample,
    Full,
}

#[derive(Debug)]
pub enum RegulatorDualOutput {
    Full(Vec<DualDistribution>),
    Sample(Sample1D),
}

#[derive(Debug)]
pub enum PipDualOutput {
    Full(Vec<DualDistribution>),
    Sample(Sample2D),
}

/// Regulator-Dual in either mode; sampling is seeded.
pub fn simulate_regulator_dual(params: &DualParams1D, budget: &PrecisionBudget, mode: SimMode, seed: u64, cycle_cap: u64) -> Result<RegulatorDualOutput> {
    use rand::SeedableRng;
    let sim = RegulatorDual::new(params, budget, cycle_cap)?;
    Ok(match mode {
        SimMode::Full => {
            let mut v = Vec::new();
            sim.full(|d| v.push(d));
            RegulatorDualOutput::Full(v)
        }
        SimMode::Sample => RegulatorDualOutput::Sample(sim.sample(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))),
    })
}

/// AlgPIP-Dual in either mode; full mode is limited to `q ≤ DENSE_2D_CAP`.
pub fn simulate_pip_dual(params: &DualParams2D, budget: &PrecisionBudget, mode: SimMode, seed: u64, cycle_cap: u64) -> Result<PipDualOutput> {
    use rand::SeedableRng;
    let sim = PipDual::new(params, budget, cycle_cap)?;
    Ok(match mode {
        SimMode::Full => {
            let mut v = Vec::new();
            for (id, _) in sim.measured_forms() {
                v.push(sim.conditional(id)?);
            }
            PipDualOutput::Full(v)
        }
        SimMode::Sample => PipDualOutput::Sample(sim.sample(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))?),
    })
}
