//! Roots of unity with exact integer phase reduction.

use num_complex::Complex64;

/// `e^{2πi r/N}` for `0 ≤ r < N` from two small tables, `N` a power of two or not.
#[derive(Clone, Debug)]
pub struct Twiddle {
    n: u64,
    shift: u32,
    hi: Vec<Complex64>,
    lo: Vec<Complex64>,
}

fn root(r: u64, n: u64) -> Complex64 {
    let t = std::f64::consts::TAU * (r as f64) / (n as f64);
    Complex64::new(t.cos(), t.sin())
}

impl Twiddle {
    pub fn new(n: u64) -> Self {
        assert!(n >= 1);
        let bits = 64 - (n - 1).leading_zeros().min(63);
        let shift = bits.div_ceil(2);
        let lo = (0..(1u64 << shift)).map(|r| root(r, n)).collect();
        let hi = (0..=((n - 1) >> shift)).map(|r| root(r << shift, n)).collect();
        Twiddle { n, shift, hi, lo }
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn get(&self, r: u64) -> Complex64 {
        debug_assert!(r < self.n);
        self.hi[(r >> self.shift) as usize] * self.lo[(r & ((1 << self.shift) - 1)) as usize]
    }

    /// `e^{2πi a·b/N}` with the product reduced exactly.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> Complex64 {
        self.get(((a as u128 * b as u128) % self.n as u128) as u64)
    }
}

/// `Σ_{x=start}^{start+len−1} e^{2πi x y/N}` via the run's geometric sum.
pub struct RunSum<'a> {
    tw: &'a Twiddle,
    y: u64,
    /// `Σ_{x<L} w^{xy}` by run length `L`.
    by_len: Vec<Complex64>,
}

impl<'a> RunSum<'a> {
    pub fn new(tw: &'a Twiddle, y: u64, max_len: u64) -> Self {
        let y = y % tw.modulus();
        let mut rs = RunSum { tw, y, by_len: Vec::with_capacity(max_len as usize + 1) };
        rs.extend(max_len);
        rs
    }

    #[inline]
    pub fn run(&mut self, start: u64, len: u64) -> Complex64 {
        if len as usize >= self.by_len.len() {
            self.extend(len);
        }
        self.tw.mul(start, self.y) * self.by_len[len as usize]
    }

    /// `sin(πLy/N)/sin(πy/N) · e^{πi(L−1)y/N}`, which avoids the cancellation in `1 − w^y`.
    fn extend(&mut self, len: u64) {
        let n = self.tw.modulus() as u128;
        let y = self.y as u128;
        let half_sin = |r: u128| (std::f64::consts::PI * ((r % (2 * n)) as f64) / n as f64).sin();
        let den = half_sin(y);
        for l in self.by_len.len() as u128..=len as u128 {
            let v = if self.y == 0 {
                Complex64::new(l as f64, 0.0)
            } else if l == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                let mag = half_sin(l * y) / den;
                mag * root(((l - 1) * y % (2 * n)) as u64, 2 * n as u64)
            };
            self.by_len.push(v);
        }
    }
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::default();
        for v in iter {
            k.add(v);
        }
        k
    }
}
