use serde::Serialize;

use crate::sim::GenerationSummary;

/// Running count, sum and sum of squares.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Unbiased sample variance; `NaN` with fewer than two values.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Sums needed for the ratio estimator `sum N / sum D` and its
/// delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RatioSums {
    pub count: u64,
    pub n: f64,
    pub d: f64,
    pub nn: f64,
    pub dd: f64,
    pub nd: f64,
}

impl RatioSums {
    #[inline]
    pub fn push(&mut self, n: f64, d: f64) {
        self.count += 1;
        self.n += n;
        self.d += d;
        self.nn += n * n;
        self.dd += d * d;
        self.nd += n * d;
    }

    pub fn merge(&mut self, o: &RatioSums) {
        self.count += o.count;
        self.n += o.n;
        self.d += o.d;
        self.nn += o.nn;
        self.dd += o.dd;
        self.nd += o.nd;
    }

    /// `(ratio, standard error)`, or `None` if the denominator sums to 0.
    pub fn ratio(&self) -> Option<(f64, f64)> {
        if !(self.d > 0.0) {
            return None;
        }
        let r = self.n / self.d;
        let m = self.count as f64;
        if self.count < 2 {
            return Some((r, f64::NAN));
        }
        let resid = (self.nn - 2.0 * r * self.nd + r * r * self.dd).max(0.0);
        let s2 = resid / (m - 1.0);
        let dbar = self.d / m;
        Some((r, (s2 / m).sqrt() / dbar))
    }
}

/// Which contaminated cells an `F_k` statistic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CellSet {
    A,
    B,
    All,
}

impl CellSet {
    pub const ALL: [CellSet; 3] = [CellSet::A, CellSet::B, CellSet::All];

    pub fn label(self) -> &'static str {
        match self {
            CellSet::A => "A",
            CellSet::B => "B",
            CellSet::All => "all",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Normalizing constants of the martingale tracks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scales {
    pub gamma: f64,
    pub nu: f64,
    pub mu_b: f64,
}

/// Everything accumulated for one generation over accepted replicates.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct GenerationAccumulator {
    pub z_a: Moments,
    pub z_b: Moments,
    pub g_star_a: Moments,
    pub g_star_b: Moments,
    pub a_cells: Moments,
    pub w: Moments,
    pub la: Moments,
    pub l: Moments,
    pub wb: Moments,
    /// Per-replicate `#G*_n(A) / #G*_n`, over replicates with `#G*_n > 0`.
    pub prop_a: Moments,
    /// `[cell set][k - 1]`, pointwise and cumulative (`Z <= k`).
    pub fk: [Vec<RatioSums>; 3],
    pub fk_cum: [Vec<RatioSums>; 3],
}

impl GenerationAccumulator {
    pub fn new(k_top: usize) -> Self {
        Self {
            fk: std::array::from_fn(|_| vec![RatioSums::default(); k_top]),
            fk_cum: std::array::from_fn(|_| vec![RatioSums::default(); k_top]),
            ..Self::default()
        }
    }

    pub fn push(&mut self, s: &GenerationSummary, scales: &Scales) {
        let n = s.n as i32;
        let z_a = s.z_a as f64;
        let g_a = s.g_star_a as f64;
        self.z_a.push(z_a);
        self.g_star_a.push(g_a);
        self.a_cells.push(s.a_cells() as f64);
        if scales.gamma > 0.0 {
            self.w.push(z_a / scales.gamma.powi(n));
        }
        self.la.push(g_a / scales.nu.powi(n));
        if let Some(z_b) = s.z_b {
            self.z_b.push(z_b as f64);
            if scales.mu_b > 0.0 {
                self.wb.push(z_b as f64 / scales.mu_b.powi(n));
            }
        }
        self.push_fk(CellSet::A, &s.count_a_by_k, g_a);
        if let Some(g_b) = s.g_star_b {
            let g_b = g_b as f64;
            let g = g_a + g_b;
            self.g_star_b.push(g_b);
            self.l.push(g / 2f64.powi(n));
            if g > 0.0 {
                self.prop_a.push(g_a / g);
            }
            self.push_fk(CellSet::B, &s.count_b_by_k, g_b);
            let both: Vec<u64> = s
                .count_a_by_k
                .iter()
                .zip(&s.count_b_by_k)
                .map(|(a, b)| a + b)
                .collect();
            self.push_fk(CellSet::All, &both, g);
        }
    }

    fn push_fk(&mut self, set: CellSet, counts: &[u64], denom: f64) {
        let mut cum = 0u64;
        let i = set.index();
        for (j, &c) in counts.iter().enumerate() {
            cum += c;
            self.fk[i][j].push(c as f64, denom);
            self.fk_cum[i][j].push(cum as f64, denom);
        }
    }

    pub fn merge(&mut self, o: &GenerationAccumulator) {
        self.z_a.merge(&o.z_a);
        self.z_b.merge(&o.z_b);
        self.g_star_a.merge(&o.g_star_a);
        self.g_star_b.merge(&o.g_star_b);
        self.a_cells.merge(&o.a_cells);
        self.w.merge(&o.w);
        self.la.merge(&o.la);
        self.l.merge(&o.l);
        self.wb.merge(&o.wb);
        self.prop_a.merge(&o.prop_a);
        for i in 0..3 {
            for (a, b) in self.fk[i].iter_mut().zip(&o.fk[i]) {
                a.merge(b);
            }
            for (a, b) in self.fk_cum[i].iter_mut().zip(&o.fk_cum[i]) {
                a.merge(b);
            }
        }
    }

    pub fn fk(&self, set: CellSet) -> &[RatioSums] {
        &self.fk[set.index()]
    }

    pub fn fk_cumulative(&self, set: CellSet) -> &[RatioSums] {
        &self.fk_cum[set.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments_of_small_sample() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert_abs_diff_eq!(m.variance(), 5.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn ratio_with_constant_ratio_has_zero_error() {
        let mut r = RatioSums::default();
        for d in [1.0, 2.0, 5.0] {
            r.push(0.5 * d, d);
        }
        let (est, se) = r.ratio().unwrap();
        assert_eq!(est, 0.5);
        assert_abs_diff_eq!(se, 0.0, epsilon = 1e-12);
        assert!(RatioSums::default().ratio().is_none());
    }

    #[test]
    fn merge_equals_sequential_push() {
        let mut a = Moments::default();
        let mut b = Moments::default();
        let mut all = Moments::default();
        for x in 0..10 {
            let x = x as f64;
            if x < 5.0 {
                a.push(x)
            } else {
                b.push(x)
            }
            all.push(x);
        }
        a.merge(&b);
        assert_eq!(a, all);
    }
}
