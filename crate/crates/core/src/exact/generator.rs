use rayon::prelude::*;

use crate::dynamics::RateFamily;
use crate::error::{Error, Result};
use crate::exact::Measure;
use crate::model::{pattern_iter, StateSpace};

/// Sparse generator on the enumerated state space: nonnegative off-diagonal
/// entries in CSR form, diagonal equal to the negative row sum.
#[derive(Debug, Clone)]
pub struct Generator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl Generator {
    /// Accumulates `c_region(eta, xi) * lambda(xi)` into the entry
    /// `eta -> xi eta_off`; mass on the current pattern contributes nothing.
    pub fn build(rates: &RateFamily, space: &StateSpace) -> Result<Self> {
        let n = space.count() as usize;
        let q = space.q();
        let n_regions = rates.regions().len();
        let rows: Vec<Vec<(u32, f64)>> = (0..n as u64)
            .into_par_iter()
            .map(|idx| {
                let eta = space.config_of(idx);
                let mut row: Vec<(u32, f64)> = Vec::new();
                for ri in 0..n_regions {
                    let sites = &rates.regions()[ri].sites;
                    let w = rates.lambda_weight(ri);
                    let current = eta.restrict(sites);
                    for xi in pattern_iter(q, sites.len()) {
                        if xi == current {
                            continue;
                        }
                        let rate = rates.density(&eta, ri, &xi) * w;
                        if rate > 0.0 {
                            let target = space.with_patch(idx, sites, &xi);
                            row.push((target as u32, rate));
                        }
                    }
                }
                row.sort_unstable_by_key(|e| e.0);
                // merge duplicate targets from different regions
                let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
                for (c, v) in row {
                    match merged.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => merged.push((c, v)),
                    }
                }
                merged
            })
            .collect();

        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0usize);
        let mut nnz = 0usize;
        for r in &rows {
            nnz += r.len();
            row_ptr.push(nnz);
        }
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        let mut diag = Vec::with_capacity(n);
        for r in rows {
            let mut sum = 0.0;
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
                sum += v;
            }
            diag.push(-sum);
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            vals,
            diag,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            diag: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of one row as `(col, val)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.cols[lo..hi]
            .iter()
            .copied()
            .zip(self.vals[lo..hi].iter().copied())
    }

    /// Off-diagonal entry `(i, j)`, zero when absent.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&(j as u32)) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    /// `out = L f`.
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        debug_assert_eq!(f.len(), self.n);
        for i in 0..self.n {
            let mut acc = self.diag[i] * f[i];
            for (c, v) in self.row(i) {
                acc += v * f[c as usize];
            }
            out[i] = acc;
        }
    }

    pub fn apply_vec(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply(f, &mut out);
        out
    }

    /// `out = L^T v`, i.e. the row-vector product `v^T L`.
    pub fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        for (o, (d, x)) in out.iter_mut().zip(self.diag.iter().zip(v)) {
            *o = d * x;
        }
        for i in 0..self.n {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for (c, val) in self.row(i) {
                out[c as usize] += val * vi;
            }
        }
    }

    /// Largest exit rate `max_i |diag_i|`, the uniformization rate.
    pub fn max_exit_rate(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |m, d| m.max(-d))
    }

    /// Worst row-sum residual; zero by construction, recomputed for audits.
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.n)
            .map(|i| (self.diag[i] + self.row(i).map(|(_, v)| v).sum::<f64>()).abs())
            .fold(0.0f64, f64::max)
    }

    /// Measure-weighted adjoint `L*(x, y) = mu(y) L(y, x) / mu(x)`, with the
    /// diagonal recomputed so row sums vanish exactly.
    pub fn adjoint(&self, mu: &Measure) -> Result<Self> {
        mu.check_strictly_positive()?;
        if mu.len() != self.n {
            return Err(Error::Invalid(format!(
                "measure has {} entries for a {}-state generator",
                mu.len(),
                self.n
            )));
        }
        let mut count = vec![0usize; self.n];
        for i in 0..self.n {
            for (c, _) in self.row(i) {
                count[c as usize] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        row_ptr.push(0);
        let mut acc = 0;
        for c in &count {
            acc += c;
            row_ptr.push(acc);
        }
        let mut cols = vec![0u32; acc];
        let mut vals = vec![0.0f64; acc];
        let mut cursor = row_ptr.clone();
        for y in 0..self.n {
            let my = mu.get(y as u64);
            for (x, v) in self.row(y) {
                let x = x as usize;
                let slot = cursor[x];
                cols[slot] = y as u32;
                vals[slot] = my * v / mu.get(x as u64);
                cursor[x] += 1;
            }
        }
        // rows were filled in increasing y, so columns are already sorted
        let mut diag = vec![0.0; self.n];
        for x in 0..self.n {
            let lo = row_ptr[x];
            let hi = row_ptr[x + 1];
            diag[x] = -vals[lo..hi].iter().sum::<f64>();
        }
        Ok(Self {
            n: self.n,
            row_ptr,
            cols,
            vals,
            diag,
        })
    }

    /// Transposed copy (used by power iteration).
    pub fn transpose(&self) -> Self {
        let uniform = Measure::uniform(self.n);
        let mut t = self.adjoint(&uniform).expect("uniform measure is positive");
        // the adjoint against the uniform measure transposes the off-diagonal
        // part but recomputes diagonals; restore the original ones
        t.diag.copy_from_slice(&self.diag);
        t
    }

    /// Largest absolute entry difference between two generators on the union
    /// sparsity pattern, diagonals included.
    pub fn max_abs_entry_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            worst = worst.max((self.diag[i] - other.diag[i]).abs());
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((ca, va)), Some((cb, vb))) => {
                        if ca == cb {
                            worst = worst.max((va - vb).abs());
                            a.next();
                            b.next();
                        } else if ca < cb {
                            worst = worst.max(va.abs());
                            a.next();
                        } else {
                            worst = worst.max(vb.abs());
                            b.next();
                        }
                    }
                    (Some((_, va)), None) => {
                        worst = worst.max(va.abs());
                        a.next();
                    }
                    (None, Some((_, vb))) => {
                        worst = worst.max(vb.abs());
                        b.next();
                    }
                    (None, None) => break,
                }
            }
        }
        worst
    }

    /// Coordinate-format entries including diagonal, for export.
    pub fn coo_entries(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let d = std::iter::once((i as u64, i as u64, self.diag[i]));
            let off = self.row(i).map(move |(c, v)| (i as u64, u64::from(c), v));
            d.chain(off)
        })
    }
}
