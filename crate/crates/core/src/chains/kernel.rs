use serde::{Deserialize, Serialize};

use super::Family;
use crate::error::{invalid, Result};
use crate::primitives::GateMeasure;
use crate::{Real, Scalar};

/// Descriptive header attached to every kernel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelMeta {
    pub family: Family,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    /// Ground-set size for coloring chains.
    #[serde(rename = "N", skip_serializing_if = "Option::is_none", default)]
    pub colors: Option<u32>,
    /// Bit width for circuit chains.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<GateMeasure>,
}

impl KernelMeta {
    pub fn new(family: Family) -> Self {
        Self { family, k: None, colors: None, n: None, mode: None }
    }

    /// Short identifier such as `ucc-k2-N6` used in reports.
    pub fn id(&self) -> String {
        let mut s = self.family.as_str().to_string();
        if let Some(k) = self.k {
            s.push_str(&format!("-k{k}"));
        }
        if let Some(c) = self.colors {
            s.push_str(&format!("-N{c}"));
        }
        if let Some(n) = self.n {
            s.push_str(&format!("-n{n}"));
        }
        if let Some(m) = self.mode {
            s.push_str(&format!("-{}", m.as_str()));
        }
        s
    }
}

/// Row-sparse transition matrix with its stationary distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T> {
    meta: KernelMeta,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    stationary: Vec<T>,
}

impl<T: Scalar> Kernel<T> {
    /// Assembles a kernel from per-row entries. Duplicate columns are summed,
    /// zero entries dropped.
    pub fn from_rows(meta: KernelMeta, rows: Vec<Vec<(usize, T)>>, stationary: Vec<T>) -> Result<Self> {
        let size = rows.len();
        if stationary.len() != size {
            return Err(invalid!("stationary vector has {} entries for {size} states", stationary.len()));
        }
        let mut row_ptr = Vec::with_capacity(size + 1);
        let mut cols = Vec::new();
        let mut vals: Vec<T> = Vec::new();
        row_ptr.push(0);
        for (x, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|(c, _)| *c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= size {
                    return Err(invalid!("row {x} has column {c} outside 0..{size}"));
                }
                if v < T::zero() {
                    return Err(invalid!("negative transition probability in row {x}"));
                }
                if last == Some(c) {
                    let end = vals.len() - 1;
                    vals[end] = vals[end].clone() + v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let mut kernel = Self { meta, row_ptr, cols, vals, stationary };
        kernel.drop_zeros();
        Ok(kernel)
    }

    /// Rows given as integer counts over a per-row total.
    pub fn from_counts(
        meta: KernelMeta,
        rows: Vec<Vec<(usize, u64)>>,
        totals: &[u64],
        stationary: Vec<T>,
    ) -> Result<Self> {
        if totals.len() != rows.len() {
            return Err(invalid!("{} totals for {} rows", totals.len(), rows.len()));
        }
        let rows = rows
            .into_iter()
            .zip(totals)
            .map(|(row, &tot)| {
                let denom = T::from_count(tot);
                row.into_iter().map(|(c, n)| (c, T::from_count(n) / denom.clone())).collect()
            })
            .collect();
        Self::from_rows(meta, rows, stationary)
    }

    fn drop_zeros(&mut self) {
        if self.vals.iter().all(|v| *v != T::zero()) {
            return;
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for x in 0..self.size() {
            for k in self.row_ptr[x]..self.row_ptr[x + 1] {
                if self.vals[k] != T::zero() {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k].clone());
                }
            }
            row_ptr.push(cols.len());
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn uniform_stationary(size: usize) -> Vec<T> {
        let p = T::ratio(1, size as u64);
        vec![p; size]
    }

    pub fn meta(&self) -> &KernelMeta {
        &self.meta
    }

    pub fn size(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn stationary(&self) -> &[T] {
        &self.stationary
    }

    pub fn row(&self, x: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[x]..self.row_ptr[x + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Iterates `(row, col, probability)` over stored entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        (0..self.size()).flat_map(move |x| {
            let (c, v) = self.row(x);
            c.iter().zip(v).map(move |(&y, p)| (x, y, p))
        })
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        let (c, v) = self.row(x);
        match c.binary_search(&y) {
            Ok(pos) => v[pos].clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn with_stationary(mut self, stationary: Vec<T>) -> Result<Self> {
        if stationary.len() != self.size() {
            return Err(invalid!("stationary vector has {} entries for {} states", stationary.len(), self.size()));
        }
        self.stationary = stationary;
        Ok(self)
    }

    pub fn with_meta(mut self, meta: KernelMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Converts every probability with `f`.
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Kernel<U> {
        Kernel {
            meta: self.meta.clone(),
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(&f).collect(),
            stationary: self.stationary.iter().map(&f).collect(),
        }
    }

    pub fn to_f64(&self) -> Kernel<f64> {
        self.map(|v| v.to_f64_lossy())
    }

    /// Largest |row sum − 1|.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.size())
            .map(|x| {
                let s = self.row(x).1.iter().fold(T::zero(), |a, v| a + v.clone());
                (s.to_f64_lossy() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// True when `P(x,y) == P(y,x)` holds exactly for all pairs.
    pub fn is_symmetric(&self) -> bool {
        self.entries().all(|(x, y, p)| self.get(y, x) == *p)
    }

    pub fn self_loop(&self, x: usize) -> T {
        self.get(x, x)
    }

    /// Dense row-major copy, for small kernels.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.size();
        let mut out = vec![vec![T::zero(); n]; n];
        for (x, y, p) in self.entries() {
            out[x][y] = p.clone();
        }
        out
    }
}

impl<T: Real> Kernel<T> {
    /// Row vector times kernel.
    pub fn left_apply(&self, p: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        for (x, &px) in p.iter().enumerate().take(self.size()) {
            if px == T::zero() {
                continue;
            }
            let (c, v) = self.row(x);
            for (&y, &pxy) in c.iter().zip(v) {
                out[y] = out[y] + px * pxy;
            }
        }
    }

    /// Stationary distribution by lazy power iteration from uniform.
    pub fn power_iteration_stationary(&self, tol: f64, max_iters: usize) -> Result<Vec<T>> {
        let n = self.size();
        let half = T::lit(0.5);
        let mut p = vec![T::ratio(1, n as u64); n];
        let mut next = vec![T::zero(); n];
        for _ in 0..max_iters {
            self.left_apply(&p, &mut next);
            let mut delta = T::zero();
            let mut total = T::zero();
            for (a, b) in next.iter_mut().zip(&p) {
                *a = half * (*a + *b);
                delta = delta + (*a - *b).abs();
                total = total + *a;
            }
            next.iter_mut().for_each(|v| *v = *v / total);
            std::mem::swap(&mut p, &mut next);
            if delta.to_f64_lossy() < tol {
                return Ok(p);
            }
        }
        Err(crate::Error::Invariant(format!("power iteration did not converge in {max_iters} iterations")))
    }
}
