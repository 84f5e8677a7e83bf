//! Linear algebra over Z/p^N in Howell normal form.
//!
//! Row-echelon form alone does not decide membership over Z/p^N (the ring
//! has zero divisors); the Howell property — every span element with leading
//! zeros up to column j is a combination of basis rows with pivots past j —
//! restores exact membership tests and canonical coset representatives.
//! Pivots are normalized to powers of p.

use crate::padic::{mulm, subm};
use crate::Error;

#[derive(Debug, Clone, Copy)]
pub struct ZpnRing {
    pub p: u64,
    pub n: u32,
    pub modulus: u64,
}

impl ZpnRing {
    pub fn new(p: u64, n: u32) -> ZpnRing {
        let modulus = p.pow(n);
        ZpnRing { p, n, modulus }
    }

    pub fn vp(&self, x: u64) -> u32 {
        if x == 0 {
            return self.n;
        }
        let mut v = 0;
        let mut x = x;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        v
    }

    fn unit_inv(&self, x: u64) -> u64 {
        crate::padic::inv_mod_pn(x, self.p, self.modulus)
    }

    fn p_pow(&self, k: u32) -> u64 {
        self.p.pow(k)
    }
}

/// Dense row-major matrix over Z/p^N.
#[derive(Debug, Clone)]
pub struct ZpnMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl ZpnMatrix {
    pub fn new(rows: usize, cols: usize) -> ZpnMatrix {
        ZpnMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<u64>>) -> ZpnMatrix {
        let mut m = ZpnMatrix::new(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols);
            m.data[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        m
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Canonical Howell basis of a row span, with an optional expression of each
/// basis row in terms of the original generators.
#[derive(Debug, Clone)]
pub struct HowellBasis {
    pub cols: usize,
    pub rows: Vec<Vec<u64>>,
    /// (pivot column, valuation a) per row; the pivot entry is p^a.
    pub pivots: Vec<(usize, u32)>,
    pub ring: ZpnRing,
    transform: Option<Vec<Vec<u64>>>,
    n_gens: usize,
}

struct WorkRow {
    v: Vec<u64>,
    expr: Option<Vec<u64>>,
}

fn scale_add(ring: &ZpnRing, dst: &mut [u64], src: &[u64], c: u64) {
    // dst += c * src
    if c == 0 {
        return;
    }
    let m = ring.modulus;
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d = (*d + mulm(c, s, m)) % m;
        }
    }
}

fn scale_sub(ring: &ZpnRing, dst: &mut [u64], src: &[u64], c: u64) {
    // dst -= c * src
    if c == 0 {
        return;
    }
    let m = ring.modulus;
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d = subm(*d, mulm(c, s, m), m);
        }
    }
}

fn scale_row(ring: &ZpnRing, dst: &mut [u64], c: u64) {
    let m = ring.modulus;
    for d in dst.iter_mut() {
        if *d != 0 {
            *d = mulm(*d, c, m);
        }
    }
}

/// Howell normal form of the row span of `m`, optionally tracking how each
/// output row is expressed in the input generators.
pub fn howell_form_tracked(ring: &ZpnRing, m: &ZpnMatrix, track: bool) -> HowellBasis {
    let cols = m.cols;
    let n_gens = m.rows;
    let mut work: Vec<WorkRow> = (0..m.rows)
        .map(|i| WorkRow {
            v: m.row(i).to_vec(),
            expr: if track {
                let mut e = vec![0; n_gens];
                e[i] = 1;
                Some(e)
            } else {
                None
            },
        })
        .collect();
    let mut out: Vec<WorkRow> = Vec::new();
    let mut pivots: Vec<(usize, u32)> = Vec::new();

    for col in 0..cols {
        // pick a row with minimal valuation at this column
        let mut best: Option<(usize, u32)> = None;
        for (i, w) in work.iter().enumerate() {
            let x = w.v[col];
            if x != 0 {
                let v = ring.vp(x);
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((i, v));
                }
            }
        }
        let Some((bi, val)) = best else { continue };
        let mut piv = work.swap_remove(bi);
        // normalize pivot entry to p^val
        let unit = piv.v[col] / ring.p_pow(val);
        let uinv = ring.unit_inv(unit);
        scale_row(ring, &mut piv.v, uinv);
        if let Some(e) = piv.expr.as_mut() {
            scale_row(ring, e, uinv);
        }
        let pval = ring.p_pow(val);
        // eliminate this column from the remaining working rows
        for w in work.iter_mut() {
            let x = w.v[col];
            if x != 0 {
                debug_assert!(x % pval == 0);
                let q = x / pval;
                scale_sub(ring, &mut w.v, &piv.v, q);
                if let (Some(we), Some(pe)) = (w.expr.as_mut(), piv.expr.as_ref()) {
                    scale_sub(ring, we, pe, q);
                }
            }
        }
        // saturation row p^{n-val} * pivot keeps the Howell property
        if val > 0 {
            let sat_c = ring.p_pow(ring.n - val);
            let mut sat = WorkRow { v: piv.v.clone(), expr: piv.expr.clone() };
            scale_row(ring, &mut sat.v, sat_c);
            if let Some(e) = sat.expr.as_mut() {
                scale_row(ring, e, sat_c);
            }
            if sat.v.iter().any(|&x| x != 0) {
                work.push(sat);
            }
        }
        pivots.push((col, val));
        out.push(piv);
    }

    // canonical reduction of entries above each pivot
    for i in 0..out.len() {
        for j in (i + 1)..out.len() {
            let (pc, pv) = pivots[j];
            let pval = ring.p_pow(pv);
            let x = out[i].v[pc];
            let q = x / pval;
            if q != 0 {
                let (a, b) = out.split_at_mut(j);
                scale_sub(ring, &mut a[i].v, &b[0].v, q);
                if let (Some(ae), Some(be)) = (a[i].expr.as_mut(), b[0].expr.as_ref()) {
                    scale_sub(ring, ae, be, q);
                }
            }
        }
    }

    HowellBasis {
        cols,
        rows: out.iter().map(|w| w.v.clone()).collect(),
        pivots,
        ring: *ring,
        transform: if track { Some(out.into_iter().map(|w| w.expr.unwrap()).collect()) } else { None },
        n_gens,
    }
}

pub fn howell_form(ring: &ZpnRing, m: &ZpnMatrix) -> HowellBasis {
    howell_form_tracked(ring, m, false)
}

impl HowellBasis {
    /// Reduce `v` against the basis, returning (canonical representative,
    /// per-row quotients used).
    fn reduce_inner(&self, v: &[u64]) -> (Vec<u64>, Vec<u64>) {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        let ring = &self.ring;
        let mut r = v.to_vec();
        let mut qs = vec![0u64; self.rows.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let (pc, pv) = self.pivots[i];
            let pval = ring.p_pow(pv);
            let x = r[pc];
            let q = x / pval;
            if q != 0 {
                scale_sub(ring, &mut r, row, q);
                qs[i] = q;
            }
        }
        (r, qs)
    }

    /// True iff `v` lies in the row span.
    pub fn contains(&self, v: &[u64]) -> bool {
        let (r, _) = self.reduce_inner(v);
        r.iter().all(|&x| x == 0)
    }

    /// Canonical coset representative of `v` modulo the span.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        self.reduce_inner(v).0
    }

    /// Express `v` as a combination of the original generators, if it lies
    /// in the span (requires tracking).
    pub fn solve(&self, v: &[u64]) -> Result<Option<Vec<u64>>, Error> {
        let tr = self
            .transform
            .as_ref()
            .ok_or_else(|| Error::Config("basis was built without transform tracking".into()))?;
        let (r, qs) = self.reduce_inner(v);
        if r.iter().any(|&x| x != 0) {
            return Ok(None);
        }
        let ring = &self.ring;
        let mut coeffs = vec![0u64; self.n_gens];
        for (i, &q) in qs.iter().enumerate() {
            scale_add(ring, &mut coeffs, &tr[i], q);
        }
        Ok(Some(coeffs))
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Right kernel {x : M x = 0} of an m x n matrix, as a Howell basis of row
/// vectors of length n. Computed by reducing the rows of [M^T | I] and
/// collecting right parts of rows whose left part vanished.
pub fn kernel(ring: &ZpnRing, m: &ZpnMatrix) -> HowellBasis {
    let rows = m.rows;
    let cols = m.cols;
    let mut aug = ZpnMatrix::new(cols, rows + cols);
    for i in 0..cols {
        for j in 0..rows {
            aug.data[i * (rows + cols) + j] = m.data[j * cols + i];
        }
        aug.data[i * (rows + cols) + rows + i] = 1;
    }
    let h = howell_form(ring, &aug);
    let mut gens: Vec<Vec<u64>> = Vec::new();
    for (i, row) in h.rows.iter().enumerate() {
        let (pc, _) = h.pivots[i];
        if pc >= rows {
            gens.push(row[rows..].to_vec());
        }
    }
    let gm = ZpnMatrix::from_rows(cols, gens);
    howell_form(ring, &gm)
}
