//! Truncated multivariate power series over O/p^N: the coefficient rings
//! `I = O[[X_1..X_r]]` and `R = I[[T]]`, cut off at total X-degree D and
//! T-degree D_T.
//!
//! Elements are dense coefficient arrays in Montgomery form, laid out as
//! `[monomial][limb]` with f limbs per scalar. Every operation computes the
//! exact product/sum and discards monomials beyond the truncation bounds.

use crate::padic::{mulm, PrimeConfig};
use crate::Error;

/// Montgomery arithmetic modulo an odd m < 2^63 (R = 2^64).
#[derive(Debug, Clone, Copy)]
pub struct Mont {
    pub m: u64,
    neg_inv: u64,
    r2: u64,
    pub one: u64,
}

impl Mont {
    pub fn new(m: u64) -> Mont {
        assert!(m & 1 == 1 && m > 1);
        // Newton: inv = m^{-1} mod 2^64
        let mut inv: u64 = m;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(m.wrapping_mul(inv)));
        }
        let neg_inv = inv.wrapping_neg();
        let r = (u128::from(u64::MAX) + 1) % u128::from(m);
        let r2 = ((r * r) % u128::from(m)) as u64;
        Mont { m, neg_inv, r2, one: r as u64 }
    }

    #[inline(always)]
    pub fn redc(&self, t: u128) -> u64 {
        let q = (t as u64).wrapping_mul(self.neg_inv);
        let r = ((t + u128::from(q) * u128::from(self.m)) >> 64) as u64;
        if r >= self.m {
            r - self.m
        } else {
            r
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(u128::from(a) * u128::from(b))
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.m {
            s - self.m
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.m - b
        }
    }

    pub fn encode(&self, x: u64) -> u64 {
        self.mul(x % self.m, self.r2)
    }

    pub fn decode(&self, x: u64) -> u64 {
        self.redc(u128::from(x))
    }
}

/// Shape parameters of the truncated series ring.
#[derive(Debug, Clone)]
pub struct SeriesConfig {
    pub prime: PrimeConfig,
    pub r: usize,
    pub d: u32,
    pub d_t: u32,
}

impl SeriesConfig {
    pub fn new(prime: PrimeConfig, r: usize, d: u32, d_t: u32) -> Result<Self, Error> {
        if d == 0 || d_t == 0 {
            return Err(Error::Config("degree bounds D and D_T must be >= 1".into()));
        }
        if r > 4 {
            return Err(Error::Config("at most 4 series variables are supported".into()));
        }
        Ok(SeriesConfig { prime, r, d, d_t })
    }
}

const NO_MONO: u32 = u32::MAX;

/// The working ring: precomputed monomial and scalar tables at a working
/// precision exponent n_w >= the user precision.
#[derive(Debug)]
pub struct SeriesRing {
    pub cfg: SeriesConfig,
    pub n_w: u32,
    pub modulus: u64,
    pub mont: Mont,
    pub f: usize,
    /// number of monomials (X-monomials times T-powers)
    pub n_mono: usize,
    /// limbs per element = n_mono * f
    pub width: usize,
    pub p_mont: u64,
    /// exponent vectors: [x_1..x_r, t]
    pub monos: Vec<Vec<u32>>,
    pub n_xmono: usize,
    mul_table: Vec<u32>,
    /// minpoly reduction rows (Montgomery), t^{f+k} for k = 0..f-2
    red: Vec<Vec<u64>>,
    /// Frobenius images 1, r, .., r^{f-1} of the power basis (Montgomery)
    frob_pow: Vec<Vec<u64>>,
    /// phi image of each monomial, as a full element
    frob_mono: Vec<Vec<u64>>,
    /// compact T-only coefficient tables for (1+T)^k, k-KPOW_MIN, each of
    /// length (d_t+1) single limbs (integer scalars)
    tpow: Vec<Vec<u64>>,
    /// powers of p in plain form, p^0..p^{n_w}
    pub p_pows: Vec<u64>,
}

pub const KPOW_MIN: i64 = -192;
pub const KPOW_MAX: i64 = 192;

/// Dense element of the truncated series ring (Montgomery limbs).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    pub c: Vec<u64>,
}

fn enumerate_xmonos(r: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; r];
    fn rec(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, idx: usize, left: u32) {
        if idx == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[idx] = e;
            rec(out, cur, idx + 1, left - e);
        }
        cur[idx] = 0;
    }
    rec(&mut out, &mut cur, 0, d);
    // graded order: sort by (total degree, exponents) for stable reporting
    out.sort_by_key(|m| (m.iter().sum::<u32>(), m.clone()));
    out
}

impl SeriesRing {
    pub fn new(cfg: SeriesConfig, n_w: u32) -> Result<SeriesRing, Error> {
        let prime_w = cfg.prime.at_precision(n_w)?;
        let p = prime_w.p;
        let modulus = prime_w.modulus;
        if modulus >= (1u64 << 62) {
            return Err(Error::Config(format!(
                "working modulus p^{n_w} = {modulus} too large; reduce N or degree bounds"
            )));
        }
        let mont = Mont::new(modulus);
        let f = prime_w.f;
        let xmonos = enumerate_xmonos(cfg.r, cfg.d);
        let n_xmono = xmonos.len();
        let n_mono = n_xmono * (cfg.d_t as usize + 1);
        let mut monos = Vec::with_capacity(n_mono);
        for xm in &xmonos {
            for t in 0..=cfg.d_t {
                let mut v = xm.clone();
                v.push(t);
                monos.push(v);
            }
        }
        // index lookup by exponent vector
        let lookup = |v: &[u32]| -> u32 {
            let xdeg: u32 = v[..cfg.r].iter().sum();
            if xdeg > cfg.d || v[cfg.r] > cfg.d_t {
                return NO_MONO;
            }
            monos
                .iter()
                .position(|m| m[..] == *v)
                .map(|i| i as u32)
                .unwrap_or(NO_MONO)
        };
        let mut mul_table = vec![NO_MONO; n_mono * n_mono];
        for i in 0..n_mono {
            for j in 0..n_mono {
                let sum: Vec<u32> = monos[i].iter().zip(&monos[j]).map(|(a, b)| a + b).collect();
                mul_table[i * n_mono + j] = lookup(&sum);
            }
        }
        let mut ring = SeriesRing {
            n_w,
            modulus,
            mont,
            f,
            n_mono,
            width: n_mono * f,
            p_mont: mont.encode(p),
            monos,
            n_xmono,
            mul_table,
            red: Vec::new(),
            frob_pow: Vec::new(),
            frob_mono: Vec::new(),
            tpow: Vec::new(),
            p_pows: {
                let mut v = vec![1u64];
                for _ in 0..n_w {
                    v.push(v.last().unwrap() * p);
                }
                v
            },
            cfg,
        };
        // scalar tables from the reference implementation, re-encoded
        ring.red = prime_w
            .reduction_rows()
            .iter()
            .map(|row| row.iter().map(|&c| mont.encode(c)).collect())
            .collect();
        ring.frob_pow = prime_w
            .frobenius_rows()
            .iter()
            .map(|row| row.iter().map(|&c| mont.encode(c)).collect())
            .collect();
        ring.build_tpow();
        ring.build_frob_mono();
        Ok(ring)
    }

    pub fn p(&self) -> u64 {
        self.cfg.prime.p
    }

    fn build_tpow(&mut self) {
        // (1+T)^k truncated at d_t, for k in [KPOW_MIN, KPOW_MAX]
        let dt = self.cfg.d_t as usize;
        let m = self.mont;
        let mul_t = |a: &[u64], b: &[u64]| -> Vec<u64> {
            let mut out = vec![0u64; dt + 1];
            for i in 0..=dt {
                if a[i] == 0 {
                    continue;
                }
                for j in 0..=dt - i {
                    out[i + j] = m.add(out[i + j], m.mul(a[i], b[j]));
                }
            }
            out
        };
        let mut one = vec![0u64; dt + 1];
        one[0] = m.one;
        let mut base = one.clone();
        base[1] = m.one; // 1 + T
        // inverse of (1+T): alternating signs
        let mut inv = vec![0u64; dt + 1];
        for i in 0..=dt {
            inv[i] = if i % 2 == 0 { m.one } else { m.sub(0, m.one) };
        }
        let count = (KPOW_MAX - KPOW_MIN + 1) as usize;
        let mut tab = vec![Vec::new(); count];
        let zero_idx = (-KPOW_MIN) as usize;
        tab[zero_idx] = one.clone();
        let mut cur = one.clone();
        for k in 1..=KPOW_MAX {
            cur = mul_t(&cur, &base);
            tab[zero_idx + k as usize] = cur.clone();
        }
        let mut cur = one;
        for k in 1..=-KPOW_MIN {
            cur = mul_t(&cur, &inv);
            tab[zero_idx - k as usize] = cur.clone();
        }
        self.tpow = tab;
    }

    fn build_frob_mono(&mut self) {
        // phi(X^a T^t) = X^{p a} ((1+T)^p - 1)^t, truncated.
        let p = self.p();
        let dt = self.cfg.d_t as usize;
        let m = self.mont;
        // ((1+T)^p - 1)^t as compact T-tables
        let mut phi_t_base = self.tpow_table(p as i64).to_vec();
        phi_t_base[0] = m.sub(phi_t_base[0], m.one);
        let mut phi_t_pows: Vec<Vec<u64>> = vec![vec![0u64; dt + 1]; dt + 1];
        phi_t_pows[0][0] = m.one;
        for t in 1..=dt {
            let prev = phi_t_pows[t - 1].clone();
            let mut out = vec![0u64; dt + 1];
            for i in 0..=dt {
                if prev[i] == 0 {
                    continue;
                }
                for j in 0..=dt - i {
                    out[i + j] = m.add(out[i + j], m.mul(prev[i], phi_t_base[j]));
                }
            }
            phi_t_pows[t] = out;
        }
        let r = self.cfg.r;
        let mut images = Vec::with_capacity(self.n_mono);
        for mi in 0..self.n_mono {
            let mut img = vec![0u64; self.width];
            let mono = self.monos[mi].clone();
            let xdeg: u32 = mono[..r].iter().sum();
            if u64::from(xdeg) * p <= u64::from(self.cfg.d) {
                let xtarget: Vec<u32> = mono[..r].iter().map(|&e| e * p as u32).collect();
                let t = mono[r] as usize;
                for td in 0..=dt {
                    let cft = phi_t_pows[t][td];
                    if cft == 0 {
                        continue;
                    }
                    let mut v = xtarget.clone();
                    v.push(td as u32);
                    if let Some(ti) = self.mono_index(&v) {
                        img[ti * self.f] = cft;
                    }
                }
            }
            images.push(img);
        }
        self.frob_mono = images;
    }

    pub fn mono_index(&self, v: &[u32]) -> Option<usize> {
        self.monos.iter().position(|m| m[..] == *v)
    }

    pub fn tpow_table(&self, k: i64) -> &[u64] {
        assert!(
            (KPOW_MIN..=KPOW_MAX).contains(&k),
            "(1+T)^k exponent {k} outside precomputed range"
        );
        &self.tpow[(k - KPOW_MIN) as usize]
    }

    // ------------------------------------------------------------------
    // scalar limb kernels (length f slices, Montgomery form)
    // ------------------------------------------------------------------

    #[inline]
    pub fn slimb_mul_acc(&self, acc: &mut [u64], a: &[u64], b: &[u64]) {
        let m = self.mont;
        match self.f {
            1 => acc[0] = m.add(acc[0], m.mul(a[0], b[0])),
            2 => {
                let w0 = m.mul(a[0], b[0]);
                let w1 = m.add(m.mul(a[0], b[1]), m.mul(a[1], b[0]));
                let w2 = m.mul(a[1], b[1]);
                acc[0] = m.add(acc[0], m.add(w0, m.mul(w2, self.red[0][0])));
                acc[1] = m.add(acc[1], m.add(w1, m.mul(w2, self.red[0][1])));
            }
            _ => {
                let f = self.f;
                let mut wide = [0u64; 5];
                for i in 0..f {
                    if a[i] == 0 {
                        continue;
                    }
                    for j in 0..f {
                        wide[i + j] = m.add(wide[i + j], m.mul(a[i], b[j]));
                    }
                }
                for i in 0..f {
                    acc[i] = m.add(acc[i], wide[i]);
                }
                for k in 0..f - 1 {
                    let c = wide[f + k];
                    if c != 0 {
                        for i in 0..f {
                            acc[i] = m.add(acc[i], m.mul(c, self.red[k][i]));
                        }
                    }
                }
            }
        }
    }

    #[inline]
    pub fn slimb_scale_acc(&self, acc: &mut [u64], src: &[u64], c: u64) {
        let m = self.mont;
        for i in 0..self.f {
            if src[i] != 0 {
                acc[i] = m.add(acc[i], m.mul(src[i], c));
            }
        }
    }

    /// Frobenius on one scalar: coords a_i -> sum a_i * r^i.
    fn slimb_frobenius(&self, out: &mut [u64], a: &[u64]) {
        let m = self.mont;
        for v in out.iter_mut() {
            *v = 0;
        }
        for i in 0..self.f {
            if a[i] == 0 {
                continue;
            }
            for j in 0..self.f {
                out[j] = m.add(out[j], m.mul(a[i], self.frob_pow[i][j]));
            }
        }
    }

    // ------------------------------------------------------------------
    // element constructors
    // ------------------------------------------------------------------

    pub fn zero(&self) -> Series {
        Series { c: vec![0; self.width] }
    }

    pub fn one(&self) -> Series {
        let mut s = self.zero();
        s.c[0] = self.mont.one;
        s
    }

    /// Scalar constant from plain u64.
    pub fn from_u64(&self, v: u64) -> Series {
        let mut s = self.zero();
        s.c[0] = self.mont.encode(v);
        s
    }

    pub fn from_i64(&self, v: i64) -> Series {
        self.from_u64(v.rem_euclid(self.modulus as i64) as u64)
    }

    /// Scalar constant from plain coordinate vector (length f).
    pub fn from_scalar_coords(&self, coords: &[u64]) -> Series {
        assert_eq!(coords.len(), self.f);
        let mut s = self.zero();
        for (i, &c) in coords.iter().enumerate() {
            s.c[i] = self.mont.encode(c);
        }
        s
    }

    /// Monomial c * X^a T^t, coefficient plain.
    pub fn monomial(&self, exps: &[u32], coeff: u64) -> Series {
        let idx = self.mono_index(exps).expect("monomial within truncation bounds");
        let mut s = self.zero();
        s.c[idx * self.f] = self.mont.encode(coeff);
        s
    }

    // ------------------------------------------------------------------
    // ring operations
    // ------------------------------------------------------------------

    pub fn add(&self, a: &Series, b: &Series) -> Series {
        let m = self.mont;
        Series { c: a.c.iter().zip(&b.c).map(|(&x, &y)| m.add(x, y)).collect() }
    }

    pub fn sub(&self, a: &Series, b: &Series) -> Series {
        let m = self.mont;
        Series { c: a.c.iter().zip(&b.c).map(|(&x, &y)| m.sub(x, y)).collect() }
    }

    pub fn neg(&self, a: &Series) -> Series {
        let m = self.mont;
        Series { c: a.c.iter().map(|&x| m.sub(0, x)).collect() }
    }

    pub fn scale_u64(&self, a: &Series, v: u64) -> Series {
        let m = self.mont;
        let enc = m.encode(v);
        Series { c: a.c.iter().map(|&x| m.mul(x, enc)).collect() }
    }

    /// acc += a * b on raw coefficient slices (full elements).
    pub fn mul_acc(&self, acc: &mut [u64], a: &[u64], b: &[u64]) {
        let f = self.f;
        let n = self.n_mono;
        for i in 0..n {
            let ai = &a[i * f..(i + 1) * f];
            if ai.iter().all(|&x| x == 0) {
                continue;
            }
            let row = &self.mul_table[i * n..(i + 1) * n];
            for j in 0..n {
                let tgt = row[j];
                if tgt == NO_MONO {
                    continue;
                }
                let bj = &b[j * f..(j + 1) * f];
                if bj.iter().all(|&x| x == 0) {
                    continue;
                }
                let t = tgt as usize * f;
                // split borrow: acc[t..t+f] written, sources are distinct slices
                let (ai, bj) = (ai, bj);
                let accs = &mut acc[t..t + f];
                self.slimb_mul_acc(accs, ai, bj);
            }
        }
    }

    pub fn mul(&self, a: &Series, b: &Series) -> Series {
        let mut out = self.zero();
        self.mul_acc(&mut out.c, &a.c, &b.c);
        out
    }

    /// acc += src * (1+T)^k, using the compact T-power tables.
    pub fn acc_mul_tpow(&self, acc: &mut [u64], src: &[u64], k: i64) {
        if k == 0 {
            let m = self.mont;
            for (x, &y) in acc.iter_mut().zip(src) {
                *x = m.add(*x, y);
            }
            return;
        }
        let f = self.f;
        let dt = self.cfg.d_t as usize;
        let tab = self.tpow_table(k);
        let r = self.cfg.r;
        for mi in 0..self.n_mono {
            let s = &src[mi * f..(mi + 1) * f];
            if s.iter().all(|&x| x == 0) {
                continue;
            }
            let t0 = self.monos[mi][r] as usize;
            // target mono indices: same X-part, T-degree t0+d. T is the
            // fastest-varying index, so this is mi + d.
            for d in 0..=dt - t0 {
                let cfd = tab[d];
                if cfd == 0 {
                    continue;
                }
                let tgt = (mi + d) * f;
                let accs = &mut acc[tgt..tgt + f];
                self.slimb_scale_acc(accs, s, cfd);
            }
        }
    }

    pub fn mul_tpow(&self, a: &Series, k: i64) -> Series {
        let mut out = self.zero();
        self.acc_mul_tpow(&mut out.c, &a.c, k);
        out
    }

    pub fn is_zero(&self, a: &Series) -> bool {
        a.c.iter().all(|&x| x == 0)
    }

    /// Constant scalar part (mono index 0 must be the unit monomial).
    pub fn constant_limbs<'a>(&self, a: &'a Series) -> &'a [u64] {
        &a.c[0..self.f]
    }

    /// Residue of the constant term in F_q (plain coords mod p).
    pub fn residue(&self, a: &Series) -> Vec<u64> {
        let p = self.p();
        self.constant_limbs(a).iter().map(|&c| self.mont.decode(c) % p).collect()
    }

    pub fn is_unit(&self, a: &Series) -> bool {
        self.residue(a).iter().any(|&c| c != 0)
    }

    /// Exact inverse of a unit by Newton iteration; the non-constant part is
    /// nilpotent at truncation so this terminates.
    pub fn invert(&self, a: &Series) -> Result<Series, Error> {
        if !self.is_unit(a) {
            return Err(Error::NonUnit);
        }
        // seed: inverse of the constant scalar
        let prime_w = self.cfg.prime.at_precision(self.n_w).unwrap();
        let c0: Vec<u64> = self.constant_limbs(a).iter().map(|&c| self.mont.decode(c)).collect();
        let c0s = prime_w.from_coords(c0).unwrap();
        let inv0 = prime_w.invert(&c0s)?;
        let mut v = self.from_scalar_coords(&inv0.coords);
        let two = self.from_u64(2);
        for _ in 0..64 {
            let av = self.mul(a, &v);
            if av == self.one() {
                return Ok(v);
            }
            v = self.mul(&v, &self.sub(&two, &av));
        }
        Err(Error::PrecisionExhausted("series inversion did not terminate".into()))
    }

    /// phi: Frobenius on scalars, X_j -> X_j^p, (1+T) -> (1+T)^p.
    pub fn frobenius(&self, a: &Series) -> Series {
        let f = self.f;
        let mut out = self.zero();
        let mut fcoef = vec![0u64; f];
        for mi in 0..self.n_mono {
            let s = &a.c[mi * f..(mi + 1) * f];
            if s.iter().all(|&x| x == 0) {
                continue;
            }
            self.slimb_frobenius(&mut fcoef, s);
            let img = &self.frob_mono[mi];
            // img has single-limb scalar entries; multiply through
            for ti in 0..self.n_mono {
                let c = img[ti * f];
                if c == 0 {
                    continue;
                }
                let accs = &mut out.c[ti * f..(ti + 1) * f];
                self.slimb_scale_acc(accs, &fcoef, c);
            }
        }
        out
    }

    /// Substitute T -> (1+T)^n - 1 (the coefficient action of raising the
    /// central element to the n-th power).
    pub fn subst_t(&self, a: &Series, n: u64) -> Series {
        let m = self.mont;
        let dt = self.cfg.d_t as usize;
        // ((1+T)^n - 1)^t tables
        let mut base = self.tpow_table(n as i64).to_vec();
        base[0] = m.sub(base[0], m.one);
        let mut pows: Vec<Vec<u64>> = vec![vec![0u64; dt + 1]; dt + 1];
        pows[0][0] = m.one;
        for t in 1..=dt {
            let prev = pows[t - 1].clone();
            let mut out = vec![0u64; dt + 1];
            for i in 0..=dt {
                if prev[i] == 0 {
                    continue;
                }
                for j in 0..=dt - i {
                    out[i + j] = m.add(out[i + j], m.mul(prev[i], base[j]));
                }
            }
            pows[t] = out;
        }
        let f = self.f;
        let r = self.cfg.r;
        let mut out = self.zero();
        for mi in 0..self.n_mono {
            let s = &a.c[mi * f..(mi + 1) * f];
            if s.iter().all(|&x| x == 0) {
                continue;
            }
            let t0 = self.monos[mi][r] as usize;
            let base_mi = mi - t0; // T-degree-0 partner of this monomial
            for d in 0..=dt {
                let c = pows[t0][d];
                if c == 0 {
                    continue;
                }
                let tgt = (base_mi + d) * f;
                let accs = &mut out.c[tgt..tgt + f];
                self.slimb_scale_acc(accs, s, c);
            }
        }
        out
    }

    /// Evaluate X_j -> point_j into a target ring sharing (p, f, n_w, d_t).
    /// Points are plain scalar coordinate vectors, each divisible by p.
    pub fn specialize(&self, tgt: &SeriesRing, a: &Series, point: &[Vec<u64>]) -> Result<Series, Error> {
        if point.len() != self.cfg.r {
            return Err(Error::BadSpecPoint);
        }
        if tgt.modulus != self.modulus || tgt.f != self.f || tgt.cfg.d_t != self.cfg.d_t || tgt.cfg.r != 0 {
            return Err(Error::Config("specialization target ring is incompatible".into()));
        }
        for c in point {
            if c.len() != self.f || c.iter().any(|&x| x % self.p() != 0) {
                return Err(Error::BadSpecPoint);
            }
        }
        let enc: Vec<Vec<u64>> = point
            .iter()
            .map(|c| c.iter().map(|&x| self.mont.encode(x)).collect())
            .collect();
        let f = self.f;
        let r = self.cfg.r;
        let mut out = tgt.zero();
        let mut factor = vec![0u64; f];
        let mut tmp = vec![0u64; f];
        for mi in 0..self.n_mono {
            let s = &a.c[mi * f..(mi + 1) * f];
            if s.iter().all(|&x| x == 0) {
                continue;
            }
            // factor = prod point_j ^ e_j
            factor.iter_mut().for_each(|v| *v = 0);
            factor[0] = self.mont.one;
            for j in 0..r {
                for _ in 0..self.monos[mi][j] {
                    tmp.iter_mut().for_each(|v| *v = 0);
                    self.slimb_mul_acc(&mut tmp, &factor, &enc[j]);
                    factor.copy_from_slice(&tmp);
                }
            }
            if factor.iter().all(|&x| x == 0) {
                continue;
            }
            let t0 = self.monos[mi][r] as usize;
            let tgt_idx = t0 * f; // target monomials are T-powers only
            tmp.iter_mut().for_each(|v| *v = 0);
            self.slimb_mul_acc(&mut tmp, s, &factor);
            let m = self.mont;
            for i in 0..f {
                out.c[tgt_idx + i] = m.add(out.c[tgt_idx + i], tmp[i]);
            }
        }
        Ok(out)
    }

    // ------------------------------------------------------------------
    // divisibility and comparison
    // ------------------------------------------------------------------

    /// True if every limb is divisible by p^k (valuations are preserved by
    /// the Montgomery encoding).
    pub fn divisible_by_p(&self, a: &Series, k: u32) -> bool {
        let pk = self.p_pows[k as usize];
        a.c.iter().all(|&x| x % pk == 0)
    }

    /// Exact division by p^k of every limb; the result is correct modulo
    /// p^{n_w - k}.
    pub fn div_p_exact(&self, a: &Series, k: u32) -> Option<Series> {
        let pk = self.p_pows[k as usize];
        if !self.divisible_by_p(a, k) {
            return None;
        }
        Some(Series { c: a.c.iter().map(|&x| x / pk).collect() })
    }

    /// a == b modulo p^k, limbwise.
    pub fn eq_mod(&self, a: &Series, b: &Series, k: u32) -> bool {
        let pk = self.p_pows[k as usize];
        a.c.iter().zip(&b.c).all(|(&x, &y)| self.mont.sub(x, y) % pk == 0)
    }

    /// Sparse decoded form: sorted (exponent vector, plain coords mod p^k).
    pub fn to_sparse(&self, a: &Series, k: u32) -> Vec<(Vec<u32>, Vec<u64>)> {
        let pk = self.p_pows[k as usize];
        let mut out = Vec::new();
        for mi in 0..self.n_mono {
            let coords: Vec<u64> = a.c[mi * self.f..(mi + 1) * self.f]
                .iter()
                .map(|&c| self.mont.decode(c) % pk)
                .collect();
            if coords.iter().any(|&c| c != 0) {
                out.push((self.monos[mi].clone(), coords));
            }
        }
        out
    }

    pub fn from_sparse(&self, terms: &[(Vec<u32>, Vec<u64>)]) -> Result<Series, Error> {
        let mut s = self.zero();
        for (exps, coords) in terms {
            let idx = self
                .mono_index(exps)
                .ok_or_else(|| Error::Config("monomial outside truncation bounds".into()))?;
            if coords.len() != self.f {
                return Err(Error::Config("coefficient has wrong number of coordinates".into()));
            }
            for (i, &c) in coords.iter().enumerate() {
                s.c[idx * self.f + i] = self.mont.add(s.c[idx * self.f + i], self.mont.encode(c));
            }
        }
        Ok(s)
    }
}

// expose the reference tables from PrimeConfig for re-encoding
impl PrimeConfig {
    pub(crate) fn reduction_rows(&self) -> Vec<Vec<u64>> {
        // recompute plainly: t^f = -(c_{f-1} t^{f-1} + ... + c_0), then shift
        let f = self.f;
        let m = self.modulus;
        let mut rows: Vec<Vec<u64>> = Vec::new();
        if f >= 2 {
            let first: Vec<u64> = self.minpoly.iter().map(|&c| (m - c) % m).collect();
            rows.push(first.clone());
            for k in 1..f - 1 {
                let prev = rows[k - 1].clone();
                let top = prev[f - 1];
                let mut next = vec![0u64; f];
                for i in (1..f).rev() {
                    next[i] = prev[i - 1];
                }
                for i in 0..f {
                    next[i] = (next[i] + mulm(top, first[i], m)) % m;
                }
                rows.push(next);
            }
        }
        rows
    }

    pub(crate) fn frobenius_rows(&self) -> Vec<Vec<u64>> {
        (0..self.f)
            .map(|i| {
                let mut e = vec![0u64; self.f];
                e[i] = 1;
                let s = self.from_coords(e).unwrap();
                self.frobenius(&s).unwrap().coords
            })
            .collect()
    }
}
