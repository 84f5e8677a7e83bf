//! Exact arithmetic in O/p^N where O is the unramified extension of Z_p of
//! degree f, realized as `(Z/p^N)[t]/(minpoly)`.
//!
//! This module is the reference scalar layer: plain (non-Montgomery)
//! representatives in canonical range [0, p^N). The series layer keeps its
//! own packed kernels and is cross-checked against this one.

use crate::Error;
use serde::{Deserialize, Serialize};

/// Offset-free fingerprint so scalars from different configurations cannot
/// be mixed silently.
fn fingerprint(p: u64, f: usize, n: u32, minpoly: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        h ^= v;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    eat(p);
    eat(f as u64);
    eat(n as u64);
    for &c in minpoly {
        eat(c);
    }
    h
}

/// Configuration for the coefficient ring O/p^N.
#[derive(Debug, Clone)]
pub struct PrimeConfig {
    pub p: u64,
    pub f: usize,
    pub n: u32,
    /// p^n
    pub modulus: u64,
    /// Non-leading coefficients c_0..c_{f-1} of the monic minimal polynomial
    /// t^f + c_{f-1} t^{f-1} + ... + c_0. For f = 1 this is `[0]` (O = Z_p).
    pub minpoly: Vec<u64>,
    /// The same coefficients as integers, so the configuration can be
    /// rebuilt at a different precision exponent.
    pub minpoly_int: Vec<i64>,
    fp: u64,
    /// t^{f+k} reduced modulo the minimal polynomial, k = 0..f-2.
    red: Vec<Vec<u64>>,
    /// Powers 1, r, r^2, .., r^{f-1} of the Hensel-lifted Frobenius image r
    /// of t (the unique root of minpoly congruent to t^p mod p).
    frob_pow: Vec<Vec<u64>>,
}

/// Element of O/p^N in power-basis coordinates, each in [0, p^N).
/// Serializes as the bare coordinate array; a deserialized value must be
/// re-adopted through [`PrimeConfig::from_coords`] before use.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PadicScalar {
    pub coords: Vec<u64>,
    #[serde(skip)]
    fp: u64,
}

#[inline]
pub(crate) fn addm(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline]
pub(crate) fn subm(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

#[inline]
pub(crate) fn mulm(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powm(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulm(acc, a, m);
        }
        a = mulm(a, a, m);
        e >>= 1;
    }
    acc
}

/// Inverse of a unit modulo p^n (p odd), by Newton iteration from the mod-p
/// inverse.
pub(crate) fn inv_mod_pn(a: u64, p: u64, m: u64) -> u64 {
    debug_assert!(a % p != 0);
    let mut v = powm(a % p, p - 2, p);
    loop {
        let av = mulm(a, v, m);
        if av == 1 {
            return v;
        }
        v = mulm(v, subm(2, av, m), m);
    }
}

/// Built-in minimal polynomials per (p, f). Fixed once so runs are
/// reproducible across machines.
fn builtin_minpoly(p: u64, f: usize) -> Option<Vec<i64>> {
    match (p, f) {
        (_, 1) => Some(vec![0]),
        (3, 2) => Some(vec![1, 0]),     // t^2 + 1
        (3, 3) => Some(vec![1, -1, 0]), // t^3 - t + 1
        (5, 2) => Some(vec![2, 0]),     // t^2 + 2
        (5, 3) => Some(vec![1, 1, 0]),  // t^3 + t + 1
        (7, 2) => Some(vec![1, 0]),     // t^2 + 1
        (7, 3) => Some(vec![2, 0, 0]),  // t^3 + 2
        _ => None,
    }
}

impl PrimeConfig {
    /// Standard configuration from the built-in minimal polynomial table.
    pub fn new(p: u64, f: usize, n: u32) -> Result<Self, Error> {
        let mp = builtin_minpoly(p, f)
            .ok_or_else(|| Error::Config(format!("no built-in minimal polynomial for p={p}, f={f}")))?;
        Self::with_minpoly_int(p, f, n, mp)
    }

    /// Configuration with an explicit monic minimal polynomial given by its
    /// non-leading integer coefficients (length f).
    pub fn with_minpoly_int(p: u64, f: usize, n: u32, minpoly_int: Vec<i64>) -> Result<Self, Error> {
        if p < 3 || !is_prime(p) {
            return Err(Error::Config(format!("p = {p} must be an odd prime")));
        }
        if f == 0 || f > 3 {
            return Err(Error::Config(format!("unramified degree f = {f} out of supported range 1..=3")));
        }
        if n == 0 {
            return Err(Error::Config("precision exponent N must be >= 1".into()));
        }
        let modulus = checked_pow(p, n)?;
        if minpoly_int.len() != f {
            return Err(Error::Config("minimal polynomial must have f non-leading coefficients".into()));
        }
        let minpoly: Vec<u64> = minpoly_int
            .iter()
            .map(|&c| (c.rem_euclid(modulus as i64)) as u64)
            .collect();
        if f >= 2 {
            // deg <= 3: irreducible over F_p iff no roots.
            for x in 0..p {
                let mut v = 1u64; // leading t^f
                for k in (0..f).rev() {
                    v = (v * x + minpoly[k] % p) % p;
                }
                if v == 0 {
                    return Err(Error::Config("minimal polynomial is reducible mod p".into()));
                }
            }
        }
        let fp = fingerprint(p, f, n, &minpoly);
        let mut cfg = PrimeConfig {
            p,
            f,
            n,
            modulus,
            minpoly,
            minpoly_int,
            fp,
            red: Vec::new(),
            frob_pow: Vec::new(),
        };
        cfg.build_reduction();
        cfg.build_frobenius();
        Ok(cfg)
    }

    /// The same configuration at a different precision exponent.
    pub fn at_precision(&self, n: u32) -> Result<Self, Error> {
        Self::with_minpoly_int(self.p, self.f, n, self.minpoly_int.clone())
    }

    fn build_reduction(&mut self) {
        // t^f = -(c_{f-1} t^{f-1} + .. + c_0), then t^{f+1} = t * t^f, ...
        let f = self.f;
        let m = self.modulus;
        let mut red = Vec::new();
        if f >= 2 {
            let mut cur: Vec<u64> = self.minpoly.iter().map(|&c| subm(0, c, m)).collect();
            red.push(cur.clone());
            for _ in 1..f - 1 {
                // multiply by t
                let top = cur[f - 1];
                let mut next = vec![0u64; f];
                for i in (1..f).rev() {
                    next[i] = cur[i - 1];
                }
                next[0] = 0;
                for i in 0..f {
                    next[i] = addm(next[i], mulm(top, red[0][i], m), m);
                }
                red.push(next.clone());
                cur = next;
            }
        }
        self.red = red;
    }

    fn build_frobenius(&mut self) {
        let f = self.f;
        if f == 1 {
            self.frob_pow = vec![vec![1]];
            return;
        }
        // Start from t^p in F_q, Hensel-lift to a root of minpoly mod p^N.
        let mut r = self.raw_pow_basis_tpow(self.p);
        loop {
            let (val, der) = self.eval_minpoly_with_derivative(&r);
            if val.iter().all(|&c| c == 0) {
                break;
            }
            let dinv = self.invert_raw(&der).expect("minpoly derivative is a unit at the lifted root");
            let step = self.mul_raw(&val, &dinv);
            r = self.sub_raw(&r, &step);
        }
        let mut pows = vec![self.one_raw()];
        for i in 1..f {
            let prev = pows[i - 1].clone();
            pows.push(self.mul_raw(&prev, &r));
        }
        self.frob_pow = pows;
    }

    fn raw_pow_basis_tpow(&self, e: u64) -> Vec<u64> {
        // t^e reduced, computed by square and multiply on raw vectors.
        let mut t = vec![0u64; self.f];
        if self.f == 1 {
            t[0] = 0;
            return t;
        }
        t[1] = 1;
        let mut acc = self.one_raw();
        let mut base = t;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(&acc, &base);
            }
            base = self.mul_raw(&base, &base);
            e >>= 1;
        }
        acc
    }

    fn eval_minpoly_with_derivative(&self, x: &[u64]) -> (Vec<u64>, Vec<u64>) {
        let f = self.f;
        let m = self.modulus;
        // value = x^f + sum c_i x^i ; derivative = f x^{f-1} + sum i c_i x^{i-1}
        let mut pows = vec![self.one_raw()];
        for i in 1..=f {
            let prev = pows[i - 1].clone();
            pows.push(self.mul_raw(&prev, x));
        }
        let mut val = pows[f].clone();
        let mut der = self.scale_raw(&pows[f - 1], f as u64 % m);
        for i in 0..f {
            val = self.add_raw(&val, &self.scale_raw(&pows[i], self.minpoly[i]));
            if i >= 1 {
                der = self.add_raw(&der, &self.scale_raw(&pows[i - 1], mulm(self.minpoly[i], i as u64, m)));
            }
        }
        (val, der)
    }

    fn one_raw(&self) -> Vec<u64> {
        let mut v = vec![0u64; self.f];
        v[0] = 1;
        v
    }

    fn add_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(&x, &y)| addm(x, y, self.modulus)).collect()
    }

    fn sub_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(&x, &y)| subm(x, y, self.modulus)).collect()
    }

    fn scale_raw(&self, a: &[u64], c: u64) -> Vec<u64> {
        a.iter().map(|&x| mulm(x, c, self.modulus)).collect()
    }

    pub(crate) fn mul_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let f = self.f;
        let m = self.modulus;
        if f == 1 {
            return vec![mulm(a[0], b[0], m)];
        }
        let mut wide = vec![0u64; 2 * f - 1];
        for i in 0..f {
            if a[i] == 0 {
                continue;
            }
            for j in 0..f {
                wide[i + j] = addm(wide[i + j], mulm(a[i], b[j], m), m);
            }
        }
        let mut out = wide[..f].to_vec();
        for k in 0..f - 1 {
            let c = wide[f + k];
            if c != 0 {
                for i in 0..f {
                    out[i] = addm(out[i], mulm(c, self.red[k][i], m), m);
                }
            }
        }
        out
    }

    fn invert_raw(&self, a: &[u64]) -> Result<Vec<u64>, Error> {
        // Residue in F_q must be nonzero; Newton-iterate v <- v(2 - av).
        if a.iter().all(|&c| c % self.p == 0) {
            return Err(Error::NonUnit);
        }
        let mut v = self.fq_invert_residue(a);
        loop {
            let av = self.mul_raw(a, &v);
            if av == self.one_raw() {
                return Ok(v);
            }
            let two_minus = self.sub_raw(&self.scale_raw(&self.one_raw(), 2), &av);
            v = self.mul_raw(&v, &two_minus);
        }
    }

    fn fq_invert_residue(&self, a: &[u64]) -> Vec<u64> {
        // a^(q-2) mod p, lifted back as a vector mod p^N.
        let p = self.p;
        let red: Vec<u64> = a.iter().map(|&c| c % p).collect();
        let q = p.pow(self.f as u32);
        let mut acc = self.one_raw();
        let mut base: Vec<u64> = red;
        let mut e = q - 2;
        // square-and-multiply performed mod p only
        let mul_p = |x: &[u64], y: &[u64]| -> Vec<u64> {
            self.mul_raw(x, y).iter().map(|&c| c % p).collect()
        };
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_p(&acc, &base);
            }
            base = mul_p(&base, &base);
            e >>= 1;
        }
        acc
    }

    // ------------------------------------------------------------------
    // public scalar API
    // ------------------------------------------------------------------

    pub fn zero(&self) -> PadicScalar {
        PadicScalar { coords: vec![0; self.f], fp: self.fp }
    }

    pub fn one(&self) -> PadicScalar {
        PadicScalar { coords: self.one_raw(), fp: self.fp }
    }

    pub fn from_u64(&self, v: u64) -> PadicScalar {
        let mut s = self.zero();
        s.coords[0] = v % self.modulus;
        s
    }

    pub fn from_coords(&self, coords: Vec<u64>) -> Result<PadicScalar, Error> {
        if coords.len() != self.f || coords.iter().any(|&c| c >= self.modulus) {
            return Err(Error::Config("coordinate vector does not match configuration".into()));
        }
        Ok(PadicScalar { coords, fp: self.fp })
    }

    fn check(&self, a: &PadicScalar) -> Result<(), Error> {
        if a.fp != self.fp {
            return Err(Error::ConfigMismatch);
        }
        Ok(())
    }

    pub fn add(&self, a: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar, Error> {
        self.check(a)?;
        self.check(b)?;
        Ok(PadicScalar { coords: self.add_raw(&a.coords, &b.coords), fp: self.fp })
    }

    pub fn mul(&self, a: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar, Error> {
        self.check(a)?;
        self.check(b)?;
        Ok(PadicScalar { coords: self.mul_raw(&a.coords, &b.coords), fp: self.fp })
    }

    pub fn neg(&self, a: &PadicScalar) -> Result<PadicScalar, Error> {
        self.check(a)?;
        Ok(PadicScalar { coords: self.sub_raw(&vec![0; self.f], &a.coords), fp: self.fp })
    }

    pub fn sub(&self, a: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar, Error> {
        self.check(a)?;
        self.check(b)?;
        Ok(PadicScalar { coords: self.sub_raw(&a.coords, &b.coords), fp: self.fp })
    }

    /// Exact inverse of a unit (nonzero residue).
    pub fn invert(&self, a: &PadicScalar) -> Result<PadicScalar, Error> {
        self.check(a)?;
        Ok(PadicScalar { coords: self.invert_raw(&a.coords)?, fp: self.fp })
    }

    /// The ring automorphism lifting x -> x^p on the residue field,
    /// evaluated via the precomputed image of the power-basis generator.
    pub fn frobenius(&self, a: &PadicScalar) -> Result<PadicScalar, Error> {
        self.check(a)?;
        let mut out = vec![0u64; self.f];
        for i in 0..self.f {
            if a.coords[i] == 0 {
                continue;
            }
            let term = self.scale_raw(&self.frob_pow[i], a.coords[i]);
            out = self.add_raw(&out, &term);
        }
        Ok(PadicScalar { coords: out, fp: self.fp })
    }

    /// Teichmüller lift: the unique (q-1)-st root of unity with the given
    /// residue, obtained by iterating x -> x^q to its fixed point.
    pub fn teichmuller(&self, residue: &[u64]) -> Result<PadicScalar, Error> {
        if residue.len() != self.f {
            return Err(Error::Config("residue vector has wrong length".into()));
        }
        if residue.iter().all(|&c| c % self.p == 0) {
            return Err(Error::ZeroResidue);
        }
        let q = self.p.pow(self.f as u32);
        let mut x: Vec<u64> = residue.iter().map(|&c| c % self.p).collect();
        loop {
            let mut y = self.one_raw();
            let mut base = x.clone();
            let mut e = q;
            while e > 0 {
                if e & 1 == 1 {
                    y = self.mul_raw(&y, &base);
                }
                base = self.mul_raw(&base, &base);
                e >>= 1;
            }
            if y == x {
                return Ok(PadicScalar { coords: x, fp: self.fp });
            }
            x = y;
        }
    }

    /// Residue of `a` in F_q as coordinates mod p.
    pub fn residue(&self, a: &PadicScalar) -> Vec<u64> {
        a.coords.iter().map(|&c| c % self.p).collect()
    }

    /// Trace F_q -> F_p of the residue of `a` (sum of the Frobenius orbit).
    pub fn residue_trace(&self, a: &PadicScalar) -> Result<u64, Error> {
        self.check(a)?;
        let mut x = PadicScalar { coords: self.residue(a), fp: self.fp };
        let mut sum = self.zero();
        for _ in 0..self.f {
            sum = self.add(&sum, &x)?;
            x = self.frobenius(&x)?;
            x.coords.iter_mut().for_each(|c| *c %= self.p);
        }
        debug_assert!(sum.coords[1..].iter().all(|&c| c % self.p == 0));
        Ok(sum.coords[0] % self.p)
    }

    pub fn is_unit(&self, a: &PadicScalar) -> bool {
        a.coords.iter().any(|&c| c % self.p != 0)
    }

    pub fn fingerprint(&self) -> u64 {
        self.fp
    }
}

fn checked_pow(p: u64, n: u32) -> Result<u64, Error> {
    let mut m: u64 = 1;
    for _ in 0..n {
        m = m
            .checked_mul(p)
            .ok_or_else(|| Error::Config("p^N does not fit in 64 bits".into()))?;
    }
    Ok(m)
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}
