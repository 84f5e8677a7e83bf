//! Twisted group algebras over the truncated coefficient ring `R = I[[T]]`.
//!
//! One representation serves every ring in the engine: a free R-module on a
//! finite basis (a group or a quotient of one) with multiplication
//! `b_i * b_j = (1+T)^{c(i,j)} b_{m(i,j)}`, the cocycle exponent c coming from
//! the central carries of the big group. Instances:
//!
//! * `Main`    — `R[G-bar]^tau`, the ambient twisted group ring;
//! * `Sub(P)`  — `R[P]^tau = I(U_P)` for a subgroup P;
//! * `Ab(P)`   — `I(U_P^{ab}) = R[P/[P,P]]^tau`, the abelianized ring.
//!
//! Every map between instances is defined on basis elements with explicit
//! (1+T)-factors, so compositions are exact on the truncated models.

use crate::pgroup::{GElt, GroupModel};
use crate::series::{Series, SeriesRing};
use crate::zpn::{howell_form, howell_form_tracked, HowellBasis, ZpnMatrix, ZpnRing};
use crate::Error;
use std::rc::Rc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgKind {
    Main,
    Sub(usize),
    Ab(usize),
}

#[derive(Debug)]
pub struct Algebra {
    pub ring: Rc<SeriesRing>,
    pub group: Rc<GroupModel>,
    pub kind: AlgKind,
    pub dim: usize,
    pub width: usize,
    /// basis label: for Main/Sub the G-bar element; for Ab the class index
    pub basis: Vec<u16>,
    /// position of a G-bar element (Main/Sub) or class (Ab) in the basis
    pub pos: Vec<u16>,
    mul_tgt: Vec<u16>,
    mul_coc: Vec<i16>,
    pub commutative: bool,
}

/// Dense element: `dim` coefficient blocks of `ring.width` limbs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elt {
    pub c: Vec<u64>,
}

const NOPOS: u16 = u16::MAX;

impl Algebra {
    pub fn main(ring: Rc<SeriesRing>, group: Rc<GroupModel>) -> Algebra {
        let basis: Vec<u16> = (0..group.n as u16).collect();
        Algebra::from_group_basis(ring, group, basis, AlgKind::Main)
    }

    pub fn sub(ring: Rc<SeriesRing>, group: Rc<GroupModel>, pid: usize) -> Algebra {
        let basis = group.subgroups[pid].elems.clone();
        Algebra::from_group_basis(ring, group, basis, AlgKind::Sub(pid))
    }

    fn from_group_basis(
        ring: Rc<SeriesRing>,
        group: Rc<GroupModel>,
        basis: Vec<u16>,
        kind: AlgKind,
    ) -> Algebra {
        let dim = basis.len();
        let mut pos = vec![NOPOS; group.n];
        for (i, &g) in basis.iter().enumerate() {
            pos[g as usize] = i as u16;
        }
        let mut mul_tgt = vec![0u16; dim * dim];
        let mut mul_coc = vec![0i16; dim * dim];
        let mut commutative = true;
        for i in 0..dim {
            for j in 0..dim {
                let g = basis[i];
                let h = basis[j];
                let tgt = group.m(g, h);
                let c = group.c(g, h);
                let p = pos[tgt as usize];
                assert!(p != NOPOS, "basis not closed under multiplication");
                mul_tgt[i * dim + j] = p;
                mul_coc[i * dim + j] = c as i16;
                if group.m(h, g) != tgt {
                    commutative = false;
                }
            }
        }
        let width = dim * ring.width;
        Algebra { ring, group, kind, dim, width, basis, pos, mul_tgt, mul_coc, commutative }
    }

    pub fn ab(ring: Rc<SeriesRing>, group: Rc<GroupModel>, pid: usize) -> Algebra {
        let s = &group.subgroups[pid];
        let dim = s.ab_reps.len();
        let basis: Vec<u16> = (0..dim as u16).collect();
        let pos = basis.clone();
        let mut mul_tgt = vec![0u16; dim * dim];
        let mut mul_coc = vec![0i16; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                mul_tgt[i * dim + j] = s.ab_mul[i * dim + j];
                mul_coc[i * dim + j] = s.ab_cocycle[i * dim + j] as i16;
            }
        }
        let width = dim * ring.width;
        Algebra {
            ring,
            group,
            kind: AlgKind::Ab(pid),
            dim,
            width,
            basis,
            pos,
            mul_tgt,
            mul_coc,
            commutative: true,
        }
    }

    pub fn pid(&self) -> Option<usize> {
        match self.kind {
            AlgKind::Main => None,
            AlgKind::Sub(p) | AlgKind::Ab(p) => Some(p),
        }
    }

    // ------------------------------------------------------------------
    // element constructors and linear ops
    // ------------------------------------------------------------------

    pub fn zero(&self) -> Elt {
        Elt { c: vec![0; self.width] }
    }

    pub fn one(&self) -> Elt {
        let mut e = self.zero();
        e.c[0] = self.ring.mont.one;
        e
    }

    pub fn block<'a>(&self, e: &'a Elt, i: usize) -> &'a [u64] {
        &e.c[i * self.ring.width..(i + 1) * self.ring.width]
    }

    pub fn block_mut<'a>(&self, e: &'a mut Elt, i: usize) -> &'a mut [u64] {
        &mut e.c[i * self.ring.width..(i + 1) * self.ring.width]
    }

    /// Basis element with a (1+T)^t coefficient. For Main/Sub instances the
    /// label is a G-bar element, for Ab a class index.
    pub fn basis_elt(&self, label: u16, texp: i64) -> Elt {
        let i = self.pos[label as usize];
        assert!(i != NOPOS, "label not in basis");
        let mut e = self.zero();
        let one = self.ring.one();
        self.ring
            .acc_mul_tpow(self.block_mut(&mut e, i as usize), &one.c, texp);
        e
    }

    /// Big-group element (g, t) as a ring element (Main/Sub).
    pub fn gelt(&self, g: GElt) -> Elt {
        self.basis_elt(g.0, g.1)
    }

    /// Scalar series times the identity basis element.
    pub fn scalar(&self, s: &Series) -> Elt {
        let mut e = self.zero();
        self.block_mut(&mut e, 0).copy_from_slice(&s.c);
        e
    }

    pub fn add(&self, a: &Elt, b: &Elt) -> Elt {
        let m = self.ring.mont;
        Elt { c: a.c.iter().zip(&b.c).map(|(&x, &y)| m.add(x, y)).collect() }
    }

    pub fn sub_elt(&self, a: &Elt, b: &Elt) -> Elt {
        let m = self.ring.mont;
        Elt { c: a.c.iter().zip(&b.c).map(|(&x, &y)| m.sub(x, y)).collect() }
    }

    pub fn neg(&self, a: &Elt) -> Elt {
        let m = self.ring.mont;
        Elt { c: a.c.iter().map(|&x| m.sub(0, x)).collect() }
    }

    pub fn scale_series(&self, a: &Elt, s: &Series) -> Elt {
        let mut out = self.zero();
        for i in 0..self.dim {
            let blk = self.block(a, i);
            if blk.iter().all(|&x| x == 0) {
                continue;
            }
            self.ring.mul_acc(self.block_mut(&mut out, i), blk, &s.c);
        }
        out
    }

    pub fn scale_u64(&self, a: &Elt, v: u64) -> Elt {
        let m = self.ring.mont;
        let enc = m.encode(v);
        Elt { c: a.c.iter().map(|&x| m.mul(x, enc)).collect() }
    }

    pub fn is_zero(&self, a: &Elt) -> bool {
        a.c.iter().all(|&x| x == 0)
    }

    // ------------------------------------------------------------------
    // multiplication, powers, inverses
    // ------------------------------------------------------------------

    pub fn mul(&self, a: &Elt, b: &Elt) -> Elt {
        let mut out = self.zero();
        let rw = self.ring.width;
        let dim = self.dim;
        let mut scratch = vec![0u64; rw];
        for i in 0..dim {
            let ab = &a.c[i * rw..(i + 1) * rw];
            if ab.iter().all(|&x| x == 0) {
                continue;
            }
            for j in 0..dim {
                let bb = &b.c[j * rw..(j + 1) * rw];
                if bb.iter().all(|&x| x == 0) {
                    continue;
                }
                let tgt = self.mul_tgt[i * dim + j] as usize;
                let coc = self.mul_coc[i * dim + j] as i64;
                if coc == 0 {
                    self.ring.mul_acc(&mut out.c[tgt * rw..(tgt + 1) * rw], ab, bb);
                } else {
                    scratch.iter_mut().for_each(|x| *x = 0);
                    self.ring.mul_acc(&mut scratch, ab, bb);
                    self.ring
                        .acc_mul_tpow(&mut out.c[tgt * rw..(tgt + 1) * rw], &scratch, coc);
                }
            }
        }
        out
    }

    pub fn pow(&self, a: &Elt, k: u64) -> Elt {
        let mut acc = self.one();
        let mut base = a.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// Residue in F_q: image under basis -> 1, X, T -> 0, scalars -> mod p.
    pub fn residue(&self, a: &Elt) -> Vec<u64> {
        let p = self.ring.p();
        let f = self.ring.f;
        let mut out = vec![0u64; f];
        for i in 0..self.dim {
            let blk = self.block(a, i);
            for k in 0..f {
                out[k] = (out[k] + self.ring.mont.decode(blk[k])) % p;
            }
        }
        out
    }

    pub fn is_unit(&self, a: &Elt) -> bool {
        self.residue(a).iter().any(|&c| c != 0)
    }

    /// Teichmüller scalar lift of the residue of a unit.
    pub fn teich_scalar(&self, a: &Elt) -> Result<Series, Error> {
        let res = self.residue(a);
        if res.iter().all(|&c| c == 0) {
            return Err(Error::NonUnit);
        }
        let prime_w = self.ring.cfg.prime.at_precision(self.ring.n_w).unwrap();
        let z = prime_w.teichmuller(&res)?;
        Ok(self.ring.from_scalar_coords(&z.coords))
    }

    /// Exact two-sided inverse of a unit: Newton iteration seeded with the
    /// inverse Teichmüller lift; the radical part is nilpotent at truncation.
    pub fn invert(&self, a: &Elt) -> Result<Elt, Error> {
        if !self.is_unit(a) {
            return Err(Error::NonUnit);
        }
        let z = self.teich_scalar(a)?;
        let zinv = self.ring.invert(&z)?;
        let mut v = self.scalar(&zinv);
        let two = self.scale_u64(&self.one(), 2);
        for _ in 0..64 {
            let av = self.mul(a, &v);
            if av == self.one() {
                // check the left inverse as well; the ring is finite and
                // one-sided inverses of units coincide, but verify exactly
                debug_assert_eq!(self.mul(&v, a), self.one());
                return Ok(v);
            }
            v = self.mul(&v, &self.sub_elt(&two, &av));
        }
        Err(Error::PrecisionExhausted("unit inversion did not terminate".into()))
    }

    // ------------------------------------------------------------------
    // divisibility, comparison, serialization
    // ------------------------------------------------------------------

    pub fn divisible_by_p(&self, a: &Elt, k: u32) -> bool {
        let pk = self.ring.p_pows[k as usize];
        a.c.iter().all(|&x| x % pk == 0)
    }

    pub fn div_p_exact(&self, a: &Elt, k: u32) -> Option<Elt> {
        let pk = self.ring.p_pows[k as usize];
        if !self.divisible_by_p(a, k) {
            return None;
        }
        Some(Elt { c: a.c.iter().map(|&x| x / pk).collect() })
    }

    pub fn scale_pk(&self, a: &Elt, k: u32) -> Elt {
        self.scale_u64(a, self.ring.p_pows[k as usize])
    }

    pub fn eq_mod(&self, a: &Elt, b: &Elt, k: u32) -> bool {
        let pk = self.ring.p_pows[k as usize];
        a.c.iter().zip(&b.c).all(|(&x, &y)| self.ring.mont.sub(x, y) % pk == 0)
    }

    /// Sorted (basis label, sparse series) pairs decoded mod p^k.
    pub fn to_sparse(&self, a: &Elt, k: u32) -> Vec<(u16, Vec<(Vec<u32>, Vec<u64>)>)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            let s = Series { c: self.block(a, i).to_vec() };
            let sp = self.ring.to_sparse(&s, k);
            if !sp.is_empty() {
                out.push((self.basis[i], sp));
            }
        }
        out
    }

    // ------------------------------------------------------------------
    // structural maps
    // ------------------------------------------------------------------

    /// Sub(P) -> Main embedding (or Sub(P) -> Sub(P') for P <= P').
    pub fn embed_into(&self, tgt: &Algebra, a: &Elt) -> Elt {
        let mut out = tgt.zero();
        for i in 0..self.dim {
            let blk = self.block(a, i);
            if blk.iter().all(|&x| x == 0) {
                continue;
            }
            let g = self.basis[i];
            let j = tgt.pos[g as usize];
            assert!(j != NOPOS, "embedding target does not contain basis element");
            tgt.block_mut(&mut out, j as usize).copy_from_slice(blk);
        }
        out
    }

    /// Projection `R[P]^tau -> I(U_P^{ab})`: basis g -> class(g), coefficient
    /// unchanged (central exponents pass through the quotient).
    pub fn project_ab(&self, ab: &Algebra, a: &Elt) -> Elt {
        let pid = ab.pid().expect("target must be an abelianized instance");
        let s = &self.group.subgroups[pid];
        let mut out = ab.zero();
        let m = self.ring.mont;
        for i in 0..self.dim {
            let blk = self.block(a, i);
            if blk.iter().all(|&x| x == 0) {
                continue;
            }
            let g = self.basis[i];
            let cls = s.ab_class_of[g as usize];
            assert!(cls != u16::MAX, "element outside the subgroup");
            let outb = ab.block_mut(&mut out, cls as usize);
            for (o, &x) in outb.iter_mut().zip(blk) {
                *o = m.add(*o, x);
            }
        }
        out
    }

    /// Ab(P) -> Main/Sub embedding for P with trivial derived subgroup
    /// (classes are elements).
    pub fn embed_ab_into(&self, tgt: &Algebra, a: &Elt) -> Elt {
        let pid = self.pid().expect("source must be an abelianized instance");
        let s = &self.group.subgroups[pid];
        assert_eq!(s.derived.len(), 1, "only defined when [P,P] is trivial");
        let mut out = tgt.zero();
        for i in 0..self.dim {
            let blk = self.block(a, i);
            if blk.iter().all(|&x| x == 0) {
                continue;
            }
            let g = s.ab_reps[i];
            let j = tgt.pos[g as usize];
            assert!(j != NOPOS);
            tgt.block_mut(&mut out, j as usize).copy_from_slice(blk);
        }
        out
    }

    /// Conjugation transport x -> g x g^{-1}: Ab(P) -> Ab(gPg^{-1}), or
    /// Main -> Main / Sub -> Sub of the conjugate.
    pub fn conj_transport(&self, tgt: &Algebra, a: &Elt, g: u16) -> Elt {
        let mut out = tgt.zero();
        match self.kind {
            AlgKind::Main | AlgKind::Sub(_) => {
                for i in 0..self.dim {
                    let blk = self.block(a, i);
                    if blk.iter().all(|&x| x == 0) {
                        continue;
                    }
                    let img = self.group.gconj(g, (self.basis[i], 0));
                    let j = tgt.pos[img.0 as usize];
                    assert!(j != NOPOS);
                    tgt.ring
                        .acc_mul_tpow(tgt.block_mut(&mut out, j as usize), blk, img.1);
                }
            }
            AlgKind::Ab(pid) => {
                let s = &self.group.subgroups[pid];
                let tpid = tgt.pid().expect("conjugation target must be abelianized");
                let ts = &self.group.subgroups[tpid];
                for i in 0..self.dim {
                    let blk = self.block(a, i);
                    if blk.iter().all(|&x| x == 0) {
                        continue;
                    }
                    let rep = s.ab_reps[i];
                    let img = self.group.gconj(g, (rep, 0));
                    let cls = ts.ab_class_of[img.0 as usize];
                    assert!(cls != u16::MAX);
                    tgt.ring
                        .acc_mul_tpow(tgt.block_mut(&mut out, cls as usize), blk, img.1);
                }
            }
        }
        out
    }

    /// Frobenius transport Ab(P') -> Ab(P) when (P')^p <= P: scalars and
    /// series variables through phi, basis classes through p-th powers with
    /// their central carries.
    pub fn frobenius_into(&self, tgt: &Algebra, a: &Elt) -> Elt {
        let pid = self.pid().expect("source must be Ab");
        let tpid = tgt.pid().expect("target must be Ab");
        let s = &self.group.subgroups[pid];
        let ts = &self.group.subgroups[tpid];
        let mut out = tgt.zero();
        for i in 0..self.dim {
            let blk = self.block(a, i);
            if blk.iter().all(|&x| x == 0) {
                continue;
            }
            let rep = s.ab_reps[i];
            let img = self.group.gpow((rep, 0), self.group.p);
            let cls = ts.ab_class_of[img.0 as usize];
            assert!(cls != u16::MAX, "p-th power left the target subgroup");
            let fs = self.ring.frobenius(&Series { c: blk.to_vec() });
            tgt.ring
                .acc_mul_tpow(tgt.block_mut(&mut out, cls as usize), &fs.c, img.1);
        }
        out
    }

    /// Transfer-induced ring map ver: Ab(P') -> Ab(P) for P <= P' of index p,
    /// twisted by the Frobenius on coefficients (the two agree on the central
    /// T-part, where the transfer raises to the p-th power). This is the map
    /// of the transfer congruence: the plain scalar-fixing transfer fails it
    /// already on an X-coefficient.
    pub fn ver_frobenius_into(&self, tgt: &Algebra, a: &Elt) -> Result<Elt, Error> {
        let ppid = self.pid().expect("source must be Ab");
        let pid = tgt.pid().expect("target must be Ab");
        let g = &self.group;
        let sp = &g.subgroups[ppid];
        let st = &g.subgroups[pid];
        if st.mask & sp.mask != st.mask {
            return Err(Error::BadChain);
        }
        if sp.order != st.order * g.p as usize {
            return Err(Error::BadChain);
        }
        let reps = g.left_coset_reps(pid, ppid);
        let mut out = tgt.zero();
        for i in 0..self.dim {
            let blk = self.block(a, i);
            if blk.iter().all(|&x| x == 0) {
                continue;
            }
            let rep = sp.ab_reps[i];
            let (cls, texp) = g.transfer_with_reps((rep, 0), pid, ppid, &reps)?;
            let cs = self.ring.frobenius(&Series { c: blk.to_vec() });
            tgt.ring
                .acc_mul_tpow(tgt.block_mut(&mut out, cls as usize), &cs.c, texp);
        }
        Ok(out)
    }

    /// Transfer-induced ring map ver: Ab(P') -> Ab(P) for P <= P', I-linear
    /// on the series coefficients. Coefficients go through
    /// T -> (1+T)^{[P':P]} - 1; classes through the group transfer.
    pub fn ver_into(&self, tgt: &Algebra, a: &Elt) -> Result<Elt, Error> {
        let ppid = self.pid().expect("source must be Ab");
        let pid = tgt.pid().expect("target must be Ab");
        let g = &self.group;
        let sp = &g.subgroups[ppid];
        let st = &g.subgroups[pid];
        if st.mask & sp.mask != st.mask {
            return Err(Error::BadChain);
        }
        let index = (sp.order / st.order) as u64;
        let reps = g.left_coset_reps(pid, ppid);
        let mut out = tgt.zero();
        for i in 0..self.dim {
            let blk = self.block(a, i);
            if blk.iter().all(|&x| x == 0) {
                continue;
            }
            let rep = sp.ab_reps[i];
            let (cls, texp) = g.transfer_with_reps((rep, 0), pid, ppid, &reps)?;
            let cs = self.ring.subst_t(&Series { c: blk.to_vec() }, index);
            tgt.ring
                .acc_mul_tpow(tgt.block_mut(&mut out, cls as usize), &cs.c, texp);
        }
        Ok(out)
    }
}

// ----------------------------------------------------------------------
// matrices, determinants, K_1 representatives
// ----------------------------------------------------------------------

/// Dense square matrix over an algebra.
pub struct Matrix {
    pub n: usize,
    pub entries: Vec<Elt>,
}

impl Matrix {
    pub fn at(&self, i: usize, j: usize) -> &Elt {
        &self.entries[i * self.n + j]
    }
}

/// Division-free determinant (Samuelson-Berkowitz) over a commutative
/// algebra. The truncated rings have zero divisors, so elimination with
/// division is not available in general.
pub fn berkowitz_det(alg: &Algebra, m: &Matrix) -> Elt {
    assert!(alg.commutative, "determinant requires a commutative algebra");
    let n = m.n;
    if n == 0 {
        return alg.one();
    }
    // c: coefficients of the characteristic polynomial, built up by
    // premultiplying Toeplitz matrices; c has length k+1 after step k.
    let mut c: Vec<Elt> = vec![alg.one()];
    for k in 1..=n {
        // data of the k-th leading principal submatrix
        let a_kk = m.at(k - 1, k - 1).clone();
        // row R = M[k-1][0..k-1], col C = M[0..k-1][k-1]
        // s_j = R * A_{k-1}^{j} * C for j = 0..k-2
        let mut svals: Vec<Elt> = Vec::new();
        if k >= 2 {
            let mut v: Vec<Elt> = (0..k - 1).map(|i| m.at(i, k - 1).clone()).collect();
            for _ in 0..k - 1 {
                let mut dot = alg.zero();
                for i in 0..k - 1 {
                    dot = alg.add(&dot, &alg.mul(m.at(k - 1, i), &v[i]));
                }
                svals.push(dot);
                // v = A_{k-1} * v
                let mut nv: Vec<Elt> = Vec::with_capacity(k - 1);
                for i in 0..k - 1 {
                    let mut acc = alg.zero();
                    for j in 0..k - 1 {
                        acc = alg.add(&acc, &alg.mul(m.at(i, j), &v[j]));
                    }
                    nv.push(acc);
                }
                v = nv;
            }
        }
        // Toeplitz column: t_0 = 1, t_1 = -a_kk, t_{j} = -s_{j-2} for j >= 2
        let mut tcol: Vec<Elt> = Vec::with_capacity(k + 1);
        tcol.push(alg.one());
        tcol.push(alg.neg(&a_kk));
        for j in 2..=k {
            tcol.push(alg.neg(&svals[j - 2]));
        }
        // c_new[i] = sum_{j} tcol[i - j] * c[j]
        let mut cn: Vec<Elt> = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let mut acc = alg.zero();
            for (j, cj) in c.iter().enumerate() {
                if i >= j && i - j < tcol.len() {
                    acc = alg.add(&acc, &alg.mul(&tcol[i - j], cj));
                }
            }
            cn.push(acc);
        }
        c = cn;
    }
    // char(x) = sum c[i] x^{n-i} with c[0] = 1; det = (-1)^n * c[n]
    let det = c.pop().unwrap();
    if n % 2 == 1 {
        alg.neg(&det)
    } else {
        det
    }
}

/// Determinant of a monomial matrix (exactly one nonzero entry per row and
/// column): permutation sign times the product of the entries.
pub fn monomial_det(alg: &Algebra, m: &Matrix) -> Option<Elt> {
    let n = m.n;
    let mut perm = vec![usize::MAX; n];
    for i in 0..n {
        let mut nz = None;
        for j in 0..n {
            if !alg.is_zero(m.at(i, j)) {
                if nz.is_some() {
                    return None;
                }
                nz = Some(j);
            }
        }
        let j = nz?;
        if perm.iter().any(|&x| x == j) {
            return None;
        }
        perm[i] = j;
    }
    // sign = (-1)^{n - #cycles}
    let mut seen = vec![false; n];
    let mut cycles = 0;
    for i in 0..n {
        if !seen[i] {
            cycles += 1;
            let mut x = i;
            while !seen[x] {
                seen[x] = true;
                x = perm[x];
            }
        }
    }
    let mut det = alg.one();
    for i in 0..n {
        det = alg.mul(&det, m.at(i, perm[i]));
    }
    if (n - cycles) % 2 == 1 {
        det = alg.neg(&det);
    }
    Some(det)
}

/// Reduce an invertible matrix over a (possibly noncommutative) local
/// algebra to diagonal form by elementary row operations; the product of the
/// diagonal entries represents the K_1 class of the matrix up to a sign and
/// elementary factors, which vanish in the logarithm's target.
pub fn k1_unit_rep(alg: &Algebra, m: &Matrix) -> Result<Elt, Error> {
    let n = m.n;
    let mut a: Vec<Elt> = m.entries.clone();
    let at = |a: &Vec<Elt>, i: usize, j: usize| -> Elt { a[i * n + j].clone() };
    for k in 0..n {
        // unit pivot in column k at row >= k (exists for invertible matrices
        // over a local ring)
        let mut piv = None;
        for i in k..n {
            if alg.is_unit(&a[i * n + k]) {
                piv = Some(i);
                break;
            }
        }
        let Some(pi) = piv else {
            return Err(Error::NonUnit);
        };
        if pi != k {
            for j in 0..n {
                a.swap(k * n + j, pi * n + j);
            }
        }
        let pinv = alg.invert(&a[k * n + k])?;
        for i in 0..n {
            if i == k {
                continue;
            }
            let lam = alg.mul(&at(&a, i, k), &pinv);
            if alg.is_zero(&lam) {
                continue;
            }
            for j in 0..n {
                let t = alg.mul(&lam, &at(&a, k, j));
                a[i * n + j] = alg.sub_elt(&at(&a, i, j), &t);
            }
        }
    }
    let mut prod = alg.one();
    for k in 0..n {
        prod = alg.mul(&prod, &a[k * n + k]);
    }
    Ok(prod)
}

// ----------------------------------------------------------------------
// coset decomposition and the theta / norm / trace / projection maps
// ----------------------------------------------------------------------

/// Decomposition data for U_P inside U_{P'} (or the full group): the module
/// `I(U_{P'}) = ⊕ I(U_P) c_i` uses right cosets `U_P c_i`, so every G-bar
/// element w of the supergroup splits as w = u * c_j with u in P.
pub struct Cosets {
    pub reps: Vec<u16>,
    /// indexed by G-bar element: (rep index, P-part, central exponent)
    pub decomp: Vec<(u16, u16, i64)>,
}

/// Minimal right coset representatives of `sub` inside `sup`.
pub fn right_coset_reps(g: &GroupModel, sub: usize, sup: usize) -> Vec<u16> {
    let s = &g.subgroups[sub];
    let t = &g.subgroups[sup];
    assert!(s.mask & t.mask == s.mask, "not a subgroup chain");
    let mut reps = Vec::new();
    let mut covered: u128 = 0;
    for &x in &t.elems {
        if covered & (1u128 << x) != 0 {
            continue;
        }
        reps.push(x);
        for &h in &s.elems {
            covered |= 1u128 << g.m(h, x);
        }
    }
    reps
}

pub fn build_cosets(g: &GroupModel, pid: usize, sup_elems: &[u16], reps: Vec<u16>) -> Cosets {
    let s = &g.subgroups[pid];
    let mut decomp = vec![(u16::MAX, 0u16, 0i64); g.n];
    for &w in sup_elems {
        let mut found = false;
        for (j, &cj) in reps.iter().enumerate() {
            let u = g.gmul((w, 0), g.ginv((cj, 0)));
            if s.mask & (1u128 << u.0) != 0 {
                decomp[w as usize] = (j as u16, u.0, u.1);
                found = true;
                break;
            }
        }
        assert!(found, "coset representatives do not cover the supergroup");
    }
    Cosets { reps, decomp }
}

/// Matrix of right multiplication by `u` (an element of the ambient algebra
/// `amb`, with basis inside the supergroup) on the free module
/// ⊕ I(U_P) c_i, with entries in `sub` = Sub(P).
pub fn mult_matrix(amb: &Algebra, sub: &Algebra, cosets: &Cosets, u: &Elt) -> Matrix {
    let n = cosets.reps.len();
    let g = &amb.group;
    let mut entries = vec![sub.zero(); n * n];
    for bi in 0..amb.dim {
        let blk = amb.block(u, bi);
        if blk.iter().all(|&x| x == 0) {
            continue;
        }
        let ge = amb.basis[bi];
        for (i, &ci) in cosets.reps.iter().enumerate() {
            // c_i * g = (w, t1), then w = c_j * (u_g, u_t)
            let w = g.gmul((ci, 0), (ge, 0));
            let (j, ug, ut) = cosets.decomp[w.0 as usize];
            let texp = w.1 + ut;
            let spos = sub.pos[ug as usize] as usize;
            let e = &mut entries[i * n + j as usize];
            sub.ring
                .acc_mul_tpow(&mut e.c[spos * sub.ring.width..(spos + 1) * sub.ring.width], blk, texp);
        }
    }
    Matrix { n, entries }
}

/// theta_ab: the composite K_1(ambient) -> K_1(I(U_P)) -> I(U_P^{ab})^*,
/// realized as det of the multiplication matrix with entries projected to
/// the abelianized ring.
pub fn theta_ab(
    amb: &Algebra,
    sub: &Algebra,
    ab: &Algebra,
    cosets: &Cosets,
    u: &Elt,
) -> Result<Elt, Error> {
    if !amb.is_unit(u) {
        return Err(Error::NonUnit);
    }
    let m = mult_matrix(amb, sub, cosets, u);
    // project entries
    let mab = Matrix {
        n: m.n,
        entries: m.entries.iter().map(|e| sub.project_ab(ab, e)).collect(),
    };
    let det = match monomial_det(ab, &mab) {
        Some(d) => d,
        None => berkowitz_det(ab, &mab),
    };
    if !ab.is_unit(&det) {
        return Err(Error::NonUnit);
    }
    Ok(det)
}

/// K_1-level restriction: a unit of I(U_P) representing the class of the
/// multiplication matrix of `u`.
pub fn restrict_k1(amb: &Algebra, sub: &Algebra, cosets: &Cosets, u: &Elt) -> Result<Elt, Error> {
    if !amb.is_unit(u) {
        return Err(Error::NonUnit);
    }
    let m = mult_matrix(amb, sub, cosets, u);
    k1_unit_rep(sub, &m)
}

/// Class-level coset data inside an abelianized ring: the basis classes of
/// Ab(P') partitioned into cosets of the image Q of U_P.
pub struct AbCosets {
    /// classes forming Q (sorted)
    pub q_classes: Vec<u16>,
    /// coset representatives (class indices)
    pub reps: Vec<u16>,
    /// for each class: (rep index, q-class, cocycle exponent) with
    /// basis(c) = (1+T)^{-m(q, r_j)} basis(q) basis(r_j)
    pub decomp: Vec<(u16, u16, i64)>,
}

pub fn build_ab_cosets(g: &GroupModel, ab_pid: usize, q_classes: Vec<u16>) -> AbCosets {
    let s = &g.subgroups[ab_pid];
    let k = s.ab_reps.len();
    let mut reps = Vec::new();
    let mut covered = vec![false; k];
    for c in 0..k as u16 {
        if covered[c as usize] {
            continue;
        }
        reps.push(c);
        for &q in &q_classes {
            covered[s.ab_mul[q as usize * k + c as usize] as usize] = true;
        }
    }
    let mut decomp = vec![(u16::MAX, 0u16, 0i64); k];
    for c in 0..k as u16 {
        'outer: for (j, &r) in reps.iter().enumerate() {
            // find q in Q with q*r = c
            for &q in &q_classes {
                if s.ab_mul[q as usize * k + r as usize] == c {
                    let m = s.ab_cocycle[q as usize * k + r as usize];
                    decomp[c as usize] = (j as u16, q, -m);
                    break 'outer;
                }
            }
        }
        assert!(decomp[c as usize].0 != u16::MAX, "class decomposition failed");
    }
    AbCosets { q_classes, reps, decomp }
}

/// Matrix of right multiplication by x on Ab(P') over the subring spanned by
/// Q, with entries supported on Q.
pub fn ab_mult_matrix(ab: &Algebra, cosets: &AbCosets, x: &Elt) -> Matrix {
    let g = &ab.group;
    let pid = ab.pid().unwrap();
    let s = &g.subgroups[pid];
    let k = ab.dim;
    let n = cosets.reps.len();
    let mut entries = vec![ab.zero(); n * n];
    for b in 0..ab.dim {
        let blk = ab.block(x, b);
        if blk.iter().all(|&x| x == 0) {
            continue;
        }
        for (i, &ri) in cosets.reps.iter().enumerate() {
            // r_i * b = (1+T)^{m} class(rb); rb = (1+T)^{-m(q,rj)} q*r_j
            let rb = s.ab_mul[ri as usize * k + b] as usize;
            let m1 = s.ab_cocycle[ri as usize * k + b];
            let (j, q, madj) = cosets.decomp[rb];
            let texp = m1 + madj;
            let e = &mut entries[i * n + j as usize];
            ab.ring
                .acc_mul_tpow(&mut e.c[q as usize * ab.ring.width..(q as usize + 1) * ab.ring.width], blk, texp);
        }
    }
    Matrix { n, entries }
}

/// Norm, trace and projection I(U_{P'}^{ab}) -> I(U_P / [U_{P'},U_{P'}]),
/// the target realized as the Q-supported part of Ab(P').
pub enum NtpKind {
    Norm,
    Trace,
    Proj,
}

pub fn norm_trace_proj(
    ab: &Algebra,
    cosets: &AbCosets,
    x: &Elt,
    which: NtpKind,
) -> Result<Elt, Error> {
    match which {
        NtpKind::Proj => {
            let mut out = ab.zero();
            for &q in &cosets.q_classes {
                let blk = ab.block(x, q as usize);
                ab.block_mut(&mut out, q as usize).copy_from_slice(blk);
            }
            Ok(out)
        }
        NtpKind::Trace => {
            let m = ab_mult_matrix(ab, cosets, x);
            let mut tr = ab.zero();
            for i in 0..m.n {
                tr = ab.add(&tr, m.at(i, i));
            }
            Ok(tr)
        }
        NtpKind::Norm => {
            if !ab.is_unit(x) {
                return Err(Error::NonUnit);
            }
            let m = ab_mult_matrix(ab, cosets, x);
            let det = match monomial_det(ab, &m) {
                Some(d) => d,
                None => berkowitz_det(ab, &m),
            };
            Ok(det)
        }
    }
}

// ----------------------------------------------------------------------
// commutator module, conjugacy quotient, trace ideals
// ----------------------------------------------------------------------

/// The conjugacy-class quotient machinery of a Main/Sub algebra. The
/// commutator submodule K is spanned by gh-term minus hg-term over basis
/// pairs tensored with all monomials; the central carries of gh and hg agree
/// (the cocycle is symmetric), so K factors as K_grp ⊗ (monomial space) and
/// the Howell data lives on the group coordinates.
pub struct ConjModule {
    pub dim: usize,
    pub k_grp: HowellBasis,
    pub zring: ZpnRing,
    /// cached Howell bases of span(p^k * I  ∪  K_grp) per exponent k
    div_bases: std::cell::RefCell<std::collections::BTreeMap<u32, Rc<HowellBasis>>>,
}

impl ConjModule {
    pub fn new(alg: &Algebra) -> ConjModule {
        assert!(matches!(alg.kind, AlgKind::Main | AlgKind::Sub(_)));
        let g = &alg.group;
        let dim = alg.dim;
        let zring = ZpnRing::new(alg.ring.p(), alg.ring.n_w);
        let mut rows: Vec<Vec<u64>> = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let a = alg.basis[i];
                let b = alg.basis[j];
                // symmetric carries: verified here, relied on everywhere
                assert_eq!(g.c(a, b), g.c(b, a), "central carry cocycle must be symmetric");
                let ab = g.m(a, b);
                let ba = g.m(b, a);
                if ab == ba {
                    continue;
                }
                let mut row = vec![0u64; dim];
                row[alg.pos[ab as usize] as usize] = 1;
                row[alg.pos[ba as usize] as usize] = zring.modulus - 1;
                rows.push(row);
            }
        }
        let m = ZpnMatrix::from_rows(dim, rows);
        let k_grp = howell_form(&zring, &m);
        ConjModule { dim, k_grp, zring, div_bases: Default::default() }
    }

    /// Reduce an element to the canonical conjugacy-quotient representative
    /// (Howell reduction applied per (monomial, limb) slice).
    pub fn reduce(&self, alg: &Algebra, a: &Elt) -> Elt {
        let rw = alg.ring.width;
        let mut out = alg.zero();
        let mut slice = vec![0u64; self.dim];
        for w in 0..rw {
            for i in 0..self.dim {
                slice[i] = a.c[i * rw + w];
            }
            if slice.iter().all(|&x| x == 0) {
                continue;
            }
            let red = self.k_grp.reduce(&slice);
            for i in 0..self.dim {
                out.c[i * rw + w] = red[i];
            }
        }
        out
    }

    /// a ≡ b modulo (K + p^k * lattice)?
    pub fn eq_mod(&self, alg: &Algebra, a: &Elt, b: &Elt, k: u32) -> bool {
        let d = alg.sub_elt(a, b);
        self.in_span_mod(alg, &d, k)
    }

    /// membership of v in K + p^k * lattice
    pub fn in_span_mod(&self, alg: &Algebra, v: &Elt, k: u32) -> bool {
        let rw = alg.ring.width;
        let pk = alg.ring.p_pows[k as usize];
        let mut slice = vec![0u64; self.dim];
        for w in 0..rw {
            for i in 0..self.dim {
                slice[i] = v.c[i * rw + w];
            }
            if slice.iter().all(|&x| x == 0) {
                continue;
            }
            let red = self.k_grp.reduce(&slice);
            if red.iter().any(|&x| x % pk != 0) {
                return false;
            }
        }
        true
    }

    fn div_basis(&self, k: u32) -> Rc<HowellBasis> {
        let mut cache = self.div_bases.borrow_mut();
        if let Some(b) = cache.get(&k) {
            return b.clone();
        }
        // generators: p^k e_i, then the commutator rows
        let mut rows: Vec<Vec<u64>> = Vec::new();
        let pk = self.zring.p.pow(k);
        for i in 0..self.dim {
            let mut r = vec![0u64; self.dim];
            r[i] = pk;
            rows.push(r);
        }
        for r in &self.k_grp.rows {
            rows.push(r.clone());
        }
        let m = ZpnMatrix::from_rows(self.dim, rows);
        let h = Rc::new(howell_form_tracked(&self.zring, &m, true));
        cache.insert(k, h.clone());
        h
    }

    /// Exact division by p^k in the conjugacy quotient: find c with
    /// p^k c ≡ v (mod K), if it exists. The result is correct modulo
    /// p^{n_w - k}.
    pub fn div_p_mod_comm(&self, alg: &Algebra, v: &Elt, k: u32) -> Option<Elt> {
        if k == 0 {
            return Some(v.clone());
        }
        let basis = self.div_basis(k);
        let rw = alg.ring.width;
        let mut out = alg.zero();
        let mut slice = vec![0u64; self.dim];
        for w in 0..rw {
            for i in 0..self.dim {
                slice[i] = v.c[i * rw + w];
            }
            if slice.iter().all(|&x| x == 0) {
                continue;
            }
            let sol = basis.solve(&slice).expect("tracked basis")?;
            for i in 0..self.dim {
                // the first dim generators are p^k e_i; their coefficients
                // form the quotient
                out.c[i * rw + w] = sol[i];
            }
        }
        Some(out)
    }
}

/// kappa: canonical conjugacy-quotient representative of a ring element.
pub fn kappa(alg: &Algebra, cm: &ConjModule, a: &Elt) -> Elt {
    cm.reduce(alg, a)
}

/// Trace ideal `T_P = { sum_{w in W(P)} w x w^{-1} : x in R[P]^tau }` as a
/// Howell basis over the flattened Sub(P) coordinates.
pub fn trace_ideal_p(sub: &Algebra) -> HowellBasis {
    let pid = sub.pid().expect("Sub instance required");
    let g = &sub.group;
    let s = &g.subgroups[pid];
    let zring = ZpnRing::new(sub.ring.p(), sub.ring.n_w);
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let rw = sub.ring.width;
    for i in 0..sub.dim {
        for mono in 0..sub.ring.n_mono {
            for limb in 0..sub.ring.f {
                // basis vector: coefficient e_{mono,limb} on group element i
                let mut x = sub.zero();
                x.c[i * rw + mono * sub.ring.f + limb] = sub.ring.mont.one;
                let mut acc = sub.zero();
                for &w in &s.weyl_reps {
                    acc = sub.add(&acc, &sub.conj_transport(sub, &x, w));
                }
                if !sub.is_zero(&acc) {
                    rows.push(acc.c);
                }
            }
        }
    }
    let m = ZpnMatrix::from_rows(sub.width, rows);
    howell_form(&zring, &m)
}

/// Trace ideal T_{P,P'} inside Ab(P) for P normal of index p in P':
/// image of x -> sum_{g in P'/P} g x g^{-1}.
pub fn trace_ideal_pair(ab: &Algebra, ppid: usize) -> Result<HowellBasis, Error> {
    let pid = ab.pid().expect("Ab instance required");
    let g = &ab.group;
    let sp = &g.subgroups[ppid];
    let s = &g.subgroups[pid];
    if s.mask & sp.mask != s.mask {
        return Err(Error::NotSubgroupChain);
    }
    // conjugation by P' must fix P (index-p subgroups of p-groups are
    // normal; verify)
    for &x in &sp.elems {
        for &e in &s.elems {
            if s.mask & (1u128 << g.gconj(x, (e, 0)).0) == 0 {
                return Err(Error::BadChain);
            }
        }
    }
    let reps = g.left_coset_reps(pid, ppid);
    let zring = ZpnRing::new(ab.ring.p(), ab.ring.n_w);
    let rw = ab.ring.width;
    let mut rows = Vec::new();
    for i in 0..ab.dim {
        for mono in 0..ab.ring.n_mono {
            for limb in 0..ab.ring.f {
                let mut x = ab.zero();
                x.c[i * rw + mono * ab.ring.f + limb] = ab.ring.mont.one;
                let mut acc = ab.zero();
                for &w in &reps {
                    acc = ab.add(&acc, &ab.conj_transport(ab, &x, w));
                }
                if !ab.is_zero(&acc) {
                    rows.push(acc.c);
                }
            }
        }
    }
    let m = ZpnMatrix::from_rows(ab.width, rows);
    Ok(howell_form(&zring, &m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrimeConfig;
    use crate::pgroup::GroupModel;
    use crate::series::SeriesConfig;

    fn setup(name: &str, n_w: u32, d: u32, dt: u32) -> (Rc<SeriesRing>, Rc<GroupModel>) {
        let prime = PrimeConfig::new(3, 1, 4).unwrap();
        let cfg = SeriesConfig::new(prime, 1, d, dt).unwrap();
        let ring = Rc::new(SeriesRing::new(cfg, n_w).unwrap());
        let group = Rc::new(GroupModel::catalog(name, 3).unwrap());
        (ring, group)
    }

    struct Rng(u64);
    impl Rng {
        fn next(&mut self) -> u64 {
            self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        }
        fn elt(&mut self, a: &Algebra) -> Elt {
            Elt { c: (0..a.width).map(|_| self.next() % a.ring.modulus).collect() }
        }
        fn unit(&mut self, a: &Algebra) -> Elt {
            loop {
                let e = self.elt(a);
                if a.is_unit(&e) {
                    return e;
                }
            }
        }
    }

    #[test]
    fn cp_generator_pth_power_is_one_plus_t() {
        // G-bar = C_3 (trivial H, e=1): g^3 accumulates exactly one carry
        let (ring, group) = setup("c3", 6, 2, 2);
        let alg = Algebra::main(ring.clone(), group.clone());
        let gidx = 1u16; // gamma-exponent 1
        let g = alg.gelt((gidx, 0));
        let g3 = alg.pow(&g, 3);
        let expect = alg.basis_elt(0, 1); // (1+T) * identity
        assert_eq!(g3, expect);
    }

    #[test]
    fn identity_and_associativity() {
        for name in ["c9", "heis27", "m27"] {
            let (ring, group) = setup(name, 6, 2, 2);
            let alg = Algebra::main(ring, group);
            let mut r = Rng(1);
            for _ in 0..12 {
                let a = r.elt(&alg);
                let b = r.elt(&alg);
                let c = r.elt(&alg);
                assert_eq!(alg.mul(&a, &alg.one()), a);
                assert_eq!(alg.mul(&alg.one(), &a), a);
                let lhs = alg.mul(&alg.mul(&a, &b), &c);
                let rhs = alg.mul(&a, &alg.mul(&b, &c));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn invert_group_elements_and_series_units() {
        let (ring, group) = setup("m27", 6, 2, 2);
        let alg = Algebra::main(ring.clone(), group.clone());
        for gi in 0..group.n as u16 {
            let g = alg.gelt((gi, 0));
            let inv = alg.invert(&g).unwrap();
            assert_eq!(alg.mul(&g, &inv), alg.one());
            assert_eq!(alg.mul(&inv, &g), alg.one());
        }
        // 1 + p X g agrees with the geometric series inverse
        let x = ring.monomial(&[1, 0], 3);
        let term = alg.scale_series(&alg.gelt((5, 0)), &x);
        let u = alg.add(&alg.one(), &term);
        let inv = alg.invert(&u).unwrap();
        let mut geo = alg.one();
        let mut pw = alg.one();
        for _ in 0..6 {
            pw = alg.neg(&alg.mul(&pw, &term));
            geo = alg.add(&geo, &pw);
        }
        assert_eq!(inv, geo);
        let mut r = Rng(2);
        for _ in 0..40 {
            let u = r.unit(&alg);
            let v = alg.invert(&u).unwrap();
            assert_eq!(alg.mul(&u, &v), alg.one());
        }
    }

    #[test]
    fn invert_hundred_units_per_catalog_group() {
        for name in crate::pgroup::CATALOG {
            let (ring, group) = setup(name, 5, 1, 1);
            let alg = Algebra::main(ring, group);
            let mut r = Rng(0xbeef);
            for _ in 0..100 {
                let u = r.unit(&alg);
                let v = alg.invert(&u).unwrap();
                assert_eq!(alg.mul(&u, &v), alg.one());
                assert_eq!(alg.mul(&v, &u), alg.one());
            }
        }
    }

    #[test]
    fn kappa_symmetry_and_abelian_identity() {
        let (ring, group) = setup("heis27", 5, 1, 1);
        let alg = Algebra::main(ring.clone(), group.clone());
        let cm = ConjModule::new(&alg);
        let mut r = Rng(3);
        for _ in 0..15 {
            let a = r.elt(&alg);
            let b = r.elt(&alg);
            let ab = alg.mul(&a, &b);
            let ba = alg.mul(&b, &a);
            assert_eq!(cm.reduce(&alg, &ab), cm.reduce(&alg, &ba));
            assert!(cm.eq_mod(&alg, &ab, &ba, ring.n_w));
        }
        // abelian: reduction is the identity
        let (ring2, group2) = setup("c3xc3", 5, 1, 1);
        let alg2 = Algebra::main(ring2, group2);
        let cm2 = ConjModule::new(&alg2);
        let mut r = Rng(4);
        for _ in 0..10 {
            let a = r.elt(&alg2);
            assert_eq!(cm2.reduce(&alg2, &a), a);
        }
    }

    #[test]
    fn berkowitz_matches_small_determinants() {
        let (ring, group) = setup("c3", 6, 2, 2);
        let ab = Algebra::ab(ring.clone(), group.clone(), group.subgroups.len() - 1);
        let mut r = Rng(5);
        for _ in 0..10 {
            let a = r.elt(&ab);
            let b = r.elt(&ab);
            let c = r.elt(&ab);
            let d = r.elt(&ab);
            let m = Matrix { n: 2, entries: vec![a.clone(), b.clone(), c.clone(), d.clone()] };
            let det = berkowitz_det(&ab, &m);
            let expect = ab.sub_elt(&ab.mul(&a, &d), &ab.mul(&b, &c));
            assert_eq!(det, expect);
        }
        // 3x3 against the cofactor expansion
        let e: Vec<Elt> = (0..9).map(|_| r.elt(&ab)).collect();
        let m = Matrix { n: 3, entries: e.clone() };
        let det = berkowitz_det(&ab, &m);
        let minor = |a: &Elt, b: &Elt, c: &Elt, d: &Elt| ab.sub_elt(&ab.mul(a, d), &ab.mul(b, c));
        let t1 = ab.mul(&e[0], &minor(&e[4], &e[5], &e[7], &e[8]));
        let t2 = ab.mul(&e[1], &minor(&e[3], &e[5], &e[6], &e[8]));
        let t3 = ab.mul(&e[2], &minor(&e[3], &e[4], &e[6], &e[7]));
        let expect = ab.add(&ab.sub_elt(&t1, &t2), &t3);
        assert_eq!(det, expect);
    }

    fn theta_for(
        ring: &Rc<SeriesRing>,
        group: &Rc<GroupModel>,
        main: &Algebra,
        pid: usize,
        u: &Elt,
    ) -> (Elt, Algebra) {
        let sub = Algebra::sub(ring.clone(), group.clone(), pid);
        let abq = Algebra::ab(ring.clone(), group.clone(), pid);
        let full: Vec<u16> = (0..group.n as u16).collect();
        let reps = right_coset_reps(&group, pid, group.full_id);
        let cosets = build_cosets(group, pid, &full, reps);
        let t = theta_ab(main, &sub, &abq, &cosets, u).unwrap();
        (t, abq)
    }

    #[test]
    fn theta_on_scalars_is_index_power() {
        let (ring, group) = setup("c9", 6, 2, 2);
        let main = Algebra::main(ring.clone(), group.clone());
        // s = 1 + 3X as a scalar
        let s = ring.add(&ring.one(), &ring.monomial(&[1, 0], 3));
        let u = main.scalar(&s);
        for pid in 0..group.subgroups.len() {
            let index = group.n / group.subgroups[pid].order;
            let (t, abq) = theta_for(&ring, &group, &main, pid, &u);
            let expect = abq.scalar(&{
                let mut acc = ring.one();
                for _ in 0..index {
                    acc = ring.mul(&acc, &s);
                }
                acc
            });
            assert_eq!(t, expect, "theta of scalar at subgroup {pid}");
        }
    }

    #[test]
    fn theta_equals_transfer_on_group_likes() {
        for name in ["c9", "heis27", "m27"] {
            let (ring, group) = setup(name, 6, 2, 2);
            let main = Algebra::main(ring.clone(), group.clone());
            for pid in 0..group.subgroups.len() {
                let abq = Algebra::ab(ring.clone(), group.clone(), pid);
                for gi in (0..group.n as u16).step_by(5) {
                    let u = main.gelt((gi, 0));
                    let (t, _) = theta_for(&ring, &group, &main, pid, &u);
                    let (cls, texp) = group.transfer((gi, 0), pid, group.full_id).unwrap();
                    let expect = abq.basis_elt(cls, texp);
                    assert_eq!(t, expect, "theta vs transfer: {name} subgroup {pid} g {gi}");
                }
            }
        }
    }

    #[test]
    fn theta_is_multiplicative_and_rep_independent() {
        let (ring, group) = setup("m27", 8, 2, 2);
        let main = Algebra::main(ring.clone(), group.clone());
        let mut r = Rng(6);
        for pid in [1usize, 3, group.subgroups.len() - 2] {
            let sub = Algebra::sub(ring.clone(), group.clone(), pid);
            let abq = Algebra::ab(ring.clone(), group.clone(), pid);
            let full: Vec<u16> = (0..group.n as u16).collect();
            let reps = right_coset_reps(&group, pid, group.full_id);
            // rotated representatives: left-multiply by subgroup elements
            // (right cosets U_P c are unchanged)
            let s = &group.subgroups[pid];
            let reps2: Vec<u16> = reps
                .iter()
                .enumerate()
                .map(|(i, &c)| group.m(s.elems[i % s.elems.len()], c))
                .collect();
            let cosets = build_cosets(&group, pid, &full, reps);
            let cosets2 = build_cosets(&group, pid, &full, reps2);
            for _ in 0..4 {
                let u = r.unit(&main);
                let v = r.unit(&main);
                let tu = theta_ab(&main, &sub, &abq, &cosets, &u).unwrap();
                let tv = theta_ab(&main, &sub, &abq, &cosets, &v).unwrap();
                let tuv = theta_ab(&main, &sub, &abq, &cosets, &main.mul(&u, &v)).unwrap();
                assert_eq!(tuv, abq.mul(&tu, &tv), "theta multiplicativity at {pid}");
                let tu2 = theta_ab(&main, &sub, &abq, &cosets2, &u).unwrap();
                assert_eq!(tu, tu2, "theta representative independence at {pid}");
            }
        }
    }

    #[test]
    fn k1_rep_matches_det_up_to_torsion_in_abelian_case() {
        let (ring, group) = setup("c9", 6, 2, 2);
        let main = Algebra::main(ring.clone(), group.clone());
        let pid = group.subgroups.iter().position(|s| s.order == 3).unwrap();
        let sub = Algebra::sub(ring.clone(), group.clone(), pid);
        let full: Vec<u16> = (0..group.n as u16).collect();
        let reps = right_coset_reps(&group, pid, group.full_id);
        let cosets = build_cosets(&group, pid, &full, reps);
        let mut r = Rng(7);
        for _ in 0..5 {
            let u = r.unit(&main);
            let m = mult_matrix(&main, &sub, &cosets, &u);
            let rep = k1_unit_rep(&sub, &m).unwrap();
            let det = berkowitz_det(&sub, &m);
            // same class up to sign: ratio must be +-1 times (1 + radical)?
            // here simply: rep = +- det exactly, since row swaps are the only
            // non-elementary step over a commutative ring
            let ratio_ok = rep == det || rep == sub.neg(&det);
            assert!(ratio_ok, "Gaussian K1 representative should be ±det over an abelian ring");
        }
    }

    #[test]
    fn ntp_identities() {
        // chain P <= P' in C_9: Nr(1) = 1, Tr(1) = [P':P], Pi(1) = 1
        let (ring, group) = setup("c9", 6, 2, 2);
        let ppid = group.full_id;
        let pid = group.subgroups.iter().position(|s| s.order == 3).unwrap();
        let abp = Algebra::ab(ring.clone(), group.clone(), ppid);
        let q = group.image_classes_in(pid, ppid);
        let cosets = build_ab_cosets(&group, ppid, q);
        let one = abp.one();
        assert_eq!(norm_trace_proj(&abp, &cosets, &one, NtpKind::Norm).unwrap(), one);
        assert_eq!(norm_trace_proj(&abp, &cosets, &one, NtpKind::Proj).unwrap(), one);
        let tr = norm_trace_proj(&abp, &cosets, &one, NtpKind::Trace).unwrap();
        assert_eq!(tr, abp.scale_u64(&one, 3));
        // Nr of a group-like in the image subring = its cube
        let s = &group.subgroups[ppid];
        let g_in = s.ab_class_of[group.subgroups[pid].elems[1] as usize];
        let gl = abp.basis_elt(g_in, 0);
        let nr = norm_trace_proj(&abp, &cosets, &gl, NtpKind::Norm).unwrap();
        assert_eq!(nr, abp.pow(&gl, 3));
        // Pi kills group-likes outside the image
        let outside = (0..abp.dim as u16)
            .find(|c| !cosets.q_classes.contains(c))
            .unwrap();
        let x = abp.basis_elt(outside, 0);
        let px = norm_trace_proj(&abp, &cosets, &x, NtpKind::Proj).unwrap();
        assert!(abp.is_zero(&px));
    }

    #[test]
    fn ver_ring_is_multiplicative_and_matches_transfer() {
        for name in ["c9", "heis27", "m27"] {
            let (ring, group) = setup(name, 6, 2, 2);
            let ppid = group.full_id;
            let abp = Algebra::ab(ring.clone(), group.clone(), ppid);
            for pid in 0..group.subgroups.len() {
                let abt = Algebra::ab(ring.clone(), group.clone(), pid);
                // ver(1) = 1
                assert_eq!(abp.ver_into(&abt, &abp.one()).unwrap(), abt.one());
                // group-likes: matches the group transfer
                let sp = &group.subgroups[ppid];
                for cls in 0..abp.dim as u16 {
                    let rep = sp.ab_reps[cls as usize];
                    let x = abp.basis_elt(cls, 0);
                    let v = abp.ver_into(&abt, &x).unwrap();
                    let (tc, tt) = group.transfer((rep, 0), pid, ppid).unwrap();
                    assert_eq!(v, abt.basis_elt(tc, tt));
                }
                // multiplicative on random pairs
                let mut r = Rng(8);
                for _ in 0..5 {
                    let a = r.elt(&abp);
                    let b = r.elt(&abp);
                    let lhs = abp.ver_into(&abt, &abp.mul(&a, &b)).unwrap();
                    let rhs = abt.mul(
                        &abp.ver_into(&abt, &a).unwrap(),
                        &abp.ver_into(&abt, &b).unwrap(),
                    );
                    assert_eq!(lhs, rhs, "{name}: ver multiplicativity into {pid}");
                }
            }
        }
    }

    #[test]
    fn trace_ideal_contains_its_construction() {
        let (ring, group) = setup("heis27", 4, 1, 1);
        for &pid in group.cyclic_ids.iter() {
            let sub = Algebra::sub(ring.clone(), group.clone(), pid);
            let h = trace_ideal_p(&sub);
            let s = &group.subgroups[pid];
            // W trivial => full ring
            if s.weyl_reps.len() == 1 {
                let mut r = Rng(9);
                let x = r.elt(&sub);
                assert!(h.contains(&x.c));
                continue;
            }
            let mut r = Rng(10);
            for _ in 0..4 {
                let x = r.elt(&sub);
                let mut acc = sub.zero();
                for &w in &s.weyl_reps {
                    acc = sub.add(&acc, &sub.conj_transport(&sub, &x, w));
                }
                assert!(h.contains(&acc.c), "trace of x must lie in the trace ideal");
            }
        }
    }

    #[test]
    fn trace_ideal_is_transversal_independent() {
        let (ring, group) = setup("heis27", 5, 1, 1);
        let zring = crate::zpn::ZpnRing::new(3, 5);
        for &pid in group.cyclic_ids.iter() {
            let sub = Algebra::sub(ring.clone(), group.clone(), pid);
            let s = &group.subgroups[pid];
            if s.weyl_reps.len() == 1 {
                continue;
            }
            let h1 = trace_ideal_p(&sub);
            // rotate each representative by a subgroup element
            let rw = ring.width;
            let mut rows = Vec::new();
            for i in 0..sub.dim {
                for mono in 0..ring.n_mono {
                    let mut x = sub.zero();
                    x.c[i * rw + mono] = ring.mont.one;
                    let mut acc = sub.zero();
                    for (k, &w) in s.weyl_reps.iter().enumerate() {
                        let tw = group.m(w, s.elems[k % s.elems.len()]);
                        acc = sub.add(&acc, &sub.conj_transport(&sub, &x, tw));
                    }
                    if !sub.is_zero(&acc) {
                        rows.push(acc.c);
                    }
                }
            }
            let h2 = howell_form(&zring, &ZpnMatrix::from_rows(sub.width, rows));
            assert_eq!(h1.rows, h2.rows, "trace ideal must not depend on the transversal");
        }
    }

    #[test]
    fn pair_trace_ideal_abelian_is_index_multiple() {
        // abelian G-bar: T_{P,P'} = [P':P] * I(U_P^{ab})
        let (ring, group) = setup("c9", 4, 1, 1);
        let pid = group.subgroups.iter().position(|s| s.order == 3).unwrap();
        let ab = Algebra::ab(ring.clone(), group.clone(), pid);
        let h = trace_ideal_pair(&ab, group.full_id).unwrap();
        let mut r = Rng(11);
        let v = r.elt(&ab);
        assert!(h.contains(&ab.scale_u64(&v, 3).c));
        // a generic element is not in 3*(lattice)
        let one = ab.one();
        assert!(!h.contains(&one.c));
    }
}
