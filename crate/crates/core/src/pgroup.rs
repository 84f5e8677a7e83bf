//! Finite model of the one-dimensional group: G-bar = H ⋊ Z/p^e together
//! with the central-carry data of the infinite extension it truncates.
//!
//! An element of the big group is a pair (g, t) with g in G-bar and t the
//! exponent of the central element; multiplying two G-bar elements produces
//! a carry ⌊(a+b)/p^e⌋ ∈ {0,1} on the t-part. All subgroup, conjugacy,
//! commutator and transfer computations happen on this data.

use crate::Error;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Input presentation: H by Cayley table, the automorphism as a permutation,
/// and the depth e.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    pub p: u64,
    pub h_table: Vec<Vec<u16>>,
    pub sigma: Vec<u16>,
    pub e: u32,
}

/// JSON form: either a catalog name or an explicit presentation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpecInput {
    Catalog { catalog: String },
    Explicit { p: u64, cayley: Vec<Vec<u16>>, sigma: Vec<u16>, e: u32 },
}

pub const CATALOG: [&str; 7] = ["c3", "c9", "c27", "c3xc3", "c3xc9", "heis27", "m27"];

/// Big-group element: (G-bar index, central exponent).
pub type GElt = (u16, i64);

#[derive(Debug, Clone)]
pub struct Subgroup {
    pub elems: Vec<u16>,
    pub mask: u128,
    pub order: usize,
    pub is_cyclic: bool,
    /// normalizer elements
    pub normalizer: Vec<u16>,
    /// left coset representatives of P in its normalizer (Weyl group reps)
    pub weyl_reps: Vec<u16>,
    /// commutator subgroup `D_P = [P,P]` computed in G-bar (subset of H)
    pub derived: Vec<u16>,
    /// quotient P-tilde = P/D_P: section representatives, one per class
    pub ab_reps: Vec<u16>,
    /// G-bar element -> class index in ab_reps (usize::MAX if not in P)
    pub ab_class_of: Vec<u16>,
    /// P-tilde Cayley table (class indices)
    pub ab_mul: Vec<u16>,
    pub ab_inv: Vec<u16>,
    /// central-carry cocycle on P-tilde classes (t-exponent of products)
    pub ab_cocycle: Vec<i64>,
    /// torsion part: classes coming from H ∩ P
    pub b_classes: Vec<u16>,
    /// chosen topological generator data: minimal positive Gamma-valuation c
    /// (c = e when P ⊆ H) and the chosen element (None when P ⊆ H)
    pub c_exp: u32,
    pub u0: Option<u16>,
}

#[derive(Debug)]
pub struct GroupModel {
    pub p: u64,
    pub e: u32,
    pub pe: u32,
    pub h_order: usize,
    pub n: usize,
    pub mul: Vec<u16>,
    pub inv: Vec<u16>,
    pub carry: Vec<u8>,
    pub gamma_exp: Vec<u32>,
    pub order: Vec<u32>,
    pub subgroups: Vec<Subgroup>,
    /// conjugacy classes of G-bar, each sorted; classes sorted by min element
    pub classes: Vec<Vec<u16>>,
    pub class_of: Vec<u16>,
    /// conj_subgroup[s * n + g] = id of g P g^{-1}
    pub conj_subgroup: Vec<u16>,
    /// ids of cyclic subgroups, ascending
    pub cyclic_ids: Vec<usize>,
    /// for cyclic P: ids of cyclic P' with P'^p = P, P' != P
    pub c_p_lists: Vec<Vec<usize>>,
    /// for every P: ids of cyclic P' with P'^p <= P
    pub cyclic_into: Vec<Vec<usize>>,
    /// subgroup id of the full group and the trivial group
    pub full_id: usize,
    pub trivial_id: usize,
    /// nilpotency index of the augmentation ideal of F_p[G-bar]
    pub aug_nilpotency: u32,
}

fn mask_of(elems: &[u16]) -> u128 {
    elems.iter().fold(0u128, |m, &g| m | (1u128 << g))
}

impl GroupModel {
    pub fn build(spec: &GroupSpec) -> Result<GroupModel, Error> {
        let h = spec.h_table.len();
        if h == 0 || spec.h_table.iter().any(|r| r.len() != h) {
            return Err(Error::Config("H Cayley table must be square and nonempty".into()));
        }
        let p = spec.p;
        if !crate::padic::is_prime(p) || p < 3 {
            return Err(Error::Config("p must be an odd prime".into()));
        }
        // |H| must be a power of p
        let mut hh = h as u64;
        while hh % p == 0 {
            hh /= p;
        }
        if hh != 1 {
            return Err(Error::Config("|H| must be a power of p".into()));
        }
        if spec.e == 0 || spec.e > 6 {
            return Err(Error::Config("depth e must be between 1 and 6".into()));
        }
        let ht = &spec.h_table;
        // identity at index 0, associativity, inverses
        for a in 0..h {
            if ht[0][a] != a as u16 || ht[a][0] != a as u16 {
                return Err(Error::Config("index 0 must be the identity of H".into()));
            }
        }
        for a in 0..h {
            for b in 0..h {
                if ht[a][b] as usize >= h {
                    return Err(Error::Config("H Cayley table entry out of range".into()));
                }
                for c in 0..h {
                    if ht[ht[a][b] as usize][c] != ht[a][ht[b][c] as usize] {
                        return Err(Error::Config("H Cayley table is not associative".into()));
                    }
                }
            }
        }
        let mut h_inv = vec![u16::MAX; h];
        for a in 0..h {
            for b in 0..h {
                if ht[a][b] == 0 {
                    h_inv[a] = b as u16;
                }
            }
            if h_inv[a] == u16::MAX {
                return Err(Error::Config("H has a non-invertible element".into()));
            }
        }
        // sigma: automorphism of H with sigma^(p^e) = id
        if spec.sigma.len() != h {
            return Err(Error::NotAutomorphism);
        }
        let sg = &spec.sigma;
        let mut seen = vec![false; h];
        for &x in sg {
            if x as usize >= h || seen[x as usize] {
                return Err(Error::NotAutomorphism);
            }
            seen[x as usize] = true;
        }
        if sg[0] != 0 {
            return Err(Error::NotAutomorphism);
        }
        for a in 0..h {
            for b in 0..h {
                if sg[ht[a][b] as usize] != ht[sg[a] as usize][sg[b] as usize] {
                    return Err(Error::NotAutomorphism);
                }
            }
        }
        let pe_u64 = p.pow(spec.e);
        if (h as u64) * pe_u64 > 128 {
            return Err(Error::Config("group order exceeds the supported bound of 128".into()));
        }
        let pe = pe_u64 as u32;
        // sigma powers 0..pe
        let mut sig_pows: Vec<Vec<u16>> = vec![(0..h as u16).collect()];
        for k in 1..=pe {
            let prev = &sig_pows[(k - 1) as usize];
            sig_pows.push(prev.iter().map(|&x| sg[x as usize]).collect());
        }
        if sig_pows[pe as usize] != sig_pows[0] {
            return Err(Error::OrderViolation);
        }

        let n = h * pe as usize;
        let idx = |hh: usize, a: u32| -> usize { hh * pe as usize + a as usize };
        let mut mul = vec![0u16; n * n];
        let mut carry = vec![0u8; n * n];
        for h1 in 0..h {
            for a in 0..pe {
                for h2 in 0..h {
                    for b in 0..pe {
                        let i = idx(h1, a);
                        let j = idx(h2, b);
                        let hp = ht[h1][sig_pows[a as usize][h2] as usize] as usize;
                        let s = a + b;
                        mul[i * n + j] = idx(hp, s % pe) as u16;
                        carry[i * n + j] = (s / pe) as u8;
                    }
                }
            }
        }
        let mut inv = vec![0u16; n];
        for i in 0..n {
            for j in 0..n {
                if mul[i * n + j] == 0 {
                    inv[i] = j as u16;
                }
            }
        }
        let gamma_exp: Vec<u32> = (0..n).map(|i| (i % pe as usize) as u32).collect();
        // element orders: smallest k >= 1 with g^k = 1
        let mut order = vec![0u32; n];
        for i in 0..n {
            let mut x = i as u16;
            let mut k = 1u32;
            while x != 0 {
                x = mul[x as usize * n + i];
                k += 1;
                if x == 0 {
                    break;
                }
            }
            order[i] = if i == 0 { 1 } else { k };
        }

        let mut model = GroupModel {
            p,
            e: spec.e,
            pe,
            h_order: h,
            n,
            mul,
            inv,
            carry,
            gamma_exp,
            order,
            subgroups: Vec::new(),
            classes: Vec::new(),
            class_of: Vec::new(),
            conj_subgroup: Vec::new(),
            cyclic_ids: Vec::new(),
            c_p_lists: Vec::new(),
            cyclic_into: Vec::new(),
            full_id: 0,
            trivial_id: 0,
            aug_nilpotency: 0,
        };
        model.build_classes();
        model.build_subgroups()?;
        model.aug_nilpotency = model.compute_aug_nilpotency();
        Ok(model)
    }

    pub fn from_input(input: &GroupSpecInput, p_default: u64) -> Result<GroupModel, Error> {
        match input {
            GroupSpecInput::Catalog { catalog } => GroupModel::catalog(catalog, p_default),
            GroupSpecInput::Explicit { p, cayley, sigma, e } => GroupModel::build(&GroupSpec {
                p: *p,
                h_table: cayley.clone(),
                sigma: sigma.clone(),
                e: *e,
            }),
        }
    }

    /// Catalog of desk-scale models (p = 3 unless stated otherwise).
    pub fn catalog(name: &str, p: u64) -> Result<GroupModel, Error> {
        let cyclic_table = |m: usize| -> Vec<Vec<u16>> {
            (0..m).map(|a| (0..m).map(|b| ((a + b) % m) as u16).collect()).collect()
        };
        let trivial = vec![vec![0u16]];
        let spec = match name {
            "c3" => GroupSpec { p, h_table: trivial, sigma: vec![0], e: 1 },
            "c9" => GroupSpec { p, h_table: trivial, sigma: vec![0], e: 2 },
            "c27" => GroupSpec { p, h_table: trivial, sigma: vec![0], e: 3 },
            "c3xc3" => GroupSpec {
                p,
                h_table: cyclic_table(p as usize),
                sigma: (0..p as u16).collect(),
                e: 1,
            },
            "c3xc9" => GroupSpec {
                p,
                h_table: cyclic_table(p as usize),
                sigma: (0..p as u16).collect(),
                e: 2,
            },
            "heis27" => {
                // H = C_p x C_p with basis x, y; sigma(x) = x, sigma(y) = xy.
                let pp = p as usize;
                let h = pp * pp;
                let id = |i: usize, j: usize| (i * pp + j) as u16;
                let mut table = vec![vec![0u16; h]; h];
                for i1 in 0..pp {
                    for j1 in 0..pp {
                        for i2 in 0..pp {
                            for j2 in 0..pp {
                                table[id(i1, j1) as usize][id(i2, j2) as usize] =
                                    id((i1 + i2) % pp, (j1 + j2) % pp);
                            }
                        }
                    }
                }
                // sigma(x^i y^j) = x^{i+j} y^j
                let sigma: Vec<u16> = (0..h)
                    .map(|g| {
                        let (i, j) = (g / pp, g % pp);
                        id((i + j) % pp, j)
                    })
                    .collect();
                GroupSpec { p, h_table: table, sigma, e: 1 }
            }
            "m27" => {
                // H = C_{p^2} = <x>, sigma(x) = x^{1+p}
                let m = (p * p) as usize;
                let table = cyclic_table(m);
                let s = (1 + p) as usize;
                let sigma: Vec<u16> = (0..m).map(|g| ((g * s) % m) as u16).collect();
                GroupSpec { p, h_table: table, sigma, e: 1 }
            }
            _ => {
                return Err(Error::Config(format!(
                    "unknown catalog group '{name}' (available: {})",
                    CATALOG.join(", ")
                )))
            }
        };
        GroupModel::build(&spec)
    }

    // ------------------------------------------------------------------
    // big-group arithmetic
    // ------------------------------------------------------------------

    #[inline]
    pub fn m(&self, a: u16, b: u16) -> u16 {
        self.mul[a as usize * self.n + b as usize]
    }

    #[inline]
    pub fn c(&self, a: u16, b: u16) -> i64 {
        self.carry[a as usize * self.n + b as usize] as i64
    }

    #[inline]
    pub fn gmul(&self, a: GElt, b: GElt) -> GElt {
        (self.m(a.0, b.0), a.1 + b.1 + self.c(a.0, b.0))
    }

    #[inline]
    pub fn ginv(&self, a: GElt) -> GElt {
        let gi = self.inv[a.0 as usize];
        (gi, -a.1 - self.c(gi, a.0))
    }

    pub fn gpow(&self, a: GElt, k: u64) -> GElt {
        let mut acc: GElt = (0, 0);
        for _ in 0..k {
            acc = self.gmul(acc, a);
        }
        acc
    }

    /// x (g, t) x^{-1} for x in G-bar.
    pub fn gconj(&self, x: u16, a: GElt) -> GElt {
        self.gmul(self.gmul((x, 0), a), self.ginv((x, 0)))
    }

    // ------------------------------------------------------------------
    // classes and subgroups
    // ------------------------------------------------------------------

    fn build_classes(&mut self) {
        let n = self.n;
        let mut class_of = vec![u16::MAX; n];
        let mut classes = Vec::new();
        for g in 0..n as u16 {
            if class_of[g as usize] != u16::MAX {
                continue;
            }
            let mut cls: Vec<u16> = (0..n as u16).map(|x| self.gconj(x, (g, 0)).0).collect();
            cls.sort_unstable();
            cls.dedup();
            let id = classes.len() as u16;
            for &c in &cls {
                class_of[c as usize] = id;
            }
            classes.push(cls);
        }
        self.classes = classes;
        self.class_of = class_of;
    }

    fn closure(&self, gens: &[u16]) -> Vec<u16> {
        let mut mask: u128 = 1;
        let mut elems = vec![0u16];
        let mut frontier = vec![0u16];
        loop {
            let mut new = Vec::new();
            for &x in &frontier {
                for &g in gens {
                    let y = self.m(x, g);
                    if mask & (1u128 << y) == 0 {
                        mask |= 1u128 << y;
                        elems.push(y);
                        new.push(y);
                    }
                    let y = self.m(g, x);
                    if mask & (1u128 << y) == 0 {
                        mask |= 1u128 << y;
                        elems.push(y);
                        new.push(y);
                    }
                }
            }
            if new.is_empty() {
                break;
            }
            frontier = new;
        }
        elems.sort_unstable();
        elems
    }

    fn build_subgroups(&mut self) -> Result<(), Error> {
        let n = self.n;
        let mut seen: BTreeMap<Vec<u16>, ()> = BTreeMap::new();
        seen.insert(vec![0u16], ());
        // all cyclic subgroups
        for g in 1..n as u16 {
            seen.insert(self.closure(&[g]), ());
        }
        // join-closure
        loop {
            let cur: Vec<Vec<u16>> = seen.keys().cloned().collect();
            let before = seen.len();
            for s in &cur {
                for g in 1..n as u16 {
                    if s.binary_search(&g).is_ok() {
                        continue;
                    }
                    let mut gens = s.clone();
                    gens.push(g);
                    seen.insert(self.closure(&gens), ());
                }
            }
            if seen.len() == before {
                break;
            }
        }
        let mut subs: Vec<Vec<u16>> = seen.into_keys().collect();
        subs.sort_by_key(|s| (s.len(), s.clone()));

        // order sanity: every subgroup order divides |G|
        for s in &subs {
            if n % s.len() != 0 {
                return Err(Error::Config("subgroup closure produced a non-divisor order".into()));
            }
        }

        let mut built = Vec::with_capacity(subs.len());
        for elems in subs {
            built.push(self.build_subgroup_data(elems)?);
        }
        self.subgroups = built;
        self.trivial_id = 0;
        self.full_id = self.subgroups.len() - 1;
        debug_assert_eq!(self.subgroups[self.full_id].order, n);

        // conjugate-subgroup table
        let ns = self.subgroups.len();
        let mut conj_tab = vec![0u16; ns * n];
        for (si, s) in self.subgroups.iter().enumerate() {
            for g in 0..n as u16 {
                let mut im: Vec<u16> = s.elems.iter().map(|&x| self.gconj(g, (x, 0)).0).collect();
                im.sort_unstable();
                let id = self
                    .subgroups
                    .iter()
                    .position(|t| t.elems == im)
                    .ok_or_else(|| Error::Config("conjugate subgroup missing from lattice".into()))?;
                conj_tab[si * n + g as usize] = id as u16;
            }
        }
        self.conj_subgroup = conj_tab;

        self.cyclic_ids = self
            .subgroups
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_cyclic)
            .map(|(i, _)| i)
            .collect();

        // P'^p for cyclic P'; C_P lists and "cyclic into P" lists
        let pth_power_sub: Vec<usize> = self
            .subgroups
            .iter()
            .map(|s| {
                if !s.is_cyclic {
                    return usize::MAX;
                }
                let gen = s.elems.iter().copied().find(|&g| self.order[g as usize] as usize == s.order).unwrap_or(0);
                let gp = self.gpow((gen, 0), self.p).0;
                let elems = self.closure(&[gp]);
                self.subgroups.iter().position(|t| t.elems == elems).unwrap()
            })
            .collect();
        let ns = self.subgroups.len();
        let mut c_p_lists = vec![Vec::new(); ns];
        let mut cyclic_into = vec![Vec::new(); ns];
        for pid in 0..ns {
            for &cid in &self.cyclic_ids.clone() {
                let target = pth_power_sub[cid];
                if self.subgroups[pid].is_cyclic && target == pid && cid != pid {
                    c_p_lists[pid].push(cid);
                }
                // P'^p <= P
                let tmask = self.subgroups[target].mask;
                if tmask & self.subgroups[pid].mask == tmask {
                    cyclic_into[pid].push(cid);
                }
            }
        }
        self.c_p_lists = c_p_lists;
        self.cyclic_into = cyclic_into;
        Ok(())
    }

    fn build_subgroup_data(&self, elems: Vec<u16>) -> Result<Subgroup, Error> {
        let n = self.n;
        let mask = mask_of(&elems);
        let ord = elems.len();
        let is_cyclic = elems.iter().any(|&g| self.order[g as usize] as usize == ord);
        let normalizer: Vec<u16> = (0..n as u16)
            .filter(|&x| {
                elems.iter().all(|&g| mask & (1u128 << self.gconj(x, (g, 0)).0) != 0)
            })
            .collect();
        // Weyl reps: minimal left coset representatives of P in N(P)
        let mut weyl_reps = Vec::new();
        let mut covered: u128 = 0;
        for &x in &normalizer {
            if covered & (1u128 << x) != 0 {
                continue;
            }
            weyl_reps.push(x);
            for &g in &elems {
                covered |= 1u128 << self.m(x, g);
            }
        }

        // D_P = [P,P], with the check that commutators carry no central part
        let mut comms = Vec::new();
        for &a in &elems {
            for &b in &elems {
                let c = self.gmul(
                    self.gmul((a, 0), (b, 0)),
                    self.gmul(self.ginv((a, 0)), self.ginv((b, 0))),
                );
                if c.1 != 0 || self.gamma_exp[c.0 as usize] != 0 {
                    return Err(Error::Config(
                        "commutator left the H-part; model invariant violated".into(),
                    ));
                }
                comms.push(c.0);
            }
        }
        comms.sort_unstable();
        comms.dedup();
        let derived = self.closure(&comms);
        // conjugation closure is automatic: commutator subgroups are normal,
        // and products of commutators of P-elements stay in the closure; we
        // verify normality in P all the same.
        for &d in &derived {
            for &x in &elems {
                let y = self.gconj(x, (d, 0)).0;
                if derived.binary_search(&y).is_err() {
                    return Err(Error::Config("derived subgroup not normal in P".into()));
                }
            }
        }
        let dmask = mask_of(&derived);

        // quotient P-tilde = P/D_P
        let mut ab_class_of = vec![u16::MAX; n];
        let mut ab_reps = Vec::new();
        for &g in &elems {
            if ab_class_of[g as usize] != u16::MAX {
                continue;
            }
            let id = ab_reps.len() as u16;
            // coset g*D_P
            let mut coset: Vec<u16> = derived.iter().map(|&d| self.m(g, d)).collect();
            coset.sort_unstable();
            for &x in &coset {
                ab_class_of[x as usize] = id;
            }
            ab_reps.push(coset[0]);
        }
        // re-canonicalize: reps must be minimal per class; rebuild in order
        let mut order_fix: Vec<u16> = ab_reps.clone();
        order_fix.sort_unstable();
        let mut remap = vec![0u16; ab_reps.len()];
        for (new_id, rep) in order_fix.iter().enumerate() {
            let old_id = ab_class_of[*rep as usize];
            remap[old_id as usize] = new_id as u16;
        }
        for g in 0..n {
            if ab_class_of[g] != u16::MAX {
                ab_class_of[g] = remap[ab_class_of[g] as usize];
            }
        }
        let ab_reps = order_fix;
        let k = ab_reps.len();
        let mut ab_mul = vec![0u16; k * k];
        let mut ab_cocycle = vec![0i64; k * k];
        for i in 0..k {
            for j in 0..k {
                let prod = self.gmul((ab_reps[i], 0), (ab_reps[j], 0));
                ab_mul[i * k + j] = ab_class_of[prod.0 as usize];
                ab_cocycle[i * k + j] = prod.1;
            }
        }
        let mut ab_inv = vec![0u16; k];
        for i in 0..k {
            for j in 0..k {
                if ab_mul[i * k + j] == ab_class_of[0] {
                    ab_inv[i] = j as u16;
                }
            }
        }
        let b_classes: Vec<u16> = {
            let mut v: Vec<u16> = elems
                .iter()
                .filter(|&&g| self.gamma_exp[g as usize] == 0)
                .map(|&g| ab_class_of[g as usize])
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let _ = dmask;
        // minimal Gamma-valuation and chosen u0
        let mut c_exp = self.e;
        let mut u0 = None;
        for &g in &elems {
            let a = self.gamma_exp[g as usize];
            if a != 0 {
                let v = vp_u32(a, self.p as u32);
                if v < c_exp || (v == c_exp && u0.map_or(true, |u| g < u)) {
                    if v < c_exp {
                        c_exp = v;
                        u0 = Some(g);
                    } else if u0.map_or(true, |u| g < u) {
                        u0 = Some(g);
                    }
                }
            }
        }
        Ok(Subgroup {
            elems,
            mask,
            order: ord,
            is_cyclic,
            normalizer,
            weyl_reps,
            derived,
            ab_reps,
            ab_class_of,
            ab_mul,
            ab_inv,
            ab_cocycle,
            b_classes,
            c_exp,
            u0,
        })
    }

    // ------------------------------------------------------------------
    // abelianized coordinates and the transfer
    // ------------------------------------------------------------------

    /// Class index and unchanged central exponent of (g, t) in the
    /// abelianization of U_P. Commutators carry no central part, so the
    /// exponent passes through.
    pub fn ab_canon(&self, pid: usize, g: GElt) -> (u16, i64) {
        let s = &self.subgroups[pid];
        let cls = s.ab_class_of[g.0 as usize];
        assert!(cls != u16::MAX, "element not in subgroup");
        (cls, g.1)
    }

    /// Minimal left coset representatives of `sub` inside `sup`.
    pub fn left_coset_reps(&self, sub: usize, sup: usize) -> Vec<u16> {
        let s = &self.subgroups[sub];
        let t = &self.subgroups[sup];
        assert!(s.mask & t.mask == s.mask, "not a subgroup chain");
        let mut reps = Vec::new();
        let mut covered: u128 = 0;
        for &x in &t.elems {
            if covered & (1u128 << x) != 0 {
                continue;
            }
            reps.push(x);
            for &g in &s.elems {
                covered |= 1u128 << self.m(x, g);
            }
        }
        reps
    }

    /// Classical transfer ver: U_{P'} -> U_P^{ab} for P <= P', computed with
    /// explicit coset representatives; output is (class in P-tilde, central
    /// exponent).
    pub fn transfer(&self, g: GElt, pid: usize, ppid: usize) -> Result<(u16, i64), Error> {
        self.transfer_with_reps(g, pid, ppid, &self.left_coset_reps(pid, ppid))
    }

    pub fn transfer_with_reps(
        &self,
        g: GElt,
        pid: usize,
        ppid: usize,
        reps: &[u16],
    ) -> Result<(u16, i64), Error> {
        let s = &self.subgroups[pid];
        let t = &self.subgroups[ppid];
        if s.mask & t.mask != s.mask {
            return Err(Error::NotSubgroupChain);
        }
        if t.mask & (1u128 << g.0) == 0 {
            return Err(Error::NotSubgroupChain);
        }
        let mut acc: GElt = (0, 0);
        for &ci in reps {
            let w = self.gmul(g, (ci, 0));
            // find j with w in c_j P
            let mut found = None;
            for &cj in reps {
                let u = self.gmul(self.ginv((cj, 0)), w);
                if s.mask & (1u128 << u.0) != 0 {
                    found = Some(u);
                    break;
                }
            }
            let u = found.expect("coset representatives cover the supergroup");
            acc = self.gmul(acc, u);
        }
        Ok(self.ab_canon(pid, acc))
    }

    /// Presentation of U_P^{ab}: decompose a class as (torsion part b,
    /// u0-power k) with 0 <= k < |P-tilde| / |B|.
    pub fn ab_coords(&self, pid: usize, class: u16) -> (u16, u32) {
        let s = &self.subgroups[pid];
        let Some(u0) = s.u0 else {
            // P inside H: every class is torsion
            return (class, 0);
        };
        let u0c = s.ab_class_of[u0 as usize];
        let k = s.ab_reps.len();
        let mut cur = class;
        let mut steps = 0u32;
        loop {
            if s.b_classes.binary_search(&cur).is_ok() {
                return (cur, steps);
            }
            // cur * u0^{-1}
            cur = s.ab_mul[cur as usize * k + s.ab_inv[u0c as usize] as usize];
            steps += 1;
            assert!((steps as usize) <= k, "class not reachable from torsion part");
        }
    }

    pub fn subgroup_id_of_elems(&self, elems: &[u16]) -> Option<usize> {
        let mut v = elems.to_vec();
        v.sort_unstable();
        v.dedup();
        self.subgroups.iter().position(|s| s.elems == v)
    }

    /// Generators of a cyclic subgroup.
    pub fn cyclic_generators(&self, pid: usize) -> Vec<u16> {
        let s = &self.subgroups[pid];
        assert!(s.is_cyclic);
        s.elems
            .iter()
            .copied()
            .filter(|&g| self.order[g as usize] as usize == s.order)
            .collect()
    }

    /// Nilpotency index of the augmentation ideal of F_p[G-bar]: the least t
    /// with I^t = 0, certified by span iteration mod p.
    fn compute_aug_nilpotency(&self) -> u32 {
        let n = self.n;
        let p = self.p;
        // basis of I: g - 1 for g != 0; iterate A_{k+1} = span(A_k * (g-1))
        let reduce = |rows: &mut Vec<Vec<u64>>| {
            // Gaussian elimination mod p, keep echelon basis
            let mut out: Vec<Vec<u64>> = Vec::new();
            'next: for r in rows.drain(..) {
                let mut r = r;
                for b in &out {
                    let lead = b.iter().position(|&x| x != 0).unwrap();
                    if r[lead] != 0 {
                        let c = r[lead] * crate::padic::inv_mod_pn(b[lead], p, p) % p;
                        for i in 0..n {
                            r[i] = (r[i] + (p - c) * b[i]) % p;
                        }
                    }
                }
                if r.iter().all(|&x| x == 0) {
                    continue 'next;
                }
                out.push(r);
                out.sort_by_key(|b| b.iter().position(|&x| x != 0).unwrap());
            }
            *rows = out;
        };
        let mut cur: Vec<Vec<u64>> = (1..n)
            .map(|g| {
                let mut v = vec![0u64; n];
                v[g] = 1;
                v[0] = p - 1;
                v
            })
            .collect();
        reduce(&mut cur);
        let mut t = 1u32;
        while !cur.is_empty() {
            let mut next = Vec::new();
            for v in &cur {
                for g in 1..n as u16 {
                    // v * (g - 1)
                    let mut w = vec![0u64; n];
                    for (i, &c) in v.iter().enumerate() {
                        if c != 0 {
                            let tgt = self.m(i as u16, g) as usize;
                            w[tgt] = (w[tgt] + c) % p;
                            w[i] = (w[i] + p - c) % p;
                        }
                    }
                    if w.iter().any(|&x| x != 0) {
                        next.push(w);
                    }
                }
            }
            reduce(&mut next);
            cur = next;
            t += 1;
            assert!(t < 512, "augmentation nilpotency certification diverged");
        }
        t
    }

    /// Image of subgroup `sub` in the abelianized quotient of `sup`:
    /// sorted class indices.
    pub fn image_classes_in(&self, sub: usize, sup: usize) -> Vec<u16> {
        let t = &self.subgroups[sup];
        let mut v: Vec<u16> = self.subgroups[sub]
            .elems
            .iter()
            .map(|&g| t.ab_class_of[g as usize])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn display_elt(&self, g: u16) -> String {
        let h = g as usize / self.pe as usize;
        let a = g as usize % self.pe as usize;
        format!("h{h}g{a}")
    }
}

fn vp_u32(mut x: u32, p: u32) -> u32 {
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(name: &str) -> GroupModel {
        GroupModel::catalog(name, 3).unwrap()
    }

    #[test]
    fn c3xc3_has_six_subgroups() {
        let m = g("c3xc3");
        assert_eq!(m.n, 9);
        assert_eq!(m.subgroups.len(), 6);
        assert_eq!(m.subgroups.iter().filter(|s| s.order == 3).count(), 4);
    }

    #[test]
    fn trivial_h_depth_two_is_c9() {
        let m = g("c9");
        assert_eq!(m.n, 9);
        assert!(m.subgroups[m.full_id].is_cyclic);
        assert_eq!(m.subgroups.len(), 3);
    }

    #[test]
    fn heisenberg_shape() {
        let m = g("heis27");
        assert_eq!(m.n, 27);
        assert_eq!(m.classes.len(), 11, "Heisenberg group has 11 conjugacy classes");
        // center has order 3: central elements = singleton classes
        let central: Vec<_> = m.classes.iter().filter(|c| c.len() == 1).collect();
        assert_eq!(central.len(), 3);
        // exponent 3
        for i in 1..m.n {
            assert_eq!(m.order[i], 3);
        }
        assert_eq!(m.subgroups[m.full_id].derived.len(), 3);
    }

    #[test]
    fn m27_shape() {
        let m = g("m27");
        assert_eq!(m.n, 27);
        // modular group of order 27: exponent 9
        assert_eq!(m.order.iter().copied().max().unwrap(), 9);
        assert_eq!(m.subgroups[m.full_id].derived.len(), 3);
        // 11 conjugacy classes for the modular group as well
        assert_eq!(m.classes.len(), 11);
    }

    #[test]
    fn carry_cocycle_identity() {
        // associativity of the big group encodes the cocycle identity
        for name in CATALOG {
            let m = g(name);
            let n = m.n as u16;
            for a in 0..n.min(12) {
                for b in 0..n.min(12) {
                    for c in 0..n.min(12) {
                        let lhs = m.gmul(m.gmul((a, 0), (b, 0)), (c, 0));
                        let rhs = m.gmul((a, 0), m.gmul((b, 0), (c, 0)));
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn class_sizes_divide_group_order() {
        for name in CATALOG {
            let m = g(name);
            let total: usize = m.classes.iter().map(|c| c.len()).sum();
            assert_eq!(total, m.n);
            for c in &m.classes {
                assert_eq!(m.n % c.len(), 0);
            }
        }
    }

    #[test]
    fn subgroup_lattice_complete_for_cyclic_groups() {
        // C_27 has exactly the chain of 4 subgroups
        let m = g("c27");
        assert_eq!(m.subgroups.len(), 4);
        // C_3 x C_9: 1 + (4 order-3) + (3 C_9 + 1 C3xC3) + 1 = 10
        let m = g("c3xc9");
        assert_eq!(m.subgroups.len(), 10);
    }

    #[test]
    fn transfer_of_central_is_index_power() {
        for name in CATALOG {
            let m = g(name);
            let full = m.full_id;
            for pid in 0..m.subgroups.len() {
                let index = (m.n / m.subgroups[pid].order) as u64;
                // central element (1, 1) = the distinguished central generator
                let v = m.transfer((0, 1), pid, full).unwrap();
                let cls1 = m.subgroups[pid].ab_class_of[0];
                assert_eq!(v.0, cls1);
                assert_eq!(v.1, index as i64);
            }
        }
    }

    #[test]
    fn transfer_on_c9_chain() {
        let m = g("c9");
        // P = <g^3> has id with order 3
        let pid = m.subgroups.iter().position(|s| s.order == 3).unwrap();
        // gamma-hat = element with gamma_exp 1: index 1; its transfer to U_P
        // must be (class of g^3... ) with total Gamma-exponent 3
        let v = m.transfer((1, 0), pid, m.full_id).unwrap();
        // In U_P^ab coordinates the Gamma-exponent of the result is
        // gamma_exp(rep) + pe * t = 3 (abelian: ver(g) = g^[index])
        let rep = m.subgroups[pid].ab_reps[v.0 as usize];
        let total = m.gamma_exp[rep as usize] as i64 + (m.pe as i64) * v.1;
        assert_eq!(total, 3);
    }

    #[test]
    fn transfer_is_homomorphism_and_rep_independent() {
        for name in ["c9", "heis27", "m27", "c3xc9"] {
            let m = g(name);
            let full = m.full_id;
            let mut st = 5u64;
            let mut rnd = |k: usize| {
                st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (st >> 33) as usize % k
            };
            for pid in 0..m.subgroups.len() {
                let reps = m.left_coset_reps(pid, full);
                // rotated representative set: multiply each rep on the right
                // by a subgroup element
                let s = &m.subgroups[pid];
                let reps2: Vec<u16> = reps
                    .iter()
                    .map(|&r| m.m(r, s.elems[rnd(s.elems.len())]))
                    .collect();
                for _ in 0..10 {
                    let a = (rnd(m.n) as u16, rnd(3) as i64);
                    let b = (rnd(m.n) as u16, rnd(3) as i64);
                    let va = m.transfer_with_reps(a, pid, full, &reps).unwrap();
                    let va2 = m.transfer_with_reps(a, pid, full, &reps2).unwrap();
                    assert_eq!(va, va2, "transfer must not depend on coset representatives");
                    let vb = m.transfer(b, pid, full).unwrap();
                    let vab = m.transfer(m.gmul(a, b), pid, full).unwrap();
                    // product in the abelianized coordinates
                    let k = s.ab_reps.len();
                    let prod_cls = s.ab_mul[va.0 as usize * k + vb.0 as usize];
                    let prod_t = va.1 + vb.1 + s.ab_cocycle[va.0 as usize * k + vb.0 as usize];
                    assert_eq!(vab, (prod_cls, prod_t), "transfer must be a homomorphism");
                }
            }
        }
    }

    #[test]
    fn transfer_transitivity() {
        let m = g("c27");
        // chain: trivial < <g^9>? take order 3 <= order 9 <= order 27
        let p3 = m.subgroups.iter().position(|s| s.order == 3).unwrap();
        let p9 = m.subgroups.iter().position(|s| s.order == 9).unwrap();
        let full = m.full_id;
        for gidx in 0..m.n as u16 {
            let via = {
                let mid = m.transfer((gidx, 0), p9, full).unwrap();
                // lift mid back to a big-group element of U_{P9}
                let lifted = (m.subgroups[p9].ab_reps[mid.0 as usize], mid.1);
                m.transfer(lifted, p3, p9).unwrap()
            };
            let direct = m.transfer((gidx, 0), p3, full).unwrap();
            assert_eq!(via, direct);
        }
    }

    #[test]
    fn heisenberg_full_abelianization() {
        let m = g("heis27");
        let s = &m.subgroups[m.full_id];
        // G^ab = C3 x C3: 9 classes, torsion part of U_G^ab is image of H
        assert_eq!(s.ab_reps.len(), 9);
        assert_eq!(s.b_classes.len(), 3);
    }

    #[test]
    fn ab_coords_roundtrip() {
        for name in CATALOG {
            let m = g(name);
            for (pid, s) in m.subgroups.iter().enumerate() {
                for cls in 0..s.ab_reps.len() as u16 {
                    let (b, k) = m.ab_coords(pid, cls);
                    assert!(s.b_classes.binary_search(&b).is_ok());
                    // rebuild: b * u0^k
                    if let Some(u0) = s.u0 {
                        let u0c = s.ab_class_of[u0 as usize];
                        let kk = s.ab_reps.len();
                        let mut cur = b;
                        for _ in 0..k {
                            cur = s.ab_mul[cur as usize * kk + u0c as usize];
                        }
                        assert_eq!(cur, cls);
                    } else {
                        assert_eq!(k, 0);
                        assert_eq!(b, cls);
                    }
                }
            }
        }
    }

    #[test]
    fn aug_nilpotency_reasonable() {
        assert_eq!(g("c3").aug_nilpotency, 3);
        assert_eq!(g("c9").aug_nilpotency, 9);
        let h = g("heis27").aug_nilpotency;
        assert!(h >= 5 && h <= 9, "Heisenberg augmentation nilpotency {h}");
    }

    #[test]
    fn catalog_rejects_unknown() {
        assert!(GroupModel::catalog("nope", 3).is_err());
    }

    #[test]
    fn build_rejects_bad_automorphisms() {
        let c3: Vec<Vec<u16>> = (0..3)
            .map(|a| (0..3).map(|b| ((a + b) % 3) as u16).collect())
            .collect();
        // not a homomorphism: swaps 1 and 2 is fine (inversion is an
        // automorphism of C3), so break bijectivity instead
        let bad = GroupSpec { p: 3, h_table: c3.clone(), sigma: vec![0, 1, 1], e: 1 };
        assert_eq!(GroupModel::build(&bad).unwrap_err(), crate::Error::NotAutomorphism);
        // inversion on C3 has order 2, which does not divide 3^e
        let inv = GroupSpec { p: 3, h_table: c3.clone(), sigma: vec![0, 2, 1], e: 1 };
        assert_eq!(GroupModel::build(&inv).unwrap_err(), crate::Error::OrderViolation);
        // |H| not a power of p
        let c2: Vec<Vec<u16>> = vec![vec![0, 1], vec![1, 0]];
        let bad = GroupSpec { p: 3, h_table: c2, sigma: vec![0, 1], e: 1 };
        assert!(GroupModel::build(&bad).is_err());
    }
}
