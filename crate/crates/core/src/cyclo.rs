//! Degree p-1 cyclotomic extension of a twisted algebra: coordinates over
//! the basis 1, zeta, .., zeta^{p-2} modulo the p-th cyclotomic polynomial.
//! Used for the order-p character twists in the alpha map; results must
//! descend to the base ring, which is checked, not assumed.

use crate::gring::{Algebra, Elt};
use crate::Error;

#[derive(Debug, Clone)]
pub struct CycloElt {
    pub coords: Vec<Elt>,
}

pub fn cyclo_from_base(alg: &Algebra, x: &Elt) -> CycloElt {
    let p = alg.ring.p() as usize;
    let mut coords = vec![alg.zero(); p - 1];
    coords[0] = x.clone();
    CycloElt { coords }
}

pub fn cyclo_mul(alg: &Algebra, a: &CycloElt, b: &CycloElt) -> CycloElt {
    let p = alg.ring.p() as usize;
    let mut wide = vec![alg.zero(); 2 * p - 3];
    for i in 0..p - 1 {
        if alg.is_zero(&a.coords[i]) {
            continue;
        }
        for j in 0..p - 1 {
            if alg.is_zero(&b.coords[j]) {
                continue;
            }
            let t = alg.mul(&a.coords[i], &b.coords[j]);
            wide[i + j] = alg.add(&wide[i + j], &t);
        }
    }
    // reduce zeta^{p-1+k} = -(zeta^k + zeta^{k+1} + ... + zeta^{k+p-2})
    for k in (0..p - 2).rev() {
        let c = wide[p - 1 + k].clone();
        if alg.is_zero(&c) {
            continue;
        }
        wide[p - 1 + k] = alg.zero();
        for j in 0..p - 1 {
            wide[k + j] = alg.sub_elt(&wide[k + j], &c);
        }
    }
    CycloElt { coords: wide.into_iter().take(p - 1).collect() }
}

/// Galois action zeta -> zeta^s.
pub fn cyclo_galois(alg: &Algebra, a: &CycloElt, s: usize) -> CycloElt {
    let p = alg.ring.p() as usize;
    let mut wide = vec![alg.zero(); 1 + (p - 2) * s];
    for (i, c) in a.coords.iter().enumerate() {
        if !alg.is_zero(c) {
            wide[i * s] = alg.add(&wide[i * s], c);
        }
    }
    // reduce top powers
    let mut k = wide.len();
    while k > p - 1 {
        k -= 1;
        let c = wide[k].clone();
        if !alg.is_zero(&c) {
            wide[k] = alg.zero();
            let base = k - (p - 1);
            for j in 0..p - 1 {
                wide[base + j] = alg.sub_elt(&wide[base + j], &c);
            }
        }
    }
    CycloElt { coords: wide.into_iter().take(p - 1).collect() }
}

fn primitive_root(p: u64) -> u64 {
    'outer: for g in 2..p {
        let mut x = g;
        for _ in 0..p - 2 {
            if x == 1 {
                continue 'outer;
            }
            x = x * g % p;
        }
        if x == 1 {
            return g;
        }
    }
    unreachable!("odd prime has a primitive root")
}

/// omega^k applied to an element of Ab(P) for cyclic P: basis class g gains
/// the root of unity zeta^{k * chi(g)}, where chi is the canonical order-p
/// character sending the canonical generator of P to zeta.
pub fn omega_twist(alg: &Algebra, chi: &[u32], x: &Elt, k: u64) -> CycloElt {
    let p = alg.ring.p() as usize;
    let mut coords = vec![alg.zero(); p - 1];
    for i in 0..alg.dim {
        let blk = alg.block(x, i);
        if blk.iter().all(|&v| v == 0) {
            continue;
        }
        let zexp = (k as usize * chi[i] as usize) % p;
        let mut term = alg.zero();
        alg.block_mut(&mut term, i).copy_from_slice(blk);
        if zexp < p - 1 {
            coords[zexp] = alg.add(&coords[zexp], &term);
        } else {
            // zeta^{p-1} = -(1 + zeta + ... + zeta^{p-2})
            for c in coords.iter_mut() {
                *c = alg.sub_elt(c, &term);
            }
        }
    }
    CycloElt { coords }
}

/// The canonical order-p character values chi(class) for cyclic P: discrete
/// logarithm base the canonical (minimal) generator, reduced mod p.
pub fn canonical_character(alg: &Algebra) -> Result<Vec<u32>, Error> {
    let pid = alg.pid().ok_or(Error::NotCyclic)?;
    let g = &alg.group;
    let s = &g.subgroups[pid];
    if !s.is_cyclic {
        return Err(Error::NotCyclic);
    }
    let p = g.p as u32;
    let gens = g.cyclic_generators(pid);
    let c = *gens.iter().min().unwrap();
    // walk powers of c through the classes (classes are the elements here:
    // cyclic P has trivial derived subgroup)
    let mut chi = vec![u32::MAX; alg.dim];
    let mut cur: u16 = 0;
    for j in 0..s.order as u32 {
        let cls = s.ab_class_of[cur as usize];
        chi[cls as usize] = j % p;
        cur = g.m(cur, c);
    }
    assert!(chi.iter().all(|&v| v != u32::MAX));
    Ok(chi)
}

/// prod_{k=0}^{p-1} omega^k(x), computed in the cyclotomic extension and
/// verified to descend to the base ring.
pub fn cyclo_product(alg: &Algebra, chi: &[u32], x: &Elt) -> Result<Elt, Error> {
    let p = alg.ring.p();
    let mut acc = cyclo_from_base(alg, &alg.one());
    for k in 0..p {
        let t = omega_twist(alg, chi, x, k);
        acc = cyclo_mul(alg, &acc, &t);
    }
    // Galois stability before projecting
    let s = primitive_root(p) as usize;
    let moved = cyclo_galois(alg, &acc, s);
    for (a, b) in acc.coords.iter().zip(&moved.coords) {
        if a != b {
            return Err(Error::NotGaloisStable);
        }
    }
    for c in acc.coords.iter().skip(1) {
        if !alg.is_zero(c) {
            return Err(Error::NotGaloisStable);
        }
    }
    Ok(acc.coords.swap_remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrimeConfig;
    use crate::pgroup::GroupModel;
    use crate::series::{SeriesConfig, SeriesRing};
    use std::rc::Rc;

    fn setup_cyclic() -> (Rc<SeriesRing>, Rc<GroupModel>, usize) {
        let prime = PrimeConfig::new(3, 1, 4).unwrap();
        let cfg = SeriesConfig::new(prime, 1, 2, 2).unwrap();
        let ring = Rc::new(SeriesRing::new(cfg, 8).unwrap());
        let group = Rc::new(GroupModel::catalog("c9", 3).unwrap());
        let pid = group.full_id;
        (ring, group, pid)
    }

    #[test]
    fn product_of_one_is_one() {
        let (ring, group, pid) = setup_cyclic();
        let ab = Algebra::ab(ring, group, pid);
        let chi = canonical_character(&ab).unwrap();
        let r = cyclo_product(&ab, &chi, &ab.one()).unwrap();
        assert_eq!(r, ab.pow(&ab.one(), 3));
    }

    #[test]
    fn product_on_generator_is_pth_power() {
        // for a generator c of cyclic P of order divisible by p:
        // prod_k omega^k(c) = zeta^{p(p-1)/2} c^p = c^p for odd p
        let (ring, group, pid) = setup_cyclic();
        let ab = Algebra::ab(ring, group.clone(), pid);
        let chi = canonical_character(&ab).unwrap();
        let gens = group.cyclic_generators(pid);
        let c = *gens.iter().min().unwrap();
        let cls = group.subgroups[pid].ab_class_of[c as usize];
        let x = ab.basis_elt(cls, 0);
        let r = cyclo_product(&ab, &chi, &x).unwrap();
        assert_eq!(r, ab.pow(&x, 3));
    }

    #[test]
    fn character_trivial_on_pth_powers() {
        let (ring, group, pid) = setup_cyclic();
        let ab = Algebra::ab(ring, group.clone(), pid);
        let chi = canonical_character(&ab).unwrap();
        // h = c^3 has chi = 0; prod_k omega^k(h) = h^p
        let gens = group.cyclic_generators(pid);
        let c = *gens.iter().min().unwrap();
        let h = group.gpow((c, 0), 3);
        let cls = group.subgroups[pid].ab_class_of[h.0 as usize];
        assert_eq!(chi[cls as usize], 0);
        let x = ab.basis_elt(cls, h.1);
        let r = cyclo_product(&ab, &chi, &x).unwrap();
        assert_eq!(r, ab.pow(&x, 3));
    }

    #[test]
    fn cyclo_mul_reduces_phi_p() {
        // (zeta)(zeta) at p=3: zeta^2 = -(1+zeta)
        let (ring, group, pid) = setup_cyclic();
        let ab = Algebra::ab(ring, group, pid);
        let mut z = cyclo_from_base(&ab, &ab.zero());
        z.coords[1] = ab.one();
        let z2 = cyclo_mul(&ab, &z, &z);
        assert_eq!(z2.coords[0], ab.neg(&ab.one()));
        assert_eq!(z2.coords[1], ab.neg(&ab.one()));
    }
}
