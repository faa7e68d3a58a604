//! Exact linear algebra over Z and Z/n: integer matrices, Smith normal form,
//! finitely generated abelian groups given by relation matrices, and maps
//! between them. Every class group downstream is answered in these terms.

mod matrix;
pub(crate) mod reduce;
mod snf;

use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

pub use matrix::IntMatrix;
pub use snf::{smith_normal_form, Snf};

use crate::error::{Error, Result};

/// Finitely generated abelian group: generators e_0..e_{g-1} modulo the
/// column lattice of `relations`, additionally tensored with Z/n when
/// `modulus` is set.
#[derive(Debug, Clone)]
pub struct PresentedGroup {
    num_generators: usize,
    relations: IntMatrix,
    modulus: Option<u64>,
    invariants: OnceLock<InvariantFactors>,
}

impl PresentedGroup {
    pub fn new(num_generators: usize, relations: IntMatrix, modulus: Option<u64>) -> Self {
        assert_eq!(
            relations.rows(),
            num_generators,
            "relation matrix must have one row per generator"
        );
        if let Some(n) = modulus {
            assert!(n >= 1, "modulus must be positive");
        }
        PresentedGroup {
            num_generators,
            relations,
            modulus,
            invariants: OnceLock::new(),
        }
    }

    pub fn free(rank: usize) -> Self {
        PresentedGroup::new(rank, IntMatrix::zero(rank, 0), None)
    }

    pub fn trivial(modulus: Option<u64>) -> Self {
        PresentedGroup::new(0, IntMatrix::zero(0, 0), modulus)
    }

    /// Z/orders[0] ⊕ Z/orders[1] ⊕ … (orders need not form a chain).
    pub fn cyclic_sum(orders: &[u64], modulus: Option<u64>) -> Self {
        let g = orders.len();
        let mut m = IntMatrix::zero(g, g);
        for (i, &d) in orders.iter().enumerate() {
            m.set(i, i, BigInt::from(d));
        }
        PresentedGroup::new(g, m, modulus)
    }

    pub fn num_generators(&self) -> usize {
        self.num_generators
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn modulus(&self) -> Option<u64> {
        self.modulus
    }

    /// Relation matrix with the modulus relations n·e_i appended, the single
    /// matrix whose cokernel is the group.
    fn effective_relations(&self) -> IntMatrix {
        match self.modulus {
            None => self.relations.clone(),
            Some(n) => {
                let g = self.num_generators;
                let mut scaled = IntMatrix::zero(g, g);
                for i in 0..g {
                    scaled.set(i, i, BigInt::from(n));
                }
                self.relations.hstack(&scaled)
            }
        }
    }

    /// Canonical invariant-factor decomposition. The SNF certificate
    /// (U·M·V = S, unimodularity) is re-checked before the result is cached.
    pub fn invariant_factors(&self) -> &InvariantFactors {
        self.invariants.get_or_init(|| {
            let m = self.effective_relations();
            let snf = smith_normal_form(&m);
            assert_eq!(snf.u.mul(&m).mul(&snf.v), snf.s, "SNF certificate failed");
            assert!(
                snf.u.is_unimodular() && snf.v.is_unimodular(),
                "SNF transforms not unimodular"
            );
            let diag = snf.diagonal();
            let rank = diag.iter().filter(|d| !d.is_zero()).count();
            let factors = diag
                .iter()
                .filter(|d| !d.is_zero() && !d.is_one())
                .map(|d| d.to_biguint().expect("SNF diagonal is non-negative"))
                .collect();
            InvariantFactors {
                factors,
                free_rank: self.num_generators - rank,
            }
        })
    }

    /// Group order; None when infinite.
    pub fn order(&self) -> Option<BigUint> {
        let inv = self.invariant_factors();
        if inv.free_rank > 0 {
            return None;
        }
        Some(inv.factors.iter().product())
    }

    pub fn is_trivial(&self) -> bool {
        let inv = self.invariant_factors();
        inv.factors.is_empty() && inv.free_rank == 0
    }

    /// Isomorphism test via invariant factors. Comparing a group that carries
    /// a modulus with one that does not is refused.
    pub fn is_isomorphic(&self, other: &PresentedGroup) -> Result<bool> {
        if self.modulus.is_some() != other.modulus.is_some() {
            return Err(Error::MixedModulus(
                "cannot compare a mod-n presentation with an integral one".into(),
            ));
        }
        Ok(self.invariant_factors() == other.invariant_factors())
    }
}

/// Canonical decomposition Z/d_1 ⊕ … ⊕ Z/d_k ⊕ Z^free_rank with
/// d_1 | d_2 | … and every d_i > 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantFactors {
    pub factors: Vec<BigUint>,
    pub free_rank: usize,
}

impl InvariantFactors {
    /// Factors as u64 for compact comparisons; None if any factor overflows.
    pub fn factors_u64(&self) -> Option<Vec<u64>> {
        self.factors.iter().map(u64::try_from).map(|r| r.ok()).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty() && self.free_rank == 0
    }
}

impl fmt::Display for InvariantFactors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts: Vec<String> = self.factors.iter().map(|d| format!("Z/{d}")).collect();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".into()),
            r => parts.push(format!("Z^{r}")),
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl serde::Serialize for InvariantFactors {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let arr: Vec<serde_json::Value> = self
            .factors
            .iter()
            .map(|d| match u64::try_from(d) {
                Ok(v) => serde_json::Value::from(v),
                Err(_) => serde_json::Value::from(d.to_string()),
            })
            .collect();
        let mut st = s.serialize_struct("InvariantFactors", 2)?;
        st.serialize_field("invariant_factors", &arr)?;
        st.serialize_field("free_rank", &self.free_rank)?;
        st.end()
    }
}

/// Homomorphism between presented groups, given on generators by `matrix`
/// (column j = image of source generator j). Construction checks that source
/// relations land in the target's relation lattice, so the map is well
/// defined on the quotients.
#[derive(Debug, Clone)]
pub struct GroupMap {
    source: PresentedGroup,
    target: PresentedGroup,
    matrix: IntMatrix,
}

impl GroupMap {
    pub fn new(source: PresentedGroup, target: PresentedGroup, matrix: IntMatrix) -> Result<Self> {
        if matrix.rows() != target.num_generators() || matrix.cols() != source.num_generators() {
            return Err(Error::InvalidJob(format!(
                "map matrix is {}x{}, want {}x{}",
                matrix.rows(),
                matrix.cols(),
                target.num_generators(),
                source.num_generators()
            )));
        }
        let target_lattice = target.effective_relations();
        let snf = smith_normal_form(&target_lattice);
        let diag = snf.diagonal();
        let source_rels = source.effective_relations();
        for j in 0..source_rels.cols() {
            let image = matrix.mul_vec(&source_rels.column(j));
            if !in_lattice(&snf, &diag, &image) {
                return Err(Error::InvalidJob(format!(
                    "relation {j} of the source does not map into the target relation lattice"
                )));
            }
        }
        Ok(GroupMap {
            source,
            target,
            matrix,
        })
    }

    pub fn source(&self) -> &PresentedGroup {
        &self.source
    }

    pub fn target(&self) -> &PresentedGroup {
        &self.target
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    /// target / image(source): the target relations plus one relation per
    /// source generator image. Modulus is inherited from the target.
    pub fn cokernel(&self) -> PresentedGroup {
        PresentedGroup::new(
            self.target.num_generators(),
            self.target.relations().hstack(&self.matrix),
            self.target.modulus(),
        )
    }
}

/// Solvability of S·z = U·x, i.e. membership of x in the column lattice.
fn in_lattice(snf: &Snf, diag: &[BigInt], x: &[BigInt]) -> bool {
    let w = snf.u.mul_vec(x);
    for (i, wi) in w.iter().enumerate() {
        let di = diag.get(i).cloned().unwrap_or_else(BigInt::zero);
        if di.is_zero() {
            if !wi.is_zero() {
                return false;
            }
        } else if !wi.mod_floor(&di).is_zero() {
            return false;
        }
    }
    true
}

pub fn cokernel(f: &GroupMap) -> PresentedGroup {
    f.cokernel()
}

/// External direct sum: generators concatenated, relations block-diagonal.
pub fn direct_sum(a: &PresentedGroup, b: &PresentedGroup) -> Result<PresentedGroup> {
    if a.modulus() != b.modulus() {
        return Err(Error::MixedModulus(
            "direct sum needs matching coefficient moduli".into(),
        ));
    }
    let (ga, gb) = (a.num_generators(), b.num_generators());
    let (ra, rb) = (a.relations().cols(), b.relations().cols());
    let mut m = IntMatrix::zero(ga + gb, ra + rb);
    for i in 0..ga {
        for j in 0..ra {
            m.set(i, j, a.relations().get(i, j).clone());
        }
    }
    for i in 0..gb {
        for j in 0..rb {
            m.set(ga + i, ra + j, b.relations().get(i, j).clone());
        }
    }
    Ok(PresentedGroup::new(ga + gb, m, a.modulus()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use std::collections::BTreeSet;

    fn factors(g: &PresentedGroup) -> Vec<u64> {
        g.invariant_factors().factors_u64().expect("small factors")
    }

    #[test]
    fn invariant_factors_examples() {
        // Z/2 + Z from a single column (2, 0)
        let g = PresentedGroup::new(2, IntMatrix::from_rows(&[vec![2], vec![0]]), None);
        let inv = g.invariant_factors();
        assert_eq!(factors(&g), vec![2]);
        assert_eq!(inv.free_rank, 1);

        // Z/6 from modulus alone
        let g = PresentedGroup::new(1, IntMatrix::zero(1, 0), Some(6));
        assert_eq!(factors(&g), vec![6]);
        assert_eq!(g.invariant_factors().free_rank, 0);

        // coker [[2,4],[6,8]] = Z/2 + Z/4
        let g = PresentedGroup::new(2, IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]), None);
        assert_eq!(factors(&g), vec![2, 4]);
        assert_eq!(g.invariant_factors().free_rank, 0);
    }

    #[test]
    fn is_isomorphic_examples() {
        let z2z4 = PresentedGroup::cyclic_sum(&[2, 4], None);
        let z8 = PresentedGroup::cyclic_sum(&[8], None);
        assert!(!z2z4.is_isomorphic(&z8).unwrap());

        let a = PresentedGroup::cyclic_sum(&[2, 2], None);
        let b = PresentedGroup::cyclic_sum(&[2, 2], None);
        assert!(a.is_isomorphic(&b).unwrap());

        let coker = PresentedGroup::new(2, IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]), None);
        assert!(coker.is_isomorphic(&z2z4).unwrap());

        let modded = PresentedGroup::cyclic_sum(&[2], Some(4));
        let err = modded.is_isomorphic(&z2z4).unwrap_err();
        assert_eq!(err.code(), "MIXED_MODULUS");
        // two different moduli are fine as long as both are set
        let other = PresentedGroup::cyclic_sum(&[2], Some(6));
        assert!(modded.is_isomorphic(&other).unwrap());
    }

    #[test]
    fn cokernel_examples() {
        let z = PresentedGroup::free(1);
        let z2 = PresentedGroup::free(2);

        // zero map: cokernel is the target
        let f = GroupMap::new(z.clone(), z2.clone(), IntMatrix::zero(2, 1)).unwrap();
        let c = cokernel(&f);
        assert!(c.is_isomorphic(&z2).unwrap());

        // identity: trivial cokernel
        let f = GroupMap::new(z2.clone(), z2.clone(), IntMatrix::identity(2)).unwrap();
        assert!(cokernel(&f).is_trivial());

        // x -> (2x, 0): Z/2 + Z
        let f = GroupMap::new(
            z.clone(),
            z2.clone(),
            IntMatrix::from_rows(&[vec![2], vec![0]]),
        )
        .unwrap();
        let c = cokernel(&f);
        assert_eq!(factors(&c), vec![2]);
        assert_eq!(c.invariant_factors().free_rank, 1);
    }

    #[test]
    fn group_map_rejects_unpreserved_relations() {
        // Z/2 -> Z by 1 is not a homomorphism: 2 maps to 2, not in lattice {0}
        let src = PresentedGroup::cyclic_sum(&[2], None);
        let tgt = PresentedGroup::free(1);
        let err = GroupMap::new(src, tgt, IntMatrix::from_rows(&[vec![1]])).unwrap_err();
        assert_eq!(err.code(), "INVALID_JOB");

        // Z/2 -> Z/4 by 2 is fine
        let src = PresentedGroup::cyclic_sum(&[2], None);
        let tgt = PresentedGroup::cyclic_sum(&[4], None);
        let f = GroupMap::new(src, tgt, IntMatrix::from_rows(&[vec![2]])).unwrap();
        assert_eq!(factors(&f.cokernel()), vec![2]);
    }

    #[test]
    fn invariant_factors_stable_under_presentation_noise() {
        let mut rng = SplitMix64::new(0xabc1);
        for _ in 0..50 {
            let g = 1 + rng.below(4) as usize;
            let c = rng.below(5) as usize;
            let mut m = IntMatrix::zero(g, c);
            for i in 0..g {
                for j in 0..c {
                    m.set(i, j, BigInt::from(rng.range_i64(-9, 10)));
                }
            }
            let base = PresentedGroup::new(g, m.clone(), None);
            let want = base.invariant_factors().clone();

            // permute rows and columns
            let mut p = m.clone();
            if g > 1 {
                p.swap_rows(0, rng.below(g as u64) as usize);
            }
            if c > 1 {
                p.swap_cols(0, rng.below(c as u64) as usize);
            }
            let permuted = PresentedGroup::new(g, p, None);
            assert_eq!(*permuted.invariant_factors(), want);

            // append zero relations
            let padded = PresentedGroup::new(g, m.hstack(&IntMatrix::zero(g, 2)), None);
            assert_eq!(*padded.invariant_factors(), want);
        }
    }

    /// Order of Z_n^g modulo the column span, by closing the span under
    /// addition. Independent of SNF.
    fn brute_force_order(g: usize, cols: &[Vec<i64>], n: u64) -> u64 {
        let reduce = |v: &[i64]| -> Vec<u64> {
            v.iter().map(|&x| x.rem_euclid(n as i64) as u64).collect()
        };
        let mut span: BTreeSet<Vec<u64>> = BTreeSet::new();
        let mut work = vec![vec![0u64; g]];
        span.insert(vec![0u64; g]);
        while let Some(v) = work.pop() {
            for c in cols {
                let c = reduce(c);
                let sum: Vec<u64> = v.iter().zip(&c).map(|(a, b)| (a + b) % n).collect();
                if span.insert(sum.clone()) {
                    work.push(sum);
                }
            }
        }
        n.pow(g as u32) / span.len() as u64
    }

    #[test]
    fn order_matches_brute_force_enumeration() {
        let mut rng = SplitMix64::new(0xabc2);
        for _ in 0..60 {
            let g = 1 + rng.below(3) as usize;
            let n = 2 + rng.below(5); // 2..=6, n^g <= 216
            let ncols = rng.below(4) as usize;
            let cols: Vec<Vec<i64>> = (0..ncols)
                .map(|_| (0..g).map(|_| rng.range_i64(-7, 8)).collect())
                .collect();
            let mut m = IntMatrix::zero(g, ncols);
            for (j, col) in cols.iter().enumerate() {
                for (i, v) in col.iter().enumerate() {
                    m.set(i, j, BigInt::from(*v));
                }
            }
            let group = PresentedGroup::new(g, m, Some(n));
            let want = brute_force_order(g, &cols, n);
            assert_eq!(
                group.order().expect("finite"),
                BigUint::from(want),
                "order mismatch for g={g} n={n} cols={cols:?}"
            );
        }
    }

    #[test]
    fn display_and_serialization() {
        let g = PresentedGroup::new(2, IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]), None);
        let inv = g.invariant_factors();
        assert_eq!(inv.to_string(), "Z/2 + Z/4");
        let json = serde_json::to_value(inv).unwrap();
        assert_eq!(json["invariant_factors"], serde_json::json!([2, 4]));
        assert_eq!(json["free_rank"], serde_json::json!(0));

        assert_eq!(PresentedGroup::free(2).invariant_factors().to_string(), "Z^2");
        assert_eq!(
            PresentedGroup::trivial(None).invariant_factors().to_string(),
            "0"
        );
    }

    #[test]
    fn direct_sum_examples() {
        let a = PresentedGroup::cyclic_sum(&[4], Some(4));
        let b = PresentedGroup::cyclic_sum(&[2, 4], Some(4));
        let s = direct_sum(&a, &b).unwrap();
        assert_eq!(factors(&s), vec![2, 4, 4]);
        let t = direct_sum(&s, &PresentedGroup::trivial(Some(4))).unwrap();
        assert_eq!(factors(&t), vec![2, 4, 4]);
        assert_eq!(
            direct_sum(&a, &PresentedGroup::free(1)).unwrap_err().code(),
            "MIXED_MODULUS"
        );
    }
}
