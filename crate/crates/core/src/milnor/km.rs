//! Finite presentations of K^M_r(K)/n across the field tower.
//!
//! Finite fields get an honest brute-force closure when the symbol count is
//! small: one generator per tuple of nonzero elements, relations for
//! multiplicativity in every slot and Steinberg in every adjacent pair. That
//! is the full defining presentation, since the Steinberg ideal in degree r
//! is spanned by pure tensors flanking a degree-2 Steinberg element. Larger
//! fields fall back to the structural answer (trivial for r >= 2), and the
//! closure runs double as the oracle validating that answer in the tests.
//!
//! Valued fields split tamely: for n | q - 1 prime to p, the choice of
//! uniformizer(s) identifies K^M_r(K)/n with the free Z/n-module on the
//! square-free sorted words of length r over the working letters, the same
//! basis `steinberg_normalize` reduces to.

use std::fmt;

use crate::abgroup::reduce::RelationAccumulator;
use crate::abgroup::{direct_sum, IntMatrix, PresentedGroup};
use crate::error::{Error, Result};
use crate::fields::FqSpec;

use super::normalize::basis_words;
use super::{FieldRef, KElem, MilnorSymbol};

/// How a presentation was produced; reports carry this flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KmMethod {
    /// Brute-force relation closure over all symbols.
    Closure,
    /// Known structure of K^M of a finite field (or of the trivial modulus).
    Structural,
    /// Uniformizer splitting reduced to the residue field.
    TameSplit,
}

impl KmMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            KmMethod::Closure => "closure",
            KmMethod::Structural => "structural",
            KmMethod::TameSplit => "tame-split",
        }
    }
}

impl fmt::Display for KmMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// K^M_r(K)/n with generator labels: `generators[i]` is an explicit symbol
/// mapping to the i-th presentation generator.
#[derive(Debug, Clone)]
pub struct KmGroup {
    field: FieldRef,
    degree: usize,
    modulus: u64,
    method: KmMethod,
    group: PresentedGroup,
    generators: Vec<MilnorSymbol>,
}

impl KmGroup {
    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn method(&self) -> KmMethod {
        self.method
    }

    pub fn group(&self) -> &PresentedGroup {
        &self.group
    }

    pub fn into_group(self) -> PresentedGroup {
        self.group
    }

    pub fn generators(&self) -> &[MilnorSymbol] {
        &self.generators
    }
}

fn check_coefficients(field: &FieldRef, n: u64) -> Result<()> {
    let p = field.base().p() as u64;
    if n == 0 || n % p == 0 {
        return Err(Error::WildCoefficients(format!(
            "K^M/n needs n >= 1 with gcd(n, {p}) = 1"
        )));
    }
    Ok(())
}

fn check_tame(field: &FieldRef, n: u64) -> Result<()> {
    let q_minus_one = field.base().q() as u64 - 1;
    if q_minus_one % n != 0 {
        return Err(Error::UnsupportedField(format!(
            "the tame split needs n | q - 1; got n = {n} over {field}"
        )));
    }
    Ok(())
}

/// Presentation of K^M_r(K)/n. Requires gcd(n, p) = 1; valued fields further
/// require n | q - 1 so that the tame split is available.
pub fn km_mod_n(field: &FieldRef, r: usize, n: u64) -> Result<KmGroup> {
    check_coefficients(field, n)?;
    if !matches!(field, FieldRef::Finite(_)) {
        check_tame(field, n)?;
    }
    if n == 1 {
        return Ok(KmGroup {
            field: field.clone(),
            degree: r,
            modulus: n,
            method: match field {
                FieldRef::Finite(_) => KmMethod::Structural,
                _ => KmMethod::TameSplit,
            },
            group: PresentedGroup::trivial(Some(1)),
            generators: Vec::new(),
        });
    }
    match field {
        FieldRef::Finite(spec) => km_finite(spec, field, r, n),
        _ => {
            let words = basis_words(field, r);
            let generators = words
                .iter()
                .map(|w| {
                    let entries: Vec<KElem> = w.iter().map(|l| l.element(field)).collect();
                    MilnorSymbol::new(field.clone(), entries)
                })
                .collect::<Result<Vec<_>>>()?;
            // free Z/n-module on the basis words: n | q - 1 makes the residue
            // torsion relations (q - 1)·e_w redundant
            let group = PresentedGroup::new(words.len(), IntMatrix::zero(words.len(), 0), Some(n));
            Ok(KmGroup {
                field: field.clone(),
                degree: r,
                modulus: n,
                method: KmMethod::TameSplit,
                group,
                generators,
            })
        }
    }
}

fn km_finite(spec: &FqSpec, field: &FieldRef, r: usize, n: u64) -> Result<KmGroup> {
    let q_minus_one = spec.q() as u64 - 1;
    let done = |method, group, generators| {
        Ok(KmGroup {
            field: field.clone(),
            degree: r,
            modulus: n,
            method,
            group,
            generators,
        })
    };
    match r {
        0 => done(
            KmMethod::Structural,
            PresentedGroup::new(1, IntMatrix::zero(1, 0), Some(n)),
            vec![MilnorSymbol::new(field.clone(), Vec::new())?],
        ),
        1 => done(
            KmMethod::Structural,
            PresentedGroup::cyclic_sum(&[q_minus_one], Some(n)),
            vec![MilnorSymbol::new(
                field.clone(),
                vec![KElem::Fq(spec.multiplicative_generator())],
            )?],
        ),
        _ if closure_feasible(q_minus_one, r) => {
            let (group, generators) = finite_closure(spec, field, r, n)?;
            done(KmMethod::Closure, group, generators)
        }
        // K^M_r(F_q) = 0 for r >= 2; the closure route cross-validates this
        // on every field small enough to enumerate
        _ => done(KmMethod::Structural, PresentedGroup::trivial(Some(n)), Vec::new()),
    }
}

/// Symbol enumeration stays under (q-1)^r <= 512 tuples.
fn closure_feasible(q_minus_one: u64, r: usize) -> bool {
    let mut count = 1u64;
    for _ in 0..r {
        count = count.saturating_mul(q_minus_one);
        if count > 512 {
            return false;
        }
    }
    true
}

/// Defining presentation of K^M_r(F_q)/n on one generator per r-tuple of
/// nonzero elements, encoded by discrete logs base the fixed generator g.
fn finite_closure(
    spec: &FqSpec,
    field: &FieldRef,
    r: usize,
    n: u64,
) -> Result<(PresentedGroup, Vec<MilnorSymbol>)> {
    let qm1 = (spec.q() - 1) as usize;
    let num = qm1.pow(r as u32);
    // big-endian mixed radix: slot k carries weight qm1^(r-1-k)
    let stride: Vec<usize> = (0..r).map(|k| qm1.pow((r - 1 - k) as u32)).collect();
    let mut acc = RelationAccumulator::new(num, n);

    // e(.., g^x, ..) + e(.., g^y, ..) = e(.., g^{x+y}, ..), x, y over the full
    // exponent range: x = y = 0 yields e(.., 1, ..) = 0
    for slot in 0..r {
        let others: Vec<usize> = (0..r).filter(|&s| s != slot).collect();
        each_assignment(&others, &stride, qm1, &mut |base| {
            for x in 0..qm1 {
                for y in 0..qm1 {
                    let z = (x + y) % qm1;
                    acc.add_column(&[
                        (base + x * stride[slot], 1),
                        (base + y * stride[slot], 1),
                        (base + z * stride[slot], -1),
                    ]);
                }
            }
        });
    }

    // e(.., a, 1-a, ..) = 0 in every adjacent slot pair
    for slot in 0..r.saturating_sub(1) {
        let others: Vec<usize> = (0..r).filter(|&s| s != slot && s != slot + 1).collect();
        let mut pairs = Vec::new();
        for a in spec.elements() {
            if a.is_zero() || a.is_one() {
                continue;
            }
            let one_minus = spec.one().sub(&a);
            pairs.push((spec.dlog(&a)? as usize, spec.dlog(&one_minus)? as usize));
        }
        each_assignment(&others, &stride, qm1, &mut |base| {
            for &(da, d1a) in &pairs {
                acc.add_column(&[(base + da * stride[slot] + d1a * stride[slot + 1], 1)]);
            }
        });
    }

    let pres = acc.into_presentation();
    let g = spec.multiplicative_generator();
    let generators = pres
        .survivors
        .iter()
        .map(|&idx| {
            let entries: Vec<KElem> = (0..r)
                .map(|k| KElem::Fq(g.pow_u(((idx / stride[k]) % qm1) as u64)))
                .collect();
            MilnorSymbol::new(field.clone(), entries)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pres.group, generators))
}

/// Visit every exponent assignment to `slots`, passing the weighted sum.
fn each_assignment(slots: &[usize], stride: &[usize], qm1: usize, f: &mut impl FnMut(usize)) {
    let mut digits = vec![0usize; slots.len()];
    loop {
        let base: usize = digits.iter().zip(slots).map(|(&d, &s)| d * stride[s]).sum();
        f(base);
        let mut i = 0;
        loop {
            if i == digits.len() {
                return;
            }
            digits[i] += 1;
            if digits[i] < qm1 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Independent route for the same groups: recurse through residue fields via
/// K^M_r(K)/n = K^M_r(k)/n + K^M_{r-1}(k)/n, assembling block sums, with the
/// finite base handled by `km_mod_n` (closure where feasible).
pub fn km_tame_split_oracle(field: &FieldRef, r: usize, n: u64) -> Result<PresentedGroup> {
    check_coefficients(field, n)?;
    match field {
        FieldRef::Finite(_) => Ok(km_mod_n(field, r, n)?.into_group()),
        _ => {
            check_tame(field, n)?;
            if n == 1 {
                return Ok(PresentedGroup::trivial(Some(1)));
            }
            if r == 0 {
                return Ok(PresentedGroup::new(1, IntMatrix::zero(1, 0), Some(n)));
            }
            let k = field.residue_field().expect("valued field");
            let units_part = km_tame_split_oracle(&k, r, n)?;
            let pi_part = km_tame_split_oracle(&k, r - 1, n)?;
            direct_sum(&units_part, &pi_part)
        }
    }
}

/// Image of U^i = 1 + m^i inside K^M_r(K)/n. Level 0 is the full group; for
/// i >= 1 and gcd(n, p) = 1 every principal unit is an n-th power (Newton
/// lifting, certified by `principal_unit_nth_root`), so the image vanishes.
pub fn unit_filtration(field: &FieldRef, r: usize, i: usize, n: u64) -> Result<KmGroup> {
    if i == 0 {
        return km_mod_n(field, r, n);
    }
    if matches!(field, FieldRef::Finite(_)) {
        return Err(Error::UnsupportedField(
            "the unit filtration needs a valuation; finite fields have none".into(),
        ));
    }
    check_coefficients(field, n)?;
    check_tame(field, n)?;
    Ok(KmGroup {
        field: field.clone(),
        degree: r,
        modulus: n,
        method: KmMethod::Structural,
        group: PresentedGroup::trivial(Some(n)),
        generators: Vec::new(),
    })
}
