//! The punctured formal surface: symbol residues along its curated prime
//! divisors, the surface idele map, relative class groups, and the two-axis
//! reciprocity check.

use crate::abgroup::reduce::{ModNPresentation, RelationAccumulator};
use crate::chains::{ChainKind, ChainRecord, DivisorData, SchemePoint, SurfacePrime};
use crate::error::{Error, Result};
use crate::fields::{BiLaurentElement, BiVar, FqElem, FqSpec, LaurentElement, PolyFq, PolyFq2};
use crate::milnor::{
    basis_words, residue_symbol, residue_symbol_along, tame_coordinates, FieldRef, KElem,
    MilnorSymbol, SymbolSum,
};

use super::{ClassGroupJob, ClassGroupResult, IdeleComponent, IdeleElement, IdeleSlot};

fn two_local_sum(base: &FqSpec, x: &BiLaurentElement, y: &BiLaurentElement) -> Result<SymbolSum> {
    let sym = MilnorSymbol::new(
        FieldRef::two_local(base),
        vec![KElem::TwoLocal(x.clone()), KElem::TwoLocal(y.clone())],
    )?;
    Ok(SymbolSum::from_symbol(sym))
}

fn local_pair_sum(base: &FqSpec, var: &str, x: LaurentElement, y: LaurentElement) -> Result<SymbolSum> {
    let sym = MilnorSymbol::new(FieldRef::local(base, var), vec![KElem::Local(x), KElem::Local(y)])?;
    Ok(SymbolSum::from_symbol(sym))
}

fn monomial(spec: &FqSpec, e: usize) -> PolyFq {
    let mut reps = vec![0u32; e + 1];
    reps[e] = 1;
    PolyFq::from_reps(spec, reps)
}

fn poly_pow(base: &PolyFq, e: u64) -> PolyFq {
    let mut out = PolyFq::one(base.spec());
    for _ in 0..e {
        out = out.mul(base);
    }
    out
}

/// t -> s·g(s):  s^a t^b N(s,t) becomes s^{a+b} g^b N(s, s·g).
fn subst_graph(p2: &PolyFq2, g: &PolyFq) -> PolyFq {
    let spec = g.spec();
    let mut out = PolyFq::zero(spec);
    for ((ds, dt), c) in p2.terms() {
        let term = poly_pow(g, dt as u64)
            .scale(&c)
            .mul(&monomial(spec, (ds + dt) as usize));
        out = out.add(&term);
    }
    out
}

/// s -> t^k/c:  each s^{ds} t^{dt} becomes c^{-ds} t^{k·ds + dt}.
fn subst_eis(p2: &PolyFq2, k: u32, cinv: &FqElem) -> PolyFq {
    let spec = cinv.spec();
    let mut out = PolyFq::zero(spec);
    for ((ds, dt), coef) in p2.terms() {
        let e = (k * ds + dt) as usize;
        let val = coef.mul(&cinv.pow_u(ds as u64));
        out = out.add(&PolyFq::constant(&val).mul(&monomial(spec, e)));
    }
    out
}

/// Exact image of a monomial-unit element in the residue field F_q((s)) of a
/// graph prime t = s·g(s).
fn graph_residue(x: &BiLaurentElement, g: &PolyFq, precision: usize) -> Result<LaurentElement> {
    let spec = x.spec();
    let num = subst_graph(x.num(), g);
    let den = subst_graph(x.den(), g);
    if num.is_zero() || den.is_zero() {
        return Err(Error::UnsupportedElementForm(
            "entry vanishes along the divisor component".into(),
        ));
    }
    let ln = LaurentElement::from_polynomial(spec, "s", &num, 0, precision);
    let ld = LaurentElement::from_polynomial(spec, "s", &den, 0, precision);
    let lg = LaurentElement::from_polynomial(spec, "s", g, 0, precision);
    let a = x.exp(BiVar::S);
    let b = x.exp(BiVar::T);
    // s^a t^b = s^{a+b} g^b on the graph
    LaurentElement::uniformizer(spec, "s", precision)
        .pow(a + b)?
        .mul(&lg.pow(b)?)
        .mul(&ln)
        .div(&ld)
}

/// Exact image in F_q((t)) of an Eisenstein prime c·s = t^k.
fn eis_residue(x: &BiLaurentElement, k: u32, c: &FqElem, precision: usize) -> Result<LaurentElement> {
    let spec = x.spec();
    let cinv = c.inv()?;
    let num = subst_eis(x.num(), k, &cinv);
    let den = subst_eis(x.den(), k, &cinv);
    if num.is_zero() || den.is_zero() {
        return Err(Error::UnsupportedElementForm(
            "entry vanishes along the divisor component".into(),
        ));
    }
    let ln = LaurentElement::from_polynomial(spec, "t", &num, 0, precision);
    let ld = LaurentElement::from_polynomial(spec, "t", &den, 0, precision);
    let a = x.exp(BiVar::S);
    let b = x.exp(BiVar::T);
    // s^a t^b = c^{-a} t^{ka+b} along the prime
    let scalar = LaurentElement::from_unit(spec, "t", 0, vec![c.pow(-a)?])?;
    LaurentElement::uniformizer(spec, "t", precision)
        .pow(k as i64 * a + b)?
        .mul(&scalar)
        .mul(&ln)
        .div(&ld)
}

/// The diagonal symbol at one divisor prime.  S-chains are recorded in
/// swapped coordinates (their residue tower reads t before s); graph and
/// Eisenstein chains get the exact substituted pair in the residue field.
fn diagonal_sum(
    base: &FqSpec,
    prime: &SurfacePrime,
    f: &BiLaurentElement,
    g: &BiLaurentElement,
    precision: usize,
) -> Result<SymbolSum> {
    match prime {
        SurfacePrime::T => two_local_sum(base, f, g),
        SurfacePrime::S => two_local_sum(base, &f.swap_vars(), &g.swap_vars()),
        SurfacePrime::Graph(gp) => local_pair_sum(
            base,
            "s",
            graph_residue(f, gp, precision)?,
            graph_residue(g, gp, precision)?,
        ),
        SurfacePrime::Eisenstein { k, c } => local_pair_sum(
            base,
            "t",
            eis_residue(f, *k, c, precision)?,
            eis_residue(g, *k, c, precision)?,
        ),
        SurfacePrime::Candidate(_) => Err(Error::AnalyticSplittingUnsupported(
            "prime is outside the curated list".into(),
        )),
    }
}

/// True when every term of a K_1 sum is the unit symbol {1}, which the
/// residue formula produces for pairs of units; such a component carries no
/// information and is dropped from the idele support.
fn k1_sum_is_one(sum: &SymbolSum) -> bool {
    sum.terms().iter().all(|(_, sym)| match sym.entries() {
        [KElem::Local(u)] => {
            u.valuation().is_ok_and(|v| v == 0)
                && (0..u.precision().unwrap_or(0) as i64).all(|k| {
                    u.known_coeff(k)
                        .is_some_and(|c| if k == 0 { c.is_one() } else { c.is_zero() })
                })
        }
        _ => false,
    })
}

/// Idele image of a K_2 symbol with monomial-unit entries: the diagonal
/// symbol on every chain through Supp D, the residue symbol on the chains
/// through the remaining axis primes.
pub(super) fn q_map_surface(
    divisor: &DivisorData,
    f: &BiLaurentElement,
    g: &BiLaurentElement,
) -> Result<IdeleElement> {
    let model = divisor.model().clone();
    let base = model.base().clone();
    if f.spec() != &base || g.spec() != &base {
        return Err(Error::UnsupportedElementForm(
            "symbol entries live over a different base field".into(),
        ));
    }
    let mut support = Vec::new();
    for (point, _) in divisor.components() {
        let SchemePoint::Prime(prime) = point else {
            return Err(Error::InvalidJob("surface divisor with a non-prime component".into()));
        };
        let chain = ChainRecord::new(
            &model,
            vec![SchemePoint::ClosedPoint, point.clone(), SchemePoint::Generic],
            ChainKind::ParshinOnPair,
            divisor,
        )?;
        let sum = diagonal_sum(&base, prime, f, g, crate::fields::DEFAULT_PRECISION)?;
        support.push((chain, IdeleComponent::Sum(sum)));
    }
    for (prime, axis) in [(SurfacePrime::S, Some(BiVar::S)), (SurfacePrime::T, None)] {
        let point = SchemePoint::Prime(prime);
        if divisor.multiplicity_of(&point) > 0 {
            continue;
        }
        let sum = two_local_sum(&base, f, g)?;
        let res = match axis {
            Some(a) => residue_symbol_along(&sum, a)?,
            None => residue_symbol(&sum)?,
        };
        if res.is_empty() || k1_sum_is_one(&res) {
            continue;
        }
        let points = if divisor.is_empty() {
            vec![point]
        } else {
            vec![SchemePoint::ClosedPoint, point]
        };
        let chain = ChainRecord::new(&model, points, ChainKind::ParshinOnPair, divisor)?;
        support.push((chain, IdeleComponent::Sum(res)));
    }
    Ok(IdeleElement::new(divisor.clone(), support))
}

/// C(X, D)/n for the punctured surface.
///
/// Generators: the tame basis words of the two-dimensional symbol group and
/// the principal-unit witnesses on every chain through Supp D, plus [pi] and
/// [gamma] in K_1 on the chains through the axis primes away from D.
/// Relations: finite orders; the K_1 summands at away-primes are killed
/// outright (the one-step chain through such a prime surjects onto them);
/// and one column per generating pair of monomial units, recording its tame
/// coordinates along every component at once.  No column depends on the
/// degree bound, so stabilization is immediate.
pub(super) fn class_group_surface(job: &ClassGroupJob) -> Result<ClassGroupResult> {
    let base = job.model().base().clone();
    let n = job.n();
    let p = base.p() as u64;
    let precision = job.precision();
    let word_count = basis_words(&FieldRef::two_local(&base), 2).len();

    let mut dprimes: Vec<(SurfacePrime, u64, usize)> = Vec::new();
    let mut slots: Vec<IdeleSlot> = Vec::new();
    for (point, mult) in job.divisor().components() {
        let SchemePoint::Prime(prime) = point else {
            return Err(Error::InvalidJob("surface divisor with a non-prime component".into()));
        };
        if matches!(prime, SurfacePrime::Candidate(_)) {
            return Err(Error::AnalyticSplittingUnsupported(
                "prime is outside the curated list".into(),
            ));
        }
        dprimes.push((prime.clone(), *mult, slots.len()));
        for w in 0..word_count {
            slots.push(IdeleSlot::Word(point.clone(), w));
        }
        for i in 1..*mult {
            slots.push(IdeleSlot::Principal(point.clone(), i as u32));
        }
    }
    let mut uprimes: Vec<(SurfacePrime, usize)> = Vec::new();
    for prime in [SurfacePrime::S, SurfacePrime::T] {
        let point = SchemePoint::Prime(prime.clone());
        if job.divisor().multiplicity_of(&point) > 0 {
            continue;
        }
        uprimes.push((prime, slots.len()));
        slots.push(IdeleSlot::UPi(point.clone()));
        slots.push(IdeleSlot::UGamma(point));
    }

    let mut acc = RelationAccumulator::new(slots.len(), n);
    let unit_order = (base.q() - 1) as i64;
    for (_, mult, offset) in &dprimes {
        // words 1 and 2 carry a residue unit; word 0 is the free pair
        acc.add_column(&[(offset + 1, unit_order)]);
        acc.add_column(&[(offset + 2, unit_order)]);
        for i in 1..*mult {
            let slot = offset + word_count + (i as usize - 1);
            let mut reach = i;
            let mut ord = 1i64;
            while reach < *mult {
                reach = reach.saturating_mul(p);
                ord = ord.saturating_mul(p as i64);
            }
            acc.add_column(&[(slot, ord)]);
        }
    }
    for (_, offset) in &uprimes {
        acc.add_column(&[(offset + 1, unit_order)]);
        // the chain through an away-prime alone maps onto this K_1 summand
        acc.add_column(&[(*offset, 1)]);
        acc.add_column(&[(offset + 1, 1)]);
    }

    // generating monomial units; 1 + m units have all-zero tame coordinates
    // along every curated prime, so they contribute no further columns
    let gamma0 = BiLaurentElement::from_scalar_elem(&base.multiplicative_generator())?;
    let s = BiLaurentElement::var(&base, BiVar::S);
    let t = BiLaurentElement::var(&base, BiVar::T);
    let gens = [gamma0, s, t];
    for i in 0..gens.len() {
        for j in i..gens.len() {
            let x = &gens[i];
            let y = &gens[j];
            let mut col: Vec<(usize, i64)> = Vec::new();
            for (prime, _, offset) in &dprimes {
                let coords = match prime {
                    SurfacePrime::T | SurfacePrime::S => {
                        let sum = diagonal_sum(&base, prime, x, y, precision)?;
                        tame_coordinates(&sum, n)?
                    }
                    _ => {
                        // both entries are units along the prime; only the
                        // inner-uniformizer-with-unit word can survive
                        let sum = diagonal_sum(&base, prime, x, y, precision)?;
                        let inner = tame_coordinates(&sum, n)?;
                        vec![0, 0, inner[0]]
                    }
                };
                for (w, &c) in coords.iter().enumerate() {
                    if c != 0 {
                        col.push((offset + w, c));
                    }
                }
            }
            for (prime, offset) in &uprimes {
                let sum = two_local_sum(&base, x, y)?;
                let res = match prime {
                    SurfacePrime::S => residue_symbol_along(&sum, BiVar::S)?,
                    _ => residue_symbol(&sum)?,
                };
                let coords = tame_coordinates(&res, n)?;
                if coords[0] != 0 {
                    col.push((*offset, coords[0]));
                }
                if coords[1] != 0 {
                    col.push((offset + 1, coords[1]));
                }
            }
            acc.add_column(&col);
        }
    }
    let reduced = acc.into_presentation();
    let previous = presentation_factors(&reduced)?;
    ClassGroupResult::assemble(job, slots, reduced, previous)
}

fn presentation_factors(reduced: &ModNPresentation) -> Result<Vec<u64>> {
    reduced
        .group
        .invariant_factors()
        .factors_u64()
        .ok_or_else(|| Error::InvalidJob("class group came out infinite".into()))
}

/// Both iterated residues of a K_2 symbol, pushed all the way to K_0 = Z,
/// cancel: ord ∂_s{f, g} + ord ∂_t{f, g} = 0.
pub fn local_surface_reciprocity_check(f: &BiLaurentElement, g: &BiLaurentElement) -> Result<bool> {
    let base = f.spec().clone();
    if g.spec() != &base {
        return Err(Error::UnsupportedElementForm(
            "symbol entries live over different base fields".into(),
        ));
    }
    let sum = two_local_sum(&base, f, g)?;
    let along_t = residue_symbol(&sum)?;
    let along_s = residue_symbol_along(&sum, BiVar::S)?;
    Ok(total_ord(&along_t)? + total_ord(&along_s)? == 0)
}

/// Image of a K_1 sum under the second residue: the coefficient-weighted
/// valuation total in K_0.
fn total_ord(k1: &SymbolSum) -> Result<i64> {
    if k1.is_empty() {
        return Ok(0);
    }
    let counts = residue_symbol(k1)?;
    Ok(counts.terms().iter().map(|(c, _)| *c).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::parse_poly;

    fn f3() -> FqSpec {
        FqSpec::from_order(3).unwrap()
    }

    #[test]
    fn substitution_residues_are_exact() {
        let spec = f3();
        let t = BiLaurentElement::var(&spec, BiVar::T);
        let s = BiLaurentElement::var(&spec, BiVar::S);
        // graph t = s·g with g = 1: t restricts to s
        let g1 = PolyFq::one(&spec);
        let r = graph_residue(&t, &g1, 8).unwrap();
        assert_eq!(r.valuation().unwrap(), 1);
        assert!(r.leading_coeff().unwrap().is_one());
        // graph t = s·s: t restricts to s^2
        let gs = parse_poly(&spec, "s", "s").unwrap();
        let r = graph_residue(&t, &gs, 8).unwrap();
        assert_eq!(r.valuation().unwrap(), 2);
        // Eisenstein 2s = t^2: s restricts to 2^{-1} t^2 = 2 t^2
        let c = spec.from_scalar(2);
        let r = eis_residue(&s, 2, &c, 8).unwrap();
        assert_eq!(r.valuation().unwrap(), 2);
        assert_eq!(r.leading_coeff().unwrap(), spec.from_scalar(2));
        // an element divisible by the prime never reaches the residue: the
        // monomial-unit form rejects it at construction
        let prime_poly = crate::fields::parse_poly2(&spec, "t - s*s").unwrap();
        assert!(BiLaurentElement::from_rational(prime_poly, PolyFq2::one(&spec)).is_err());
    }

    #[test]
    fn reciprocity_cancels_across_both_axes() {
        let spec = f3();
        let s = BiLaurentElement::var(&spec, BiVar::S);
        let t = BiLaurentElement::var(&spec, BiVar::T);
        let c = BiLaurentElement::from_scalar_elem(&spec.from_scalar(2)).unwrap();
        assert!(local_surface_reciprocity_check(&s, &t).unwrap());
        assert!(local_surface_reciprocity_check(&c, &s).unwrap());
        assert!(local_surface_reciprocity_check(&c, &c).unwrap());
        let st = s.mul(&t).mul(&c);
        assert!(local_surface_reciprocity_check(&st, &t.inv()).unwrap());
        // a genuine unit part: t·(1+s) against s sends -1 along s, +1 along t
        let num = crate::fields::parse_poly2(&spec, "t + t*s").unwrap();
        let mixed = BiLaurentElement::from_rational(num, PolyFq2::one(&spec)).unwrap();
        assert!(local_surface_reciprocity_check(&mixed, &s).unwrap());
    }

}
