//! Canonical representatives modulo multilinearity, Steinberg, and n·x.
//!
//! Over the supported tower every entry decomposes against a fixed working
//! generating set: the top uniformizer, the inner uniformizer (two-local
//! case), and a fixed generator of the residue multiplicative group; the
//! principal-unit part is an n-th power (Hensel, gcd(n, p) = 1), so it
//! vanishes mod n. A symbol therefore expands multilinearly into words over
//! at most three letters, and words reduce to square-free sorted form via
//! {x, x} = {x, -1} and anti-symmetry (both Steinberg consequences).

use crate::error::{Error, Result};
use crate::fields::{BiLaurentElement, BiVar, FqSpec, LaurentElement, DEFAULT_PRECISION};

use super::{FieldRef, KElem, MilnorSymbol, SymbolSum};

/// Working letters, in canonical slot order: top uniformizer, inner
/// uniformizer, residue generator.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub(crate) enum Letter {
    TopPi,
    InnerPi,
    Unit,
}

impl Letter {
    pub(crate) fn available(field: &FieldRef) -> &'static [Letter] {
        match field {
            FieldRef::Finite(_) => &[Letter::Unit],
            FieldRef::Local { .. } => &[Letter::TopPi, Letter::Unit],
            FieldRef::TwoLocal { .. } => &[Letter::TopPi, Letter::InnerPi, Letter::Unit],
        }
    }

    /// The letter realized as a field element.
    pub(super) fn element(self, field: &FieldRef) -> KElem {
        match (self, field) {
            (Letter::Unit, FieldRef::Finite(s)) => KElem::Fq(s.multiplicative_generator()),
            (Letter::Unit, FieldRef::Local { base, var }) => {
                let g = base.multiplicative_generator();
                KElem::Local(LaurentElement::from_unit(base, var, 0, unit_vec(base, g)).unwrap())
            }
            (Letter::TopPi, FieldRef::Local { base, var }) => {
                KElem::Local(LaurentElement::uniformizer(base, var, DEFAULT_PRECISION))
            }
            (Letter::Unit, FieldRef::TwoLocal { base }) => KElem::TwoLocal(
                BiLaurentElement::from_scalar_elem(&base.multiplicative_generator()).unwrap(),
            ),
            (Letter::TopPi, FieldRef::TwoLocal { base }) => {
                KElem::TwoLocal(BiLaurentElement::var(base, BiVar::T))
            }
            (Letter::InnerPi, FieldRef::TwoLocal { base }) => {
                KElem::TwoLocal(BiLaurentElement::var(base, BiVar::S))
            }
            _ => unreachable!("letter not available over {field}"),
        }
    }
}

fn unit_vec(spec: &FqSpec, c: crate::fields::FqElem) -> Vec<crate::fields::FqElem> {
    let mut v = vec![spec.zero(); DEFAULT_PRECISION];
    v[0] = c;
    v
}

/// Exponents of one entry against the working letters: top valuation, inner
/// valuation, and discrete log of the residue unit.
#[derive(Clone, Copy, Debug)]
pub(super) struct LetterExps {
    pub top: i64,
    pub inner: i64,
    pub unit: u64,
}

impl LetterExps {
    pub(super) fn parts(&self) -> Vec<(Letter, i64)> {
        let mut out = Vec::with_capacity(3);
        if self.top != 0 {
            out.push((Letter::TopPi, self.top));
        }
        if self.inner != 0 {
            out.push((Letter::InnerPi, self.inner));
        }
        if self.unit != 0 {
            out.push((Letter::Unit, self.unit as i64));
        }
        out
    }
}

/// Decompose a certified-nonzero entry. Exact: uses only the valuation(s)
/// and the leading residue coefficient, all of which are known exactly.
pub(super) fn decompose(e: &KElem) -> Result<LetterExps> {
    match e {
        KElem::Fq(a) => Ok(LetterExps {
            top: 0,
            inner: 0,
            unit: a.spec().dlog(a)?,
        }),
        KElem::Local(a) => {
            let (v, _) = a.unit_decompose()?;
            let lead = a.leading_coeff()?;
            Ok(LetterExps {
                top: v,
                inner: 0,
                unit: lead.spec().dlog(&lead)?,
            })
        }
        KElem::TwoLocal(a) => {
            let spec = a.spec();
            let u0 = a.num().coeff(0, 0).div(&a.den().coeff(0, 0))?;
            Ok(LetterExps {
                top: a.t_exp(),
                inner: a.s_exp(),
                unit: spec.dlog(&u0)?,
            })
        }
    }
}

/// Reduce a word over the letters to square-free sorted form. Returns the
/// integer multiplier and the reduced word, or None when the word is zero.
///
/// Rules used, all inside the Steinberg span:
///   {…, a, b, …} = -{…, b, a, …}            (anti-symmetry)
///   {…, x, x, …} = dlog(-1)·{…, x, g, …}    ({x, x} = {x, -1})
///   words with a repeated residue generator vanish: K_2 of a finite field
///   is zero integrally (checked exhaustively in tests for the q in range).
pub(super) fn reduce_word(mut word: Vec<Letter>, dlog_minus_one: u64) -> Option<(i64, Vec<Letter>)> {
    let mut mult: i64 = 1;
    loop {
        // insertion sort, counting strict inversions for the sign
        let mut swaps = 0usize;
        for i in 1..word.len() {
            let mut j = i;
            while j > 0 && word[j - 1] > word[j] {
                word.swap(j - 1, j);
                swaps += 1;
                j -= 1;
            }
        }
        if swaps % 2 == 1 {
            mult = -mult;
        }
        let Some(i) = (0..word.len().saturating_sub(1)).find(|&i| word[i] == word[i + 1]) else {
            return Some((mult, word));
        };
        match word[i] {
            Letter::Unit => return None,
            _ => {
                if dlog_minus_one == 0 {
                    return None; // char 2: -1 = 1, {x, x} = {x, 1} = 0
                }
                mult = mult.checked_mul(dlog_minus_one as i64).expect("small multipliers");
                word[i + 1] = Letter::Unit;
            }
        }
    }
}

/// gcd with gcd(0, x) = x, so modulus 0 means "no reduction".
fn gcd0(a: u64, b: u64) -> u64 {
    if a == 0 {
        b
    } else if b == 0 {
        a
    } else {
        gcd0(b, a % b)
    }
}

/// Order bound for the coefficient of a reduced word: words touching the
/// residue generator are (q-1)-torsion, the rest only see the modulus.
fn word_modulus(word: &[Letter], n: u64, q_minus_one: u64) -> u64 {
    if word.contains(&Letter::Unit) {
        gcd0(n, q_minus_one)
    } else {
        n
    }
}

fn check_modulus(field: &FieldRef, n: u64) -> Result<()> {
    if field.height() == 0 {
        return Ok(()); // finite fields normalize integrally too
    }
    let p = field.base().p() as u64;
    if n == 0 || n % p == 0 {
        return Err(Error::WildCoefficients(format!(
            "normalization over {field} needs a modulus prime to {p}"
        )));
    }
    Ok(())
}

/// Canonical coefficient of each basis word, in basis order.
fn normalized_coeffs(x: &SymbolSum, n: u64) -> Result<(Vec<Vec<Letter>>, Vec<i128>)> {
    let field = x.field().clone();
    check_modulus(&field, n)?;
    let q_minus_one = field.base().q() as u64 - 1;
    let dlog_m1 = {
        let m1 = field.base().from_scalar(-1);
        field.base().dlog(&m1)?
    };

    // canonical basis words of this degree, in lexicographic letter order
    let r = x.degree();
    let basis = basis_words(&field, r);
    let index_of = |w: &[Letter]| basis.iter().position(|b| b == w).expect("reduced words are basis words");

    let mut coeffs = vec![0i128; basis.len()];
    for (c, sym) in x.terms() {
        let exps: Vec<LetterExps> = sym
            .entries()
            .iter()
            .map(decompose)
            .collect::<Result<Vec<_>>>()?;
        expand_into(&exps, *c, dlog_m1, &mut |mult, word| {
            coeffs[index_of(&word)] += mult as i128;
        });
    }

    for (w, c) in basis.iter().zip(coeffs.iter_mut()) {
        let m = word_modulus(w, n, q_minus_one);
        if m != 0 {
            *c = c.rem_euclid(m as i128);
        }
    }
    Ok((basis, coeffs))
}

/// Canonical representative of a symbol sum modulo multilinearity, the
/// Steinberg relation, and n·(everything). Idempotent; additive in ⊕.
/// Over finite fields n = 0 gives the integral canonical form.
pub fn steinberg_normalize(x: &SymbolSum, n: u64) -> Result<SymbolSum> {
    let field = x.field().clone();
    let r = x.degree();
    let (basis, coeffs) = normalized_coeffs(x, n)?;
    let mut terms = Vec::new();
    for (w, &c) in basis.iter().zip(&coeffs) {
        if c == 0 {
            continue;
        }
        let entries: Vec<KElem> = w.iter().map(|l| l.element(&field)).collect();
        let sym = MilnorSymbol::new(field.clone(), entries)?;
        terms.push((i64::try_from(c).expect("canonical coefficient fits"), sym));
    }
    SymbolSum::from_terms(field, r, terms)
}

/// Coordinates of the canonical form on the basis words, in basis order.
/// Same reduction as `steinberg_normalize`, exposed as a plain vector for
/// relation-matrix assembly.
pub(crate) fn tame_coordinates(x: &SymbolSum, n: u64) -> Result<Vec<i64>> {
    let (_, coeffs) = normalized_coeffs(x, n)?;
    Ok(coeffs
        .into_iter()
        .map(|c| i64::try_from(c).expect("canonical coefficient fits"))
        .collect())
}

/// All size-r subsets of the (sorted) letter list, in lexicographic order.
/// All square-free sorted words of length r over the field's letters, in
/// lexicographic order: the canonical basis of the normalized span.
pub(crate) fn basis_words(field: &FieldRef, r: usize) -> Vec<Vec<Letter>> {
    let letters = Letter::available(field);
    let mut basis = Vec::new();
    if r <= letters.len() {
        subsets_of_size(letters, r, &mut Vec::new(), &mut basis);
    }
    basis
}

fn subsets_of_size(
    letters: &[Letter],
    r: usize,
    prefix: &mut Vec<Letter>,
    out: &mut Vec<Vec<Letter>>,
) {
    if prefix.len() == r {
        out.push(prefix.clone());
        return;
    }
    if letters.len() < r - prefix.len() {
        return;
    }
    for (i, &l) in letters.iter().enumerate() {
        prefix.push(l);
        subsets_of_size(&letters[i + 1..], r, prefix, out);
        prefix.pop();
    }
}

/// Multilinear expansion of one symbol (given by per-slot letter exponents)
/// into reduced words; calls `sink(multiplier, reduced_word)` per summand.
pub(super) fn expand_into(
    exps: &[LetterExps],
    coeff: i64,
    dlog_m1: u64,
    sink: &mut dyn FnMut(i64, Vec<Letter>),
) {
    let slots: Vec<Vec<(Letter, i64)>> = exps.iter().map(|e| e.parts()).collect();
    if slots.iter().any(|s| s.is_empty()) {
        return; // some entry is 1 modulo everything: the symbol vanishes
    }
    let mut choice = vec![0usize; slots.len()];
    loop {
        let mut mult = coeff as i128;
        let mut word = Vec::with_capacity(slots.len());
        for (s, &k) in choice.iter().enumerate() {
            let (l, e) = slots[s][k];
            mult *= e as i128;
            word.push(l);
        }
        if let Some((m, reduced)) = reduce_word(word, dlog_m1) {
            let total = mult * m as i128;
            if total != 0 {
                sink(i64::try_from(total).expect("expansion multiplier fits"), reduced);
            }
        }
        // odometer over slot choices; empty slots mean the symbol vanishes
        let mut s = 0;
        loop {
            if s == slots.len() {
                return;
            }
            if slots[s].is_empty() {
                return;
            }
            choice[s] += 1;
            if choice[s] < slots[s].len() {
                break;
            }
            choice[s] = 0;
            s += 1;
        }
    }
}
