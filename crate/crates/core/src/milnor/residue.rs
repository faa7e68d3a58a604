//! The tame (residue) symbol ∂ from a discretely valued field to its residue
//! field, lowering symbol degree by one.
//!
//! Degree 2 uses the closed formula
//!     ∂{f, g} = class of (-1)^{v(f)v(g)} · g^{v(f)} / f^{v(g)},
//! whose argument has valuation zero; the orientation of the fraction is the
//! one that makes ∂{t, u} = ū for a uniformizer t and unit u. Other degrees
//! (and the cross-check oracle for degree 2) split every entry as
//! uniformizer-power times unit and apply ∂{t, u_2, …} = {ū_2, …},
//! ∂{units only} = 0.

use crate::error::{Error, Result};
use crate::fields::{BiVar, LaurentElement, DEFAULT_PRECISION};

use super::{FieldRef, KElem, MilnorSymbol, SymbolSum};

/// Valuation + unit part + residue machinery for one chosen valuation.
struct ValuedView {
    residue_field: FieldRef,
    axis: Option<BiVar>, // None for F_q((t)); Some for the two-local axes
}

impl ValuedView {
    fn for_field(field: &FieldRef, axis: Option<BiVar>) -> Result<ValuedView> {
        match (field, axis) {
            (FieldRef::Local { base, .. }, None) => Ok(ValuedView {
                residue_field: FieldRef::finite(base),
                axis: None,
            }),
            (FieldRef::TwoLocal { base }, Some(v)) => Ok(ValuedView {
                residue_field: FieldRef::local(base, v.other().name()),
                axis: Some(v),
            }),
            (FieldRef::TwoLocal { base }, None) => Ok(ValuedView {
                residue_field: FieldRef::local(base, "s"),
                axis: Some(BiVar::T),
            }),
            (FieldRef::Finite(_), _) => Err(Error::UnsupportedField(
                "finite fields carry no residue symbol".into(),
            )),
            (FieldRef::Local { .. }, Some(_)) => Err(Error::InvalidJob(
                "axis choice only applies to two-dimensional local fields".into(),
            )),
        }
    }

    fn valuation(&self, e: &KElem) -> Result<i64> {
        match (e, self.axis) {
            (KElem::Local(a), None) => a.valuation(),
            (KElem::TwoLocal(a), Some(v)) => Ok(a.exp(v)),
            _ => Err(Error::InvalidJob("entry does not match the valued field".into())),
        }
    }

    /// Residue of a valuation-zero element.
    fn residue(&self, e: &KElem) -> Result<KElem> {
        match (e, self.axis) {
            (KElem::Local(a), None) => Ok(KElem::Fq(a.leading_coeff()?)),
            (KElem::TwoLocal(a), Some(v)) => {
                Ok(KElem::Local(a.leading_inner(v, DEFAULT_PRECISION)?))
            }
            _ => Err(Error::InvalidJob("entry does not match the valued field".into())),
        }
    }

    /// The unit part e·π^{-v(e)}.
    fn unit_part(&self, e: &KElem) -> Result<KElem> {
        match (e, self.axis) {
            (KElem::Local(a), None) => {
                let (_, u) = a.unit_decompose()?;
                Ok(KElem::Local(u))
            }
            (KElem::TwoLocal(a), Some(v)) => {
                let pi = crate::fields::BiLaurentElement::var(a.spec(), v);
                Ok(KElem::TwoLocal(a.mul(&pi.pow(-a.exp(v)))))
            }
            _ => Err(Error::InvalidJob("entry does not match the valued field".into())),
        }
    }

    fn minus_one_unit(&self, sample: &KElem) -> KElem {
        match (sample, self.axis) {
            (KElem::Local(a), None) => {
                let spec = a.spec().clone();
                KElem::Local(LaurentElement::from_scalar(&spec, a.var(), -1, DEFAULT_PRECISION))
            }
            (KElem::TwoLocal(a), Some(_)) => KElem::TwoLocal(
                crate::fields::BiLaurentElement::from_scalar_elem(&a.spec().from_scalar(-1))
                    .expect("-1 is a unit"),
            ),
            _ => unreachable!("sample comes from a checked symbol"),
        }
    }
}

/// ∂ for the top valuation. Degree 1 is the valuation map into K_0 = Z;
/// degree 2 the closed formula; higher degrees the expansion route.
pub fn residue_symbol(x: &SymbolSum) -> Result<SymbolSum> {
    match x.degree() {
        0 => Err(Error::InvalidJob("residue symbol needs degree >= 1".into())),
        2 => residue_degree_2(x, None),
        _ => residue_by_expansion_impl(x, None),
    }
}

/// ∂ along a chosen axis of a two-dimensional local field.
pub fn residue_symbol_along(x: &SymbolSum, axis: BiVar) -> Result<SymbolSum> {
    match x.degree() {
        0 => Err(Error::InvalidJob("residue symbol needs degree >= 1".into())),
        2 => residue_degree_2(x, Some(axis)),
        _ => residue_by_expansion_impl(x, Some(axis)),
    }
}

/// Expansion-route ∂ (any degree ≥ 1); the independent oracle for degree 2.
pub fn residue_symbol_by_expansion(x: &SymbolSum) -> Result<SymbolSum> {
    if x.degree() == 0 {
        return Err(Error::InvalidJob("residue symbol needs degree >= 1".into()));
    }
    residue_by_expansion_impl(x, None)
}

fn residue_degree_2(x: &SymbolSum, axis: Option<BiVar>) -> Result<SymbolSum> {
    let view = ValuedView::for_field(x.field(), axis)?;
    let mut out = SymbolSum::zero(view.residue_field.clone(), 1);
    for (c, sym) in x.terms() {
        let f = &sym.entries()[0];
        let g = &sym.entries()[1];
        let vf = view.valuation(f)?;
        let vg = view.valuation(g)?;
        let h = match (f, g) {
            (KElem::Local(f), KElem::Local(g)) => {
                let spec = f.spec().clone();
                let sign =
                    LaurentElement::from_scalar(&spec, f.var(), if (vf * vg) % 2 == 0 { 1 } else { -1 }, DEFAULT_PRECISION);
                KElem::Local(g.pow(vf)?.mul(&f.pow(vg)?.inv()?).mul(&sign))
            }
            (KElem::TwoLocal(f), KElem::TwoLocal(g)) => {
                let spec = f.spec().clone();
                let sign = crate::fields::BiLaurentElement::from_scalar_elem(
                    &spec.from_scalar(if (vf * vg) % 2 == 0 { 1 } else { -1 }),
                )
                .expect("sign is a unit");
                KElem::TwoLocal(g.pow(vf).mul(&f.pow(vg).inv()).mul(&sign))
            }
            _ => return Err(Error::InvalidJob("mixed entries in one symbol".into())),
        };
        debug_assert_eq!(view.valuation(&h)?, 0, "tame argument must be a unit");
        let r = view.residue(&h)?;
        let term = MilnorSymbol::new(view.residue_field.clone(), vec![r])?;
        out = out.add(&SymbolSum::from_terms(
            view.residue_field.clone(),
            1,
            vec![(*c, term)],
        )?)?;
    }
    Ok(out)
}

fn residue_by_expansion_impl(x: &SymbolSum, axis: Option<BiVar>) -> Result<SymbolSum> {
    let view = ValuedView::for_field(x.field(), axis)?;
    let r = x.degree();
    let mut out = SymbolSum::zero(view.residue_field.clone(), r - 1);
    for (c, sym) in x.terms() {
        let vals: Vec<i64> = sym
            .entries()
            .iter()
            .map(|e| view.valuation(e))
            .collect::<Result<Vec<_>>>()?;
        let units: Vec<KElem> = sym
            .entries()
            .iter()
            .map(|e| view.unit_part(e))
            .collect::<Result<Vec<_>>>()?;

        // binary expansion: per slot take the uniformizer (weight v_i) or the
        // unit part
        for mask in 0u32..(1 << r) {
            let mut weight: i64 = *c;
            let mut slots: Vec<Slot> = Vec::with_capacity(r);
            for i in 0..r {
                if mask & (1 << i) != 0 {
                    if vals[i] == 0 {
                        weight = 0;
                        break;
                    }
                    weight *= vals[i];
                    slots.push(Slot::Pi);
                } else {
                    slots.push(Slot::Unit(units[i].clone()));
                }
            }
            if weight == 0 {
                continue;
            }
            let Some((sign, unit_entries)) = reduce_pi_word(slots, &view, sym.entries().first().unwrap()) else {
                continue;
            };
            let residues: Vec<KElem> = unit_entries
                .iter()
                .map(|u| view.residue(u))
                .collect::<Result<Vec<_>>>()?;
            let term = MilnorSymbol::new(view.residue_field.clone(), residues)?;
            out = out.add(&SymbolSum::from_terms(
                view.residue_field.clone(),
                r - 1,
                vec![(weight * sign, term)],
            )?)?;
        }
    }
    Ok(out)
}

#[derive(Clone)]
enum Slot {
    Pi,
    Unit(KElem),
}

/// Rewrite a word mixing uniformizer slots and unit slots into the form
/// {π, u_2, …, u_r} and return (sign, unit entries); None when the word has
/// no uniformizer slot (∂ kills it). Uses anti-symmetry for moves and
/// {π, π} = {π, -1} to absorb repeated uniformizers.
fn reduce_pi_word(mut slots: Vec<Slot>, view: &ValuedView, sample: &KElem) -> Option<(i64, Vec<KElem>)> {
    let mut sign: i64 = 1;
    let npi = slots.iter().filter(|s| matches!(s, Slot::Pi)).count();
    if npi == 0 {
        return None;
    }
    // bubble every π to the front, preserving unit order
    loop {
        let mut moved = false;
        for i in 1..slots.len() {
            if matches!(slots[i], Slot::Pi) && matches!(slots[i - 1], Slot::Unit(_)) {
                slots.swap(i - 1, i);
                sign = -sign;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    // absorb π-pairs: {π, π, rest} = {π, -1, rest}
    let mut k = npi;
    while k >= 2 {
        slots[1] = Slot::Unit(view.minus_one_unit(sample));
        // the inserted -1 sits between the lead π and the remaining π's;
        // move it right past them
        let mut i = 1;
        while i + 1 < slots.len() && matches!(slots[i + 1], Slot::Pi) {
            slots.swap(i, i + 1);
            sign = -sign;
            i += 1;
        }
        k -= 1;
    }
    let units: Vec<KElem> = slots
        .into_iter()
        .skip(1)
        .map(|s| match s {
            Slot::Unit(u) => u,
            Slot::Pi => unreachable!("exactly one π remains"),
        })
        .collect();
    Some((sign, units))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FqSpec;
    use crate::milnor::{parse_elem, steinberg_normalize};
    use crate::rng::SplitMix64;

    fn sum(s: &str) -> SymbolSum {
        SymbolSum::from_symbol(MilnorSymbol::parse(s).unwrap())
    }

    #[test]
    fn uniformizer_unit_splitting_cases() {
        // ∂{t, u} = ū
        let d = residue_symbol(&sum("{t, 2+t}@F_5((t))")).unwrap();
        assert_eq!(d.terms().len(), 1);
        let (c, s) = &d.terms()[0];
        assert_eq!(*c, 1);
        assert_eq!(s.to_string(), "{2}");

        // ∂{u, v} = 0 for units: normalize to compare
        let d = residue_symbol(&sum("{1+t, 2}@F_5((t))")).unwrap();
        let nf = steinberg_normalize(&d, 0).unwrap();
        assert!(nf.is_empty(), "unit pair residue = {d}");

        // degree 1: the valuation
        let d = residue_symbol(&sum("{t^3*(2+t)}@F_5((t))")).unwrap();
        assert_eq!(d.degree(), 0);
        assert_eq!(d.terms().len(), 1);
        assert_eq!(d.terms()[0].0, 3);
    }

    #[test]
    fn frozen_sign_conventions() {
        // ∂{t, t} = -1 (the formula's sign with v(f) = v(g) = 1)
        let d = residue_symbol(&sum("{t, t}@F_5((t))")).unwrap();
        assert_eq!(d.terms().len(), 1);
        assert_eq!(d.terms()[0].1.to_string(), "{4}");
    }

    #[test]
    fn spec_example_two_routes() {
        // ∂{t*(1+t), -t} over F_5, formula vs expansion
        let x = sum("{t*(1+t), -t}@F_5((t))");
        let a = residue_symbol(&x).unwrap();
        let b = residue_symbol_by_expansion(&x).unwrap();
        let na = steinberg_normalize(&a, 0).unwrap();
        let nb = steinberg_normalize(&b, 0).unwrap();
        assert_eq!(na, nb, "formula {a} vs expansion {b}");
    }

    fn random_laurent(rng: &mut SplitMix64, spec: &FqSpec, prec: usize) -> KElem {
        let val = rng.range_i64(-3, 4);
        let unit: Vec<_> = (0..prec)
            .map(|_| spec.elem_from_rep(rng.below(spec.q() as u64) as u32))
            .collect();
        let mut unit = unit;
        if unit[0].is_zero() {
            unit[0] = spec.one();
        }
        KElem::Local(LaurentElement::from_unit(spec, "t", val, unit).unwrap())
    }

    #[test]
    fn two_route_agreement_random() {
        let mut rng = SplitMix64::new(0x5e5);
        for (p, e) in [(2u32, 1u32), (3, 1), (5, 1), (3, 2)] {
            let spec = FqSpec::new(p, e).unwrap();
            let field = FieldRef::local(&spec, "t");
            for _ in 0..120 {
                let f = random_laurent(&mut rng, &spec, 16);
                let g = random_laurent(&mut rng, &spec, 16);
                let sym = MilnorSymbol::new(field.clone(), vec![f, g]).unwrap();
                let x = SymbolSum::from_symbol(sym);
                let a = steinberg_normalize(&residue_symbol(&x).unwrap(), 0).unwrap();
                let b = steinberg_normalize(&residue_symbol_by_expansion(&x).unwrap(), 0).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn additivity_random() {
        let mut rng = SplitMix64::new(0x5e6);
        let spec = FqSpec::new(3, 1).unwrap();
        let field = FieldRef::local(&spec, "t");
        for _ in 0..200 {
            let mk = |rng: &mut SplitMix64| {
                let f = random_laurent(rng, &spec, 16);
                let g = random_laurent(rng, &spec, 16);
                SymbolSum::from_symbol(MilnorSymbol::new(field.clone(), vec![f, g]).unwrap())
            };
            let x = mk(&mut rng);
            let y = mk(&mut rng);
            let lhs = steinberg_normalize(&residue_symbol(&x.add(&y).unwrap()).unwrap(), 0).unwrap();
            let rhs = steinberg_normalize(
                &residue_symbol(&x).unwrap().add(&residue_symbol(&y).unwrap()).unwrap(),
                0,
            )
            .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn two_local_residues_both_axes() {
        let f3 = FqSpec::new(3, 1).unwrap();
        let field = FieldRef::two_local(&f3);
        let f = parse_elem(&field, "t*(1+s)").unwrap();
        let g = parse_elem(&field, "s").unwrap();
        let sym = MilnorSymbol::new(field.clone(), vec![f, g]).unwrap();
        let x = SymbolSum::from_symbol(sym);

        // along t: v_t(f) = 1, v_t(g) = 0, so ∂ = {ḡ} = {s} in F_3((s))
        let dt = residue_symbol(&x).unwrap();
        assert_eq!(dt.field().to_string(), "F_3((s))");
        let dt_n = steinberg_normalize(&dt, 2).unwrap();
        assert_eq!(dt_n.terms().len(), 1);

        // along s: v_s(f) = 0 via the (1+s) unit? no: f = t*(1+s): v_s = 0;
        // v_s(g) = 1: ∂_s{f, g} = {f̄}^{... } lands in F_3((t))
        let ds = residue_symbol_along(&x, BiVar::S).unwrap();
        assert_eq!(ds.field().to_string(), "F_3((t))");

        // degree-3 expansion route stays consistent with formula on a pair
        // obtained by appending a unit entry
        let h = parse_elem(&field, "2").unwrap();
        let sym3 = MilnorSymbol::new(
            field.clone(),
            vec![
                parse_elem(&field, "t*(1+s)").unwrap(),
                parse_elem(&field, "s").unwrap(),
                h,
            ],
        )
        .unwrap();
        let d3 = residue_symbol(&SymbolSum::from_symbol(sym3)).unwrap();
        assert_eq!(d3.degree(), 2);
    }
}
