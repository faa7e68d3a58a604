//! Symbol calculus for Milnor K-groups over the supported field tower:
//! finite fields, local fields F_q((t)), and two-dimensional local fields
//! F_q((s))((t)). Provides formal symbols, Steinberg normalization, the tame
//! (residue) symbol, mod-n presentations, and the unit filtration.

mod hensel;
mod km;
mod normalize;
mod residue;

use std::fmt;

use serde::ser::SerializeStruct;

use crate::error::{Error, Result};
use crate::fields::{
    parse_bilaurent, parse_fq, parse_laurent, BiLaurentElement, FqElem, FqSpec, LaurentElement,
};

pub use hensel::{principal_unit_nth_root, principal_unit_nth_root_2local};
pub use km::{km_mod_n, km_tame_split_oracle, unit_filtration, KmGroup, KmMethod};
pub use normalize::steinberg_normalize;
pub(crate) use normalize::{basis_words, tame_coordinates, Letter};
pub use residue::{residue_symbol, residue_symbol_along, residue_symbol_by_expansion};

/// A field in the supported tower. Two-dimensional local fields always use
/// the inner variable s and outer (top) variable t: elements are Laurent
/// series in t whose coefficients are Laurent series in s.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FieldRef {
    Finite(FqSpec),
    Local { base: FqSpec, var: String },
    TwoLocal { base: FqSpec },
}

impl FieldRef {
    pub fn finite(base: &FqSpec) -> FieldRef {
        FieldRef::Finite(base.clone())
    }

    pub fn local(base: &FqSpec, var: &str) -> FieldRef {
        FieldRef::Local {
            base: base.clone(),
            var: var.to_string(),
        }
    }

    pub fn two_local(base: &FqSpec) -> FieldRef {
        FieldRef::TwoLocal { base: base.clone() }
    }

    pub fn base(&self) -> &FqSpec {
        match self {
            FieldRef::Finite(s) => s,
            FieldRef::Local { base, .. } => base,
            FieldRef::TwoLocal { base } => base,
        }
    }

    /// Residue field of the canonical (top) valuation; None for finite fields.
    pub fn residue_field(&self) -> Option<FieldRef> {
        match self {
            FieldRef::Finite(_) => None,
            FieldRef::Local { base, .. } => Some(FieldRef::Finite(base.clone())),
            FieldRef::TwoLocal { base } => Some(FieldRef::local(base, "s")),
        }
    }

    /// Number of iterated valuations on top of the finite base.
    pub fn height(&self) -> usize {
        match self {
            FieldRef::Finite(_) => 0,
            FieldRef::Local { .. } => 1,
            FieldRef::TwoLocal { .. } => 2,
        }
    }

    /// Parse `F_q`, `F_q((t))`, or `F_q((s))((t))` (any single variable name
    /// for the local case; the two-local case is fixed to s then t).
    pub fn parse(tag: &str) -> Result<FieldRef> {
        let tag = tag.trim();
        let rest = tag
            .strip_prefix("F_")
            .ok_or_else(|| Error::Parse(format!("field tag {tag:?} must start with F_")))?;
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return Err(Error::Parse(format!("field tag {tag:?} has no order")));
        }
        let q: u64 = digits
            .parse()
            .map_err(|_| Error::Parse("field order overflow".into()))?;
        let spec = FqSpec::from_order(q)?;
        let mut vars = Vec::new();
        let mut cursor = &rest[digits.len()..];
        while !cursor.is_empty() {
            let inner = cursor
                .strip_prefix("((")
                .and_then(|s| s.split_once("))"))
                .ok_or_else(|| Error::Parse(format!("malformed field tag {tag:?}")))?;
            if inner.0.is_empty() || !inner.0.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Parse(format!("bad variable in field tag {tag:?}")));
            }
            vars.push(inner.0.to_string());
            cursor = inner.1;
        }
        match vars.as_slice() {
            [] => Ok(FieldRef::Finite(spec)),
            [v] => Ok(FieldRef::local(&spec, v)),
            [a, b] if a == "s" && b == "t" => Ok(FieldRef::two_local(&spec)),
            _ => Err(Error::UnsupportedField(format!(
                "field tag {tag:?}: towers beyond F_q((s))((t)) are not supported"
            ))),
        }
    }
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldRef::Finite(s) => write!(f, "F_{}", s.q()),
            FieldRef::Local { base, var } => write!(f, "F_{}(({var}))", base.q()),
            FieldRef::TwoLocal { base } => write!(f, "F_{}((s))((t))", base.q()),
        }
    }
}

/// One entry of a symbol: an element of the field the symbol lives over.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum KElem {
    Fq(FqElem),
    Local(LaurentElement),
    TwoLocal(BiLaurentElement),
}

impl KElem {
    fn matches(&self, field: &FieldRef) -> bool {
        match (self, field) {
            (KElem::Fq(a), FieldRef::Finite(s)) => a.spec() == s,
            (KElem::Local(a), FieldRef::Local { base, var }) => {
                a.spec() == base && a.var() == var
            }
            (KElem::TwoLocal(a), FieldRef::TwoLocal { base }) => a.spec() == base,
            _ => false,
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            KElem::Fq(a) => a.is_zero(),
            KElem::Local(a) => a.is_zero(),
            KElem::TwoLocal(_) => false, // monomial-times-unit form is never zero
        }
    }
}

impl fmt::Display for KElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KElem::Fq(a) => write!(f, "{a}"),
            KElem::Local(a) => write!(f, "{a}"),
            KElem::TwoLocal(a) => write!(f, "{a}"),
        }
    }
}

/// Parse an element of the given field from the shared expression syntax.
pub fn parse_elem(field: &FieldRef, input: &str) -> Result<KElem> {
    match field {
        FieldRef::Finite(s) => Ok(KElem::Fq(parse_fq(s, input)?)),
        FieldRef::Local { base, var } => Ok(KElem::Local(parse_laurent(base, var, input)?)),
        FieldRef::TwoLocal { base } => Ok(KElem::TwoLocal(parse_bilaurent(base, input)?)),
    }
}

/// The class of a_1 ⊗ … ⊗ a_r in degree r; r = 0 is the unit of K_0 = Z.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MilnorSymbol {
    field: FieldRef,
    entries: Vec<KElem>,
}

impl MilnorSymbol {
    pub fn new(field: FieldRef, entries: Vec<KElem>) -> Result<MilnorSymbol> {
        for (i, e) in entries.iter().enumerate() {
            if !e.matches(&field) {
                return Err(Error::InvalidJob(format!(
                    "symbol entry {i} does not live in {field}"
                )));
            }
            if e.is_zero() {
                return Err(Error::ZeroElement(format!(
                    "symbol entry {i} is zero; symbols take unit entries"
                )));
            }
        }
        Ok(MilnorSymbol { field, entries })
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn degree(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[KElem] {
        &self.entries
    }

    /// `{a, b}@F` form used by the CLI.
    pub fn tagged(&self) -> String {
        format!("{}@{}", self, self.field)
    }

    /// Parse the `{a, b}@F` form.
    pub fn parse(input: &str) -> Result<MilnorSymbol> {
        let (body, tag) = input
            .rsplit_once('@')
            .ok_or_else(|| Error::Parse("symbol needs a field tag: {…}@F_q".into()))?;
        let field = FieldRef::parse(tag)?;
        let body = body.trim();
        let inner = body
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| Error::Parse("symbol body must be brace-delimited".into()))?;
        let mut entries = Vec::new();
        if !inner.trim().is_empty() {
            for part in split_top_level(inner) {
                entries.push(parse_elem(&field, part.trim())?);
            }
        }
        MilnorSymbol::new(field, entries)
    }
}

/// Split on commas not nested in parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl fmt::Display for MilnorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", inner.join(", "))
    }
}

impl serde::Serialize for MilnorSymbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MilnorSymbol", 2)?;
        st.serialize_field("field", &self.field.to_string())?;
        let entries: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for MilnorSymbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            field: String,
            entries: Vec<String>,
        }
        let raw = Raw::deserialize(d)?;
        let field = FieldRef::parse(&raw.field).map_err(serde::de::Error::custom)?;
        let entries = raw
            .entries
            .iter()
            .map(|e| parse_elem(&field, e))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        MilnorSymbol::new(field, entries).map_err(serde::de::Error::custom)
    }
}

/// Integer combination of symbols, homogeneous in field and degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SymbolSum {
    field: FieldRef,
    degree: usize,
    terms: Vec<(i64, MilnorSymbol)>,
}

impl SymbolSum {
    pub fn zero(field: FieldRef, degree: usize) -> SymbolSum {
        SymbolSum {
            field,
            degree,
            terms: Vec::new(),
        }
    }

    pub fn from_symbol(sym: MilnorSymbol) -> SymbolSum {
        SymbolSum {
            field: sym.field.clone(),
            degree: sym.degree(),
            terms: vec![(1, sym)],
        }
    }

    pub fn from_terms(field: FieldRef, degree: usize, terms: Vec<(i64, MilnorSymbol)>) -> Result<SymbolSum> {
        for (_, sym) in &terms {
            if sym.field != field || sym.degree() != degree {
                return Err(Error::InvalidJob(
                    "symbol sum must be homogeneous in field and degree".into(),
                ));
            }
        }
        Ok(SymbolSum {
            field,
            degree,
            terms,
        })
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[(i64, MilnorSymbol)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &SymbolSum) -> Result<SymbolSum> {
        if self.field != other.field || self.degree != other.degree {
            return Err(Error::InvalidJob(
                "cannot add symbol sums of different fields or degrees".into(),
            ));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(SymbolSum {
            field: self.field.clone(),
            degree: self.degree,
            terms,
        })
    }

    pub fn neg(&self) -> SymbolSum {
        self.scale(-1)
    }

    pub fn scale(&self, c: i64) -> SymbolSum {
        if c == 0 {
            return SymbolSum::zero(self.field.clone(), self.degree);
        }
        SymbolSum {
            field: self.field.clone(),
            degree: self.degree,
            terms: self.terms.iter().map(|(k, s)| (k * c, s.clone())).collect(),
        }
    }
}

impl fmt::Display for SymbolSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, s)| match c {
                1 => s.to_string(),
                -1 => format!("-{s}"),
                c => format!("{c}*{s}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl serde::Serialize for SymbolSum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Term {
            coeff: i64,
            entries: Vec<String>,
        }
        let mut st = s.serialize_struct("SymbolSum", 3)?;
        st.serialize_field("field", &self.field.to_string())?;
        st.serialize_field("degree", &self.degree)?;
        let terms: Vec<Term> = self
            .terms
            .iter()
            .map(|(c, sym)| Term {
                coeff: *c,
                entries: sym.entries.iter().map(|e| e.to_string()).collect(),
            })
            .collect();
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for SymbolSum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct RawTerm {
            coeff: i64,
            entries: Vec<String>,
        }
        #[derive(serde::Deserialize)]
        struct Raw {
            field: String,
            degree: usize,
            terms: Vec<RawTerm>,
        }
        let raw = Raw::deserialize(d)?;
        let field = FieldRef::parse(&raw.field).map_err(serde::de::Error::custom)?;
        let mut terms = Vec::new();
        for t in raw.terms {
            let entries = t
                .entries
                .iter()
                .map(|e| parse_elem(&field, e))
                .collect::<Result<Vec<_>>>()
                .map_err(serde::de::Error::custom)?;
            let sym = MilnorSymbol::new(field.clone(), entries).map_err(serde::de::Error::custom)?;
            terms.push((t.coeff, sym));
        }
        SymbolSum::from_terms(field, raw.degree, terms).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_tag_roundtrip() {
        for tag in ["F_2", "F_9", "F_8", "F_3((t))", "F_4((u))", "F_5((s))((t))"] {
            let f = FieldRef::parse(tag).unwrap();
            assert_eq!(f.to_string(), tag);
        }
        assert!(FieldRef::parse("F_6").is_err());
        assert!(FieldRef::parse("F_9((t))((s))").is_err()); // wrong order
        assert!(FieldRef::parse("Q_p").is_err());
        assert_eq!(
            FieldRef::parse("F_9((s))((t))").unwrap().residue_field().unwrap(),
            FieldRef::parse("F_9((s))").unwrap()
        );
    }

    #[test]
    fn symbol_parse_and_display() {
        let s = MilnorSymbol::parse("{t, 1+t}@F_3((t))").unwrap();
        assert_eq!(s.degree(), 2);
        assert_eq!(s.field().to_string(), "F_3((t))");
        let reparsed = MilnorSymbol::parse(&s.tagged()).unwrap();
        assert_eq!(reparsed, s);

        let fin = MilnorSymbol::parse("{g, 1+g}@F_4").unwrap();
        assert_eq!(fin.degree(), 2);

        let two = MilnorSymbol::parse("{s^2*t^3*(1+s+t), s}@F_3((s))((t))").unwrap();
        assert_eq!(two.degree(), 2);

        // zero entries rejected
        assert_eq!(
            MilnorSymbol::parse("{0}@F_5").unwrap_err().code(),
            "ZERO_ELEMENT"
        );
        // field mismatch rejected
        assert!(MilnorSymbol::parse("{x}@F_5").is_err());
    }

    #[test]
    fn symbol_serde_roundtrip() {
        let s = MilnorSymbol::parse("{t^-1*(2 + t + O(t^4)), 2}@F_5((t))").unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: MilnorSymbol = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);

        let sum = SymbolSum::from_symbol(s.clone()).scale(3);
        let json = serde_json::to_string(&sum).unwrap();
        let back: SymbolSum = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sum);
    }

    #[test]
    fn sum_homogeneity_enforced() {
        let a = SymbolSum::from_symbol(MilnorSymbol::parse("{t}@F_3((t))").unwrap());
        let b = SymbolSum::from_symbol(MilnorSymbol::parse("{2}@F_3").unwrap());
        assert!(a.add(&b).is_err());
        let c = SymbolSum::from_symbol(MilnorSymbol::parse("{t, t}@F_3((t))").unwrap());
        assert!(a.add(&c).is_err());
        assert!(a.add(&a).is_ok());
    }
}
