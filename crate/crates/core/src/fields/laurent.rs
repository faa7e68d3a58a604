//! Laurent series F_q((t)) with explicit precision. An element is either the
//! exact zero (flagged, never an all-zero window) or t^v * (unit series),
//! where the unit's coefficients are known exactly up to the tracked length.

use std::fmt;

use crate::error::{Error, Result};

use super::fq::{FqElem, FqSpec};
use super::poly::PolyFq;

/// Default number of tracked unit coefficients.
pub const DEFAULT_PRECISION: usize = 32;

#[derive(Clone, PartialEq, Eq, Debug)]
enum Form {
    Zero,
    /// t^val * (unit[0] + unit[1] t + ...), unit[0] != 0,
    /// unit known exactly mod t^(unit.len())
    NonZero { val: i64, unit: Vec<FqElem> },
}

#[derive(Clone, PartialEq, Eq)]
pub struct LaurentElement {
    spec: FqSpec,
    var: String,
    form: Form,
}

impl LaurentElement {
    pub fn exact_zero(spec: &FqSpec, var: &str) -> LaurentElement {
        LaurentElement {
            spec: spec.clone(),
            var: var.to_string(),
            form: Form::Zero,
        }
    }

    /// t^val * unit with unit[0] != 0; precision = unit.len().
    pub fn from_unit(spec: &FqSpec, var: &str, val: i64, unit: Vec<FqElem>) -> Result<LaurentElement> {
        if unit.is_empty() || unit[0].is_zero() {
            return Err(Error::UnitConstantRequired(
                "leading unit coefficient must be nonzero".into(),
            ));
        }
        Ok(LaurentElement {
            spec: spec.clone(),
            var: var.to_string(),
            form: Form::NonZero { val, unit },
        })
    }

    /// Exact embedding of a polynomial (in the uniformizer), shifted by
    /// t^shift, tracked to `precision` coefficients. Polynomials are known
    /// exactly, so missing high coefficients are genuine zeros.
    pub fn from_polynomial(
        spec: &FqSpec,
        var: &str,
        poly: &PolyFq,
        shift: i64,
        precision: usize,
    ) -> LaurentElement {
        assert!(precision >= 1);
        if poly.is_zero() {
            return LaurentElement::exact_zero(spec, var);
        }
        let low = poly
            .coeff_reps()
            .iter()
            .position(|&c| c != 0)
            .expect("nonzero polynomial");
        let mut unit = Vec::with_capacity(precision);
        for k in 0..precision {
            unit.push(poly.coeff(low + k));
        }
        LaurentElement {
            spec: spec.clone(),
            var: var.to_string(),
            form: Form::NonZero {
                val: low as i64 + shift,
                unit,
            },
        }
    }

    pub fn from_scalar(spec: &FqSpec, var: &str, c: i64, precision: usize) -> LaurentElement {
        let elem = spec.from_scalar(c);
        if elem.is_zero() {
            return LaurentElement::exact_zero(spec, var);
        }
        let mut unit = vec![spec.zero(); precision];
        unit[0] = elem;
        LaurentElement {
            spec: spec.clone(),
            var: var.to_string(),
            form: Form::NonZero { val: 0, unit },
        }
    }

    /// The uniformizer t itself.
    pub fn uniformizer(spec: &FqSpec, var: &str, precision: usize) -> LaurentElement {
        let mut unit = vec![spec.zero(); precision];
        unit[0] = spec.one();
        LaurentElement {
            spec: spec.clone(),
            var: var.to_string(),
            form: Form::NonZero { val: 1, unit },
        }
    }

    pub fn spec(&self) -> &FqSpec {
        &self.spec
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.form, Form::Zero)
    }

    pub fn valuation(&self) -> Result<i64> {
        match &self.form {
            Form::Zero => Err(Error::ZeroElement("valuation of exact zero".into())),
            Form::NonZero { val, .. } => Ok(*val),
        }
    }

    /// Tracked precision (unit coefficient count); zero has none.
    pub fn precision(&self) -> Option<usize> {
        match &self.form {
            Form::Zero => None,
            Form::NonZero { unit, .. } => Some(unit.len()),
        }
    }

    /// Coefficient of t^exp if it is known: Some(0) below the valuation,
    /// None beyond the precision window.
    pub fn known_coeff(&self, exp: i64) -> Option<FqElem> {
        match &self.form {
            Form::Zero => Some(self.spec.zero()),
            Form::NonZero { val, unit } => {
                if exp < *val {
                    Some(self.spec.zero())
                } else {
                    let k = (exp - val) as usize;
                    unit.get(k).cloned()
                }
            }
        }
    }

    /// a = t^v * u with u of valuation 0; residue(u) = u[0].
    pub fn unit_decompose(&self) -> Result<(i64, LaurentElement)> {
        match &self.form {
            Form::Zero => Err(Error::ZeroElement("unit_decompose of zero".into())),
            Form::NonZero { val, unit } => Ok((
                *val,
                LaurentElement {
                    spec: self.spec.clone(),
                    var: self.var.clone(),
                    form: Form::NonZero {
                        val: 0,
                        unit: unit.clone(),
                    },
                },
            )),
        }
    }

    /// Leading unit coefficient u_0 (the residue of the unit part).
    pub fn leading_coeff(&self) -> Result<FqElem> {
        match &self.form {
            Form::Zero => Err(Error::ZeroElement("leading coefficient of zero".into())),
            Form::NonZero { unit, .. } => Ok(unit[0].clone()),
        }
    }

    fn check_compatible(&self, other: &LaurentElement) {
        assert_eq!(self.spec, other.spec, "different coefficient fields");
        assert_eq!(self.var, other.var, "different uniformizer names");
    }

    pub fn add(&self, other: &LaurentElement) -> Result<LaurentElement> {
        self.check_compatible(other);
        let (v1, u1) = match &self.form {
            Form::Zero => return Ok(other.clone()),
            Form::NonZero { val, unit } => (*val, unit),
        };
        let (v2, u2) = match &other.form {
            Form::Zero => return Ok(self.clone()),
            Form::NonZero { val, unit } => (*val, unit),
        };
        // known windows: [v_i, v_i + prec_i), plus exact zeros below v_i
        let start = v1.min(v2);
        let end = (v1 + u1.len() as i64).min(v2 + u2.len() as i64);
        debug_assert!(start < end);
        let mut coeffs = Vec::with_capacity((end - start) as usize);
        for e in start..end {
            let a = self.known_coeff(e).expect("inside window");
            let b = other.known_coeff(e).expect("inside window");
            coeffs.push(a.add(&b));
        }
        let Some(first) = coeffs.iter().position(|c| !c.is_zero()) else {
            return Err(Error::PrecisionExhausted(format!(
                "sum cancels through {}^{}; cannot certify a leading term",
                self.var, end
            )));
        };
        Ok(LaurentElement {
            spec: self.spec.clone(),
            var: self.var.clone(),
            form: Form::NonZero {
                val: start + first as i64,
                unit: coeffs.split_off(first),
            },
        })
    }

    pub fn neg(&self) -> LaurentElement {
        match &self.form {
            Form::Zero => self.clone(),
            Form::NonZero { val, unit } => LaurentElement {
                spec: self.spec.clone(),
                var: self.var.clone(),
                form: Form::NonZero {
                    val: *val,
                    unit: unit.iter().map(|c| c.neg()).collect(),
                },
            },
        }
    }

    pub fn sub(&self, other: &LaurentElement) -> Result<LaurentElement> {
        self.add(&other.neg())
    }

    /// val(ab) = val(a) + val(b); precision = min of the two.
    pub fn mul(&self, other: &LaurentElement) -> LaurentElement {
        self.check_compatible(other);
        let (Form::NonZero { val: v1, unit: u1 }, Form::NonZero { val: v2, unit: u2 }) =
            (&self.form, &other.form)
        else {
            return LaurentElement::exact_zero(&self.spec, &self.var);
        };
        let prec = u1.len().min(u2.len());
        let mut unit = vec![self.spec.zero(); prec];
        for i in 0..prec.min(u1.len()) {
            if u1[i].is_zero() {
                continue;
            }
            for j in 0..(prec - i).min(u2.len()) {
                unit[i + j] = unit[i + j].add(&u1[i].mul(&u2[j]));
            }
        }
        LaurentElement {
            spec: self.spec.clone(),
            var: self.var.clone(),
            form: Form::NonZero {
                val: v1 + v2,
                unit,
            },
        }
    }

    pub fn inv(&self) -> Result<LaurentElement> {
        let Form::NonZero { val, unit } = &self.form else {
            return Err(Error::DivisionByZero("inverse of zero Laurent series".into()));
        };
        let prec = unit.len();
        let u0_inv = unit[0].inv()?;
        let mut w = vec![self.spec.zero(); prec];
        w[0] = u0_inv.clone();
        for k in 1..prec {
            let mut acc = self.spec.zero();
            for j in 1..=k {
                acc = acc.add(&unit[j].mul(&w[k - j]));
            }
            w[k] = acc.neg().mul(&u0_inv);
        }
        Ok(LaurentElement {
            spec: self.spec.clone(),
            var: self.var.clone(),
            form: Form::NonZero {
                val: -val,
                unit: w,
            },
        })
    }

    pub fn div(&self, other: &LaurentElement) -> Result<LaurentElement> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, exp: i64) -> Result<LaurentElement> {
        if self.is_zero() {
            return match exp {
                0 => Err(Error::ZeroElement("0^0 in a Laurent field".into())),
                e if e > 0 => Ok(self.clone()),
                _ => Err(Error::DivisionByZero("negative power of zero".into())),
            };
        }
        let base = if exp < 0 { self.inv()? } else { self.clone() };
        let mut acc = LaurentElement::from_scalar(
            &self.spec,
            &self.var,
            1,
            self.precision().unwrap_or(DEFAULT_PRECISION),
        );
        let mut b = base;
        let mut e = exp.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Lower the tracked precision.
    pub fn truncate(&self, precision: usize) -> LaurentElement {
        assert!(precision >= 1);
        match &self.form {
            Form::Zero => self.clone(),
            Form::NonZero { val, unit } => {
                let n = precision.min(unit.len());
                LaurentElement {
                    spec: self.spec.clone(),
                    var: self.var.clone(),
                    form: Form::NonZero {
                        val: *val,
                        unit: unit[..n].to_vec(),
                    },
                }
            }
        }
    }
}

impl fmt::Debug for LaurentElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LaurentElement {
    /// Canonical form `t^v*(c0 + c1*t + ... + O(t^N))`, v omitted when 0,
    /// zero coefficients skipped. Parses back bit-exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Form::NonZero { val, unit } = &self.form else {
            return write!(f, "0");
        };
        let var = &self.var;
        let mut terms = Vec::new();
        for (k, c) in unit.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cs = c.to_string();
            let atomic = !cs.contains('+') && !cs.contains('*');
            let coeff = if atomic { cs } else { format!("({cs})") };
            let term = match k {
                0 => coeff,
                1 if c.is_one() => var.clone(),
                1 => format!("{coeff}*{var}"),
                k if c.is_one() => format!("{var}^{k}"),
                k => format!("{coeff}*{var}^{k}"),
            };
            terms.push(term);
        }
        terms.push(format!("O({var}^{})", unit.len()));
        let series = terms.join(" + ");
        if *val == 0 {
            write!(f, "{series}")
        } else {
            write!(f, "{var}^{val}*({series})")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_elem(rng: &mut SplitMix64, spec: &FqSpec, prec: usize) -> LaurentElement {
        let val = rng.range_i64(-5, 6);
        let mut unit: Vec<FqElem> = (0..prec)
            .map(|_| spec.elem_from_rep(rng.below(spec.q() as u64) as u32))
            .collect();
        if unit[0].is_zero() {
            unit[0] = spec.one();
        }
        LaurentElement::from_unit(spec, "t", val, unit).unwrap()
    }

    #[test]
    fn shift_example() {
        // (t*(1+t)) * t^-1 = 1+t
        let f5 = FqSpec::new(5, 1).unwrap();
        let one_plus_t = LaurentElement::from_polynomial(
            &f5,
            "t",
            &PolyFq::from_reps(&f5, vec![1, 1]),
            0,
            8,
        );
        let t = LaurentElement::uniformizer(&f5, "t", 8);
        let shifted = t.mul(&one_plus_t).mul(&t.inv().unwrap());
        assert_eq!(shifted.valuation().unwrap(), 0);
        assert_eq!(shifted.known_coeff(0).unwrap(), f5.one());
        assert_eq!(shifted.known_coeff(1).unwrap(), f5.one());
        assert_eq!(shifted.known_coeff(2).unwrap(), f5.zero());
    }

    #[test]
    fn inverse_roundtrip_random() {
        let mut rng = SplitMix64::new(0x1a1);
        for &(p, e) in &[(2u32, 1u32), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2)] {
            let spec = FqSpec::new(p, e).unwrap();
            for _ in 0..500 {
                let a = random_elem(&mut rng, &spec, 12);
                let prod = a.mul(&a.inv().unwrap());
                assert_eq!(prod.valuation().unwrap(), 0);
                for k in 0..12 {
                    let want = if k == 0 { spec.one() } else { spec.zero() };
                    assert_eq!(prod.known_coeff(k).unwrap(), want);
                }
            }
        }
    }

    #[test]
    fn valuation_additivity() {
        let mut rng = SplitMix64::new(0x1a2);
        let spec = FqSpec::new(3, 1).unwrap();
        for _ in 0..500 {
            let a = random_elem(&mut rng, &spec, 6);
            let b = random_elem(&mut rng, &spec, 9);
            let ab = a.mul(&b);
            assert_eq!(
                ab.valuation().unwrap(),
                a.valuation().unwrap() + b.valuation().unwrap()
            );
            assert_eq!(ab.precision(), Some(6));
            let (v, u) = ab.unit_decompose().unwrap();
            assert_eq!(v, ab.valuation().unwrap());
            assert_eq!(u.valuation().unwrap(), 0);
        }
    }

    #[test]
    fn cancellation_bookkeeping() {
        // (1+t) + (-1-t+t^3) = t^3*(1+O(t^(N-3)))
        let f5 = FqSpec::new(5, 1).unwrap();
        let n = 10;
        let a = LaurentElement::from_polynomial(&f5, "t", &PolyFq::from_reps(&f5, vec![1, 1]), 0, n);
        let b = LaurentElement::from_polynomial(
            &f5,
            "t",
            &PolyFq::from_reps(&f5, vec![4, 4, 0, 1]),
            0,
            n,
        );
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.valuation().unwrap(), 3);
        assert_eq!(sum.precision(), Some(n - 3));
        assert_eq!(sum.leading_coeff().unwrap(), f5.one());

        // full cancellation within the window is a precision error
        let err = a.sub(&a).unwrap_err();
        assert_eq!(err.code(), "PRECISION_EXHAUSTED");
    }

    #[test]
    fn zero_handling() {
        let f2 = FqSpec::new(2, 1).unwrap();
        let z = LaurentElement::exact_zero(&f2, "t");
        assert!(z.is_zero());
        assert_eq!(z.valuation().unwrap_err().code(), "ZERO_ELEMENT");
        assert_eq!(z.inv().unwrap_err().code(), "DIVISION_BY_ZERO");
        let t = LaurentElement::uniformizer(&f2, "t", 4);
        assert_eq!(z.add(&t).unwrap(), t);
        assert!(t.mul(&z).is_zero());
        assert_eq!(
            LaurentElement::from_unit(&f2, "t", 0, vec![f2.zero()])
                .unwrap_err()
                .code(),
            "UNIT_CONSTANT_REQUIRED"
        );
    }

    #[test]
    fn display_canonical() {
        let f3 = FqSpec::new(3, 1).unwrap();
        let a = LaurentElement::from_polynomial(&f3, "t", &PolyFq::from_reps(&f3, vec![2, 1]), -1, 4);
        assert_eq!(a.to_string(), "t^-1*(2 + t + O(t^4))");
        let one = LaurentElement::from_scalar(&f3, "t", 1, 3);
        assert_eq!(one.to_string(), "1 + O(t^3)");
    }
}
