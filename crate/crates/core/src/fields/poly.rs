//! Univariate polynomials over F_q, monic-irreducible enumeration (the
//! closed points of A^1), and the quotient fields F_q[t]/(f) used as residue
//! fields of places without picking an abstract field isomorphism.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

use super::fq::{prime_factors_u64, FqElem, FqSpec};

/// Polynomial over F_q; coefficient reps, constant term first, no trailing
/// zeros (zero polynomial = empty vector).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyFq {
    spec: FqSpec,
    coeffs: Vec<u32>,
}

impl PolyFq {
    pub fn zero(spec: &FqSpec) -> PolyFq {
        PolyFq {
            spec: spec.clone(),
            coeffs: Vec::new(),
        }
    }

    pub fn one(spec: &FqSpec) -> PolyFq {
        PolyFq::from_reps(spec, vec![1])
    }

    pub fn x(spec: &FqSpec) -> PolyFq {
        PolyFq::from_reps(spec, vec![0, 1])
    }

    pub fn constant(c: &FqElem) -> PolyFq {
        PolyFq::from_reps(c.spec(), vec![c.rep()])
    }

    pub fn from_reps(spec: &FqSpec, mut coeffs: Vec<u32>) -> PolyFq {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        debug_assert!(coeffs.iter().all(|&c| c < spec.q()));
        PolyFq {
            spec: spec.clone(),
            coeffs,
        }
    }

    pub fn from_coeffs(spec: &FqSpec, coeffs: &[FqElem]) -> PolyFq {
        PolyFq::from_reps(spec, coeffs.iter().map(|c| c.rep()).collect())
    }

    pub fn spec(&self) -> &FqSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; zero polynomial gives None.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> FqElem {
        self.spec
            .elem_from_rep(self.coeffs.get(k).copied().unwrap_or(0))
    }

    pub fn coeff_reps(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn leading(&self) -> FqElem {
        self.coeff(self.coeffs.len().saturating_sub(1))
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last() == Some(&1)
    }

    /// Coefficients packed base q, for use as a map key. Fits u64 for the
    /// degrees in play (q^(d+1) small).
    pub fn pack(&self) -> u64 {
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = acc * self.spec.q() as u64 + c as u64;
        }
        acc
    }

    pub fn add(&self, other: &PolyFq) -> PolyFq {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs: Vec<FqElem> = (0..len).map(|k| self.coeff(k).add(&other.coeff(k))).collect();
        PolyFq::from_coeffs(&self.spec, &coeffs)
    }

    pub fn neg(&self) -> PolyFq {
        let coeffs: Vec<FqElem> = (0..self.coeffs.len()).map(|k| self.coeff(k).neg()).collect();
        PolyFq::from_coeffs(&self.spec, &coeffs)
    }

    pub fn sub(&self, other: &PolyFq) -> PolyFq {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &PolyFq) -> PolyFq {
        if self.is_zero() || other.is_zero() {
            return PolyFq::zero(&self.spec);
        }
        let mut out = vec![self.spec.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for i in 0..self.coeffs.len() {
            let a = self.coeff(i);
            if a.is_zero() {
                continue;
            }
            for j in 0..other.coeffs.len() {
                out[i + j] = out[i + j].add(&a.mul(&other.coeff(j)));
            }
        }
        PolyFq::from_coeffs(&self.spec, &out)
    }

    pub fn scale(&self, c: &FqElem) -> PolyFq {
        let coeffs: Vec<FqElem> = (0..self.coeffs.len()).map(|k| self.coeff(k).mul(c)).collect();
        PolyFq::from_coeffs(&self.spec, &coeffs)
    }

    /// (quotient, remainder) with deg r < deg divisor.
    pub fn div_rem(&self, divisor: &PolyFq) -> Result<(PolyFq, PolyFq)> {
        if divisor.is_zero() {
            return Err(Error::DivisionByZero("polynomial division by zero".into()));
        }
        let dlead_inv = divisor.leading().inv()?;
        let d = divisor.coeffs.len() - 1;
        let mut rem = self.clone();
        let mut quo = vec![self.spec.zero(); self.coeffs.len().saturating_sub(d)];
        while !rem.is_zero() && rem.coeffs.len() - 1 >= d {
            let k = rem.coeffs.len() - 1 - d;
            let c = rem.leading().mul(&dlead_inv);
            quo[k] = c.clone();
            let mut shifted = vec![self.spec.zero(); k];
            shifted.extend(divisor.coeffs.iter().map(|&r| self.spec.elem_from_rep(r).mul(&c)));
            rem = rem.sub(&PolyFq::from_coeffs(&self.spec, &shifted));
        }
        Ok((PolyFq::from_coeffs(&self.spec, &quo), rem))
    }

    pub fn rem(&self, divisor: &PolyFq) -> Result<PolyFq> {
        Ok(self.div_rem(divisor)?.1)
    }

    pub fn monic(&self) -> Result<PolyFq> {
        if self.is_zero() {
            return Err(Error::ZeroElement("monic of zero polynomial".into()));
        }
        Ok(self.scale(&self.leading().inv()?))
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &PolyFq) -> Result<PolyFq> {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b)?;
            a = b;
            b = r;
        }
        if a.is_zero() {
            Ok(a)
        } else {
            a.monic()
        }
    }

    pub fn pow_mod(&self, mut exp: u64, modulus: &PolyFq) -> Result<PolyFq> {
        let mut acc = PolyFq::one(&self.spec);
        let mut base = self.rem(modulus)?;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base).rem(modulus)?;
            }
            base = base.mul(&base).rem(modulus)?;
            exp >>= 1;
        }
        Ok(acc)
    }

    pub fn eval(&self, x: &FqElem) -> FqElem {
        let mut acc = x.spec().zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(&x.spec().elem_from_rep(c));
        }
        acc
    }

    /// Formal derivative.
    pub fn derivative(&self) -> PolyFq {
        let coeffs: Vec<FqElem> = (1..self.coeffs.len())
            .map(|k| self.coeff(k).mul(&self.spec.from_scalar(k as i64)))
            .collect();
        PolyFq::from_coeffs(&self.spec, &coeffs)
    }

    /// Rabin's criterion over F_q.
    pub fn is_irreducible(&self) -> bool {
        let Some(d) = self.degree() else {
            return false;
        };
        if d == 0 {
            return false;
        }
        let q = self.spec.q() as u64;
        let f = match self.monic() {
            Ok(f) => f,
            Err(_) => return false,
        };
        let x = PolyFq::x(&self.spec);
        // x^(q^d) mod f by d-fold q-power
        let mut t = match x.rem(&f) {
            Ok(t) => t,
            Err(_) => return false,
        };
        let frob = |t: &PolyFq| t.pow_mod(q, &f);
        let mut powers = vec![t.clone()]; // x^(q^0)
        for _ in 0..d {
            t = match frob(&t) {
                Ok(v) => v,
                Err(_) => return false,
            };
            powers.push(t.clone());
        }
        if powers[d] != x.rem(&f).unwrap() {
            return false;
        }
        for r in prime_factors_u64(d as u64) {
            let mid = &powers[d / r as usize];
            let diff = mid.sub(&x);
            match f.gcd(&diff) {
                Ok(g) => {
                    if g.degree() != Some(0) {
                        return false;
                    }
                }
                Err(_) => return false,
            }
        }
        true
    }

    /// All monic irreducibles of exactly this degree, ascending in packed
    /// coefficient order. Deterministic.
    pub fn monic_irreducibles(spec: &FqSpec, degree: usize) -> Vec<PolyFq> {
        assert!(degree >= 1);
        let q = spec.q() as u64;
        let count = q.pow(degree as u32);
        let mut out = Vec::new();
        for m in 0..count {
            let mut coeffs = vec![0u32; degree + 1];
            let mut rest = m;
            for c in coeffs.iter_mut().take(degree) {
                *c = (rest % q) as u32;
                rest /= q;
            }
            coeffs[degree] = 1;
            let f = PolyFq::from_reps(spec, coeffs);
            if f.is_irreducible() {
                out.push(f);
            }
        }
        out
    }

    /// Monic irreducible factors with multiplicities, ascending in (degree,
    /// packed) order, by trial division. The leading coefficient is dropped.
    pub fn factor(&self) -> Result<Vec<(PolyFq, u64)>> {
        let mut rest = self.monic()?;
        let mut out: Vec<(PolyFq, u64)> = Vec::new();
        let mut degree = 1;
        while rest.degree() > Some(0) {
            let d = rest.degree().expect("nonzero");
            if degree * 2 > d {
                // what remains is irreducible
                out.push((rest, 1));
                break;
            }
            for h in PolyFq::monic_irreducibles(&self.spec, degree) {
                let mut mult = 0;
                loop {
                    let (q, r) = rest.div_rem(&h)?;
                    if !r.is_zero() {
                        break;
                    }
                    rest = q;
                    mult += 1;
                }
                if mult > 0 {
                    out.push((h, mult));
                }
            }
            degree += 1;
        }
        Ok(out)
    }

    /// Display with an explicit variable name.
    pub fn display<'a>(&'a self, var: &'a str) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, var }
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a PolyFq,
    var: &'a str,
}

impl fmt::Display for PolyDisplay<'_> {
    /// Descending powers, compact: `t^2+t+1`, `t^2+(1+g)*t`, `2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        let mut terms = Vec::new();
        for k in (0..self.poly.coeffs.len()).rev() {
            let c = self.poly.coeff(k);
            if c.is_zero() {
                continue;
            }
            let cs = c.to_string();
            let atomic = !cs.contains('+') && !cs.contains('*');
            let coeff_part = if c.is_one() && k > 0 {
                String::new()
            } else if atomic {
                format!("{cs}{}", if k > 0 { "*" } else { "" })
            } else {
                format!("({cs}){}", if k > 0 { "*" } else { "" })
            };
            let var_part = match k {
                0 => String::new(),
                1 => self.var.to_string(),
                k => format!("{}^{k}", self.var),
            };
            terms.push(format!("{coeff_part}{var_part}"));
        }
        write!(f, "{}", terms.join("+"))
    }
}

impl fmt::Debug for PolyFq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display("t"))
    }
}

struct QuotData {
    spec: FqSpec,
    modulus: PolyFq,
    order: u64,
    dlog: OnceLock<(PolyFq, HashMap<u64, u64>)>,
}

/// The field F_q[t]/(f) for monic irreducible f: the residue field at the
/// place (f) of the projective line, kept in quotient-ring form.
#[derive(Clone)]
pub struct QuotFq(Arc<QuotData>);

impl PartialEq for QuotFq {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.spec == other.0.spec && self.0.modulus == other.0.modulus)
    }
}
impl Eq for QuotFq {}

impl fmt::Debug for QuotFq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuotFq({})", self.0.modulus.display("t"))
    }
}

impl QuotFq {
    pub fn new(modulus: PolyFq) -> Result<QuotFq> {
        if !modulus.is_monic() || !modulus.is_irreducible() {
            return Err(Error::UnsupportedField(format!(
                "{} is not monic irreducible",
                modulus.display("t")
            )));
        }
        let spec = modulus.spec().clone();
        let d = modulus.degree().unwrap() as u32;
        let order = (spec.q() as u64).pow(d);
        Ok(QuotFq(Arc::new(QuotData {
            spec,
            modulus,
            order,
            dlog: OnceLock::new(),
        })))
    }

    pub fn base(&self) -> &FqSpec {
        &self.0.spec
    }

    pub fn modulus(&self) -> &PolyFq {
        &self.0.modulus
    }

    pub fn degree(&self) -> usize {
        self.0.modulus.degree().unwrap()
    }

    /// Field size q^d.
    pub fn order(&self) -> u64 {
        self.0.order
    }

    pub fn reduce(&self, a: &PolyFq) -> PolyFq {
        a.rem(&self.0.modulus).expect("modulus is nonzero")
    }

    pub fn one(&self) -> PolyFq {
        PolyFq::one(&self.0.spec)
    }

    pub fn mul(&self, a: &PolyFq, b: &PolyFq) -> PolyFq {
        self.reduce(&a.mul(b))
    }

    pub fn pow(&self, a: &PolyFq, exp: u64) -> PolyFq {
        a.pow_mod(exp, &self.0.modulus).expect("modulus is nonzero")
    }

    pub fn inv(&self, a: &PolyFq) -> Result<PolyFq> {
        let a = self.reduce(a);
        if a.is_zero() {
            return Err(Error::DivisionByZero("inverse of zero residue".into()));
        }
        Ok(self.pow(&a, self.0.order - 2))
    }

    /// Norm down to F_q: a^((q^d-1)/(q-1)), landing in the prime... base field.
    pub fn norm(&self, a: &PolyFq) -> Result<FqElem> {
        let a = self.reduce(a);
        if a.is_zero() {
            return Err(Error::ZeroElement("norm of zero".into()));
        }
        let q = self.0.spec.q() as u64;
        let e = (self.0.order - 1) / (q - 1);
        let n = self.pow(&a, e);
        debug_assert!(n.degree() == Some(0));
        Ok(n.coeff(0))
    }

    fn dlog_data(&self) -> &(PolyFq, HashMap<u64, u64>) {
        self.0.dlog.get_or_init(|| {
            let order = self.0.order - 1;
            let factors = prime_factors_u64(order);
            let q = self.0.spec.q() as u64;
            let d = self.degree();
            // candidates in packed ascending order, skipping 0
            let generator = (1..self.0.order)
                .map(|m| {
                    let mut coeffs = vec![0u32; d];
                    let mut rest = m;
                    for c in coeffs.iter_mut() {
                        *c = (rest % q) as u32;
                        rest /= q;
                    }
                    PolyFq::from_reps(&self.0.spec, coeffs)
                })
                .find(|a| {
                    factors
                        .iter()
                        .all(|&f| self.pow(a, order / f) != self.one())
                })
                .expect("multiplicative group is cyclic");
            let mut table = HashMap::with_capacity(order as usize);
            let mut acc = self.one();
            for k in 0..order {
                table.insert(acc.pack(), k);
                acc = self.mul(&acc, &generator);
            }
            (generator, table)
        })
    }

    pub fn multiplicative_generator(&self) -> PolyFq {
        self.dlog_data().0.clone()
    }

    /// Discrete log base `multiplicative_generator`, in 0..q^d-1.
    pub fn dlog(&self, a: &PolyFq) -> Result<u64> {
        let a = self.reduce(a);
        if a.is_zero() {
            return Err(Error::ZeroElement("dlog of zero residue".into()));
        }
        Ok(*self
            .dlog_data()
            .1
            .get(&a.pack())
            .expect("table covers all nonzero residues"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(spec: &FqSpec, reps: &[u32]) -> PolyFq {
        PolyFq::from_reps(spec, reps.to_vec())
    }

    #[test]
    fn division_and_gcd() {
        let f3 = FqSpec::new(3, 1).unwrap();
        let a = f(&f3, &[1, 0, 1]); // 1 + t^2
        let b = f(&f3, &[1, 1]); // 1 + t
        let (q, r) = a.div_rem(&b).unwrap();
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree() < b.degree());
        // gcd(t^2-1, t+1) = t+1
        let c = f(&f3, &[2, 0, 1]);
        assert_eq!(c.gcd(&b).unwrap(), b);
    }

    #[test]
    fn irreducible_counts_match_necklace_formula() {
        // #monic irreducibles of degree d over F_q = (1/d) sum_{e|d} mu(d/e) q^e
        let cases = [
            (2u32, 1u32, 1usize, 2usize),
            (2, 1, 2, 1),
            (2, 1, 3, 2),
            (2, 1, 4, 3),
            (3, 1, 2, 3),
            (3, 1, 3, 8),
            (5, 1, 2, 10),
            (2, 2, 2, 6),
        ];
        for (p, e, d, want) in cases {
            let spec = FqSpec::new(p, e).unwrap();
            let got = PolyFq::monic_irreducibles(&spec, d).len();
            assert_eq!(got, want, "q={} d={}", spec.q(), d);
        }
    }

    #[test]
    fn quotient_field_arithmetic() {
        let f2 = FqSpec::new(2, 1).unwrap();
        let m = f(&f2, &[1, 1, 1]); // t^2+t+1, so the quotient is F_4
        let k = QuotFq::new(m).unwrap();
        assert_eq!(k.order(), 4);
        let t = f(&f2, &[0, 1]);
        // t * (t+1) = t^2+t = 1 mod t^2+t+1
        assert_eq!(k.mul(&t, &f(&f2, &[1, 1])), k.one());
        assert_eq!(k.inv(&t).unwrap(), f(&f2, &[1, 1]));
        // norm of t: t^((4-1)/(2-1)) = t^3 = 1
        assert!(k.norm(&t).unwrap().is_one());
    }

    #[test]
    fn quotient_dlog_roundtrip() {
        let f3 = FqSpec::new(3, 1).unwrap();
        let m = f(&f3, &[1, 0, 1]); // t^2+1 irreducible over F_3: F_9
        let k = QuotFq::new(m).unwrap();
        let g = k.multiplicative_generator();
        for packed in 1..9u64 {
            let a = f(&f3, &[(packed % 3) as u32, (packed / 3) as u32]);
            let e = k.dlog(&a).unwrap();
            assert_eq!(k.pow(&g, e), a);
        }
        assert!(k.dlog(&PolyFq::zero(&f3)).is_err());
        assert_eq!(QuotFq::new(f(&f3, &[2, 0, 1])).unwrap_err().code(), "UNSUPPORTED_FIELD");
    }

    #[test]
    fn display_compact() {
        let f2 = FqSpec::new(2, 1).unwrap();
        assert_eq!(f(&f2, &[1, 1, 1]).display("t").to_string(), "t^2+t+1");
        let f4 = FqSpec::new(2, 2).unwrap();
        assert_eq!(f(&f4, &[0, 2]).display("t").to_string(), "g*t");
        assert_eq!(f(&f4, &[1, 3]).display("u").to_string(), "(1 + g)*u+1");
    }

    #[test]
    fn factorization_by_trial_division() {
        let f3 = FqSpec::new(3, 1).unwrap();
        // 2·t²·(t+1)·(t²+1)
        let a = f(&f3, &[0, 0, 1])
            .mul(&f(&f3, &[1, 1]))
            .mul(&f(&f3, &[1, 0, 1]))
            .scale(&f3.from_scalar(2));
        let factors = a.factor().unwrap();
        assert_eq!(
            factors
                .iter()
                .map(|(h, m)| (h.display("t").to_string(), *m))
                .collect::<Vec<_>>(),
            vec![
                ("t".to_string(), 2),
                ("t+1".to_string(), 1),
                ("t^2+1".to_string(), 1)
            ]
        );
        // product of factors recovers the monic part
        let mut prod = PolyFq::one(&f3);
        for (h, m) in &factors {
            for _ in 0..*m {
                prod = prod.mul(h);
            }
        }
        assert_eq!(prod, a.monic().unwrap());
        // constants factor trivially; zero errors
        assert!(f(&f3, &[2]).factor().unwrap().is_empty());
        assert!(PolyFq::zero(&f3).factor().is_err());

        let f2 = FqSpec::new(2, 1).unwrap();
        let mut rng = crate::rng::SplitMix64::new(77);
        for _ in 0..60 {
            let coeffs: Vec<u32> = (0..7).map(|_| rng.below(2) as u32).collect();
            let a = PolyFq::from_reps(&f2, coeffs);
            if a.is_zero() {
                continue;
            }
            let mut prod = PolyFq::one(&f2);
            for (h, m) in a.factor().unwrap() {
                assert!(h.is_irreducible(), "{}", h.display("t"));
                for _ in 0..m {
                    prod = prod.mul(&h);
                }
            }
            assert_eq!(prod, a.monic().unwrap());
        }
    }
}
