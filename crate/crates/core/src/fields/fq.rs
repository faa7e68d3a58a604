//! Finite fields F_q, q = p^e <= 2^16, as F_p[x] modulo a deterministically
//! chosen irreducible. Elements are stored as base-p digit packs, so the same
//! (p, e) always yields bit-identical behaviour across runs.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn prime_factors_u64(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Dense polynomials over F_p: coefficient vectors, constant term first,
// no trailing zeros. Only what modulus selection needs.
mod pp {
    pub fn trim(v: &mut Vec<u32>) {
        while v.last() == Some(&0) {
            v.pop();
        }
    }

    pub fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
            }
        }
        let mut out: Vec<u32> = out.into_iter().map(|v| v as u32).collect();
        trim(&mut out);
        out
    }

    /// a mod m, with m monic.
    pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        debug_assert_eq!(*m.last().unwrap(), 1, "modulus must be monic");
        let mut r: Vec<u32> = a.to_vec();
        trim(&mut r);
        let dm = m.len() - 1;
        while r.len() > dm {
            let lead = *r.last().unwrap();
            let shift = r.len() - 1 - dm;
            for (k, &mk) in m.iter().enumerate() {
                let idx = shift + k;
                let sub = (lead as u64 * mk as u64) % p as u64;
                r[idx] = ((r[idx] as u64 + p as u64 * p as u64 - sub) % p as u64) as u32;
            }
            trim(&mut r);
        }
        r
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let (mut a, mut b) = (a.to_vec(), b.to_vec());
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            // make b monic for rem
            let lead = *b.last().unwrap();
            let inv = mod_inv(lead, p);
            let monic: Vec<u32> = b.iter().map(|&c| (c as u64 * inv as u64 % p as u64) as u32).collect();
            let r = rem(&a, &monic, p);
            a = b;
            b = r;
        }
        a
    }

    pub fn mod_inv(a: u32, p: u32) -> u32 {
        // Fermat: a^(p-2)
        let mut base = a as u64 % p as u64;
        let mut exp = p as u64 - 2;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % p as u64;
            }
            base = base * base % p as u64;
            exp >>= 1;
        }
        acc as u32
    }

    /// x^(p^k) mod f by k-fold Frobenius.
    pub fn frob_power_of_x(k: u32, f: &[u32], p: u32) -> Vec<u32> {
        let mut t = rem(&[0, 1], f, p);
        for _ in 0..k {
            t = pow_mod(&t, p as u64, f, p);
        }
        t
    }

    pub fn pow_mod(base: &[u32], mut exp: u64, f: &[u32], p: u32) -> Vec<u32> {
        let mut acc = vec![1u32];
        let mut b = rem(base, f, p);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = rem(&mul(&acc, &b, p), f, p);
            }
            b = rem(&mul(&b, &b, p), f, p);
            exp >>= 1;
        }
        acc
    }

    /// Rabin's test: f (monic, degree e) is irreducible over F_p iff
    /// x^(p^e) = x mod f and gcd(x^(p^(e/r)) - x, f) = 1 for primes r | e.
    pub fn is_irreducible(f: &[u32], p: u32) -> bool {
        let e = (f.len() - 1) as u32;
        if e == 0 {
            return false;
        }
        let x = rem(&[0, 1], f, p);
        let top = frob_power_of_x(e, f, p);
        if top != x {
            return false;
        }
        for r in super::prime_factors_u64(e as u64) {
            let mid = frob_power_of_x(e / r as u32, f, p);
            let mut diff: Vec<u32> = Vec::new();
            let len = mid.len().max(x.len());
            for i in 0..len {
                let a = *mid.get(i).unwrap_or(&0);
                let b = *x.get(i).unwrap_or(&0);
                diff.push(((a + p) - b) % p);
            }
            trim(&mut diff);
            let g = gcd(f, &diff, p);
            if g.len() != 1 {
                return false;
            }
        }
        true
    }
}

struct SpecData {
    p: u32,
    e: u32,
    q: u32,
    /// monic irreducible over F_p, constant term first, length e+1
    modulus: Vec<u32>,
    mul_table: OnceLock<Option<Vec<u32>>>,
    /// (rep of the least primitive element, exponent table indexed by rep)
    dlog: OnceLock<(u32, Vec<u32>)>,
}

/// Specification of F_q = F_p[g]/(modulus), shared by all its elements.
#[derive(Clone)]
pub struct FqSpec(Arc<SpecData>);

impl fmt::Debug for FqSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FqSpec(q={})", self.0.q)
    }
}

impl PartialEq for FqSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.modulus == other.0.modulus)
    }
}
impl Eq for FqSpec {}

impl std::hash::Hash for FqSpec {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.p.hash(state);
        self.0.modulus.hash(state);
    }
}

const MUL_TABLE_MAX_Q: u32 = 256;

impl FqSpec {
    /// F_{p^e} with the lexicographically least monic irreducible modulus
    /// (base-p digit order, constant term least significant).
    pub fn new(p: u32, e: u32) -> Result<FqSpec> {
        if !is_prime_u64(p as u64) {
            return Err(Error::UnsupportedField(format!("{p} is not prime")));
        }
        if e == 0 {
            return Err(Error::UnsupportedField("exponent must be positive".into()));
        }
        let q = (p as u64).checked_pow(e).filter(|&q| q <= 1 << 16).ok_or_else(|| {
            Error::UnsupportedField(format!("q = {p}^{e} exceeds 2^16"))
        })? as u32;

        let mut modulus = None;
        for m in 0..q as u64 {
            let mut f = vec![0u32; e as usize + 1];
            let mut rest = m;
            for c in f.iter_mut().take(e as usize) {
                *c = (rest % p as u64) as u32;
                rest /= p as u64;
            }
            f[e as usize] = 1;
            if pp::is_irreducible(&f, p) {
                modulus = Some(f);
                break;
            }
        }
        let modulus = modulus.expect("an irreducible of every degree exists");
        assert!(pp::is_irreducible(&modulus, p), "modulus irreducibility");
        Ok(FqSpec(Arc::new(SpecData {
            p,
            e,
            q,
            modulus,
            mul_table: OnceLock::new(),
            dlog: OnceLock::new(),
        })))
    }

    /// F_q from the field order, which must be a prime power.
    pub fn from_order(q: u64) -> Result<FqSpec> {
        if q < 2 {
            return Err(Error::UnsupportedField(format!("{q} is not a prime power")));
        }
        let p = (2..=q).find(|&d| q % d == 0).expect("q >= 2 has a factor");
        let mut rest = q;
        let mut e = 0u32;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if rest != 1 {
            return Err(Error::UnsupportedField(format!("{q} is not a prime power")));
        }
        FqSpec::new(p as u32, e)
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }

    pub fn e(&self) -> u32 {
        self.0.e
    }

    pub fn q(&self) -> u32 {
        self.0.q
    }

    /// Modulus coefficients, constant term first, length e+1, monic.
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    pub fn elem_from_rep(&self, rep: u32) -> FqElem {
        assert!(rep < self.0.q, "rep out of range");
        FqElem {
            spec: self.clone(),
            rep,
        }
    }

    pub fn from_scalar(&self, c: i64) -> FqElem {
        let p = self.0.p as i64;
        self.elem_from_rep(c.rem_euclid(p) as u32)
    }

    pub fn zero(&self) -> FqElem {
        self.elem_from_rep(0)
    }

    pub fn one(&self) -> FqElem {
        self.elem_from_rep(1)
    }

    /// The ring generator g (the class of x). In F_p itself this is 0.
    pub fn gen_elem(&self) -> FqElem {
        if self.0.e == 1 {
            self.zero()
        } else {
            self.elem_from_rep(self.0.p)
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FqElem> + '_ {
        (0..self.0.q).map(move |r| self.elem_from_rep(r))
    }

    fn digits(&self, rep: u32) -> Vec<u32> {
        let mut out = vec![0u32; self.0.e as usize];
        let mut rest = rep;
        for d in out.iter_mut() {
            *d = rest % self.0.p;
            rest /= self.0.p;
        }
        out
    }

    fn pack(&self, digits: &[u32]) -> u32 {
        let mut rep = 0u64;
        for &d in digits.iter().rev() {
            rep = rep * self.0.p as u64 + d as u64;
        }
        rep as u32
    }

    fn mul_reps(&self, a: u32, b: u32) -> u32 {
        if let Some(table) = self.0.mul_table.get_or_init(|| {
            if self.0.q <= MUL_TABLE_MAX_Q {
                let q = self.0.q as usize;
                let mut t = vec![0u32; q * q];
                for x in 0..q as u32 {
                    for y in x..q as u32 {
                        let v = self.mul_reps_direct(x, y);
                        t[x as usize * q + y as usize] = v;
                        t[y as usize * q + x as usize] = v;
                    }
                }
                Some(t)
            } else {
                None
            }
        }) {
            return table[a as usize * self.0.q as usize + b as usize];
        }
        self.mul_reps_direct(a, b)
    }

    fn mul_reps_direct(&self, a: u32, b: u32) -> u32 {
        let da = self.digits(a);
        let db = self.digits(b);
        let prod = pp::mul(&da, &db, self.0.p);
        let red = pp::rem(&prod, &self.0.modulus, self.0.p);
        let mut digits = vec![0u32; self.0.e as usize];
        for (i, c) in red.iter().enumerate() {
            digits[i] = *c;
        }
        self.pack(&digits)
    }

    fn dlog_data(&self) -> &(u32, Vec<u32>) {
        self.0.dlog.get_or_init(|| {
            let q = self.0.q;
            let order = q as u64 - 1;
            let factors = prime_factors_u64(order);
            let gen_rep = (1..q)
                .find(|&r| {
                    factors.iter().all(|&f| {
                        !self
                            .elem_from_rep(r)
                            .pow_u(order / f)
                            .is_one()
                    })
                })
                .expect("multiplicative group of a finite field is cyclic");
            let mut table = vec![u32::MAX; q as usize];
            let mut acc = 1u32;
            for k in 0..order {
                table[acc as usize] = k as u32;
                acc = self.mul_reps(acc, gen_rep);
            }
            (gen_rep, table)
        })
    }

    /// Least element generating the multiplicative group.
    pub fn multiplicative_generator(&self) -> FqElem {
        self.elem_from_rep(self.dlog_data().0)
    }

    /// Discrete log of a to base `multiplicative_generator`, in 0..q-1.
    pub fn dlog(&self, a: &FqElem) -> Result<u64> {
        assert_eq!(*self, a.spec, "element from another field");
        if a.is_zero() {
            return Err(Error::ZeroElement("dlog of zero".into()));
        }
        Ok(self.dlog_data().1[a.rep as usize] as u64)
    }
}

/// Element of F_q, canonical reduced representative.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FqElem {
    spec: FqSpec,
    rep: u32,
}

impl FqElem {
    pub fn spec(&self) -> &FqSpec {
        &self.spec
    }

    /// Base-p digit packing of the representative polynomial.
    pub fn rep(&self) -> u32 {
        self.rep
    }

    pub fn is_zero(&self) -> bool {
        self.rep == 0
    }

    pub fn is_one(&self) -> bool {
        self.rep == 1
    }

    fn check_same(&self, other: &FqElem) {
        assert_eq!(self.spec, other.spec, "elements of different fields");
    }

    pub fn add(&self, other: &FqElem) -> FqElem {
        self.check_same(other);
        let p = self.spec.0.p;
        let da = self.spec.digits(self.rep);
        let db = self.spec.digits(other.rep);
        let sum: Vec<u32> = da.iter().zip(&db).map(|(a, b)| (a + b) % p).collect();
        self.spec.elem_from_rep(self.spec.pack(&sum))
    }

    pub fn neg(&self) -> FqElem {
        let p = self.spec.0.p;
        let d = self.spec.digits(self.rep);
        let n: Vec<u32> = d.iter().map(|a| (p - a) % p).collect();
        self.spec.elem_from_rep(self.spec.pack(&n))
    }

    pub fn sub(&self, other: &FqElem) -> FqElem {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &FqElem) -> FqElem {
        self.check_same(other);
        self.spec.elem_from_rep(self.spec.mul_reps(self.rep, other.rep))
    }

    pub fn pow_u(&self, mut exp: u64) -> FqElem {
        let mut acc = self.spec.one();
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self) -> Result<FqElem> {
        if self.is_zero() {
            return Err(Error::DivisionByZero("inverse of zero in F_q".into()));
        }
        Ok(self.pow_u(self.spec.0.q as u64 - 2))
    }

    pub fn div(&self, other: &FqElem) -> Result<FqElem> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, exp: i64) -> Result<FqElem> {
        if exp >= 0 {
            Ok(self.pow_u(exp as u64))
        } else {
            Ok(self.inv()?.pow_u(exp.unsigned_abs()))
        }
    }
}

impl fmt::Debug for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FqElem {
    /// Polynomial in g, ascending powers: `0`, `2`, `g`, `1 + g`, `2*g^2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rep == 0 {
            return write!(f, "0");
        }
        let digits = self.spec.digits(self.rep);
        let mut terms = Vec::new();
        for (k, &c) in digits.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let t = match (k, c) {
                (0, c) => format!("{c}"),
                (1, 1) => "g".to_string(),
                (1, c) => format!("{c}*g"),
                (k, 1) => format!("g^{k}"),
                (k, c) => format!("{c}*g^{k}"),
            };
            terms.push(t);
        }
        write!(f, "{}", terms.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn expected_moduli() {
        // x, x^2+x+1, x^3+x+1, x^2+1: the least irreducibles in digit order
        assert_eq!(FqSpec::new(2, 1).unwrap().modulus(), &[0, 1]);
        assert_eq!(FqSpec::new(2, 2).unwrap().modulus(), &[1, 1, 1]);
        assert_eq!(FqSpec::new(2, 3).unwrap().modulus(), &[1, 1, 0, 1]);
        assert_eq!(FqSpec::new(3, 2).unwrap().modulus(), &[1, 0, 1]);
    }

    #[test]
    fn f4_multiplication_facts() {
        let f4 = FqSpec::new(2, 2).unwrap();
        let g = f4.gen_elem();
        let g1 = g.add(&f4.one());
        assert!(g.mul(&g1).is_one(), "g*(g+1) = 1 in F_4");
        assert_eq!(g.inv().unwrap(), g1, "inv(g) = g+1 in F_4");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(FqSpec::new(6, 1).unwrap_err().code(), "UNSUPPORTED_FIELD");
        assert_eq!(FqSpec::new(2, 0).unwrap_err().code(), "UNSUPPORTED_FIELD");
        assert_eq!(FqSpec::new(2, 17).unwrap_err().code(), "UNSUPPORTED_FIELD");
        assert!(FqSpec::new(2, 16).is_ok()); // 2^16 itself is allowed
    }

    fn check_axioms(spec: &FqSpec, triples: &[(FqElem, FqElem, FqElem)]) {
        for (a, b, c) in triples {
            assert_eq!(a.add(b), b.add(a));
            assert_eq!(a.mul(b), b.mul(a));
            assert_eq!(a.add(&b.add(c)), a.add(b).add(c));
            assert_eq!(a.mul(&b.mul(c)), a.mul(b).mul(c));
            assert_eq!(a.mul(&b.add(c)), a.mul(b).add(&a.mul(c)));
            assert_eq!(a.add(&spec.zero()), *a);
            assert_eq!(a.mul(&spec.one()), *a);
            assert!(a.sub(a).is_zero());
            if !a.is_zero() {
                assert!(a.mul(&a.inv().unwrap()).is_one());
                assert!(a.pow_u(spec.q() as u64 - 1).is_one());
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for (p, e) in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2)] {
            let spec = FqSpec::new(p, e).unwrap();
            let all: Vec<FqElem> = spec.elements().collect();
            let mut triples = Vec::new();
            for a in &all {
                for b in &all {
                    for c in &all {
                        triples.push((a.clone(), b.clone(), c.clone()));
                    }
                }
            }
            check_axioms(&spec, &triples);
        }
    }

    #[test]
    fn field_axioms_sampled_larger() {
        let mut rng = SplitMix64::new(0xf1e1d);
        for (p, e) in [(2, 4), (5, 2), (13, 1), (2, 8)] {
            let spec = FqSpec::new(p, e).unwrap();
            let triples: Vec<_> = (0..1000)
                .map(|_| {
                    (
                        spec.elem_from_rep(rng.below(spec.q() as u64) as u32),
                        spec.elem_from_rep(rng.below(spec.q() as u64) as u32),
                        spec.elem_from_rep(rng.below(spec.q() as u64) as u32),
                    )
                })
                .collect();
            check_axioms(&spec, &triples);
        }
    }

    #[test]
    fn dlog_roundtrip() {
        for (p, e) in [(3, 2), (2, 3), (5, 1), (2, 2)] {
            let spec = FqSpec::new(p, e).unwrap();
            let g = spec.multiplicative_generator();
            for r in 1..spec.q() {
                let a = spec.elem_from_rep(r);
                let k = spec.dlog(&a).unwrap();
                assert_eq!(g.pow_u(k), a);
            }
            assert!(spec.dlog(&spec.zero()).is_err());
        }
        // F_9 with modulus x^2+1: the class of x has order 4, so the chosen
        // generator must be something else and still generate.
        let f9 = FqSpec::new(3, 2).unwrap();
        assert!(f9.gen_elem().pow_u(4).is_one());
        let g = f9.multiplicative_generator();
        assert_ne!(g, f9.gen_elem());
        let mut seen = std::collections::HashSet::new();
        let mut acc = f9.one();
        for _ in 0..8 {
            seen.insert(acc.rep());
            acc = acc.mul(&g);
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn display_forms() {
        let f9 = FqSpec::new(3, 2).unwrap();
        assert_eq!(f9.zero().to_string(), "0");
        assert_eq!(f9.from_scalar(2).to_string(), "2");
        assert_eq!(f9.gen_elem().to_string(), "g");
        assert_eq!(f9.gen_elem().add(&f9.one()).to_string(), "1 + g");
        assert_eq!(
            f9.gen_elem().mul(&f9.gen_elem()).mul(&f9.from_scalar(2)).to_string(),
            // 2*g^2 = 2*(-1) = 1 under x^2+1
            "1"
        );
        let f8 = FqSpec::new(2, 3).unwrap();
        assert_eq!(f8.elem_from_rep(6).to_string(), "g + g^2");
    }
}
