//! Explicit n-th roots of principal units, gcd(n, p) = 1. These certify that
//! the unit filtration dies mod n: 1 + m ⊆ (K^×)^n because x^n - u has the
//! simple root 1 in the residue field, so Newton iteration lifts it. The
//! one-dimensional case runs on plain truncated power series; the
//! two-dimensional case on relaxed window series, where exact cancellation
//! inside x^n - u is expected rather than an error.

use crate::error::{Error, Result};
use crate::fields::{BiLaurentElement, BiVar, FqElem, FqSpec, LaurentElement, OuterSeries};

/// c = a*b mod t^len.
fn series_mul(spec: &FqSpec, a: &[FqElem], b: &[FqElem], len: usize) -> Vec<FqElem> {
    let mut out = vec![spec.zero(); len];
    for i in 0..a.len().min(len) {
        if a[i].is_zero() {
            continue;
        }
        for j in 0..b.len().min(len - i) {
            out[i + j] = out[i + j].add(&a[i].mul(&b[j]));
        }
    }
    out
}

fn series_pow(spec: &FqSpec, a: &[FqElem], e: u64, len: usize) -> Vec<FqElem> {
    let mut acc = vec![spec.zero(); len];
    acc[0] = spec.one();
    let mut base = a.to_vec();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = series_mul(spec, &acc, &base, len);
        }
        base = series_mul(spec, &base, &base, len);
        e >>= 1;
    }
    acc
}

/// Inverse of a unit series mod t^len.
fn series_inv(spec: &FqSpec, a: &[FqElem], len: usize) -> Result<Vec<FqElem>> {
    let a0_inv = a[0].inv()?;
    let mut w = vec![spec.zero(); len];
    w[0] = a0_inv.clone();
    for k in 1..len {
        let mut acc = spec.zero();
        for j in 1..=k.min(a.len() - 1) {
            acc = acc.add(&a[j].mul(&w[k - j]));
        }
        w[k] = acc.neg().mul(&a0_inv);
    }
    Ok(w)
}

/// n-th root of a principal unit u ≡ 1 mod t in F_q((t)), to the precision
/// u carries. Requires gcd(n, p) = 1.
pub fn principal_unit_nth_root(u: &LaurentElement, n: u64) -> Result<LaurentElement> {
    let spec = u.spec().clone();
    if n == 0 || n % spec.p() as u64 == 0 {
        return Err(Error::WildCoefficients(format!(
            "n-th roots need gcd(n, {}) = 1",
            spec.p()
        )));
    }
    if u.is_zero() || u.valuation()? != 0 || !u.leading_coeff()?.is_one() {
        return Err(Error::UnitConstantRequired(
            "principal unit required: valuation 0, leading coefficient 1".into(),
        ));
    }
    let prec = u.precision().expect("nonzero element has a window");
    let coeffs: Vec<FqElem> = (0..prec as i64)
        .map(|k| u.known_coeff(k).expect("inside window"))
        .collect();

    let n_elem = spec.from_scalar(n as i64);
    let mut x = vec![spec.zero(); prec];
    x[0] = spec.one();
    // Newton for x^n - u: precision doubles per step
    let steps = usize::BITS - prec.leading_zeros() + 1;
    for _ in 0..steps {
        let xn = series_pow(&spec, &x, n, prec);
        let mut num = vec![spec.zero(); prec];
        for k in 0..prec {
            num[k] = xn[k].sub(&coeffs[k]);
        }
        let deriv = {
            let xn1 = series_pow(&spec, &x, n - 1, prec);
            xn1.iter().map(|c| c.mul(&n_elem)).collect::<Vec<_>>()
        };
        let quot = series_mul(&spec, &num, &series_inv(&spec, &deriv, prec)?, prec);
        for k in 0..prec {
            x[k] = x[k].sub(&quot[k]);
        }
    }
    // certify: x^n = u on the whole window
    let xn = series_pow(&spec, &x, n, prec);
    for k in 0..prec {
        if xn[k] != coeffs[k] {
            return Err(Error::PrecisionExhausted(format!(
                "Newton iteration failed to certify an n-th root at t^{k}"
            )));
        }
    }
    LaurentElement::from_unit(&spec, u.var(), 0, x)
}

/// n-th root of a principal unit of F_q((s))((t)): an exact monomial-unit
/// element with zero exponents whose unit has constant term 1. Returns the
/// root as a relaxed window series in the outer variable t; the certificate
/// root^n - u vanishes within the tracked precision.
pub fn principal_unit_nth_root_2local(
    u: &BiLaurentElement,
    n: u64,
    n_outer: usize,
    n_inner: usize,
) -> Result<OuterSeries> {
    let spec = u.spec().clone();
    if n == 0 || n % spec.p() as u64 == 0 {
        return Err(Error::WildCoefficients(format!(
            "n-th roots need gcd(n, {}) = 1",
            spec.p()
        )));
    }
    let u0 = u.num().coeff(0, 0).div(&u.den().coeff(0, 0))?;
    if u.s_exp() != 0 || u.t_exp() != 0 || !u0.is_one() {
        return Err(Error::UnitConstantRequired(
            "principal unit required: zero exponents, constant term 1".into(),
        ));
    }
    let series = u.expand_outer(BiVar::T, n_outer, n_inner)?;
    let n_elem = spec.from_scalar(n as i64);

    let mut x = OuterSeries::one(&spec, BiVar::T, n_outer, n_inner);
    let steps = usize::BITS - (n_outer.max(n_inner)).leading_zeros() + 1;
    for _ in 0..steps {
        let num = x.pow_u(n).sub(&series);
        if num.is_zero_within_precision() {
            break;
        }
        let deriv = x.pow_u(n - 1).scale(&n_elem);
        let quot = num.mul(&deriv.inv()?);
        x = x.sub(&quot);
    }
    let check = x.pow_u(n).sub(&series);
    if !check.is_zero_within_precision() {
        return Err(Error::PrecisionExhausted(
            "Newton iteration failed to certify a two-local n-th root".into(),
        ));
    }
    Ok(x)
}
