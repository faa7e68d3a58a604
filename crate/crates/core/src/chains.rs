//! Scheme models with dimension functions, and the chain combinatorics on
//! them: chains, Parshin chains (absolute and on a pair), Q- and Q°-chains,
//! divisors, and the residue field tower k(P) of each supported chain.
//!
//! Two models are provided: P^1 over F_q (places = infinity plus the monic
//! irreducibles) and Spec F_q[[s,t]] (the closed point m, a supported set of
//! height-one primes, and the generic point). The dimension function is
//! d(x) = dim closure(x). Height-one primes of the surface beyond (s) and (t)
//! are restricted to shapes whose completed residue rings are certified
//! domains: graphs t - s*g(s) (exact parametrization) and Eisenstein primes
//! t^k - c*s (series parametrization). Other certifiably-prime polynomials
//! are accepted as points, but k(P) construction refuses them.

use std::cmp::Ordering;
use std::fmt;

use serde::ser::SerializeStruct;

use crate::error::{Error, Result};
use crate::fields::{parse_poly, parse_poly2, FqElem, FqSpec, PolyFq, PolyFq2};

/// A concrete scheme with a dimension function.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SchemeModel {
    /// P^1 over F_q with coordinate t.
    Curve { base: FqSpec },
    /// Spec F_q[[s,t]].
    LocalSurface { base: FqSpec },
}

impl SchemeModel {
    pub fn curve(base: &FqSpec) -> SchemeModel {
        SchemeModel::Curve { base: base.clone() }
    }

    pub fn local_surface(base: &FqSpec) -> SchemeModel {
        SchemeModel::LocalSurface { base: base.clone() }
    }

    pub fn base(&self) -> &FqSpec {
        match self {
            SchemeModel::Curve { base } | SchemeModel::LocalSurface { base } => base,
        }
    }

    /// d = d(generic point).
    pub fn dim(&self) -> usize {
        match self {
            SchemeModel::Curve { .. } => 1,
            SchemeModel::LocalSurface { .. } => 2,
        }
    }
}

impl fmt::Display for SchemeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeModel::Curve { base } => write!(f, "P^1/F_{}", base.q()),
            SchemeModel::LocalSurface { base } => write!(f, "Spec F_{}[[s,t]]", base.q()),
        }
    }
}

impl serde::Serialize for SchemeModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SchemeModel", 2)?;
        let kind = match self {
            SchemeModel::Curve { .. } => "p1",
            SchemeModel::LocalSurface { .. } => "local_surface",
        };
        st.serialize_field("kind", kind)?;
        st.serialize_field("q", &self.base().q())?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for SchemeModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            kind: String,
            q: u64,
        }
        let raw = Raw::deserialize(d)?;
        let base = FqSpec::from_order(raw.q).map_err(serde::de::Error::custom)?;
        match raw.kind.as_str() {
            "p1" => Ok(SchemeModel::Curve { base }),
            "local_surface" => Ok(SchemeModel::LocalSurface { base }),
            other => Err(serde::de::Error::custom(format!(
                "unknown scheme kind {other:?} (expected p1 or local_surface)"
            ))),
        }
    }
}

/// A place of P^1: infinity or a monic irreducible polynomial in t.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CurvePlace {
    Infinity,
    Finite(PolyFq),
}

impl CurvePlace {
    /// Labels: `inf`, a monic irreducible polynomial in t, or a constant c
    /// standing for the rational point t = c.
    pub fn parse(base: &FqSpec, label: &str) -> Result<CurvePlace> {
        if label.trim() == "inf" {
            return Ok(CurvePlace::Infinity);
        }
        let f = parse_poly(base, "t", label)?;
        match f.degree() {
            None | Some(0) => {
                // the rational point t = c
                let c = f.coeff(0);
                Ok(CurvePlace::Finite(PolyFq::from_coeffs(
                    base,
                    &[c.neg(), base.one()],
                )))
            }
            Some(_) => {
                if !f.is_monic() || !f.is_irreducible() {
                    return Err(Error::UnsupportedPrime(format!(
                        "{f} is not a monic irreducible place label",
                        f = f.display("t")
                    )));
                }
                Ok(CurvePlace::Finite(f))
            }
        }
    }

    /// Residue field degree over the base.
    pub fn degree(&self) -> usize {
        match self {
            CurvePlace::Infinity => 1,
            CurvePlace::Finite(f) => f.degree().expect("places are nonconstant"),
        }
    }

    fn order_key(&self) -> (u8, usize, u64) {
        match self {
            CurvePlace::Infinity => (0, 0, 0),
            CurvePlace::Finite(f) => (1, self.degree(), f.pack()),
        }
    }
}

impl PartialOrd for CurvePlace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Infinity first, then by degree, then by packed coefficients.
impl Ord for CurvePlace {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

impl fmt::Display for CurvePlace {
    fn fmt(&self, fmtr: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurvePlace::Infinity => write!(fmtr, "inf"),
            CurvePlace::Finite(f) => write!(fmtr, "{}", f.display("t")),
        }
    }
}

/// A supported height-one prime of F_q[[s,t]].
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SurfacePrime {
    S,
    T,
    /// t - s*g(s): an exactly parametrized graph.
    Graph(PolyFq),
    /// t^k - c*s with k >= 2, c != 0.
    Eisenstein { k: u32, c: FqElem },
    /// Certified prime (Gauss or Eisenstein criterion) outside the curated
    /// list; usable as a point, but k(P) construction refuses it.
    Candidate(PolyFq2),
}

impl SurfacePrime {
    pub fn parse(base: &FqSpec, label: &str) -> Result<SurfacePrime> {
        SurfacePrime::from_poly(parse_poly2(base, label)?)
    }

    /// Classify a polynomial as a supported prime. Accepts only polynomials
    /// that are provably prime in F_q[[s,t]]: the primality certificates are
    /// degree considerations (deg_t <= 1 with coprime coefficients) and the
    /// Eisenstein criterion in t along s.
    pub fn from_poly(f: PolyFq2) -> Result<SurfacePrime> {
        let spec = f.spec().clone();
        if f.is_zero() {
            return Err(Error::UnsupportedPrime("the zero polynomial".into()));
        }
        if !f.coeff(0, 0).is_zero() {
            return Err(Error::UnsupportedPrime(format!(
                "{f} is a unit of F_q[[s,t]] (nonzero constant term)"
            )));
        }
        if f.terms().count() == 1 {
            let ((ds, dt), _) = f.terms().next().expect("one term");
            return match (ds, dt) {
                (1, 0) => Ok(SurfacePrime::S),
                (0, 1) => Ok(SurfacePrime::T),
                _ => Err(Error::UnsupportedPrime(format!(
                    "monomial {f} is not prime"
                ))),
            };
        }
        let k = f.max_outer_degree(crate::fields::BiVar::T);
        let lead = f.outer_coeff(crate::fields::BiVar::T, k);
        if k == 0 {
            // univariate in s with zero constant term and >= 2 terms: s times
            // a nonconstant, hence reducible
            return Err(Error::UnsupportedPrime(format!("{f} factors through s")));
        }
        if k == 1 {
            let b = f.outer_coeff(crate::fields::BiVar::T, 0);
            if lead.gcd(&b)?.degree() != Some(0) {
                return Err(Error::UnsupportedPrime(format!(
                    "{f} has a common factor between its t-coefficients"
                )));
            }
            if lead.degree() == Some(0) {
                // monic graph form t + b/c with b(0) = 0: so b/c = -s*g
                let b = b.scale(&lead.coeff(0).inv()?);
                let g: Vec<FqElem> = (1..=b.degree().unwrap_or(0))
                    .map(|i| b.coeff(i).neg())
                    .collect();
                return Ok(SurfacePrime::Graph(PolyFq::from_coeffs(&spec, &g)));
            }
            // a(s)t + b(s), a nonconstant, gcd(a, b) = 1, b(0) = 0 forces
            // a(0) != 0: analytically a unit times a series graph, prime by
            // Gauss, but not exactly parametrizable
            let scaled = f.mul(&PolyFq2::constant(&lead.leading().inv()?));
            return Ok(SurfacePrime::Candidate(scaled));
        }
        // deg_t >= 2: Eisenstein in t along s or nothing
        if lead.degree() != Some(0) {
            return Err(Error::UnsupportedPrime(format!(
                "{f}: only t-monic primes are certified in t-degree >= 2"
            )));
        }
        let f = f.mul(&PolyFq2::constant(&lead.coeff(0).inv()?));
        for j in 1..k {
            let aj = f.outer_coeff(crate::fields::BiVar::T, j);
            if !aj.is_zero() && !aj.coeff(0).is_zero() {
                return Err(Error::UnsupportedPrime(format!(
                    "{f} is not Eisenstein in t: coefficient of t^{j} is a unit"
                )));
            }
        }
        let a0 = f.outer_coeff(crate::fields::BiVar::T, 0);
        if a0.coeff(1).is_zero() {
            return Err(Error::UnsupportedPrime(format!(
                "{f}: constant t-coefficient has s-valuation >= 2, not certified prime"
            )));
        }
        let middle_zero = (1..k).all(|j| f.outer_coeff(crate::fields::BiVar::T, j).is_zero());
        if middle_zero && a0.degree() == Some(1) {
            return Ok(SurfacePrime::Eisenstein {
                k,
                c: a0.coeff(1).neg(),
            });
        }
        Ok(SurfacePrime::Candidate(f))
    }

    /// The defining polynomial.
    pub fn poly(&self, base: &FqSpec) -> PolyFq2 {
        match self {
            SurfacePrime::S => PolyFq2::var(base, crate::fields::BiVar::S),
            SurfacePrime::T => PolyFq2::var(base, crate::fields::BiVar::T),
            SurfacePrime::Graph(g) => {
                let mut sg = PolyFq2::zero(base);
                for i in 0..=g.degree().unwrap_or(0) {
                    sg = sg.add(&PolyFq2::monomial(&g.coeff(i), i as u32 + 1, 0));
                }
                PolyFq2::var(base, crate::fields::BiVar::T).sub(&sg)
            }
            SurfacePrime::Eisenstein { k, c } => PolyFq2::monomial(&base.one(), 0, *k)
                .sub(&PolyFq2::monomial(c, 1, 0)),
            SurfacePrime::Candidate(f) => f.clone(),
        }
    }

    fn order_key(&self) -> (u8, u64, Vec<u64>) {
        match self {
            SurfacePrime::S => (0, 0, Vec::new()),
            SurfacePrime::T => (1, 0, Vec::new()),
            SurfacePrime::Graph(g) => (2, g.degree().unwrap_or(0) as u64, vec![g.pack()]),
            SurfacePrime::Eisenstein { k, c } => (3, *k as u64, vec![c.rep() as u64]),
            SurfacePrime::Candidate(f) => {
                let enc = f
                    .terms()
                    .map(|((ds, dt), c)| ((ds as u64) << 40) | ((dt as u64) << 20) | c.rep() as u64)
                    .collect();
                (4, f.terms().map(|((ds, dt), _)| (ds + dt) as u64).max().unwrap_or(0), enc)
            }
        }
    }
}

impl PartialOrd for SurfacePrime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// (s) < (t) < graphs < Eisenstein < candidates, each family by degree data.
impl Ord for SurfacePrime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

impl fmt::Display for SurfacePrime {
    fn fmt(&self, fmtr: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfacePrime::S => write!(fmtr, "s"),
            SurfacePrime::T => write!(fmtr, "t"),
            SurfacePrime::Graph(g) => write!(fmtr, "{}", self.poly(g.spec())),
            SurfacePrime::Eisenstein { c, .. } => write!(fmtr, "{}", self.poly(c.spec())),
            SurfacePrime::Candidate(f) => write!(fmtr, "{f}"),
        }
    }
}

/// A point of a scheme model, or a symbolic member of an infinite family.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SchemePoint {
    /// The generic point eta.
    Generic,
    /// The closed point m = (s,t) of the local surface.
    ClosedPoint,
    /// A closed point of the curve.
    Place(CurvePlace),
    /// A height-one prime of the surface.
    Prime(SurfacePrime),
    /// Template: a closed curve point ranging over U.
    AnyClosedInU,
    /// Template: a height-one surface prime ranging over U.
    AnyPrimeInU,
}

impl SchemePoint {
    fn belongs_to(&self, model: &SchemeModel) -> bool {
        match self {
            SchemePoint::Generic => true,
            SchemePoint::Place(_) | SchemePoint::AnyClosedInU => {
                matches!(model, SchemeModel::Curve { .. })
            }
            SchemePoint::ClosedPoint | SchemePoint::Prime(_) | SchemePoint::AnyPrimeInU => {
                matches!(model, SchemeModel::LocalSurface { .. })
            }
        }
    }

    /// d(x) = dim closure(x).
    pub fn dim(&self, model: &SchemeModel) -> usize {
        match self {
            SchemePoint::Generic => model.dim(),
            SchemePoint::ClosedPoint | SchemePoint::Place(_) | SchemePoint::AnyClosedInU => 0,
            SchemePoint::Prime(_) | SchemePoint::AnyPrimeInU => 1,
        }
    }

    /// Whether self lies in the closure of `other` (non-strict).
    pub fn in_closure_of(&self, other: &SchemePoint) -> bool {
        if self == other || matches!(other, SchemePoint::Generic) {
            return true;
        }
        // the surface is local: m lies on every positive-dimensional closure
        matches!(self, SchemePoint::ClosedPoint)
            && matches!(other, SchemePoint::Prime(_) | SchemePoint::AnyPrimeInU)
    }

    fn in_support(&self, d: &DivisorData) -> bool {
        match self {
            SchemePoint::Generic | SchemePoint::AnyClosedInU | SchemePoint::AnyPrimeInU => false,
            // m specializes every height-one prime, so it lies in any
            // nonempty divisor's support
            SchemePoint::ClosedPoint => !d.is_empty(),
            p => d.components.iter().any(|(q, _)| q == p),
        }
    }

    fn label(&self) -> String {
        match self {
            SchemePoint::Generic => "eta".into(),
            SchemePoint::ClosedPoint => "m".into(),
            SchemePoint::Place(v) => v.to_string(),
            SchemePoint::Prime(p) => format!("({p})"),
            SchemePoint::AnyClosedInU => "x in U".into(),
            SchemePoint::AnyPrimeInU => "p in U".into(),
        }
    }
}

impl fmt::Display for SchemePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Effective divisor: components with positive multiplicities, canonically
/// ordered. U is always X minus the support.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DivisorData {
    model: SchemeModel,
    components: Vec<(SchemePoint, u64)>,
}

impl DivisorData {
    pub fn empty(model: &SchemeModel) -> DivisorData {
        DivisorData {
            model: model.clone(),
            components: Vec::new(),
        }
    }

    /// Terms `k[label]` joined by `+`; `0` or the empty string denote the
    /// empty divisor. Curve labels: `inf`, constants (rational points), or
    /// monic irreducibles in t. Surface labels: polynomials in s and t;
    /// monomial labels expand, e.g. `[s^2*t]` = 2[s] + [t].
    pub fn parse(model: &SchemeModel, text: &str) -> Result<DivisorData> {
        let trimmed = text.trim();
        let mut raw: Vec<(SchemePoint, u64)> = Vec::new();
        if !(trimmed.is_empty() || trimmed == "0") {
            for term in split_divisor_terms(trimmed)? {
                let (mult, label) = term;
                match model {
                    SchemeModel::Curve { base } => {
                        let place = CurvePlace::parse(base, &label)?;
                        raw.push((SchemePoint::Place(place), mult));
                    }
                    SchemeModel::LocalSurface { base } => {
                        let f = parse_poly2(base, &label)?;
                        // monomial labels denote divisors of monomials
                        if f.terms().count() == 1 && !f.coeff(0, 0).is_zero() {
                            return Err(Error::UnsupportedPrime(format!(
                                "{f} is a unit of F_q[[s,t]]"
                            )));
                        }
                        if f.terms().count() == 1 {
                            let ((ds, dt), _) = f.terms().next().expect("one term");
                            if ds > 0 {
                                raw.push((SchemePoint::Prime(SurfacePrime::S), mult * ds as u64));
                            }
                            if dt > 0 {
                                raw.push((SchemePoint::Prime(SurfacePrime::T), mult * dt as u64));
                            }
                        } else {
                            raw.push((SchemePoint::Prime(SurfacePrime::from_poly(f)?), mult));
                        }
                    }
                }
            }
        }
        DivisorData::from_points(model, raw)
    }

    fn from_points(model: &SchemeModel, raw: Vec<(SchemePoint, u64)>) -> Result<DivisorData> {
        let mut components: Vec<(SchemePoint, u64)> = Vec::new();
        for (p, mult) in raw {
            if mult == 0 {
                return Err(Error::InvalidJob("divisor multiplicities must be >= 1".into()));
            }
            if !p.belongs_to(model) || p.dim(model) != model.dim() - 1 {
                return Err(Error::InvalidJob(format!(
                    "{p} is not a prime divisor of {model}"
                )));
            }
            match components.iter_mut().find(|(q, _)| *q == p) {
                Some((_, m)) => *m += mult,
                None => components.push((p, mult)),
            }
        }
        components.sort_by(|(a, _), (b, _)| divisor_point_cmp(a, b));
        Ok(DivisorData {
            model: model.clone(),
            components,
        })
    }

    pub fn model(&self) -> &SchemeModel {
        &self.model
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Canonically ordered (point, multiplicity) pairs.
    pub fn components(&self) -> &[(SchemePoint, u64)] {
        &self.components
    }

    pub fn multiplicity_of(&self, p: &SchemePoint) -> u64 {
        self.components
            .iter()
            .find(|(q, _)| q == p)
            .map(|(_, m)| *m)
            .unwrap_or(0)
    }

    /// The reduced divisor: same support, all multiplicities 1.
    pub fn reduced(&self) -> DivisorData {
        DivisorData {
            model: self.model.clone(),
            components: self.components.iter().map(|(p, _)| (p.clone(), 1)).collect(),
        }
    }

    /// Componentwise test that every multiplicity of `self` is at most the
    /// corresponding multiplicity in `other`.
    pub fn divides(&self, other: &DivisorData) -> bool {
        self.model == other.model
            && self
                .components
                .iter()
                .all(|(p, m)| *m <= other.multiplicity_of(p))
    }
}

fn divisor_point_cmp(a: &SchemePoint, b: &SchemePoint) -> Ordering {
    match (a, b) {
        (SchemePoint::Place(x), SchemePoint::Place(y)) => x.cmp(y),
        (SchemePoint::Prime(x), SchemePoint::Prime(y)) => x.cmp(y),
        _ => unreachable!("divisor components are homogeneous"),
    }
}

fn split_divisor_terms(text: &str) -> Result<Vec<(u64, String)>> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut term = String::new();
    for ch in text.chars().chain(std::iter::once('+')) {
        match ch {
            '[' => {
                depth += 1;
                term.push(ch);
            }
            ']' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| Error::Parse("unbalanced ] in divisor".into()))?;
                term.push(ch);
            }
            '+' if depth == 0 => {
                let t = term.trim().to_string();
                if t.is_empty() {
                    return Err(Error::Parse("empty divisor term".into()));
                }
                out.push(parse_divisor_term(&t)?);
                term.clear();
            }
            _ => term.push(ch),
        }
    }
    if depth != 0 {
        return Err(Error::Parse("unbalanced [ in divisor".into()));
    }
    Ok(out)
}

fn parse_divisor_term(term: &str) -> Result<(u64, String)> {
    let open = term
        .find('[')
        .ok_or_else(|| Error::Parse(format!("divisor term {term:?} lacks [label]")))?;
    if !term.ends_with(']') {
        return Err(Error::Parse(format!("divisor term {term:?} lacks closing ]")));
    }
    let mult_text = term[..open].trim();
    let mult = if mult_text.is_empty() {
        1
    } else {
        mult_text
            .parse::<u64>()
            .map_err(|_| Error::Parse(format!("bad multiplicity {mult_text:?}")))?
    };
    Ok((mult, term[open + 1..term.len() - 1].to_string()))
}

impl fmt::Display for DivisorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .components
            .iter()
            .map(|(p, m)| {
                let label = match p {
                    SchemePoint::Place(v) => v.to_string(),
                    SchemePoint::Prime(q) => q.to_string(),
                    _ => unreachable!("divisor components are prime divisors"),
                };
                if *m == 1 {
                    format!("[{label}]")
                } else {
                    format!("{m}[{label}]")
                }
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl serde::Serialize for DivisorData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Comp {
            prime: String,
            mult: u64,
        }
        let comps: Vec<Comp> = self
            .components
            .iter()
            .map(|(p, m)| Comp {
                prime: match p {
                    SchemePoint::Place(v) => v.to_string(),
                    SchemePoint::Prime(q) => q.to_string(),
                    _ => unreachable!("divisor components are prime divisors"),
                },
                mult: *m,
            })
            .collect();
        comps.serialize(s)
    }
}

/// The chain classes of the definitional hierarchy.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChainKind {
    Chain,
    Parshin,
    ParshinOnPair,
    QChain,
    QoChain,
}

impl ChainKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChainKind::Chain => "chain",
            ChainKind::Parshin => "parshin",
            ChainKind::ParshinOnPair => "parshin-on-pair",
            ChainKind::QChain => "q-chain",
            ChainKind::QoChain => "qo-chain",
        }
    }
}

/// Sequence of points with nested closures; the kind is re-verified against
/// its definitional predicate on construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChainRecord {
    model: SchemeModel,
    points: Vec<SchemePoint>,
    kind: ChainKind,
}

impl ChainRecord {
    pub fn new(
        model: &SchemeModel,
        points: Vec<SchemePoint>,
        kind: ChainKind,
        d: &DivisorData,
    ) -> Result<ChainRecord> {
        let ok = match kind {
            ChainKind::Chain => is_chain(model, &points),
            ChainKind::Parshin => is_parshin_chain(model, &points),
            ChainKind::ParshinOnPair => is_parshin_chain_on_pair(model, &points, d),
            ChainKind::QChain => is_q_chain(model, &points, d),
            ChainKind::QoChain => is_qo_chain(model, &points, d),
        };
        if !ok {
            return Err(Error::InvalidJob(format!(
                "({points}) is not a {kind} on {model}",
                points = points.iter().map(|p| p.label()).collect::<Vec<_>>().join(", "),
                kind = kind.as_str(),
            )));
        }
        Ok(ChainRecord {
            model: model.clone(),
            points,
            kind,
        })
    }

    pub fn model(&self) -> &SchemeModel {
        &self.model
    }

    pub fn points(&self) -> &[SchemePoint] {
        &self.points
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    /// d(P) = d(last point).
    pub fn dimension(&self) -> usize {
        self.points.last().expect("chains are nonempty").dim(&self.model)
    }
}

impl fmt::Display for ChainRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.points.iter().map(|p| p.label()).collect();
        write!(f, "({})", labels.join(", "))
    }
}

impl serde::Serialize for ChainRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ChainRecord", 3)?;
        st.serialize_field("kind", self.kind.as_str())?;
        let labels: Vec<String> = self.points.iter().map(|p| p.label()).collect();
        st.serialize_field("points", &labels)?;
        st.serialize_field("dimension", &self.dimension())?;
        st.end()
    }
}

/// Nested closures, model membership, nonempty.
pub fn is_chain(model: &SchemeModel, points: &[SchemePoint]) -> bool {
    !points.is_empty()
        && points.iter().all(|p| p.belongs_to(model))
        && points.windows(2).all(|w| w[0].in_closure_of(&w[1]))
}

/// Chain with d(p_i) = i (the minimal dimension value is 0 on both models).
pub fn is_parshin_chain(model: &SchemeModel, points: &[SchemePoint]) -> bool {
    is_chain(model, points)
        && points
            .iter()
            .enumerate()
            .all(|(i, p)| p.dim(model) == i)
}

/// Parshin chain with p_i in D for i < s and p_s in U.
pub fn is_parshin_chain_on_pair(
    model: &SchemeModel,
    points: &[SchemePoint],
    d: &DivisorData,
) -> bool {
    is_parshin_chain(model, points)
        && points[..points.len() - 1].iter().all(|p| p.in_support(d))
        && !points.last().expect("nonempty").in_support(d)
}

/// (p_0, .., p_{s-2}, p_s) with d(p_i) = i, d(p_s) = s, 1 <= s <= d,
/// p_i in D below, p_s in U.
pub fn is_q_chain(model: &SchemeModel, points: &[SchemePoint], d: &DivisorData) -> bool {
    let s = points.len();
    if s == 0 || s > model.dim() || !is_chain(model, points) {
        return false;
    }
    let last = points.last().expect("nonempty");
    points[..s - 1]
        .iter()
        .enumerate()
        .all(|(i, p)| p.dim(model) == i && p.in_support(d))
        && last.dim(model) == s
        && !last.in_support(d)
}

/// Q-chain with s >= 2.
pub fn is_qo_chain(model: &SchemeModel, points: &[SchemePoint], d: &DivisorData) -> bool {
    points.len() >= 2 && is_q_chain(model, points, d)
}

/// Complete list of chain templates on (U in X) for the divisor D; infinite
/// families over U appear once with a symbolic member. Order: Parshin chains
/// on the pair by dimension (then by divisor-component order), then Q-chains
/// by s.
pub fn enumerate_chain_types(model: &SchemeModel, d: &DivisorData) -> Result<Vec<ChainRecord>> {
    if d.model() != model {
        return Err(Error::InvalidJob(
            "divisor model does not match the scheme model".into(),
        ));
    }
    let mut out = Vec::new();
    match model {
        SchemeModel::Curve { .. } => {
            out.push(ChainRecord::new(
                model,
                vec![SchemePoint::AnyClosedInU],
                ChainKind::ParshinOnPair,
                d,
            )?);
            for (p, _) in d.components() {
                out.push(ChainRecord::new(
                    model,
                    vec![p.clone(), SchemePoint::Generic],
                    ChainKind::ParshinOnPair,
                    d,
                )?);
            }
            out.push(ChainRecord::new(
                model,
                vec![SchemePoint::Generic],
                ChainKind::QChain,
                d,
            )?);
        }
        SchemeModel::LocalSurface { .. } => {
            if d.is_empty() {
                out.push(ChainRecord::new(
                    model,
                    vec![SchemePoint::ClosedPoint],
                    ChainKind::ParshinOnPair,
                    d,
                )?);
            } else {
                out.push(ChainRecord::new(
                    model,
                    vec![SchemePoint::ClosedPoint, SchemePoint::AnyPrimeInU],
                    ChainKind::ParshinOnPair,
                    d,
                )?);
                for (p, _) in d.components() {
                    out.push(ChainRecord::new(
                        model,
                        vec![SchemePoint::ClosedPoint, p.clone(), SchemePoint::Generic],
                        ChainKind::ParshinOnPair,
                        d,
                    )?);
                }
            }
            out.push(ChainRecord::new(
                model,
                vec![SchemePoint::AnyPrimeInU],
                ChainKind::QChain,
                d,
            )?);
            if !d.is_empty() {
                out.push(ChainRecord::new(
                    model,
                    vec![SchemePoint::ClosedPoint, SchemePoint::Generic],
                    ChainKind::QoChain,
                    d,
                )?);
            }
        }
    }
    Ok(out)
}

/// The residue field tower k(P): a finite extension of the base constant
/// field under a stack of Laurent-series variables, innermost first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ResidueRing {
    base: FqSpec,
    degree: u32,
    vars: Vec<String>,
}

impl ResidueRing {
    pub fn base(&self) -> &FqSpec {
        &self.base
    }

    /// Constant-field extension degree over the base.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Uniformizer tower, innermost first.
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// The constant field as its own spec (fails past the representable
    /// order bound).
    pub fn constant_field(&self) -> Result<FqSpec> {
        FqSpec::new(self.base.p(), self.base.e() * self.degree)
    }
}

impl fmt::Display for ResidueRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = (self.base.q() as u64).pow(self.degree);
        write!(f, "F_{q}")?;
        for v in &self.vars {
            write!(f, "(({v}))")?;
        }
        Ok(())
    }
}

/// k(P) for the supported chains: curve chains (x) and (v, eta); surface
/// chains (m), (p), (m, p), and (m, p, eta) for curated primes p.
pub fn residue_ring_at(chain: &ChainRecord) -> Result<ResidueRing> {
    let base = chain.model().base().clone();
    let finite = |degree| ResidueRing {
        base: base.clone(),
        degree,
        vars: Vec::new(),
    };
    let tower = |degree, vars: &[&str]| ResidueRing {
        base: base.clone(),
        degree,
        vars: vars.iter().map(|v| v.to_string()).collect(),
    };
    // residue variable of a curated prime's own residue field
    let prime_residue_var = |p: &SurfacePrime| -> Result<&'static str> {
        match p {
            SurfacePrime::S => Ok("t"),
            SurfacePrime::T | SurfacePrime::Graph(_) => Ok("s"),
            SurfacePrime::Eisenstein { .. } => Ok("t"),
            SurfacePrime::Candidate(f) => Err(Error::AnalyticSplittingUnsupported(format!(
                "({f}) is outside the curated list: its completed residue ring \
                 is not certified to stay a domain"
            ))),
        }
    };
    use SchemePoint::*;
    match (chain.model(), chain.points()) {
        (SchemeModel::Curve { .. }, [Place(v)]) => Ok(finite(v.degree() as u32)),
        (SchemeModel::Curve { .. }, [Place(v), Generic]) => {
            Ok(tower(v.degree() as u32, &["pi"]))
        }
        (SchemeModel::LocalSurface { .. }, [ClosedPoint]) => Ok(finite(1)),
        (SchemeModel::LocalSurface { .. }, [Prime(p)])
        | (SchemeModel::LocalSurface { .. }, [ClosedPoint, Prime(p)]) => {
            Ok(tower(1, &[prime_residue_var(p)?]))
        }
        (SchemeModel::LocalSurface { .. }, [ClosedPoint, Prime(p), Generic]) => {
            let inner = prime_residue_var(p)?;
            let outer = match p {
                SurfacePrime::S => "s",
                SurfacePrime::T => "t",
                _ => "pi",
            };
            Ok(tower(1, &[inner, outer]))
        }
        _ => Err(Error::UnsupportedField(format!(
            "no residue field tower is associated to the chain {chain}"
        ))),
    }
}

/// D(P): the multiplicity in D of the penultimate point of a maximal Parshin
/// chain (0 when absent, which on the pair cannot happen).
pub fn multiplicity_d(chain: &ChainRecord, d: &DivisorData) -> Result<u64> {
    let points = chain.points();
    let maximal = is_parshin_chain(chain.model(), points)
        && chain.dimension() == chain.model().dim()
        && points.len() == chain.model().dim() + 1
        && !points
            .iter()
            .any(|p| matches!(p, SchemePoint::AnyClosedInU | SchemePoint::AnyPrimeInU));
    if !maximal {
        return Err(Error::NotMaximalChain(format!(
            "{chain} does not reach the generic point from a closed point"
        )));
    }
    Ok(d.multiplicity_of(&points[points.len() - 2]))
}
