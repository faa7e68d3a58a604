//! Idele class groups relative to a divisor.
//!
//! The restricted product over maximal chains is never materialized: an
//! element of the function field (or a K_2 symbol on the surface) is sent to
//! its finite support via `q_map_image`, and the class group C(X, D)/n is
//! presented by generators and relations read off the same chain data.  The
//! presentation is truncated at a degree bound and certified by comparing
//! invariant factors against the previous bound.

mod curve;
mod surface;

use std::fmt;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};

use crate::abgroup::reduce::ModNPresentation;
use crate::abgroup::{GroupMap, IntMatrix, PresentedGroup};
use crate::chains::{ChainKind, ChainRecord, DivisorData, SchemeModel, SchemePoint};
use crate::error::{Error, Result};
use crate::fields::{parse_rational, BiLaurentElement, FqSpec, PolyFq};
use crate::milnor::SymbolSum;

pub use curve::{ray_class_oracle, weil_reciprocity_check};
pub use surface::local_surface_reciprocity_check;

/// Nonzero rational function on the projective line, in the coordinate t.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFn {
    num: PolyFq,
    den: PolyFq,
}

impl RationalFn {
    pub fn new(num: PolyFq, den: PolyFq) -> Result<RationalFn> {
        if den.is_zero() {
            return Err(Error::DivisionByZero("zero denominator".into()));
        }
        if num.is_zero() {
            return Err(Error::ZeroElement(
                "the idele map is defined on nonzero functions only".into(),
            ));
        }
        Ok(RationalFn { num, den })
    }

    pub fn from_poly(num: PolyFq) -> Result<RationalFn> {
        let one = PolyFq::one(num.spec());
        RationalFn::new(num, one)
    }

    /// Parse `"(t^2+1)/(t-1)"` style input over the given base field.
    pub fn parse(spec: &FqSpec, text: &str) -> Result<RationalFn> {
        let (num, den) = parse_rational(spec, "t", text)?;
        RationalFn::new(num, den)
    }

    pub fn spec(&self) -> &FqSpec {
        self.num.spec()
    }

    pub fn num(&self) -> &PolyFq {
        &self.num
    }

    pub fn den(&self) -> &PolyFq {
        &self.den
    }
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == Some(0) && self.den.leading().is_one() {
            write!(f, "{}", self.num.display("t"))
        } else {
            write!(f, "({})/({})", self.num.display("t"), self.den.display("t"))
        }
    }
}

/// What the Q-map accepts: a function on the curve, or a symbol with
/// monomial-unit entries on the surface.
#[derive(Clone, Debug)]
pub enum QMapInput {
    CurveElement(RationalFn),
    SurfaceSymbol(BiLaurentElement, BiLaurentElement),
}

/// One chain component of an idele: an integer in K_0, or a symbol sum in
/// the Milnor K-group of the chain's residue ring.
#[derive(Clone, Debug)]
pub enum IdeleComponent {
    Ord(i64),
    Sum(SymbolSum),
}

impl fmt::Display for IdeleComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdeleComponent::Ord(k) => write!(f, "{k}"),
            IdeleComponent::Sum(s) => write!(f, "{s}"),
        }
    }
}

impl Serialize for IdeleComponent {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IdeleComponent::Ord(k) => ser.serialize_i64(*k),
            IdeleComponent::Sum(s) => ser.serialize_str(&s.to_string()),
        }
    }
}

/// Image of one element under the Q-map: finitely many chain components,
/// each living in the K-group of degree d(chain).
#[derive(Clone, Debug)]
pub struct IdeleElement {
    divisor: DivisorData,
    support: Vec<(ChainRecord, IdeleComponent)>,
}

impl IdeleElement {
    pub(crate) fn new(divisor: DivisorData, support: Vec<(ChainRecord, IdeleComponent)>) -> IdeleElement {
        for (chain, component) in &support {
            if let IdeleComponent::Sum(s) = component {
                debug_assert_eq!(s.degree(), chain.dimension());
            }
            let _ = chain;
        }
        IdeleElement { divisor, support }
    }

    pub fn divisor(&self) -> &DivisorData {
        &self.divisor
    }

    pub fn support(&self) -> &[(ChainRecord, IdeleComponent)] {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }
}

impl fmt::Display for IdeleElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.support.is_empty() {
            return write!(f, "0");
        }
        for (i, (chain, component)) in self.support.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{component} at {chain}")?;
        }
        Ok(())
    }
}

impl Serialize for IdeleElement {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = ser.serialize_seq(Some(self.support.len()))?;
        #[derive(Serialize)]
        struct Row<'a> {
            chain: String,
            component: &'a IdeleComponent,
        }
        for (chain, component) in &self.support {
            seq.serialize_element(&Row { chain: chain.to_string(), component })?;
        }
        seq.end()
    }
}

/// Send an element to its idele image relative to D: diagonal symbols along
/// the chains through Supp D, valuations (or residue symbols) elsewhere.
pub fn q_map_image(divisor: &DivisorData, input: &QMapInput) -> Result<IdeleElement> {
    match (divisor.model(), input) {
        (SchemeModel::Curve { .. }, QMapInput::CurveElement(f)) => curve::q_map_curve(divisor, f),
        (SchemeModel::LocalSurface { .. }, QMapInput::SurfaceSymbol(f, g)) => {
            surface::q_map_surface(divisor, f, g)
        }
        _ => Err(Error::UnsupportedElementForm(
            "input element does not live on the divisor's scheme".into(),
        )),
    }
}

/// Modulus data carried by D: on each maximal chain through a point of
/// Supp D, units are required to be congruent to 1 at this filtration level.
#[derive(Clone, Debug)]
pub struct ModulusSubgroupSpec {
    divisor: DivisorData,
    levels: Vec<(ChainRecord, u64)>,
}

impl ModulusSubgroupSpec {
    pub fn new(divisor: &DivisorData) -> Result<ModulusSubgroupSpec> {
        let mut levels = Vec::new();
        for (point, mult) in divisor.components() {
            let chain = match divisor.model() {
                SchemeModel::Curve { .. } => ChainRecord::new(
                    divisor.model(),
                    vec![point.clone(), SchemePoint::Generic],
                    ChainKind::ParshinOnPair,
                    divisor,
                )?,
                SchemeModel::LocalSurface { .. } => ChainRecord::new(
                    divisor.model(),
                    vec![SchemePoint::ClosedPoint, point.clone(), SchemePoint::Generic],
                    ChainKind::ParshinOnPair,
                    divisor,
                )?,
            };
            let level = crate::chains::multiplicity_d(&chain, divisor)?;
            debug_assert_eq!(level, *mult);
            levels.push((chain, level));
        }
        Ok(ModulusSubgroupSpec {
            divisor: divisor.clone(),
            levels,
        })
    }

    pub fn divisor(&self) -> &DivisorData {
        &self.divisor
    }

    /// Chains through Supp D with their filtration levels.
    pub fn levels(&self) -> &[(ChainRecord, u64)] {
        &self.levels
    }
}

/// One generator slot of a truncated class-group presentation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdeleSlot {
    /// Z-summand at a closed point away from D.
    Point(SchemePoint),
    /// Class of the local uniformizer on the chain through a D-place.
    Pi(SchemePoint),
    /// Class of the residue multiplicative generator on that chain.
    Gamma(SchemePoint),
    /// Principal-unit witness 1 + pi^i, i-th filtration step at a D-place.
    Principal(SchemePoint, u32),
    /// Basis word of the tame two-dimensional symbol group at a D-prime.
    Word(SchemePoint, usize),
    /// [pi] in K_1 on a surface chain (m, p') with p' away from D.
    UPi(SchemePoint),
    /// [gamma] in K_1 on that same chain.
    UGamma(SchemePoint),
}

impl IdeleSlot {
    pub fn label(&self) -> String {
        match self {
            IdeleSlot::Point(x) => format!("Z[{x}]"),
            IdeleSlot::Pi(v) => format!("pi[{v}]"),
            IdeleSlot::Gamma(v) => format!("gamma[{v}]"),
            IdeleSlot::Principal(v, i) => format!("u{i}[{v}]"),
            IdeleSlot::Word(p, i) => format!("w{i}[{p}]"),
            IdeleSlot::UPi(p) => format!("pi[{p}]|U"),
            IdeleSlot::UGamma(p) => format!("gamma[{p}]|U"),
        }
    }
}

impl fmt::Display for IdeleSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for IdeleSlot {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.label())
    }
}

/// One class-group computation: C(model, D)/n truncated at `degree_bound`.
#[derive(Clone, Debug)]
pub struct ClassGroupJob {
    model: SchemeModel,
    divisor: DivisorData,
    n: u64,
    degree_bound: u32,
    precision: usize,
}

impl ClassGroupJob {
    pub fn new(divisor: DivisorData, n: u64, degree_bound: u32) -> Result<ClassGroupJob> {
        let model = divisor.model().clone();
        let job = ClassGroupJob {
            model,
            divisor,
            n,
            degree_bound,
            precision: crate::fields::DEFAULT_PRECISION,
        };
        job.validate()?;
        Ok(job)
    }

    pub fn with_precision(mut self, precision: usize) -> ClassGroupJob {
        self.precision = precision.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidJob("modulus n must be at least 2".into()));
        }
        if self.n % self.model.base().p() as u64 == 0 {
            return Err(Error::WildCoefficients(format!(
                "modulus {} shares the residue characteristic {}",
                self.n,
                self.model.base().p()
            )));
        }
        if self.degree_bound < 1 {
            return Err(Error::InvalidJob("degree bound must be at least 1".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> &SchemeModel {
        &self.model
    }

    pub fn divisor(&self) -> &DivisorData {
        &self.divisor
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn precision(&self) -> usize {
        self.precision
    }
}

impl Serialize for ClassGroupJob {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(Some(5))?;
        map.serialize_entry("scheme", &self.model)?;
        map.serialize_entry("divisor", &self.divisor.to_string())?;
        map.serialize_entry("n", &self.n)?;
        map.serialize_entry("degree_bound", &self.degree_bound)?;
        map.serialize_entry("precision", &self.precision)?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for ClassGroupJob {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            scheme: SchemeModel,
            divisor: String,
            n: u64,
            degree_bound: u32,
            precision: Option<usize>,
        }
        let raw = Raw::deserialize(de)?;
        let divisor = DivisorData::parse(&raw.scheme, &raw.divisor).map_err(serde::de::Error::custom)?;
        let mut job = ClassGroupJob::new(divisor, raw.n, raw.degree_bound).map_err(serde::de::Error::custom)?;
        if let Some(p) = raw.precision {
            job = job.with_precision(p);
        }
        Ok(job)
    }
}

/// Invariant factors at the degree bound and one bound lower; the truncation
/// is certified when they agree.
#[derive(Clone, Debug, Serialize)]
pub struct StabilizationCert {
    pub degree_bound: u32,
    pub previous: Vec<u64>,
    pub factors: Vec<u64>,
    pub stable: bool,
}

/// A computed class group together with its generator slots, the reduced
/// presentation used to express idele classes, and the truncation
/// certificate.
#[derive(Debug)]
pub struct ClassGroupResult {
    job: ClassGroupJob,
    slots: Vec<IdeleSlot>,
    reduced: ModNPresentation,
    certificate: StabilizationCert,
}

impl ClassGroupResult {
    pub(crate) fn assemble(
        job: &ClassGroupJob,
        slots: Vec<IdeleSlot>,
        reduced: ModNPresentation,
        previous: Vec<u64>,
    ) -> Result<ClassGroupResult> {
        let factors = reduced
            .group
            .invariant_factors()
            .factors_u64()
            .ok_or_else(|| Error::InvalidJob("class group came out infinite".into()))?;
        let stable = previous == factors;
        let certificate = StabilizationCert {
            degree_bound: job.degree_bound(),
            previous,
            factors,
            stable,
        };
        if !stable {
            return Err(Error::NotStabilized {
                bound: job.degree_bound(),
            });
        }
        Ok(ClassGroupResult {
            job: job.clone(),
            slots,
            reduced,
            certificate,
        })
    }

    pub fn job(&self) -> &ClassGroupJob {
        &self.job
    }

    pub fn group(&self) -> &PresentedGroup {
        &self.reduced.group
    }

    /// Invariant factors of the group, ascending, 1-entries dropped.
    pub fn factors(&self) -> Vec<u64> {
        self.certificate.factors.clone()
    }

    pub fn certificate(&self) -> &StabilizationCert {
        &self.certificate
    }

    /// Generator slots of the original (unreduced) presentation.
    pub fn slots(&self) -> &[IdeleSlot] {
        &self.slots
    }

    /// Slots that survive reduction: the generators of `group()`.
    pub fn surviving_slots(&self) -> Vec<&IdeleSlot> {
        self.reduced.survivors.iter().map(|&i| &self.slots[i]).collect()
    }

    fn original_index(&self, slot: &IdeleSlot) -> Option<usize> {
        self.slots.iter().position(|s| s == slot)
    }

    /// Class of a sparse vector over the original slots, as a dense vector
    /// over the group's generators.
    pub fn express(&self, entries: &[(usize, i64)]) -> Vec<u64> {
        self.reduced.express(entries)
    }

    /// Class of a Q-map image, expressed in the group.  Only components on
    /// chains through Supp D and valuation components at points away from D
    /// contribute; the input must live on the same model.
    pub fn express_idele(&self, idele: &IdeleElement) -> Result<Vec<u64>> {
        let entries = match self.job.model() {
            SchemeModel::Curve { .. } => curve::idele_entries(self, idele)?,
            SchemeModel::LocalSurface { .. } => {
                return Err(Error::UnsupportedElementForm(
                    "expressing surface ideles in the class group is not supported".into(),
                ))
            }
        };
        Ok(self.reduced.express(&entries))
    }
}

impl Serialize for ClassGroupResult {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(Some(4))?;
        map.serialize_entry("job", &self.job)?;
        let factors = &self.certificate.factors;
        map.serialize_entry("factors", factors)?;
        let survivors: Vec<String> = self.surviving_slots().iter().map(|s| s.label()).collect();
        map.serialize_entry("generators", &survivors)?;
        map.serialize_entry("certificate", &self.certificate)?;
        map.end()
    }
}

/// Compute C(model, D)/n at the job's degree bound, certifying the
/// truncation against the bound one lower.
pub fn class_group(job: &ClassGroupJob) -> Result<ClassGroupResult> {
    job.validate()?;
    match job.model() {
        SchemeModel::Curve { .. } => curve::class_group_curve(job),
        SchemeModel::LocalSurface { .. } => surface::class_group_surface(job),
    }
}

/// The map C(X, D')/n -> C(X, D)/n for D dividing D', induced by relaxing
/// the congruence condition.  Surjective whenever both sides stabilized.
pub fn transition_map(fine: &ClassGroupResult, coarse: &ClassGroupResult) -> Result<GroupMap> {
    if fine.job.model() != coarse.job.model() {
        return Err(Error::InvalidJob("transition between different schemes".into()));
    }
    if fine.job.n() != coarse.job.n() {
        return Err(Error::MixedModulus(format!(
            "transition between n = {} and n = {}",
            fine.job.n(),
            coarse.job.n()
        )));
    }
    if !coarse.job.divisor().divides(fine.job.divisor()) {
        return Err(Error::InvalidJob(
            "transition requires the coarse divisor to divide the fine one".into(),
        ));
    }
    let coarse_div = coarse.job.divisor();
    let mut columns: Vec<Vec<(usize, num_bigint::BigInt)>> = Vec::new();
    for slot in fine.surviving_slots() {
        let entries = transition_entries(slot, coarse, coarse_div)?;
        let dense = coarse.reduced.express(&entries);
        let col: Vec<(usize, num_bigint::BigInt)> = dense
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i, num_bigint::BigInt::from(v)))
            .collect();
        columns.push(col);
    }
    let matrix = IntMatrix::from_sparse_columns(coarse.group().num_generators(), &columns);
    GroupMap::new(fine.group().clone(), coarse.group().clone(), matrix)
}

/// Where one fine-presentation slot lands among the coarse original slots.
fn transition_entries(
    slot: &IdeleSlot,
    coarse: &ClassGroupResult,
    coarse_div: &DivisorData,
) -> Result<Vec<(usize, i64)>> {
    let miss = |what: &str| {
        Error::InvalidJob(format!(
            "transition target has no slot for {what}; raise the degree bound"
        ))
    };
    let in_coarse = |point: &SchemePoint| coarse_div.multiplicity_of(point) > 0;
    Ok(match slot {
        IdeleSlot::Point(x) => {
            let idx = coarse
                .original_index(&IdeleSlot::Point(x.clone()))
                .ok_or_else(|| miss(&format!("point {x}")))?;
            vec![(idx, 1)]
        }
        IdeleSlot::Pi(v) => {
            // The uniformizer class becomes the point class once v leaves D.
            let target = if in_coarse(v) {
                IdeleSlot::Pi(v.clone())
            } else {
                IdeleSlot::Point(v.clone())
            };
            let idx = coarse
                .original_index(&target)
                .ok_or_else(|| miss(&format!("place {v}")))?;
            vec![(idx, 1)]
        }
        IdeleSlot::Gamma(v) => {
            // Residue units die once the congruence condition at v is gone.
            if in_coarse(v) {
                let idx = coarse
                    .original_index(&IdeleSlot::Gamma(v.clone()))
                    .ok_or_else(|| miss(&format!("place {v}")))?;
                vec![(idx, 1)]
            } else {
                vec![]
            }
        }
        IdeleSlot::Principal(v, i) => {
            if coarse_div.multiplicity_of(v) > *i as u64 {
                let idx = coarse
                    .original_index(&IdeleSlot::Principal(v.clone(), *i))
                    .ok_or_else(|| miss(&format!("filtration step at {v}")))?;
                vec![(idx, 1)]
            } else {
                vec![]
            }
        }
        IdeleSlot::Word(p, widx) => {
            if in_coarse(p) {
                let idx = coarse
                    .original_index(&IdeleSlot::Word(p.clone(), *widx))
                    .ok_or_else(|| miss(&format!("prime {p}")))?;
                vec![(idx, 1)]
            } else {
                // Residue along the top uniformizer: [pi^inner] survives as
                // the K_1 uniformizer class, [pi^gamma] as the unit class,
                // the inner pair dies.
                let target = match widx {
                    0 => Some(IdeleSlot::UPi(p.clone())),
                    1 => Some(IdeleSlot::UGamma(p.clone())),
                    _ => None,
                };
                match target {
                    Some(t) => {
                        let idx = coarse.original_index(&t).ok_or_else(|| miss(&format!("prime {p}")))?;
                        vec![(idx, 1)]
                    }
                    None => vec![],
                }
            }
        }
        IdeleSlot::UPi(p) => {
            let idx = coarse
                .original_index(&IdeleSlot::UPi(p.clone()))
                .ok_or_else(|| miss(&format!("prime {p}")))?;
            vec![(idx, 1)]
        }
        IdeleSlot::UGamma(p) => {
            let idx = coarse
                .original_index(&IdeleSlot::UGamma(p.clone()))
                .ok_or_else(|| miss(&format!("prime {p}")))?;
            vec![(idx, 1)]
        }
    })
}

#[cfg(test)]
mod tests;
