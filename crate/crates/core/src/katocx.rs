//! Nerve complexes of normal-crossing configurations and their homology
//! over Z/n.
//!
//! A configuration is purely combinatorial: N components, the set of
//! connected components of each scheme-theoretic intersection, and the face
//! maps recording which component of a smaller intersection contains a given
//! component of a larger one. The associated complex has the free Z/n-module
//! on pi_0 of the (s+1)-fold intersections in degree s and the alternating
//! sum of face maps as differential; its degree-1 and degree-2 homology
//! bound the cokernel and kernel of the reciprocity map on a punctured
//! semistable family, which is what `obstruction_report` renders.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

use crate::abgroup::{smith_normal_form, IntMatrix, PresentedGroup};
use crate::error::{Error, Result};

/// Intersection pattern of a simple normal crossing configuration.
///
/// Subsets are strictly increasing lists of 1-based component indices. Each
/// component is irreducible, so singleton intersections always have exactly
/// one connected component and are never listed explicitly; a subset absent
/// from the table has empty intersection. Face maps are stored for every
/// listed subset and every omitted position; maps whose target has a single
/// component are forced and may be left implicit in the input.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SNCConfig {
    components: u32,
    pi0: BTreeMap<Vec<u32>, usize>,
    faces: BTreeMap<(Vec<u32>, usize), Vec<usize>>,
}

fn remove_at(subset: &[u32], pos: usize) -> Vec<u32> {
    let mut out = subset.to_vec();
    out.remove(pos);
    out
}

impl SNCConfig {
    /// Validate intersection data and resolve all face maps.
    ///
    /// `intersections` lists (subset, |pi_0|) for subsets of size >= 2;
    /// `faces` lists (subset, nu, map) with `map[c]` the component of the
    /// subset-minus-nu-th-index intersection containing component `c`. The
    /// simplicial identity d_mu d_nu = d_nu d_{mu+1} (mu >= nu) is checked
    /// on every subset of size >= 3.
    pub fn new(
        components: u32,
        intersections: Vec<(Vec<u32>, usize)>,
        faces: Vec<(Vec<u32>, usize, Vec<usize>)>,
    ) -> Result<SNCConfig> {
        if components == 0 {
            return Err(Error::InvalidJob(
                "a configuration needs at least one component".into(),
            ));
        }
        let mut pi0: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for (subset, k) in intersections {
            validate_subset(&subset, components)?;
            if subset.len() < 2 {
                return Err(Error::InvalidJob(format!(
                    "subset {subset:?} is a single component; singletons are implicit"
                )));
            }
            if k == 0 {
                continue; // empty intersection, same as absent
            }
            if pi0.insert(subset.clone(), k).is_some() {
                return Err(Error::InvalidJob(format!("subset {subset:?} listed twice")));
            }
        }

        let mut explicit: BTreeMap<(Vec<u32>, usize), Vec<usize>> = BTreeMap::new();
        for (subset, nu, map) in faces {
            validate_subset(&subset, components)?;
            if nu == 0 || nu > subset.len() {
                return Err(Error::FaceMapIncompatible(format!(
                    "face index {nu} out of range for subset {subset:?}"
                )));
            }
            if !pi0.contains_key(&subset) {
                return Err(Error::FaceMapIncompatible(format!(
                    "face data on {subset:?}, which has empty intersection"
                )));
            }
            if explicit.insert((subset.clone(), nu), map).is_some() {
                return Err(Error::InvalidJob(format!(
                    "face map ({subset:?}, {nu}) listed twice"
                )));
            }
        }

        // resolve a total face map for every (subset, nu)
        let pi0_of = |subset: &[u32]| -> usize {
            if subset.len() == 1 {
                1
            } else {
                pi0.get(subset).copied().unwrap_or(0)
            }
        };
        let mut resolved: BTreeMap<(Vec<u32>, usize), Vec<usize>> = BTreeMap::new();
        for (subset, &k) in &pi0 {
            for nu in 1..=subset.len() {
                let target = remove_at(subset, nu - 1);
                let tk = pi0_of(&target);
                if tk == 0 {
                    return Err(Error::FaceMapIncompatible(format!(
                        "{subset:?} has components but its face {target:?} is empty"
                    )));
                }
                let map = match explicit.remove(&(subset.clone(), nu)) {
                    Some(map) => {
                        if map.len() != k {
                            return Err(Error::FaceMapIncompatible(format!(
                                "face map ({subset:?}, {nu}) has {} entries, expected {k}",
                                map.len()
                            )));
                        }
                        if let Some(&bad) = map.iter().find(|&&c| c >= tk) {
                            return Err(Error::FaceMapIncompatible(format!(
                                "face map ({subset:?}, {nu}) hits component {bad}, but {target:?} has only {tk}"
                            )));
                        }
                        map
                    }
                    None if tk == 1 => vec![0; k],
                    None => {
                        return Err(Error::FaceMapIncompatible(format!(
                            "face map ({subset:?}, {nu}) is ambiguous ({target:?} has {tk} components) and must be given"
                        )));
                    }
                };
                resolved.insert((subset.clone(), nu), map);
            }
        }
        if let Some(((subset, nu), _)) = explicit.into_iter().next() {
            return Err(Error::FaceMapIncompatible(format!(
                "face map ({subset:?}, {nu}) was given but never resolved"
            )));
        }

        // d_mu d_nu = d_nu d_{mu+1} for mu >= nu, on every component
        for (subset, &k) in &pi0 {
            let s = subset.len();
            if s < 3 {
                continue;
            }
            for nu in 1..s {
                for mu in nu..s {
                    let t1 = remove_at(subset, nu - 1);
                    let t2 = remove_at(subset, mu);
                    for c in 0..k {
                        let c1 = resolved[&(subset.clone(), nu)][c];
                        let left = resolved[&(t1.clone(), mu)][c1];
                        let c2 = resolved[&(subset.clone(), mu + 1)][c];
                        let right = resolved[&(t2.clone(), nu)][c2];
                        if left != right {
                            return Err(Error::FaceMapIncompatible(format!(
                                "faces of {subset:?} component {c} disagree: omit {nu} then {mu} lands in component {left}, omit {} then {nu} in {right}",
                                mu + 1
                            )));
                        }
                    }
                }
            }
        }

        Ok(SNCConfig {
            components,
            pi0,
            faces: resolved,
        })
    }

    /// N disjoint components: no intersections at all.
    pub fn disjoint(components: u32) -> Result<SNCConfig> {
        SNCConfig::new(components, Vec::new(), Vec::new())
    }

    /// Curve-like configuration from incidence data: vertex i is component
    /// Y_i and every listed edge is one intersection point of the pair, so
    /// parallel edges model components meeting in several points. No triple
    /// intersections; every face map is forced.
    pub fn from_incidence_graph(vertices: u32, edges: &[(u32, u32)]) -> Result<SNCConfig> {
        let mut count: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidJob(format!(
                    "component {a} cannot intersect itself"
                )));
            }
            let pair = vec![a.min(b), a.max(b)];
            *count.entry(pair).or_insert(0) += 1;
        }
        SNCConfig::new(vertices, count.into_iter().collect(), Vec::new())
    }

    pub fn components(&self) -> u32 {
        self.components
    }

    /// |pi_0| of the intersection along `subset` (singletons always 1).
    pub fn pi0_of(&self, subset: &[u32]) -> usize {
        if subset.len() == 1 && subset[0] >= 1 && subset[0] <= self.components {
            1
        } else {
            self.pi0.get(subset).copied().unwrap_or(0)
        }
    }

    /// Parse the JSON shape
    /// `{"components": N, "intersections": [{"subset": [1,2], "pi0": 2}],
    ///   "faces": [{"subset": [1,2,3], "nu": 3, "map": [0]}]}`.
    pub fn from_json(text: &str) -> Result<SNCConfig> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidJob(format!("configuration JSON: {e}")))?;
        SNCConfig::new(
            raw.components,
            raw.intersections
                .into_iter()
                .map(|i| (i.subset, i.pi0))
                .collect(),
            raw.faces.into_iter().map(|f| (f.subset, f.nu, f.map)).collect(),
        )
    }

    /// Inverse of `from_json`; forced face maps are omitted.
    pub fn to_json(&self) -> String {
        let raw = RawConfig {
            components: self.components,
            intersections: self
                .pi0
                .iter()
                .map(|(subset, &pi0)| RawIntersection {
                    subset: subset.clone(),
                    pi0,
                })
                .collect(),
            faces: self
                .faces
                .iter()
                .filter(|((subset, nu), _)| self.pi0_of(&remove_at(subset, nu - 1)) > 1)
                .map(|((subset, nu), map)| RawFace {
                    subset: subset.clone(),
                    nu: *nu,
                    map: map.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("configuration serializes")
    }
}

fn validate_subset(subset: &[u32], components: u32) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::InvalidJob("empty subset".into()));
    }
    for w in subset.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidJob(format!(
                "subset {subset:?} must list component indices strictly increasing"
            )));
        }
    }
    if subset[0] < 1 || *subset.last().unwrap() > components {
        return Err(Error::InvalidJob(format!(
            "subset {subset:?} references a component outside 1..={components}"
        )));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    components: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    intersections: Vec<RawIntersection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    faces: Vec<RawFace>,
}

#[derive(Serialize, Deserialize)]
struct RawIntersection {
    subset: Vec<u32>,
    pi0: usize,
}

#[derive(Serialize, Deserialize)]
struct RawFace {
    subset: Vec<u32>,
    nu: usize,
    map: Vec<usize>,
}

/// The complex (Z/n)^{pi_0(Y^[s+1])} in degree s with differential the
/// alternating sum of pushforwards along the face maps; the degree-0 term
/// sits on the components themselves.
pub struct NerveComplex {
    n: u64,
    /// basis[s] lists (subset, component index) in order, |subset| = s + 1
    basis: Vec<Vec<(Vec<u32>, usize)>>,
    /// boundaries[s] is d_s: C_{s+1} -> C_s
    boundaries: Vec<IntMatrix>,
}

/// Assemble the complex and verify d o d = 0 numerically.
pub fn build_nerve_complex(config: &SNCConfig, n: u64) -> Result<NerveComplex> {
    if n < 2 {
        return Err(Error::InvalidJob(format!("modulus {n} must be at least 2")));
    }
    let max_size = config.pi0.keys().map(|s| s.len()).max().unwrap_or(1);

    let mut basis: Vec<Vec<(Vec<u32>, usize)>> = Vec::with_capacity(max_size);
    basis.push((1..=config.components).map(|i| (vec![i], 0)).collect());
    for size in 2..=max_size {
        let mut layer = Vec::new();
        for (subset, &k) in &config.pi0 {
            if subset.len() == size {
                layer.extend((0..k).map(|c| (subset.clone(), c)));
            }
        }
        basis.push(layer);
    }

    let index: Vec<BTreeMap<(Vec<u32>, usize), usize>> = basis
        .iter()
        .map(|layer| {
            layer
                .iter()
                .enumerate()
                .map(|(i, b)| (b.clone(), i))
                .collect()
        })
        .collect();

    let mut boundaries = Vec::with_capacity(max_size.saturating_sub(1));
    for s in 0..max_size - 1 {
        let cols: Vec<Vec<(usize, num_bigint::BigInt)>> = basis[s + 1]
            .iter()
            .map(|(subset, c)| {
                (1..=subset.len())
                    .map(|nu| {
                        let target = remove_at(subset, nu - 1);
                        let tc = config.faces[&(subset.clone(), nu)][*c];
                        let row = index[s][&(target, tc)];
                        let sign = if nu % 2 == 1 { 1 } else { -1 };
                        (row, num_bigint::BigInt::from(sign))
                    })
                    .collect()
            })
            .collect();
        boundaries.push(IntMatrix::from_sparse_columns(basis[s].len(), &cols));
    }

    for s in 0..boundaries.len().saturating_sub(1) {
        if !boundaries[s].mul(&boundaries[s + 1]).is_zero() {
            return Err(Error::FaceMapIncompatible(format!(
                "d_{s} o d_{} is nonzero",
                s + 1
            )));
        }
    }

    Ok(NerveComplex {
        n,
        basis,
        boundaries,
    })
}

impl NerveComplex {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn top_degree(&self) -> usize {
        self.basis.len() - 1
    }

    /// Rank of the degree-s chain group.
    pub fn dims(&self) -> Vec<usize> {
        self.basis.iter().map(Vec::len).collect()
    }

    /// d_s: C_{s+1} -> C_s as an integer matrix (entries accumulate when
    /// several faces of one component coincide).
    pub fn boundary(&self, s: usize) -> &IntMatrix {
        &self.boundaries[s]
    }

    pub fn num_boundaries(&self) -> usize {
        self.boundaries.len()
    }

    /// H_a = ker d_{a-1} / im d_a over Z/n.
    ///
    /// The complex is free over Z, so the mod-n homology splits as
    /// H_a(C) tensor Z/n plus Tor(H_{a-1}(C), Z/n); both pieces are read off
    /// the Smith forms of the two differentials touching degree a.
    pub fn homology(&self, a: usize) -> Result<PresentedGroup> {
        if a > self.top_degree() {
            return Err(Error::DegreeOutOfRange(format!(
                "degree {a} exceeds the top degree {}",
                self.top_degree()
            )));
        }
        let (out_rank, out_torsion) = if a > 0 {
            boundary_snf_data(&self.boundaries[a - 1])
        } else {
            (0, Vec::new())
        };
        let (in_rank, in_torsion) = if a < self.boundaries.len() {
            boundary_snf_data(&self.boundaries[a])
        } else {
            (0, Vec::new())
        };
        let free = self.basis[a].len() - out_rank - in_rank;
        let mut orders = vec![0u64; free];
        orders.extend(in_torsion); // torsion of H_a tensor Z/n
        orders.extend(out_torsion); // Tor(H_{a-1}, Z/n)
        Ok(PresentedGroup::cyclic_sum(&orders, Some(self.n)))
    }
}

impl fmt::Display for NerveComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .basis
            .iter()
            .map(|layer| format!("(Z/{})^{}", self.n, layer.len()))
            .collect();
        write!(f, "{}", terms.join(" <- "))
    }
}

/// Rank and nonunit invariant factors of an integer matrix.
fn boundary_snf_data(m: &IntMatrix) -> (usize, Vec<u64>) {
    let snf = smith_normal_form(m);
    let torsion = snf
        .diagonal()
        .iter()
        .filter(|d| !d.is_zero() && !d.is_one())
        .map(|d| d.to_u64().expect("boundary invariant factor fits in u64"))
        .collect();
    (snf.rank(), torsion)
}

/// H_1 and H_2 of the nerve complex together with the exact sequence they
/// bound: H_2 covers the kernel and H_1 is the cokernel of the reciprocity
/// map from the class group to the abelianized fundamental group, mod n.
pub struct ObstructionReport {
    n: u64,
    h1: PresentedGroup,
    h2: PresentedGroup,
    statement: String,
}

pub fn obstruction_report(config: &SNCConfig, n: u64) -> Result<ObstructionReport> {
    let cx = build_nerve_complex(config, n)?;
    let h = |a: usize| -> PresentedGroup {
        if a <= cx.top_degree() {
            cx.homology(a).expect("degree is in range")
        } else {
            PresentedGroup::trivial(Some(n))
        }
    };
    let h1 = h(1);
    let h2 = h(2);
    let mut statement = format!(
        "{} -> C(X,D)/{n} -> pi1^ab(U)/{n} -> {} -> 0",
        render_factors(&h2),
        render_factors(&h1)
    );
    if h1.is_trivial() && h2.is_trivial() {
        statement.push_str(&format!(
            "; both obstruction groups vanish, so reciprocity mod {n} is an isomorphism"
        ));
    } else {
        statement.push_str(
            "; the left group covers the kernel of reciprocity, the right group is its cokernel",
        );
    }
    Ok(ObstructionReport { n, h1, h2, statement })
}

impl ObstructionReport {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn h1(&self) -> &PresentedGroup {
        &self.h1
    }

    pub fn h2(&self) -> &PresentedGroup {
        &self.h2
    }

    pub fn statement(&self) -> &str {
        &self.statement
    }
}

impl serde::Serialize for ObstructionReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let factors = |g: &PresentedGroup| {
            g.invariant_factors()
                .factors_u64()
                .expect("mod-n homology is finite")
        };
        let mut st = serializer.serialize_struct("ObstructionReport", 4)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("h1", &factors(&self.h1))?;
        st.serialize_field("h2", &factors(&self.h2))?;
        st.serialize_field("statement", &self.statement)?;
        st.end()
    }
}

fn render_factors(g: &PresentedGroup) -> String {
    let factors = g
        .invariant_factors()
        .factors_u64()
        .expect("mod-n homology is finite");
    if factors.is_empty() {
        "0".into()
    } else {
        factors
            .iter()
            .map(|d| format!("Z/{d}"))
            .collect::<Vec<_>>()
            .join(" x ")
    }
}

/// Independent homology of a curve-like configuration, bypassing the chain
/// complex entirely: H_0 = (Z/n)^{components of the incidence multigraph}
/// (union-find), H_1 = (Z/n)^{E - V + components} (cycle rank).
pub fn graph_homology_oracle(
    vertices: u32,
    edges: &[(u32, u32)],
    n: u64,
) -> Result<(Vec<u64>, Vec<u64>)> {
    if vertices == 0 {
        return Err(Error::InvalidJob("graph needs at least one vertex".into()));
    }
    let v = vertices as usize;
    let mut parent: Vec<usize> = (0..v).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in edges {
        if a == b || a < 1 || b < 1 || a > vertices || b > vertices {
            return Err(Error::InvalidJob(format!("edge ({a}, {b}) is not a valid pair")));
        }
        let (ra, rb) = (find(&mut parent, a as usize - 1), find(&mut parent, b as usize - 1));
        parent[ra] = rb;
    }
    let mut roots = std::collections::BTreeSet::new();
    for x in 0..v {
        let r = find(&mut parent, x);
        roots.insert(r);
    }
    let c = roots.len();
    let cycle_rank = edges.len() + c - v;
    Ok((vec![n; c], vec![n; cycle_rank]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn factors(g: &PresentedGroup) -> Vec<u64> {
        g.invariant_factors().factors_u64().unwrap()
    }

    #[test]
    fn single_component_is_a_point() {
        let config = SNCConfig::disjoint(1).unwrap();
        let cx = build_nerve_complex(&config, 5).unwrap();
        assert_eq!(cx.dims(), vec![1]);
        assert_eq!(cx.top_degree(), 0);
        assert_eq!(factors(&cx.homology(0).unwrap()), vec![5]);
        let err = cx.homology(1).unwrap_err();
        assert_eq!(err.code(), "DEGREE_OUT_OF_RANGE");

        let report = obstruction_report(&config, 5).unwrap();
        assert!(report.h1().is_trivial());
        assert!(report.h2().is_trivial());
        assert!(report.statement().contains("isomorphism"));
    }

    #[test]
    fn two_components_one_point_has_the_alternating_column() {
        let config =
            SNCConfig::new(2, vec![(vec![1, 2], 1)], Vec::new()).unwrap();
        let cx = build_nerve_complex(&config, 3).unwrap();
        assert_eq!(cx.dims(), vec![2, 1]);
        let d = cx.boundary(0);
        // omit the first index with sign +, the second with sign -
        let mut entries: Vec<i64> = (0..2)
            .map(|i| d.get(i, 0).to_i64().unwrap())
            .collect();
        entries.sort();
        assert_eq!(entries, vec![-1, 1]);
        assert_eq!(factors(&cx.homology(0).unwrap()), vec![3]);
        assert!(cx.homology(1).unwrap().is_trivial());
    }

    #[test]
    fn triangle_nerve_is_a_circle() {
        let config =
            SNCConfig::from_incidence_graph(3, &[(1, 2), (1, 3), (2, 3)]).unwrap();
        for n in [2u64, 3, 4] {
            let cx = build_nerve_complex(&config, n).unwrap();
            assert_eq!(cx.dims(), vec![3, 3]);
            assert_eq!(factors(&cx.homology(0).unwrap()), vec![n]);
            assert_eq!(factors(&cx.homology(1).unwrap()), vec![n]);
        }
        let report = obstruction_report(&config, 2).unwrap();
        assert_eq!(factors(report.h1()), vec![2]);
        assert!(report.h2().is_trivial());
        assert!(report.statement().contains("Z/2 -> 0"));
    }

    #[test]
    fn chain_of_three_is_contractible() {
        let config = SNCConfig::from_incidence_graph(3, &[(1, 2), (2, 3)]).unwrap();
        let cx = build_nerve_complex(&config, 4).unwrap();
        assert_eq!(factors(&cx.homology(0).unwrap()), vec![4]);
        assert!(cx.homology(1).unwrap().is_trivial());
        let (h0, h1) = graph_homology_oracle(3, &[(1, 2), (2, 3)], 4).unwrap();
        assert_eq!(h0, vec![4]);
        assert!(h1.is_empty());
    }

    #[test]
    fn hollow_tetrahedron_is_a_sphere() {
        let pairs: Vec<(Vec<u32>, usize)> = vec![
            (vec![1, 2], 1),
            (vec![1, 3], 1),
            (vec![1, 4], 1),
            (vec![2, 3], 1),
            (vec![2, 4], 1),
            (vec![3, 4], 1),
        ];
        let triples: Vec<(Vec<u32>, usize)> = vec![
            (vec![1, 2, 3], 1),
            (vec![1, 2, 4], 1),
            (vec![1, 3, 4], 1),
            (vec![2, 3, 4], 1),
        ];
        let config = SNCConfig::new(
            4,
            pairs.into_iter().chain(triples).collect(),
            Vec::new(),
        )
        .unwrap();
        let cx = build_nerve_complex(&config, 6).unwrap();
        assert_eq!(cx.dims(), vec![4, 6, 4]);
        assert!(cx.boundary(0).mul(cx.boundary(1)).is_zero());
        assert_eq!(factors(&cx.homology(0).unwrap()), vec![6]);
        assert!(cx.homology(1).unwrap().is_trivial());
        assert_eq!(factors(&cx.homology(2).unwrap()), vec![6]);
    }

    #[test]
    fn triple_point_cone_is_contractible() {
        let config = SNCConfig::new(
            3,
            vec![
                (vec![1, 2], 1),
                (vec![1, 3], 1),
                (vec![2, 3], 1),
                (vec![1, 2, 3], 1),
            ],
            Vec::new(),
        )
        .unwrap();
        let cx = build_nerve_complex(&config, 3).unwrap();
        assert_eq!(cx.dims(), vec![3, 3, 1]);
        assert_eq!(factors(&cx.homology(0).unwrap()), vec![3]);
        assert!(cx.homology(1).unwrap().is_trivial());
        assert!(cx.homology(2).unwrap().is_trivial());
        let report = obstruction_report(&config, 3).unwrap();
        assert!(report.h1().is_trivial() && report.h2().is_trivial());
    }

    #[test]
    fn face_resolution_rejects_gaps_and_bad_maps() {
        // components meet pairwise in one point each but the triple face
        // into a two-point pair is ambiguous
        let ambiguous = SNCConfig::new(
            3,
            vec![
                (vec![1, 2], 2),
                (vec![1, 3], 1),
                (vec![2, 3], 1),
                (vec![1, 2, 3], 1),
            ],
            Vec::new(),
        );
        assert_eq!(ambiguous.unwrap_err().code(), "FACE_MAP_INCOMPATIBLE");

        // a triple intersection whose pair face is empty
        let gap = SNCConfig::new(
            3,
            vec![(vec![1, 2], 1), (vec![1, 2, 3], 1)],
            Vec::new(),
        );
        assert_eq!(gap.unwrap_err().code(), "FACE_MAP_INCOMPATIBLE");

        // explicit map out of range
        let bad = SNCConfig::new(
            2,
            vec![(vec![1, 2], 1)],
            vec![(vec![1, 2], 1, vec![3])],
        );
        assert_eq!(bad.unwrap_err().code(), "FACE_MAP_INCOMPATIBLE");

        // face data on an empty subset
        let empty = SNCConfig::new(2, Vec::new(), vec![(vec![1, 2], 1, vec![0])]);
        assert_eq!(empty.unwrap_err().code(), "FACE_MAP_INCOMPATIBLE");
    }

    #[test]
    fn simplicial_identity_is_checked_on_deep_subsets() {
        // two routes from the 4-fold point into the two-point pair {1,2}
        // disagree: omit 3 then 4 lands in point 0, omit 4 then 3 in point 1
        let mut intersections: Vec<(Vec<u32>, usize)> = vec![(vec![1, 2], 2)];
        for pair in [vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]] {
            intersections.push((pair, 1));
        }
        for triple in [vec![1, 2, 3], vec![1, 2, 4], vec![1, 3, 4], vec![2, 3, 4]] {
            intersections.push((triple, 1));
        }
        intersections.push((vec![1, 2, 3, 4], 1));
        let faces = vec![
            (vec![1, 2, 3], 3, vec![0]),
            (vec![1, 2, 4], 3, vec![1]),
        ];
        let err = SNCConfig::new(4, intersections, faces).unwrap_err();
        assert_eq!(err.code(), "FACE_MAP_INCOMPATIBLE");
        assert!(err.to_string().contains("disagree"));
    }

    #[test]
    fn euler_characteristic_matches_rank_counts_for_prime_n() {
        let configs = vec![
            SNCConfig::disjoint(3).unwrap(),
            SNCConfig::from_incidence_graph(3, &[(1, 2), (1, 3), (2, 3)]).unwrap(),
            SNCConfig::from_incidence_graph(4, &[(1, 2), (2, 3), (3, 4), (1, 4), (1, 3)]).unwrap(),
            SNCConfig::new(
                3,
                vec![
                    (vec![1, 2], 1),
                    (vec![1, 3], 1),
                    (vec![2, 3], 1),
                    (vec![1, 2, 3], 1),
                ],
                Vec::new(),
            )
            .unwrap(),
        ];
        for config in &configs {
            for n in [2u64, 3, 5] {
                let cx = build_nerve_complex(config, n).unwrap();
                let chain: i64 = cx
                    .dims()
                    .iter()
                    .enumerate()
                    .map(|(s, &d)| if s % 2 == 0 { d as i64 } else { -(d as i64) })
                    .sum();
                let homology: i64 = (0..=cx.top_degree())
                    .map(|a| {
                        let count = factors(&cx.homology(a).unwrap()).len() as i64;
                        if a % 2 == 0 {
                            count
                        } else {
                            -count
                        }
                    })
                    .sum();
                assert_eq!(chain, homology);
            }
        }
    }

    #[test]
    fn random_incidence_graphs_match_the_union_find_oracle() {
        let mut rng = SplitMix64::new(0x6b8f_2d41_9c3e_7a50);
        for trial in 0..12 {
            let vertices = 2 + (rng.next_u64() % 4) as u32;
            let mut edges = Vec::new();
            for a in 1..=vertices {
                for b in (a + 1)..=vertices {
                    match rng.next_u64() % 4 {
                        2 => edges.push((a, b)),
                        3 => {
                            edges.push((a, b));
                            edges.push((a, b));
                        }
                        _ => {}
                    }
                }
            }
            let n = 2 + rng.next_u64() % 5;
            let config = SNCConfig::from_incidence_graph(vertices, &edges).unwrap();
            let cx = build_nerve_complex(&config, n).unwrap();
            let (oracle_h0, oracle_h1) = graph_homology_oracle(vertices, &edges, n).unwrap();
            assert_eq!(
                factors(&cx.homology(0).unwrap()),
                oracle_h0,
                "H_0 mismatch on trial {trial}"
            );
            let h1 = if cx.top_degree() >= 1 {
                factors(&cx.homology(1).unwrap())
            } else {
                Vec::new()
            };
            assert_eq!(h1, oracle_h1, "H_1 mismatch on trial {trial}");
        }
    }

    #[test]
    fn config_json_roundtrips() {
        let text = r#"{
            "components": 3,
            "intersections": [
                {"subset": [1, 2], "pi0": 1},
                {"subset": [1, 3], "pi0": 1},
                {"subset": [2, 3], "pi0": 1}
            ]
        }"#;
        let config = SNCConfig::from_json(text).unwrap();
        assert_eq!(config.components(), 3);
        assert_eq!(config.pi0_of(&[1, 2]), 1);
        assert_eq!(config.pi0_of(&[1, 2, 3]), 0);
        let echoed = SNCConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(config, echoed);

        assert_eq!(
            SNCConfig::from_json("{\"components\": 0}").unwrap_err().code(),
            "INVALID_JOB"
        );
        assert_eq!(SNCConfig::from_json("nonsense").unwrap_err().code(), "INVALID_JOB");

        // explicit faces survive the round trip
        let with_faces = SNCConfig::new(
            3,
            vec![
                (vec![1, 2], 2),
                (vec![1, 3], 1),
                (vec![2, 3], 1),
                (vec![1, 2, 3], 1),
            ],
            vec![(vec![1, 2, 3], 3, vec![1])],
        )
        .unwrap();
        let echoed = SNCConfig::from_json(&with_faces.to_json()).unwrap();
        assert_eq!(with_faces, echoed);
    }

    #[test]
    fn parallel_edges_add_cycle_rank() {
        // two components meeting in three points: wedge of two circles
        let config = SNCConfig::from_incidence_graph(2, &[(1, 2), (1, 2), (1, 2)]).unwrap();
        let cx = build_nerve_complex(&config, 4).unwrap();
        assert_eq!(cx.dims(), vec![2, 3]);
        assert_eq!(factors(&cx.homology(0).unwrap()), vec![4]);
        assert_eq!(factors(&cx.homology(1).unwrap()), vec![4, 4]);
    }
}
