//! Job dispatch and deterministic reporting: every command the CLI or the
//! Python bindings expose runs through [`run`], which returns a [`RunReport`]
//! whose JSON form is byte-identical across repeated runs of the same job
//! (timing excluded). Reports double as the golden regression store: a
//! golden directory holds canonical report files which [`regression_suite`]
//! replays and diffs.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::abgroup::{smith_normal_form, IntMatrix, PresentedGroup};
use crate::chains::DivisorData;
use crate::error::{Error, Result};
use crate::fields::{parse_poly2, BiLaurentElement, BiVar, FqSpec, PolyFq, PolyFq2};
use crate::ideles::{
    class_group, local_surface_reciprocity_check, ray_class_oracle, weil_reciprocity_check,
    ClassGroupJob, RationalFn,
};
use crate::katocx::{build_nerve_complex, obstruction_report, SNCConfig};
use crate::milnor::{km_mod_n, FieldRef};
use crate::rng::SplitMix64;

/// One fully specified unit of work. The `command` tag selects the owning
/// module; every randomized suite carries its seed, so a job determines its
/// report.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum JobSpec {
    /// K^M_r(F)/n for F one of F_q, F_q((t)), F_q((s))((t)).
    Kgroup { field: String, r: usize, n: u64 },
    /// C(X, D)/n through the idele pipeline, with certificate.
    Classgroup {
        #[serde(flatten)]
        job: ClassGroupJob,
    },
    /// Brute-force ray class group of P^1 over F_q.
    Oracle { q: u64, divisor: String, n: u64 },
    /// Seeded property suite.
    Verify {
        suite: VerifySuite,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<u64>,
        trials: u32,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        degree: Option<u32>,
    },
    /// Homology of a nerve complex, plus the obstruction pair (H_1, H_2).
    KatoHomology {
        config: Value,
        n: u64,
        degrees: Vec<usize>,
    },
    /// Replay a golden directory and diff byte-wise.
    Report { golden: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifySuite {
    Weil,
    LocalSurface,
    Snf,
}

impl VerifySuite {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerifySuite::Weil => "weil",
            VerifySuite::LocalSurface => "local-surface",
            VerifySuite::Snf => "snf",
        }
    }
}

/// Outcome of one job: the input echo, the command result, any certificates,
/// and the anchor identifiers naming the statements the computation relies
/// on. `canonical_json` is the byte-stable form used for golden comparison.
#[derive(Clone, Debug)]
pub struct RunReport {
    command: String,
    input: Value,
    result: Value,
    certificates: Value,
    anchors: Vec<&'static str>,
    timing_ms: u128,
}

impl RunReport {
    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn result(&self) -> &Value {
        &self.result
    }

    pub fn certificates(&self) -> &Value {
        &self.certificates
    }

    pub fn anchors(&self) -> &[&'static str] {
        &self.anchors
    }

    pub fn timing_ms(&self) -> u128 {
        self.timing_ms
    }

    fn value(&self, with_timing: bool) -> Value {
        let mut obj = json!({
            "schema": 1,
            "command": self.command,
            "input": self.input,
            "result": self.result,
            "certificates": self.certificates,
            "anchors": self.anchors,
        });
        if with_timing {
            obj["timing_ms"] = json!(self.timing_ms);
        }
        obj
    }

    /// Full report including wall-clock timing.
    pub fn to_json(&self) -> String {
        self.value(true).to_string()
    }

    /// Timing-free form: identical bytes for identical jobs.
    pub fn canonical_json(&self) -> String {
        self.value(false).to_string()
    }

    /// Short human-readable rendering.
    pub fn markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n\n", self.command));
        out.push_str(&format!("- input: `{}`\n", self.input));
        out.push_str(&format!("- result: `{}`\n", self.result));
        if !self.certificates.is_null() {
            out.push_str(&format!("- certificates: `{}`\n", self.certificates));
        }
        out.push_str(&format!("- anchors: {}\n", self.anchors.join(", ")));
        out.push_str(&format!("- timing: {} ms\n", self.timing_ms));
        out
    }
}

fn group_factors(g: &PresentedGroup) -> Vec<u64> {
    g.invariant_factors()
        .factors_u64()
        .expect("mod-n groups are finite")
}

/// Dispatch a job to its owning module.
pub fn run(job: &JobSpec) -> Result<RunReport> {
    let start = Instant::now();
    let input = serde_json::to_value(job).expect("job specs serialize");
    let (result, certificates, anchors) = match job {
        JobSpec::Kgroup { field, r, n } => {
            let field = FieldRef::parse(field)?;
            let km = km_mod_n(&field, *r, *n)?;
            let generators: Vec<String> = km.generators().iter().map(|s| s.tagged()).collect();
            (
                json!({
                    "field": field.to_string(),
                    "factors": group_factors(km.group()),
                    "generators": generators,
                    "method": km.method().as_str(),
                }),
                Value::Null,
                vec!["milnor-k-presentation", "steinberg-relations", "tame-split"],
            )
        }
        JobSpec::Classgroup { job } => {
            let result = class_group(job)?;
            let generators: Vec<String> = result
                .surviving_slots()
                .iter()
                .map(|s| s.label())
                .collect();
            (
                json!({
                    "factors": result.factors(),
                    "generators": generators,
                }),
                serde_json::to_value(result.certificate()).expect("certificates serialize"),
                vec![
                    "idele-class-group",
                    "modulus-filtration",
                    "tame-symbol",
                    "stabilization-certificate",
                ],
            )
        }
        JobSpec::Oracle { q, divisor, n } => {
            let spec = FqSpec::from_order(*q)?;
            let model = crate::chains::SchemeModel::curve(&spec);
            let divisor = DivisorData::parse(&model, divisor)?;
            let group = ray_class_oracle(&divisor, *n)?;
            (
                json!({ "factors": group_factors(&group) }),
                Value::Null,
                vec!["ray-class-units", "divisor-degree-splitting"],
            )
        }
        JobSpec::Verify {
            suite,
            q,
            trials,
            seed,
            degree,
        } => run_verify(*suite, *q, *trials, *seed, *degree)?,
        JobSpec::KatoHomology { config, n, degrees } => {
            let config = SNCConfig::from_json(&config.to_string())?;
            let cx = build_nerve_complex(&config, *n)?;
            let mut wanted: Vec<usize> = degrees.clone();
            wanted.sort_unstable();
            wanted.dedup();
            let homology: Vec<Value> = wanted
                .iter()
                .map(|&a| -> Result<Value> {
                    // the complex is zero beyond its top degree
                    let factors = if a <= cx.top_degree() {
                        group_factors(&cx.homology(a)?)
                    } else {
                        Vec::new()
                    };
                    Ok(json!({ "degree": a, "factors": factors }))
                })
                .collect::<Result<Vec<_>>>()?;
            let report = obstruction_report(&config, *n)?;
            (
                json!({
                    "dims": cx.dims(),
                    "homology": homology,
                    "obstruction": report,
                }),
                json!({ "dd_zero": true }),
                vec![
                    "nerve-complex",
                    "face-compatibility",
                    "reciprocity-obstruction-sequence",
                ],
            )
        }
        JobSpec::Report { golden } => {
            let summary = regression_suite(Path::new(golden))?;
            (
                serde_json::to_value(&summary).expect("summaries serialize"),
                Value::Null,
                vec!["golden-regression"],
            )
        }
    };
    Ok(RunReport {
        command: command_name(job).to_string(),
        input,
        result,
        certificates,
        anchors,
        timing_ms: start.elapsed().as_millis(),
    })
}

fn command_name(job: &JobSpec) -> &'static str {
    match job {
        JobSpec::Kgroup { .. } => "kgroup",
        JobSpec::Classgroup { .. } => "classgroup",
        JobSpec::Oracle { .. } => "oracle",
        JobSpec::Verify { .. } => "verify",
        JobSpec::KatoHomology { .. } => "kato-homology",
        JobSpec::Report { .. } => "report",
    }
}

fn run_verify(
    suite: VerifySuite,
    q: Option<u64>,
    trials: u32,
    seed: u64,
    degree: Option<u32>,
) -> Result<(Value, Value, Vec<&'static str>)> {
    let failures = match suite {
        VerifySuite::Weil => {
            let q = q.ok_or_else(|| Error::InvalidJob("verify weil needs --q".into()))?;
            weil_suite(q, trials, seed, degree.unwrap_or(4))?
        }
        VerifySuite::LocalSurface => {
            let q = q.ok_or_else(|| Error::InvalidJob("verify local-surface needs --q".into()))?;
            local_surface_suite(q, trials, seed)?
        }
        VerifySuite::Snf => snf_suite(trials, seed),
    };
    let anchors = match suite {
        VerifySuite::Weil => vec!["weil-reciprocity", "tame-symbol", "place-norm"],
        VerifySuite::LocalSurface => vec!["two-dimensional-reciprocity", "residue-symbol"],
        VerifySuite::Snf => vec!["smith-normal-form-certificate"],
    };
    Ok((
        json!({
            "suite": suite.as_str(),
            "trials": trials,
            "all_passed": failures.is_empty(),
            "failures": failures,
        }),
        Value::Null,
        anchors,
    ))
}

fn random_poly(spec: &FqSpec, rng: &mut SplitMix64, max_deg: u32) -> PolyFq {
    let q = spec.q() as u64;
    loop {
        let deg = (rng.next_u64() % (max_deg as u64 + 1)) as usize;
        let reps: Vec<u32> = (0..=deg).map(|_| (rng.next_u64() % q) as u32).collect();
        let poly = PolyFq::from_reps(spec, reps);
        if !poly.is_zero() {
            return poly;
        }
    }
}

/// prod_v Norm(tame_v{f, g}) = 1 on random rational function pairs.
fn weil_suite(q: u64, trials: u32, seed: u64, max_deg: u32) -> Result<Vec<String>> {
    let spec = FqSpec::from_order(q)?;
    let mut rng = SplitMix64::new(seed);
    let mut failures = Vec::new();
    for trial in 0..trials {
        let f = RationalFn::new(
            random_poly(&spec, &mut rng, max_deg),
            random_poly(&spec, &mut rng, max_deg),
        )?;
        let g = RationalFn::new(
            random_poly(&spec, &mut rng, max_deg),
            random_poly(&spec, &mut rng, max_deg),
        )?;
        if !weil_reciprocity_check(&f, &g)? {
            failures.push(format!("trial {trial}: f = {f}, g = {g}"));
        }
    }
    Ok(failures)
}

fn random_monomial_unit(spec: &FqSpec, rng: &mut SplitMix64) -> Result<BiLaurentElement> {
    let q = spec.q() as u64;
    let a = (rng.next_u64() % 5) as i64 - 2;
    let b = (rng.next_u64() % 5) as i64 - 2;
    let c00 = 1 + rng.next_u64() % (q - 1);
    let c10 = rng.next_u64() % q;
    let c01 = rng.next_u64() % q;
    let c11 = rng.next_u64() % q;
    let unit = parse_poly2(spec, &format!("{c00} + {c10}*s + {c01}*t + {c11}*s*t"))?;
    let elem = BiLaurentElement::from_rational(unit, PolyFq2::one(spec))?;
    Ok(elem
        .mul(&BiLaurentElement::var(spec, BiVar::S).pow(a))
        .mul(&BiLaurentElement::var(spec, BiVar::T).pow(b)))
}

/// ord of the residue along t plus ord along s vanishes on random
/// monomial-times-unit pairs.
fn local_surface_suite(q: u64, trials: u32, seed: u64) -> Result<Vec<String>> {
    let spec = FqSpec::from_order(q)?;
    let mut rng = SplitMix64::new(seed);
    let mut failures = Vec::new();
    for trial in 0..trials {
        let x = random_monomial_unit(&spec, &mut rng)?;
        let y = random_monomial_unit(&spec, &mut rng)?;
        if !local_surface_reciprocity_check(&x, &y)? {
            failures.push(format!("trial {trial}: x = {x}, y = {y}"));
        }
    }
    Ok(failures)
}

/// U.M.V = S, unimodular transforms, non-negative divisibility chain.
fn snf_suite(trials: u32, seed: u64) -> Vec<String> {
    let mut rng = SplitMix64::new(seed);
    let mut failures = Vec::new();
    for trial in 0..trials {
        let rows = 1 + (rng.next_u64() % 6) as usize;
        let cols = 1 + (rng.next_u64() % 6) as usize;
        let entries: Vec<Vec<i64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| (rng.next_u64() % 41) as i64 - 20)
                    .collect()
            })
            .collect();
        let m = IntMatrix::from_rows(&entries);
        let snf = smith_normal_form(&m);
        if snf.u.mul(&m).mul(&snf.v) != snf.s {
            failures.push(format!("trial {trial}: U.M.V differs from S"));
            continue;
        }
        if !snf.u.is_unimodular() || !snf.v.is_unimodular() {
            failures.push(format!("trial {trial}: transform not unimodular"));
            continue;
        }
        let diag = snf.diagonal();
        for i in 0..diag.len() {
            if diag[i].sign() == num_bigint::Sign::Minus {
                failures.push(format!("trial {trial}: negative invariant factor"));
                break;
            }
            if i + 1 < diag.len() {
                use num_traits::Zero;
                let ok = if diag[i].is_zero() {
                    diag[i + 1].is_zero()
                } else {
                    (&diag[i + 1] % &diag[i]).is_zero()
                };
                if !ok {
                    failures.push(format!("trial {trial}: divisibility chain broken"));
                    break;
                }
            }
        }
    }
    failures
}

/// Replay summary of a golden directory.
#[derive(Clone, Debug, Serialize)]
pub struct GoldenSummary {
    pub total: usize,
    pub passed: usize,
    pub mismatches: Vec<String>,
}

/// Run several jobs back to back, stopping at the first error.
pub fn run_jobs(jobs: &[JobSpec]) -> Result<Vec<RunReport>> {
    jobs.iter().map(run).collect()
}

/// Parse a batch job file: a JSON array of job objects.
pub fn parse_jobs(text: &str) -> Result<Vec<JobSpec>> {
    serde_json::from_str(text).map_err(|e| Error::InvalidJob(format!("job file: {e}")))
}

fn golden_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::InvalidJob(format!(
            "golden directory {} does not exist",
            dir.display()
        )));
    }
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::InvalidJob(format!("golden directory: {e}")))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    Ok(entries)
}

/// Replay every stored job and compare the canonical report bytes. The
/// result lists diverging top-level keys per mismatching file; any mismatch
/// is an error so that replay failures cannot pass silently.
pub fn regression_suite(dir: &Path) -> Result<GoldenSummary> {
    let entries = golden_entries(dir)?;
    let mut mismatches = Vec::new();
    let mut passed = 0usize;
    for path in &entries {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let stored = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidJob(format!("{name}: {e}")))?;
        match replay_entry(&stored) {
            Ok(None) => passed += 1,
            Ok(Some(diff)) => mismatches.push(format!("{name}: {diff}")),
            Err(e) => mismatches.push(format!("{name}: {e}")),
        }
    }
    if !mismatches.is_empty() {
        return Err(Error::GoldenMismatch(mismatches.join("; ")));
    }
    Ok(GoldenSummary {
        total: entries.len(),
        passed,
        mismatches,
    })
}

/// None when the stored bytes replay exactly; otherwise the diverging keys.
fn replay_entry(stored: &str) -> Result<Option<String>> {
    let stored_value: Value = serde_json::from_str(stored)
        .map_err(|e| Error::GoldenMismatch(format!("unreadable entry: {e}")))?;
    let job: JobSpec = serde_json::from_value(
        stored_value
            .get("input")
            .cloned()
            .ok_or_else(|| Error::GoldenMismatch("entry has no input echo".into()))?,
    )
    .map_err(|e| Error::GoldenMismatch(format!("input echo does not parse: {e}")))?;
    let fresh = run(&job)?.canonical_json();
    if fresh == stored {
        return Ok(None);
    }
    let fresh_value: Value = serde_json::from_str(&fresh).expect("reports serialize");
    let mut keys: Vec<&str> = Vec::new();
    if let (Value::Object(a), Value::Object(b)) = (&stored_value, &fresh_value) {
        for key in a.keys().chain(b.keys()) {
            if a.get(key.as_str()) != b.get(key.as_str()) && !keys.contains(&key.as_str()) {
                keys.push(key);
            }
        }
    }
    if keys.is_empty() {
        // same JSON value, different bytes (whitespace or key order)
        return Ok(Some("formatting differs from canonical form".into()));
    }
    Ok(Some(format!("diverging keys: {}", keys.join(", "))))
}

/// Run the jobs and store their canonical reports as the new golden tables.
/// File names are derived from the command and position so that reruns
/// overwrite deterministically. Returns the written file names.
pub fn write_golden(dir: &Path, jobs: &[JobSpec]) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::InvalidJob(format!("golden directory: {e}")))?;
    let mut written = Vec::with_capacity(jobs.len());
    for (i, job) in jobs.iter().enumerate() {
        let report = run(job)?;
        let name = format!("{:03}-{}.json", i, report.command());
        std::fs::write(dir.join(&name), report.canonical_json())
            .map_err(|e| Error::InvalidJob(format!("{name}: {e}")))?;
        written.push(name);
    }
    Ok(written)
}
