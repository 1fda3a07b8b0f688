//! Check reports and the sampled "bounded up to a constant" test shared by all checkers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Identifier of the inequality or property a report is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    OmegaMonotone,
    HolderSeminorm,
    DiagonalEllipticity,
    Subordinate,
    SubordinateQuadraticForm,
    SubordinateEntrywise,
    StrongRegularity,
    DiagDerivative,
    DiagHolder,
    OffDiagInner,
    OffDiagInnerHolder,
    OffDiagOuter,
    OffDiagOuterHolder,
    ScalarSosHypothesis,
    Quasiconformal,
    ResidualReferenceComparable,
    TailDiagonalComparable,
    PeelComparable,
    PivotSosContract,
    Reconstruction,
    SquareAssembly,
    ResidualSubordinate,
    DecompositionPipeline,
    QLambdaPositivity,
    QLambdaNonSos,
    FailureCondition,
    DeltaNu,
    BlockComparability,
}

impl Condition {
    pub fn id(&self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Every sample had both sides flat-zero.
    InconclusiveByFlatness,
    Inconclusive,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub evaluated: usize,
    /// 0/0 samples and samples dropped by flatness.
    pub excluded: usize,
    /// Samples evaluated but marked (e.g. outside a clamped range).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub flagged: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl Counts {
    pub fn add(&mut self, o: &Counts) {
        self.evaluated += o.evaluated;
        self.excluded += o.excluded;
        self.flagged += o.flagged;
    }
}

/// Serialization of possibly non-finite floats: numbers stay numbers,
/// infinities and NaN become the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod float_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Str("nan".into())
        } else if v > 0.0 {
            Repr::Str("inf".into())
        } else {
            Repr::Str("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::custom(format!("invalid float string {s:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.map(to_repr).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            match Option::<Repr>::deserialize(d)? {
                None => Ok(None),
                Some(r) => from_repr(r).map(Some),
            }
        }
    }
}

/// Verdict of one sampled check, with its worst case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub condition: Condition,
    pub verdict: Verdict,
    #[serde(with = "float_repr::option")]
    pub worst_ratio: Option<f64>,
    pub witness: Option<Vec<f64>>,
    #[serde(with = "float_repr::option")]
    pub constant: Option<f64>,
    pub params: BTreeMap<String, f64>,
    pub counts: Counts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<CheckReport>,
}

impl CheckReport {
    pub fn new(condition: Condition, verdict: Verdict) -> CheckReport {
        CheckReport {
            condition,
            verdict,
            worst_ratio: None,
            witness: None,
            constant: None,
            params: BTreeMap::new(),
            counts: Counts::default(),
            label: None,
            details: BTreeMap::new(),
            notes: Vec::new(),
            parts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn param(mut self, name: &str, v: f64) -> CheckReport {
        self.params.insert(name.to_string(), v);
        self
    }

    pub fn detail(mut self, name: &str, v: impl Serialize) -> CheckReport {
        self.details.insert(name.to_string(), serde_json::to_value(v).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> CheckReport {
        self.notes.push(s.into());
        self
    }

    /// First part (depth-first) with the given condition.
    pub fn find(&self, c: Condition) -> Option<&CheckReport> {
        if self.condition == c {
            return Some(self);
        }
        self.parts.iter().find_map(|p| p.find(c))
    }

    /// Combine parts: fail if any part fails, pass if all pass or are
    /// flat-inconclusive with at least one pass.
    pub fn combine(condition: Condition, parts: Vec<CheckReport>) -> CheckReport {
        let mut r = CheckReport::new(condition, Verdict::Pass);
        let any_fail = parts.iter().any(|p| p.verdict == Verdict::Fail);
        let any_pass = parts.iter().any(|p| p.verdict == Verdict::Pass);
        let any_inconclusive = parts.iter().any(|p| p.verdict == Verdict::Inconclusive);
        r.verdict = if any_fail {
            Verdict::Fail
        } else if any_inconclusive {
            Verdict::Inconclusive
        } else if any_pass || parts.is_empty() {
            Verdict::Pass
        } else {
            Verdict::InconclusiveByFlatness
        };
        for p in &parts {
            r.counts.add(&p.counts);
        }
        // the worst case is taken among failing parts when there are any
        let pool: Vec<&CheckReport> = if any_fail {
            parts.iter().filter(|p| p.verdict == Verdict::Fail).collect()
        } else {
            parts.iter().collect()
        };
        let worst = pool
            .iter()
            .filter_map(|p| p.worst_ratio.map(|w| (w, p.witness.clone())))
            .fold(None::<(f64, Option<Vec<f64>>)>, |acc, (w, x)| match acc {
                Some((a, _)) if a >= w => acc,
                _ => Some((w, x)),
            });
        if let Some((w, x)) = worst {
            r.worst_ratio = Some(w);
            r.witness = x;
            r.constant = Some(w);
        }
        r.parts = parts;
        r
    }
}

/// Parameters of the sampled "lhs ≲ rhs" test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRule {
    /// Largest acceptable sup ratio.
    pub c_max: f64,
    /// Largest acceptable growth exponent of the shell maxima toward the origin.
    pub slope_tol: f64,
    /// Growth only counts when the innermost shell holds at least this
    /// fraction of the global sup.
    pub inner_share: f64,
}

impl Default for BoundRule {
    fn default() -> Self {
        BoundRule { c_max: 1e6, slope_tol: 0.05, inner_share: 0.5 }
    }
}

/// Accumulates ratios `lhs/rhs` with the radial position of each sample.
#[derive(Clone, Debug, Default)]
pub struct RatioSweep {
    entries: Vec<(f64, f64, Vec<f64>)>,
    pub excluded: usize,
    pub flagged: usize,
}

/// Summary of a finished sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub verdict: Verdict,
    pub worst: Option<f64>,
    pub witness: Option<Vec<f64>>,
    /// Growth exponent over the three innermost dyadic shells (positive means
    /// the ratio grows toward the origin).
    pub growth: Option<f64>,
    pub growth_flagged: bool,
    pub evaluated: usize,
    pub excluded: usize,
}

impl RatioSweep {
    pub fn new() -> RatioSweep {
        RatioSweep::default()
    }

    /// Record `lhs / rhs`; both-zero samples are excluded, `lhs > 0 = rhs` is infinite.
    pub fn push(&mut self, radius: f64, point: &[f64], lhs: f64, rhs: f64) {
        let lhs = lhs.abs();
        if lhs == 0.0 && rhs == 0.0 {
            self.excluded += 1;
            return;
        }
        let ratio = if rhs == 0.0 { f64::INFINITY } else { lhs / rhs };
        self.push_ratio(radius, point, ratio);
    }

    pub fn push_ratio(&mut self, radius: f64, point: &[f64], ratio: f64) {
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        self.entries.push((radius, ratio, point.to_vec()));
    }

    pub fn exclude(&mut self) {
        self.excluded += 1;
    }

    pub fn merge(&mut self, other: RatioSweep) {
        self.entries.extend(other.entries);
        self.excluded += other.excluded;
        self.flagged += other.flagged;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max(&self) -> Option<(f64, &[f64])> {
        let mut best: Option<(f64, &[f64])> = None;
        for (_, r, p) in &self.entries {
            if best.map_or(true, |(b, _)| *r > b) {
                best = Some((*r, p));
            }
        }
        best
    }

    /// Per dyadic shell `[2^j, 2^(j+1))`: (lower edge, max ratio), innermost first.
    pub fn shell_maxima(&self) -> Vec<(f64, f64)> {
        let mut shells: BTreeMap<i64, f64> = BTreeMap::new();
        for (rad, ratio, _) in &self.entries {
            if *rad <= 0.0 || !ratio.is_finite() {
                continue;
            }
            let j = rad.log2().floor() as i64;
            let m = shells.entry(j).or_insert(0.0);
            *m = m.max(*ratio);
        }
        shells.into_iter().map(|(j, m)| (2f64.powi(j as i32), m)).collect()
    }

    pub fn finish(&self, rule: &BoundRule) -> SweepOutcome {
        let evaluated = self.entries.len();
        if evaluated == 0 {
            return SweepOutcome {
                verdict: if self.excluded > 0 { Verdict::InconclusiveByFlatness } else { Verdict::Pass },
                worst: None,
                witness: None,
                growth: None,
                growth_flagged: false,
                evaluated,
                excluded: self.excluded,
            };
        }
        let (worst, witness) = self.max().map(|(w, p)| (w, p.to_vec())).unwrap();
        let shells: Vec<(f64, f64)> = self.shell_maxima().into_iter().filter(|(_, m)| *m > 0.0).collect();
        let mut growth = None;
        let mut growth_flagged = false;
        if shells.len() >= 3 && worst.is_finite() && worst > 0.0 {
            let inner = &shells[..3];
            let xs: Vec<f64> = inner.iter().map(|(r, _)| (r * std::f64::consts::SQRT_2).ln()).collect();
            let ys: Vec<f64> = inner.iter().map(|(_, m)| m.ln()).collect();
            let mx = xs.iter().sum::<f64>() / 3.0;
            let my = ys.iter().sum::<f64>() / 3.0;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let g = -sxy / sxx;
            growth = Some(g);
            growth_flagged = g > rule.slope_tol && inner[0].1 >= rule.inner_share * worst;
        }
        let verdict = if !(worst <= rule.c_max) || growth_flagged { Verdict::Fail } else { Verdict::Pass };
        SweepOutcome {
            verdict,
            worst: Some(worst),
            witness: Some(witness),
            growth,
            growth_flagged,
            evaluated,
            excluded: self.excluded,
        }
    }

    /// Report for `condition` built from this sweep.
    pub fn report(&self, condition: Condition, rule: &BoundRule) -> CheckReport {
        let o = self.finish(rule);
        let mut r = CheckReport::new(condition, o.verdict);
        r.worst_ratio = o.worst;
        r.constant = o.worst;
        r.witness = o.witness;
        r.counts = Counts { evaluated: o.evaluated, excluded: o.excluded, flagged: self.flagged };
        if let Some(g) = o.growth {
            r = r.detail("growth_exponent", g);
        }
        if o.growth_flagged {
            r = r.note("ratio grows toward the origin across the innermost dyadic shells");
        }
        r
    }
}
