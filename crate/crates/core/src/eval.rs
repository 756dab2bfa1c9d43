//! Batch evaluation of ordering policies with per-instance rows, summaries,
//! node reductions against a reference policy and paired t-tests.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::csp::ConstraintNetwork;
use crate::heuristics::{DomDdeg, Impact, MinDom, RandomPolicy};
use crate::nn::{DrlPolicy, HybridPolicy, NetParams, Scalar};
use crate::search::{solve, OrderingPolicy, Outcome, SearchLimits};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unknown policy `{0}` (expected mindom, domddeg, impact, random, drl or drl-k<K>)")]
    UnknownPolicy(String),
    #[error("policy `{0}` needs a checkpoint")]
    MissingCheckpoint(String),
    #[error("reference policy `{0}` is not among the evaluated policies")]
    MissingReference(String),
    #[error("t-test needs two samples of equal length >= 2, got {0} and {1}")]
    TTestInput(usize, usize),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("csv line {0}: {1}")]
    Csv(usize, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicySpec {
    MinDom,
    DomDdeg,
    Impact,
    Random,
    Drl,
    /// Network above depth `k`, Dom/Ddeg below.
    DrlK(usize),
}

impl PolicySpec {
    pub fn name(&self) -> String {
        match self {
            PolicySpec::MinDom => "mindom".into(),
            PolicySpec::DomDdeg => "domddeg".into(),
            PolicySpec::Impact => "impact".into(),
            PolicySpec::Random => "random".into(),
            PolicySpec::Drl => "drl".into(),
            PolicySpec::DrlK(k) => format!("drl-k{k}"),
        }
    }

    pub fn needs_network(&self) -> bool {
        matches!(self, PolicySpec::Drl | PolicySpec::DrlK(_))
    }

    /// A fresh policy object. `seed` only affects the random policy.
    pub fn build<'p, T: Scalar>(
        &self,
        params: Option<&'p NetParams<T>>,
        seed: u64,
    ) -> Result<Box<dyn OrderingPolicy + 'p>, EvalError> {
        let net = || params.ok_or_else(|| EvalError::MissingCheckpoint(self.name()));
        Ok(match *self {
            PolicySpec::MinDom => Box::new(MinDom),
            PolicySpec::DomDdeg => Box::new(DomDdeg),
            PolicySpec::Impact => Box::new(Impact::new()),
            PolicySpec::Random => Box::new(RandomPolicy::new(seed)),
            PolicySpec::Drl => Box::new(DrlPolicy::new(net()?)),
            PolicySpec::DrlK(k) => Box::new(HybridPolicy::new(net()?, k)),
        })
    }
}

impl FromStr for PolicySpec {
    type Err = EvalError;

    /// Accepts the names from [`PolicySpec::name`]; `drl-k` alone means
    /// `K = 3`.
    fn from_str(s: &str) -> Result<Self, EvalError> {
        Ok(match s {
            "mindom" => PolicySpec::MinDom,
            "domddeg" => PolicySpec::DomDdeg,
            "impact" => PolicySpec::Impact,
            "random" => PolicySpec::Random,
            "drl" => PolicySpec::Drl,
            "drl-k" => PolicySpec::DrlK(3),
            _ => match s.strip_prefix("drl-k").and_then(|k| k.parse().ok()) {
                Some(k) => PolicySpec::DrlK(k),
                None => return Err(EvalError::UnknownPolicy(s.to_string())),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub instance: String,
    pub policy: String,
    pub outcome: Outcome,
    pub nodes: u64,
    pub failures: u64,
    pub total_seconds: f64,
    pub inference_seconds: f64,
}

pub const CSV_HEADER: &str = "instance,policy,outcome,nodes,failures,total_seconds,inference_seconds";

impl InstanceResult {
    pub fn solved(&self) -> bool {
        self.outcome != Outcome::Cutoff
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.instance,
            self.policy,
            self.outcome.as_str(),
            self.nodes,
            self.failures,
            self.total_seconds,
            self.inference_seconds
        )
    }

    fn parse(line_no: usize, line: &str) -> Result<Self, EvalError> {
        let bad = |m: &str| EvalError::Csv(line_no, m.to_string());
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let outcome = match f[2] {
            "sat" => Outcome::Sat,
            "unsat" => Outcome::Unsat,
            "cutoff" => Outcome::Cutoff,
            _ => return Err(bad("bad outcome")),
        };
        Ok(Self {
            instance: f[0].to_string(),
            policy: f[1].to_string(),
            outcome,
            nodes: f[3].parse().map_err(|_| bad("bad nodes"))?,
            failures: f[4].parse().map_err(|_| bad("bad failures"))?,
            total_seconds: f[5].parse().map_err(|_| bad("bad total_seconds"))?,
            inference_seconds: f[6].parse().map_err(|_| bad("bad inference_seconds"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: String,
    pub instances: usize,
    /// Over all instances; cutoff runs count their cutoff node total.
    pub mean_nodes: f64,
    pub mean_failures: f64,
    pub timeouts: usize,
    pub mean_total_seconds: f64,
    pub mean_inference_seconds: f64,
    /// Inference time as a percentage of total time.
    pub inference_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub policy: String,
    pub reference: String,
    /// Instances solved by both policies.
    pub common: usize,
    /// `100 * (ref - policy) / ref` of mean nodes on the common subset.
    pub node_reduction: Option<f64>,
    pub failure_reduction: Option<f64>,
    /// One-sided paired t-test that the policy needs fewer nodes, on the
    /// common subset.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<InstanceResult>,
    pub summaries: Vec<PolicySummary>,
    pub comparisons: Vec<Comparison>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Percentage reduction of `value` relative to `reference`.
pub fn reduction(reference: f64, value: f64) -> Option<f64> {
    (reference != 0.0).then(|| 100.0 * (reference - value) / reference)
}

/// One-sided paired t-test of `mean(a) < mean(b)`: the lower tail of
/// Student's t with `n - 1` degrees of freedom at the paired statistic.
///
/// Zero spread of the differences is resolved by convention: all zero gives
/// 1, all equal and negative gives 0, all equal and positive gives 1.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(EvalError::TTestInput(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Ok(if m < 0.0 { 0.0 } else { 1.0 });
    }
    let t = m / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid t distribution");
    Ok(dist.cdf(t).clamp(0.0, 1.0))
}

impl EvalReport {
    /// Aggregates rows, in the order policies first appear.
    pub fn from_rows(rows: Vec<InstanceResult>, reference: Option<&str>) -> Result<Self, EvalError> {
        let mut policies: Vec<String> = Vec::new();
        for r in &rows {
            if !policies.contains(&r.policy) {
                policies.push(r.policy.clone());
            }
        }
        fn of<'r>(rows: &'r [InstanceResult], p: &'r str) -> impl Iterator<Item = &'r InstanceResult> {
            rows.iter().filter(move |r| r.policy == p)
        }
        let summaries = policies
            .iter()
            .map(|p| {
                let total: f64 = of(&rows, p).map(|r| r.total_seconds).sum();
                let infer: f64 = of(&rows, p).map(|r| r.inference_seconds).sum();
                PolicySummary {
                    policy: p.clone(),
                    instances: of(&rows, p).count(),
                    mean_nodes: mean(of(&rows, p).map(|r| r.nodes as f64)),
                    mean_failures: mean(of(&rows, p).map(|r| r.failures as f64)),
                    timeouts: of(&rows, p).filter(|r| !r.solved()).count(),
                    mean_total_seconds: mean(of(&rows, p).map(|r| r.total_seconds)),
                    mean_inference_seconds: mean(of(&rows, p).map(|r| r.inference_seconds)),
                    inference_share: if total > 0.0 { 100.0 * infer / total } else { 0.0 },
                }
            })
            .collect();
        let mut comparisons = Vec::new();
        if let Some(reference) = reference {
            if !policies.iter().any(|p| p == reference) {
                return Err(EvalError::MissingReference(reference.to_string()));
            }
            for p in &policies {
                comparisons.push(compare(&rows, p, reference));
            }
        }
        Ok(Self { rows, summaries, comparisons })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv());
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Vec<InstanceResult>, EvalError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(EvalError::Csv(1, "missing header".into())),
        }
        lines
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| InstanceResult::parse(i + 1, l.trim()))
            .collect()
    }

    /// Aligned text table, one row per policy.
    pub fn to_table(&self) -> String {
        let headers = [
            "policy", "nodes", "failures", "timeouts", "reduction%", "p-value", "time(s)", "infer(s)", "infer%",
        ];
        let mut rows: Vec<Vec<String>> = vec![headers.iter().map(|h| h.to_string()).collect()];
        for s in &self.summaries {
            let cmp = self.comparisons.iter().find(|c| c.policy == s.policy);
            let opt = |x: Option<f64>, prec: usize| x.map(|v| format!("{v:.prec$}")).unwrap_or_else(|| "-".into());
            rows.push(vec![
                s.policy.clone(),
                format!("{:.2}", s.mean_nodes),
                format!("{:.2}", s.mean_failures),
                s.timeouts.to_string(),
                opt(cmp.and_then(|c| c.node_reduction), 2),
                cmp.and_then(|c| c.p_value).map(|p| format!("{p:.3e}")).unwrap_or_else(|| "-".into()),
                format!("{:.4}", s.mean_total_seconds),
                format!("{:.4}", s.mean_inference_seconds),
                format!("{:.1}", s.inference_share),
            ]);
        }
        let widths: Vec<usize> = (0..headers.len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap())
            .collect();
        let mut out = String::new();
        for (i, r) in rows.iter().enumerate() {
            for (c, cell) in r.iter().enumerate() {
                if c == 0 {
                    write!(out, "{cell:<w$}", w = widths[c]).unwrap();
                } else {
                    write!(out, "  {cell:>w$}", w = widths[c]).unwrap();
                }
            }
            out.push('\n');
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                out.push_str(&"-".repeat(total));
                out.push('\n');
            }
        }
        if let Some(c) = self.comparisons.first() {
            writeln!(out, "reductions and p-values against {} on instances solved by both", c.reference).unwrap();
        }
        out
    }
}

fn compare(rows: &[InstanceResult], policy: &str, reference: &str) -> Comparison {
    let mut pairs = Vec::new();
    for r in rows.iter().filter(|r| r.policy == reference && r.solved()) {
        if let Some(o) = rows.iter().find(|o| o.policy == policy && o.instance == r.instance && o.solved()) {
            pairs.push((o, r));
        }
    }
    let pol_nodes: Vec<f64> = pairs.iter().map(|(o, _)| o.nodes as f64).collect();
    let ref_nodes: Vec<f64> = pairs.iter().map(|(_, r)| r.nodes as f64).collect();
    let node_reduction = (!pairs.is_empty())
        .then(|| reduction(mean(ref_nodes.iter().copied()), mean(pol_nodes.iter().copied())))
        .flatten();
    let failure_reduction = (!pairs.is_empty())
        .then(|| {
            reduction(
                mean(pairs.iter().map(|(_, r)| r.failures as f64)),
                mean(pairs.iter().map(|(o, _)| o.failures as f64)),
            )
        })
        .flatten();
    Comparison {
        policy: policy.to_string(),
        reference: reference.to_string(),
        common: pairs.len(),
        node_reduction,
        failure_reduction,
        p_value: paired_t_test(&pol_nodes, &ref_nodes).ok(),
    }
}

/// Settings shared by every solve of an evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalSettings {
    pub node_cutoff: u64,
    pub workers: usize,
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { node_cutoff: SearchLimits::DEFAULT_NODE_CUTOFF, workers: 1, seed: 0 }
    }
}

/// Solves every instance under every policy. Instances run in parallel on
/// `settings.workers` threads; each solve is single-threaded.
pub fn evaluate<T: Scalar>(
    instances: &[ConstraintNetwork],
    policies: &[PolicySpec],
    params: Option<&NetParams<T>>,
    settings: EvalSettings,
    reference: Option<PolicySpec>,
) -> Result<EvalReport, EvalError> {
    for p in policies {
        if p.needs_network() && params.is_none() {
            return Err(EvalError::MissingCheckpoint(p.name()));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let mut rows = Vec::with_capacity(instances.len() * policies.len());
    for spec in policies {
        let name = spec.name();
        let run = |(i, net): (usize, &ConstraintNetwork)| -> Result<InstanceResult, EvalError> {
            let mut policy = spec.build(params, settings.seed.wrapping_add(i as u64))?;
            let r = solve(net, &mut policy, SearchLimits::nodes(settings.node_cutoff), None);
            Ok(InstanceResult {
                instance: net.id().to_string(),
                policy: name.clone(),
                outcome: r.stats.outcome,
                nodes: r.stats.nodes,
                failures: r.stats.failures,
                total_seconds: r.stats.total_seconds,
                inference_seconds: r.stats.inference_seconds,
            })
        };
        let part: Result<Vec<_>, _> = pool.install(|| instances.par_iter().enumerate().map(run).collect());
        rows.extend(part?);
    }
    let reference = reference.map(|r| r.name());
    EvalReport::from_rows(rows, reference.as_deref())
}
