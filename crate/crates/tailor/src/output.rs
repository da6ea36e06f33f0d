//! `metrics.csv` and `trace.jsonl`, and replay of the former from the latter.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tailor_core::domain::{LabelVector, TaskKind, WeightVector};
use tailor_core::metrics::{aggregate, rarest_class_count, AggregateRow, RoundMetrics, Stat};
use tailor_core::runner::TrialOutcome;
use tailor_core::simenv::BanditInstance;

pub const CSV_HEADER: &str = "round,policy,labeled_total,rarest_class_count,accuracy_metric,total_positives,\
cumulative_reward,cumulative_regret,labeled_total_stderr,rarest_class_count_stderr,accuracy_metric_stderr,\
total_positives_stderr,cumulative_reward_stderr,cumulative_regret_stderr";

/// `x` with 9 significant digits, in the style of C's `%.9g`.
pub fn format_g9(x: f64) -> String {
    const P: i32 = 9;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(s: Option<Stat>, f: impl Fn(Stat) -> f64) -> String {
    s.map(|s| format_g9(f(s))).unwrap_or_default()
}

/// Header plus one aggregate row per round: means, then standard errors.
pub fn metrics_csv(policy: &str, rows: &[AggregateRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.round,
            policy,
            format_g9(r.labeled_total.mean),
            format_g9(r.rarest_class_count.mean),
            opt(r.accuracy_metric, |s| s.mean),
            format_g9(r.total_positives.mean),
            format_g9(r.cumulative_reward.mean),
            opt(r.cumulative_regret, |s| s.mean),
            format_g9(r.labeled_total.stderr),
            format_g9(r.rarest_class_count.stderr),
            opt(r.accuracy_metric, |s| s.stderr),
            format_g9(r.total_positives.stderr),
            format_g9(r.cumulative_reward.stderr),
            opt(r.cumulative_regret, |s| s.stderr),
        );
    }
    out
}

/// One line of `trace.jsonl`. Round 1 of each trial also carries the seed set
/// and, in pure-bandit runs, the instance, so the file alone suffices to
/// recompute every logged metric except the model's accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub trial: usize,
    pub round: usize,
    pub policy: String,
    pub task: String,
    pub v: Vec<f64>,
    pub arms: Vec<usize>,
    pub ids: Vec<usize>,
    pub labels: Vec<Vec<u8>>,
    pub rewards: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_metric: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_ids: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_labels: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<Vec<f64>>>,
}

pub fn trace_records(outcomes: &[TrialOutcome], policy: &str, task: TaskKind) -> Vec<TraceRecord> {
    let bits = |ys: &[LabelVector]| ys.iter().map(|y| y.as_slice().to_vec()).collect::<Vec<_>>();
    let mut out = Vec::new();
    for o in outcomes {
        for (r, m) in o.trace.rounds().iter().zip(&o.metrics) {
            let first = m.round == 1;
            out.push(TraceRecord {
                trial: o.trial,
                round: m.round,
                policy: policy.into(),
                task: task.name().into(),
                v: r.weights.as_slice().to_vec(),
                arms: r.arms.clone(),
                ids: r.ids.clone(),
                labels: bits(&r.labels),
                rewards: r.rewards.clone(),
                accuracy_metric: m.accuracy_metric,
                candidates: (first && !o.candidates.is_empty()).then(|| o.candidates.iter().map(|c| c.name()).collect()),
                seed_ids: first.then(|| o.seed_ids.clone()),
                seed_labels: first.then(|| bits(&o.seed_labels)),
                thetas: if first { o.instance.as_ref().map(|i| i.thetas().to_vec()) } else { None },
            });
        }
    }
    out
}

pub fn trace_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("finite values"));
        out.push('\n');
    }
    out
}

/// Reconstructing metrics from a trace failed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ReplayError {
    pub line: usize,
    pub message: String,
}

fn fail(line: usize, message: impl ToString) -> ReplayError {
    ReplayError { line, message: message.to_string() }
}

fn add_counts(counts: &mut [u64], y: &[u8]) {
    for (c, &b) in counts.iter_mut().zip(y) {
        *c += b as u64;
    }
}

/// Re-derives `metrics.csv` from the contents of `trace.jsonl`.
pub fn replay(trace: &str) -> Result<String, ReplayError> {
    let mut series: Vec<Vec<RoundMetrics>> = Vec::new();
    let mut policy = None;
    // per trial: counts, labeled, positives, reward, regret, instance
    struct State {
        counts: Vec<u64>,
        labeled: usize,
        positives: u64,
        reward: f64,
        regret: f64,
        instance: Option<BanditInstance>,
    }
    let mut state: Option<State> = None;
    for (i, line) in trace.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let n = i + 1;
        let rec: TraceRecord = serde_json::from_str(line).map_err(|e| fail(n, e))?;
        policy.get_or_insert_with(|| rec.policy.clone());
        let task = TaskKind::from_name(&rec.task).ok_or_else(|| fail(n, format!("unknown task {:?}", rec.task)))?;
        if rec.round == 1 {
            if rec.trial != series.len() {
                return Err(fail(n, format!("expected trial {}, found {}", series.len(), rec.trial)));
            }
            let k = rec.v.len();
            let mut counts = vec![0u64; k];
            let seed_labels = rec.seed_labels.clone().unwrap_or_default();
            for y in &seed_labels {
                add_counts(&mut counts, y);
            }
            let instance = match &rec.thetas {
                Some(t) => Some(BanditInstance::new(task, t.clone()).map_err(|e| fail(n, e))?),
                None => None,
            };
            state = Some(State {
                counts,
                labeled: seed_labels.len(),
                positives: seed_labels.iter().flatten().map(|&b| b as u64).sum(),
                reward: 0.0,
                regret: 0.0,
                instance,
            });
            series.push(Vec::new());
        }
        let st = state.as_mut().ok_or_else(|| fail(n, "trace does not start at round 1"))?;
        let trial = series.last_mut().expect("pushed at round 1");
        if rec.round != trial.len() + 1 {
            return Err(fail(n, format!("expected round {}, found {}", trial.len() + 1, rec.round)));
        }
        for y in &rec.labels {
            add_counts(&mut st.counts, y);
            st.positives += y.iter().map(|&b| b as u64).sum::<u64>();
        }
        st.labeled += rec.labels.len();
        st.reward += rec.rewards.iter().sum::<f64>();
        let regret = match &st.instance {
            Some(inst) => {
                let v = WeightVector::new(rec.v.clone()).map_err(|e| fail(n, e))?;
                st.regret += inst.exact_regret(&v, &rec.arms).map_err(|e| fail(n, e))?;
                Some(st.regret)
            }
            None => None,
        };
        trial.push(RoundMetrics {
            round: rec.round,
            labeled_total: st.labeled,
            rarest_class_count: rarest_class_count(&st.counts),
            accuracy_metric: rec.accuracy_metric,
            total_positives: st.positives,
            cumulative_reward: st.reward,
            cumulative_regret: regret,
        });
    }
    let rows = aggregate(&series).map_err(|e| fail(0, e))?;
    Ok(metrics_csv(&policy.unwrap_or_default(), &rows))
}
