//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! with the measured quantities, then asserts.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use tailor::parallel::{run_experiment_parallel, thread_count};
use tailor_core::candidates::{select_next, CandidateKind, CandidateSpec, ScoringContext};
use tailor_core::domain::{LabelVector, Pool, PoolPartition, TaskKind, WeightVector};
use tailor_core::metrics::imbalance_ratios;
use tailor_core::model::{train, LinearClassifier, Sample, TrainConfig};
use tailor_core::policies::{contextual_arm, PolicyKind};
use tailor_core::posterior::ArmPosterior;
use tailor_core::rewards::RewardSpec;
use tailor_core::rng::{stream, Stream, StreamRng};
use tailor_core::runner::{ActiveLearningSetup, BanditSetup, ExperimentConfig, Mode, TrialOutcome};
use tailor_core::simenv::{generate_pool, SyntheticPoolSpec};

fn report(criterion: u32, pass: bool, detail: String) {
    println!("criterion {criterion}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn check(criterion: u32, pass: bool, elapsed: Duration, limit: Duration, detail: String) {
    let in_time = elapsed < limit;
    report(criterion, pass && in_time, format!("{detail} time={:.2}s limit={}s", elapsed.as_secs_f64(), limit.as_secs()));
    assert!(pass, "criterion {criterion}: {detail}");
    assert!(in_time, "criterion {criterion}: took {elapsed:?}, limit {limit:?}");
}

fn rng(seed: u64) -> StreamRng {
    stream(seed, 0, Stream::Environment)
}

fn random_label(task: TaskKind, k: usize, r: &mut StreamRng) -> LabelVector {
    match task {
        TaskKind::MultiClass => LabelVector::one_hot(r.random_range(0..k), k).unwrap(),
        TaskKind::MultiLabel => {
            LabelVector::new((0..k).map(|_| r.random_range(0..=1u8)).collect(), TaskKind::MultiLabel).unwrap()
        }
    }
}

#[test]
fn criterion_01_conjugacy() {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for s in 0..1000 {
        let task = if s % 2 == 0 { TaskKind::MultiLabel } else { TaskKind::MultiClass };
        let k = r.random_range(1..=5);
        let len = r.random_range(0..=50);
        let labels: Vec<LabelVector> = (0..len).map(|_| random_label(task, k, &mut r)).collect();
        let mut post = ArmPosterior::uniform(task, k);
        for y in &labels {
            post = post.update(std::slice::from_ref(y)).unwrap();
        }
        for c in 0..k {
            let ones = labels.iter().filter(|y| y.is_set(c)).count() as f64;
            worst = worst.max((post.alpha()[c] - (1.0 + ones)).abs());
            if task == TaskKind::MultiLabel {
                worst = worst.max((post.beta()[c] - (1.0 + len as f64 - ones)).abs());
            }
        }
    }
    check(1, worst <= 1e-12, start.elapsed(), Duration::from_secs(5), format!("max_abs_error={worst:e}"));
}

fn finite_difference(model: &LinearClassifier, batch: &[Sample<'_>], h: f64) -> Vec<f64> {
    let w = model.weights().to_vec();
    (0..w.len())
        .map(|i| {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[i] += h;
            minus[i] -= h;
            let at = |v| LinearClassifier::from_weights(model.task(), model.classes(), model.dim(), v).unwrap();
            (at(plus).loss(batch).unwrap() - at(minus).loss(batch).unwrap()) / (2.0 * h)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn criterion_02_gradient_check() {
    let start = Instant::now();
    let mut r = rng(102);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let task = if i % 2 == 0 { TaskKind::MultiClass } else { TaskKind::MultiLabel };
        let (k, d, n) = (r.random_range(2..=5), r.random_range(1..=10), r.random_range(1..=20));
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<LabelVector> = (0..n).map(|_| random_label(task, k, &mut r)).collect();
        let batch: Vec<Sample<'_>> = xs.iter().map(|x| x.as_slice()).zip(&ys).collect();
        let w = (0..k * (d + 1)).map(|_| r.random_range(-1.0..1.0)).collect();
        let model = LinearClassifier::from_weights(task, k, d, w).unwrap();
        let analytic = model.loss_gradient(&batch).unwrap();
        let numeric = finite_difference(&model, &batch, 1e-5);
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&analytic).max(norm(&numeric)).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    check(2, worst < 1e-5, start.elapsed(), Duration::from_secs(10), format!("max_relative_error={worst:e}"));
}

#[test]
fn criterion_03_contextual_identity() {
    let start = Instant::now();
    let mut r = rng(103);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (k, m) = (r.random_range(1..=10), r.random_range(1..=10));
        let b = 1.0 / k as f64;
        let v = WeightVector::new((0..k).map(|_| r.random_range(-b..=b)).collect()).unwrap();
        let thetas: Vec<Vec<f64>> = (0..m).map(|_| (0..k).map(|_| r.random()).collect()).collect();
        let stacked: Vec<f64> = thetas.iter().flatten().copied().collect();
        let i = r.random_range(0..m);
        let phi = contextual_arm(&v, i, m).unwrap();
        let lhs: f64 = phi.iter().zip(&stacked).map(|(a, b)| a * b).sum();
        let rhs: f64 = v.as_slice().iter().zip(&thetas[i]).map(|(a, b)| a * b).sum();
        worst = worst.max((lhs - rhs).abs());
    }
    check(3, worst <= 1e-12, start.elapsed(), Duration::from_secs(1), format!("max_abs_error={worst:e}"));
}

/// Pure-bandit environment shared by criteria 4 to 6: ten arms over ten
/// labels, each instance drawn from the uniform prior, search weights.
fn bandit_config(policy: PolicyKind, rounds: usize, instances: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        Mode::PureBandit(BanditSetup { task: TaskKind::MultiLabel, arms: 10, classes: 10, thetas: None, random_weights: false }),
        rounds,
        20,
    );
    c.reward = RewardSpec::search();
    c.policy = policy;
    // stationary environment: no forgetting
    c.discount = 1.0;
    c.trials = instances;
    c.seed = 2024;
    c
}

const INSTANCES: usize = 100;

fn mean_regret(outcomes: &[TrialOutcome]) -> Vec<f64> {
    let rounds = outcomes[0].metrics.len();
    (0..rounds)
        .map(|t| outcomes.iter().map(|o| o.metrics[t].cumulative_regret.unwrap()).sum::<f64>() / outcomes.len() as f64)
        .collect()
}

fn run(config: &ExperimentConfig, pool: Option<&Pool>) -> Vec<TrialOutcome> {
    run_experiment_parallel(config, pool, thread_count()).unwrap().0
}

#[test]
fn criterion_04_regret_dominance() {
    let start = Instant::now();
    let tailor = mean_regret(&run(&bandit_config(PolicyKind::Tailor, 50, INSTANCES), None));
    let random = mean_regret(&run(&bandit_config(PolicyKind::RandomMeta, 50, INSTANCES), None));
    let per_round = |c: &[f64], from: usize, to: usize| {
        let before = if from == 1 { 0.0 } else { c[from - 2] };
        (c[to - 1] - before) / (to - from + 1) as f64
    };
    let (early, late) = (per_round(&tailor, 1, 10), per_round(&tailor, 41, 50));
    let ratio = tailor[49] / random[49];
    check(
        4,
        ratio < 0.5 && late < early,
        start.elapsed(),
        Duration::from_secs(120),
        format!(
            "tailor={:.4} random={:.4} ratio={ratio:.4} per_round_1_10={early:.4} per_round_41_50={late:.4}",
            tailor[49], random[49]
        ),
    );
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn criterion_05_sublinear_regret() {
    let start = Instant::now();
    let horizons = [25usize, 50, 100, 200];
    let log_t: Vec<f64> = horizons.iter().map(|&t| (t as f64).ln()).collect();
    let final_regret = |policy| -> Vec<f64> {
        horizons
            .iter()
            .map(|&t| mean_regret(&run(&bandit_config(policy, t, INSTANCES), None))[t - 1].ln())
            .collect()
    };
    let s_tailor = slope(&log_t, &final_regret(PolicyKind::Tailor));
    let s_random = slope(&log_t, &final_regret(PolicyKind::RandomMeta));
    check(
        5,
        s_tailor < 0.85 && s_random > 0.95,
        start.elapsed(),
        Duration::from_secs(300),
        format!("slope_tailor={s_tailor:.4} slope_random={s_random:.4}"),
    );
}

#[test]
fn criterion_06_tailor_vs_contextual() {
    let start = Instant::now();
    let tailor = mean_regret(&run(&bandit_config(PolicyKind::Tailor, 50, INSTANCES), None))[49];
    let linear = mean_regret(&run(&bandit_config(PolicyKind::ContextualTs, 50, INSTANCES), None))[49];
    check(
        6,
        tailor <= 1.1 * linear,
        start.elapsed(),
        Duration::from_secs(180),
        format!("tailor={tailor:.4} contextual_ts={linear:.4} ratio={:.4}", tailor / linear),
    );
}

fn al_config(candidates: &[CandidateSpec], policy: PolicyKind, reward: RewardSpec) -> ExperimentConfig {
    let setup = ActiveLearningSetup { candidates: candidates.to_vec(), seed_size: 20, training: TrainConfig::default() };
    let mut c = ExperimentConfig::new(Mode::ActiveLearning(setup), 10, 50);
    c.policy = policy;
    c.reward = reward;
    c.trials = 4;
    c.seed = 7;
    c
}

fn final_mean(outcomes: &[TrialOutcome], f: impl Fn(&TrialOutcome) -> f64) -> f64 {
    outcomes.iter().map(f).sum::<f64>() / outcomes.len() as f64
}

fn specs(names: &[&str]) -> Vec<CandidateSpec> {
    names.iter().map(|s| CandidateSpec::parse(s).unwrap()).collect()
}

/// Final-round mean of `metric` for every single candidate run alone
/// (one arm, so the meta policy is irrelevant).
fn best_single(pool: &Pool, names: &[&str], reward: &RewardSpec, metric: &dyn Fn(&TrialOutcome) -> f64) -> (String, f64) {
    let arms = tailor_core::candidates::expand(&specs(names), pool.classes()).unwrap();
    arms.iter()
        .map(|&kind| {
            let out = run(&al_config(&[CandidateSpec::Single(kind)], PolicyKind::Tailor, reward.clone()), Some(pool));
            (kind.name(), final_mean(&out, metric))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

#[test]
fn criterion_07_class_diversity() {
    let start = Instant::now();
    // geometric proportions with smallest / largest = 0.02
    let ratio = 0.02f64.powf(0.25);
    let raw: Vec<f64> = (0..5).map(|i| ratio.powi(i)).collect();
    let total: f64 = raw.iter().sum();
    let spec = SyntheticPoolSpec {
        task: TaskKind::MultiClass,
        classes: 5,
        dim: 5,
        size: 5000,
        class_proportions: raw.iter().map(|p| p / total).collect(),
        cluster_separation: 2.0,
        positive_rates: None,
    };
    let pool = generate_pool(&spec, &mut stream(70, 0, Stream::PoolGeneration)).unwrap();
    let imbalance = imbalance_ratios(&pool).unwrap().class_imbalance;
    let names = ["random", "margin", "entropy", "mlp"];
    let reward = RewardSpec::diversity();
    let rarest = |o: &TrialOutcome| o.metrics.last().unwrap().rarest_class_count as f64;
    let tailor = final_mean(&run(&al_config(&specs(&names), PolicyKind::Tailor, reward.clone()), Some(&pool)), rarest);
    let random = final_mean(&run(&al_config(&specs(&names), PolicyKind::RandomMeta, reward.clone()), Some(&pool)), rarest);
    let (best_name, best) = best_single(&pool, &names, &reward, &rarest);
    check(
        7,
        tailor >= random && tailor >= 0.9 * best,
        start.elapsed(),
        Duration::from_secs(180),
        format!("imbalance={imbalance:.4} tailor={tailor} random_meta={random} best_single={best} ({best_name})"),
    );
}

#[test]
fn criterion_08_multilabel_search() {
    let start = Instant::now();
    let rates = vec![0.1, 0.07, 0.04, 0.03, 0.01];
    let spec = SyntheticPoolSpec {
        task: TaskKind::MultiLabel,
        classes: 5,
        dim: 5,
        size: 5000,
        class_proportions: vec![],
        cluster_separation: 2.0,
        positive_rates: Some(rates),
    };
    let pool = generate_pool(&spec, &mut stream(80, 0, Stream::PoolGeneration)).unwrap();
    let imbalance = imbalance_ratios(&pool).unwrap().binary_imbalance.unwrap();
    let names = ["random", "emal", "mlp"];
    let reward = RewardSpec::search();
    let positives = |o: &TrialOutcome| o.metrics.last().unwrap().total_positives as f64;
    let tailor = final_mean(&run(&al_config(&specs(&names), PolicyKind::Tailor, reward.clone()), Some(&pool)), positives);
    let (best_name, best) = best_single(&pool, &names, &reward, &positives);
    check(
        8,
        tailor >= 0.9 * best,
        start.elapsed(),
        Duration::from_secs(180),
        format!("binary_imbalance={imbalance:.4} tailor={tailor} best_single={best} ({best_name})"),
    );
}

/// Larger is selected first; independent of the library's scoring code.
fn uncertainty(kind: CandidateKind, p: &[f64]) -> f64 {
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    match kind {
        CandidateKind::LeastConfidence => 1.0 - sorted[0],
        CandidateKind::Margin => -(sorted[0] - sorted.get(1).copied().unwrap_or(0.0)),
        CandidateKind::Entropy => -p.iter().filter(|&&q| q > 0.0).map(|&q| q * q.ln()).sum::<f64>(),
        CandidateKind::EmalAvgMargin => -p.iter().map(|&q| (q - 0.5).abs()).sum::<f64>(),
        CandidateKind::MostLikelyPositive(c) => p[c],
        CandidateKind::PerClassUncertainty(c) => -(p[c] - 0.5).abs(),
        CandidateKind::Random | CandidateKind::BadgeKmeansPp => unreachable!("not fixed-score"),
    }
}

#[test]
fn criterion_09_top_b_equivalence() {
    let start = Instant::now();
    let mut r = rng(109);
    let mut mismatches = 0;
    let mut checks = 0;
    for p in 0..50 {
        let task = if p % 2 == 0 { TaskKind::MultiClass } else { TaskKind::MultiLabel };
        let k = r.random_range(2..=5);
        let spec = SyntheticPoolSpec {
            task,
            classes: k,
            dim: r.random_range(2..=6),
            size: r.random_range(80..=300),
            class_proportions: if task == TaskKind::MultiClass { vec![1.0 / k as f64; k] } else { vec![] },
            cluster_separation: 1.5,
            positive_rates: (task == TaskKind::MultiLabel).then(|| vec![0.3; k]),
        };
        let pool = generate_pool(&spec, &mut r).unwrap();
        let mut partition = PoolPartition::new(&pool);
        let seed = rand::seq::index::sample(&mut r, pool.len(), 30).into_vec();
        partition.annotate_batch(&pool, &seed).unwrap();
        let mut ids = partition.labeled().to_vec();
        ids.sort_unstable();
        let batch: Vec<Sample<'_>> = ids.iter().map(|&id| (pool.features(id), partition.label(&pool, id))).collect();
        let model = train(&batch, task, k, &TrainConfig { epochs: 100, ..TrainConfig::default() }).unwrap();
        let ctx = ScoringContext::new(&model, &pool, &partition).unwrap();
        let b = r.random_range(1..=40);
        let kinds = [
            CandidateKind::LeastConfidence,
            CandidateKind::Margin,
            CandidateKind::Entropy,
            CandidateKind::EmalAvgMargin,
            CandidateKind::MostLikelyPositive(r.random_range(0..k)),
            CandidateKind::PerClassUncertainty(r.random_range(0..k)),
        ];
        for kind in kinds {
            let mut picked = Vec::new();
            for _ in 0..b {
                picked.push(select_next(kind, &ctx, &picked, &mut r).unwrap());
            }
            let mut order: Vec<usize> = (0..ctx.ids().len()).collect();
            order.sort_by(|&a, &c| {
                uncertainty(kind, &ctx.probabilities()[c])
                    .total_cmp(&uncertainty(kind, &ctx.probabilities()[a]))
                    .then(a.cmp(&c))
            });
            let oracle: BTreeSet<usize> = order[..b].iter().map(|&i| ctx.ids()[i]).collect();
            let got: BTreeSet<usize> = picked.into_iter().collect();
            checks += 1;
            mismatches += usize::from(got != oracle);
        }
    }
    check(9, mismatches == 0, start.elapsed(), Duration::from_secs(10), format!("checks={checks} mismatches={mismatches}"));
}

fn cli_run(config: &Path, out: &Path) -> (Vec<u8>, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_tailor"))
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    (std::fs::read(out.join("metrics.csv")).unwrap(), std::fs::read(out.join("trace.jsonl")).unwrap())
}

#[test]
fn criterion_10_cli_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        "mode = \"active_learning\"\nrounds = 5\nbatch_size = 10\nseed_size = 15\nseed = 42\ntrials = 3\n\
         candidates = [\"random\", \"margin\", \"badge\", \"mlp\"]\n\
         [synthetic]\ntask = \"multiclass\"\nclasses = 3\ndim = 3\nsize = 400\nproportions = [0.7, 0.2, 0.1]\n",
        "mode = \"active_learning\"\nrounds = 5\nbatch_size = 10\nseed = 42\ntrials = 3\nreward = \"search\"\n\
         policy = \"contextual_ts\"\ncandidates = [\"random\", \"emal\", \"mlp\"]\n\
         [synthetic]\ntask = \"multilabel\"\nclasses = 3\ndim = 3\nsize = 400\npositive_rates = [0.2, 0.1, 0.05]\n",
        "mode = \"pure_bandit\"\nrounds = 20\nbatch_size = 5\nseed = 42\ntrials = 6\npolicy = \"ucb_diag\"\n\
         [bandit]\ntask = \"multiclass\"\narms = 4\nclasses = 3\nrandom_weights = true\n",
    ];
    let mut identical = true;
    for (i, text) in configs.iter().enumerate() {
        let cfg = dir.path().join(format!("c{i}.toml"));
        std::fs::write(&cfg, text).unwrap();
        let a = cli_run(&cfg, &dir.path().join(format!("a{i}")));
        let b = cli_run(&cfg, &dir.path().join(format!("b{i}")));
        identical &= a == b;
    }
    check(10, identical, start.elapsed(), Duration::from_secs(120), format!("configs={} identical={identical}", configs.len()));
}
