use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use anyhow::{bail, Context};
use crossgreed::hardgen::{
    build_hard_instance, naive_bayes_violation, sample_hard_dataset, verify_reduction, write_hard_csv, Graph,
    HardInstance, ReductionRecord,
};
use crossgreed::ingest::{
    build_joint_table, build_objective, load_dataset, load_graph, write_weighted_rows, DatasetSpec,
};
use crossgreed::joint_eval::JointTable;
use crossgreed::selector::select;
use crossgreed::synth::{random_exact_pairs, random_float_pairs};
use crossgreed::theory_lab::TheorySuite;
use crossgreed::{ConvolveConfig, Exact, Mass, NbObjective, SelectionMethod, SelectorConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::report::{emit, finite, num, nums};
use crate::{CapArgs, DataArgs, EvalArgs, FamilyArg, GenHardArgs, MethodArg, ModeArg, SearchArgs, VerifyArgs};

/// Pairwise conditional-independence checks are run on the whole universe up to this size.
const PAIRWISE_LIMIT: usize = 12;

fn convolve_config(caps: &CapArgs) -> ConvolveConfig {
    ConvolveConfig {
        prune_eps: caps.prune_eps,
        atom_cap: caps.atom_cap,
    }
}

fn dataset_spec(data: &DataArgs) -> anyhow::Result<DatasetSpec> {
    let path = data.dataset.as_ref().context("--dataset is required")?;
    if !data.delimiter.is_ascii() {
        bail!("--delimiter must be a single ASCII character");
    }
    Ok(DatasetSpec::new(path, data.label.clone())
        .with_delimiter(data.delimiter as u8)
        .with_alpha(data.alpha))
}

fn mode_name(mode: ModeArg) -> &'static str {
    match mode {
        ModeArg::Exact => "exact",
        ModeArg::Float => "float",
    }
}

/// Turns capacity errors into `Ok(Err(reason))` so optional diagnostics can be skipped.
fn unless_capped<T>(r: crossgreed::Result<T>) -> anyhow::Result<Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if e.is_capacity() => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

pub fn search(args: &SearchArgs) -> anyhow::Result<u8> {
    match args.mode {
        ModeArg::Exact => run_search::<Exact>(args),
        ModeArg::Float => run_search::<f64>(args),
    }
}

/// Column names plus the objective, from a dataset or a seeded synthetic instance.
struct Source<M: Mass> {
    names: Vec<String>,
    objective: NbObjective<M>,
    spec: Option<DatasetSpec>,
    description: Value,
}

fn load_source<M: Mass>(args: &SearchArgs) -> anyhow::Result<Source<M>> {
    let config = convolve_config(&args.caps);
    if let Some(n_cols) = args.synthetic {
        if args.max_vocab == 0 {
            bail!("--max-vocab must be positive");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let objective = if M::is_exact() {
            let pairs = random_exact_pairs(&mut rng, n_cols, args.max_vocab)
                .into_iter()
                .map(|p| {
                    let convert = |m: &crossgreed::Measure<Exact>| m.convert::<M>();
                    crossgreed::ConditionalPair::new(convert(&p.p1), convert(&p.p0))
                })
                .collect::<crossgreed::Result<Vec<_>>>()?;
            NbObjective::from_pairs(pairs, config)?
        } else {
            let pairs = random_float_pairs(&mut rng, n_cols, args.max_vocab, 1.0, 1.0)
                .into_iter()
                .map(|p| crossgreed::ConditionalPair::new(p.p1.convert::<M>(), p.p0.convert::<M>()))
                .collect::<crossgreed::Result<Vec<_>>>()?;
            NbObjective::from_pairs(pairs, config)?
        };
        return Ok(Source {
            names: (0..n_cols).map(|i| format!("c{i}")).collect(),
            objective,
            spec: None,
            description: json!({"synthetic_columns": n_cols, "max_vocab": args.max_vocab, "seed": args.seed}),
        });
    }
    let spec = dataset_spec(&args.data)?;
    let dataset = load_dataset(&spec).with_context(|| format!("loading {}", spec.path.display()))?;
    let objective = build_objective::<M>(&dataset, args.data.alpha, config)?;
    Ok(Source {
        names: dataset.columns.iter().map(|c| c.name.clone()).collect(),
        objective,
        description: json!({
            "path": spec.path.display().to_string(),
            "label": args.data.label,
            "rows": dataset.rows,
            "label_counts": dataset.label_counts,
            "columns": dataset.columns.len(),
            "alpha": args.data.alpha,
        }),
        spec: Some(spec),
    })
}

fn run_search<M: Mass>(args: &SearchArgs) -> anyhow::Result<u8> {
    let start = Instant::now();
    let source = load_source::<M>(args)?;
    let universe = source.objective.column_ids();
    let method = match args.method {
        MethodArg::Greedy => SelectionMethod::Greedy,
        MethodArg::Lazy => SelectionMethod::LazyGreedy,
        MethodArg::Exhaustive => SelectionMethod::Exhaustive,
    };
    let config = SelectorConfig {
        pad_to_k: args.pad_to_k,
        exhaustive_cap: args.exhaustive_cap,
        parallel: true,
    };
    let report = select(&source.objective, &universe, args.k, method, &config)?;
    let bound = source.objective.f_with_bound(&report.selected)?;
    let auc = source.objective.auc_star(&report.selected)?;

    let selected_names: Vec<&str> = report.selected.iter().map(|&i| source.names[i].as_str()).collect();
    let assumption = assumption_check::<M>(args, &source, &report.selected)?;

    let mut body = json!({
        "mode": mode_name(args.mode),
        "k": args.k,
        "input": source.description,
        "selection": {
            "method": report.method,
            "selected": report.selected,
            "selected_names": selected_names,
            "gains": nums(&report.gains),
            "f_trajectory": nums(&report.f_trajectory),
            "evaluations": report.evaluations,
            "early_stopped": report.early_stopped,
            "guarantee": report.guarantee,
            "stale_bound_violations": report.stale_bound_violations,
        },
        "auc_star": num(&auc),
        "normalized_auc": num(&bound.value),
        "error_bound": bound.error_bound,
        "eval_count": source.objective.eval_count(),
        "assumption_check": assumption,
    });
    if args.timing {
        body["wall_time_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    }
    emit("search", body, args.out.as_deref())?;
    Ok(0)
}

/// Conditional-independence diagnostic on the empirical joint law: the independence gap of
/// the selected columns and, for small universes, every column pair that is dependent given
/// the label. Fails if either shows a violation. Synthetic instances are naive Bayes by
/// construction and are skipped.
fn assumption_check<M: Mass>(args: &SearchArgs, source: &Source<M>, selected: &[usize]) -> anyhow::Result<Value> {
    let Some(spec) = &source.spec else {
        return Ok(json!({"status": "skipped", "reason": "synthetic naive-Bayes instance"}));
    };
    let mut out = Map::new();
    let mut violated = false;
    let mut checked = false;
    if source.names.len() <= PAIRWISE_LIMIT {
        let pairs = dependent_pairs::<M>(spec, &source.names, args.caps.pair_cap)?;
        if let Value::Array(p) = &pairs {
            checked = true;
            violated |= !p.is_empty();
        }
        out.insert("dependent_pairs".into(), pairs);
    }
    out.insert("tolerance".into(), json!(args.assumption_tol));
    let names: Vec<String> = selected.iter().map(|&i| source.names[i].clone()).collect();
    if !names.is_empty() {
        match unless_capped(build_joint_table::<M>(spec, &names, args.caps.pair_cap))? {
            Ok(table) => {
                let ids: Vec<usize> = (0..names.len()).collect();
                let gap = table.independence_gap(&ids)?;
                checked = true;
                violated |= gap.to_f64() > args.assumption_tol;
                out.insert("assumption_gap".into(), num(&gap));
                match unless_capped(table.auc_star_joint(&ids))? {
                    Ok(a) => {
                        let f = a.clone() + &a - M::one();
                        out.insert("joint_auc_star".into(), num(&a));
                        out.insert("joint_normalized_auc".into(), num(&f));
                    }
                    Err(reason) => {
                        out.insert("joint_auc_star".into(), Value::Null);
                        out.insert("joint_skipped_reason".into(), json!(reason));
                    }
                }
            }
            Err(reason) => {
                out.insert("assumption_gap".into(), Value::Null);
                out.insert("reason".into(), json!(reason));
            }
        }
    }
    let status = match (checked, violated) {
        (_, true) => "failed",
        (true, false) => "passed",
        (false, false) => "skipped",
    };
    out.insert("status".into(), json!(status));
    Ok(Value::Object(out))
}

/// Column pairs that are dependent given the label, over the whole universe.
fn dependent_pairs<M: Mass>(spec: &DatasetSpec, names: &[String], cap: u128) -> anyhow::Result<Value> {
    let table = match unless_capped(build_joint_table::<M>(spec, names, cap))? {
        Ok(t) => t,
        Err(_) => return Ok(Value::Null),
    };
    let mut pairs = Vec::new();
    for a in 0..names.len() {
        for b in a + 1..names.len() {
            if !table.conditionally_independent(a, b)? {
                pairs.push(json!([names[a], names[b]]));
            }
        }
    }
    Ok(Value::Array(pairs))
}

pub fn eval(args: &EvalArgs) -> anyhow::Result<u8> {
    match (args.graph.is_some(), args.mode) {
        (true, ModeArg::Exact) => eval_graph::<Exact>(args),
        (true, ModeArg::Float) => eval_graph::<f64>(args),
        (false, ModeArg::Exact) => eval_dataset::<Exact>(args),
        (false, ModeArg::Float) => eval_dataset::<f64>(args),
    }
}

/// Joint-path fields shared by dataset and graph evaluation.
fn joint_fields<M: Mass>(
    table: &JointTable<M>,
    set: &[usize],
    nb_auc: &M,
    out: &mut Map<String, Value>,
) -> anyhow::Result<()> {
    match unless_capped(table.auc_star_joint(set))? {
        Ok(a) => {
            out.insert("joint_auc_star".into(), num(&a));
            out.insert("joint_normalized_auc".into(), num(&(a.clone() + &a - M::one())));
            out.insert("auc_paths_agree".into(), json!(a.approx_eq(nb_auc, 1e-9)));
        }
        Err(reason) => {
            out.insert("joint_auc_star".into(), Value::Null);
            out.insert("joint_skipped_reason".into(), json!(reason));
        }
    }
    match unless_capped(table.mutual_information(set))? {
        Ok(mi) => {
            out.insert(
                "mutual_information".into(),
                json!({"bits": finite(mi.bits), "exact": mi.exact.map(|e| e.to_string())}),
            );
        }
        Err(_) => {
            out.insert("mutual_information".into(), Value::Null);
        }
    }
    match unless_capped(table.independence_gap(set))? {
        Ok(gap) => {
            let passed = gap.approx_eq(&M::zero(), 1e-12);
            out.insert("assumption_gap".into(), num(&gap));
            out.insert(
                "assumption_check".into(),
                json!(if passed { "passed" } else { "failed" }),
            );
        }
        Err(_) => {
            out.insert("assumption_gap".into(), Value::Null);
            out.insert("assumption_check".into(), json!("skipped"));
        }
    }
    Ok(())
}

fn eval_dataset<M: Mass>(args: &EvalArgs) -> anyhow::Result<u8> {
    if args.columns.is_empty() {
        bail!("--columns is required with --dataset");
    }
    let spec = dataset_spec(&args.data)?;
    let dataset = load_dataset(&spec).with_context(|| format!("loading {}", spec.path.display()))?;
    let ids = args
        .columns
        .iter()
        .map(|c| dataset.column_index(c))
        .collect::<crossgreed::Result<Vec<_>>>()?;
    let objective = build_objective::<M>(&dataset, args.data.alpha, convolve_config(&args.caps))?;
    let nb = objective.f_with_bound(&ids)?;
    let nb_auc = objective.auc_star(&ids)?;

    let mut out = Map::new();
    out.insert("mode".into(), json!(mode_name(args.mode)));
    out.insert("columns".into(), json!(args.columns));
    out.insert("naive_bayes_auc_star".into(), num(&nb_auc));
    out.insert("naive_bayes_normalized_auc".into(), num(&nb.value));
    out.insert("error_bound".into(), json!(nb.error_bound));
    match unless_capped(build_joint_table::<M>(&spec, &args.columns, args.caps.pair_cap))? {
        Ok(table) => {
            let local: Vec<usize> = (0..args.columns.len()).collect();
            joint_fields(&table, &local, &nb_auc, &mut out)?;
        }
        Err(reason) => {
            for key in ["joint_auc_star", "mutual_information", "assumption_gap"] {
                out.insert(key.into(), Value::Null);
            }
            out.insert("assumption_check".into(), json!("skipped"));
            out.insert("joint_skipped_reason".into(), json!(reason));
        }
    }
    emit("eval", Value::Object(out), args.out.as_deref())?;
    Ok(0)
}

fn reduction_json<M: Mass>(r: &ReductionRecord<M>) -> Value {
    json!({
        "phi": num(&r.phi),
        "normalized_auc": num(&r.normalized_auc),
        "predicted_normalized_auc": num(&r.predicted_normalized_auc),
        "mi_bits": finite(r.mi_bits),
        "mi_exact": r.mi_exact.as_ref().map(|e| e.to_string()),
        "auc_equals_phi": r.auc_equals_phi,
        "auc_matches_prediction": r.auc_matches_prediction,
        "mi_equals_phi": r.mi_equals_phi,
        "consistent": r.consistent(),
    })
}

fn eval_graph<M: Mass>(args: &EvalArgs) -> anyhow::Result<u8> {
    let path = args.graph.as_ref().expect("checked by caller");
    let graph = load_graph(path).with_context(|| format!("loading {}", path.display()))?;
    let instance: HardInstance<M> = build_hard_instance(&graph)?;
    let table = instance.joint.clone().with_pair_cap(args.caps.pair_cap);
    let mut set = args.subset.clone();
    set.sort_unstable();
    set.dedup();
    let record = verify_reduction(&instance, &set)?;
    let gap = table.assumption_gap(&set)?;

    let mut out = Map::new();
    out.insert("mode".into(), json!(mode_name(args.mode)));
    out.insert("graph".into(), json!({"n": graph.n(), "edges": graph.edges().len()}));
    out.insert("subset".into(), json!(set));
    out.insert("naive_bayes_auc_star".into(), num(&gap.naive_bayes));
    out.insert(
        "naive_bayes_normalized_auc".into(),
        num(&(gap.naive_bayes.clone() + &gap.naive_bayes - M::one())),
    );
    joint_fields(&table, &set, &gap.naive_bayes, &mut out)?;
    out.insert("reduction".into(), reduction_json(&record));
    emit("eval", Value::Object(out), args.out.as_deref())?;
    Ok(if record.consistent() { 0 } else { 1 })
}

fn graph_source(args: &GenHardArgs) -> anyhow::Result<Graph> {
    match (&args.graph, args.family) {
        (Some(path), _) => Ok(load_graph(path).with_context(|| format!("loading {}", path.display()))?),
        (None, Some(family)) => Ok(match family {
            FamilyArg::Complete => Graph::complete(args.n),
            FamilyArg::Path => Graph::path(args.n),
            FamilyArg::Cycle => Graph::cycle(args.n),
            FamilyArg::Star => Graph::star(args.n),
            FamilyArg::Gnp => {
                if !(0.0..=1.0).contains(&args.p) {
                    bail!("--p must lie in [0, 1]");
                }
                Graph::gnp(args.n, args.p, args.seed)
            }
        }),
        (None, None) => bail!("one of --graph or --family is required"),
    }
}

pub fn gen_hard(args: &GenHardArgs) -> anyhow::Result<u8> {
    let graph = graph_source(args)?;
    let instance: HardInstance<Exact> = build_hard_instance(&graph)?;
    let mut out = Map::new();
    out.insert("graph".into(), json!({"n": graph.n(), "edges": graph.edges()}));
    let violation = naive_bayes_violation(&instance)?;
    out.insert("naive_bayes_violation".into(), json!(violation.map(|(u, v)| [u, v])));

    if let Some(path) = &args.rows_out {
        let file = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        let rows = match args.sample {
            Some(m) => {
                let rows = sample_hard_dataset(&graph, m, args.seed)?;
                write_hard_csv(file, graph.n(), &rows)?;
                json!({"kind": "sampled", "rows": m, "seed": args.seed})
            }
            None => {
                write_weighted_rows(file, &instance.joint)?;
                json!({"kind": "exact_weighted", "rows": instance.joint.rows().count()})
            }
        };
        let mut rows = rows;
        rows["path"] = json!(path.display().to_string());
        out.insert("rows_out".into(), rows);
    }

    let mut code = 0;
    if let Some(subset) = &args.subset {
        let record = verify_reduction(&instance, subset)?;
        if !record.consistent() {
            code = 1;
        }
        let mut set = subset.clone();
        set.sort_unstable();
        set.dedup();
        out.insert("subset".into(), json!(set));
        out.insert("reduction".into(), reduction_json(&record));
    }
    emit("gen-hard", Value::Object(out), args.out.as_deref())?;
    Ok(code)
}

pub fn verify_theory(args: &VerifyArgs) -> anyhow::Result<u8> {
    let suite = TheorySuite {
        seed: args.seed,
        trials: args.trials,
        lemma_tol: args.tol,
        fourier_trials: args.fourier_trials.min(args.trials),
        corrupt_m_tilde: args.corrupt_m_tilde,
        ..TheorySuite::default()
    };
    let report = suite.run();
    let worst = |name: &str| {
        report
            .sections
            .get(name)
            .map(|s| s.worst_value)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let summary = if args.trials == 0 {
        json!({})
    } else {
        json!({
            "min_eigenvalue": finite(-worst("kernel_psd")),
            "max_bernoulli_lhs": finite(worst("bernoulli_float")),
            "max_bernoulli_exact_lhs": finite(worst("bernoulli_exact")),
            "max_general_lhs": finite(worst("general_exact")),
            "max_m_tilde_violation": finite(worst("m_tilde_nonnegative")),
            "max_fourier_deviation": finite(worst("inverse_fourier")),
        })
    };
    let failures: Vec<Value> = report
        .sections
        .iter()
        .filter_map(|(name, s)| {
            s.first_failure
                .as_ref()
                .map(|f| json!({"section": name, "instance": f}))
        })
        .collect();
    // Non-finite worst values (empty sections) serialize as null.
    let sections = serde_json::to_value(&report.sections)?;
    let body = json!({
        "seed": report.seed,
        "trials": report.trials,
        "fourier_trials": suite.fourier_trials,
        "passed": report.passed,
        "summary": summary,
        "failures": failures,
        "sections": sections,
    });
    emit("verify-theory", body, args.out.as_deref())?;
    Ok(if report.passed { 0 } else { 1 })
}
