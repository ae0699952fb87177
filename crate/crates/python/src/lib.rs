//! Python bindings: naive-Bayes objectives and selection, hardness instances, the theory
//! suite and a few measure helpers. Exact values come back as `fractions.Fraction`.

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use crossgreed::hardgen::{build_hard_instance, verify_reduction, Graph};
use crossgreed::ingest::{build_joint_table, build_objective, load_dataset, DatasetSpec};
use crossgreed::joint_eval::JointTable;
use crossgreed::measures::{commutator_tv as commutator_tv_impl, tv_distance as tv_distance_impl};
use crossgreed::selector::select as select_impl;
use crossgreed::theory_lab::TheorySuite;
use crossgreed::{
    ConditionalPair, ConvolveConfig, Exact, Mass, Measure, NbObjective, SearchReport, SelectionMethod, SelectorConfig,
};

create_exception!(
    crossgreed_py,
    CapacityError,
    PyRuntimeError,
    "An enumeration or atom cap was exceeded."
);

fn to_py_err(e: crossgreed::Error) -> PyErr {
    match e {
        e if e.is_capacity() => CapacityError::new_err(e.to_string()),
        crossgreed::Error::Io(io) => PyOSError::new_err(io.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for crossgreed::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

/// `Fraction` in exact mode, `float` otherwise.
fn value<'py, M: Mass>(py: Python<'py>, x: &M) -> PyResult<Bound<'py, PyAny>> {
    if M::is_exact() {
        py.import("fractions")?.getattr("Fraction")?.call1((x.to_string(),))
    } else {
        Ok(x.to_f64().into_pyobject(py)?.into_any())
    }
}

fn values<'py, M: Mass>(py: Python<'py>, xs: &[M]) -> PyResult<Vec<Bound<'py, PyAny>>> {
    xs.iter().map(|x| value(py, x)).collect()
}

fn float_measure(masses: Vec<f64>) -> PyResult<Measure<f64>> {
    Measure::from_masses(masses).py()
}

enum Inner {
    Exact(NbObjective<Exact>),
    Float(NbObjective<f64>),
}

/// Dispatches `$body` on the objective's mode with `$obj` bound to the typed objective.
macro_rules! with_objective {
    ($inner:expr, $obj:ident => $body:expr) => {
        match $inner {
            Inner::Exact($obj) => $body,
            Inner::Float($obj) => $body,
        }
    };
}

/// The naive-Bayes normalized-AUC objective `F(A) = 2·auc*(A) − 1` over a set of columns.
#[pyclass(frozen, module = "crossgreed_py")]
struct Objective {
    inner: Inner,
    names: Vec<String>,
}

fn convolve(prune_eps: f64, atom_cap: Option<usize>) -> ConvolveConfig {
    ConvolveConfig {
        prune_eps,
        atom_cap: atom_cap.unwrap_or(crossgreed::score_dist::DEFAULT_ATOM_CAP),
    }
}

fn report_dict<'py, M: Mass>(py: Python<'py>, r: &SearchReport<M>, names: &[String]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("selected", &r.selected)?;
    d.set_item(
        "selected_names",
        r.selected.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>(),
    )?;
    d.set_item("gains", values(py, &r.gains)?)?;
    d.set_item("f_trajectory", values(py, &r.f_trajectory)?)?;
    d.set_item("value", value(py, &r.value())?)?;
    d.set_item("evaluations", r.evaluations)?;
    d.set_item("early_stopped", r.early_stopped)?;
    d.set_item("guarantee", r.guarantee)?;
    d.set_item("stale_bound_violations", r.stale_bound_violations)?;
    Ok(d)
}

#[pymethods]
impl Objective {
    /// Exact objective from per-column value counts `(counts_label1, counts_label0)`.
    #[staticmethod]
    #[pyo3(signature = (columns, names = None))]
    fn from_counts(columns: Vec<(Vec<u64>, Vec<u64>)>, names: Option<Vec<String>>) -> PyResult<Self> {
        let pairs = columns
            .iter()
            .map(|(c1, c0)| ConditionalPair::new(Measure::from_counts(c1)?, Measure::from_counts(c0)?))
            .collect::<crossgreed::Result<Vec<_>>>()
            .py()?;
        let n = pairs.len();
        let obj = NbObjective::from_pairs(pairs, ConvolveConfig::default()).py()?;
        Self::named(Inner::Exact(obj), n, names)
    }

    /// Float objective from per-column probability vectors `(p_label1, p_label0)`.
    #[staticmethod]
    #[pyo3(signature = (columns, names = None, prune_eps = 0.0, atom_cap = None))]
    fn from_probabilities(
        columns: Vec<(Vec<f64>, Vec<f64>)>,
        names: Option<Vec<String>>,
        prune_eps: f64,
        atom_cap: Option<usize>,
    ) -> PyResult<Self> {
        let pairs = columns
            .into_iter()
            .map(|(p1, p0)| ConditionalPair::new(float_measure(p1)?, float_measure(p0)?).py())
            .collect::<PyResult<Vec<_>>>()?;
        let n = pairs.len();
        let obj = NbObjective::from_pairs(pairs, convolve(prune_eps, atom_cap)).py()?;
        Self::named(Inner::Float(obj), n, names)
    }

    /// Objective estimated from a delimited file with a header row and a 0/1 label column.
    #[staticmethod]
    #[pyo3(signature = (path, label = "label", mode = "exact", alpha = 0.0, delimiter = ',', prune_eps = 0.0, atom_cap = None))]
    fn from_csv(
        path: std::path::PathBuf,
        label: &str,
        mode: &str,
        alpha: f64,
        delimiter: char,
        prune_eps: f64,
        atom_cap: Option<usize>,
    ) -> PyResult<Self> {
        if !delimiter.is_ascii() {
            return Err(PyValueError::new_err("delimiter must be ASCII"));
        }
        let spec = DatasetSpec::new(path, label)
            .with_delimiter(delimiter as u8)
            .with_alpha(alpha);
        let data = load_dataset(&spec).py()?;
        let cfg = convolve(prune_eps, atom_cap);
        let inner = match mode {
            "exact" => Inner::Exact(build_objective(&data, alpha, cfg).py()?),
            "float" => Inner::Float(build_objective(&data, alpha, cfg).py()?),
            other => {
                return Err(PyValueError::new_err(format!(
                    "mode must be 'exact' or 'float', got {other:?}"
                )))
            }
        };
        Ok(Objective {
            inner,
            names: data.columns.into_iter().map(|c| c.name).collect(),
        })
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner {
            Inner::Exact(_) => "exact",
            Inner::Float(_) => "float",
        }
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn __len__(&self) -> usize {
        self.names.len()
    }

    fn __repr__(&self) -> String {
        format!("Objective(mode={:?}, columns={})", self.mode(), self.names.len())
    }

    /// `2·auc*(A) − 1` under the naive-Bayes model.
    fn f<'py>(&self, py: Python<'py>, columns: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
        with_objective!(&self.inner, o => value(py, &py.detach(|| o.f_of(&columns)).py()?))
    }

    fn auc_star<'py>(&self, py: Python<'py>, columns: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
        with_objective!(&self.inner, o => value(py, &py.detach(|| o.auc_star(&columns)).py()?))
    }

    /// `(F(A), error_bound)`; the bound is nonzero only with pruning.
    fn f_with_bound<'py>(&self, py: Python<'py>, columns: Vec<usize>) -> PyResult<(Bound<'py, PyAny>, f64)> {
        with_objective!(&self.inner, o => {
            let v = py.detach(|| o.f_with_bound(&columns)).py()?;
            Ok((value(py, &v.value)?, v.error_bound))
        })
    }

    /// Selects up to `k` columns. `method` is "greedy", "lazy" or "exhaustive".
    #[pyo3(signature = (k, method = "lazy", pad_to_k = false, exhaustive_cap = 1_000_000))]
    fn select<'py>(
        &self,
        py: Python<'py>,
        k: usize,
        method: &str,
        pad_to_k: bool,
        exhaustive_cap: u128,
    ) -> PyResult<Bound<'py, PyDict>> {
        let method = match method {
            "greedy" => SelectionMethod::Greedy,
            "lazy" => SelectionMethod::LazyGreedy,
            "exhaustive" => SelectionMethod::Exhaustive,
            other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
        };
        let cfg = SelectorConfig {
            pad_to_k,
            exhaustive_cap,
            parallel: true,
        };
        with_objective!(&self.inner, o => {
            let u = o.column_ids();
            let r = py.detach(|| select_impl(o, &u, k, method, &cfg)).py()?;
            report_dict(py, &r, &self.names)
        })
    }
}

impl Objective {
    fn named(inner: Inner, n: usize, names: Option<Vec<String>>) -> PyResult<Self> {
        let names = names.unwrap_or_else(|| (0..n).map(|i| format!("c{i}")).collect());
        if names.len() != n {
            return Err(PyValueError::new_err(format!("{} names for {n} columns", names.len())));
        }
        Ok(Objective { inner, names })
    }
}

/// Total variation distance of two probability vectors.
#[pyfunction]
fn tv_distance(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    tv_distance_impl(&float_measure(p)?, &float_measure(q)?).py()
}

/// `d_TV(P×Q, Q×P)`; the maximum AUC of the pair is `½ + ½·commutator_tv`.
#[pyfunction]
fn commutator_tv(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    commutator_tv_impl(&float_measure(p)?, &float_measure(q)?).py()
}

fn joint_dict<'py, M: Mass>(py: Python<'py>, t: &JointTable<M>, set: &[usize]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let gap = py.detach(|| t.assumption_gap(set)).py()?;
    let mi = py.detach(|| t.mutual_information(set)).py()?;
    d.set_item("joint_auc_star", value(py, &gap.joint)?)?;
    d.set_item("naive_bayes_auc_star", value(py, &gap.naive_bayes)?)?;
    d.set_item("mutual_information_bits", mi.bits)?;
    d.set_item("independence_gap", value(py, &t.independence_gap(set).py()?)?)?;
    Ok(d)
}

/// Joint and naive-Bayes maximum AUC, mutual information and independence gap of the
/// cross of `columns` in a data file.
#[pyfunction]
#[pyo3(signature = (path, columns, label = "label", mode = "exact"))]
fn evaluate_csv<'py>(
    py: Python<'py>,
    path: std::path::PathBuf,
    columns: Vec<String>,
    label: &str,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = DatasetSpec::new(path, label);
    let cap = crossgreed::joint_eval::DEFAULT_PAIR_CAP;
    let ids: Vec<usize> = (0..columns.len()).collect();
    match mode {
        "exact" => joint_dict(py, &build_joint_table::<Exact>(&spec, &columns, cap).py()?, &ids),
        "float" => joint_dict(py, &build_joint_table::<f64>(&spec, &columns, cap).py()?, &ids),
        other => Err(PyValueError::new_err(format!(
            "mode must be 'exact' or 'float', got {other:?}"
        ))),
    }
}

/// Reduction identities of the densest-subgraph instance for `subset`: `phi`, the joint
/// normalized AUC (`phi·(2 − phi)`) and the mutual information (`phi`), all exact.
#[pyfunction]
fn hardness_record<'py>(
    py: Python<'py>,
    n: usize,
    edges: Vec<(usize, usize)>,
    subset: Vec<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let g = Graph::new(n, edges).py()?;
    let inst = build_hard_instance::<Exact>(&g).py()?;
    let r = verify_reduction(&inst, &subset).py()?;
    let d = PyDict::new(py);
    d.set_item("phi", value(py, &r.phi)?)?;
    d.set_item("normalized_auc", value(py, &r.normalized_auc)?)?;
    d.set_item("predicted_normalized_auc", value(py, &r.predicted_normalized_auc)?)?;
    d.set_item(
        "mutual_information",
        r.mi_exact.as_ref().map(|m| value(py, m)).transpose()?,
    )?;
    d.set_item("consistent", r.consistent())?;
    Ok(d)
}

/// Runs the randomized lemma checks. Returns `{"passed": bool, "sections": {name: {...}}}`.
#[pyfunction]
#[pyo3(signature = (seed = 0, trials = 100, fourier_trials = 5))]
fn verify_theory<'py>(py: Python<'py>, seed: u64, trials: u64, fourier_trials: u64) -> PyResult<Bound<'py, PyDict>> {
    let suite = TheorySuite {
        seed,
        trials,
        fourier_trials: fourier_trials.min(trials),
        ..TheorySuite::default()
    };
    let report = py.detach(|| suite.run());
    let sections = PyDict::new(py);
    for (name, s) in &report.sections {
        let d = PyDict::new(py);
        d.set_item("checked", s.checked)?;
        d.set_item("failures", s.failures)?;
        d.set_item("bound", s.bound)?;
        d.set_item("worst_value", s.worst_value)?;
        d.set_item("first_failure", s.first_failure.clone())?;
        sections.set_item(name, d)?;
    }
    let out = PyDict::new(py);
    out.set_item("passed", report.passed)?;
    out.set_item("sections", sections)?;
    Ok(out)
}

#[pymodule]
fn crossgreed_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Objective>()?;
    m.add("CapacityError", m.py().get_type::<CapacityError>())?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add_function(wrap_pyfunction!(commutator_tv, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_csv, m)?)?;
    m.add_function(wrap_pyfunction!(hardness_record, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theory, m)?)?;
    Ok(())
}
