//! Python bindings for the cycle-time prediction library: dataset
//! synthesis and I/O, both model families with their trainers, prediction,
//! and the agreement metrics. Training reports cross the boundary as plain
//! dictionaries.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyString};

use cycletime::anfis::{
    anfis_split_spec, train_hybrid, FisModel as CoreFisModel, HybridConfig, SugenoOrder,
};
use cycletime::ann::{model_kind_of, NetworkModel as CoreNetworkModel, Topology};
use cycletime::dataset::{self, normalize, split, Dataset as CoreDataset};
use cycletime::error::Error;
use cycletime::metrics;
use cycletime::trainers::{train, Algorithm, TrainConfig, TrainReport, ANN_SPLIT};

/// I/O failures become OSError; everything else is a ValueError.
fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_algo(name: &str) -> PyResult<Algorithm> {
    Algorithm::ALL
        .iter()
        .copied()
        .find(|a| a.short_name() == name)
        .ok_or_else(|| {
            let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.short_name()).collect();
            PyValueError::new_err(format!("unknown algorithm {name:?}; one of {names:?}"))
        })
}

fn parse_order(name: &str) -> PyResult<SugenoOrder> {
    match name {
        "constant" => Ok(SugenoOrder::Constant),
        "linear" => Ok(SugenoOrder::Linear),
        _ => Err(PyValueError::new_err(format!(
            "unknown order {name:?}; one of [\"constant\", \"linear\"]"
        ))),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_any()
        }
    })
}

fn report_to_dict(py: Python<'_>, report: &TrainReport) -> PyResult<Py<PyDict>> {
    let value = serde_json::to_value(report)
        .map_err(|e| PyValueError::new_err(format!("report serialization: {e}")))?;
    Ok(json_to_py(py, &value)?
        .cast_into::<PyDict>()
        .map_err(PyErr::from)?
        .unbind())
}

/// In-memory process dataset: three input columns and the cycle time.
#[pyclass(module = "cycletime_py")]
struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    /// Builds a dataset from input rows and targets.
    #[staticmethod]
    fn from_rows(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> PyResult<Self> {
        Ok(Dataset {
            inner: CoreDataset::from_rows(inputs, targets).map_err(err)?,
        })
    }

    #[getter]
    fn input_names(&self) -> Vec<String> {
        self.inner.input_names().to_vec()
    }

    #[getter]
    fn target_name(&self) -> String {
        self.inner.target_name().to_string()
    }

    fn inputs(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(|(x, _)| x.to_vec()).collect()
    }

    fn targets(&self) -> Vec<f64> {
        self.inner.targets().to_vec()
    }

    fn row(&self, i: usize) -> PyResult<(Vec<f64>, f64)> {
        if i >= self.inner.len() {
            return Err(PyValueError::new_err(format!(
                "row {i} out of range for {} rows",
                self.inner.len()
            )));
        }
        Ok((self.inner.input_row(i).to_vec(), self.inner.target(i)))
    }

    fn save_csv(&self, path: &str) -> PyResult<()> {
        dataset::write_csv(&self.inner, std::path::Path::new(path)).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} rows, inputs {:?}, target {:?})",
            self.inner.len(),
            self.inner.input_names(),
            self.inner.target_name()
        )
    }
}

/// Feedforward network model over normalized inputs.
#[pyclass(module = "cycletime_py")]
struct NetworkModel {
    inner: CoreNetworkModel,
}

#[pymethods]
impl NetworkModel {
    /// Predicted cycle time in seconds for one raw input row.
    fn predict(&self, inputs: Vec<f64>) -> PyResult<f64> {
        self.inner.predict(&inputs).map_err(err)
    }

    /// Predicted cycle times for every row of a dataset.
    fn predict_batch(&self, data: &Dataset) -> PyResult<Vec<f64>> {
        self.inner.predict_dataset(&data.inner).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, self.inner.to_json().map_err(err)?)
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let json =
            std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(NetworkModel {
            inner: CoreNetworkModel::from_json(&json).map_err(err)?,
        })
    }

    #[getter]
    fn hidden_widths(&self) -> Vec<usize> {
        self.inner.topology.hidden_widths.clone()
    }

    #[getter]
    fn weight_count(&self) -> usize {
        self.inner.weights.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "NetworkModel(hidden {:?}, {} weights)",
            self.inner.topology.hidden_widths,
            self.inner.weights.len()
        )
    }
}

/// Sugeno fuzzy inference model over normalized inputs.
#[pyclass(module = "cycletime_py")]
struct FisModel {
    inner: CoreFisModel,
}

#[pymethods]
impl FisModel {
    /// Predicted cycle time in seconds for one raw input row.
    fn predict(&self, inputs: Vec<f64>) -> PyResult<f64> {
        self.inner.predict(&inputs).map_err(err)
    }

    /// Predicted cycle times for every row of a dataset.
    fn predict_batch(&self, data: &Dataset) -> PyResult<Vec<f64>> {
        self.inner.predict_dataset(&data.inner).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, self.inner.to_json().map_err(err)?)
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let json =
            std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(FisModel {
            inner: CoreFisModel::from_json(&json).map_err(err)?,
        })
    }

    #[getter]
    fn rule_count(&self) -> usize {
        self.inner.rule_count()
    }

    #[getter]
    fn mfs_per_input(&self) -> Vec<usize> {
        self.inner.mfs.iter().map(Vec::len).collect()
    }

    #[getter]
    fn order(&self) -> &'static str {
        self.inner.order.report_name()
    }

    fn __repr__(&self) -> String {
        format!(
            "FisModel({:?} membership functions, {} order, {} rules)",
            self.mfs_per_input(),
            self.inner.order.report_name(),
            self.inner.rule_count()
        )
    }
}

/// Draws the synthetic process dataset.
#[pyfunction]
#[pyo3(signature = (n=600, seed=42, noise=0.1))]
fn generate_synthetic(n: usize, seed: u64, noise: f64) -> PyResult<Dataset> {
    Ok(Dataset {
        inner: dataset::generate_synthetic(n, seed, noise).map_err(err)?,
    })
}

/// Loads a four-column process CSV.
#[pyfunction]
fn load_csv(path: &str) -> PyResult<Dataset> {
    Ok(Dataset {
        inner: dataset::load_csv(std::path::Path::new(path)).map_err(err)?,
    })
}

/// Trains one network algorithm; returns the model and its report dict.
#[pyfunction]
#[pyo3(signature = (data, algo="lm", hidden=vec![8, 8], seed=42, epochs=1000,
       goal=0.0, learning_rate=0.01, momentum=0.9))]
#[allow(clippy::too_many_arguments)]
fn train_ann(
    py: Python<'_>,
    data: &Dataset,
    algo: &str,
    hidden: Vec<usize>,
    seed: u64,
    epochs: usize,
    goal: f64,
    learning_rate: f64,
    momentum: f64,
) -> PyResult<(NetworkModel, Py<PyDict>)> {
    let algorithm = parse_algo(algo)?;
    let (normalized, params) = normalize(&data.inner).map_err(err)?;
    let split_data = split(&normalized, &ANN_SPLIT, seed).map_err(err)?;
    let topology = Topology::new(data.inner.input_dim(), hidden);
    let model0 = CoreNetworkModel::init(&topology, seed, params).map_err(err)?;
    let mut config = TrainConfig::new(algorithm);
    config.max_epochs = epochs;
    config.goal_mse = goal;
    config.learning_rate = learning_rate;
    config.momentum = momentum;
    let (trained, report) = train(&model0, &split_data, &config).map_err(err)?;
    Ok((NetworkModel { inner: trained }, report_to_dict(py, &report)?))
}

/// Trains one fuzzy inference cell; returns the model and its report dict.
#[pyfunction]
#[pyo3(signature = (data, n_mfs=2, order="linear", seed=42, epochs=50, learning_rate=0.01))]
fn train_anfis(
    py: Python<'_>,
    data: &Dataset,
    n_mfs: usize,
    order: &str,
    seed: u64,
    epochs: usize,
    learning_rate: f64,
) -> PyResult<(FisModel, Py<PyDict>)> {
    let order = parse_order(order)?;
    let (normalized, params) = normalize(&data.inner).map_err(err)?;
    let split_data = split(&normalized, &anfis_split_spec(data.inner.len()), seed).map_err(err)?;
    let dim = data.inner.input_dim();
    let fis0 = CoreFisModel::grid_partition(&vec![(-1.0, 1.0); dim], &vec![n_mfs; dim], order, params)
        .map_err(err)?;
    let config = HybridConfig {
        max_epochs: epochs,
        lr_premise: learning_rate,
        ..HybridConfig::default()
    };
    let (fis, report) = train_hybrid(&fis0, &split_data, &config).map_err(err)?;
    Ok((FisModel { inner: fis }, report_to_dict(py, &report)?))
}

/// Loads a saved model of either kind, dispatching on its `model_kind` tag.
#[pyfunction]
fn load_model(py: Python<'_>, path: &str) -> PyResult<Py<PyAny>> {
    let json = std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
    match model_kind_of(&json).map_err(err)?.as_str() {
        "ann" => Ok(NetworkModel {
            inner: CoreNetworkModel::from_json(&json).map_err(err)?,
        }
        .into_pyobject(py)?
        .into_any()
        .unbind()),
        "anfis" => Ok(FisModel {
            inner: CoreFisModel::from_json(&json).map_err(err)?,
        }
        .into_pyobject(py)?
        .into_any()
        .unbind()),
        other => Err(PyValueError::new_err(format!("unknown model kind {other:?}"))),
    }
}

/// Mean squared error between two equal-length sequences.
#[pyfunction]
fn mse(actual: Vec<f64>, predicted: Vec<f64>) -> PyResult<f64> {
    metrics::mse(&actual, &predicted).map_err(err)
}

/// Pearson correlation between two equal-length sequences.
#[pyfunction]
fn pearson_r(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    metrics::pearson_r(&x, &y).map_err(err)
}

#[pymodule]
fn cycletime_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<NetworkModel>()?;
    m.add_class::<FisModel>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(train_ann, m)?)?;
    m.add_function(wrap_pyfunction!(train_anfis, m)?)?;
    m.add_function(wrap_pyfunction!(load_model, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_r, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for algo in Algorithm::ALL {
            assert_eq!(parse_algo(algo.short_name()).unwrap(), algo);
        }
        assert!(parse_algo("nadam").is_err());
    }

    #[test]
    fn order_names_round_trip() {
        assert_eq!(parse_order("constant").unwrap(), SugenoOrder::Constant);
        assert_eq!(parse_order("linear").unwrap(), SugenoOrder::Linear);
        assert!(parse_order("quadratic").is_err());
    }

    #[test]
    fn reports_convert_to_dicts() {
        Python::initialize();
        let raw = dataset::generate_synthetic(60, 3, 0.1).unwrap();
        let (normalized, params) = normalize(&raw).unwrap();
        let data = split(&normalized, &ANN_SPLIT, 3).unwrap();
        let topology = Topology::new(3, vec![4]);
        let model0 = CoreNetworkModel::init(&topology, 3, params).unwrap();
        let mut config = TrainConfig::new(Algorithm::Lm);
        config.max_epochs = 5;
        let (_, report) = train(&model0, &data, &config).unwrap();
        Python::attach(|py| {
            let dict = report_to_dict(py, &report).unwrap();
            let dict = dict.bind(py);
            assert_eq!(
                dict.get_item("algorithm")
                    .unwrap()
                    .unwrap()
                    .extract::<String>()
                    .unwrap(),
                "trainlm"
            );
            let epochs: usize = dict
                .get_item("epochs_run")
                .unwrap()
                .unwrap()
                .extract()
                .unwrap();
            assert!(epochs >= 1 && epochs <= 5);
            assert!(dict.get_item("trace").unwrap().unwrap().len().unwrap() == epochs);
        });
    }
}
