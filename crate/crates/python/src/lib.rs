//! Python bindings: parameters, symbol strings, distances, the analytics
//! formulas and a minimal in-memory client/cloud pipeline.

use num_traits::ToPrimitive;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use ygg_core::{
    analysis, metrics, seeded_rng, symstring, ClientStore, CloudStore, DeletionStrategy,
};

fn err(e: ygg_core::Error) -> PyErr {
    match e {
        ygg_core::Error::UnknownId(id) => PyKeyError::new_err(format!("unknown id {id}")),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(frozen)]
#[derive(Clone, Copy)]
struct Params {
    inner: symstring::Params,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (k, n_o, n_b, tau=0, s_h=64))]
    fn new(k: u8, n_o: u32, n_b: u32, tau: u32, s_h: u16) -> PyResult<Self> {
        Ok(Params { inner: symstring::Params::new(k, n_o, n_b, tau, s_h).map_err(err)? })
    }

    #[getter]
    fn k(&self) -> u8 {
        self.inner.k
    }
    #[getter]
    fn n_o(&self) -> u32 {
        self.inner.n_o
    }
    #[getter]
    fn n_b(&self) -> u32 {
        self.inner.n_b
    }
    #[getter]
    fn tau(&self) -> u32 {
        self.inner.tau
    }
    #[getter]
    fn s_h(&self) -> u16 {
        self.inner.s_h
    }

    fn deletions(&self) -> u32 {
        self.inner.deletions()
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(k={}, n_o={}, n_b={}, tau={}, s_h={})",
            self.inner.k, self.inner.n_o, self.inner.n_b, self.inner.tau, self.inner.s_h
        )
    }
}

#[pyclass]
#[derive(Clone)]
struct SymbolString {
    inner: symstring::SymbolString,
}

#[pymethods]
impl SymbolString {
    #[new]
    fn new(k: u8, symbols: Vec<u32>) -> PyResult<Self> {
        Ok(SymbolString { inner: symstring::SymbolString::new(k, symbols).map_err(err)? })
    }

    #[staticmethod]
    fn unpack(data: Vec<u8>, k: u8, count: usize) -> PyResult<Self> {
        Ok(SymbolString { inner: symstring::SymbolString::unpack(&data, k, count).map_err(err)? })
    }

    fn pack(&self) -> Vec<u8> {
        self.inner.pack()
    }

    fn symbols(&self) -> Vec<u32> {
        self.inner.symbols().to_vec()
    }

    #[getter]
    fn k(&self) -> u8 {
        self.inner.k()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("SymbolString(k={}, len={})", self.inner.k(), self.inner.len())
    }
}

#[pyfunction]
fn hamming(a: &SymbolString, b: &SymbolString) -> PyResult<u64> {
    metrics::hamming(&a.inner, &b.inner).map_err(err)
}

#[pyfunction]
fn swap_distance(a: &SymbolString, b: &SymbolString) -> PyResult<u64> {
    metrics::swap_distance(&a.inner, &b.inner).map_err(err)
}

#[pyfunction]
fn damerau_levenshtein(a: &SymbolString, b: &SymbolString) -> PyResult<u64> {
    metrics::damerau_levenshtein(&a.inner, &b.inner).map_err(err)
}

/// Exact preimage count as a Python int (arbitrary precision).
#[pyfunction]
fn n_preimages(py: Python<'_>, k: u8, n_o: u32, n_b: u32) -> PyResult<PyObject> {
    let (count, _) = analysis::n_preimages(k, n_o, n_b).map_err(err)?;
    let s = count.to_str_radix(10);
    let int = py.import("builtins")?.getattr("int")?.call1((s,))?;
    Ok(int.unbind())
}

/// Uncertainty metric rendered in scientific notation.
#[pyfunction]
fn uncertainty(k: u8, n_o: u32, n_b: u32) -> PyResult<String> {
    Ok(analysis::uncertainty(k, n_o, n_b).map_err(err)?.u_metric_sci(3))
}

#[pyfunction]
#[pyo3(signature = (params, r_num, r_den))]
fn ratios(params: &Params, r_num: u64, r_den: u64) -> PyResult<(f64, f64, f64)> {
    if r_den == 0 {
        return Err(PyValueError::new_err("r_den must be nonzero"));
    }
    let r = num_rational::BigRational::new(r_num.into(), r_den.into());
    let ucr = analysis::ucr_formula(&params.inner).map_err(err)?;
    let ccr = analysis::ccr_formula(&params.inner, &r).map_err(err)?;
    let gcr = analysis::gcr_formula(&params.inner, &r).map_err(err)?;
    Ok((
        ucr.to_f64().unwrap_or(f64::NAN),
        ccr.to_f64().unwrap_or(f64::NAN),
        gcr.to_f64().unwrap_or(f64::NAN),
    ))
}

/// In-memory client plus cloud pair driving the whole protocol.
#[pyclass]
struct Pipeline {
    client: ClientStore,
    cloud: CloudStore,
    rng: rand_chacha::ChaCha8Rng,
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (params, seed=0))]
    fn new(params: &Params, seed: u64) -> PyResult<Self> {
        Ok(Pipeline {
            client: ClientStore::new(params.inner).map_err(err)?,
            cloud: CloudStore::new(params.inner).map_err(err)?,
            rng: seeded_rng(seed),
        })
    }

    /// Uploads one original string through both sides; returns its id.
    fn put(&mut self, f: &SymbolString) -> PyResult<u64> {
        let (id, base) = self
            .client
            .upload(DeletionStrategy::UniformRandom, &f.inner, &mut self.rng)
            .map_err(err)?;
        self.cloud.compress(id, &base).map_err(err)?;
        Ok(id)
    }

    /// Reconstructs the original string for `id` exactly.
    fn get(&self, id: u64) -> PyResult<SymbolString> {
        let base = self.cloud.decompress(id).map_err(err)?;
        Ok(SymbolString { inner: self.client.get(id, &base).map_err(err)? })
    }

    fn n_bases(&self) -> usize {
        self.cloud.bases.len()
    }

    fn client_bits(&self) -> u64 {
        self.client.storage_bits()
    }

    fn cloud_bits(&self) -> u64 {
        self.cloud.storage_bits()
    }
}

#[pymodule]
fn ygg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_class::<SymbolString>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(hamming, m)?)?;
    m.add_function(wrap_pyfunction!(swap_distance, m)?)?;
    m.add_function(wrap_pyfunction!(damerau_levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(n_preimages, m)?)?;
    m.add_function(wrap_pyfunction!(uncertainty, m)?)?;
    m.add_function(wrap_pyfunction!(ratios, m)?)?;
    Ok(())
}
