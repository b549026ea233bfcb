use pyo3::prelude::*;

#[pymodule]
fn conles_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
