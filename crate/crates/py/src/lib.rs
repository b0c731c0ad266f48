use pyo3::prelude::*;

#[pymodule]
fn peftlab_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
