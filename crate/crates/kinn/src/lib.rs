//! IO, file formats and reporting around `kinn-core`.
