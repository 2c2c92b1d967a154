//! Library side of the command-line tool: the JSON file formats shared by
//! the binary, its tests, and anything that wants to read or write the
//! bundled data programmatically.

pub mod format;
