pub mod archive;
pub mod cli;
pub mod notation;
pub mod rdf;
pub mod render;
pub mod resolver;
pub mod service;
pub mod store;
