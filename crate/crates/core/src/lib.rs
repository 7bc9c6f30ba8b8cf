pub mod align;
pub mod classify;
pub mod embed;
pub mod expose;
pub mod ingest;
pub mod isbn;
pub mod kgstore;
