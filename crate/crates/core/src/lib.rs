pub mod atomic;
pub mod archive;
pub mod selection;
pub mod html2md;
pub mod extractor;
pub mod filters;
pub mod dedup;
pub mod pii;
pub mod cloze;
pub mod pipeline;
