//! Annotation backend: serves Markdown documents, stores line labels and
//! ranks labeled documents for review.

pub mod api;
pub mod store;

pub use api::{router, serve_blocking, ANNOTATOR_HEADER};
pub use store::{
    review_order, AnnotationTask, LabelSubmission, ReviewEntry, Status, StoreConfig, StoreError, StoreStats, TaskLine,
    TaskStore,
};
