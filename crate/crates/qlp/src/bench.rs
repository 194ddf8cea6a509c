//! Bench grid. Placeholder.
