//! Test problems. Placeholder.
