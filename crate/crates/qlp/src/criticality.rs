//! Criticality measures. Placeholder.
