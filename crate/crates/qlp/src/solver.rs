//! Outer loop: beta backtracking, descent verification, stopping tests,
//! and rho continuation. Placeholder while lower modules are built.
