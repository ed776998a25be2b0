pub mod check_symmetry;
pub mod compare;
pub mod eval;
pub mod train;
