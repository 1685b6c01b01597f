pub mod check_operator;
pub mod compare;
pub mod equilibria;
pub mod simulate;
