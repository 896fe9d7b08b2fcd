pub mod bench;
pub mod inertia;
pub mod problems;
pub mod rbd;
pub mod solver;
