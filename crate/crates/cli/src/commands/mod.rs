pub mod compare;
pub mod gen;
pub mod gradcheck;
pub mod train;
