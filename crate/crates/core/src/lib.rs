pub mod hypcore;
pub mod koebe;
pub mod centers;
pub mod fields;
pub mod solver;
