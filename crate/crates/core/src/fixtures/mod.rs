//! Fixture generators: stock primitive meshes, the crown assignment, a
//! corpus of typical mistakes and randomized scenes for property tests.

pub mod corpus;
pub mod random;
pub mod shapes;
