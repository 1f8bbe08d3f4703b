pub mod game;
pub mod maximin;
pub mod simplex;

pub use game::matrix_game;
pub use maximin::concave_maximin;
pub use simplex::{lp_solve, LpProblem, LpSolution, LpStatus, Sense};
