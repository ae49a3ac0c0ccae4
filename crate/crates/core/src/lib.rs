pub mod assembly;
pub mod components;
pub mod fcchp;
pub mod io;
pub mod linearize;
pub mod lp;
pub mod milp;
pub mod solve;
