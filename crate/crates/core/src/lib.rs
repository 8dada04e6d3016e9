pub mod atlas;
pub mod charspec;
pub mod cli;
pub mod expr;
pub mod model;
pub mod numeric;
pub mod output;
pub mod profile;
pub mod speeds;
pub mod verify;
