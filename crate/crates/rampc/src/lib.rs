pub mod backends;
pub mod config;
pub mod output;
pub mod plots;
pub mod sim;
pub mod verify;
