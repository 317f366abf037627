pub mod nat;
pub mod syntax;

pub use nat::Nat;
