pub mod abi;
pub mod bench;
pub mod events;
pub mod gateway;
pub mod indexer;
pub mod reward;
pub mod sim;
pub mod token;
pub mod types;
pub mod wallet;
