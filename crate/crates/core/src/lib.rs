pub mod baseline;
pub mod export;
pub mod minilang;
pub mod projection;
pub mod tracegraph;
pub mod varcore;
pub mod varinterp;
