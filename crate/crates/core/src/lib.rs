pub mod bath;
pub mod dynamics;
pub mod ehrenfest;
pub mod opalg;
pub mod oracle;
pub mod states;
