pub mod fit;
pub mod report;
pub mod simulate;
pub mod study;
pub mod tune;
