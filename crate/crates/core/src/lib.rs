pub mod metrics;
pub mod model;
pub mod protocols;
pub mod report;
pub mod scenario;
pub mod sim;
