pub mod analyze;
pub mod instance_space;
pub mod operator_study;
pub mod runs;

pub use analyze::{analyze, AnalyzeOptions, AnalyzeRow};
pub use instance_space::{instance_space, InstanceSpaceOptions, InstanceSpaceReport};
pub use operator_study::{operator_study, OperatorStudyOptions, OperatorStudyReport};
pub use runs::{generate, versus, RunOptions, RunOutcome, RunReport};
