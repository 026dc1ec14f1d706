/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Input violates a contract (bad record, bad parameters).
    Validation,
    /// The data lacks what an operation needs (missing fields, endpoint
    /// without logprob support).
    Capability,
    /// Filesystem or network failure.
    Io,
}
