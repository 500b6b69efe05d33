use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate candidate edge between user {user} and item {item}")]
    DuplicateEdge { user: usize, item: usize },
    #[error("edge {edge} has invalid relevance {relevance}")]
    InvalidRelevance { edge: usize, relevance: f64 },
    #[error("user {user} has display constraint 0")]
    ZeroCapacity { user: usize },
    #[error("edge {edge} references {what} {index} out of range")]
    IndexOutOfRange { edge: usize, what: &'static str, index: usize },
    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),
    #[error("grouping does not match the graph: {0}")]
    GroupingMismatch(String),
    #[error("invalid threshold entry: {0}")]
    InvalidThreshold(String),
    #[error("diversity parameters must be finite and non-negative (beta={beta}, mu={mu})")]
    InvalidParams { beta: f64, mu: f64 },
    #[error("edge {0} is already selected")]
    EdgeAlreadySelected(usize),
    #[error("user {user} is already at its display constraint {capacity}")]
    CapacityExceeded { user: usize, capacity: u32 },
    #[error("edge index {0} does not exist")]
    UnknownEdge(usize),
    #[error("{side} grouping is not disjoint; the flow reduction needs a partition")]
    NonDisjointGrouping { side: &'static str },
    #[error("{side} {index} is incident to a candidate edge but belongs to no group")]
    UngroupedEntity { side: &'static str, index: usize },
    #[error("cost scale {scale} overflows the integer cost domain")]
    ScaleOverflow { scale: i64 },
    #[error("malformed flow network: {0}")]
    MalformedNetwork(String),
    #[error("flow network contains a negative-cost cycle with residual capacity")]
    NegativeCycle,
    #[error("no feasible flow satisfies the supplies")]
    Infeasible,
    #[error("instance too large for exhaustive enumeration ({combinations} combinations)")]
    InstanceTooLarge { combinations: u128 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
