use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("interval duration {duration} is below the minimum {zeta}")]
    DurationBelowZeta { duration: String, zeta: String },
    #[error("negative time {0}")]
    NegativeTime(String),
    #[error("interval must have a finite lower bound")]
    InfiniteLowerBound,
    #[error("configurations are not consecutive: {left_end} vs {right_begin}")]
    NonConsecutive { left_end: String, right_begin: String },
    #[error("slice window does not meet the configuration interval")]
    EmptyIntersection,

    #[error("trajectory has no configurations")]
    EmptyConfiguration,
    #[error("trajectory starts at {0}, not 0")]
    NotStartingAtZero(String),
    #[error("gap between configurations {index} and {next}: {left_end} vs {right_begin}")]
    GapBetweenConfigurations {
        index: usize,
        next: usize,
        left_end: String,
        right_begin: String,
    },
    #[error("last configuration of a complete finite trajectory must be closed")]
    LastNotClosed,
    #[error("configuration {0} is closed but not last")]
    InnerClosed(usize),
    #[error("maximality needs complete trajectories; input {0} is truncated")]
    TruncatedInput(usize),
    #[error("sampling an unbounded trajectory needs an explicit limit")]
    UnboundedSampling,

    #[error("initial configuration {0} does not start at 0")]
    InitialNotAtZero(usize),
    #[error("edge {from} -> {to} is not consecutive")]
    NonConsecutiveEdge { from: usize, to: usize },
    #[error("configuration {0} has no successor but is not closed")]
    FinalNotClosed(usize),
    #[error("configuration {0} is closed but has successors")]
    ClosedWithSuccessor(usize),
    #[error("more than {0} trajectories generated")]
    BranchingExplosion(usize),
    #[error("edge set is not included in the larger system: {from} -> {to}")]
    NotASubset { from: usize, to: usize },
    #[error("systems do not share a configuration universe")]
    UniverseMismatch,
    #[error("mode {mode}: {message}")]
    Schema { mode: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("expression is not affine in {0}")]
    NonAffine(String),
    #[error("division by zero in {0}")]
    DivisionByZero(String),
    #[error("unbound identifier {0}")]
    Unbound(String),
    #[error("clause uses interval endpoint symbols without a configuration context")]
    EndpointSymbolsUnbound,

    #[error("connection violates the Galois laws")]
    LawsViolated,
    #[error("not a partial order: {0}")]
    NotAPartialOrder(String),
    #[error("poset is not a complete lattice: {0}")]
    NotACompleteLattice(String),
    #[error("value outside the carrier: {0}")]
    NotInCarrier(String),
    #[error("carrier too large for exhaustive checking: {0} elements")]
    CarrierTooLarge(usize),
    #[error("configuration pair does not overlap")]
    NonOverlappingPair,

    #[error("configuration universe too large: {0} pairs")]
    UniverseTooLarge(usize),
    #[error("synchronous mode requires well-nested configurations: {0}")]
    SyncRequiresWellNesting(String),
    #[error("spliced configuration is not in the universe: {0}")]
    NotSliceClosed(String),
    #[error("no related initial abstract configuration for {0}")]
    NoInitialWitness(String),
    #[error("matcher found no abstract step at {0}")]
    LocalSimulationGap(String),
    #[error("trajectories are not well nested: {0}")]
    NotWellNested(String),
    #[error("missing intermediate witness for trajectory {0}")]
    MissingIntermediateWitness(usize),
    #[error("premise failed: {0}")]
    PremiseFailed(String),

    #[error("configuration {index} is not aligned on the grid: {detail}")]
    Misaligned { index: usize, detail: String },
    #[error("relation undefined at grid point rank {0}")]
    DomainGapAtGridPoint(String),

    #[error("parameter constraint violated: {0}")]
    ParamConstraintViolated(String),
    #[error("unknown fixture {0}")]
    UnknownFixture(String),
}

pub type Result<T> = std::result::Result<T, Error>;
